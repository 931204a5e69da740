#pragma once

// Brute-force reference implementations used by tests and the acceptance
// suite. These deliberately share no kernels with the fast paths (only the
// scalar logloss): they materialize dense weight matrices and full one-hot
// vectors and evaluate the defining formulas literally.

#include <cstdint>
#include <span>
#include <vector>

#include "fwl/data.hpp"
#include "fwl/model.hpp"

namespace fwl {

// Materializes every W^(i) = U^T V and evaluates the decision score on dense
// one-hot vectors.
double oracle_dense_predict(const FieldWiseModel& model, const EncodedInstance& inst);

// N1/N2 from an explicitly built dense W_b^(i).
FieldNorms oracle_dense_norms(const FieldWiseModel& model, int field);

// Mean Logloss over the batch plus lambda * sum_i (R1_i + R2_i), all via the
// dense paths above.
double oracle_objective(const FieldWiseModel& model, std::span<const EncodedInstance> batch,
                        double lambda);

// Canonical parameter ordering: per field ascending, U then V (column-major
// storage order) then bias.
std::vector<double> flatten_parameters(const FieldWiseModel& model);
void unflatten_parameters(FieldWiseModel& model, std::span<const double> theta);

// Central differences of oracle_objective with respect to every parameter.
// Intended for small models (a few thousand parameters at most).
std::vector<double> oracle_finite_diff(const FieldWiseModel& model,
                                       std::span<const EncodedInstance> batch, double lambda,
                                       double step = 1e-6);

// |a - b| / max(1, |a|, |b|)
double grad_rel_error(double analytic, double numeric);

struct LrResult {
    std::vector<double> weights;  // one per global feature index
    double final_train_logloss = 0.0;
    int iterations = 0;
};

// Full-batch gradient descent logistic regression on the complete one-hot
// vector, with L2 penalty gradient l2*w. Backtracking step control keeps the
// objective monotone. Score is sum of active-feature weights (no intercept),
// matching the bias-only degenerate model.
LrResult oracle_lr(const Dataset& train_data, double l2, int max_iters = 2000,
                   double initial_step = 1.0);

// O(P*N) pairwise AUC with the 0.5-per-tie convention.
double oracle_quadratic_auc(std::span<const double> scores, std::span<const std::int8_t> labels);

}  // namespace fwl
