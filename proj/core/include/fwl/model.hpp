#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fwl/data.hpp"
#include "fwl/schema.hpp"

namespace fwl {

// Per-field rank assignment. constant(0) is the degenerate bias-only mode
// (training then equals L2 logistic regression on the one-hot features).
struct RankPolicy {
    enum class Mode { constant, log_base };
    Mode mode = Mode::constant;
    int rank = 1;       // constant mode
    double base = 2.0;  // log_base mode: r_i = round(log_base(d_i)), clamped to [1, d_i]

    static RankPolicy constant(int r) { return {Mode::constant, r, 0.0}; }
    static RankPolicy log_base(double b) { return {Mode::log_base, 0, b}; }
};

int rank_for_field(int cardinality, const RankPolicy& policy);

// One field's parameters. U and V are stored column-major (columns are the
// unit of access everywhere: prediction gathers U columns, gradients touch
// single columns).
struct FieldBlock {
    int rank = 0;   // r_i
    int dim = 0;    // d_i
    long xdim = 0;  // d - d_i, the x^(-i) length
    std::vector<double> u;     // rank x xdim, column-major
    std::vector<double> v;     // rank x dim, column-major
    std::vector<double> bias;  // dim

    std::span<double> u_col(long c) { return {u.data() + c * rank, static_cast<std::size_t>(rank)}; }
    std::span<const double> u_col(long c) const {
        return {u.data() + c * rank, static_cast<std::size_t>(rank)};
    }
    std::span<double> v_col(int c) { return {v.data() + c * rank, static_cast<std::size_t>(rank)}; }
    std::span<const double> v_col(int c) const {
        return {v.data() + c * rank, static_cast<std::size_t>(rank)};
    }
};

// The field-wise model: per field i, score_i(x) = b_{k_i} + <U x^(-i), V_{k_i}>
// with W^(i) = U^T V never materialized on the hot path. Immutable during
// prediction/analysis; only the trainer mutates it.
class FieldWiseModel {
public:
    FieldLayout layout;
    RankPolicy policy;
    std::vector<FieldBlock> blocks;
    std::string vocab_ref;  // vocabulary sidecar path, may be empty

    int fields() const { return layout.fields(); }
    long parameter_count() const;

    // Decision score: sum over fields of bias + factored dot products
    // against the other fields' active columns. O(m^2 r) sparse cost.
    double predict(const EncodedInstance& inst) const;
};

double predict_score(const FieldWiseModel& model, const EncodedInstance& inst);

// Numerically stable sigmoid link.
double predict_proba(double score);

// U, V entries i.i.d. uniform in +-init_scale/sqrt(r_i); biases zero.
FieldWiseModel init_model(const FieldLayout& layout, const RankPolicy& policy, double init_scale,
                          std::uint64_t seed);

// Dense W_b^(i) = [W^T, b]^T of shape (d-d_i+1) x d_i, row-major; rows
// 0..d-d_i-1 are U^T V, the last row is b^T. Analysis/test path only, hence
// the element-count guard.
std::vector<double> materialize_weights(const FieldWiseModel& model, int field,
                                        std::size_t max_elements = 1u << 26);

struct FieldNorms {
    double variance_norm = 0.0;  // N1_i = ||W_b - wbar 1^T||_F
    double mean_norm = 0.0;      // N2_i = ||wbar||_F
};

// Factored-form norms: with C = U U^T, vbar/bbar the column means,
//   N1^2 = sum_k (V_k - vbar)^T C (V_k - vbar) + sum_k (b_k - bbar)^2
//   N2^2 = vbar^T C vbar + bbar^2
// Costs O(r^2 d) without touching any dense W.
FieldNorms field_norms(const FieldWiseModel& model, int field);

// Versioned binary model file; bit-exact round trip.
void save_model(const std::string& path, const FieldWiseModel& model);
FieldWiseModel load_model(const std::string& path);

}  // namespace fwl
