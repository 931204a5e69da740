#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fwl/model.hpp"
#include "fwl/train.hpp"

namespace fwl {

// sqrt(m/n) * sum_i (N1_i + N2_i), with N1/N2 estimated from the trained
// parameters in factored form.
double rademacher_bound(const FieldWiseModel& model, std::size_t n);

// empirical_risk + 2*lipschitz*rademacher + 3*loss_cap*sqrt(ln(2/delta)/(2n)).
// delta must lie in (0,1); lipschitz defaults to 1 for Logloss.
double eq8_bound(double empirical_risk, double rademacher, double lipschitz, double loss_cap,
                 double delta, std::size_t n);

struct BoundReport {
    std::vector<FieldNorms> per_field;
    double norm_sum = 0.0;    // sum_i (N1_i + N2_i)
    double rademacher = 0.0;  // sqrt(m/n) * norm_sum
    std::size_t n = 0;
    int m = 0;
    long parameter_count = 0;
    // Present when an empirical risk is supplied.
    std::optional<double> generalization_bound;
    double empirical_risk = 0.0;
    double lipschitz = 1.0;
    double loss_cap = 0.0;
    double delta = 0.05;
};

// loss_cap <= 0 means "use the maximum observed Logloss" when risk comes from
// an evaluation pass; here the caller passes both explicitly.
BoundReport bound_report(const FieldWiseModel& model, std::size_t n,
                         std::optional<double> empirical_risk = {}, double lipschitz = 1.0,
                         double loss_cap = 0.0, double delta = 0.05);

std::string format_bound_report(const BoundReport& report, std::span<const std::string> names);

struct ImportanceEntry {
    int field = 0;
    std::string name;
    double score = 0.0;  // ||W_b - wbar 1^T||_F / d_i
};

// Sorted descending, ties kept in field order. Names may be empty (defaults
// to f<i>).
std::vector<ImportanceEntry> field_importance(const FieldWiseModel& model,
                                              std::span<const std::string> names = {});

std::string format_importance(std::span<const ImportanceEntry> entries);

struct TrendRow {
    int rank = 0;
    long params = 0;
    double norm_sum = 0.0;  // sum_i (N1_i + N2_i) of the stopped model
    double train_logloss = 0.0;
    int epochs = 0;
    bool reached_target = false;
};

// For each rank: init a constant-rank model, train until the train Logloss
// reaches the target (or max_epochs), then record the norm sum and parameter
// count. Rows that never reach the target are flagged.
std::vector<TrendRow> bound_trend_experiment(const Dataset& train_data, const TrainConfig& base,
                                             double init_scale, std::span<const int> ranks,
                                             double train_loss_target);

// Tab-separated with a one-line header.
std::string format_trend(std::span<const TrendRow> rows);

}  // namespace fwl
