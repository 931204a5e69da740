#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "fwl/data.hpp"
#include "fwl/model.hpp"

namespace fwl {

struct EvalReport {
    double logloss = 0.0;
    std::optional<double> auc;  // empty when the dataset has a single class
    std::size_t n = 0;
};

// Mann–Whitney AUC with average ranks for ties, O(n log n). Requires at least
// one positive and one negative label (DataError otherwise).
double auc(std::span<const double> scores, std::span<const std::int8_t> labels);

EvalReport evaluate(const FieldWiseModel& model, const Dataset& data);

// "logloss=<v> auc=<v> n=<v>"; auc prints as "undefined" for one-class data.
std::string format_report(const EvalReport& report);

}  // namespace fwl
