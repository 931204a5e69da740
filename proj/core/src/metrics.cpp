#include "fwl/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <vector>

#include "fwl/common.hpp"
#include "fwl/train.hpp"

namespace fwl {

double auc(std::span<const double> scores, std::span<const std::int8_t> labels) {
    if (scores.size() != labels.size()) throw DataError("auc: scores/labels size mismatch");
    const std::size_t n = scores.size();
    std::size_t pos = 0;
    for (auto l : labels) pos += l > 0;
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) throw DataError("auc: needs both classes present");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Mann–Whitney: sum of positive ranks with average ranks across ties.
    double pos_rank_sum = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
        // 1-based ranks i+1..j share the average rank.
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            if (labels[idx[k]] > 0) pos_rank_sum += avg_rank;
        i = j;
    }
    const double p = static_cast<double>(pos);
    return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

EvalReport evaluate(const FieldWiseModel& model, const Dataset& data) {
    if (data.n() == 0) throw DataError("evaluate: empty dataset");
    if (!(model.layout == data.layout()))
        throw DataError("evaluate: model and data layouts disagree");
    EvalReport report;
    report.n = data.n();

    std::vector<double> scores(data.n());
    std::vector<std::int8_t> labels(data.n());
    double loss = 0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        scores[i] = model.predict(data.instances[i]);
        labels[i] = data.instances[i].label;
        loss += logloss(scores[i], labels[i]);
    }
    report.logloss = loss / static_cast<double>(data.n());

    bool has_pos = false, has_neg = false;
    for (auto l : labels) (l > 0 ? has_pos : has_neg) = true;
    if (has_pos && has_neg) report.auc = auc(scores, labels);
    return report;
}

std::string format_report(const EvalReport& report) {
    char buf[128];
    if (report.auc)
        std::snprintf(buf, sizeof buf, "logloss=%.17g auc=%.17g n=%zu", report.logloss,
                      *report.auc, report.n);
    else
        std::snprintf(buf, sizeof buf, "logloss=%.17g auc=undefined n=%zu", report.logloss,
                      report.n);
    return buf;
}

}  // namespace fwl
