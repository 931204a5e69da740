#include "fwl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fwl/common.hpp"

namespace fwl {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string default_name(int field) { return "f" + std::to_string(field); }

}  // namespace

double rademacher_bound(const FieldWiseModel& model, std::size_t n) {
    if (n < 1) throw DataError("rademacher_bound: n must be >= 1");
    double norm_sum = 0;
    for (int i = 0; i < model.fields(); ++i) {
        const FieldNorms norms = field_norms(model, i);
        norm_sum += norms.variance_norm + norms.mean_norm;
    }
    return std::sqrt(static_cast<double>(model.fields()) / static_cast<double>(n)) * norm_sum;
}

double eq8_bound(double empirical_risk, double rademacher, double lipschitz, double loss_cap,
                 double delta, std::size_t n) {
    if (!(delta > 0.0 && delta < 1.0)) throw DataError("delta must lie in (0,1)");
    if (loss_cap <= 0) throw DataError("loss cap must be > 0");
    if (n < 1) throw DataError("n must be >= 1");
    return empirical_risk + 2.0 * lipschitz * rademacher +
           3.0 * loss_cap * std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

BoundReport bound_report(const FieldWiseModel& model, std::size_t n,
                         std::optional<double> empirical_risk, double lipschitz, double loss_cap,
                         double delta) {
    if (n < 1) throw DataError("bound_report: n must be >= 1");
    BoundReport report;
    report.n = n;
    report.m = model.fields();
    report.parameter_count = model.parameter_count();
    report.lipschitz = lipschitz;
    report.loss_cap = loss_cap;
    report.delta = delta;

    report.per_field.reserve(static_cast<std::size_t>(report.m));
    for (int i = 0; i < report.m; ++i) {
        const FieldNorms norms = field_norms(model, i);
        report.per_field.push_back(norms);
        report.norm_sum += norms.variance_norm + norms.mean_norm;
    }
    report.rademacher =
        std::sqrt(static_cast<double>(report.m) / static_cast<double>(n)) * report.norm_sum;

    if (empirical_risk) {
        report.empirical_risk = *empirical_risk;
        report.generalization_bound =
            eq8_bound(*empirical_risk, report.rademacher, lipschitz, loss_cap, delta, n);
    }
    return report;
}

std::string format_bound_report(const BoundReport& report, std::span<const std::string> names) {
    std::string out;
    out += "m=" + std::to_string(report.m) + "\n";
    out += "n=" + std::to_string(report.n) + "\n";
    out += "params=" + std::to_string(report.parameter_count) + "\n";
    for (int i = 0; i < report.m; ++i) {
        const auto& norms = report.per_field[static_cast<std::size_t>(i)];
        const std::string name =
            static_cast<std::size_t>(i) < names.size() ? names[static_cast<std::size_t>(i)]
                                                       : default_name(i);
        out += "field=" + std::to_string(i) + " name=" + name +
               " N1=" + fmt(norms.variance_norm) + " N2=" + fmt(norms.mean_norm) + "\n";
    }
    out += "norm_sum=" + fmt(report.norm_sum) + "\n";
    out += "rademacher=" + fmt(report.rademacher) + "\n";
    if (report.generalization_bound) {
        out += "empirical_risk=" + fmt(report.empirical_risk) + "\n";
        out += "lipschitz=" + fmt(report.lipschitz) + "\n";
        out += "loss_cap=" + fmt(report.loss_cap) + "\n";
        out += "delta=" + fmt(report.delta) + "\n";
        out += "generalization_bound=" + fmt(*report.generalization_bound) + "\n";
    }
    return out;
}

std::vector<ImportanceEntry> field_importance(const FieldWiseModel& model,
                                              std::span<const std::string> names) {
    if (!names.empty() && names.size() != static_cast<std::size_t>(model.fields()))
        throw DataError("field_importance: wrong number of field names");
    std::vector<ImportanceEntry> entries;
    entries.reserve(static_cast<std::size_t>(model.fields()));
    for (int i = 0; i < model.fields(); ++i) {
        const FieldNorms norms = field_norms(model, i);
        entries.push_back({i,
                           names.empty() ? default_name(i) : names[static_cast<std::size_t>(i)],
                           norms.variance_norm /
                               static_cast<double>(model.blocks[static_cast<std::size_t>(i)].dim)});
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const ImportanceEntry& a, const ImportanceEntry& b) {
                         return a.score > b.score;
                     });
    return entries;
}

std::string format_importance(std::span<const ImportanceEntry> entries) {
    std::string out = "field\tname\tscore\n";
    for (const auto& e : entries)
        out += std::to_string(e.field) + "\t" + e.name + "\t" + fmt(e.score) + "\n";
    return out;
}

std::vector<TrendRow> bound_trend_experiment(const Dataset& train_data, const TrainConfig& base,
                                             double init_scale, std::span<const int> ranks,
                                             double train_loss_target) {
    if (ranks.empty()) throw DataError("bound_trend_experiment: empty rank list");
    if (train_data.n() == 0) throw DataError("bound_trend_experiment: empty dataset");

    TrainConfig cfg = base;
    cfg.train_loss_target = train_loss_target;
    const Dataset no_val{train_data.vocab, {}};

    std::vector<TrendRow> rows;
    rows.reserve(ranks.size());
    for (int rank : ranks) {
        FieldWiseModel model =
            init_model(train_data.layout(), RankPolicy::constant(rank), init_scale, cfg.seed);
        auto [trained, history] = train(std::move(model), train_data, no_val, cfg);

        TrendRow row;
        row.rank = rank;
        row.params = trained.parameter_count();
        for (int i = 0; i < trained.fields(); ++i) {
            const FieldNorms norms = field_norms(trained, i);
            row.norm_sum += norms.variance_norm + norms.mean_norm;
        }
        row.train_logloss = history.epochs.back().train_logloss;
        row.epochs = history.stopped_epoch;
        row.reached_target = row.train_logloss <= train_loss_target;
        rows.push_back(row);
    }
    return rows;
}

std::string format_trend(std::span<const TrendRow> rows) {
    std::string out = "rank\tparams\tnorm_sum\ttrain_logloss\tepochs\tstatus\n";
    for (const auto& r : rows) {
        out += std::to_string(r.rank) + "\t" + std::to_string(r.params) + "\t" +
               fmt(r.norm_sum) + "\t" + fmt(r.train_logloss) + "\t" + std::to_string(r.epochs) +
               "\t" + (r.reached_target ? "ok" : "target_not_reached") + "\n";
    }
    return out;
}

}  // namespace fwl
