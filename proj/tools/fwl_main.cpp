// fwl — field-wise learning pipeline: vocabulary building, training,
// evaluation, bound analysis, trend experiments, and synthetic data.
//
// Every command reads an optional flat key=value config file (--config);
// explicit flags override file values. A resolved-config dump is written to
// the output directory on every run so results can be reproduced exactly.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fwl/analysis.hpp"
#include "fwl/common.hpp"
#include "fwl/ingest.hpp"
#include "fwl/metrics.hpp"
#include "fwl/model.hpp"
#include "fwl/synth.hpp"
#include "fwl/train.hpp"

namespace {

namespace fs = std::filesystem;
using namespace fwl;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// value parsing/rendering

double parse_double(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw UsageError("bad value for " + key + ": '" + text + "'");
    }
    if (used != text.size()) throw UsageError("bad value for " + key + ": '" + text + "'");
    return v;
}

long parse_long(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(text, &used);
    } catch (const std::exception&) {
        throw UsageError("bad value for " + key + ": '" + text + "'");
    }
    if (used != text.size()) throw UsageError("bad value for " + key + ": '" + text + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &used);
    } catch (const std::exception&) {
        throw UsageError("bad value for " + key + ": '" + text + "'");
    }
    if (used != text.size()) throw UsageError("bad value for " + key + ": '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
    if (text == "0" || text == "false" || text == "no" || text == "off") return false;
    throw UsageError("bad value for " + key + ": '" + text + "'");
}

std::string render(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
std::string render(bool v) { return v ? "1" : "0"; }
std::string render(int v) { return std::to_string(v); }
std::string render(std::uint64_t v) { return std::to_string(v); }
std::string render(const std::string& v) { return v; }

void assign(const std::string& key, const std::string& text, double& var) {
    var = parse_double(key, text);
}
void assign(const std::string& key, const std::string& text, int& var) {
    var = static_cast<int>(parse_long(key, text));
}
void assign(const std::string& key, const std::string& text, std::uint64_t& var) {
    var = parse_u64(key, text);
}
void assign(const std::string& key, const std::string& text, bool& var) {
    var = parse_bool(key, text);
}
void assign(const std::string&, const std::string& text, std::string& var) { var = text; }

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(',', start);
        if (pos == std::string::npos) {
            parts.push_back(text.substr(start));
            break;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
    std::vector<int> out;
    for (const auto& part : split_csv(text))
        out.push_back(static_cast<int>(parse_long(key, part)));
    return out;
}

// ---------------------------------------------------------------------------
// config-file merge

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path);
    std::map<std::string, std::string> entries;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const std::size_t eq = line.find('=', first);
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(line_number) +
                             ": expected key=value");
        auto trim = [](std::string s) {
            const std::size_t a = s.find_first_not_of(" \t");
            if (a == std::string::npos) return std::string();
            const std::size_t b = s.find_last_not_of(" \t");
            return s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(first, eq - first));
        if (key.empty())
            throw UsageError(path + ":" + std::to_string(line_number) + ": empty key");
        entries[key] = trim(line.substr(eq + 1));
    }
    return entries;
}

// One subcommand plus its bindings: each option is addressable by flag (CLI)
// and by key (config file); flags win, and the effective values are dumped as
// the resolved config.
struct Cmd {
    CLI::App* sub = nullptr;
    std::string config_path;

    struct Binding {
        std::string key;
        CLI::Option* opt;
        std::function<void(const std::string&)> apply;
        std::function<std::string()> current;
    };
    std::vector<Binding> bindings;

    void attach(CLI::App* s) {
        sub = s;
        sub->add_option("--config", config_path, "flat key=value config file");
    }

    template <class T>
    void bind(const std::string& flag, T& var, const std::string& desc) {
        std::string key = flag.substr(2);
        std::replace(key.begin(), key.end(), '-', '_');
        CLI::Option* opt = sub->add_option(flag, var, desc);
        bindings.push_back({key, opt,
                            [key, &var](const std::string& text) { assign(key, text, var); },
                            [&var] { return render(var); }});
    }

    void bind_flag(const std::string& flag, bool& var, const std::string& desc) {
        std::string key = flag.substr(2);
        std::replace(key.begin(), key.end(), '-', '_');
        CLI::Option* opt = sub->add_flag(flag, var, desc);
        bindings.push_back({key, opt,
                            [key, &var](const std::string& text) { assign(key, text, var); },
                            [&var] { return render(var); }});
    }

    // Fill unset options from the config file. Keys that no option of this
    // command claims are ignored, so one file can drive several commands.
    void apply_config() {
        if (config_path.empty()) return;
        const auto entries = load_config_file(config_path);
        for (auto& b : bindings) {
            if (b.opt->count() > 0) continue;
            const auto it = entries.find(b.key);
            if (it != entries.end()) b.apply(it->second);
        }
    }

    std::string resolved() const {
        std::map<std::string, std::string> sorted;
        for (const auto& b : bindings) sorted[b.key] = b.current();
        std::string out;
        for (const auto& [k, v] : sorted) out += k + "=" + v + "\n";
        return out;
    }
};

// ---------------------------------------------------------------------------
// option bundle shared by the commands (each command binds the subset it uses)

struct Options {
    std::string data, vocab, model_in, model_out, out_dir = ".";
    std::string delimiter;  // "", "tab", "comma", or a single character
    bool header = false;
    std::string numeric_fields, min_count = "1", split = "0.8,0.1,0.1";

    int rank = -1;              // -1 = policy not forced to constant
    double rank_log_base = 0;   // 0 = policy not forced to log
    double init_scale = 0.1;

    double lr = 0.1, lambda = 1e-6, weight_decay = 1e-6;
    int batch_size = 2048, reg_period = 1000, max_epochs = 20, patience = 1;
    std::uint64_t seed = 0;
    bool scale_reg_by_period = false;

    std::uint64_t n = 0;  // analyze: sample size the bound refers to
    double delta = 0.05, lipschitz = 1.0, loss_cap = 0;  // 0 = derive from data
    std::string risk;  // analyze: explicit empirical risk (else from --data)

    std::string ranks, target;  // trend

    std::string cards;  // synth
    int planted_rank = 1;
    double weight_scale = 1.0, bias_scale = 1.0, noise_rate = 0.0;
    std::uint64_t instances = 0;  // synth: rows to generate
};

void require(const std::string& value, const std::string& flag) {
    if (value.empty()) throw UsageError("missing " + flag);
}

ReadOptions read_options(const Options& o) {
    ReadOptions ropts;
    if (!o.delimiter.empty()) {
        if (o.delimiter == "tab" || o.delimiter == "\\t") ropts.delimiter = '\t';
        else if (o.delimiter == "comma") ropts.delimiter = ',';
        else if (o.delimiter.size() == 1) ropts.delimiter = o.delimiter[0];
        else throw UsageError("bad --delimiter: '" + o.delimiter + "'");
    }
    ropts.has_header = o.header;
    if (!o.numeric_fields.empty())
        for (int f : parse_int_list("numeric_fields", o.numeric_fields)) {
            if (f < 0) throw UsageError("numeric field indices must be >= 0");
            ropts.numeric_fields.insert(f);
        }
    return ropts;
}

std::vector<int> min_counts_for(const Options& o, int fields) {
    std::vector<int> mc = parse_int_list("min_count", o.min_count);
    for (int v : mc)
        if (v < 1) throw UsageError("min_count entries must be >= 1");
    if (mc.size() == 1) mc.assign(static_cast<std::size_t>(fields), mc[0]);
    if (mc.size() != static_cast<std::size_t>(fields))
        throw UsageError("min_count needs 1 or " + std::to_string(fields) + " entries");
    return mc;
}

std::array<double, 3> parse_split(const std::string& text) {
    const auto parts = split_csv(text);
    if (parts.size() != 3) throw UsageError("split needs three ratios, e.g. 0.8,0.1,0.1");
    return {parse_double("split", parts[0]), parse_double("split", parts[1]),
            parse_double("split", parts[2])};
}

RankPolicy rank_policy(const Options& o) {
    if (o.rank >= 0 && o.rank_log_base > 0)
        throw UsageError("--rank and --rank-log-base are mutually exclusive");
    if (o.rank >= 0) return RankPolicy::constant(o.rank);
    if (o.rank_log_base > 0) return RankPolicy::log_base(o.rank_log_base);
    return RankPolicy::log_base(2.0);
}

TrainConfig train_config(const Options& o) {
    TrainConfig cfg;
    cfg.learning_rate = o.lr;
    cfg.lambda = o.lambda;
    cfg.weight_decay = o.weight_decay;
    cfg.batch_size = o.batch_size;
    cfg.reg_period = o.reg_period;
    cfg.max_epochs = o.max_epochs;
    cfg.patience = o.patience;
    cfg.seed = o.seed;
    cfg.scale_reg_by_period = o.scale_reg_by_period;
    return cfg;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
    if (!out) throw DataError("write failed: " + path.string());
}

fs::path prepare_out_dir(const Options& o, const Cmd& cmd, const char* name) {
    fs::path dir(o.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir.string());
    write_text(dir / (std::string(name) + ".resolved.cfg"), cmd.resolved());
    return dir;
}

std::vector<std::string> field_names(const Vocabulary& vocab) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(vocab.num_fields()));
    for (const auto& spec : vocab.specs()) names.push_back(spec.name);
    return names;
}

// ---------------------------------------------------------------------------
// commands

int run_vocab(const Options& o, const Cmd& cmd) {
    require(o.data, "--data");
    const fs::path dir = prepare_out_dir(o, cmd, "vocab");

    const RawTable table = read_delimited(o.data, read_options(o));
    const Vocabulary vocab = build_vocabulary(table, min_counts_for(o, table.fields()));
    const fs::path out = o.vocab.empty() ? dir / "vocab.txt" : fs::path(o.vocab);
    write_vocabulary(out.string(), vocab);
    std::cout << "wrote " << out.string() << " m=" << vocab.num_fields()
              << " d=" << vocab.total_features() << "\n";
    return 0;
}

int run_train(const Options& o, const Cmd& cmd) {
    require(o.data, "--data");
    const fs::path dir = prepare_out_dir(o, cmd, "train");

    const RawTable table = read_delimited(o.data, read_options(o));
    const auto splits = split_indices(table.n(), parse_split(o.split), o.seed);
    const RawTable train_tbl = subset(table, splits[0]);
    const RawTable val_tbl = subset(table, splits[1]);

    std::shared_ptr<Vocabulary> vocab;
    std::string vocab_path;
    if (!o.vocab.empty()) {
        vocab = std::make_shared<Vocabulary>(load_vocabulary(o.vocab, table.specs));
        vocab_path = o.vocab;
    } else {
        // Fit on the training split only, then persist next to the model.
        vocab = std::make_shared<Vocabulary>(
            build_vocabulary(train_tbl, min_counts_for(o, table.fields())));
        vocab_path = (dir / "vocab.txt").string();
        write_vocabulary(vocab_path, *vocab);
    }

    const Dataset train_ds = encode_table(train_tbl, vocab);
    const Dataset val_ds = encode_table(val_tbl, vocab);

    FieldWiseModel model = init_model(vocab->layout(), rank_policy(o), o.init_scale, o.seed);
    auto [best, history] = train(std::move(model), train_ds, val_ds, train_config(o));
    best.vocab_ref = vocab_path;

    const fs::path model_out = o.model_out.empty() ? dir / "model.bin" : fs::path(o.model_out);
    save_model(model_out.string(), best);
    write_history((dir / "history.tsv").string(), history);

    const auto& at_best = history.epochs[static_cast<std::size_t>(history.best_epoch - 1)];
    std::cout << "best_epoch=" << history.best_epoch
              << " stopped_epoch=" << history.stopped_epoch
              << " train_logloss=" << render(at_best.train_logloss)
              << " val_logloss=" << render(at_best.val_logloss) << "\n";
    return 0;
}

int run_eval(const Options& o, const Cmd& cmd) {
    require(o.model_in, "--model-in");
    require(o.data, "--data");
    const fs::path dir = prepare_out_dir(o, cmd, "eval");

    const FieldWiseModel model = load_model(o.model_in);
    const std::string vocab_path = o.vocab.empty() ? model.vocab_ref : o.vocab;
    if (vocab_path.empty())
        throw DataError("model carries no vocabulary reference; pass --vocab");

    const RawTable table = read_delimited(o.data, read_options(o));
    auto vocab = std::make_shared<Vocabulary>(load_vocabulary(vocab_path, table.specs));
    const Dataset ds = encode_table(table, vocab);

    const EvalReport report = evaluate(model, ds);
    const std::string line = format_report(report) + "\n";
    std::cout << line;
    write_text(dir / "eval.txt", line);
    return 0;
}

int run_analyze(const Options& o, const Cmd& cmd) {
    require(o.model_in, "--model-in");
    if (o.n < 1) throw UsageError("--n must be >= 1");
    const fs::path dir = prepare_out_dir(o, cmd, "analyze");

    const FieldWiseModel model = load_model(o.model_in);

    // Field names are cosmetic here: an explicit --vocab must load, but a
    // stale embedded reference only costs the names.
    std::vector<std::string> names;
    if (!o.vocab.empty()) {
        names = field_names(load_vocabulary(o.vocab));
    } else if (!model.vocab_ref.empty()) {
        try {
            names = field_names(load_vocabulary(model.vocab_ref));
        } catch (const DataError&) {
            names.clear();
        }
    }
    if (!names.empty() && names.size() != static_cast<std::size_t>(model.fields()))
        names.clear();

    std::optional<double> risk;
    double loss_cap = o.loss_cap;
    if (!o.data.empty()) {
        const RawTable table = read_delimited(o.data, read_options(o));
        auto vocab = std::make_shared<Vocabulary>(load_vocabulary(
            o.vocab.empty() ? model.vocab_ref : o.vocab, table.specs));
        const Dataset ds = encode_table(table, vocab);
        const EvalReport report = evaluate(model, ds);
        risk = report.logloss;
        if (loss_cap <= 0) {
            // Default cap: the largest per-instance Logloss observed.
            double max_loss = 0;
            for (const auto& inst : ds.instances)
                max_loss = std::max(max_loss, logloss(model.predict(inst), inst.label));
            loss_cap = max_loss;
        }
    } else if (!o.risk.empty()) {
        risk = parse_double("risk", o.risk);
    }
    if (risk && loss_cap <= 0)
        throw UsageError("an explicit --risk needs --loss-cap > 0");

    const BoundReport report =
        bound_report(model, o.n, risk, o.lipschitz, loss_cap, o.delta);
    const std::string text = format_bound_report(report, names);
    std::cout << text;
    write_text(dir / "bound_report.txt", text);

    const auto importance = field_importance(model, names);
    write_text(dir / "importance.tsv", format_importance(importance));
    return 0;
}

int run_trend(const Options& o, const Cmd& cmd) {
    require(o.data, "--data");
    require(o.ranks, "--ranks");
    require(o.target, "--target");
    const fs::path dir = prepare_out_dir(o, cmd, "trend");

    const RawTable table = read_delimited(o.data, read_options(o));
    std::shared_ptr<Vocabulary> vocab;
    if (!o.vocab.empty())
        vocab = std::make_shared<Vocabulary>(load_vocabulary(o.vocab, table.specs));
    else
        vocab = std::make_shared<Vocabulary>(
            build_vocabulary(table, min_counts_for(o, table.fields())));
    const Dataset ds = encode_table(table, vocab);

    const std::vector<int> ranks = parse_int_list("ranks", o.ranks);
    if (ranks.empty()) throw UsageError("--ranks must name at least one rank");
    const double target = parse_double("target", o.target);

    const auto rows = bound_trend_experiment(ds, train_config(o), o.init_scale, ranks, target);
    const std::string text = format_trend(rows);
    std::cout << text;
    write_text(dir / "trend.tsv", text);
    return 0;
}

int run_synth(const Options& o, const Cmd& cmd) {
    require(o.cards, "--cards");
    if (o.instances < 1) throw UsageError("--n must be >= 1");
    const fs::path dir = prepare_out_dir(o, cmd, "synth");

    PlantedSpec spec;
    spec.cards = parse_int_list("cards", o.cards);
    spec.rank = o.planted_rank;
    spec.weight_scale = o.weight_scale;
    spec.bias_scale = o.bias_scale;
    spec.noise_rate = o.noise_rate;
    spec.seed = o.seed;

    PlantedData planted = generate_planted(spec, o.instances);
    write_dataset((dir / "data.tsv").string(), planted.data);
    const std::string vocab_path = (dir / "vocab.txt").string();
    write_vocabulary(vocab_path, *planted.data.vocab);
    planted.model.vocab_ref = vocab_path;
    save_model((dir / "planted_model.bin").string(), planted.model);

    const std::string stats = "n=" + std::to_string(o.instances) +
                              " bayes_logloss=" + render(planted.bayes_logloss) + "\n";
    std::cout << stats;
    write_text(dir / "synth_stats.txt", stats);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"field-wise learning for multi-field categorical data"};
    app.require_subcommand(1);

    Cmd vocab_cmd, train_cmd, eval_cmd, analyze_cmd, trend_cmd, synth_cmd;
    Options vocab_o, train_o, eval_o, analyze_o, trend_o, synth_o;

    auto add_read_opts = [](Cmd& c, Options& o) {
        c.bind("--data", o.data, "delimited data file (label column first)");
        c.bind("--delimiter", o.delimiter, "tab, comma, or a single character (default: auto)");
        c.bind_flag("--header", o.header, "first data line is a header");
        c.bind("--numeric-fields", o.numeric_fields,
               "comma-separated field indices to log-transform");
    };
    auto add_common = [](Cmd& c, Options& o) {
        c.bind("--out-dir", o.out_dir, "output directory");
        c.bind("--seed", o.seed, "RNG seed");
    };
    auto add_train_opts = [](Cmd& c, Options& o) {
        c.bind("--lr", o.lr, "Adagrad learning rate");
        c.bind("--lambda", o.lambda, "variance/mean-norm regularization weight");
        c.bind("--weight-decay", o.weight_decay, "per-step decay on touched parameters");
        c.bind("--batch-size", o.batch_size, "mini-batch size");
        c.bind("--reg-period", o.reg_period, "steps between regularization applications");
        c.bind("--max-epochs", o.max_epochs, "epoch cap");
        c.bind("--patience", o.patience, "epochs without val improvement before stopping");
        c.bind_flag("--scale-reg-by-period", o.scale_reg_by_period,
                    "multiply periodic reg gradients by the period");
        c.bind("--init-scale", o.init_scale, "factor init range is +-init_scale/sqrt(r)");
    };
    auto add_rank_opts = [](Cmd& c, Options& o) {
        c.bind("--rank", o.rank, "constant rank for every field (0 = bias-only)");
        c.bind("--rank-log-base", o.rank_log_base, "per-field rank round(log_base(d_i))");
    };

    vocab_cmd.attach(app.add_subcommand("vocab", "build a vocabulary from a data file"));
    add_common(vocab_cmd, vocab_o);
    add_read_opts(vocab_cmd, vocab_o);
    vocab_cmd.bind("--vocab", vocab_o.vocab, "output vocabulary path (default out-dir/vocab.txt)");
    vocab_cmd.bind("--min-count", vocab_o.min_count,
                   "per-field minimum token count (single value or comma list)");

    train_cmd.attach(app.add_subcommand("train", "split, encode, train, save the best model"));
    add_common(train_cmd, train_o);
    add_read_opts(train_cmd, train_o);
    add_train_opts(train_cmd, train_o);
    add_rank_opts(train_cmd, train_o);
    train_cmd.bind("--vocab", train_o.vocab, "prebuilt vocabulary to use (else fit on train split)");
    train_cmd.bind("--min-count", train_o.min_count,
                   "per-field minimum token count (single value or comma list)");
    train_cmd.bind("--split", train_o.split, "train,val,test ratios");
    train_cmd.bind("--model-out", train_o.model_out, "model output path (default out-dir/model.bin)");

    eval_cmd.attach(app.add_subcommand("eval", "evaluate a model: Logloss and AUC"));
    add_common(eval_cmd, eval_o);
    add_read_opts(eval_cmd, eval_o);
    eval_cmd.bind("--model-in", eval_o.model_in, "model file");
    eval_cmd.bind("--vocab", eval_o.vocab, "vocabulary (default: the model's reference)");

    analyze_cmd.attach(
        app.add_subcommand("analyze", "generalization-bound report and field importance"));
    add_common(analyze_cmd, analyze_o);
    add_read_opts(analyze_cmd, analyze_o);
    analyze_cmd.bind("--model-in", analyze_o.model_in, "model file");
    analyze_cmd.bind("--vocab", analyze_o.vocab, "vocabulary for field names/encoding");
    analyze_cmd.bind("--n", analyze_o.n, "sample size the bound refers to");
    analyze_cmd.bind("--risk", analyze_o.risk, "explicit empirical risk (else from --data)");
    analyze_cmd.bind("--loss-cap", analyze_o.loss_cap,
                     "loss cap c (default: max observed Logloss on --data)");
    analyze_cmd.bind("--delta", analyze_o.delta, "confidence parameter in (0,1)");
    analyze_cmd.bind("--lipschitz", analyze_o.lipschitz, "loss Lipschitz constant");

    trend_cmd.attach(
        app.add_subcommand("trend", "bound-vs-parameters trend over a list of ranks"));
    add_common(trend_cmd, trend_o);
    add_read_opts(trend_cmd, trend_o);
    add_train_opts(trend_cmd, trend_o);
    trend_cmd.bind("--vocab", trend_o.vocab, "prebuilt vocabulary (else fit on the data)");
    trend_cmd.bind("--min-count", trend_o.min_count,
                   "per-field minimum token count (single value or comma list)");
    trend_cmd.bind("--ranks", trend_o.ranks, "comma-separated ranks to sweep");
    trend_cmd.bind("--target", trend_o.target, "train-Logloss target (inf = stop after epoch 1)");

    synth_cmd.attach(app.add_subcommand("synth", "generate a planted synthetic dataset"));
    add_common(synth_cmd, synth_o);
    synth_cmd.bind("--cards", synth_o.cards, "comma-separated field cardinalities");
    synth_cmd.bind("--n", synth_o.instances, "instances to generate");
    synth_cmd.bind("--planted-rank", synth_o.planted_rank, "rank of the planted model");
    synth_cmd.bind("--weight-scale", synth_o.weight_scale, "planted factor scale");
    synth_cmd.bind("--bias-scale", synth_o.bias_scale, "planted biases uniform in +-scale");
    synth_cmd.bind("--noise-rate", synth_o.noise_rate, "label flip probability in [0, 0.5)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (vocab_cmd.sub->parsed()) {
            vocab_cmd.apply_config();
            return run_vocab(vocab_o, vocab_cmd);
        }
        if (train_cmd.sub->parsed()) {
            train_cmd.apply_config();
            return run_train(train_o, train_cmd);
        }
        if (eval_cmd.sub->parsed()) {
            eval_cmd.apply_config();
            return run_eval(eval_o, eval_cmd);
        }
        if (analyze_cmd.sub->parsed()) {
            analyze_cmd.apply_config();
            return run_analyze(analyze_o, analyze_cmd);
        }
        if (trend_cmd.sub->parsed()) {
            trend_cmd.apply_config();
            return run_trend(trend_o, trend_cmd);
        }
        if (synth_cmd.sub->parsed()) {
            synth_cmd.apply_config();
            return run_synth(synth_o, synth_cmd);
        }
        throw UsageError("no command given");
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
