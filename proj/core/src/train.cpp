#include "fwl/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "fwl/common.hpp"

namespace fwl {

namespace {

// d(logloss)/d(score) = -label * sigmoid(-label*score), computed without
// overflow for any score.
double score_gradient(double score, double label) {
    const double t = score * label;
    if (t >= 0) {
        const double e = std::exp(-t);
        return -label * e / (1.0 + e);
    }
    return -label / (1.0 + std::exp(t));
}

void check_finite(double g, int field, const char* part) {
    if (!std::isfinite(g))
        throw NumericError("non-finite gradient in field " + std::to_string(field) + " (" + part +
                           ")");
}

// One Adagrad coordinate update; returns the new accumulator via reference.
inline void update_coord(double& theta, double& acc, double g, double lr, double eps) {
    acc += g * g;
    theta -= lr * g / (std::sqrt(acc) + eps);
}

std::uint64_t epoch_stream(int epoch) {
    // Distinct stream per epoch; the tag keeps it disjoint from other Rng uses.
    return 0x45504F4300000000ULL + static_cast<std::uint64_t>(epoch);
}

double batch_mean_logloss(const FieldWiseModel& model,
                          std::span<const EncodedInstance> batch) {
    double s = 0;
    for (const auto& inst : batch) s += logloss(model.predict(inst), inst.label);
    return s / static_cast<double>(batch.size());
}

}  // namespace

double logloss(double score, double label) {
    const double t = score * label;
    if (t >= 0) return std::log1p(std::exp(-t));
    return -t + std::log1p(std::exp(t));
}

double mean_logloss(const FieldWiseModel& model, const Dataset& data) {
    if (data.n() == 0) throw DataError("mean_logloss: empty dataset");
    double s = 0;
    for (const auto& inst : data.instances) s += logloss(model.predict(inst), inst.label);
    return s / static_cast<double>(data.n());
}

SparseGrad loss_gradients(const FieldWiseModel& model, std::span<const EncodedInstance> batch) {
    if (batch.empty()) throw DataError("loss_gradients: empty batch");
    const int m = model.fields();
    SparseGrad grads;
    grads.fields.resize(static_cast<std::size_t>(m));
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    std::vector<double> z;  // U x^(-i), reused across fields
    for (const auto& inst : batch) {
        const double s = score_gradient(model.predict(inst), inst.label) * inv_b;
        for (int i = 0; i < m; ++i) {
            const FieldBlock& blk = model.blocks[static_cast<std::size_t>(i)];
            SparseGrad::Block& gb = grads.fields[static_cast<std::size_t>(i)];
            const int k = inst.active[static_cast<std::size_t>(i)];
            gb.b_elems[k] += s;
            if (blk.rank == 0) continue;

            const auto rs = static_cast<std::size_t>(blk.rank);
            auto vk = blk.v_col(k);
            z.assign(rs, 0.0);
            for (int j = 0; j < m; ++j) {
                if (j == i) continue;
                const long pos =
                    model.layout.xmi_position(i, j, inst.active[static_cast<std::size_t>(j)]);
                auto uc = blk.u_col(pos);
                for (std::size_t a = 0; a < rs; ++a) z[a] += uc[a];

                auto [it, fresh] = gb.u_cols.try_emplace(pos);
                if (fresh) it->second.assign(rs, 0.0);
                for (std::size_t a = 0; a < rs; ++a) it->second[a] += s * vk[a];
            }
            auto [it, fresh] = gb.v_cols.try_emplace(k);
            if (fresh) it->second.assign(rs, 0.0);
            for (std::size_t a = 0; a < rs; ++a) it->second[a] += s * z[a];
        }
    }
    return grads;
}

DenseGrad reg_gradients(const FieldWiseModel& model, double lambda) {
    const int m = model.fields();
    DenseGrad grads;
    grads.fields.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const FieldBlock& blk = model.blocks[static_cast<std::size_t>(i)];
        DenseGrad::Block& g = grads.fields[static_cast<std::size_t>(i)];
        const int di = blk.dim;
        const int r = blk.rank;
        const auto rs = static_cast<std::size_t>(r);

        double bbar = 0;
        for (double b : blk.bias) bbar += b;
        bbar /= di;
        g.gb.resize(static_cast<std::size_t>(di));
        // d(variance)/db = 2(b - bbar 1); d(mean-norm)/db = (2 bbar / d_i) 1.
        for (int k = 0; k < di; ++k)
            g.gb[static_cast<std::size_t>(k)] =
                lambda * (2.0 * (blk.bias[static_cast<std::size_t>(k)] - bbar) +
                          2.0 * bbar / di);
        if (r == 0) continue;

        std::vector<double> vbar(rs, 0.0);
        for (int k = 0; k < di; ++k) {
            auto vk = blk.v_col(k);
            for (std::size_t a = 0; a < rs; ++a) vbar[a] += vk[a];
        }
        for (auto& x : vbar) x /= di;

        // M = sum_k (V_k - vbar)(V_k - vbar)^T and C = U U^T, both r x r.
        std::vector<double> mmat(rs * rs, 0.0), cmat(rs * rs, 0.0), diff(rs);
        for (int k = 0; k < di; ++k) {
            auto vk = blk.v_col(k);
            for (std::size_t a = 0; a < rs; ++a) diff[a] = vk[a] - vbar[a];
            for (std::size_t a = 0; a < rs; ++a)
                for (std::size_t b = 0; b < rs; ++b) mmat[a * rs + b] += diff[a] * diff[b];
        }
        for (long col = 0; col < blk.xdim; ++col) {
            auto uc = blk.u_col(col);
            for (std::size_t a = 0; a < rs; ++a)
                for (std::size_t b = 0; b < rs; ++b) cmat[a * rs + b] += uc[a] * uc[b];
        }

        // dU = 2 (M + vbar vbar^T) U, column by column.
        std::vector<double> amat(rs * rs);
        for (std::size_t a = 0; a < rs; ++a)
            for (std::size_t b = 0; b < rs; ++b)
                amat[a * rs + b] = 2.0 * (mmat[a * rs + b] + vbar[a] * vbar[b]);
        g.gu.resize(blk.u.size());
        for (long col = 0; col < blk.xdim; ++col) {
            auto uc = blk.u_col(col);
            double* out = g.gu.data() + static_cast<std::size_t>(col) * rs;
            for (std::size_t a = 0; a < rs; ++a) {
                double s = 0;
                for (std::size_t b = 0; b < rs; ++b) s += amat[a * rs + b] * uc[b];
                out[a] = lambda * s;
            }
        }

        // dV_k = 2 C (V_k - vbar) + (2/d_i) C vbar.
        std::vector<double> cvbar(rs, 0.0);
        for (std::size_t a = 0; a < rs; ++a)
            for (std::size_t b = 0; b < rs; ++b) cvbar[a] += cmat[a * rs + b] * vbar[b];
        g.gv.resize(blk.v.size());
        for (int k = 0; k < di; ++k) {
            auto vk = blk.v_col(k);
            for (std::size_t a = 0; a < rs; ++a) diff[a] = vk[a] - vbar[a];
            double* out = g.gv.data() + static_cast<std::size_t>(k) * rs;
            for (std::size_t a = 0; a < rs; ++a) {
                double s = 0;
                for (std::size_t b = 0; b < rs; ++b) s += cmat[a * rs + b] * diff[b];
                out[a] = lambda * (2.0 * s + 2.0 * cvbar[a] / di);
            }
        }
    }
    return grads;
}

AdagradState AdagradState::like(const FieldWiseModel& model, double epsilon) {
    AdagradState state;
    state.epsilon = epsilon;
    state.blocks.resize(model.blocks.size());
    for (std::size_t i = 0; i < model.blocks.size(); ++i) {
        state.blocks[i].gu.assign(model.blocks[i].u.size(), 0.0);
        state.blocks[i].gv.assign(model.blocks[i].v.size(), 0.0);
        state.blocks[i].gb.assign(model.blocks[i].bias.size(), 0.0);
    }
    return state;
}

void adagrad_step(FieldWiseModel& model, AdagradState& state, const SparseGrad& grads, double lr,
                  double weight_decay) {
    for (std::size_t i = 0; i < grads.fields.size(); ++i) {
        FieldBlock& blk = model.blocks[i];
        AdagradState::Block& acc = state.blocks[i];
        const auto rs = static_cast<std::size_t>(blk.rank);
        const int fid = static_cast<int>(i);

        for (const auto& [col, gvec] : grads.fields[i].u_cols) {
            auto uc = blk.u_col(col);
            double* a = acc.gu.data() + static_cast<std::size_t>(col) * rs;
            for (std::size_t x = 0; x < rs; ++x) {
                const double g = gvec[x] + weight_decay * uc[x];
                check_finite(g, fid, "U");
                update_coord(uc[x], a[x], g, lr, state.epsilon);
            }
        }
        for (const auto& [col, gvec] : grads.fields[i].v_cols) {
            auto vc = blk.v_col(col);
            double* a = acc.gv.data() + static_cast<std::size_t>(col) * rs;
            for (std::size_t x = 0; x < rs; ++x) {
                const double g = gvec[x] + weight_decay * vc[x];
                check_finite(g, fid, "V");
                update_coord(vc[x], a[x], g, lr, state.epsilon);
            }
        }
        for (const auto& [k, gval] : grads.fields[i].b_elems) {
            const auto ks = static_cast<std::size_t>(k);
            const double g = gval + weight_decay * blk.bias[ks];
            check_finite(g, fid, "bias");
            update_coord(blk.bias[ks], acc.gb[ks], g, lr, state.epsilon);
        }
    }
}

void adagrad_step(FieldWiseModel& model, AdagradState& state, const DenseGrad& grads, double lr,
                  double weight_decay) {
    for (std::size_t i = 0; i < grads.fields.size(); ++i) {
        FieldBlock& blk = model.blocks[i];
        AdagradState::Block& acc = state.blocks[i];
        const DenseGrad::Block& g = grads.fields[i];
        const int fid = static_cast<int>(i);

        for (std::size_t x = 0; x < g.gu.size(); ++x) {
            const double gg = g.gu[x] + weight_decay * blk.u[x];
            check_finite(gg, fid, "U");
            update_coord(blk.u[x], acc.gu[x], gg, lr, state.epsilon);
        }
        for (std::size_t x = 0; x < g.gv.size(); ++x) {
            const double gg = g.gv[x] + weight_decay * blk.v[x];
            check_finite(gg, fid, "V");
            update_coord(blk.v[x], acc.gv[x], gg, lr, state.epsilon);
        }
        for (std::size_t x = 0; x < g.gb.size(); ++x) {
            const double gg = g.gb[x] + weight_decay * blk.bias[x];
            check_finite(gg, fid, "bias");
            update_coord(blk.bias[x], acc.gb[x], gg, lr, state.epsilon);
        }
    }
}

std::string format_history(const TrainHistory& history) {
    std::string out;
    char line[128];
    for (const auto& e : history.epochs) {
        std::snprintf(line, sizeof line, "%d\t%.17g\t%.17g\n", e.epoch, e.train_logloss,
                      e.val_logloss);
        out += line;
    }
    return out;
}

void write_history(const std::string& path, const TrainHistory& history) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write history file: " + path);
    out << format_history(history);
    if (!out) throw DataError("write failed: " + path);
}

std::pair<FieldWiseModel, TrainHistory> train(FieldWiseModel model, const Dataset& train_data,
                                              const Dataset& val_data, const TrainConfig& cfg) {
    if (train_data.n() == 0) throw DataError("train: empty training set");
    if (!(model.layout == train_data.layout()))
        throw DataError("train: model and data layouts disagree");
    if (val_data.n() > 0 && !(model.layout == val_data.layout()))
        throw DataError("train: model and validation layouts disagree");
    if (cfg.learning_rate <= 0) throw DataError("learning_rate must be > 0");
    if (cfg.batch_size < 1) throw DataError("batch_size must be >= 1");
    if (cfg.reg_period < 1) throw DataError("reg_period must be >= 1");
    if (cfg.max_epochs < 1) throw DataError("max_epochs must be >= 1");
    if (cfg.patience < 1) throw DataError("patience must be >= 1");
    if (cfg.lambda < 0 || cfg.weight_decay < 0)
        throw DataError("lambda and weight_decay must be >= 0");

    const std::size_t n = train_data.n();
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    AdagradState state = AdagradState::like(model, cfg.adagrad_epsilon);

    TrainHistory history;
    FieldWiseModel best_model = model;
    double best_val = std::numeric_limits<double>::infinity();
    int bad_epochs = 0;
    long step = 0;

    std::vector<std::size_t> order(n);
    std::vector<EncodedInstance> shuffled(n);

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();

        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(cfg.seed, epoch_stream(epoch));
        shuffle(order, rng);
        for (std::size_t p = 0; p < n; ++p) shuffled[p] = train_data.instances[order[p]];

        double loss_sum = 0;
        long batches = 0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t len = std::min(batch, n - start);
            std::span<const EncodedInstance> b(shuffled.data() + start, len);

            loss_sum += batch_mean_logloss(model, b);
            ++batches;

            SparseGrad grads = loss_gradients(model, b);
            adagrad_step(model, state, grads, cfg.learning_rate, cfg.weight_decay);
            ++step;

            if (cfg.lambda > 0 && step % cfg.reg_period == 0) {
                const double scale = cfg.scale_reg_by_period ? cfg.reg_period : 1.0;
                DenseGrad reg = reg_gradients(model, cfg.lambda * scale);
                adagrad_step(model, state, reg, cfg.learning_rate, 0.0);
            }
        }

        const double train_ll = loss_sum / static_cast<double>(batches);
        const double val_ll = val_data.n() > 0 ? mean_logloss(model, val_data) : train_ll;
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        history.epochs.push_back({epoch, train_ll, val_ll, seconds});
        history.stopped_epoch = epoch;

        if (!std::isfinite(train_ll) || !std::isfinite(val_ll))
            throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                               "; last good epoch " + std::to_string(epoch - 1));

        if (cfg.train_loss_target) {
            // Target mode: run until the target or the epoch cap; validation
            // patience never cuts the run short.
            if (train_ll <= *cfg.train_loss_target) {
                history.best_epoch = epoch;
                return {std::move(model), std::move(history)};
            }
            continue;
        }

        if (val_ll < best_val) {
            best_val = val_ll;
            best_model = model;
            history.best_epoch = epoch;
            bad_epochs = 0;
        } else if (++bad_epochs >= cfg.patience) {
            break;
        }
    }

    if (cfg.train_loss_target) {
        // Target mode never switches to the best-validation snapshot: the
        // caller asked for "the model once the target is met (or give up)".
        history.best_epoch = history.stopped_epoch;
        return {std::move(model), std::move(history)};
    }
    return {std::move(best_model), std::move(history)};
}

}  // namespace fwl
