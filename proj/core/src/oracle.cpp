#include "fwl/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "fwl/common.hpp"
#include "fwl/train.hpp"

namespace fwl {

namespace {

// Dense W_b^(i) of shape (d - d_i + 1) x d_i built straight from the raw
// factor storage (column-major: U[a][p] = u[p*r + a]); no fast-path helpers.
std::vector<std::vector<double>> dense_wb(const FieldWiseModel& model, int field) {
    const FieldBlock& blk = model.blocks[static_cast<std::size_t>(field)];
    const auto rows = static_cast<std::size_t>(blk.xdim) + 1;
    const auto cols = static_cast<std::size_t>(blk.dim);
    const auto r = static_cast<std::size_t>(blk.rank);

    std::vector<std::vector<double>> wb(rows, std::vector<double>(cols, 0.0));
    for (std::size_t p = 0; p + 1 < rows; ++p)
        for (std::size_t q = 0; q < cols; ++q) {
            double s = 0;
            for (std::size_t a = 0; a < r; ++a) s += blk.u[p * r + a] * blk.v[q * r + a];
            wb[p][q] = s;
        }
    for (std::size_t q = 0; q < cols; ++q) wb[rows - 1][q] = blk.bias[q];
    return wb;
}

}  // namespace

double oracle_dense_predict(const FieldWiseModel& model, const EncodedInstance& inst) {
    const int m = model.fields();
    double score = 0;
    for (int i = 0; i < m; ++i) {
        const FieldBlock& blk = model.blocks[static_cast<std::size_t>(i)];
        const auto xdim = static_cast<std::size_t>(blk.xdim);
        const auto di = static_cast<std::size_t>(blk.dim);

        // Dense one-hot x^(-i): fields j != i concatenated in field order.
        std::vector<double> xmi(xdim, 0.0);
        std::size_t pos = 0;
        for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            const auto dj =
                static_cast<std::size_t>(model.blocks[static_cast<std::size_t>(j)].dim);
            xmi[pos + static_cast<std::size_t>(inst.active[static_cast<std::size_t>(j)])] = 1.0;
            pos += dj;
        }
        std::vector<double> xi(di, 0.0);
        xi[static_cast<std::size_t>(inst.active[static_cast<std::size_t>(i)])] = 1.0;

        const auto wb = dense_wb(model, i);
        // x^(i)^T (W^T x^(-i) + b), evaluated with full loops.
        for (std::size_t q = 0; q < di; ++q) {
            double col = wb[xdim][q];  // bias row
            for (std::size_t p = 0; p < xdim; ++p) col += wb[p][q] * xmi[p];
            score += xi[q] * col;
        }
    }
    return score;
}

FieldNorms oracle_dense_norms(const FieldWiseModel& model, int field) {
    const auto wb = dense_wb(model, field);
    const std::size_t rows = wb.size();
    const std::size_t cols = wb[0].size();

    std::vector<double> mean(rows, 0.0);
    for (std::size_t p = 0; p < rows; ++p) {
        for (std::size_t q = 0; q < cols; ++q) mean[p] += wb[p][q];
        mean[p] /= static_cast<double>(cols);
    }
    double var = 0, mean_sq = 0;
    for (std::size_t p = 0; p < rows; ++p) {
        for (std::size_t q = 0; q < cols; ++q) {
            const double diff = wb[p][q] - mean[p];
            var += diff * diff;
        }
        mean_sq += mean[p] * mean[p];
    }
    return {std::sqrt(var), std::sqrt(mean_sq)};
}

double oracle_objective(const FieldWiseModel& model, std::span<const EncodedInstance> batch,
                        double lambda) {
    if (batch.empty()) throw DataError("oracle_objective: empty batch");
    double loss = 0;
    for (const auto& inst : batch) loss += logloss(oracle_dense_predict(model, inst), inst.label);
    loss /= static_cast<double>(batch.size());

    double reg = 0;
    for (int i = 0; i < model.fields(); ++i) {
        const FieldNorms norms = oracle_dense_norms(model, i);
        reg += norms.variance_norm * norms.variance_norm + norms.mean_norm * norms.mean_norm;
    }
    return loss + lambda * reg;
}

std::vector<double> flatten_parameters(const FieldWiseModel& model) {
    std::vector<double> theta;
    theta.reserve(static_cast<std::size_t>(model.parameter_count()));
    for (const auto& blk : model.blocks) {
        theta.insert(theta.end(), blk.u.begin(), blk.u.end());
        theta.insert(theta.end(), blk.v.begin(), blk.v.end());
        theta.insert(theta.end(), blk.bias.begin(), blk.bias.end());
    }
    return theta;
}

void unflatten_parameters(FieldWiseModel& model, std::span<const double> theta) {
    if (theta.size() != static_cast<std::size_t>(model.parameter_count()))
        throw DataError("unflatten_parameters: wrong parameter count");
    std::size_t pos = 0;
    for (auto& blk : model.blocks) {
        std::copy_n(theta.begin() + static_cast<long>(pos), blk.u.size(), blk.u.begin());
        pos += blk.u.size();
        std::copy_n(theta.begin() + static_cast<long>(pos), blk.v.size(), blk.v.begin());
        pos += blk.v.size();
        std::copy_n(theta.begin() + static_cast<long>(pos), blk.bias.size(), blk.bias.begin());
        pos += blk.bias.size();
    }
}

std::vector<double> oracle_finite_diff(const FieldWiseModel& model,
                                       std::span<const EncodedInstance> batch, double lambda,
                                       double step) {
    if (model.parameter_count() > 5000)
        throw DataError("oracle_finite_diff: model too large for finite differences");
    FieldWiseModel work = model;
    std::vector<double> theta = flatten_parameters(model);
    std::vector<double> grad(theta.size());
    for (std::size_t p = 0; p < theta.size(); ++p) {
        const double saved = theta[p];
        theta[p] = saved + step;
        unflatten_parameters(work, theta);
        const double up = oracle_objective(work, batch, lambda);
        theta[p] = saved - step;
        unflatten_parameters(work, theta);
        const double down = oracle_objective(work, batch, lambda);
        theta[p] = saved;
        grad[p] = (up - down) / (2.0 * step);
    }
    unflatten_parameters(work, theta);
    return grad;
}

double grad_rel_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) /
           std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

LrResult oracle_lr(const Dataset& train_data, double l2, int max_iters, double initial_step) {
    if (train_data.n() == 0) throw DataError("oracle_lr: empty dataset");
    const FieldLayout layout = train_data.layout();
    const auto d = static_cast<std::size_t>(layout.total);
    const auto n = static_cast<double>(train_data.n());
    const int m = layout.fields();

    std::vector<double> w(d, 0.0);
    auto objective = [&](const std::vector<double>& weights) {
        double loss = 0;
        for (const auto& inst : train_data.instances) {
            double score = 0;
            for (int i = 0; i < m; ++i)
                score += weights[static_cast<std::size_t>(
                    layout.offsets[static_cast<std::size_t>(i)] +
                    inst.active[static_cast<std::size_t>(i)])];
            loss += logloss(score, inst.label);
        }
        loss /= n;
        double pen = 0;
        for (double x : weights) pen += x * x;
        return loss + 0.5 * l2 * pen;
    };

    double fw = objective(w);
    double step = initial_step;
    int iter = 0;
    std::vector<double> g(d), trial(d);
    for (; iter < max_iters; ++iter) {
        std::fill(g.begin(), g.end(), 0.0);
        for (const auto& inst : train_data.instances) {
            double score = 0;
            for (int i = 0; i < m; ++i)
                score += w[static_cast<std::size_t>(layout.offsets[static_cast<std::size_t>(i)] +
                                                    inst.active[static_cast<std::size_t>(i)])];
            const double t = score * inst.label;
            double s;  // d(logloss)/d(score)
            if (t >= 0) {
                const double e = std::exp(-t);
                s = -inst.label * e / (1.0 + e);
            } else {
                s = -inst.label / (1.0 + std::exp(t));
            }
            s /= n;
            for (int i = 0; i < m; ++i)
                g[static_cast<std::size_t>(layout.offsets[static_cast<std::size_t>(i)] +
                                           inst.active[static_cast<std::size_t>(i)])] += s;
        }
        double gnorm2 = 0;
        for (std::size_t p = 0; p < d; ++p) {
            g[p] += l2 * w[p];
            gnorm2 += g[p] * g[p];
        }
        if (gnorm2 < 1e-18) break;

        // Backtracking line search with a sufficient-decrease test.
        bool accepted = false;
        for (int half = 0; half < 60; ++half) {
            for (std::size_t p = 0; p < d; ++p) trial[p] = w[p] - step * g[p];
            const double ft = objective(trial);
            if (ft <= fw - 1e-4 * step * gnorm2) {
                w.swap(trial);
                fw = ft;
                step *= 2.0;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }

    LrResult result;
    result.weights = std::move(w);
    result.iterations = iter;
    // Report the unpenalized train Logloss.
    double loss = 0;
    for (const auto& inst : train_data.instances) {
        double score = 0;
        for (int i = 0; i < m; ++i)
            score += result.weights[static_cast<std::size_t>(
                layout.offsets[static_cast<std::size_t>(i)] +
                inst.active[static_cast<std::size_t>(i)])];
        loss += logloss(score, inst.label);
    }
    result.final_train_logloss = loss / n;
    return result;
}

double oracle_quadratic_auc(std::span<const double> scores, std::span<const std::int8_t> labels) {
    if (scores.size() != labels.size())
        throw DataError("oracle_quadratic_auc: size mismatch");
    double wins = 0;
    std::size_t pairs = 0;
    for (std::size_t p = 0; p < scores.size(); ++p) {
        if (labels[p] <= 0) continue;
        for (std::size_t q = 0; q < scores.size(); ++q) {
            if (labels[q] > 0) continue;
            ++pairs;
            if (scores[p] > scores[q]) wins += 1.0;
            else if (scores[p] == scores[q]) wins += 0.5;
        }
    }
    if (pairs == 0) throw DataError("oracle_quadratic_auc: needs both classes present");
    return wins / static_cast<double>(pairs);
}

}  // namespace fwl
