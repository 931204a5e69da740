#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fwl/data.hpp"
#include "fwl/model.hpp"

namespace fwl {

struct TrainConfig {
    double learning_rate = 0.1;
    double lambda = 1e-6;        // weight of the variance + mean-norm regularizer
    double weight_decay = 1e-6;  // coupled into loss gradients on touched parameters
    int batch_size = 2048;
    int reg_period = 1000;       // apply regularization gradients every T steps
    int max_epochs = 20;
    int patience = 1;            // epochs without val-Logloss improvement before stopping
    std::uint64_t seed = 0;
    double adagrad_epsilon = 1e-8;
    // The periodic reg gradient is applied unscaled by default; set to true to
    // multiply it by reg_period instead.
    bool scale_reg_by_period = false;
    // When set, stop at the first epoch whose train Logloss reaches the target
    // and return the current model instead of the best-validation one (the
    // trend-experiment protocol).
    std::optional<double> train_loss_target;
};

// log(1 + exp(-score*label)), branch-stable for large |score|.
double logloss(double score, double label);

// Mean Logloss of a model over a dataset (no AUC; cheap epoch-end metric).
double mean_logloss(const FieldWiseModel& model, const Dataset& data);

// Batch loss gradients in sparse form: per field, the U columns at the other
// fields' active positions, the V column and bias entry of the active index.
// Values are means over the batch.
struct SparseGrad {
    struct Block {
        std::unordered_map<long, std::vector<double>> u_cols;
        std::unordered_map<int, std::vector<double>> v_cols;
        std::unordered_map<int, double> b_elems;
    };
    std::vector<Block> fields;
};

SparseGrad loss_gradients(const FieldWiseModel& model, std::span<const EncodedInstance> batch);

// lambda * d(R1 + R2) per block, all entries (layouts mirror the model).
struct DenseGrad {
    struct Block {
        std::vector<double> gu, gv, gb;
    };
    std::vector<Block> fields;
};

DenseGrad reg_gradients(const FieldWiseModel& model, double lambda);

// Per-parameter squared-gradient accumulators, same shapes as the model.
struct AdagradState {
    struct Block {
        std::vector<double> gu, gv, gb;
    };
    std::vector<Block> blocks;
    double epsilon = 1e-8;

    static AdagradState like(const FieldWiseModel& model, double epsilon = 1e-8);
};

// Touched parameters only: g += wd*theta, G += g^2, theta -= lr*g/(sqrt(G)+eps).
// Non-finite gradients raise NumericError naming the block.
void adagrad_step(FieldWiseModel& model, AdagradState& state, const SparseGrad& grads, double lr,
                  double weight_decay);
void adagrad_step(FieldWiseModel& model, AdagradState& state, const DenseGrad& grads, double lr,
                  double weight_decay);

struct EpochStats {
    int epoch = 0;             // 1-based
    double train_logloss = 0;  // mean of batch losses seen during the epoch
    double val_logloss = 0;
    double seconds = 0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = 0;     // 1-based; epoch of the returned model
    int stopped_epoch = 0;  // last epoch run
};

// Emits "epoch<TAB>train_logloss<TAB>val_logloss" lines. Wall-clock timing is
// deliberately excluded so identical runs produce identical history files.
std::string format_history(const TrainHistory& history);
void write_history(const std::string& path, const TrainHistory& history);

// Mini-batch Adagrad on the Logloss objective with periodic regularization
// gradients and validation-based early stopping. Deterministic under seed.
std::pair<FieldWiseModel, TrainHistory> train(FieldWiseModel model, const Dataset& train_data,
                                              const Dataset& val_data, const TrainConfig& cfg);

}  // namespace fwl
