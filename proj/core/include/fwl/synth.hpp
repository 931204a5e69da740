#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "fwl/data.hpp"
#include "fwl/model.hpp"

namespace fwl {

struct PlantedSpec {
    std::vector<int> cards;     // d_1..d_m
    int rank = 1;               // planted factor rank
    double weight_scale = 1.0;  // U/V init scale of the planted model
    double bias_scale = 1.0;    // planted biases uniform in +-bias_scale
    double noise_rate = 0.0;    // label flip probability, in [0, 0.5)
    std::uint64_t seed = 0;
};

struct PlantedData {
    Dataset data;
    FieldWiseModel model;
    // Expected Logloss of the planted model under the noisy label process,
    // Monte-Carlo averaged over the generated instances.
    double bayes_logloss = 0.0;
};

// Vocabulary with tokens "v0".."v{d_i-2}" per field plus the rare bucket.
std::shared_ptr<Vocabulary> synthetic_vocabulary(const std::vector<int>& cards);

// Features uniform per field; labels +1 with probability sigmoid(score of the
// planted model), then flipped with probability noise_rate.
PlantedData generate_planted(const PlantedSpec& spec, std::size_t n);

}  // namespace fwl
