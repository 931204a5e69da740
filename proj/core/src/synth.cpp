#include "fwl/synth.hpp"

#include <cmath>
#include <string>

#include "fwl/common.hpp"
#include "fwl/train.hpp"

namespace fwl {

namespace {

constexpr std::uint64_t kBiasStream = 0xB1A5000000000000ULL;
constexpr std::uint64_t kDataStream = 0xDA7A000000000000ULL;

}  // namespace

std::shared_ptr<Vocabulary> synthetic_vocabulary(const std::vector<int>& cards) {
    if (cards.empty()) throw DataError("synthetic_vocabulary: no fields");
    std::vector<FieldSpec> specs;
    std::vector<std::vector<std::string>> kept;
    specs.reserve(cards.size());
    kept.reserve(cards.size());
    for (std::size_t i = 0; i < cards.size(); ++i) {
        if (cards[i] < 1) throw DataError("synthetic_vocabulary: cardinality must be >= 1");
        specs.push_back({"f" + std::to_string(i), FieldKind::categorical});
        std::vector<std::string> tokens;
        tokens.reserve(static_cast<std::size_t>(cards[i] - 1));
        // d_i - 1 kept tokens; the rare bucket supplies the last index.
        for (int t = 0; t + 1 < cards[i]; ++t) tokens.push_back("v" + std::to_string(t));
        kept.push_back(std::move(tokens));
    }
    return std::make_shared<Vocabulary>(std::move(specs), std::move(kept));
}

PlantedData generate_planted(const PlantedSpec& spec, std::size_t n) {
    if (n < 1) throw DataError("generate_planted: n must be >= 1");
    if (spec.rank < 0) throw DataError("generate_planted: rank must be >= 0");
    if (!(spec.noise_rate >= 0.0 && spec.noise_rate < 0.5))
        throw DataError("generate_planted: noise_rate must lie in [0, 0.5)");
    if (spec.weight_scale < 0 || spec.bias_scale < 0)
        throw DataError("generate_planted: scales must be >= 0");

    PlantedData out;
    auto vocab = synthetic_vocabulary(spec.cards);
    const FieldLayout layout = vocab->layout();
    const int m = layout.fields();

    // Planted factors via the standard initializer; planted biases on their
    // own stream (the initializer leaves biases at zero).
    const double factor_scale = spec.weight_scale > 0 ? spec.weight_scale : 1e-300;
    out.model = init_model(layout, RankPolicy::constant(spec.rank), factor_scale, spec.seed);
    if (spec.weight_scale == 0)
        for (auto& blk : out.model.blocks) {
            std::fill(blk.u.begin(), blk.u.end(), 0.0);
            std::fill(blk.v.begin(), blk.v.end(), 0.0);
        }
    Rng bias_rng(spec.seed, kBiasStream);
    for (auto& blk : out.model.blocks)
        for (auto& b : blk.bias) b = bias_rng.uniform(-spec.bias_scale, spec.bias_scale);

    out.data.vocab = vocab;
    out.data.instances.resize(n);
    Rng rng(spec.seed, kDataStream);
    double bayes = 0;
    for (std::size_t j = 0; j < n; ++j) {
        EncodedInstance& inst = out.data.instances[j];
        inst.active.resize(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i)
            inst.active[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(
                rng.below(static_cast<std::uint64_t>(layout.cards[static_cast<std::size_t>(i)])));

        const double score = out.model.predict(inst);
        const double p = predict_proba(score);
        std::int8_t label = rng.uniform() < p ? std::int8_t{1} : std::int8_t{-1};
        if (rng.uniform() < spec.noise_rate) label = static_cast<std::int8_t>(-label);
        inst.label = label;

        // Conditional expected Logloss of the planted scorer at this x: the
        // label is +1 with probability p' = (1-rho)p + rho(1-p).
        const double p_pos = (1.0 - spec.noise_rate) * p + spec.noise_rate * (1.0 - p);
        bayes += p_pos * logloss(score, 1.0) + (1.0 - p_pos) * logloss(score, -1.0);
    }
    out.bayes_logloss = bayes / static_cast<double>(n);
    return out;
}

}  // namespace fwl
