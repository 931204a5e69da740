#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "fwl/model.hpp"
#include "fwl/oracle.hpp"
#include "test_util.hpp"

using namespace fwl;
using fwltest::TempDir;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("rank policy: log-base rounding and clamping") {
    CHECK(rank_for_field(8, RankPolicy::log_base(2.0)) == 3);
    CHECK(rank_for_field(1, RankPolicy::log_base(2.0)) == 1);   // clamped up
    CHECK(rank_for_field(1, RankPolicy::constant(5)) == 1);     // clamped down to d_i
    CHECK(rank_for_field(2, RankPolicy::log_base(20.0)) == 1);  // round(0.23) clamps to 1
    // round(ln 56354 / ln 1.6) = round(23.26) = 23
    CHECK(rank_for_field(56354, RankPolicy::log_base(1.6)) == 23);
    CHECK(rank_for_field(7, RankPolicy::constant(3)) == 3);
    CHECK(rank_for_field(7, RankPolicy::constant(0)) == 0);  // bias-only degenerate mode
    CHECK_THROWS_AS(rank_for_field(8, RankPolicy::log_base(1.0)), DataError);
    CHECK_THROWS_AS(rank_for_field(8, RankPolicy::log_base(0.5)), DataError);
    CHECK_THROWS_AS(rank_for_field(8, RankPolicy::constant(-1)), DataError);
}

TEST_CASE("parameter count: formula and allocation agree") {
    auto layout = FieldLayout::from_cards({2, 3, 4});
    auto model = init_model(layout, RankPolicy::constant(2), 0.1, 1);

    // sum_i [r_i(d-d_i) + r_i d_i + d_i] with d=9, r=2:
    // (2*7+2*2+2) + (2*6+2*3+3) + (2*5+2*4+4) = 20 + 21 + 22 = 63
    CHECK(model.parameter_count() == 63);

    long allocated = 0;
    for (const auto& blk : model.blocks)
        allocated += static_cast<long>(blk.u.size() + blk.v.size() + blk.bias.size());
    CHECK(model.parameter_count() == allocated);

    long formula = 0;
    for (int i = 0; i < model.fields(); ++i) {
        const auto& blk = model.blocks[i];
        formula += static_cast<long>(blk.rank) * (layout.total - layout.cards[i]) +
                   static_cast<long>(blk.rank) * layout.cards[i] + layout.cards[i];
    }
    CHECK(model.parameter_count() == formula);

    // Rank-0 blocks hold only biases.
    auto bias_only = init_model(layout, RankPolicy::constant(0), 0.1, 1);
    CHECK(bias_only.parameter_count() == layout.total);
}

TEST_CASE("init: determinism and the zero-scale limit") {
    auto layout = FieldLayout::from_cards({3, 4, 2});
    auto a = init_model(layout, RankPolicy::constant(2), 0.1, 42);
    auto b = init_model(layout, RankPolicy::constant(2), 0.1, 42);
    for (int i = 0; i < a.fields(); ++i) {
        CHECK(same_bits(a.blocks[i].u, b.blocks[i].u));
        CHECK(same_bits(a.blocks[i].v, b.blocks[i].v));
        CHECK(same_bits(a.blocks[i].bias, b.blocks[i].bias));
    }
    auto c = init_model(layout, RankPolicy::constant(2), 0.1, 43);
    CHECK_FALSE(same_bits(a.blocks[0].u, c.blocks[0].u));

    auto zero = init_model(layout, RankPolicy::constant(2), 0.0, 42);
    for (auto inst : fwltest::random_instances({3, 4, 2}, 20, 5)) {
        CHECK(zero.predict(inst) == 0.0);
        CHECK(predict_proba(zero.predict(inst)) == 0.5);
    }
}

TEST_CASE("predict: factored score matches the dense oracle") {
    Rng rng(11, 0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> cards;
        int m = 2 + static_cast<int>(rng.below(3));
        for (int i = 0; i < m; ++i) cards.push_back(1 + static_cast<int>(rng.below(6)));
        int r = 1 + static_cast<int>(rng.below(3));
        auto model = fwltest::random_model(cards, RankPolicy::constant(r), 100 + trial);
        for (const auto& inst : fwltest::random_instances(cards, 5, 200 + trial)) {
            double fast = model.predict(inst);
            double dense = oracle_dense_predict(model, inst);
            CHECK(std::abs(fast - dense) <= 1e-10 * std::max(1.0, std::abs(dense)));
        }
    }
}

TEST_CASE("predict: single-field model scores with bias alone") {
    // m=1 means x^(-i) is empty: the factored term vanishes by construction.
    auto model = fwltest::random_model({4}, RankPolicy::constant(2), 9);
    CHECK(model.blocks[0].xdim == 0);
    EncodedInstance inst;
    inst.active = {2};
    CHECK(model.predict(inst) == model.blocks[0].bias[2]);
}

TEST_CASE("predict_proba: link values and saturation stability") {
    CHECK(predict_proba(0.0) == 0.5);
    CHECK(predict_proba(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
    double hi = predict_proba(1000.0);
    CHECK(std::isfinite(hi));
    CHECK(hi == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(hi <= 1.0);
    double lo = predict_proba(-1000.0);
    CHECK(std::isfinite(lo));
    CHECK(lo >= 0.0);
    CHECK(lo == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("materialize_weights: hand-computed rank-1 product") {
    auto layout = FieldLayout::from_cards({2, 2});
    auto model = init_model(layout, RankPolicy::constant(1), 0.0, 0);
    auto& blk = model.blocks[0];
    blk.u = {2.0, 3.0};        // U columns over x^(-0) = field 1's two indices
    blk.v = {5.0, 7.0};        // V columns over field 0's two categories
    blk.bias = {11.0, 13.0};

    // W_b is (d - d_0 + 1) x d_0 = 3 x 2 row-major; W[p][k] = u_p * v_k.
    auto wb = materialize_weights(model, 0);
    REQUIRE(wb.size() == 6);
    CHECK(wb[0] == 10.0);
    CHECK(wb[1] == 14.0);
    CHECK(wb[2] == 15.0);
    CHECK(wb[3] == 21.0);
    CHECK(wb[4] == 11.0);  // bias row
    CHECK(wb[5] == 13.0);

    // Cross-check one prediction against the dense entries: instance with
    // field0=1 active and field1=0 active uses column 1 of W_b at row 0.
    EncodedInstance inst;
    inst.active = {1, 0};
    double field0_score = blk.bias[1] + wb[1];
    double field1_score = model.blocks[1].bias[0];  // field 1 factors are zero
    CHECK(model.predict(inst) == doctest::Approx(field0_score + field1_score).epsilon(1e-15));

    CHECK_THROWS_AS(materialize_weights(model, 0, 4), DataError);  // element guard
}

TEST_CASE("materialize_weights: zero U leaves only the bias row") {
    auto model = fwltest::random_model({3, 4}, RankPolicy::constant(2), 21);
    auto& blk = model.blocks[0];
    std::fill(blk.u.begin(), blk.u.end(), 0.0);
    auto wb = materialize_weights(model, 0);
    long rows = model.layout.total - model.layout.cards[0] + 1;
    int cols = model.layout.cards[0];
    for (long p = 0; p + 1 < rows; ++p)
        for (int k = 0; k < cols; ++k) CHECK(wb[static_cast<std::size_t>(p * cols + k)] == 0.0);
    for (int k = 0; k < cols; ++k)
        CHECK(wb[static_cast<std::size_t>((rows - 1) * cols + k)] == blk.bias[k]);
}

TEST_CASE("materialized W has rank at most r: rank-1 blocks have vanishing 2x2 minors") {
    auto model = fwltest::random_model({4, 5}, RankPolicy::constant(1), 33);
    auto wb = materialize_weights(model, 0);
    long rows = model.layout.total - model.layout.cards[0];  // W only, bias row excluded
    int cols = model.layout.cards[0];
    auto w = [&](long p, int k) { return wb[static_cast<std::size_t>(p * cols + k)]; };
    for (long p = 0; p < rows; ++p)
        for (long q = p + 1; q < rows; ++q)
            for (int k = 0; k < cols; ++k)
                for (int l = k + 1; l < cols; ++l)
                    CHECK(std::abs(w(p, k) * w(q, l) - w(p, l) * w(q, k)) <= 1e-12);
}

TEST_CASE("field_norms: factored equals dense oracle on random models") {
    Rng rng(17, 0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> cards;
        int m = 2 + static_cast<int>(rng.below(3));
        for (int i = 0; i < m; ++i) cards.push_back(1 + static_cast<int>(rng.below(6)));
        int r = static_cast<int>(rng.below(4));  // includes rank 0
        auto model = fwltest::random_model(cards, RankPolicy::constant(r), 500 + trial);
        for (int i = 0; i < m; ++i) {
            auto fast = field_norms(model, i);
            auto dense = oracle_dense_norms(model, i);
            CHECK(std::abs(fast.variance_norm - dense.variance_norm) <=
                  1e-10 * std::max(1.0, dense.variance_norm));
            CHECK(std::abs(fast.mean_norm - dense.mean_norm) <=
                  1e-10 * std::max(1.0, dense.mean_norm));
        }
    }
}

TEST_CASE("field_norms: single-category field has zero variance norm") {
    auto model = fwltest::random_model({1, 3}, RankPolicy::constant(2), 7);
    auto norms = field_norms(model, 0);
    CHECK(norms.variance_norm == 0.0);
    // The mean column IS the single column: N2 = sqrt(||W col||^2 + b^2).
    auto wb = materialize_weights(model, 0);
    double sq = 0;
    for (double x : wb) sq += x * x;
    CHECK(norms.mean_norm == doctest::Approx(std::sqrt(sq)).epsilon(1e-12));
}

TEST_CASE("field_norms: identical columns and constant bias give zero variance") {
    auto model = fwltest::random_model({3, 4}, RankPolicy::constant(2), 8);
    auto& blk = model.blocks[0];
    for (int k = 1; k < blk.dim; ++k)
        std::copy(blk.v.begin(), blk.v.begin() + blk.rank, blk.v.begin() + k * blk.rank);
    std::fill(blk.bias.begin(), blk.bias.end(), 0.7);
    auto norms = field_norms(model, 0);
    CHECK(norms.variance_norm <= 1e-12);
    CHECK(norms.mean_norm > 0.0);
}

TEST_CASE("field_norms: bias-only blocks reduce to bias variance and mean") {
    auto layout = FieldLayout::from_cards({3, 2});
    auto model = init_model(layout, RankPolicy::constant(0), 0.1, 3);
    model.blocks[0].bias = {1.0, 2.0, 3.0};
    auto norms = field_norms(model, 0);
    // bbar=2, sum (b_k-bbar)^2 = 2, N1 = sqrt(2); N2 = |bbar| = 2.
    CHECK(norms.variance_norm == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(norms.mean_norm == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("save/load: bit-exact round trip with policy and vocab reference") {
    TempDir tmp;
    auto model = fwltest::random_model({2, 5, 3}, RankPolicy::log_base(1.7), 99);
    model.vocab_ref = "somewhere/vocab.txt";
    auto path = tmp.file("model.bin");
    save_model(path, model);
    auto loaded = load_model(path);

    CHECK(loaded.layout == model.layout);
    CHECK(loaded.vocab_ref == model.vocab_ref);
    CHECK(loaded.policy.mode == model.policy.mode);
    CHECK(loaded.policy.rank == model.policy.rank);
    CHECK(loaded.policy.base == model.policy.base);
    REQUIRE(loaded.fields() == model.fields());
    for (int i = 0; i < model.fields(); ++i) {
        CHECK(loaded.blocks[i].rank == model.blocks[i].rank);
        CHECK(loaded.blocks[i].dim == model.blocks[i].dim);
        CHECK(loaded.blocks[i].xdim == model.blocks[i].xdim);
        CHECK(same_bits(loaded.blocks[i].u, model.blocks[i].u));
        CHECK(same_bits(loaded.blocks[i].v, model.blocks[i].v));
        CHECK(same_bits(loaded.blocks[i].bias, model.blocks[i].bias));
    }

    // Saving the loaded model again reproduces the same bytes.
    auto path2 = tmp.file("model2.bin");
    save_model(path2, loaded);
    CHECK(fwltest::read_file(path) == fwltest::read_file(path2));
}

TEST_CASE("load: corrupt files are data errors") {
    TempDir tmp;
    auto model = fwltest::random_model({2, 3}, RankPolicy::constant(1), 5);
    auto path = tmp.file("model.bin");
    save_model(path, model);

    auto bytes = fwltest::read_file(path);
    auto truncated = tmp.file("trunc.bin");
    fwltest::write_file(truncated, bytes.substr(0, 10));
    CHECK_THROWS_AS(load_model(truncated), DataError);

    auto garbled = bytes;
    garbled[0] = 'X';
    auto bad_magic = tmp.file("magic.bin");
    fwltest::write_file(bad_magic, garbled);
    CHECK_THROWS_AS(load_model(bad_magic), DataError);

    CHECK_THROWS_AS(load_model(tmp.file("absent.bin")), DataError);
}

TEST_CASE("permuting fields consistently leaves the score unchanged") {
    const std::vector<int> cards = {2, 3, 4};
    const std::vector<int> perm = {2, 0, 1};  // new position p holds old field perm[p]
    auto model = fwltest::random_model(cards, RankPolicy::constant(2), 77);

    std::vector<int> cards_p(cards.size());
    for (std::size_t p = 0; p < perm.size(); ++p) cards_p[p] = cards[perm[p]];
    auto layout_p = FieldLayout::from_cards(cards_p);
    auto permuted = init_model(layout_p, model.policy, 0.0, 0);
    const int m = static_cast<int>(cards.size());
    for (int p = 0; p < m; ++p) {
        const int i = perm[p];
        const auto& src = model.blocks[i];
        auto& dst = permuted.blocks[p];
        REQUIRE(dst.rank == src.rank);
        dst.v = src.v;
        dst.bias = src.bias;
        // U columns are indexed by the other fields' concatenation order,
        // which the permutation reshuffles.
        for (int q = 0; q < m; ++q) {
            if (q == p) continue;
            const int j = perm[q];
            for (int k = 0; k < cards[static_cast<std::size_t>(j)]; ++k) {
                auto from = src.u_col(model.layout.xmi_position(i, j, k));
                auto to = dst.u_col(layout_p.xmi_position(p, q, k));
                std::copy(from.begin(), from.end(), to.begin());
            }
        }
    }

    for (const auto& inst : fwltest::random_instances(cards, 50, 31)) {
        EncodedInstance inst_p;
        inst_p.label = inst.label;
        inst_p.active.resize(inst.active.size());
        for (int p = 0; p < m; ++p) inst_p.active[p] = inst.active[perm[p]];
        CHECK(model.predict(inst) ==
              doctest::Approx(permuted.predict(inst_p)).epsilon(1e-12));
    }
}

}  // TEST_SUITE
