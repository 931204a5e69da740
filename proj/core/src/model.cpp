#include "fwl/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "fwl/common.hpp"

namespace fwl {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw DataError("truncated model file: " + path);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& out, double v) {
    auto u = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& in, const std::string& path) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw DataError("truncated model file: " + path);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(u);
}

constexpr char kMagic[8] = {'F', 'W', 'M', 'O', 'D', 'E', 'L', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

int rank_for_field(int cardinality, const RankPolicy& policy) {
    if (cardinality < 1) throw DataError("rank_for_field: cardinality must be >= 1");
    if (policy.mode == RankPolicy::Mode::constant) {
        if (policy.rank < 0) throw DataError("constant rank must be >= 0");
        if (policy.rank == 0) return 0;  // bias-only degenerate mode
        return std::min(policy.rank, cardinality);
    }
    if (policy.base <= 1.0) throw DataError("log_base rank policy requires base > 1");
    int r = static_cast<int>(std::llround(std::log(static_cast<double>(cardinality)) /
                                          std::log(policy.base)));
    return std::clamp(r, 1, cardinality);
}

long FieldWiseModel::parameter_count() const {
    long count = 0;
    for (const auto& b : blocks)
        count += static_cast<long>(b.rank) * b.xdim + static_cast<long>(b.rank) * b.dim + b.dim;
    return count;
}

double FieldWiseModel::predict(const EncodedInstance& inst) const {
    const int m = fields();
    double score = 0;
    for (int i = 0; i < m; ++i) {
        const FieldBlock& blk = blocks[static_cast<std::size_t>(i)];
        const int k = inst.active[static_cast<std::size_t>(i)];
        score += blk.bias[static_cast<std::size_t>(k)];
        if (blk.rank == 0) continue;
        auto vk = blk.v_col(k);
        for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            score += dot(
                blk.u_col(layout.xmi_position(i, j, inst.active[static_cast<std::size_t>(j)])),
                vk);
        }
    }
    return score;
}

double predict_score(const FieldWiseModel& model, const EncodedInstance& inst) {
    return model.predict(inst);
}

double predict_proba(double score) {
    if (score >= 0) return 1.0 / (1.0 + std::exp(-score));
    double e = std::exp(score);
    return e / (1.0 + e);
}

FieldWiseModel init_model(const FieldLayout& layout, const RankPolicy& policy, double init_scale,
                          std::uint64_t seed) {
    // Zero is the valid "all parameters start at zero" limit.
    if (!(init_scale >= 0)) throw DataError("init_scale must be >= 0");
    FieldWiseModel model;
    model.layout = layout;
    model.policy = policy;
    model.blocks.resize(static_cast<std::size_t>(layout.fields()));
    for (int i = 0; i < layout.fields(); ++i) {
        FieldBlock& blk = model.blocks[static_cast<std::size_t>(i)];
        blk.dim = layout.cards[static_cast<std::size_t>(i)];
        blk.rank = rank_for_field(blk.dim, policy);
        blk.xdim = layout.total - blk.dim;
        blk.bias.assign(static_cast<std::size_t>(blk.dim), 0.0);
        if (blk.rank == 0) continue;
        const double scale = init_scale / std::sqrt(static_cast<double>(blk.rank));
        Rng rng(seed, /*stream=*/static_cast<std::uint64_t>(i) + 1);
        blk.u.resize(static_cast<std::size_t>(blk.rank) * static_cast<std::size_t>(blk.xdim));
        blk.v.resize(static_cast<std::size_t>(blk.rank) * static_cast<std::size_t>(blk.dim));
        for (auto& w : blk.u) w = rng.uniform(-scale, scale);
        for (auto& w : blk.v) w = rng.uniform(-scale, scale);
    }
    return model;
}

std::vector<double> materialize_weights(const FieldWiseModel& model, int field,
                                        std::size_t max_elements) {
    const FieldBlock& blk = model.blocks[static_cast<std::size_t>(field)];
    const std::size_t rows = static_cast<std::size_t>(blk.xdim) + 1;
    const std::size_t cols = static_cast<std::size_t>(blk.dim);
    if (cols != 0 && rows > max_elements / cols)
        throw DataError("materialize_weights: " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " exceeds the element budget of " +
                        std::to_string(max_elements));

    std::vector<double> wb(rows * cols, 0.0);
    for (std::size_t c = 0; c < cols; ++c) {
        auto vc = blk.v_col(static_cast<int>(c));
        for (std::size_t r = 0; r + 1 < rows; ++r)
            wb[r * cols + c] = dot(blk.u_col(static_cast<long>(r)), vc);
        wb[(rows - 1) * cols + c] = blk.bias[c];
    }
    return wb;
}

FieldNorms field_norms(const FieldWiseModel& model, int field) {
    const FieldBlock& blk = model.blocks[static_cast<std::size_t>(field)];
    const int r = blk.rank;
    const int di = blk.dim;

    double bbar = 0;
    for (double b : blk.bias) bbar += b;
    bbar /= di;
    double bias_var = 0;
    for (double b : blk.bias) bias_var += (b - bbar) * (b - bbar);

    if (r == 0) return {std::sqrt(bias_var), std::abs(bbar)};

    // C = U U^T (r x r), accumulated column by column.
    const auto rs = static_cast<std::size_t>(r);
    std::vector<double> c(rs * rs, 0.0);
    for (long col = 0; col < blk.xdim; ++col) {
        auto uc = blk.u_col(col);
        for (std::size_t a = 0; a < rs; ++a)
            for (std::size_t b = 0; b < rs; ++b) c[a * rs + b] += uc[a] * uc[b];
    }

    std::vector<double> vbar(rs, 0.0);
    for (int k = 0; k < di; ++k) {
        auto vk = blk.v_col(k);
        for (std::size_t a = 0; a < rs; ++a) vbar[a] += vk[a];
    }
    for (auto& x : vbar) x /= di;

    auto quad = [&](std::span<const double> x) {
        double s = 0;
        for (std::size_t a = 0; a < rs; ++a) {
            double row = 0;
            for (std::size_t b = 0; b < rs; ++b) row += c[a * rs + b] * x[b];
            s += x[a] * row;
        }
        return s;
    };

    double var = bias_var;
    std::vector<double> diff(rs);
    for (int k = 0; k < di; ++k) {
        auto vk = blk.v_col(k);
        for (std::size_t a = 0; a < rs; ++a) diff[a] = vk[a] - vbar[a];
        var += quad(diff);
    }
    const double mean_sq = quad(vbar) + bbar * bbar;

    // Clamp tiny negatives from floating-point cancellation.
    return {std::sqrt(std::max(var, 0.0)), std::sqrt(std::max(mean_sq, 0.0))};
}

void save_model(const std::string& path, const FieldWiseModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file: " + path);
    out.write(kMagic, sizeof kMagic);
    put_u32(out, kFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(model.fields()));
    // Total dimension up front: each U block is r_i x (d - d_i), so the
    // reader needs d before it can size the first payload.
    put_u32(out, static_cast<std::uint32_t>(model.layout.total));
    for (const auto& blk : model.blocks) {
        put_u32(out, static_cast<std::uint32_t>(blk.dim));
        put_u32(out, static_cast<std::uint32_t>(blk.rank));
        // U and V travel row-major regardless of the in-memory layout.
        for (int row = 0; row < blk.rank; ++row)
            for (long col = 0; col < blk.xdim; ++col) put_f64(out, blk.u_col(col)[row]);
        for (int row = 0; row < blk.rank; ++row)
            for (int col = 0; col < blk.dim; ++col) put_f64(out, blk.v_col(col)[row]);
        for (double b : blk.bias) put_f64(out, b);
    }
    put_u32(out, static_cast<std::uint32_t>(model.vocab_ref.size()));
    out.write(model.vocab_ref.data(), static_cast<std::streamsize>(model.vocab_ref.size()));
    // The rank policy rides along so a reloaded model can answer policy
    // queries; it does not affect the stored weights.
    put_u32(out, model.policy.mode == RankPolicy::Mode::constant ? 0u : 1u);
    put_u32(out, static_cast<std::uint32_t>(model.policy.rank));
    put_f64(out, model.policy.base);
    if (!out) throw DataError("write failed: " + path);
}

FieldWiseModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw DataError("not a model file: " + path);
    const std::uint32_t version = get_u32(in, path);
    if (version != kFormatVersion)
        throw DataError("unsupported model format version " + std::to_string(version) + " in " +
                        path);

    const std::uint32_t m = get_u32(in, path);
    const std::uint32_t total = get_u32(in, path);
    if (m == 0 || m > (1u << 20) || total < m)
        throw DataError("corrupt model file: " + path);

    FieldWiseModel model;
    model.blocks.resize(m);
    std::vector<int> cards;
    cards.reserve(m);
    for (std::uint32_t i = 0; i < m; ++i) {
        FieldBlock& blk = model.blocks[i];
        const std::uint32_t dim = get_u32(in, path);
        const std::uint32_t rank = get_u32(in, path);
        if (dim == 0 || dim > total || rank > dim)
            throw DataError("corrupt model file (field " + std::to_string(i) + "): " + path);
        blk.dim = static_cast<int>(dim);
        blk.rank = static_cast<int>(rank);
        blk.xdim = static_cast<long>(total) - blk.dim;
        cards.push_back(blk.dim);
        blk.u.resize(static_cast<std::size_t>(blk.rank) * static_cast<std::size_t>(blk.xdim));
        blk.v.resize(static_cast<std::size_t>(blk.rank) * static_cast<std::size_t>(blk.dim));
        blk.bias.resize(dim);
        for (int row = 0; row < blk.rank; ++row)
            for (long col = 0; col < blk.xdim; ++col) blk.u_col(col)[row] = get_f64(in, path);
        for (int row = 0; row < blk.rank; ++row)
            for (int col = 0; col < blk.dim; ++col) blk.v_col(col)[row] = get_f64(in, path);
        for (auto& b : blk.bias) b = get_f64(in, path);
    }
    model.layout = FieldLayout::from_cards(cards);
    if (model.layout.total != static_cast<long>(total))
        throw DataError("corrupt model file (dimension mismatch): " + path);

    const std::uint32_t ref_len = get_u32(in, path);
    if (ref_len > (1u << 20)) throw DataError("corrupt model file: " + path);
    model.vocab_ref.resize(ref_len);
    in.read(model.vocab_ref.data(), static_cast<std::streamsize>(ref_len));
    if (!in && ref_len > 0) throw DataError("truncated model file: " + path);

    const std::uint32_t mode = get_u32(in, path);
    const std::uint32_t prank = get_u32(in, path);
    const double pbase = get_f64(in, path);
    model.policy.mode = mode == 0 ? RankPolicy::Mode::constant : RankPolicy::Mode::log_base;
    model.policy.rank = static_cast<int>(prank);
    model.policy.base = pbase;
    return model;
}

}  // namespace fwl
