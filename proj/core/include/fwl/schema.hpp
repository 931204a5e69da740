#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fwl/common.hpp"

namespace fwl {

enum class FieldKind { categorical, numeric };

struct FieldSpec {
    std::string name;
    FieldKind kind = FieldKind::categorical;
};

// Shapes shared by models and datasets: per-field cardinalities d_i, global
// offsets o_i = sum_{j<i} d_j, and the total feature count d.
struct FieldLayout {
    std::vector<int> cards;
    std::vector<long> offsets;
    long total = 0;  // d

    static FieldLayout from_cards(std::vector<int> cards) {
        FieldLayout l;
        l.cards = std::move(cards);
        l.offsets.reserve(l.cards.size());
        for (int c : l.cards) {
            if (c < 1) throw DataError("field cardinality must be >= 1");
            l.offsets.push_back(l.total);
            l.total += c;
        }
        return l;
    }

    int fields() const { return static_cast<int>(cards.size()); }

    // Column of (field j, local index k) within the x^(-i) concatenation,
    // i.e. all fields in order with field i removed.
    long xmi_position(int i, int j, int k) const {
        return offsets[j] + k - (j > i ? cards[i] : 0);
    }

    bool operator==(const FieldLayout& o) const = default;
};

// Per-field token dictionaries with one reserved rare/unseen bucket per field.
// Kept tokens get local indices 0..d_i-2 in first-appearance order; the rare
// bucket is always the last index d_i-1. Immutable once built.
class Vocabulary {
public:
    Vocabulary(std::vector<FieldSpec> specs,
               std::vector<std::vector<std::string>> kept_tokens)
        : specs_(std::move(specs)), kept_(std::move(kept_tokens)) {
        if (specs_.size() != kept_.size())
            throw DataError("vocabulary: specs/tokens field count mismatch");
        index_.resize(kept_.size());
        std::vector<int> cards;
        cards.reserve(kept_.size());
        for (std::size_t i = 0; i < kept_.size(); ++i) {
            for (std::size_t k = 0; k < kept_[i].size(); ++k) {
                auto [it, fresh] = index_[i].emplace(kept_[i][k], static_cast<int>(k));
                if (!fresh)
                    throw DataError("vocabulary: duplicate token '" + kept_[i][k] +
                                    "' in field " + std::to_string(i));
            }
            cards.push_back(static_cast<int>(kept_[i].size()) + 1);
        }
        layout_ = FieldLayout::from_cards(std::move(cards));
    }

    int num_fields() const { return layout_.fields(); }
    long total_features() const { return layout_.total; }           // d
    int cardinality(int field) const { return layout_.cards[field]; }  // d_i
    long offset(int field) const { return layout_.offsets[field]; }
    int rare_index(int field) const { return layout_.cards[field] - 1; }
    const FieldLayout& layout() const { return layout_; }
    const FieldSpec& spec(int field) const { return specs_[field]; }
    const std::vector<FieldSpec>& specs() const { return specs_; }

    // Kept token -> its local index; anything else -> the rare bucket.
    int index_of(int field, const std::string& token) const {
        const auto& m = index_[field];
        auto it = m.find(token);
        return it == m.end() ? rare_index(field) : it->second;
    }

    // Reverse lookup; nullptr for the rare bucket.
    const std::string* token_at(int field, int local_index) const {
        if (local_index < 0 || local_index >= cardinality(field))
            throw DataError("token_at: local index out of range");
        if (local_index == rare_index(field)) return nullptr;
        return &kept_[field][static_cast<std::size_t>(local_index)];
    }

    const std::vector<std::string>& kept_tokens(int field) const { return kept_[field]; }

private:
    std::vector<FieldSpec> specs_;
    std::vector<std::vector<std::string>> kept_;
    std::vector<std::unordered_map<std::string, int>> index_;
    FieldLayout layout_;
};

}  // namespace fwl
