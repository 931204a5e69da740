#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "fwl/schema.hpp"

namespace fwl {

// One-hot semantics: exactly one active local index per field.
struct EncodedInstance {
    std::vector<std::int32_t> active;  // active[i] in [0, d_i)
    std::int8_t label = 1;             // +1 or -1

    bool operator==(const EncodedInstance&) const = default;
};

struct Dataset {
    std::shared_ptr<const Vocabulary> vocab;
    std::vector<EncodedInstance> instances;

    std::size_t n() const { return instances.size(); }
    const FieldLayout& layout() const { return vocab->layout(); }
};

}  // namespace fwl
