#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fwl/data.hpp"
#include "fwl/schema.hpp"

namespace fwl {

// Discretization for numeric fields (the Criteo-winner recipe):
//   missing        -> "MISSING"
//   v <= 2         -> integer string of floor(v)
//   v >  2         -> integer string of floor(ln(v)^2)
// NaN/inf raise NumericError; callers add field/row context.
std::string log_transform_numeric(std::optional<double> v);

// Raw numeric cell -> token. Empty cell means missing; parse failures raise
// DataError naming the offending text.
std::string numeric_token(const std::string& cell);

struct ReadOptions {
    char delimiter = '\0';         // '\0' = auto-detect (tab if present, else comma)
    bool has_header = false;
    std::set<int> numeric_fields;  // field indices (0-based, label column excluded)
};

// Rows after label parsing and numeric log-transform; all cells are tokens.
struct RawTable {
    std::vector<FieldSpec> specs;
    std::vector<std::int8_t> labels;
    std::vector<std::vector<std::string>> rows;

    std::size_t n() const { return rows.size(); }
    int fields() const { return static_cast<int>(specs.size()); }
};

// Delimited text, label column first ("1" -> +1, "0"/"-1" -> -1). Field names
// come from the header when present, else f0..f{m-1}.
RawTable read_delimited(const std::string& path, const ReadOptions& opts = {});

// Subset view used to fit vocabularies on a split.
RawTable subset(const RawTable& table, const std::vector<std::size_t>& rows);

// min_count is per field (size m, every entry >= 1). Tokens below their
// field's threshold share the rare bucket; kept tokens are indexed in
// first-appearance order.
Vocabulary build_vocabulary(const RawTable& rows, const std::vector<int>& min_count);

EncodedInstance encode_instance(const std::vector<std::string>& row, std::int8_t label,
                                const Vocabulary& vocab);

Dataset encode_table(const RawTable& rows, std::shared_ptr<const Vocabulary> vocab);

// Deterministic (seeded) partition into train/val/test index sets; sizes are
// cumulative-rounded so each is within one instance of n*ratio.
std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n,
                                                      const std::array<double, 3>& ratios,
                                                      std::uint64_t seed);

std::array<Dataset, 3> split_dataset(const Dataset& data, const std::array<double, 3>& ratios,
                                     std::uint64_t seed);

// Sidecar format: header "FWVOCAB 1 m=<m> d=<d>", then one line per kept
// token "field_index<TAB>token<TAB>local_index".
void write_vocabulary(const std::string& path, const Vocabulary& vocab);

// Field names/kinds are not part of the sidecar; pass them in (or pass an
// empty list to default to all-categorical f0..f{m-1}).
Vocabulary load_vocabulary(const std::string& path, std::vector<FieldSpec> specs = {});

// Writes instances in the same delimited format read_delimited accepts.
// Rare-bucket indices are emitted as "__rare__" (not a kept token, so the
// round trip maps them back to the rare bucket).
void write_dataset(const std::string& path, const Dataset& data, char delimiter = '\t');

}  // namespace fwl
