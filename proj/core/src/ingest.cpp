#include "fwl/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "fwl/common.hpp"

namespace fwl {

namespace {

constexpr const char* kRareToken = "__rare__";

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delim, start);
        if (pos == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

std::int8_t parse_label(const std::string& cell, std::size_t row_number) {
    if (cell == "1" || cell == "+1") return 1;
    if (cell == "0" || cell == "-1") return -1;
    throw DataError("malformed label '" + cell + "' at row " + std::to_string(row_number));
}

}  // namespace

std::string log_transform_numeric(std::optional<double> v) {
    if (!v.has_value()) return "MISSING";
    double x = *v;
    if (!std::isfinite(x)) throw NumericError("non-finite numeric value");
    double t = x <= 2.0 ? std::floor(x) : std::floor(std::log(x) * std::log(x));
    return std::to_string(static_cast<long long>(t));
}

std::string numeric_token(const std::string& cell) {
    if (cell.empty()) return log_transform_numeric(std::nullopt);
    std::size_t consumed = 0;
    double x = 0;
    try {
        x = std::stod(cell, &consumed);
    } catch (const std::exception&) {
        throw DataError("unparseable numeric value '" + cell + "'");
    }
    if (consumed != cell.size()) throw DataError("unparseable numeric value '" + cell + "'");
    return log_transform_numeric(x);
}

RawTable read_delimited(const std::string& path, const ReadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file: " + path);

    RawTable table;
    std::string line;
    char delim = opts.delimiter;
    bool first = true;
    std::size_t row_number = 0;
    int m = -1;

    while (std::getline(in, line)) {
        ++row_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (delim == '\0') delim = line.find('\t') != std::string::npos ? '\t' : ',';

        auto cells = split_line(line, delim);
        if (first) {
            first = false;
            m = static_cast<int>(cells.size()) - 1;
            if (m < 1) throw DataError("need a label column plus at least one field: " + path);
            table.specs.resize(static_cast<std::size_t>(m));
            for (int i = 0; i < m; ++i) {
                table.specs[i].name = opts.has_header ? cells[i + 1] : "f" + std::to_string(i);
                table.specs[i].kind = opts.numeric_fields.count(i) ? FieldKind::numeric
                                                                   : FieldKind::categorical;
            }
            if (opts.has_header) continue;
        }
        if (static_cast<int>(cells.size()) != m + 1)
            throw DataError("row " + std::to_string(row_number) + " has " +
                            std::to_string(cells.size()) + " columns, expected " +
                            std::to_string(m + 1));

        table.labels.push_back(parse_label(cells[0], row_number));
        std::vector<std::string> row(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            if (table.specs[i].kind == FieldKind::numeric) {
                try {
                    row[i] = numeric_token(cells[i + 1]);
                } catch (const std::exception& e) {
                    throw DataError("field " + table.specs[i].name + ", row " +
                                    std::to_string(row_number) + ": " + e.what());
                }
            } else {
                row[i] = cells[i + 1];
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty()) throw DataError("no data rows in " + path);
    return table;
}

RawTable subset(const RawTable& table, const std::vector<std::size_t>& rows) {
    RawTable out;
    out.specs = table.specs;
    out.labels.reserve(rows.size());
    out.rows.reserve(rows.size());
    for (std::size_t r : rows) {
        out.labels.push_back(table.labels[r]);
        out.rows.push_back(table.rows[r]);
    }
    return out;
}

Vocabulary build_vocabulary(const RawTable& rows, const std::vector<int>& min_count) {
    if (rows.n() == 0) throw DataError("cannot build a vocabulary from an empty corpus");
    const int m = rows.fields();
    if (static_cast<int>(min_count.size()) != m)
        throw DataError("min_count must have one entry per field");
    for (int c : min_count)
        if (c < 1) throw DataError("min_count entries must be >= 1");

    std::vector<std::vector<std::string>> kept(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        std::unordered_map<std::string, long> freq;
        std::vector<const std::string*> appearance;
        for (const auto& row : rows.rows) {
            auto [it, fresh] = freq.emplace(row[i], 0);
            ++it->second;
            if (fresh) appearance.push_back(&it->first);
        }
        for (const std::string* tok : appearance)
            if (freq[*tok] >= min_count[i]) kept[i].push_back(*tok);
    }
    return Vocabulary(rows.specs, std::move(kept));
}

EncodedInstance encode_instance(const std::vector<std::string>& row, std::int8_t label,
                                const Vocabulary& vocab) {
    if (static_cast<int>(row.size()) != vocab.num_fields())
        throw DataError("row has " + std::to_string(row.size()) + " fields, vocabulary has " +
                        std::to_string(vocab.num_fields()));
    EncodedInstance inst;
    inst.active.resize(row.size());
    for (int i = 0; i < vocab.num_fields(); ++i)
        inst.active[i] = vocab.index_of(i, row[i]);
    inst.label = label;
    return inst;
}

Dataset encode_table(const RawTable& rows, std::shared_ptr<const Vocabulary> vocab) {
    Dataset data;
    data.vocab = std::move(vocab);
    data.instances.reserve(rows.n());
    for (std::size_t r = 0; r < rows.n(); ++r)
        data.instances.push_back(encode_instance(rows.rows[r], rows.labels[r], *data.vocab));
    return data;
}

std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n,
                                                      const std::array<double, 3>& ratios,
                                                      std::uint64_t seed) {
    if (n < 3) throw DataError("need at least 3 instances to split");
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9) throw DataError("split ratios must sum to 1");
    for (double r : ratios)
        if (r <= 0) throw DataError("split ratios must be positive");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed, /*stream=*/0x5b17);
    shuffle(perm, rng);

    auto nd = static_cast<double>(n);
    std::size_t c1 = static_cast<std::size_t>(std::llround(nd * ratios[0]));
    std::size_t c2 = static_cast<std::size_t>(std::llround(nd * (ratios[0] + ratios[1])));
    c1 = std::min(c1, n);
    c2 = std::clamp(c2, c1, n);

    std::array<std::vector<std::size_t>, 3> out;
    out[0].assign(perm.begin(), perm.begin() + c1);
    out[1].assign(perm.begin() + c1, perm.begin() + c2);
    out[2].assign(perm.begin() + c2, perm.end());
    return out;
}

std::array<Dataset, 3> split_dataset(const Dataset& data, const std::array<double, 3>& ratios,
                                     std::uint64_t seed) {
    auto idx = split_indices(data.n(), ratios, seed);
    std::array<Dataset, 3> out;
    for (int s = 0; s < 3; ++s) {
        out[s].vocab = data.vocab;
        out[s].instances.reserve(idx[s].size());
        for (std::size_t r : idx[s]) out[s].instances.push_back(data.instances[r]);
    }
    return out;
}

void write_vocabulary(const std::string& path, const Vocabulary& vocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write vocabulary file: " + path);
    out << "FWVOCAB 1 m=" << vocab.num_fields() << " d=" << vocab.total_features() << "\n";
    for (int i = 0; i < vocab.num_fields(); ++i) {
        const auto& kept = vocab.kept_tokens(i);
        for (std::size_t k = 0; k < kept.size(); ++k) {
            if (kept[k].find('\t') != std::string::npos ||
                kept[k].find('\n') != std::string::npos)
                throw DataError("token contains tab/newline, cannot serialize: field " +
                                std::to_string(i));
            out << i << '\t' << kept[k] << '\t' << k << "\n";
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

Vocabulary load_vocabulary(const std::string& path, std::vector<FieldSpec> specs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open vocabulary file: " + path);
    std::string header;
    if (!std::getline(in, header)) throw DataError("empty vocabulary file: " + path);

    int m = 0;
    long d = 0;
    if (std::sscanf(header.c_str(), "FWVOCAB 1 m=%d d=%ld", &m, &d) != 2)
        throw DataError("bad vocabulary header: " + header);
    if (m < 1) throw DataError("bad field count in vocabulary header");

    std::vector<std::vector<std::string>> kept(static_cast<std::size_t>(m));
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_line(line, '\t');
        if (cells.size() != 3)
            throw DataError("bad vocabulary line " + std::to_string(line_no) + " in " + path);
        int field = std::stoi(cells[0]);
        int local = std::stoi(cells[2]);
        if (field < 0 || field >= m)
            throw DataError("field index out of range at line " + std::to_string(line_no));
        auto& toks = kept[field];
        if (local != static_cast<int>(toks.size()))
            throw DataError("non-sequential local index at line " + std::to_string(line_no));
        toks.push_back(cells[1]);
    }

    if (specs.empty()) {
        specs.resize(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) specs[i].name = "f" + std::to_string(i);
    }
    if (static_cast<int>(specs.size()) != m)
        throw DataError("vocabulary has " + std::to_string(m) + " fields, specs have " +
                        std::to_string(specs.size()));

    Vocabulary vocab(std::move(specs), std::move(kept));
    if (vocab.total_features() != d)
        throw DataError("vocabulary header d=" + std::to_string(d) + " but tokens imply d=" +
                        std::to_string(vocab.total_features()));
    return vocab;
}

void write_dataset(const std::string& path, const Dataset& data, char delimiter) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset file: " + path);
    const Vocabulary& vocab = *data.vocab;
    for (const auto& inst : data.instances) {
        out << (inst.label > 0 ? '1' : '0');
        for (int i = 0; i < vocab.num_fields(); ++i) {
            const std::string* tok = vocab.token_at(i, inst.active[i]);
            out << delimiter << (tok ? *tok : kRareToken);
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace fwl
