#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "fwl/ingest.hpp"
#include "test_util.hpp"

using namespace fwl;
using fwltest::TempDir;

namespace {

RawTable gender_corpus() {
    RawTable t;
    t.specs = {{"Gender", FieldKind::categorical}};
    t.labels = {1, -1, 1};
    t.rows = {{"Male"}, {"Female"}, {"Male"}};
    return t;
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("log transform: missing, small, and large values") {
    CHECK(log_transform_numeric(std::nullopt) == "MISSING");
    CHECK(log_transform_numeric(1.0) == "1");
    CHECK(log_transform_numeric(2.0) == "2");
    // floor(ln(100)^2) = floor(21.207...) = 21
    CHECK(log_transform_numeric(100.0) == "21");
    // just above the threshold: ln(2.5)^2 = 0.839... -> "0"
    CHECK(log_transform_numeric(2.5) == "0");
    // v <= 2 branch uses floor, so negatives round down
    CHECK(log_transform_numeric(-1.5) == "-2");
    CHECK_THROWS_AS(log_transform_numeric(std::nan("")), NumericError);
    CHECK_THROWS_AS(log_transform_numeric(std::numeric_limits<double>::infinity()), NumericError);
}

TEST_CASE("numeric token: empty cell is missing, junk is an error") {
    CHECK(numeric_token("") == "MISSING");
    CHECK(numeric_token("100") == "21");
    CHECK(numeric_token("1") == "1");
    CHECK_THROWS_AS(numeric_token("abc"), DataError);
    CHECK_THROWS_AS(numeric_token("12x"), DataError);
}

TEST_CASE("vocabulary: min-count grouping on the Gender corpus") {
    auto t = gender_corpus();

    SUBCASE("threshold 1 keeps both tokens") {
        auto vocab = build_vocabulary(t, {1});
        CHECK(vocab.cardinality(0) == 3);  // Male, Female, rare
        CHECK(vocab.index_of(0, "Male") == 0);
        CHECK(vocab.index_of(0, "Female") == 1);
        CHECK(vocab.rare_index(0) == 2);
    }
    SUBCASE("threshold 2 folds Female into the rare bucket") {
        auto vocab = build_vocabulary(t, {2});
        CHECK(vocab.cardinality(0) == 2);
        CHECK(vocab.index_of(0, "Male") == 0);
        CHECK(vocab.index_of(0, "Female") == vocab.rare_index(0));
    }
    SUBCASE("threshold above every count leaves only the rare bucket") {
        auto vocab = build_vocabulary(t, {10});
        CHECK(vocab.cardinality(0) == 1);
        CHECK(vocab.index_of(0, "Male") == 0);
        CHECK(vocab.rare_index(0) == 0);
    }
}

TEST_CASE("vocabulary: kept tokens are indexed in first-appearance order") {
    RawTable t;
    t.specs = {{"f0", FieldKind::categorical}};
    t.labels = {1, 1, 1, 1};
    t.rows = {{"c"}, {"a"}, {"c"}, {"b"}};
    auto vocab = build_vocabulary(t, {1});
    CHECK(vocab.index_of(0, "c") == 0);
    CHECK(vocab.index_of(0, "a") == 1);
    CHECK(vocab.index_of(0, "b") == 2);
}

TEST_CASE("vocabulary: empty corpus and bad min_count are errors") {
    RawTable empty;
    empty.specs = {{"f0", FieldKind::categorical}};
    CHECK_THROWS_AS(build_vocabulary(empty, {1}), DataError);

    auto t = gender_corpus();
    CHECK_THROWS_AS(build_vocabulary(t, {0}), DataError);
    CHECK_THROWS_AS(build_vocabulary(t, {1, 1}), DataError);  // wrong field count
}

TEST_CASE("vocabulary: built twice from the same corpus is identical") {
    auto t = gender_corpus();
    auto a = build_vocabulary(t, {1});
    auto b = build_vocabulary(t, {1});
    REQUIRE(a.num_fields() == b.num_fields());
    for (int i = 0; i < a.num_fields(); ++i) CHECK(a.kept_tokens(i) == b.kept_tokens(i));
    CHECK(a.layout() == b.layout());
}

TEST_CASE("encoding: one-hot indices and the unseen-token rule") {
    auto t = gender_corpus();
    auto vocab = build_vocabulary(t, {1});
    auto male = encode_instance({"Male"}, 1, vocab);
    CHECK(male.active == std::vector<std::int32_t>{0});
    CHECK(male.label == 1);
    auto female = encode_instance({"Female"}, -1, vocab);
    CHECK(female.active == std::vector<std::int32_t>{1});
    auto unseen = encode_instance({"Nonbinary"}, 1, vocab);
    CHECK(unseen.active == std::vector<std::int32_t>{vocab.rare_index(0)});
}

TEST_CASE("encoding: round trip holds for every kept token") {
    RawTable t;
    t.specs = {{"f0", FieldKind::categorical}, {"f1", FieldKind::categorical}};
    t.labels = {1, -1, 1, -1, 1};
    t.rows = {{"a", "x"}, {"b", "y"}, {"a", "z"}, {"c", "x"}, {"b", "x"}};
    auto vocab = build_vocabulary(t, {1, 1});
    for (int i = 0; i < vocab.num_fields(); ++i) {
        for (const auto& tok : vocab.kept_tokens(i)) {
            int idx = vocab.index_of(i, tok);
            const std::string* back = vocab.token_at(i, idx);
            REQUIRE(back != nullptr);
            CHECK(*back == tok);
        }
        CHECK(vocab.token_at(i, vocab.rare_index(i)) == nullptr);
    }
}

TEST_CASE("encoded instances: exactly m active positions, all in range") {
    auto t = gender_corpus();
    auto vocab = std::make_shared<Vocabulary>(build_vocabulary(t, {1}));
    auto data = encode_table(t, vocab);
    REQUIRE(data.n() == 3);
    long total = 0;
    for (int i = 0; i < vocab->num_fields(); ++i) total += vocab->cardinality(i);
    CHECK(total == vocab->total_features());
    for (const auto& inst : data.instances) {
        REQUIRE(static_cast<int>(inst.active.size()) == vocab->num_fields());
        for (int i = 0; i < vocab->num_fields(); ++i) {
            CHECK(inst.active[i] >= 0);
            CHECK(inst.active[i] < vocab->cardinality(i));
        }
    }
}

TEST_CASE("split: exact sizes, disjoint cover, determinism") {
    auto parts = split_indices(10, {0.8, 0.1, 0.1}, 7);
    CHECK(parts[0].size() == 8);
    CHECK(parts[1].size() == 1);
    CHECK(parts[2].size() == 1);

    std::set<std::size_t> seen;
    for (const auto& p : parts)
        for (auto idx : p) {
            CHECK(idx < 10);
            CHECK(seen.insert(idx).second);  // no index appears twice
        }
    CHECK(seen.size() == 10);

    auto again = split_indices(10, {0.8, 0.1, 0.1}, 7);
    CHECK(parts == again);
    auto other_seed = split_indices(10, {0.8, 0.1, 0.1}, 8);
    CHECK(parts != other_seed);
}

TEST_CASE("split: n < 3 and bad ratios are errors") {
    CHECK_THROWS_AS(split_indices(2, {0.8, 0.1, 0.1}, 0), DataError);
    CHECK_THROWS_AS(split_indices(10, {0.5, 0.2, 0.2}, 0), DataError);  // does not sum to 1
    CHECK_THROWS_AS(split_indices(10, {1.2, -0.1, -0.1}, 0), DataError);
}

TEST_CASE("split: full-scale partition sizes stay within one of the ratios") {
    // 45,840,617 rows at 0.8/0.1/0.1. Sizes must each be within one instance
    // of n*ratio; with cumulative rounding they come out to the values below.
    const std::size_t n = 45840617;
    auto parts = split_indices(n, {0.8, 0.1, 0.1}, 1);
    CHECK(parts[0].size() == 36672494);
    CHECK(parts[1].size() == 4584061);
    CHECK(parts[2].size() == 4584062);
    CHECK(parts[0].size() + parts[1].size() + parts[2].size() == n);
    CHECK(std::abs(static_cast<double>(parts[0].size()) - 0.8 * static_cast<double>(n)) <= 1.0);
    CHECK(std::abs(static_cast<double>(parts[1].size()) - 0.1 * static_cast<double>(n)) <= 1.0);
    CHECK(std::abs(static_cast<double>(parts[2].size()) - 0.1 * static_cast<double>(n)) <= 1.0);
}

TEST_CASE("split_dataset: shares the vocabulary and partitions the instances") {
    RawTable t;
    t.specs = {{"f0", FieldKind::categorical}};
    t.labels.assign(10, 1);
    for (int i = 0; i < 10; ++i) t.rows.push_back({"tok" + std::to_string(i % 4)});
    auto vocab = std::make_shared<Vocabulary>(build_vocabulary(t, {1}));
    auto data = encode_table(t, vocab);
    auto [train, val, test] = split_dataset(data, {0.8, 0.1, 0.1}, 3);
    CHECK(train.n() == 8);
    CHECK(val.n() == 1);
    CHECK(test.n() == 1);
    CHECK(train.vocab.get() == data.vocab.get());
    CHECK(val.vocab.get() == data.vocab.get());

    // The three parts together are a permutation of the original instances.
    std::vector<EncodedInstance> all;
    for (const auto* part : {&train, &val, &test})
        all.insert(all.end(), part->instances.begin(), part->instances.end());
    auto key = [](const EncodedInstance& e) { return e.active; };
    std::vector<std::vector<std::int32_t>> got, want;
    for (const auto& e : all) got.push_back(key(e));
    for (const auto& e : data.instances) want.push_back(key(e));
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    CHECK(got == want);
}

TEST_CASE("read_delimited: tabs, headers, numeric fields, label forms") {
    TempDir tmp;
    auto path = tmp.file("data.tsv");
    fwltest::write_file(path,
                        "label\tcountry\tclicks\n"
                        "1\tUS\t100\n"
                        "0\tJP\t1\n"
                        "-1\tUS\t\n");
    ReadOptions opts;
    opts.has_header = true;
    opts.numeric_fields = {1};
    auto t = read_delimited(path, opts);
    REQUIRE(t.fields() == 2);
    CHECK(t.specs[0].name == "country");
    CHECK(t.specs[1].name == "clicks");
    CHECK(t.specs[0].kind == FieldKind::categorical);
    CHECK(t.specs[1].kind == FieldKind::numeric);
    REQUIRE(t.n() == 3);
    CHECK(t.labels == std::vector<std::int8_t>{1, -1, -1});
    CHECK(t.rows[0] == std::vector<std::string>{"US", "21"});
    CHECK(t.rows[1] == std::vector<std::string>{"JP", "1"});
    CHECK(t.rows[2] == std::vector<std::string>{"US", "MISSING"});
}

TEST_CASE("read_delimited: comma autodetection and explicit delimiter") {
    TempDir tmp;
    auto path = tmp.file("data.csv");
    fwltest::write_file(path, "1,a,b\n0,c,d\n");
    auto t = read_delimited(path, {});
    REQUIRE(t.fields() == 2);
    CHECK(t.rows[0] == std::vector<std::string>{"a", "b"});

    ReadOptions pipe;
    pipe.delimiter = '|';
    auto path2 = tmp.file("data.psv");
    fwltest::write_file(path2, "1|a|b\n");
    auto t2 = read_delimited(path2, pipe);
    CHECK(t2.rows[0] == std::vector<std::string>{"a", "b"});
}

TEST_CASE("read_delimited: malformed input names the offending row") {
    TempDir tmp;
    auto bad_label = tmp.file("bad_label.tsv");
    fwltest::write_file(bad_label, "1\ta\nmaybe\tb\n");
    CHECK_THROWS_WITH_AS(read_delimited(bad_label, {}), doctest::Contains("row 2"), DataError);

    auto ragged = tmp.file("ragged.tsv");
    fwltest::write_file(ragged, "1\ta\tb\n0\tc\n");
    CHECK_THROWS_AS(read_delimited(ragged, {}), DataError);

    auto bad_numeric = tmp.file("bad_numeric.tsv");
    fwltest::write_file(bad_numeric, "1\tounces\n");
    ReadOptions opts;
    opts.numeric_fields = {0};
    CHECK_THROWS_AS(read_delimited(bad_numeric, opts), DataError);

    CHECK_THROWS_AS(read_delimited(tmp.file("missing.tsv"), {}), DataError);
}

TEST_CASE("subset: picks rows by index") {
    auto t = gender_corpus();
    auto s = subset(t, {2, 0});
    REQUIRE(s.n() == 2);
    CHECK(s.rows[0] == std::vector<std::string>{"Male"});
    CHECK(s.labels[0] == 1);
    CHECK(s.rows[1] == std::vector<std::string>{"Male"});
    CHECK(s.specs.size() == t.specs.size());
}

TEST_CASE("vocabulary sidecar: write/load round trip") {
    RawTable t;
    t.specs = {{"country", FieldKind::categorical}, {"clicks", FieldKind::numeric}};
    t.labels = {1, -1, 1};
    t.rows = {{"US", "21"}, {"JP", "1"}, {"US", "MISSING"}};
    auto vocab = build_vocabulary(t, {1, 1});

    TempDir tmp;
    auto path = tmp.file("vocab.txt");
    write_vocabulary(path, vocab);

    auto loaded = load_vocabulary(path, t.specs);
    REQUIRE(loaded.num_fields() == vocab.num_fields());
    CHECK(loaded.layout() == vocab.layout());
    for (int i = 0; i < vocab.num_fields(); ++i) {
        CHECK(loaded.kept_tokens(i) == vocab.kept_tokens(i));
        CHECK(loaded.spec(i).name == t.specs[i].name);
        CHECK(loaded.spec(i).kind == t.specs[i].kind);
    }

    // Without specs the loader defaults to categorical f0..f{m-1}.
    auto bare = load_vocabulary(path);
    CHECK(bare.num_fields() == vocab.num_fields());
    CHECK(bare.spec(0).name == "f0");
    CHECK(bare.layout() == vocab.layout());

    CHECK_THROWS_AS(load_vocabulary(tmp.file("nope.txt")), DataError);
}

TEST_CASE("write_dataset: instances survive a write/read/encode cycle") {
    RawTable t;
    t.specs = {{"f0", FieldKind::categorical}, {"f1", FieldKind::categorical}};
    t.labels = {1, -1, 1};
    t.rows = {{"a", "x"}, {"b", "y"}, {"a", "y"}};
    auto vocab = std::make_shared<Vocabulary>(build_vocabulary(t, {2, 1}));  // "b" goes rare
    auto data = encode_table(t, vocab);

    TempDir tmp;
    auto path = tmp.file("round.tsv");
    write_dataset(path, data);
    auto back = read_delimited(path, {});
    auto redata = encode_table(back, vocab);
    REQUIRE(redata.n() == data.n());
    for (std::size_t i = 0; i < data.n(); ++i) CHECK(redata.instances[i] == data.instances[i]);
}

}  // TEST_SUITE
