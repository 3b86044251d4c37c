// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fiun/dataset.hpp"
#include "fiun/error.hpp"
#include "fiun/rng.hpp"

using namespace fiun;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

// Multiset of (feature row, label) pairs, for permutation-insensitive
// comparisons.
std::multiset<std::pair<std::vector<float>, int32_t>> row_multiset(const LabeledDataset& ds) {
    std::multiset<std::pair<std::vector<float>, int32_t>> out;
    for (int64_t i = 0; i < ds.size(); ++i)
        out.emplace(std::vector<float>(ds.row(i), ds.row(i) + ds.dim), ds.labels[i]);
    return out;
}

} // namespace

TEST_CASE("normalize_label_set sorts and dedups") {
    CHECK(normalize_label_set({3, 1, 3, 0}) == LabelSet{0, 1, 3});
    CHECK(normalize_label_set({}) == LabelSet{});
    CHECK(label_set_contains({0, 2, 5}, 2));
    CHECK_FALSE(label_set_contains({0, 2, 5}, 3));
    CHECK(label_set_union({0, 1}, {1, 4}) == LabelSet{0, 1, 4});
    CHECK(label_set_intersection({0, 1, 2}, {1, 2, 9}) == LabelSet{1, 2});
}

TEST_CASE("blobs in the noise-free limit sit on the centers") {
    BlobSpec spec;
    spec.num_classes = 2;
    spec.dim = 1;
    spec.samples_per_class = 1;
    spec.center_scale = 1.0;
    spec.noise_sigma = 1e-9;
    spec.seed = 5;
    LabeledDataset ds = synth_gaussian_blobs(spec);
    REQUIRE(ds.size() == 2);
    CHECK(ds.labels == std::vector<int32_t>{0, 1});
    CHECK(ds.features[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(ds.features[1] == doctest::Approx(-1.0).epsilon(1e-5));
}

TEST_CASE("blobs are a pure function of the BlobSpec") {
    BlobSpec spec;
    spec.num_classes = 4;
    spec.dim = 6;
    spec.samples_per_class = 20;
    spec.seed = 77;
    LabeledDataset a = synth_gaussian_blobs(spec);
    LabeledDataset b = synth_gaussian_blobs(spec);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    spec.seed = 78;
    LabeledDataset c = synth_gaussian_blobs(spec);
    CHECK(a.features != c.features);
}

TEST_CASE("blob centers have magnitude center_scale") {
    BlobSpec spec;
    spec.num_classes = 10;
    spec.dim = 20;
    spec.center_scale = 7.0;
    spec.seed = 3;
    std::vector<double> c = make_blob_centers(spec);
    REQUIRE(c.size() == 200);
    for (int k = 0; k < 10; ++k) {
        double norm2 = 0.0;
        for (int j = 0; j < 20; ++j) norm2 += c[k * 20 + j] * c[k * 20 + j];
        CHECK(std::sqrt(norm2) == doctest::Approx(7.0).epsilon(1e-9));
    }
}

TEST_CASE("blobs reject invalid specs") {
    BlobSpec spec;
    spec.num_classes = 0;
    CHECK_THROWS_AS(synth_gaussian_blobs(spec), ParamError);
    spec = BlobSpec{};
    spec.samples_per_class = 0;
    CHECK_THROWS_AS(synth_gaussian_blobs(spec), ParamError);
    spec = BlobSpec{};
    spec.center_scale = 0.0;
    CHECK_THROWS_AS(synth_gaussian_blobs(spec), ParamError);
}

TEST_CASE("split_by_labels partitions rows in order") {
    LabeledDataset ds;
    ds.num_classes = 3;
    ds.dim = 1;
    ds.features = {10.f, 11.f, 12.f, 13.f};
    ds.labels = {0, 1, 0, 2};

    auto [d_f, d_r] = split_by_labels(ds, {0});
    CHECK(d_f.labels == std::vector<int32_t>{0, 0});
    CHECK(d_f.features == std::vector<float>{10.f, 12.f});
    CHECK(d_r.labels == std::vector<int32_t>{1, 2});
    CHECK(d_r.features == std::vector<float>{11.f, 13.f});
    CHECK(d_f.size() + d_r.size() == ds.size());

    auto [e_f, e_r] = split_by_labels(ds, {});
    CHECK(e_f.size() == 0);
    CHECK(e_r.features == ds.features);

    auto [a_f, a_r] = split_by_labels(ds, {0, 1, 2});
    CHECK(a_r.size() == 0);
    CHECK(a_f.features == ds.features);
}

TEST_CASE("shard_dataset balances and partitions") {
    BlobSpec spec;
    spec.num_classes = 2;
    spec.dim = 3;
    spec.samples_per_class = 5;
    spec.seed = 1;
    LabeledDataset ds = synth_gaussian_blobs(spec); // N = 10

    SUBCASE("N=10, k=5: five disjoint shards of size 2") {
        std::vector<LabeledDataset> shards = shard_dataset(ds, 5, 99);
        REQUIRE(shards.size() == 5);
        std::multiset<std::pair<std::vector<float>, int32_t>> all;
        for (const auto& s : shards) {
            CHECK(s.size() == 2);
            auto rows = row_multiset(s);
            all.insert(rows.begin(), rows.end());
        }
        CHECK(all == row_multiset(ds));
    }

    SUBCASE("k=1 returns a permutation of the dataset") {
        std::vector<LabeledDataset> shards = shard_dataset(ds, 1, 99);
        REQUIRE(shards.size() == 1);
        CHECK(row_multiset(shards[0]) == row_multiset(ds));
    }

    SUBCASE("N=7, k=3 gives sizes {3,2,2}") {
        LabeledDataset seven;
        seven.num_classes = 2;
        seven.dim = 1;
        for (int i = 0; i < 7; ++i) {
            seven.features.push_back(static_cast<float>(i));
            seven.labels.push_back(i % 2);
        }
        std::vector<LabeledDataset> shards = shard_dataset(seven, 3, 5);
        REQUIRE(shards.size() == 3);
        std::multiset<int64_t> sizes;
        for (const auto& s : shards) sizes.insert(s.size());
        CHECK(sizes == std::multiset<int64_t>{2, 2, 3});
    }

    SUBCASE("k > N is rejected") {
        CHECK_THROWS_AS(shard_dataset(ds, 11, 0), ParamError);
        CHECK_THROWS_AS(shard_dataset(ds, 0, 0), ParamError);
    }

    SUBCASE("deterministic given seed") {
        auto a = shard_dataset(ds, 3, 42);
        auto b = shard_dataset(ds, 3, 42);
        for (size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].features == b[i].features);
            CHECK(a[i].labels == b[i].labels);
        }
    }
}

TEST_CASE("shard property: disjoint and exhaustive over random inputs") {
    Rng rng(2024);
    for (int trial = 0; trial < 25; ++trial) {
        int64_t n = 1 + static_cast<int64_t>(rng.below(40));
        int32_t k = 1 + static_cast<int32_t>(rng.below(static_cast<uint64_t>(n)));
        LabeledDataset ds;
        ds.num_classes = 3;
        ds.dim = 2;
        for (int64_t i = 0; i < n; ++i) {
            ds.features.push_back(static_cast<float>(rng.gauss()));
            ds.features.push_back(static_cast<float>(i)); // unique tag per row
            ds.labels.push_back(static_cast<int32_t>(rng.below(3)));
        }
        std::vector<LabeledDataset> shards = shard_dataset(ds, k, rng.next_u64());
        REQUIRE(static_cast<int32_t>(shards.size()) == k);
        int64_t total = 0, max_sz = 0, min_sz = n;
        std::multiset<std::pair<std::vector<float>, int32_t>> all;
        for (const auto& s : shards) {
            total += s.size();
            max_sz = std::max(max_sz, s.size());
            min_sz = std::min(min_sz, s.size());
            auto rows = row_multiset(s);
            all.insert(rows.begin(), rows.end());
        }
        CHECK(total == n);
        CHECK(max_sz - min_sz <= 1);
        CHECK(all == row_multiset(ds));
    }
}

TEST_CASE("build_overlap_label_sets shares a core and keeps the rest disjoint") {
    SUBCASE("50% overlap of 4-label sets shares exactly 2 labels") {
        std::vector<LabelSet> sets = build_overlap_label_sets(2, 4, 0.5, 10);
        REQUIRE(sets.size() == 2);
        CHECK(sets[0].size() == 4);
        CHECK(sets[1].size() == 4);
        CHECK(label_set_intersection(sets[0], sets[1]).size() == 2);
    }
    SUBCASE("zero overlap is pairwise disjoint") {
        std::vector<LabelSet> sets = build_overlap_label_sets(3, 3, 0.0, 9);
        CHECK(label_set_intersection(sets[0], sets[1]).empty());
        CHECK(label_set_intersection(sets[0], sets[2]).empty());
        CHECK(label_set_intersection(sets[1], sets[2]).empty());
    }
    SUBCASE("full overlap makes identical sets") {
        std::vector<LabelSet> sets = build_overlap_label_sets(3, 4, 1.0, 6);
        CHECK(sets[0] == sets[1]);
        CHECK(sets[1] == sets[2]);
    }
    SUBCASE("core size is the ceiling of fraction * per_node") {
        // ceil(0.4 * 4) = 2 core labels, 2 private labels per set.
        std::vector<LabelSet> sets = build_overlap_label_sets(2, 4, 0.4, 10);
        CHECK(label_set_intersection(sets[0], sets[1]).size() == 2);
        // ceil(0.2 * 4) = 1.
        sets = build_overlap_label_sets(2, 4, 0.2, 10);
        CHECK(label_set_intersection(sets[0], sets[1]).size() == 1);
    }
    SUBCASE("infeasible demands are rejected") {
        // 2 sets of 4 with no overlap need 8 classes; 6 are not enough.
        CHECK_THROWS_AS(build_overlap_label_sets(2, 4, 0.0, 6), ParamError);
        CHECK_THROWS_AS(build_overlap_label_sets(2, 4, -0.1, 10), ParamError);
        CHECK_THROWS_AS(build_overlap_label_sets(2, 4, 1.5, 10), ParamError);
    }
    SUBCASE("labels lie in range and non-core labels never repeat") {
        for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            std::vector<LabelSet> sets = build_overlap_label_sets(3, 4, frac, 20);
            LabelSet core = sets[0];
            for (const auto& s : sets) core = label_set_intersection(core, s);
            CHECK(static_cast<int>(core.size()) ==
                  static_cast<int>(std::ceil(frac * 4)));
            std::map<int32_t, int> count;
            for (const auto& s : sets) {
                CHECK(s.size() == 4);
                for (int32_t l : s) {
                    CHECK(l >= 0);
                    CHECK(l < 20);
                    count[l]++;
                }
            }
            for (const auto& [label, c] : count) {
                if (!label_set_contains(core, label)) CHECK(c == 1);
            }
        }
    }
}

TEST_CASE("csv loading parses, reports row errors, and handles empties") {
    SUBCASE("two well-formed rows") {
        std::string path = temp_path("fiun_test_ok.csv");
        {
            std::ofstream out(path);
            out << "0,1.5,2.0\n1,0.0,-1.0\n";
        }
        LabeledDataset ds = load_dataset_csv(path);
        CHECK(ds.size() == 2);
        CHECK(ds.dim == 2);
        CHECK(ds.labels == std::vector<int32_t>{0, 1});
        CHECK(ds.features == std::vector<float>{1.5f, 2.0f, 0.0f, -1.0f});
        std::remove(path.c_str());
    }
    SUBCASE("empty file gives an empty dataset") {
        std::string path = temp_path("fiun_test_empty.csv");
        { std::ofstream out(path); }
        LabeledDataset ds = load_dataset_csv(path);
        CHECK(ds.size() == 0);
        std::remove(path.c_str());
    }
    SUBCASE("inconsistent width is reported with the row index") {
        std::string path = temp_path("fiun_test_bad.csv");
        {
            std::ofstream out(path);
            out << "0,1.0,2.0\n1,3.0,4.0,5.0\n";
        }
        bool threw = false;
        try {
            load_dataset_csv(path);
        } catch (const IoError& e) {
            threw = true;
            CHECK(std::string(e.what()).find("2") != std::string::npos);
        }
        CHECK(threw);
        std::remove(path.c_str());
    }
    SUBCASE("missing file is an io error") {
        CHECK_THROWS_AS(load_dataset_csv(temp_path("fiun_no_such_file.csv")), IoError);
    }
}

TEST_CASE("raw dataset files round-trip bit-exactly") {
    BlobSpec spec;
    spec.num_classes = 3;
    spec.dim = 4;
    spec.samples_per_class = 7;
    spec.seed = 11;
    LabeledDataset ds = synth_gaussian_blobs(spec);
    std::string path = temp_path("fiun_test_roundtrip.bin");
    save_dataset_raw(ds, path);
    LabeledDataset back = load_dataset_raw(path);
    CHECK(back.features == ds.features);
    CHECK(back.labels == ds.labels);
    CHECK(back.num_classes == ds.num_classes);
    CHECK(back.dim == ds.dim);
    // load_dataset sniffs the magic and takes the raw path.
    LabeledDataset sniffed = load_dataset(path);
    CHECK(sniffed.features == ds.features);
    std::remove(path.c_str());
}

TEST_CASE("concat after split recovers the row multiset") {
    BlobSpec spec;
    spec.num_classes = 5;
    spec.dim = 3;
    spec.samples_per_class = 8;
    spec.seed = 21;
    LabeledDataset ds = synth_gaussian_blobs(spec);
    auto [d_f, d_r] = split_by_labels(ds, {1, 3});
    LabeledDataset joined = concat_datasets({&d_f, &d_r});
    CHECK(joined.size() == ds.size());
    CHECK(row_multiset(joined) == row_multiset(ds));
}

TEST_CASE("dataset validate rejects malformed contents") {
    LabeledDataset ds;
    ds.num_classes = 2;
    ds.dim = 2;
    ds.features = {1.f, 2.f};
    ds.labels = {0, 1}; // 2 rows claimed, features for 1
    CHECK_THROWS_AS(ds.validate(), InvariantError);
    ds.features = {1.f, 2.f, 3.f, 4.f};
    ds.labels = {0, 5};
    CHECK_THROWS_AS(ds.validate(), InvariantError);
    ds.labels = {0, 1};
    CHECK_NOTHROW(ds.validate());
}
