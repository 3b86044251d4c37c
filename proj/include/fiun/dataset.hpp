// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace fiun {

// Sorted, duplicate-free set of class indices.
using LabelSet = std::vector<int32_t>;

LabelSet normalize_label_set(std::vector<int32_t> labels);
bool label_set_contains(const LabelSet& s, int32_t label);
LabelSet label_set_union(const LabelSet& a, const LabelSet& b);
LabelSet label_set_intersection(const LabelSet& a, const LabelSet& b);

struct LabeledDataset {
    std::vector<float> features; // row-major, size() * dim
    std::vector<int32_t> labels; // values in [0, num_classes)
    int32_t num_classes = 0;
    int32_t dim = 0;

    int64_t size() const { return static_cast<int64_t>(labels.size()); }
    const float* row(int64_t i) const { return features.data() + i * dim; }

    // Sorted set of labels present in the data.
    LabelSet present_labels() const;

    void validate() const; // throws InvariantError on malformed contents
};

struct BlobSpec {
    int32_t num_classes = 10;
    int32_t dim = 20;
    int64_t samples_per_class = 1000;
    double center_scale = 9.0;
    double noise_sigma = 1.0;
    uint64_t seed = 0;
};

// Class centers (num_classes x dim, row-major), each of magnitude
// center_scale. Exposed so tests can check placement directly.
std::vector<double> make_blob_centers(const BlobSpec& spec);

// Isotropic Gaussian cloud of samples_per_class rows around each center.
LabeledDataset synth_gaussian_blobs(const BlobSpec& spec);

// Order-preserving partition into (labels in set, labels not in set).
std::pair<LabeledDataset, LabeledDataset> split_by_labels(const LabeledDataset& ds,
                                                          const LabelSet& labels);

// Disjoint IID shards covering the dataset; sizes differ by at most one.
std::vector<LabeledDataset> shard_dataset(const LabeledDataset& ds, int32_t count, uint64_t seed);

// num_nodes label sets of size per_node sharing a common core of
// ceil(overlap_fraction * per_node) labels; non-core labels are disjoint
// across sets. All labels lie in [0, num_classes).
std::vector<LabelSet> build_overlap_label_sets(int32_t num_nodes, int32_t per_node,
                                               double overlap_fraction, int32_t num_classes);

LabeledDataset concat_datasets(const std::vector<const LabeledDataset*>& parts);

// File formats: raw binary (magic FIUNDSET) and header-less CSV rows of
// "label,f1,...,fd". load_dataset sniffs the magic and dispatches.
LabeledDataset load_dataset(const std::string& path);
LabeledDataset load_dataset_csv(const std::string& path);
LabeledDataset load_dataset_raw(const std::string& path);
void save_dataset_raw(const LabeledDataset& ds, const std::string& path);

} // namespace fiun
