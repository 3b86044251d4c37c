// SPDX-License-Identifier: Apache-2.0
#include "fiun/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "fiun/error.hpp"
#include "fiun/io.hpp"
#include "fiun/rng.hpp"

namespace fiun {

namespace {

constexpr char kDatasetMagic[8] = {'F', 'I', 'U', 'N', 'D', 'S', 'E', 'T'};
constexpr uint32_t kDatasetVersion = 1;

// Fraction of the spike amplitude shared across all class dimensions.
// Keeps every class mildly sensitive to every other class's axis, which
// the dampening-based unlearning needs in order to hand a forgotten
// class's region over to the remaining classes.
constexpr double kCenterFloor = 0.08;
constexpr double kCenterJitter = 0.2;

} // namespace

LabelSet normalize_label_set(std::vector<int32_t> labels) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    return labels;
}

bool label_set_contains(const LabelSet& s, int32_t label) {
    return std::binary_search(s.begin(), s.end(), label);
}

LabelSet label_set_union(const LabelSet& a, const LabelSet& b) {
    LabelSet out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

LabelSet label_set_intersection(const LabelSet& a, const LabelSet& b) {
    LabelSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

LabelSet LabeledDataset::present_labels() const {
    std::set<int32_t> seen(labels.begin(), labels.end());
    return LabelSet(seen.begin(), seen.end());
}

void LabeledDataset::validate() const {
    if (size() > 0 && dim < 1) throw InvariantError("dataset with rows must have dim >= 1");
    if (features.size() != static_cast<size_t>(size()) * static_cast<size_t>(dim))
        throw InvariantError("feature count does not match rows * dim");
    for (int64_t i = 0; i < size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw InvariantError("label out of range at row " + std::to_string(i));
    }
}

std::vector<double> make_blob_centers(const BlobSpec& spec) {
    const int32_t K = spec.num_classes;
    const int32_t d = spec.dim;
    if (K < 1) throw ParamError("num_classes must be >= 1");
    if (d < 1) throw ParamError("dim must be >= 1");
    if (!(spec.center_scale > 0)) throw ParamError("center_scale must be > 0");

    Rng rng(derive_seed(spec.seed, "blob-centers"));
    std::vector<double> c(static_cast<size_t>(K) * d, 0.0);
    auto at = [&](int32_t k, int32_t j) -> double& { return c[static_cast<size_t>(k) * d + j]; };

    if (K == 2) {
        at(0, 0) = spec.center_scale;
        at(1, 0) = -spec.center_scale;
    } else if (d >= K) {
        // Per-class spike on its own axis plus a shared floor.
        for (int32_t k = 0; k < K; ++k) {
            for (int32_t j = 0; j < K; ++j) at(k, j) = kCenterFloor;
            at(k, k) = 1.0;
        }
    } else {
        for (int32_t k = 0; k < K; ++k) {
            double norm2 = 0.0;
            for (int32_t j = 0; j < d; ++j) {
                at(k, j) = rng.gauss();
                norm2 += at(k, j) * at(k, j);
            }
            double inv = 1.0 / std::sqrt(norm2);
            for (int32_t j = 0; j < d; ++j) at(k, j) *= inv;
        }
    }

    // Seed-determined jitter, then renormalize every center to magnitude
    // center_scale.
    for (int32_t k = 0; k < K; ++k) {
        double norm2 = 0.0;
        for (int32_t j = 0; j < d; ++j) {
            at(k, j) += kCenterJitter * (2.0 * rng.uniform01() - 1.0);
            norm2 += at(k, j) * at(k, j);
        }
        double inv = spec.center_scale / std::sqrt(norm2);
        for (int32_t j = 0; j < d; ++j) at(k, j) *= inv;
    }
    return c;
}

LabeledDataset synth_gaussian_blobs(const BlobSpec& spec) {
    if (spec.samples_per_class < 1) throw ParamError("samples_per_class must be >= 1");
    if (spec.noise_sigma < 0) throw ParamError("noise_sigma must be >= 0");
    std::vector<double> centers = make_blob_centers(spec);

    const int32_t K = spec.num_classes;
    const int32_t d = spec.dim;
    const int64_t n = spec.samples_per_class;

    LabeledDataset ds;
    ds.num_classes = K;
    ds.dim = d;
    ds.features.resize(static_cast<size_t>(K) * n * d);
    ds.labels.resize(static_cast<size_t>(K) * n);

    for (int32_t k = 0; k < K; ++k) {
        Rng rng(derive_seed(spec.seed, "blob-rows", static_cast<uint64_t>(k)));
        const double* center = centers.data() + static_cast<size_t>(k) * d;
        for (int64_t i = 0; i < n; ++i) {
            float* row = ds.features.data() + (static_cast<size_t>(k) * n + i) * d;
            for (int32_t j = 0; j < d; ++j)
                row[j] = static_cast<float>(center[j] + spec.noise_sigma * rng.gauss());
            ds.labels[static_cast<size_t>(k) * n + i] = k;
        }
    }
    return ds;
}

std::pair<LabeledDataset, LabeledDataset> split_by_labels(const LabeledDataset& ds,
                                                          const LabelSet& labels) {
    LabeledDataset in, out;
    in.num_classes = out.num_classes = ds.num_classes;
    in.dim = out.dim = ds.dim;
    for (int64_t i = 0; i < ds.size(); ++i) {
        LabeledDataset& dst = label_set_contains(labels, ds.labels[i]) ? in : out;
        dst.features.insert(dst.features.end(), ds.row(i), ds.row(i) + ds.dim);
        dst.labels.push_back(ds.labels[i]);
    }
    return {std::move(in), std::move(out)};
}

std::vector<LabeledDataset> shard_dataset(const LabeledDataset& ds, int32_t count, uint64_t seed) {
    if (count < 1) throw ParamError("shard count must be >= 1");
    if (count > ds.size())
        throw ParamError("shard count " + std::to_string(count) + " exceeds dataset size " +
                         std::to_string(ds.size()));
    Rng rng(derive_seed(seed, "shard-perm"));
    std::vector<int64_t> perm = rng.permutation(ds.size());

    std::vector<LabeledDataset> shards(count);
    const int64_t base = ds.size() / count;
    const int64_t extra = ds.size() % count;
    int64_t pos = 0;
    for (int32_t s = 0; s < count; ++s) {
        int64_t len = base + (s < extra ? 1 : 0);
        LabeledDataset& shard = shards[s];
        shard.num_classes = ds.num_classes;
        shard.dim = ds.dim;
        shard.features.reserve(static_cast<size_t>(len) * ds.dim);
        shard.labels.reserve(static_cast<size_t>(len));
        for (int64_t i = 0; i < len; ++i, ++pos) {
            int64_t r = perm[pos];
            shard.features.insert(shard.features.end(), ds.row(r), ds.row(r) + ds.dim);
            shard.labels.push_back(ds.labels[r]);
        }
    }
    return shards;
}

std::vector<LabelSet> build_overlap_label_sets(int32_t num_nodes, int32_t per_node,
                                               double overlap_fraction, int32_t num_classes) {
    if (num_nodes < 1) throw ParamError("num_nodes must be >= 1");
    if (per_node < 1) throw ParamError("per_node must be >= 1");
    if (overlap_fraction < 0.0 || overlap_fraction > 1.0)
        throw ParamError("overlap_fraction must lie in [0, 1]");
    const int32_t core = static_cast<int32_t>(std::ceil(overlap_fraction * per_node));
    const int32_t private_per_node = per_node - core;
    const int64_t needed = core + static_cast<int64_t>(num_nodes) * private_per_node;
    if (needed > num_classes)
        throw ParamError("label demand " + std::to_string(needed) + " exceeds num_classes " +
                         std::to_string(num_classes));

    std::vector<LabelSet> sets(num_nodes);
    for (int32_t i = 0; i < num_nodes; ++i) {
        LabelSet s;
        for (int32_t l = 0; l < core; ++l) s.push_back(l);
        int32_t start = core + i * private_per_node;
        for (int32_t l = 0; l < private_per_node; ++l) s.push_back(start + l);
        sets[i] = normalize_label_set(std::move(s));
    }
    return sets;
}

LabeledDataset concat_datasets(const std::vector<const LabeledDataset*>& parts) {
    if (parts.empty()) throw ParamError("concat_datasets needs at least one input");
    LabeledDataset out;
    out.num_classes = parts[0]->num_classes;
    out.dim = parts[0]->dim;
    for (const LabeledDataset* p : parts) {
        if (p->num_classes != out.num_classes || p->dim != out.dim)
            throw ParamError("concat_datasets inputs must agree on dim and num_classes");
        out.features.insert(out.features.end(), p->features.begin(), p->features.end());
        out.labels.insert(out.labels.end(), p->labels.begin(), p->labels.end());
    }
    return out;
}

void save_dataset_raw(const LabeledDataset& ds, const std::string& path) {
    ds.validate();
    BinaryWriter w(path);
    w.magic(kDatasetMagic);
    w.u32(kDatasetVersion);
    w.u64(static_cast<uint64_t>(ds.size()));
    w.u32(static_cast<uint32_t>(ds.dim));
    w.u32(static_cast<uint32_t>(ds.num_classes));
    w.f32_array(ds.features);
    w.i32_array(ds.labels);
    w.close();
}

LabeledDataset load_dataset_raw(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kDatasetMagic);
    uint32_t version = r.u32();
    if (version != kDatasetVersion)
        throw IoError("unsupported dataset version " + std::to_string(version) + " in " + path);
    uint64_t n = r.u64();
    LabeledDataset ds;
    ds.dim = static_cast<int32_t>(r.u32());
    ds.num_classes = static_cast<int32_t>(r.u32());
    ds.features = r.f32_array(n * static_cast<size_t>(ds.dim));
    ds.labels = r.i32_array(n);
    ds.validate();
    return ds;
}

LabeledDataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);

    LabeledDataset ds;
    std::string line;
    int64_t row = 0;
    int32_t max_label = -1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string field;
        int32_t col = 0;
        int32_t label = 0;
        std::vector<float> feats;
        while (std::getline(fields, field, ',')) {
            try {
                size_t used = 0;
                if (col == 0) {
                    label = std::stoi(field, &used);
                } else {
                    feats.push_back(std::stof(field, &used));
                }
                if (used != field.size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw IoError(path + ": row " + std::to_string(row) + ": bad value '" + field +
                              "' in column " + std::to_string(col + 1));
            }
            ++col;
        }
        if (col < 2)
            throw IoError(path + ": row " + std::to_string(row) + ": expected label,f1,...");
        if (label < 0)
            throw IoError(path + ": row " + std::to_string(row) + ": negative label");
        if (ds.dim == 0) {
            ds.dim = static_cast<int32_t>(feats.size());
        } else if (static_cast<int32_t>(feats.size()) != ds.dim) {
            throw IoError(path + ": row " + std::to_string(row) + ": expected " +
                          std::to_string(ds.dim + 1) + " fields, got " + std::to_string(col));
        }
        ds.features.insert(ds.features.end(), feats.begin(), feats.end());
        ds.labels.push_back(label);
        max_label = std::max(max_label, label);
    }
    ds.num_classes = max_label + 1;
    ds.validate();
    return ds;
}

LabeledDataset load_dataset(const std::string& path) {
    {
        BinaryReader r(path);
        if (!r.peek_magic(kDatasetMagic)) {
            // fall through to CSV
        } else {
            return load_dataset_raw(path);
        }
    }
    return load_dataset_csv(path);
}

} // namespace fiun
