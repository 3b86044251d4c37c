// SPDX-License-Identifier: Apache-2.0
#include "fiun/fim.hpp"

#include <algorithm>
#include <cmath>

#include "fiun/error.hpp"
#include "fiun/io.hpp"

namespace fiun {

namespace {
constexpr char kFimMagic[8] = {'F', 'I', 'U', 'N', 'F', 'I', 'M', '0'};
constexpr uint32_t kFimVersion = 1;
constexpr int64_t kFimPartition = 256; // samples per partial-sum partition
} // namespace

void DiagonalFim::validate() const {
    for (size_t l = 0; l < values.size(); ++l)
        if (!(values[l] >= 0.0) || !std::isfinite(values[l]))
            throw InvariantError("FIM entry " + std::to_string(l) + " is negative or non-finite");
}

DiagonalFim compute_fim(const LinearSoftmaxModel& model, const LabeledDataset& ds) {
    if (ds.size() == 0) throw ParamError("compute_fim requires a nonempty dataset");
    if (ds.dim != model.dim) throw ParamError("dataset dim does not match model");
    if (ds.num_classes > model.num_classes)
        throw ParamError("dataset classes exceed model classes");
    model.validate();

    const int32_t K = model.num_classes;
    const int32_t d = model.dim;
    const size_t P = static_cast<size_t>(model.param_count());
    const int64_t n = ds.size();

    // Per-partition partial sums, folded in partition order: the result
    // is a pure function of the sample order, not of scheduling.
    DiagonalFim fim;
    fim.values.assign(P, 0.0);
    fim.sample_count = static_cast<uint64_t>(n);

    std::vector<double> partial(P);
    std::vector<double> p(K);
    for (int64_t part = 0; part * kFimPartition < n; ++part) {
        const int64_t lo = part * kFimPartition;
        const int64_t hi = std::min(lo + kFimPartition, n);
        std::fill(partial.begin(), partial.end(), 0.0);
        for (int64_t i = lo; i < hi; ++i) {
            const float* x = ds.row(i);
            model.predict_proba(x, p.data());
            p[ds.labels[i]] -= 1.0; // now -(onehot - p); squares are identical
            for (int32_t k = 0; k < K; ++k) {
                const double e2 = p[k] * p[k];
                double* fk = partial.data() + static_cast<size_t>(k) * d;
                for (int32_t j = 0; j < d; ++j) {
                    const double xj = x[j];
                    fk[j] += e2 * xj * xj;
                }
                partial[static_cast<size_t>(K) * d + k] += e2;
            }
        }
        for (size_t l = 0; l < P; ++l) fim.values[l] += partial[l];
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (size_t l = 0; l < P; ++l) fim.values[l] *= inv;
    fim.validate();
    return fim;
}

DiagonalFim merge_fims(const std::vector<const DiagonalFim*>& fims) {
    if (fims.empty()) throw ParamError("merge_fims requires at least one input");
    const size_t len = fims[0]->values.size();
    DiagonalFim out;
    out.values = fims[0]->values;
    out.sample_count = fims[0]->sample_count;
    for (size_t f = 1; f < fims.size(); ++f) {
        if (fims[f]->values.size() != len) throw ParamError("merge_fims length mismatch");
        for (size_t l = 0; l < len; ++l) out.values[l] = std::max(out.values[l], fims[f]->values[l]);
        out.sample_count += fims[f]->sample_count;
    }
    out.validate();
    return out;
}

DiagonalFim merge_fims(const std::vector<DiagonalFim>& fims) {
    std::vector<const DiagonalFim*> ptrs;
    ptrs.reserve(fims.size());
    for (const DiagonalFim& f : fims) ptrs.push_back(&f);
    return merge_fims(ptrs);
}

DampenResult dampen(const LinearSoftmaxModel& model, const DiagonalFim& model_fim,
                    const DiagonalFim& merged_fim, const DampenConfig& cfg) {
    const size_t P = static_cast<size_t>(model.param_count());
    if (model_fim.values.size() != P || merged_fim.values.size() != P)
        throw ParamError("FIM length does not match model parameter count");
    model_fim.validate();
    merged_fim.validate();

    DampenResult res;
    res.model = model;
    std::vector<double> flat = model.flat_params();
    for (size_t l = 0; l < P; ++l) {
        const double f = model_fim.values[l];
        const double fm = merged_fim.values[l];
        bool triggered = false;
        double factor = 0.0;
        if (f == 0.0) {
            // 0/0 counts as no evidence; any importance over a zero
            // model entry is infinitely dominant.
            triggered = fm > 0.0;
            factor = 0.0;
        } else if (fm / f > cfg.gamma) {
            triggered = true;
            factor = std::min(cfg.tau * f / fm, cfg.eta);
        }
        if (triggered) {
            flat[l] *= factor;
            res.triggered.push_back(static_cast<int64_t>(l));
        }
    }
    res.model.set_flat_params(flat);
    return res;
}

void save_fim(const DiagonalFim& fim, const std::string& path) {
    fim.validate();
    BinaryWriter w(path);
    w.magic(kFimMagic);
    w.u32(kFimVersion);
    w.u64(static_cast<uint64_t>(fim.values.size()));
    w.u64(fim.sample_count);
    w.f64_array(fim.values);
    w.close();
}

DiagonalFim load_fim(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kFimMagic);
    uint32_t version = r.u32();
    if (version != kFimVersion)
        throw IoError("unsupported FIM version " + std::to_string(version) + " in " + path);
    uint64_t len = r.u64();
    DiagonalFim fim;
    fim.sample_count = r.u64();
    fim.values = r.f64_array(len);
    fim.validate();
    return fim;
}

} // namespace fiun
