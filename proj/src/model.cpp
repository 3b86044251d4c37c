// SPDX-License-Identifier: Apache-2.0
#include "fiun/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fiun/error.hpp"
#include "fiun/io.hpp"
#include "fiun/rng.hpp"

namespace fiun {

namespace {
constexpr char kCheckpointMagic[8] = {'F', 'I', 'U', 'N', 'C', 'K', 'P', 'T'};
constexpr uint32_t kCheckpointVersion = 1;
} // namespace

LinearSoftmaxModel LinearSoftmaxModel::zeros(int32_t num_classes, int32_t dim) {
    if (num_classes < 1 || dim < 1) throw ParamError("model needs num_classes >= 1 and dim >= 1");
    LinearSoftmaxModel m;
    m.num_classes = num_classes;
    m.dim = dim;
    m.weights.assign(static_cast<size_t>(num_classes) * dim, 0.0);
    m.bias.assign(num_classes, 0.0);
    return m;
}

void LinearSoftmaxModel::validate() const {
    if (num_classes < 1 || dim < 1) throw InvariantError("model has empty shape");
    if (weights.size() != static_cast<size_t>(num_classes) * dim || bias.size() != static_cast<size_t>(num_classes))
        throw InvariantError("model parameter buffers do not match shape");
}

std::vector<double> LinearSoftmaxModel::flat_params() const {
    std::vector<double> flat(weights);
    flat.insert(flat.end(), bias.begin(), bias.end());
    return flat;
}

void LinearSoftmaxModel::set_flat_params(const std::vector<double>& flat) {
    if (flat.size() != static_cast<size_t>(param_count()))
        throw ParamError("flat parameter count mismatch");
    std::copy(flat.begin(), flat.begin() + weights.size(), weights.begin());
    std::copy(flat.begin() + weights.size(), flat.end(), bias.begin());
}

void LinearSoftmaxModel::logits(const float* x, double* out) const {
    for (int32_t k = 0; k < num_classes; ++k) {
        const double* wk = weights.data() + static_cast<size_t>(k) * dim;
        double acc = bias[k];
        for (int32_t j = 0; j < dim; ++j) acc += wk[j] * x[j];
        out[k] = acc;
    }
}

void LinearSoftmaxModel::predict_proba(const float* x, double* out) const {
    logits(x, out);
    double m = *std::max_element(out, out + num_classes);
    double sum = 0.0;
    for (int32_t k = 0; k < num_classes; ++k) {
        out[k] = std::exp(out[k] - m);
        sum += out[k];
    }
    for (int32_t k = 0; k < num_classes; ++k) out[k] /= sum;
}

int32_t LinearSoftmaxModel::predict(const float* x) const {
    std::vector<double> l(num_classes);
    logits(x, l.data());
    int32_t best = 0;
    for (int32_t k = 1; k < num_classes; ++k)
        if (l[k] > l[best]) best = k;
    return best;
}

LinearSoftmaxModel train(const LabeledDataset& ds, const TrainConfig& cfg,
                         const LinearSoftmaxModel* init) {
    if (ds.size() == 0) throw ParamError("train requires a nonempty dataset");
    if (!(cfg.lr > 0)) throw ParamError("lr must be > 0");
    if (cfg.epochs < 1) throw ParamError("epochs must be >= 1");
    if (cfg.batch_size < 1) throw ParamError("batch_size must be >= 1");
    ds.validate();

    const int32_t K = ds.num_classes;
    const int32_t d = ds.dim;
    LinearSoftmaxModel model;
    if (init) {
        if (init->num_classes != K || init->dim != d)
            throw ParamError("init model shape does not match dataset");
        model = *init;
    } else {
        model = LinearSoftmaxModel::zeros(K, d);
    }

    const int64_t n = ds.size();
    Rng rng(derive_seed(cfg.seed, "train-shuffle"));
    std::vector<int64_t> perm(static_cast<size_t>(n));
    std::vector<double> p(K), grad_w(static_cast<size_t>(K) * d), grad_b(K);

    for (int32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(perm.begin(), perm.end(), int64_t{0});
        rng.shuffle(perm);
        for (int64_t start = 0; start < n; start += cfg.batch_size) {
            const int64_t stop = std::min<int64_t>(start + cfg.batch_size, n);
            const double inv = 1.0 / static_cast<double>(stop - start);
            std::fill(grad_w.begin(), grad_w.end(), 0.0);
            std::fill(grad_b.begin(), grad_b.end(), 0.0);
            for (int64_t bi = start; bi < stop; ++bi) {
                const int64_t i = perm[bi];
                const float* x = ds.row(i);
                model.predict_proba(x, p.data());
                p[ds.labels[i]] -= 1.0; // p now holds dCE/dlogits
                for (int32_t k = 0; k < K; ++k) {
                    double* gk = grad_w.data() + static_cast<size_t>(k) * d;
                    const double pk = p[k];
                    for (int32_t j = 0; j < d; ++j) gk[j] += pk * x[j];
                    grad_b[k] += pk;
                }
            }
            for (size_t l = 0; l < model.weights.size(); ++l)
                model.weights[l] -= cfg.lr * inv * grad_w[l];
            for (int32_t k = 0; k < K; ++k) model.bias[k] -= cfg.lr * inv * grad_b[k];
        }
    }
    return model;
}

AccuracyResult accuracy(const LinearSoftmaxModel& model, const LabeledDataset& ds) {
    if (ds.size() == 0) return {0.0, true};
    if (ds.dim != model.dim) throw ParamError("dataset dim does not match model");
    int64_t hits = 0;
    for (int64_t i = 0; i < ds.size(); ++i)
        if (model.predict(ds.row(i)) == ds.labels[i]) ++hits;
    return {static_cast<double>(hits) / static_cast<double>(ds.size()), false};
}

std::vector<double> loglik_grad(const LinearSoftmaxModel& model, const float* x, int32_t y) {
    if (y < 0 || y >= model.num_classes) throw ParamError("label out of range");
    const int32_t K = model.num_classes;
    const int32_t d = model.dim;
    std::vector<double> p(K);
    model.predict_proba(x, p.data());
    std::vector<double> g(static_cast<size_t>(K) * d + K);
    for (int32_t k = 0; k < K; ++k) {
        const double e = (k == y ? 1.0 : 0.0) - p[k];
        for (int32_t j = 0; j < d; ++j) g[static_cast<size_t>(k) * d + j] = e * x[j];
        g[static_cast<size_t>(K) * d + k] = e;
    }
    return g;
}

void save_checkpoint(const LinearSoftmaxModel& model, const std::string& path) {
    model.validate();
    BinaryWriter w(path);
    w.magic(kCheckpointMagic);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<uint32_t>(model.num_classes));
    w.u32(static_cast<uint32_t>(model.dim));
    w.f64_array(model.weights);
    w.f64_array(model.bias);
    w.close();
}

LinearSoftmaxModel load_checkpoint(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kCheckpointMagic);
    uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version) + " in " + path);
    LinearSoftmaxModel m;
    m.num_classes = static_cast<int32_t>(r.u32());
    m.dim = static_cast<int32_t>(r.u32());
    m.weights = r.f64_array(static_cast<size_t>(m.num_classes) * m.dim);
    m.bias = r.f64_array(static_cast<size_t>(m.num_classes));
    m.validate();
    return m;
}

std::string export_text(const LinearSoftmaxModel& model) {
    std::ostringstream out;
    out.precision(17);
    out << "linear softmax model: classes=" << model.num_classes << " dim=" << model.dim << "\n";
    for (int32_t k = 0; k < model.num_classes; ++k) {
        out << "class " << k << " bias " << model.bias[k] << " weights";
        for (int32_t j = 0; j < model.dim; ++j)
            out << ' ' << model.weights[static_cast<size_t>(k) * model.dim + j];
        out << "\n";
    }
    return out.str();
}

} // namespace fiun
