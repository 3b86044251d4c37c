// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fiun/dataset.hpp"

namespace fiun {

// K-class linear softmax classifier: logits = W x + b. Flat parameter
// order is row-major weights followed by bias; FIM vectors use the same
// indexing.
struct LinearSoftmaxModel {
    int32_t num_classes = 0;
    int32_t dim = 0;
    std::vector<double> weights; // num_classes * dim, row-major
    std::vector<double> bias;    // num_classes

    static LinearSoftmaxModel zeros(int32_t num_classes, int32_t dim);

    int64_t param_count() const { return static_cast<int64_t>(num_classes) * dim + num_classes; }

    std::vector<double> flat_params() const;
    void set_flat_params(const std::vector<double>& flat);

    void logits(const float* x, double* out) const;
    // Max-subtracted softmax; out sums to 1 within 1e-12.
    void predict_proba(const float* x, double* out) const;
    // Argmax with ties broken toward the lowest class index.
    int32_t predict(const float* x) const;

    void validate() const;
};

struct TrainConfig {
    double lr = 0.1;
    int32_t epochs = 100;
    int32_t batch_size = 64;
    uint64_t seed = 0;
};

// Mini-batch SGD on mean cross-entropy. Starts from init when given,
// otherwise from zeros. Deterministic: the shuffle stream is a pure
// function of cfg.seed.
LinearSoftmaxModel train(const LabeledDataset& ds, const TrainConfig& cfg,
                         const LinearSoftmaxModel* init = nullptr);

struct AccuracyResult {
    double value = 0.0;
    bool empty = true; // no rows to score; value is 0 by convention
};

AccuracyResult accuracy(const LinearSoftmaxModel& model, const LabeledDataset& ds);

// Gradient of log p(y|x) w.r.t. the flat parameters: (onehot(y) - p) x^T
// row-major, then (onehot(y) - p).
std::vector<double> loglik_grad(const LinearSoftmaxModel& model, const float* x, int32_t y);

// Little-endian binary checkpoint; round-trips bit-exactly.
void save_checkpoint(const LinearSoftmaxModel& model, const std::string& path);
LinearSoftmaxModel load_checkpoint(const std::string& path);

// Human-readable dump (not meant for reloading).
std::string export_text(const LinearSoftmaxModel& model);

} // namespace fiun
