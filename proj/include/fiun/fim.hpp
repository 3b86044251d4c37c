// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fiun/dataset.hpp"
#include "fiun/model.hpp"

namespace fiun {

// Diagonal empirical Fisher: per-parameter mean of squared log-likelihood
// gradients at the observed labels. Entries are nonnegative by
// construction and validated on every load.
struct DiagonalFim {
    std::vector<double> values;
    uint64_t sample_count = 0;

    void validate() const; // throws InvariantError on negative/non-finite entries
};

// entry l = (1/N) sum_i g_{i,l}^2 with g_i = loglik_grad(model, x_i, y_i).
// Samples are accumulated in fixed-size partitions whose partial sums are
// folded in partition order, so the result does not depend on how the
// partitions are executed.
DiagonalFim compute_fim(const LinearSoftmaxModel& model, const LabeledDataset& ds);

// Element-wise maximum. sample_count is the sum of inputs' counts
// (informational only).
DiagonalFim merge_fims(const std::vector<const DiagonalFim*>& fims);
DiagonalFim merge_fims(const std::vector<DiagonalFim>& fims);

struct DampenConfig {
    double tau = 1.0;
    double gamma = 1.0;
    double eta = 0.1;
};

struct DampenResult {
    LinearSoftmaxModel model;
    std::vector<int64_t> triggered; // ascending parameter indices
};

// Parameter l is triggered iff merged_l / model_l > gamma; a triggered
// parameter is scaled by min(tau * model_l / merged_l, eta). Ratio
// conventions: model_l = 0 with merged_l > 0 triggers with factor 0;
// 0/0 is untriggered. Untriggered parameters are bit-identical.
DampenResult dampen(const LinearSoftmaxModel& model, const DiagonalFim& model_fim,
                    const DiagonalFim& merged_fim, const DampenConfig& cfg);

// Little-endian binary FIM file (magic FIUNFIM0); round-trips bit-exactly.
void save_fim(const DiagonalFim& fim, const std::string& path);
DiagonalFim load_fim(const std::string& path);

} // namespace fiun
