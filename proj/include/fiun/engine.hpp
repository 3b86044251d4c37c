// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fiun/dataset.hpp"
#include "fiun/fim.hpp"
#include "fiun/graph.hpp"
#include "fiun/model.hpp"

namespace fiun {

// Named datasets backing the graph's dataset_ref fields.
using DatasetRegistry = std::map<std::string, LabeledDataset>;

struct UnlearnRequest {
    LabelSet c_f;
    DampenConfig dampen;
    DiscoveryMode discovery;
    int32_t workers = 0; // 0 = hardware concurrency
    bool force_model_fim_recompute = false;
};

struct NodeMetrics {
    double ad_f = 0.0; // accuracy on the node's rows with labels in c_f
    double ad_r = 0.0; // accuracy on the remaining rows
    double delta_acc = 0.0; // ad_r - ad_f
    bool forget_empty = false;
    bool retain_empty = false;
    int64_t triggered_count = 0;
    std::vector<int64_t> triggered; // ascending parameter indices (dampen only)
    int32_t dampen_passes = 0;
    double unlearn_time_s = 0.0;    // this node's own merge+dampen (or train) time
    double cumulative_time_s = 0.0; // critical-path time up to and including this node
};

struct PhaseTimes {
    double discovery_s = 0.0;
    double unlearn_fim_s = 0.0;
    double model_fim_s = 0.0; // only when FIMs were missing and computed here
    double merge_s = 0.0;
    double dampen_s = 0.0;
};

struct UnlearnReport {
    std::string method; // fiun | retrain | finetune | gradient_ascent
    LabelSet c_f;
    std::set<std::string> discovery_ids;
    std::map<std::string, NodeMetrics> nodes; // every unlearning-graph node exactly once
    PhaseTimes phases;
    std::map<std::string, double> discovery_fim_time_s;
    double max_cumulative_time_s = 0.0;
    bool model_fim_computed_during_unlearn = false;
};

struct FiunOutcome {
    Umig graph; // updated copy; nodes outside the subgraph bit-identical
    UnlearnReport report;
};

// FIUn: locate discovery nodes, compute their unlearning FIMs in
// parallel, then merge+dampen every subgraph node in parallel with no
// inter-node ordering. Model FIMs are reused when cached on the node. The
// result is bit-identical for any worker count. Per-node cumulative time
// is the slowest reachable discovery FIM plus the node's own merge+dampen;
// graph search and cached model FIMs are reported separately.
FiunOutcome run_fiun(const Umig& g, const DatasetRegistry& data, const UnlearnRequest& request);

enum class BaselineKind { retrain, finetune, gradient_ascent };

const char* to_string(BaselineKind kind);

struct BaselineConfig {
    TrainConfig train;
    int32_t ga_epochs = 5; // gradient_ascent step budget
};

// Sequential baselines over the same unlearning subgraph, in topological
// order. retrain: roots restart from zeros, children from their parents'
// already-updated parameters (mean when several), trained on retained
// rows. finetune: continues from current parameters on retained rows.
// gradient_ascent: ga_epochs of sign-flipped SGD on forget rows.
// Aggregate nodes are re-averaged from their updated parents. Per-node
// cumulative time = own time + max over parents' cumulative times.
FiunOutcome run_baseline(const Umig& g, const DatasetRegistry& data, const UnlearnRequest& request,
                         BaselineKind kind, const BaselineConfig& cfg);

// AD_f / AD_r / delta for every graph node against its own dataset_ref.
std::map<std::string, NodeMetrics> evaluate(const Umig& g, const DatasetRegistry& data,
                                            const LabelSet& c_f);

struct SpeedupResult {
    double ratio = 0.0; // report_b's max cumulative time over report_a's
    bool infinite = false;
};

SpeedupResult speedup(const UnlearnReport& report_a, const UnlearnReport& report_b);

// Unweighted mean of the parents' parameters (FedAvg-style aggregation).
LinearSoftmaxModel aggregate_from_parents(const Umig& g, const std::string& id);

// Deterministic job runner: jobs indexed 0..n-1 write only their own
// slot; worker threads pull an atomic counter. Used for the per-discovery
// FIM phase and the per-node dampen phase.
void run_parallel(int64_t num_jobs, int32_t workers, const std::function<void(int64_t)>& job);

} // namespace fiun
