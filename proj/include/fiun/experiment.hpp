// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fiun/dataset.hpp"
#include "fiun/engine.hpp"
#include "fiun/graph.hpp"

namespace fiun {

struct DatasetSpec {
    enum class Kind { blobs, file };
    Kind kind = Kind::blobs;
    BlobSpec blobs;   // kind == blobs
    std::string path; // kind == file
};

struct UnlearnSpec {
    LabelSet labels;
    DampenConfig dampen;
    DiscoveryMode::Kind discovery_mode = DiscoveryMode::Kind::metadata;
    double accuracy_threshold = 0.5;
};

struct ExperimentConfig {
    uint64_t seed = 0; // mandatory in config files
    DatasetSpec dataset;
    TopologyKind topology_kind = TopologyKind::fl_star;
    TopologyParams topology;
    TrainConfig train;
    bool train_aggregates = false; // aggregates stay at the parents' mean
    UnlearnSpec unlearn;
    std::vector<std::string> methods = {"fiun"};
    int32_t ga_epochs = 5;
    std::string output_dir = "out";
    int32_t workers = 0;
};

// Strict parse: unknown keys are rejected with their full path, missing
// seed is an error, absent optional keys take the published defaults
// (lr 0.1, epochs 100, batch 64, tau 1, gamma 1, eta 0.1).
ExperimentConfig parse_config_json(const std::string& json_text);
ExperimentConfig parse_config_file(const std::string& path);

struct MethodOutcome {
    Umig graph; // post-method graph
    UnlearnReport report;
    std::map<std::string, NodeMetrics> pre_eval;  // before unlearning
    std::map<std::string, NodeMetrics> post_eval; // after unlearning
};

// Drives a full run: topology + datasets, pipeline training (with cached
// model FIMs), then each requested method with pre/post evaluation.
class Experiment {
public:
    explicit Experiment(ExperimentConfig cfg);

    // Stages; each implies the earlier ones (cheap and deterministic).
    void build();     // topology skeleton + dataset registry + train_labels
    void train_all(); // pipeline-train node models, cache model FIMs
    MethodOutcome& run_method(const std::string& method); // fiun/retrain/finetune/ga
    void run_requested_methods();

    // Output files. write_* imply the stages they need.
    std::string write_graph();    // <out>/graph.json (+ckpt/+fim after training)
    std::vector<std::string> write_reports(); // report_<method>.json + report.csv

    const ExperimentConfig& config() const { return cfg_; }
    const Umig& graph() const { return graph_; }
    const DatasetRegistry& registry() const { return registry_; }
    const std::map<std::string, MethodOutcome>& outcomes() const { return outcomes_; }
    const std::map<std::string, NodeMetrics>& pre_eval() const { return pre_eval_; }

    std::string report_json(const std::string& method) const;
    std::string compare_json(const std::string& method_a, const std::string& method_b) const;
    std::string evaluation_json() const;

    bool built() const { return built_; }
    bool trained() const { return trained_; }

private:
    void materialize_datasets();

    ExperimentConfig cfg_;
    Umig graph_;
    DatasetRegistry registry_;
    std::map<std::string, NodeMetrics> pre_eval_;
    std::map<std::string, MethodOutcome> outcomes_;
    bool built_ = false;
    bool trained_ = false;
};

// Config in, files out: graph, checkpoints, FIMs, report JSONs, CSV.
// Returns the written file paths.
std::vector<std::string> run_experiment(const ExperimentConfig& cfg);

std::string report_to_json(const UnlearnReport& report,
                           const std::map<std::string, NodeMetrics>& pre_eval,
                           const std::map<std::string, NodeMetrics>& post_eval);
std::string report_to_csv_rows(const UnlearnReport& report,
                               const std::map<std::string, NodeMetrics>& post_eval);
constexpr const char* kReportCsvHeader = "method,node,num_cf,ad_f,ad_r,delta_acc,time_s";

} // namespace fiun
