// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fiun/dataset.hpp"
#include "fiun/fim.hpp"
#include "fiun/model.hpp"

namespace fiun {

struct ModelNode {
    std::string id;
    LabelSet train_labels;   // labels present in the node's training data
    std::string dataset_ref; // key into the experiment's dataset registry
    bool is_aggregate = false; // parameters are the unweighted mean of parents'
    std::optional<LinearSoftmaxModel> model;
    std::optional<DiagonalFim> model_fim;
};

struct Edge {
    std::string parent;
    std::string child;
    double weight = 1.0; // carried but unused by the unlearning rules
};

// Directed acyclic graph of model nodes; acyclicity is enforced on every
// mutation.
class Umig {
public:
    void add_node(ModelNode node);
    void add_edge(const std::string& parent, const std::string& child, double weight = 1.0);

    bool has_node(const std::string& id) const;
    ModelNode& node(const std::string& id);
    const ModelNode& node(const std::string& id) const;

    int64_t node_count() const { return static_cast<int64_t>(nodes_.size()); }
    std::vector<std::string> node_ids() const; // ascending
    const std::vector<Edge>& edges() const { return edges_; }

    std::vector<std::string> parents(const std::string& id) const;  // insertion order
    std::vector<std::string> children(const std::string& id) const; // insertion order
    std::vector<std::string> roots() const;                         // in-degree 0, ascending
    // Kahn's algorithm with an ordered ready set: deterministic.
    std::vector<std::string> topo_order() const;

    std::set<std::string> descendants(const std::string& id) const; // excludes id
    std::set<std::string> ancestors(const std::string& id) const;   // excludes id

private:
    std::map<std::string, ModelNode> nodes_;
    std::vector<Edge> edges_;
    std::map<std::string, std::vector<std::string>> out_, in_;
};

// Empty result means acyclic; otherwise a cycle as a node path
// [n0, n1, ..., n0].
std::optional<std::vector<std::string>> validate_acyclic(const Umig& g);

struct DiscoveryMode {
    enum class Kind { metadata, accuracy };
    Kind kind = Kind::metadata;
    double threshold = 0.5;                 // accuracy mode only
    const LabeledDataset* probe = nullptr;  // accuracy mode only
};

// First nodes along every root-to-leaf path that recognize the unlearned
// labels: metadata mode tests train_labels against c_f; accuracy mode
// tests model accuracy on probe data against the threshold. A node with a
// qualifying ancestor is never selected.
std::set<std::string> find_discovery_nodes(const Umig& g, const LabelSet& c_f,
                                           const DiscoveryMode& mode = {});

struct UnlearningGraph {
    Umig subgraph;
    std::set<std::string> discovery_ids;
};

// Induced subgraph on the discovery nodes and all their descendants;
// overlapping closures from multiple roots are unioned.
UnlearningGraph unlearning_subgraph(const Umig& g, const std::set<std::string>& discovery);

// Discovery nodes that are ancestors of (or equal to) node_id within the
// subgraph.
std::set<std::string> reachable_discovery(const UnlearningGraph& ug, const std::string& node_id);

enum class TopologyKind {
    fl_star,
    fl_multilayer,
    dag_fl,
    ddpl,
    il_chain,
    tl_chain,
    binary_tree,
};

const char* to_string(TopologyKind kind);
TopologyKind topology_kind_from_string(const std::string& name);

struct TopologyParams {
    int32_t clients = 5;     // fl_star, fl_multilayer (per group), dag_fl
    int32_t rounds = 1;      // fl_star, fl_multilayer, dag_fl
    int32_t groups = 2;      // fl_multilayer
    int32_t fan_in = 2;      // dag_fl
    int32_t workers = 3;     // ddpl
    int32_t iterations = 1;  // ddpl
    int32_t steps = 3;       // il_chain, tl_chain
    int32_t base_labels = 4; // il_chain, tl_chain window size
    int32_t labels_per_step = 2;
    int32_t depth = 3;       // binary_tree
};

// Deterministic skeleton: ids, edges, dataset refs, and aggregate flags.
// Models stay untrained; train_labels are filled in when the referenced
// datasets are materialized.
Umig gen_topology(TopologyKind kind, const TopologyParams& params, uint64_t seed);

// Graph JSON: {"nodes": [...], "edges": [[parent, child, weight], ...]}.
// When artifact_dir is nonempty, models and FIMs are written beneath it
// (ckpt/<id>.bin, fim/<id>.bin) and referenced from the JSON; load_graph
// resolves those paths relative to the JSON file and loads them back.
void save_graph(const Umig& g, const std::string& json_path, const std::string& artifact_dir = "");
Umig load_graph(const std::string& json_path);

} // namespace fiun
