// SPDX-License-Identifier: Apache-2.0
#include "fiun/graph.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fiun/error.hpp"
#include "fiun/io.hpp"
#include "fiun/rng.hpp"

namespace fs = std::filesystem;

namespace fiun {

void Umig::add_node(ModelNode node) {
    if (node.id.empty() || node.id.find('/') != std::string::npos)
        throw ParamError("node id must be nonempty and free of '/'");
    if (nodes_.count(node.id)) throw ParamError("duplicate node id: " + node.id);
    node.train_labels = normalize_label_set(std::move(node.train_labels));
    nodes_.emplace(node.id, std::move(node));
}

void Umig::add_edge(const std::string& parent, const std::string& child, double weight) {
    if (!nodes_.count(parent)) throw ParamError("unknown edge parent: " + parent);
    if (!nodes_.count(child)) throw ParamError("unknown edge child: " + child);
    for (const Edge& e : edges_)
        if (e.parent == parent && e.child == child)
            throw ParamError("duplicate edge: " + parent + " -> " + child);

    edges_.push_back({parent, child, weight});
    out_[parent].push_back(child);
    in_[child].push_back(parent);

    if (auto cycle = validate_acyclic(*this)) {
        out_[parent].pop_back();
        in_[child].pop_back();
        edges_.pop_back();
        std::ostringstream msg;
        msg << "edge " << parent << " -> " << child << " closes cycle [";
        for (size_t i = 0; i < cycle->size(); ++i) msg << (i ? " " : "") << (*cycle)[i];
        msg << "]";
        throw InvariantError(msg.str());
    }
}

bool Umig::has_node(const std::string& id) const { return nodes_.count(id) != 0; }

ModelNode& Umig::node(const std::string& id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw ParamError("unknown node id: " + id);
    return it->second;
}

const ModelNode& Umig::node(const std::string& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw ParamError("unknown node id: " + id);
    return it->second;
}

std::vector<std::string> Umig::node_ids() const {
    std::vector<std::string> ids;
    ids.reserve(nodes_.size());
    for (const auto& [id, _] : nodes_) ids.push_back(id);
    return ids;
}

std::vector<std::string> Umig::parents(const std::string& id) const {
    node(id);
    auto it = in_.find(id);
    return it == in_.end() ? std::vector<std::string>{} : it->second;
}

std::vector<std::string> Umig::children(const std::string& id) const {
    node(id);
    auto it = out_.find(id);
    return it == out_.end() ? std::vector<std::string>{} : it->second;
}

std::vector<std::string> Umig::roots() const {
    std::vector<std::string> r;
    for (const auto& [id, _] : nodes_) {
        auto it = in_.find(id);
        if (it == in_.end() || it->second.empty()) r.push_back(id);
    }
    return r;
}

std::vector<std::string> Umig::topo_order() const {
    std::map<std::string, int64_t> indegree;
    for (const auto& [id, _] : nodes_) indegree[id] = 0;
    for (const Edge& e : edges_) ++indegree[e.child];

    std::set<std::string> ready;
    for (const auto& [id, deg] : indegree)
        if (deg == 0) ready.insert(id);

    std::vector<std::string> order;
    order.reserve(nodes_.size());
    while (!ready.empty()) {
        std::string id = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(id);
        auto it = out_.find(id);
        if (it == out_.end()) continue;
        for (const std::string& c : it->second)
            if (--indegree[c] == 0) ready.insert(c);
    }
    if (order.size() != nodes_.size()) throw InvariantError("graph contains a cycle");
    return order;
}

namespace {

std::set<std::string> closure(const std::map<std::string, std::vector<std::string>>& adj,
                              const std::string& start) {
    std::set<std::string> seen;
    std::deque<std::string> frontier{start};
    while (!frontier.empty()) {
        std::string id = frontier.front();
        frontier.pop_front();
        auto it = adj.find(id);
        if (it == adj.end()) continue;
        for (const std::string& next : it->second)
            if (seen.insert(next).second) frontier.push_back(next);
    }
    return seen;
}

} // namespace

std::set<std::string> Umig::descendants(const std::string& id) const {
    node(id);
    return closure(out_, id);
}

std::set<std::string> Umig::ancestors(const std::string& id) const {
    node(id);
    return closure(in_, id);
}

std::optional<std::vector<std::string>> validate_acyclic(const Umig& g) {
    enum class Color { white, gray, black };
    std::map<std::string, Color> color;
    for (const std::string& id : g.node_ids()) color[id] = Color::white;

    std::vector<std::string> stack;
    // Iterative DFS; on a gray re-entry the stack suffix is the cycle.
    std::function<std::optional<std::vector<std::string>>(const std::string&)> visit =
        [&](const std::string& id) -> std::optional<std::vector<std::string>> {
        color[id] = Color::gray;
        stack.push_back(id);
        for (const std::string& c : g.children(id)) {
            if (color[c] == Color::gray) {
                auto from = std::find(stack.begin(), stack.end(), c);
                std::vector<std::string> cycle(from, stack.end());
                cycle.push_back(c);
                return cycle;
            }
            if (color[c] == Color::white)
                if (auto cycle = visit(c)) return cycle;
        }
        stack.pop_back();
        color[id] = Color::black;
        return std::nullopt;
    };

    for (const std::string& id : g.node_ids())
        if (color[id] == Color::white)
            if (auto cycle = visit(id)) return cycle;
    return std::nullopt;
}

std::set<std::string> find_discovery_nodes(const Umig& g, const LabelSet& c_f,
                                           const DiscoveryMode& mode) {
    if (c_f.empty()) throw ParamError("c_f must be nonempty");
    if (mode.kind == DiscoveryMode::Kind::accuracy && mode.probe == nullptr)
        throw ParamError("accuracy discovery mode requires probe data");

    auto qualifies = [&](const std::string& id) -> bool {
        const ModelNode& n = g.node(id);
        if (mode.kind == DiscoveryMode::Kind::metadata)
            return !label_set_intersection(n.train_labels, c_f).empty();
        if (!n.model)
            throw ParamError("accuracy discovery mode requires a model on node " + id);
        return accuracy(*n.model, *mode.probe).value > mode.threshold;
    };

    // Breadth-first from the roots in topological order; a node whose
    // ancestor already qualified is never selected.
    std::set<std::string> discovery;
    std::map<std::string, bool> ancestor_hit;
    for (const std::string& id : g.topo_order()) {
        bool hit = ancestor_hit[id];
        bool q = qualifies(id);
        if (q && !hit) discovery.insert(id);
        for (const std::string& c : g.children(id)) {
            auto [it, _] = ancestor_hit.try_emplace(c, false);
            it->second = it->second || hit || q;
        }
    }
    return discovery;
}

UnlearningGraph unlearning_subgraph(const Umig& g, const std::set<std::string>& discovery) {
    std::set<std::string> keep;
    for (const std::string& id : discovery) {
        g.node(id); // validates existence
        keep.insert(id);
        std::set<std::string> desc = g.descendants(id);
        keep.insert(desc.begin(), desc.end());
    }

    UnlearningGraph ug;
    ug.discovery_ids = discovery;
    for (const std::string& id : keep) ug.subgraph.add_node(g.node(id));
    for (const Edge& e : g.edges())
        if (keep.count(e.parent) && keep.count(e.child))
            ug.subgraph.add_edge(e.parent, e.child, e.weight);
    return ug;
}

std::set<std::string> reachable_discovery(const UnlearningGraph& ug, const std::string& node_id) {
    std::set<std::string> anc = ug.subgraph.ancestors(node_id); // validates node_id
    anc.insert(node_id);
    std::set<std::string> out;
    for (const std::string& id : anc)
        if (ug.discovery_ids.count(id)) out.insert(id);
    return out;
}

const char* to_string(TopologyKind kind) {
    switch (kind) {
    case TopologyKind::fl_star: return "fl_star";
    case TopologyKind::fl_multilayer: return "fl_multilayer";
    case TopologyKind::dag_fl: return "dag_fl";
    case TopologyKind::ddpl: return "ddpl";
    case TopologyKind::il_chain: return "il_chain";
    case TopologyKind::tl_chain: return "tl_chain";
    case TopologyKind::binary_tree: return "binary_tree";
    }
    return "unknown";
}

TopologyKind topology_kind_from_string(const std::string& name) {
    for (TopologyKind k :
         {TopologyKind::fl_star, TopologyKind::fl_multilayer, TopologyKind::dag_fl,
          TopologyKind::ddpl, TopologyKind::il_chain, TopologyKind::tl_chain,
          TopologyKind::binary_tree}) {
        if (name == to_string(k)) return k;
    }
    throw ParamError("unknown topology kind: " + name);
}

namespace {

LabelSet label_range(int32_t lo, int32_t hi) {
    LabelSet s;
    for (int32_t l = lo; l < hi; ++l) s.push_back(l);
    return s;
}

Umig gen_fl_star(const TopologyParams& p) {
    if (p.clients < 1 || p.rounds < 1) throw ParamError("fl_star needs clients >= 1, rounds >= 1");
    Umig g;
    for (int32_t t = 0; t < p.rounds; ++t) {
        std::string agg = "r" + std::to_string(t) + "agg";
        for (int32_t i = 0; i < p.clients; ++i) {
            std::string id = "r" + std::to_string(t) + "c" + std::to_string(i);
            g.add_node({id, {}, "shard" + std::to_string(i), false, std::nullopt, std::nullopt});
        }
        g.add_node({agg, {}, "full", true, std::nullopt, std::nullopt});
        for (int32_t i = 0; i < p.clients; ++i)
            g.add_edge("r" + std::to_string(t) + "c" + std::to_string(i), agg);
        if (t > 0) {
            std::string prev = "r" + std::to_string(t - 1) + "agg";
            for (int32_t i = 0; i < p.clients; ++i)
                g.add_edge(prev, "r" + std::to_string(t) + "c" + std::to_string(i));
        }
    }
    return g;
}

Umig gen_fl_multilayer(const TopologyParams& p) {
    if (p.clients < 1 || p.groups < 1 || p.rounds < 1)
        throw ParamError("fl_multilayer needs clients, groups, rounds >= 1");
    Umig g;
    for (int32_t t = 0; t < p.rounds; ++t) {
        std::string rt = "r" + std::to_string(t);
        for (int32_t gr = 0; gr < p.groups; ++gr) {
            std::string grp = rt + "g" + std::to_string(gr);
            for (int32_t i = 0; i < p.clients; ++i)
                g.add_node({grp + "c" + std::to_string(i), {},
                            "shard" + std::to_string(gr) + "x" + std::to_string(i), false,
                            std::nullopt, std::nullopt});
            g.add_node({grp + "agg", {}, "group" + std::to_string(gr), true, std::nullopt,
                        std::nullopt});
            for (int32_t i = 0; i < p.clients; ++i)
                g.add_edge(grp + "c" + std::to_string(i), grp + "agg");
        }
        g.add_node({rt + "agg", {}, "full", true, std::nullopt, std::nullopt});
        for (int32_t gr = 0; gr < p.groups; ++gr)
            g.add_edge(rt + "g" + std::to_string(gr) + "agg", rt + "agg");
        if (t > 0) {
            std::string prev = "r" + std::to_string(t - 1) + "agg";
            for (int32_t gr = 0; gr < p.groups; ++gr)
                for (int32_t i = 0; i < p.clients; ++i)
                    g.add_edge(prev,
                               rt + "g" + std::to_string(gr) + "c" + std::to_string(i));
        }
    }
    return g;
}

Umig gen_dag_fl(const TopologyParams& p, uint64_t seed) {
    if (p.clients < 1 || p.rounds < 1) throw ParamError("dag_fl needs clients >= 1, rounds >= 1");
    if (p.fan_in < 1) throw ParamError("dag_fl needs fan_in >= 1");
    Umig g;
    Rng rng(derive_seed(seed, "dag-fl"));
    for (int32_t t = 0; t < p.rounds; ++t) {
        for (int32_t i = 0; i < p.clients; ++i) {
            std::string id = "r" + std::to_string(t) + "c" + std::to_string(i);
            g.add_node({id, {}, "shard" + std::to_string(i), false, std::nullopt, std::nullopt});
            if (t > 0) {
                // fan_in distinct parents sampled from the previous round
                int32_t want = std::min(p.fan_in, p.clients);
                std::vector<int32_t> pool(p.clients);
                for (int32_t j = 0; j < p.clients; ++j) pool[j] = j;
                rng.shuffle(pool);
                for (int32_t j = 0; j < want; ++j)
                    g.add_edge("r" + std::to_string(t - 1) + "c" + std::to_string(pool[j]), id);
            }
        }
    }
    return g;
}

Umig gen_ddpl(const TopologyParams& p) {
    if (p.workers < 1 || p.iterations < 1)
        throw ParamError("ddpl needs workers >= 1, iterations >= 1");
    Umig g;
    for (int32_t t = 0; t < p.iterations; ++t) {
        std::string it = "i" + std::to_string(t);
        for (int32_t i = 0; i < p.workers; ++i)
            g.add_node({it + "w" + std::to_string(i), {}, "task" + std::to_string(i), false,
                        std::nullopt, std::nullopt});
        g.add_node({it + "agg", {}, "full", true, std::nullopt, std::nullopt});
        for (int32_t i = 0; i < p.workers; ++i) g.add_edge(it + "w" + std::to_string(i), it + "agg");
        if (t > 0) {
            std::string prev = "i" + std::to_string(t - 1) + "agg";
            for (int32_t i = 0; i < p.workers; ++i)
                g.add_edge(prev, it + "w" + std::to_string(i));
        }
    }
    return g;
}

Umig gen_il_chain(const TopologyParams& p) {
    if (p.steps < 1 || p.base_labels < 1 || p.labels_per_step < 0)
        throw ParamError("il_chain needs steps >= 1, base_labels >= 1, labels_per_step >= 0");
    Umig g;
    for (int32_t t = 0; t < p.steps; ++t) {
        int32_t hi = p.base_labels + t * p.labels_per_step;
        std::string id = "il" + std::to_string(t);
        g.add_node({id, label_range(0, hi), "labels_upto_" + std::to_string(hi), false,
                    std::nullopt, std::nullopt});
        if (t > 0) g.add_edge("il" + std::to_string(t - 1), id);
    }
    return g;
}

Umig gen_tl_chain(const TopologyParams& p) {
    if (p.steps < 1 || p.base_labels < 1 || p.labels_per_step < 0)
        throw ParamError("tl_chain needs steps >= 1, base_labels >= 1, labels_per_step >= 0");
    Umig g;
    for (int32_t t = 0; t < p.steps; ++t) {
        int32_t lo = t * p.labels_per_step;
        int32_t hi = lo + p.base_labels;
        std::string id = "tl" + std::to_string(t);
        g.add_node({id, label_range(lo, hi),
                    "labels_" + std::to_string(lo) + "_" + std::to_string(hi), false,
                    std::nullopt, std::nullopt});
        if (t > 0) g.add_edge("tl" + std::to_string(t - 1), id);
    }
    return g;
}

Umig gen_binary_tree(const TopologyParams& p) {
    if (p.depth < 1) throw ParamError("binary_tree needs depth >= 1");
    Umig g;
    int32_t index = 0;
    for (int32_t level = 0; level < p.depth; ++level) {
        int32_t width = 1 << level;
        for (int32_t i = 0; i < width; ++i, ++index) {
            std::string id = "t" + std::to_string(level) + "n" + std::to_string(i);
            g.add_node({id, {}, "shard" + std::to_string(index), false, std::nullopt,
                        std::nullopt});
            if (level > 0)
                g.add_edge("t" + std::to_string(level - 1) + "n" + std::to_string(i / 2), id);
        }
    }
    return g;
}

} // namespace

Umig gen_topology(TopologyKind kind, const TopologyParams& params, uint64_t seed) {
    switch (kind) {
    case TopologyKind::fl_star: return gen_fl_star(params);
    case TopologyKind::fl_multilayer: return gen_fl_multilayer(params);
    case TopologyKind::dag_fl: return gen_dag_fl(params, seed);
    case TopologyKind::ddpl: return gen_ddpl(params);
    case TopologyKind::il_chain: return gen_il_chain(params);
    case TopologyKind::tl_chain: return gen_tl_chain(params);
    case TopologyKind::binary_tree: return gen_binary_tree(params);
    }
    throw ParamError("unknown topology kind");
}

void save_graph(const Umig& g, const std::string& json_path, const std::string& artifact_dir) {
    nlohmann::ordered_json doc;
    doc["nodes"] = nlohmann::ordered_json::array();
    fs::path base = fs::path(json_path).parent_path();

    for (const std::string& id : g.node_ids()) {
        const ModelNode& n = g.node(id);
        nlohmann::ordered_json jn;
        jn["id"] = n.id;
        jn["train_labels"] = n.train_labels;
        jn["dataset_ref"] = n.dataset_ref;
        jn["aggregate"] = n.is_aggregate;
        if (!artifact_dir.empty() && (n.model || n.model_fim)) {
            fs::path art(artifact_dir);
            if (n.model) {
                fs::create_directories(art / "ckpt");
                fs::path file = art / "ckpt" / (n.id + ".bin");
                save_checkpoint(*n.model, file.string());
                jn["model"] = fs::relative(file, base).generic_string();
            }
            if (n.model_fim) {
                fs::create_directories(art / "fim");
                fs::path file = art / "fim" / (n.id + ".bin");
                save_fim(*n.model_fim, file.string());
                jn["fim"] = fs::relative(file, base).generic_string();
            }
        }
        doc["nodes"].push_back(jn);
    }
    doc["edges"] = nlohmann::ordered_json::array();
    for (const Edge& e : g.edges())
        doc["edges"].push_back({e.parent, e.child, e.weight});

    write_text_file(json_path, doc.dump(2) + "\n");
}

Umig load_graph(const std::string& json_path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(json_path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("cannot parse graph JSON " + json_path + ": " + e.what());
    }
    fs::path base = fs::path(json_path).parent_path();

    Umig g;
    try {
        for (const auto& jn : doc.at("nodes")) {
            ModelNode n;
            n.id = jn.at("id").get<std::string>();
            n.train_labels = jn.at("train_labels").get<std::vector<int32_t>>();
            n.dataset_ref = jn.at("dataset_ref").get<std::string>();
            n.is_aggregate = jn.value("aggregate", false);
            if (jn.contains("model"))
                n.model = load_checkpoint((base / jn.at("model").get<std::string>()).string());
            if (jn.contains("fim"))
                n.model_fim = load_fim((base / jn.at("fim").get<std::string>()).string());
            g.add_node(std::move(n));
        }
        for (const auto& je : doc.at("edges")) {
            double w = je.size() > 2 ? je.at(2).get<double>() : 1.0;
            g.add_edge(je.at(0).get<std::string>(), je.at(1).get<std::string>(), w);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed graph JSON " + json_path + ": " + e.what());
    }
    return g;
}

} // namespace fiun
