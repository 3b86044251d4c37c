// SPDX-License-Identifier: Apache-2.0
#include "fiun/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fiun/error.hpp"
#include "fiun/io.hpp"
#include "fiun/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace fiun {

namespace {

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) { known = true; break; }
        if (!known)
            throw ConfigError("unknown config key '" + (path.empty() ? key : path + "." + key) +
                              "'");
    }
}

const json* maybe(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

uint64_t get_u64(const json& v, const std::string& path) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<int64_t>() >= 0))
        throw ConfigError("expected nonnegative integer at " + path);
    return v.get<uint64_t>();
}

int32_t get_i32(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError("expected integer at " + path);
    return v.get<int32_t>();
}

int64_t get_i64(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError("expected integer at " + path);
    return v.get<int64_t>();
}

double get_f64(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError("expected number at " + path);
    return v.get<double>();
}

bool get_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw ConfigError("expected boolean at " + path);
    return v.get<bool>();
}

std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError("expected string at " + path);
    return v.get<std::string>();
}

std::vector<int32_t> get_int_array(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError("expected array of integers at " + path);
    std::vector<int32_t> out;
    for (size_t i = 0; i < v.size(); ++i) out.push_back(get_i32(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::string normalize_method(const std::string& m) {
    if (m == "fiun" || m == "retrain" || m == "finetune") return m;
    if (m == "ga" || m == "gradient_ascent") return "gradient_ascent";
    throw ConfigError("unknown method '" + m + "' (expected fiun|retrain|finetune|ga)");
}

void parse_dataset(const json& v, DatasetSpec& out) {
    check_keys(v, "dataset",
               {"kind", "path", "num_classes", "dim", "samples_per_class", "center_scale",
                "noise_sigma"});
    std::string kind = maybe(v, "kind") ? get_string(*maybe(v, "kind"), "dataset.kind") : "blobs";
    if (kind == "blobs") {
        out.kind = DatasetSpec::Kind::blobs;
        if (maybe(v, "path"))
            throw ConfigError("dataset.path is only valid with kind 'file'");
        if (auto* p = maybe(v, "num_classes")) out.blobs.num_classes = get_i32(*p, "dataset.num_classes");
        if (auto* p = maybe(v, "dim")) out.blobs.dim = get_i32(*p, "dataset.dim");
        if (auto* p = maybe(v, "samples_per_class"))
            out.blobs.samples_per_class = get_i64(*p, "dataset.samples_per_class");
        if (auto* p = maybe(v, "center_scale")) out.blobs.center_scale = get_f64(*p, "dataset.center_scale");
        if (auto* p = maybe(v, "noise_sigma")) out.blobs.noise_sigma = get_f64(*p, "dataset.noise_sigma");
    } else if (kind == "file") {
        out.kind = DatasetSpec::Kind::file;
        const json* p = maybe(v, "path");
        if (!p) throw ConfigError("dataset.path is required for kind 'file'");
        out.path = get_string(*p, "dataset.path");
        if (!fs::exists(out.path)) throw ConfigError("dataset.path does not exist: " + out.path);
    } else {
        throw ConfigError("dataset.kind must be 'blobs' or 'file'");
    }
}

void parse_topology(const json& v, ExperimentConfig& cfg) {
    check_keys(v, "topology",
               {"kind", "clients", "rounds", "groups", "fan_in", "workers", "iterations", "steps",
                "base_labels", "labels_per_step", "depth"});
    const json* kind = maybe(v, "kind");
    if (!kind) throw ConfigError("topology.kind is required");
    cfg.topology_kind = topology_kind_from_string(get_string(*kind, "topology.kind"));
    TopologyParams& p = cfg.topology;
    if (auto* x = maybe(v, "clients")) p.clients = get_i32(*x, "topology.clients");
    if (auto* x = maybe(v, "rounds")) p.rounds = get_i32(*x, "topology.rounds");
    if (auto* x = maybe(v, "groups")) p.groups = get_i32(*x, "topology.groups");
    if (auto* x = maybe(v, "fan_in")) p.fan_in = get_i32(*x, "topology.fan_in");
    if (auto* x = maybe(v, "workers")) p.workers = get_i32(*x, "topology.workers");
    if (auto* x = maybe(v, "iterations")) p.iterations = get_i32(*x, "topology.iterations");
    if (auto* x = maybe(v, "steps")) p.steps = get_i32(*x, "topology.steps");
    if (auto* x = maybe(v, "base_labels")) p.base_labels = get_i32(*x, "topology.base_labels");
    if (auto* x = maybe(v, "labels_per_step"))
        p.labels_per_step = get_i32(*x, "topology.labels_per_step");
    if (auto* x = maybe(v, "depth")) p.depth = get_i32(*x, "topology.depth");
}

void parse_train(const json& v, TrainConfig& t) {
    check_keys(v, "train", {"lr", "epochs", "batch_size"});
    if (auto* x = maybe(v, "lr")) t.lr = get_f64(*x, "train.lr");
    if (auto* x = maybe(v, "epochs")) t.epochs = get_i32(*x, "train.epochs");
    if (auto* x = maybe(v, "batch_size")) t.batch_size = get_i32(*x, "train.batch_size");
}

void parse_unlearn(const json& v, UnlearnSpec& u) {
    check_keys(v, "unlearn", {"labels", "dampen", "discovery_mode", "accuracy_threshold"});
    if (auto* x = maybe(v, "labels"))
        u.labels = normalize_label_set(get_int_array(*x, "unlearn.labels"));
    if (auto* x = maybe(v, "dampen")) {
        check_keys(*x, "unlearn.dampen", {"tau", "gamma", "eta"});
        if (auto* y = maybe(*x, "tau")) u.dampen.tau = get_f64(*y, "unlearn.dampen.tau");
        if (auto* y = maybe(*x, "gamma")) u.dampen.gamma = get_f64(*y, "unlearn.dampen.gamma");
        if (auto* y = maybe(*x, "eta")) u.dampen.eta = get_f64(*y, "unlearn.dampen.eta");
    }
    if (auto* x = maybe(v, "discovery_mode")) {
        std::string mode = get_string(*x, "unlearn.discovery_mode");
        if (mode == "metadata") u.discovery_mode = DiscoveryMode::Kind::metadata;
        else if (mode == "accuracy") u.discovery_mode = DiscoveryMode::Kind::accuracy;
        else throw ConfigError("unlearn.discovery_mode must be 'metadata' or 'accuracy'");
    }
    if (auto* x = maybe(v, "accuracy_threshold"))
        u.accuracy_threshold = get_f64(*x, "unlearn.accuracy_threshold");
}

} // namespace

ExperimentConfig parse_config_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    check_keys(doc, "",
               {"seed", "dataset", "topology", "train", "train_aggregates", "unlearn", "methods",
                "ga_epochs", "output_dir", "workers"});

    ExperimentConfig cfg;
    const json* seed = maybe(doc, "seed");
    if (!seed) throw ConfigError("config is missing required key 'seed'");
    cfg.seed = get_u64(*seed, "seed");

    if (auto* v = maybe(doc, "dataset")) parse_dataset(*v, cfg.dataset);
    const json* topo = maybe(doc, "topology");
    if (!topo) throw ConfigError("config is missing required key 'topology'");
    parse_topology(*topo, cfg);
    if (auto* v = maybe(doc, "train")) parse_train(*v, cfg.train);
    if (auto* v = maybe(doc, "train_aggregates"))
        cfg.train_aggregates = get_bool(*v, "train_aggregates");
    if (auto* v = maybe(doc, "unlearn")) parse_unlearn(*v, cfg.unlearn);
    if (auto* v = maybe(doc, "methods")) {
        if (!v->is_array()) throw ConfigError("expected array of strings at methods");
        cfg.methods.clear();
        for (size_t i = 0; i < v->size(); ++i)
            cfg.methods.push_back(
                normalize_method(get_string((*v)[i], "methods[" + std::to_string(i) + "]")));
        if (cfg.methods.empty()) throw ConfigError("methods must not be empty");
    }
    if (auto* v = maybe(doc, "ga_epochs")) cfg.ga_epochs = get_i32(*v, "ga_epochs");
    if (auto* v = maybe(doc, "output_dir")) cfg.output_dir = get_string(*v, "output_dir");
    if (auto* v = maybe(doc, "workers")) cfg.workers = get_i32(*v, "workers");
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    return parse_config_json(read_text_file(path));
}

Experiment::Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)) {}

void Experiment::materialize_datasets() {
    LabeledDataset base;
    if (cfg_.dataset.kind == DatasetSpec::Kind::blobs) {
        BlobSpec spec = cfg_.dataset.blobs;
        spec.seed = derive_seed(cfg_.seed, "dataset");
        base = synth_gaussian_blobs(spec);
    } else {
        base = load_dataset(cfg_.dataset.path);
    }
    const int32_t K = base.num_classes;

    // Collect referenced dataset names grouped by family.
    std::set<std::string> shard_refs, group_refs, task_refs, range_refs;
    for (const std::string& id : graph_.node_ids()) {
        const std::string& ref = graph_.node(id).dataset_ref;
        if (ref == "full") continue;
        if (ref.rfind("shard", 0) == 0) shard_refs.insert(ref);
        else if (ref.rfind("group", 0) == 0) group_refs.insert(ref);
        else if (ref.rfind("task", 0) == 0) task_refs.insert(ref);
        else if (ref.rfind("labels_", 0) == 0) range_refs.insert(ref);
        else throw ConfigError("unrecognized dataset_ref '" + ref + "'");
    }

    if (!shard_refs.empty()) {
        std::vector<std::string> ordered(shard_refs.begin(), shard_refs.end());
        std::vector<LabeledDataset> shards =
            shard_dataset(base, static_cast<int32_t>(ordered.size()), derive_seed(cfg_.seed, "shards"));
        for (size_t i = 0; i < ordered.size(); ++i) registry_[ordered[i]] = std::move(shards[i]);
    }
    for (const std::string& ref : group_refs) {
        // union of the group's client shards, e.g. group1 <- shard1x*
        std::string prefix = "shard" + ref.substr(5) + "x";
        std::vector<const LabeledDataset*> parts;
        for (const std::string& sref : shard_refs)
            if (sref.rfind(prefix, 0) == 0) parts.push_back(&registry_.at(sref));
        if (parts.empty()) throw ConfigError("group ref '" + ref + "' matches no shards");
        registry_[ref] = concat_datasets(parts);
    }
    if (!task_refs.empty()) {
        // contiguous label ranges, one per distinct task ref
        std::vector<std::string> ordered(task_refs.begin(), task_refs.end());
        const int32_t t = static_cast<int32_t>(ordered.size());
        int32_t lo = 0;
        for (int32_t i = 0; i < t; ++i) {
            int32_t len = K / t + (i < K % t ? 1 : 0);
            LabelSet chunk;
            for (int32_t l = lo; l < lo + len; ++l) chunk.push_back(l);
            lo += len;
            registry_[ordered[i]] = split_by_labels(base, chunk).first;
        }
    }
    for (const std::string& ref : range_refs) {
        int32_t lo = 0, hi = 0;
        if (ref.rfind("labels_upto_", 0) == 0) {
            hi = std::stoi(ref.substr(12));
        } else {
            size_t sep = ref.find('_', 7);
            lo = std::stoi(ref.substr(7, sep - 7));
            hi = std::stoi(ref.substr(sep + 1));
        }
        lo = std::clamp(lo, 0, K);
        hi = std::clamp(hi, 0, K);
        LabelSet range;
        for (int32_t l = lo; l < hi; ++l) range.push_back(l);
        registry_[ref] = split_by_labels(base, range).first;
    }
    registry_["full"] = std::move(base);
}

void Experiment::build() {
    if (built_) return;
    graph_ = gen_topology(cfg_.topology_kind, cfg_.topology, derive_seed(cfg_.seed, "topology"));
    materialize_datasets();
    for (const std::string& id : graph_.node_ids()) {
        ModelNode& n = graph_.node(id);
        auto it = registry_.find(n.dataset_ref);
        if (it == registry_.end())
            throw ConfigError("node " + id + " references unknown dataset '" + n.dataset_ref + "'");
        n.train_labels = it->second.present_labels();
    }
    built_ = true;
}

void Experiment::train_all() {
    if (trained_) return;
    build();
    for (const std::string& id : graph_.topo_order()) {
        ModelNode& n = graph_.node(id);
        const LabeledDataset& ds = registry_.at(n.dataset_ref);
        TrainConfig tc = cfg_.train;
        tc.seed = derive_seed(derive_seed(cfg_.seed, "train-node"), id);
        if (n.is_aggregate) {
            n.model = aggregate_from_parents(graph_, id);
            if (cfg_.train_aggregates && ds.size() > 0) n.model = train(ds, tc, &*n.model);
        } else if (graph_.parents(id).empty()) {
            n.model = train(ds, tc);
        } else {
            LinearSoftmaxModel init = aggregate_from_parents(graph_, id);
            n.model = train(ds, tc, &init);
        }
        n.model_fim = compute_fim(*n.model, ds);
    }
    pre_eval_ = evaluate(graph_, registry_, cfg_.unlearn.labels);
    trained_ = true;
}

MethodOutcome& Experiment::run_method(const std::string& method) {
    std::string m = normalize_method(method);
    train_all();
    if (cfg_.unlearn.labels.empty()) throw ConfigError("unlearn.labels is empty");

    UnlearnRequest request;
    request.c_f = cfg_.unlearn.labels;
    request.dampen = cfg_.unlearn.dampen;
    request.discovery.kind = cfg_.unlearn.discovery_mode;
    request.discovery.threshold = cfg_.unlearn.accuracy_threshold;
    request.workers = cfg_.workers;
    const LabeledDataset* probe = nullptr;
    LabeledDataset probe_ds;
    if (request.discovery.kind == DiscoveryMode::Kind::accuracy) {
        probe_ds = split_by_labels(registry_.at("full"), request.c_f).first;
        probe = &probe_ds;
        request.discovery.probe = probe;
    }

    FiunOutcome fo;
    if (m == "fiun") {
        fo = run_fiun(graph_, registry_, request);
    } else {
        BaselineConfig bc;
        bc.train = cfg_.train;
        bc.train.seed = derive_seed(cfg_.seed, "baseline");
        bc.ga_epochs = cfg_.ga_epochs;
        BaselineKind kind = m == "retrain" ? BaselineKind::retrain
                          : m == "finetune" ? BaselineKind::finetune
                                            : BaselineKind::gradient_ascent;
        fo = run_baseline(graph_, registry_, request, kind, bc);
    }

    MethodOutcome outcome;
    outcome.report = std::move(fo.report);
    outcome.pre_eval = pre_eval_;
    outcome.post_eval = evaluate(fo.graph, registry_, cfg_.unlearn.labels);
    outcome.graph = std::move(fo.graph);
    outcomes_[m] = std::move(outcome);
    return outcomes_[m];
}

void Experiment::run_requested_methods() {
    for (const std::string& m : cfg_.methods) run_method(m);
}

std::string Experiment::write_graph() {
    build();
    fs::create_directories(cfg_.output_dir);
    fs::path path = fs::path(cfg_.output_dir) / "graph.json";
    save_graph(graph_, path.string(), cfg_.output_dir);
    return path.string();
}

namespace {

ordered_json metrics_json(const NodeMetrics& m) {
    ordered_json j;
    j["ad_f"] = m.ad_f;
    j["ad_r"] = m.ad_r;
    j["delta_acc"] = m.delta_acc;
    j["forget_empty"] = m.forget_empty;
    j["retain_empty"] = m.retain_empty;
    return j;
}

} // namespace

std::string report_to_json(const UnlearnReport& report,
                           const std::map<std::string, NodeMetrics>& pre_eval,
                           const std::map<std::string, NodeMetrics>& post_eval) {
    ordered_json doc;
    doc["method"] = report.method;
    doc["c_f"] = report.c_f;
    doc["discovery"] = std::vector<std::string>(report.discovery_ids.begin(),
                                                report.discovery_ids.end());
    doc["model_fim_computed_during_unlearn"] = report.model_fim_computed_during_unlearn;
    doc["nodes"] = ordered_json::object();
    for (const auto& [id, m] : report.nodes) {
        ordered_json jn = metrics_json(m);
        jn["triggered"] = m.triggered_count;
        jn["dampen_passes"] = m.dampen_passes;
        auto pre = pre_eval.find(id);
        if (pre != pre_eval.end()) {
            jn["pre_ad_f"] = pre->second.ad_f;
            jn["pre_ad_r"] = pre->second.ad_r;
            jn["ad_r_drop"] = pre->second.ad_r - m.ad_r;
        }
        jn["own_time_s"] = m.unlearn_time_s;
        jn["cumulative_time_s"] = m.cumulative_time_s;
        doc["nodes"][id] = jn;
    }
    // Nodes outside the unlearning graph, for completeness.
    doc["untouched_nodes"] = ordered_json::object();
    for (const auto& [id, m] : post_eval)
        if (!report.nodes.count(id)) doc["untouched_nodes"][id] = metrics_json(m);
    doc["phases"] = {{"discovery_s", report.phases.discovery_s},
                     {"unlearn_fim_s", report.phases.unlearn_fim_s},
                     {"model_fim_s", report.phases.model_fim_s},
                     {"merge_s", report.phases.merge_s},
                     {"dampen_s", report.phases.dampen_s}};
    doc["discovery_fim_time_s"] = report.discovery_fim_time_s;
    doc["max_cumulative_time_s"] = report.max_cumulative_time_s;
    return doc.dump(2) + "\n";
}

std::string report_to_csv_rows(const UnlearnReport& report,
                               const std::map<std::string, NodeMetrics>& post_eval) {
    (void)post_eval;
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(6);
    for (const auto& [id, m] : report.nodes) {
        out << report.method << ',' << id << ',' << report.c_f.size() << ',' << m.ad_f << ','
            << m.ad_r << ',' << m.delta_acc << ',' << m.cumulative_time_s << "\n";
    }
    return out.str();
}

std::string Experiment::report_json(const std::string& method) const {
    std::string m = normalize_method(method);
    auto it = outcomes_.find(m);
    if (it == outcomes_.end()) throw ParamError("method '" + m + "' has not been run");
    return report_to_json(it->second.report, it->second.pre_eval, it->second.post_eval);
}

std::string Experiment::compare_json(const std::string& method_a,
                                     const std::string& method_b) const {
    std::string ma = normalize_method(method_a), mb = normalize_method(method_b);
    auto ia = outcomes_.find(ma), ib = outcomes_.find(mb);
    if (ia == outcomes_.end()) throw ParamError("method '" + ma + "' has not been run");
    if (ib == outcomes_.end()) throw ParamError("method '" + mb + "' has not been run");
    SpeedupResult s = speedup(ia->second.report, ib->second.report);
    ordered_json doc;
    doc["method_a"] = ma;
    doc["method_b"] = mb;
    doc["max_cumulative_time_s_a"] = ia->second.report.max_cumulative_time_s;
    doc["max_cumulative_time_s_b"] = ib->second.report.max_cumulative_time_s;
    doc["speedup_b_over_a"] = s.infinite ? ordered_json("infinite") : ordered_json(s.ratio);
    return doc.dump(2) + "\n";
}

std::string Experiment::evaluation_json() const {
    ordered_json doc;
    doc["c_f"] = cfg_.unlearn.labels;
    doc["nodes"] = ordered_json::object();
    for (const auto& [id, m] : pre_eval_) doc["nodes"][id] = metrics_json(m);
    return doc.dump(2) + "\n";
}

std::vector<std::string> Experiment::write_reports() {
    std::vector<std::string> files;
    fs::create_directories(cfg_.output_dir);
    std::ostringstream csv;
    csv << kReportCsvHeader << "\n";
    std::vector<std::string> order;
    for (const std::string& m : cfg_.methods) order.push_back(normalize_method(m));
    for (const auto& [name, _] : outcomes_)
        if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
    for (const std::string& name : order) {
        auto it = outcomes_.find(name);
        if (it == outcomes_.end()) continue;
        fs::path jpath = fs::path(cfg_.output_dir) / ("report_" + name + ".json");
        write_text_file(jpath.string(), report_json(name));
        files.push_back(jpath.string());
        csv << report_to_csv_rows(it->second.report, it->second.post_eval);

        fs::path mdir = fs::path(cfg_.output_dir) / "methods" / name;
        fs::create_directories(mdir);
        fs::path gpath = mdir / "graph.json";
        save_graph(it->second.graph, gpath.string(), mdir.string());
        files.push_back(gpath.string());
    }
    fs::path cpath = fs::path(cfg_.output_dir) / "report.csv";
    write_text_file(cpath.string(), csv.str());
    files.push_back(cpath.string());
    return files;
}

std::vector<std::string> run_experiment(const ExperimentConfig& cfg) {
    Experiment exp(cfg);
    exp.build();
    exp.train_all();
    exp.run_requested_methods();
    std::vector<std::string> files;
    files.push_back(exp.write_graph());
    std::vector<std::string> reports = exp.write_reports();
    files.insert(files.end(), reports.begin(), reports.end());
    return files;
}

} // namespace fiun
