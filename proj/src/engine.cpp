// SPDX-License-Identifier: Apache-2.0
#include "fiun/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "fiun/error.hpp"
#include "fiun/rng.hpp"

namespace fiun {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

const LabeledDataset& registry_get(const DatasetRegistry& data, const std::string& ref,
                                   const std::string& node_id) {
    auto it = data.find(ref);
    if (it == data.end())
        throw ConfigError("node " + node_id + " references unknown dataset '" + ref + "'");
    return it->second;
}

} // namespace

LinearSoftmaxModel aggregate_from_parents(const Umig& g, const std::string& id) {
    std::vector<std::string> parents = g.parents(id);
    if (parents.empty()) throw ConfigError("aggregate node " + id + " has no parents");
    const LinearSoftmaxModel* first = nullptr;
    for (const std::string& p : parents) {
        const ModelNode& pn = g.node(p);
        if (!pn.model) throw ConfigError("parent " + p + " of " + id + " has no model");
        if (!first) first = &*pn.model;
        else if (pn.model->num_classes != first->num_classes || pn.model->dim != first->dim)
            throw ConfigError("parents of " + id + " disagree on model shape");
    }
    LinearSoftmaxModel out = LinearSoftmaxModel::zeros(first->num_classes, first->dim);
    const double inv = 1.0 / static_cast<double>(parents.size());
    for (const std::string& p : parents) {
        const LinearSoftmaxModel& pm = *g.node(p).model;
        for (size_t l = 0; l < out.weights.size(); ++l) out.weights[l] += pm.weights[l];
        for (size_t l = 0; l < out.bias.size(); ++l) out.bias[l] += pm.bias[l];
    }
    for (double& w : out.weights) w *= inv;
    for (double& b : out.bias) b *= inv;
    return out;
}

namespace {

// Sign-flipped SGD on the forget rows.
LinearSoftmaxModel gradient_ascent(const LinearSoftmaxModel& start, const LabeledDataset& ds,
                                   const TrainConfig& cfg, int32_t ga_epochs) {
    if (ga_epochs < 0) throw ParamError("ga_epochs must be >= 0");
    if (ga_epochs == 0 || ds.size() == 0) return start;

    LinearSoftmaxModel model = start;
    const int32_t K = model.num_classes;
    const int32_t d = model.dim;
    const int64_t n = ds.size();
    Rng rng(derive_seed(cfg.seed, "ga-shuffle"));
    std::vector<int64_t> perm(static_cast<size_t>(n));
    std::vector<double> p(K), grad_w(static_cast<size_t>(K) * d), grad_b(K);

    for (int32_t epoch = 0; epoch < ga_epochs; ++epoch) {
        std::iota(perm.begin(), perm.end(), int64_t{0});
        rng.shuffle(perm);
        for (int64_t startIdx = 0; startIdx < n; startIdx += cfg.batch_size) {
            const int64_t stop = std::min<int64_t>(startIdx + cfg.batch_size, n);
            const double inv = 1.0 / static_cast<double>(stop - startIdx);
            std::fill(grad_w.begin(), grad_w.end(), 0.0);
            std::fill(grad_b.begin(), grad_b.end(), 0.0);
            for (int64_t bi = startIdx; bi < stop; ++bi) {
                const int64_t i = perm[bi];
                const float* x = ds.row(i);
                model.predict_proba(x, p.data());
                p[ds.labels[i]] -= 1.0;
                for (int32_t k = 0; k < K; ++k) {
                    double* gk = grad_w.data() + static_cast<size_t>(k) * d;
                    for (int32_t j = 0; j < d; ++j) gk[j] += p[k] * x[j];
                    grad_b[k] += p[k];
                }
            }
            // ascent: step along the cross-entropy gradient
            for (size_t l = 0; l < model.weights.size(); ++l)
                model.weights[l] += cfg.lr * inv * grad_w[l];
            for (int32_t k = 0; k < K; ++k) model.bias[k] += cfg.lr * inv * grad_b[k];
        }
    }
    return model;
}

} // namespace

void run_parallel(int64_t num_jobs, int32_t workers, const std::function<void(int64_t)>& job) {
    if (num_jobs <= 0) return;
    int64_t n_threads = workers > 0 ? workers : static_cast<int64_t>(std::max(1u, std::thread::hardware_concurrency()));
    n_threads = std::min<int64_t>(n_threads, num_jobs);

    if (n_threads <= 1) {
        for (int64_t i = 0; i < num_jobs; ++i) job(i);
        return;
    }

    std::atomic<int64_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(n_threads));
    for (int64_t t = 0; t < n_threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                int64_t i = next.fetch_add(1);
                if (i >= num_jobs) return;
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

FiunOutcome run_fiun(const Umig& g, const DatasetRegistry& data, const UnlearnRequest& request) {
    FiunOutcome out;
    out.graph = g;
    out.report.method = "fiun";
    out.report.c_f = normalize_label_set(request.c_f);

    auto t_total = Clock::now();
    std::set<std::string> discovery = find_discovery_nodes(g, out.report.c_f, request.discovery);
    UnlearningGraph ug = unlearning_subgraph(g, discovery);
    out.report.phases.discovery_s = seconds_since(t_total);
    out.report.discovery_ids = discovery;
    if (discovery.empty()) return out;

    const std::vector<std::string> disc_ids(discovery.begin(), discovery.end());
    const std::vector<std::string> sub_ids = ug.subgraph.node_ids();

    for (const std::string& id : sub_ids)
        if (!out.graph.node(id).model)
            throw ConfigError("node " + id + " has no trained model");

    // Unlearning FIMs, one job per discovery node.
    std::vector<DiagonalFim> disc_fims(disc_ids.size());
    std::vector<double> disc_fim_time(disc_ids.size(), 0.0);
    std::vector<LabeledDataset> disc_forget(disc_ids.size());
    for (size_t i = 0; i < disc_ids.size(); ++i) {
        const ModelNode& n = g.node(disc_ids[i]);
        const LabeledDataset& ds = registry_get(data, n.dataset_ref, n.id);
        disc_forget[i] = split_by_labels(ds, out.report.c_f).first;
        if (disc_forget[i].size() == 0)
            throw ConfigError("discovery node " + n.id + " has no rows with the unlearned labels");
    }
    auto t_phase = Clock::now();
    run_parallel(static_cast<int64_t>(disc_ids.size()), request.workers, [&](int64_t i) {
        auto t0 = Clock::now();
        disc_fims[i] = compute_fim(*g.node(disc_ids[i]).model, disc_forget[i]);
        disc_fim_time[i] = seconds_since(t0);
    });
    out.report.phases.unlearn_fim_s = seconds_since(t_phase);
    for (size_t i = 0; i < disc_ids.size(); ++i)
        out.report.discovery_fim_time_s[disc_ids[i]] = disc_fim_time[i];

    // Model FIMs are normally cached at training time; compute any that
    // are missing (or all, when forced) and flag it.
    std::vector<std::string> need_fim;
    for (const std::string& id : sub_ids)
        if (request.force_model_fim_recompute || !out.graph.node(id).model_fim)
            need_fim.push_back(id);
    if (!need_fim.empty()) {
        out.report.model_fim_computed_during_unlearn = true;
        std::vector<DiagonalFim> computed(need_fim.size());
        t_phase = Clock::now();
        run_parallel(static_cast<int64_t>(need_fim.size()), request.workers, [&](int64_t i) {
            const ModelNode& n = out.graph.node(need_fim[i]);
            computed[i] = compute_fim(*n.model, registry_get(data, n.dataset_ref, n.id));
        });
        out.report.phases.model_fim_s = seconds_since(t_phase);
        for (size_t i = 0; i < need_fim.size(); ++i)
            out.graph.node(need_fim[i]).model_fim = std::move(computed[i]);
    }

    // Merge + dampen, one job per subgraph node, no inter-node ordering.
    std::vector<LinearSoftmaxModel> new_models(sub_ids.size());
    std::vector<std::vector<int64_t>> triggered(sub_ids.size());
    std::vector<double> merge_time(sub_ids.size(), 0.0), dampen_time(sub_ids.size(), 0.0);
    std::vector<double> fim_wait(sub_ids.size(), 0.0); // slowest reachable discovery FIM
    run_parallel(static_cast<int64_t>(sub_ids.size()), request.workers, [&](int64_t i) {
        const std::string& id = sub_ids[i];
        std::set<std::string> reach = reachable_discovery(ug, id);

        auto t0 = Clock::now();
        std::vector<const DiagonalFim*> inputs;
        for (const std::string& d : reach) { // std::set: ascending, deterministic
            size_t idx = static_cast<size_t>(
                std::lower_bound(disc_ids.begin(), disc_ids.end(), d) - disc_ids.begin());
            inputs.push_back(&disc_fims[idx]);
            fim_wait[i] = std::max(fim_wait[i], disc_fim_time[idx]);
        }
        DiagonalFim merged = merge_fims(inputs);
        merge_time[i] = seconds_since(t0);

        t0 = Clock::now();
        const ModelNode& n = out.graph.node(id);
        DampenResult res = dampen(*n.model, *n.model_fim, merged, request.dampen);
        dampen_time[i] = seconds_since(t0);
        triggered[i] = std::move(res.triggered);
        new_models[i] = std::move(res.model);
    });
    // Join point: the orchestrator is the sole graph mutator.
    for (size_t i = 0; i < sub_ids.size(); ++i)
        out.graph.node(sub_ids[i]).model = std::move(new_models[i]);

    std::map<std::string, NodeMetrics> eval = evaluate(out.graph, data, out.report.c_f);
    for (size_t i = 0; i < sub_ids.size(); ++i) {
        NodeMetrics m = eval.at(sub_ids[i]);
        m.triggered_count = static_cast<int64_t>(triggered[i].size());
        m.triggered = std::move(triggered[i]);
        m.dampen_passes = 1;
        m.unlearn_time_s = merge_time[i] + dampen_time[i];
        m.cumulative_time_s = fim_wait[i] + m.unlearn_time_s;
        out.report.phases.merge_s += merge_time[i];
        out.report.phases.dampen_s += dampen_time[i];
        out.report.max_cumulative_time_s =
            std::max(out.report.max_cumulative_time_s, m.cumulative_time_s);
        out.report.nodes[sub_ids[i]] = m;
    }
    return out;
}

const char* to_string(BaselineKind kind) {
    switch (kind) {
    case BaselineKind::retrain: return "retrain";
    case BaselineKind::finetune: return "finetune";
    case BaselineKind::gradient_ascent: return "gradient_ascent";
    }
    return "unknown";
}

FiunOutcome run_baseline(const Umig& g, const DatasetRegistry& data, const UnlearnRequest& request,
                         BaselineKind kind, const BaselineConfig& cfg) {
    FiunOutcome out;
    out.graph = g;
    out.report.method = to_string(kind);
    out.report.c_f = normalize_label_set(request.c_f);

    if (kind != BaselineKind::gradient_ascent) {
        if (cfg.train.epochs < 1)
            throw ParamError(std::string(to_string(kind)) + " requires epochs >= 1");
        if (!(cfg.train.lr > 0)) throw ParamError("lr must be > 0");
        if (cfg.train.batch_size < 1) throw ParamError("batch_size must be >= 1");
    }

    auto t0 = Clock::now();
    std::set<std::string> discovery = find_discovery_nodes(g, out.report.c_f, request.discovery);
    UnlearningGraph ug = unlearning_subgraph(g, discovery);
    out.report.phases.discovery_s = seconds_since(t0);
    out.report.discovery_ids = discovery;
    if (discovery.empty()) return out;

    // Sequential pass in topological order: each node needs its parents'
    // already-updated parameters.
    std::map<std::string, double> cumulative;
    for (const std::string& id : ug.subgraph.topo_order()) {
        ModelNode& n = out.graph.node(id);
        auto t_node = Clock::now();
        if (n.is_aggregate) {
            n.model = aggregate_from_parents(out.graph, id);
        } else {
            const LabeledDataset& ds = registry_get(data, n.dataset_ref, id);
            auto [forget, retain] = split_by_labels(ds, out.report.c_f);
            TrainConfig tc = cfg.train;
            tc.seed = derive_seed(derive_seed(cfg.train.seed, "baseline-train"), id);
            switch (kind) {
            case BaselineKind::retrain: {
                const LinearSoftmaxModel* model_for_shape =
                    n.model ? &*n.model : nullptr;
                if (!model_for_shape) throw ConfigError("node " + id + " has no trained model");
                LinearSoftmaxModel init =
                    LinearSoftmaxModel::zeros(model_for_shape->num_classes, model_for_shape->dim);
                if (!discovery.count(id)) {
                    LinearSoftmaxModel parent_mean = aggregate_from_parents(out.graph, id);
                    init = parent_mean;
                }
                if (retain.size() == 0)
                    n.model = init; // nothing left to train on
                else
                    n.model = train(retain, tc, &init);
                break;
            }
            case BaselineKind::finetune: {
                if (!n.model) throw ConfigError("node " + id + " has no trained model");
                if (retain.size() == 0) break;
                n.model = train(retain, tc, &*n.model);
                break;
            }
            case BaselineKind::gradient_ascent: {
                if (!n.model) throw ConfigError("node " + id + " has no trained model");
                n.model = gradient_ascent(*n.model, forget, tc, cfg.ga_epochs);
                break;
            }
            }
        }
        double own = seconds_since(t_node);
        double parent_max = 0.0;
        for (const std::string& p : ug.subgraph.parents(id))
            parent_max = std::max(parent_max, cumulative.at(p));
        cumulative[id] = own + parent_max;

        NodeMetrics m;
        m.unlearn_time_s = own;
        m.cumulative_time_s = cumulative[id];
        out.report.max_cumulative_time_s =
            std::max(out.report.max_cumulative_time_s, cumulative[id]);
        out.report.nodes[id] = m;
    }

    std::map<std::string, NodeMetrics> eval = evaluate(out.graph, data, out.report.c_f);
    for (auto& [id, m] : out.report.nodes) {
        const NodeMetrics& e = eval.at(id);
        m.ad_f = e.ad_f;
        m.ad_r = e.ad_r;
        m.delta_acc = e.delta_acc;
        m.forget_empty = e.forget_empty;
        m.retain_empty = e.retain_empty;
    }
    return out;
}

std::map<std::string, NodeMetrics> evaluate(const Umig& g, const DatasetRegistry& data,
                                            const LabelSet& c_f) {
    LabelSet cf = normalize_label_set(c_f);
    std::map<std::string, NodeMetrics> out;
    for (const std::string& id : g.node_ids()) {
        const ModelNode& n = g.node(id);
        if (!n.model) continue;
        const LabeledDataset& ds = registry_get(data, n.dataset_ref, id);
        auto [forget, retain] = split_by_labels(ds, cf);
        AccuracyResult f = accuracy(*n.model, forget);
        AccuracyResult r = accuracy(*n.model, retain);
        NodeMetrics m;
        m.ad_f = f.value;
        m.forget_empty = f.empty;
        m.ad_r = r.value;
        m.retain_empty = r.empty;
        m.delta_acc = m.ad_r - m.ad_f;
        out[id] = m;
    }
    return out;
}

SpeedupResult speedup(const UnlearnReport& report_a, const UnlearnReport& report_b) {
    SpeedupResult res;
    if (report_a.max_cumulative_time_s <= 0.0) {
        res.infinite = true;
        res.ratio = std::numeric_limits<double>::infinity();
        return res;
    }
    res.ratio = report_b.max_cumulative_time_s / report_a.max_cumulative_time_s;
    return res;
}

} // namespace fiun
