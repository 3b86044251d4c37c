// SPDX-License-Identifier: Apache-2.0
#include "fiun.h"

#include <cctype>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "fiun/dataset.hpp"
#include "fiun/error.hpp"
#include "fiun/experiment.hpp"
#include "fiun/fim.hpp"
#include "fiun/io.hpp"
#include "fiun/model.hpp"

struct fiun_dataset {
    fiun::LabeledDataset value;
};

struct fiun_model {
    fiun::LinearSoftmaxModel value;
};

struct fiun_fim {
    fiun::DiagonalFim value;
};

struct fiun_experiment {
    fiun::ExperimentConfig cfg;
    std::unique_ptr<fiun::Experiment> exp; // created on the first stage call
    std::string last_json;
};

namespace {

thread_local std::string g_last_error;

fiun_status to_c_status(fiun::Status s) {
    switch (s) {
    case fiun::Status::ok: return FIUN_OK;
    case fiun::Status::param_error: return FIUN_ERR_PARAM;
    case fiun::Status::invariant_error: return FIUN_ERR_INVARIANT;
    case fiun::Status::config_error: return FIUN_ERR_CONFIG;
    case fiun::Status::io_error: return FIUN_ERR_IO;
    case fiun::Status::internal_error: return FIUN_ERR_INTERNAL;
    }
    return FIUN_ERR_INTERNAL;
}

template <typename Fn>
fiun_status guarded(Fn&& fn) noexcept {
    try {
        fn();
        g_last_error.clear();
        return FIUN_OK;
    } catch (const fiun::Error& e) {
        g_last_error = e.what();
        return to_c_status(e.status());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return FIUN_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return FIUN_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return FIUN_ERR_INTERNAL;
    }
}

fiun_status null_arg(const char* what) {
    g_last_error = std::string(what) + " must not be NULL";
    return FIUN_ERR_PARAM;
}

std::vector<int32_t> parse_label_csv(const char* text) {
    std::vector<int32_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        size_t pos = 0;
        int32_t v;
        try {
            v = std::stoi(item, &pos);
        } catch (const std::exception&) {
            throw fiun::ParamError("invalid label '" + item + "' in label list");
        }
        while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
        if (pos != item.size())
            throw fiun::ParamError("invalid label '" + item + "' in label list");
        out.push_back(v);
    }
    if (out.empty()) throw fiun::ParamError("label list is empty");
    return out;
}

std::vector<std::string> parse_csv_names(const char* text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        size_t b = item.find_first_not_of(" \t");
        size_t e = item.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

fiun::Experiment& ensure_exp(fiun_experiment* exp) {
    if (!exp->exp) exp->exp = std::make_unique<fiun::Experiment>(exp->cfg);
    return *exp->exp;
}

void require_unstarted(const fiun_experiment* exp, const char* setter) {
    if (exp->exp)
        throw fiun::ParamError(std::string(setter) + " must be called before the first stage");
}

std::string written_json(const std::vector<std::string>& files) {
    std::string out = "{\n  \"written\": [";
    for (size_t i = 0; i < files.size(); ++i) {
        out += (i ? ", " : "") + ("\"" + files[i] + "\"");
    }
    out += "]\n}\n";
    return out;
}

} // namespace

extern "C" {

const char* fiun_status_name(fiun_status status) {
    return fiun::status_name(static_cast<fiun::Status>(status));
}

const char* fiun_last_error(void) { return g_last_error.c_str(); }

const char* fiun_version(void) { return "1.0.0"; }

/* ---- datasets ---- */

fiun_status fiun_dataset_synth_blobs(int32_t num_classes, int32_t dim, int64_t samples_per_class,
                                     double center_scale, double noise_sigma, uint64_t seed,
                                     fiun_dataset** out) {
    if (!out) return null_arg("out");
    return guarded([&] {
        fiun::BlobSpec spec;
        spec.num_classes = num_classes;
        spec.dim = dim;
        spec.samples_per_class = samples_per_class;
        if (center_scale > 0) spec.center_scale = center_scale;
        if (noise_sigma > 0) spec.noise_sigma = noise_sigma;
        spec.seed = seed;
        *out = new fiun_dataset{fiun::synth_gaussian_blobs(spec)};
    });
}

fiun_status fiun_dataset_load(const char* path, fiun_dataset** out) {
    if (!path) return null_arg("path");
    if (!out) return null_arg("out");
    return guarded([&] { *out = new fiun_dataset{fiun::load_dataset(path)}; });
}

fiun_status fiun_dataset_save_raw(const fiun_dataset* ds, const char* path) {
    if (!ds) return null_arg("ds");
    if (!path) return null_arg("path");
    return guarded([&] { fiun::save_dataset_raw(ds->value, path); });
}

fiun_status fiun_dataset_num_rows(const fiun_dataset* ds, int64_t* out) {
    if (!ds) return null_arg("ds");
    if (!out) return null_arg("out");
    return guarded([&] { *out = ds->value.size(); });
}

fiun_status fiun_dataset_dim(const fiun_dataset* ds, int32_t* out) {
    if (!ds) return null_arg("ds");
    if (!out) return null_arg("out");
    return guarded([&] { *out = ds->value.dim; });
}

fiun_status fiun_dataset_num_classes(const fiun_dataset* ds, int32_t* out) {
    if (!ds) return null_arg("ds");
    if (!out) return null_arg("out");
    return guarded([&] { *out = ds->value.num_classes; });
}

fiun_status fiun_dataset_split_by_labels(const fiun_dataset* ds, const int32_t* labels,
                                         size_t num_labels, fiun_dataset** out_matching,
                                         fiun_dataset** out_rest) {
    if (!ds) return null_arg("ds");
    if (!labels && num_labels > 0) return null_arg("labels");
    if (!out_matching) return null_arg("out_matching");
    if (!out_rest) return null_arg("out_rest");
    return guarded([&] {
        fiun::LabelSet set =
            fiun::normalize_label_set(std::vector<int32_t>(labels, labels + num_labels));
        auto [hit, rest] = fiun::split_by_labels(ds->value, set);
        *out_matching = new fiun_dataset{std::move(hit)};
        *out_rest = new fiun_dataset{std::move(rest)};
    });
}

fiun_status fiun_dataset_shard(const fiun_dataset* ds, int32_t count, uint64_t seed,
                               int32_t shard_index, fiun_dataset** out) {
    if (!ds) return null_arg("ds");
    if (!out) return null_arg("out");
    return guarded([&] {
        if (shard_index < 0 || shard_index >= count)
            throw fiun::ParamError("shard_index out of range");
        std::vector<fiun::LabeledDataset> shards = fiun::shard_dataset(ds->value, count, seed);
        *out = new fiun_dataset{std::move(shards[shard_index])};
    });
}

void fiun_dataset_destroy(fiun_dataset* ds) { delete ds; }

/* ---- models ---- */

fiun_status fiun_model_train(const fiun_dataset* ds, double lr, int32_t epochs,
                             int32_t batch_size, uint64_t seed, const fiun_model* init,
                             fiun_model** out) {
    if (!ds) return null_arg("ds");
    if (!out) return null_arg("out");
    return guarded([&] {
        fiun::TrainConfig cfg;
        if (lr > 0) cfg.lr = lr;
        if (epochs > 0) cfg.epochs = epochs;
        if (batch_size > 0) cfg.batch_size = batch_size;
        cfg.seed = seed;
        *out = new fiun_model{fiun::train(ds->value, cfg, init ? &init->value : nullptr)};
    });
}

fiun_status fiun_model_accuracy(const fiun_model* model, const fiun_dataset* ds, double* out_value,
                                int32_t* out_is_empty) {
    if (!model) return null_arg("model");
    if (!ds) return null_arg("ds");
    if (!out_value) return null_arg("out_value");
    return guarded([&] {
        fiun::AccuracyResult r = fiun::accuracy(model->value, ds->value);
        *out_value = r.value;
        if (out_is_empty) *out_is_empty = r.empty ? 1 : 0;
    });
}

fiun_status fiun_model_param_count(const fiun_model* model, int64_t* out) {
    if (!model) return null_arg("model");
    if (!out) return null_arg("out");
    return guarded([&] { *out = model->value.param_count(); });
}

fiun_status fiun_model_get_params(const fiun_model* model, double* buffer, size_t buffer_len) {
    if (!model) return null_arg("model");
    if (!buffer) return null_arg("buffer");
    return guarded([&] {
        std::vector<double> flat = model->value.flat_params();
        if (buffer_len < flat.size())
            throw fiun::ParamError("buffer too small: need " + std::to_string(flat.size()) +
                                   " doubles, got " + std::to_string(buffer_len));
        std::memcpy(buffer, flat.data(), flat.size() * sizeof(double));
    });
}

fiun_status fiun_model_save(const fiun_model* model, const char* path) {
    if (!model) return null_arg("model");
    if (!path) return null_arg("path");
    return guarded([&] { fiun::save_checkpoint(model->value, path); });
}

fiun_status fiun_model_load(const char* path, fiun_model** out) {
    if (!path) return null_arg("path");
    if (!out) return null_arg("out");
    return guarded([&] { *out = new fiun_model{fiun::load_checkpoint(path)}; });
}

void fiun_model_destroy(fiun_model* model) { delete model; }

/* ---- Fisher information ---- */

fiun_status fiun_fim_compute(const fiun_model* model, const fiun_dataset* ds, fiun_fim** out) {
    if (!model) return null_arg("model");
    if (!ds) return null_arg("ds");
    if (!out) return null_arg("out");
    return guarded([&] { *out = new fiun_fim{fiun::compute_fim(model->value, ds->value)}; });
}

fiun_status fiun_fim_merge(const fiun_fim* const* fims, size_t count, fiun_fim** out) {
    if (!fims) return null_arg("fims");
    if (!out) return null_arg("out");
    return guarded([&] {
        std::vector<const fiun::DiagonalFim*> parts;
        parts.reserve(count);
        for (size_t i = 0; i < count; ++i) {
            if (!fims[i]) throw fiun::ParamError("fims[" + std::to_string(i) + "] is NULL");
            parts.push_back(&fims[i]->value);
        }
        *out = new fiun_fim{fiun::merge_fims(parts)};
    });
}

fiun_status fiun_fim_length(const fiun_fim* fim, int64_t* out) {
    if (!fim) return null_arg("fim");
    if (!out) return null_arg("out");
    return guarded([&] { *out = static_cast<int64_t>(fim->value.values.size()); });
}

fiun_status fiun_fim_get_values(const fiun_fim* fim, double* buffer, size_t buffer_len) {
    if (!fim) return null_arg("fim");
    if (!buffer) return null_arg("buffer");
    return guarded([&] {
        const std::vector<double>& v = fim->value.values;
        if (buffer_len < v.size())
            throw fiun::ParamError("buffer too small: need " + std::to_string(v.size()) +
                                   " doubles, got " + std::to_string(buffer_len));
        std::memcpy(buffer, v.data(), v.size() * sizeof(double));
    });
}

fiun_status fiun_fim_save(const fiun_fim* fim, const char* path) {
    if (!fim) return null_arg("fim");
    if (!path) return null_arg("path");
    return guarded([&] { fiun::save_fim(fim->value, path); });
}

fiun_status fiun_fim_load(const char* path, fiun_fim** out) {
    if (!path) return null_arg("path");
    if (!out) return null_arg("out");
    return guarded([&] { *out = new fiun_fim{fiun::load_fim(path)}; });
}

void fiun_fim_destroy(fiun_fim* fim) { delete fim; }

fiun_status fiun_dampen(const fiun_model* model, const fiun_fim* model_fim,
                        const fiun_fim* merged_fim, double tau, double gamma, double eta,
                        fiun_model** out_model, int64_t* out_triggered_count) {
    if (!model) return null_arg("model");
    if (!model_fim) return null_arg("model_fim");
    if (!merged_fim) return null_arg("merged_fim");
    if (!out_model) return null_arg("out_model");
    return guarded([&] {
        fiun::DampenConfig cfg;
        cfg.tau = tau;
        cfg.gamma = gamma;
        cfg.eta = eta;
        fiun::DampenResult r = fiun::dampen(model->value, model_fim->value, merged_fim->value, cfg);
        *out_model = new fiun_model{std::move(r.model)};
        if (out_triggered_count) *out_triggered_count = static_cast<int64_t>(r.triggered.size());
    });
}

/* ---- config-driven experiments ---- */

fiun_status fiun_experiment_create_from_file(const char* config_path, fiun_experiment** out) {
    if (!config_path) return null_arg("config_path");
    if (!out) return null_arg("out");
    return guarded([&] {
        auto handle = std::make_unique<fiun_experiment>();
        handle->cfg = fiun::parse_config_file(config_path);
        *out = handle.release();
    });
}

fiun_status fiun_experiment_create_from_json(const char* config_json, fiun_experiment** out) {
    if (!config_json) return null_arg("config_json");
    if (!out) return null_arg("out");
    return guarded([&] {
        auto handle = std::make_unique<fiun_experiment>();
        handle->cfg = fiun::parse_config_json(config_json);
        *out = handle.release();
    });
}

fiun_status fiun_experiment_set_workers(fiun_experiment* exp, int32_t workers) {
    if (!exp) return null_arg("exp");
    return guarded([&] {
        require_unstarted(exp, "set_workers");
        if (workers < 0) throw fiun::ParamError("workers must be >= 0");
        exp->cfg.workers = workers;
    });
}

fiun_status fiun_experiment_set_output_dir(fiun_experiment* exp, const char* dir) {
    if (!exp) return null_arg("exp");
    if (!dir) return null_arg("dir");
    return guarded([&] {
        require_unstarted(exp, "set_output_dir");
        if (!*dir) throw fiun::ParamError("output dir must not be empty");
        exp->cfg.output_dir = dir;
    });
}

fiun_status fiun_experiment_set_seed(fiun_experiment* exp, uint64_t seed) {
    if (!exp) return null_arg("exp");
    return guarded([&] {
        require_unstarted(exp, "set_seed");
        exp->cfg.seed = seed;
    });
}

fiun_status fiun_experiment_set_labels(fiun_experiment* exp, const char* labels) {
    if (!exp) return null_arg("exp");
    if (!labels) return null_arg("labels");
    return guarded([&] {
        require_unstarted(exp, "set_labels");
        exp->cfg.unlearn.labels = fiun::normalize_label_set(parse_label_csv(labels));
    });
}

fiun_status fiun_experiment_set_methods(fiun_experiment* exp, const char* methods) {
    if (!exp) return null_arg("exp");
    if (!methods) return null_arg("methods");
    return guarded([&] {
        require_unstarted(exp, "set_methods");
        std::vector<std::string> names = parse_csv_names(methods);
        if (names.empty()) throw fiun::ParamError("method list is empty");
        exp->cfg.methods = std::move(names);
    });
}

fiun_status fiun_experiment_gen_topo(fiun_experiment* exp) {
    if (!exp) return null_arg("exp");
    return guarded([&] {
        fiun::Experiment& e = ensure_exp(exp);
        exp->last_json = written_json({e.write_graph()});
    });
}

fiun_status fiun_experiment_train(fiun_experiment* exp) {
    if (!exp) return null_arg("exp");
    return guarded([&] {
        fiun::Experiment& e = ensure_exp(exp);
        e.train_all();
        exp->last_json = written_json({e.write_graph()});
    });
}

fiun_status fiun_experiment_unlearn(fiun_experiment* exp, const char* method) {
    if (!exp) return null_arg("exp");
    if (!method) return null_arg("method");
    return guarded([&] {
        fiun::Experiment& e = ensure_exp(exp);
        e.run_method(method);
        e.write_reports();
        exp->last_json = e.report_json(method);
    });
}

fiun_status fiun_experiment_evaluate(fiun_experiment* exp) {
    if (!exp) return null_arg("exp");
    return guarded([&] {
        fiun::Experiment& e = ensure_exp(exp);
        e.train_all();
        exp->last_json = e.evaluation_json();
        std::filesystem::create_directories(e.config().output_dir);
        fiun::write_text_file(
            (std::filesystem::path(e.config().output_dir) / "evaluation.json").string(),
            exp->last_json);
    });
}

fiun_status fiun_experiment_compare(fiun_experiment* exp, const char* method_a,
                                    const char* method_b) {
    if (!exp) return null_arg("exp");
    if (!method_a) return null_arg("method_a");
    if (!method_b) return null_arg("method_b");
    return guarded([&] {
        fiun::Experiment& e = ensure_exp(exp);
        exp->last_json = e.compare_json(method_a, method_b);
        std::filesystem::create_directories(e.config().output_dir);
        fiun::write_text_file(
            (std::filesystem::path(e.config().output_dir) / "compare.json").string(),
            exp->last_json);
    });
}

fiun_status fiun_experiment_run_all(fiun_experiment* exp) {
    if (!exp) return null_arg("exp");
    return guarded([&] {
        fiun::Experiment& e = ensure_exp(exp);
        e.train_all();
        e.run_requested_methods();
        std::vector<std::string> files;
        files.push_back(e.write_graph());
        std::vector<std::string> reports = e.write_reports();
        files.insert(files.end(), reports.begin(), reports.end());
        exp->last_json = written_json(files);
    });
}

fiun_status fiun_experiment_last_json(const fiun_experiment* exp, const char** out) {
    if (!exp) return null_arg("exp");
    if (!out) return null_arg("out");
    return guarded([&] {
        if (exp->last_json.empty()) throw fiun::ParamError("no stage has produced output yet");
        *out = exp->last_json.c_str();
    });
}

void fiun_experiment_destroy(fiun_experiment* exp) { delete exp; }

} // extern "C"
