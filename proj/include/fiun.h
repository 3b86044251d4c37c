/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C API for the FIUn unlearning library.
 *
 * All functions return fiun_status; out-parameters are written only on
 * FIUN_OK. Handles are opaque and must be released with the matching
 * _destroy function. fiun_last_error() returns a thread-local message
 * for the most recent failure on the calling thread.
 */
#ifndef FIUN_H
#define FIUN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fiun_status {
    FIUN_OK = 0,
    FIUN_ERR_PARAM = 1,
    FIUN_ERR_INVARIANT = 2,
    FIUN_ERR_CONFIG = 3,
    FIUN_ERR_IO = 4,
    FIUN_ERR_INTERNAL = 5
} fiun_status;

const char* fiun_status_name(fiun_status status);
const char* fiun_last_error(void);
const char* fiun_version(void);

typedef struct fiun_dataset fiun_dataset;
typedef struct fiun_model fiun_model;
typedef struct fiun_fim fiun_fim;
typedef struct fiun_experiment fiun_experiment;

/* ---- datasets ---- */

/* Gaussian blob synthesis; pass center_scale/noise_sigma <= 0 for the
 * defaults (9.0 / 1.0). */
fiun_status fiun_dataset_synth_blobs(int32_t num_classes, int32_t dim, int64_t samples_per_class,
                                     double center_scale, double noise_sigma, uint64_t seed,
                                     fiun_dataset** out);
fiun_status fiun_dataset_load(const char* path, fiun_dataset** out);
fiun_status fiun_dataset_save_raw(const fiun_dataset* ds, const char* path);
fiun_status fiun_dataset_num_rows(const fiun_dataset* ds, int64_t* out);
fiun_status fiun_dataset_dim(const fiun_dataset* ds, int32_t* out);
fiun_status fiun_dataset_num_classes(const fiun_dataset* ds, int32_t* out);
/* Rows whose labels are in / not in the given set. */
fiun_status fiun_dataset_split_by_labels(const fiun_dataset* ds, const int32_t* labels,
                                         size_t num_labels, fiun_dataset** out_matching,
                                         fiun_dataset** out_rest);
fiun_status fiun_dataset_shard(const fiun_dataset* ds, int32_t count, uint64_t seed,
                               int32_t shard_index, fiun_dataset** out);
void fiun_dataset_destroy(fiun_dataset* ds);

/* ---- models ---- */

/* Mini-batch SGD; lr/epochs/batch_size <= 0 select the defaults
 * (0.1 / 100 / 64). init may be NULL to start from zeros. */
fiun_status fiun_model_train(const fiun_dataset* ds, double lr, int32_t epochs,
                             int32_t batch_size, uint64_t seed, const fiun_model* init,
                             fiun_model** out);
fiun_status fiun_model_accuracy(const fiun_model* model, const fiun_dataset* ds, double* out_value,
                                int32_t* out_is_empty);
fiun_status fiun_model_param_count(const fiun_model* model, int64_t* out);
/* Copies the flat parameters (row-major weights then bias). */
fiun_status fiun_model_get_params(const fiun_model* model, double* buffer, size_t buffer_len);
fiun_status fiun_model_save(const fiun_model* model, const char* path);
fiun_status fiun_model_load(const char* path, fiun_model** out);
void fiun_model_destroy(fiun_model* model);

/* ---- Fisher information ---- */

fiun_status fiun_fim_compute(const fiun_model* model, const fiun_dataset* ds, fiun_fim** out);
fiun_status fiun_fim_merge(const fiun_fim* const* fims, size_t count, fiun_fim** out);
fiun_status fiun_fim_length(const fiun_fim* fim, int64_t* out);
fiun_status fiun_fim_get_values(const fiun_fim* fim, double* buffer, size_t buffer_len);
fiun_status fiun_fim_save(const fiun_fim* fim, const char* path);
fiun_status fiun_fim_load(const char* path, fiun_fim** out);
void fiun_fim_destroy(fiun_fim* fim);

/* Dampens the model with its own FIM and a merged unlearning FIM;
 * returns the updated model and (optionally) the triggered parameter
 * count. */
fiun_status fiun_dampen(const fiun_model* model, const fiun_fim* model_fim,
                        const fiun_fim* merged_fim, double tau, double gamma, double eta,
                        fiun_model** out_model, int64_t* out_triggered_count);

/* ---- config-driven experiments ---- */

fiun_status fiun_experiment_create_from_file(const char* config_path, fiun_experiment** out);
fiun_status fiun_experiment_create_from_json(const char* config_json, fiun_experiment** out);
/* Overrides applied before the first stage runs. labels is a
 * comma-separated list, e.g. "3" or "0,4,7,9". */
fiun_status fiun_experiment_set_workers(fiun_experiment* exp, int32_t workers);
fiun_status fiun_experiment_set_output_dir(fiun_experiment* exp, const char* dir);
fiun_status fiun_experiment_set_seed(fiun_experiment* exp, uint64_t seed);
fiun_status fiun_experiment_set_labels(fiun_experiment* exp, const char* labels);
fiun_status fiun_experiment_set_methods(fiun_experiment* exp, const char* methods);

/* Stages. Each one runs whatever earlier stages it needs. */
fiun_status fiun_experiment_gen_topo(fiun_experiment* exp);   /* writes graph.json */
fiun_status fiun_experiment_train(fiun_experiment* exp);      /* + checkpoints and FIM files */
fiun_status fiun_experiment_unlearn(fiun_experiment* exp, const char* method);
fiun_status fiun_experiment_evaluate(fiun_experiment* exp);
fiun_status fiun_experiment_compare(fiun_experiment* exp, const char* method_a,
                                    const char* method_b);
fiun_status fiun_experiment_run_all(fiun_experiment* exp);

/* Last produced JSON document (report/evaluation/comparison); owned by
 * the experiment, valid until the next stage call or destroy. */
fiun_status fiun_experiment_last_json(const fiun_experiment* exp, const char** out);
void fiun_experiment_destroy(fiun_experiment* exp);

#ifdef __cplusplus
}
#endif

#endif /* FIUN_H */
