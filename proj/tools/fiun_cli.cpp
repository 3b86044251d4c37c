// SPDX-License-Identifier: Apache-2.0
#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "fiun.h"

namespace {

struct ExperimentGuard {
    fiun_experiment* handle = nullptr;
    ~ExperimentGuard() { fiun_experiment_destroy(handle); }
};

int fail(const char* stage, fiun_status status) {
    std::fprintf(stderr, "fiun: stage '%s' failed (%s): %s\n", stage, fiun_status_name(status),
                 fiun_last_error());
    return static_cast<int>(status);
}

int print_last(const fiun_experiment* exp) {
    const char* text = nullptr;
    fiun_status st = fiun_experiment_last_json(exp, &text);
    if (st != FIUN_OK) return fail("output", st);
    std::fputs(text, stdout);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"FIUn: fully parallel unlearning over networks of inherited models"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string labels;
    std::string method;
    std::string method_a, method_b;
    uint64_t seed = 0;
    int32_t workers = 0;

    app.add_option("--config", config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    CLI::Option* out_opt = app.add_option("--out", out_dir, "output directory override");
    CLI::Option* labels_opt =
        app.add_option("--labels", labels, "labels to unlearn, comma-separated (e.g. 0,4,7)");
    CLI::Option* seed_opt = app.add_option("--seed", seed, "global seed override");
    CLI::Option* workers_opt =
        app.add_option("--workers", workers, "worker threads (0 = available parallelism)");

    CLI::App* gen = app.add_subcommand("gen-topo", "generate the model graph and write graph.json");
    CLI::App* train = app.add_subcommand("train", "train every node model and write checkpoints");
    CLI::App* unlearn =
        app.add_subcommand("unlearn", "full pipeline: train, unlearn with the requested "
                                      "methods, evaluate, write reports");
    CLI::Option* method_opt =
        unlearn->add_option("--method", method, "run a single method (fiun|retrain|finetune|ga)");
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "train if needed, report per-node accuracy metrics");
    CLI::App* compare = app.add_subcommand("compare", "run two methods and report the speedup");
    compare->add_option("method_a", method_a, "reference method")->required();
    compare->add_option("method_b", method_b, "method whose time is divided by the reference's")
        ->required();
    for (CLI::App* sub : {gen, train, unlearn, evaluate, compare}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    ExperimentGuard exp;
    fiun_status st = fiun_experiment_create_from_file(config_path.c_str(), &exp.handle);
    if (st != FIUN_OK) return fail("config", st);

    if (seed_opt->count() && (st = fiun_experiment_set_seed(exp.handle, seed)) != FIUN_OK)
        return fail("config", st);
    if (workers_opt->count() && (st = fiun_experiment_set_workers(exp.handle, workers)) != FIUN_OK)
        return fail("config", st);
    if (out_opt->count() &&
        (st = fiun_experiment_set_output_dir(exp.handle, out_dir.c_str())) != FIUN_OK)
        return fail("config", st);
    if (labels_opt->count() &&
        (st = fiun_experiment_set_labels(exp.handle, labels.c_str())) != FIUN_OK)
        return fail("config", st);
    if (method_opt->count() &&
        (st = fiun_experiment_set_methods(exp.handle, method.c_str())) != FIUN_OK)
        return fail("config", st);

    if (gen->parsed()) {
        if ((st = fiun_experiment_gen_topo(exp.handle)) != FIUN_OK) return fail("gen-topo", st);
        return print_last(exp.handle);
    }
    if (train->parsed()) {
        if ((st = fiun_experiment_train(exp.handle)) != FIUN_OK) return fail("train", st);
        return print_last(exp.handle);
    }
    if (unlearn->parsed()) {
        if ((st = fiun_experiment_run_all(exp.handle)) != FIUN_OK) return fail("unlearn", st);
        return print_last(exp.handle);
    }
    if (evaluate->parsed()) {
        if ((st = fiun_experiment_evaluate(exp.handle)) != FIUN_OK) return fail("evaluate", st);
        return print_last(exp.handle);
    }
    if (compare->parsed()) {
        if ((st = fiun_experiment_unlearn(exp.handle, method_a.c_str())) != FIUN_OK)
            return fail(("unlearn:" + method_a).c_str(), st);
        if ((st = fiun_experiment_unlearn(exp.handle, method_b.c_str())) != FIUN_OK)
            return fail(("unlearn:" + method_b).c_str(), st);
        if ((st = fiun_experiment_compare(exp.handle, method_a.c_str(), method_b.c_str())) !=
            FIUN_OK)
            return fail("compare", st);
        return print_last(exp.handle);
    }
    return 0;
}
