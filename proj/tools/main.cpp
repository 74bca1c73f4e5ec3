// dynakge command-line interface: generate dynamic-KG snapshots, train and
// update embeddings across a timeline, evaluate stores, and inspect the
// initialization of added elements.

#include <iostream>

#include "CLI11.hpp"

#include "dynakge/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"dynamic knowledge-graph embedding toolkit"};
    app.require_subcommand(1);

    dynakge::cli::SnapshotOptions snapshot_options;
    CLI::App* snapshot = app.add_subcommand("snapshot", "generate timeline snapshots");
    snapshot->add_option("--input", snapshot_options.input, "tab-separated triple file")
        ->required();
    snapshot->add_option("--out", snapshot_options.out_dir, "output directory")->required();
    snapshot->add_option("--mode", snapshot_options.mode, "sliding | synthetic")
        ->check(CLI::IsMember({"sliding", "synthetic"}));
    snapshot->add_option("--snapshots", snapshot_options.snapshots, "number of snapshots");
    snapshot->add_option("--window", snapshot_options.window, "sliding window fraction");
    snapshot->add_option("--entity-keep", snapshot_options.entity_keep,
                         "synthetic entity keep fraction");
    snapshot->add_option("--relation-keep", snapshot_options.relation_keep,
                         "synthetic relation keep fraction");
    snapshot->add_option("--triple-keep", snapshot_options.triple_keep,
                         "synthetic triple keep fraction");
    snapshot->add_option("--split-train", snapshot_options.split_train, "train proportion");
    snapshot->add_option("--split-valid", snapshot_options.split_valid, "validation proportion");
    snapshot->add_option("--split-test", snapshot_options.split_test, "test proportion");
    snapshot->add_option("--min-degree", snapshot_options.min_degree,
                         "drop entities/relations in fewer triples (iterated to a fixpoint)");
    snapshot->add_flag("--write-deltas", snapshot_options.write_deltas,
                       "materialize per-step change sets as delta_<i>.json");
    snapshot->add_option("--seed", snapshot_options.seed, "random seed");

    dynakge::cli::RunOptions run_options;
    CLI::App* run = app.add_subcommand("run", "train a timeline (online updates or recalc)");
    run->add_option("--snapshots", run_options.snapshots_dir, "snapshot directory")->required();
    run->add_option("--out", run_options.out_dir, "output directory")->required();
    run->add_option("--mode", run_options.mode, "online | recalc")
        ->check(CLI::IsMember({"online", "recalc"}));
    run->add_option("--model", run_options.model,
                    "transe | transh | transd | distmult | rescal | analogy");
    run->add_option("--config", run_options.config_file, "key-value experiment config");
    run->add_option("--ks", run_options.ks, "Hits@k cutoffs")->delimiter(',');
    run->add_flag("--classification", run_options.classification, "evaluate triple classification");
    run->add_flag("--no-validation", run_options.no_validation,
                  "disable validation and early stopping");
    run->add_option("--threads", run_options.threads, "evaluation worker threads");
    CLI::Option* run_seed = run->add_option("--seed", run_options.seed, "random seed");
    run->callback([&]() { run_options.seed_given = run_seed->count() > 0; });

    dynakge::cli::EvalOptions eval_options;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a serialized store against a snapshot");
    eval->add_option("--store", eval_options.store_path, "store base path (without .bin)")
        ->required();
    eval->add_option("--snapshots", eval_options.snapshots_dir, "snapshot directory")->required();
    eval->add_option("--snapshot", eval_options.snapshot_index, "snapshot time step");
    eval->add_option("--config", eval_options.config_file, "key-value experiment config");
    eval->add_option("--ks", eval_options.ks, "Hits@k cutoffs")->delimiter(',');
    eval->add_flag("--classification", eval_options.classification,
                   "evaluate triple classification");
    eval->add_option("--seed", eval_options.seed, "random seed (classification negatives)");

    dynakge::cli::InitReportOptions init_options;
    CLI::App* init_report =
        app.add_subcommand("init-report", "initialize added elements and dump the report");
    init_report->add_option("--snapshots", init_options.snapshots_dir, "snapshot directory")
        ->required();
    init_report->add_option("--from", init_options.from_index, "previous snapshot time step");
    init_report->add_option("--store", init_options.store_path, "store base path for --from")
        ->required();
    init_report->add_option("--config", init_options.config_file, "key-value experiment config");
    init_report->add_option("--out", init_options.out_file, "report file (default: stdout)");
    init_report->add_option("--seed", init_options.seed, "random seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (snapshot->parsed()) return dynakge::cli::cmd_snapshot(snapshot_options);
        if (run->parsed()) return dynakge::cli::cmd_run(run_options);
        if (eval->parsed()) return dynakge::cli::cmd_eval(eval_options);
        if (init_report->parsed()) return dynakge::cli::cmd_init_report(init_options);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
