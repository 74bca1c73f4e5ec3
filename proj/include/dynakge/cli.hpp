#pragma once
// Command implementations behind the dynakge binary: snapshot generation,
// timeline runs (online updates vs. per-snapshot recalculation), store
// evaluation, and standalone initialization reports. All randomness flows
// from a single seed; the DYNAKGE_SEED environment variable overrides it.

#include <filesystem>

#include "dynakge/datasets.hpp"
#include "dynakge/online.hpp"

namespace dynakge::cli {

// Key-value experiment configuration. Keys follow the established parameter
// naming (preInit ... geLR) so existing configurations transcribe directly.
// A saved config reloads to an identical run.
struct ExperimentConfig {
    std::string model = "transe";
    int dim = 0;           // 0: model default (100; RESCAL 50)
    int relation_dim = 0;  // 0: same as dim
    std::string norm = "l2";
    double margin = 1.0;
    double l2_weight = 0.02;
    double transh_c = 0.25;
    double transh_eps = 1e-3;

    int num_epoch = 200;
    int num_batch = 100;
    int valid_steps = 10;
    int early_stop = 10;
    double lr = 0;          // 0: 0.001 translational / 0.1 semantic matching
    std::string optimizer;  // empty: sgd translational / adagrad semantic matching
    double decay_factor = 0.95;
    double decay_threshold = 0.005;
    int decay_patience = 20;

    std::string preInit = "ave";
    int preNegs = 0;
    int jumpLim = 10;
    double jumpSize = 0.5;
    int initNegs = 1;
    int initTimes = 50;
    double initLR = 0;  // 0: class default

    int csNum = 20;
    bool csRestrict = false;
    double csLR = 0;  // 0: geLR / 2
    int geNum = 180;
    double geLR = 0;  // 0: lr / 5

    bool validation = true;
    bool classification = false;
    std::vector<int> ks = {1, 3, 10, 100};
    int threads = 1;
    std::uint64_t seed = 0;

    // Fills every defaulted field with its concrete value so the saved form
    // reproduces the run.
    void resolve();

    ModelSpec model_spec() const;
    TrainConfig train_config() const;
    OnlineConfig online_config() const;

    void apply_pair(const std::string& key, const std::string& value);
    std::string to_text() const;
    void save(const std::filesystem::path& path) const;
    static ExperimentConfig load(const std::filesystem::path& path);
};

// --seed unless DYNAKGE_SEED is set.
std::uint64_t resolve_seed(std::uint64_t flag_seed);

struct SnapshotOptions {
    std::string input;
    std::string out_dir;
    std::string mode = "sliding";  // sliding | synthetic
    int snapshots = 20;
    double window = 0.5;
    double entity_keep = 0.995;
    double relation_keep = 0.995;
    double triple_keep = 0.95;
    double split_train = 0.9;
    double split_valid = 0.05;
    double split_test = 0.05;
    int min_degree = 0;
    bool write_deltas = false;  // materialize delta_<i>.json change sets
    std::uint64_t seed = 0;
};

struct RunOptions {
    std::string snapshots_dir;
    std::string out_dir;
    std::string mode = "online";  // online | recalc
    std::string config_file;      // optional; flags below override it
    std::string model;            // empty: from config
    std::vector<int> ks;          // empty: from config
    bool classification = false;
    bool no_validation = false;
    int threads = 0;  // 0: from config
    std::uint64_t seed = 0;
    bool seed_given = false;
};

struct EvalOptions {
    std::string store_path;  // base path without .bin
    std::string snapshots_dir;
    int snapshot_index = 0;
    std::string config_file;
    std::vector<int> ks = {1, 3, 10, 100};
    bool classification = false;
    std::uint64_t seed = 0;
};

struct InitReportOptions {
    std::string snapshots_dir;
    int from_index = 0;
    std::string store_path;
    std::string config_file;
    std::string out_file;  // empty: stdout
    std::uint64_t seed = 0;
};

int cmd_snapshot(const SnapshotOptions& options);
int cmd_run(const RunOptions& options);
int cmd_eval(const EvalOptions& options);
int cmd_init_report(const InitReportOptions& options);

}  // namespace dynakge::cli
