#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "dynakge/cli.hpp"
#include "helpers.hpp"

using namespace dynakge;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("dynakge_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// A small structured KG file: entities in groups, each relation connecting
// one group to the next, timestamps in write order.
fs::path write_structured_kg(const fs::path& dir, int groups, int per_group, int triples) {
    const fs::path path = dir / "kg.tsv";
    std::ofstream out(path);
    Rng rng(12345);
    for (int i = 0; i < triples; ++i) {
        const int g = static_cast<int>(rng.index(groups));
        const int rel = g;  // relation g links group g to group (g+1)%groups
        const int h = static_cast<int>(rng.index(per_group));
        const int t = static_cast<int>(rng.index(per_group));
        out << "g" << g << "_e" << h << "\trel" << rel << "\tg" << (g + 1) % groups << "_e" << t
            << "\t" << i << "\n";
    }
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("experiment config round-trips through its file form") {
    cli::ExperimentConfig config;
    config.model = "transh";
    config.seed = 991;
    config.csNum = 7;
    config.geNum = 33;
    config.jumpSize = 0.75;
    config.margin = 2.5;
    config.preInit = "pos";
    config.resolve();

    const fs::path dir = temp_dir("config");
    config.save(dir / "config.txt");
    const cli::ExperimentConfig loaded = cli::ExperimentConfig::load(dir / "config.txt");
    CHECK(loaded.to_text() == config.to_text());
}

TEST_CASE("unknown config keys are rejected") {
    const fs::path dir = temp_dir("config_bad");
    std::ofstream(dir / "config.txt") << "no_such_key = 1\n";
    CHECK_THROWS_AS(cli::ExperimentConfig::load(dir / "config.txt"), ParseError);
}

TEST_CASE("snapshot command writes the expected sliding layout") {
    const fs::path dir = temp_dir("snapshot_cmd");
    // 40 distinct triples, window 0.5, 3 snapshots -> windows of 20
    const fs::path input = dir / "input.tsv";
    {
        std::ofstream out(input);
        for (int i = 0; i < 40; ++i)
            out << "e" << i << "\tr0\te" << (i + 1) << "\t" << i << "\n";
    }
    cli::SnapshotOptions options;
    options.input = input.string();
    options.out_dir = (dir / "snaps").string();
    options.mode = "sliding";
    options.snapshots = 3;
    options.window = 0.5;
    options.seed = 5;
    REQUIRE(cli::cmd_snapshot(options) == 0);

    const SnapshotTimeline timeline = read_snapshots(dir / "snaps");
    REQUIRE(timeline.snapshots.size() == 3);
    for (const Snapshot& s : timeline.snapshots) CHECK(s.edge_count() == 20);
}

TEST_CASE("snapshot command is byte-deterministic under a fixed seed") {
    const fs::path dir = temp_dir("snapshot_det");
    const fs::path input = write_structured_kg(dir, 3, 8, 150);

    for (const char* sub : {"a", "b"}) {
        cli::SnapshotOptions options;
        options.input = input.string();
        options.out_dir = (dir / sub).string();
        options.mode = "sliding";
        options.snapshots = 4;
        options.window = 0.5;
        options.seed = 7;
        REQUIRE(cli::cmd_snapshot(options) == 0);
    }
    for (const char* file : {"meta.json", "0/train.tsv", "1/valid.tsv", "3/test.tsv"})
        CHECK(slurp(dir / "a" / file) == slurp(dir / "b" / file));
}

TEST_CASE("missing input files fail with a nonzero exit") {
    cli::SnapshotOptions options;
    options.input = "/nonexistent/input.tsv";
    options.out_dir = (temp_dir("missing") / "out").string();
    CHECK_THROWS_AS(cli::cmd_snapshot(options), Error);
}

TEST_CASE("run fails cleanly on a missing snapshot directory") {
    cli::RunOptions run;
    run.snapshots_dir = "/nonexistent/snaps";
    run.out_dir = (temp_dir("missing_run") / "out").string();
    CHECK(cli::cmd_run(run) == 1);
}

TEST_CASE("run command produces metrics, stores, and timing files") {
    const fs::path dir = temp_dir("run_cmd");
    const fs::path input = write_structured_kg(dir, 3, 6, 200);

    cli::SnapshotOptions snap;
    snap.input = input.string();
    snap.out_dir = (dir / "snaps").string();
    snap.mode = "sliding";
    snap.snapshots = 3;
    snap.window = 0.5;
    snap.split_train = 0.7;
    snap.split_valid = 0.15;
    snap.split_test = 0.15;
    snap.seed = 11;
    REQUIRE(cli::cmd_snapshot(snap) == 0);

    cli::RunOptions run;
    run.snapshots_dir = snap.out_dir;
    run.out_dir = (dir / "out").string();
    run.mode = "online";
    run.model = "transe";
    run.seed = 3;
    run.seed_given = true;
    run.classification = true;

    // keep the run tiny
    cli::ExperimentConfig config;
    config.model = "transe";
    config.dim = 8;
    config.num_epoch = 6;
    config.num_batch = 4;
    config.valid_steps = 3;
    config.geNum = 4;
    config.csNum = 2;
    config.seed = 3;
    config.resolve();
    config.save(dir / "config.txt");
    run.config_file = (dir / "config.txt").string();

    REQUIRE(cli::cmd_run(run) == 0);
    CHECK(fs::exists(dir / "out" / "metrics.csv"));
    CHECK(fs::exists(dir / "out" / "timings.csv"));
    CHECK(fs::exists(dir / "out" / "timeline.json"));
    CHECK(fs::exists(dir / "out" / "config.txt"));
    for (int t = 0; t < 3; ++t)
        CHECK(fs::exists(dir / "out" / "stores" / ("store_" + std::to_string(t) + ".bin")));

    // one CSV row per snapshot, phases offline/online/online
    const std::string csv = slurp(dir / "out" / "metrics.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 rows
    CHECK(csv.find("0,offline") != std::string::npos);
    CHECK(csv.find("1,online") != std::string::npos);
    CHECK(csv.find("2,online") != std::string::npos);
}

TEST_CASE("evaluation thread count does not change the metrics") {
    const fs::path dir = temp_dir("run_threads");
    const fs::path input = write_structured_kg(dir, 3, 6, 220);

    cli::SnapshotOptions snap;
    snap.input = input.string();
    snap.out_dir = (dir / "snaps").string();
    snap.snapshots = 2;
    snap.window = 0.5;
    snap.split_train = 0.7;
    snap.split_valid = 0.15;
    snap.split_test = 0.15;
    snap.seed = 43;
    REQUIRE(cli::cmd_snapshot(snap) == 0);

    cli::ExperimentConfig config;
    config.model = "transe";
    config.dim = 8;
    config.num_epoch = 4;
    config.num_batch = 2;
    config.validation = false;
    config.seed = 47;

    for (int threads : {1, 3}) {
        config.threads = threads;
        config.resolve();
        const fs::path cfg = dir / ("config_" + std::to_string(threads) + ".txt");
        config.save(cfg);
        cli::RunOptions run;
        run.snapshots_dir = snap.out_dir;
        run.out_dir = (dir / ("out_" + std::to_string(threads))).string();
        run.mode = "online";
        run.config_file = cfg.string();
        REQUIRE(cli::cmd_run(run) == 0);
    }
    // metrics are thread-count invariant; only the config echo differs
    CHECK(slurp(dir / "out_1" / "metrics.csv") == slurp(dir / "out_3" / "metrics.csv"));

    // wall-clock sidecar carries positive timings per snapshot
    const std::string timings = slurp(dir / "out_1" / "timings.csv");
    std::istringstream lines(timings);
    std::string line;
    std::getline(lines, line);  // header
    int rows = 0;
    while (std::getline(lines, line)) {
        const std::size_t comma = line.rfind(',');
        REQUIRE(comma != std::string::npos);
        CHECK(std::stod(line.substr(comma + 1)) > 0);
        ++rows;
    }
    CHECK(rows == 4);  // train + eval per snapshot
}

TEST_CASE("run command in recalc mode trains every snapshot from scratch") {
    const fs::path dir = temp_dir("run_recalc");
    const fs::path input = write_structured_kg(dir, 3, 6, 160);

    cli::SnapshotOptions snap;
    snap.input = input.string();
    snap.out_dir = (dir / "snaps").string();
    snap.snapshots = 2;
    snap.window = 0.5;
    snap.split_train = 0.7;
    snap.split_valid = 0.15;
    snap.split_test = 0.15;
    snap.seed = 13;
    REQUIRE(cli::cmd_snapshot(snap) == 0);

    cli::ExperimentConfig config;
    config.model = "distmult";
    config.dim = 6;
    config.num_epoch = 4;
    config.num_batch = 2;
    config.validation = false;
    config.seed = 17;
    config.resolve();
    config.save(dir / "config.txt");

    cli::RunOptions run;
    run.snapshots_dir = snap.out_dir;
    run.out_dir = (dir / "out").string();
    run.mode = "recalc";
    run.config_file = (dir / "config.txt").string();
    REQUIRE(cli::cmd_run(run) == 0);

    const std::string csv = slurp(dir / "out" / "metrics.csv");
    CHECK(csv.find("0,recalc") != std::string::npos);
    CHECK(csv.find("1,recalc") != std::string::npos);
}

TEST_CASE("the echoed config file reproduces the run byte-identically") {
    const fs::path dir = temp_dir("config_echo");
    const fs::path input = write_structured_kg(dir, 3, 6, 220);

    cli::SnapshotOptions snap;
    snap.input = input.string();
    snap.out_dir = (dir / "snaps").string();
    snap.snapshots = 2;
    snap.window = 0.5;
    snap.split_train = 0.7;
    snap.split_valid = 0.15;
    snap.split_test = 0.15;
    snap.seed = 53;
    REQUIRE(cli::cmd_snapshot(snap) == 0);

    // first run from a sparse config relying on defaults
    cli::ExperimentConfig config;
    config.model = "transh";
    config.dim = 6;
    config.num_epoch = 4;
    config.num_batch = 2;
    config.geNum = 3;
    config.csNum = 1;
    config.validation = false;
    config.seed = 59;
    config.save(dir / "sparse.txt");

    cli::RunOptions first;
    first.snapshots_dir = snap.out_dir;
    first.out_dir = (dir / "out1").string();
    first.mode = "online";
    first.config_file = (dir / "sparse.txt").string();
    REQUIRE(cli::cmd_run(first) == 0);

    // second run driven solely by the echoed (fully resolved) config
    cli::RunOptions second;
    second.snapshots_dir = snap.out_dir;
    second.out_dir = (dir / "out2").string();
    second.mode = "online";
    second.config_file = (dir / "out1" / "config.txt").string();
    REQUIRE(cli::cmd_run(second) == 0);

    CHECK(slurp(dir / "out1" / "metrics.csv") == slurp(dir / "out2" / "metrics.csv"));
    for (int t = 0; t < 2; ++t) {
        const std::string name = "store_" + std::to_string(t) + ".bin";
        CHECK(slurp(dir / "out1" / "stores" / name) == slurp(dir / "out2" / "stores" / name));
    }
}

TEST_CASE("every model survives a small online timeline end to end") {
    const fs::path dir = temp_dir("all_models");
    const fs::path input = write_structured_kg(dir, 3, 8, 260);

    cli::SnapshotOptions snap;
    snap.input = input.string();
    snap.out_dir = (dir / "snaps").string();
    snap.snapshots = 3;
    snap.window = 0.5;
    snap.split_train = 0.7;
    snap.split_valid = 0.15;
    snap.split_test = 0.15;
    snap.seed = 37;
    REQUIRE(cli::cmd_snapshot(snap) == 0);

    for (const char* model :
         {"transe", "transh", "transd", "distmult", "rescal", "analogy"}) {
        CAPTURE(model);
        cli::ExperimentConfig config;
        config.model = model;
        config.dim = 6;
        config.num_epoch = 4;
        config.num_batch = 4;
        config.valid_steps = 2;
        config.geNum = 3;
        config.csNum = 1;
        config.seed = 41;
        config.resolve();
        const fs::path cfg = dir / (std::string("config_") + model + ".txt");
        config.save(cfg);

        cli::RunOptions run;
        run.snapshots_dir = snap.out_dir;
        run.out_dir = (dir / (std::string("out_") + model)).string();
        run.mode = "online";
        run.config_file = cfg.string();
        REQUIRE(cli::cmd_run(run) == 0);
        CHECK(fs::exists(dir / (std::string("out_") + model) / "metrics.csv"));
    }
}

TEST_CASE("eval command reports metrics for a saved store") {
    const fs::path dir = temp_dir("eval_cmd");
    const fs::path input = write_structured_kg(dir, 3, 6, 160);

    cli::SnapshotOptions snap;
    snap.input = input.string();
    snap.out_dir = (dir / "snaps").string();
    snap.snapshots = 2;
    snap.window = 0.5;
    snap.split_train = 0.7;
    snap.split_valid = 0.15;
    snap.split_test = 0.15;
    snap.seed = 19;
    REQUIRE(cli::cmd_snapshot(snap) == 0);

    cli::ExperimentConfig config;
    config.model = "transe";
    config.dim = 6;
    config.num_epoch = 3;
    config.num_batch = 2;
    config.validation = false;
    config.seed = 23;
    config.resolve();
    config.save(dir / "config.txt");

    cli::RunOptions run;
    run.snapshots_dir = snap.out_dir;
    run.out_dir = (dir / "out").string();
    run.mode = "online";
    run.config_file = (dir / "config.txt").string();
    REQUIRE(cli::cmd_run(run) == 0);

    cli::EvalOptions eval;
    eval.store_path = (dir / "out" / "stores" / "store_1").string();
    eval.snapshots_dir = snap.out_dir;
    eval.snapshot_index = 1;
    eval.ks = {10, 100};
    CHECK(cli::cmd_eval(eval) == 0);
}

TEST_CASE("init-report command emits per-element records") {
    const fs::path dir = temp_dir("init_report");
    const fs::path input = write_structured_kg(dir, 3, 6, 200);

    cli::SnapshotOptions snap;
    snap.input = input.string();
    snap.out_dir = (dir / "snaps").string();
    snap.snapshots = 2;
    snap.window = 0.5;
    snap.split_train = 0.7;
    snap.split_valid = 0.15;
    snap.split_test = 0.15;
    snap.seed = 29;
    REQUIRE(cli::cmd_snapshot(snap) == 0);

    cli::ExperimentConfig config;
    config.model = "transe";
    config.dim = 6;
    config.num_epoch = 2;
    config.num_batch = 2;
    config.validation = false;
    config.seed = 31;
    config.resolve();
    config.save(dir / "config.txt");

    cli::RunOptions run;
    run.snapshots_dir = snap.out_dir;
    run.out_dir = (dir / "out").string();
    run.mode = "online";
    run.config_file = (dir / "config.txt").string();
    REQUIRE(cli::cmd_run(run) == 0);

    cli::InitReportOptions options;
    options.snapshots_dir = snap.out_dir;
    options.from_index = 0;
    options.store_path = (dir / "out" / "stores" / "store_0").string();
    options.config_file = (dir / "config.txt").string();
    options.out_file = (dir / "report.json").string();
    REQUIRE(cli::cmd_init_report(options) == 0);
    const std::string report = slurp(dir / "report.json");
    CHECK(report.find("\"elements\"") != std::string::npos);
    CHECK(report.find("\"counters\"") != std::string::npos);
}
