#include "dynakge/cli.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "dynakge/store_io.hpp"

namespace dynakge::cli {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

std::string join_ints(const std::vector<int>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(values[i]);
    }
    return out;
}

std::vector<int> parse_ints(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
}

bool parse_bool(const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ParseError("expected boolean, got '" + value + "'");
}

}  // namespace

void ExperimentConfig::resolve() {
    ModelSpec spec = ModelSpec::defaults(model_kind_from_string(model));
    if (dim == 0) dim = spec.entity_dim;
    if (relation_dim == 0) relation_dim = dim;
    const bool translational = is_translational(spec.kind);
    if (lr == 0) lr = translational ? 0.001 : 0.1;
    if (optimizer.empty()) optimizer = translational ? "sgd" : "adagrad";
    if (initLR == 0) initLR = translational ? 0.001 : 0.1;
    if (geLR == 0) geLR = lr / 5.0;
    if (csLR == 0) csLR = geLR / 2.0;
}

ModelSpec ExperimentConfig::model_spec() const {
    ModelSpec spec = ModelSpec::defaults(model_kind_from_string(model));
    if (dim > 0) {
        spec.entity_dim = dim;
        spec.relation_dim = dim;
    }
    if (relation_dim > 0 && spec.kind == ModelKind::TransD) spec.relation_dim = relation_dim;
    spec.norm = (norm == "l1") ? Norm::L1 : Norm::L2;
    spec.margin = margin;
    spec.l2_penalty_weight = l2_weight;
    spec.transh_constraint_weight = transh_c;
    spec.transh_constraint_eps = transh_eps;
    spec.check();
    return spec;
}

TrainConfig ExperimentConfig::train_config() const {
    const ModelSpec spec = model_spec();
    TrainConfig config = TrainConfig::defaults_for(spec);
    config.num_epoch = num_epoch;
    config.num_batch = num_batch;
    config.valid_steps = valid_steps;
    config.early_stop_patience = early_stop;
    config.validate = validation;
    if (lr > 0) config.learning_rate = lr;
    if (!optimizer.empty()) config.optimizer = optimizer_from_string(optimizer);
    config.decay_factor = decay_factor;
    config.decay_threshold = decay_threshold;
    config.decay_patience = decay_patience;
    config.threads = threads;
    config.seed = seed;
    return config;
}

OnlineConfig ExperimentConfig::online_config() const {
    const ModelSpec spec = model_spec();
    OnlineConfig config = OnlineConfig::defaults_for(spec);
    config.ge_num = geNum;
    config.cs_num = csNum;
    config.cs_restrict = csRestrict;
    const double base_lr = (lr > 0) ? lr : TrainConfig::defaults_for(spec).learning_rate;
    config.ge_lr = (geLR > 0) ? geLR : base_lr / 5.0;
    config.cs_lr = (csLR > 0) ? csLR : config.ge_lr / 2.0;
    config.num_batch = num_batch;
    config.valid_steps = valid_steps;
    config.early_stop_patience = early_stop;
    config.validate = validation;
    if (!optimizer.empty()) config.optimizer = optimizer_from_string(optimizer);
    config.decay_factor = decay_factor;
    config.decay_threshold = decay_threshold;
    config.decay_patience = decay_patience;
    config.threads = threads;
    config.seed = seed;

    config.init.pre_init = preinit_mode_from_string(preInit);
    config.init.pre_negs = preNegs;
    config.init.jump_lim = jumpLim;
    config.init.jump_size = jumpSize;
    config.init.init_negs = initNegs;
    config.init.init_times = initTimes;
    config.init.init_lr = (initLR > 0) ? initLR : InitConfig::defaults_for(spec).init_lr;
    return config;
}

void ExperimentConfig::apply_pair(const std::string& key, const std::string& value) {
    if (key == "model") model = value;
    else if (key == "dim") dim = std::stoi(value);
    else if (key == "relation_dim") relation_dim = std::stoi(value);
    else if (key == "norm") norm = value;
    else if (key == "margin") margin = std::stod(value);
    else if (key == "l2_weight") l2_weight = std::stod(value);
    else if (key == "transh_c") transh_c = std::stod(value);
    else if (key == "transh_eps") transh_eps = std::stod(value);
    else if (key == "num_epoch") num_epoch = std::stoi(value);
    else if (key == "num_batch") num_batch = std::stoi(value);
    else if (key == "valid_steps") valid_steps = std::stoi(value);
    else if (key == "early_stop") early_stop = std::stoi(value);
    else if (key == "lr") lr = std::stod(value);
    else if (key == "optimizer") optimizer = value;
    else if (key == "decay_factor") decay_factor = std::stod(value);
    else if (key == "decay_threshold") decay_threshold = std::stod(value);
    else if (key == "decay_patience") decay_patience = std::stoi(value);
    else if (key == "preInit") preInit = value;
    else if (key == "preNegs") preNegs = std::stoi(value);
    else if (key == "jumpLim") jumpLim = std::stoi(value);
    else if (key == "jumpSize") jumpSize = std::stod(value);
    else if (key == "initNegs") initNegs = std::stoi(value);
    else if (key == "initTimes") initTimes = std::stoi(value);
    else if (key == "initLR") initLR = std::stod(value);
    else if (key == "csNum") csNum = std::stoi(value);
    else if (key == "csRestrict") csRestrict = parse_bool(value);
    else if (key == "csLR") csLR = std::stod(value);
    else if (key == "geNum") geNum = std::stoi(value);
    else if (key == "geLR") geLR = std::stod(value);
    else if (key == "validation") validation = parse_bool(value);
    else if (key == "classification") classification = parse_bool(value);
    else if (key == "ks") ks = parse_ints(value);
    else if (key == "threads") threads = std::stoi(value);
    else if (key == "seed") seed = std::stoull(value);
    else throw ParseError("unknown configuration key '" + key + "'");
}

std::string ExperimentConfig::to_text() const {
    std::ostringstream out;
    out << "model = " << model << "\n";
    out << "dim = " << dim << "\n";
    out << "relation_dim = " << relation_dim << "\n";
    out << "norm = " << norm << "\n";
    out << "margin = " << fmt(margin) << "\n";
    out << "l2_weight = " << fmt(l2_weight) << "\n";
    out << "transh_c = " << fmt(transh_c) << "\n";
    out << "transh_eps = " << fmt(transh_eps) << "\n";
    out << "num_epoch = " << num_epoch << "\n";
    out << "num_batch = " << num_batch << "\n";
    out << "valid_steps = " << valid_steps << "\n";
    out << "early_stop = " << early_stop << "\n";
    out << "lr = " << fmt(lr) << "\n";
    out << "optimizer = " << optimizer << "\n";
    out << "decay_factor = " << fmt(decay_factor) << "\n";
    out << "decay_threshold = " << fmt(decay_threshold) << "\n";
    out << "decay_patience = " << decay_patience << "\n";
    out << "preInit = " << preInit << "\n";
    out << "preNegs = " << preNegs << "\n";
    out << "jumpLim = " << jumpLim << "\n";
    out << "jumpSize = " << fmt(jumpSize) << "\n";
    out << "initNegs = " << initNegs << "\n";
    out << "initTimes = " << initTimes << "\n";
    out << "initLR = " << fmt(initLR) << "\n";
    out << "csNum = " << csNum << "\n";
    out << "csRestrict = " << (csRestrict ? "true" : "false") << "\n";
    out << "csLR = " << fmt(csLR) << "\n";
    out << "geNum = " << geNum << "\n";
    out << "geLR = " << fmt(geLR) << "\n";
    out << "validation = " << (validation ? "true" : "false") << "\n";
    out << "classification = " << (classification ? "true" : "false") << "\n";
    out << "ks = " << join_ints(ks) << "\n";
    out << "threads = " << threads << "\n";
    out << "seed = " << seed << "\n";
    return out.str();
}

void ExperimentConfig::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << to_text();
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read config file " + path.string());
    ExperimentConfig config;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t") != std::string::npos)
                throw ParseError("config line " + std::to_string(line_number) +
                                 ": expected 'key = value'");
            continue;
        }
        auto trim = [](std::string s) {
            const std::size_t a = s.find_first_not_of(" \t");
            if (a == std::string::npos) return std::string();
            const std::size_t b = s.find_last_not_of(" \t");
            return s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("config line " + std::to_string(line_number) +
                                          ": empty key");
        config.apply_pair(key, value);
    }
    return config;
}

std::uint64_t resolve_seed(std::uint64_t flag_seed) {
    if (const char* env = std::getenv("DYNAKGE_SEED")) return std::stoull(env);
    return flag_seed;
}

// ---------------------------------------------------------------------------
// snapshot
// ---------------------------------------------------------------------------

int cmd_snapshot(const SnapshotOptions& options) {
    namespace fs = std::filesystem;
    const std::uint64_t seed = resolve_seed(options.seed);

    TimedTripleLog log = load_triples(options.input);
    if (log.duplicates_dropped > 0)
        std::cerr << "warning: dropped " << log.duplicates_dropped
                  << " duplicate (triple, timestamp) lines\n";
    if (options.min_degree > 1)
        min_degree_filter(log, static_cast<std::size_t>(options.min_degree));
    if (log.entries.empty()) {
        std::cerr << "error: no triples left after preprocessing\n";
        return 1;
    }

    SplitProportions proportions{options.split_train, options.split_valid, options.split_test};
    SplitAssignment splits(proportions);
    Rng rng(derive_seed(seed, 10));

    SnapshotTimeline timeline;
    timeline.entities = log.entities;
    timeline.relations = log.relations;
    std::vector<std::size_t> offsets;

    if (options.mode == "sliding") {
        std::size_t window = 0;
        offsets = sliding_window_offsets(log.entries.size(), options.snapshots, options.window,
                                         window);
        timeline.snapshots =
            sliding_window_snapshots(log, options.snapshots, options.window, splits, rng);
    } else if (options.mode == "synthetic") {
        std::set<Triple> unique;
        for (const TimedTriple& e : log.entries) unique.insert(e.triple);
        std::vector<Triple> base(unique.begin(), unique.end());
        std::vector<EntityId> vertices;
        std::vector<RelationId> relations;
        {
            std::set<EntityId> vs;
            std::set<RelationId> rs;
            for (const Triple& t : base) {
                vs.insert(t.head);
                vs.insert(t.tail);
                rs.insert(t.relation);
            }
            vertices.assign(vs.begin(), vs.end());
            relations.assign(rs.begin(), rs.end());
        }
        SyntheticParams params{options.snapshots, options.entity_keep, options.relation_keep,
                               options.triple_keep};
        timeline.snapshots = synthetic_snapshots(base, vertices, relations, params, splits, rng);
    } else {
        std::cerr << "error: unknown snapshot mode '" << options.mode << "'\n";
        return 1;
    }

    for (const Snapshot& s : timeline.snapshots) {
        ValidationReport vr = validate_snapshot(s);
        if (!vr.ok()) {
            std::cerr << "error: generated snapshot " << s.time_step
                      << " is invalid: " << vr.violations.front() << "\n";
            return 1;
        }
    }

    write_snapshots(fs::path(options.out_dir), timeline, options.mode, seed, offsets);

    if (options.write_deltas) {
        for (std::size_t t = 1; t < timeline.snapshots.size(); ++t) {
            const ChangeSet change =
                diff_snapshots(timeline.snapshots[t - 1], timeline.snapshots[t]);
            json delta;
            auto entity_labels = [&](const std::vector<EntityId>& ids) {
                json arr = json::array();
                for (EntityId v : ids) arr.push_back(timeline.entities.label(v));
                return arr;
            };
            auto relation_labels = [&](const std::vector<RelationId>& ids) {
                json arr = json::array();
                for (RelationId r : ids) arr.push_back(timeline.relations.label(r));
                return arr;
            };
            auto triple_labels = [&](const std::vector<Triple>& triples) {
                json arr = json::array();
                for (const Triple& tr : triples)
                    arr.push_back({timeline.entities.label(tr.head),
                                   timeline.relations.label(tr.relation),
                                   timeline.entities.label(tr.tail)});
                return arr;
            };
            delta["added_vertices"] = entity_labels(change.added_vertices);
            delta["deleted_vertices"] = entity_labels(change.deleted_vertices);
            delta["added_relations"] = relation_labels(change.added_relations);
            delta["deleted_relations"] = relation_labels(change.deleted_relations);
            delta["added_train"] = triple_labels(change.added_train);
            delta["deleted_train"] = triple_labels(change.deleted_train);
            delta["added_valid"] = triple_labels(change.added_valid);
            delta["deleted_valid"] = triple_labels(change.deleted_valid);
            delta["added_test"] = triple_labels(change.added_test);
            delta["deleted_test"] = triple_labels(change.deleted_test);
            std::ofstream out(fs::path(options.out_dir) / ("delta_" + std::to_string(t) + ".json"));
            out << delta.dump(2) << '\n';
        }
    }

    std::cout << "wrote " << timeline.snapshots.size() << " snapshots to " << options.out_dir
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

namespace {

struct SnapshotMetrics {
    int snapshot = 0;
    std::string phase;  // offline | online | recalc
    LinkPredictionResult lp;
    bool has_classification = false;
    double classification_accuracy = 0;
    bool has_nmc = false;
    double nmc_entities = 0;
    double nmc_relations = 0;
    std::uint64_t score_evals = 0;
    std::uint64_t grad_steps = 0;
    double train_seconds = 0;
    double eval_seconds = 0;
    json detail;
};

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<SnapshotMetrics>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "snapshot,phase,mr,mrr,hits1,hits3,hits10,hits100,classification_accuracy,"
           "nmc_entities,nmc_relations,score_evals,grad_steps\n";
    for (const SnapshotMetrics& row : rows) {
        out << row.snapshot << ',' << row.phase << ',' << fmt(row.lp.mr) << ',' << fmt(row.lp.mrr)
            << ',' << fmt(row.lp.hits.at(1)) << ',' << fmt(row.lp.hits.at(3)) << ','
            << fmt(row.lp.hits.at(10)) << ',' << fmt(row.lp.hits.at(100)) << ',';
        if (row.has_classification) out << fmt(row.classification_accuracy);
        out << ',';
        if (row.has_nmc) out << fmt(row.nmc_entities);
        out << ',';
        if (row.has_nmc) out << fmt(row.nmc_relations);
        out << ',' << row.score_evals << ',' << row.grad_steps << '\n';
    }
}

void write_timings_csv(const std::filesystem::path& path,
                       const std::vector<SnapshotMetrics>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "snapshot,phase,wall_clock_s\n";
    for (const SnapshotMetrics& row : rows) {
        out << row.snapshot << ",train," << fmt(row.train_seconds) << '\n';
        out << row.snapshot << ",eval," << fmt(row.eval_seconds) << '\n';
    }
}

json report_validations(const std::vector<ValidationPoint>& points) {
    json arr = json::array();
    for (const ValidationPoint& p : points)
        arr.push_back({{"epoch", p.epoch}, {"hits10", p.hits10}, {"improved", p.improved}});
    return arr;
}

json report_decays(const std::vector<DecayEvent>& events) {
    json arr = json::array();
    for (const DecayEvent& e : events)
        arr.push_back({{"epoch", e.epoch}, {"new_rate", e.new_rate}, {"type", e.epoch_type}});
    return arr;
}

json report_counters(const instrument::CounterSet& c) {
    return {{"score_evaluations", c.score_evaluations}, {"gradient_steps", c.gradient_steps}};
}

}  // namespace

int cmd_run(const RunOptions& options) {
    namespace fs = std::filesystem;

    ExperimentConfig config;
    if (!options.config_file.empty()) config = ExperimentConfig::load(options.config_file);
    if (!options.model.empty()) config.model = options.model;
    if (!options.ks.empty()) config.ks = options.ks;
    if (options.classification) config.classification = true;
    if (options.no_validation) config.validation = false;
    if (options.threads > 0) config.threads = options.threads;
    if (options.seed_given) config.seed = options.seed;
    config.seed = resolve_seed(config.seed);
    config.resolve();

    if (options.mode != "online" && options.mode != "recalc") {
        std::cerr << "error: unknown run mode '" << options.mode << "'\n";
        return 1;
    }

    SnapshotTimeline timeline;
    try {
        timeline = read_snapshots(options.snapshots_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: cannot load snapshots: " << e.what() << "\n";
        return 1;
    }
    if (timeline.snapshots.empty()) {
        std::cerr << "error: snapshot directory " << options.snapshots_dir << " is empty\n";
        return 1;
    }

    fs::create_directories(options.out_dir);
    fs::create_directories(fs::path(options.out_dir) / "stores");
    config.save(fs::path(options.out_dir) / "config.txt");

    const ModelSpec spec = config.model_spec();
    std::vector<int> ks = config.ks;
    for (int pinned : {1, 3, 10, 100})
        if (std::find(ks.begin(), ks.end(), pinned) == ks.end()) ks.push_back(pinned);
    std::sort(ks.begin(), ks.end());

    instrument::reset();
    for (const char* phase : {"init", "ge", "cs", "validation", "eval"})
        instrument::ensure_phase(phase);

    std::vector<SnapshotMetrics> rows;
    std::optional<EmbeddingStore> previous_store;

    const std::size_t snapshot_count = timeline.snapshots.size();
    for (std::size_t t = 0; t < snapshot_count; ++t) {
        const Snapshot& snapshot = timeline.snapshots[t];
        SnapshotMetrics row;
        row.snapshot = snapshot.time_step;

        EmbeddingStore store(spec);
        try {
            if (t == 0 || options.mode == "recalc") {
                row.phase = (t == 0 && options.mode == "online") ? "offline" : "recalc";
                TrainConfig train = config.train_config();
                train.seed = derive_seed(config.seed, 100 + t);
                auto [trained, report] = train_offline(snapshot, spec, train);
                store = std::move(trained);
                row.train_seconds = report.wall_seconds;
                row.detail["train"] = {{"epochs_run", report.epochs_run},
                                       {"early_stopped", report.early_stopped},
                                       {"best_epoch", report.best_epoch},
                                       {"best_hits10", report.best_hits10},
                                       {"validations", report_validations(report.validations)},
                                       {"decays", report_decays(report.decays)},
                                       {"epoch_loss", report.epoch_loss},
                                       {"counters", report_counters(report.train_counters)}};
                row.score_evals = report.train_counters.score_evaluations;
                row.grad_steps = report.train_counters.gradient_steps;
            } else {
                row.phase = "online";
                const ChangeSet change =
                    diff_snapshots(timeline.snapshots[t - 1], snapshot);
                OnlineConfig online = config.online_config();
                online.seed = derive_seed(config.seed, 200 + t);
                auto [updated, report] = update_online(*previous_store, snapshot, change, spec,
                                                       online);
                store = std::move(updated);
                row.train_seconds = report.wall_seconds - report.validation_phase.wall_seconds;
                json epoch_types = json::array();
                for (EpochType type : report.schedule)
                    epoch_types.push_back(type == EpochType::General ? "ge" : "cs");
                row.detail["update"] = {
                    {"epochs_run", report.epochs_run},
                    {"early_stopped", report.early_stopped},
                    {"best_epoch", report.best_epoch},
                    {"best_hits10", report.best_hits10},
                    {"schedule", epoch_types},
                    {"epoch_loss", report.epoch_loss},
                    {"validations", report_validations(report.validations)},
                    {"decays", report_decays(report.decays)},
                    {"initialized_elements", report.init.elements.size()},
                    {"init_counters", report_counters(report.init_phase.counters)},
                    {"ge_counters", report_counters(report.ge_phase.counters)},
                    {"cs_counters", report_counters(report.cs_phase.counters)},
                    {"wall_seconds",
                     {{"init", report.init_phase.wall_seconds},
                      {"ge", report.ge_phase.wall_seconds},
                      {"cs", report.cs_phase.wall_seconds},
                      {"validation", report.validation_phase.wall_seconds}}}};
                const instrument::CounterSet train_total = report.init_phase.counters;
                row.score_evals = train_total.score_evaluations +
                                  report.ge_phase.counters.score_evaluations +
                                  report.cs_phase.counters.score_evaluations;
                row.grad_steps = train_total.gradient_steps +
                                 report.ge_phase.counters.gradient_steps +
                                 report.cs_phase.counters.gradient_steps;
            }
        } catch (const std::exception& e) {
            std::cerr << "error: training phase failed at snapshot " << snapshot.time_step << ": "
                      << e.what() << "\n";
            return 1;
        }

        try {
            const auto eval_start = std::chrono::steady_clock::now();
            instrument::PhaseScope phase("eval");
            if (!snapshot.test.empty()) {
                row.lp = link_prediction(spec, store, snapshot, snapshot.test, ks,
                                         config.threads);
            } else {
                throw Error("empty test set");
            }
            if (config.classification) {
                const std::uint64_t cls_seed = derive_seed(config.seed, 300 + t);
                Rng rng(cls_seed);
                ClassificationResult cls = triple_classification(spec, store, snapshot, rng);
                row.has_classification = true;
                row.classification_accuracy = cls.accuracy;
                row.detail["classification"] = {{"seed", cls_seed},
                                                {"accuracy", cls.accuracy},
                                                {"fallback_relations",
                                                 cls.fallback_relations.size()}};
            }
            if (previous_store) {
                const std::vector<EntityId> shared_e = shared_entities(*previous_store, store);
                const std::vector<RelationId> shared_r = shared_relations(*previous_store, store);
                if (shared_e.size() >= 2 && shared_r.size() >= 2) {
                    row.has_nmc = true;
                    row.nmc_entities = nmc(*previous_store, store, shared_e, false);
                    row.nmc_relations = nmc(*previous_store, store, shared_r, true);
                }
            }
            row.eval_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - eval_start)
                    .count();
        } catch (const std::exception& e) {
            std::cerr << "error: evaluation phase failed at snapshot " << snapshot.time_step
                      << ": " << e.what() << "\n";
            return 1;
        }

        try {
            save_store(store, timeline.entities, timeline.relations,
                       fs::path(options.out_dir) / "stores" /
                           ("store_" + std::to_string(snapshot.time_step)));
        } catch (const std::exception& e) {
            std::cerr << "error: store serialization failed at snapshot " << snapshot.time_step
                      << ": " << e.what() << "\n";
            return 1;
        }

        previous_store = std::move(store);
        rows.push_back(std::move(row));
    }

    // Outputs: deterministic metrics.csv, timing sidecars, and the full JSON
    // timeline.
    write_metrics_csv(fs::path(options.out_dir) / "metrics.csv", rows);
    write_timings_csv(fs::path(options.out_dir) / "timings.csv", rows);

    json timeline_json;
    timeline_json["mode"] = options.mode;
    timeline_json["model"] = config.model;
    timeline_json["seed"] = config.seed;
    timeline_json["snapshots"] = json::array();
    double nmc_entity_sum = 0, nmc_relation_sum = 0;
    std::size_t nmc_count = 0;
    for (const SnapshotMetrics& row : rows) {
        json entry;
        entry["snapshot"] = row.snapshot;
        entry["phase"] = row.phase;
        entry["mr"] = row.lp.mr;
        entry["mrr"] = row.lp.mrr;
        json hits = json::object();
        for (const auto& [k, v] : row.lp.hits) hits[std::to_string(k)] = v;
        entry["hits"] = std::move(hits);
        if (row.has_classification) entry["classification_accuracy"] = row.classification_accuracy;
        if (row.has_nmc) {
            entry["nmc_entities"] = row.nmc_entities;
            entry["nmc_relations"] = row.nmc_relations;
            // Snapshot 0 never has NMC (no predecessor); every other one
            // enters the summary means.
            nmc_entity_sum += row.nmc_entities;
            nmc_relation_sum += row.nmc_relations;
            ++nmc_count;
        }
        entry["score_evals"] = row.score_evals;
        entry["grad_steps"] = row.grad_steps;
        entry["train_seconds"] = row.train_seconds;
        entry["eval_seconds"] = row.eval_seconds;
        entry["detail"] = row.detail;
        timeline_json["snapshots"].push_back(std::move(entry));
    }
    if (nmc_count > 0) {
        timeline_json["summary"] = {
            {"mean_nmc_entities", nmc_entity_sum / static_cast<double>(nmc_count)},
            {"mean_nmc_relations", nmc_relation_sum / static_cast<double>(nmc_count)}};
    }
    std::ofstream timeline_out(fs::path(options.out_dir) / "timeline.json");
    timeline_out << timeline_json.dump(2) << '\n';

    std::cout << "wrote metrics for " << rows.size() << " snapshots to " << options.out_dir
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int cmd_eval(const EvalOptions& options) {
    ExperimentConfig config;
    if (!options.config_file.empty()) config = ExperimentConfig::load(options.config_file);

    SnapshotTimeline timeline = read_snapshots(options.snapshots_dir);
    const Snapshot* snapshot = nullptr;
    for (const Snapshot& s : timeline.snapshots)
        if (s.time_step == options.snapshot_index) snapshot = &s;
    if (!snapshot) {
        std::cerr << "error: snapshot " << options.snapshot_index << " not found in "
                  << options.snapshots_dir << "\n";
        return 1;
    }

    EmbeddingStore store = load_store(options.store_path, timeline.entities, timeline.relations);
    config.model = to_string(store.spec().kind);
    config.dim = store.spec().entity_dim;
    config.relation_dim = store.spec().relation_dim;
    ModelSpec spec = config.model_spec();

    if (!store.covers(*snapshot)) {
        std::cerr << "error: store does not cover snapshot " << options.snapshot_index
                  << " (mismatched dictionary or timeline)\n";
        return 1;
    }

    json out;
    out["snapshot"] = options.snapshot_index;
    out["model"] = to_string(spec.kind);
    LinkPredictionResult lp =
        link_prediction(spec, store, *snapshot, snapshot->test, options.ks);
    out["mr"] = lp.mr;
    out["mrr"] = lp.mrr;
    json hits = json::object();
    for (const auto& [k, v] : lp.hits) hits[std::to_string(k)] = v;
    out["hits"] = std::move(hits);
    if (options.classification) {
        Rng rng(derive_seed(resolve_seed(options.seed), 300));
        ClassificationResult cls = triple_classification(spec, store, *snapshot, rng);
        out["classification_accuracy"] = cls.accuracy;
        out["classification_seed"] = resolve_seed(options.seed);
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// init-report
// ---------------------------------------------------------------------------

int cmd_init_report(const InitReportOptions& options) {
    ExperimentConfig config;
    if (!options.config_file.empty()) config = ExperimentConfig::load(options.config_file);
    config.seed = resolve_seed(options.seed ? options.seed : config.seed);

    SnapshotTimeline timeline = read_snapshots(options.snapshots_dir);
    const Snapshot* from = nullptr;
    const Snapshot* to = nullptr;
    for (const Snapshot& s : timeline.snapshots) {
        if (s.time_step == options.from_index) from = &s;
        if (s.time_step == options.from_index + 1) to = &s;
    }
    if (!from || !to) {
        std::cerr << "error: need snapshots " << options.from_index << " and "
                  << options.from_index + 1 << " in " << options.snapshots_dir << "\n";
        return 1;
    }

    EmbeddingStore store = load_store(options.store_path, timeline.entities, timeline.relations);
    config.model = to_string(store.spec().kind);
    config.dim = store.spec().entity_dim;
    config.relation_dim = store.spec().relation_dim;
    config.resolve();
    const ModelSpec spec = config.model_spec();
    const OnlineConfig online = config.online_config();

    const ChangeSet change = diff_snapshots(*from, *to);
    for (EntityId v : change.deleted_vertices)
        if (store.has_entity(v)) store.remove_entity(v);
    for (RelationId r : change.deleted_relations)
        if (store.has_relation(r)) store.remove_relation(r);

    Rng rng(derive_seed(config.seed, 2));
    InitReport report = initialize_all(change, *to, spec, store, online.init, rng);

    json out;
    out["from_snapshot"] = options.from_index;
    out["to_snapshot"] = options.from_index + 1;
    out["added_vertices"] = change.added_vertices.size();
    out["added_relations"] = change.added_relations.size();
    out["elements"] = json::array();
    for (const ElementInitRecord& record : report.elements) {
        json entry;
        entry["kind"] = record.element.is_relation ? "relation" : "entity";
        entry["label"] = record.element.is_relation
                             ? timeline.relations.label(record.element.id)
                             : timeline.entities.label(record.element.id);
        entry["mode"] = record.mode_used;
        entry["mode_fallback"] = record.mode_fallback;
        entry["informative_incoming"] = record.incoming_count;
        entry["informative_outgoing"] = record.outgoing_count;
        entry["priority"] = record.priority;
        entry["ridged"] = record.ridged;
        entry["neg2_stable"] = record.neg2_stable;
        entry["pretrain_epochs"] = record.pretrain.epochs_run;
        entry["pretrain_best_loss"] = record.pretrain.best_loss;
        entry["pretrain_loss_curve"] = record.pretrain.loss_curve;
        out["elements"].push_back(std::move(entry));
    }
    out["counters"] = report_counters(report.counters);
    out["notes"] = report.notes;

    if (options.out_file.empty()) {
        std::cout << out.dump(2) << "\n";
    } else {
        std::ofstream file(options.out_file);
        if (!file) {
            std::cerr << "error: cannot write " << options.out_file << "\n";
            return 1;
        }
        file << out.dump(2) << "\n";
    }
    return 0;
}

}  // namespace dynakge::cli
