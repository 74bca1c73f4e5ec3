// Acceptance suite: every criterion prints one PASS/FAIL line and fails the
// test run if unmet. Criteria 8 and 9 run a desk-scale experiment (synthetic
// ten-snapshot timeline over a ~5k-triple structured KG) comparing online
// updates against full recalculation.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include "doctest.h"

#include "dynakge/cli.hpp"
#include "dynakge/datasets.hpp"
#include "dynakge/dyninit.hpp"
#include "dynakge/online.hpp"
#include "dynakge/store_io.hpp"
#include "dynakge/vecmath.hpp"
#include "helpers.hpp"

using namespace dynakge;
namespace fs = std::filesystem;

namespace {

void report(int id, const char* title, bool pass) {
    std::printf("ACCEPTANCE %d: %s - %s\n", id, pass ? "PASS" : "FAIL", title);
    std::fflush(stdout);
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

const std::vector<ModelKind> kAllModels{ModelKind::TransE,   ModelKind::TransH,
                                        ModelKind::TransD,   ModelKind::DistMult,
                                        ModelKind::Rescal,   ModelKind::Analogy};

}  // namespace

// ---------------------------------------------------------------------------
// 1. Gradient correctness
// ---------------------------------------------------------------------------

TEST_CASE("criterion 1: analytic gradients match finite differences") {
    const auto start = std::chrono::steady_clock::now();
    bool pass = true;

    for (ModelKind kind : kAllModels) {
        ModelSpec spec = ModelSpec::defaults(kind);
        spec.entity_dim = 6;
        spec.relation_dim = (kind == ModelKind::TransD) ? 4 : 6;
        const std::size_t entities = 9, relations = 3;
        Rng rng(9000 + static_cast<std::uint64_t>(kind));

        int done = 0;
        while (done < 100) {
            EmbeddingStore store = test::random_store(spec, entities, relations, rng, 0.6);
            const RelationId r = static_cast<RelationId>(rng.index(relations));
            const Triple pos{static_cast<EntityId>(rng.index(entities)), r,
                             static_cast<EntityId>(rng.index(entities))};
            Triple neg = pos;
            (rng.coin() ? neg.head : neg.tail) = static_cast<EntityId>(rng.index(entities));

            LossGrad lg;
            int label = 1;
            std::function<double()> loss_fn;
            if (spec.loss == LossKind::PairwiseRanking) {
                const double margin_term = spec.margin -
                                           detail::score_uncounted(spec, store, pos) +
                                           detail::score_uncounted(spec, store, neg);
                if (std::fabs(margin_term) < 1e-3) continue;  // hinge kink
                lg = loss_grad_pairwise(spec, store, pos, neg);
                loss_fn = [&]() { return loss_pairwise(spec, store, pos, neg); };
            } else {
                label = rng.coin() ? 1 : -1;
                lg = loss_grad_logistic(spec, store, pos, label);
                loss_fn = [&]() { return loss_logistic(spec, store, pos, label); };
            }

            std::vector<ParamKey> keys = participating_keys(spec, store, pos);
            for (const ParamKey& k : participating_keys(spec, store, neg))
                if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
            for (const ParamKey& key : keys) {
                const std::size_t len = store.block(key).size();
                for (std::size_t i = 0; i < len; ++i) {
                    const double fd = test::fd_partial(store, key, i, 1e-5, loss_fn);
                    const double analytic = lg.grad.has(key) ? lg.grad.at(key)[i] : 0.0;
                    if (!test::close_rel(analytic, fd, 1e-5)) pass = false;
                }
            }
            ++done;
        }
    }

    const double seconds = elapsed_seconds(start);
    pass = pass && seconds < 60.0;
    report(1, "gradients of all six models match central finite differences (1e-5)", pass);
    CHECK(pass);
}

// ---------------------------------------------------------------------------
// 2. Rank-oracle equivalence
// ---------------------------------------------------------------------------

TEST_CASE("criterion 2: filtered ranking equals brute-force enumeration") {
    const auto start = std::chrono::steady_clock::now();
    bool pass = true;
    Rng rng(777);

    for (int round = 0; round < 50; ++round) {
        const std::size_t entities = 5 + rng.index(46);   // <= 50
        const std::size_t relations = 1 + rng.index(5);   // <= 5
        Snapshot s = test::random_snapshot(rng, 0, entities, relations, 20 + rng.index(80));
        if (s.test.empty()) {
            --round;  // regenerate this round
            continue;
        }
        const ModelKind kind = kAllModels[round % kAllModels.size()];
        ModelSpec spec = ModelSpec::defaults(kind);
        spec.entity_dim = 4;
        spec.relation_dim = 4;
        EmbeddingStore store = test::random_store(spec, entities, relations, rng);

        const LinkPredictionResult result =
            link_prediction(spec, store, s, s.test, {1, 3, 10});

        // brute force: enumerate every replacement on both sides
        double rank_sum = 0, inv_sum = 0;
        std::size_t hits1 = 0, hits3 = 0, hits10 = 0, idx = 0;
        for (const Triple& t : s.test.triples()) {
            for (bool head_side : {true, false}) {
                const double target = detail::score_uncounted(spec, store, t);
                std::uint32_t above = 0;
                for (EntityId c : s.vertices) {
                    if (c == (head_side ? t.head : t.tail)) continue;
                    Triple candidate = t;
                    (head_side ? candidate.head : candidate.tail) = c;
                    if (s.knows(candidate)) continue;
                    if (detail::score_uncounted(spec, store, candidate) >= target) ++above;
                }
                const std::uint32_t rank = above + 1;
                if (result.records[idx].rank != rank) pass = false;
                if (result.records[idx].head_side != head_side) pass = false;
                rank_sum += rank;
                inv_sum += 1.0 / rank;
                hits1 += rank <= 1;
                hits3 += rank <= 3;
                hits10 += rank <= 10;
                ++idx;
            }
        }
        const double n = static_cast<double>(idx);
        if (result.mr != rank_sum / n) pass = false;
        if (result.mrr != inv_sum / n) pass = false;
        if (result.hits.at(1) != hits1 / n) pass = false;
        if (result.hits.at(3) != hits3 / n) pass = false;
        if (result.hits.at(10) != hits10 / n) pass = false;
    }

    const double seconds = elapsed_seconds(start);
    pass = pass && seconds < 60.0;
    report(2, "filtered MR/MRR/Hits@k equal exhaustive enumeration on 50 random KGs", pass);
    CHECK(pass);
}

// ---------------------------------------------------------------------------
// 3. Closed-form initializations
// ---------------------------------------------------------------------------

TEST_CASE("criterion 3: closed-form initializations match numeric minimizers") {
    bool pass = true;

    // TransE relation + entity forms vs steepest descent on the quadratic.
    {
        const int dim = 4;
        ModelSpec spec = ModelSpec::defaults(ModelKind::TransE);
        spec.entity_dim = dim;
        spec.relation_dim = dim;
        Rng rng(31337);
        for (int round = 0; round < 100; ++round) {
            EmbeddingStore store = test::random_store(spec, 8, 3, rng, 1.0);
            std::vector<Triple> incoming, outgoing;
            const int n_in = 1 + static_cast<int>(rng.index(3));
            const int n_out = static_cast<int>(rng.index(3));
            for (int i = 0; i < n_in; ++i)
                incoming.push_back({static_cast<EntityId>(rng.index(8)),
                                    static_cast<RelationId>(rng.index(3)), 99});
            for (int i = 0; i < n_out; ++i)
                outgoing.push_back({99, static_cast<RelationId>(rng.index(3)),
                                    static_cast<EntityId>(rng.index(8))});

            // entity form
            const std::vector<double> closed =
                preinit_pos_entity_transe(incoming, outgoing, store);
            std::vector<double> v(dim, 0.0);
            const double m = static_cast<double>(incoming.size() + outgoing.size());
            for (int step = 0; step < 6000; ++step) {
                std::vector<double> g(dim, 0.0);
                for (const Triple& t : incoming)
                    for (int i = 0; i < dim; ++i)
                        g[i] += 2 * (v[i] - store.entity_vec(t.head)[i] -
                                     store.relation_vec(t.relation)[i]);
                for (const Triple& t : outgoing)
                    for (int i = 0; i < dim; ++i)
                        g[i] += 2 * (v[i] + store.relation_vec(t.relation)[i] -
                                     store.entity_vec(t.tail)[i]);
                for (int i = 0; i < dim; ++i) v[i] -= 0.4 / m * g[i];
            }
            for (int i = 0; i < dim; ++i)
                if (std::fabs(closed[i] - v[i]) >= 1e-6) pass = false;

            // relation form over informative triples between embedded entities
            std::vector<Triple> rel_evidence;
            const int n_rel = 1 + static_cast<int>(rng.index(4));
            for (int i = 0; i < n_rel; ++i)
                rel_evidence.push_back({static_cast<EntityId>(rng.index(8)), 7,
                                        static_cast<EntityId>(rng.index(8))});
            const std::vector<double> closed_r =
                preinit_pos_relation_transe(rel_evidence, store);
            std::vector<double> rvec(dim, 0.0);
            for (int step = 0; step < 6000; ++step) {
                std::vector<double> g(dim, 0.0);
                for (const Triple& t : rel_evidence)
                    for (int i = 0; i < dim; ++i)
                        g[i] += 2 * (rvec[i] - (store.entity_vec(t.tail)[i] -
                                                store.entity_vec(t.head)[i]));
                for (int i = 0; i < dim; ++i) rvec[i] -= 0.4 / rel_evidence.size() * g[i];
            }
            for (int i = 0; i < dim; ++i)
                if (std::fabs(closed_r[i] - rvec[i]) >= 1e-6) pass = false;
        }
    }

    // TransH entity least squares vs numeric minimization of summed squared
    // line distances.
    {
        const int dim = 3;
        ModelSpec spec = ModelSpec::defaults(ModelKind::TransH);
        spec.entity_dim = dim;
        spec.relation_dim = dim;
        Rng rng(4242);
        for (int round = 0; round < 100; ++round) {
            EmbeddingStore store = test::random_store(spec, 8, 4, rng, 1.0);
            std::vector<Triple> incoming, outgoing;
            for (int i = 0; i < 4; ++i) {
                if (rng.coin())
                    incoming.push_back({static_cast<EntityId>(rng.index(8)),
                                        static_cast<RelationId>(rng.index(4)), 99});
                else
                    outgoing.push_back({99, static_cast<RelationId>(rng.index(4)),
                                        static_cast<EntityId>(rng.index(8))});
            }
            if (incoming.empty() && outgoing.empty()) incoming.push_back({0, 0, 99});

            const TransHEntityInit closed =
                preinit_pos_entity_transh(incoming, outgoing, store);

            std::vector<std::pair<std::vector<double>, std::vector<double>>> lines;
            for (const Triple& t : incoming) {
                const auto w = store.relation_normal(t.relation);
                const auto h = store.entity_vec(t.head);
                std::vector<double> p(dim);
                const double wh = vec::dot(w, h);
                for (int i = 0; i < dim; ++i)
                    p[i] = h[i] - wh * w[i] + store.relation_vec(t.relation)[i];
                lines.push_back({p, vec::to_vector(w)});
            }
            for (const Triple& t : outgoing) {
                const auto w = store.relation_normal(t.relation);
                const auto tl = store.entity_vec(t.tail);
                std::vector<double> p(dim);
                const double wt = vec::dot(w, tl);
                for (int i = 0; i < dim; ++i)
                    p[i] = tl[i] - wt * w[i] - store.relation_vec(t.relation)[i];
                lines.push_back({p, vec::to_vector(w)});
            }

            std::vector<double> v(dim, 0.0);
            for (int step = 0; step < 20000; ++step) {
                std::vector<double> g(dim, 0.0);
                for (const auto& [p, w] : lines) {
                    std::vector<double> diff(dim);
                    for (int i = 0; i < dim; ++i) diff[i] = v[i] - p[i];
                    double wd = 0;
                    for (int i = 0; i < dim; ++i) wd += w[i] * diff[i];
                    for (int i = 0; i < dim; ++i) g[i] += 2 * (diff[i] - wd * w[i]);
                }
                for (int i = 0; i < dim; ++i) v[i] -= 0.4 / lines.size() * g[i];
            }

            auto objective = [&](const std::vector<double>& x) {
                double total = 0;
                for (const auto& [p, w] : lines) {
                    std::vector<double> diff(dim);
                    for (int i = 0; i < dim; ++i) diff[i] = x[i] - p[i];
                    double wd = 0;
                    for (int i = 0; i < dim; ++i) wd += w[i] * diff[i];
                    for (int i = 0; i < dim; ++i)
                        total += (diff[i] - wd * w[i]) * (diff[i] - wd * w[i]);
                }
                return total;
            };
            if (objective(closed.vec) > objective(v) + 1e-4) pass = false;
            if (!closed.ridged) {
                for (int i = 0; i < dim; ++i)
                    if (std::fabs(closed.vec[i] - v[i]) >= 1e-4) pass = false;
            }
        }
    }

    report(3, "TransE (1e-6) and TransH (1e-4) closed-form inits match numeric minimizers", pass);
    CHECK(pass);
}

// ---------------------------------------------------------------------------
// 4. Offline/online reduction
// ---------------------------------------------------------------------------

TEST_CASE("criterion 4: online update reduces to offline training bitwise") {
    Rng rng(555);
    Snapshot snapshot = test::random_snapshot(rng, 0, 20, 3, 90);
    ModelSpec spec = ModelSpec::defaults(ModelKind::TransE);
    spec.entity_dim = 6;
    spec.relation_dim = 6;

    TrainConfig offline = TrainConfig::defaults_for(spec);
    offline.num_epoch = 25;
    offline.valid_steps = 5;
    offline.seed = 9090;
    auto [offline_store, offline_report] = train_offline(snapshot, spec, offline);

    const EmbeddingStore fresh =
        init_parameters(spec, snapshot.vertices, snapshot.relations, derive_seed(9090, 0));
    ChangeSet empty;
    OnlineConfig online = OnlineConfig::defaults_for(spec);
    online.ge_num = offline.num_epoch;
    online.cs_num = 0;
    online.ge_lr = offline.learning_rate;
    online.valid_steps = offline.valid_steps;
    online.early_stop_patience = offline.early_stop_patience;
    online.num_batch = offline.num_batch;
    online.optimizer = offline.optimizer;
    online.seed = offline.seed;
    auto [online_store, online_report] = update_online(fresh, snapshot, empty, spec, online);

    bool pass = bitwise_equal(offline_store, online_store);
    pass = pass && online_report.epoch_loss.size() == offline_report.epoch_loss.size();
    if (pass)
        for (std::size_t i = 0; i < online_report.epoch_loss.size(); ++i)
            if (online_report.epoch_loss[i] != offline_report.epoch_loss[i]) pass = false;

    report(4, "with init disabled and csNum=0 the online trajectory is bitwise offline", pass);
    CHECK(pass);
}

// ---------------------------------------------------------------------------
// 5. Complexity counters
// ---------------------------------------------------------------------------

TEST_CASE("criterion 5: operation counters are assertion-exact") {
    bool pass = true;
    Rng rng(666);
    Snapshot next = test::random_snapshot(rng, 1, 14, 3, 70);
    ModelSpec spec = ModelSpec::defaults(ModelKind::TransE);
    spec.entity_dim = 5;
    spec.relation_dim = 5;
    EmbeddingStore store = init_parameters(spec, next.vertices, next.relations, 3);

    // change-specific epoch: a additions, b deletions -> exactly 2(a+b)
    {
        ChangeSet change;
        change.added_train = {next.train.triples()[0], next.train.triples()[1],
                              next.train.triples()[2]};
        for (EntityId h = 0; h < 5; ++h) {
            Triple deleted{h, 0, static_cast<EntityId>((h + 5) % 14)};
            if (!next.train.contains(deleted)) change.deleted_train.push_back(deleted);
        }
        OnlineConfig config = OnlineConfig::defaults_for(spec);
        OptimizerState state;
        state.kind = config.optimizer;
        state.lr.rate = config.cs_lr;
        instrument::reset();
        instrument::ensure_phase("cs_exact");
        {
            instrument::PhaseScope phase("cs_exact");
            Rng cs_rng(4);
            run_epoch_change_specific(store, next, change, spec, config, state, cs_rng);
        }
        const std::uint64_t expected =
            2 * (change.added_train.size() + change.deleted_train.size());
        if (instrument::counters("cs_exact").score_evaluations != expected) pass = false;
    }

    // general epoch: exactly 2|S|
    {
        TrainConfig config = TrainConfig::defaults_for(spec);
        config.num_batch = 7;
        OptimizerState state;
        state.kind = config.optimizer;
        state.lr.rate = config.learning_rate;
        instrument::reset();
        instrument::ensure_phase("ge_exact");
        {
            instrument::PhaseScope phase("ge_exact");
            Rng ge_rng(5);
            run_epoch_general(store, next, spec, config, state, ge_rng);
        }
        if (instrument::counters("ge_exact").score_evaluations != 2 * next.train.size())
            pass = false;
    }

    // initialize_all: at most initTimes * |dE_S+| * (1 + initNegs) * 2
    {
        Snapshot prev = test::random_snapshot(rng, 0, 14, 3, 70);
        EmbeddingStore base = init_parameters(spec, prev.vertices, prev.relations, 6);
        std::vector<Triple> train = prev.train.triples();
        train.push_back({14, 0, 1});
        train.push_back({2, 1, 14});
        train.push_back({15, 2, 14});
        Snapshot grown =
            test::toy_snapshot(1, 16, 3, train, prev.valid.triples(), prev.test.triples());
        const ChangeSet change = diff_snapshots(prev, grown);
        InitConfig config;
        config.init_times = 50;
        config.init_negs = 1;
        instrument::reset();
        Rng init_rng(7);
        const InitReport init_report =
            initialize_all(change, grown, spec, base, config, init_rng);
        const std::uint64_t bound = static_cast<std::uint64_t>(config.init_times) *
                                    change.added_train.size() * (1 + config.init_negs) * 2;
        if (init_report.counters.score_evaluations > bound) pass = false;
        const std::uint64_t grad_bound =
            static_cast<std::uint64_t>(config.init_times) *
            (change.added_vertices.size() + change.added_relations.size());
        if (init_report.counters.gradient_steps > grad_bound) pass = false;
    }

    report(5, "cs epoch = 2(adds+dels), general epoch = 2|S|, init respects the theorem bound",
           pass);
    CHECK(pass);
}

// ---------------------------------------------------------------------------
// 6. NMC
// ---------------------------------------------------------------------------

TEST_CASE("criterion 6: normalized mean change") {
    bool pass = true;

    // NMC(theta, theta) = 0 exactly
    {
        Rng rng(31);
        ModelSpec spec = ModelSpec::defaults(ModelKind::TransE);
        spec.entity_dim = 6;
        spec.relation_dim = 6;
        EmbeddingStore store = test::random_store(spec, 25, 3, rng);
        if (nmc(store, store, shared_entities(store, store), false) != 0.0) pass = false;
    }

    // two-entity hand example: 2/9 within 1e-12
    {
        ModelSpec spec = ModelSpec::defaults(ModelKind::TransE);
        spec.entity_dim = 2;
        spec.relation_dim = 2;
        EmbeddingStore old_store(spec), new_store(spec);
        for (EntityId v : {EntityId(0), EntityId(1)}) {
            old_store.add_entity(v);
            new_store.add_entity(v);
        }
        old_store.entity_vec(1)[0] = 1;
        new_store.entity_vec(1)[0] = 3;
        const double value = nmc(old_store, new_store, {0, 1}, false);
        if (std::fabs(value - 2.0 / 9.0) >= 1e-12) pass = false;
    }

    // chunked equals dense on 100-entity instances
    {
        Rng rng(32);
        ModelSpec spec = ModelSpec::defaults(ModelKind::TransE);
        spec.entity_dim = 8;
        spec.relation_dim = 8;
        EmbeddingStore old_store = test::random_store(spec, 100, 2, rng);
        EmbeddingStore new_store = test::random_store(spec, 100, 2, rng);
        const std::vector<EntityId> shared = shared_entities(old_store, new_store);

        const std::size_t n = shared.size();
        std::vector<double> matrix(n * n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto a = new_store.entity_vec(shared[i]);
            for (std::size_t j = 0; j < n; ++j) {
                const auto b = new_store.entity_vec(shared[j]);
                double s = 0;
                for (std::size_t k = 0; k < a.size(); ++k)
                    s += (a[k] - b[k]) * (a[k] - b[k]);
                matrix[i * n + j] = std::sqrt(s);
            }
        }
        double dist0 = 0;
        for (double v : matrix) dist0 += v;
        dist0 /= static_cast<double>(n);
        double dense = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double rowsum = 0;
            for (std::size_t j = 0; j < n; ++j) rowsum += matrix[i * n + j];
            const auto a = new_store.entity_vec(shared[i]);
            const auto b = old_store.entity_vec(shared[i]);
            double moved = 0;
            for (std::size_t k = 0; k < a.size(); ++k)
                moved += (a[k] - b[k]) * (a[k] - b[k]);
            dense += std::sqrt(moved) / rowsum;
        }
        dense /= dist0;
        for (std::size_t chunk : {3, 32, 100, 10000}) {
            const double chunked =
                nmc(old_store, new_store, shared, false, Distance::L2, chunk);
            if (std::fabs(chunked - dense) >= 1e-12) pass = false;
        }
    }

    report(6, "NMC identity, 2/9 hand value, and chunked-vs-dense agreement", pass);
    CHECK(pass);
}

// ---------------------------------------------------------------------------
// 7. Snapshot generation
// ---------------------------------------------------------------------------

TEST_CASE("criterion 7: snapshot generation counts, disjoint endpoints, split persistence") {
    bool pass = true;
    Rng rng(71);

    // synthetic mode: exact sampled counts, triple keep within +-1
    {
        std::set<Triple> base_set;
        while (base_set.size() < 800)
            base_set.insert({static_cast<EntityId>(rng.index(120)),
                             static_cast<RelationId>(rng.index(9)),
                             static_cast<EntityId>(rng.index(120))});
        std::vector<Triple> base(base_set.begin(), base_set.end());
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
        SyntheticParams params;
        params.snapshots = 8;
        SplitAssignment splits({0.816, 0.084, 0.10});
        const auto snapshots =
            synthetic_snapshots(base, vertices, relations, params, splits, rng);
        const auto expected_v =
            static_cast<std::size_t>(std::llround(0.995 * vertices.size()));
        const auto expected_r = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(0.995 * relations.size())));
        for (const Snapshot& s : snapshots) {
            if (s.vertices.size() != expected_v) pass = false;
            if (s.relations.size() != expected_r) pass = false;
            std::size_t induced = 0;
            for (const Triple& t : base)
                induced += s.has_vertex(t.head) && s.has_vertex(t.tail) &&
                           s.has_relation(t.relation);
            const auto kept = static_cast<long long>(s.edge_count());
            const long long target = std::llround(0.95 * static_cast<double>(induced));
            if (std::llabs(kept - target) > 1) pass = false;
            if (!validate_snapshot(s).ok()) pass = false;
        }
    }

    // sliding mode at K=20, w=0.5: disjoint first/last plus split invariants
    {
        TimedTripleLog log;
        const std::size_t n = 2000;
        std::set<Triple> seen;
        std::int64_t stamp = 0;
        while (log.entries.size() < n) {
            Triple t{static_cast<EntityId>(rng.index(300)),
                     static_cast<RelationId>(rng.index(5)),
                     static_cast<EntityId>(rng.index(300))};
            if (!seen.insert(t).second) continue;
            log.entities.add("e" + std::to_string(t.head));
            log.entities.add("e" + std::to_string(t.tail));
            log.relations.add("r" + std::to_string(t.relation));
            log.entries.push_back({t, stamp++});
        }
        SplitAssignment splits;
        const auto snapshots = sliding_window_snapshots(log, 20, 0.5, splits, rng);
        if (snapshots.size() != 20) pass = false;

        // first and last share no triples
        const Snapshot& first = snapshots.front();
        const Snapshot& last = snapshots.back();
        auto shares = [&](const TripleSet& set) {
            for (const Triple& t : set.triples())
                if (first.knows(t)) return true;
            return false;
        };
        if (shares(last.train) || shares(last.valid) || shares(last.test)) pass = false;

        // split disjointness everywhere and no migration across snapshots
        std::unordered_map<Triple, Split, TripleHash> seen_split;
        for (const Snapshot& s : snapshots) {
            if (!validate_snapshot(s).ok()) pass = false;
            auto track = [&](const TripleSet& set, Split split) {
                for (const Triple& t : set.triples()) {
                    auto it = seen_split.find(t);
                    if (it == seen_split.end())
                        seen_split.emplace(t, split);
                    else if (it->second != split)
                        pass = false;
                }
            };
            track(s.train, Split::Train);
            track(s.valid, Split::Valid);
            track(s.test, Split::Test);
        }
    }

    report(7, "synthetic counts exact, sliding endpoints disjoint, splits never migrate", pass);
    CHECK(pass);
}

// ---------------------------------------------------------------------------
// 8 + 9. Desk-scale quality and speedup
// ---------------------------------------------------------------------------

namespace {

// Structured base KG: entities in groups, each relation linking one group to
// another, so translational and bilinear models can both learn it.
std::vector<Triple> structured_base_kg(std::size_t groups, std::size_t per_group,
                                       std::size_t relations, std::size_t triples, Rng& rng) {
    std::set<Triple> base;
    std::size_t guard = 0;
    while (base.size() < triples && guard++ < triples * 50) {
        const RelationId r = static_cast<RelationId>(rng.index(relations));
        const std::size_t src = r % groups;
        const std::size_t dst = (r + groups / 2) % groups;
        const EntityId h = static_cast<EntityId>(src * per_group + rng.index(per_group));
        const EntityId t = static_cast<EntityId>(dst * per_group + rng.index(per_group));
        base.insert({h, r, t});
    }
    return {base.begin(), base.end()};
}

struct DeskRun {
    double online_final_mrr = 0;
    double recalc_final_mrr = 0;
    double online_mean_seconds = 0;  // per updated snapshot (t >= 1)
    double recalc_mean_seconds = 0;
};

DeskRun desk_scale_experiment(ModelKind kind, std::uint64_t seed) {
    Rng rng(seed);
    const std::vector<Triple> base = structured_base_kg(10, 30, 6, 5000, rng);
    std::vector<EntityId> vertices(300);
    for (std::size_t i = 0; i < vertices.size(); ++i) vertices[i] = static_cast<EntityId>(i);
    std::vector<RelationId> relations{0, 1, 2, 3, 4, 5};

    SyntheticParams params;
    params.snapshots = 10;
    SplitAssignment splits({0.816, 0.084, 0.10});
    const std::vector<Snapshot> timeline =
        synthetic_snapshots(base, vertices, relations, params, splits, rng);

    ModelSpec spec = ModelSpec::defaults(kind);
    spec.entity_dim = 24;
    spec.relation_dim = 24;

    TrainConfig offline = TrainConfig::defaults_for(spec);
    offline.num_epoch = 100;
    offline.num_batch = 50;
    offline.validate = false;  // validation disabled for the runtime comparison
    if (kind == ModelKind::TransE) offline.learning_rate = 0.02;

    OnlineConfig online = OnlineConfig::defaults_for(spec);
    online.ge_num = 18;  // geNum + csNum = offline epochs / 5
    online.cs_num = 2;
    online.ge_lr = offline.learning_rate / 5.0;
    online.cs_lr = online.ge_lr / 2.0;
    online.num_batch = offline.num_batch;
    online.optimizer = offline.optimizer;
    online.validate = false;
    online.init = InitConfig::defaults_for(spec);

    DeskRun result;

    // online path
    {
        TrainConfig first = offline;
        first.seed = derive_seed(seed, 100);
        auto [store, report] = train_offline(timeline[0], spec, first);
        EmbeddingStore current = std::move(store);
        for (std::size_t t = 1; t < timeline.size(); ++t) {
            const ChangeSet change = diff_snapshots(timeline[t - 1], timeline[t]);
            OnlineConfig step = online;
            step.seed = derive_seed(seed, 200 + t);
            auto [updated, update_report] =
                update_online(current, timeline[t], change, spec, step);
            current = std::move(updated);
            result.online_mean_seconds += update_report.wall_seconds;
        }
        result.online_mean_seconds /= static_cast<double>(timeline.size() - 1);
        const LinkPredictionResult lp =
            link_prediction(spec, current, timeline.back(), timeline.back().test, {10});
        result.online_final_mrr = lp.mrr;
    }

    // recalculation path
    {
        EmbeddingStore final_store(spec);
        double total = 0;
        for (std::size_t t = 0; t < timeline.size(); ++t) {
            TrainConfig train = offline;
            train.seed = derive_seed(seed, 300 + t);
            auto [store, report] = train_offline(timeline[t], spec, train);
            if (t >= 1) total += report.wall_seconds;
            if (t + 1 == timeline.size()) final_store = std::move(store);
        }
        result.recalc_mean_seconds = total / static_cast<double>(timeline.size() - 1);
        const LinkPredictionResult lp = link_prediction(spec, final_store, timeline.back(),
                                                        timeline.back().test, {10});
        result.recalc_final_mrr = lp.mrr;
    }
    return result;
}

}  // namespace

TEST_CASE("criteria 8 and 9: desk-scale quality and runtime against recalculation") {
    const auto start = std::chrono::steady_clock::now();
    const DeskRun transe = desk_scale_experiment(ModelKind::TransE, 12001);
    const DeskRun distmult = desk_scale_experiment(ModelKind::DistMult, 12002);
    const double seconds = elapsed_seconds(start);

    std::printf("  desk scale TransE:   online MRR %.4f vs recalc MRR %.4f | %.2fs vs %.2fs per snapshot\n",
                transe.online_final_mrr, transe.recalc_final_mrr, transe.online_mean_seconds,
                transe.recalc_mean_seconds);
    std::printf("  desk scale DistMult: online MRR %.4f vs recalc MRR %.4f | %.2fs vs %.2fs per snapshot\n",
                distmult.online_final_mrr, distmult.recalc_final_mrr,
                distmult.online_mean_seconds, distmult.recalc_mean_seconds);

    bool quality = transe.online_final_mrr >= 0.90 * transe.recalc_final_mrr &&
                   distmult.online_final_mrr >= 0.90 * distmult.recalc_final_mrr;
    quality = quality && seconds <= 15 * 60;
    report(8, "online final MRR >= 0.90 x recalculated MRR for TransE and DistMult", quality);
    CHECK(quality);

    const bool speed = transe.online_mean_seconds <= 0.5 * transe.recalc_mean_seconds &&
                       distmult.online_mean_seconds <= 0.5 * distmult.recalc_mean_seconds;
    report(9, "per-snapshot online wall clock <= 0.5 x recalculation wall clock", speed);
    CHECK(speed);
}

// ---------------------------------------------------------------------------
// 10. Determinism
// ---------------------------------------------------------------------------

TEST_CASE("criterion 10: repeated seeded commands are byte-identical") {
    bool pass = true;
    const fs::path dir = fs::temp_directory_path() / "dynakge_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // input KG
    const fs::path input = dir / "kg.tsv";
    {
        std::ofstream out(input);
        Rng rng(88);
        for (int i = 0; i < 400; ++i) {
            const int g = static_cast<int>(rng.index(4));
            out << "g" << g << "e" << rng.index(12) << "\trel" << g << "\tg" << (g + 1) % 4 << "e"
                << rng.index(12) << "\t" << i << "\n";
        }
    }

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };

    for (const char* attempt : {"a", "b"}) {
        cli::SnapshotOptions snap;
        snap.input = input.string();
        snap.out_dir = (dir / (std::string("snaps_") + attempt)).string();
        snap.snapshots = 4;
        snap.window = 0.5;
        snap.seed = 1234;
        if (cli::cmd_snapshot(snap) != 0) pass = false;

        cli::ExperimentConfig config;
        config.model = "transe";
        config.dim = 8;
        config.num_epoch = 8;
        config.num_batch = 4;
        config.valid_steps = 4;
        config.geNum = 6;
        config.csNum = 2;
        config.seed = 4321;
        config.resolve();
        config.save(dir / (std::string("config_") + attempt + ".txt"));

        cli::RunOptions run;
        run.snapshots_dir = snap.out_dir;
        run.out_dir = (dir / (std::string("out_") + attempt)).string();
        run.mode = "online";
        run.config_file = (dir / (std::string("config_") + attempt + ".txt")).string();
        run.classification = true;
        if (cli::cmd_run(run) != 0) pass = false;
    }

    for (const char* file : {"meta.json", "0/train.tsv", "2/valid.tsv", "3/test.tsv"}) {
        if (slurp(dir / "snaps_a" / file) != slurp(dir / "snaps_b" / file)) pass = false;
    }
    if (slurp(dir / "out_a" / "metrics.csv") != slurp(dir / "out_b" / "metrics.csv")) pass = false;
    if (slurp(dir / "out_a" / "config.txt") != slurp(dir / "out_b" / "config.txt")) pass = false;
    for (int t = 0; t < 4; ++t) {
        const std::string name = "store_" + std::to_string(t);
        if (slurp(dir / "out_a" / "stores" / (name + ".bin")) !=
            slurp(dir / "out_b" / "stores" / (name + ".bin")))
            pass = false;
        if (slurp(dir / "out_a" / "stores" / (name + ".labels.json")) !=
            slurp(dir / "out_b" / "stores" / (name + ".labels.json")))
            pass = false;
    }

    report(10, "same-seed snapshot and run commands produce byte-identical outputs", pass);
    CHECK(pass);
}
