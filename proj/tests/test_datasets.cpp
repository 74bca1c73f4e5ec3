#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "dynakge/datasets.hpp"
#include "helpers.hpp"

using namespace dynakge;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("dynakge_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& content) {
    const fs::path path = dir / name;
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("well-formed triple files load with correct dictionaries") {
    const fs::path dir = temp_dir("load_ok");
    const fs::path path = write_file(dir, "triples.tsv",
                                     "a\tlikes\tb\n"
                                     "b\tlikes\tc\n"
                                     "a\tknows\tc\n");
    const TimedTripleLog log = load_triples(path);
    CHECK(log.entries.size() == 3);
    CHECK(log.entities.size() == 3);
    CHECK(log.relations.size() == 2);
    CHECK(log.duplicates_dropped == 0);
    // missing timestamps fall back to line order
    CHECK(log.entries[0].timestamp == 1);
    CHECK(log.entries[2].timestamp == 3);
}

TEST_CASE("out-of-order timestamps sort stably on load") {
    const fs::path dir = temp_dir("load_sort");
    const fs::path path = write_file(dir, "triples.tsv",
                                     "a\tr\tb\t30\n"
                                     "b\tr\tc\t10\n"
                                     "c\tr\td\t30\n"
                                     "d\tr\te\t20\n");
    const TimedTripleLog log = load_triples(path);
    REQUIRE(log.entries.size() == 4);
    CHECK(log.entries[0].timestamp == 10);
    CHECK(log.entries[1].timestamp == 20);
    // equal stamps keep file order: (a,r,b) precedes (c,r,d)
    CHECK(log.entries[2].triple.head == *log.entities.find("a"));
    CHECK(log.entries[3].triple.head == *log.entities.find("c"));
}

TEST_CASE("malformed lines raise a parse error naming the line") {
    const fs::path dir = temp_dir("load_bad");
    const fs::path path = write_file(dir, "triples.tsv", "a\tr\tb\nxy\tz\n");
    try {
        load_triples(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("non-numeric timestamps raise a parse error") {
    const fs::path dir = temp_dir("load_badstamp");
    const fs::path path = write_file(dir, "triples.tsv", "a\tr\tb\tnot_a_number\n");
    CHECK_THROWS_AS(load_triples(path), ParseError);
}

TEST_CASE("duplicate (triple, timestamp) lines are dropped with a count") {
    const fs::path dir = temp_dir("load_dup");
    const fs::path path = write_file(dir, "triples.tsv",
                                     "a\tr\tb\t5\n"
                                     "a\tr\tb\t5\n"
                                     "a\tr\tb\t6\n");
    const TimedTripleLog log = load_triples(path);
    CHECK(log.entries.size() == 2);
    CHECK(log.duplicates_dropped == 1);
}

TEST_CASE("split assignment is persistent and respects proportions") {
    SplitAssignment splits({0.9, 0.05, 0.05});
    Rng rng(1);

    // persistence: a re-added triple keeps its split
    const Triple t{1, 2, 3};
    const Split first = splits.assign(t, rng);
    for (int i = 0; i < 10; ++i) CHECK(splits.assign(t, rng) == first);

    // statistics over fresh triples: within 1% absolute
    std::size_t train = 0, valid = 0, test = 0;
    const std::size_t n = 100000;
    for (std::size_t i = 0; i < n; ++i) {
        const Triple fresh{static_cast<EntityId>(i + 10), 0, static_cast<EntityId>(i + 10)};
        switch (splits.assign(fresh, rng)) {
            case Split::Train: ++train; break;
            case Split::Valid: ++valid; break;
            case Split::Test: ++test; break;
        }
    }
    CHECK(std::fabs(train / double(n) - 0.90) < 0.01);
    CHECK(std::fabs(valid / double(n) - 0.05) < 0.01);
    CHECK(std::fabs(test / double(n) - 0.05) < 0.01);
}

TEST_CASE("sliding window offsets follow the rounding formula") {
    std::size_t window = 0;
    const auto offsets = sliding_window_offsets(40, 3, 0.5, window);
    CHECK(window == 20);
    CHECK(offsets == std::vector<std::size_t>{0, 10, 20});

    // K = 2 with half window: first and last windows disjoint
    std::size_t window2 = 0;
    const auto offsets2 = sliding_window_offsets(40, 2, 0.5, window2);
    CHECK(offsets2 == std::vector<std::size_t>{0, 20});
}

TEST_CASE("defaults K=20 w=0.5 give non-overlapping first and final snapshots") {
    const std::size_t n = 4000;
    std::size_t window = 0;
    const auto offsets = sliding_window_offsets(n, 20, 0.5, window);
    CHECK(offsets.front() == 0);
    CHECK(offsets.back() == n - window);
    CHECK(offsets.front() + window <= offsets.back());  // disjoint index ranges
}

TEST_CASE("sliding snapshots share the expected overlap and stay valid") {
    // build a log of n distinct triples
    TimedTripleLog log;
    const std::size_t n = 200;
    for (std::size_t i = 0; i < n; ++i) {
        const EntityId h = log.entities.add("e" + std::to_string(i));
        const EntityId t = log.entities.add("e" + std::to_string((i * 7 + 1) % (n + 20)));
        const RelationId r = log.relations.add("r" + std::to_string(i % 3));
        log.entries.push_back({{h, r, t}, static_cast<std::int64_t>(i)});
    }

    SplitAssignment splits({0.8, 0.1, 0.1});
    Rng rng(2);
    const int k = 5;
    const auto snapshots = sliding_window_snapshots(log, k, 0.5, splits, rng);
    REQUIRE(snapshots.size() == k);

    std::size_t window = 0;
    const auto offsets = sliding_window_offsets(n, k, 0.5, window);
    for (int i = 0; i < k; ++i) {
        CHECK(validate_snapshot(snapshots[i]).ok());
        CHECK(snapshots[i].edge_count() == window);  // all triples distinct here
    }
    for (int i = 0; i + 1 < k; ++i) {
        // consecutive windows share window - stride triples
        const std::size_t stride = offsets[i + 1] - offsets[i];
        std::size_t shared = 0;
        for (std::size_t j = offsets[i + 1]; j < offsets[i] + window; ++j) ++shared;
        CHECK(shared == window - stride);
        std::size_t common = 0;
        for (const Triple& t : snapshots[i + 1].train.triples())
            common += snapshots[i].knows(t) ? 1 : 0;
        for (const Triple& t : snapshots[i + 1].valid.triples())
            common += snapshots[i].knows(t) ? 1 : 0;
        for (const Triple& t : snapshots[i + 1].test.triples())
            common += snapshots[i].knows(t) ? 1 : 0;
        CHECK(common == shared);
    }

    // a triple never migrates between splits across the timeline
    for (int i = 0; i + 1 < k; ++i) {
        for (const Triple& t : snapshots[i].train.triples()) {
            CHECK_FALSE(snapshots[i + 1].valid.contains(t));
            CHECK_FALSE(snapshots[i + 1].test.contains(t));
        }
        for (const Triple& t : snapshots[i].valid.triples()) {
            CHECK_FALSE(snapshots[i + 1].train.contains(t));
            CHECK_FALSE(snapshots[i + 1].test.contains(t));
        }
    }
}

TEST_CASE("synthetic snapshots sample exact counts and stay closed") {
    Rng rng(3);
    // base KG: 60 entities, 7 relations, 400 distinct triples
    std::set<Triple> base_set;
    while (base_set.size() < 400) {
        base_set.insert({static_cast<EntityId>(rng.index(60)),
                         static_cast<RelationId>(rng.index(7)),
                         static_cast<EntityId>(rng.index(60))});
    }
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
    params.snapshots = 6;
    SplitAssignment splits({0.816, 0.084, 0.10});
    const auto snapshots = synthetic_snapshots(base, vertices, relations, params, splits, rng);
    REQUIRE(snapshots.size() == 6);

    const std::size_t expected_vertices =
        static_cast<std::size_t>(std::llround(0.995 * vertices.size()));
    const std::size_t expected_relations =
        static_cast<std::size_t>(std::llround(0.995 * relations.size()));
    for (const Snapshot& s : snapshots) {
        CHECK(s.vertices.size() == expected_vertices);
        CHECK(s.relations.size() == std::max<std::size_t>(1, expected_relations));
        CHECK(validate_snapshot(s).ok());

        // induced-triple restriction: no snapshot triple references an
        // unsampled id, and the kept count is round(0.95 * induced) +- 1
        std::size_t induced = 0;
        for (const Triple& t : base)
            induced += (s.has_vertex(t.head) && s.has_vertex(t.tail) &&
                        s.has_relation(t.relation))
                           ? 1
                           : 0;
        const auto expected_kept = static_cast<std::size_t>(std::llround(0.95 * induced));
        CHECK(s.edge_count() >= expected_kept - 1);
        CHECK(s.edge_count() <= expected_kept + 1);
    }
}

TEST_CASE("relation rounding keeps 199 of 200") {
    Rng rng(4);
    std::vector<Triple> base;
    std::vector<EntityId> vertices;
    std::vector<RelationId> relations;
    for (RelationId r = 0; r < 200; ++r) {
        relations.push_back(r);
        base.push_back({static_cast<EntityId>(r % 50), r, static_cast<EntityId>((r + 1) % 50)});
    }
    for (EntityId v = 0; v < 50; ++v) vertices.push_back(v);
    SyntheticParams params;
    params.snapshots = 1;
    SplitAssignment splits;
    const auto snapshots = synthetic_snapshots(base, vertices, relations, params, splits, rng);
    CHECK(snapshots[0].relations.size() == 199);
}

TEST_CASE("single-triple base either keeps or drops the full subgraph") {
    Rng rng(5);
    const std::vector<Triple> base{{0, 0, 1}};
    SyntheticParams params;
    params.snapshots = 20;
    SplitAssignment splits;
    const auto snapshots = synthetic_snapshots(base, {0, 1}, {0}, params, splits, rng);
    for (const Snapshot& s : snapshots) {
        if (s.edge_count() == 1) {
            CHECK(s.has_vertex(0));
            CHECK(s.has_vertex(1));
            CHECK(s.has_relation(0));
        } else {
            CHECK(s.edge_count() == 0);
        }
    }
}

TEST_CASE("min-degree filtering iterates to a fixpoint") {
    TimedTripleLog log;
    // chain: hub entity in many triples, fringe entities in one each
    const EntityId hub = log.entities.add("hub");
    const RelationId r = log.relations.add("r");
    for (int i = 0; i < 5; ++i) {
        const EntityId fringe = log.entities.add("fringe" + std::to_string(i));
        log.entries.push_back({{hub, r, fringe}, i});
    }
    // removing degree-<2 entities deletes all fringe triples, which then
    // drops the hub itself
    min_degree_filter(log, 2);
    CHECK(log.entries.empty());
}

TEST_CASE("snapshot directory layout round-trips exactly") {
    Rng rng(6);
    SnapshotTimeline timeline;
    for (int i = 0; i < 30; ++i) timeline.entities.add("e" + std::to_string(i));
    for (int i = 0; i < 4; ++i) timeline.relations.add("r" + std::to_string(i));
    for (int step = 0; step < 3; ++step) {
        Snapshot s = test::random_snapshot(rng, step, 30, 4, 50);
        // give one snapshot an isolated vertex to exercise the meta path
        if (step == 1) {
            std::vector<EntityId> vs = s.vertices;
            vs.push_back(29);
            std::sort(vs.begin(), vs.end());
            vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
            s.vertices = vs;
        }
        timeline.snapshots.push_back(std::move(s));
    }

    const fs::path dir = temp_dir("layout");
    write_snapshots(dir, timeline, "sliding", 7, {0, 10, 20});
    const SnapshotTimeline loaded = read_snapshots(dir);
    REQUIRE(loaded.snapshots.size() == timeline.snapshots.size());
    for (std::size_t i = 0; i < timeline.snapshots.size(); ++i) {
        const Snapshot& a = timeline.snapshots[i];
        const Snapshot& b = loaded.snapshots[i];
        CHECK(a.time_step == b.time_step);
        CHECK(a.train.size() == b.train.size());
        CHECK(a.valid.size() == b.valid.size());
        CHECK(a.test.size() == b.test.size());
        CHECK(a.vertices.size() == b.vertices.size());
        CHECK(a.relations.size() == b.relations.size());
        // triple-level equality through the label mapping
        for (const Triple& t : a.train.triples()) {
            const Triple mapped{*loaded.entities.find(timeline.entities.label(t.head)),
                                *loaded.relations.find(timeline.relations.label(t.relation)),
                                *loaded.entities.find(timeline.entities.label(t.tail))};
            CHECK(b.train.contains(mapped));
        }
    }
}
