#include "dynakge/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace dynakge {

using nlohmann::json;

std::uint32_t Dictionary::add(const std::string& label) {
    auto it = ids_.find(label);
    if (it != ids_.end()) return it->second;
    const std::uint32_t id = static_cast<std::uint32_t>(labels_.size());
    labels_.push_back(label);
    ids_.emplace(label, id);
    return id;
}

std::optional<std::uint32_t> Dictionary::find(const std::string& label) const {
    auto it = ids_.find(label);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

const std::string& Dictionary::label(std::uint32_t id) const {
    if (id >= labels_.size())
        throw LookupError("dictionary: no label for index " + std::to_string(id));
    return labels_[id];
}

TimedTripleLog load_triples(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open triple file: " + path.string());

    TimedTripleLog log;
    std::unordered_map<Triple, std::set<std::int64_t>, TripleHash> seen;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            if (tab == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        if (fields.size() < 3 || fields.size() > 4 || fields[0].empty() || fields[1].empty() ||
            fields[2].empty())
            throw ParseError("malformed triple line " + std::to_string(line_number) + " in " +
                             path.filename().string());

        TimedTriple entry;
        entry.triple.head = log.entities.add(fields[0]);
        entry.triple.relation = log.relations.add(fields[1]);
        entry.triple.tail = log.entities.add(fields[2]);
        if (fields.size() == 4) {
            try {
                std::size_t consumed = 0;
                entry.timestamp = std::stoll(fields[3], &consumed);
                if (consumed != fields[3].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw ParseError("bad timestamp on line " + std::to_string(line_number) + " in " +
                                 path.filename().string());
            }
        } else {
            entry.timestamp = static_cast<std::int64_t>(line_number);
        }

        auto& stamps = seen[entry.triple];
        if (!stamps.insert(entry.timestamp).second) {
            ++log.duplicates_dropped;
            continue;
        }
        log.entries.push_back(entry);
    }
    std::stable_sort(log.entries.begin(), log.entries.end(),
                     [](const TimedTriple& a, const TimedTriple& b) {
                         return a.timestamp < b.timestamp;
                     });
    return log;
}

void SplitProportions::check() const {
    if (train < 0 || valid < 0 || test < 0)
        throw ContractViolation("split proportions must be non-negative");
    if (std::fabs(train + valid + test - 1.0) > 1e-9)
        throw ContractViolation("split proportions must sum to 1");
}

SplitAssignment::SplitAssignment(SplitProportions proportions) : proportions_(proportions) {
    proportions_.check();
}

Split SplitAssignment::assign(const Triple& t, Rng& rng) {
    auto it = assigned_.find(t);
    if (it != assigned_.end()) return it->second;
    const double u = rng.uniform01();
    Split split = Split::Train;
    if (u >= proportions_.train)
        split = (u < proportions_.train + proportions_.valid) ? Split::Valid : Split::Test;
    assigned_.emplace(t, split);
    return split;
}

std::optional<Split> SplitAssignment::lookup(const Triple& t) const {
    auto it = assigned_.find(t);
    if (it == assigned_.end()) return std::nullopt;
    return it->second;
}

void min_degree_filter(TimedTripleLog& log, std::size_t min_count) {
    if (min_count <= 1) return;
    while (true) {
        std::set<Triple> unique;
        for (const TimedTriple& e : log.entries) unique.insert(e.triple);

        std::unordered_map<EntityId, std::size_t> entity_count;
        std::unordered_map<RelationId, std::size_t> relation_count;
        for (const Triple& t : unique) {
            ++entity_count[t.head];
            if (t.tail != t.head) ++entity_count[t.tail];
            ++relation_count[t.relation];
        }
        auto keeps = [&](const Triple& t) {
            return entity_count[t.head] >= min_count && entity_count[t.tail] >= min_count &&
                   relation_count[t.relation] >= min_count;
        };
        const std::size_t before = log.entries.size();
        std::erase_if(log.entries, [&](const TimedTriple& e) { return !keeps(e.triple); });
        if (log.entries.size() == before) return;
    }
}

std::vector<std::size_t> sliding_window_offsets(std::size_t n, int num_snapshots,
                                                double window_fraction,
                                                std::size_t& window_size) {
    if (num_snapshots < 2) throw ContractViolation("sliding window: need at least 2 snapshots");
    if (window_fraction <= 0 || window_fraction >= 1)
        throw ContractViolation("sliding window: window fraction must be in (0, 1)");
    if (n < static_cast<std::size_t>(num_snapshots))
        throw ContractViolation("sliding window: fewer triples than snapshots");

    window_size = static_cast<std::size_t>(std::llround(window_fraction * static_cast<double>(n)));
    if (window_size == 0 || window_size >= n)
        throw ContractViolation("sliding window: degenerate window size");

    std::vector<std::size_t> offsets;
    offsets.reserve(num_snapshots);
    const double span = static_cast<double>(n - window_size);
    for (int i = 0; i < num_snapshots; ++i) {
        offsets.push_back(static_cast<std::size_t>(
            std::llround(static_cast<double>(i) * span / (num_snapshots - 1))));
    }
    return offsets;
}

std::vector<Snapshot> sliding_window_snapshots(const TimedTripleLog& log, int num_snapshots,
                                               double window_fraction, SplitAssignment& splits,
                                               Rng& rng) {
    std::size_t window = 0;
    const std::vector<std::size_t> offsets =
        sliding_window_offsets(log.entries.size(), num_snapshots, window_fraction, window);

    std::vector<Snapshot> snapshots;
    snapshots.reserve(num_snapshots);
    for (int i = 0; i < num_snapshots; ++i) {
        // Distinct triples of the window, in first-appearance order for the
        // split draws.
        std::vector<Triple> window_triples;
        std::unordered_set<Triple, TripleHash> dedup;
        for (std::size_t j = offsets[i]; j < offsets[i] + window; ++j) {
            const Triple& t = log.entries[j].triple;
            if (dedup.insert(t).second) window_triples.push_back(t);
        }
        std::vector<Triple> train, valid, test;
        for (const Triple& t : window_triples) {
            switch (splits.assign(t, rng)) {
                case Split::Train: train.push_back(t); break;
                case Split::Valid: valid.push_back(t); break;
                case Split::Test: test.push_back(t); break;
            }
        }
        snapshots.push_back(
            induce_snapshot(i, std::move(train), std::move(valid), std::move(test)));
    }
    return snapshots;
}

namespace {

// round(keep * n), at least 1.
std::size_t keep_count(double keep, std::size_t n) {
    if (n == 0) return 0;
    const auto k = static_cast<std::size_t>(std::llround(keep * static_cast<double>(n)));
    return std::max<std::size_t>(1, std::min(n, k));
}

// Uniform sample of m items without replacement, returned sorted.
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t m, Rng& rng) {
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + rng.index(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(m);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace

std::vector<Snapshot> synthetic_snapshots(const std::vector<Triple>& base_triples,
                                          const std::vector<EntityId>& base_vertices,
                                          const std::vector<RelationId>& base_relations,
                                          const SyntheticParams& params, SplitAssignment& splits,
                                          Rng& rng) {
    if (base_triples.empty()) throw ContractViolation("synthetic_snapshots: empty base KG");
    if (params.snapshots < 1)
        throw ContractViolation("synthetic_snapshots: need at least one snapshot");

    std::vector<Snapshot> snapshots;
    snapshots.reserve(params.snapshots);
    for (int i = 0; i < params.snapshots; ++i) {
        const std::vector<EntityId> vertices = sample_without_replacement(
            base_vertices, keep_count(params.entity_keep, base_vertices.size()), rng);
        const std::vector<RelationId> relations = sample_without_replacement(
            base_relations, keep_count(params.relation_keep, base_relations.size()), rng);

        auto sampled_entity = [&](EntityId v) {
            return std::binary_search(vertices.begin(), vertices.end(), v);
        };
        auto sampled_relation = [&](RelationId r) {
            return std::binary_search(relations.begin(), relations.end(), r);
        };
        std::vector<Triple> induced;
        for (const Triple& t : base_triples) {
            if (sampled_entity(t.head) && sampled_entity(t.tail) && sampled_relation(t.relation))
                induced.push_back(t);
        }

        std::vector<Triple> kept;
        if (!induced.empty()) {
            const std::size_t m = keep_count(params.triple_keep, induced.size());
            std::vector<std::size_t> indices(induced.size());
            for (std::size_t j = 0; j < indices.size(); ++j) indices[j] = j;
            const std::vector<std::size_t> chosen = sample_without_replacement(indices, m, rng);
            kept.reserve(m);
            for (std::size_t j : chosen) kept.push_back(induced[j]);
        }

        std::vector<Triple> train, valid, test;
        for (const Triple& t : kept) {
            switch (splits.assign(t, rng)) {
                case Split::Train: train.push_back(t); break;
                case Split::Valid: valid.push_back(t); break;
                case Split::Test: test.push_back(t); break;
            }
        }
        snapshots.push_back(make_snapshot(i, vertices, relations, std::move(train),
                                          std::move(valid), std::move(test)));
    }
    return snapshots;
}

// ---------------------------------------------------------------------------
// Snapshot directory layout
// ---------------------------------------------------------------------------

namespace {

void write_split_tsv(const std::filesystem::path& path, const TripleSet& set,
                     const Dictionary& entities, const Dictionary& relations) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    for (const Triple& t : set.triples()) {
        out << entities.label(t.head) << '\t' << relations.label(t.relation) << '\t'
            << entities.label(t.tail) << '\n';
    }
}

std::vector<Triple> read_split_tsv(const std::filesystem::path& path, Dictionary& entities,
                                   Dictionary& relations) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    std::vector<Triple> triples;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string h, r, t;
        if (!std::getline(ss, h, '\t') || !std::getline(ss, r, '\t') || !std::getline(ss, t))
            throw ParseError("malformed line " + std::to_string(line_number) + " in " +
                             path.string());
        triples.push_back({entities.add(h), relations.add(r), entities.add(t)});
    }
    return triples;
}

}  // namespace

void write_snapshots(const std::filesystem::path& dir, const SnapshotTimeline& timeline,
                     const std::string& generator, std::uint64_t seed,
                     const std::vector<std::size_t>& offsets) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    json meta;
    meta["generator"] = generator;
    meta["seed"] = seed;
    meta["num_snapshots"] = timeline.snapshots.size();
    if (!offsets.empty()) meta["offsets"] = offsets;
    meta["snapshots"] = json::array();

    for (const Snapshot& s : timeline.snapshots) {
        const fs::path sub = dir / std::to_string(s.time_step);
        fs::create_directories(sub);
        write_split_tsv(sub / "train.tsv", s.train, timeline.entities, timeline.relations);
        write_split_tsv(sub / "valid.tsv", s.valid, timeline.entities, timeline.relations);
        write_split_tsv(sub / "test.tsv", s.test, timeline.entities, timeline.relations);

        // Ids that appear in no triple of this snapshot would be lost by the
        // TSVs alone; record their labels so the layout round-trips.
        std::unordered_set<EntityId> used_entities;
        std::unordered_set<RelationId> used_relations;
        auto mark = [&](const TripleSet& set) {
            for (const Triple& t : set.triples()) {
                used_entities.insert(t.head);
                used_entities.insert(t.tail);
                used_relations.insert(t.relation);
            }
        };
        mark(s.train);
        mark(s.valid);
        mark(s.test);

        json entry;
        entry["time_step"] = s.time_step;
        entry["vertices"] = s.vertices.size();
        entry["relations"] = s.relations.size();
        entry["train"] = s.train.size();
        entry["valid"] = s.valid.size();
        entry["test"] = s.test.size();
        json isolated_vertices = json::array();
        for (EntityId v : s.vertices)
            if (!used_entities.count(v)) isolated_vertices.push_back(timeline.entities.label(v));
        json unused_relations = json::array();
        for (RelationId r : s.relations)
            if (!used_relations.count(r)) unused_relations.push_back(timeline.relations.label(r));
        entry["isolated_vertices"] = std::move(isolated_vertices);
        entry["unused_relations"] = std::move(unused_relations);
        meta["snapshots"].push_back(std::move(entry));
    }

    std::ofstream out(dir / "meta.json");
    if (!out) throw Error("cannot write " + (dir / "meta.json").string());
    out << meta.dump(2) << '\n';
}

SnapshotTimeline read_snapshots(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::ifstream meta_in(dir / "meta.json");
    if (!meta_in) throw Error("cannot read " + (dir / "meta.json").string());
    json meta = json::parse(meta_in);

    SnapshotTimeline timeline;
    for (const json& entry : meta.at("snapshots")) {
        const int step = entry.at("time_step").get<int>();
        const fs::path sub = dir / std::to_string(step);
        std::vector<Triple> train =
            read_split_tsv(sub / "train.tsv", timeline.entities, timeline.relations);
        std::vector<Triple> valid =
            read_split_tsv(sub / "valid.tsv", timeline.entities, timeline.relations);
        std::vector<Triple> test =
            read_split_tsv(sub / "test.tsv", timeline.entities, timeline.relations);

        Snapshot s = induce_snapshot(step, std::move(train), std::move(valid), std::move(test));
        std::vector<EntityId> vertices = s.vertices;
        for (const json& label : entry.value("isolated_vertices", json::array()))
            vertices.push_back(timeline.entities.add(label.get<std::string>()));
        std::vector<RelationId> relations = s.relations;
        for (const json& label : entry.value("unused_relations", json::array()))
            relations.push_back(timeline.relations.add(label.get<std::string>()));
        std::sort(vertices.begin(), vertices.end());
        vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
        std::sort(relations.begin(), relations.end());
        relations.erase(std::unique(relations.begin(), relations.end()), relations.end());
        s.vertices = std::move(vertices);
        s.relations = std::move(relations);
        timeline.snapshots.push_back(std::move(s));
    }
    return timeline;
}

}  // namespace dynakge
