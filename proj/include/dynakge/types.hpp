#pragma once
// Core data model: triples, snapshots of a dynamic knowledge graph, and the
// change set between two consecutive snapshots.
//
// Entities and relations are dense integer indices assigned at ingestion time
// by the label dictionary (see datasets.hpp). Snapshots and change sets are
// immutable once built and safe for concurrent reads.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynakge {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Violated precondition or mismatched shapes between caller and callee.
class ContractViolation : public Error {
public:
    explicit ContractViolation(const std::string& what) : Error(what) {}
};

// Lookup of an entity/relation id that has no parameter record.
class LookupError : public Error {
public:
    explicit LookupError(const std::string& what) : Error(what) {}
};

// A sampler ran out of admissible candidates.
class SamplerExhausted : public Error {
public:
    explicit SamplerExhausted(const std::string& what) : Error(what) {}
};

struct Triple {
    EntityId head = 0;
    RelationId relation = 0;
    EntityId tail = 0;

    friend bool operator==(const Triple& a, const Triple& b) {
        return a.head == b.head && a.relation == b.relation && a.tail == b.tail;
    }
    friend bool operator!=(const Triple& a, const Triple& b) { return !(a == b); }
    friend bool operator<(const Triple& a, const Triple& b) {
        if (a.head != b.head) return a.head < b.head;
        if (a.relation != b.relation) return a.relation < b.relation;
        return a.tail < b.tail;
    }
};

std::string to_string(const Triple& t);

struct TripleHash {
    std::size_t operator()(const Triple& t) const {
        std::uint64_t x = (std::uint64_t(t.head) << 32) ^ (std::uint64_t(t.relation) << 16) ^ t.tail;
        x ^= x >> 33;
        x *= 0xff51afd7ed558ccdULL;
        x ^= x >> 33;
        x *= 0xc4ceb9fe1a85ec53ULL;
        x ^= x >> 33;
        return static_cast<std::size_t>(x);
    }
};

// Immutable triple set with membership tests and secondary lookups by
// (head, relation) and (relation, tail). Backed by two sorted arrays.
class TripleSet {
public:
    TripleSet() = default;
    explicit TripleSet(std::vector<Triple> triples);

    bool contains(const Triple& t) const;
    std::size_t size() const { return by_hrt_.size(); }
    bool empty() const { return by_hrt_.empty(); }

    const std::vector<Triple>& triples() const { return by_hrt_; }

    // All tails t' such that (head, relation, t') is in the set.
    std::vector<EntityId> tails_of(EntityId head, RelationId relation) const;
    // All heads h' such that (h', relation, tail) is in the set.
    std::vector<EntityId> heads_of(RelationId relation, EntityId tail) const;

    friend bool operator==(const TripleSet& a, const TripleSet& b) {
        return a.by_hrt_ == b.by_hrt_;
    }

private:
    std::vector<Triple> by_hrt_;  // sorted by (head, relation, tail)
    std::vector<Triple> by_rth_;  // sorted by (relation, tail, head)
};

// One time step of a dynamic KG: vertex/relation sets plus the disjoint
// train/valid/test partition of its edges.
struct Snapshot {
    int time_step = 0;
    std::vector<EntityId> vertices;     // sorted, unique
    std::vector<RelationId> relations;  // sorted, unique
    TripleSet train;
    TripleSet valid;
    TripleSet test;

    bool has_vertex(EntityId v) const {
        return std::binary_search(vertices.begin(), vertices.end(), v);
    }
    bool has_relation(RelationId r) const {
        return std::binary_search(relations.begin(), relations.end(), r);
    }
    // Membership in S u W u T (the full edge set of this snapshot).
    bool knows(const Triple& t) const {
        return train.contains(t) || valid.contains(t) || test.contains(t);
    }
    std::size_t edge_count() const { return train.size() + valid.size() + test.size(); }
};

// Normalizes (sorts, dedups) the id sets and triple vectors into a Snapshot.
Snapshot make_snapshot(int time_step,
                       std::vector<EntityId> vertices,
                       std::vector<RelationId> relations,
                       std::vector<Triple> train,
                       std::vector<Triple> valid,
                       std::vector<Triple> test);

// Builds a snapshot whose vertex/relation sets are induced from the triples.
Snapshot induce_snapshot(int time_step,
                         std::vector<Triple> train,
                         std::vector<Triple> valid,
                         std::vector<Triple> test);

// Additions and deletions between two consecutive snapshots, with edge
// changes partitioned by split.
struct ChangeSet {
    std::vector<EntityId> added_vertices;
    std::vector<EntityId> deleted_vertices;
    std::vector<RelationId> added_relations;
    std::vector<RelationId> deleted_relations;
    std::vector<Triple> added_train;
    std::vector<Triple> deleted_train;
    std::vector<Triple> added_valid;
    std::vector<Triple> deleted_valid;
    std::vector<Triple> added_test;
    std::vector<Triple> deleted_test;

    bool empty() const {
        return added_vertices.empty() && deleted_vertices.empty() && added_relations.empty() &&
               deleted_relations.empty() && added_train.empty() && deleted_train.empty() &&
               added_valid.empty() && deleted_valid.empty() && added_test.empty() &&
               deleted_test.empty();
    }
};

// Set differences per Def. of change; requires next.time_step == prev.time_step + 1.
ChangeSet diff_snapshots(const Snapshot& prev, const Snapshot& next);

// Inverse of diff_snapshots: applying the change to prev reconstructs next.
Snapshot apply_changeset(const Snapshot& prev, const ChangeSet& change);

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

// Structural checks: split disjointness and id closure of every triple.
ValidationReport validate_snapshot(const Snapshot& s);

}  // namespace dynakge
