#include "dynakge/types.hpp"

#include <limits>
#include <sstream>

namespace dynakge {

std::string to_string(const Triple& t) {
    std::ostringstream os;
    os << "(" << t.head << "," << t.relation << "," << t.tail << ")";
    return os.str();
}

namespace {

bool rth_less(const Triple& a, const Triple& b) {
    if (a.relation != b.relation) return a.relation < b.relation;
    if (a.tail != b.tail) return a.tail < b.tail;
    return a.head < b.head;
}

template <typename T>
void sort_unique(std::vector<T>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

template <typename T>
std::vector<T> set_difference(const std::vector<T>& a, const std::vector<T>& b) {
    std::vector<T> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

std::vector<Triple> triple_difference(const TripleSet& a, const TripleSet& b) {
    std::vector<Triple> out;
    std::set_difference(a.triples().begin(), a.triples().end(), b.triples().begin(),
                        b.triples().end(), std::back_inserter(out));
    return out;
}

std::vector<Triple> apply_edge_change(const TripleSet& base, const std::vector<Triple>& added,
                                      const std::vector<Triple>& deleted) {
    std::vector<Triple> out;
    std::set_difference(base.triples().begin(), base.triples().end(), deleted.begin(),
                        deleted.end(), std::back_inserter(out));
    out.insert(out.end(), added.begin(), added.end());
    return out;
}

}  // namespace

TripleSet::TripleSet(std::vector<Triple> triples) : by_hrt_(std::move(triples)) {
    sort_unique(by_hrt_);
    by_rth_ = by_hrt_;
    std::sort(by_rth_.begin(), by_rth_.end(), rth_less);
}

bool TripleSet::contains(const Triple& t) const {
    return std::binary_search(by_hrt_.begin(), by_hrt_.end(), t);
}

std::vector<EntityId> TripleSet::tails_of(EntityId head, RelationId relation) const {
    Triple lo{head, relation, 0};
    Triple hi{head, relation, std::numeric_limits<EntityId>::max()};
    auto first = std::lower_bound(by_hrt_.begin(), by_hrt_.end(), lo);
    auto last = std::upper_bound(by_hrt_.begin(), by_hrt_.end(), hi);
    std::vector<EntityId> out;
    out.reserve(static_cast<std::size_t>(last - first));
    for (auto it = first; it != last; ++it) out.push_back(it->tail);
    return out;
}

std::vector<EntityId> TripleSet::heads_of(RelationId relation, EntityId tail) const {
    Triple lo{0, relation, tail};
    Triple hi{std::numeric_limits<EntityId>::max(), relation, tail};
    auto first = std::lower_bound(by_rth_.begin(), by_rth_.end(), lo, rth_less);
    auto last = std::upper_bound(by_rth_.begin(), by_rth_.end(), hi, rth_less);
    std::vector<EntityId> out;
    out.reserve(static_cast<std::size_t>(last - first));
    for (auto it = first; it != last; ++it) out.push_back(it->head);
    return out;
}

Snapshot make_snapshot(int time_step, std::vector<EntityId> vertices,
                       std::vector<RelationId> relations, std::vector<Triple> train,
                       std::vector<Triple> valid, std::vector<Triple> test) {
    Snapshot s;
    s.time_step = time_step;
    sort_unique(vertices);
    sort_unique(relations);
    s.vertices = std::move(vertices);
    s.relations = std::move(relations);
    s.train = TripleSet(std::move(train));
    s.valid = TripleSet(std::move(valid));
    s.test = TripleSet(std::move(test));
    return s;
}

Snapshot induce_snapshot(int time_step, std::vector<Triple> train, std::vector<Triple> valid,
                         std::vector<Triple> test) {
    std::vector<EntityId> vertices;
    std::vector<RelationId> relations;
    auto collect = [&](const std::vector<Triple>& ts) {
        for (const Triple& t : ts) {
            vertices.push_back(t.head);
            vertices.push_back(t.tail);
            relations.push_back(t.relation);
        }
    };
    collect(train);
    collect(valid);
    collect(test);
    return make_snapshot(time_step, std::move(vertices), std::move(relations), std::move(train),
                         std::move(valid), std::move(test));
}

ChangeSet diff_snapshots(const Snapshot& prev, const Snapshot& next) {
    if (next.time_step != prev.time_step + 1) {
        throw ContractViolation("diff_snapshots: time steps " + std::to_string(prev.time_step) +
                                " -> " + std::to_string(next.time_step) + " are not consecutive");
    }
    ChangeSet c;
    c.added_vertices = set_difference(next.vertices, prev.vertices);
    c.deleted_vertices = set_difference(prev.vertices, next.vertices);
    c.added_relations = set_difference(next.relations, prev.relations);
    c.deleted_relations = set_difference(prev.relations, next.relations);
    c.added_train = triple_difference(next.train, prev.train);
    c.deleted_train = triple_difference(prev.train, next.train);
    c.added_valid = triple_difference(next.valid, prev.valid);
    c.deleted_valid = triple_difference(prev.valid, next.valid);
    c.added_test = triple_difference(next.test, prev.test);
    c.deleted_test = triple_difference(prev.test, next.test);
    return c;
}

Snapshot apply_changeset(const Snapshot& prev, const ChangeSet& change) {
    std::vector<EntityId> vertices = set_difference(prev.vertices, change.deleted_vertices);
    vertices.insert(vertices.end(), change.added_vertices.begin(), change.added_vertices.end());
    std::vector<RelationId> relations = set_difference(prev.relations, change.deleted_relations);
    relations.insert(relations.end(), change.added_relations.begin(),
                     change.added_relations.end());
    return make_snapshot(prev.time_step + 1, std::move(vertices), std::move(relations),
                         apply_edge_change(prev.train, change.added_train, change.deleted_train),
                         apply_edge_change(prev.valid, change.added_valid, change.deleted_valid),
                         apply_edge_change(prev.test, change.added_test, change.deleted_test));
}

ValidationReport validate_snapshot(const Snapshot& s) {
    ValidationReport report;
    if (s.time_step < 0) report.violations.push_back("time_step is negative");

    auto check_triples = [&](const TripleSet& set, const char* name) {
        for (const Triple& t : set.triples()) {
            if (!s.has_vertex(t.head))
                report.violations.push_back(std::string(name) + " triple " + to_string(t) +
                                            ": head not in vertex set");
            if (!s.has_vertex(t.tail))
                report.violations.push_back(std::string(name) + " triple " + to_string(t) +
                                            ": tail not in vertex set");
            if (!s.has_relation(t.relation))
                report.violations.push_back(std::string(name) + " triple " + to_string(t) +
                                            ": relation not in relation set");
        }
    };
    check_triples(s.train, "train");
    check_triples(s.valid, "valid");
    check_triples(s.test, "test");

    auto check_disjoint = [&](const TripleSet& a, const TripleSet& b, const char* an,
                              const char* bn) {
        for (const Triple& t : a.triples()) {
            if (b.contains(t))
                report.violations.push_back("triple " + to_string(t) + " present in both " + an +
                                            " and " + bn);
        }
    };
    check_disjoint(s.train, s.valid, "train", "valid");
    check_disjoint(s.train, s.test, "train", "test");
    check_disjoint(s.valid, s.test, "valid", "test");
    return report;
}

}  // namespace dynakge
