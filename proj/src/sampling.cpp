#include "dynakge/sampling.hpp"

#include <algorithm>

namespace dynakge {

Triple sample_corrupted(const Triple& t, const Snapshot& snapshot, Rng& rng, int max_attempts) {
    if (snapshot.vertices.empty()) throw SamplerExhausted("sample_corrupted: empty vertex set");
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Triple candidate = t;
        const EntityId substitute = rng.pick(snapshot.vertices);
        if (rng.coin())
            candidate.head = substitute;
        else
            candidate.tail = substitute;
        if (!snapshot.train.contains(candidate)) return candidate;
    }
    throw SamplerExhausted("sample_corrupted: no corrupted triple found for " + to_string(t) +
                           " after " + std::to_string(max_attempts) + " attempts");
}

Triple sample_corrupted_side(const Triple& t, const Snapshot& snapshot, Rng& rng,
                             bool corrupt_head, int max_attempts) {
    if (snapshot.vertices.empty())
        throw SamplerExhausted("sample_corrupted_side: empty vertex set");
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Triple candidate = t;
        const EntityId substitute = rng.pick(snapshot.vertices);
        if (corrupt_head)
            candidate.head = substitute;
        else
            candidate.tail = substitute;
        if (!snapshot.train.contains(candidate)) return candidate;
    }
    throw SamplerExhausted("sample_corrupted_side: no corrupted triple found for " +
                           to_string(t) + " after " + std::to_string(max_attempts) + " attempts");
}

Triple sample_corrected(const Triple& deleted, const Snapshot& next, Rng& rng) {
    // Candidates sharing (head, relation) and candidates sharing
    // (relation, tail). The two lists cannot overlap: the only triple in both
    // would be the deleted one, which is absent from next.train.
    const std::vector<EntityId> tails = next.train.tails_of(deleted.head, deleted.relation);
    const std::vector<EntityId> heads = next.train.heads_of(deleted.relation, deleted.tail);
    const std::size_t total = tails.size() + heads.size();
    if (total > 0) {
        const std::size_t i = rng.index(total);
        if (i < tails.size()) return Triple{deleted.head, deleted.relation, tails[i]};
        return Triple{heads[i - tails.size()], deleted.relation, deleted.tail};
    }
    if (next.train.empty())
        throw SamplerExhausted("sample_corrected: training set is empty for " + to_string(deleted));
    return next.train.triples()[rng.index(next.train.size())];
}

std::vector<Triple> eligible_deletions(const std::vector<Triple>& deleted_train,
                                       const ChangeSet& change) {
    auto gone_entity = [&](EntityId v) {
        return std::binary_search(change.deleted_vertices.begin(), change.deleted_vertices.end(),
                                  v);
    };
    auto gone_relation = [&](RelationId r) {
        return std::binary_search(change.deleted_relations.begin(), change.deleted_relations.end(),
                                  r);
    };
    std::vector<Triple> out;
    out.reserve(deleted_train.size());
    for (const Triple& t : deleted_train) {
        if (gone_entity(t.head) || gone_entity(t.tail) || gone_relation(t.relation)) continue;
        out.push_back(t);
    }
    return out;
}

}  // namespace dynakge
