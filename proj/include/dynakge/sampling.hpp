#pragma once
// Negative (corrupted) and positive (corrected) triple sampling.
//
// Corrupted triples come from S'_(h,r,t): replace either the head or the tail
// with a uniformly drawn entity, rejecting results that are in the training
// set. Corrected triples for a deleted edge are drawn uniformly from the
// training triples sharing (head, relation) or (relation, tail) with it,
// falling back to the whole training set when none exist.

#include "dynakge/rng.hpp"
#include "dynakge/types.hpp"

namespace dynakge {

struct SamplerConfig {
    std::uint64_t seed = 0;
    int max_rejection_attempts = 100;
};

// Uniform member of S'_(h,r,t): head-vs-tail replacement is a fair coin, the
// substitute entity uniform over the snapshot's vertices. Throws
// SamplerExhausted when max_attempts draws all landed in the training set.
Triple sample_corrupted(const Triple& t, const Snapshot& snapshot, Rng& rng,
                        int max_attempts = 100);

// Corruption restricted to one side (entity initialization corrupts only the
// partner of the element being placed).
Triple sample_corrupted_side(const Triple& t, const Snapshot& snapshot, Rng& rng,
                             bool corrupt_head, int max_attempts = 100);

// Uniform over {(h',r,*)} u {(*,r,t')} within next.train; falls back to a
// uniform training triple when that candidate set is empty. Throws
// SamplerExhausted when the training set itself is empty.
Triple sample_corrected(const Triple& deleted, const Snapshot& next, Rng& rng);

// Deleted training triples eligible for corrected sampling and change-specific
// epochs: those whose relation and endpoints still exist in the next snapshot.
std::vector<Triple> eligible_deletions(const std::vector<Triple>& deleted_train,
                                       const ChangeSet& change);

}  // namespace dynakge
