#pragma once
// Link prediction in the filtered setting, relation-thresholded triple
// classification, and the normalized-mean-change stability metric.

#include <map>

#include "dynakge/rng.hpp"
#include "dynakge/scoring.hpp"

namespace dynakge {

struct RankRecord {
    Triple triple;
    bool head_side = false;  // true: head replaced, false: tail replaced
    std::uint32_t rank = 0;  // filtered rank, >= 1
};

struct LinkPredictionResult {
    double mr = 0;
    double mrr = 0;
    std::map<int, double> hits;  // k -> fraction of ranks <= k
    std::vector<RankRecord> records;
};

// Ranks the ground-truth entity of each eval triple against all snapshot
// entities on both sides, ignoring candidates that form another known triple
// (S u W u T). Ties count against the target (pessimistic). eval_set must be
// non-empty and contained in the snapshot's edges.
LinkPredictionResult link_prediction(const ModelSpec& spec, const EmbeddingStore& store,
                                     const Snapshot& snapshot, const TripleSet& eval_set,
                                     const std::vector<int>& ks, int threads = 1);

struct ClassificationResult {
    std::map<RelationId, double> thresholds;
    // Relations seen only at test time; they inherit the global median
    // threshold.
    std::vector<RelationId> fallback_relations;
    double accuracy = 0;
};

// Builds one unknown tail-corrupted negative per validation/test triple,
// fits per-relation thresholds delta_r maximizing validation accuracy
// (midpoint between adjacent distinct scores; ties resolved to the lower
// midpoint), and reports mean test accuracy of "true iff score > delta_r".
ClassificationResult triple_classification(const ModelSpec& spec, const EmbeddingStore& store,
                                           const Snapshot& snapshot, Rng& rng);

enum class Distance { L1, L2, Cosine };

struct NmcComponents {
    // sum over shared ids of dist(new, old) / sum_w dist(new, w_new)
    double locally_normalized_sum = 0;
    // mean pairwise distance between the new vectors (dist0)
    double mean_pairwise_distance = 0;
    // locally_normalized_sum / dist0
    double value = 0;
};

// Normalized mean change between two embeddings over the given shared ids:
//   (1/dist0) * sum_v dist(v_new, v_old) / sum_w dist(v_new, w_new)
// with dist0 the mean pairwise new-new distance. Pairwise distances are
// evaluated in row chunks so memory stays O(chunk * |shared|). The raw
// components are exposed so alternative global normalizations can be derived.
NmcComponents nmc_components(const EmbeddingStore& old_store, const EmbeddingStore& new_store,
                             const std::vector<std::uint32_t>& shared_ids, bool relations,
                             Distance distance = Distance::L2, std::size_t chunk_size = 256);

double nmc(const EmbeddingStore& old_store, const EmbeddingStore& new_store,
           const std::vector<std::uint32_t>& shared_ids, bool relations,
           Distance distance = Distance::L2, std::size_t chunk_size = 256);

std::vector<EntityId> shared_entities(const EmbeddingStore& a, const EmbeddingStore& b);
std::vector<RelationId> shared_relations(const EmbeddingStore& a, const EmbeddingStore& b);

}  // namespace dynakge
