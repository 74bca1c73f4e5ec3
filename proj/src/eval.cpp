#include "dynakge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "dynakge/vecmath.hpp"

namespace dynakge {

namespace {

struct RankTask {
    Triple triple;
    bool head_side;
};

std::uint32_t filtered_rank(const ModelSpec& spec, const EmbeddingStore& store,
                            const Snapshot& snapshot, const Triple& t, bool head_side,
                            std::uint64_t& evals) {
    const double target = detail::score_uncounted(spec, store, t);
    ++evals;
    const EntityId truth = head_side ? t.head : t.tail;
    std::uint32_t above = 0;
    Triple candidate = t;
    for (EntityId c : snapshot.vertices) {
        if (c == truth) continue;
        if (head_side)
            candidate.head = c;
        else
            candidate.tail = c;
        if (snapshot.knows(candidate)) continue;  // another correct prediction
        const double s = detail::score_uncounted(spec, store, candidate);
        ++evals;
        if (s >= target) ++above;  // ties rank above the target
    }
    return above + 1;
}

}  // namespace

LinkPredictionResult link_prediction(const ModelSpec& spec, const EmbeddingStore& store,
                                     const Snapshot& snapshot, const TripleSet& eval_set,
                                     const std::vector<int>& ks, int threads) {
    if (eval_set.empty()) throw ContractViolation("link_prediction: empty evaluation set");
    for (const Triple& t : eval_set.triples()) {
        if (!snapshot.knows(t))
            throw ContractViolation("link_prediction: eval triple " + to_string(t) +
                                    " is not an edge of the snapshot");
    }

    std::vector<RankTask> tasks;
    tasks.reserve(eval_set.size() * 2);
    for (const Triple& t : eval_set.triples()) {
        tasks.push_back({t, true});
        tasks.push_back({t, false});
    }

    std::vector<std::uint32_t> ranks(tasks.size(), 0);
    const int workers = std::max(1, threads);
    auto run_range = [&](std::size_t begin, std::size_t end) {
        std::uint64_t evals = 0;
        for (std::size_t i = begin; i < end; ++i)
            ranks[i] = filtered_rank(spec, store, snapshot, tasks[i].triple, tasks[i].head_side,
                                     evals);
        instrument::count_score_evaluations(evals);
    };
    if (workers == 1) {
        run_range(0, tasks.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t per = (tasks.size() + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::size_t begin = std::min(tasks.size(), w * per);
            const std::size_t end = std::min(tasks.size(), begin + per);
            if (begin < end) pool.emplace_back(run_range, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    LinkPredictionResult result;
    result.records.reserve(tasks.size());
    double rank_sum = 0, inv_sum = 0;
    std::map<int, std::size_t> hit_counts;
    for (int k : ks) hit_counts[k] = 0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        result.records.push_back({tasks[i].triple, tasks[i].head_side, ranks[i]});
        rank_sum += ranks[i];
        inv_sum += 1.0 / ranks[i];
        for (int k : ks)
            if (ranks[i] <= static_cast<std::uint32_t>(k)) ++hit_counts[k];
    }
    const double n = static_cast<double>(tasks.size());
    result.mr = rank_sum / n;
    result.mrr = inv_sum / n;
    for (int k : ks) result.hits[k] = hit_counts[k] / n;
    return result;
}

namespace {

// One unknown negative per triple, corrupting only the tail.
Triple corrupt_tail_unknown(const Triple& t, const Snapshot& snapshot, Rng& rng) {
    const int max_attempts = 1000;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Triple candidate = t;
        candidate.tail = rng.pick(snapshot.vertices);
        if (!snapshot.knows(candidate)) return candidate;
    }
    throw SamplerExhausted("triple_classification: no unknown tail corruption for " +
                           to_string(t));
}

// Best threshold for "positive iff score > delta" by sweeping the midpoints
// between adjacent distinct scores. Ties resolve to the lower candidate.
double best_threshold(std::vector<std::pair<double, bool>> scored) {
    std::sort(scored.begin(), scored.end());
    const std::size_t total = scored.size();
    std::size_t positives = 0;
    for (const auto& [s, is_pos] : scored) positives += is_pos ? 1 : 0;

    // delta below every score: all classified positive.
    std::size_t correct = positives;
    std::size_t best_correct = correct;
    double best_delta = scored.front().first - 1.0;

    std::size_t i = 0;
    while (i < total) {
        // Move delta just above the group of equal scores starting at i.
        const double value = scored[i].first;
        std::size_t pos_in_group = 0, neg_in_group = 0;
        while (i < total && scored[i].first == value) {
            if (scored[i].second)
                ++pos_in_group;
            else
                ++neg_in_group;
            ++i;
        }
        correct += neg_in_group;
        correct -= pos_in_group;
        const double delta =
            (i < total) ? (value + scored[i].first) / 2.0 : value + 1.0;
        if (correct > best_correct) {
            best_correct = correct;
            best_delta = delta;
        }
    }
    return best_delta;
}

}  // namespace

ClassificationResult triple_classification(const ModelSpec& spec, const EmbeddingStore& store,
                                           const Snapshot& snapshot, Rng& rng) {
    if (snapshot.valid.empty() || snapshot.test.empty())
        throw ContractViolation("triple_classification: needs non-empty validation and test sets");

    std::uint64_t evals = 0;
    auto scored_pairs = [&](const TripleSet& set) {
        // (relation, score, is_positive) triplets; negatives drawn in set order.
        std::vector<std::tuple<RelationId, double, bool>> out;
        out.reserve(set.size() * 2);
        for (const Triple& t : set.triples()) {
            const Triple neg = corrupt_tail_unknown(t, snapshot, rng);
            out.emplace_back(t.relation, detail::score_uncounted(spec, store, t), true);
            out.emplace_back(t.relation, detail::score_uncounted(spec, store, neg), false);
            evals += 2;
        }
        return out;
    };

    const auto valid_scored = scored_pairs(snapshot.valid);
    const auto test_scored = scored_pairs(snapshot.test);
    instrument::count_score_evaluations(evals);

    std::map<RelationId, std::vector<std::pair<double, bool>>> by_relation;
    for (const auto& [rel, s, pos] : valid_scored) by_relation[rel].push_back({s, pos});

    ClassificationResult result;
    std::vector<double> all_thresholds;
    for (const auto& [rel, scored] : by_relation) {
        const double delta = best_threshold(scored);
        result.thresholds[rel] = delta;
        all_thresholds.push_back(delta);
    }
    if (all_thresholds.empty())
        throw ContractViolation("triple_classification: no relation has validation data");
    std::sort(all_thresholds.begin(), all_thresholds.end());
    const double median = all_thresholds[(all_thresholds.size() - 1) / 2];

    std::size_t correct = 0;
    for (const auto& [rel, s, pos] : test_scored) {
        auto it = result.thresholds.find(rel);
        double delta = median;
        if (it != result.thresholds.end()) {
            delta = it->second;
        } else if (std::find(result.fallback_relations.begin(), result.fallback_relations.end(),
                             rel) == result.fallback_relations.end()) {
            result.fallback_relations.push_back(rel);
        }
        const bool predicted_true = s > delta;
        if (predicted_true == pos) ++correct;
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(test_scored.size());
    return result;
}

namespace {

double row_distance(std::span<const double> a, std::span<const double> b, Distance d) {
    switch (d) {
        case Distance::L1: {
            double s = 0;
            for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
            return s;
        }
        case Distance::L2: {
            double s = 0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double diff = a[i] - b[i];
                s += diff * diff;
            }
            return std::sqrt(s);
        }
        case Distance::Cosine: {
            const double na = vec::norm2(a), nb = vec::norm2(b);
            if (na == 0 && nb == 0) return 0;
            if (na == 0 || nb == 0) return 1;
            return 1.0 - vec::dot(a, b) / (na * nb);
        }
    }
    return 0;
}

}  // namespace

std::vector<EntityId> shared_entities(const EmbeddingStore& a, const EmbeddingStore& b) {
    std::vector<EntityId> ids_a = a.entity_ids_sorted(), ids_b = b.entity_ids_sorted(), out;
    std::set_intersection(ids_a.begin(), ids_a.end(), ids_b.begin(), ids_b.end(),
                          std::back_inserter(out));
    return out;
}

std::vector<RelationId> shared_relations(const EmbeddingStore& a, const EmbeddingStore& b) {
    std::vector<RelationId> ids_a = a.relation_ids_sorted(), ids_b = b.relation_ids_sorted(), out;
    std::set_intersection(ids_a.begin(), ids_a.end(), ids_b.begin(), ids_b.end(),
                          std::back_inserter(out));
    return out;
}

NmcComponents nmc_components(const EmbeddingStore& old_store, const EmbeddingStore& new_store,
                             const std::vector<std::uint32_t>& shared_ids, bool relations,
                             Distance distance, std::size_t chunk_size) {
    if (shared_ids.size() < 2)
        throw ContractViolation("nmc: undefined for fewer than 2 shared ids");
    if (chunk_size == 0) chunk_size = 1;

    auto new_row = [&](std::uint32_t id) {
        return relations ? new_store.relation_vec(id) : new_store.entity_vec(id);
    };
    auto old_row = [&](std::uint32_t id) {
        return relations ? old_store.relation_vec(id) : old_store.entity_vec(id);
    };

    const std::size_t n = shared_ids.size();
    double term_sum = 0;
    double rowsum_total = 0;
    std::vector<double> rowsums(chunk_size);
    for (std::size_t begin = 0; begin < n; begin += chunk_size) {
        const std::size_t end = std::min(n, begin + chunk_size);
        std::fill(rowsums.begin(), rowsums.end(), 0.0);
        for (std::size_t vi = begin; vi < end; ++vi) {
            const auto row = new_row(shared_ids[vi]);
            double sum = 0;
            for (std::size_t wi = 0; wi < n; ++wi)
                sum += row_distance(row, new_row(shared_ids[wi]), distance);
            rowsums[vi - begin] = sum;
        }
        for (std::size_t vi = begin; vi < end; ++vi) {
            const double moved = row_distance(new_row(shared_ids[vi]), old_row(shared_ids[vi]),
                                              distance);
            const double rowsum = rowsums[vi - begin];
            rowsum_total += rowsum;
            if (moved == 0) continue;
            if (rowsum == 0)
                throw Error("nmc: zero pairwise distance sum with nonzero displacement");
            term_sum += moved / rowsum;
        }
    }

    NmcComponents out;
    out.locally_normalized_sum = term_sum;
    out.mean_pairwise_distance = rowsum_total / static_cast<double>(n);
    if (term_sum == 0) {
        out.value = 0.0;
        return out;
    }
    if (out.mean_pairwise_distance == 0) throw Error("nmc: zero mean pairwise distance");
    out.value = term_sum / out.mean_pairwise_distance;
    return out;
}

double nmc(const EmbeddingStore& old_store, const EmbeddingStore& new_store,
           const std::vector<std::uint32_t>& shared_ids, bool relations, Distance distance,
           std::size_t chunk_size) {
    return nmc_components(old_store, new_store, shared_ids, relations, distance, chunk_size)
        .value;
}

}  // namespace dynakge
