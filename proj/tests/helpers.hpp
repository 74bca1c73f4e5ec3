#pragma once
// Shared fixtures and independent oracles for the test suites.

#include <cmath>
#include <set>
#include <vector>

#include "dynakge/rng.hpp"
#include "dynakge/scoring.hpp"
#include "dynakge/types.hpp"

namespace dynakge::test {

inline Snapshot toy_snapshot(int time_step, std::size_t entities, std::size_t relations,
                             std::vector<Triple> train, std::vector<Triple> valid = {},
                             std::vector<Triple> test = {}) {
    std::vector<EntityId> vs(entities);
    for (std::size_t i = 0; i < entities; ++i) vs[i] = static_cast<EntityId>(i);
    std::vector<RelationId> rs(relations);
    for (std::size_t i = 0; i < relations; ++i) rs[i] = static_cast<RelationId>(i);
    return make_snapshot(time_step, vs, rs, std::move(train), std::move(valid), std::move(test));
}

// Random snapshot over dense id ranges; triples drawn without duplicates and
// divided into the three splits.
inline Snapshot random_snapshot(Rng& rng, int time_step, std::size_t num_entities,
                                std::size_t num_relations, std::size_t num_triples) {
    std::set<Triple> triples;
    std::size_t guard = 0;
    while (triples.size() < num_triples && guard < num_triples * 50) {
        ++guard;
        triples.insert({static_cast<EntityId>(rng.index(num_entities)),
                        static_cast<RelationId>(rng.index(num_relations)),
                        static_cast<EntityId>(rng.index(num_entities))});
    }
    std::vector<Triple> all(triples.begin(), triples.end());
    rng.shuffle(all);
    std::vector<Triple> train, valid, test;
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (i % 10 == 8)
            valid.push_back(all[i]);
        else if (i % 10 == 9)
            test.push_back(all[i]);
        else
            train.push_back(all[i]);
    }
    std::vector<EntityId> vs(num_entities);
    for (std::size_t i = 0; i < num_entities; ++i) vs[i] = static_cast<EntityId>(i);
    std::vector<RelationId> rs(num_relations);
    for (std::size_t i = 0; i < num_relations; ++i) rs[i] = static_cast<RelationId>(i);
    return make_snapshot(time_step, vs, rs, std::move(train), std::move(valid), std::move(test));
}

// Store with every block drawn uniformly from [-scale, scale] (normals kept
// unit length).
inline EmbeddingStore random_store(const ModelSpec& spec, std::size_t entities,
                                   std::size_t relations, Rng& rng, double scale = 0.5) {
    std::vector<EntityId> vs(entities);
    for (std::size_t i = 0; i < entities; ++i) vs[i] = static_cast<EntityId>(i);
    std::vector<RelationId> rs(relations);
    for (std::size_t i = 0; i < relations; ++i) rs[i] = static_cast<RelationId>(i);
    EmbeddingStore store = init_parameters(spec, vs, rs, rng.next());
    auto refill = [&](std::span<double> block, bool unit) {
        for (double& x : block) x = rng.uniform(-scale, scale);
        if (unit) {
            double norm = 0;
            for (double x : block) norm += x * x;
            norm = std::sqrt(norm);
            if (norm > 0)
                for (double& x : block) x /= norm;
            else
                block[0] = 1;
        }
    };
    for (EntityId v : vs) {
        refill(store.entity_vec(v), false);
        if (store.has_entity_proj()) refill(store.entity_proj(v), false);
    }
    for (RelationId r : rs) {
        refill(store.relation_vec(r), false);
        if (store.has_relation_normal()) refill(store.relation_normal(r), true);
        if (store.has_relation_proj()) refill(store.relation_proj(r), false);
    }
    return store;
}

// Central finite differences of a loss functional with respect to every
// parameter block it can touch.
template <typename LossFn>
inline double fd_partial(EmbeddingStore& store, const ParamKey& key, std::size_t index,
                         double step, LossFn&& loss) {
    std::span<double> block = store.block(key);
    const double saved = block[index];
    block[index] = saved + step;
    const double up = loss();
    block[index] = saved - step;
    const double down = loss();
    block[index] = saved;
    return (up - down) / (2 * step);
}

inline bool close_rel(double a, double b, double tol) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-3});
    return std::fabs(a - b) <= tol * scale;
}

}  // namespace dynakge::test
