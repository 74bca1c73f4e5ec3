#include "dynakge/store.hpp"

#include <cmath>
#include <cstring>

#include "dynakge/rng.hpp"
#include "dynakge/vecmath.hpp"

namespace dynakge {

namespace {

// Removes row `row` from a row-major [rows x len] buffer by swapping in the
// last row.
void swap_remove_row(std::vector<double>& data, std::size_t row, std::size_t len,
                     std::size_t last_row) {
    if (len == 0) return;
    if (row != last_row)
        std::memcpy(data.data() + row * len, data.data() + last_row * len, len * sizeof(double));
    data.resize(last_row * len);
}

}  // namespace

EmbeddingStore::EmbeddingStore(const ModelSpec& spec) : spec_(spec) { spec_.check(); }

void EmbeddingStore::add_entity(EntityId id) {
    if (has_entity(id)) throw ContractViolation("store: entity " + std::to_string(id) + " already present");
    entity_rows_.emplace(id, entity_id_of_row_.size());
    entity_id_of_row_.push_back(id);
    entity_vec_.resize(entity_vec_.size() + spec_.entity_dim, 0.0);
    if (has_entity_proj()) entity_proj_.resize(entity_proj_.size() + spec_.entity_dim, 0.0);
}

void EmbeddingStore::add_relation(RelationId id) {
    if (has_relation(id))
        throw ContractViolation("store: relation " + std::to_string(id) + " already present");
    relation_rows_.emplace(id, relation_id_of_row_.size());
    relation_id_of_row_.push_back(id);
    relation_vec_.resize(relation_vec_.size() + spec_.relation_block_len(), 0.0);
    if (has_relation_normal())
        relation_normal_.resize(relation_normal_.size() + spec_.relation_dim, 0.0);
    if (has_relation_proj())
        relation_proj_.resize(relation_proj_.size() + spec_.relation_dim, 0.0);
}

void EmbeddingStore::remove_entity(EntityId id) {
    std::size_t row = entity_row(id);
    std::size_t last = entity_id_of_row_.size() - 1;
    EntityId moved = entity_id_of_row_[last];
    swap_remove_row(entity_vec_, row, spec_.entity_dim, last);
    if (has_entity_proj()) swap_remove_row(entity_proj_, row, spec_.entity_dim, last);
    entity_id_of_row_[row] = moved;
    entity_id_of_row_.pop_back();
    entity_rows_.erase(id);
    if (moved != id) entity_rows_[moved] = row;
}

void EmbeddingStore::remove_relation(RelationId id) {
    std::size_t row = relation_row(id);
    std::size_t last = relation_id_of_row_.size() - 1;
    RelationId moved = relation_id_of_row_[last];
    swap_remove_row(relation_vec_, row, spec_.relation_block_len(), last);
    if (has_relation_normal()) swap_remove_row(relation_normal_, row, spec_.relation_dim, last);
    if (has_relation_proj()) swap_remove_row(relation_proj_, row, spec_.relation_dim, last);
    relation_id_of_row_[row] = moved;
    relation_id_of_row_.pop_back();
    relation_rows_.erase(id);
    if (moved != id) relation_rows_[moved] = row;
}

std::size_t EmbeddingStore::entity_row(EntityId id) const {
    auto it = entity_rows_.find(id);
    if (it == entity_rows_.end())
        throw LookupError("store: no parameters for entity " + std::to_string(id));
    return it->second;
}

std::size_t EmbeddingStore::relation_row(RelationId id) const {
    auto it = relation_rows_.find(id);
    if (it == relation_rows_.end())
        throw LookupError("store: no parameters for relation " + std::to_string(id));
    return it->second;
}

std::span<const double> EmbeddingStore::entity_vec(EntityId id) const {
    return {entity_vec_.data() + entity_row(id) * spec_.entity_dim,
            static_cast<std::size_t>(spec_.entity_dim)};
}
std::span<double> EmbeddingStore::entity_vec(EntityId id) {
    return {entity_vec_.data() + entity_row(id) * spec_.entity_dim,
            static_cast<std::size_t>(spec_.entity_dim)};
}
std::span<const double> EmbeddingStore::entity_proj(EntityId id) const {
    if (!has_entity_proj()) throw LookupError("store: model has no entity projection vectors");
    return {entity_proj_.data() + entity_row(id) * spec_.entity_dim,
            static_cast<std::size_t>(spec_.entity_dim)};
}
std::span<double> EmbeddingStore::entity_proj(EntityId id) {
    if (!has_entity_proj()) throw LookupError("store: model has no entity projection vectors");
    return {entity_proj_.data() + entity_row(id) * spec_.entity_dim,
            static_cast<std::size_t>(spec_.entity_dim)};
}
std::span<const double> EmbeddingStore::relation_vec(RelationId id) const {
    std::size_t len = spec_.relation_block_len();
    return {relation_vec_.data() + relation_row(id) * len, len};
}
std::span<double> EmbeddingStore::relation_vec(RelationId id) {
    std::size_t len = spec_.relation_block_len();
    return {relation_vec_.data() + relation_row(id) * len, len};
}
std::span<const double> EmbeddingStore::relation_normal(RelationId id) const {
    if (!has_relation_normal()) throw LookupError("store: model has no hyperplane normals");
    return {relation_normal_.data() + relation_row(id) * spec_.relation_dim,
            static_cast<std::size_t>(spec_.relation_dim)};
}
std::span<double> EmbeddingStore::relation_normal(RelationId id) {
    if (!has_relation_normal()) throw LookupError("store: model has no hyperplane normals");
    return {relation_normal_.data() + relation_row(id) * spec_.relation_dim,
            static_cast<std::size_t>(spec_.relation_dim)};
}
std::span<const double> EmbeddingStore::relation_proj(RelationId id) const {
    if (!has_relation_proj()) throw LookupError("store: model has no relation projection vectors");
    return {relation_proj_.data() + relation_row(id) * spec_.relation_dim,
            static_cast<std::size_t>(spec_.relation_dim)};
}
std::span<double> EmbeddingStore::relation_proj(RelationId id) {
    if (!has_relation_proj()) throw LookupError("store: model has no relation projection vectors");
    return {relation_proj_.data() + relation_row(id) * spec_.relation_dim,
            static_cast<std::size_t>(spec_.relation_dim)};
}

std::span<double> EmbeddingStore::block(const ParamKey& key) {
    switch (key.field) {
        case ParamField::EntityVec: return entity_vec(key.id);
        case ParamField::EntityProj: return entity_proj(key.id);
        case ParamField::RelationVec: return relation_vec(key.id);
        case ParamField::RelationNormal: return relation_normal(key.id);
        case ParamField::RelationProj: return relation_proj(key.id);
    }
    throw LookupError("store: invalid parameter field");
}

std::span<const double> EmbeddingStore::block(const ParamKey& key) const {
    return const_cast<EmbeddingStore*>(this)->block(key);
}

std::vector<ParamKey> EmbeddingStore::entity_keys(EntityId id) const {
    std::vector<ParamKey> keys{{ParamField::EntityVec, id}};
    if (has_entity_proj()) keys.push_back({ParamField::EntityProj, id});
    return keys;
}

std::vector<ParamKey> EmbeddingStore::relation_keys(RelationId id) const {
    std::vector<ParamKey> keys{{ParamField::RelationVec, id}};
    if (has_relation_normal()) keys.push_back({ParamField::RelationNormal, id});
    if (has_relation_proj()) keys.push_back({ParamField::RelationProj, id});
    return keys;
}

std::vector<EntityId> EmbeddingStore::entity_ids_sorted() const {
    std::vector<EntityId> ids = entity_id_of_row_;
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<RelationId> EmbeddingStore::relation_ids_sorted() const {
    std::vector<RelationId> ids = relation_id_of_row_;
    std::sort(ids.begin(), ids.end());
    return ids;
}

bool EmbeddingStore::covers(const Snapshot& s) const {
    for (EntityId v : s.vertices)
        if (!has_entity(v)) return false;
    for (RelationId r : s.relations)
        if (!has_relation(r)) return false;
    return true;
}

namespace {

bool spans_bitwise_equal(std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

bool bitwise_equal(const EmbeddingStore& a, const EmbeddingStore& b) {
    if (a.spec().kind != b.spec().kind || a.spec().entity_dim != b.spec().entity_dim ||
        a.spec().relation_dim != b.spec().relation_dim)
        return false;
    if (a.entity_count() != b.entity_count() || a.relation_count() != b.relation_count())
        return false;
    for (EntityId id : a.entity_ids_sorted()) {
        if (!b.has_entity(id)) return false;
        for (const ParamKey& key : a.entity_keys(id))
            if (!spans_bitwise_equal(a.block(key), b.block(key))) return false;
    }
    for (RelationId id : a.relation_ids_sorted()) {
        if (!b.has_relation(id)) return false;
        for (const ParamKey& key : a.relation_keys(id))
            if (!spans_bitwise_equal(a.block(key), b.block(key))) return false;
    }
    return true;
}

double entity_init_bound(const ModelSpec& spec, std::size_t num_entities) {
    return std::sqrt(6.0 / (static_cast<double>(num_entities) + spec.entity_dim));
}

double relation_init_bound(const ModelSpec& spec, std::size_t num_relations) {
    return std::sqrt(6.0 / (static_cast<double>(num_relations) + spec.relation_dim));
}

EmbeddingStore init_parameters(const ModelSpec& spec, const std::vector<EntityId>& vertices,
                               const std::vector<RelationId>& relations, std::uint64_t seed) {
    spec.check();
    EmbeddingStore store(spec);
    Rng rng(seed);

    std::vector<RelationId> rel_ids = relations;
    std::sort(rel_ids.begin(), rel_ids.end());
    std::vector<EntityId> ent_ids = vertices;
    std::sort(ent_ids.begin(), ent_ids.end());

    const double rel_bound = relation_init_bound(spec, rel_ids.size());
    const double ent_bound = entity_init_bound(spec, ent_ids.size());

    auto fill = [&](std::span<double> block, double bound) {
        for (double& x : block) x = rng.uniform(-bound, bound);
    };

    // Relations first, entities second, each in ascending id order.
    for (RelationId r : rel_ids) {
        store.add_relation(r);
        fill(store.relation_vec(r), rel_bound);
        if (store.has_relation_normal()) {
            fill(store.relation_normal(r), rel_bound);
            vec::normalize_unit(store.relation_normal(r));
        }
        if (store.has_relation_proj()) fill(store.relation_proj(r), rel_bound);
    }
    for (EntityId v : ent_ids) {
        store.add_entity(v);
        fill(store.entity_vec(v), ent_bound);
        if (store.has_entity_proj()) fill(store.entity_proj(v), ent_bound);
    }
    return store;
}

}  // namespace dynakge
