#pragma once
// Per-entity and per-relation learned parameters.
//
// Block layout by model:
//   TransE    entity: vec[d]            relation: vec[d]
//   TransH    entity: vec[d]            relation: vec[d] + unit normal[d]
//   TransD    entity: vec[dV] + proj[dV] relation: vec[dR] + proj[dR]
//   DistMult  entity: vec[d]            relation: vec[d]
//   RESCAL    entity: vec[d]            relation: row-major matrix[d*d]
//   ANALOGY   entity: vec[d]            relation: d params, interleaved
//             (a0,b0,a1,b1,...) for the 2x2 blocks [[a,-b],[b,a]], plus a
//             trailing scalar block when d is odd.

#include <span>
#include <vector>

#include "dynakge/model.hpp"
#include "dynakge/types.hpp"

namespace dynakge {

enum class ParamField : std::uint8_t {
    EntityVec,
    EntityProj,
    RelationVec,   // primary relation block (vector, matrix, or analogy params)
    RelationNormal,
    RelationProj,
};

struct ParamKey {
    ParamField field = ParamField::EntityVec;
    std::uint32_t id = 0;

    friend bool operator==(const ParamKey& a, const ParamKey& b) {
        return a.field == b.field && a.id == b.id;
    }
    friend bool operator<(const ParamKey& a, const ParamKey& b) {
        if (a.field != b.field) return a.field < b.field;
        return a.id < b.id;
    }
};

struct ParamKeyHash {
    std::size_t operator()(const ParamKey& k) const {
        return std::hash<std::uint64_t>()((std::uint64_t(k.id) << 3) |
                                          static_cast<std::uint64_t>(k.field));
    }
};

class EmbeddingStore {
public:
    EmbeddingStore() = default;
    explicit EmbeddingStore(const ModelSpec& spec);

    const ModelSpec& spec() const { return spec_; }

    bool has_entity(EntityId id) const { return entity_rows_.count(id) != 0; }
    bool has_relation(RelationId id) const { return relation_rows_.count(id) != 0; }
    std::size_t entity_count() const { return entity_rows_.size(); }
    std::size_t relation_count() const { return relation_rows_.size(); }

    // Appends zero-initialized blocks; throws if the id already exists.
    void add_entity(EntityId id);
    void add_relation(RelationId id);
    void remove_entity(EntityId id);
    void remove_relation(RelationId id);

    std::span<const double> entity_vec(EntityId id) const;
    std::span<double> entity_vec(EntityId id);
    std::span<const double> entity_proj(EntityId id) const;
    std::span<double> entity_proj(EntityId id);
    std::span<const double> relation_vec(RelationId id) const;
    std::span<double> relation_vec(RelationId id);
    std::span<const double> relation_normal(RelationId id) const;
    std::span<double> relation_normal(RelationId id);
    std::span<const double> relation_proj(RelationId id) const;
    std::span<double> relation_proj(RelationId id);

    std::span<double> block(const ParamKey& key);
    std::span<const double> block(const ParamKey& key) const;

    // All parameter keys owned by one entity or relation under this model.
    std::vector<ParamKey> entity_keys(EntityId id) const;
    std::vector<ParamKey> relation_keys(RelationId id) const;

    bool has_entity_proj() const { return spec_.kind == ModelKind::TransD; }
    bool has_relation_normal() const { return spec_.kind == ModelKind::TransH; }
    bool has_relation_proj() const { return spec_.kind == ModelKind::TransD; }

    std::vector<EntityId> entity_ids_sorted() const;
    std::vector<RelationId> relation_ids_sorted() const;

    // True when every id of the snapshot has a parameter record.
    bool covers(const Snapshot& s) const;

private:
    ModelSpec spec_;
    std::unordered_map<EntityId, std::size_t> entity_rows_;
    std::unordered_map<RelationId, std::size_t> relation_rows_;
    std::vector<EntityId> entity_id_of_row_;
    std::vector<RelationId> relation_id_of_row_;
    std::vector<double> entity_vec_;
    std::vector<double> entity_proj_;
    std::vector<double> relation_vec_;
    std::vector<double> relation_normal_;
    std::vector<double> relation_proj_;

    std::size_t entity_row(EntityId id) const;
    std::size_t relation_row(RelationId id) const;
};

// Exact (bit-level) equality of all parameter blocks, independent of internal
// row order. Used by determinism and freeze checks.
bool bitwise_equal(const EmbeddingStore& a, const EmbeddingStore& b);

// Uniform initialization per the offline learning procedure: every component
// of a relation block is drawn i.i.d. from
// uniform(-sqrt(6/(|R|+d)), +sqrt(6/(|R|+d))) and every entity component from
// the analogous bound with |V|. TransH hyperplane normals are drawn the same
// way and then normalized to unit length.
EmbeddingStore init_parameters(const ModelSpec& spec, const std::vector<EntityId>& vertices,
                               const std::vector<RelationId>& relations, std::uint64_t seed);

double entity_init_bound(const ModelSpec& spec, std::size_t num_entities);
double relation_init_bound(const ModelSpec& spec, std::size_t num_relations);

}  // namespace dynakge
