#pragma once
// Model configuration for the six embedding models.

#include <string>

#include "dynakge/types.hpp"

namespace dynakge {

enum class ModelKind { TransE, TransH, TransD, DistMult, Rescal, Analogy };

enum class Norm { L1, L2 };

enum class LossKind { PairwiseRanking, Logistic };

bool is_translational(ModelKind kind);

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct ModelSpec {
    ModelKind kind = ModelKind::TransE;
    int entity_dim = 100;
    int relation_dim = 100;  // may differ from entity_dim for TransD only
    Norm norm = Norm::L2;    // TransE only
    double margin = 1.0;
    double transh_constraint_weight = 0.25;
    double transh_constraint_eps = 1e-3;
    double l2_penalty_weight = 0.02;
    LossKind loss = LossKind::PairwiseRanking;

    // Paper defaults: d = 100 for every model except RESCAL with d = 50;
    // translational models train the pairwise ranking loss, semantic matching
    // models the logistic loss.
    static ModelSpec defaults(ModelKind kind);

    // Throws ContractViolation if dims or margin are out of range.
    void check() const;

    // Length of a relation's primary parameter block.
    int relation_block_len() const {
        if (kind == ModelKind::Rescal) return entity_dim * entity_dim;
        if (kind == ModelKind::Analogy) return entity_dim;
        return relation_dim;
    }
};

}  // namespace dynakge
