#include "dynakge/model.hpp"

namespace dynakge {

bool is_translational(ModelKind kind) {
    return kind == ModelKind::TransE || kind == ModelKind::TransH || kind == ModelKind::TransD;
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::TransE: return "transe";
        case ModelKind::TransH: return "transh";
        case ModelKind::TransD: return "transd";
        case ModelKind::DistMult: return "distmult";
        case ModelKind::Rescal: return "rescal";
        case ModelKind::Analogy: return "analogy";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "transe") return ModelKind::TransE;
    if (name == "transh") return ModelKind::TransH;
    if (name == "transd") return ModelKind::TransD;
    if (name == "distmult") return ModelKind::DistMult;
    if (name == "rescal") return ModelKind::Rescal;
    if (name == "analogy") return ModelKind::Analogy;
    throw ContractViolation("unknown model kind '" + name + "'");
}

ModelSpec ModelSpec::defaults(ModelKind kind) {
    ModelSpec spec;
    spec.kind = kind;
    spec.entity_dim = (kind == ModelKind::Rescal) ? 50 : 100;
    spec.relation_dim = spec.entity_dim;
    spec.loss = is_translational(kind) ? LossKind::PairwiseRanking : LossKind::Logistic;
    return spec;
}

void ModelSpec::check() const {
    if (entity_dim <= 0 || relation_dim <= 0)
        throw ContractViolation("ModelSpec: dimensions must be positive");
    if (margin <= 0) throw ContractViolation("ModelSpec: margin must be positive");
    if (transh_constraint_weight < 0 || l2_penalty_weight < 0)
        throw ContractViolation("ModelSpec: penalty weights must be non-negative");
    if (transh_constraint_eps <= 0)
        throw ContractViolation("ModelSpec: constraint epsilon must be positive");
    if (kind != ModelKind::TransD && relation_dim != entity_dim)
        throw ContractViolation("ModelSpec: relation_dim may differ from entity_dim only for TransD");
}

}  // namespace dynakge
