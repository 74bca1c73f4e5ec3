#include "dynakge/dyninit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "dynakge/vecmath.hpp"

namespace dynakge {

std::string to_string(PreInitMode mode) {
    switch (mode) {
        case PreInitMode::Ran: return "ran";
        case PreInitMode::Ave: return "ave";
        case PreInitMode::Pos: return "pos";
        case PreInitMode::Neg: return "neg";
        case PreInitMode::Neg2: return "neg2";
    }
    return "unknown";
}

PreInitMode preinit_mode_from_string(const std::string& name) {
    if (name == "ran") return PreInitMode::Ran;
    if (name == "ave") return PreInitMode::Ave;
    if (name == "pos") return PreInitMode::Pos;
    if (name == "neg") return PreInitMode::Neg;
    if (name == "neg2") return PreInitMode::Neg2;
    throw ContractViolation("unknown pre-initialization mode '" + name + "'");
}

InitConfig InitConfig::defaults_for(const ModelSpec& spec) {
    InitConfig config;
    config.init_lr = is_translational(spec.kind) ? 0.001 : 0.1;
    config.adagrad = !is_translational(spec.kind);
    return config;
}

void InitConfig::check() const {
    if (pre_negs < 0 || init_negs < 0)
        throw ContractViolation("InitConfig: negative-sample counts must be >= 0");
    if (jump_lim < 1) throw ContractViolation("InitConfig: jump_lim must be >= 1");
    if (jump_size <= 0) throw ContractViolation("InitConfig: jump_size must be positive");
    if (init_times < 1) throw ContractViolation("InitConfig: init_times must be >= 1");
    if (init_lr <= 0) throw ContractViolation("InitConfig: init_lr must be positive");
    if (priority_eps <= 0) throw ContractViolation("InitConfig: priority_eps must be positive");
}

// ---------------------------------------------------------------------------
// Initialization order
// ---------------------------------------------------------------------------

namespace {

struct QueueElement {
    ElementRef ref;
    std::set<Triple> incoming;  // I (relations keep their whole set here)
    std::set<Triple> outgoing;  // O (entities only)
    std::set<Triple> uninformative;

    double priority(double eps) const {
        return static_cast<double>(incoming.size() + outgoing.size()) /
               (static_cast<double>(uninformative.size()) + eps);
    }
};

}  // namespace

std::vector<InitOrderEntry> init_order(const TripleSet& train_next,
                                       const std::vector<EntityId>& added_vertices,
                                       const std::vector<RelationId>& added_relations,
                                       double priority_eps) {
    std::unordered_set<EntityId> queued_entities(added_vertices.begin(), added_vertices.end());
    std::unordered_set<RelationId> queued_relations(added_relations.begin(),
                                                    added_relations.end());

    // Triples touching each new element; releases after a dequeue only ever
    // concern these.
    std::unordered_map<RelationId, std::vector<Triple>> by_relation;
    std::unordered_map<EntityId, std::vector<Triple>> by_entity;
    for (const Triple& t : train_next.triples()) {
        if (queued_relations.count(t.relation)) by_relation[t.relation].push_back(t);
        if (queued_entities.count(t.head)) by_entity[t.head].push_back(t);
        if (queued_entities.count(t.tail) && t.tail != t.head) by_entity[t.tail].push_back(t);
    }

    std::vector<QueueElement> queue;
    for (RelationId r : added_relations) {
        QueueElement qe;
        qe.ref = {true, r};
        for (const Triple& t : by_relation[r]) {
            if (!queued_entities.count(t.head) && !queued_entities.count(t.tail))
                qe.incoming.insert(t);
            else
                qe.uninformative.insert(t);
        }
        queue.push_back(std::move(qe));
    }
    for (EntityId v : added_vertices) {
        QueueElement qe;
        qe.ref = {false, v};
        for (const Triple& t : by_entity[v]) {
            const bool rel_new = queued_relations.count(t.relation) != 0;
            if (t.tail == v && t.head != v && !queued_entities.count(t.head) && !rel_new)
                qe.incoming.insert(t);
            else if (t.head == v && t.tail != v && !queued_entities.count(t.tail) && !rel_new)
                qe.outgoing.insert(t);
            else
                qe.uninformative.insert(t);
        }
        queue.push_back(std::move(qe));
    }

    std::vector<InitOrderEntry> order;
    order.reserve(queue.size());

    while (!queue.empty()) {
        // Extract-max; ties prefer relations, then the smaller id.
        std::size_t best = 0;
        for (std::size_t i = 1; i < queue.size(); ++i) {
            const double pi = queue[i].priority(priority_eps);
            const double pb = queue[best].priority(priority_eps);
            if (pi > pb ||
                (pi == pb && (queue[i].ref.is_relation > queue[best].ref.is_relation ||
                              (queue[i].ref.is_relation == queue[best].ref.is_relation &&
                               queue[i].ref.id < queue[best].ref.id))))
                best = i;
        }
        QueueElement extracted = std::move(queue[best]);
        queue.erase(queue.begin() + best);

        InitOrderEntry entry;
        entry.element = extracted.ref;
        entry.incoming.assign(extracted.incoming.begin(), extracted.incoming.end());
        entry.outgoing.assign(extracted.outgoing.begin(), extracted.outgoing.end());
        entry.priority = extracted.priority(priority_eps);
        order.push_back(entry);

        if (extracted.ref.is_relation)
            queued_relations.erase(extracted.ref.id);
        else
            queued_entities.erase(extracted.ref.id);

        auto find_queued = [&](bool is_relation, std::uint32_t id) -> QueueElement* {
            for (QueueElement& qe : queue)
                if (qe.ref.is_relation == is_relation && qe.ref.id == id) return &qe;
            return nullptr;
        };

        // Release triples that just became informative for remaining members.
        if (extracted.ref.is_relation) {
            const RelationId x = extracted.ref.id;
            for (const Triple& t : by_relation[x]) {
                const bool head_queued = queued_entities.count(t.head) != 0;
                const bool tail_queued = queued_entities.count(t.tail) != 0;
                if (tail_queued && !head_queued) {
                    QueueElement* qe = find_queued(false, t.tail);
                    qe->uninformative.erase(t);
                    qe->incoming.insert(t);
                }
                if (head_queued && !tail_queued) {
                    QueueElement* qe = find_queued(false, t.head);
                    qe->uninformative.erase(t);
                    qe->outgoing.insert(t);
                }
            }
        } else {
            const EntityId x = extracted.ref.id;
            for (const Triple& t : by_entity[x]) {
                const bool rel_queued = queued_relations.count(t.relation) != 0;
                if (t.head == x) {
                    const bool tail_queued = queued_entities.count(t.tail) != 0;
                    if (tail_queued && !rel_queued) {
                        QueueElement* qe = find_queued(false, t.tail);
                        qe->uninformative.erase(t);
                        qe->incoming.insert(t);
                    }
                    if (rel_queued && !tail_queued) {
                        QueueElement* qe = find_queued(true, t.relation);
                        qe->uninformative.erase(t);
                        qe->incoming.insert(t);
                    }
                }
                if (t.tail == x) {
                    const bool head_queued = queued_entities.count(t.head) != 0;
                    if (head_queued && !rel_queued) {
                        QueueElement* qe = find_queued(false, t.head);
                        qe->uninformative.erase(t);
                        qe->outgoing.insert(t);
                    }
                    if (rel_queued && !head_queued) {
                        QueueElement* qe = find_queued(true, t.relation);
                        qe->uninformative.erase(t);
                        qe->incoming.insert(t);
                    }
                }
            }
        }
    }
    return order;
}

// ---------------------------------------------------------------------------
// Pre-initialization
// ---------------------------------------------------------------------------

namespace {

// Corruption restricted to entities that already have an embedding: during
// initialization the queue may still hold unplaced entities, and the
// pre-training objective fixes (and therefore requires) every other block.
Triple sample_corrupted_embedded(const Triple& t, const Snapshot& snapshot,
                                 const EmbeddingStore& store, Rng& rng, int side,
                                 int max_attempts) {
    // side: -1 head only, +1 tail only, 0 fair coin
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Triple candidate = t;
        const EntityId substitute = rng.pick(snapshot.vertices);
        if (!store.has_entity(substitute)) continue;
        const bool corrupt_head = side == -1 || (side == 0 && rng.coin());
        if (corrupt_head)
            candidate.head = substitute;
        else
            candidate.tail = substitute;
        if (!snapshot.train.contains(candidate)) return candidate;
    }
    throw SamplerExhausted("initialization: no embedded corruption found for " + to_string(t));
}

std::vector<ParamField> element_fields(const ElementRef& element, const EmbeddingStore& store) {
    std::vector<ParamField> fields;
    if (element.is_relation) {
        fields.push_back(ParamField::RelationVec);
        if (store.has_relation_normal()) fields.push_back(ParamField::RelationNormal);
        if (store.has_relation_proj()) fields.push_back(ParamField::RelationProj);
    } else {
        fields.push_back(ParamField::EntityVec);
        if (store.has_entity_proj()) fields.push_back(ParamField::EntityProj);
    }
    return fields;
}

std::size_t field_len(ParamField field, const ModelSpec& spec) {
    switch (field) {
        case ParamField::EntityVec:
        case ParamField::EntityProj: return spec.entity_dim;
        case ParamField::RelationVec: return spec.relation_block_len();
        case ParamField::RelationNormal:
        case ParamField::RelationProj: return spec.relation_dim;
    }
    return 0;
}

}  // namespace

ParamBlocks preinit_ran(const ElementRef& element, const ModelSpec& spec,
                        const EmbeddingStore& store, Rng& rng) {
    // Bounds reflect the population including the element being added.
    const double bound = element.is_relation
                             ? relation_init_bound(spec, store.relation_count() + 1)
                             : entity_init_bound(spec, store.entity_count() + 1);
    ParamBlocks blocks;
    for (ParamField field : element_fields(element, store)) {
        std::vector<double> block(field_len(field, spec));
        for (double& x : block) x = rng.uniform(-bound, bound);
        if (field == ParamField::RelationNormal) vec::normalize_unit(block);
        blocks[field] = std::move(block);
    }
    return blocks;
}

ParamBlocks preinit_ave(const ElementRef& element, const ModelSpec& spec,
                        const EmbeddingStore& store, Rng& rng) {
    const std::size_t population =
        element.is_relation ? store.relation_count() : store.entity_count();
    if (population == 0) return preinit_ran(element, spec, store, rng);

    ParamBlocks blocks;
    for (ParamField field : element_fields(element, store)) {
        std::vector<double> mean(field_len(field, spec), 0.0);
        if (element.is_relation) {
            for (RelationId id : store.relation_ids_sorted())
                vec::axpy(1.0, store.block({field, id}), mean);
        } else {
            for (EntityId id : store.entity_ids_sorted())
                vec::axpy(1.0, store.block({field, id}), mean);
        }
        vec::scale(1.0 / static_cast<double>(population), mean);
        if (field == ParamField::RelationNormal) vec::normalize_unit(mean);
        blocks[field] = std::move(mean);
    }
    return blocks;
}

std::vector<double> preinit_pos_relation_transe(const std::vector<Triple>& informative,
                                                const EmbeddingStore& store) {
    if (informative.empty())
        throw ContractViolation("preinit_pos_relation_transe: empty informative set");
    std::vector<double> r(store.spec().relation_dim, 0.0);
    for (const Triple& t : informative) {
        vec::axpy(1.0, store.entity_vec(t.tail), r);
        vec::axpy(-1.0, store.entity_vec(t.head), r);
    }
    vec::scale(1.0 / static_cast<double>(informative.size()), r);
    return r;
}

std::vector<double> preinit_pos_entity_transe(const std::vector<Triple>& incoming,
                                              const std::vector<Triple>& outgoing,
                                              const EmbeddingStore& store) {
    if (incoming.empty() && outgoing.empty())
        throw ContractViolation("preinit_pos_entity_transe: empty evidence");
    std::vector<double> v(store.spec().entity_dim, 0.0);
    for (const Triple& t : incoming) {  // desired tail: h + r
        vec::axpy(1.0, store.entity_vec(t.head), v);
        vec::axpy(1.0, store.relation_vec(t.relation), v);
    }
    for (const Triple& t : outgoing) {  // desired head: t - r
        vec::axpy(1.0, store.entity_vec(t.tail), v);
        vec::axpy(-1.0, store.relation_vec(t.relation), v);
    }
    vec::scale(1.0 / static_cast<double>(incoming.size() + outgoing.size()), v);
    return v;
}

namespace {

// Cholesky factorization of a symmetric matrix stored row-major; returns
// false when a pivot drops below tol (system is singular).
bool cholesky(std::vector<double>& a, std::size_t n, double tol) {
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
        if (diag < tol) return false;
        const double root = std::sqrt(diag);
        a[j * n + j] = root;
        for (std::size_t i = j + 1; i < n; ++i) {
            double sum = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) sum -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = sum / root;
        }
    }
    return true;
}

std::vector<double> cholesky_solve(const std::vector<double>& l, std::size_t n,
                                   const std::vector<double>& b) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = b[i];
        for (std::size_t k = 0; k < i; ++k) sum -= l[i * n + k] * y[k];
        y[i] = sum / l[i * n + i];
    }
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double sum = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) sum -= l[k * n + ii] * x[k];
        x[ii] = sum / l[ii * n + ii];
    }
    return x;
}

// Optimal hyperplane projections and their normals for a new TransH entity.
void transh_projection_lines(const std::vector<Triple>& incoming,
                             const std::vector<Triple>& outgoing, const EmbeddingStore& store,
                             std::vector<std::vector<double>>& points,
                             std::vector<std::vector<double>>& normals) {
    auto project = [&](std::span<const double> e, std::span<const double> w) {
        std::vector<double> p(e.begin(), e.end());
        const double we = vec::dot(w, e);
        vec::axpy(-we, w, p);
        return p;
    };
    for (const Triple& t : incoming) {  // projected head plus relation
        const auto w = store.relation_normal(t.relation);
        std::vector<double> p = project(store.entity_vec(t.head), w);
        vec::axpy(1.0, store.relation_vec(t.relation), p);
        points.push_back(std::move(p));
        normals.push_back(vec::to_vector(w));
    }
    for (const Triple& t : outgoing) {  // projected tail minus relation
        const auto w = store.relation_normal(t.relation);
        std::vector<double> p = project(store.entity_vec(t.tail), w);
        vec::axpy(-1.0, store.relation_vec(t.relation), p);
        points.push_back(std::move(p));
        normals.push_back(vec::to_vector(w));
    }
}

}  // namespace

TransHEntityInit preinit_pos_entity_transh(const std::vector<Triple>& incoming,
                                           const std::vector<Triple>& outgoing,
                                           const EmbeddingStore& store, double ridge) {
    if (incoming.empty() && outgoing.empty())
        throw ContractViolation("preinit_pos_entity_transh: empty evidence");
    const std::size_t d = store.spec().entity_dim;

    std::vector<std::vector<double>> points, normals;
    transh_projection_lines(incoming, outgoing, store, points, normals);

    // A = sum_i (I - w_i w_i^T), b = sum_i (I - w_i w_i^T) p_i
    std::vector<double> a(d * d, 0.0), b(d, 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const std::vector<double>& w = normals[i];
        const std::vector<double>& p = points[i];
        const double wp = vec::dot(w, p);
        for (std::size_t row = 0; row < d; ++row) {
            for (std::size_t col = 0; col < d; ++col) a[row * d + col] -= w[row] * w[col];
            a[row * d + row] += 1.0;
            b[row] += p[row] - wp * w[row];
        }
    }

    TransHEntityInit result;
    double trace = 0;
    for (std::size_t i = 0; i < d; ++i) trace += a[i * d + i];
    const double tol = std::max(1e-12, 1e-12 * trace);

    std::vector<double> factor = a;
    if (!cholesky(factor, d, tol)) {
        result.ridged = true;
        factor = a;
        for (std::size_t i = 0; i < d; ++i) factor[i * d + i] += ridge;
        if (!cholesky(factor, d, 0.0))
            throw Error("preinit_pos_entity_transh: least-squares system not solvable");
    }
    result.vec = cholesky_solve(factor, d, b);
    return result;
}

namespace {

// Best/worst positions for the TransE negative-evidence modes. For relations
// the position of a triple (h,r,t) is t - h; for entities it is h + r for
// incoming and t - r for outgoing evidence.
struct PositionSampler {
    const ElementRef& element;
    const EmbeddingStore& store;
    const Snapshot& next;
    int max_attempts;

    std::vector<double> best_of(const Triple& t, bool is_incoming) const {
        const std::size_t d = store.spec().entity_dim;
        std::vector<double> p(d, 0.0);
        if (element.is_relation) {
            vec::axpy(1.0, store.entity_vec(t.tail), p);
            vec::axpy(-1.0, store.entity_vec(t.head), p);
        } else if (is_incoming) {
            vec::axpy(1.0, store.entity_vec(t.head), p);
            vec::axpy(1.0, store.relation_vec(t.relation), p);
        } else {
            vec::axpy(1.0, store.entity_vec(t.tail), p);
            vec::axpy(-1.0, store.relation_vec(t.relation), p);
        }
        return p;
    }

    // Draws one corrupted triple and returns its worst position. For entity
    // evidence only the partner side is replaced; the element's own slot in
    // the triple does not need an embedding.
    std::vector<double> worst_of(const Triple& t, bool is_incoming, Rng& rng) const {
        const std::size_t d = store.spec().entity_dim;
        std::vector<double> p(d, 0.0);
        if (element.is_relation) {
            const Triple neg = sample_corrupted_embedded(t, next, store, rng, 0, max_attempts);
            vec::axpy(1.0, store.entity_vec(neg.tail), p);
            vec::axpy(-1.0, store.entity_vec(neg.head), p);
        } else if (is_incoming) {
            const Triple neg = sample_corrupted_embedded(t, next, store, rng, -1, max_attempts);
            vec::axpy(1.0, store.entity_vec(neg.head), p);
            vec::axpy(1.0, store.relation_vec(t.relation), p);
        } else {
            const Triple neg = sample_corrupted_embedded(t, next, store, rng, +1, max_attempts);
            vec::axpy(1.0, store.entity_vec(neg.tail), p);
            vec::axpy(-1.0, store.relation_vec(t.relation), p);
        }
        return p;
    }
};

double triple_norm(const ModelSpec& spec, std::span<const double> v) {
    return spec.norm == Norm::L1 ? vec::norm1(v) : vec::norm2(v);
}

}  // namespace

std::vector<double> preinit_neg_direct(const ElementRef& element,
                                       const std::vector<Triple>& incoming,
                                       const std::vector<Triple>& outgoing, const ModelSpec& spec,
                                       const EmbeddingStore& store, const Snapshot& next,
                                       int pre_negs, Rng& rng, int max_attempts) {
    if (spec.kind != ModelKind::TransE)
        throw ContractViolation("preinit_neg_direct: closed-form negative evidence exists for TransE only");
    const std::size_t d = spec.entity_dim;
    PositionSampler sampler{element, store, next, max_attempts};

    std::vector<double> sum(d, 0.0);
    std::size_t count = 0;
    auto handle = [&](const std::vector<Triple>& triples, bool is_incoming) {
        for (const Triple& t : triples) {
            vec::axpy(1.0, sampler.best_of(t, is_incoming), sum);
            ++count;
            for (int i = 0; i < pre_negs; ++i) {
                try {
                    vec::axpy(-1.0, sampler.worst_of(t, is_incoming, rng), sum);
                    ++count;
                } catch (const SamplerExhausted&) {
                    // No admissible corruption for this draw; skip the negative.
                }
            }
        }
    };
    handle(incoming, true);
    handle(outgoing, false);
    if (count == 0) throw ContractViolation("preinit_neg_direct: empty evidence");
    vec::scale(1.0 / static_cast<double>(count), sum);
    return sum;
}

Neg2Result preinit_neg2_iterative(const ElementRef& element, const std::vector<Triple>& incoming,
                                  const std::vector<Triple>& outgoing, const ModelSpec& spec,
                                  const EmbeddingStore& store, const Snapshot& next,
                                  const InitConfig& config, Rng& rng) {
    if (spec.kind != ModelKind::TransE)
        throw ContractViolation("preinit_neg2_iterative: iterative negative evidence exists for TransE only");
    PositionSampler sampler{element, store, next, config.max_rejection_attempts};

    Neg2Result result;
    result.vec = element.is_relation ? preinit_pos_relation_transe(incoming, store)
                                     : preinit_pos_entity_transe(incoming, outgoing, store);

    const std::size_t d = result.vec.size();
    std::vector<double> direction(d), to_worst(d);
    int epoch = 0;
    bool stable = false;
    while (epoch < config.jump_lim && !stable) {
        stable = true;
        auto process = [&](const std::vector<Triple>& triples, bool is_incoming) {
            for (const Triple& t : triples) {
                const std::vector<double> best = sampler.best_of(t, is_incoming);
                for (int i = 0; i < config.pre_negs; ++i) {
                    std::vector<double> worst;
                    try {
                        worst = sampler.worst_of(t, is_incoming, rng);
                    } catch (const SamplerExhausted&) {
                        continue;
                    }
                    for (std::size_t k = 0; k < d; ++k) {
                        direction[k] = best[k] - result.vec[k];
                        to_worst[k] = worst[k] - result.vec[k];
                    }
                    if (triple_norm(spec, to_worst) < triple_norm(spec, direction)) {
                        vec::axpy(config.jump_size, direction, result.vec);
                        stable = false;
                    }
                }
            }
        };
        process(incoming, true);
        process(outgoing, false);
        ++epoch;
    }
    result.stable = stable;
    result.epochs = epoch;
    return result;
}

// ---------------------------------------------------------------------------
// Pre-training against frozen neighbors
// ---------------------------------------------------------------------------

namespace {

// Loss and element-restricted gradient over one informative triple with its
// sampled negatives averaged inside the margin (or softplus terms for the
// logistic loss). Counts 1 + negs score evaluations.
struct PretrainObjective {
    const ModelSpec& spec;
    const EmbeddingStore& store;
    const std::vector<ParamKey>& element_keys;

    double pair_term(const Triple& pos, const std::vector<Triple>& negs, SparseGrad& grad) const {
        instrument::count_score_evaluations(1 + negs.size());
        if (spec.loss == LossKind::PairwiseRanking) {
            const double f_pos = detail::score_uncounted(spec, store, pos);
            double neg_mean = 0;
            for (const Triple& neg : negs)
                neg_mean += detail::score_uncounted(spec, store, neg);
            if (!negs.empty()) neg_mean /= static_cast<double>(negs.size());
            const double term = spec.margin - f_pos + neg_mean;
            if (term <= 0) return 0;
            SparseGrad full;
            detail::score_accumulate(spec, store, pos, &full, -1.0);
            if (!negs.empty()) {
                const double w = 1.0 / static_cast<double>(negs.size());
                for (const Triple& neg : negs) detail::score_accumulate(spec, store, neg, &full, w);
            }
            keep_element_blocks(full, grad);
            return term;
        }
        // Logistic analog: softplus(-f(pos)) + mean of softplus(+f(neg)).
        const double f_pos = detail::score_uncounted(spec, store, pos);
        double loss = detail::softplus(-f_pos);
        SparseGrad pos_grad;
        detail::score_accumulate(spec, store, pos, &pos_grad, -detail::sigmoid(-f_pos));
        keep_element_blocks(pos_grad, grad);
        if (!negs.empty()) {
            const double w = 1.0 / static_cast<double>(negs.size());
            for (const Triple& neg : negs) {
                const double f_neg = detail::score_uncounted(spec, store, neg);
                loss += w * detail::softplus(f_neg);
                SparseGrad neg_grad;
                detail::score_accumulate(spec, store, neg, &neg_grad, w * detail::sigmoid(f_neg));
                keep_element_blocks(neg_grad, grad);
            }
        }
        return loss;
    }

    void keep_element_blocks(const SparseGrad& full, SparseGrad& out) const {
        for (const ParamKey& key : element_keys)
            if (full.has(key)) out.add(key, full.at(key));
    }
};

}  // namespace

PretrainResult pretrain_new_element(const ElementRef& element, const InitOrderEntry& evidence,
                                    const ModelSpec& spec, EmbeddingStore& store,
                                    const Snapshot& next, const InitConfig& config, Rng& rng) {
    PretrainResult result;
    if (!evidence.has_evidence()) return result;

    const std::vector<ParamKey> keys = element.is_relation
                                           ? store.relation_keys(element.id)
                                           : store.entity_keys(element.id);
    PretrainObjective objective{spec, store, keys};

    auto snapshot_blocks = [&]() {
        std::vector<std::vector<double>> copy;
        for (const ParamKey& key : keys) copy.push_back(vec::to_vector(store.block(key)));
        return copy;
    };
    auto restore_blocks = [&](const std::vector<std::vector<double>>& saved) {
        for (std::size_t i = 0; i < keys.size(); ++i) vec::copy(saved[i], store.block(keys[i]));
    };

    std::vector<std::vector<double>> best_blocks = snapshot_blocks();
    double best_loss = std::numeric_limits<double>::infinity();
    double rate = config.init_lr;
    int stall = 0;
    std::map<ParamKey, std::vector<double>> adagrad_accum;

    // The hinge objective is bounded and reaches zero at a finite optimum;
    // the logistic one is not and would grow the new vector without limit,
    // which is exactly the degenerate solution the L2 soft constraint guards
    // against. Charge it on the element's own blocks for logistic models.
    const bool constrain_norm =
        spec.loss == LossKind::Logistic && spec.l2_penalty_weight > 0;

    for (int epoch = 0; epoch < config.init_times; ++epoch) {
        SparseGrad grad;
        double loss = 0;
        auto run = [&](const std::vector<Triple>& triples, bool is_incoming) {
            for (const Triple& pos : triples) {
                std::vector<Triple> negs;
                negs.reserve(config.init_negs);
                // Entity evidence corrupts only the partner side; relations
                // corrupt either side. Substitutes must already be embedded.
                const int side = element.is_relation ? 0 : (is_incoming ? -1 : +1);
                for (int i = 0; i < config.init_negs; ++i) {
                    try {
                        negs.push_back(sample_corrupted_embedded(
                            pos, next, store, rng, side, config.max_rejection_attempts));
                    } catch (const SamplerExhausted&) {
                        // skipped draws evaluate nothing
                    }
                }
                loss += objective.pair_term(pos, negs, grad);
            }
        };
        run(evidence.incoming, true);
        run(evidence.outgoing, false);
        if (constrain_norm) {
            for (const ParamKey& key : keys) {
                const auto block = store.block(key);
                loss += spec.l2_penalty_weight * vec::dot(block, block);
                grad.add(key, block, 2.0 * spec.l2_penalty_weight);
            }
        }

        result.loss_curve.push_back(loss);
        result.epochs_run = epoch + 1;

        if (loss < best_loss) {
            best_loss = loss;
            best_blocks = snapshot_blocks();
        }
        if (loss == 0) {
            result.reached_zero = true;
            break;
        }
        if (epoch > 0) {
            const double previous = result.loss_curve[epoch - 1];
            if (loss <= 0.99 * previous) {
                stall = 0;
            } else if (++stall >= 5) {
                rate *= 0.5;
                ++result.lr_halvings;
                stall = 0;
            }
        }

        for (const auto& [key, g] : grad.blocks()) {
            std::span<double> theta = store.block(key);
            if (config.adagrad) {
                auto it = adagrad_accum.find(key);
                if (it == adagrad_accum.end())
                    it = adagrad_accum.emplace(key, std::vector<double>(g.size(), 0.0)).first;
                std::vector<double>& accum = it->second;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    accum[i] += g[i] * g[i];
                    theta[i] -= rate * g[i] / std::sqrt(accum[i] + 1e-8);
                }
            } else {
                for (std::size_t i = 0; i < g.size(); ++i) theta[i] -= rate * g[i];
            }
            if (key.field == ParamField::RelationNormal) vec::normalize_unit(theta);
            instrument::count_gradient_steps(1);
        }
    }

    restore_blocks(best_blocks);
    result.best_loss = best_loss;
    return result;
}

// ---------------------------------------------------------------------------
// Full initialization pass
// ---------------------------------------------------------------------------

namespace {

struct PreInitOutcome {
    ParamBlocks blocks;
    std::string mode_used;
    bool fallback = false;
    bool ridged = false;
    bool neg2_stable = true;
};

PreInitOutcome dispatch_preinit(const ElementRef& element, const InitOrderEntry& evidence,
                                const ModelSpec& spec, const EmbeddingStore& store,
                                const Snapshot& next, const InitConfig& config, Rng& rng) {
    PreInitOutcome out;
    const bool transe = spec.kind == ModelKind::TransE;
    const bool transh = spec.kind == ModelKind::TransH;

    auto ave = [&]() {
        out.blocks = preinit_ave(element, spec, store, rng);
        out.mode_used = "ave";
    };

    // The pos closed forms exist for TransE (both element kinds) and TransH
    // entities; TransH relations use the average per the derivation. Anything
    // else degrades to ave. The neg modes build on the TransE forms and
    // degrade the same way.
    auto pos = [&]() -> bool {
        if (!evidence.has_evidence()) return false;
        if (transe) {
            out.blocks[element.is_relation ? ParamField::RelationVec : ParamField::EntityVec] =
                element.is_relation
                    ? preinit_pos_relation_transe(evidence.incoming, store)
                    : preinit_pos_entity_transe(evidence.incoming, evidence.outgoing, store);
            out.mode_used = "pos";
            return true;
        }
        if (transh && !element.is_relation) {
            TransHEntityInit init =
                preinit_pos_entity_transh(evidence.incoming, evidence.outgoing, store);
            out.blocks[ParamField::EntityVec] = std::move(init.vec);
            out.ridged = init.ridged;
            out.mode_used = "pos";
            return true;
        }
        return false;
    };

    switch (config.pre_init) {
        case PreInitMode::Ran:
            out.blocks = preinit_ran(element, spec, store, rng);
            out.mode_used = "ran";
            break;
        case PreInitMode::Ave: ave(); break;
        case PreInitMode::Pos:
            if (!pos()) {
                ave();
                out.fallback = true;
            }
            break;
        case PreInitMode::Neg:
            if (transe && evidence.has_evidence()) {
                out.blocks[element.is_relation ? ParamField::RelationVec : ParamField::EntityVec] =
                    preinit_neg_direct(element, evidence.incoming, evidence.outgoing, spec, store,
                                       next, config.pre_negs, rng, config.max_rejection_attempts);
                out.mode_used = "neg";
            } else if (pos()) {
                out.fallback = true;
            } else {
                ave();
                out.fallback = true;
            }
            break;
        case PreInitMode::Neg2:
            if (transe && evidence.has_evidence()) {
                Neg2Result neg2 = preinit_neg2_iterative(element, evidence.incoming,
                                                         evidence.outgoing, spec, store, next,
                                                         config, rng);
                out.blocks[element.is_relation ? ParamField::RelationVec : ParamField::EntityVec] =
                    std::move(neg2.vec);
                out.neg2_stable = neg2.stable;
                out.mode_used = "neg2";
            } else if (pos()) {
                out.fallback = true;
            } else {
                ave();
                out.fallback = true;
            }
            break;
    }
    // Fields the chosen mode did not place (the closed forms only set the
    // primary vector) fall back to the average placement, computed before the
    // element joins the store.
    ParamBlocks defaults;
    bool defaults_ready = false;
    for (ParamField field : element_fields(element, store)) {
        if (out.blocks.count(field)) continue;
        if (!defaults_ready) {
            defaults = preinit_ave(element, spec, store, rng);
            defaults_ready = true;
        }
        out.blocks[field] = defaults[field];
    }
    return out;
}

}  // namespace

InitReport initialize_all(const ChangeSet& change, const Snapshot& next, const ModelSpec& spec,
                          EmbeddingStore& store, const InitConfig& config, Rng& rng) {
    spec.check();
    config.check();
    instrument::ensure_phase("init");
    const instrument::CounterSet before = instrument::counters("init");
    instrument::PhaseScope phase("init");

    InitReport report;
    const std::vector<InitOrderEntry> order =
        init_order(next.train, change.added_vertices, change.added_relations,
                   config.priority_eps);

    for (const InitOrderEntry& entry : order) {
        PreInitOutcome pre =
            dispatch_preinit(entry.element, entry, spec, store, next, config, rng);

        if (entry.element.is_relation)
            store.add_relation(entry.element.id);
        else
            store.add_entity(entry.element.id);
        for (auto& [field, values] : pre.blocks)
            vec::copy(values, store.block({field, entry.element.id}));

        ElementInitRecord record;
        record.element = entry.element;
        record.mode_used = pre.mode_used;
        record.mode_fallback = pre.fallback;
        record.incoming_count = entry.incoming.size();
        record.outgoing_count = entry.outgoing.size();
        record.priority = entry.priority;
        record.ridged = pre.ridged;
        record.neg2_stable = pre.neg2_stable;
        if (entry.has_evidence())
            record.pretrain = pretrain_new_element(entry.element, entry, spec, store, next,
                                                   config, rng);
        if (pre.fallback)
            report.notes.push_back("element " + std::to_string(entry.element.id) + " (" +
                                   (entry.element.is_relation ? std::string("relation")
                                                              : std::string("entity")) +
                                   "): mode " + to_string(config.pre_init) + " degraded to " +
                                   pre.mode_used);
        else if (pre.mode_used == "neg")
            report.notes.push_back(
                "element " + std::to_string(entry.element.id) +
                ": direct negative evidence placed as the mean over best positions and "
                "negated worst positions");
        report.elements.push_back(std::move(record));
    }

    report.counters = instrument::counters("init") - before;
    return report;
}

}  // namespace dynakge
