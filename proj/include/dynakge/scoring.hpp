#pragma once
// Scoring functions f_r(h,t) for the six models, the two loss functions, and
// exact analytic gradients. Higher scores mean more plausible triples.
//
//   TransE    f = -||h + r - t||        (L1 or L2 per spec)
//   TransH    f = -||P(h - t) + r||^2   with P = I - w w^T projecting onto the
//                                       relation hyperplane
//   TransD    f = -||N(M_rh h) + r - N(M_rt t)||^2 with M_rh = r_p h_p^T + I
//                                       and N() normalizing onto the unit ball
//                                       only when the norm exceeds 1
//   DistMult  f = sum_i r_i h_i t_i
//   RESCAL    f = h^T M_r t
//   ANALOGY   f = h^T B_r t with B_r block-diagonal, 2x2 blocks [[a,-b],[b,a]]
//
// Every public score/loss call increments the score-evaluation counter of the
// current instrumentation phase (pairwise losses count two evaluations, one
// per triple). The fused loss+gradient calls count exactly like the plain
// losses so one epoch over |S| pairs tallies exactly 2|S| evaluations.

#include <map>
#include <span>

#include "dynakge/instrument.hpp"
#include "dynakge/store.hpp"

namespace dynakge {

// Sparse gradient as a map from parameter block to a dense gradient block.
class SparseGrad {
public:
    void add(const ParamKey& key, std::span<const double> values, double scale = 1.0);
    std::span<double> at_or_insert(const ParamKey& key, std::size_t len);

    bool empty() const { return blocks_.empty(); }
    std::size_t block_count() const { return blocks_.size(); }
    bool has(const ParamKey& key) const { return blocks_.count(key) != 0; }
    std::span<const double> at(const ParamKey& key) const;

    void merge(const SparseGrad& other);

    // Keys iterate in sorted order (std::map), keeping application order
    // deterministic.
    const std::map<ParamKey, std::vector<double>>& blocks() const { return blocks_; }

private:
    std::map<ParamKey, std::vector<double>> blocks_;
};

struct LossGrad {
    double loss = 0;
    SparseGrad grad;
};

// Counted scoring-function evaluation.
double score(const ModelSpec& spec, const EmbeddingStore& store, const Triple& t);

// [gamma - f(pos) + f(neg)]_+ plus the TransH soft constraint
// C[(w.r)^2/||r||^2 - eps^2]_+ and the L2 penalty on participating blocks.
// pos and neg must share the relation.
double loss_pairwise(const ModelSpec& spec, const EmbeddingStore& store, const Triple& pos,
                     const Triple& neg);

// log(1 + exp(-y f)) via a log1p/exp formulation that stays finite for |f| up
// to 1e3, plus the L2 penalty. label is +1 or -1.
double loss_logistic(const ModelSpec& spec, const EmbeddingStore& store, const Triple& t,
                     int label);

// Fused loss and analytic gradient. The hinge subgradient at the kink is
// treated as inactive (zero).
LossGrad loss_grad_pairwise(const ModelSpec& spec, const EmbeddingStore& store, const Triple& pos,
                            const Triple& neg);
LossGrad loss_grad_logistic(const ModelSpec& spec, const EmbeddingStore& store, const Triple& t,
                            int label);

// Distinct parameter keys of the triple's head, relation, and tail.
std::vector<ParamKey> participating_keys(const ModelSpec& spec, const EmbeddingStore& store,
                                         const Triple& t);

namespace detail {

// Uncounted forward evaluation; when grad != nullptr, accumulates
// scale * df/dtheta for every participating block.
double score_accumulate(const ModelSpec& spec, const EmbeddingStore& store, const Triple& t,
                        SparseGrad* grad, double scale);

// Pairwise loss without the shared-relation requirement. Change-specific
// epochs may pair a deleted triple with a corrected triple of a different
// relation when the corrected-sampling fallback fires; the TransH constraint
// is then charged once per distinct relation of the pair. Counts two score
// evaluations like loss_grad_pairwise.
LossGrad loss_grad_pair_mixed(const ModelSpec& spec, const EmbeddingStore& store,
                              const Triple& pos, const Triple& neg);

// Epoch building blocks. The training loops charge the L2 penalty once per
// batch and parameter block rather than once per pair, so the per-pair terms
// come penalty-free and the batch adds the regularizer over the distinct
// blocks it touched.
LossGrad pair_term(const ModelSpec& spec, const EmbeddingStore& store, const Triple& pos,
                   const Triple& neg, bool enforce_shared_relation);
LossGrad logistic_term(const ModelSpec& spec, const EmbeddingStore& store, const Triple& t,
                       int label);
double batch_l2_penalty(const ModelSpec& spec, const EmbeddingStore& store,
                        const std::vector<ParamKey>& touched, SparseGrad* grad);

inline double score_uncounted(const ModelSpec& spec, const EmbeddingStore& store,
                              const Triple& t) {
    return score_accumulate(spec, store, t, nullptr, 0.0);
}

double softplus(double x);
double sigmoid(double x);

}  // namespace detail

}  // namespace dynakge
