#include "dynakge/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "dynakge/vecmath.hpp"

namespace dynakge {

void SparseGrad::add(const ParamKey& key, std::span<const double> values, double scale) {
    std::span<double> block = at_or_insert(key, values.size());
    for (std::size_t i = 0; i < values.size(); ++i) block[i] += scale * values[i];
}

std::span<double> SparseGrad::at_or_insert(const ParamKey& key, std::size_t len) {
    auto it = blocks_.find(key);
    if (it == blocks_.end()) it = blocks_.emplace(key, std::vector<double>(len, 0.0)).first;
    if (it->second.size() != len)
        throw ContractViolation("SparseGrad: block length mismatch for parameter");
    return it->second;
}

std::span<const double> SparseGrad::at(const ParamKey& key) const {
    auto it = blocks_.find(key);
    if (it == blocks_.end()) throw LookupError("SparseGrad: no block for parameter");
    return it->second;
}

void SparseGrad::merge(const SparseGrad& other) {
    for (const auto& [key, values] : other.blocks_) add(key, values);
}

namespace detail {

double softplus(double x) {
    if (x > 0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {

int sign(double x) { return (x > 0) - (x < 0); }

double score_transe(const ModelSpec& spec, const EmbeddingStore& store, const Triple& t,
                    SparseGrad* grad, double scale) {
    const auto h = store.entity_vec(t.head);
    const auto r = store.relation_vec(t.relation);
    const auto tl = store.entity_vec(t.tail);
    const std::size_t d = h.size();

    std::vector<double> u(d);
    for (std::size_t i = 0; i < d; ++i) u[i] = h[i] + r[i] - tl[i];

    double f;
    if (spec.norm == Norm::L2) {
        double n = vec::norm2(u);
        f = -n;
        if (grad && n > 0) {
            std::vector<double> g(d);
            for (std::size_t i = 0; i < d; ++i) g[i] = -u[i] / n;  // df/dh = df/dr
            grad->add({ParamField::EntityVec, t.head}, g, scale);
            grad->add({ParamField::RelationVec, t.relation}, g, scale);
            grad->add({ParamField::EntityVec, t.tail}, g, -scale);
        }
    } else {
        f = -vec::norm1(u);
        if (grad) {
            std::vector<double> g(d);
            for (std::size_t i = 0; i < d; ++i) g[i] = -sign(u[i]);
            grad->add({ParamField::EntityVec, t.head}, g, scale);
            grad->add({ParamField::RelationVec, t.relation}, g, scale);
            grad->add({ParamField::EntityVec, t.tail}, g, -scale);
        }
    }
    return f;
}

double score_transh(const ModelSpec&, const EmbeddingStore& store, const Triple& t,
                    SparseGrad* grad, double scale) {
    const auto h = store.entity_vec(t.head);
    const auto r = store.relation_vec(t.relation);
    const auto w = store.relation_normal(t.relation);
    const auto tl = store.entity_vec(t.tail);
    const std::size_t d = h.size();

    std::vector<double> a(d), u(d);
    for (std::size_t i = 0; i < d; ++i) a[i] = h[i] - tl[i];
    const double wa = vec::dot(w, a);
    for (std::size_t i = 0; i < d; ++i) u[i] = a[i] - wa * w[i] + r[i];
    const double f = -vec::dot(u, u);

    if (grad) {
        const double wu = vec::dot(w, u);
        std::vector<double> pu(d), gw(d), gu(d);
        for (std::size_t i = 0; i < d; ++i) {
            pu[i] = u[i] - wu * w[i];
            gw[i] = 2.0 * (wu * a[i] + wa * u[i]);
            gu[i] = -2.0 * u[i];
        }
        std::vector<double> gh(d);
        for (std::size_t i = 0; i < d; ++i) gh[i] = -2.0 * pu[i];
        grad->add({ParamField::EntityVec, t.head}, gh, scale);
        grad->add({ParamField::EntityVec, t.tail}, gh, -scale);
        grad->add({ParamField::RelationVec, t.relation}, gu, scale);
        grad->add({ParamField::RelationNormal, t.relation}, gw, scale);
    }
    return f;
}

// Zero-padding / truncating map between entity and relation space and its
// adjoint.
void pad_into(std::span<const double> x, std::span<double> out) {
    const std::size_t m = std::min(x.size(), out.size());
    for (std::size_t i = 0; i < m; ++i) out[i] = x[i];
    for (std::size_t i = m; i < out.size(); ++i) out[i] = 0.0;
}

// N(x): x if ||x|| <= 1, else x/||x||. Returns the norm for reuse.
double cond_normalize(std::vector<double>& x) {
    double n = vec::norm2(x);
    if (n > 1.0)
        for (double& v : x) v /= n;
    return n;
}

// J_N(x)^T g for the conditional normalization above.
std::vector<double> cond_normalize_jacobian_t(const std::vector<double>& x_normalized, double norm,
                                              std::span<const double> g) {
    std::vector<double> out(g.begin(), g.end());
    if (norm > 1.0) {
        const double xg = vec::dot(x_normalized, g);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = (g[i] - x_normalized[i] * xg) / norm;
    }
    return out;
}

double score_transd(const ModelSpec&, const EmbeddingStore& store, const Triple& t,
                    SparseGrad* grad, double scale) {
    const auto h = store.entity_vec(t.head);
    const auto hp = store.entity_proj(t.head);
    const auto tl = store.entity_vec(t.tail);
    const auto tp = store.entity_proj(t.tail);
    const auto r = store.relation_vec(t.relation);
    const auto rp = store.relation_proj(t.relation);
    const std::size_t dR = r.size();

    const double ph = vec::dot(hp, h);
    const double pt = vec::dot(tp, tl);

    std::vector<double> h_hat(dR), t_hat(dR);
    pad_into(h, h_hat);
    vec::axpy(ph, rp, h_hat);
    pad_into(tl, t_hat);
    vec::axpy(pt, rp, t_hat);

    const double hn = cond_normalize(h_hat);
    const double tn = cond_normalize(t_hat);

    std::vector<double> u(dR);
    for (std::size_t i = 0; i < dR; ++i) u[i] = h_hat[i] + r[i] - t_hat[i];
    const double f = -vec::dot(u, u);

    if (grad) {
        std::vector<double> gh_hat(dR), gt_hat(dR);
        for (std::size_t i = 0; i < dR; ++i) {
            gh_hat[i] = -2.0 * u[i];
            gt_hat[i] = 2.0 * u[i];
        }
        const std::vector<double> vh = cond_normalize_jacobian_t(h_hat, hn, gh_hat);
        const std::vector<double> vt = cond_normalize_jacobian_t(t_hat, tn, gt_hat);
        const double rp_vh = vec::dot(rp, vh);
        const double rp_vt = vec::dot(rp, vt);

        std::vector<double> gh(h.size()), gt(h.size());
        pad_into(vh, gh);  // adjoint of pad: truncate back to entity space
        vec::axpy(rp_vh, hp, gh);
        pad_into(vt, gt);
        vec::axpy(rp_vt, tp, gt);

        std::vector<double> ghp(h.size()), gtp(h.size());
        for (std::size_t i = 0; i < h.size(); ++i) {
            ghp[i] = rp_vh * h[i];
            gtp[i] = rp_vt * tl[i];
        }
        std::vector<double> gr(dR), grp(dR);
        for (std::size_t i = 0; i < dR; ++i) {
            gr[i] = -2.0 * u[i];
            grp[i] = ph * vh[i] + pt * vt[i];
        }
        grad->add({ParamField::EntityVec, t.head}, gh, scale);
        grad->add({ParamField::EntityProj, t.head}, ghp, scale);
        grad->add({ParamField::EntityVec, t.tail}, gt, scale);
        grad->add({ParamField::EntityProj, t.tail}, gtp, scale);
        grad->add({ParamField::RelationVec, t.relation}, gr, scale);
        grad->add({ParamField::RelationProj, t.relation}, grp, scale);
    }
    return f;
}

double score_distmult(const ModelSpec&, const EmbeddingStore& store, const Triple& t,
                      SparseGrad* grad, double scale) {
    const auto h = store.entity_vec(t.head);
    const auto r = store.relation_vec(t.relation);
    const auto tl = store.entity_vec(t.tail);
    const std::size_t d = h.size();

    // multiply the entity factors first so swapping head and tail is exactly
    // commutative
    double f = 0;
    for (std::size_t i = 0; i < d; ++i) f += r[i] * (h[i] * tl[i]);

    if (grad) {
        std::vector<double> gh(d), gr(d), gt(d);
        for (std::size_t i = 0; i < d; ++i) {
            gh[i] = r[i] * tl[i];
            gr[i] = h[i] * tl[i];
            gt[i] = r[i] * h[i];
        }
        grad->add({ParamField::EntityVec, t.head}, gh, scale);
        grad->add({ParamField::RelationVec, t.relation}, gr, scale);
        grad->add({ParamField::EntityVec, t.tail}, gt, scale);
    }
    return f;
}

double score_rescal(const ModelSpec&, const EmbeddingStore& store, const Triple& t,
                    SparseGrad* grad, double scale) {
    const auto h = store.entity_vec(t.head);
    const auto m = store.relation_vec(t.relation);  // row-major d x d
    const auto tl = store.entity_vec(t.tail);
    const std::size_t d = h.size();

    double f = 0;
    for (std::size_t i = 0; i < d; ++i) {
        double row = 0;
        for (std::size_t j = 0; j < d; ++j) row += m[i * d + j] * tl[j];
        f += h[i] * row;
    }

    if (grad) {
        std::vector<double> gh(d, 0.0), gt(d, 0.0), gm(d * d);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                gh[i] += m[i * d + j] * tl[j];
                gt[j] += m[i * d + j] * h[i];
                gm[i * d + j] = h[i] * tl[j];
            }
        }
        grad->add({ParamField::EntityVec, t.head}, gh, scale);
        grad->add({ParamField::EntityVec, t.tail}, gt, scale);
        grad->add({ParamField::RelationVec, t.relation}, gm, scale);
    }
    return f;
}

double score_analogy(const ModelSpec&, const EmbeddingStore& store, const Triple& t,
                     SparseGrad* grad, double scale) {
    const auto h = store.entity_vec(t.head);
    const auto p = store.relation_vec(t.relation);
    const auto tl = store.entity_vec(t.tail);
    const std::size_t d = h.size();
    const std::size_t pairs = d / 2;

    double f = 0;
    std::vector<double> gh, gr, gt;
    if (grad) {
        gh.assign(d, 0.0);
        gr.assign(d, 0.0);
        gt.assign(d, 0.0);
    }
    for (std::size_t b = 0; b < pairs; ++b) {
        const std::size_t i = 2 * b;
        const double a = p[i], bb = p[i + 1];
        const double h0 = h[i], h1 = h[i + 1], t0 = tl[i], t1 = tl[i + 1];
        f += a * (h0 * t0 + h1 * t1) + bb * (h1 * t0 - h0 * t1);
        if (grad) {
            gr[i] = h0 * t0 + h1 * t1;
            gr[i + 1] = h1 * t0 - h0 * t1;
            gh[i] = a * t0 - bb * t1;
            gh[i + 1] = a * t1 + bb * t0;
            gt[i] = a * h0 + bb * h1;
            gt[i + 1] = a * h1 - bb * h0;
        }
    }
    if (d % 2 == 1) {
        const std::size_t i = d - 1;
        f += p[i] * h[i] * tl[i];
        if (grad) {
            gr[i] = h[i] * tl[i];
            gh[i] = p[i] * tl[i];
            gt[i] = p[i] * h[i];
        }
    }
    if (grad) {
        grad->add({ParamField::EntityVec, t.head}, gh, scale);
        grad->add({ParamField::RelationVec, t.relation}, gr, scale);
        grad->add({ParamField::EntityVec, t.tail}, gt, scale);
    }
    return f;
}

}  // namespace

double score_accumulate(const ModelSpec& spec, const EmbeddingStore& store, const Triple& t,
                        SparseGrad* grad, double scale) {
    switch (spec.kind) {
        case ModelKind::TransE: return score_transe(spec, store, t, grad, scale);
        case ModelKind::TransH: return score_transh(spec, store, t, grad, scale);
        case ModelKind::TransD: return score_transd(spec, store, t, grad, scale);
        case ModelKind::DistMult: return score_distmult(spec, store, t, grad, scale);
        case ModelKind::Rescal: return score_rescal(spec, store, t, grad, scale);
        case ModelKind::Analogy: return score_analogy(spec, store, t, grad, scale);
    }
    throw ContractViolation("score: unknown model kind");
}

}  // namespace detail

double score(const ModelSpec& spec, const EmbeddingStore& store, const Triple& t) {
    double f = detail::score_uncounted(spec, store, t);
    instrument::count_score_evaluations(1);
    return f;
}

std::vector<ParamKey> participating_keys(const ModelSpec&, const EmbeddingStore& store,
                                         const Triple& t) {
    std::vector<ParamKey> keys = store.entity_keys(t.head);
    if (t.tail != t.head) {
        auto tail_keys = store.entity_keys(t.tail);
        keys.insert(keys.end(), tail_keys.begin(), tail_keys.end());
    }
    auto rel_keys = store.relation_keys(t.relation);
    keys.insert(keys.end(), rel_keys.begin(), rel_keys.end());
    return keys;
}

namespace {

std::vector<ParamKey> pair_keys(const ModelSpec& spec, const EmbeddingStore& store,
                                const Triple& pos, const Triple& neg) {
    std::vector<ParamKey> keys = participating_keys(spec, store, pos);
    for (const ParamKey& k : participating_keys(spec, store, neg)) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
    return keys;
}

double l2_penalty(const ModelSpec& spec, const EmbeddingStore& store,
                  const std::vector<ParamKey>& keys, SparseGrad* grad) {
    if (spec.l2_penalty_weight == 0) return 0;
    double penalty = 0;
    for (const ParamKey& key : keys) {
        const auto block = store.block(key);
        penalty += vec::dot(block, block);
        if (grad) grad->add(key, block, 2.0 * spec.l2_penalty_weight);
    }
    return spec.l2_penalty_weight * penalty;
}

// TransH soft constraint C[(w.r)^2/||r||^2 - eps^2]_+ for one relation.
double transh_constraint(const ModelSpec& spec, const EmbeddingStore& store, RelationId rel,
                         SparseGrad* grad) {
    if (spec.kind != ModelKind::TransH || spec.transh_constraint_weight == 0) return 0;
    const auto r = store.relation_vec(rel);
    const auto w = store.relation_normal(rel);
    const double rr = vec::dot(r, r);
    if (rr == 0) return 0;
    const double wr = vec::dot(w, r);
    const double value = wr * wr / rr - spec.transh_constraint_eps * spec.transh_constraint_eps;
    if (value <= 0) return 0;
    const double c = spec.transh_constraint_weight;
    if (grad) {
        std::vector<double> gw(w.size()), gr(r.size());
        for (std::size_t i = 0; i < w.size(); ++i) {
            gw[i] = c * 2.0 * wr * r[i] / rr;
            gr[i] = c * 2.0 * wr / rr * (w[i] - wr * r[i] / rr);
        }
        grad->add({ParamField::RelationNormal, rel}, gw);
        grad->add({ParamField::RelationVec, rel}, gr);
    }
    return c * value;
}

LossGrad pairwise_impl(const ModelSpec& spec, const EmbeddingStore& store, const Triple& pos,
                       const Triple& neg, bool want_grad, bool enforce_shared_relation,
                       bool include_penalty) {
    if (enforce_shared_relation && pos.relation != neg.relation)
        throw ContractViolation("loss_pairwise: positive and negative triple must share the relation");

    LossGrad out;
    SparseGrad* g = want_grad ? &out.grad : nullptr;

    const double f_pos = detail::score_uncounted(spec, store, pos);
    const double f_neg = detail::score_uncounted(spec, store, neg);
    instrument::count_score_evaluations(2);

    const double margin_term = spec.margin - f_pos + f_neg;
    if (margin_term > 0) {
        out.loss += margin_term;
        if (g) {
            detail::score_accumulate(spec, store, pos, g, -1.0);
            detail::score_accumulate(spec, store, neg, g, +1.0);
        }
    }
    out.loss += transh_constraint(spec, store, pos.relation, g);
    if (neg.relation != pos.relation) out.loss += transh_constraint(spec, store, neg.relation, g);
    if (include_penalty) out.loss += l2_penalty(spec, store, pair_keys(spec, store, pos, neg), g);
    return out;
}

LossGrad logistic_impl(const ModelSpec& spec, const EmbeddingStore& store, const Triple& t,
                       int label, bool want_grad, bool include_penalty) {
    if (label != 1 && label != -1)
        throw ContractViolation("loss_logistic: label must be +1 or -1");

    LossGrad out;
    SparseGrad* g = want_grad ? &out.grad : nullptr;

    const double y = label;
    const double f = want_grad ? detail::score_accumulate(spec, store, t, g, 1.0)
                               : detail::score_uncounted(spec, store, t);
    instrument::count_score_evaluations(1);
    out.loss = detail::softplus(-y * f);

    if (g) {
        // d softplus(-y f)/df = -y * sigmoid(-y f); the blocks currently hold
        // df/dtheta, so rescale them in place.
        const double df = -y * detail::sigmoid(-y * f);
        SparseGrad scaled;
        for (const auto& [key, values] : g->blocks()) scaled.add(key, values, df);
        out.grad = std::move(scaled);
    }
    if (include_penalty)
        out.loss +=
            l2_penalty(spec, store, participating_keys(spec, store, t), g ? &out.grad : nullptr);
    return out;
}

}  // namespace

double loss_pairwise(const ModelSpec& spec, const EmbeddingStore& store, const Triple& pos,
                     const Triple& neg) {
    return pairwise_impl(spec, store, pos, neg, false, true, true).loss;
}

double loss_logistic(const ModelSpec& spec, const EmbeddingStore& store, const Triple& t,
                     int label) {
    return logistic_impl(spec, store, t, label, false, true).loss;
}

LossGrad loss_grad_pairwise(const ModelSpec& spec, const EmbeddingStore& store, const Triple& pos,
                            const Triple& neg) {
    return pairwise_impl(spec, store, pos, neg, true, true, true);
}

LossGrad loss_grad_logistic(const ModelSpec& spec, const EmbeddingStore& store, const Triple& t,
                            int label) {
    return logistic_impl(spec, store, t, label, true, true);
}

LossGrad detail::loss_grad_pair_mixed(const ModelSpec& spec, const EmbeddingStore& store,
                                      const Triple& pos, const Triple& neg) {
    return pairwise_impl(spec, store, pos, neg, true, false, true);
}

LossGrad detail::pair_term(const ModelSpec& spec, const EmbeddingStore& store, const Triple& pos,
                           const Triple& neg, bool enforce_shared_relation) {
    return pairwise_impl(spec, store, pos, neg, true, enforce_shared_relation, false);
}

LossGrad detail::logistic_term(const ModelSpec& spec, const EmbeddingStore& store,
                               const Triple& t, int label) {
    return logistic_impl(spec, store, t, label, true, false);
}

double detail::batch_l2_penalty(const ModelSpec& spec, const EmbeddingStore& store,
                                const std::vector<ParamKey>& touched, SparseGrad* grad) {
    return l2_penalty(spec, store, touched, grad);
}

}  // namespace dynakge
