#include "dynakge/training.hpp"

#include <chrono>
#include <cmath>
#include <set>

#include "dynakge/vecmath.hpp"

namespace dynakge {

std::string to_string(OptimizerKind kind) {
    return kind == OptimizerKind::Sgd ? "sgd" : "adagrad";
}

OptimizerKind optimizer_from_string(const std::string& name) {
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "adagrad") return OptimizerKind::Adagrad;
    throw ContractViolation("unknown optimizer '" + name + "'");
}

void apply_gradients(EmbeddingStore& store, const SparseGrad& grad, OptimizerState& state) {
    for (const auto& [key, g] : grad.blocks()) {
        std::span<double> theta = store.block(key);
        if (theta.size() != g.size())
            throw ContractViolation("apply_gradients: gradient block shape mismatch");
        bool moved = false;
        if (state.kind == OptimizerKind::Sgd) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double delta = state.lr.rate * g[i];
                theta[i] -= delta;
                moved |= delta != 0;
            }
        } else {
            auto it = state.adagrad_accum.find(key);
            if (it == state.adagrad_accum.end())
                it = state.adagrad_accum.emplace(key, std::vector<double>(g.size(), 0.0)).first;
            std::vector<double>& accum = it->second;
            for (std::size_t i = 0; i < g.size(); ++i) {
                accum[i] += g[i] * g[i];
                const double delta = state.lr.rate * g[i] / std::sqrt(accum[i] + state.adagrad_eps);
                theta[i] -= delta;
                moved |= delta != 0;
            }
        }
        // Hyperplane normals stay unit length; a no-op step must not perturb
        // them bitwise.
        if (moved && key.field == ParamField::RelationNormal) vec::normalize_unit(theta);
        instrument::count_gradient_steps(1);
    }
}

void maybe_decay_lr(OptimizerState& state, const std::vector<double>& loss_history) {
    if (loss_history.size() < 2) return;
    state.lr.observe(loss_history[loss_history.size() - 2], loss_history.back());
}

TrainConfig TrainConfig::defaults_for(const ModelSpec& spec) {
    TrainConfig config;
    if (is_translational(spec.kind)) {
        config.learning_rate = 0.001;
        config.optimizer = OptimizerKind::Sgd;
    } else {
        config.learning_rate = 0.1;
        config.optimizer = OptimizerKind::Adagrad;
    }
    return config;
}

void TrainConfig::check() const {
    if (num_epoch < 0) throw ContractViolation("TrainConfig: num_epoch must be >= 0");
    if (num_batch < 1) throw ContractViolation("TrainConfig: num_batch must be >= 1");
    if (valid_steps < 1) throw ContractViolation("TrainConfig: valid_steps must be >= 1");
    if (learning_rate < 0) throw ContractViolation("TrainConfig: learning_rate must be >= 0");
    if (decay_patience < 1 || early_stop_patience < 1)
        throw ContractViolation("TrainConfig: patience values must be >= 1");
}

double run_epoch_general(EmbeddingStore& store, const Snapshot& snapshot, const ModelSpec& spec,
                         const TrainConfig& config, OptimizerState& state, Rng& rng) {
    std::vector<Triple> shuffled = snapshot.train.triples();
    rng.shuffle(shuffled);

    const std::size_t n = shuffled.size();
    const std::size_t batches = static_cast<std::size_t>(config.num_batch);
    const std::size_t base = n / batches;

    double epoch_loss = 0;
    std::size_t offset = 0;
    for (std::size_t b = 0; b < batches; ++b) {
        // Remainder triples go to the final batch.
        const std::size_t size = (b + 1 == batches) ? n - offset : base;
        if (size == 0) continue;

        SparseGrad batch_grad;
        std::set<ParamKey> touched;
        for (std::size_t i = offset; i < offset + size; ++i) {
            const Triple& pos = shuffled[i];
            const Triple neg =
                sample_corrupted(pos, snapshot, rng, config.max_rejection_attempts);
            for (const ParamKey& key : participating_keys(spec, store, pos)) touched.insert(key);
            for (const ParamKey& key : participating_keys(spec, store, neg)) touched.insert(key);
            if (spec.loss == LossKind::PairwiseRanking) {
                LossGrad lg = detail::pair_term(spec, store, pos, neg, true);
                epoch_loss += lg.loss;
                batch_grad.merge(lg.grad);
            } else {
                LossGrad lg_pos = detail::logistic_term(spec, store, pos, +1);
                LossGrad lg_neg = detail::logistic_term(spec, store, neg, -1);
                epoch_loss += lg_pos.loss + lg_neg.loss;
                batch_grad.merge(lg_pos.grad);
                batch_grad.merge(lg_neg.grad);
            }
        }
        // L2 penalty once per batch for every block the batch touched.
        epoch_loss += detail::batch_l2_penalty(
            spec, store, std::vector<ParamKey>(touched.begin(), touched.end()), &batch_grad);
        apply_gradients(store, batch_grad, state);
        offset += size;
    }
    return epoch_loss;
}

namespace detail {

std::optional<double> validation_hits10(const ModelSpec& spec, const EmbeddingStore& store,
                                        const Snapshot& snapshot, const TrainConfig& config,
                                        int epoch) {
    if (config.validation_override) return config.validation_override(store, epoch);
    if (snapshot.valid.empty()) return std::nullopt;
    instrument::PhaseScope phase("validation");
    return link_prediction(spec, store, snapshot, snapshot.valid, {10}, config.threads)
        .hits.at(10);
}

}  // namespace detail

std::pair<EmbeddingStore, TrainReport> train_offline(const Snapshot& snapshot,
                                                     const ModelSpec& spec,
                                                     const TrainConfig& config) {
    spec.check();
    config.check();
    {
        ValidationReport vr = validate_snapshot(snapshot);
        if (!vr.ok())
            throw ContractViolation("train_offline: invalid snapshot: " + vr.violations.front());
    }

    const auto start = std::chrono::steady_clock::now();
    instrument::ensure_phase("ge");
    instrument::ensure_phase("validation");
    const instrument::CounterSet ge_before = instrument::counters("ge");
    const instrument::CounterSet valid_before = instrument::counters("validation");

    EmbeddingStore store =
        init_parameters(spec, snapshot.vertices, snapshot.relations, derive_seed(config.seed, 0));
    Rng rng(derive_seed(config.seed, 1));

    OptimizerState state;
    state.kind = config.optimizer;
    state.lr = {config.learning_rate, config.decay_factor, config.decay_threshold,
                config.decay_patience, 0};

    TrainReport report;
    std::optional<EmbeddingStore> best;
    double best_hits = -1;
    int stale_validations = 0;

    for (int epoch = 1; epoch <= config.num_epoch; ++epoch) {
        {
            instrument::PhaseScope phase("ge");
            report.epoch_loss.push_back(
                run_epoch_general(store, snapshot, spec, config, state, rng));
        }
        report.epochs_run = epoch;
        const double rate_before = state.lr.rate;
        maybe_decay_lr(state, report.epoch_loss);
        if (state.lr.rate != rate_before) report.decays.push_back({epoch, state.lr.rate, "ge"});

        if (config.validate && epoch % config.valid_steps == 0) {
            std::optional<double> hits =
                detail::validation_hits10(spec, store, snapshot, config, epoch);
            if (hits) {
                const bool improved = *hits > best_hits;
                report.validations.push_back({epoch, *hits, improved});
                if (improved) {
                    best_hits = *hits;
                    best = store;
                    report.best_epoch = epoch;
                    report.best_hits10 = *hits;
                    stale_validations = 0;
                } else if (++stale_validations >= config.early_stop_patience) {
                    report.early_stopped = true;
                    break;
                }
            }
        }
    }

    report.train_counters = instrument::counters("ge") - ge_before;
    report.validation_counters = instrument::counters("validation") - valid_before;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (best) return {std::move(*best), report};
    return {std::move(store), report};
}

}  // namespace dynakge
