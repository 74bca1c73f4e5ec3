#include "dynakge/online.hpp"

#include <algorithm>
#include <chrono>
#include <set>

namespace dynakge {

std::vector<EpochType> uniform_mix(int ge_num, int cs_num) {
    if (ge_num < 0 || cs_num < 0)
        throw ContractViolation("uniform_mix: epoch counts must be non-negative");
    const long long total = static_cast<long long>(ge_num) + cs_num;
    std::vector<EpochType> schedule;
    schedule.reserve(total);
    for (long long i = 0; i < total; ++i) {
        const long long before = i * cs_num / total;
        const long long after = (i + 1) * cs_num / total;
        schedule.push_back(after > before ? EpochType::ChangeSpecific : EpochType::General);
    }
    return schedule;
}

OnlineConfig OnlineConfig::defaults_for(const ModelSpec& spec) {
    OnlineConfig config;
    const TrainConfig offline = TrainConfig::defaults_for(spec);
    config.ge_lr = offline.learning_rate / 5.0;
    config.cs_lr = config.ge_lr / 2.0;
    config.optimizer = offline.optimizer;
    config.init = InitConfig::defaults_for(spec);
    return config;
}

void OnlineConfig::check() const {
    if (ge_num < 0 || cs_num < 0)
        throw ContractViolation("OnlineConfig: epoch counts must be non-negative");
    if (ge_lr < 0 || cs_lr < 0) throw ContractViolation("OnlineConfig: rates must be >= 0");
    if (num_batch < 1) throw ContractViolation("OnlineConfig: num_batch must be >= 1");
    if (valid_steps < 1) throw ContractViolation("OnlineConfig: valid_steps must be >= 1");
    if (early_stop_patience < 1)
        throw ContractViolation("OnlineConfig: early_stop_patience must be >= 1");
    init.check();
}

namespace {

bool touches_added(const Triple& t, const ChangeSet& change) {
    auto added_entity = [&](EntityId v) {
        return std::binary_search(change.added_vertices.begin(), change.added_vertices.end(), v);
    };
    return added_entity(t.head) || added_entity(t.tail) ||
           std::binary_search(change.added_relations.begin(), change.added_relations.end(),
                              t.relation);
}

}  // namespace

double run_epoch_change_specific(EmbeddingStore& store, const Snapshot& next,
                                 const ChangeSet& change, const ModelSpec& spec,
                                 const OnlineConfig& config, OptimizerState& state, Rng& rng) {
    // Pairs of (positive, negative): a corrected triple against each eligible
    // deletion, the added triple against a corrupted one.
    std::vector<std::pair<Triple, Triple>> batch;
    for (const Triple& deleted : eligible_deletions(change.deleted_train, change))
        batch.emplace_back(sample_corrected(deleted, next, rng), deleted);
    for (const Triple& added : change.added_train) {
        if (config.cs_restrict && touches_added(added, change)) continue;
        batch.emplace_back(added, sample_corrupted(added, next, rng,
                                                   config.max_rejection_attempts));
    }
    if (batch.empty()) return 0.0;

    double loss = 0;
    SparseGrad grad;
    std::set<ParamKey> touched;
    for (const auto& [pos, neg] : batch) {
        for (const ParamKey& key : participating_keys(spec, store, pos)) touched.insert(key);
        for (const ParamKey& key : participating_keys(spec, store, neg)) touched.insert(key);
        if (spec.loss == LossKind::PairwiseRanking) {
            // corrected/deleted pairs may cross relations via the sampling
            // fallback
            LossGrad lg = detail::pair_term(spec, store, pos, neg, false);
            loss += lg.loss;
            grad.merge(lg.grad);
        } else {
            LossGrad lg_pos = detail::logistic_term(spec, store, pos, +1);
            LossGrad lg_neg = detail::logistic_term(spec, store, neg, -1);
            loss += lg_pos.loss + lg_neg.loss;
            grad.merge(lg_pos.grad);
            grad.merge(lg_neg.grad);
        }
    }
    loss += detail::batch_l2_penalty(
        spec, store, std::vector<ParamKey>(touched.begin(), touched.end()), &grad);
    apply_gradients(store, grad, state);
    return loss;
}

std::pair<EmbeddingStore, UpdateReport> update_online(const EmbeddingStore& prev,
                                                      const Snapshot& next,
                                                      const ChangeSet& change,
                                                      const ModelSpec& spec,
                                                      const OnlineConfig& config) {
    spec.check();
    config.check();
    {
        ValidationReport vr = validate_snapshot(next);
        if (!vr.ok())
            throw ContractViolation("update_online: invalid snapshot: " + vr.violations.front());
    }

    const auto start = std::chrono::steady_clock::now();
    for (const char* phase : {"init", "ge", "cs", "validation"}) instrument::ensure_phase(phase);
    const instrument::CounterSet init_before = instrument::counters("init");
    const instrument::CounterSet ge_before = instrument::counters("ge");
    const instrument::CounterSet cs_before = instrument::counters("cs");
    const instrument::CounterSet valid_before = instrument::counters("validation");

    UpdateReport report;
    EmbeddingStore store = prev;

    // Parameters of deleted elements are dropped; they are absent from the
    // next snapshot and never used again.
    for (EntityId v : change.deleted_vertices)
        if (store.has_entity(v)) store.remove_entity(v);
    for (RelationId r : change.deleted_relations)
        if (store.has_relation(r)) store.remove_relation(r);

    {
        const auto init_start = std::chrono::steady_clock::now();
        Rng init_rng(derive_seed(config.seed, 2));
        report.init = initialize_all(change, next, spec, store, config.init, init_rng);
        report.init_phase.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - init_start).count();
    }
    if (!store.covers(next))
        throw ContractViolation("update_online: store does not cover the next snapshot");

    report.schedule = uniform_mix(config.ge_num, config.cs_num);

    // The general-epoch stream is seeded exactly like the offline epochs so
    // the all-general schedule replays the offline trajectory.
    Rng rng(derive_seed(config.seed, 1));

    TrainConfig epoch_config;
    epoch_config.num_batch = config.num_batch;
    epoch_config.max_rejection_attempts = config.max_rejection_attempts;
    epoch_config.threads = config.threads;
    epoch_config.validation_override = config.validation_override;

    OptimizerState state;
    state.kind = config.optimizer;
    state.lr = {config.ge_lr, config.decay_factor, config.decay_threshold, config.decay_patience,
                0};
    LrController cs_controller{config.cs_lr, config.decay_factor, config.decay_threshold,
                               config.decay_patience, 0};

    std::vector<double> ge_losses, cs_losses;
    std::optional<EmbeddingStore> best;
    double best_hits = -1;
    int stale_validations = 0;

    for (std::size_t index = 0; index < report.schedule.size(); ++index) {
        const int epoch = static_cast<int>(index) + 1;
        const EpochType type = report.schedule[index];
        const auto epoch_start = std::chrono::steady_clock::now();

        double loss = 0;
        if (type == EpochType::General) {
            instrument::PhaseScope phase("ge");
            loss = run_epoch_general(store, next, spec, epoch_config, state, rng);
            ge_losses.push_back(loss);
            const double rate_before = state.lr.rate;
            maybe_decay_lr(state, ge_losses);
            if (state.lr.rate != rate_before)
                report.decays.push_back({epoch, state.lr.rate, "ge"});
            report.ge_phase.wall_seconds +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start)
                    .count();
        } else {
            instrument::PhaseScope phase("cs");
            std::swap(state.lr, cs_controller);
            loss = run_epoch_change_specific(store, next, change, spec, config, state, rng);
            cs_losses.push_back(loss);
            const double rate_before = state.lr.rate;
            maybe_decay_lr(state, cs_losses);
            if (state.lr.rate != rate_before)
                report.decays.push_back({epoch, state.lr.rate, "cs"});
            std::swap(state.lr, cs_controller);
            report.cs_phase.wall_seconds +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start)
                    .count();
        }
        report.epoch_loss.push_back(loss);
        report.epochs_run = epoch;

        if (config.validate && epoch % config.valid_steps == 0) {
            const auto valid_start = std::chrono::steady_clock::now();
            std::optional<double> hits =
                detail::validation_hits10(spec, store, next, epoch_config, epoch);
            report.validation_phase.wall_seconds +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - valid_start)
                    .count();
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

    report.init_phase.counters = instrument::counters("init") - init_before;
    report.ge_phase.counters = instrument::counters("ge") - ge_before;
    report.cs_phase.counters = instrument::counters("cs") - cs_before;
    report.validation_phase.counters = instrument::counters("validation") - valid_before;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (best) return {std::move(*best), report};
    return {std::move(store), report};
}

}  // namespace dynakge
