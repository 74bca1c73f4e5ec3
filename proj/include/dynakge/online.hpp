#pragma once
// Online update of an existing embedding after a snapshot change: cleanup of
// deleted elements, initialization of added ones, and a deterministic mix of
// general and change-specific epochs with validation, early stopping, and
// backtracking. With an empty change set, zero change-specific epochs, and
// the general rate equal to the offline rate, the procedure reduces exactly
// to the offline method.

#include "dynakge/dyninit.hpp"
#include "dynakge/training.hpp"

namespace dynakge {

enum class EpochType { General, ChangeSpecific };

// Deterministic even interleaving: slot i (0-based) of ge_num + cs_num epochs
// is change-specific iff floor((i+1)*cs/total) > floor(i*cs/total).
std::vector<EpochType> uniform_mix(int ge_num, int cs_num);

struct OnlineConfig {
    int ge_num = 180;
    int cs_num = 20;
    double ge_lr = 0.0002;  // offline rate / 5
    double cs_lr = 0.0001;  // half the general rate
    bool cs_restrict = false;
    int num_batch = 100;
    int valid_steps = 10;
    bool validate = true;
    int early_stop_patience = 10;
    OptimizerKind optimizer = OptimizerKind::Sgd;
    double decay_factor = 0.95;
    double decay_threshold = 0.005;
    int decay_patience = 20;
    int max_rejection_attempts = 100;
    int threads = 1;
    std::uint64_t seed = 0;
    InitConfig init;

    // Test hook, as in TrainConfig.
    std::function<double(const EmbeddingStore&, int)> validation_override;

    // geLR = offline rate / 5 (0.0002 for the TransE class, 0.02 for the
    // DistMult class), csLR = geLR / 2, optimizer as offline.
    static OnlineConfig defaults_for(const ModelSpec& spec);

    void check() const;
};

// One change-specific epoch: pairs (sampled corrected, deleted) for every
// eligible deletion and (added, sampled corrupted) for every added training
// triple, then applies one accumulated gradient at the change-specific rate.
// With cs_restrict, additions touching added entities or relations are
// skipped. Performs exactly 2(|deletions used| + |additions used|) score
// evaluations.
double run_epoch_change_specific(EmbeddingStore& store, const Snapshot& next,
                                 const ChangeSet& change, const ModelSpec& spec,
                                 const OnlineConfig& config, OptimizerState& state, Rng& rng);

struct PhaseBreakdown {
    instrument::CounterSet counters;
    double wall_seconds = 0;
};

struct UpdateReport {
    std::vector<EpochType> schedule;
    std::vector<double> epoch_loss;  // aligned with the schedule prefix that ran
    std::vector<ValidationPoint> validations;
    std::vector<DecayEvent> decays;
    InitReport init;
    int epochs_run = 0;
    bool early_stopped = false;
    int best_epoch = 0;
    double best_hits10 = 0;
    PhaseBreakdown init_phase, ge_phase, cs_phase, validation_phase;
    double wall_seconds = 0;
};

// Complete update procedure. Drops parameters of deleted elements, runs
// initialize_all for added ones, then the mixed epoch schedule; returns the
// best-validation store (or the final one when validation never ran).
std::pair<EmbeddingStore, UpdateReport> update_online(const EmbeddingStore& prev,
                                                      const Snapshot& next,
                                                      const ChangeSet& change,
                                                      const ModelSpec& spec,
                                                      const OnlineConfig& config);

}  // namespace dynakge
