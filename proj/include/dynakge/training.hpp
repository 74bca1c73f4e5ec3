#pragma once
// Offline training loop: seeded shuffling into batches, one corrupted triple
// per positive, SGD/Adagrad updates, learning-rate decay on stalled loss,
// periodic filtered-Hits@10 validation with early stopping, and backtracking
// to the best validated embedding.

#include <functional>
#include <optional>
#include <unordered_map>

#include "dynakge/eval.hpp"
#include "dynakge/sampling.hpp"
#include "dynakge/scoring.hpp"

namespace dynakge {

enum class OptimizerKind { Sgd, Adagrad };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

// Multiplies the rate by `factor` when no epoch in the last `patience` epochs
// improved on its predecessor by at least `threshold` (relative). The stall
// window resets after a decay.
struct LrController {
    double rate = 0.001;
    double factor = 0.95;
    double threshold = 0.005;
    int patience = 20;
    int stall = 0;

    // Observe the latest epoch loss against its predecessor; returns true
    // when a decay fired.
    bool observe(double previous_loss, double current_loss) {
        const bool improved = current_loss <= (1.0 - threshold) * previous_loss;
        if (improved) {
            stall = 0;
            return false;
        }
        if (++stall >= patience) {
            rate *= factor;
            stall = 0;
            return true;
        }
        return false;
    }
};

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::Sgd;
    LrController lr;
    double adagrad_eps = 1e-8;
    std::unordered_map<ParamKey, std::vector<double>, ParamKeyHash> adagrad_accum;
};

// One optimizer step per gradient block. SGD: theta -= lr * g. Adagrad:
// G += g*g first, then theta -= lr * g / sqrt(G + eps). TransH hyperplane
// normals are re-normalized to unit length after their step. Each applied
// block counts one gradient step.
void apply_gradients(EmbeddingStore& store, const SparseGrad& grad, OptimizerState& state);

// Decay check against the two most recent entries of the loss history.
void maybe_decay_lr(OptimizerState& state, const std::vector<double>& loss_history);

struct TrainConfig {
    int num_epoch = 1000;
    int num_batch = 100;
    int valid_steps = 10;
    bool validate = true;
    double learning_rate = 0.001;
    OptimizerKind optimizer = OptimizerKind::Sgd;
    double decay_factor = 0.95;
    double decay_threshold = 0.005;
    int decay_patience = 20;
    int early_stop_patience = 10;
    int max_rejection_attempts = 100;
    int threads = 1;
    std::uint64_t seed = 0;

    // Test hook: replaces the filtered-Hits@10 validation when set.
    std::function<double(const EmbeddingStore&, int)> validation_override;

    // Plain SGD at 0.001 for translational models, Adagrad at 0.1 for
    // semantic matching models.
    static TrainConfig defaults_for(const ModelSpec& spec);

    void check() const;
};

struct ValidationPoint {
    int epoch = 0;
    double hits10 = 0;
    bool improved = false;
};

struct DecayEvent {
    int epoch = 0;
    double new_rate = 0;
    std::string epoch_type;  // "ge" or "cs"
};

struct TrainReport {
    std::vector<double> epoch_loss;
    std::vector<ValidationPoint> validations;
    std::vector<DecayEvent> decays;
    int epochs_run = 0;
    bool early_stopped = false;
    int best_epoch = 0;          // epoch of the returned checkpoint; 0 = initial state
    double best_hits10 = 0;
    instrument::CounterSet train_counters;
    instrument::CounterSet validation_counters;
    double wall_seconds = 0;
};

// One general epoch: shuffles the training set, splits it into num_batch
// contiguous slices (remainder triples in the final batch), pairs every
// positive with one corrupted triple, and applies one accumulated gradient
// per batch. Returns the summed loss.
double run_epoch_general(EmbeddingStore& store, const Snapshot& snapshot, const ModelSpec& spec,
                         const TrainConfig& config, OptimizerState& state, Rng& rng);

std::pair<EmbeddingStore, TrainReport> train_offline(const Snapshot& snapshot,
                                                     const ModelSpec& spec,
                                                     const TrainConfig& config);

namespace detail {

// Filtered Hits@10 on the validation set; empty validation sets yield no
// signal and are reported as such.
std::optional<double> validation_hits10(const ModelSpec& spec, const EmbeddingStore& store,
                                        const Snapshot& snapshot, const TrainConfig& config,
                                        int epoch);

}  // namespace detail

}  // namespace dynakge
