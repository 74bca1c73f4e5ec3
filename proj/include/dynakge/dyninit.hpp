#pragma once
// Initialization of newly added entities and relations.
//
// New elements are processed in extract-max order of a priority queue keyed
// by |informative| / (|uninformative| + eps). Each dequeued element is
// pre-initialized (ran / ave / pos closed forms / negative-evidence variants)
// and then pre-trained by gradient descent on its own parameter blocks while
// every other block stays frozen. Triples that stop being uninformative after
// a dequeue are released into the informative sets of the remaining queue
// members.

#include <map>

#include "dynakge/sampling.hpp"
#include "dynakge/scoring.hpp"

namespace dynakge {

enum class PreInitMode { Ran, Ave, Pos, Neg, Neg2 };

std::string to_string(PreInitMode mode);
PreInitMode preinit_mode_from_string(const std::string& name);

struct InitConfig {
    PreInitMode pre_init = PreInitMode::Ave;
    int pre_negs = 0;        // negatives per positive for neg/neg2 pre-init
    int jump_lim = 10;       // max epochs of the iterative neg2 approach
    double jump_size = 0.5;  // step size of the iterative approach
    int init_negs = 1;       // negatives per positive in pre-training
    int init_times = 50;     // max pre-training epochs
    double init_lr = 0.001;  // pre-training learning rate
    // Pre-training steps use the model class's optimizer; init_lr values are
    // calibrated against it (plain SGD at 0.001 for translational models,
    // Adagrad at 0.1 for semantic matching ones).
    bool adagrad = false;
    double priority_eps = 1.0;
    int max_rejection_attempts = 100;

    static InitConfig defaults_for(const ModelSpec& spec);

    void check() const;
};

struct ElementRef {
    bool is_relation = false;
    std::uint32_t id = 0;

    friend bool operator==(const ElementRef& a, const ElementRef& b) {
        return a.is_relation == b.is_relation && a.id == b.id;
    }
};

struct InitOrderEntry {
    ElementRef element;
    // Informative evidence captured at dequeue time. Relations use only
    // `incoming` (their full informative set); entities split by direction.
    std::vector<Triple> incoming;
    std::vector<Triple> outgoing;
    double priority = 0;

    bool has_evidence() const { return !incoming.empty() || !outgoing.empty(); }
};

// Replays the initialization-order queue and returns elements in dequeue
// order together with their dequeue-time evidence. Ties break in favor of
// relations, then ascending id.
std::vector<InitOrderEntry> init_order(const TripleSet& train_next,
                                       const std::vector<EntityId>& added_vertices,
                                       const std::vector<RelationId>& added_relations,
                                       double priority_eps = 1.0);

// Parameter blocks of a single element, keyed by field.
using ParamBlocks = std::map<ParamField, std::vector<double>>;

// ran: fresh uniform draws with the init_parameters bounds.
// ave: per-block arithmetic mean over all existing records (hyperplane
// normals are re-normalized to unit length); falls back to ran on an empty
// store.
ParamBlocks preinit_ran(const ElementRef& element, const ModelSpec& spec,
                        const EmbeddingStore& store, Rng& rng);
ParamBlocks preinit_ave(const ElementRef& element, const ModelSpec& spec,
                        const EmbeddingStore& store, Rng& rng);

// TransE closed forms: the exact minimizers of the squared translation
// residuals over the informative triples.
std::vector<double> preinit_pos_relation_transe(const std::vector<Triple>& informative,
                                                const EmbeddingStore& store);
std::vector<double> preinit_pos_entity_transe(const std::vector<Triple>& incoming,
                                              const std::vector<Triple>& outgoing,
                                              const EmbeddingStore& store);

struct TransHEntityInit {
    std::vector<double> vec;
    bool ridged = false;  // least-squares system was singular; ridge applied
};

// TransH entity init: least-squares closest point to the lines through the
// optimal hyperplane projections along the hyperplane normals.
TransHEntityInit preinit_pos_entity_transh(const std::vector<Triple>& incoming,
                                           const std::vector<Triple>& outgoing,
                                           const EmbeddingStore& store, double ridge = 1e-9);

// Direct negative evidence (TransE): mean over best positions and negated
// worst positions from pre_negs sampled corruptions per informative triple.
std::vector<double> preinit_neg_direct(const ElementRef& element,
                                       const std::vector<Triple>& incoming,
                                       const std::vector<Triple>& outgoing,
                                       const ModelSpec& spec, const EmbeddingStore& store,
                                       const Snapshot& next, int pre_negs, Rng& rng,
                                       int max_attempts = 100);

struct Neg2Result {
    std::vector<double> vec;
    bool stable = false;
    int epochs = 0;
};

// Iterative negative evidence (TransE): starting from the pos closed form,
// jump towards the best position whenever the embedding is closer to a worst
// position than to its best one.
Neg2Result preinit_neg2_iterative(const ElementRef& element, const std::vector<Triple>& incoming,
                                  const std::vector<Triple>& outgoing, const ModelSpec& spec,
                                  const EmbeddingStore& store, const Snapshot& next,
                                  const InitConfig& config, Rng& rng);

struct PretrainResult {
    std::vector<double> loss_curve;
    int epochs_run = 0;
    bool reached_zero = false;
    double best_loss = 0;
    int lr_halvings = 0;
};

// Gradient descent on the element's own blocks only, with init_negs sampled
// negatives per positive averaged inside the loss. Stops early at zero loss,
// halves the rate after 5 epochs without a 1% improvement, and backtracks to
// the epoch with the lowest loss. All other parameter blocks stay untouched.
PretrainResult pretrain_new_element(const ElementRef& element, const InitOrderEntry& evidence,
                                    const ModelSpec& spec, EmbeddingStore& store,
                                    const Snapshot& next, const InitConfig& config, Rng& rng);

struct ElementInitRecord {
    ElementRef element;
    std::string mode_used;            // pre-init actually applied
    bool mode_fallback = false;       // requested mode degraded (e.g. pos -> ave)
    std::size_t incoming_count = 0;
    std::size_t outgoing_count = 0;
    double priority = 0;
    bool ridged = false;
    bool neg2_stable = true;
    PretrainResult pretrain;
};

struct InitReport {
    std::vector<ElementInitRecord> elements;
    instrument::CounterSet counters;  // "init" phase delta for this call
    std::vector<std::string> notes;
};

// Orders, pre-initializes, and pre-trains every added element. Never touches
// a pre-existing parameter block.
InitReport initialize_all(const ChangeSet& change, const Snapshot& next, const ModelSpec& spec,
                          EmbeddingStore& store, const InitConfig& config, Rng& rng);

}  // namespace dynakge
