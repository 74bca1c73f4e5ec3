#include "dynakge/instrument.hpp"

#include <atomic>
#include <map>
#include <memory>
#include <mutex>

#include "dynakge/types.hpp"

namespace dynakge::instrument {

namespace {

struct AtomicCounters {
    std::atomic<std::uint64_t> score_evaluations{0};
    std::atomic<std::uint64_t> gradient_steps{0};
};

struct Registry {
    std::mutex mutex;
    std::map<std::string, std::unique_ptr<AtomicCounters>> phases;
    std::string current_name = "default";
    std::atomic<AtomicCounters*> current{nullptr};

    Registry() { current = get("default"); }

    AtomicCounters* get(const std::string& name) {
        std::lock_guard<std::mutex> lock(mutex);
        auto it = phases.find(name);
        if (it == phases.end()) it = phases.emplace(name, std::make_unique<AtomicCounters>()).first;
        return it->second.get();
    }
};

Registry& registry() {
    static Registry r;
    return r;
}

}  // namespace

void set_phase(const std::string& name) {
    Registry& r = registry();
    AtomicCounters* c = r.get(name);
    std::lock_guard<std::mutex> lock(r.mutex);
    r.current_name = name;
    r.current.store(c, std::memory_order_relaxed);
}

void ensure_phase(const std::string& name) { registry().get(name); }

CounterSet counters(const std::string& name) {
    Registry& r = registry();
    std::lock_guard<std::mutex> lock(r.mutex);
    auto it = r.phases.find(name);
    if (it == r.phases.end()) throw LookupError("instrument: unknown phase '" + name + "'");
    return {it->second->score_evaluations.load(), it->second->gradient_steps.load()};
}

CounterSet total() {
    Registry& r = registry();
    std::lock_guard<std::mutex> lock(r.mutex);
    CounterSet sum;
    for (const auto& [name, c] : r.phases) {
        sum.score_evaluations += c->score_evaluations.load();
        sum.gradient_steps += c->gradient_steps.load();
    }
    return sum;
}

std::vector<std::string> phase_names() {
    Registry& r = registry();
    std::lock_guard<std::mutex> lock(r.mutex);
    std::vector<std::string> names;
    names.reserve(r.phases.size());
    for (const auto& [name, c] : r.phases) names.push_back(name);
    return names;
}

void reset() {
    Registry& r = registry();
    std::lock_guard<std::mutex> lock(r.mutex);
    for (auto& [name, c] : r.phases) {
        c->score_evaluations.store(0);
        c->gradient_steps.store(0);
    }
}

void count_score_evaluations(std::uint64_t n) {
    registry().current.load(std::memory_order_relaxed)
        ->score_evaluations.fetch_add(n, std::memory_order_relaxed);
}

void count_gradient_steps(std::uint64_t n) {
    registry().current.load(std::memory_order_relaxed)
        ->gradient_steps.fetch_add(n, std::memory_order_relaxed);
}

PhaseScope::PhaseScope(const std::string& name) {
    Registry& r = registry();
    {
        std::lock_guard<std::mutex> lock(r.mutex);
        previous_ = r.current_name;
    }
    set_phase(name);
}

PhaseScope::~PhaseScope() { set_phase(previous_); }

}  // namespace dynakge::instrument
