#pragma once
// Phase-scoped operation counters. The runtime of the system is dominated by
// scoring-function evaluations and gradient steps, so those two are tallied
// per named phase ("ge", "cs", "init", "validation", ...) and reported next
// to every metric. Counting uses atomics; scoring in parallel workers is fine.

#include <cstdint>
#include <string>
#include <vector>

namespace dynakge::instrument {

struct CounterSet {
    std::uint64_t score_evaluations = 0;
    std::uint64_t gradient_steps = 0;

    CounterSet operator-(const CounterSet& o) const {
        return {score_evaluations - o.score_evaluations, gradient_steps - o.gradient_steps};
    }
};

// Switches the phase new counts are attributed to. Creates the phase if needed.
void set_phase(const std::string& name);

// Registers a phase without switching to it.
void ensure_phase(const std::string& name);

// Tallies for a named phase; throws LookupError for unknown phases.
CounterSet counters(const std::string& name);

// Sum over all phases.
CounterSet total();

std::vector<std::string> phase_names();

void reset();

// Called from the scoring/optimizer hot paths.
void count_score_evaluations(std::uint64_t n);
void count_gradient_steps(std::uint64_t n);

// RAII phase switch that restores the previous phase on scope exit.
class PhaseScope {
public:
    explicit PhaseScope(const std::string& name);
    ~PhaseScope();
    PhaseScope(const PhaseScope&) = delete;
    PhaseScope& operator=(const PhaseScope&) = delete;

private:
    std::string previous_;
};

}  // namespace dynakge::instrument
