#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bf/report.hpp"
#include "bf/sim.hpp"

namespace bf {

enum class ExpertAllocation { random, cost_greedy, match_greedy };

ExpertAllocation expert_allocation_from_string(const std::string& s);
const char* expert_allocation_to_string(ExpertAllocation a);

// Question selection is RAND throughout; expert allocation varies.
struct StrategySpec {
    ExpertAllocation expert_allocation = ExpertAllocation::random;
    std::uint64_t seed = 1;
};

// Uniform sample without replacement; batch_size may not exceed the pool.
std::vector<int> select_questions_rand(const std::vector<int>& pool, std::size_t batch_size,
                                       Rng& rng);

// Each allocator considers only cohort members priced within budget_left and
// throws a budget error when none qualify.
std::size_t allocate_random(const Cohort& cohort, Money budget_left, Rng& rng);
std::size_t allocate_cost_greedy(const Dataset& dataset, const Cohort& cohort, Money budget_left);
std::size_t allocate_match_greedy(const Dataset& dataset, int question, const Cohort& cohort,
                                  Money budget_left);

struct BaselineConfig {
    int batch_size = 10;  // questions per iteration, mirrors the agent count
    int cohort_size = 5;
    std::vector<Money> ladder = {Money::from_cents(50), Money::from_cents(40),
                                 Money::from_cents(30), Money::from_cents(20),
                                 Money::from_cents(10)};
};

// select -> allocate -> annotate until the budget or pool runs out, under
// the same cohort protocol and trace shape as the learned policy.
EpisodeReport run_baseline(const Dataset& dataset, const StrategySpec& spec,
                           const OracleConfig& oracle, Money budget,
                           const BaselineConfig& config);

}  // namespace bf
