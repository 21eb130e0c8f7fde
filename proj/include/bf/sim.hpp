#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bf/domain.hpp"
#include "bf/rng.hpp"

namespace bf {

struct OracleConfig {
    enum class Mode { coverage, noisy_coverage };
    double sigma = 1.0;        // Gaussian kernel bandwidth, must be > 0
    Mode mode = Mode::coverage;
    double noise_sigma = 0.0;  // applied to score deltas in noisy mode
};

// 0.5 x median pairwise distance over the dev split; 1.0 when degenerate.
double default_oracle_sigma(const Dataset& dataset);

// Stateful annotation environment: capability-gated labeling over an exact
// integer-cent ledger.
struct World {
    const Dataset* dataset = nullptr;
    Money budget_initial;
    Money budget;                       // B_t
    AllocationSet labeled;
    std::vector<int> gamma;             // per-expert selection counters
    std::vector<std::uint8_t> question_labeled;
    Rng rng;

    World(const Dataset& ds, Money initial_budget, std::uint64_t seed);

    bool is_labeled(int question) const { return question_labeled[question] != 0; }
    std::vector<int> unlabeled_train() const;

    // median pairwise distance of the train split; scales diversity features
    double diversity_scale = 1.0;
};

struct AnnotateResult {
    bool valid = false;
    Money cost_charged;
};

// Charges the price unconditionally, flags validity from the capability
// matrix, advances the ledger and counters. Throws (leaving the world
// untouched) on insufficient budget or an already-labeled question.
AnnotateResult annotate(World& world, int question, int expert, Money price, int step);

// Mean over the split of the best Gaussian-kernel match against the valid
// labeled questions; 0 with no valid labels.
double oracle_score(const World& world, const OracleConfig& oracle, Split split);

// after - before, plus zero-mean noise in noisy mode (drawn from world.rng).
double delta_f(World& world, const OracleConfig& oracle, double before, double after);

// Incremental view of oracle_score for episode loops; exact match with the
// pure recomputation because max is order-free.
class CoverageTracker {
  public:
    CoverageTracker(const Dataset& dataset, const OracleConfig& oracle, Split split);
    void add_valid_label(const EmbeddingVector& labeled_question);
    double score() const;

  private:
    const Dataset* dataset_;
    double sigma_;
    std::vector<int> eval_indices_;
    std::vector<double> best_;
    bool any_ = false;
};

// One active expert with its iteration price.
struct CohortMember {
    int expert = -1;
    Money price;
};
using Cohort = std::vector<CohortMember>;

// Samples `size` distinct experts, ranks them by impact (ties by id), and
// assigns ladder prices in rank order.
Cohort draw_cohort(const Dataset& dataset, int size, const std::vector<Money>& ladder, Rng& rng);

Money min_ladder_price(const std::vector<Money>& ladder);

struct SyntheticConfig {
    int topics = 4;
    int questions = 200;
    int experts = 20;
    std::size_t dimension = 64;
    double tau = 0.5;                   // capability cosine threshold
    double train_fraction = 0.7;
    double dev_fraction = 0.15;
    double topic_jitter = 0.2;          // total jitter norm, dimension-normalized
    double second_topic_prob = 0.5;
    int expert_topic_samples = 8;
    double impact_min = 1.0;
    double impact_max = 100.0;
    std::uint64_t seed = 1;
};

// Topic-structured world: questions jittered around unit-sphere topic
// centers, experts owning topic subsets through simulated publications,
// capability = cosine threshold with positives forced valid. Deterministic
// under seed.
Dataset generate_synthetic_world(const SyntheticConfig& config);

}  // namespace bf
