#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bf/matcher.hpp"
#include "bf/nn.hpp"
#include "bf/report.hpp"
#include "bf/sim.hpp"

namespace bf {

// Per-action state: matcher suitability, budget pressure, expert sampling
// weight, candidate diversity, and relative cost.
struct StateFeatures {
    double match_score = 0.0;
    double budget_fraction = 0.0;
    double sampling_weight = 0.0;
    double candidate_diversity = 0.0;
    double cost_fraction = 0.0;

    std::array<double, 5> as_array() const {
        return {match_score, budget_fraction, sampling_weight, candidate_diversity, cost_fraction};
    }
    std::vector<double> as_vector() const {
        return {match_score, budget_fraction, sampling_weight, candidate_diversity, cost_fraction};
    }
};

constexpr std::size_t kFeatureCount = 5;

struct AgentAction {
    int question = -1;  // dataset index
    int expert = -1;    // dataset index
    Money cost;         // iteration price of the expert
    StateFeatures features;
};

struct ReplayItem {
    std::array<double, kFeatureCount> chosen{};
    double reward = 0.0;
    std::vector<std::array<double, kFeatureCount>> next_candidates;
    bool terminal = false;
};

class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}
    void add(ReplayItem item);
    std::size_t size() const { return items_.size(); }
    const ReplayItem& sample(Rng& rng) const { return items_[rng.uniform_index(items_.size())]; }

  private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<ReplayItem> items_;
};

// Online/target value networks for double-Q learning.
struct QNetPair {
    DenseNet online;
    DenseNet target;
    int sync_period = 200;

    void sync() { target = online; }
};

QNetPair make_qnets(int hidden, int sync_period, Rng& rng);

// Budget-over-price preference decayed by prior selections, clamped at 0.
double sampling_weight(Money budget, Money unit_price, int times_selected, double alpha);

// Every (unlabeled affordable train question) x (cohort expert) cell with
// populated features. Diversity is normalized over the candidate questions,
// sampling weights over the cohort.
std::vector<AgentAction> enumerate_actions(const World& world, const Cohort& cohort,
                                           const MatcherModel& matcher, double alpha = 0.1);

// Epsilon-greedy pick; greedy ties break on lowest (question id, expert id).
const AgentAction* agent_propose(const DenseNet& online, const std::vector<AgentAction>& actions,
                                 double epsilon, Rng& rng, const Dataset& dataset);

// Winner among contending actions on the same question: best matcher score,
// ties to the lower price, then the lower expert id.
std::size_t compete(const Dataset& dataset, const std::vector<AgentAction>& contenders);

// Convenience form: score the contenders directly with the matcher.
int compete(const MatcherModel& matcher, const Dataset& dataset, int question,
            const Cohort& cohort, const std::vector<int>& contender_slots);

struct RoundOutcome {
    std::vector<AgentAction> assignments;  // in commit order
    int idle_agents = 0;
    int sweeps = 0;
};

// Conflict resolution: competition winners keep their question, losers
// re-propose from what remains until every agent holds a unique question or
// goes idle. Commits never overdraw `budget`.
RoundOutcome resolve_round(const std::vector<AgentAction>& proposals,
                           std::vector<AgentAction> remaining, const Dataset& dataset,
                           const DenseNet& online, double epsilon, Money budget, Rng& rng);

// Min Euclidean distance to the reference set; 1.0 for an empty reference.
double diversity_score(const EmbeddingVector& question,
                       const std::vector<const EmbeddingVector*>& reference);

// Cooperative shared reward: (delta_f x sum of diversities) / total cost.
double step_reward(double delta_f_value, const std::vector<double>& diversities,
                   const std::vector<Money>& costs);

// Double-Q target: online picks the next action, target prices it.
double td_target(double reward, double gamma,
                 const std::vector<std::array<double, kFeatureCount>>& next_candidates,
                 bool terminal, const QNetPair& nets);

struct AllocatorConfig {
    int agents = 10;
    int cohort_size = 5;
    std::vector<Money> ladder = {Money::from_cents(50), Money::from_cents(40),
                                 Money::from_cents(30), Money::from_cents(20),
                                 Money::from_cents(10)};
    double alpha = 0.1;   // sampling-weight decay
    double gamma = 0.9;   // discount
    double eps_start = 1.0;
    double eps_end = 0.05;
    double eps_fraction = 0.5;  // share of training spent decaying
    int episodes = 200;
    std::size_t replay_capacity = 10000;
    int replay_batch = 64;
    int replay_warmup = 200;
    int sync_period = 200;
    double lr = 1e-3;
    double weight_decay = 0.0;
    int qnet_hidden = 64;
    // Q-learning outcomes vary across runs; each restart trains a fresh pair
    // and the one with the best greedy dev-split rollouts is kept.
    int restarts = 4;
    int selection_rollouts = 3;
    std::uint64_t seed = 1;
};

double epsilon_at(const AllocatorConfig& config, int episode);

struct EpisodeSummary {
    int episode = 0;
    double epsilon = 0.0;
    int steps = 0;
    int annotations = 0;
    double reward_sum = 0.0;
    double final_dev_score = 0.0;
};

struct AllocatorTrainReport {
    std::vector<EpisodeSummary> episodes;  // selected restart
    std::vector<double> loss_trace;        // mean TD loss per episode
    std::vector<double> epsilon_schedule;  // one entry per episode
    std::vector<double> restart_selection; // greedy dev score per restart
    int selected_restart = 0;
};

struct AllocatorTrainResult {
    QNetPair nets;
    AllocatorTrainReport report;
};

// Episode loop: per-iteration bootstrap cohorts, epsilon-greedy proposals,
// competition, capability-gated annotation, shared reward, replay training
// against the double-Q target. Deterministic under config.seed.
AllocatorTrainResult train_allocator(const Dataset& dataset, const MatcherModel& matcher,
                                     const OracleConfig& oracle, Money budget,
                                     const AllocatorConfig& config);

// Greedy deployment (epsilon = 0) of a trained pair; no learning.
EpisodeReport run_policy(const Dataset& dataset, const MatcherModel& matcher,
                         const QNetPair& nets, const OracleConfig& oracle, Money budget,
                         const AllocatorConfig& config, std::uint64_t seed);

// Checkpoint: <base>.bfnn + <base>.json manifest.
void save_qnets(const QNetPair& nets, const std::string& base_path, std::uint64_t seed);
QNetPair load_qnets(const std::string& base_path);

}  // namespace bf
