#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bf/allocator.hpp"
#include "bf/baselines.hpp"
#include "bf/matcher.hpp"
#include "bf/sim.hpp"

namespace bf {

// Resolved run configuration. Every key in the config document maps to one
// field here and to one CLI flag of the same name.
struct RunConfig {
    // dataset files; all empty means "generate a synthetic world"
    std::string questions_file;
    std::string experts_file;
    std::string embeddings_file;
    std::string capability_file;

    // synthetic world
    int topics = 4;
    int questions = 200;
    int experts = 20;
    int dim = 64;
    double tau = 0.5;
    double train_fraction = 0.7;
    double dev_fraction = 0.15;

    // protocol
    double budget = 100.0;  // dollars
    int agents = 10;
    int cohort = 5;
    std::vector<double> ladder = {0.5, 0.4, 0.3, 0.2, 0.1};  // dollars
    double alpha = 0.1;
    double gamma = 0.9;
    double eps_start = 1.0;
    double eps_end = 0.05;
    double eps_fraction = 0.5;

    // matcher training
    int epochs = 150;
    int matcher_batch = 32;
    double matcher_lr = 2e-3;
    int matcher_hidden = 32;
    double prior = 0.1;

    // allocator training
    int episodes = 200;
    double qnet_lr = 1e-3;
    int qnet_hidden = 64;
    int qnet_restarts = 4;
    int qnet_rollouts = 3;
    int replay_capacity = 10000;
    int replay_batch = 64;
    int replay_warmup = 200;
    int sync_period = 200;

    // oracle
    double oracle_sigma = 0.0;  // 0: derive from the dev split
    std::string oracle_mode = "coverage";
    double oracle_noise = 0.0;

    // run control
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::string out;
    std::string checkpoints;  // defaults to out
    std::vector<std::string> methods = {"pu_adka", "random", "cost_greedy", "match_greedy"};
    std::vector<double> budgets;  // sweep only
};

// Key-value config document: `key = value` lines, optional [section]
// headers, `#` comments. Unknown keys are rejected.
std::map<std::string, std::string> parse_config_document(const std::string& path);
void apply_config_entries(const std::map<std::string, std::string>& entries, RunConfig& config);

// Canonical snapshot; re-parseable and byte-stable for a fixed config.
std::string serialize_config(const RunConfig& config);

void validate_config(const RunConfig& config);

// Derived views
std::vector<Money> ladder_cents(const RunConfig& config);
SyntheticConfig synthetic_config(const RunConfig& config);
AllocatorConfig allocator_config(const RunConfig& config);
BaselineConfig baseline_config(const RunConfig& config);
MatcherTrainConfig matcher_train_config(const RunConfig& config);
OracleConfig oracle_config(const RunConfig& config, const Dataset& dataset);

// Loads the configured dataset files, or generates the synthetic world when
// no files are named.
Dataset resolve_dataset(const RunConfig& config);

// FNV-1a 64 over a byte stream, hex-encoded.
std::string content_hash_bytes(const std::string& bytes);
std::string content_hash_file(const std::string& path);

}  // namespace bf
