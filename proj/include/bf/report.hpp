#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace bf {

struct StepAssignment {
    std::string question_id;
    std::string expert_id;
    double cost = 0.0;  // dollars
    bool valid = false;
};

struct EpisodeStep {
    std::vector<StepAssignment> assignments;
    double cost = 0.0;              // dollars charged this step
    double delta_f = 0.0;
    double reward = 0.0;
    double budget_remaining = 0.0;  // dollars after the step
};

// Common trace shape for the learned policy and every baseline, so each
// method's episodes compare cell for cell.
struct EpisodeReport {
    std::string method;
    std::uint64_t seed = 0;
    std::vector<EpisodeStep> steps;
    double initial_score = 0.0;
    double final_score = 0.0;
    double total_cost = 0.0;  // dollars
    int allocation_count = 0;
    int valid_count = 0;
};

nlohmann::json to_json(const EpisodeReport& report);
EpisodeReport episode_report_from_json(const nlohmann::json& j);

void save_episode_report(const EpisodeReport& report, const std::string& path);
EpisodeReport load_episode_report(const std::string& path);

}  // namespace bf
