#include "bf/report.hpp"

#include <fstream>

#include "bf/error.hpp"

namespace bf {

using nlohmann::json;

json to_json(const EpisodeReport& report) {
    json steps = json::array();
    for (const EpisodeStep& s : report.steps) {
        json assignments = json::array();
        for (const StepAssignment& a : s.assignments)
            assignments.push_back({{"question", a.question_id},
                                   {"expert", a.expert_id},
                                   {"cost", a.cost},
                                   {"valid", a.valid}});
        steps.push_back({{"assignments", assignments},
                         {"cost", s.cost},
                         {"delta_f", s.delta_f},
                         {"reward", s.reward},
                         {"budget_remaining", s.budget_remaining}});
    }
    return json{{"method", report.method},
                {"seed", report.seed},
                {"steps", steps},
                {"initial_score", report.initial_score},
                {"final_score", report.final_score},
                {"total_cost", report.total_cost},
                {"allocation_count", report.allocation_count},
                {"valid_count", report.valid_count}};
}

EpisodeReport episode_report_from_json(const json& j) {
    EpisodeReport r;
    r.method = j.at("method").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.initial_score = j.at("initial_score").get<double>();
    r.final_score = j.at("final_score").get<double>();
    r.total_cost = j.at("total_cost").get<double>();
    r.allocation_count = j.at("allocation_count").get<int>();
    r.valid_count = j.at("valid_count").get<int>();
    for (const json& sj : j.at("steps")) {
        EpisodeStep s;
        s.cost = sj.at("cost").get<double>();
        s.delta_f = sj.at("delta_f").get<double>();
        s.reward = sj.at("reward").get<double>();
        s.budget_remaining = sj.at("budget_remaining").get<double>();
        for (const json& aj : sj.at("assignments"))
            s.assignments.push_back({aj.at("question").get<std::string>(),
                                     aj.at("expert").get<std::string>(),
                                     aj.at("cost").get<double>(), aj.at("valid").get<bool>()});
        r.steps.push_back(std::move(s));
    }
    return r;
}

void save_episode_report(const EpisodeReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error::io("cannot write episode report: " + path);
    out << to_json(report).dump(2) << '\n';
}

EpisodeReport load_episode_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error::io("cannot read episode report: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error::io("malformed episode report: " + path);
    return episode_report_from_json(j);
}

}  // namespace bf
