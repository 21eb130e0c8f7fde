#include "bf/baselines.hpp"

#include <algorithm>

#include "bf/allocator.hpp"

namespace bf {

ExpertAllocation expert_allocation_from_string(const std::string& s) {
    if (s == "random") return ExpertAllocation::random;
    if (s == "cost_greedy") return ExpertAllocation::cost_greedy;
    if (s == "match_greedy") return ExpertAllocation::match_greedy;
    throw Error::config("unknown expert allocation strategy '" + s + "'");
}

const char* expert_allocation_to_string(ExpertAllocation a) {
    switch (a) {
        case ExpertAllocation::random: return "random";
        case ExpertAllocation::cost_greedy: return "cost_greedy";
        case ExpertAllocation::match_greedy: return "match_greedy";
    }
    return "random";
}

std::vector<int> select_questions_rand(const std::vector<int>& pool, std::size_t batch_size,
                                       Rng& rng) {
    if (batch_size > pool.size())
        throw Error::domain("batch size " + std::to_string(batch_size) + " exceeds pool of " +
                            std::to_string(pool.size()));
    std::vector<std::size_t> picks = rng.sample_without_replacement(pool.size(), batch_size);
    std::vector<int> out;
    out.reserve(batch_size);
    for (std::size_t p : picks) out.push_back(pool[p]);
    return out;
}

namespace {

std::vector<std::size_t> affordable_slots(const Cohort& cohort, Money budget_left) {
    std::vector<std::size_t> slots;
    for (std::size_t k = 0; k < cohort.size(); ++k)
        if (cohort[k].price <= budget_left) slots.push_back(k);
    if (slots.empty()) throw Error::budget("no cohort expert is affordable");
    return slots;
}

}  // namespace

std::size_t allocate_random(const Cohort& cohort, Money budget_left, Rng& rng) {
    std::vector<std::size_t> slots = affordable_slots(cohort, budget_left);
    return slots[rng.uniform_index(slots.size())];
}

std::size_t allocate_cost_greedy(const Dataset& dataset, const Cohort& cohort, Money budget_left) {
    std::vector<std::size_t> slots = affordable_slots(cohort, budget_left);
    std::size_t best = slots[0];
    for (std::size_t k = 1; k < slots.size(); ++k) {
        std::size_t s = slots[k];
        if (cohort[s].price < cohort[best].price ||
            (cohort[s].price == cohort[best].price &&
             dataset.experts[cohort[s].expert].id < dataset.experts[cohort[best].expert].id))
            best = s;
    }
    return best;
}

std::size_t allocate_match_greedy(const Dataset& dataset, int question, const Cohort& cohort,
                                  Money budget_left) {
    std::vector<std::size_t> slots = affordable_slots(cohort, budget_left);
    const EmbeddingVector& q = dataset.questions[question].embedding;
    std::size_t best = slots[0];
    double best_sim = cosine_similarity(q, dataset.experts[cohort[best].expert].embedding);
    for (std::size_t k = 1; k < slots.size(); ++k) {
        std::size_t s = slots[k];
        double sim = cosine_similarity(q, dataset.experts[cohort[s].expert].embedding);
        bool better = false;
        if (sim != best_sim)
            better = sim > best_sim;
        else if (cohort[s].price != cohort[best].price)
            better = cohort[s].price < cohort[best].price;
        else
            better = dataset.experts[cohort[s].expert].id < dataset.experts[cohort[best].expert].id;
        if (better) {
            best = s;
            best_sim = sim;
        }
    }
    return best;
}

EpisodeReport run_baseline(const Dataset& dataset, const StrategySpec& spec,
                           const OracleConfig& oracle, Money budget,
                           const BaselineConfig& config) {
    if (config.batch_size < 1) throw Error::config("baseline batch size must be positive");
    if (static_cast<int>(config.ladder.size()) != config.cohort_size)
        throw Error::config("price ladder length != cohort size");

    World world(dataset, budget, mix_seed(spec.seed, 0x90));
    Rng strategy_rng(mix_seed(spec.seed, 0x91));
    CoverageTracker dev_cov(dataset, oracle, Split::dev);
    const Money min_price = min_ladder_price(config.ladder);
    const Dataset& ds = dataset;

    EpisodeReport report;
    report.method = expert_allocation_to_string(spec.expert_allocation);
    report.seed = spec.seed;
    report.initial_score = oracle_score(world, oracle, Split::test);

    int step = 0;
    while (true) {
        std::vector<int> pool = world.unlabeled_train();
        if (pool.empty() || world.budget < min_price) break;
        Cohort cohort = draw_cohort(dataset, config.cohort_size, config.ladder, world.rng);

        std::size_t batch = std::min<std::size_t>(pool.size(),
                                                  static_cast<std::size_t>(config.batch_size));
        std::vector<int> selected = select_questions_rand(pool, batch, strategy_rng);

        std::vector<const EmbeddingVector*> labeled_before;
        for (const AllocationEntry& e : world.labeled.entries())
            labeled_before.push_back(&ds.questions[ds.question_index.at(e.question_id)].embedding);

        double before = dev_cov.score();
        std::vector<int> annotated;
        std::vector<Money> costs;
        std::vector<bool> valids;
        std::vector<std::string> expert_ids;
        for (int qi : selected) {
            std::size_t slot;
            try {
                switch (spec.expert_allocation) {
                    case ExpertAllocation::random:
                        slot = allocate_random(cohort, world.budget, strategy_rng);
                        break;
                    case ExpertAllocation::cost_greedy:
                        slot = allocate_cost_greedy(dataset, cohort, world.budget);
                        break;
                    case ExpertAllocation::match_greedy:
                        slot = allocate_match_greedy(dataset, qi, cohort, world.budget);
                        break;
                    default:
                        throw Error::config("unknown allocation strategy");
                }
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::budget) break;  // batch truncated by the ledger
                throw;
            }
            AnnotateResult res = annotate(world, qi, cohort[slot].expert, cohort[slot].price, step);
            annotated.push_back(qi);
            costs.push_back(res.cost_charged);
            valids.push_back(res.valid);
            expert_ids.push_back(ds.experts[cohort[slot].expert].id);
            if (res.valid) dev_cov.add_valid_label(ds.questions[qi].embedding);
        }
        if (annotated.empty()) break;

        double after = dev_cov.score();
        double delta = delta_f(world, oracle, before, after);
        std::vector<double> phis;
        for (std::size_t i = 0; i < annotated.size(); ++i) {
            std::vector<const EmbeddingVector*> ref = labeled_before;
            for (std::size_t k = 0; k < annotated.size(); ++k)
                if (k != i) ref.push_back(&ds.questions[annotated[k]].embedding);
            phis.push_back(diversity_score(ds.questions[annotated[i]].embedding, ref));
        }
        double reward = step_reward(delta, phis, costs);

        EpisodeStep rs;
        Money step_cost = Money::from_cents(0);
        for (std::size_t i = 0; i < annotated.size(); ++i) {
            rs.assignments.push_back({ds.questions[annotated[i]].id, expert_ids[i],
                                      costs[i].dollars(), valids[i]});
            step_cost += costs[i];
        }
        rs.cost = step_cost.dollars();
        rs.delta_f = delta;
        rs.reward = reward;
        rs.budget_remaining = world.budget.dollars();
        report.steps.push_back(std::move(rs));
        ++step;
    }

    report.final_score = oracle_score(world, oracle, Split::test);
    report.total_cost = world.labeled.total_cost().dollars();
    report.allocation_count = static_cast<int>(world.labeled.size());
    for (const AllocationEntry& e : world.labeled.entries())
        if (e.valid) ++report.valid_count;
    return report;
}

}  // namespace bf
