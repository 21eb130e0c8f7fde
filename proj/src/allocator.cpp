#include "bf/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_set>

namespace bf {

using nlohmann::json;

void ReplayBuffer::add(ReplayItem item) {
    if (capacity_ == 0) return;
    if (items_.size() < capacity_) {
        items_.push_back(std::move(item));
    } else {
        items_[next_] = std::move(item);
        next_ = (next_ + 1) % capacity_;
    }
}

QNetPair make_qnets(int hidden, int sync_period, Rng& rng) {
    QNetPair nets;
    nets.online = DenseNet({kFeatureCount, static_cast<std::size_t>(hidden), 1},
                           {Activation::relu, Activation::identity}, rng);
    nets.target = nets.online;
    nets.sync_period = sync_period;
    return nets;
}

double sampling_weight(Money budget, Money unit_price, int times_selected, double alpha) {
    if (unit_price.cents <= 0) throw Error::domain("sampling weight needs a positive price");
    if (alpha < 0.0) throw Error::domain("sampling weight decay must be nonnegative");
    double w = (budget.dollars() / unit_price.dollars()) *
               (1.0 - alpha * static_cast<double>(times_selected));
    return w > 0.0 ? w : 0.0;
}

double diversity_score(const EmbeddingVector& question,
                       const std::vector<const EmbeddingVector*>& reference) {
    if (reference.empty()) return 1.0;
    double best = std::numeric_limits<double>::infinity();
    for (const EmbeddingVector* r : reference)
        best = std::min(best, euclidean_distance(question, *r));
    return best;
}

std::vector<AgentAction> enumerate_actions(const World& world, const Cohort& cohort,
                                           const MatcherModel& matcher, double alpha) {
    if (cohort.empty()) throw Error::domain("cannot enumerate actions for an empty cohort");
    const Dataset& ds = *world.dataset;

    EmbeddingRefs cohort_embs;
    cohort_embs.reserve(cohort.size());
    for (const CohortMember& m : cohort) cohort_embs.push_back(&ds.experts[m.expert].embedding);

    // normalized sampling weights over the cohort
    std::vector<double> weights(cohort.size());
    double weight_sum = 0.0;
    for (std::size_t k = 0; k < cohort.size(); ++k) {
        weights[k] = sampling_weight(world.budget, cohort[k].price, world.gamma[cohort[k].expert],
                                     alpha);
        weight_sum += weights[k];
    }
    if (weight_sum > 0.0)
        for (double& w : weights) w /= weight_sum;

    std::vector<const EmbeddingVector*> labeled_ref;
    for (const AllocationEntry& e : world.labeled.entries())
        labeled_ref.push_back(&ds.questions[ds.question_index.at(e.question_id)].embedding);

    const double b0 = world.budget_initial.dollars();
    const double budget_fraction = b0 > 0.0 ? world.budget.dollars() / b0 : 0.0;

    struct Candidate {
        int question;
        double phi;
        CohortScores scores;
    };
    std::vector<Candidate> candidates;
    for (int qi : world.dataset->split_indices(Split::train)) {
        if (world.is_labeled(qi)) continue;
        bool affordable = false;
        for (const CohortMember& m : cohort)
            if (m.price <= world.budget) { affordable = true; break; }
        if (!affordable) continue;
        Candidate c{qi, diversity_score(ds.questions[qi].embedding, labeled_ref),
                    score_cohort(matcher, ds.questions[qi].embedding, cohort_embs)};
        candidates.push_back(std::move(c));
    }

    std::vector<AgentAction> actions;
    for (const Candidate& c : candidates) {
        // diversity on a fixed world scale so the feature means the same
        // thing at every step of every episode
        double phi_hat = std::min(1.0, c.phi / world.diversity_scale);
        for (std::size_t k = 0; k < cohort.size(); ++k) {
            if (cohort[k].price > world.budget) continue;
            AgentAction a;
            a.question = c.question;
            a.expert = cohort[k].expert;
            a.cost = cohort[k].price;
            a.features.match_score = c.scores.prob[k];
            a.features.budget_fraction = budget_fraction;
            a.features.sampling_weight = weights[k];
            a.features.candidate_diversity = phi_hat;
            a.features.cost_fraction = b0 > 0.0 ? cohort[k].price.dollars() / b0 : 0.0;
            actions.push_back(a);
        }
    }
    return actions;
}

namespace {

bool action_id_less(const Dataset& ds, const AgentAction& a, const AgentAction& b) {
    const std::string& qa = ds.questions[a.question].id;
    const std::string& qb = ds.questions[b.question].id;
    if (qa != qb) return qa < qb;
    return ds.experts[a.expert].id < ds.experts[b.expert].id;
}

}  // namespace

const AgentAction* agent_propose(const DenseNet& online, const std::vector<AgentAction>& actions,
                                 double epsilon, Rng& rng, const Dataset& dataset) {
    if (actions.empty()) throw Error::domain("cannot propose from an empty action set");
    if (rng.uniform01() < epsilon) return &actions[rng.uniform_index(actions.size())];

    const AgentAction* best = &actions.front();
    double best_q = online.forward(actions.front().features.as_vector())[0];
    for (std::size_t k = 1; k < actions.size(); ++k) {
        double q = online.forward(actions[k].features.as_vector())[0];
        if (q > best_q || (q == best_q && action_id_less(dataset, actions[k], *best))) {
            best_q = q;
            best = &actions[k];
        }
    }
    return best;
}

std::size_t compete(const Dataset& dataset, const std::vector<AgentAction>& contenders) {
    if (contenders.empty()) throw Error::domain("compete needs at least one contender");
    std::size_t win = 0;
    for (std::size_t k = 1; k < contenders.size(); ++k) {
        const AgentAction& a = contenders[k];
        const AgentAction& w = contenders[win];
        bool better = false;
        if (a.features.match_score != w.features.match_score)
            better = a.features.match_score > w.features.match_score;
        else if (a.cost != w.cost)
            better = a.cost < w.cost;
        else
            better = dataset.experts[a.expert].id < dataset.experts[w.expert].id;
        if (better) win = k;
    }
    return win;
}

int compete(const MatcherModel& matcher, const Dataset& dataset, int question,
            const Cohort& cohort, const std::vector<int>& contender_slots) {
    if (contender_slots.empty()) throw Error::domain("compete needs at least one contender");
    EmbeddingRefs embs;
    for (const CohortMember& m : cohort) embs.push_back(&dataset.experts[m.expert].embedding);
    CohortScores s = score_cohort(matcher, dataset.questions[question].embedding, embs);
    std::vector<AgentAction> contenders;
    for (int slot : contender_slots) {
        AgentAction a;
        a.question = question;
        a.expert = cohort[slot].expert;
        a.cost = cohort[slot].price;
        a.features.match_score = s.prob[slot];
        contenders.push_back(a);
    }
    return contender_slots[compete(dataset, contenders)];
}

RoundOutcome resolve_round(const std::vector<AgentAction>& proposals,
                           std::vector<AgentAction> remaining, const Dataset& dataset,
                           const DenseNet& online, double epsilon, Money budget, Rng& rng) {
    struct Slot {
        int agent;
        AgentAction proposal;
        bool stale;
    };
    std::vector<Slot> pending;
    for (std::size_t a = 0; a < proposals.size(); ++a)
        pending.push_back({static_cast<int>(a), proposals[a], false});

    RoundOutcome out;
    Money budget_left = budget;
    std::unordered_set<int> committed_questions;
    const int sweep_guard = static_cast<int>(remaining.size() + proposals.size()) + 1;

    while (!pending.empty()) {
        remaining.erase(std::remove_if(remaining.begin(), remaining.end(),
                                       [&](const AgentAction& a) {
                                           return a.cost > budget_left ||
                                                  committed_questions.count(a.question) != 0;
                                       }),
                        remaining.end());
        if (remaining.empty()) break;

        for (Slot& s : pending) {
            bool invalid = s.stale || committed_questions.count(s.proposal.question) != 0 ||
                           s.proposal.cost > budget_left;
            if (invalid) {
                s.proposal = *agent_propose(online, remaining, epsilon, rng, dataset);
                s.stale = false;
            }
        }

        // contenders grouped per question, visited in ascending question id
        std::map<std::string, std::vector<std::size_t>> groups;
        for (std::size_t k = 0; k < pending.size(); ++k)
            groups[dataset.questions[pending[k].proposal.question].id].push_back(k);

        std::vector<int> done_agents;
        for (auto& [qid, slots] : groups) {
            // dedupe experts; the lowest agent index carries each pair
            std::vector<AgentAction> contenders;
            std::vector<std::size_t> owner_slot;
            for (std::size_t s : slots) {
                const AgentAction& p = pending[s].proposal;
                bool seen = false;
                for (const AgentAction& c : contenders)
                    if (c.expert == p.expert) { seen = true; break; }
                if (!seen) {
                    contenders.push_back(p);
                    owner_slot.push_back(s);
                }
            }
            std::size_t win = compete(dataset, contenders);
            const AgentAction& winner = contenders[win];
            if (winner.cost > budget_left) {
                for (std::size_t s : slots) pending[s].stale = true;
                continue;
            }
            out.assignments.push_back(winner);
            budget_left -= winner.cost;
            committed_questions.insert(winner.question);
            done_agents.push_back(pending[owner_slot[win]].agent);
            for (std::size_t s : slots)
                if (s != owner_slot[win]) pending[s].stale = true;
        }

        pending.erase(std::remove_if(pending.begin(), pending.end(),
                                     [&](const Slot& s) {
                                         return std::find(done_agents.begin(), done_agents.end(),
                                                          s.agent) != done_agents.end();
                                     }),
                      pending.end());
        ++out.sweeps;
        if (out.sweeps > sweep_guard)
            throw Error::state("competition round failed to terminate");
    }
    out.idle_agents = static_cast<int>(pending.size());
    return out;
}

double step_reward(double delta_f_value, const std::vector<double>& diversities,
                   const std::vector<Money>& costs) {
    if (costs.empty() || diversities.size() != costs.size())
        throw Error::domain("reward needs one diversity value per cost");
    Money total = Money::from_cents(0);
    for (Money c : costs) total += c;
    if (total.cents <= 0) throw Error::domain("reward needs a positive total cost");
    double phi_sum = 0.0;
    for (double p : diversities) phi_sum += p;
    return delta_f_value * phi_sum / total.dollars();
}

double td_target(double reward, double gamma,
                 const std::vector<std::array<double, kFeatureCount>>& next_candidates,
                 bool terminal, const QNetPair& nets) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw Error::domain("discount must lie in [0, 1)");
    if (terminal || next_candidates.empty()) return reward;
    std::size_t best = 0;
    double best_q = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < next_candidates.size(); ++k) {
        std::vector<double> f(next_candidates[k].begin(), next_candidates[k].end());
        double q = nets.online.forward(f)[0];
        if (q > best_q) {
            best_q = q;
            best = k;
        }
    }
    std::vector<double> f(next_candidates[best].begin(), next_candidates[best].end());
    return reward + gamma * nets.target.forward(f)[0];
}

double epsilon_at(const AllocatorConfig& config, int episode) {
    if (config.episodes <= 0) return config.eps_end;
    double progress = static_cast<double>(episode) / static_cast<double>(config.episodes);
    if (config.eps_fraction <= 0.0 || progress >= config.eps_fraction) return config.eps_end;
    return config.eps_start + (config.eps_end - config.eps_start) * (progress / config.eps_fraction);
}

namespace {

void validate_allocator_config(const Dataset& dataset, const AllocatorConfig& config) {
    if (config.agents < 1) throw Error::config("allocator needs at least one agent");
    if (static_cast<int>(config.ladder.size()) != config.cohort_size)
        throw Error::config("price ladder length != cohort size");
    if (config.cohort_size > static_cast<int>(dataset.experts.size()))
        throw Error::config("cohort size exceeds the expert pool");
    if (!(config.gamma >= 0.0 && config.gamma < 1.0))
        throw Error::config("discount must lie in [0, 1)");
    if (config.replay_batch < 1) throw Error::config("replay batch must be positive");
}

struct BatchOutcome {
    std::vector<AgentAction> assignments;
    std::vector<Money> costs;
    std::vector<bool> valids;
    std::vector<double> diversities;
    double delta = 0.0;
    double reward = 0.0;
};

// Annotates a resolved batch, then computes the shared cooperative reward.
// Diversity references = labels before this batch plus batch mates.
BatchOutcome apply_batch(World& world, const std::vector<AgentAction>& assignments,
                         CoverageTracker& dev_cov, const OracleConfig& oracle, int step) {
    const Dataset& ds = *world.dataset;
    std::vector<const EmbeddingVector*> labeled_before;
    for (const AllocationEntry& e : world.labeled.entries())
        labeled_before.push_back(&ds.questions[ds.question_index.at(e.question_id)].embedding);

    BatchOutcome out;
    out.assignments = assignments;
    double before = dev_cov.score();
    for (const AgentAction& a : assignments) {
        AnnotateResult res = annotate(world, a.question, a.expert, a.cost, step);
        out.costs.push_back(res.cost_charged);
        out.valids.push_back(res.valid);
        if (res.valid) dev_cov.add_valid_label(ds.questions[a.question].embedding);
    }
    double after = dev_cov.score();
    out.delta = delta_f(world, oracle, before, after);

    for (std::size_t i = 0; i < assignments.size(); ++i) {
        std::vector<const EmbeddingVector*> ref = labeled_before;
        for (std::size_t k = 0; k < assignments.size(); ++k)
            if (k != i) ref.push_back(&ds.questions[assignments[k].question].embedding);
        out.diversities.push_back(
            diversity_score(ds.questions[assignments[i].question].embedding, ref));
    }
    out.reward = step_reward(out.delta, out.diversities, out.costs);
    return out;
}

double gradient_step(QNetPair& nets, Optimizer& opt, const ReplayBuffer& replay, Rng& rng,
                     const AllocatorConfig& config) {
    const int n = config.replay_batch;
    GradientBuffer grads(nets.online.parameter_count(), 0.0);
    double loss = 0.0;
    for (int k = 0; k < n; ++k) {
        const ReplayItem& item = replay.sample(rng);
        double target = td_target(item.reward, config.gamma, item.next_candidates, item.terminal,
                                  nets);
        std::vector<double> f(item.chosen.begin(), item.chosen.end());
        ForwardCache cache = nets.online.forward_cached(f);
        double err = cache.output[0] - target;
        loss += err * err / n;
        GradientBuffer g = nets.online.backprop(cache, {2.0 * err / n});
        for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += g[i];
    }
    opt.step(nets.online, grads);
    return loss;
}

}  // namespace

namespace {

struct SingleTrainResult {
    QNetPair nets;
    std::vector<EpisodeSummary> episodes;
    std::vector<double> loss_trace;
    std::vector<double> epsilon_schedule;
};

SingleTrainResult train_once(const Dataset& dataset, const MatcherModel& matcher,
                             const OracleConfig& oracle, Money budget,
                             const AllocatorConfig& config, std::uint64_t run_seed) {
    Rng init_rng(mix_seed(run_seed, 0xA110C));
    Rng policy_rng(mix_seed(run_seed, 0xE9));
    SingleTrainResult result;
    result.nets = make_qnets(config.qnet_hidden, config.sync_period, init_rng);
    OptimizerConfig opt_cfg;
    opt_cfg.lr = config.lr;
    opt_cfg.weight_decay = config.weight_decay;
    Optimizer opt(result.nets.online, opt_cfg);
    ReplayBuffer replay(config.replay_capacity);

    long grad_steps = 0;
    const Money min_price = min_ladder_price(config.ladder);
    const std::size_t learn_threshold =
        std::max<std::size_t>(static_cast<std::size_t>(config.replay_warmup),
                              static_cast<std::size_t>(config.replay_batch));

    for (int ep = 0; ep < config.episodes; ++ep) {
        const double eps = epsilon_at(config, ep);
        World world(dataset, budget, mix_seed(run_seed, 1000 + static_cast<std::uint64_t>(ep)));
        CoverageTracker dev_cov(dataset, oracle, Split::dev);

        EpisodeSummary summary;
        summary.episode = ep;
        summary.epsilon = eps;
        std::vector<double> losses;
        std::vector<ReplayItem> open_items;
        int step = 0;
        while (true) {
            if (world.unlabeled_train().empty() || world.budget < min_price) break;
            Cohort cohort = draw_cohort(dataset, config.cohort_size, config.ladder, world.rng);
            std::vector<AgentAction> actions = enumerate_actions(world, cohort, matcher, config.alpha);
            if (actions.empty()) break;

            if (!open_items.empty()) {
                std::vector<std::array<double, kFeatureCount>> cands;
                cands.reserve(actions.size());
                for (const AgentAction& a : actions) cands.push_back(a.features.as_array());
                for (ReplayItem& item : open_items) {
                    item.next_candidates = cands;
                    item.terminal = false;
                    replay.add(std::move(item));
                }
                open_items.clear();
            }

            std::vector<AgentAction> proposals;
            proposals.reserve(config.agents);
            for (int a = 0; a < config.agents; ++a)
                proposals.push_back(*agent_propose(result.nets.online, actions, eps, policy_rng,
                                                   dataset));
            RoundOutcome round = resolve_round(proposals, actions, dataset, result.nets.online,
                                               eps, world.budget, policy_rng);
            if (round.assignments.empty()) break;

            BatchOutcome batch = apply_batch(world, round.assignments, dev_cov, oracle, step);
            if (!std::isfinite(batch.reward))
                throw Error::training("non-finite reward in episode " + std::to_string(ep));
            summary.reward_sum += batch.reward;
            summary.annotations += static_cast<int>(batch.assignments.size());
            ++summary.steps;
            for (const AgentAction& a : batch.assignments) {
                ReplayItem item;
                item.chosen = a.features.as_array();
                item.reward = batch.reward;
                item.terminal = true;  // until the next iteration proves otherwise
                open_items.push_back(std::move(item));
            }

            if (replay.size() >= learn_threshold) {
                double loss = gradient_step(result.nets, opt, replay, policy_rng, config);
                if (!std::isfinite(loss))
                    throw Error::training("Q loss diverged in episode " + std::to_string(ep));
                losses.push_back(loss);
                ++grad_steps;
                if (grad_steps % config.sync_period == 0) result.nets.sync();
            }
            ++step;
        }
        for (ReplayItem& item : open_items) replay.add(std::move(item));

        summary.final_dev_score = dev_cov.score();
        result.episodes.push_back(summary);
        double mean_loss = 0.0;
        for (double l : losses) mean_loss += l;
        result.loss_trace.push_back(losses.empty() ? 0.0 : mean_loss / losses.size());
        result.epsilon_schedule.push_back(eps);
    }
    return result;
}

// greedy rollout scored on the dev split; the restart selector's yardstick
double greedy_dev_score(const Dataset& dataset, const MatcherModel& matcher, const QNetPair& nets,
                        const OracleConfig& oracle, Money budget, const AllocatorConfig& config,
                        std::uint64_t seed) {
    World world(dataset, budget, mix_seed(seed, 0x90));
    Rng policy_rng(mix_seed(seed, 0x91));
    CoverageTracker dev_cov(dataset, oracle, Split::dev);
    const Money min_price = min_ladder_price(config.ladder);
    int step = 0;
    while (true) {
        if (world.unlabeled_train().empty() || world.budget < min_price) break;
        Cohort cohort = draw_cohort(dataset, config.cohort_size, config.ladder, world.rng);
        std::vector<AgentAction> actions = enumerate_actions(world, cohort, matcher, config.alpha);
        if (actions.empty()) break;
        std::vector<AgentAction> proposals;
        proposals.reserve(config.agents);
        for (int a = 0; a < config.agents; ++a)
            proposals.push_back(*agent_propose(nets.online, actions, 0.0, policy_rng, dataset));
        RoundOutcome round =
            resolve_round(proposals, actions, dataset, nets.online, 0.0, world.budget, policy_rng);
        if (round.assignments.empty()) break;
        (void)apply_batch(world, round.assignments, dev_cov, oracle, step);
        ++step;
    }
    return dev_cov.score();
}

}  // namespace

AllocatorTrainResult train_allocator(const Dataset& dataset, const MatcherModel& matcher,
                                     const OracleConfig& oracle, Money budget,
                                     const AllocatorConfig& config) {
    validate_allocator_config(dataset, config);
    AllocatorTrainResult result;
    if (config.episodes <= 0) {
        Rng init_rng(mix_seed(config.seed, 0xA110C));
        result.nets = make_qnets(config.qnet_hidden, config.sync_period, init_rng);
        return result;
    }

    const int restarts = std::max(1, config.restarts);
    const int rollouts = std::max(1, config.selection_rollouts);
    double best_score = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        std::uint64_t run_seed =
            r == 0 ? config.seed : mix_seed(config.seed, 0xA5000 + static_cast<std::uint64_t>(r));
        SingleTrainResult candidate = train_once(dataset, matcher, oracle, budget, config, run_seed);
        // rollouts at fractions of the training budget, so the pick behaves
        // across the whole sweep range rather than only at full budget
        double score = 0.0;
        int samples = 0;
        for (int k = 0; k < rollouts; ++k) {
            for (double fraction : {0.25, 0.5, 1.0}) {
                Money b = Money::from_cents(
                    static_cast<std::int64_t>(std::llround(budget.cents * fraction)));
                score += greedy_dev_score(dataset, matcher, candidate.nets, oracle, b, config,
                                          static_cast<std::uint64_t>(k) + 1);
                ++samples;
            }
        }
        score /= samples;
        result.report.restart_selection.push_back(score);
        if (score > best_score) {
            best_score = score;
            result.nets = std::move(candidate.nets);
            result.report.episodes = std::move(candidate.episodes);
            result.report.loss_trace = std::move(candidate.loss_trace);
            result.report.epsilon_schedule = std::move(candidate.epsilon_schedule);
            result.report.selected_restart = r;
        }
    }
    return result;
}

EpisodeReport run_policy(const Dataset& dataset, const MatcherModel& matcher, const QNetPair& nets,
                         const OracleConfig& oracle, Money budget, const AllocatorConfig& config,
                         std::uint64_t seed) {
    validate_allocator_config(dataset, config);
    World world(dataset, budget, mix_seed(seed, 0x90));
    Rng policy_rng(mix_seed(seed, 0x91));
    CoverageTracker dev_cov(dataset, oracle, Split::dev);
    const Money min_price = min_ladder_price(config.ladder);

    EpisodeReport report;
    report.method = "pu_adka";
    report.seed = seed;
    report.initial_score = oracle_score(world, oracle, Split::test);

    int step = 0;
    while (true) {
        if (world.unlabeled_train().empty() || world.budget < min_price) break;
        Cohort cohort = draw_cohort(dataset, config.cohort_size, config.ladder, world.rng);
        std::vector<AgentAction> actions = enumerate_actions(world, cohort, matcher, config.alpha);
        if (actions.empty()) break;

        std::vector<AgentAction> proposals;
        proposals.reserve(config.agents);
        for (int a = 0; a < config.agents; ++a)
            proposals.push_back(*agent_propose(nets.online, actions, 0.0, policy_rng, dataset));
        RoundOutcome round =
            resolve_round(proposals, actions, dataset, nets.online, 0.0, world.budget, policy_rng);
        if (round.assignments.empty()) break;

        BatchOutcome batch = apply_batch(world, round.assignments, dev_cov, oracle, step);
        EpisodeStep rs;
        Money step_cost = Money::from_cents(0);
        for (std::size_t i = 0; i < batch.assignments.size(); ++i) {
            const AgentAction& a = batch.assignments[i];
            rs.assignments.push_back({dataset.questions[a.question].id,
                                      dataset.experts[a.expert].id, batch.costs[i].dollars(),
                                      batch.valids[i]});
            step_cost += batch.costs[i];
        }
        rs.cost = step_cost.dollars();
        rs.delta_f = batch.delta;
        rs.reward = batch.reward;
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

void save_qnets(const QNetPair& nets, const std::string& base_path, std::uint64_t seed) {
    save_net(nets.online, base_path + ".bfnn");
    json manifest;
    manifest["features"] = kFeatureCount;
    std::vector<std::size_t> hidden;
    for (std::size_t l = 0; l + 1 < nets.online.layers().size(); ++l)
        hidden.push_back(nets.online.layers()[l].out_dim());
    manifest["hidden"] = hidden;
    manifest["sync_period"] = nets.sync_period;
    manifest["seed"] = seed;
    std::ofstream out(base_path + ".json", std::ios::trunc);
    if (!out) throw Error::io("cannot write qnet manifest: " + base_path + ".json");
    out << manifest.dump(2) << '\n';
}

QNetPair load_qnets(const std::string& base_path) {
    std::ifstream in(base_path + ".json");
    if (!in) throw Error::state("qnet manifest not found: " + base_path + ".json");
    json manifest = json::parse(in, nullptr, false);
    if (manifest.is_discarded()) throw Error::state("malformed qnet manifest: " + base_path);
    QNetPair nets;
    nets.online = load_net(base_path + ".bfnn");
    nets.target = nets.online;
    nets.sync_period = manifest.value("sync_period", 200);
    if (nets.online.input_dim() != kFeatureCount)
        throw Error::state("qnet checkpoint feature width mismatch");
    return nets;
}

}  // namespace bf
