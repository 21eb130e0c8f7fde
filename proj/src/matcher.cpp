#include "bf/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace bf {

using nlohmann::json;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(1 + exp(x)) without overflow
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// l(z, +1): loss of scoring logit z as positive
double loss_pos(PuLoss loss, double z) {
    return loss == PuLoss::sigmoid ? sigmoid(-z) : softplus(-z);
}
// l(z, -1)
double loss_neg(PuLoss loss, double z) {
    return loss == PuLoss::sigmoid ? sigmoid(z) : softplus(z);
}
// d l(z, +1) / dz
double dloss_pos(PuLoss loss, double z) {
    double p = sigmoid(z);
    return loss == PuLoss::sigmoid ? -p * (1.0 - p) : -(1.0 - p);
}
// d l(z, -1) / dz
double dloss_neg(PuLoss loss, double z) {
    double p = sigmoid(z);
    return loss == PuLoss::sigmoid ? p * (1.0 - p) : p;
}

std::vector<double> concat(const EmbeddingVector& a, const EmbeddingVector& b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

void check_cohort(const MatcherModel& model, const EmbeddingVector& question,
                  const EmbeddingRefs& cohort) {
    if (cohort.empty()) throw Error::domain("attention cohort is empty");
    if (question.size() != model.dimension)
        throw Error::shape("question embedding dimension != model dimension");
    for (const EmbeddingVector* e : cohort)
        if (e == nullptr || e->size() != model.dimension)
            throw Error::shape("cohort embedding dimension != model dimension");
}

std::vector<double> softmax(const std::vector<double>& scores) {
    double mx = *std::max_element(scores.begin(), scores.end());
    std::vector<double> out(scores.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        out[k] = std::exp(scores[k] - mx);
        sum += out[k];
    }
    for (double& a : out) a /= sum;
    return out;
}

}  // namespace

MatcherModel make_matcher(std::size_t dimension, int hidden, double class_prior, Rng& rng) {
    if (dimension == 0) throw Error::config("matcher dimension must be positive");
    if (!(class_prior > 0.0 && class_prior < 1.0))
        throw Error::config("class prior must lie in (0, 1)");
    MatcherModel m;
    m.dimension = dimension;
    m.class_prior = class_prior;
    std::size_t h = static_cast<std::size_t>(hidden);
    m.attention_scorer = DenseNet({2 * dimension, h, 1}, {Activation::relu, Activation::relu}, rng);
    m.output_mlp = DenseNet({2 * dimension, h, 1}, {Activation::relu, Activation::sigmoid}, rng);
    return m;
}

std::vector<double> attention_weights(const MatcherModel& model, const EmbeddingVector& question,
                                      const EmbeddingRefs& cohort) {
    check_cohort(model, question, cohort);
    std::vector<double> scores(cohort.size());
    for (std::size_t k = 0; k < cohort.size(); ++k)
        scores[k] = model.attention_scorer.forward(concat(question, *cohort[k]))[0];
    return softmax(scores);
}

CohortScores score_cohort(const MatcherModel& model, const EmbeddingVector& question,
                          const EmbeddingRefs& cohort) {
    CohortScores out;
    out.alpha = attention_weights(model, question, cohort);
    out.mix.assign(model.dimension, 0.0);
    for (std::size_t k = 0; k < cohort.size(); ++k) {
        const EmbeddingVector& e = *cohort[k];
        for (std::size_t d = 0; d < model.dimension; ++d) out.mix[d] += out.alpha[k] * e[d];
    }
    out.prob.resize(cohort.size());
    out.logit.resize(cohort.size());
    for (std::size_t k = 0; k < cohort.size(); ++k) {
        ForwardCache cache = model.output_mlp.forward_cached(concat(out.mix, *cohort[k]));
        out.logit[k] = cache.logit();
        out.prob[k] = cache.output[0];
    }
    return out;
}

double score(const MatcherModel& model, const EmbeddingVector& question,
             const EmbeddingRefs& cohort, std::size_t expert_index, double* logit_out) {
    check_cohort(model, question, cohort);
    if (expert_index >= cohort.size())
        throw Error::domain("expert index " + std::to_string(expert_index) +
                            " outside cohort of size " + std::to_string(cohort.size()));
    CohortScores s = score_cohort(model, question, cohort);
    if (logit_out) *logit_out = s.logit[expert_index];
    return s.prob[expert_index];
}

namespace {

// Shared forward pass for one pair with every cache needed for backprop.
struct PairForward {
    std::vector<ForwardCache> attn_caches;  // one per cohort member
    std::vector<double> alpha;
    EmbeddingVector mix;
    ForwardCache mlp_cache;
    double logit = 0.0;
    double prob = 0.0;
};

PairForward forward_pair(const MatcherModel& model, const PuPair& pair,
                         const EmbeddingRefs& cohort) {
    if (pair.cohort_index < 0 || pair.cohort_index >= static_cast<int>(cohort.size()))
        throw Error::domain("pair names an expert outside the cohort");
    PairForward f;
    std::vector<double> scores(cohort.size());
    f.attn_caches.reserve(cohort.size());
    for (std::size_t k = 0; k < cohort.size(); ++k) {
        f.attn_caches.push_back(
            model.attention_scorer.forward_cached(concat(*pair.question, *cohort[k])));
        scores[k] = f.attn_caches.back().output[0];
    }
    f.alpha = softmax(scores);
    f.mix.assign(model.dimension, 0.0);
    for (std::size_t k = 0; k < cohort.size(); ++k)
        for (std::size_t d = 0; d < model.dimension; ++d)
            f.mix[d] += f.alpha[k] * (*cohort[k])[d];
    f.mlp_cache = model.output_mlp.forward_cached(
        concat(f.mix, *cohort[static_cast<std::size_t>(pair.cohort_index)]));
    f.logit = f.mlp_cache.logit();
    f.prob = f.mlp_cache.output[0];
    return f;
}

// Backpropagates dL/dlogit for one pair into both parameter buffers.
void backward_pair(const MatcherModel& model, const EmbeddingRefs& cohort, const PairForward& f,
                   double dlogit, GradientBuffer& grad_attention, GradientBuffer& grad_output) {
    std::vector<double> grad_input;
    GradientBuffer gm =
        model.output_mlp.backprop(f.mlp_cache, {dlogit}, /*seed_at_logit=*/true, &grad_input);
    for (std::size_t i = 0; i < gm.size(); ++i) grad_output[i] += gm[i];

    // d mix = first half of the mlp input gradient
    // d alpha_k = <d mix, e_k>, then softmax backward to the relu scores
    std::vector<double> dalpha(cohort.size(), 0.0);
    for (std::size_t k = 0; k < cohort.size(); ++k) {
        const EmbeddingVector& e = *cohort[k];
        double acc = 0.0;
        for (std::size_t d = 0; d < model.dimension; ++d) acc += grad_input[d] * e[d];
        dalpha[k] = acc;
    }
    double inner = 0.0;
    for (std::size_t k = 0; k < cohort.size(); ++k) inner += f.alpha[k] * dalpha[k];
    for (std::size_t k = 0; k < cohort.size(); ++k) {
        double dscore = f.alpha[k] * (dalpha[k] - inner);
        if (dscore == 0.0) continue;
        GradientBuffer ga = model.attention_scorer.backprop(f.attn_caches[k], {dscore});
        for (std::size_t i = 0; i < ga.size(); ++i) grad_attention[i] += ga[i];
    }
}

}  // namespace

double pu_risk(const MatcherModel& model, const PuBatch& batch, const EmbeddingRefs& cohort,
               PuLoss loss) {
    if (batch.positives.empty() || batch.unlabeled.empty())
        throw Error::domain("PU batch needs at least one positive and one unlabeled pair");
    check_cohort(model, *batch.positives.front().question, cohort);

    const double pi = model.class_prior;
    const double np = static_cast<double>(batch.positives.size());
    const double nu = static_cast<double>(batch.unlabeled.size());
    double pos_risk = 0.0, pos_neg_term = 0.0, unl_neg_term = 0.0;
    for (const PuPair& p : batch.positives) {
        PairForward f = forward_pair(model, p, cohort);
        pos_risk += loss_pos(loss, f.logit);
        pos_neg_term += loss_neg(loss, f.logit);
    }
    for (const PuPair& p : batch.unlabeled) {
        PairForward f = forward_pair(model, p, cohort);
        unl_neg_term += loss_neg(loss, f.logit);
    }
    double risk = (pi / np) * pos_risk + std::max(0.0, unl_neg_term / nu - (pi / np) * pos_neg_term);
    if (!std::isfinite(risk)) throw Error::numeric("non-finite PU risk");
    return risk;
}

MatcherGrads pu_risk_grad(const MatcherModel& model, const PuBatch& batch,
                          const EmbeddingRefs& cohort, PuGradMode mode, double* risk_out,
                          PuLoss loss) {
    if (batch.positives.empty() || batch.unlabeled.empty())
        throw Error::domain("PU batch needs at least one positive and one unlabeled pair");
    check_cohort(model, *batch.positives.front().question, cohort);

    const double pi = model.class_prior;
    const double np = static_cast<double>(batch.positives.size());
    const double nu = static_cast<double>(batch.unlabeled.size());

    std::vector<PairForward> pos_fwd, unl_fwd;
    pos_fwd.reserve(batch.positives.size());
    unl_fwd.reserve(batch.unlabeled.size());

    double pos_risk = 0.0;       // (pi/np) sum l(z, +1)
    double pos_neg_term = 0.0;   // (pi/np) sum l(z, -1)
    double unl_neg_term = 0.0;   // (1/nu) sum l(z, -1)
    for (const PuPair& p : batch.positives) {
        pos_fwd.push_back(forward_pair(model, p, cohort));
        pos_risk += loss_pos(loss, pos_fwd.back().logit);
        pos_neg_term += loss_neg(loss, pos_fwd.back().logit);
    }
    for (const PuPair& p : batch.unlabeled) {
        unl_fwd.push_back(forward_pair(model, p, cohort));
        unl_neg_term += loss_neg(loss, unl_fwd.back().logit);
    }
    pos_risk *= pi / np;
    pos_neg_term *= pi / np;
    unl_neg_term /= nu;

    const double inner = unl_neg_term - pos_neg_term;
    const double risk = pos_risk + std::max(0.0, inner);
    if (risk_out) *risk_out = risk;
    if (!std::isfinite(risk)) throw Error::numeric("non-finite PU risk");

    MatcherGrads grads;
    grads.attention.assign(model.attention_scorer.parameter_count(), 0.0);
    grads.output.assign(model.output_mlp.parameter_count(), 0.0);

    const bool clamped = inner < 0.0;
    for (std::size_t k = 0; k < batch.positives.size(); ++k) {
        const double z = pos_fwd[k].logit;
        double dlogit = 0.0;
        if (!clamped) {
            dlogit = (pi / np) * (dloss_pos(loss, z) - dloss_neg(loss, z));
        } else if (mode == PuGradMode::risk) {
            dlogit = (pi / np) * dloss_pos(loss, z);  // only the explicit positive term survives
        } else {
            dlogit = (pi / np) * dloss_neg(loss, z);  // descend on -(inner)
        }
        if (dlogit != 0.0)
            backward_pair(model, cohort, pos_fwd[k], dlogit, grads.attention, grads.output);
    }
    for (std::size_t k = 0; k < batch.unlabeled.size(); ++k) {
        const double z = unl_fwd[k].logit;
        double dlogit = 0.0;
        if (!clamped) {
            dlogit = dloss_neg(loss, z) / nu;
        } else if (mode == PuGradMode::training) {
            dlogit = -dloss_neg(loss, z) / nu;
        }
        if (dlogit != 0.0)
            backward_pair(model, cohort, unl_fwd[k], dlogit, grads.attention, grads.output);
    }
    return grads;
}

PuRiskMargins pu_risk_margins(const MatcherModel& model, const PuBatch& batch,
                              const EmbeddingRefs& cohort) {
    if (batch.positives.empty() || batch.unlabeled.empty())
        throw Error::domain("PU batch needs at least one positive and one unlabeled pair");
    const double pi = model.class_prior;
    const double np = static_cast<double>(batch.positives.size());
    const double nu = static_cast<double>(batch.unlabeled.size());
    PuRiskMargins out;
    out.relu_margin = std::numeric_limits<double>::infinity();
    double pos_neg_term = 0.0, unl_neg_term = 0.0;
    auto visit = [&](const PuPair& p) {
        PairForward f = forward_pair(model, p, cohort);
        for (const ForwardCache& c : f.attn_caches)
            out.relu_margin = std::min(out.relu_margin, c.min_abs_relu_preact);
        out.relu_margin = std::min(out.relu_margin, f.mlp_cache.min_abs_relu_preact);
        return f.logit;
    };
    for (const PuPair& p : batch.positives) pos_neg_term += sigmoid(visit(p));
    for (const PuPair& p : batch.unlabeled) unl_neg_term += sigmoid(visit(p));
    out.clamp_margin = std::fabs(unl_neg_term / nu - (pi / np) * pos_neg_term);
    return out;
}

namespace {

std::vector<double> run_training(MatcherModel& model, const Dataset& dataset,
                                 const MatcherTrainConfig& config, std::uint64_t run_seed,
                                 std::vector<PositivePair> train_positives) {
    std::vector<int> train_questions = dataset.split_indices(Split::train);
    const int n_experts = static_cast<int>(dataset.experts.size());
    const int sub_cohort =
        config.attention_cohort > 0 ? std::min(config.attention_cohort, n_experts) : 0;

    EmbeddingRefs pool_cohort;
    pool_cohort.reserve(dataset.experts.size());
    for (const ExpertProfile& e : dataset.experts) pool_cohort.push_back(&e.embedding);

    Rng rng(run_seed);
    OptimizerConfig opt_cfg;
    opt_cfg.lr = config.lr;
    opt_cfg.weight_decay = config.weight_decay;
    Optimizer opt_attention(model.attention_scorer, opt_cfg);
    Optimizer opt_output(model.output_mlp, opt_cfg);

    // per-expert positive question lists for cohort-conditioned batches
    std::vector<std::vector<int>> by_expert(n_experts);
    for (const PositivePair& p : train_positives) by_expert[p.expert].push_back(p.question);

    std::vector<double> trace;
    const std::size_t batches_per_epoch = std::max<std::size_t>(
        1, (train_positives.size() + config.batch_positives - 1) / config.batch_positives);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(train_positives);
        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t b = 0; b < batches_per_epoch; ++b) {
            EmbeddingRefs cohort;
            std::vector<int> cohort_experts;  // dataset indices (sub-cohort mode only)
            PuBatch batch;

            if (sub_cohort == 0) {
                cohort = pool_cohort;
                std::size_t start = b * static_cast<std::size_t>(config.batch_positives);
                std::size_t stop = std::min(train_positives.size(),
                                            start + static_cast<std::size_t>(config.batch_positives));
                for (std::size_t k = start; k < stop; ++k)
                    batch.positives.push_back(
                        {&dataset.questions[train_positives[k].question].embedding,
                         train_positives[k].expert});
            } else {
                // draw the cohort first, exactly as the allocator does, then
                // fill the batch with cohort-compatible pairs
                int guard = 0;
                while (batch.positives.empty() && ++guard < 1000) {
                    cohort_experts.clear();
                    for (std::size_t pick : rng.sample_without_replacement(
                             static_cast<std::size_t>(n_experts),
                             static_cast<std::size_t>(sub_cohort)))
                        cohort_experts.push_back(static_cast<int>(pick));
                    std::vector<std::pair<int, int>> available;  // (question, slot)
                    for (std::size_t slot = 0; slot < cohort_experts.size(); ++slot)
                        for (int q : by_expert[cohort_experts[slot]])
                            available.emplace_back(q, static_cast<int>(slot));
                    if (available.empty()) continue;
                    std::size_t take = std::min<std::size_t>(
                        available.size(), static_cast<std::size_t>(config.batch_positives));
                    for (std::size_t k = 0; k < take; ++k) {
                        std::size_t j = k + rng.uniform_index(available.size() - k);
                        std::swap(available[k], available[j]);
                        batch.positives.push_back(
                            {&dataset.questions[available[k].first].embedding,
                             available[k].second});
                    }
                }
                if (batch.positives.empty())
                    throw Error::training("cannot build a cohort-conditioned positive batch");
                cohort.reserve(cohort_experts.size());
                for (int ej : cohort_experts) cohort.push_back(&dataset.experts[ej].embedding);
            }

            // unlabeled cells resampled uniformly outside the positive set
            int guard = 0;
            while (static_cast<int>(batch.unlabeled.size()) < config.batch_unlabeled) {
                int qi = train_questions[rng.uniform_index(train_questions.size())];
                int slot;
                int ej;
                if (sub_cohort == 0) {
                    ej = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n_experts)));
                    slot = ej;
                } else {
                    slot = static_cast<int>(rng.uniform_index(cohort_experts.size()));
                    ej = cohort_experts[static_cast<std::size_t>(slot)];
                }
                if (dataset.is_positive(ej, qi)) {
                    if (++guard > 100000)
                        throw Error::training("cannot sample unlabeled pairs: positives saturate the grid");
                    continue;
                }
                batch.unlabeled.push_back({&dataset.questions[qi].embedding, slot});
            }

            double risk = 0.0;
            MatcherGrads grads =
                pu_risk_grad(model, batch, cohort, PuGradMode::training, &risk, config.loss);
            if (!std::isfinite(risk))
                throw Error::training("matcher loss diverged at epoch " + std::to_string(epoch));
            opt_attention.step(model.attention_scorer, grads.attention);
            opt_output.step(model.output_mlp, grads.output);
            loss_sum += risk;
            ++batches;
        }
        double epoch_loss = batches > 0 ? loss_sum / batches : 0.0;
        if (!std::isfinite(epoch_loss))
            throw Error::training("matcher loss diverged at epoch " + std::to_string(epoch));
        trace.push_back(epoch_loss);
    }
    return trace;
}

// Restart selection metric: rank held-out positives against sampled
// non-positive cells. Falls back to train positives (and finally to the
// negated final loss) on datasets without held-out positives.
double selection_metric(const MatcherModel& model, const Dataset& dataset,
                        const std::vector<double>& trace, std::uint64_t seed) {
    EmbeddingRefs cohort;
    for (const ExpertProfile& e : dataset.experts) cohort.push_back(&e.embedding);

    std::vector<const PositivePair*> held_out, train_pos;
    for (const PositivePair& p : dataset.positives)
        (dataset.questions[p.question].split == Split::train ? train_pos : held_out).push_back(&p);
    const std::vector<const PositivePair*>& pos_set = held_out.empty() ? train_pos : held_out;
    if (pos_set.empty()) return trace.empty() ? 0.0 : -trace.back();

    std::vector<double> pos_scores;
    for (const PositivePair* p : pos_set) {
        CohortScores cs = score_cohort(model, dataset.questions[p->question].embedding, cohort);
        pos_scores.push_back(cs.prob[p->expert]);
    }
    Rng rng(mix_seed(seed, 0x5e1ec7));
    std::vector<double> neg_scores;
    int guard = 0;
    const std::size_t want = std::max<std::size_t>(pos_scores.size(), 64);
    while (neg_scores.size() < want && guard < 100000) {
        ++guard;
        int qi = static_cast<int>(rng.uniform_index(dataset.questions.size()));
        int ej = static_cast<int>(rng.uniform_index(dataset.experts.size()));
        if (dataset.is_positive(ej, qi)) continue;
        CohortScores cs = score_cohort(model, dataset.questions[qi].embedding, cohort);
        neg_scores.push_back(cs.prob[ej]);
    }
    if (neg_scores.empty()) return trace.empty() ? 0.0 : -trace.back();
    double wins = 0.0;
    for (double p : pos_scores)
        for (double n : neg_scores) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    return wins / (static_cast<double>(pos_scores.size()) * static_cast<double>(neg_scores.size()));
}

}  // namespace

MatcherTrainReport train_matcher(MatcherModel& model, const Dataset& dataset,
                                 const MatcherTrainConfig& config) {
    std::vector<PositivePair> train_positives;
    for (const PositivePair& p : dataset.positives)
        if (dataset.questions[p.question].split == Split::train) train_positives.push_back(p);
    if (train_positives.empty())
        throw Error::training("cannot train matcher: no positive pairs in the train split");

    MatcherTrainReport report;
    if (config.epochs <= 0) return report;

    const int restarts = std::max(1, config.restarts);
    const int hidden = static_cast<int>(model.attention_scorer.layers().front().out_dim());
    MatcherModel best;
    double best_metric = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        MatcherModel candidate;
        if (r == 0) {
            candidate = model;  // the caller's initialization is restart 0
        } else {
            Rng init_rng(mix_seed(config.seed, 0x1000 + static_cast<std::uint64_t>(r)));
            candidate = make_matcher(model.dimension, hidden, model.class_prior, init_rng);
        }
        std::vector<double> trace =
            run_training(candidate, dataset, config,
                         mix_seed(config.seed, static_cast<std::uint64_t>(r)), train_positives);
        double metric = selection_metric(candidate, dataset, trace, config.seed);
        report.restart_selection.push_back(metric);
        if (metric > best_metric) {
            best_metric = metric;
            best = std::move(candidate);
            report.epoch_loss = std::move(trace);
            report.selected_restart = r;
        }
    }
    model = std::move(best);
    return report;
}

std::vector<int> rank_by_scores(const std::vector<double>& scores,
                                const std::vector<Money>& prices,
                                const std::vector<const std::string*>& ids) {
    std::vector<int> order(scores.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        if (prices[a] != prices[b]) return prices[a] < prices[b];
        return *ids[a] < *ids[b];
    });
    return order;
}

std::vector<int> rank_experts(const MatcherModel& model, const EmbeddingVector& question,
                              const std::vector<CohortExpertRef>& cohort) {
    if (cohort.empty()) throw Error::domain("cannot rank an empty cohort");
    EmbeddingRefs embs;
    std::vector<Money> prices;
    std::vector<const std::string*> ids;
    for (const CohortExpertRef& c : cohort) {
        embs.push_back(c.embedding);
        prices.push_back(c.price);
        ids.push_back(c.id);
    }
    CohortScores s = score_cohort(model, question, embs);
    return rank_by_scores(s.prob, prices, ids);
}

void save_matcher(const MatcherModel& model, const std::string& base_path, std::uint64_t seed) {
    save_net(model.attention_scorer, base_path + ".attention.bfnn");
    save_net(model.output_mlp, base_path + ".output.bfnn");
    json manifest;
    manifest["dimension"] = model.dimension;
    manifest["prior"] = model.class_prior;
    std::vector<std::size_t> hidden;
    for (std::size_t l = 0; l + 1 < model.attention_scorer.layers().size(); ++l)
        hidden.push_back(model.attention_scorer.layers()[l].out_dim());
    manifest["hidden"] = hidden;
    manifest["seed"] = seed;
    std::ofstream out(base_path + ".json", std::ios::trunc);
    if (!out) throw Error::io("cannot write matcher manifest: " + base_path + ".json");
    out << manifest.dump(2) << '\n';
}

MatcherModel load_matcher(const std::string& base_path) {
    std::ifstream in(base_path + ".json");
    if (!in) throw Error::state("matcher manifest not found: " + base_path + ".json");
    json manifest = json::parse(in, nullptr, false);
    if (manifest.is_discarded())
        throw Error::state("malformed matcher manifest: " + base_path + ".json");
    MatcherModel m;
    m.dimension = manifest.at("dimension").get<std::size_t>();
    m.class_prior = manifest.at("prior").get<double>();
    m.attention_scorer = load_net(base_path + ".attention.bfnn");
    m.output_mlp = load_net(base_path + ".output.bfnn");
    if (m.attention_scorer.input_dim() != 2 * m.dimension ||
        m.output_mlp.input_dim() != 2 * m.dimension)
        throw Error::state("matcher checkpoint dimensions disagree with manifest");
    return m;
}

}  // namespace bf
