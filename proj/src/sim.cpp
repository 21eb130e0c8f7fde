#include "bf/sim.hpp"

#include <algorithm>
#include <cmath>

namespace bf {

double default_oracle_sigma(const Dataset& dataset) {
    const std::vector<int>& dev = dataset.split_indices(Split::dev);
    std::vector<double> dists;
    for (std::size_t a = 0; a < dev.size(); ++a)
        for (std::size_t b = a + 1; b < dev.size(); ++b)
            dists.push_back(euclidean_distance(dataset.questions[dev[a]].embedding,
                                               dataset.questions[dev[b]].embedding));
    if (dists.empty()) return 1.0;
    std::sort(dists.begin(), dists.end());
    double median = dists[dists.size() / 2];
    double sigma = 0.5 * median;
    return sigma > 0.0 ? sigma : 1.0;
}

World::World(const Dataset& ds, Money initial_budget, std::uint64_t seed)
    : dataset(&ds),
      budget_initial(initial_budget),
      budget(initial_budget),
      gamma(ds.experts.size(), 0),
      question_labeled(ds.questions.size(), 0),
      rng(seed) {
    if (initial_budget.cents < 0) throw Error::config("budget must be nonnegative");
    if (ds.capability.empty()) throw Error::state("world needs a capability matrix");

    const std::vector<int>& train = ds.split_indices(Split::train);
    std::vector<double> dists;
    dists.reserve(train.size() * (train.size() - 1) / 2);
    for (std::size_t a = 0; a < train.size(); ++a)
        for (std::size_t b = a + 1; b < train.size(); ++b)
            dists.push_back(euclidean_distance(ds.questions[train[a]].embedding,
                                               ds.questions[train[b]].embedding));
    if (!dists.empty()) {
        std::sort(dists.begin(), dists.end());
        double median = dists[dists.size() / 2];
        if (median > 0.0) diversity_scale = median;
    }
}

std::vector<int> World::unlabeled_train() const {
    std::vector<int> out;
    for (int qi : dataset->split_indices(Split::train))
        if (!is_labeled(qi)) out.push_back(qi);
    return out;
}

AnnotateResult annotate(World& world, int question, int expert, Money price, int step) {
    const Dataset& ds = *world.dataset;
    if (question < 0 || question >= static_cast<int>(ds.questions.size()) || expert < 0 ||
        expert >= static_cast<int>(ds.experts.size()))
        throw Error::domain("annotate: unknown question or expert index");
    if (world.is_labeled(question))
        throw Error::state("question '" + ds.questions[question].id + "' already annotated");
    if (price > world.budget)
        throw Error::budget("price " + std::to_string(price.cents) + "c exceeds remaining budget " +
                            std::to_string(world.budget.cents) + "c");

    bool valid = ds.capability.at(static_cast<std::size_t>(expert),
                                  static_cast<std::size_t>(question));
    world.labeled.add({ds.questions[question].id, ds.experts[expert].id, price, valid, step});
    world.budget -= price;
    world.gamma[expert] += 1;
    world.question_labeled[question] = 1;
    return {valid, price};
}

namespace {

double kernel(const EmbeddingVector& a, const EmbeddingVector& b, double sigma) {
    double d = euclidean_distance(a, b);
    return std::exp(-(d * d) / (2.0 * sigma * sigma));
}

}  // namespace

double oracle_score(const World& world, const OracleConfig& oracle, Split split) {
    if (!(oracle.sigma > 0.0)) throw Error::config("oracle sigma must be positive");
    const Dataset& ds = *world.dataset;
    const std::vector<int>& eval = ds.split_indices(split);
    if (eval.empty()) throw Error::domain("oracle evaluation split is empty");

    std::vector<const EmbeddingVector*> valid_labels;
    for (const AllocationEntry& e : world.labeled.entries()) {
        if (!e.valid) continue;
        valid_labels.push_back(&ds.questions[ds.question_index.at(e.question_id)].embedding);
    }
    if (valid_labels.empty()) return 0.0;

    double total = 0.0;
    for (int m : eval) {
        double best = 0.0;
        for (const EmbeddingVector* q : valid_labels)
            best = std::max(best, kernel(ds.questions[m].embedding, *q, oracle.sigma));
        total += best;
    }
    return total / static_cast<double>(eval.size());
}

double delta_f(World& world, const OracleConfig& oracle, double before, double after) {
    double d = after - before;
    if (oracle.mode == OracleConfig::Mode::noisy_coverage && oracle.noise_sigma > 0.0)
        d += world.rng.normal(0.0, oracle.noise_sigma);
    return d;
}

CoverageTracker::CoverageTracker(const Dataset& dataset, const OracleConfig& oracle, Split split)
    : dataset_(&dataset), sigma_(oracle.sigma), eval_indices_(dataset.split_indices(split)),
      best_(eval_indices_.size(), 0.0) {
    if (!(sigma_ > 0.0)) throw Error::config("oracle sigma must be positive");
    if (eval_indices_.empty()) throw Error::domain("oracle evaluation split is empty");
}

void CoverageTracker::add_valid_label(const EmbeddingVector& labeled_question) {
    any_ = true;
    for (std::size_t k = 0; k < eval_indices_.size(); ++k)
        best_[k] = std::max(best_[k], kernel(dataset_->questions[eval_indices_[k]].embedding,
                                             labeled_question, sigma_));
}

double CoverageTracker::score() const {
    if (!any_) return 0.0;
    double total = 0.0;
    for (double b : best_) total += b;
    return total / static_cast<double>(best_.size());
}

Money min_ladder_price(const std::vector<Money>& ladder) {
    if (ladder.empty()) throw Error::config("price ladder is empty");
    return *std::min_element(ladder.begin(), ladder.end());
}

Cohort draw_cohort(const Dataset& dataset, int size, const std::vector<Money>& ladder, Rng& rng) {
    if (size <= 0 || size > static_cast<int>(dataset.experts.size()))
        throw Error::config("cohort size " + std::to_string(size) + " outside expert pool of " +
                            std::to_string(dataset.experts.size()));
    if (static_cast<int>(ladder.size()) != size)
        throw Error::config("price ladder length " + std::to_string(ladder.size()) +
                            " != cohort size " + std::to_string(size));
    std::vector<std::size_t> picks =
        rng.sample_without_replacement(dataset.experts.size(), static_cast<std::size_t>(size));
    std::vector<int> order(picks.begin(), picks.end());
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const ExpertProfile& ea = dataset.experts[a];
        const ExpertProfile& eb = dataset.experts[b];
        if (ea.impact_factor_sum != eb.impact_factor_sum)
            return ea.impact_factor_sum > eb.impact_factor_sum;
        return ea.id < eb.id;
    });
    Cohort cohort(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) cohort[r] = {order[r], ladder[r]};
    return cohort;
}

namespace {

std::string padded_id(char prefix, int value, int width) {
    std::string digits = std::to_string(value);
    std::string out(1, prefix);
    for (int k = static_cast<int>(digits.size()); k < width; ++k) out += '0';
    return out + digits;
}

int id_width(int count) {
    int width = 1;
    for (int v = count - 1; v >= 10; v /= 10) ++width;
    return std::max(width, 4);
}

}  // namespace

Dataset generate_synthetic_world(const SyntheticConfig& config) {
    if (config.topics < 1) throw Error::config("synthetic world needs at least one topic");
    if (config.questions < config.topics)
        throw Error::config("synthetic world needs questions >= topics");
    if (config.experts < 1) throw Error::config("synthetic world needs at least one expert");
    if (config.dimension == 0) throw Error::config("synthetic dimension must be positive");
    if (!(config.train_fraction > 0.0) || !(config.dev_fraction >= 0.0) ||
        config.train_fraction + config.dev_fraction >= 1.0 + 1e-12)
        throw Error::config("synthetic split fractions must leave room for a test split");

    Rng rng(config.seed);
    const int K = config.topics;
    const int Q = config.questions;
    const int N = config.experts;
    const std::size_t D = config.dimension;
    // per-coordinate scale so the jitter norm stays ~topic_jitter at any D
    const double jitter = config.topic_jitter / std::sqrt(static_cast<double>(D));

    // topic centers on the unit sphere
    std::vector<EmbeddingVector> centers(K, EmbeddingVector(D, 0.0));
    for (auto& c : centers) {
        double norm = 0.0;
        for (double& x : c) {
            x = rng.normal();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) { c[0] = 1.0; norm = 1.0; }
        for (double& x : c) x /= norm;
    }

    // topic ownership: round-robin both ways so every topic has an author
    // and every expert owns at least one topic
    std::vector<std::vector<int>> owned(N);
    std::vector<std::vector<int>> owners(K);
    for (int j = 0; j < N; ++j) {
        int t = j % K;
        owned[j].push_back(t);
        owners[t].push_back(j);
    }
    for (int t = std::min(N, K); t < K; ++t) {
        int j = t % N;
        owned[j].push_back(t);
        owners[t].push_back(j);
    }
    for (int j = 0; j < N; ++j) {
        if (K > 1 && rng.uniform01() < config.second_topic_prob) {
            int extra = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(K)));
            if (std::find(owned[j].begin(), owned[j].end(), extra) == owned[j].end()) {
                owned[j].push_back(extra);
                owners[extra].push_back(j);
            }
        }
        std::sort(owned[j].begin(), owned[j].end());
    }

    Dataset ds;
    ds.dimension = D;

    const int ew = id_width(N);
    ds.experts.resize(N);
    // one simulated publication per (expert, owned topic)
    std::vector<std::vector<std::pair<std::string, int>>> topic_pubs(K);  // (pub id, author)
    for (int j = 0; j < N; ++j) {
        ExpertProfile& e = ds.experts[j];
        e.id = padded_id('e', j, ew);
        e.impact_factor_sum = rng.uniform(config.impact_min, config.impact_max);
        for (int t : owned[j]) {
            std::string pub = "p_" + e.id + "_t" + std::to_string(t);
            e.publication_ids.push_back(pub);
            topic_pubs[t].emplace_back(pub, j);
        }
        std::sort(e.publication_ids.begin(), e.publication_ids.end());
    }

    const int qw = id_width(Q);
    ds.questions.resize(Q);
    for (int i = 0; i < Q; ++i) {
        QuestionRecord& q = ds.questions[i];
        int t = i % K;
        q.id = padded_id('q', i, qw);
        q.question = "synthetic question " + std::to_string(i) + " (topic " + std::to_string(t) + ")";
        q.answer = "synthetic answer " + std::to_string(i);
        q.embedding.resize(D);
        for (std::size_t d = 0; d < D; ++d)
            q.embedding[d] = centers[t][d] + jitter * rng.normal();
        const auto& pubs = topic_pubs[t];
        const auto& [pub, author] = pubs[rng.uniform_index(pubs.size())];
        q.source_publication = pub;
        q.author_ids = {ds.experts[author].id};
    }

    // splits: seeded shuffle, then contiguous slices
    std::vector<int> order(Q);
    for (int i = 0; i < Q; ++i) order[i] = i;
    rng.shuffle(order);
    int n_train = std::max(1, static_cast<int>(std::floor(Q * config.train_fraction)));
    int n_dev = static_cast<int>(std::floor(Q * config.dev_fraction));
    if (Q >= 3) {
        n_dev = std::max(1, n_dev);
        while (n_train + n_dev >= Q) {
            if (n_train > 1) --n_train;
            else --n_dev;
        }
    } else {
        n_train = Q;
        n_dev = 0;
    }
    for (int r = 0; r < Q; ++r) {
        Split s = r < n_train ? Split::train : (r < n_train + n_dev ? Split::dev : Split::test);
        ds.questions[order[r]].split = s;
    }

    // expert embedding: mean of fresh samples from the owned topics
    for (int j = 0; j < N; ++j) {
        EmbeddingVector mean(D, 0.0);
        int samples = 0;
        for (int t : owned[j]) {
            for (int s = 0; s < config.expert_topic_samples; ++s) {
                for (std::size_t d = 0; d < D; ++d)
                    mean[d] += centers[t][d] + jitter * rng.normal();
                ++samples;
            }
        }
        for (double& x : mean) x /= static_cast<double>(samples);
        ds.experts[j].embedding = std::move(mean);
    }

    ds.rebuild_index();
    for (int i = 0; i < Q; ++i)
        for (const std::string& a : ds.questions[i].author_ids)
            ds.positives.push_back({i, ds.expert_index.at(a)});
    ds.rebuild_index();

    ds.capability = build_capability_matrix(ds, CapabilityPolicy::similarity_threshold(config.tau));
    return ds;
}

}  // namespace bf
