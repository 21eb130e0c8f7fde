#pragma once

#include <string>
#include <vector>

#include "bf/domain.hpp"
#include "bf/nn.hpp"

namespace bf {

using EmbeddingRefs = std::vector<const EmbeddingVector*>;

// Question-expert suitability model: an expert-wise attention scorer over
// the cohort plus an output MLP on [attended-mix, expert], trained with the
// non-negative PU risk estimator.
struct MatcherModel {
    DenseNet attention_scorer;  // [question, expert] -> relu score
    DenseNet output_mlp;        // [mix, expert] -> sigmoid probability
    double class_prior = 0.1;
    std::size_t dimension = 0;
};

MatcherModel make_matcher(std::size_t dimension, int hidden, double class_prior, Rng& rng);

// Softmax over relu-scored [question, expert_k] concatenations.
// Entries are nonnegative and sum to 1.
std::vector<double> attention_weights(const MatcherModel& model, const EmbeddingVector& question,
                                      const EmbeddingRefs& cohort);

struct CohortScores {
    std::vector<double> alpha;   // attention weights, one per cohort member
    EmbeddingVector mix;         // attention-weighted cohort embedding
    std::vector<double> prob;    // suitability per cohort member, in [0,1]
    std::vector<double> logit;   // pre-sigmoid value per cohort member
};

// Score every cohort member against one question; the attention pass runs once.
CohortScores score_cohort(const MatcherModel& model, const EmbeddingVector& question,
                          const EmbeddingRefs& cohort);

// Suitability of cohort[expert_index] for the question.
double score(const MatcherModel& model, const EmbeddingVector& question,
             const EmbeddingRefs& cohort, std::size_t expert_index, double* logit_out = nullptr);

// Pairs reference embeddings owned elsewhere; the expert is named by its
// position in the cohort.
struct PuPair {
    const EmbeddingVector* question = nullptr;
    int cohort_index = -1;
};

struct PuBatch {
    std::vector<PuPair> positives;
    std::vector<PuPair> unlabeled;
};

// Surrogates for the zero-one loss, applied to the pre-sigmoid logit.
// `sigmoid` is l(z, t) = sigmoid(-t z); `logistic` is l(z, t) =
// log(1 + exp(-t z)). The sigmoid form defines the reported risk; training
// defaults to logistic, which cannot be minimized by sinking every score.
enum class PuLoss { sigmoid, logistic };

// Non-negative PU risk: (pi/n_p) sum l(g,+1) over positives plus the
// zero-clamped unlabeled-minus-positive negative-risk term.
double pu_risk(const MatcherModel& model, const PuBatch& batch, const EmbeddingRefs& cohort,
               PuLoss loss = PuLoss::sigmoid);

struct MatcherGrads {
    GradientBuffer attention;
    GradientBuffer output;
};

enum class PuGradMode {
    risk,      // subgradient of the clamped risk as written
    training,  // when the clamp is active, descend on the negated inner term
};

MatcherGrads pu_risk_grad(const MatcherModel& model, const PuBatch& batch,
                          const EmbeddingRefs& cohort, PuGradMode mode,
                          double* risk_out = nullptr, PuLoss loss = PuLoss::sigmoid);

// Margins that make gradients unreliable when tiny: the smallest |relu
// pre-activation| across every forward the batch touches, and the distance
// of the risk's inner term from its clamp boundary.
struct PuRiskMargins {
    double relu_margin = 0.0;
    double clamp_margin = 0.0;
};
PuRiskMargins pu_risk_margins(const MatcherModel& model, const PuBatch& batch,
                              const EmbeddingRefs& cohort);

struct MatcherTrainConfig {
    int epochs = 150;
    int batch_positives = 16;
    int batch_unlabeled = 16;
    double lr = 2e-3;
    double weight_decay = 0.0;
    PuLoss loss = PuLoss::logistic;
    // 0: attention spans the full expert pool per batch; k > 0: each batch
    // draws a bootstrap sub-cohort of k experts, matching how the allocator
    // scores pairs at deployment time.
    int attention_cohort = 0;
    // Escaping the early training plateau is init-sensitive; extra restarts
    // reinitialize and the best run is kept by ranking held-out positives
    // against sampled unlabeled cells (no capability labels involved).
    int restarts = 4;
    std::uint64_t seed = 1;
};

struct MatcherTrainReport {
    std::vector<double> epoch_loss;        // selected run
    std::vector<double> restart_selection; // selection metric per restart
    int selected_restart = 0;
};

// Trains on the train split's positive pairs against uniformly resampled
// unlabeled cells, attention cohort = the full expert pool. Deterministic
// under seed.
MatcherTrainReport train_matcher(MatcherModel& model, const Dataset& dataset,
                                 const MatcherTrainConfig& config);

struct CohortExpertRef {
    int index = -1;                              // caller-side expert index
    const EmbeddingVector* embedding = nullptr;
    Money price;
    const std::string* id = nullptr;
};

// Sort order used for expert ranking: score desc, then price asc, then id asc.
std::vector<int> rank_by_scores(const std::vector<double>& scores,
                                const std::vector<Money>& prices,
                                const std::vector<const std::string*>& ids);

// Cohort positions ordered by descending suitability for the question.
std::vector<int> rank_experts(const MatcherModel& model, const EmbeddingVector& question,
                              const std::vector<CohortExpertRef>& cohort);

// Checkpoint: <base>.attention.bfnn, <base>.output.bfnn, <base>.json manifest.
void save_matcher(const MatcherModel& model, const std::string& base_path, std::uint64_t seed);
MatcherModel load_matcher(const std::string& base_path);

}  // namespace bf
