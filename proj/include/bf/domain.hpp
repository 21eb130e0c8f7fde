#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bf/error.hpp"
#include "bf/money.hpp"

namespace bf {

using EmbeddingVector = std::vector<double>;

enum class Split : std::uint8_t { train = 0, dev = 1, test = 2 };

Split split_from_string(const std::string& s);
const char* split_to_string(Split s);

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);
double euclidean_distance(const EmbeddingVector& a, const EmbeddingVector& b);

struct QuestionRecord {
    std::string id;
    EmbeddingVector embedding;
    std::string question;   // opaque payload, carried for reporting
    std::string answer;     // opaque payload
    std::string source_publication;
    std::vector<std::string> author_ids;  // sorted, unique
    Split split = Split::train;
};

struct ExpertProfile {
    std::string id;
    std::vector<std::string> publication_ids;  // sorted, unique
    double impact_factor_sum = 0.0;
    Money unit_price = Money::from_cents(10);  // standing price; cohorts re-price
    EmbeddingVector embedding;
};

// Dataset indices, not ids.
struct PositivePair {
    int question = -1;
    int expert = -1;
};

// Binary expert-capability bits, experts-by-questions.
class CapabilityMatrix {
  public:
    CapabilityMatrix() = default;
    CapabilityMatrix(std::size_t experts, std::size_t questions)
        : experts_(experts), questions_(questions), bits_(experts * questions, 0) {}

    bool at(std::size_t expert, std::size_t question) const {
        return bits_[expert * questions_ + question] != 0;
    }
    void set(std::size_t expert, std::size_t question, bool value) {
        bits_[expert * questions_ + question] = value ? 1 : 0;
    }
    std::size_t experts() const { return experts_; }
    std::size_t questions() const { return questions_; }
    bool empty() const { return bits_.empty(); }
    double density() const;
    const std::vector<std::uint8_t>& bits() const { return bits_; }

  private:
    std::size_t experts_ = 0;
    std::size_t questions_ = 0;
    std::vector<std::uint8_t> bits_;
};

struct AllocationEntry {
    std::string question_id;
    std::string expert_id;
    Money cost;
    bool valid = false;
    int step = 0;
};

// Ordered annotation log. Rejects duplicate questions, tracks the exact
// total charged.
class AllocationSet {
  public:
    void add(AllocationEntry entry);
    bool contains_question(const std::string& question_id) const {
        return question_ids_.count(question_id) != 0;
    }
    const std::vector<AllocationEntry>& entries() const { return entries_; }
    Money total_cost() const { return total_cost_; }
    std::size_t size() const { return entries_.size(); }

  private:
    std::vector<AllocationEntry> entries_;
    std::unordered_set<std::string> question_ids_;
    Money total_cost_ = Money::from_cents(0);
};

struct Dataset {
    std::vector<QuestionRecord> questions;
    std::vector<ExpertProfile> experts;
    std::vector<PositivePair> positives;
    CapabilityMatrix capability;
    std::size_t dimension = 0;

    std::unordered_map<std::string, int> question_index;
    std::unordered_map<std::string, int> expert_index;

    // Rebuilds the id maps, per-split lists, and the positive-cell set.
    // Call after mutating records.
    void rebuild_index();

    const std::vector<int>& split_indices(Split s) const { return splits_[static_cast<int>(s)]; }
    bool is_positive(int expert, int question) const {
        return positive_cells_.count(cell_key(expert, question)) != 0;
    }

  private:
    std::uint64_t cell_key(int expert, int question) const {
        return static_cast<std::uint64_t>(expert) * questions.size() +
               static_cast<std::uint64_t>(question);
    }
    std::vector<int> splits_[3];
    std::unordered_set<std::uint64_t> positive_cells_;
};

struct LoadConfig {
    std::size_t expected_dimension = 0;  // 0: accept the embedding file's D
    std::string capability_path;         // optional; else build one separately
};

// Ingest questions (JSON lines), experts (JSON lines), and embeddings
// (binary, magic "BFEM"). Either returns a fully validated dataset or
// throws an ingestion error naming the offending record.
Dataset load_dataset(const std::string& questions_path, const std::string& experts_path,
                     const std::string& embeddings_path, const LoadConfig& config = {});

// Rank a cohort by descending impact_factor_sum (ties: ascending id) and
// assign ladder prices in order. Returns the cohort in ranked order.
std::vector<ExpertProfile> assign_unit_prices(std::vector<ExpertProfile> cohort,
                                              const std::vector<Money>& price_ladder);

struct CapabilityPolicy {
    enum class Kind { from_file, similarity_threshold };
    Kind kind = Kind::similarity_threshold;
    std::string path;
    double tau = 0.5;

    static CapabilityPolicy from_file(std::string p) {
        CapabilityPolicy policy;
        policy.kind = Kind::from_file;
        policy.path = std::move(p);
        return policy;
    }
    static CapabilityPolicy similarity_threshold(double tau) {
        CapabilityPolicy policy;
        policy.kind = Kind::similarity_threshold;
        policy.tau = tau;
        return policy;
    }
};

// Positive pairs are forced to 1 in the result; a file matrix that
// contradicts a positive is rejected.
CapabilityMatrix build_capability_matrix(const Dataset& dataset, const CapabilityPolicy& policy);

// Emit questions.jsonl, experts.jsonl, embeddings.bin, capability.json
// into dir. Byte-deterministic for a fixed dataset.
void write_dataset_files(const Dataset& dataset, const std::string& dir);

// Paths of the four files write_dataset_files produces under dir.
struct DatasetPaths {
    std::string questions, experts, embeddings, capability;
};
DatasetPaths dataset_paths(const std::string& dir);

}  // namespace bf
