#include "bf/domain.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace bf {

using nlohmann::json;

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "dev") return Split::dev;
    if (s == "test") return Split::test;
    throw Error::ingestion("unknown split value '" + s + "'");
}

const char* split_to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    return "train";
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) throw Error::shape("cosine of mismatched dimensions");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double euclidean_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) throw Error::shape("distance of mismatched dimensions");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double CapabilityMatrix::density() const {
    if (bits_.empty()) return 0.0;
    std::size_t ones = 0;
    for (std::uint8_t b : bits_) ones += b;
    return static_cast<double>(ones) / static_cast<double>(bits_.size());
}

void AllocationSet::add(AllocationEntry entry) {
    if (!question_ids_.insert(entry.question_id).second)
        throw Error::state("question '" + entry.question_id + "' already annotated");
    total_cost_ += entry.cost;
    entries_.push_back(std::move(entry));
}

void Dataset::rebuild_index() {
    question_index.clear();
    expert_index.clear();
    positive_cells_.clear();
    for (auto& s : splits_) s.clear();

    for (std::size_t i = 0; i < questions.size(); ++i) {
        if (!question_index.emplace(questions[i].id, static_cast<int>(i)).second)
            throw Error::ingestion("duplicate question id '" + questions[i].id + "'");
        splits_[static_cast<int>(questions[i].split)].push_back(static_cast<int>(i));
    }
    for (std::size_t j = 0; j < experts.size(); ++j) {
        if (!expert_index.emplace(experts[j].id, static_cast<int>(j)).second)
            throw Error::ingestion("duplicate expert id '" + experts[j].id + "'");
    }
    for (const PositivePair& p : positives) {
        if (p.question < 0 || p.question >= static_cast<int>(questions.size()) ||
            p.expert < 0 || p.expert >= static_cast<int>(experts.size()))
            throw Error::ingestion("positive pair references unknown record");
        positive_cells_.insert(cell_key(p.expert, p.question));
    }
}

namespace {

json parse_json_line(const std::string& line, const std::string& path, std::size_t lineno) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
        throw Error::ingestion(path + ":" + std::to_string(lineno) + ": malformed JSON record");
    return j;
}

std::string require_string(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_string())
        throw Error::ingestion(where + ": missing string field '" + key + "'");
    return j[key].get<std::string>();
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

constexpr char kEmbMagic[4] = {'B', 'F', 'E', 'M'};
constexpr std::uint32_t kEmbVersion = 1;

std::uint32_t read_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

double read_f64(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double d;
    std::memcpy(&d, &u, 8);
    return d;
}

void write_f64(std::ofstream& out, double d) {
    std::uint64_t u;
    std::memcpy(&u, &d, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::unordered_map<std::string, EmbeddingVector> load_embeddings(const std::string& path,
                                                                 std::size_t& dimension) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error::ingestion("embeddings file not found: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kEmbMagic, 4) != 0)
        throw Error::ingestion("bad embeddings magic in " + path);
    std::uint32_t version = read_u32(in);
    if (version != kEmbVersion)
        throw Error::ingestion("unsupported embeddings version in " + path);
    std::uint32_t count = read_u32(in);
    std::uint32_t dim = read_u32(in);
    if (dim == 0) throw Error::ingestion("embeddings declare dimension 0 in " + path);
    dimension = dim;
    std::unordered_map<std::string, EmbeddingVector> out;
    out.reserve(count);
    for (std::uint32_t r = 0; r < count; ++r) {
        std::uint32_t id_len = read_u32(in);
        if (!in || id_len == 0 || id_len > 4096)
            throw Error::ingestion("corrupt embedding record " + std::to_string(r) + " in " + path);
        std::string id(id_len, '\0');
        in.read(id.data(), id_len);
        EmbeddingVector v(dim);
        for (std::uint32_t k = 0; k < dim; ++k) v[k] = read_f64(in);
        if (!in) throw Error::ingestion("truncated embeddings file: " + path);
        for (double x : v)
            if (!std::isfinite(x))
                throw Error::ingestion("non-finite embedding for '" + id + "' in " + path);
        if (!out.emplace(std::move(id), std::move(v)).second)
            throw Error::ingestion("duplicate embedding id in " + path);
    }
    return out;
}

void write_embeddings(const std::string& path,
                      const std::vector<std::pair<std::string, const EmbeddingVector*>>& records,
                      std::size_t dimension) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error::io("cannot write embeddings file: " + path);
    out.write(kEmbMagic, 4);
    write_u32(out, kEmbVersion);
    write_u32(out, static_cast<std::uint32_t>(records.size()));
    write_u32(out, static_cast<std::uint32_t>(dimension));
    for (const auto& [id, vec] : records) {
        write_u32(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        for (double d : *vec) write_f64(out, d);
    }
    if (!out) throw Error::io("embeddings write failed: " + path);
}

}  // namespace

Dataset load_dataset(const std::string& questions_path, const std::string& experts_path,
                     const std::string& embeddings_path, const LoadConfig& config) {
    Dataset ds;
    std::size_t file_dim = 0;
    auto embeddings = load_embeddings(embeddings_path, file_dim);
    if (config.expected_dimension != 0 && config.expected_dimension != file_dim)
        throw Error::ingestion("embeddings dimension " + std::to_string(file_dim) +
                               " != configured dimension " +
                               std::to_string(config.expected_dimension));
    ds.dimension = file_dim;

    std::ifstream ein(experts_path);
    if (!ein) throw Error::ingestion("experts file not found: " + experts_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ein, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = parse_json_line(line, experts_path, lineno);
        ExpertProfile e;
        e.id = require_string(j, "id", experts_path + ":" + std::to_string(lineno));
        if (!j.contains("publications") || !j["publications"].is_array())
            throw Error::ingestion("expert '" + e.id + "': missing publications array");
        for (const auto& p : j["publications"]) e.publication_ids.push_back(p.get<std::string>());
        e.publication_ids = sorted_unique(std::move(e.publication_ids));
        if (e.publication_ids.empty())
            throw Error::ingestion("expert '" + e.id + "' has zero publications");
        if (!j.contains("impact_factor_sum") || !j["impact_factor_sum"].is_number())
            throw Error::ingestion("expert '" + e.id + "': missing impact_factor_sum");
        e.impact_factor_sum = j["impact_factor_sum"].get<double>();
        if (!(e.impact_factor_sum >= 0.0))
            throw Error::ingestion("expert '" + e.id + "': negative impact_factor_sum");
        ds.experts.push_back(std::move(e));
    }

    std::ifstream qin(questions_path);
    if (!qin) throw Error::ingestion("questions file not found: " + questions_path);
    lineno = 0;
    while (std::getline(qin, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = parse_json_line(line, questions_path, lineno);
        QuestionRecord q;
        const std::string where = questions_path + ":" + std::to_string(lineno);
        q.id = require_string(j, "id", where);
        q.question = j.value("question", std::string{});
        q.answer = j.value("answer", std::string{});
        q.source_publication = require_string(j, "source_publication", where);
        if (!j.contains("authors") || !j["authors"].is_array())
            throw Error::ingestion("question '" + q.id + "': missing authors array");
        for (const auto& a : j["authors"]) q.author_ids.push_back(a.get<std::string>());
        q.author_ids = sorted_unique(std::move(q.author_ids));
        q.split = split_from_string(require_string(j, "split", where));
        ds.questions.push_back(std::move(q));
    }

    // Attach embeddings. Experts may carry their own record or be derived
    // as the mean of their publications' records.
    for (QuestionRecord& q : ds.questions) {
        auto it = embeddings.find(q.id);
        if (it == embeddings.end())
            throw Error::ingestion("question '" + q.id + "' has no embedding record");
        q.embedding = it->second;
    }
    for (ExpertProfile& e : ds.experts) {
        bool all_pubs = true;
        for (const std::string& p : e.publication_ids)
            if (!embeddings.count(p)) { all_pubs = false; break; }
        if (all_pubs) {
            EmbeddingVector mean(ds.dimension, 0.0);
            for (const std::string& p : e.publication_ids) {
                const EmbeddingVector& v = embeddings.at(p);
                for (std::size_t k = 0; k < ds.dimension; ++k) mean[k] += v[k];
            }
            for (double& x : mean) x /= static_cast<double>(e.publication_ids.size());
            e.embedding = std::move(mean);
        } else {
            auto it = embeddings.find(e.id);
            if (it == embeddings.end())
                throw Error::ingestion("expert '" + e.id +
                                       "' has neither an embedding record nor publication embeddings");
            e.embedding = it->second;
        }
    }

    ds.rebuild_index();

    // Referential integrity, then positives from authorship.
    for (std::size_t i = 0; i < ds.questions.size(); ++i) {
        const QuestionRecord& q = ds.questions[i];
        for (const std::string& a : q.author_ids) {
            auto it = ds.expert_index.find(a);
            if (it == ds.expert_index.end())
                throw Error::ingestion("question '" + q.id + "' cites unknown author id '" + a + "'");
            ds.positives.push_back({static_cast<int>(i), it->second});
        }
        for (std::size_t jx = 0; jx < ds.experts.size(); ++jx) {
            const ExpertProfile& e = ds.experts[jx];
            if (std::binary_search(e.publication_ids.begin(), e.publication_ids.end(),
                                   q.source_publication) &&
                !std::binary_search(q.author_ids.begin(), q.author_ids.end(), e.id))
                ds.positives.push_back({static_cast<int>(i), static_cast<int>(jx)});
        }
    }
    std::sort(ds.positives.begin(), ds.positives.end(), [](const auto& a, const auto& b) {
        return a.question != b.question ? a.question < b.question : a.expert < b.expert;
    });
    ds.positives.erase(std::unique(ds.positives.begin(), ds.positives.end(),
                                   [](const auto& a, const auto& b) {
                                       return a.question == b.question && a.expert == b.expert;
                                   }),
                       ds.positives.end());
    ds.rebuild_index();

    if (!config.capability_path.empty())
        ds.capability = build_capability_matrix(ds, CapabilityPolicy::from_file(config.capability_path));
    return ds;
}

std::vector<ExpertProfile> assign_unit_prices(std::vector<ExpertProfile> cohort,
                                              const std::vector<Money>& price_ladder) {
    if (price_ladder.size() != cohort.size())
        throw Error::config("price ladder length " + std::to_string(price_ladder.size()) +
                            " != cohort size " + std::to_string(cohort.size()));
    for (Money m : price_ladder)
        if (m.cents <= 0) throw Error::config("price ladder entries must be positive");
    std::sort(cohort.begin(), cohort.end(), [](const ExpertProfile& a, const ExpertProfile& b) {
        if (a.impact_factor_sum != b.impact_factor_sum)
            return a.impact_factor_sum > b.impact_factor_sum;
        return a.id < b.id;
    });
    for (std::size_t r = 0; r < cohort.size(); ++r) cohort[r].unit_price = price_ladder[r];
    return cohort;
}

CapabilityMatrix build_capability_matrix(const Dataset& dataset, const CapabilityPolicy& policy) {
    CapabilityMatrix m(dataset.experts.size(), dataset.questions.size());
    if (policy.kind == CapabilityPolicy::Kind::similarity_threshold) {
        for (std::size_t j = 0; j < dataset.experts.size(); ++j)
            for (std::size_t i = 0; i < dataset.questions.size(); ++i)
                if (cosine_similarity(dataset.experts[j].embedding,
                                      dataset.questions[i].embedding) >= policy.tau)
                    m.set(j, i, true);
    } else {
        std::ifstream in(policy.path);
        if (!in) throw Error::ingestion("capability file not found: " + policy.path);
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded()) throw Error::ingestion("malformed capability JSON: " + policy.path);
        const auto& experts = j.at("experts");
        const auto& questions = j.at("questions");
        const auto& bits = j.at("bits");
        if (bits.size() != experts.size() * questions.size())
            throw Error::ingestion("capability bits length != experts x questions");
        for (std::size_t r = 0; r < experts.size(); ++r) {
            auto eit = dataset.expert_index.find(experts[r].get<std::string>());
            if (eit == dataset.expert_index.end())
                throw Error::ingestion("capability file names unknown expert '" +
                                       experts[r].get<std::string>() + "'");
            for (std::size_t c = 0; c < questions.size(); ++c) {
                auto qit = dataset.question_index.find(questions[c].get<std::string>());
                if (qit == dataset.question_index.end())
                    throw Error::ingestion("capability file names unknown question '" +
                                           questions[c].get<std::string>() + "'");
                int bit = bits[r * questions.size() + c].get<int>();
                if (bit != 0 && bit != 1) throw Error::ingestion("capability bits must be 0/1");
                m.set(static_cast<std::size_t>(eit->second), static_cast<std::size_t>(qit->second),
                      bit == 1);
            }
        }
        for (const PositivePair& p : dataset.positives)
            if (!m.at(static_cast<std::size_t>(p.expert), static_cast<std::size_t>(p.question)))
                throw Error::ingestion("capability file marks positive pair (" +
                                       dataset.questions[p.question].id + ", " +
                                       dataset.experts[p.expert].id + ") as incapable");
    }
    // positives are capable by construction
    for (const PositivePair& p : dataset.positives)
        m.set(static_cast<std::size_t>(p.expert), static_cast<std::size_t>(p.question), true);
    return m;
}

DatasetPaths dataset_paths(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::path base(dir);
    return {(base / "questions.jsonl").string(), (base / "experts.jsonl").string(),
            (base / "embeddings.bin").string(), (base / "capability.json").string()};
}

void write_dataset_files(const Dataset& dataset, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    DatasetPaths paths = dataset_paths(dir);

    {
        std::ofstream out(paths.questions, std::ios::trunc);
        if (!out) throw Error::io("cannot write " + paths.questions);
        for (const QuestionRecord& q : dataset.questions) {
            json j;
            j["id"] = q.id;
            j["question"] = q.question;
            j["answer"] = q.answer;
            j["source_publication"] = q.source_publication;
            j["authors"] = q.author_ids;
            j["split"] = split_to_string(q.split);
            out << j.dump() << '\n';
        }
    }
    {
        std::ofstream out(paths.experts, std::ios::trunc);
        if (!out) throw Error::io("cannot write " + paths.experts);
        for (const ExpertProfile& e : dataset.experts) {
            json j;
            j["id"] = e.id;
            j["publications"] = e.publication_ids;
            j["impact_factor_sum"] = e.impact_factor_sum;
            out << j.dump() << '\n';
        }
    }
    {
        std::vector<std::pair<std::string, const EmbeddingVector*>> records;
        records.reserve(dataset.questions.size() + dataset.experts.size());
        for (const QuestionRecord& q : dataset.questions) records.emplace_back(q.id, &q.embedding);
        for (const ExpertProfile& e : dataset.experts) records.emplace_back(e.id, &e.embedding);
        write_embeddings(paths.embeddings, records, dataset.dimension);
    }
    {
        json j;
        std::vector<std::string> eids, qids;
        for (const ExpertProfile& e : dataset.experts) eids.push_back(e.id);
        for (const QuestionRecord& q : dataset.questions) qids.push_back(q.id);
        j["experts"] = eids;
        j["questions"] = qids;
        std::vector<int> bits(dataset.capability.bits().begin(), dataset.capability.bits().end());
        j["bits"] = bits;
        std::ofstream out(paths.capability, std::ios::trunc);
        if (!out) throw Error::io("cannot write " + paths.capability);
        out << j.dump(2) << '\n';
    }
}

}  // namespace bf
