#include "bf/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace bf {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double d = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return d;
    } catch (const std::exception&) {
        throw Error::config("config key '" + key + "': cannot parse '" + value + "' as a number");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw Error::config("config key '" + key + "': cannot parse '" + value + "' as an integer");
    }
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(value);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string format_double(double d) {
    // shortest round-trip representation, stable across runs
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), d);
    (void)ec;
    return std::string(buf, ptr);
}

template <class T>
std::string join_list(const std::vector<T>& v, const std::function<std::string(const T&)>& fmt) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += fmt(v[i]);
    }
    return out;
}

}  // namespace

std::map<std::string, std::string> parse_config_document(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error::config("config file not found: " + path);
    std::map<std::string, std::string> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') continue;  // sections are cosmetic
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw Error::config(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw Error::config(path + ":" + std::to_string(lineno) + ": empty key");
        if (!entries.emplace(key, value).second)
            throw Error::config(path + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                                "'");
    }
    return entries;
}

void apply_config_entries(const std::map<std::string, std::string>& entries, RunConfig& c) {
    for (const auto& [key, value] : entries) {
        if (key == "questions_file") c.questions_file = value;
        else if (key == "experts_file") c.experts_file = value;
        else if (key == "embeddings_file") c.embeddings_file = value;
        else if (key == "capability_file") c.capability_file = value;
        else if (key == "topics") c.topics = static_cast<int>(parse_int(key, value));
        else if (key == "questions") c.questions = static_cast<int>(parse_int(key, value));
        else if (key == "experts") c.experts = static_cast<int>(parse_int(key, value));
        else if (key == "dim") c.dim = static_cast<int>(parse_int(key, value));
        else if (key == "tau") c.tau = parse_double(key, value);
        else if (key == "train_fraction") c.train_fraction = parse_double(key, value);
        else if (key == "dev_fraction") c.dev_fraction = parse_double(key, value);
        else if (key == "budget") c.budget = parse_double(key, value);
        else if (key == "agents") c.agents = static_cast<int>(parse_int(key, value));
        else if (key == "cohort") c.cohort = static_cast<int>(parse_int(key, value));
        else if (key == "ladder") {
            c.ladder.clear();
            for (const std::string& item : split_list(value))
                c.ladder.push_back(parse_double(key, item));
        } else if (key == "alpha") c.alpha = parse_double(key, value);
        else if (key == "gamma") c.gamma = parse_double(key, value);
        else if (key == "eps_start") c.eps_start = parse_double(key, value);
        else if (key == "eps_end") c.eps_end = parse_double(key, value);
        else if (key == "eps_fraction") c.eps_fraction = parse_double(key, value);
        else if (key == "epochs") c.epochs = static_cast<int>(parse_int(key, value));
        else if (key == "matcher_batch") c.matcher_batch = static_cast<int>(parse_int(key, value));
        else if (key == "matcher_lr") c.matcher_lr = parse_double(key, value);
        else if (key == "matcher_hidden") c.matcher_hidden = static_cast<int>(parse_int(key, value));
        else if (key == "prior") c.prior = parse_double(key, value);
        else if (key == "episodes") c.episodes = static_cast<int>(parse_int(key, value));
        else if (key == "qnet_lr") c.qnet_lr = parse_double(key, value);
        else if (key == "qnet_hidden") c.qnet_hidden = static_cast<int>(parse_int(key, value));
        else if (key == "qnet_restarts") c.qnet_restarts = static_cast<int>(parse_int(key, value));
        else if (key == "qnet_rollouts") c.qnet_rollouts = static_cast<int>(parse_int(key, value));
        else if (key == "replay_capacity")
            c.replay_capacity = static_cast<int>(parse_int(key, value));
        else if (key == "replay_batch") c.replay_batch = static_cast<int>(parse_int(key, value));
        else if (key == "replay_warmup") c.replay_warmup = static_cast<int>(parse_int(key, value));
        else if (key == "sync_period") c.sync_period = static_cast<int>(parse_int(key, value));
        else if (key == "oracle_sigma") c.oracle_sigma = parse_double(key, value);
        else if (key == "oracle_mode") c.oracle_mode = value;
        else if (key == "oracle_noise") c.oracle_noise = parse_double(key, value);
        else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, value));
        else if (key == "seeds") {
            c.seeds.clear();
            for (const std::string& item : split_list(value))
                c.seeds.push_back(static_cast<std::uint64_t>(parse_int(key, item)));
        } else if (key == "out") c.out = value;
        else if (key == "checkpoints") c.checkpoints = value;
        else if (key == "methods") c.methods = split_list(value);
        else if (key == "budgets") {
            c.budgets.clear();
            for (const std::string& item : split_list(value))
                c.budgets.push_back(parse_double(key, item));
        } else {
            throw Error::config("unknown config key '" + key + "'");
        }
    }
}

std::string serialize_config(const RunConfig& c) {
    auto fmt_d = [](const double& d) { return format_double(d); };
    auto fmt_u = [](const std::uint64_t& u) { return std::to_string(u); };
    auto fmt_s = [](const std::string& s) { return s; };
    std::ostringstream out;
    out << "agents = " << c.agents << "\n";
    out << "alpha = " << format_double(c.alpha) << "\n";
    out << "budget = " << format_double(c.budget) << "\n";
    out << "budgets = " << join_list<double>(c.budgets, fmt_d) << "\n";
    out << "capability_file = " << c.capability_file << "\n";
    out << "checkpoints = " << c.checkpoints << "\n";
    out << "cohort = " << c.cohort << "\n";
    out << "dev_fraction = " << format_double(c.dev_fraction) << "\n";
    out << "dim = " << c.dim << "\n";
    out << "embeddings_file = " << c.embeddings_file << "\n";
    out << "epochs = " << c.epochs << "\n";
    out << "eps_end = " << format_double(c.eps_end) << "\n";
    out << "eps_fraction = " << format_double(c.eps_fraction) << "\n";
    out << "eps_start = " << format_double(c.eps_start) << "\n";
    out << "episodes = " << c.episodes << "\n";
    out << "experts = " << c.experts << "\n";
    out << "experts_file = " << c.experts_file << "\n";
    out << "gamma = " << format_double(c.gamma) << "\n";
    out << "ladder = " << join_list<double>(c.ladder, fmt_d) << "\n";
    out << "matcher_batch = " << c.matcher_batch << "\n";
    out << "matcher_hidden = " << c.matcher_hidden << "\n";
    out << "matcher_lr = " << format_double(c.matcher_lr) << "\n";
    out << "methods = " << join_list<std::string>(c.methods, fmt_s) << "\n";
    out << "oracle_mode = " << c.oracle_mode << "\n";
    out << "oracle_noise = " << format_double(c.oracle_noise) << "\n";
    out << "oracle_sigma = " << format_double(c.oracle_sigma) << "\n";
    out << "prior = " << format_double(c.prior) << "\n";
    out << "qnet_hidden = " << c.qnet_hidden << "\n";
    out << "qnet_lr = " << format_double(c.qnet_lr) << "\n";
    out << "qnet_restarts = " << c.qnet_restarts << "\n";
    out << "qnet_rollouts = " << c.qnet_rollouts << "\n";
    out << "questions = " << c.questions << "\n";
    out << "questions_file = " << c.questions_file << "\n";
    out << "replay_batch = " << c.replay_batch << "\n";
    out << "replay_capacity = " << c.replay_capacity << "\n";
    out << "replay_warmup = " << c.replay_warmup << "\n";
    out << "seed = " << c.seed << "\n";
    out << "seeds = " << join_list<std::uint64_t>(c.seeds, fmt_u) << "\n";
    out << "sync_period = " << c.sync_period << "\n";
    out << "tau = " << format_double(c.tau) << "\n";
    out << "topics = " << c.topics << "\n";
    out << "train_fraction = " << format_double(c.train_fraction) << "\n";
    return out.str();
}

void validate_config(const RunConfig& c) {
    if (!(c.budget > 0.0)) throw Error::config("budget must be positive");
    if (c.seeds.empty()) throw Error::config("seeds list must be nonempty");
    if (c.ladder.empty()) throw Error::config("price ladder must be nonempty");
    if (static_cast<int>(c.ladder.size()) != c.cohort)
        throw Error::config("ladder length " + std::to_string(c.ladder.size()) +
                            " != cohort size " + std::to_string(c.cohort));
    for (double p : c.ladder)
        if (!(p > 0.0)) throw Error::config("ladder prices must be positive");
    if (c.agents < 1) throw Error::config("agents must be >= 1");
    if (!(c.prior > 0.0 && c.prior < 1.0)) throw Error::config("prior must lie in (0, 1)");
    if (!(c.gamma >= 0.0 && c.gamma < 1.0)) throw Error::config("gamma must lie in [0, 1)");
    if (c.oracle_mode != "coverage" && c.oracle_mode != "noisy_coverage")
        throw Error::config("oracle_mode must be coverage or noisy_coverage");
    const bool any_file = !c.questions_file.empty() || !c.experts_file.empty() ||
                          !c.embeddings_file.empty();
    const bool all_files = !c.questions_file.empty() && !c.experts_file.empty() &&
                           !c.embeddings_file.empty();
    if (any_file && !all_files)
        throw Error::config("questions_file, experts_file, and embeddings_file go together");
    // missing files surface as ingestion errors at load time
}

std::vector<Money> ladder_cents(const RunConfig& c) {
    std::vector<Money> out;
    out.reserve(c.ladder.size());
    for (double d : c.ladder) out.push_back(Money::from_dollars(d));
    return out;
}

SyntheticConfig synthetic_config(const RunConfig& c) {
    SyntheticConfig s;
    s.topics = c.topics;
    s.questions = c.questions;
    s.experts = c.experts;
    s.dimension = static_cast<std::size_t>(c.dim);
    s.tau = c.tau;
    s.train_fraction = c.train_fraction;
    s.dev_fraction = c.dev_fraction;
    s.seed = c.seed;
    return s;
}

AllocatorConfig allocator_config(const RunConfig& c) {
    AllocatorConfig a;
    a.agents = c.agents;
    a.cohort_size = c.cohort;
    a.ladder = ladder_cents(c);
    a.alpha = c.alpha;
    a.gamma = c.gamma;
    a.eps_start = c.eps_start;
    a.eps_end = c.eps_end;
    a.eps_fraction = c.eps_fraction;
    a.episodes = c.episodes;
    a.replay_capacity = static_cast<std::size_t>(c.replay_capacity);
    a.replay_batch = c.replay_batch;
    a.replay_warmup = c.replay_warmup;
    a.sync_period = c.sync_period;
    a.lr = c.qnet_lr;
    a.qnet_hidden = c.qnet_hidden;
    a.restarts = c.qnet_restarts;
    a.selection_rollouts = c.qnet_rollouts;
    a.seed = c.seed;
    return a;
}

BaselineConfig baseline_config(const RunConfig& c) {
    BaselineConfig b;
    b.batch_size = c.agents;
    b.cohort_size = c.cohort;
    b.ladder = ladder_cents(c);
    return b;
}

MatcherTrainConfig matcher_train_config(const RunConfig& c) {
    MatcherTrainConfig m;
    m.epochs = c.epochs;
    m.batch_positives = c.matcher_batch / 2 > 0 ? c.matcher_batch / 2 : 1;
    m.batch_unlabeled = m.batch_positives;
    m.lr = c.matcher_lr;
    m.attention_cohort = c.cohort;  // train the attention on deployment-sized cohorts
    m.seed = c.seed;
    return m;
}

OracleConfig oracle_config(const RunConfig& c, const Dataset& dataset) {
    OracleConfig o;
    o.sigma = c.oracle_sigma > 0.0 ? c.oracle_sigma : default_oracle_sigma(dataset);
    o.mode = c.oracle_mode == "noisy_coverage" ? OracleConfig::Mode::noisy_coverage
                                               : OracleConfig::Mode::coverage;
    o.noise_sigma = c.oracle_noise;
    return o;
}

Dataset resolve_dataset(const RunConfig& c) {
    if (!c.questions_file.empty()) {
        LoadConfig lc;
        lc.capability_path = c.capability_file;
        Dataset ds = load_dataset(c.questions_file, c.experts_file, c.embeddings_file, lc);
        if (c.capability_file.empty())
            ds.capability =
                build_capability_matrix(ds, CapabilityPolicy::similarity_threshold(c.tau));
        return ds;
    }
    return generate_synthetic_world(synthetic_config(c));
}

std::string content_hash_bytes(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 0; i < 16; ++i) buf[15 - i] = hex[(h >> (4 * i)) & 0xF];
    buf[16] = '\0';
    return std::string(buf);
}

std::string content_hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error::io("cannot hash missing file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return content_hash_bytes(ss.str());
}

}  // namespace bf
