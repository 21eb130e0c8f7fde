#include "bf/cli.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

namespace bf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const std::string& dir) {
    if (dir.empty()) throw Error::config("--out directory is required");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error::io("cannot create output directory: " + dir);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw Error::io("cannot write " + path);
    out << text;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Config snapshot plus content hashes of every input the run depends on.
void persist_run_stamp(const RunConfig& config, const std::string& out_dir) {
    std::string snapshot = serialize_config(config);
    write_text((fs::path(out_dir) / "config_snapshot.txt").string(), snapshot);
    std::ostringstream hashes;
    hashes << "config " << content_hash_bytes(snapshot) << "\n";
    for (const std::string& p : {config.questions_file, config.experts_file,
                                 config.embeddings_file, config.capability_file})
        if (!p.empty()) hashes << p << " " << content_hash_file(p) << "\n";
    write_text((fs::path(out_dir) / "inputs_hash.txt").string(), hashes.str());
}

std::string checkpoints_dir(const RunConfig& config) {
    return config.checkpoints.empty() ? config.out : config.checkpoints;
}

struct MethodStats {
    std::string method;
    std::vector<double> scores;
    double mean = 0.0;
    double std_dev = 0.0;
};

MethodStats summarize(const std::string& method, const std::vector<double>& scores) {
    MethodStats s;
    s.method = method;
    s.scores = scores;
    for (double v : scores) s.mean += v;
    s.mean /= scores.empty() ? 1.0 : static_cast<double>(scores.size());
    if (scores.size() > 1) {
        double acc = 0.0;
        for (double v : scores) acc += (v - s.mean) * (v - s.mean);
        s.std_dev = std::sqrt(acc / static_cast<double>(scores.size() - 1));
    }
    return s;
}

void check_methods(const std::vector<std::string>& methods) {
    if (methods.empty()) throw Error::config("methods list must be nonempty");
    for (const std::string& m : methods)
        if (m != "pu_adka" && m != "random" && m != "cost_greedy" && m != "match_greedy")
            throw Error::config("unknown method '" + m + "'");
}

bool wants_pu_adka(const std::vector<std::string>& methods) {
    for (const std::string& m : methods)
        if (m == "pu_adka") return true;
    return false;
}

EpisodeReport run_method(const std::string& method, const Dataset& dataset,
                         const MatcherModel* matcher, const QNetPair* nets,
                         const OracleConfig& oracle, Money budget, const RunConfig& config,
                         std::uint64_t seed) {
    if (method == "pu_adka") {
        if (!matcher || !nets) throw Error::state("pu_adka requires trained checkpoints");
        return run_policy(dataset, *matcher, *nets, oracle, budget, allocator_config(config), seed);
    }
    StrategySpec spec;
    spec.expert_allocation = expert_allocation_from_string(method);
    spec.seed = seed;
    return run_baseline(dataset, spec, oracle, budget, baseline_config(config));
}

unsigned sweep_thread_cap(std::size_t cells) {
    unsigned hw = std::thread::hardware_concurrency();
    unsigned threads = hw == 0 ? 1 : hw;
    if (const char* env = std::getenv("BUDGETFORGE_THREADS")) {
        char* end = nullptr;
        unsigned long v = std::strtoul(env, &end, 10);
        if (end == env || *end != '\0' || v == 0)
            throw Error::config("BUDGETFORGE_THREADS must be a positive integer");
        threads = std::min<unsigned long>(threads, v);
    }
    return static_cast<unsigned>(std::min<std::size_t>(threads, cells == 0 ? 1 : cells));
}

}  // namespace

void cmd_gen(const RunConfig& config) {
    validate_config(config);
    ensure_dir(config.out);
    Dataset ds = generate_synthetic_world(synthetic_config(config));
    write_dataset_files(ds, config.out);
    persist_run_stamp(config, config.out);

    DatasetPaths paths = dataset_paths(config.out);
    std::size_t n_train = ds.split_indices(Split::train).size();
    std::size_t n_dev = ds.split_indices(Split::dev).size();
    std::size_t n_test = ds.split_indices(Split::test).size();
    std::cout << "wrote " << paths.questions << " (" << ds.questions.size() << " questions: "
              << n_train << " train / " << n_dev << " dev / " << n_test << " test)\n"
              << "wrote " << paths.experts << " (" << ds.experts.size() << " experts)\n"
              << "wrote " << paths.embeddings << " (dimension " << ds.dimension << ")\n"
              << "wrote " << paths.capability << " (density "
              << ds.capability.density() << ", " << ds.positives.size() << " positive pairs)\n";
}

void cmd_train(const RunConfig& config) {
    validate_config(config);
    ensure_dir(config.out);
    Dataset ds = resolve_dataset(config);
    OracleConfig oracle = oracle_config(config, ds);
    persist_run_stamp(config, config.out);

    Rng init_rng(mix_seed(config.seed, 0x3A7C));
    MatcherModel matcher = make_matcher(ds.dimension, config.matcher_hidden, config.prior, init_rng);
    MatcherTrainReport mreport = train_matcher(matcher, ds, matcher_train_config(config));
    fs::path base(config.out);
    save_matcher(matcher, (base / "matcher").string(), config.seed);
    write_json((base / "matcher_train.json").string(),
               json{{"epoch_loss", mreport.epoch_loss},
                    {"restart_selection", mreport.restart_selection},
                    {"selected_restart", mreport.selected_restart}});

    AllocatorTrainResult aresult =
        train_allocator(ds, matcher, oracle, Money::from_dollars(config.budget),
                        allocator_config(config));
    save_qnets(aresult.nets, (base / "qnet").string(), config.seed);
    json episodes = json::array();
    for (const EpisodeSummary& e : aresult.report.episodes)
        episodes.push_back({{"episode", e.episode},
                            {"epsilon", e.epsilon},
                            {"steps", e.steps},
                            {"annotations", e.annotations},
                            {"reward_sum", e.reward_sum},
                            {"final_dev_score", e.final_dev_score}});
    write_json((base / "allocator_train.json").string(),
               json{{"episodes", episodes},
                    {"loss_trace", aresult.report.loss_trace},
                    {"epsilon_schedule", aresult.report.epsilon_schedule},
                    {"restart_selection", aresult.report.restart_selection},
                    {"selected_restart", aresult.report.selected_restart}});
    std::cout << "trained matcher (" << mreport.epoch_loss.size() << " epochs) and allocator ("
              << aresult.report.episodes.size() << " episodes) -> " << config.out << "\n";
}

void cmd_evaluate(const RunConfig& config) {
    validate_config(config);
    check_methods(config.methods);
    ensure_dir(config.out);
    Dataset ds = resolve_dataset(config);
    OracleConfig oracle = oracle_config(config, ds);
    persist_run_stamp(config, config.out);

    MatcherModel matcher;
    QNetPair nets;
    bool have_checkpoints = false;
    if (wants_pu_adka(config.methods)) {
        fs::path ckpt(checkpoints_dir(config));
        matcher = load_matcher((ckpt / "matcher").string());
        nets = load_qnets((ckpt / "qnet").string());
        have_checkpoints = true;
    }

    fs::path reports_dir = fs::path(config.out) / "reports";
    ensure_dir(reports_dir.string());

    std::vector<MethodStats> table;
    for (const std::string& method : config.methods) {
        std::vector<double> scores;
        for (std::uint64_t seed : config.seeds) {
            EpisodeReport report = run_method(method, ds, have_checkpoints ? &matcher : nullptr,
                                              have_checkpoints ? &nets : nullptr, oracle,
                                              Money::from_dollars(config.budget), config, seed);
            save_episode_report(report,
                                (reports_dir / (method + "_seed" + std::to_string(seed) + ".json"))
                                    .string());
            scores.push_back(report.final_score);
        }
        table.push_back(summarize(method, scores));
    }

    json rows = json::array();
    for (const MethodStats& s : table)
        rows.push_back({{"method", s.method},
                        {"mean", s.mean},
                        {"std", s.std_dev},
                        {"scores", s.scores},
                        {"seeds", config.seeds}});
    write_json((fs::path(config.out) / "comparison.json").string(), json{{"rows", rows}});

    std::ostringstream txt;
    char line[128];
    std::snprintf(line, sizeof(line), "%-14s %12s %12s %6s\n", "method", "mean", "std", "runs");
    txt << line;
    for (const MethodStats& s : table) {
        std::snprintf(line, sizeof(line), "%-14s %12.6f %12.6f %6zu\n", s.method.c_str(), s.mean,
                      s.std_dev, s.scores.size());
        txt << line;
    }
    write_text((fs::path(config.out) / "comparison.txt").string(), txt.str());
    std::cout << txt.str();
}

void cmd_sweep(const RunConfig& config) {
    validate_config(config);
    check_methods(config.methods);
    if (config.budgets.empty()) throw Error::config("sweep needs a budgets list");
    for (std::size_t i = 0; i < config.budgets.size(); ++i) {
        if (config.budgets[i] < 0.0) throw Error::config("sweep budgets must be nonnegative");
        if (i > 0 && config.budgets[i] <= config.budgets[i - 1])
            throw Error::config("sweep budgets must be strictly ascending (duplicate or "
                                "out-of-order value)");
    }
    ensure_dir(config.out);
    Dataset ds = resolve_dataset(config);
    OracleConfig oracle = oracle_config(config, ds);
    persist_run_stamp(config, config.out);

    MatcherModel matcher;
    QNetPair nets;
    bool have_checkpoints = false;
    if (wants_pu_adka(config.methods)) {
        fs::path ckpt(checkpoints_dir(config));
        matcher = load_matcher((ckpt / "matcher").string());
        nets = load_qnets((ckpt / "qnet").string());
        have_checkpoints = true;
    }

    fs::path reports_dir = fs::path(config.out) / "reports";
    ensure_dir(reports_dir.string());

    struct Cell {
        double budget;
        std::string method;
        std::uint64_t seed;
        double score = 0.0;
        bool failed = false;
        std::string error;
    };
    std::vector<Cell> cells;
    for (double b : config.budgets)
        for (const std::string& m : config.methods)
            for (std::uint64_t s : config.seeds) cells.push_back({b, m, s, 0.0, false, {}});

    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        while (true) {
            std::size_t k = cursor.fetch_add(1);
            if (k >= cells.size()) return;
            Cell& cell = cells[k];
            try {
                EpisodeReport report = run_method(
                    cell.method, ds, have_checkpoints ? &matcher : nullptr,
                    have_checkpoints ? &nets : nullptr, oracle, Money::from_dollars(cell.budget),
                    config, cell.seed);
                cell.score = report.final_score;
                std::string name = cell.method + "_b" +
                                   std::to_string(Money::from_dollars(cell.budget).cents) +
                                   "_seed" + std::to_string(cell.seed) + ".json";
                save_episode_report(report, (reports_dir / name).string());
            } catch (const Error& e) {
                cell.failed = true;
                cell.error = e.what();
            }
        }
    };
    unsigned n_threads = sweep_thread_cap(cells.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (unsigned t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }

    std::ostringstream csv;
    csv << "budget,method,seed,score,status\n";
    for (const Cell& c : cells) {
        char line[160];
        std::snprintf(line, sizeof(line), "%.2f,%s,%llu,%.9f,%s\n", c.budget, c.method.c_str(),
                      static_cast<unsigned long long>(c.seed), c.score,
                      c.failed ? "failed" : "ok");
        csv << line;
    }
    write_text((fs::path(config.out) / "sweep.csv").string(), csv.str());

    json jcells = json::array();
    for (const Cell& c : cells) {
        json jc{{"budget", c.budget}, {"method", c.method}, {"seed", c.seed},
                {"status", c.failed ? "failed" : "ok"}};
        if (c.failed) jc["error"] = c.error;
        else jc["score"] = c.score;
        jcells.push_back(jc);
    }
    json aggregates = json::array();
    for (double b : config.budgets) {
        for (const std::string& m : config.methods) {
            std::vector<double> scores;
            bool any_failed = false;
            for (const Cell& c : cells)
                if (c.budget == b && c.method == m) {
                    if (c.failed) any_failed = true;
                    else scores.push_back(c.score);
                }
            MethodStats s = summarize(m, scores);
            aggregates.push_back({{"budget", b},
                                  {"method", m},
                                  {"mean", s.mean},
                                  {"std", s.std_dev},
                                  {"runs", scores.size()},
                                  {"failed", any_failed}});
        }
    }
    write_json((fs::path(config.out) / "sweep.json").string(),
               json{{"cells", jcells}, {"aggregates", aggregates}});

    std::size_t failed = 0;
    for (const Cell& c : cells) failed += c.failed ? 1 : 0;
    std::cout << "sweep: " << cells.size() << " cells (" << failed << " failed) -> " << config.out
              << "\n";
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return 2;
        case ErrorKind::ingestion: return 3;
        case ErrorKind::state: return 4;
        case ErrorKind::training: return 5;
        default: return 1;
    }
}

namespace {

struct RawLists {
    std::string ladder, seeds, budgets, methods;
};

void add_common_options(CLI::App* sub, RunConfig& config, RawLists& raw, std::string& config_path) {
    sub->add_option("--config", config_path, "key = value config document; flags override it");
    sub->add_option("--questions_file", config.questions_file, "questions JSON-lines file");
    sub->add_option("--experts_file", config.experts_file, "experts JSON-lines file");
    sub->add_option("--embeddings_file", config.embeddings_file, "binary embeddings file");
    sub->add_option("--capability_file", config.capability_file, "capability matrix JSON file");
    sub->add_option("--topics", config.topics, "synthetic world: topic count");
    sub->add_option("--questions", config.questions, "synthetic world: question count");
    sub->add_option("--experts", config.experts, "synthetic world: expert count");
    sub->add_option("--dim", config.dim, "synthetic world: embedding dimension");
    sub->add_option("--tau", config.tau, "capability cosine threshold");
    sub->add_option("--train_fraction", config.train_fraction, "train split fraction");
    sub->add_option("--dev_fraction", config.dev_fraction, "dev split fraction");
    sub->add_option("--budget", config.budget, "annotation budget B0 in dollars (mandatory input)");
    sub->add_option("--agents", config.agents, "agent count per iteration");
    sub->add_option("--cohort", config.cohort, "experts sampled per iteration");
    sub->add_option("--ladder", raw.ladder, "comma list of unit prices, rank order");
    sub->add_option("--alpha", config.alpha, "sampling-weight decay factor");
    sub->add_option("--gamma", config.gamma, "discount factor");
    sub->add_option("--eps_start", config.eps_start, "exploration start");
    sub->add_option("--eps_end", config.eps_end, "exploration floor");
    sub->add_option("--eps_fraction", config.eps_fraction, "fraction of training spent decaying");
    sub->add_option("--epochs", config.epochs, "matcher training epochs");
    sub->add_option("--matcher_batch", config.matcher_batch, "matcher batch size");
    sub->add_option("--matcher_lr", config.matcher_lr, "matcher learning rate");
    sub->add_option("--matcher_hidden", config.matcher_hidden, "matcher hidden width");
    sub->add_option("--prior", config.prior, "positive class prior");
    sub->add_option("--episodes", config.episodes, "allocator training episodes");
    sub->add_option("--qnet_lr", config.qnet_lr, "Q-network learning rate");
    sub->add_option("--qnet_hidden", config.qnet_hidden, "Q-network hidden width");
    sub->add_option("--qnet_restarts", config.qnet_restarts, "allocator training restarts");
    sub->add_option("--qnet_rollouts", config.qnet_rollouts, "rollouts per restart selection");
    sub->add_option("--replay_capacity", config.replay_capacity, "replay buffer capacity");
    sub->add_option("--replay_batch", config.replay_batch, "replay minibatch size");
    sub->add_option("--replay_warmup", config.replay_warmup, "replay items before learning");
    sub->add_option("--sync_period", config.sync_period, "gradient steps between target syncs");
    sub->add_option("--oracle_sigma", config.oracle_sigma, "oracle kernel bandwidth (0 = auto)");
    sub->add_option("--oracle_mode", config.oracle_mode, "coverage | noisy_coverage");
    sub->add_option("--oracle_noise", config.oracle_noise, "noise sigma in noisy mode");
    sub->add_option("--seed", config.seed, "seed for generation and training (mandatory input)");
    sub->add_option("--seeds", raw.seeds, "comma list of evaluation seeds");
    sub->add_option("--out", config.out, "output directory (mandatory input)");
    sub->add_option("--checkpoints", config.checkpoints, "checkpoint directory (default: --out)");
    sub->add_option("--methods", raw.methods, "comma list of methods to run");
    sub->add_option("--budgets", raw.budgets, "comma list of sweep budgets, ascending");
}

void apply_raw_lists(const RawLists& raw, RunConfig& config) {
    std::map<std::string, std::string> entries;
    if (!raw.ladder.empty()) entries["ladder"] = raw.ladder;
    if (!raw.seeds.empty()) entries["seeds"] = raw.seeds;
    if (!raw.budgets.empty()) entries["budgets"] = raw.budgets;
    if (!raw.methods.empty()) entries["methods"] = raw.methods;
    apply_config_entries(entries, config);
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    try {
        RunConfig config;
        // the config document loads first so flags can override it
        for (std::size_t i = 0; i < args.size(); ++i) {
            std::string path;
            if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
            else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
            if (!path.empty()) apply_config_entries(parse_config_document(path), config);
        }

        CLI::App app{"budgetforge: budget-constrained expert annotation planning"};
        app.require_subcommand(1);
        RawLists raw;
        std::string config_path;
        CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
        CLI::App* train = app.add_subcommand("train", "train the matcher and the allocator");
        CLI::App* evaluate = app.add_subcommand("evaluate", "compare methods over seeds");
        CLI::App* sweep = app.add_subcommand("sweep", "evaluate methods across budgets");
        for (CLI::App* sub : {gen, train, evaluate, sweep})
            add_common_options(sub, config, raw, config_path);

        std::vector<std::string> reversed(args.rbegin(), args.rend());
        try {
            app.parse(reversed);
        } catch (const CLI::ParseError& e) {
            int rc = app.exit(e);
            return rc == 0 ? 0 : 2;  // bad flags are config errors
        }
        apply_raw_lists(raw, config);

        if (gen->parsed()) cmd_gen(config);
        else if (train->parsed()) cmd_train(config);
        else if (evaluate->parsed()) cmd_evaluate(config);
        else if (sweep->parsed()) cmd_sweep(config);
        return 0;
    } catch (const Error& e) {
        std::cerr << "error (" << error_kind_name(e.kind()) << "): " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace bf
