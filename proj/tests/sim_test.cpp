#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bf/sim.hpp"
#include "test_support.hpp"

using namespace bf;
namespace fs = std::filesystem;

namespace {

Dataset tiny_world() {
    test_support::GridSpec spec;
    spec.questions = {{0, 0}, {3, 4}, {1, 1}, {2, 0}, {0, 2}};
    spec.experts = {{1, 0}, {0, 1}};
    spec.positives = {{0, 0}};
    spec.splits = {Split::train, Split::train, Split::train, Split::dev, Split::test};
    std::vector<int> cap(2 * 5, 1);
    cap[1 * 5 + 1] = 0;  // expert 1 cannot answer question 1
    spec.capability = cap;
    return test_support::make_dataset(spec);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("annotate ledger arithmetic") {
    Dataset ds = tiny_world();
    World w(ds, Money::from_dollars(1.0), 1);

    SUBCASE("valid annotation charges and flags") {
        auto res = annotate(w, 0, 0, Money::from_dollars(0.3), 0);
        CHECK(res.valid);
        CHECK(res.cost_charged == Money::from_dollars(0.3));
        CHECK(w.budget == Money::from_dollars(0.7));
        CHECK(w.gamma[0] == 1);
        CHECK(w.labeled.size() == 1);
    }
    SUBCASE("incapable pair still pays") {
        auto res = annotate(w, 1, 1, Money::from_dollars(0.2), 0);
        CHECK_FALSE(res.valid);
        CHECK(w.budget == Money::from_dollars(0.8));
        CHECK(w.labeled.entries()[0].valid == false);
    }
    SUBCASE("insufficient budget leaves the world untouched") {
        World poor(ds, Money::from_dollars(0.4), 1);
        bool threw = false;
        try {
            annotate(poor, 0, 0, Money::from_dollars(0.5), 0);
        } catch (const Error& e) {
            threw = true;
            CHECK(e.kind() == ErrorKind::budget);
        }
        CHECK(threw);
        CHECK(poor.budget == Money::from_dollars(0.4));
        CHECK(poor.labeled.size() == 0);
        CHECK(poor.gamma[0] == 0);
    }
    SUBCASE("duplicate annotation is a state error and atomic") {
        annotate(w, 0, 0, Money::from_dollars(0.1), 0);
        Money before = w.budget;
        bool threw = false;
        try {
            annotate(w, 0, 1, Money::from_dollars(0.1), 1);
        } catch (const Error& e) {
            threw = true;
            CHECK(e.kind() == ErrorKind::state);
        }
        CHECK(threw);
        CHECK(w.budget == before);
        CHECK(w.labeled.size() == 1);
        CHECK(w.gamma[1] == 0);
    }
}

TEST_CASE("ledger conservation is exact over random operations") {
    Dataset ds = tiny_world();
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        World w(ds, Money::from_cents(37 + static_cast<std::int64_t>(rng.uniform_index(200))), trial);
        int step = 0;
        for (int q = 0; q < 3; ++q) {
            Money price = Money::from_cents(1 + static_cast<std::int64_t>(rng.uniform_index(40)));
            int e = static_cast<int>(rng.uniform_index(2));
            if (price > w.budget) continue;
            annotate(w, q, e, price, step++);
            CHECK(w.budget_initial == w.budget + w.labeled.total_cost());
            CHECK(w.budget.cents >= 0);
        }
    }
}

TEST_CASE("gamma counts annotations per expert including invalid ones") {
    Dataset ds = tiny_world();
    World w(ds, Money::from_dollars(5.0), 1);
    annotate(w, 0, 1, Money::from_dollars(0.1), 0);
    annotate(w, 1, 1, Money::from_dollars(0.1), 0);  // invalid for expert 1
    annotate(w, 2, 0, Money::from_dollars(0.1), 1);
    CHECK(w.gamma[0] == 1);
    CHECK(w.gamma[1] == 2);
    int entries_e1 = 0;
    for (const AllocationEntry& e : w.labeled.entries())
        if (e.expert_id == "e1") ++entries_e1;
    CHECK(w.gamma[1] == entries_e1);
}

TEST_CASE("oracle score fixtures") {
    Dataset ds = tiny_world();
    OracleConfig oracle;
    oracle.sigma = 1.0;

    SUBCASE("no valid labels scores zero") {
        World w(ds, Money::from_dollars(1.0), 1);
        CHECK(oracle_score(w, oracle, Split::test) == 0.0);
        annotate(w, 1, 1, Money::from_dollars(0.1), 0);  // invalid
        CHECK(oracle_score(w, oracle, Split::test) == 0.0);
    }
    SUBCASE("exact-match labels score one") {
        test_support::GridSpec spec;
        spec.questions = {{1, 2}, {1, 2}};
        spec.experts = {{1, 0}};
        spec.splits = {Split::train, Split::test};
        Dataset exact = test_support::make_dataset(spec);
        World w(exact, Money::from_dollars(1.0), 1);
        annotate(w, 0, 0, Money::from_dollars(0.1), 0);
        CHECK(oracle_score(w, oracle, Split::test) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("three-test two-label fixture matches a hand kernel computation") {
        test_support::GridSpec spec;
        spec.questions = {{0, 0}, {2, 0}, {1, 0}, {0, 1}, {3, 3}};
        spec.experts = {{1, 0}};
        spec.splits = {Split::train, Split::train, Split::test, Split::test, Split::test};
        Dataset world = test_support::make_dataset(spec);
        World w(world, Money::from_dollars(1.0), 1);
        annotate(w, 0, 0, Money::from_dollars(0.1), 0);  // label (0,0)
        annotate(w, 1, 0, Money::from_dollars(0.1), 0);  // label (2,0)

        auto k = [](double d) { return std::exp(-d * d / 2.0); };
        // test embeddings: (1,0), (0,1), (3,3)
        double f1 = std::max(k(1.0), k(1.0));
        double f2 = std::max(k(1.0), k(std::sqrt(5.0)));
        double f3 = std::max(k(std::sqrt(18.0)), k(std::sqrt(10.0)));
        double want = (f1 + f2 + f3) / 3.0;
        CHECK(oracle_score(w, oracle, Split::test) == doctest::Approx(want).epsilon(1e-12));
    }
    SUBCASE("empty split is a domain error") {
        test_support::GridSpec spec;
        spec.questions = {{0, 0}};
        spec.experts = {{1, 0}};
        Dataset world = test_support::make_dataset(spec);  // train only
        World w(world, Money::from_dollars(1.0), 1);
        CHECK_THROWS_AS((void)oracle_score(w, oracle, Split::dev), Error);
    }
    SUBCASE("nonpositive sigma is a config error") {
        World w(ds, Money::from_dollars(1.0), 1);
        OracleConfig bad;
        bad.sigma = 0.0;
        CHECK_THROWS_AS((void)oracle_score(w, bad, Split::test), Error);
    }
}

TEST_CASE("delta_f fixtures") {
    Dataset ds = tiny_world();
    World w(ds, Money::from_dollars(1.0), 1);
    OracleConfig oracle;
    oracle.sigma = 1.0;
    CHECK(delta_f(w, oracle, 0.10, 0.12) == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(delta_f(w, oracle, 0.10, 0.10) == 0.0);

    OracleConfig noisy;
    noisy.sigma = 1.0;
    noisy.mode = OracleConfig::Mode::noisy_coverage;
    noisy.noise_sigma = 0.5;
    double d = delta_f(w, noisy, 0.1, 0.1);
    CHECK(d != 0.0);  // noise applied, seeded and deterministic
}

TEST_CASE("coverage oracle is monotone in the valid labeled set") {
    SyntheticConfig cfg;
    cfg.topics = 3;
    cfg.questions = 30;
    cfg.experts = 5;
    cfg.dimension = 8;
    cfg.seed = 9;
    Dataset ds = generate_synthetic_world(cfg);
    OracleConfig oracle;
    oracle.sigma = default_oracle_sigma(ds);
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        World w(ds, Money::from_dollars(100.0), trial);
        double last = oracle_score(w, oracle, Split::dev);
        CHECK(last == 0.0);
        int step = 0;
        for (int qi : ds.split_indices(Split::train)) {
            if (rng.uniform01() < 0.4) continue;
            int e = static_cast<int>(rng.uniform_index(ds.experts.size()));
            annotate(w, qi, e, Money::from_cents(10), step++);
            double now = oracle_score(w, oracle, Split::dev);
            CHECK(now >= last - 1e-15);
            last = now;
        }
    }
}

TEST_CASE("coverage tracker equals the pure recomputation") {
    SyntheticConfig cfg;
    cfg.topics = 2;
    cfg.questions = 24;
    cfg.experts = 4;
    cfg.dimension = 8;
    cfg.seed = 21;
    Dataset ds = generate_synthetic_world(cfg);
    OracleConfig oracle;
    oracle.sigma = default_oracle_sigma(ds);
    World w(ds, Money::from_dollars(10.0), 3);
    CoverageTracker tracker(ds, oracle, Split::dev);
    Rng rng(13);
    int step = 0;
    for (int qi : ds.split_indices(Split::train)) {
        int e = static_cast<int>(rng.uniform_index(ds.experts.size()));
        auto res = annotate(w, qi, e, Money::from_cents(25), step++);
        if (res.valid) tracker.add_valid_label(ds.questions[qi].embedding);
        CHECK(tracker.score() == oracle_score(w, oracle, Split::dev));
    }
}

TEST_CASE("synthetic worlds are valid and deterministic") {
    SyntheticConfig cfg;
    cfg.topics = 3;
    cfg.questions = 40;
    cfg.experts = 6;
    cfg.dimension = 8;
    cfg.seed = 77;

    SUBCASE("single-topic worlds accept every expert at low tau") {
        SyntheticConfig one = cfg;
        one.topics = 1;
        one.tau = -1.01;  // cosine never falls below -1
        Dataset ds = generate_synthetic_world(one);
        CHECK(ds.capability.density() == 1.0);
    }
    SUBCASE("same seed gives byte-identical files") {
        Dataset a = generate_synthetic_world(cfg);
        Dataset b = generate_synthetic_world(cfg);
        fs::path dir_a = fs::temp_directory_path() / "bf_sim_test" / "a";
        fs::path dir_b = fs::temp_directory_path() / "bf_sim_test" / "b";
        write_dataset_files(a, dir_a.string());
        write_dataset_files(b, dir_b.string());
        for (const char* f : {"questions.jsonl", "experts.jsonl", "embeddings.bin",
                              "capability.json"})
            CHECK(slurp(dir_a / f) == slurp(dir_b / f));
    }
    SUBCASE("capability density is non-increasing in tau") {
        double last = 2.0;
        for (double tau : {-1.1, 0.0, 0.3, 0.5, 0.7, 0.9, 1.1}) {
            SyntheticConfig c = cfg;
            c.tau = tau;
            double density = generate_synthetic_world(c).capability.density();
            CHECK(density <= last + 1e-15);
            last = density;
        }
    }
    SUBCASE("infeasible configs are config errors") {
        SyntheticConfig bad = cfg;
        bad.questions = 2;  // fewer than topics
        CHECK_THROWS_AS((void)generate_synthetic_world(bad), Error);
        SyntheticConfig bad2 = cfg;
        bad2.topics = 0;
        CHECK_THROWS_AS((void)generate_synthetic_world(bad2), Error);
    }
    SUBCASE("positives are always capable") {
        Dataset ds = generate_synthetic_world(cfg);
        for (const PositivePair& p : ds.positives)
            CHECK(ds.capability.at(static_cast<std::size_t>(p.expert),
                                   static_cast<std::size_t>(p.question)));
    }
}

TEST_CASE("generated files round-trip through ingestion") {
    SyntheticConfig cfg;
    cfg.topics = 2;
    cfg.questions = 25;
    cfg.experts = 5;
    cfg.dimension = 6;
    cfg.seed = 123;
    Dataset ds = generate_synthetic_world(cfg);
    fs::path dir = fs::temp_directory_path() / "bf_sim_test" / "roundtrip";
    write_dataset_files(ds, dir.string());
    DatasetPaths paths = dataset_paths(dir.string());
    LoadConfig lc;
    lc.capability_path = paths.capability;
    Dataset loaded = load_dataset(paths.questions, paths.experts, paths.embeddings, lc);

    REQUIRE(loaded.questions.size() == ds.questions.size());
    REQUIRE(loaded.experts.size() == ds.experts.size());
    CHECK(loaded.dimension == ds.dimension);
    for (std::size_t i = 0; i < ds.questions.size(); ++i) {
        CHECK(loaded.questions[i].id == ds.questions[i].id);
        CHECK(loaded.questions[i].split == ds.questions[i].split);
        CHECK(loaded.questions[i].embedding == ds.questions[i].embedding);  // bitwise
    }
    CHECK(loaded.positives.size() == ds.positives.size());
    CHECK(loaded.capability.bits() == ds.capability.bits());
}

TEST_CASE("cohorts are distinct experts priced by impact rank") {
    SyntheticConfig cfg;
    cfg.topics = 2;
    cfg.questions = 20;
    cfg.experts = 8;
    cfg.dimension = 6;
    cfg.seed = 31;
    Dataset ds = generate_synthetic_world(cfg);
    std::vector<Money> ladder = {Money::from_cents(50), Money::from_cents(30),
                                 Money::from_cents(10)};
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        Cohort cohort = draw_cohort(ds, 3, ladder, rng);
        REQUIRE(cohort.size() == 3);
        CHECK(cohort[0].expert != cohort[1].expert);
        CHECK(cohort[1].expert != cohort[2].expert);
        CHECK(cohort[0].expert != cohort[2].expert);
        CHECK(ds.experts[cohort[0].expert].impact_factor_sum >=
              ds.experts[cohort[1].expert].impact_factor_sum);
        CHECK(ds.experts[cohort[1].expert].impact_factor_sum >=
              ds.experts[cohort[2].expert].impact_factor_sum);
        CHECK(cohort[0].price == Money::from_cents(50));
        CHECK(cohort[2].price == Money::from_cents(10));
    }
    CHECK_THROWS_AS((void)draw_cohort(ds, 4, ladder, rng), Error);   // ladder mismatch
    CHECK_THROWS_AS((void)draw_cohort(ds, 99, ladder, rng), Error);  // pool exceeded
}

TEST_CASE("default oracle bandwidth is positive and scale-aware") {
    SyntheticConfig cfg;
    cfg.topics = 2;
    cfg.questions = 30;
    cfg.experts = 4;
    cfg.dimension = 8;
    cfg.seed = 55;
    Dataset ds = generate_synthetic_world(cfg);
    double sigma = default_oracle_sigma(ds);
    CHECK(sigma > 0.0);
    test_support::GridSpec spec;  // degenerate: single dev point
    spec.questions = {{0, 0}, {1, 1}};
    spec.experts = {{1, 0}};
    spec.splits = {Split::train, Split::dev};
    Dataset tiny = test_support::make_dataset(spec);
    CHECK(default_oracle_sigma(tiny) == 1.0);
}
