#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bf/nn.hpp"

using namespace bf;

namespace {

DenseLayer layer(std::size_t out, std::size_t in, std::vector<double> w, std::vector<double> b,
                 Activation act) {
    DenseLayer l;
    l.weight = Tensor2(out, in);
    l.weight.data = std::move(w);
    l.bias = std::move(b);
    l.activation = act;
    return l;
}

// Naive scalar-by-scalar re-evaluation, independent of DenseNet internals.
std::vector<double> naive_forward(const DenseNet& net, std::vector<double> x) {
    for (const DenseLayer& l : net.layers()) {
        std::vector<double> y(l.out_dim());
        for (std::size_t i = 0; i < l.out_dim(); ++i) {
            double acc = l.bias[i];
            for (std::size_t j = 0; j < l.in_dim(); ++j) acc += l.weight.at(i, j) * x[j];
            if (l.activation == Activation::relu) acc = acc > 0 ? acc : 0;
            if (l.activation == Activation::sigmoid) acc = 1.0 / (1.0 + std::exp(-acc));
            y[i] = acc;
        }
        x = y;
    }
    return x;
}

}  // namespace

TEST_CASE("identity layer passes input through") {
    DenseNet net({layer(2, 2, {1, 0, 0, 1}, {0, 0}, Activation::identity)});
    auto out = net.forward({1.0, 2.0});
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 2.0);
}

TEST_CASE("relu layer clamps negatives") {
    DenseNet net({layer(2, 2, {1, 0, 0, 1}, {0, 0}, Activation::relu)});
    auto out = net.forward({-1.0, 3.0});
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 3.0);
}

TEST_CASE("two-layer net matches scalar re-evaluation") {
    DenseNet net({layer(2, 2, {0.3, -0.2, 0.5, 0.1}, {0.05, -0.1}, Activation::relu),
                  layer(1, 2, {0.7, -0.4}, {0.2}, Activation::sigmoid)});
    std::vector<double> input{0.4, -0.9};
    auto got = net.forward(input);
    auto want = naive_forward(net, input);
    REQUIRE(got.size() == want.size());
    CHECK(got[0] == doctest::Approx(want[0]).epsilon(1e-15));
}

TEST_CASE("forward is pure and bitwise repeatable") {
    Rng rng(11);
    DenseNet net({4, 8, 3}, {Activation::relu, Activation::identity}, rng);
    std::vector<double> input{0.1, -0.7, 0.3, 2.0};
    auto a = net.forward(input);
    auto b = net.forward(input);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("forward rejects wrong input length") {
    DenseNet net({layer(1, 2, {1, 1}, {0}, Activation::identity)});
    try {
        (void)net.forward({1.0});
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::shape);
    }
}

TEST_CASE("backprop closed form on a scalar linear layer") {
    // squared error: L = (w x - t)^2, dL/dw = 2 (w x - t) x
    double w = 0.8, x = 1.7, t = 0.4;
    DenseNet net({layer(1, 1, {w}, {0}, Activation::identity)});
    ForwardCache cache = net.forward_cached({x});
    double pred = cache.output[0];
    GradientBuffer grads = net.backprop(cache, {2.0 * (pred - t)});
    CHECK(grads[0] == doctest::Approx(2.0 * (pred - t) * x).epsilon(1e-14));
    CHECK(grads[1] == doctest::Approx(2.0 * (pred - t)).epsilon(1e-14));
}

TEST_CASE("zero output gradient yields an all-zero buffer") {
    Rng rng(3);
    DenseNet net({3, 5, 2}, {Activation::relu, Activation::sigmoid}, rng);
    ForwardCache cache = net.forward_cached({0.2, -0.4, 0.9});
    GradientBuffer grads = net.backprop(cache, {0.0, 0.0});
    for (double g : grads) CHECK(g == 0.0);
}

TEST_CASE("backprop rejects a cache from another net") {
    Rng rng(5);
    DenseNet a({3, 4, 1}, {Activation::relu, Activation::identity}, rng);
    DenseNet b({2, 4, 1}, {Activation::relu, Activation::identity}, rng);
    ForwardCache cache = a.forward_cached({0.1, 0.2, 0.3});
    try {
        (void)b.backprop(cache, {1.0});
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::state);
    }
}

TEST_CASE("backprop matches central finite differences at random points") {
    Rng rng(17);
    int checked = 0;
    while (checked < 100) {
        DenseNet net({3, 6, 1}, {Activation::relu, Activation::identity}, rng);
        std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        double target = rng.uniform(-1, 1);
        ForwardCache cache = net.forward_cached(x);
        if (cache.min_abs_relu_preact < 1e-3) continue;  // relu kink margin

        double err = cache.output[0] - target;
        GradientBuffer analytic = net.backprop(cache, {2.0 * err});
        GradientBuffer numeric = finite_diff_grad(
            net,
            [&](const DenseNet& n) {
                double d = n.forward(x)[0] - target;
                return d * d;
            },
            1e-5);
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric[i]), 1e-8});
            CHECK(std::fabs(analytic[i] - numeric[i]) / denom < 1e-4);
        }
        ++checked;
    }
}

TEST_CASE("finite differences of a quadratic at w = 3") {
    DenseNet net({layer(1, 1, {3.0}, {0}, Activation::identity)});
    GradientBuffer g = finite_diff_grad(
        net,
        [](const DenseNet& n) {
            double w = n.layers()[0].weight.at(0, 0);
            return w * w;
        },
        1e-5);
    CHECK(std::fabs(g[0] - 6.0) < 1e-6);
    CHECK(g[1] == 0.0);  // bias does not enter the loss
}

TEST_CASE("finite differences of a constant are zero") {
    Rng rng(23);
    DenseNet net({2, 3, 1}, {Activation::relu, Activation::identity}, rng);
    GradientBuffer g = finite_diff_grad(net, [](const DenseNet&) { return 42.0; });
    for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("optimizer with lr = 0 is the identity") {
    Rng rng(31);
    DenseNet net({2, 4, 1}, {Activation::relu, Activation::identity}, rng);
    auto before = net.parameters();
    OptimizerConfig cfg;
    cfg.lr = 0.0;
    Optimizer opt(net, cfg);
    GradientBuffer grads(net.parameter_count(), 0.37);
    opt.step(net, grads);
    auto after = net.parameters();
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
}

TEST_CASE("plain sgd arithmetic") {
    DenseNet net({layer(1, 1, {1.0}, {0}, Activation::identity)});
    OptimizerConfig cfg;
    cfg.mode = OptimizerConfig::Mode::sgd;
    cfg.lr = 0.1;
    Optimizer opt(net, cfg);
    GradientBuffer grads{0.5, 0.0};
    opt.step(net, grads);
    CHECK(net.layers()[0].weight.at(0, 0) == doctest::Approx(0.95).epsilon(1e-15));
}

TEST_CASE("adamw descends a convex quadratic monotonically after warmup") {
    DenseNet net({layer(1, 1, {5.0}, {2.0}, Activation::identity)});
    OptimizerConfig cfg;
    cfg.lr = 0.05;
    Optimizer opt(net, cfg);
    auto loss_of = [](const DenseNet& n) {
        double w = n.layers()[0].weight.at(0, 0);
        double b = n.layers()[0].bias[0];
        return w * w + b * b;
    };
    std::vector<double> losses;
    for (int s = 0; s < 50; ++s) {
        double w = net.layers()[0].weight.at(0, 0);
        double b = net.layers()[0].bias[0];
        opt.step(net, {2.0 * w, 2.0 * b});
        losses.push_back(loss_of(net));
    }
    for (std::size_t s = 5; s + 1 < losses.size(); ++s) CHECK(losses[s + 1] <= losses[s] + 1e-12);
    CHECK(losses.back() < losses.front());
}

TEST_CASE("non-finite gradients abort the step and leave parameters intact") {
    Rng rng(41);
    DenseNet net({2, 3, 1}, {Activation::relu, Activation::identity}, rng);
    auto before = net.parameters();
    Optimizer opt(net, {});
    GradientBuffer grads(net.parameter_count(), 0.1);
    grads[2] = std::nan("");
    bool threw = false;
    try {
        opt.step(net, grads);
    } catch (const Error& e) {
        threw = true;
        CHECK(e.kind() == ErrorKind::numeric);
    }
    CHECK(threw);
    auto after = net.parameters();
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
}

TEST_CASE("checkpoint round-trip is bitwise exact") {
    Rng rng(53);
    DenseNet net({4, 7, 2}, {Activation::relu, Activation::sigmoid}, rng);
    auto dir = std::filesystem::temp_directory_path() / "bf_nn_test";
    std::filesystem::create_directories(dir);
    std::string path = (dir / "net.bfnn").string();
    save_net(net, path);
    DenseNet loaded = load_net(path);
    REQUIRE(loaded.layers().size() == net.layers().size());
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        CHECK(loaded.layers()[l].activation == net.layers()[l].activation);
        CHECK(loaded.layers()[l].in_dim() == net.layers()[l].in_dim());
        CHECK(loaded.layers()[l].out_dim() == net.layers()[l].out_dim());
    }
    auto a = net.parameters();
    auto b = loaded.parameters();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("corrupt checkpoint magic is a state error") {
    auto dir = std::filesystem::temp_directory_path() / "bf_nn_test";
    std::filesystem::create_directories(dir);
    std::string path = (dir / "bad.bfnn").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPE garbage";
    }
    try {
        (void)load_net(path);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::state);
    }
}

TEST_CASE("parameter vector round-trip and count invariant") {
    Rng rng(61);
    DenseNet net({3, 5, 2}, {Activation::relu, Activation::identity}, rng);
    CHECK(net.parameter_count() == 3 * 5 + 5 + 5 * 2 + 2);
    auto p = net.parameters();
    CHECK(p.size() == net.parameter_count());
    p[0] += 1.0;
    net.set_parameters(p);
    CHECK(net.parameters()[0] == p[0]);
    p.pop_back();
    CHECK_THROWS_AS(net.set_parameters(p), Error);
}
