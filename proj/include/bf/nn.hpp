#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bf/error.hpp"
#include "bf/rng.hpp"

namespace bf {

enum class Activation : std::uint8_t { identity = 0, relu = 1, sigmoid = 2 };

// Dense row-major matrix.
struct Tensor2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct DenseLayer {
    Tensor2 weight;             // out x in
    std::vector<double> bias;   // out
    Activation activation = Activation::identity;

    std::size_t in_dim() const { return weight.cols; }
    std::size_t out_dim() const { return weight.rows; }
};

// Flat gradient (or parameter) vector in net layout order:
// per layer, weight row-major then bias.
using GradientBuffer = std::vector<double>;

struct ForwardCache {
    std::vector<std::vector<double>> inputs;    // input to each layer
    std::vector<std::vector<double>> preacts;   // W x + b per layer
    std::vector<double> output;                 // activation of last preact
    double min_abs_relu_preact = 0.0;           // kink-margin diagnostic

    double logit() const { return preacts.back()[0]; }  // scalar-head helper
};

// Minimal MLP: ordered dense layers with per-layer activations. Parameters
// are 64-bit reals; all forward/backward math is deterministic.
class DenseNet {
  public:
    DenseNet() = default;

    // Seeded uniform(-s, s) init with s = sqrt(6 / (fan_in + fan_out)),
    // zero biases. dims has one more entry than acts.
    DenseNet(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts, Rng& rng);

    // Explicit layers (fixtures, checkpoint loads). Validates adjacency.
    explicit DenseNet(std::vector<DenseLayer> layers);

    std::vector<double> forward(const std::vector<double>& input) const;
    ForwardCache forward_cached(const std::vector<double>& input) const;

    // Gradient of a scalar loss w.r.t. every parameter, given the gradient
    // at the net output (or at the final pre-activation when seed_at_logit).
    // Optionally also yields the gradient w.r.t. the input vector.
    GradientBuffer backprop(const ForwardCache& cache, const std::vector<double>& grad_out,
                            bool seed_at_logit = false,
                            std::vector<double>* grad_input = nullptr) const;

    std::size_t parameter_count() const { return parameter_count_; }
    std::vector<double> parameters() const;
    void set_parameters(const std::vector<double>& params);

    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::size_t input_dim() const { return layers_.front().in_dim(); }
    std::size_t output_dim() const { return layers_.back().out_dim(); }
    bool empty() const { return layers_.empty(); }

  private:
    void validate_and_count();

    std::vector<DenseLayer> layers_;
    std::size_t parameter_count_ = 0;
};

// Central finite differences of loss(net) w.r.t. net parameters. The net is
// perturbed in place and restored before returning.
GradientBuffer finite_diff_grad(DenseNet& net, const std::function<double(const DenseNet&)>& loss,
                                double step = 1e-5);

struct OptimizerConfig {
    enum class Mode { sgd, adamw };
    Mode mode = Mode::adamw;
    double lr = 1e-3;
    double weight_decay = 0.0;   // decoupled
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Stateful optimizer bound to one net's parameter layout.
class Optimizer {
  public:
    Optimizer(const DenseNet& net, OptimizerConfig config);

    // One update; rejects non-finite gradients without touching the net.
    void step(DenseNet& net, const GradientBuffer& grads);

    const OptimizerConfig& config() const { return config_; }

  private:
    OptimizerConfig config_;
    std::vector<double> m_, v_;
    long step_count_ = 0;
};

// Flat binary checkpoint: magic "BFNN", version u32, layer count u32,
// per-layer (in u32, out u32, activation u8), then little-endian f64
// parameters in layout order.
void save_net(const DenseNet& net, const std::string& path);
DenseNet load_net(const std::string& path);

}  // namespace bf
