#include "bf/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace bf {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return "config";
        case ErrorKind::ingestion: return "ingestion";
        case ErrorKind::state: return "state";
        case ErrorKind::training: return "training";
        case ErrorKind::budget: return "budget";
        case ErrorKind::domain: return "domain";
        case ErrorKind::shape: return "shape";
        case ErrorKind::numeric: return "numeric";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

namespace {

double apply_activation(Activation a, double z) {
    switch (a) {
        case Activation::identity: return z;
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    }
    return z;
}

// derivative w.r.t. the pre-activation
double activation_deriv(Activation a, double z) {
    switch (a) {
        case Activation::identity: return 1.0;
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::sigmoid: {
            double s = 1.0 / (1.0 + std::exp(-z));
            return s * (1.0 - s);
        }
    }
    return 1.0;
}

}  // namespace

DenseNet::DenseNet(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts,
                   Rng& rng) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1)
        throw Error::shape("dense net needs n+1 dims for n activations");
    layers_.reserve(acts.size());
    for (std::size_t l = 0; l < acts.size(); ++l) {
        DenseLayer layer;
        layer.weight = Tensor2(dims[l + 1], dims[l]);
        layer.bias.assign(dims[l + 1], 0.0);
        layer.activation = acts[l];
        double s = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
        for (double& w : layer.weight.data) w = rng.uniform(-s, s);
        layers_.push_back(std::move(layer));
    }
    validate_and_count();
}

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    validate_and_count();
}

void DenseNet::validate_and_count() {
    if (layers_.empty()) throw Error::shape("dense net has no layers");
    parameter_count_ = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const DenseLayer& layer = layers_[l];
        if (layer.weight.data.size() != layer.weight.rows * layer.weight.cols)
            throw Error::shape("weight storage does not match declared shape");
        if (layer.bias.size() != layer.out_dim())
            throw Error::shape("bias length does not match layer output");
        if (l > 0 && layer.in_dim() != layers_[l - 1].out_dim())
            throw Error::shape("adjacent layer dimensions disagree");
        for (double w : layer.weight.data)
            if (!std::isfinite(w)) throw Error::numeric("non-finite weight");
        for (double b : layer.bias)
            if (!std::isfinite(b)) throw Error::numeric("non-finite bias");
        parameter_count_ += layer.weight.data.size() + layer.bias.size();
    }
}

std::vector<double> DenseNet::forward(const std::vector<double>& input) const {
    if (input.size() != input_dim())
        throw Error::shape("forward input length " + std::to_string(input.size()) +
                           " != net input dim " + std::to_string(input_dim()));
    std::vector<double> x = input;
    std::vector<double> z;
    for (const DenseLayer& layer : layers_) {
        z.assign(layer.out_dim(), 0.0);
        for (std::size_t i = 0; i < layer.out_dim(); ++i) {
            double acc = layer.bias[i];
            const double* wrow = layer.weight.data.data() + i * layer.in_dim();
            for (std::size_t j = 0; j < layer.in_dim(); ++j) acc += wrow[j] * x[j];
            z[i] = apply_activation(layer.activation, acc);
        }
        x.swap(z);
    }
    return x;
}

ForwardCache DenseNet::forward_cached(const std::vector<double>& input) const {
    if (input.size() != input_dim())
        throw Error::shape("forward input length " + std::to_string(input.size()) +
                           " != net input dim " + std::to_string(input_dim()));
    ForwardCache cache;
    cache.inputs.reserve(layers_.size());
    cache.preacts.reserve(layers_.size());
    cache.min_abs_relu_preact = std::numeric_limits<double>::infinity();
    std::vector<double> x = input;
    for (const DenseLayer& layer : layers_) {
        cache.inputs.push_back(x);
        std::vector<double> z(layer.out_dim(), 0.0);
        for (std::size_t i = 0; i < layer.out_dim(); ++i) {
            double acc = layer.bias[i];
            const double* wrow = layer.weight.data.data() + i * layer.in_dim();
            for (std::size_t j = 0; j < layer.in_dim(); ++j) acc += wrow[j] * x[j];
            z[i] = acc;
            if (layer.activation == Activation::relu)
                cache.min_abs_relu_preact = std::min(cache.min_abs_relu_preact, std::fabs(acc));
        }
        cache.preacts.push_back(z);
        std::vector<double> a(layer.out_dim());
        for (std::size_t i = 0; i < layer.out_dim(); ++i)
            a[i] = apply_activation(layer.activation, z[i]);
        x.swap(a);
    }
    cache.output = x;
    return cache;
}

GradientBuffer DenseNet::backprop(const ForwardCache& cache, const std::vector<double>& grad_out,
                                  bool seed_at_logit, std::vector<double>* grad_input) const {
    if (cache.inputs.size() != layers_.size() || cache.preacts.size() != layers_.size() ||
        cache.inputs.empty() || cache.inputs.front().size() != input_dim())
        throw Error::state("forward cache does not match this net");
    if (grad_out.size() != output_dim())
        throw Error::shape("output gradient length != net output dim");

    GradientBuffer grads(parameter_count_, 0.0);

    // delta = dL/d(preact) of the current layer
    std::vector<double> delta(grad_out);
    const std::vector<double>& z_last = cache.preacts.back();
    if (!seed_at_logit) {
        for (std::size_t i = 0; i < delta.size(); ++i)
            delta[i] *= activation_deriv(layers_.back().activation, z_last[i]);
    }

    // offsets of each layer's parameter block
    std::vector<std::size_t> offsets(layers_.size());
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        offsets[l] = off;
        off += layers_[l].weight.data.size() + layers_[l].bias.size();
    }

    for (std::size_t li = layers_.size(); li-- > 0;) {
        const DenseLayer& layer = layers_[li];
        const std::vector<double>& x = cache.inputs[li];
        double* gw = grads.data() + offsets[li];
        double* gb = gw + layer.weight.data.size();
        for (std::size_t i = 0; i < layer.out_dim(); ++i) {
            double d = delta[i];
            gb[i] += d;
            double* grow = gw + i * layer.in_dim();
            for (std::size_t j = 0; j < layer.in_dim(); ++j) grow[j] += d * x[j];
        }
        if (li > 0 || grad_input != nullptr) {
            std::vector<double> prev(layer.in_dim(), 0.0);
            for (std::size_t i = 0; i < layer.out_dim(); ++i) {
                double d = delta[i];
                const double* wrow = layer.weight.data.data() + i * layer.in_dim();
                for (std::size_t j = 0; j < layer.in_dim(); ++j) prev[j] += d * wrow[j];
            }
            if (li > 0) {
                const std::vector<double>& z_prev = cache.preacts[li - 1];
                for (std::size_t j = 0; j < prev.size(); ++j)
                    prev[j] *= activation_deriv(layers_[li - 1].activation, z_prev[j]);
                delta.swap(prev);
            } else {
                *grad_input = std::move(prev);
            }
        }
    }
    return grads;
}

std::vector<double> DenseNet::parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count_);
    for (const DenseLayer& layer : layers_) {
        out.insert(out.end(), layer.weight.data.begin(), layer.weight.data.end());
        out.insert(out.end(), layer.bias.begin(), layer.bias.end());
    }
    return out;
}

void DenseNet::set_parameters(const std::vector<double>& params) {
    if (params.size() != parameter_count_)
        throw Error::shape("parameter vector length != net parameter count");
    for (double p : params)
        if (!std::isfinite(p)) throw Error::numeric("non-finite parameter");
    std::size_t off = 0;
    for (DenseLayer& layer : layers_) {
        std::copy(params.begin() + off, params.begin() + off + layer.weight.data.size(),
                  layer.weight.data.begin());
        off += layer.weight.data.size();
        std::copy(params.begin() + off, params.begin() + off + layer.bias.size(),
                  layer.bias.begin());
        off += layer.bias.size();
    }
}

GradientBuffer finite_diff_grad(DenseNet& net, const std::function<double(const DenseNet&)>& loss,
                                double step) {
    std::vector<double> params = net.parameters();
    GradientBuffer grads(params.size(), 0.0);
    for (std::size_t i = 0; i < params.size(); ++i) {
        double orig = params[i];
        params[i] = orig + step;
        net.set_parameters(params);
        double up = loss(net);
        params[i] = orig - step;
        net.set_parameters(params);
        double down = loss(net);
        params[i] = orig;
        grads[i] = (up - down) / (2.0 * step);
    }
    net.set_parameters(params);
    return grads;
}

Optimizer::Optimizer(const DenseNet& net, OptimizerConfig config)
    : config_(config), m_(net.parameter_count(), 0.0), v_(net.parameter_count(), 0.0) {}

void Optimizer::step(DenseNet& net, const GradientBuffer& grads) {
    if (grads.size() != m_.size())
        throw Error::shape("gradient length does not match optimizer state");
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (!std::isfinite(grads[i]))
            throw Error::numeric("non-finite gradient entry at index " + std::to_string(i));

    std::vector<double> params = net.parameters();
    ++step_count_;
    if (config_.mode == OptimizerConfig::Mode::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i)
            params[i] -= config_.lr * grads[i] + config_.lr * config_.weight_decay * params[i];
    } else {
        double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_count_));
        double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_count_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
            v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i] * grads[i];
            double mhat = m_[i] / bc1;
            double vhat = v_[i] / bc2;
            params[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps) +
                         config_.lr * config_.weight_decay * params[i];
        }
    }
    net.set_parameters(params);
}

namespace {

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f64(std::ofstream& out, double d) {
    std::uint64_t u;
    std::memcpy(&u, &d, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
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

constexpr char kNetMagic[4] = {'B', 'F', 'N', 'N'};
constexpr std::uint32_t kNetVersion = 1;

}  // namespace

void save_net(const DenseNet& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error::io("cannot open checkpoint for writing: " + path);
    out.write(kNetMagic, 4);
    write_u32(out, kNetVersion);
    write_u32(out, static_cast<std::uint32_t>(net.layers().size()));
    for (const DenseLayer& layer : net.layers()) {
        write_u32(out, static_cast<std::uint32_t>(layer.in_dim()));
        write_u32(out, static_cast<std::uint32_t>(layer.out_dim()));
        out.put(static_cast<char>(layer.activation));
    }
    for (double p : net.parameters()) write_f64(out, p);
    if (!out) throw Error::io("checkpoint write failed: " + path);
}

DenseNet load_net(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error::state("checkpoint not found: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kNetMagic, 4) != 0)
        throw Error::state("bad checkpoint magic in " + path);
    std::uint32_t version = read_u32(in);
    if (version != kNetVersion)
        throw Error::state("unsupported checkpoint version " + std::to_string(version));
    std::uint32_t layer_count = read_u32(in);
    if (layer_count == 0 || layer_count > 64)
        throw Error::state("implausible layer count in " + path);
    std::vector<DenseLayer> layers(layer_count);
    for (DenseLayer& layer : layers) {
        std::uint32_t in_dim = read_u32(in);
        std::uint32_t out_dim = read_u32(in);
        int act = in.get();
        if (!in || act < 0 || act > 2) throw Error::state("corrupt layer header in " + path);
        layer.weight = Tensor2(out_dim, in_dim);
        layer.bias.assign(out_dim, 0.0);
        layer.activation = static_cast<Activation>(act);
    }
    DenseNet net(std::move(layers));
    std::vector<double> params(net.parameter_count());
    for (double& p : params) p = read_f64(in);
    if (!in) throw Error::state("truncated checkpoint: " + path);
    net.set_parameters(params);
    return net;
}

}  // namespace bf
