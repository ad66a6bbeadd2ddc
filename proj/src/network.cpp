#include "rctaf/network.hpp"

#include "rctaf/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <random>

namespace rctaf {

Network::Network(std::vector<std::size_t> widths, ActivationSpec activation)
    : widths_(std::move(widths)), activation_(std::move(activation)) {
    if (widths_.size() < 2) {
        throw ConfigError("network needs at least an input and an output width");
    }
    if (widths_.back() != 1) {
        throw ConfigError(fmt::format("output width must be 1, got {}", widths_.back()));
    }
    for (std::size_t w : widths_) {
        if (w == 0) {
            throw ConfigError("layer widths must be positive");
        }
    }
    for (std::size_t l = 1; l < widths_.size(); ++l) {
        offsets_.push_back(parameter_count_);
        weights_.push_back(Matrix::Zero(static_cast<Eigen::Index>(widths_[l]),
                                        static_cast<Eigen::Index>(widths_[l - 1])));
        biases_.push_back(Vector::Zero(static_cast<Eigen::Index>(widths_[l])));
        parameter_count_ += widths_[l] * (widths_[l - 1] + 1);
    }
}

Network::Network(std::vector<std::size_t> widths, ActivationSpec activation,
                 std::vector<Matrix> weights, std::vector<Vector> biases)
    : Network(std::move(widths), std::move(activation)) {
    if (weights.size() != weights_.size() || biases.size() != biases_.size()) {
        throw ShapeError(fmt::format("expected {} weight layers, got {} weights and {} biases",
                                     weights_.size(), weights.size(), biases.size()));
    }
    weights_ = std::move(weights);
    biases_ = std::move(biases);
    validate_shapes();
}

void Network::validate_shapes() const {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const auto rows = static_cast<Eigen::Index>(widths_[l + 1]);
        const auto cols = static_cast<Eigen::Index>(widths_[l]);
        if (weights_[l].rows() != rows || weights_[l].cols() != cols) {
            throw ShapeError(fmt::format("layer {} weights are {}x{}, expected {}x{}", l + 1,
                                         weights_[l].rows(), weights_[l].cols(), rows, cols));
        }
        if (biases_[l].size() != rows) {
            throw ShapeError(fmt::format("layer {} bias has length {}, expected {}", l + 1,
                                         biases_[l].size(), rows));
        }
    }
}

Vector Network::parameters() const {
    Vector theta(static_cast<Eigen::Index>(parameter_count_));
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        auto at = static_cast<Eigen::Index>(offsets_[l]);
        const auto nw = weights_[l].size();
        theta.segment(at, nw) = Eigen::Map<const Vector>(weights_[l].data(), nw);
        theta.segment(at + nw, biases_[l].size()) = biases_[l];
    }
    return theta;
}

void Network::set_parameters(const Vector& theta) {
    if (theta.size() != static_cast<Eigen::Index>(parameter_count_)) {
        throw ShapeError(fmt::format("expected {} parameters, got {}", parameter_count_, theta.size()));
    }
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        auto at = static_cast<Eigen::Index>(offsets_[l]);
        const auto nw = weights_[l].size();
        Eigen::Map<Vector>(weights_[l].data(), nw) = theta.segment(at, nw);
        biases_[l] = theta.segment(at + nw, biases_[l].size());
    }
}

bool Network::operator==(const Network& other) const {
    if (widths_ != other.widths_ || !(activation_ == other.activation_)) {
        return false;
    }
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        if (weights_[l] != other.weights_[l] || biases_[l] != other.biases_[l]) {
            return false;
        }
    }
    return true;
}

ParameterSlot parameter_slot(const Network& net, std::size_t index) {
    if (index >= net.parameter_count()) {
        throw ShapeError(fmt::format("parameter index {} out of range", index));
    }
    std::size_t layer = net.layer_count() - 1;
    while (net.layer_offset(layer) > index) {
        --layer;
    }
    const std::size_t local = index - net.layer_offset(layer);
    const auto rows = static_cast<std::size_t>(net.weights(layer).rows());
    const auto cols = static_cast<std::size_t>(net.weights(layer).cols());
    if (local < rows * cols) {
        return {layer, false, local / cols, local % cols};
    }
    return {layer, true, local - rows * cols, 0};
}

Network init_network(std::vector<std::size_t> widths, ActivationSpec activation, std::uint64_t seed,
                     InitScheme scheme) {
    Network net(std::move(widths), std::move(activation));
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        Matrix& w = net.weights(l);
        const auto fan_in = static_cast<double>(w.cols());
        const auto fan_out = static_cast<double>(w.rows());
        if (scheme == InitScheme::he) {
            std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
            for (Eigen::Index k = 0; k < w.size(); ++k) {
                w.data()[k] = dist(rng);
            }
        } else {
            const double limit = std::sqrt(6.0 / (fan_in + fan_out));
            std::uniform_real_distribution<double> dist(-limit, limit);
            for (Eigen::Index k = 0; k < w.size(); ++k) {
                w.data()[k] = dist(rng);
            }
        }
    }
    return net;
}

namespace {

void check_input(const Network& net, std::span<const double> x) {
    if (x.size() != net.input_dim()) {
        throw ShapeError(fmt::format("input has {} entries, network expects {}", x.size(), net.input_dim()));
    }
}

}  // namespace

ForwardTrace forward(const Network& net, std::span<const double> x) {
    check_input(net, x);
    const std::size_t layers = net.layer_count();
    ForwardTrace trace;
    trace.z.reserve(layers);
    trace.h.reserve(layers);
    trace.h.emplace_back(Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size())));
    for (std::size_t l = 0; l < layers; ++l) {
        trace.z.push_back(net.weights(l) * trace.h.back() + net.biases(l));
        if (l + 1 < layers) {
            trace.h.push_back(trace.z.back().unaryExpr(
                [&net](double v) { return eval(net.activation(), v); }));
        }
    }
    trace.f = trace.z.back()(0);
    return trace;
}

double predict(const Network& net, std::span<const double> x) {
    check_input(net, x);
    Vector h = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    const std::size_t layers = net.layer_count();
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        h = (net.weights(l) * h + net.biases(l)).unaryExpr(
            [&net](double v) { return eval(net.activation(), v); });
    }
    return (net.weights(layers - 1) * h + net.biases(layers - 1))(0);
}

Deltas backprop_deltas(const Network& net, const ForwardTrace& trace) {
    const std::size_t layers = net.layer_count();
    if (trace.z.size() != layers) {
        throw ShapeError("trace does not match network depth");
    }
    Deltas out;
    out.delta.resize(layers);
    out.delta[layers - 1] = Vector::Ones(1);
    for (std::size_t l = layers - 1; l-- > 0;) {
        const Vector sum = net.weights(l + 1).transpose() * out.delta[l + 1];
        const Vector& z = trace.z[l];
        Vector d(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            d(i) = d1(net.activation(), z(i)) * sum(i);
        }
        out.delta[l] = std::move(d);
    }
    return out;
}

double loss(const Network& net, std::span<const double> x, double y) {
    const double r = predict(net, x) - y;
    return 0.5 * r * r;
}

double mean_loss(const Network& net, const Matrix& inputs, std::span<const double> targets) {
    if (static_cast<std::size_t>(inputs.rows()) != targets.size() || targets.empty()) {
        throw ShapeError("inputs and targets must be nonempty and of equal length");
    }
    double total = 0.0;
    for (Eigen::Index n = 0; n < inputs.rows(); ++n) {
        total += loss(net, std::span<const double>(inputs.row(n).data(), net.input_dim()),
                      targets[static_cast<std::size_t>(n)]);
    }
    return total / static_cast<double>(targets.size());
}

Vector grad_params(const Network& net, const ForwardTrace& trace, const Deltas& deltas, double y) {
    const double r = trace.f - y;
    Vector g(static_cast<Eigen::Index>(net.parameter_count()));
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto at = static_cast<Eigen::Index>(net.layer_offset(l));
        const Vector& delta = deltas.delta[l];
        const Vector& h = trace.h[l];
        const Eigen::Index rows = delta.size();
        const Eigen::Index cols = h.size();
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double ri = r * delta(i);
            for (Eigen::Index j = 0; j < cols; ++j) {
                g(at + i * cols + j) = ri * h(j);
            }
            g(at + rows * cols + i) = ri;
        }
    }
    return g;
}

Vector grad_params(const Network& net, std::span<const double> x, double y) {
    const ForwardTrace trace = forward(net, x);
    return grad_params(net, trace, backprop_deltas(net, trace), y);
}

Vector grad_input(const Network& net, std::span<const double> x, double y) {
    const ForwardTrace trace = forward(net, x);
    const Deltas deltas = backprop_deltas(net, trace);
    return (trace.f - y) * (net.weights(0).transpose() * deltas.delta[0]);
}

}  // namespace rctaf
