#pragma once

#include "rctaf/activation.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace rctaf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class InitScheme { he, xavier };

/// Fully-connected network with a linear scalar output.
///
/// Layers are stored zero-based: weights(0) is W^(1) of shape n_1 x n_0 and
/// weights(L-1) is the output row W^(L). Hidden layers use `activation()`.
///
/// Parameters are ordered layer-major; inside a layer the weights come first
/// in row-major order, followed by the biases. Every flat gradient or Hessian
/// diagonal in this library uses that ordering.
class Network {
public:
    /// Zero weights and biases. Throws ConfigError on an empty layout or a
    /// non-scalar output.
    Network(std::vector<std::size_t> widths, ActivationSpec activation);

    Network(std::vector<std::size_t> widths, ActivationSpec activation, std::vector<Matrix> weights,
            std::vector<Vector> biases);

    const std::vector<std::size_t>& widths() const noexcept { return widths_; }
    const ActivationSpec& activation() const noexcept { return activation_; }

    /// Number of weight layers L (hidden layers + output).
    std::size_t layer_count() const noexcept { return weights_.size(); }
    std::size_t input_dim() const noexcept { return widths_.front(); }
    std::size_t parameter_count() const noexcept { return parameter_count_; }

    const Matrix& weights(std::size_t layer) const { return weights_.at(layer); }
    const Vector& biases(std::size_t layer) const { return biases_.at(layer); }
    Matrix& weights(std::size_t layer) { return weights_.at(layer); }
    Vector& biases(std::size_t layer) { return biases_.at(layer); }

    /// Flat index of the first parameter (W(layer)[0,0]) of a layer.
    std::size_t layer_offset(std::size_t layer) const { return offsets_.at(layer); }

    Vector parameters() const;
    void set_parameters(const Vector& theta);

    bool operator==(const Network& other) const;

private:
    void validate_shapes() const;

    std::vector<std::size_t> widths_;
    ActivationSpec activation_;
    std::vector<Matrix> weights_;
    std::vector<Vector> biases_;
    std::vector<std::size_t> offsets_;
    std::size_t parameter_count_ = 0;
};

/// Kind of a flat parameter slot, for reports and CSV export.
struct ParameterSlot {
    std::size_t layer = 0;  // zero-based weight layer
    bool is_bias = false;
    std::size_t row = 0;
    std::size_t col = 0;  // unused for biases
};

ParameterSlot parameter_slot(const Network& net, std::size_t index);

struct ForwardTrace {
    std::vector<Vector> z;  // z[l] = pre-activation of weight layer l, l = 0..L-1
    std::vector<Vector> h;  // h[0] = x, h[l] = sigma(z[l-1]) for l = 1..L-1
    double f = 0.0;
};

/// delta[l]_i = df / dz[l]_i; delta.back() is the scalar 1.
struct Deltas {
    std::vector<Vector> delta;
};

Network init_network(std::vector<std::size_t> widths, ActivationSpec activation, std::uint64_t seed,
                     InitScheme scheme = InitScheme::he);

ForwardTrace forward(const Network& net, std::span<const double> x);
inline ForwardTrace forward(const Network& net, const Vector& x) {
    return forward(net, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

/// Output only; skips building the trace.
double predict(const Network& net, std::span<const double> x);

Deltas backprop_deltas(const Network& net, const ForwardTrace& trace);

double loss(const Network& net, std::span<const double> x, double y);

/// Mean of per-sample losses. `inputs` is n x d row-major.
double mean_loss(const Network& net, const Matrix& inputs, std::span<const double> targets);

/// dL/dtheta in flat parameter order.
Vector grad_params(const Network& net, std::span<const double> x, double y);

/// Same as grad_params, from an existing trace and its deltas.
Vector grad_params(const Network& net, const ForwardTrace& trace, const Deltas& deltas, double y);

/// dL/dx.
Vector grad_input(const Network& net, std::span<const double> x, double y);

}  // namespace rctaf
