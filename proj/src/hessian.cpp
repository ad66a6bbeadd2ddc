#include "rctaf/hessian.hpp"

#include "rctaf/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace rctaf {

LocalDerivatives local_derivatives(const Network& net, const ForwardTrace& trace) {
    const ActivationSpec& act = net.activation();
    if (!act.twice_differentiable()) {
        throw UnsupportedActivation(
            fmt::format("Hessian diagonal needs a twice-differentiable activation, got {}", act.name()));
    }
    const std::size_t layers = net.layer_count();
    LocalDerivatives local;
    local.first.resize(layers);
    local.second.resize(layers);
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        const Vector& z = trace.z[l];
        local.first[l] = z.unaryExpr([&act](double v) { return d1(act, v); });
        local.second[l] = z.unaryExpr([&act](double v) { return d2(act, v); });
    }
    return local;
}

DTable d_table(const Network& net, const Deltas& deltas, const LocalDerivatives& local) {
    // M is the full Hessian of f with respect to z[l]; D[l] is its diagonal.
    // Only the last hidden layer has a diagonal M[l+1], so deeper layers need
    // the off-diagonal entries to stay exact.
    const std::size_t layers = net.layer_count();
    DTable table;
    table.D.resize(layers);
    table.D[layers - 1] = Vector::Zero(1);
    Matrix M = Matrix::Zero(1, 1);
    for (std::size_t l = layers - 1; l-- > 0;) {
        const Matrix& w_next = net.weights(l + 1);
        const Vector s = w_next.transpose() * deltas.delta[l + 1];
        const Vector& slope = local.first[l];
        Matrix next = w_next.transpose() * M * w_next;
        next = slope.asDiagonal() * next * slope.asDiagonal();
        next.diagonal() += local.second[l].cwiseProduct(s);
        M = std::move(next);
        table.D[l] = M.diagonal();
    }
    return table;
}

DTable d_table(const Network& net, const ForwardTrace& trace, const Deltas& deltas) {
    return d_table(net, deltas, local_derivatives(net, trace));
}

HessianDiagReport assemble_report(const Network& net, const ForwardTrace& trace, const Deltas& deltas,
                                  const DTable& table, double y) {
    const auto p = static_cast<Eigen::Index>(net.parameter_count());
    HessianDiagReport rep;
    rep.residual = trace.f - y;
    rep.gauss_newton_part.resize(p);
    rep.residual_part.resize(p);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto at = static_cast<Eigen::Index>(net.layer_offset(l));
        const Vector& delta = deltas.delta[l];
        const Vector& D = table.D[l];
        const Vector& h = trace.h[l];
        const Eigen::Index rows = delta.size();
        const Eigen::Index cols = h.size();
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) {
                const double c = h(j);
                const double g = delta(i) * c;
                rep.gauss_newton_part(at + i * cols + j) = g * g;
                rep.residual_part(at + i * cols + j) = rep.residual * c * c * D(i);
            }
            rep.gauss_newton_part(at + rows * cols + i) = delta(i) * delta(i);
            rep.residual_part(at + rows * cols + i) = rep.residual * D(i);
        }
    }
    rep.diag = rep.gauss_newton_part + rep.residual_part;
    rep.normalized_norm = normalized_diag_norm(rep.diag, net.parameter_count());
    return rep;
}

HessianDiagReport hessian_diag_exact(const Network& net, std::span<const double> x, double y) {
    const ForwardTrace trace = forward(net, x);
    const Deltas deltas = backprop_deltas(net, trace);
    return assemble_report(net, trace, deltas, d_table(net, trace, deltas), y);
}

namespace {

void check_path_capacity(const Network& net) {
    std::size_t hidden = 0;
    for (std::size_t l = 1; l + 1 < net.widths().size(); ++l) {
        hidden += net.widths()[l];
    }
    if (hidden > kMaxPathHiddenNeurons || net.layer_count() > kMaxPathLayers) {
        throw CapacityError(fmt::format(
            "path expansion limited to {} hidden neurons and {} layers, network has {} and {}",
            kMaxPathHiddenNeurons, kMaxPathLayers, hidden, net.layer_count()));
    }
}

// Walks every path leaving (layer, neuron), adding the path's product of
// sigma' W factors into jac[r][j], so that jac ends up holding dz[r]_j / dz[l]_i.
void walk_paths(const Network& net, const LocalDerivatives& local, std::size_t layer, Eigen::Index neuron,
                double product, std::vector<Vector>& jac) {
    jac[layer](neuron) += product;
    if (layer + 2 >= net.layer_count()) {
        return;
    }
    const Matrix& w_next = net.weights(layer + 1);
    const double slope = local.first[layer](neuron);
    for (Eigen::Index t = 0; t < w_next.rows(); ++t) {
        walk_paths(net, local, layer + 1, t, product * slope * w_next(t, neuron), jac);
    }
}

// D[l]_i = sum over endpoints (r, j) of sigma''(z[r]_j) * delta[r]_j / sigma'(z[r]_j)
// * (sum over paths (l,i) -> (r,j) of the path product)^2.
double sum_paths(const Network& net, const Deltas& deltas, const LocalDerivatives& local, std::size_t layer,
                 Eigen::Index neuron) {
    std::vector<Vector> jac(net.layer_count() - 1);
    for (std::size_t r = layer; r < jac.size(); ++r) {
        jac[r] = Vector::Zero(deltas.delta[r].size());
    }
    walk_paths(net, local, layer, neuron, 1.0, jac);
    double total = 0.0;
    for (std::size_t r = layer; r < jac.size(); ++r) {
        for (Eigen::Index j = 0; j < jac[r].size(); ++j) {
            const double slope = local.first[r](j);
            if (std::abs(slope) < 1e-300) {
                throw SingularityError(fmt::format(
                    "sigma'(z) vanishes at layer {} neuron {}; the path form divides by it", r + 1, j));
            }
            total += local.second[r](j) * deltas.delta[r](j) / slope * jac[r](j) * jac[r](j);
        }
    }
    return total;
}

}  // namespace

DTable d_table_paths(const Network& net, const Deltas& deltas, const LocalDerivatives& local) {
    check_path_capacity(net);
    const std::size_t layers = net.layer_count();
    DTable table;
    table.D.resize(layers);
    table.D[layers - 1] = Vector::Zero(1);
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        Vector D(deltas.delta[l].size());
        for (Eigen::Index i = 0; i < D.size(); ++i) {
            D(i) = sum_paths(net, deltas, local, l, i);
        }
        table.D[l] = std::move(D);
    }
    return table;
}

HessianDiagReport hessian_diag_paths(const Network& net, std::span<const double> x, double y) {
    check_path_capacity(net);
    const ForwardTrace trace = forward(net, x);
    const Deltas deltas = backprop_deltas(net, trace);
    const LocalDerivatives local = local_derivatives(net, trace);
    return assemble_report(net, trace, deltas, d_table_paths(net, deltas, local), y);
}

Vector hessian_diag_fd(const Network& net, std::span<const double> x, double y, double step) {
    Network probe = net;
    const Vector theta = net.parameters();
    const double centre = loss(net, x, y);
    Vector out(theta.size());
    Vector shifted = theta;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        shifted(k) = theta(k) + step;
        probe.set_parameters(shifted);
        const double up = loss(probe, x, y);
        shifted(k) = theta(k) - step;
        probe.set_parameters(shifted);
        const double down = loss(probe, x, y);
        shifted(k) = theta(k);
        out(k) = (up - 2.0 * centre + down) / (step * step);
    }
    return out;
}

Vector hessian_diag_fd_gradient(const Network& net, std::span<const double> x, double y, double step) {
    Network probe = net;
    const Vector theta = net.parameters();
    Vector out(theta.size());
    Vector shifted = theta;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        shifted(k) = theta(k) + step;
        probe.set_parameters(shifted);
        const double up = grad_params(probe, x, y)(k);
        shifted(k) = theta(k) - step;
        probe.set_parameters(shifted);
        const double down = grad_params(probe, x, y)(k);
        shifted(k) = theta(k);
        out(k) = (up - down) / (2.0 * step);
    }
    return out;
}

double normalized_diag_norm(const Vector& diag, std::size_t p) {
    if (p == 0) {
        throw DomainError("normalized diagonal norm needs p >= 1");
    }
    if (static_cast<std::size_t>(diag.size()) != p) {
        throw DomainError(fmt::format("diagonal has {} entries but p = {}", diag.size(), p));
    }
    return std::sqrt(diag.squaredNorm() / static_cast<double>(p));
}

namespace {

void check_dataset(const Network& net, const Matrix& inputs, std::span<const double> targets) {
    if (inputs.rows() == 0 || targets.empty()) {
        throw DomainError("dataset is empty");
    }
    if (static_cast<std::size_t>(inputs.rows()) != targets.size() ||
        static_cast<std::size_t>(inputs.cols()) != net.input_dim()) {
        throw ShapeError("dataset shape does not match the network");
    }
}

std::span<const double> row(const Matrix& m, Eigen::Index n) {
    return {m.row(n).data(), static_cast<std::size_t>(m.cols())};
}

}  // namespace

Vector dataset_mean_diag(const Network& net, const Matrix& inputs, std::span<const double> targets) {
    check_dataset(net, inputs, targets);
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(net.parameter_count()));
    for (Eigen::Index n = 0; n < inputs.rows(); ++n) {
        sum += hessian_diag_exact(net, row(inputs, n), targets[static_cast<std::size_t>(n)]).diag;
    }
    return sum / static_cast<double>(inputs.rows());
}

double dataset_diag_norm(const Network& net, const Matrix& inputs, std::span<const double> targets,
                         DiagReduction reduction) {
    check_dataset(net, inputs, targets);
    if (reduction == DiagReduction::mean_diag_then_norm) {
        return normalized_diag_norm(dataset_mean_diag(net, inputs, targets), net.parameter_count());
    }
    double total = 0.0;
    for (Eigen::Index n = 0; n < inputs.rows(); ++n) {
        total += hessian_diag_exact(net, row(inputs, n), targets[static_cast<std::size_t>(n)]).normalized_norm;
    }
    return total / static_cast<double>(inputs.rows());
}

}  // namespace rctaf
