#pragma once

#include "rctaf/network.hpp"

#include <vector>

namespace rctaf {

/// sigma'(z) and sigma''(z) at every hidden neuron of one forward pass,
/// indexed like ForwardTrace::z (the output layer entry is left empty).
///
/// The D-recursion and the path expansion consume this table rather than the
/// activation itself, so tests can substitute synthetic curvature (for example
/// sigma'' == 0) at chosen neurons.
struct LocalDerivatives {
    std::vector<Vector> first;
    std::vector<Vector> second;
};

/// Throws UnsupportedActivation for the ReLU family.
LocalDerivatives local_derivatives(const Network& net, const ForwardTrace& trace);

/// D[l]_i = d delta[l]_i / d z[l]_i for every layer; D.back() == 0.
struct DTable {
    std::vector<Vector> D;
};

DTable d_table(const Network& net, const ForwardTrace& trace, const Deltas& deltas);

/// Backward recursion for the Hessian M[l] of f with respect to z[l]:
///   M[l] = diag(sigma''(z[l]) * S[l]) + diag(sigma'(z[l])) W[l+1]^T M[l+1] W[l+1] diag(sigma'(z[l]))
/// with S[l]_i = sum_t delta[l+1]_t W[l+1]_{ti} summed directly, so the result
/// stays defined where sigma' vanishes. D[l] = diag(M[l]). Where M[l+1] is
/// diagonal (the last hidden layer and the one before it) this reduces to
///   D[l]_i = sigma''(z[l]_i) S[l]_i + sigma'(z[l]_i)^2 sum_t D[l+1]_t W[l+1]_{ti}^2.
DTable d_table(const Network& net, const Deltas& deltas, const LocalDerivatives& local);

struct HessianDiagReport {
    Vector diag;
    Vector gauss_newton_part;  // (df/dtheta_k)^2
    Vector residual_part;      // (f - y) c_k^2 D
    double residual = 0.0;     // f - y
    double normalized_norm = 0.0;
};

/// Assembles the per-parameter report from a D table.
HessianDiagReport assemble_report(const Network& net, const ForwardTrace& trace, const Deltas& deltas,
                                  const DTable& table, double y);

/// Exact diagonal of the squared-loss Hessian via the D-recursion.
HessianDiagReport hessian_diag_exact(const Network& net, std::span<const double> x, double y);

inline constexpr std::size_t kMaxPathHiddenNeurons = 12;
inline constexpr std::size_t kMaxPathLayers = 4;

/// Same report, with every D[l]_i expanded over neuron paths (l, i) -> (r, j):
///   D[l]_i = sum_{r, j} sigma''(z[r]_j) delta[r]_j / sigma'(z[r]_j) * J_{rj}^2,
/// J_{rj} being the sum over paths of prod sigma' W. Exponential cost; capped
/// at 12 hidden neurons and four weight layers (CapacityError). Throws
/// SingularityError when a path endpoint has |sigma'| < 1e-300.
HessianDiagReport hessian_diag_paths(const Network& net, std::span<const double> x, double y);

/// Path expansion of the D table from explicit local derivatives.
DTable d_table_paths(const Network& net, const Deltas& deltas, const LocalDerivatives& local);

/// Second central difference of the loss along each parameter.
Vector hessian_diag_fd(const Network& net, std::span<const double> x, double y, double step = 1e-4);

/// Central difference of the analytic gradient along each parameter; an
/// oracle with different truncation behaviour from hessian_diag_fd.
Vector hessian_diag_fd_gradient(const Network& net, std::span<const double> x, double y,
                                double step = 1e-5);

/// sqrt((1/p) sum_k diag_k^2). Throws DomainError for p == 0 or a length mismatch.
double normalized_diag_norm(const Vector& diag, std::size_t p);

enum class DiagReduction { mean_diag_then_norm, mean_of_norms };

/// Hessian-diagonal norm of the mean loss over a dataset (`inputs` is n x d).
double dataset_diag_norm(const Network& net, const Matrix& inputs, std::span<const double> targets,
                         DiagReduction reduction = DiagReduction::mean_diag_then_norm);

/// Mean of the per-sample exact diagonals.
Vector dataset_mean_diag(const Network& net, const Matrix& inputs, std::span<const double> targets);

}  // namespace rctaf
