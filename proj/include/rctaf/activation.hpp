#pragma once

#include <concepts>
#include <string>
#include <variant>

namespace rctaf {

/// Recursive curvature-tunable activation. beta = 0 is a scaled softplus,
/// beta = 1 a scaled Swish, beta = 2 one more application of (.)' * x.
struct RctAf {
    double alpha = 1.0;
    int beta = 0;
    bool operator==(const RctAf&) const = default;
};

struct Relu {
    bool operator==(const Relu&) const = default;
};

struct LeakyRelu {
    double slope = 0.01;
    bool operator==(const LeakyRelu&) const = default;
};

struct Elu {
    bool operator==(const Elu&) const = default;
};

/// Exact (erf-based) GELU.
struct Gelu {
    bool operator==(const Gelu&) const = default;
};

struct Swish {
    bool operator==(const Swish&) const = default;
};

struct Mish {
    bool operator==(const Mish&) const = default;
};

struct Softplus {
    bool operator==(const Softplus&) const = default;
};

using ActivationKind =
    std::variant<RctAf, Relu, LeakyRelu, Elu, Gelu, Swish, Mish, Softplus>;

/// Validated description of one activation function.
class ActivationSpec {
public:
    ActivationSpec() : ActivationSpec(RctAf{}) {}

    template <class K>
        requires std::constructible_from<ActivationKind, K>
    ActivationSpec(K kind) : kind_(std::move(kind)) {  // NOLINT(google-explicit-constructor)
        validate();
    }

    static ActivationSpec rct_af(double alpha, int beta) { return RctAf{alpha, beta}; }

    const ActivationKind& kind() const noexcept { return kind_; }

    /// False for the ReLU family, whose second derivative is a distribution.
    bool twice_differentiable() const noexcept;

    /// Short human-readable label, e.g. "rct_af(alpha=14,beta=1)" or "gelu".
    std::string name() const;

    bool operator==(const ActivationSpec&) const = default;

private:
    void validate() const;

    ActivationKind kind_;
};

struct FirstDerivative {
    double value = 0.0;
    /// Set when x sits on a kink and value is the right-hand derivative.
    bool subgradient = false;
};

struct CurvatureProfile {
    ActivationSpec spec;
    double argmax_x = 0.0;
    /// max |sigma''|; +inf for kinked activations (see `infinite`).
    double max_abs_d2 = 0.0;
    bool infinite = false;
    /// Dense grid search plus golden-section refinement. For RctAf this is the
    /// independent check of the analytic maximum; for baselines it is the value.
    double grid_max_abs_d2 = 0.0;
    double grid_argmax_x = 0.0;
};

double eval(const ActivationSpec& spec, double x);

FirstDerivative d1_checked(const ActivationSpec& spec, double x);

inline double d1(const ActivationSpec& spec, double x) { return d1_checked(spec, x).value; }

/// Second derivative. Throws UnsupportedActivation for ReLU and LeakyReLU.
double d2(const ActivationSpec& spec, double x);

CurvatureProfile max_abs_d2(const ActivationSpec& spec);

/// alpha giving max|sigma''| == target for the given recursion depth.
double alpha_for_curvature(int beta, double target);

/// Analytic max|sigma''| of RctAf: alpha/4, alpha/2, alpha for beta 0, 1, 2.
double rct_af_peak_curvature(double alpha, int beta);

}  // namespace rctaf
