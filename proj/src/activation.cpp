#include "rctaf/activation.hpp"

#include "rctaf/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rctaf {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_finite(double x) {
    if (!std::isfinite(x)) {
        throw DomainError(fmt::format("activation input must be finite, got {}", x));
    }
}

// Logistic function without overflow for either sign of u.
double logistic(double u) {
    if (u >= 0.0) {
        return 1.0 / (1.0 + std::exp(-u));
    }
    const double e = std::exp(u);
    return e / (1.0 + e);
}

// ln(1 + e^u) = max(u, 0) + log1p(e^-|u|).
double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

// Building blocks of the RctAf derivatives, all written in u = alpha * x.
// q(u) = s(u) s(-u) = s'(u) is even; m(u) = u (1 - 2 s(u)) = -|u| tanh(|u|/2)
// is even as well, so every second derivative below is even by construction.
struct LogisticTerms {
    double s;  // s(u)
    double q;  // s(u) (1 - s(u))
    double m;  // u (1 - 2 s(u))
};

LogisticTerms logistic_terms(double u) {
    const double a = std::abs(u);
    const double lo = logistic(-a);
    const double hi = logistic(a);
    return {logistic(u), lo * hi, -a * std::tanh(0.5 * a)};
}

double rct_eval(const RctAf& p, double x) {
    const double u = p.alpha * x;
    switch (p.beta) {
        case 0:
            return softplus(u) / p.alpha;
        case 1:
            return x * logistic(u);
        default: {
            const auto t = logistic_terms(u);
            return x * (t.s + u * t.q);
        }
    }
}

double rct_d1(const RctAf& p, double x) {
    const double u = p.alpha * x;
    const auto t = logistic_terms(u);
    switch (p.beta) {
        case 0:
            return t.s;
        case 1:
            return t.s + u * t.q;
        default:
            return t.s + u * t.q * (3.0 + t.m);
    }
}

double rct_d2(const RctAf& p, double x) {
    const double u = p.alpha * x;
    const auto t = logistic_terms(u);
    switch (p.beta) {
        case 0:
            return p.alpha * t.q;
        case 1:
            return p.alpha * t.q * (2.0 + t.m);
        default:
            return p.alpha * t.q * (4.0 + 5.0 * t.m + t.m * t.m - 2.0 * u * u * t.q);
    }
}

constexpr double kInvSqrt2 = 0.70710678118654752440;

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

// sech(softplus(x)) = 2 / (e^sp + e^-sp) with e^sp = 1 + e^x.
double sech_softplus(double x) {
    const double esp = 1.0 + std::exp(x);
    return 2.0 / (esp + 1.0 / esp);
}

double mish_d2(double x) {
    const double t = std::tanh(softplus(x));
    const double sech = sech_softplus(x);
    const double s = logistic(x);
    return sech * sech * s * (2.0 + x * (logistic(-x) - 2.0 * t * s));
}

// Golden-section maximisation of |f| on [lo, hi].
template <class F>
std::pair<double, double> golden_max_abs(F&& f, double lo, double hi) {
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - ratio * (hi - lo);
    double d = lo + ratio * (hi - lo);
    double fc = std::abs(f(c));
    double fd = std::abs(f(d));
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        if (fc >= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = std::abs(f(c));
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = std::abs(f(d));
        }
    }
    return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

constexpr int kGridPoints = 4001;

}  // namespace

bool ActivationSpec::twice_differentiable() const noexcept {
    return !std::holds_alternative<Relu>(kind_) && !std::holds_alternative<LeakyRelu>(kind_);
}

std::string ActivationSpec::name() const {
    return std::visit(
        Overloaded{
            [](const RctAf& p) { return fmt::format("rct_af(alpha={},beta={})", p.alpha, p.beta); },
            [](const Relu&) { return std::string("relu"); },
            [](const LeakyRelu& p) { return fmt::format("leaky_relu(slope={})", p.slope); },
            [](const Elu&) { return std::string("elu"); },
            [](const Gelu&) { return std::string("gelu"); },
            [](const Swish&) { return std::string("swish"); },
            [](const Mish&) { return std::string("mish"); },
            [](const Softplus&) { return std::string("softplus"); },
        },
        kind_);
}

void ActivationSpec::validate() const {
    if (const auto* p = std::get_if<RctAf>(&kind_)) {
        if (!(p->alpha > 0.0) || !std::isfinite(p->alpha)) {
            throw DomainError(fmt::format("rct_af alpha must be positive and finite, got {}", p->alpha));
        }
        if (p->beta < 0 || p->beta > 2) {
            throw DomainError(fmt::format("rct_af beta must be 0, 1 or 2, got {}", p->beta));
        }
    }
    if (const auto* p = std::get_if<LeakyRelu>(&kind_); p && !std::isfinite(p->slope)) {
        throw DomainError("leaky_relu slope must be finite");
    }
}

double eval(const ActivationSpec& spec, double x) {
    require_finite(x);
    return std::visit(
        Overloaded{
            [x](const RctAf& p) { return rct_eval(p, x); },
            [x](const Relu&) { return x > 0.0 ? x : 0.0; },
            [x](const LeakyRelu& p) { return x > 0.0 ? x : p.slope * x; },
            [x](const Elu&) { return x > 0.0 ? x : std::expm1(x); },
            [x](const Gelu&) { return x * normal_cdf(x); },
            [x](const Swish&) { return rct_eval(RctAf{1.0, 1}, x); },
            [x](const Mish&) { return x * std::tanh(softplus(x)); },
            [x](const Softplus&) { return softplus(x); },
        },
        spec.kind());
}

FirstDerivative d1_checked(const ActivationSpec& spec, double x) {
    require_finite(x);
    return std::visit(
        Overloaded{
            [x](const RctAf& p) { return FirstDerivative{rct_d1(p, x)}; },
            [x](const Relu&) {
                return FirstDerivative{x >= 0.0 ? 1.0 : 0.0, x == 0.0};
            },
            [x](const LeakyRelu& p) {
                return FirstDerivative{x >= 0.0 ? 1.0 : p.slope, x == 0.0};
            },
            [x](const Elu&) { return FirstDerivative{x > 0.0 ? 1.0 : std::exp(x)}; },
            [x](const Gelu&) { return FirstDerivative{normal_cdf(x) + x * normal_pdf(x)}; },
            [x](const Swish&) { return FirstDerivative{rct_d1(RctAf{1.0, 1}, x)}; },
            [x](const Mish&) {
                const double sech = sech_softplus(x);
                return FirstDerivative{std::tanh(softplus(x)) + x * sech * sech * logistic(x)};
            },
            [x](const Softplus&) { return FirstDerivative{logistic(x)}; },
        },
        spec.kind());
}

double d2(const ActivationSpec& spec, double x) {
    require_finite(x);
    if (!spec.twice_differentiable()) {
        throw UnsupportedActivation(
            fmt::format("{} has no pointwise second derivative", spec.name()));
    }
    return std::visit(
        Overloaded{
            [x](const RctAf& p) { return rct_d2(p, x); },
            [](const Relu&) { return 0.0; },
            [](const LeakyRelu&) { return 0.0; },
            // One-sided values are e^0 = 1 and 0; the kink takes their mean.
            [x](const Elu&) { return x > 0.0 ? 0.0 : (x < 0.0 ? std::exp(x) : 0.5); },
            [x](const Gelu&) { return normal_pdf(x) * (2.0 - x * x); },
            [x](const Swish&) { return rct_d2(RctAf{1.0, 1}, x); },
            [x](const Mish&) { return mish_d2(x); },
            [x](const Softplus&) { return rct_d2(RctAf{1.0, 0}, x); },
        },
        spec.kind());
}

double rct_af_peak_curvature(double alpha, int beta) {
    switch (beta) {
        case 0:
            return alpha / 4.0;
        case 1:
            return alpha / 2.0;
        case 2:
            return alpha;
        default:
            throw DomainError(fmt::format("beta must be 0, 1 or 2, got {}", beta));
    }
}

double alpha_for_curvature(int beta, double target) {
    if (!(target > 0.0) || !std::isfinite(target)) {
        throw DomainError(fmt::format("curvature target must be positive, got {}", target));
    }
    switch (beta) {
        case 0:
            return 4.0 * target;
        case 1:
            return 2.0 * target;
        case 2:
            return target;
        default:
            throw DomainError(fmt::format("beta must be 0, 1 or 2, got {}", beta));
    }
}

CurvatureProfile max_abs_d2(const ActivationSpec& spec) {
    CurvatureProfile out{spec};
    if (!spec.twice_differentiable()) {
        out.max_abs_d2 = std::numeric_limits<double>::infinity();
        out.grid_max_abs_d2 = out.max_abs_d2;
        out.infinite = true;
        return out;
    }

    const auto* rct = std::get_if<RctAf>(&spec.kind());
    const double half_width = rct ? 20.0 / rct->alpha : 20.0;
    const double step = 2.0 * half_width / (kGridPoints - 1);
    auto f = [&spec](double x) { return d2(spec, x); };

    int best = 0;
    double best_val = -1.0;
    for (int i = 0; i < kGridPoints; ++i) {
        const double v = std::abs(f(-half_width + step * i));
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    const double center = -half_width + step * best;
    auto [x_ref, v_ref] = golden_max_abs(f, center - step, center + step);
    if (v_ref < best_val) {
        x_ref = center;
        v_ref = best_val;
    }
    out.grid_argmax_x = x_ref;
    out.grid_max_abs_d2 = v_ref;

    if (rct) {
        out.argmax_x = 0.0;
        out.max_abs_d2 = rct_af_peak_curvature(rct->alpha, rct->beta);
    } else {
        out.argmax_x = x_ref;
        out.max_abs_d2 = v_ref;
    }
    return out;
}

}  // namespace rctaf
