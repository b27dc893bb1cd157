#pragma once

// Coefficient models for the mixed equation
//   dX(t) = a(t,X) dt + sum_k b_k(t,X) dW_k(t) + sum_j c_j(t,X) dZ_j(t)
// with a registry of named scalar families used by the CLI. Vector-valued
// models are built by filling MixedModel evaluators directly.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include <mixedsde/core.hpp>
#include <mixedsde/noise.hpp>

namespace mixedsde {

// Evaluators write a d-vector into `out`. Component evaluators receive the
// noise index (k for Wiener, j for the Hoelder driver). The derivative
// evaluator, when present, writes the partial derivative of c_j with respect
// to x_i. All evaluators must be total and safe to call concurrently.
using DriftFn = std::function<void(double, std::span<const double>, std::span<double>)>;
using ComponentFn =
    std::function<void(double, std::span<const double>, std::size_t, std::span<double>)>;
using ComponentDerivFn = std::function<void(double, std::span<const double>, std::size_t,
                                            std::size_t, std::span<double>)>;

struct MixedModel {
    std::size_t d = 1;
    std::size_t m = 1;
    std::size_t r = 1;
    DriftFn drift;
    ComponentFn wiener_diff;
    ComponentFn holder_diff;
    ComponentDerivFn holder_diff_deriv;  // optional; finite differences otherwise

    void validate() const {
        require(d >= 1, Errc::invalid_argument, "state dimension must be positive", "d");
        require(static_cast<bool>(drift), Errc::invalid_argument, "drift evaluator must be set", "drift");
        require(m == 0 || static_cast<bool>(wiener_diff), Errc::invalid_argument,
                "Wiener diffusion evaluator must be set when m > 0", "wiener_diff");
        require(r == 0 || static_cast<bool>(holder_diff), Errc::invalid_argument,
                "Hoelder diffusion evaluator must be set when r > 0", "holder_diff");
    }
};

// Square-root-type short-rate family X0 > 0, sigma > 0, lambda in [1/2, 1).
// The admissible Hurst range depends on whether a Wiener term is present.
struct CirParams {
    double a = 0.1;
    double sigma = 0.5;
    double lambda = 0.5;
    double x0 = 1.0;
    double hurst = 0.8;
    bool mixed = false;

    void validate() const {
        require(std::isfinite(a), Errc::invalid_argument, "drift rate must be finite", "a");
        // sigma = 0 degenerates to the deterministic rate equation; allowed as
        // an oracle case even though the market model assumes sigma > 0.
        require(sigma >= 0.0 && std::isfinite(sigma), Errc::invalid_argument,
                "volatility must be nonnegative", "sigma");
        require(lambda >= 0.5 && lambda < 1.0, Errc::invalid_argument, "exponent must lie in [1/2, 1)", "lambda");
        require(x0 > 0.0 && std::isfinite(x0), Errc::invalid_argument, "initial value must be positive", "x0");
        const double lo = mixed ? 1.0 - lambda / 2.0 : 1.0 / (1.0 + lambda);
        require(hurst > lo && hurst < 1.0, Errc::invalid_hurst,
                std::string("hurst must lie in (") + std::to_string(lo) + ", 1) for this model",
                "hurst");
    }

    HurstParam hurst_param() const {
        validate();
        return HurstParam::checked(hurst);
    }
};

// Linear auxiliary process dZ = rate*Z dt + vol d(W + B). Derived from CIR
// parameters through the power transform Y = X^{1-lambda}.
struct VasicekParams {
    double rate = 0.05;
    double vol = 0.25;
    double z0 = 1.0;

    static VasicekParams from_cir(const CirParams& p) {
        p.validate();
        return {p.a * (1.0 - p.lambda), p.sigma * (1.0 - p.lambda),
                std::pow(p.x0, 1.0 - p.lambda)};
    }

    void validate() const {
        require(std::isfinite(rate), Errc::invalid_argument, "rate must be finite", "rate");
        require(vol >= 0.0 && std::isfinite(vol), Errc::invalid_argument, "volatility must be nonnegative", "vol");
        require(std::isfinite(z0), Errc::invalid_argument, "start must be finite", "z0");
    }
};

using ParamMap = std::map<std::string, double, std::less<>>;

inline double param_or(const ParamMap& params, std::string_view key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

inline CirParams cir_params_from(const ParamMap& params, bool mixed) {
    CirParams p;
    p.a = param_or(params, "a", p.a);
    p.sigma = param_or(params, "sigma", p.sigma);
    p.lambda = param_or(params, "lambda", p.lambda);
    p.x0 = param_or(params, "x0", p.x0);
    p.hurst = param_or(params, "hurst", p.hurst);
    p.mixed = mixed;
    p.validate();
    return p;
}

namespace detail {

inline MixedModel scalar_model(DriftFn a, ComponentFn b, ComponentFn c, std::size_t m = 1) {
    MixedModel mdl;
    mdl.d = 1;
    mdl.m = m;
    mdl.r = 1;
    mdl.drift = std::move(a);
    mdl.wiener_diff = std::move(b);
    mdl.holder_diff = std::move(c);
    return mdl;
}

}  // namespace detail

inline MixedModel cir_model(const CirParams& p) {
    p.validate();
    const double a = p.a, sigma = p.sigma, lambda = p.lambda;
    auto power_diff = [sigma, lambda](double, std::span<const double> x, std::size_t,
                                      std::span<double> out) {
        out[0] = sigma * std::pow(std::max(x[0], 0.0), lambda);
    };
    return detail::scalar_model(
        [a](double, std::span<const double> x, std::span<double> out) { out[0] = a * x[0]; },
        power_diff, power_diff, p.mixed ? 1 : 0);
}

inline MixedModel vasicek_model(const VasicekParams& p) {
    p.validate();
    const double rate = p.rate, vol = p.vol;
    return detail::scalar_model(
        [rate](double, std::span<const double> x, std::span<double> out) {
            out[0] = rate * x[0];
        },
        [vol](double, std::span<const double>, std::size_t, std::span<double> out) {
            out[0] = vol;
        },
        [vol](double, std::span<const double>, std::size_t, std::span<double> out) {
            out[0] = vol;
        });
}

// Geometric family dX = a X dt + b X dW + c X dZ.
inline MixedModel linear_model(double a, double b, double c) {
    return detail::scalar_model(
        [a](double, std::span<const double> x, std::span<double> out) { out[0] = a * x[0]; },
        [b](double, std::span<const double> x, std::size_t, std::span<double> out) {
            out[0] = b * x[0];
        },
        [c](double, std::span<const double> x, std::size_t, std::span<double> out) {
            out[0] = c * x[0];
        });
}

// Affine family dX = (a0 + a1 X) dt + (b0 + b1 X) dW + (c0 + c1 X) dZ; the
// CLI-facing extension point for coefficients expressible in a config file.
inline MixedModel affine_model(double a0, double a1, double b0, double b1, double c0,
                               double c1) {
    MixedModel mdl = detail::scalar_model(
        [a0, a1](double, std::span<const double> x, std::span<double> out) {
            out[0] = a0 + a1 * x[0];
        },
        [b0, b1](double, std::span<const double> x, std::size_t, std::span<double> out) {
            out[0] = b0 + b1 * x[0];
        },
        [c0, c1](double, std::span<const double> x, std::size_t, std::span<double> out) {
            out[0] = c0 + c1 * x[0];
        });
    mdl.holder_diff_deriv = [c1](double, std::span<const double>, std::size_t, std::size_t,
                                 std::span<double> out) { out[0] = c1; };
    return mdl;
}

// Direct rate/vol/z0 keys take precedence; otherwise the parameters derive
// from the short-rate family through the power transform.
inline VasicekParams vasicek_params_from(const ParamMap& params) {
    VasicekParams vp;
    if (params.count("rate") || params.count("vol")) {
        vp.rate = param_or(params, "rate", vp.rate);
        vp.vol = param_or(params, "vol", vp.vol);
        vp.z0 = param_or(params, "z0", vp.z0);
    } else {
        CirParams cp;
        cp.a = param_or(params, "a", cp.a);
        cp.sigma = param_or(params, "sigma", cp.sigma);
        cp.lambda = param_or(params, "lambda", cp.lambda);
        cp.x0 = param_or(params, "x0", cp.x0);
        cp.mixed = true;
        vp = VasicekParams::from_cir(cp);
        vp.z0 = param_or(params, "z0", vp.z0);
    }
    vp.validate();
    return vp;
}

inline MixedModel make_model(std::string_view name, const ParamMap& params) {
    if (name == "cir-pure") return cir_model(cir_params_from(params, false));
    if (name == "cir-mixed") return cir_model(cir_params_from(params, true));
    if (name == "vasicek") return vasicek_model(vasicek_params_from(params));
    if (name == "linear")
        return linear_model(param_or(params, "a", 0.0), param_or(params, "b", 0.0),
                            param_or(params, "c", 0.0));
    if (name == "custom")
        return affine_model(param_or(params, "a0", 0.0), param_or(params, "a1", 0.0),
                            param_or(params, "b0", 0.0), param_or(params, "b1", 0.0),
                            param_or(params, "c0", 0.0), param_or(params, "c1", 0.0));
    fail(Errc::unknown_model, std::string("unknown model name: ") + std::string(name), "model");
}

}  // namespace mixedsde
