#pragma once

// Euler discretization of the mixed equation, the square-root short-rate
// family with absorption at zero, the exactly integrated linear auxiliary
// process, and sample-based coefficient hypothesis checks.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <mixedsde/core.hpp>
#include <mixedsde/model.hpp>
#include <mixedsde/report.hpp>
#include <mixedsde/rng.hpp>

namespace mixedsde {

struct SolveResult {
    SamplePath path;
    std::optional<double> nu0;
    bool absorbed = false;
};

namespace detail {

inline void check_noise(const SamplePath& n, std::size_t dim, const TimeGrid& grid,
                        const char* field) {
    if (dim == 0) return;  // channel absent; the argument is never read
    require(n.dim == dim, Errc::invalid_argument, "noise dimension mismatch", field);
    require(n.grid == grid, Errc::invalid_argument, "noise grid mismatch", field);
}

[[noreturn]] inline void fail_nonfinite(std::size_t node) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "non-finite state at node %zu", node);
    fail(Errc::numeric_failure, buf, "state");
}

}  // namespace detail

// Forward Euler step over both noise channels:
//   X_{i+1} = X_i + a(t_i, X_i) dt + sum_k b_k dW_{k,i} + sum_j c_j dZ_{j,i}.
inline SamplePath euler_mixed(const MixedModel& model, std::span<const double> x0,
                              const SamplePath& w, const SamplePath& z,
                              const TimeGrid& grid) {
    model.validate();
    require(x0.size() == model.d, Errc::invalid_argument, "initial state dimension mismatch",
            "x0");
    detail::check_noise(w, model.m, grid, "w");
    detail::check_noise(z, model.r, grid, "z");
    for (double v : x0)
        require(std::isfinite(v), Errc::invalid_argument, "initial state must be finite", "x0");

    const std::size_t d = model.d;
    const double dt = grid.dt();
    SamplePath out(grid, d);
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> xn(d), coef(d);
    std::copy(x.begin(), x.end(), out.at(0).begin());

    for (std::size_t i = 0; i < grid.steps; ++i) {
        const double t = grid.node(i);
        model.drift(t, x, coef);
        for (std::size_t c = 0; c < d; ++c) xn[c] = x[c] + coef[c] * dt;
        for (std::size_t k = 0; k < model.m; ++k) {
            const double dw = w.value(i + 1, k) - w.value(i, k);
            model.wiener_diff(t, x, k, coef);
            for (std::size_t c = 0; c < d; ++c) xn[c] += coef[c] * dw;
        }
        for (std::size_t j = 0; j < model.r; ++j) {
            const double dz = z.value(i + 1, j) - z.value(i, j);
            model.holder_diff(t, x, j, coef);
            for (std::size_t c = 0; c < d; ++c) xn[c] += coef[c] * dz;
        }
        for (std::size_t c = 0; c < d; ++c)
            if (!std::isfinite(xn[c])) detail::fail_nonfinite(i + 1);
        std::copy(xn.begin(), xn.end(), out.at(i + 1).begin());
        x.swap(xn);
    }
    return out;
}

// Square-root diffusion regularized below eps by a C^1 polynomial bridge;
// identical to sqrt(x) for x >= eps and zero for x <= 0.
inline double regularized_diffusion(double x, double eps) {
    require(eps > 0.0 && std::isfinite(eps), Errc::invalid_argument,
            "regularization level must be positive", "eps");
    if (x <= 0.0) return 0.0;
    if (x >= eps) return std::sqrt(x);
    const double x2 = x * x;
    return 2.5 * std::pow(eps, -1.5) * x2 - 1.5 * std::pow(eps, -2.5) * x2 * x;
}

// Euler scheme for the short-rate family with diffusion sigma*max(X,0)^lambda.
// The first step that lands at or below zero fixes the hitting time nu0 by
// linear interpolation of the crossing; the state is exactly zero afterwards.
inline SolveResult solve_cir(const CirParams& params, const SamplePath* w,
                             const SamplePath& b, const TimeGrid& grid) {
    params.validate();
    require((w != nullptr) == params.mixed, Errc::invalid_argument,
            "Wiener path must be supplied exactly for the mixed variant", "w");
    detail::check_noise(b, 1, grid, "b");
    if (w) detail::check_noise(*w, 1, grid, "w");

    const double dt = grid.dt();
    SolveResult res;
    res.path = SamplePath(grid, 1);
    double x = params.x0;
    res.path.value(0) = x;
    for (std::size_t i = 0; i < grid.steps; ++i) {
        const double dz = b.value(i + 1) - b.value(i) + (w ? w->value(i + 1) - w->value(i) : 0.0);
        const double diff = params.sigma * std::pow(std::max(x, 0.0), params.lambda);
        const double xn = x + params.a * x * dt + diff * dz;
        if (!std::isfinite(xn)) detail::fail_nonfinite(i + 1);
        if (xn <= 0.0) {
            res.nu0 = grid.node(i) + dt * x / (x - xn);
            res.absorbed = true;
            for (std::size_t k = i + 1; k <= grid.steps; ++k) res.path.value(k) = 0.0;
            return res;
        }
        res.path.value(i + 1) = xn;
        x = xn;
    }
    return res;
}

// Exact exponential integrator for dZ = rate*Z dt + vol d(W + B): the
// homogeneous factor is integrated in closed form and the noise increment
// enters with unit weight (right endpoint of the convolution kernel). The
// deterministic part is bias-free and the discrete solution stays an upper
// bound for the transformed short-rate process driven by the same noise.
inline SamplePath solve_vasicek(const VasicekParams& params, const SamplePath& w,
                                const SamplePath& b, const TimeGrid& grid) {
    params.validate();
    detail::check_noise(w, 1, grid, "w");
    detail::check_noise(b, 1, grid, "b");
    const double decay = std::exp(params.rate * grid.dt());
    SamplePath out(grid, 1);
    double z = params.z0;
    out.value(0) = z;
    for (std::size_t i = 0; i < grid.steps; ++i) {
        const double dm = w.value(i + 1) - w.value(i) + b.value(i + 1) - b.value(i);
        z = decay * z + params.vol * dm;
        if (!std::isfinite(z)) detail::fail_nonfinite(i + 1);
        out.value(i + 1) = z;
    }
    return out;
}

// Node-wise power transform Y = X^{1-lambda}; absorbed zeros stay zero.
inline SamplePath transform_y(const SolveResult& x, double lambda) {
    require(lambda >= 0.5 && lambda < 1.0, Errc::invalid_argument,
            "exponent must lie in [1/2, 1)", "lambda");
    require(x.path.dim == 1, Errc::invalid_argument, "transform takes a scalar path", "dim");
    SamplePath out(x.path.grid, 1);
    const double e = 1.0 - lambda;
    for (std::size_t i = 0; i <= x.path.grid.steps; ++i)
        out.value(i) = std::pow(std::max(x.path.value(i), 0.0), e);
    return out;
}

// Sampling box and thresholds for the coefficient hypothesis checks.
struct HypothesisBox {
    double t_min = 0.0;
    double t_max = 1.0;
    std::vector<double> x_min{0.0};
    std::vector<double> x_max{1.0};

    void validate(std::size_t d) const {
        require(t_max > t_min, Errc::invalid_argument, "time box must be nondegenerate",
                "box.t");
        require(x_min.size() == d && x_max.size() == d, Errc::invalid_argument,
                "box dimension mismatch", "box.x");
        for (std::size_t i = 0; i < d; ++i)
            require(x_max[i] > x_min[i], Errc::invalid_argument,
                    "state box must be nondegenerate", "box.x");
    }
};

struct HypothesisOptions {
    std::size_t samples = 256;
    double growth_threshold = 100.0;
    double lipschitz_threshold = 100.0;
    double holder_threshold = 100.0;
    double holder_beta = 1.0;
    double deriv_step = 1e-6;
    SeedSpec seed{20240901u, 0};
};

namespace detail {

// Central difference fallback for the spatial derivative of c_j.
inline void holder_deriv(const MixedModel& model, double t, std::span<const double> x,
                         std::size_t j, std::size_t i, double step, std::vector<double>& lo,
                         std::vector<double>& hi, std::span<double> out) {
    if (model.holder_diff_deriv) {
        model.holder_diff_deriv(t, x, j, i, out);
        return;
    }
    std::vector<double> xp(x.begin(), x.end());
    xp[i] = x[i] + step;
    model.holder_diff(t, xp, j, hi);
    xp[i] = x[i] - step;
    model.holder_diff(t, xp, j, lo);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = (hi[c] - lo[c]) / (2.0 * step);
}

inline std::string point_witness(double t, std::span<const double> x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "t=%.6g x=(", t);
    std::string s = buf;
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::snprintf(buf, sizeof buf, i + 1 < x.size() ? "%.6g, " : "%.6g", x[i]);
        s += buf;
    }
    return s + ")";
}

}  // namespace detail

// Monte Carlo estimate of the hypothesis constants over a box: growth ratio
// (M1 shape), spatial Lipschitz quotients including the c-derivative clause
// (M2 shape), and time-Hoelder quotients with exponent beta (M3 shape). Pair
// separations are drawn log-uniformly so near-degenerate quotients surface.
inline ConditionReport check_hypotheses(const MixedModel& model, const HypothesisBox& box,
                                        const HypothesisOptions& opt = {}) {
    model.validate();
    box.validate(model.d);
    require(opt.samples >= 2, Errc::invalid_argument, "need at least two samples", "samples");
    require(opt.holder_beta > 0.0 && opt.holder_beta <= 1.0, Errc::invalid_argument,
            "Hoelder exponent must lie in (0, 1]", "holder_beta");

    const std::size_t d = model.d;
    auto eng = make_engine(opt.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    double x_diam = 0.0;
    for (std::size_t i = 0; i < d; ++i) x_diam += sq(box.x_max[i] - box.x_min[i]);
    x_diam = std::sqrt(x_diam);
    const double t_diam = box.t_max - box.t_min;

    auto draw_point = [&](double& t, std::vector<double>& x) {
        t = box.t_min + t_diam * unif(eng);
        for (std::size_t i = 0; i < d; ++i)
            x[i] = box.x_min[i] + (box.x_max[i] - box.x_min[i]) * unif(eng);
    };
    auto log_uniform = [&](double span) { return span * std::pow(1e-6, unif(eng)); };

    ConditionEntry growth{"M1", 0.0, opt.growth_threshold, true, ""};
    ConditionEntry lipschitz{"M2", 0.0, opt.lipschitz_threshold, true, ""};
    ConditionEntry hoelder{"M3", 0.0, opt.holder_threshold, true, ""};

    std::vector<double> x(d), y(d), dir(d);
    std::vector<double> va(d), vb(d), vc(d), wa(d), wb(d), wc(d), tmp1(d), tmp2(d);
    std::vector<double> dc(d), dc2(d);
    double t = 0.0, s = 0.0;

    try {
        for (std::size_t it = 0; it < opt.samples; ++it) {
            // Growth ratio at a random point.
            draw_point(t, x);
            model.drift(t, x, va);
            double bmax = 0.0, cmax = 0.0;
            for (std::size_t k = 0; k < model.m; ++k) {
                model.wiener_diff(t, x, k, vb);
                bmax = std::max(bmax, euclid_norm(vb));
            }
            for (std::size_t j = 0; j < model.r; ++j) {
                model.holder_diff(t, x, j, vc);
                cmax = std::max(cmax, euclid_norm(vc));
            }
            const double g = (euclid_norm(va) + bmax + cmax) / (1.0 + euclid_norm(x));
            if (g > growth.observed) {
                growth.observed = g;
                growth.witness = detail::point_witness(t, x);
            }

            // Spatial quotient at a log-uniform separation along a random
            // direction, clamped back into the box. A quarter of the base
            // points sit on box corners so boundary blow-ups are probed.
            if (unif(eng) < 0.25)
                for (std::size_t i = 0; i < d; ++i)
                    x[i] = unif(eng) < 0.5 ? box.x_min[i] : box.x_max[i];
            double nrm = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                dir[i] = gauss(eng);
                nrm += sq(dir[i]);
            }
            nrm = std::sqrt(nrm);
            if (nrm == 0.0) continue;
            const double step = log_uniform(x_diam);
            for (std::size_t i = 0; i < d; ++i)
                y[i] = std::clamp(x[i] + dir[i] / nrm * step, box.x_min[i], box.x_max[i]);
            const double sep = euclid_dist(x, y);
            if (sep > 1e-14 * (1.0 + x_diam)) {
                model.drift(t, x, va);
                model.drift(t, y, wa);
                double q = euclid_dist(va, wa);
                double qb = 0.0;
                for (std::size_t k = 0; k < model.m; ++k) {
                    model.wiener_diff(t, x, k, vb);
                    model.wiener_diff(t, y, k, wb);
                    qb = std::max(qb, euclid_dist(vb, wb));
                }
                double qc = 0.0;
                for (std::size_t j = 0; j < model.r; ++j) {
                    model.holder_diff(t, x, j, vc);
                    model.holder_diff(t, y, j, wc);
                    double qd = 0.0;
                    for (std::size_t i = 0; i < d; ++i) {
                        detail::holder_deriv(model, t, x, j, i, opt.deriv_step, tmp1, tmp2, dc);
                        detail::holder_deriv(model, t, y, j, i, opt.deriv_step, tmp1, tmp2, dc2);
                        qd = std::max(qd, euclid_dist(dc, dc2));
                    }
                    qc = std::max(qc, euclid_dist(vc, wc) + qd);
                }
                q = (q + qb + qc) / sep;
                if (q > lipschitz.observed) {
                    lipschitz.observed = q;
                    lipschitz.witness = detail::point_witness(t, x) + " vs " +
                                        detail::point_witness(t, y);
                }
            }

            // Time quotient at a log-uniform separation, same spatial point.
            // The left time edge is probed explicitly for the same reason.
            draw_point(s, x);
            if (unif(eng) < 0.25) s = box.t_min;
            double t2 = std::min(s + log_uniform(t_diam), box.t_max);
            if (t2 - s > 1e-14 * (1.0 + t_diam)) {
                model.drift(s, x, va);
                model.drift(t2, x, wa);
                double q = euclid_dist(va, wa);
                double qb = 0.0;
                for (std::size_t k = 0; k < model.m; ++k) {
                    model.wiener_diff(s, x, k, vb);
                    model.wiener_diff(t2, x, k, wb);
                    qb = std::max(qb, euclid_dist(vb, wb));
                }
                double qc = 0.0;
                for (std::size_t j = 0; j < model.r; ++j) {
                    model.holder_diff(s, x, j, vc);
                    model.holder_diff(t2, x, j, wc);
                    double qd = 0.0;
                    for (std::size_t i = 0; i < d; ++i) {
                        detail::holder_deriv(model, s, x, j, i, opt.deriv_step, tmp1, tmp2, dc);
                        detail::holder_deriv(model, t2, x, j, i, opt.deriv_step, tmp1, tmp2,
                                             dc2);
                        qd = std::max(qd, euclid_dist(dc, dc2));
                    }
                    qc = std::max(qc, euclid_dist(vc, wc) + qd);
                }
                q = (q + qb + qc) / std::pow(t2 - s, opt.holder_beta);
                if (q > hoelder.observed) {
                    hoelder.observed = q;
                    hoelder.witness = detail::point_witness(s, x) + " vs " +
                                      detail::point_witness(t2, x);
                }
            }
        }
    } catch (const std::exception& ex) {
        ConditionReport rep;
        rep.entries.push_back({"evaluator", std::numeric_limits<double>::infinity(), 0.0,
                               false,
                               std::string("evaluator failed near ") +
                                   detail::point_witness(t, x) + ": " + ex.what()});
        return rep;
    }

    growth.passed = growth.observed <= growth.threshold;
    lipschitz.passed = lipschitz.observed <= lipschitz.threshold;
    hoelder.passed = hoelder.observed <= hoelder.threshold;
    ConditionReport rep;
    rep.entries = {growth, lipschitz, hoelder};
    return rep;
}

}  // namespace mixedsde
