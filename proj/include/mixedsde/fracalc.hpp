#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <mixedsde/core.hpp>

namespace mixedsde {

/// Exponent bundle for the fractional calculus. The order alpha must sit
/// inside (1 - gamma, 1/2), where gamma is the working Hoelder exponent of
/// the rough driver; beta is the time-regularity exponent used by the drift
/// hypotheses.
struct FracParams {
    double alpha;
    double gamma = 0.75;
    double beta = 1.0;

    FracParams(double a, double g = 0.75, double b = 1.0) : alpha(a), gamma(g), beta(b) {
        require(gamma > 0.5 && gamma < 1.0, Errc::invalid_argument,
                "working Hoelder exponent must lie in (1/2, 1)", "gamma");
        require(alpha > 1.0 - gamma && alpha < 0.5, Errc::invalid_argument,
                "fractional order must lie in (1 - gamma, 1/2)", "alpha");
        require(beta > 1.0 - gamma && beta <= 1.0, Errc::invalid_argument,
                "time exponent must lie in (1 - gamma, 1]", "beta");
    }

    /// Defaults tied to a Hurst exponent: gamma just below H, alpha at the
    /// midpoint of its admissible window.
    static FracParams for_hurst(double H) {
        return FracParams((3.0 - 2.0 * H) / 4.0, H - 0.01, 1.0);
    }
};

/// Values of a one-sided fractional derivative at the interior nodes of
/// [a, b]; node index `first` corresponds to values.front().
struct FracDerivative {
    TimeGrid grid;
    std::size_t first = 0;
    std::vector<double> values;
};

namespace detail {

constexpr std::size_t frac_max_steps = 8192;

inline void check_frac_size(std::size_t n) {
    require(n <= frac_max_steps, Errc::resource_limit,
            "fractional-calculus routines are capped at 8192 steps", "grid.N");
}

// val[k] = (k dt)^e / e; antiderivative of w^{e-1} sampled at node distances.
inline std::vector<double> antider_table(std::size_t n, double dt, double e) {
    std::vector<double> v(n + 1, 0.0);
    for (std::size_t k = 1; k <= n; ++k) v[k] = std::pow(static_cast<double>(k) * dt, e) / e;
    return v;
}

// val[k] = (k dt)^e; val[0] left at zero and never read for negative e.
inline std::vector<double> pow_table(std::size_t n, double dt, double e) {
    std::vector<double> v(n + 1, 0.0);
    for (std::size_t k = 1; k <= n; ++k) v[k] = std::pow(static_cast<double>(k) * dt, e);
    return v;
}

// D^alpha_{a+} of a scalar piecewise-linear path given by local node values
// f[0..L]. Exact per panel; out[0] is set to zero, meaningful only when
// f[0] == 0 (the limit value of the subtracted remainder in the integral).
inline std::vector<double> plus_core(std::span<const double> f, double dt, double alpha) {
    const std::size_t L = f.size() - 1;
    const double cg = 1.0 / std::tgamma(1.0 - alpha);
    const auto bnd = pow_table(L, dt, -alpha);
    const auto g1 = antider_table(L, dt, -alpha);
    const auto g2 = antider_table(L, dt, 1.0 - alpha);
    std::vector<double> out(L + 1, 0.0);
    for (std::size_t i = 1; i <= L; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < i; ++j) {
            const std::size_t k1 = i - j - 1, k2 = i - j;
            const double s = (f[j + 1] - f[j]) / dt;
            double term = s * (g2[k2] - g2[k1]);
            if (k1 > 0) {
                const double A = f[i] - f[j] - s * (static_cast<double>(k2) * dt);
                term += A * (g1[k2] - g1[k1]);
            }
            acc += term;
        }
        out[i] = cg * (f[i] * bnd[i] + alpha * acc);
    }
    return out;
}

// Real-convention D^{1-alpha}_{b-} of a scalar piecewise-linear path; sign is
// normalized so that an increasing path has a positive derivative. out[L]
// carries the boundary limit zero.
inline std::vector<double> minus_core(std::span<const double> g, double dt, double alpha) {
    const std::size_t L = g.size() - 1;
    const double cg = 1.0 / std::tgamma(alpha);
    const auto bnd = pow_table(L, dt, alpha - 1.0);
    const auto h1 = antider_table(L, dt, alpha - 1.0);
    const auto h2 = antider_table(L, dt, alpha);
    std::vector<double> out(L + 1, 0.0);
    for (std::size_t i = 0; i < L; ++i) {
        double acc = 0.0;
        for (std::size_t j = i; j < L; ++j) {
            const std::size_t k1 = j - i, k2 = j - i + 1;
            const double s = (g[j + 1] - g[j]) / dt;
            double term = s * (h2[k2] - h2[k1]);
            if (k1 > 0) {
                const double B = g[j] - g[i] - s * (static_cast<double>(k1) * dt);
                term += B * (h1[k2] - h1[k1]);
            }
            acc += term;
        }
        out[i] = cg * ((g[L] - g[i]) * bnd[L - i] + (1.0 - alpha) * acc);
    }
    return out;
}

inline std::vector<double> local_values(const SamplePath& p, std::size_t ia, std::size_t ib) {
    std::vector<double> v(ib - ia + 1);
    for (std::size_t i = ia; i <= ib; ++i) v[i - ia] = p.value(i);
    return v;
}

inline void check_scalar_pair(const SamplePath& f, const SamplePath& g) {
    require(f.dim == 1 && g.dim == 1, Errc::invalid_argument,
            "fractional integrals take scalar paths", "dim");
    require(f.grid == g.grid, Errc::invalid_argument, "paths must share one grid", "grid");
}

}  // namespace detail

/// Left-sided derivative of order alpha on (a, b); values at interior nodes.
inline FracDerivative frac_deriv_plus(const SamplePath& f, double a, double b, const FracParams& p) {
    require(f.dim == 1, Errc::invalid_argument, "fractional derivative takes a scalar path", "dim");
    detail::check_frac_size(f.grid.steps);
    const std::size_t ia = f.grid.index_of(a), ib = f.grid.index_of(b);
    require(ia + 2 <= ib, Errc::invalid_argument, "interval needs at least one interior node", "a");
    auto loc = detail::local_values(f, ia, ib);
    auto full = detail::plus_core(loc, f.grid.dt(), p.alpha);
    return FracDerivative{f.grid, ia + 1, {full.begin() + 1, full.end() - 1}};
}

/// Right-sided derivative of order 1 - alpha on (a, b); values at interior
/// nodes, real sign-normalized convention.
inline FracDerivative frac_deriv_minus(const SamplePath& g, double a, double b, const FracParams& p) {
    require(g.dim == 1, Errc::invalid_argument, "fractional derivative takes a scalar path", "dim");
    detail::check_frac_size(g.grid.steps);
    const std::size_t ia = g.grid.index_of(a), ib = g.grid.index_of(b);
    require(ia + 2 <= ib, Errc::invalid_argument, "interval needs at least one interior node", "a");
    auto loc = detail::local_values(g, ia, ib);
    auto full = detail::minus_core(loc, g.grid.dt(), p.alpha);
    return FracDerivative{g.grid, ia + 1, {full.begin() + 1, full.end() - 1}};
}

/// Generalized Lebesgue-Stieltjes integral of f against g over [a, b],
/// evaluated as the product of the two one-sided derivatives. The constant
/// part of f is split off first and integrated in closed form, which removes
/// the non-integrable endpoint concentration; the remainder vanishes at a, so
/// a trapezoid over the derivative product converges.
inline double gls_integral(const SamplePath& f, const SamplePath& g, double a, double b,
                           const FracParams& p) {
    detail::check_scalar_pair(f, g);
    detail::check_frac_size(f.grid.steps);
    const std::size_t ia = f.grid.index_of(a), ib = f.grid.index_of(b);
    require(ia + 2 <= ib, Errc::invalid_argument, "interval needs at least one interior node", "a");
    const double dt = f.grid.dt();

    auto floc = detail::local_values(f, ia, ib);
    const double f_a = floc[0];
    for (double& x : floc) x -= f_a;
    auto gloc = detail::local_values(g, ia, ib);

    const auto dplus = detail::plus_core(floc, dt, p.alpha);
    const auto dminus = detail::minus_core(gloc, dt, p.alpha);

    double quad = 0.0;
    for (std::size_t i = 1; i + 1 < dplus.size(); ++i) quad += dplus[i] * dminus[i];
    quad *= dt;  // integrand vanishes at both interval ends

    return f_a * (gloc.back() - gloc.front()) + quad;
}

/// sup over grid pairs u < v <= t of |D^{1-alpha}_{v-} g (u)|.
inline double lambda_coeff(const SamplePath& g, double t, const FracParams& p) {
    require(g.dim == 1, Errc::invalid_argument, "lambda coefficient takes a scalar path", "dim");
    detail::check_frac_size(g.grid.steps);
    const std::size_t it = g.grid.index_of(t);
    require(it >= 1, Errc::invalid_argument, "need at least one grid step below t", "t");
    const double dt = g.grid.dt();
    const double alpha = p.alpha;
    const double cg = 1.0 / std::tgamma(alpha);
    const auto bnd = detail::pow_table(it, dt, alpha - 1.0);
    const auto h1 = detail::antider_table(it, dt, alpha - 1.0);
    const auto h2 = detail::antider_table(it, dt, alpha);

    double best = 0.0;
    for (std::size_t iu = 0; iu < it; ++iu) {
        double acc = 0.0;
        for (std::size_t iv = iu + 1; iv <= it; ++iv) {
            const std::size_t j = iv - 1;
            const std::size_t k1 = j - iu, k2 = iv - iu;
            const double s = (g.value(j + 1) - g.value(j)) / dt;
            double term = s * (h2[k2] - h2[k1]);
            if (k1 > 0) {
                const double B = g.value(j) - g.value(iu) - s * (static_cast<double>(k1) * dt);
                term += B * (h1[k2] - h1[k1]);
            }
            acc += term;
            const double val =
                std::abs((g.value(iv) - g.value(iu)) * bnd[k2] + (1.0 - alpha) * acc) * cg;
            best = std::max(best, val);
        }
    }
    return best;
}

/// A-priori estimate dominating |gls_integral(f, g, a, b)|:
///   C_alpha * Lambda * int_a^b ( |f(s)| (s-a)^{-alpha}
///                                + int_a^s |f(s)-f(z)| (s-z)^{-1-alpha} dz ) ds
/// with C_alpha = 1 / Gamma(1 - alpha), which dominates the triangle-
/// inequality bound on the left derivative for every alpha in (0, 1).
inline double integral_bound(const SamplePath& f, const SamplePath& g, double a, double b,
                             const FracParams& p) {
    detail::check_scalar_pair(f, g);
    detail::check_frac_size(f.grid.steps);
    const std::size_t ia = f.grid.index_of(a), ib = f.grid.index_of(b);
    require(ia + 2 <= ib, Errc::invalid_argument, "interval needs at least one interior node", "a");
    const double dt = f.grid.dt();
    const double alpha = p.alpha;
    const std::size_t L = ib - ia;

    const double lambda = lambda_coeff(g, b, p);
    const double c_alpha = 1.0 / std::tgamma(1.0 - alpha);

    const auto p1 = detail::antider_table(L, dt, 1.0 - alpha);
    const auto p2 = detail::antider_table(L, dt, 2.0 - alpha);
    double outer_head = 0.0;  // int |f(s)| (s-a)^{-alpha} ds
    for (std::size_t j = ia; j < ib; ++j) {
        const std::size_t k1 = j - ia, k2 = k1 + 1;
        const double fj = std::abs(f.value(j)), fj1 = std::abs(f.value(j + 1));
        const double c = (fj1 - fj) / dt;
        const double A = fj - c * (static_cast<double>(k1) * dt);
        outer_head += A * (p1[k2] - p1[k1]) + c * (p2[k2] - p2[k1]);
    }

    const auto q1 = detail::antider_table(L, dt, -alpha);
    const auto q2 = detail::antider_table(L, dt, 1.0 - alpha);
    double outer_tail = 0.0;  // trapezoid over s of the inner increment integral
    for (std::size_t i = ia + 1; i <= ib; ++i) {
        double inner = 0.0;
        for (std::size_t j = ia; j < i; ++j) {
            const std::size_t k1 = i - j - 1, k2 = i - j;
            const double fj = std::abs(f.value(i) - f.value(j));
            const double fj1 = std::abs(f.value(i) - f.value(j + 1));
            const double c = (fj - fj1) / dt;
            double term = c * (q2[k2] - q2[k1]);
            if (k1 > 0) {
                const double A = fj1 - c * (static_cast<double>(k1) * dt);
                term += A * (q1[k2] - q1[k1]);
            }
            inner += term;
        }
        outer_tail += (i == ib) ? 0.5 * inner : inner;  // inner vanishes at s = a
    }
    outer_tail *= dt;

    return c_alpha * lambda * (outer_head + outer_tail);
}

/// sup over s <= t of |f(s)| + int_0^s |f(s)-f(z)| (s-z)^{-1-alpha} dz.
inline double norm_inf(const SamplePath& f, double t, const FracParams& p) {
    detail::check_frac_size(f.grid.steps);
    const std::size_t it = f.grid.index_of(t);
    const double dt = f.grid.dt();
    const double alpha = p.alpha;
    const auto q1 = detail::antider_table(it, dt, -alpha);
    const auto q2 = detail::antider_table(it, dt, 1.0 - alpha);

    double best = euclid_norm(f.at(0));
    for (std::size_t i = 1; i <= it; ++i) {
        double inner = 0.0;
        for (std::size_t j = 0; j < i; ++j) {
            const std::size_t k1 = i - j - 1, k2 = i - j;
            const double fj = euclid_dist(f.at(i), f.at(j));
            const double fj1 = euclid_dist(f.at(i), f.at(j + 1));
            const double c = (fj - fj1) / dt;
            double term = c * (q2[k2] - q2[k1]);
            if (k1 > 0) {
                const double A = fj1 - c * (static_cast<double>(k1) * dt);
                term += A * (q1[k2] - q1[k1]);
            }
            inner += term;
        }
        best = std::max(best, euclid_norm(f.at(i)) + inner);
    }
    return best;
}

/// sup over grid pairs u < v < t of
///   |f(v)-f(u)| / (v-u)^{1-alpha} + int_u^v |f(u)-f(z)| (z-u)^{alpha-2} dz.
inline double seminorm_0(const SamplePath& f, double t, const FracParams& p) {
    detail::check_frac_size(f.grid.steps);
    const std::size_t it = f.grid.index_of(t);
    require(it >= 2, Errc::invalid_argument, "need at least two grid steps below t", "t");
    const double dt = f.grid.dt();
    const double alpha = p.alpha;
    const auto pair_pw = detail::pow_table(it, dt, alpha - 1.0);
    const auto r1 = detail::antider_table(it, dt, alpha - 1.0);
    const auto r2 = detail::antider_table(it, dt, alpha);

    double best = 0.0;
    for (std::size_t iu = 0; iu + 1 < it; ++iu) {
        double inner = 0.0;
        for (std::size_t iv = iu + 1; iv < it; ++iv) {
            const std::size_t j = iv - 1;
            const std::size_t k1 = j - iu, k2 = iv - iu;
            const double fj = euclid_dist(f.at(iu), f.at(j));
            const double fj1 = euclid_dist(f.at(iu), f.at(iv));
            const double c = (fj1 - fj) / dt;
            double term = c * (r2[k2] - r2[k1]);
            if (k1 > 0) {
                const double A = fj - c * (static_cast<double>(k1) * dt);
                term += A * (r1[k2] - r1[k1]);
            }
            inner += term;
            best = std::max(best, euclid_dist(f.at(iv), f.at(iu)) * pair_pw[k2] + inner);
        }
    }
    return best;
}

/// Radial truncation x -> x * min(1, n/|x|); fixes 0 to 0.
inline void truncate_kn(std::span<const double> x, std::size_t n, std::span<double> out) {
    require(n >= 1, Errc::invalid_argument, "truncation level must be at least 1", "n");
    const double r = euclid_norm(x);
    const double scale = (r <= static_cast<double>(n) || r == 0.0) ? 1.0 : static_cast<double>(n) / r;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale * x[i];
}

inline std::vector<double> truncate_kn(std::span<const double> x, std::size_t n) {
    std::vector<double> out(x.size());
    truncate_kn(x, n, out);
    return out;
}

/// Absolutely continuous smoothing of a rough driver:
///   Z^n(t) = n * int_{(t - 1/n) or 0}^{t} k_n(Z(s)) ds,
/// trapezoidal in-window quadrature with linear interpolation at the window
/// edge. Z^n(0) = 0 and Z^n ramps up over [0, 1/n].
inline SamplePath smooth_driver(const SamplePath& z, std::size_t n) {
    require(n >= 1, Errc::invalid_argument, "smoothing index must be at least 1", "n");
    const double dt = z.grid.dt();
    require(1.0 / static_cast<double>(n) >= dt - 1e-12 * dt, Errc::invalid_argument,
            "window 1/n is narrower than the grid step; refine the grid", "n");
    const std::size_t d = z.dim;
    const std::size_t nodes = z.grid.nodes();

    std::vector<double> kvals(nodes * d);
    for (std::size_t i = 0; i < nodes; ++i)
        truncate_kn(z.at(i), n, std::span<double>(kvals.data() + i * d, d));
    std::vector<double> prefix(nodes * d, 0.0);
    for (std::size_t i = 1; i < nodes; ++i)
        for (std::size_t k = 0; k < d; ++k)
            prefix[i * d + k] = prefix[(i - 1) * d + k] +
                                0.5 * dt * (kvals[(i - 1) * d + k] + kvals[i * d + k]);

    SamplePath out(z.grid, d);
    const double nn = static_cast<double>(n);
    for (std::size_t i = 1; i < nodes; ++i) {
        const double w = z.grid.node(i) - 1.0 / nn;
        if (w <= 0.0) {
            for (std::size_t k = 0; k < d; ++k) out.value(i, k) = nn * prefix[i * d + k];
            continue;
        }
        auto j = static_cast<std::size_t>(w / dt);
        j = std::min(j, i - 1);
        const double theta = w - z.grid.node(j);
        for (std::size_t k = 0; k < d; ++k) {
            const double kj = kvals[j * d + k], kj1 = kvals[(j + 1) * d + k];
            const double kw = kj + (kj1 - kj) * (theta / dt);
            const double c_w = prefix[j * d + k] + 0.5 * theta * (kj + kw);
            out.value(i, k) = nn * (prefix[i * d + k] - c_w);
        }
    }
    return out;
}

}  // namespace mixedsde
