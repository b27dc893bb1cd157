#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "core.hpp"
#include "model.hpp"
#include "noise.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "solver.hpp"

namespace mixedsde {

// Second moments of the terminal value of the linear bound process.
struct BoundMoments {
    double mean = 0.0;
    double variance = 0.0;
};

struct McPrice {
    double price = 0.0;
    double std_err = 0.0;
};

struct PriceCell {
    double sigma = 0.0;
    double strike = 0.0;
    double mc_price = 0.0;
    double mc_stderr = 0.0;
    double upper_bound = 0.0;
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::uint64_t seed = 0;
    double hurst = 0.0;
};

struct PriceReport {
    std::vector<double> sigmas;
    std::vector<double> strikes;
    std::vector<PriceCell> cells;  // row-major over (sigma, strike)

    const PriceCell& cell(std::size_t si, std::size_t ki) const {
        require(si < sigmas.size() && ki < strikes.size(), Errc::invalid_argument,
                "cell index out of range", "cell");
        return cells[si * strikes.size() + ki];
    }
};

namespace detail {

// Integral of u^theta times the quadratic through (u0,g0),(u1,g1),(u2,g2)
// over [u0, u2], with the power factor integrated exactly. Coefficients are
// taken around u0 to keep them at the scale of g and its differences.
inline long double power_cell(long double theta, long double u0, long double u1, long double u2,
                              long double g0, long double g1, long double g2) {
    const long double h1 = u1 - u0;
    const long double h2 = u2 - u0;
    // g(u) = b0 + b1 (u-u0) + b2 (u-u0)^2 through the three nodes.
    const long double d1 = (g1 - g0) / h1;
    const long double d2 = (g2 - g1) / (u2 - u1);
    const long double b2 = (d2 - d1) / h2;
    const long double b1 = d1 - b2 * h1;
    const long double b0 = g0;
    // Moments M_k = int_{u0}^{u2} u^{theta+k} du; the shifted powers expand
    // through them.
    const long double p1 = theta + 1.0L;
    const long double a0 = std::pow(u0, p1);
    const long double a2 = std::pow(u2, p1);
    const long double m0 = (a2 - a0) / p1;
    const long double m1 = (a2 * u2 - a0 * u0) / (p1 + 1.0L);
    const long double m2 = (a2 * u2 * u2 - a0 * u0 * u0) / (p1 + 2.0L);
    const long double s1 = m1 - u0 * m0;
    const long double s2 = m2 - 2.0L * u0 * m1 + u0 * u0 * m0;
    return b0 * m0 + b1 * s1 + b2 * s2;
}

}  // namespace detail

// The symmetric double integral over [0,T]^2 of e^{aprime (t+s)} |t-s|^{2H-2}
// reduces to 2 int_0^T u^{2H-2} g(u) du with the smooth factor
// g(u) = e^{aprime u} (e^{2 aprime (T-u)} - 1) / (2 aprime), continued by
// g(u) = T - u at aprime = 0. The weak singularity at u = 0 is integrated
// exactly against a piecewise-quadratic fit of g; the mesh doubles until the
// relative change drops below tol.
inline double double_integral(double aprime, HurstParam H, double T, double tol = 1e-8) {
    require(std::isfinite(T) && T > 0.0, Errc::invalid_argument, "horizon must be positive", "T");
    require(tol > 0.0, Errc::invalid_argument, "tolerance must be positive", "tol");
    require(std::isfinite(aprime), Errc::invalid_argument, "rate must be finite", "aprime");

    const long double theta = 2.0L * static_cast<long double>(H.value()) - 2.0L;
    const long double a = aprime;
    const long double horizon = T;
    auto g = [&](long double u) -> long double {
        if (a == 0.0L) return horizon - u;
        return std::exp(a * u) * std::expm1(2.0L * a * (horizon - u)) / (2.0L * a);
    };

    constexpr std::size_t n_start = 64;
    constexpr std::size_t n_cap = 1u << 20;
    long double prev = 0.0L;
    for (std::size_t n = n_start; n <= n_cap; n *= 2) {
        long double sum = 0.0L;
        const long double h = horizon / static_cast<long double>(n);
        for (std::size_t j = 0; j < n; j += 2) {
            const long double u0 = static_cast<long double>(j) * h;
            const long double u1 = u0 + h;
            const long double u2 = u0 + 2.0L * h;
            sum += detail::power_cell(theta, u0, u1, u2, g(u0), g(u1), g(u2));
        }
        const long double total = 2.0L * sum;
        if (n > n_start &&
            std::abs(total - prev) <= static_cast<long double>(tol) * std::abs(total))
            return static_cast<double>(total);
        prev = total;
    }
    fail(Errc::convergence_failure, "double integral did not reach the requested tolerance",
         "tol");
}

// Mean and variance of the terminal bound process Z(T): the homogeneous
// factor acts on the start value, the Wiener term contributes the classical
// exponential variance (mixed variant only), and the fractional term is the
// weighted double integral.
inline BoundMoments vasicek_moments(const CirParams& params, double T) {
    params.validate();
    require(std::isfinite(T) && T > 0.0, Errc::invalid_argument, "horizon must be positive", "T");
    const double one_l = 1.0 - params.lambda;
    const double ap = params.a * one_l;
    const double sp = params.sigma * one_l;
    BoundMoments out;
    out.mean = std::pow(params.x0, one_l) * std::exp(ap * T);
    if (params.sigma == 0.0) return out;
    const double hv = params.hurst;
    double wiener_term = 0.0;
    if (params.mixed) wiener_term = ap == 0.0 ? T : std::expm1(2.0 * ap * T) / (2.0 * ap);
    const double frac_term =
        hv * (2.0 * hv - 1.0) * double_integral(ap, HurstParam::checked(hv), T);
    out.variance = sp * sp * (wiener_term + frac_term);
    return out;
}

namespace detail {

// Adaptive composite Simpson for a smooth integrand on [lo, hi].
template <typename Fn>
double simpson_refine(Fn&& f, double lo, double hi, double tol, const char* what) {
    if (!(hi > lo)) return 0.0;
    constexpr std::size_t n_start = 64;
    constexpr std::size_t n_cap = 1u << 21;
    double prev = 0.0;
    for (std::size_t n = n_start; n <= n_cap; n *= 2) {
        const double h = (hi - lo) / static_cast<double>(n);
        double sum = f(lo) + f(hi);
        for (std::size_t j = 1; j < n; ++j)
            sum += f(lo + h * static_cast<double>(j)) * (j % 2 == 1 ? 4.0 : 2.0);
        const double total = sum * h / 3.0;
        if (n > n_start && std::abs(total - prev) <= tol * std::max(std::abs(total), 1e-300))
            return total;
        prev = total;
    }
    fail(Errc::convergence_failure, what, "tol");
}

}  // namespace detail

// Discounted expectation of the nondecreasing call payoff applied to the
// power-transformed positive part of the Gaussian terminal bound value. The
// integration window is mean +- 10 standard deviations clipped from below at
// the payoff kink K^{1-lambda}; the kink at zero only binds for K = 0, where
// it coincides with the lower clip.
inline double upper_bound_price(const CirParams& params, double K, double T) {
    params.validate();
    require(std::isfinite(K) && K >= 0.0, Errc::invalid_argument,
            "strike must be nonnegative", "K");
    require(std::isfinite(T) && T > 0.0, Errc::invalid_argument, "horizon must be positive", "T");
    const BoundMoments mom = vasicek_moments(params, T);
    const double discount = std::exp(-params.a * T);
    const double one_l = 1.0 - params.lambda;
    const double inv_pow = 1.0 / one_l;
    const double kink = std::pow(K, one_l);
    if (mom.variance == 0.0) {
        const double z = std::max(mom.mean, 0.0);
        return discount * std::max(std::pow(z, inv_pow) - K, 0.0);
    }
    const double sd = std::sqrt(mom.variance);
    const double lo = std::max(kink, mom.mean - 10.0 * sd);
    const double hi = mom.mean + 10.0 * sd;
    if (!(lo < hi)) return 0.0;
    const double norm = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
    auto integrand = [&](double z) {
        const double payoff = std::pow(z, inv_pow) - K;
        const double arg = (z - mom.mean) / sd;
        return payoff * norm * std::exp(-0.5 * arg * arg);
    };
    const double value =
        detail::simpson_refine(integrand, lo, hi, 1e-10, "price quadrature did not converge");
    return discount * std::max(value, 0.0);
}

namespace detail {

// Terminal short-rate values for one parameter set, one slot per path so the
// fill order cannot affect downstream reductions.
inline std::vector<double> cir_terminals(const CirParams& params, std::size_t n_paths,
                                         const TimeGrid& grid, SeedSpec seed,
                                         unsigned threads = 1) {
    std::vector<double> out(n_paths, 0.0);
    const HurstParam H = HurstParam::checked(params.hurst);
    const FbmSampler sampler(grid, H);
    parallel_for(n_paths, threads, [&](std::size_t p) {
        const SamplePath b = sampler.sample(fbm_stream(seed.master, seed.stream + p));
        SolveResult res;
        if (params.mixed) {
            const SamplePath w = gen_wiener(grid, 1, wiener_stream(seed.master, seed.stream + p));
            res = solve_cir(params, &w, b, grid);
        } else {
            res = solve_cir(params, nullptr, b, grid);
        }
        out[p] = res.path.value(grid.steps);
    });
    return out;
}

}  // namespace detail

// Monte Carlo price of the discounted call on the short rate.
inline McPrice mc_price(const CirParams& params, double K, double T, std::size_t n_paths,
                        const TimeGrid& grid, SeedSpec seed, unsigned threads = 1) {
    params.validate();
    require(std::isfinite(K) && K >= 0.0, Errc::invalid_argument,
            "strike must be nonnegative", "K");
    require(grid.horizon == T, Errc::invalid_argument,
            "grid horizon must equal the option maturity", "T");
    require(n_paths >= 2, Errc::invalid_argument, "need at least two paths", "n_paths");
    std::vector<double> terminals = detail::cir_terminals(params, n_paths, grid, seed, threads);
    const double discount = std::exp(-params.a * T);
    for (double& x : terminals) x = discount * std::max(x - K, 0.0);
    const MeanStderr ms = mean_stderr(terminals);
    return {ms.mean, ms.stderr_};
}

struct TableConfig {
    SeedSpec seed{20240910, 0};
    std::size_t n_paths = 20000;
    std::size_t steps = 4096;
    double hurst = 0.8;
    unsigned threads = 1;
};

// Price table over sigma in {0.1, 0.5, 1} and K in {0.5, 1, 2} for the
// mixed model with a = 0.1, X0 = 1, lambda = 1/2, T = 10. Strikes reuse the
// same terminal sample within a sigma row, which is exactly what running
// mc_price per cell with the row seed produces.
inline PriceReport reproduce_table(const TableConfig& cfg = {}) {
    PriceReport rep;
    rep.sigmas = {0.1, 0.5, 1.0};
    rep.strikes = {0.5, 1.0, 2.0};
    const double T = 10.0;
    const TimeGrid grid(T, cfg.steps);
    const double discount = std::exp(-0.1 * T);
    for (std::size_t si = 0; si < rep.sigmas.size(); ++si) {
        CirParams params{0.1, rep.sigmas[si], 0.5, 1.0, cfg.hurst, true};
        const SeedSpec row_seed{cfg.seed.master, cfg.seed.stream + si * cfg.n_paths};
        std::vector<double> terminals =
            detail::cir_terminals(params, cfg.n_paths, grid, row_seed, cfg.threads);
        for (double k : rep.strikes) {
            std::vector<double> payoff(terminals.size());
            for (std::size_t p = 0; p < terminals.size(); ++p)
                payoff[p] = discount * std::max(terminals[p] - k, 0.0);
            const MeanStderr ms = mean_stderr(payoff);
            PriceCell cell;
            cell.sigma = rep.sigmas[si];
            cell.strike = k;
            cell.mc_price = ms.mean;
            cell.mc_stderr = ms.stderr_;
            cell.upper_bound = upper_bound_price(params, k, T);
            cell.n_paths = cfg.n_paths;
            cell.n_steps = cfg.steps;
            cell.seed = row_seed.master;
            cell.hurst = cfg.hurst;
            rep.cells.push_back(cell);
        }
    }
    return rep;
}

struct HittingStats {
    double horizon = 0.0;
    std::size_t n_paths = 0;
    std::size_t censored = 0;           // paths that never hit zero
    std::vector<double> hit_times;      // nu0 of absorbed paths, path order
    std::vector<std::size_t> histogram; // hit-time counts over uniform bins
    std::vector<double> checkpoints;
    std::vector<std::size_t> survivors; // paths alive strictly beyond each checkpoint

    std::size_t bins() const { return histogram.size(); }
};

inline constexpr std::size_t hitting_bins = 50;

// First-hitting experiment for the pure fractional square-root model
// dX = a X dt + sqrt(X) dB^H. Censored paths enter no histogram bin; the
// survivor counts at one tenth of the horizon and at the horizon summarize
// the two regimes of interest.
inline HittingStats hitting_experiment(double a, HurstParam H, double x0, double horizon,
                                       std::size_t n_paths, const TimeGrid& grid, SeedSpec seed,
                                       unsigned threads = 1) {
    require(grid.horizon == horizon, Errc::invalid_argument,
            "grid horizon must equal the experiment horizon", "horizon");
    require(n_paths >= 1, Errc::invalid_argument, "need at least one path", "n_paths");
    CirParams params{a, 1.0, 0.5, x0, H.value(), false};
    params.validate();

    std::vector<double> nu0(n_paths, -1.0);
    const FbmSampler sampler(grid, H);
    parallel_for(n_paths, threads, [&](std::size_t p) {
        const SamplePath b = sampler.sample(fbm_stream(seed.master, seed.stream + p));
        const SolveResult res = solve_cir(params, nullptr, b, grid);
        if (res.absorbed) nu0[p] = *res.nu0;
    });

    HittingStats st;
    st.horizon = horizon;
    st.n_paths = n_paths;
    st.histogram.assign(hitting_bins, 0);
    st.checkpoints = {0.1 * horizon, horizon};
    st.survivors.assign(st.checkpoints.size(), 0);
    for (double t : nu0) {
        if (t < 0.0) {
            ++st.censored;
            continue;
        }
        st.hit_times.push_back(t);
        const auto bin = std::min<std::size_t>(
            static_cast<std::size_t>(t / horizon * static_cast<double>(hitting_bins)),
            hitting_bins - 1);
        ++st.histogram[bin];
    }
    for (std::size_t c = 0; c < st.checkpoints.size(); ++c) {
        std::size_t alive = st.censored;
        for (double t : st.hit_times)
            if (t > st.checkpoints[c]) ++alive;
        st.survivors[c] = alive;
    }
    return st;
}

}  // namespace mixedsde
