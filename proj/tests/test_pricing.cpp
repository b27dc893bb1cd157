#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include <mixedsde/parallel.hpp>
#include <mixedsde/pricing.hpp>
#include <mixedsde/solver.hpp>

using namespace mixedsde;

namespace {

// Closed form for the upper bound at lambda = 1/2: the payoff of the squared
// positive part of a Gaussian reduces to erfc and the normal density.
double bound_closed_form(const CirParams& p, double K, double T) {
    const BoundMoments m = vasicek_moments(p, T);
    const double s = std::sqrt(m.variance);
    const double beta = (std::sqrt(K) - m.mean) / s;
    const double upper_tail = 0.5 * std::erfc(beta / std::sqrt(2.0));
    const double density = std::exp(-0.5 * beta * beta) / std::sqrt(2.0 * std::numbers::pi);
    return std::exp(-p.a * T) *
           ((m.mean * m.mean + m.variance - K) * upper_tail +
            s * (m.mean + std::sqrt(K)) * density);
}

// Two-dimensional midpoint evaluation of the symmetric double integral over
// the full square, independent of the one-dimensional reduction used by the
// production code. Off-diagonal cells use midpoint values; each diagonal cell
// integrates the singular factor exactly against its midpoint smooth value.
double double_integral_brute2d(double aprime, double H, double T, std::size_t n) {
    const double theta = 2.0 * H - 2.0;
    const double h = T / static_cast<double>(n);
    long double sum = 0.0L;
    long double diag = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = (static_cast<double>(i) + 0.5) * h;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double s = (static_cast<double>(j) + 0.5) * h;
            sum += std::exp(aprime * (t + s)) * std::pow(std::abs(t - s), theta);
        }
        diag += std::exp(2.0 * aprime * t) * 2.0 * std::pow(h, theta + 2.0) /
                ((theta + 1.0) * (theta + 2.0));
    }
    return static_cast<double>(sum * h * h + diag);
}

// One-dimensional midpoint rule on the reduced form, with the power factor
// integrated exactly per cell and the smooth factor frozen at midpoints.
double double_integral_brute1d(double aprime, double H, double T, std::size_t n) {
    const long double theta = 2.0L * H - 2.0L;
    const long double h = static_cast<long double>(T) / static_cast<long double>(n);
    long double acc = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const long double u0 = static_cast<long double>(i) * h;
        const long double u1 = u0 + h;
        const long double um = 0.5L * (u0 + u1);
        const long double a = aprime;
        const long double g = a == 0.0L
                                  ? static_cast<long double>(T) - um
                                  : std::exp(a * um) * std::expm1(2.0L * a * (T - um)) / (2.0L * a);
        acc += g * (std::pow(u1, theta + 1.0L) - std::pow(u0, theta + 1.0L)) / (theta + 1.0L);
    }
    return static_cast<double>(2.0L * acc);
}

}  // namespace

TEST_CASE("double integral matches the zero-rate closed form") {
    const double T = 10.0;
    for (double H : {0.7, 0.8, 0.9}) {
        const double value = double_integral(0.0, HurstParam::checked(H), T);
        const double exact = 2.0 * std::pow(T, 2.0 * H) / (2.0 * H * (2.0 * H - 1.0));
        CHECK(value == Catch::Approx(exact).epsilon(1e-8));
    }
}

TEST_CASE("double integral agrees with independent quadratures") {
    const double H = 0.8;
    const double T = 10.0;
    for (double ap : {0.05, -0.05}) {
        const double value = double_integral(ap, HurstParam::checked(H), T);
        // The fine one-dimensional rule carries ~4e-8 of its own error, the
        // coarse two-dimensional one ~6e-4; tolerances cover the oracles.
        CHECK(value == Catch::Approx(double_integral_brute1d(ap, H, T, 20000)).epsilon(1e-6));
        CHECK(value == Catch::Approx(double_integral_brute2d(ap, H, T, 4096)).epsilon(2e-3));
    }
}

TEST_CASE("double integral vanishes with the horizon") {
    const double tiny = double_integral(0.05, HurstParam::checked(0.8), 1e-6);
    CHECK(tiny > 0.0);
    CHECK(tiny < 1e-9);
}

TEST_CASE("double integral input validation") {
    const HurstParam H = HurstParam::checked(0.8);
    CHECK_THROWS_AS(double_integral(0.1, H, 0.0), Error);
    CHECK_THROWS_AS(double_integral(0.1, H, -1.0), Error);
    CHECK_THROWS_AS(double_integral(0.1, H, 1.0, 0.0), Error);
    CHECK_THROWS_AS(double_integral(std::nan(""), H, 1.0), Error);
}

TEST_CASE("bound moments: deterministic case is exact") {
    CirParams p{0.1, 0.0, 0.5, 1.0, 0.8, true};
    const BoundMoments m = vasicek_moments(p, 10.0);
    CHECK(m.mean == Catch::Approx(std::exp(0.5)).epsilon(1e-14));
    CHECK(m.variance == 0.0);
}

TEST_CASE("bound moments: zero rate reduces to the driver variance") {
    // At a = 0 the terminal value is z0 plus vol times (W + B)(T), whose
    // variance is T + T^{2H}.
    CirParams p{0.0, 0.5, 0.5, 1.0, 0.8, true};
    const double T = 2.0;
    const BoundMoments m = vasicek_moments(p, T);
    const double vol = 0.5 * (1.0 - 0.5);
    CHECK(m.mean == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(m.variance ==
          Catch::Approx(vol * vol * (T + std::pow(T, 1.6))).epsilon(1e-8));
}

TEST_CASE("bound moments: pure variant drops the Wiener term") {
    CirParams mixed{0.0, 0.5, 0.5, 1.0, 0.8, true};
    CirParams pure{0.0, 0.5, 0.5, 1.0, 0.8, false};
    const double T = 2.0;
    const double vol = 0.5 * 0.5;
    const double vm = vasicek_moments(mixed, T).variance;
    const double vp = vasicek_moments(pure, T).variance;
    CHECK(vm - vp == Catch::Approx(vol * vol * T).epsilon(1e-8));
    CHECK(vp == Catch::Approx(vol * vol * std::pow(T, 1.6)).epsilon(1e-8));
}

TEST_CASE("bound moments match the simulated auxiliary process") {
    // Z(T) is Gaussian, so the sample variance of the exponential-integrator
    // solution must sit within Monte Carlo error of the closed form.
    CirParams p{0.1, 0.5, 0.5, 1.0, 0.8, true};
    const double T = 1.0;
    const TimeGrid grid(T, 256);
    const BoundMoments m = vasicek_moments(p, T);
    const VasicekParams vp = VasicekParams::from_cir(p);
    const std::size_t n = 20000;
    const FbmSampler sampler(grid, HurstParam::checked(p.hurst));
    std::vector<double> terminal(n);
    parallel_for(n, 4, [&](std::size_t i) {
        const SamplePath w = gen_wiener(grid, 1, wiener_stream(77, i));
        const SamplePath b = sampler.sample(fbm_stream(77, i));
        terminal[i] = solve_vasicek(vp, w, b, grid).value(grid.steps);
    });
    double mean = 0.0;
    for (double z : terminal) mean += z;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double z : terminal) var += sq(z - mean);
    var /= static_cast<double>(n - 1);
    const double se_mean = std::sqrt(var / static_cast<double>(n));
    const double se_var = var * std::sqrt(2.0 / static_cast<double>(n - 1));
    CHECK(std::abs(mean - m.mean) <= 3.0 * se_mean);
    CHECK(std::abs(var - m.variance) <= 3.0 * se_var);
}

TEST_CASE("upper bound agrees with the closed form at lambda one half") {
    const double T = 10.0;
    for (double sigma : {0.1, 0.5, 1.0}) {
        CirParams p{0.1, sigma, 0.5, 1.0, 0.8, true};
        for (double K : {0.5, 1.0, 2.0}) {
            const double q = upper_bound_price(p, K, T);
            const double cf = bound_closed_form(p, K, T);
            CHECK(q == Catch::Approx(cf).epsilon(1e-6));
        }
    }
}

TEST_CASE("upper bound reproduces the reference table") {
    const double T = 10.0;
    const double sigmas[3] = {0.1, 0.5, 1.0};
    const double strikes[3] = {0.5, 1.0, 2.0};
    const double expected[3][3] = {
        {0.8953, 0.7198, 0.4192},
        {2.55, 2.434, 2.223},
        {6.552, 6.448, 6.25},
    };
    for (int i = 0; i < 3; ++i) {
        CirParams p{0.1, sigmas[i], 0.5, 1.0, 0.8, true};
        for (int j = 0; j < 3; ++j) {
            const double q = upper_bound_price(p, strikes[j], T);
            CHECK(q == Catch::Approx(expected[i][j]).epsilon(5e-3));
        }
    }
}

TEST_CASE("upper bound is decreasing in the strike") {
    CirParams p{0.1, 0.5, 0.5, 1.0, 0.8, true};
    const double T = 10.0;
    double prev = upper_bound_price(p, 0.0, T);
    for (double K : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double q = upper_bound_price(p, K, T);
        CHECK(q < prev);
        prev = q;
    }
}

TEST_CASE("upper bound degenerates to the discounted payoff at zero volatility") {
    CirParams p{0.1, 0.0, 0.5, 1.0, 0.8, true};
    const double T = 10.0;
    const double exact = std::exp(-1.0) * (std::exp(1.0) - 0.5);
    CHECK(upper_bound_price(p, 0.5, T) == Catch::Approx(exact).epsilon(1e-10));
    // Strike above the deterministic terminal value leaves nothing.
    CHECK(upper_bound_price(p, 5.0, T) == 0.0);
}

TEST_CASE("upper bound rejects a negative strike") {
    CirParams p{0.1, 0.5, 0.5, 1.0, 0.8, true};
    CHECK_THROWS_AS(upper_bound_price(p, -0.5, 10.0), Error);
    CHECK_THROWS_AS(upper_bound_price(p, 0.5, 0.0), Error);
}

TEST_CASE("mc price at zero volatility is deterministic") {
    // Euler compounds (1 + a dt)^N rather than e^{aT}; the gap at this grid
    // is below 2e-4 and the spread is exactly zero.
    CirParams p{0.1, 0.0, 0.5, 1.0, 0.8, true};
    const double T = 10.0;
    const TimeGrid grid(T, 4096);
    const McPrice mc = mc_price(p, 0.5, T, 64, grid, {3, 0});
    const double exact = std::exp(-1.0) * (std::exp(1.0) - 0.5);
    // Identical payoffs leave only the rounding residue of the mean.
    CHECK(mc.std_err < 1e-15);
    CHECK(mc.price == Catch::Approx(exact).margin(2e-4));
}

TEST_CASE("mc price is reproducible and thread-count independent") {
    CirParams p{0.1, 0.5, 0.5, 1.0, 0.8, true};
    const double T = 2.0;
    const TimeGrid grid(T, 128);
    const McPrice a = mc_price(p, 1.0, T, 400, grid, {11, 5}, 1);
    const McPrice b = mc_price(p, 1.0, T, 400, grid, {11, 5}, 1);
    const McPrice c = mc_price(p, 1.0, T, 400, grid, {11, 5}, 4);
    CHECK(a.price == b.price);
    CHECK(a.std_err == b.std_err);
    CHECK(a.price == c.price);
    CHECK(a.std_err == c.std_err);
    CHECK(a.std_err > 0.0);
}

TEST_CASE("mc price validates its inputs") {
    CirParams p{0.1, 0.5, 0.5, 1.0, 0.8, true};
    const TimeGrid grid(2.0, 128);
    CHECK_THROWS_AS(mc_price(p, 1.0, 3.0, 100, grid, {1, 0}), Error);
    CHECK_THROWS_AS(mc_price(p, -1.0, 2.0, 100, grid, {1, 0}), Error);
    CHECK_THROWS_AS(mc_price(p, 1.0, 2.0, 1, grid, {1, 0}), Error);
}

TEST_CASE("mc price sits below the upper bound across the table cells") {
    // Reduced-size rerun of the reference experiment. For sigma = 0.1 the
    // true gap (~0.014) is within one standard error at this sample size, so
    // the dominance check there allows the Monte Carlo band; the other rows
    // have gaps of several standard errors and must dominate outright.
    const double T = 10.0;
    const TimeGrid grid(T, 512);
    std::size_t stream = 0;
    for (double sigma : {0.1, 0.5, 1.0}) {
        CirParams p{0.1, sigma, 0.5, 1.0, 0.8, true};
        for (double K : {0.5, 1.0, 2.0}) {
            const McPrice mc = mc_price(p, K, T, 1200, grid, {404, stream});
            const double bound = upper_bound_price(p, K, T);
            CHECK(mc.price - 3.0 * mc.std_err < bound);
            if (sigma > 0.1) CHECK(mc.price < bound);
        }
        stream += 1200;
    }
}

TEST_CASE("mc price approaches the reference value") {
    // sigma = 0.1, K = 0.5 cell of the reference table (printed price
    // 0.8818); a 3000-path run with a coarser grid must land within the
    // larger of 10 percent and three standard errors.
    CirParams p{0.1, 0.1, 0.5, 1.0, 0.8, true};
    const double T = 10.0;
    const TimeGrid grid(T, 512);
    const McPrice mc = mc_price(p, 0.5, T, 3000, grid, {2024, 0});
    const double ref = 0.8818;
    const double tol = std::max(0.1 * ref, 3.0 * mc.std_err);
    CHECK(std::abs(mc.price - ref) <= tol);
}

TEST_CASE("mc price is nonincreasing in the strike at matched seeds") {
    CirParams p{0.1, 0.5, 0.5, 1.0, 0.8, true};
    const double T = 2.0;
    const TimeGrid grid(T, 128);
    double prev = mc_price(p, 0.0, T, 500, grid, {606, 0}).price;
    for (double K : {0.25, 0.5, 1.0, 2.0}) {
        const double q = mc_price(p, K, T, 500, grid, {606, 0}).price;
        CHECK(q <= prev);
        prev = q;
    }
}

TEST_CASE("upper bound agrees with direct simulation of the auxiliary process") {
    // The bound is a plain expectation over the Gaussian terminal value, so
    // simulating the auxiliary process and averaging the transformed payoff
    // must land within Monte Carlo error of the quadrature.
    CirParams p{0.1, 0.5, 0.5, 1.0, 0.8, true};
    const double T = 2.0;
    const double K = 1.0;
    const TimeGrid grid(T, 256);
    const VasicekParams vp = VasicekParams::from_cir(p);
    const FbmSampler sampler(grid, HurstParam::checked(p.hurst));
    const std::size_t n = 20000;
    std::vector<double> payoff(n);
    const double discount = std::exp(-p.a * T);
    parallel_for(n, 4, [&](std::size_t i) {
        const SamplePath w = gen_wiener(grid, 1, wiener_stream(808, i));
        const SamplePath b = sampler.sample(fbm_stream(808, i));
        const double z = solve_vasicek(vp, w, b, grid).value(grid.steps);
        const double x = sq(std::max(z, 0.0));
        payoff[i] = discount * std::max(x - K, 0.0);
    });
    const MeanStderr ms = mean_stderr(payoff);
    const double bound = upper_bound_price(p, K, T);
    CHECK(std::abs(ms.mean - bound) <= 3.0 * ms.stderr_);
}

TEST_CASE("table report layout and consistency") {
    TableConfig cfg;
    cfg.seed = {515, 0};
    cfg.n_paths = 600;
    cfg.steps = 256;
    const PriceReport rep = reproduce_table(cfg);
    REQUIRE(rep.sigmas == std::vector<double>{0.1, 0.5, 1.0});
    REQUIRE(rep.strikes == std::vector<double>{0.5, 1.0, 2.0});
    REQUIRE(rep.cells.size() == 9);
    for (std::size_t si = 0; si < 3; ++si) {
        for (std::size_t ki = 0; ki < 3; ++ki) {
            const PriceCell& c = rep.cell(si, ki);
            CHECK(c.sigma == rep.sigmas[si]);
            CHECK(c.strike == rep.strikes[ki]);
            CHECK(c.n_paths == cfg.n_paths);
            CHECK(c.n_steps == cfg.steps);
            CHECK(c.hurst == cfg.hurst);
            CHECK(c.mc_stderr > 0.0);
            CirParams p{0.1, c.sigma, 0.5, 1.0, cfg.hurst, true};
            CHECK(c.upper_bound ==
                  Catch::Approx(upper_bound_price(p, c.strike, 10.0)).epsilon(1e-14));
        }
        // Cells within a row reuse one terminal sample: rerunning mc_price
        // with the row seed must reproduce each cell bitwise.
        const SeedSpec row_seed{cfg.seed.master, cfg.seed.stream + si * cfg.n_paths};
        CirParams p{0.1, rep.sigmas[si], 0.5, 1.0, cfg.hurst, true};
        const TimeGrid grid(10.0, cfg.steps);
        for (std::size_t ki = 0; ki < 3; ++ki) {
            const McPrice mc =
                mc_price(p, rep.strikes[ki], 10.0, cfg.n_paths, grid, row_seed);
            CHECK(mc.price == rep.cell(si, ki).mc_price);
            CHECK(mc.std_err == rep.cell(si, ki).mc_stderr);
        }
    }
    CHECK_THROWS_AS(rep.cell(3, 0), Error);
}

TEST_CASE("table report is deterministic") {
    TableConfig cfg;
    cfg.seed = {99, 7};
    cfg.n_paths = 200;
    cfg.steps = 128;
    const PriceReport a = reproduce_table(cfg);
    cfg.threads = 3;
    const PriceReport b = reproduce_table(cfg);
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        CHECK(a.cells[i].mc_price == b.cells[i].mc_price);
        CHECK(a.cells[i].mc_stderr == b.cells[i].mc_stderr);
        CHECK(a.cells[i].upper_bound == b.cells[i].upper_bound);
    }
}

TEST_CASE("hitting experiment: strong pull to zero absorbs nearly every path") {
    // The persistent driver keeps a small fraction of paths riding above
    // zero indefinitely; measured censoring across seeds is ~3 percent with
    // the median hit near t = 1 on this configuration.
    const double horizon = 5.0;
    const TimeGrid grid(horizon, 512);
    const HittingStats st =
        hitting_experiment(-5.0, HurstParam::checked(0.8), 1.0, horizon, 200, grid, {31, 0});
    CHECK(st.n_paths == 200);
    CHECK(st.censored <= 20);
    CHECK(st.hit_times.size() == 200 - st.censored);
    CHECK(st.bins() == hitting_bins);
    std::size_t mass = 0;
    for (std::size_t b = 0; b < st.bins(); ++b) mass += st.histogram[b];
    CHECK(mass == st.hit_times.size());
    // Mass concentrates early: the first fifth of the horizon holds close to
    // half of all hits and the first half holds the bulk.
    std::size_t early = 0;
    for (std::size_t b = 0; b < st.bins() / 5; ++b) early += st.histogram[b];
    CHECK(early >= 60);
    std::size_t first_half = 0;
    for (std::size_t b = 0; b < st.bins() / 2; ++b) first_half += st.histogram[b];
    CHECK(first_half * 10 >= mass * 7);
    CHECK(st.survivors.back() == st.censored);
    CHECK(st.survivors.front() > st.survivors.back());
}

TEST_CASE("hitting experiment: accounting identities hold") {
    const double horizon = 20.0;
    const TimeGrid grid(horizon, 512);
    const HittingStats st =
        hitting_experiment(-0.1, HurstParam::checked(0.8), 0.3, horizon, 300, grid, {32, 0});
    CHECK(st.censored + st.hit_times.size() == st.n_paths);
    std::size_t mass = 0;
    for (std::size_t b = 0; b < st.bins(); ++b) mass += st.histogram[b];
    CHECK(mass == st.hit_times.size());
    REQUIRE(st.checkpoints.size() == 2);
    CHECK(st.checkpoints[0] == Catch::Approx(2.0));
    CHECK(st.checkpoints[1] == Catch::Approx(horizon));
    CHECK(st.survivors[0] >= st.survivors[1]);
    CHECK(st.survivors[1] == st.censored);
    for (double t : st.hit_times) {
        CHECK(t >= 0.0);
        CHECK(t <= horizon);
    }
}

TEST_CASE("hitting experiment: negative drift absorbs more paths than positive") {
    const double horizon = 20.0;
    const TimeGrid grid(horizon, 512);
    const HittingStats neg =
        hitting_experiment(-0.1, HurstParam::checked(0.8), 0.3, horizon, 300, grid, {33, 0});
    const HittingStats pos =
        hitting_experiment(0.1, HurstParam::checked(0.8), 0.3, horizon, 300, grid, {33, 0});
    CHECK(neg.censored < pos.censored);
}

TEST_CASE("hitting experiment rejects a mismatched grid") {
    const TimeGrid grid(10.0, 256);
    CHECK_THROWS_AS(
        hitting_experiment(0.1, HurstParam::checked(0.8), 1.0, 20.0, 10, grid, {1, 0}),
        Error);
}
