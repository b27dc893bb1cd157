#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <mixedsde/fracalc.hpp>
#include <mixedsde/parallel.hpp>
#include <mixedsde/solver.hpp>

using namespace mixedsde;

TEST_CASE("euler reproduces the exponential in the drift-only case") {
    TimeGrid grid(10.0, 4096);
    MixedModel model = linear_model(0.1, 0.0, 0.0);
    SamplePath w = gen_wiener(grid, 1, {1, 0});
    SamplePath z = gen_fbm(grid, HurstParam::checked(0.8), {1, 1});
    std::vector<double> x0{1.0};
    SamplePath x = euler_mixed(model, x0, w, z, grid);
    CHECK(x.value(grid.steps) == Catch::Approx(std::exp(1.0)).margin(1e-2));
}

TEST_CASE("euler with unit driver coefficient shifts by the driver") {
    TimeGrid grid(1.0, 512);
    MixedModel model = affine_model(0.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    SamplePath w = gen_wiener(grid, 1, {2, 0});
    SamplePath z = gen_fbm(grid, HurstParam::checked(0.75), {2, 1});
    std::vector<double> x0{0.4};
    SamplePath x = euler_mixed(model, x0, w, z, grid);
    for (std::size_t i = 0; i <= grid.steps; i += 37)
        CHECK(x.value(i) == Catch::Approx(0.4 + z.value(i)).margin(1e-12));
}

TEST_CASE("euler is deterministic and validates noise grids") {
    TimeGrid grid(1.0, 128);
    MixedModel model = linear_model(0.1, 0.2, 0.3);
    SamplePath w = gen_wiener(grid, 1, {7, 0});
    SamplePath z = gen_fbm(grid, HurstParam::checked(0.8), {7, 1});
    std::vector<double> x0{1.0};
    SamplePath x1 = euler_mixed(model, x0, w, z, grid);
    SamplePath x2 = euler_mixed(model, x0, w, z, grid);
    CHECK(x1.data == x2.data);

    TimeGrid other(1.0, 64);
    SamplePath zc = gen_fbm(other, HurstParam::checked(0.8), {7, 1});
    CHECK_THROWS_AS(euler_mixed(model, x0, w, zc, grid), Error);
}

TEST_CASE("euler flags non-finite states with the node index") {
    TimeGrid grid(1.0, 16);
    MixedModel model;
    model.m = 0;
    model.r = 1;
    model.drift = [](double, std::span<const double> x, std::span<double> out) {
        out[0] = x[0] * x[0];
    };
    model.holder_diff = [](double, std::span<const double>, std::size_t, std::span<double> out) {
        out[0] = 0.0;
    };
    SamplePath z = gen_fbm(grid, HurstParam::checked(0.8), {3, 0});
    std::vector<double> x0{1e200};
    try {
        euler_mixed(model, x0, SamplePath{}, z, grid);
        FAIL("expected overflow error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::numeric_failure);
        CHECK(std::string(e.what()).find("node") != std::string::npos);
    }
}

TEST_CASE("euler error against the exact integrator halves with the step") {
    TimeGrid fine(1.0, 512);
    VasicekParams vp{0.4, 0.25, 1.0};
    MixedModel model = vasicek_model(vp);
    const int n_paths = 100;
    double err_c = 0.0, err_f = 0.0;
    for (int p = 0; p < n_paths; ++p) {
        SamplePath w = gen_wiener(fine, 1, wiener_stream(99, p));
        SamplePath b = gen_fbm(fine, HurstParam::checked(0.8), fbm_stream(99, p));
        for (std::size_t stride : {2u, 1u}) {
            SamplePath wc = w.subsample(stride), bc = b.subsample(stride);
            TimeGrid g = wc.grid;
            std::vector<double> x0{vp.z0};
            SamplePath eu = euler_mixed(model, x0, wc, bc, g);
            SamplePath ex = solve_vasicek(vp, wc, bc, g);
            const double d = sq(eu.value(g.steps) - ex.value(g.steps));
            (stride == 2 ? err_c : err_f) += d;
        }
    }
    err_c = std::sqrt(err_c / n_paths);
    err_f = std::sqrt(err_f / n_paths);
    CHECK(err_f < err_c);
    CHECK(err_c / err_f >= 1.35);
}

TEST_CASE("model registry") {
    CHECK_THROWS_AS(make_model("heston", {}), Error);
    try {
        make_model("heston", {});
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unknown_model);
    }
    CHECK_NOTHROW(make_model("linear", {{"a", 0.1}, {"b", 0.2}, {"c", 0.3}}));
    CHECK_NOTHROW(make_model("cir-pure", {{"hurst", 0.8}}));
    CHECK_NOTHROW(make_model("cir-mixed", {{"hurst", 0.8}}));
    CHECK_NOTHROW(make_model("vasicek", {{"rate", 0.05}, {"vol", 0.25}}));
    CHECK_NOTHROW(make_model("custom", {{"a1", -0.5}, {"c0", 1.0}}));

    VasicekParams vp = VasicekParams::from_cir({0.1, 0.5, 0.5, 1.0, 0.8, true});
    CHECK(vp.rate == Catch::Approx(0.05));
    CHECK(vp.vol == Catch::Approx(0.25));
    CHECK(vp.z0 == Catch::Approx(1.0));
}

TEST_CASE("hurst admissibility depends on the model variant") {
    CirParams pure{0.1, 0.5, 0.5, 1.0, 0.65, false};
    CHECK_THROWS_AS(pure.validate(), Error);
    pure.hurst = 0.7;  // above 2/3
    CHECK_NOTHROW(pure.validate());

    CirParams mixed{0.1, 0.5, 0.5, 1.0, 0.74, true};
    CHECK_THROWS_AS(mixed.validate(), Error);
    mixed.hurst = 0.76;  // above 3/4
    CHECK_NOTHROW(mixed.validate());

    try {
        CirParams bad{0.1, 0.5, 0.5, 1.0, 0.6, false};
        bad.validate();
        FAIL("expected hurst rejection");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_hurst);
    }
}

TEST_CASE("regularized diffusion matches the square root above eps") {
    const double eps = 0.01;
    CHECK(regularized_diffusion(0.0, eps) == 0.0);
    CHECK(regularized_diffusion(-1.0, eps) == 0.0);
    CHECK(regularized_diffusion(eps, eps) == Catch::Approx(std::sqrt(eps)).epsilon(1e-14));
    CHECK(regularized_diffusion(0.04, eps) == Catch::Approx(0.2).epsilon(1e-14));
    // One-sided difference quotients agree at eps: both branches have slope
    // 1/(2 sqrt(eps)).
    const double h = 1e-7;
    const double lo = (regularized_diffusion(eps, eps) - regularized_diffusion(eps - h, eps)) / h;
    const double hi = (regularized_diffusion(eps + h, eps) - regularized_diffusion(eps, eps)) / h;
    CHECK(lo == Catch::Approx(0.5 / std::sqrt(eps)).epsilon(1e-4));
    CHECK(hi == Catch::Approx(0.5 / std::sqrt(eps)).epsilon(1e-4));
    CHECK_THROWS_AS(regularized_diffusion(1.0, 0.0), Error);
}

TEST_CASE("cir with zero volatility reproduces the rate equation") {
    TimeGrid grid(10.0, 4096);
    CirParams p{0.1, 0.0, 0.5, 1.0, 0.8, false};
    SamplePath b = gen_fbm(grid, HurstParam::checked(0.8), {5, 1});
    SolveResult r = solve_cir(p, nullptr, b, grid);
    CHECK_FALSE(r.absorbed);
    CHECK(r.path.value(grid.steps) == Catch::Approx(std::exp(1.0)).margin(1e-2));
}

TEST_CASE("cir paths stay nonnegative and absorption is permanent") {
    TimeGrid grid(10.0, 1024);
    CirParams p{0.1, 1.0, 0.5, 1.0, 0.8, true};
    int absorbed = 0;
    for (int path = 0; path < 200; ++path) {
        SamplePath w = gen_wiener(grid, 1, wiener_stream(31, path));
        SamplePath b = gen_fbm(grid, HurstParam::checked(0.8), fbm_stream(31, path));
        SolveResult r = solve_cir(p, &w, b, grid);
        std::size_t first_zero = grid.steps + 1;
        for (std::size_t i = 0; i <= grid.steps; ++i) {
            REQUIRE(r.path.value(i) >= 0.0);
            if (r.path.value(i) == 0.0 && first_zero > grid.steps) first_zero = i;
        }
        if (r.absorbed) {
            ++absorbed;
            REQUIRE(r.nu0.has_value());
            REQUIRE(first_zero <= grid.steps);
            // nu0 lies in the step bracketing the crossing.
            CHECK(*r.nu0 > grid.node(first_zero - 1));
            CHECK(*r.nu0 <= grid.node(first_zero) + 1e-12);
            for (std::size_t i = first_zero; i <= grid.steps; ++i)
                REQUIRE(r.path.value(i) == 0.0);
        } else {
            CHECK(first_zero > grid.steps);
            CHECK_FALSE(r.nu0.has_value());
        }
    }
    // Large sigma sends a visible fraction of paths to zero.
    CHECK(absorbed > 0);
}

TEST_CASE("cir solve agrees with the regularized equation above eps") {
    TimeGrid grid(1.0, 256);
    CirParams p{0.1, 0.3, 0.5, 1.0, 0.8, false};
    SamplePath b = gen_fbm(grid, HurstParam::checked(0.8), {11, 1});
    SolveResult r = solve_cir(p, nullptr, b, grid);
    REQUIRE_FALSE(r.absorbed);
    double lo = 1e300;
    for (std::size_t i = 0; i <= grid.steps; ++i) lo = std::min(lo, r.path.value(i));
    REQUIRE(lo > 0.0);

    const double eps = 0.5 * lo;
    const double a = p.a, sigma = p.sigma;
    MixedModel reg;
    reg.m = 0;
    reg.r = 1;
    reg.drift = [a](double, std::span<const double> x, std::span<double> out) {
        out[0] = a * x[0];
    };
    reg.holder_diff = [sigma, eps](double, std::span<const double> x, std::size_t,
                                   std::span<double> out) {
        out[0] = sigma * regularized_diffusion(x[0], eps);
    };
    std::vector<double> x0{p.x0};
    SamplePath xr = euler_mixed(reg, x0, SamplePath{}, b, grid);
    for (std::size_t i = 0; i <= grid.steps; ++i)
        CHECK(xr.value(i) == Catch::Approx(r.path.value(i)).margin(1e-9));
}

TEST_CASE("vasicek integrator is exact in the deterministic case") {
    TimeGrid grid(5.0, 128);
    VasicekParams p{0.05, 0.0, 2.0};
    SamplePath w = gen_wiener(grid, 1, {13, 0});
    SamplePath b = gen_fbm(grid, HurstParam::checked(0.8), {13, 1});
    SamplePath z = solve_vasicek(p, w, b, grid);
    for (std::size_t i = 0; i <= grid.steps; i += 16)
        CHECK(z.value(i) == Catch::Approx(2.0 * std::exp(0.05 * grid.node(i))).epsilon(1e-12));
}

TEST_CASE("vasicek terminal mean matches the closed form") {
    TimeGrid grid(1.0, 64);
    VasicekParams p{0.05, 0.25, 1.0};
    HurstParam h = HurstParam::checked(0.8);
    FbmSampler sampler(grid, h);
    const std::size_t n_paths = 20000;
    std::vector<double> terminal(n_paths);
    for (std::size_t path = 0; path < n_paths; ++path) {
        SamplePath w = gen_wiener(grid, 1, wiener_stream(555, path));
        SamplePath b = sampler.sample(fbm_stream(555, path));
        terminal[path] = solve_vasicek(p, w, b, grid).value(grid.steps);
    }
    MeanStderr ms = mean_stderr(terminal);
    CHECK(std::abs(ms.mean - std::exp(0.05)) <= 3.0 * ms.stderr_);
}

TEST_CASE("power transform halves the exponent") {
    TimeGrid grid(1.0, 4);
    SolveResult r;
    r.path = SamplePath(grid, 1);
    r.path.value(0) = 4.0;
    r.path.value(1) = 9.0;
    r.path.value(2) = 1.0;
    r.path.value(3) = 0.0;
    r.path.value(4) = 0.0;
    SamplePath y = transform_y(r, 0.5);
    CHECK(y.value(0) == 2.0);
    CHECK(y.value(1) == 3.0);
    CHECK(y.value(2) == 1.0);
    CHECK(y.value(3) == 0.0);
    CHECK(y.value(4) == 0.0);
}

TEST_CASE("hypothesis check passes a globally Lipschitz model") {
    MixedModel model = linear_model(0.1, 0.2, 0.2);
    HypothesisBox box;
    box.x_min = {-2.0};
    box.x_max = {2.0};
    ConditionReport rep = check_hypotheses(model, box);
    CHECK(rep.passed());
    CHECK(rep.at("M1").observed <= 1.0);
    CHECK(rep.at("M2").observed <= 2.0);
    CHECK(rep.at("M3").observed <= 1e-9);
}

TEST_CASE("hypothesis check flags the square-root diffusion near zero") {
    CirParams p{0.1, 0.5, 0.5, 1.0, 0.8, false};
    MixedModel model = cir_model(p);
    HypothesisBox box;
    box.x_min = {0.0};
    box.x_max = {0.01};
    ConditionReport rep = check_hypotheses(model, box);
    const ConditionEntry& m2 = rep.at("M2");
    CHECK_FALSE(m2.passed);
    CHECK(m2.observed > m2.threshold);
    CHECK(m2.witness.find("x=") != std::string::npos);
    CHECK(rep.at("M1").passed);
}

TEST_CASE("hypothesis time exponent separates rough drifts") {
    MixedModel model;
    model.m = 0;
    model.r = 1;
    model.drift = [](double t, std::span<const double>, std::span<double> out) {
        out[0] = std::pow(t, 0.3);
    };
    model.holder_diff = [](double, std::span<const double>, std::size_t, std::span<double> out) {
        out[0] = 0.0;
    };
    HypothesisBox box;
    HypothesisOptions opt;
    opt.holder_threshold = 10.0;
    opt.holder_beta = 0.5;
    CHECK_FALSE(check_hypotheses(model, box, opt).at("M3").passed);
    opt.holder_beta = 0.25;
    CHECK(check_hypotheses(model, box, opt).at("M3").passed);
}

TEST_CASE("hypothesis check reports evaluator failures") {
    MixedModel model;
    model.m = 0;
    model.r = 1;
    model.drift = [](double, std::span<const double>, std::span<double>) {
        fail(Errc::numeric_failure, "deliberate failure");
    };
    model.holder_diff = [](double, std::span<const double>, std::size_t, std::span<double> out) {
        out[0] = 0.0;
    };
    ConditionReport rep = check_hypotheses(model, HypothesisBox{});
    CHECK_FALSE(rep.passed());
    CHECK(rep.at("evaluator").witness.find("deliberate failure") != std::string::npos);
}

TEST_CASE("solutions driven by smoothed drivers approach the rough solution") {
    TimeGrid grid(1.0, 2048);
    SamplePath z = gen_fbm(grid, HurstParam::checked(0.8), {616, 0});
    SamplePath w = gen_wiener(grid, 1, {616, 1});
    MixedModel model = linear_model(-0.3, 0.0, 0.8);
    std::vector<double> x0{1.0};
    SamplePath ref = euler_mixed(model, x0, w, z, grid);
    double prev = 1e300;
    for (std::size_t n : {8u, 32u, 128u}) {
        SamplePath zn = smooth_driver(z, n);
        SamplePath xn = euler_mixed(model, x0, w, zn, grid);
        double dist = 0.0;
        for (std::size_t i = 0; i <= grid.steps; ++i)
            dist = std::max(dist, std::abs(xn.value(i) - ref.value(i)));
        CHECK(dist < prev);
        prev = dist;
    }
}
