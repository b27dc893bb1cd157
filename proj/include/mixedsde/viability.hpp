#pragma once

// Sampled verification of the viability, positivity, and comparison
// conditions, plus paired-path empirical validation of their conclusions.
// Sampling supports or refutes a condition on the visited points only; every
// report carries that caveat in its note.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <mixedsde/core.hpp>
#include <mixedsde/fracalc.hpp>
#include <mixedsde/model.hpp>
#include <mixedsde/noise.hpp>
#include <mixedsde/parallel.hpp>
#include <mixedsde/report.hpp>
#include <mixedsde/rng.hpp>
#include <mixedsde/solver.hpp>

namespace mixedsde {

// Smooth domain D = {phi >= 0} described by the level function, its gradient,
// and its Hessian (row-major d*d; required only when a Wiener term is
// present). The gradient must not vanish on the boundary.
struct BoundarySpec {
    std::function<double(std::span<const double>)> phi;
    std::function<void(std::span<const double>, std::span<double>)> grad;
    std::function<void(std::span<const double>, std::span<double>)> hess;
    double scale = 1.0;

    void validate(bool need_hess) const {
        require(static_cast<bool>(phi), Errc::invalid_argument, "level function must be set",
                "phi");
        require(static_cast<bool>(grad), Errc::invalid_argument, "gradient must be set",
                "phi");
        require(!need_hess || static_cast<bool>(hess), Errc::invalid_argument,
                "Hessian must be set when a Wiener term is present", "phi");
        require(scale > 0.0 && std::isfinite(scale), Errc::invalid_argument,
                "scale must be positive", "scale");
    }
};

// Half-line domain {x_coord >= level}.
inline BoundarySpec half_space(std::size_t coord, std::size_t d, double level = 0.0) {
    require(coord < d, Errc::invalid_argument, "coordinate out of range", "coord");
    BoundarySpec spec;
    spec.phi = [coord, level](std::span<const double> x) { return x[coord] - level; };
    spec.grad = [coord, d](std::span<const double>, std::span<double> g) {
        std::fill(g.begin(), g.begin() + d, 0.0);
        g[coord] = 1.0;
    };
    spec.hess = [d](std::span<const double>, std::span<double> h) {
        std::fill(h.begin(), h.begin() + d * d, 0.0);
    };
    return spec;
}

struct SamplePoint {
    double t = 0.0;
    std::vector<double> x;
};

// Random cloud in [t_min,t_max] x (box intersect D) augmented with
// boundary-proximal points found by gradient walks and, when the box leaves
// the domain, bisection between inside and outside states.
inline std::vector<SamplePoint> sample_domain(const BoundarySpec& spec,
                                              const HypothesisBox& box, std::size_t n,
                                              SeedSpec seed = {20240903u, 0}) {
    const std::size_t d = box.x_min.size();
    box.validate(d);
    spec.validate(false);
    require(n >= 1, Errc::invalid_argument, "need at least one sample", "n");

    auto eng = make_engine(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<SamplePoint> cloud;
    cloud.reserve(n + n / 2);
    std::vector<double> g(d);
    std::vector<double> outside;

    auto draw_x = [&](std::vector<double>& x) {
        x.resize(d);
        for (std::size_t i = 0; i < d; ++i)
            x[i] = box.x_min[i] + (box.x_max[i] - box.x_min[i]) * unif(eng);
    };
    auto draw_t = [&] { return box.t_min + (box.t_max - box.t_min) * unif(eng); };
    auto clamp_box = [&](std::vector<double>& x) {
        for (std::size_t i = 0; i < d; ++i) x[i] = std::clamp(x[i], box.x_min[i], box.x_max[i]);
    };

    std::vector<double> x;
    for (std::size_t attempt = 0; attempt < 50 * n && cloud.size() < n; ++attempt) {
        draw_x(x);
        if (spec.phi(x) >= 0.0)
            cloud.push_back({draw_t(), x});
        else
            outside = x;
    }
    require(!cloud.empty(), Errc::invalid_argument, "no sample points found inside the domain",
            "box");

    // Gradient walks toward the level set phi = 0.
    const double level_tol = 1e-9 * spec.scale;
    const std::size_t n_boundary = std::max<std::size_t>(n / 4, 8);
    for (std::size_t trial = 0; trial < 4 * n_boundary; ++trial) {
        x = cloud[static_cast<std::size_t>(unif(eng) * cloud.size())].x;
        bool ok = false;
        for (int it = 0; it < 50; ++it) {
            const double v = spec.phi(x);
            if (std::abs(v) <= level_tol) {
                ok = true;
                break;
            }
            spec.grad(x, g);
            double g2 = 0.0;
            for (double gi : g) g2 += sq(gi);
            if (g2 < 1e-30) break;
            for (std::size_t i = 0; i < d; ++i) x[i] -= v * g[i] / g2;
            clamp_box(x);
        }
        if (ok && spec.phi(x) >= -level_tol) {
            for (std::size_t i = 0; i < d; ++i)
                x[i] = std::clamp(x[i], box.x_min[i], box.x_max[i]);
            cloud.push_back({draw_t(), x});
            if (cloud.size() >= n + n_boundary) break;
        }
    }

    // Bisection between an inside point and a rejected outside point.
    if (!outside.empty()) {
        for (std::size_t trial = 0; trial < n_boundary; ++trial) {
            std::vector<double> in = cloud[static_cast<std::size_t>(unif(eng) * n)].x;
            std::vector<double> out = outside;
            for (int it = 0; it < 120; ++it) {
                std::vector<double> mid(d);
                for (std::size_t i = 0; i < d; ++i) mid[i] = 0.5 * (in[i] + out[i]);
                (spec.phi(mid) >= 0.0 ? in : out) = mid;
            }
            cloud.push_back({draw_t(), in});
        }
    }
    return cloud;
}

struct ViabilityOptions {
    double tol = 1e-9;
    double boundary_delta = 0.0;  // resolved to 1e-6 * spec.scale when zero
};

namespace detail {

inline const char* sampling_note =
    "sampled evidence only: the check supports or refutes the condition on the "
    "visited points and cannot certify it on the whole domain";

}  // namespace detail

// Conditions of the viability theorem on a supplied point cloud. The drift
// condition is evaluated on every point; the noise-orthogonality condition on
// the boundary-proximal subsample |phi| <= delta. Entries store the worst
// violation (negative values are margins).
inline ConditionReport check_viability(const MixedModel& model, const BoundarySpec& spec,
                                       const std::vector<SamplePoint>& cloud,
                                       const ViabilityOptions& opt = {}) {
    model.validate();
    spec.validate(model.m > 0);
    require(!cloud.empty(), Errc::invalid_argument, "point cloud must be nonempty", "cloud");
    const double delta = opt.boundary_delta > 0.0 ? opt.boundary_delta : 1e-6 * spec.scale;

    const std::size_t d = model.d;
    std::vector<double> g(d), h(d * d), a(d), bk(d), cj(d);
    ConditionEntry drift{"VM1", -std::numeric_limits<double>::infinity(), opt.tol, true, ""};
    ConditionEntry ortho{"VM2", -std::numeric_limits<double>::infinity(), opt.tol, true, ""};
    std::size_t n_boundary = 0;

    for (const SamplePoint& pt : cloud) {
        require(pt.x.size() == d, Errc::invalid_argument, "cloud dimension mismatch", "cloud");
        const double phi = spec.phi(pt.x);
        if (phi < -delta) continue;  // outside D up to tolerance; not part of the domain
        spec.grad(pt.x, g);

        model.drift(pt.t, pt.x, a);
        double alpha = 0.0;
        for (std::size_t i = 0; i < d; ++i) alpha += g[i] * a[i];
        if (model.m > 0) {
            spec.hess(pt.x, h);
            for (std::size_t k = 0; k < model.m; ++k) {
                model.wiener_diff(pt.t, pt.x, k, bk);
                for (std::size_t i = 0; i < d; ++i)
                    for (std::size_t l = 0; l < d; ++l)
                        alpha += 0.5 * bk[i] * bk[l] * h[i * d + l];
            }
        }
        if (-alpha > drift.observed) {
            drift.observed = -alpha;
            drift.witness = detail::point_witness(pt.t, pt.x);
        }

        if (std::abs(phi) <= delta) {
            ++n_boundary;
            require(euclid_norm(g) > 1e-12 * spec.scale, Errc::invalid_argument,
                    "gradient vanishes on the boundary", "phi");
            double worst = 0.0;
            for (std::size_t k = 0; k < model.m; ++k) {
                model.wiener_diff(pt.t, pt.x, k, bk);
                double dot = 0.0;
                for (std::size_t i = 0; i < d; ++i) dot += g[i] * bk[i];
                worst = std::max(worst, std::abs(dot));
            }
            for (std::size_t j = 0; j < model.r; ++j) {
                model.holder_diff(pt.t, pt.x, j, cj);
                double dot = 0.0;
                for (std::size_t i = 0; i < d; ++i) dot += g[i] * cj[i];
                worst = std::max(worst, std::abs(dot));
            }
            if (worst > ortho.observed) {
                ortho.observed = worst;
                ortho.witness = detail::point_witness(pt.t, pt.x);
            }
        }
    }
    require(n_boundary > 0, Errc::invalid_argument,
            "cloud has no boundary-proximal points for the orthogonality check", "cloud");

    drift.passed = drift.observed <= drift.threshold;
    ortho.passed = ortho.observed <= ortho.threshold;
    ConditionReport rep;
    rep.entries = {drift, ortho};
    rep.note = detail::sampling_note;
    return rep;
}

// Effective drift of the smoothed-driver equation along one realization: the
// pathwise integral term becomes an ordinary drift with slope
// n*(k_n(Z(t)) - k_n(Z(t - 1/n) or 0)). The returned model has no Hoelder
// channel and shares the Wiener channel with the input.
inline MixedModel with_realized_driver(const MixedModel& model, const SamplePath& z,
                                       std::size_t n) {
    model.validate();
    require(model.r == z.dim, Errc::invalid_argument, "driver dimension mismatch", "z");
    require(n >= 1, Errc::invalid_argument, "smoothing index must be at least 1", "n");

    // Node-linear interpolation of k_n(Z). The path is copied so the model
    // stays valid after the caller releases its driver.
    auto knz_at = [z, n](double t, std::vector<double>& out) {
        const TimeGrid& grid = z.grid;
        const double dt = grid.dt();
        const double s = std::clamp(t, 0.0, grid.horizon);
        const std::size_t i0 = std::min(static_cast<std::size_t>(s / dt), grid.steps - 1);
        const double w = (s - grid.node(i0)) / dt;
        std::vector<double> lo(z.dim), hi(z.dim);
        truncate_kn(z.at(i0), n, lo);
        truncate_kn(z.at(i0 + 1), n, hi);
        out.resize(z.dim);
        for (std::size_t j = 0; j < z.dim; ++j) out[j] = (1.0 - w) * lo[j] + w * hi[j];
    };

    MixedModel out = model;
    out.r = 0;
    out.holder_diff = nullptr;
    out.holder_diff_deriv = nullptr;
    const MixedModel base = model;
    const double nd = static_cast<double>(n);
    out.drift = [base, knz_at, nd](double t, std::span<const double> x, std::span<double> o) {
        base.drift(t, x, o);
        std::vector<double> now, before, c(base.d);
        knz_at(t, now);
        knz_at(std::max(t - 1.0 / nd, 0.0), before);
        for (std::size_t j = 0; j < base.r; ++j) {
            base.holder_diff(t, x, j, c);
            const double slope = nd * (now[j] - before[j]);
            for (std::size_t i = 0; i < base.d; ++i) o[i] += c[i] * slope;
        }
    };
    return out;
}

struct PositivityOptions {
    double tol = 1e-9;
    std::size_t samples = 256;
    SeedSpec seed{20240904u, 0};
};

// Conditions of the positivity theorem: nonnegative start in the first dprime
// coordinates, and on sampled faces {x_i = 0, x_l >= 0 for l <= dprime} the
// drift component i is nonnegative while the noise components vanish.
inline ConditionReport check_positivity(const MixedModel& model, std::span<const double> x0,
                                        std::size_t dprime, const HypothesisBox& box,
                                        const PositivityOptions& opt = {}) {
    model.validate();
    box.validate(model.d);
    require(x0.size() == model.d, Errc::invalid_argument, "initial state dimension mismatch",
            "x0");
    require(dprime >= 1 && dprime <= model.d, Errc::invalid_argument,
            "dprime must lie in [1, d]", "dprime");

    const std::size_t d = model.d;
    ConditionEntry start{"P1", -std::numeric_limits<double>::infinity(), opt.tol, true, ""};
    for (std::size_t i = 0; i < dprime; ++i) {
        if (-x0[i] > start.observed) {
            start.observed = -x0[i];
            start.witness = detail::point_witness(0.0, x0);
        }
    }
    start.passed = start.observed <= start.threshold;

    auto eng = make_engine(opt.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    ConditionEntry face{"P2", -std::numeric_limits<double>::infinity(), opt.tol, true, ""};
    std::vector<double> x(d), a(d), bk(d), cj(d);
    for (std::size_t s = 0; s < opt.samples; ++s) {
        const double t = box.t_min + (box.t_max - box.t_min) * unif(eng);
        for (std::size_t l = 0; l < d; ++l) {
            const double lo = l < dprime ? std::max(box.x_min[l], 0.0) : box.x_min[l];
            const double hi = std::max(box.x_max[l], lo);
            x[l] = lo + (hi - lo) * unif(eng);
        }
        for (std::size_t i = 0; i < dprime; ++i) {
            const double keep = x[i];
            x[i] = 0.0;
            model.drift(t, x, a);
            double worst = -a[i];
            for (std::size_t k = 0; k < model.m; ++k) {
                model.wiener_diff(t, x, k, bk);
                worst = std::max(worst, std::abs(bk[i]));
            }
            for (std::size_t j = 0; j < model.r; ++j) {
                model.holder_diff(t, x, j, cj);
                worst = std::max(worst, std::abs(cj[i]));
            }
            if (worst > face.observed) {
                face.observed = worst;
                face.witness = detail::point_witness(t, x);
            }
            x[i] = keep;
        }
    }
    face.passed = face.observed <= face.threshold;

    ConditionReport rep;
    rep.entries = {start, face};
    rep.note = detail::sampling_note;
    return rep;
}

struct ComparisonOptions {
    double tol = 1e-9;
    std::size_t samples = 256;
    double structure_tol = 1e-12;
    SeedSpec seed{20240905u, 0};
};

// Conditions of the comparison theorem for coordinate l. Structural
// preconditions (shared b and c, dependence on coordinate l only) are checked
// by sampling and violations throw; the ordering conditions are reported.
inline ConditionReport check_comparison(const MixedModel& m1, const MixedModel& m2,
                                        std::size_t l, std::span<const double> x01,
                                        std::span<const double> x02, const HypothesisBox& box,
                                        const ComparisonOptions& opt = {}) {
    m1.validate();
    m2.validate();
    require(m1.d == m2.d && m1.m == m2.m && m1.r == m2.r, Errc::invalid_argument,
            "models must share dimensions", "model");
    box.validate(m1.d);
    require(l < m1.d, Errc::invalid_argument, "coordinate out of range", "l");
    require(x01.size() == m1.d && x02.size() == m1.d, Errc::invalid_argument,
            "initial state dimension mismatch", "x0");

    const std::size_t d = m1.d;
    auto eng = make_engine(opt.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> x(d), y(d), v1(d), v2(d);

    auto draw = [&](std::vector<double>& p) {
        for (std::size_t i = 0; i < d; ++i)
            p[i] = box.x_min[i] + (box.x_max[i] - box.x_min[i]) * unif(eng);
    };

    // Structural check: both equations use one diffusion pair, and the
    // diffusions read only coordinate l.
    for (std::size_t s = 0; s < opt.samples; ++s) {
        const double t = box.t_min + (box.t_max - box.t_min) * unif(eng);
        draw(x);
        draw(y);
        y[l] = x[l];
        for (std::size_t k = 0; k < m1.m; ++k) {
            m1.wiener_diff(t, x, k, v1);
            m2.wiener_diff(t, x, k, v2);
            require(euclid_dist(v1, v2) <= opt.structure_tol, Errc::invalid_argument,
                    "Wiener diffusions differ between the models", "b");
            m1.wiener_diff(t, y, k, v2);
            require(euclid_dist(v1, v2) <= opt.structure_tol, Errc::invalid_argument,
                    "Wiener diffusion depends on a coordinate other than l", "b");
        }
        for (std::size_t j = 0; j < m1.r; ++j) {
            m1.holder_diff(t, x, j, v1);
            m2.holder_diff(t, x, j, v2);
            require(euclid_dist(v1, v2) <= opt.structure_tol, Errc::invalid_argument,
                    "Hoelder diffusions differ between the models", "c");
            m1.holder_diff(t, y, j, v2);
            require(euclid_dist(v1, v2) <= opt.structure_tol, Errc::invalid_argument,
                    "Hoelder diffusion depends on a coordinate other than l", "c");
        }
    }

    ConditionEntry start{"CM1", x01[l] - x02[l], opt.tol, true,
                         detail::point_witness(0.0, x01)};
    start.passed = start.observed <= start.threshold;

    ConditionEntry order{"CM2", -std::numeric_limits<double>::infinity(), opt.tol, true, ""};
    for (std::size_t s = 0; s < opt.samples; ++s) {
        const double t = box.t_min + (box.t_max - box.t_min) * unif(eng);
        draw(x);
        draw(y);
        y[l] = x[l];
        m1.drift(t, x, v1);
        m2.drift(t, y, v2);
        const double gap = v1[l] - v2[l];
        if (gap > order.observed) {
            order.observed = gap;
            order.witness =
                detail::point_witness(t, x) + " vs " + detail::point_witness(t, y);
        }
    }
    order.passed = order.observed <= order.threshold;

    ConditionReport rep;
    rep.entries = {start, order};
    rep.note = detail::sampling_note;
    return rep;
}

// Aggregate outcome of an empirical paired-path experiment.
struct ViolationStats {
    std::size_t n_paths = 0;
    std::size_t n_nodes = 0;
    std::size_t violating_nodes = 0;
    std::size_t violating_paths = 0;
    double max_violation = 0.0;
    double min_margin = std::numeric_limits<double>::infinity();
    std::vector<std::uint8_t> path_violated;

    double violation_fraction() const {
        return n_nodes == 0 ? 0.0
                            : static_cast<double>(violating_nodes) /
                                  static_cast<double>(n_nodes);
    }
};

struct EmpiricalOptions {
    double tol = 1e-9;
    bool absorbing = false;  // clamp scalar states to zero permanently
    std::size_t threads = 1;
};

namespace detail {

// Scalar Euler recursion with permanent absorption at zero, matching the
// short-rate solver semantics but driven through model evaluators.
inline std::vector<double> absorbing_nodes(const MixedModel& model, double x0,
                                           const SamplePath& w, const SamplePath& z,
                                           const TimeGrid& grid) {
    const double dt = grid.dt();
    std::vector<double> out(grid.nodes(), 0.0);
    double x = x0;
    out[0] = x;
    std::vector<double> xv(1), coef(1);
    for (std::size_t i = 0; i < grid.steps; ++i) {
        if (x <= 0.0) break;  // remaining nodes stay zero
        xv[0] = x;
        model.drift(grid.node(i), xv, coef);
        double xn = x + coef[0] * dt;
        for (std::size_t k = 0; k < model.m; ++k) {
            model.wiener_diff(grid.node(i), xv, k, coef);
            xn += coef[0] * (w.value(i + 1, k) - w.value(i, k));
        }
        for (std::size_t j = 0; j < model.r; ++j) {
            model.holder_diff(grid.node(i), xv, j, coef);
            xn += coef[0] * (z.value(i + 1, j) - z.value(i, j));
        }
        if (!std::isfinite(xn)) fail_nonfinite(i + 1);
        x = xn <= 0.0 ? 0.0 : xn;
        out[i + 1] = x;
    }
    return out;
}

}  // namespace detail

// Solves both equations with identical noise per path and counts node-wise
// order violations X1_l > X2_l + tol.
inline ViolationStats empirical_comparison(const MixedModel& m1, const MixedModel& m2,
                                           std::size_t l, std::span<const double> x01,
                                           std::span<const double> x02, HurstParam hurst,
                                           std::size_t n_paths, const TimeGrid& grid,
                                           SeedSpec seed, const EmpiricalOptions& opt = {}) {
    m1.validate();
    m2.validate();
    require(m1.d == m2.d && m1.m == m2.m && m1.r == m2.r, Errc::invalid_argument,
            "models must share dimensions", "model");
    require(l < m1.d, Errc::invalid_argument, "coordinate out of range", "l");
    require(n_paths >= 1, Errc::invalid_argument, "need at least one path", "n_paths");
    require(!opt.absorbing || m1.d == 1, Errc::invalid_argument,
            "absorption applies to scalar models only", "absorbing");

    const std::size_t nodes = grid.nodes();
    std::vector<std::uint8_t> flags(n_paths, 0);
    std::vector<double> worst(n_paths, 0.0);
    std::vector<double> margin(n_paths, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> bad_nodes(n_paths, 0);
    std::vector<double> x01v(x01.begin(), x01.end()), x02v(x02.begin(), x02.end());

    FbmSampler sampler(grid, hurst);
    parallel_for(n_paths, opt.threads, [&](std::size_t p) {
        SamplePath w = m1.m > 0 ? gen_wiener(grid, m1.m, wiener_stream(seed.master, p))
                                : SamplePath{};
        SamplePath z = m1.r > 0 ? (m1.r == 1 ? sampler.sample(fbm_stream(seed.master, p))
                                             : gen_fbm_multi(grid, hurst, m1.r,
                                                             fbm_stream(seed.master, p)))
                                : SamplePath{};
        std::vector<double> a, b;
        if (opt.absorbing) {
            a = detail::absorbing_nodes(m1, x01v[0], w, z, grid);
            b = detail::absorbing_nodes(m2, x02v[0], w, z, grid);
        } else {
            SamplePath pa = euler_mixed(m1, x01v, w, z, grid);
            SamplePath pb = euler_mixed(m2, x02v, w, z, grid);
            a = pa.component(l);
            b = pb.component(l);
        }
        for (std::size_t i = 0; i < nodes; ++i) {
            const double gap = b[i] - a[i];
            margin[p] = std::min(margin[p], gap);
            if (-gap > opt.tol) {
                ++bad_nodes[p];
                flags[p] = 1;
                worst[p] = std::max(worst[p], -gap);
            }
        }
    });

    ViolationStats st;
    st.n_paths = n_paths;
    st.n_nodes = n_paths * nodes;
    st.path_violated = std::move(flags);
    for (std::size_t p = 0; p < n_paths; ++p) {
        st.violating_nodes += bad_nodes[p];
        st.violating_paths += st.path_violated[p];
        st.max_violation = std::max(st.max_violation, worst[p]);
        st.min_margin = std::min(st.min_margin, margin[p]);
    }
    return st;
}

// Solves the model and reports the node-wise minimum of phi(X) together with
// the fraction of nodes leaving the domain by more than tol.
inline ViolationStats empirical_viability(const MixedModel& model, const BoundarySpec& spec,
                                          std::span<const double> x0, HurstParam hurst,
                                          std::size_t n_paths, const TimeGrid& grid,
                                          SeedSpec seed, const EmpiricalOptions& opt = {}) {
    model.validate();
    spec.validate(false);
    require(x0.size() == model.d, Errc::invalid_argument, "initial state dimension mismatch",
            "x0");
    require(spec.phi(x0) >= 0.0, Errc::invalid_argument, "start must lie inside the domain",
            "x0");
    require(n_paths >= 1, Errc::invalid_argument, "need at least one path", "n_paths");
    require(!opt.absorbing || model.d == 1, Errc::invalid_argument,
            "absorption applies to scalar models only", "absorbing");

    const std::size_t nodes = grid.nodes();
    std::vector<std::uint8_t> flags(n_paths, 0);
    std::vector<double> worst(n_paths, 0.0);
    std::vector<double> margin(n_paths, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> bad_nodes(n_paths, 0);
    std::vector<double> x0v(x0.begin(), x0.end());

    FbmSampler sampler(grid, hurst);
    parallel_for(n_paths, opt.threads, [&](std::size_t p) {
        SamplePath w = model.m > 0 ? gen_wiener(grid, model.m, wiener_stream(seed.master, p))
                                   : SamplePath{};
        SamplePath z = model.r > 0
                           ? (model.r == 1 ? sampler.sample(fbm_stream(seed.master, p))
                                           : gen_fbm_multi(grid, hurst, model.r,
                                                           fbm_stream(seed.master, p)))
                           : SamplePath{};
        SamplePath path;
        std::vector<double> nodes1;
        if (opt.absorbing) {
            nodes1 = detail::absorbing_nodes(model, x0v[0], w, z, grid);
        } else {
            path = euler_mixed(model, x0v, w, z, grid);
        }
        std::vector<double> state(model.d);
        for (std::size_t i = 0; i < nodes; ++i) {
            if (opt.absorbing)
                state[0] = nodes1[i];
            else
                std::copy(path.at(i).begin(), path.at(i).end(), state.begin());
            const double phi = spec.phi(state);
            margin[p] = std::min(margin[p], phi);
            if (phi < -opt.tol) {
                ++bad_nodes[p];
                flags[p] = 1;
                worst[p] = std::max(worst[p], -phi);
            }
        }
    });

    ViolationStats st;
    st.n_paths = n_paths;
    st.n_nodes = n_paths * nodes;
    st.path_violated = std::move(flags);
    for (std::size_t p = 0; p < n_paths; ++p) {
        st.violating_nodes += bad_nodes[p];
        st.violating_paths += st.path_violated[p];
        st.max_violation = std::max(st.max_violation, worst[p]);
        st.min_margin = std::min(st.min_margin, margin[p]);
    }
    return st;
}

}  // namespace mixedsde
