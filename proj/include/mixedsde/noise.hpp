#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include <fftw3.h>
#include <Eigen/Dense>

#include <mixedsde/core.hpp>
#include <mixedsde/rng.hpp>

namespace mixedsde {

/// Hurst exponent restricted to (1/2, 1). The boundary value 1/2 turns the
/// fractional driver into a second Wiener process and is allowed only through
/// the explicitly named test hook.
class HurstParam {
public:
    static HurstParam checked(double h) {
        require(std::isfinite(h) && h > 0.5 && h < 1.0, Errc::invalid_hurst,
                "Hurst parameter must lie strictly inside (0.5, 1)", "H");
        return HurstParam(h);
    }

    /// Analytic-limit hook: H = 1/2 reduces every formula to the Wiener case.
    static HurstParam test_only(double h) {
        require(std::isfinite(h) && h >= 0.5 && h < 1.0, Errc::invalid_hurst,
                "test-only Hurst parameter must lie in [0.5, 1)", "H");
        return HurstParam(h);
    }

    double value() const { return h_; }

private:
    explicit HurstParam(double h) : h_(h) {}
    double h_;
};

/// Cov(B^H(s), B^H(t)) = (s^{2H} + t^{2H} - |t-s|^{2H}) / 2.
inline double fbm_covariance(double s, double t, double H) {
    require(s >= 0.0 && t >= 0.0, Errc::invalid_argument, "covariance needs nonnegative times", "s");
    const double twoH = 2.0 * H;
    return 0.5 * (std::pow(s, twoH) + std::pow(t, twoH) - std::pow(std::abs(t - s), twoH));
}

namespace detail {

// Autocovariance of the stationary increment sequence on a uniform grid.
inline double fgn_autocov(std::size_t lag, double dt, double H) {
    const double twoH = 2.0 * H;
    const double k = static_cast<double>(lag);
    return 0.5 * std::pow(dt, twoH) *
           (std::pow(k + 1.0, twoH) - 2.0 * std::pow(k, twoH) + std::pow(std::abs(k - 1.0), twoH));
}

inline std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    fftw_complex* p = nullptr;
    explicit FftwBuffer(std::size_t n) : p(fftw_alloc_complex(n)) {
        if (!p) fail(Errc::resource_limit, "fftw allocation failed");
    }
    ~FftwBuffer() { fftw_free(p); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
};

class FftwPlan {
public:
    explicit FftwPlan(std::size_t m) : size_(m) {
        FftwBuffer in(m), out(m);
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        plan_ = fftw_plan_dft_1d(static_cast<int>(m), in.p, out.p, FFTW_FORWARD, FFTW_ESTIMATE);
        if (!plan_) fail(Errc::resource_limit, "fftw plan creation failed");
    }
    ~FftwPlan() {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(plan_);
    }
    FftwPlan(const FftwPlan&) = delete;
    FftwPlan& operator=(const FftwPlan&) = delete;

    // Safe to call concurrently with distinct buffers.
    void execute(fftw_complex* in, fftw_complex* out) const { fftw_execute_dft(plan_, in, out); }
    std::size_t size() const { return size_; }

private:
    fftw_plan plan_;
    std::size_t size_;
};

}  // namespace detail

enum class FbmMethod { automatic, circulant, dense };

/// Exact-covariance synthesis of fractional Brownian motion on a fixed grid.
/// Prefers the circulant embedding of the increment covariance (one FFT per
/// path); falls back to a dense Cholesky factor when the embedding fails to
/// be nonnegative. Construction does all grid-dependent work once so that
/// Monte Carlo loops pay only per-path cost.
class FbmSampler {
public:
    static constexpr std::size_t max_steps = 8192;
    static constexpr std::size_t max_dense_steps = 2048;

    FbmSampler(TimeGrid grid, HurstParam H, FbmMethod method = FbmMethod::automatic)
        : grid_(grid), H_(H.value()) {
        require(grid.steps <= max_steps, Errc::resource_limit,
                "grid exceeds the supported step count for noise synthesis", "grid.N");
        if (method != FbmMethod::dense && try_circulant()) {
            method_ = FbmMethod::circulant;
            return;
        }
        require(method != FbmMethod::circulant, Errc::numeric_failure,
                "circulant embedding of the increment covariance is not nonnegative at this grid size");
        build_dense();
        method_ = FbmMethod::dense;
    }

    FbmMethod method() const { return method_; }
    const TimeGrid& grid() const { return grid_; }
    double hurst() const { return H_; }

    /// One path; B(0) = 0. Consumes a fixed number of draws from the stream.
    SamplePath sample(SeedSpec seed) const {
        NormalSource normals(seed);
        SamplePath path(grid_, 1);
        std::vector<double> inc(grid_.steps);
        if (method_ == FbmMethod::circulant) {
            sample_circulant(normals, inc);
        } else {
            sample_dense(normals, inc);
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < inc.size(); ++i) {
            acc += inc[i];
            path.value(i + 1) = acc;
        }
        return path;
    }

private:
    bool try_circulant() {
        const std::size_t n = grid_.steps;
        const std::size_t m = 2 * n;
        std::vector<double> row(m);
        for (std::size_t j = 0; j <= n; ++j) row[j] = detail::fgn_autocov(j, grid_.dt(), H_);
        for (std::size_t j = n + 1; j < m; ++j) row[j] = row[m - j];

        detail::FftwBuffer in(m), out(m);
        plan_ = std::make_unique<detail::FftwPlan>(m);
        for (std::size_t j = 0; j < m; ++j) {
            in.p[j][0] = row[j];
            in.p[j][1] = 0.0;
        }
        plan_->execute(in.p, out.p);

        std::vector<double> eig(m);
        double max_eig = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            eig[j] = out.p[j][0];
            max_eig = std::max(max_eig, eig[j]);
        }
        const double tol = -1e-9 * max_eig;
        for (double e : eig)
            if (e < tol) return false;

        // Premultiplied spectral weights for the synthesis step.
        weight_.resize(m);
        const double dm = static_cast<double>(m);
        weight_[0] = std::sqrt(std::max(eig[0], 0.0) / dm);
        weight_[n] = std::sqrt(std::max(eig[n], 0.0) / dm);
        for (std::size_t k = 1; k < n; ++k) {
            const double w = std::sqrt(std::max(eig[k], 0.0) / (2.0 * dm));
            weight_[k] = w;
            weight_[m - k] = w;
        }
        return true;
    }

    void sample_circulant(NormalSource& normals, std::span<double> inc) const {
        const std::size_t n = grid_.steps;
        const std::size_t m = 2 * n;
        detail::FftwBuffer in(m), out(m);
        in.p[0][0] = weight_[0] * normals();
        in.p[0][1] = 0.0;
        in.p[n][0] = weight_[n] * normals();
        in.p[n][1] = 0.0;
        for (std::size_t k = 1; k < n; ++k) {
            const double u = normals();
            const double v = normals();
            in.p[k][0] = weight_[k] * u;
            in.p[k][1] = weight_[k] * v;
            in.p[m - k][0] = weight_[m - k] * u;
            in.p[m - k][1] = -weight_[m - k] * v;
        }
        plan_->execute(in.p, out.p);
        for (std::size_t i = 0; i < n; ++i) inc[i] = out.p[i][0];
    }

    void build_dense() {
        const std::size_t n = grid_.steps;
        require(n <= max_dense_steps, Errc::resource_limit,
                "dense covariance factorization is capped at 2048 steps", "grid.N");
        Eigen::MatrixXd cov(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    detail::fgn_autocov(i > j ? i - j : j - i, grid_.dt(), H_);
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        require(llt.info() == Eigen::Success, Errc::numeric_failure,
                "increment covariance is not positive definite");
        chol_ = llt.matrixL();
    }

    void sample_dense(NormalSource& normals, std::span<double> inc) const {
        const auto n = static_cast<Eigen::Index>(grid_.steps);
        Eigen::VectorXd z(n);
        for (Eigen::Index i = 0; i < n; ++i) z(i) = normals();
        Eigen::VectorXd x = chol_ * z;
        for (Eigen::Index i = 0; i < n; ++i) inc[static_cast<std::size_t>(i)] = x(i);
    }

    TimeGrid grid_;
    double H_;
    FbmMethod method_ = FbmMethod::automatic;
    std::vector<double> weight_;
    std::unique_ptr<detail::FftwPlan> plan_;
    Eigen::MatrixXd chol_;
};

/// m-dimensional Wiener path with independent coordinates, W(0) = 0.
inline SamplePath gen_wiener(TimeGrid grid, std::size_t m, SeedSpec seed) {
    require(m >= 1, Errc::invalid_argument, "Wiener dimension must be positive", "m");
    NormalSource normals(seed);
    SamplePath path(grid, m);
    const double sdt = std::sqrt(grid.dt());
    for (std::size_t i = 0; i < grid.steps; ++i)
        for (std::size_t k = 0; k < m; ++k)
            path.value(i + 1, k) = path.value(i, k) + sdt * normals();
    return path;
}

/// Single fractional Brownian path. For repeated sampling construct an
/// FbmSampler once and reuse it.
inline SamplePath gen_fbm(TimeGrid grid, HurstParam H, SeedSpec seed,
                          FbmMethod method = FbmMethod::automatic) {
    return FbmSampler(grid, H, method).sample(seed);
}

/// r independent fractional components stacked into one path; component j
/// draws from stream (seed.stream + j).
inline SamplePath gen_fbm_multi(TimeGrid grid, HurstParam H, std::size_t r, SeedSpec seed,
                                FbmMethod method = FbmMethod::automatic) {
    require(r >= 1, Errc::invalid_argument, "driver dimension must be positive", "r");
    FbmSampler sampler(grid, H, method);
    SamplePath out(grid, r);
    for (std::size_t j = 0; j < r; ++j) {
        SamplePath one = sampler.sample(SeedSpec{seed.master, seed.stream + j});
        for (std::size_t i = 0; i < grid.nodes(); ++i) out.value(i, j) = one.value(i);
    }
    return out;
}

/// Discrete Hoelder constant sup |g(t)-g(s)| / (t-s)^gamma over grid pairs.
/// Refining the grid can only enlarge the pair set, never shrink the value.
inline double holder_constant(const SamplePath& path, double gamma) {
    require(gamma > 0.0 && gamma < 1.0, Errc::invalid_argument,
            "Hoelder exponent must lie in (0, 1)", "gamma");
    const std::size_t n = path.grid.steps;
    const double dt = path.grid.dt();
    std::vector<double> powtab(n + 1, 0.0);
    for (std::size_t k = 1; k <= n; ++k) powtab[k] = std::pow(static_cast<double>(k) * dt, -gamma);
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j <= n; ++j)
            best = std::max(best, euclid_dist(path.at(j), path.at(i)) * powtab[j - i]);
    return best;
}

}  // namespace mixedsde
