#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <utility>
#include <vector>

#include "core.hpp"
#include "model.hpp"
#include "noise.hpp"
#include "solver.hpp"

namespace mixedsde {

// Right side of the Volterra kernel equation. The exponent 2H-2 lies in
// (-1, 0) for H in (1/2, 1), so the value diverges as s approaches t but
// stays integrable in s.
inline double kernel_rhs(double t, double s, HurstParam H) {
    require(s < t, Errc::invalid_argument, "second argument must precede the first", "s");
    const double h = H.value();
    return h * (2.0 * h - 1.0) * std::pow(t - s, 2.0 * h - 2.0);
}

// Tabulated solution of r(t,s) + int_0^s r(t,x) r(s,x) dx = rhs(t,s).
// Rows live at the nodes t_i = i*dt, i = 1..N; within row i the second
// argument is evaluated at the interval midpoints x_p = (p + 1/2)*dt for
// p < i, so every tabulated pair keeps a distance of at least dt/2 from the
// diagonal singularity.
class KernelGrid {
  public:
    KernelGrid() = default;
    KernelGrid(TimeGrid g, double hurst_value, std::vector<double> values, double residual)
        : grid_(g), hurst_(hurst_value), values_(std::move(values)), max_residual_(residual) {
        require(values_.size() == grid_.steps * (grid_.steps + 1) / 2, Errc::invalid_argument,
                "value table size does not match the grid", "values");
    }

    const TimeGrid& grid() const { return grid_; }
    double hurst() const { return hurst_; }
    double max_residual() const { return max_residual_; }

    std::size_t rows() const { return grid_.steps; }

    // Row i holds r(t_i, x_p) for p = 0..i-1.
    std::span<const double> row(std::size_t i) const {
        require(i >= 1 && i <= grid_.steps, Errc::invalid_argument, "row index out of range", "i");
        return {values_.data() + i * (i - 1) / 2, i};
    }

    double value(std::size_t i, std::size_t p) const {
        require(i >= 1 && i <= grid_.steps, Errc::invalid_argument, "row index out of range", "i");
        require(p < i, Errc::invalid_argument, "column index out of range", "p");
        return values_[i * (i - 1) / 2 + p];
    }

    double col_time(std::size_t p) const { return (static_cast<double>(p) + 0.5) * grid_.dt(); }

  private:
    TimeGrid grid_;
    double hurst_ = 0.5;
    std::vector<double> values_;
    double max_residual_ = 0.0;
};

inline constexpr std::size_t kernel_grid_cap = 1024;

// Marching Nystrom solve on the half grid tau_k = k*dt/2. Each half-grid row
// k >= 2 holds entries at the midpoints x_p < tau_k, so the bilinear term at
// (tau_k, x_p) needs only earlier columns of the same row and the earlier row
// tau_{2p+1} = x_p; the system stays explicit. The quadrature is the product
// midpoint rule on the full-width intervals plus the exactly integrated
// leading singular factor on the ragged final piece [p*dt, x_p], which folds
// the unknown into the divisor 1 + H*(dt/2)^{2H-1}.
inline KernelGrid solve_kernel(TimeGrid grid, HurstParam H, double tol = 1e-3) {
    require(grid.steps <= kernel_grid_cap, Errc::resource_limit,
            "kernel grids are capped at 1024 steps", "grid");
    require(tol > 0.0, Errc::invalid_argument, "tolerance must be positive", "tol");

    const std::size_t n = grid.steps;
    const double dt = grid.dt();
    const double half = 0.5 * dt;
    const double h = H.value();
    const double kappa = h * std::pow(half, 2.0 * h - 1.0);

    const std::size_t half_rows = 2 * n;
    auto cols = [](std::size_t k) -> std::size_t { return k >= 2 ? ((k - 2) >> 1) + 1 : 0; };
    std::vector<std::size_t> ofs(half_rows + 2, 0);
    for (std::size_t k = 0; k <= half_rows; ++k) ofs[k + 1] = ofs[k] + cols(k);
    std::vector<double> tab(ofs[half_rows + 1], 0.0);

    for (std::size_t k = 2; k <= half_rows; ++k) {
        const double t = static_cast<double>(k) * half;
        double* row = tab.data() + ofs[k];
        for (std::size_t p = 0; p < cols(k); ++p) {
            const double s = (static_cast<double>(p) + 0.5) * dt;
            const double* prior = tab.data() + ofs[2 * p + 1];
            double sum = 0.0;
            for (std::size_t q = 0; q < p; ++q) sum += row[q] * prior[q];
            row[p] = (kernel_rhs(t, s, H) - dt * sum) / (1.0 + kappa);
        }
    }

    // Plug-back certificate at the exposed pairs, with the quadrature summed
    // in the opposite order so the check is not the defining arithmetic
    // verbatim. The certificate measures self-consistency of the tabulated
    // values under the discrete operator; accuracy in the continuous sense is
    // established separately by grid refinement and distributional tests.
    double worst = 0.0;
    std::size_t worst_i = 0, worst_p = 0;
    for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t k = 2 * i;
        const double t = grid.node(i);
        const double* row = tab.data() + ofs[k];
        for (std::size_t p = 0; p < i; ++p) {
            const double s = (static_cast<double>(p) + 0.5) * dt;
            const double* prior = tab.data() + ofs[2 * p + 1];
            double sum = 0.0;
            for (std::size_t q = p; q-- > 0;) sum += row[q] * prior[q];
            const double resid =
                std::abs(row[p] * (1.0 + kappa) + dt * sum - kernel_rhs(t, s, H));
            if (resid > worst) {
                worst = resid;
                worst_i = i;
                worst_p = p;
            }
        }
    }
    if (!(worst <= tol)) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "kernel residual %.3e exceeds tolerance %.3e at t=%.6g s=%.6g", worst, tol,
                      grid.node(worst_i), (static_cast<double>(worst_p) + 0.5) * dt);
        fail(Errc::convergence_failure, buf, "tol");
    }

    std::vector<double> values(n * (n + 1) / 2);
    for (std::size_t i = 1; i <= n; ++i) {
        const double* row = tab.data() + ofs[2 * i];
        std::copy(row, row + i, values.begin() + static_cast<std::ptrdiff_t>(i * (i - 1) / 2));
    }
    return KernelGrid(grid, h, std::move(values), worst);
}

// Reconstructs the mixed driver from a Wiener path: the inner stochastic
// integral g(t_j) = int_0^{t_j} r(t_j, u) dW(u) is an increment-weighted row
// sum, the outer time integral is the trapezoid rule, and the result is
// W(t) plus that double integral. The sign is pinned by the covariance
// factorization: differentiating Cov of the reconstruction in both time
// arguments yields -r(t,s) + int_0^s r(t,x) r(s,x) dx, so with the kernel
// normalized by the quadratic equation above, only the additive convolution
// reproduces the mixed-driver covariance min(s,t) + fbm_covariance(s,t).
inline SamplePath simulate_decomposition(const KernelGrid& kernel, const SamplePath& wtilde,
                                         const TimeGrid& grid) {
    require(kernel.grid() == grid, Errc::invalid_argument, "kernel grid does not match", "kernel");
    detail::check_noise(wtilde, 1, grid, "wtilde");

    const std::size_t n = grid.steps;
    const double dt = grid.dt();
    std::vector<double> g(n + 1, 0.0);
    for (std::size_t j = 1; j <= n; ++j) {
        std::span<const double> row = kernel.row(j);
        double sum = 0.0;
        for (std::size_t p = 0; p < j; ++p)
            sum += row[p] * (wtilde.value(p + 1) - wtilde.value(p));
        g[j] = sum;
    }

    SamplePath out(grid, 1);
    out.value(0) = wtilde.value(0);
    double cum = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        cum += 0.5 * dt * (g[i - 1] + g[i]);
        out.value(i) = wtilde.value(i) + cum;
    }
    return out;
}

// Euler scheme for the transformed short-rate equation whose drift carries
// the running inner integral J(t_i) = int_0^{t_i} r(t_i, u) dW(u). The row
// changes with i, so J is recomputed per step. The drift gains +sigma*X^l*J,
// matching the additive convolution in the driver reconstruction; with the
// opposite sign the solution would follow a driver whose variance falls
// short of the mixed one. Absorption matches solve_cir: the first
// nonpositive state pins the hitting time by linear interpolation and the
// path stays at zero afterwards.
inline SolveResult solve_cir_transformed(const CirParams& params, const KernelGrid& kernel,
                                         const SamplePath& wtilde, const TimeGrid& grid) {
    params.validate();
    require(params.mixed, Errc::invalid_argument,
            "the transformed equation applies to the mixed variant", "params");
    require(kernel.grid() == grid, Errc::invalid_argument, "kernel grid does not match", "kernel");
    detail::check_noise(wtilde, 1, grid, "wtilde");

    const double dt = grid.dt();
    SolveResult res;
    res.path = SamplePath(grid, 1);
    double x = params.x0;
    res.path.value(0) = x;
    for (std::size_t i = 0; i < grid.steps; ++i) {
        double jterm = 0.0;
        if (i >= 1) {
            std::span<const double> row = kernel.row(i);
            for (std::size_t p = 0; p < i; ++p)
                jterm += row[p] * (wtilde.value(p + 1) - wtilde.value(p));
        }
        const double dw = wtilde.value(i + 1) - wtilde.value(i);
        const double diff = params.sigma * std::pow(std::max(x, 0.0), params.lambda);
        const double drift = params.a * x + diff * jterm;
        const double xn = x + drift * dt + diff * dw;
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

}  // namespace mixedsde
