#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixedsde {

enum class Errc {
    invalid_argument,
    invalid_hurst,
    unknown_model,
    resource_limit,
    convergence_failure,
    numeric_failure,
    io_failure,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::invalid_argument:    return "invalid_argument";
        case Errc::invalid_hurst:       return "invalid_hurst";
        case Errc::unknown_model:       return "unknown_model";
        case Errc::resource_limit:      return "resource_limit";
        case Errc::convergence_failure: return "convergence_failure";
        case Errc::numeric_failure:     return "numeric_failure";
        case Errc::io_failure:          return "io_failure";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message, std::string field = {})
        : std::runtime_error(std::move(message)), code_(code), field_(std::move(field)) {}

    Errc code() const { return code_; }
    const std::string& field() const { return field_; }

private:
    Errc code_;
    std::string field_;
};

[[noreturn]] inline void fail(Errc code, std::string message, std::string field = {}) {
    throw Error(code, std::move(message), std::move(field));
}

inline void require(bool cond, Errc code, const std::string& message, const std::string& field = {}) {
    if (!cond) fail(code, message, field);
}

/// Uniform grid 0 = t_0 < t_1 < ... < t_N = T.
struct TimeGrid {
    double horizon = 1.0;
    std::size_t steps = 2;

    TimeGrid() = default;
    TimeGrid(double T, std::size_t N) : horizon(T), steps(N) {
        require(std::isfinite(T) && T > 0.0, Errc::invalid_argument, "grid horizon must be positive", "grid.T");
        require(N >= 2, Errc::invalid_argument, "grid needs at least two steps", "grid.N");
    }

    double dt() const { return horizon / static_cast<double>(steps); }
    std::size_t nodes() const { return steps + 1; }
    // node(steps) returns the horizon exactly.
    double node(std::size_t i) const { return horizon * static_cast<double>(i) / static_cast<double>(steps); }

    bool operator==(const TimeGrid& o) const { return horizon == o.horizon && steps == o.steps; }

    /// Index of the node closest to t; rejects t that falls between nodes.
    std::size_t index_of(double t) const {
        const double pos = t / dt();
        const double r = std::round(pos);
        require(std::abs(pos - r) <= 1e-9 * static_cast<double>(steps) + 1e-12,
                Errc::invalid_argument, "time does not coincide with a grid node", "t");
        require(r >= 0.0 && r <= static_cast<double>(steps), Errc::invalid_argument,
                "time outside the grid", "t");
        return static_cast<std::size_t>(r);
    }
};

/// Values of a d-dimensional process on the nodes of a TimeGrid, row-major.
struct SamplePath {
    TimeGrid grid;
    std::size_t dim = 1;
    std::vector<double> data;  // (steps+1) * dim values

    SamplePath() = default;
    SamplePath(TimeGrid g, std::size_t d) : grid(g), dim(d), data(g.nodes() * d, 0.0) {
        require(d >= 1, Errc::invalid_argument, "path dimension must be positive", "dim");
    }

    double value(std::size_t node, std::size_t k = 0) const { return data[node * dim + k]; }
    double& value(std::size_t node, std::size_t k = 0) { return data[node * dim + k]; }
    std::span<const double> at(std::size_t node) const { return {data.data() + node * dim, dim}; }
    std::span<double> at(std::size_t node) { return {data.data() + node * dim, dim}; }

    /// Scalar view of one coordinate.
    std::vector<double> component(std::size_t k) const {
        std::vector<double> out(grid.nodes());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(i, k);
        return out;
    }

    /// Keeps every stride-th node (refinement-coarsening helper for property checks).
    SamplePath subsample(std::size_t stride) const {
        require(stride >= 1 && grid.steps % stride == 0, Errc::invalid_argument,
                "stride must divide the step count", "stride");
        SamplePath out(TimeGrid(grid.horizon, grid.steps / stride), dim);
        for (std::size_t i = 0; i <= out.grid.steps; ++i)
            for (std::size_t k = 0; k < dim; ++k) out.value(i, k) = value(i * stride, k);
        return out;
    }
};

/// Deterministic stream selector: one master seed, one sub-stream per consumer.
struct SeedSpec {
    std::uint64_t master = 0;
    std::uint64_t stream = 0;
};

inline double sq(double x) { return x * x; }

inline double euclid_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double euclid_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += sq(a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace mixedsde
