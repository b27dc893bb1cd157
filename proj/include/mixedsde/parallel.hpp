#pragma once

#include <cstddef>
#include <span>
#include <thread>
#include <vector>

#include <mixedsde/core.hpp>

namespace mixedsde {

/// Runs fn(i) for i in [0, n). Work items must write to disjoint slots;
/// the split across workers must not influence any result.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const unsigned workers = std::min<std::size_t>(threads, n);
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

/// Fixed-shape pairwise sum: the reduction tree depends only on the length,
/// so totals are bit-identical however the values were produced.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(std::span<const double> v) {
    const auto n = static_cast<double>(v.size());
    MeanStderr r;
    r.mean = pairwise_sum(v) / n;
    if (v.size() < 2) return r;
    std::vector<double> dev2(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) dev2[i] = sq(v[i] - r.mean);
    r.stderr_ = std::sqrt(pairwise_sum(dev2) / (n - 1.0) / n);
    return r;
}

}  // namespace mixedsde
