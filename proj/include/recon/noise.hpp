#pragma once

// White noise, Brownian sheet and deterministic driver fields on dyadic
// grids, plus grid-level conditional expectations for the commuting
// filtration F^eta_x generated by the noise cells.

#include "recon/grid_field.hpp"
#include "recon/rng.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

namespace recon {

struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Stream tags keep the primary cells and every derived draw on disjoint
// Philox counters.
namespace streams {
inline constexpr uint64_t kResampleBase = uint64_t(1) << 62;
inline constexpr uint64_t kDriverSeed = 0xFB317u;  // frozen driver, per config
}  // namespace streams

inline double white_noise_cell(uint64_t seed, int sample, size_t flat_cell, double sd) {
    return sd * normal_at(seed, uint64_t(sample), flat_cell);
}

struct NoiseSample {
    GridField cells;  // iid N(0, cell volume) increments per cell
    uint64_t seed = 0;

    int dim() const { return cells.dim(); }
    int resolution() const { return cells.cells(); }
    double domain_size() const { return cells.domain_size(); }
    int samples() const { return cells.samples(); }
};

// Materialize the ensemble. Each cell value is a pure function of
// (seed, sample, cell), so the thread count cannot change the output.
inline NoiseSample sample_white_noise(int N, double T, int d, int M, uint64_t seed,
                                      size_t memory_cap_bytes = size_t(6) << 30,
                                      int threads = 1) {
    detail::require(N >= 1 && (N & (N - 1)) == 0, "sample_white_noise: N must be a power of two");
    detail::require(M >= 1, "sample_white_noise: M >= 1");
    size_t per_sample = 1;
    for (int i = 0; i < d; ++i) per_sample *= size_t(N);
    size_t bytes = per_sample * size_t(M) * sizeof(double);
    if (bytes > memory_cap_bytes)
        throw ResourceError("sample_white_noise: requested ensemble exceeds memory cap");

    NoiseSample ns{GridField(d, N, T, M, FieldKind::cell_density), seed};
    double sd = std::sqrt(ns.cells.cell_volume());
    auto fill = [&](int m0, int m1) {
        for (int m = m0; m < m1; ++m) {
            auto s = ns.cells.sample(m);
            for (size_t c = 0; c < s.size(); ++c) s[c] = white_noise_cell(seed, m, c, sd);
        }
    };
    int nt = std::clamp(threads, 1, M);
    if (nt == 1) {
        fill(0, M);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t)
            pool.emplace_back(fill, M * t / nt, M * (t + 1) / nt);
        for (auto& th : pool) th.join();
    }
    return ns;
}

// B at corner t = sum of all cells <= t; zero on the faces through 0.
inline GridField brownian_sheet(const NoiseSample& noise) {
    return cumulative_corners(noise.cells);
}

// ----------------------------------------------------------------------------
// Deterministic drivers
// ----------------------------------------------------------------------------

enum class DriverKind { smooth_poly, trig, frozen_fbm_sheet };

// Lower-triangular Cholesky factor of the 1-D fBm covariance on the grid
// points {iT/N : i=1..N}.
inline std::vector<double> fbm_cholesky_factor(int N, double T, double H) {
    auto cov = [&](double s, double t) {
        return 0.5 * (std::pow(s, 2 * H) + std::pow(t, 2 * H) - std::pow(std::fabs(t - s), 2 * H));
    };
    std::vector<double> L(size_t(N) * N, 0.0);
    for (int i = 0; i < N; ++i) {
        double ti = (i + 1) * T / N;
        for (int j = 0; j <= i; ++j) {
            double tj = (j + 1) * T / N;
            double sum = cov(ti, tj);
            for (int k = 0; k < j; ++k) sum -= L[size_t(i) * N + k] * L[size_t(j) * N + k];
            if (i == j) {
                detail::require(sum > 0, "fbm_cholesky_factor: covariance not SPD");
                L[size_t(i) * N + i] = std::sqrt(sum);
            } else {
                L[size_t(i) * N + j] = sum / L[size_t(j) * N + j];
            }
        }
    }
    return L;
}

// Corner-valued deterministic field (M = 1). The fBm sheet is the separable-
// covariance sheet E[Z_s Z_t] = prod_i C_H(s_i, t_i): its full rectangular
// increment has per-axis exponent exactly H.
inline GridField deterministic_driver(DriverKind kind, int N, double T, int d,
                                      double hurst = 0.75,
                                      uint64_t frozen_seed = streams::kDriverSeed) {
    GridField out(d, N, T, 1, FieldKind::corner_values);
    MultiIndex ext{};
    for (int i = 0; i < d; ++i) ext[i] = N + 1;
    auto s = out.sample(0);

    switch (kind) {
        case DriverKind::smooth_poly:
            for_each_multi(d, ext, [&](const MultiIndex& c) {
                double v = 1.0;
                for (int i = 0; i < d; ++i) v *= c[i] * out.h();
                s[out.flat(c)] = v;
            });
            break;
        case DriverKind::trig:
            for_each_multi(d, ext, [&](const MultiIndex& c) {
                double v = 1.0;
                for (int i = 0; i < d; ++i) v *= std::sin(3.0 * c[i] * out.h() / T + 0.2 * i);
                s[out.flat(c)] = v;
            });
            break;
        case DriverKind::frozen_fbm_sheet: {
            detail::require(hurst > 0.5 && hurst < 1.0,
                            "deterministic_driver: Hurst index must lie in (1/2,1)");
            detail::require(N <= 512, "deterministic_driver: fBm Cholesky path capped at N=512");
            detail::require(d == 2, "deterministic_driver: fBm sheet implemented for d=2");
            auto L = fbm_cholesky_factor(N, T, hurst);
            // Z = L G L^T on the interior corners, zero on the 0-faces.
            std::vector<double> g(size_t(N) * N), tmp(size_t(N) * N, 0.0);
            for (size_t k = 0; k < g.size(); ++k) g[k] = normal_at(frozen_seed, 0, k);
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) {
                    double acc = 0.0;
                    for (int k = 0; k <= i; ++k) acc += L[size_t(i) * N + k] * g[size_t(k) * N + j];
                    tmp[size_t(i) * N + j] = acc;
                }
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) {
                    double acc = 0.0;
                    for (int k = 0; k <= j; ++k) acc += tmp[size_t(i) * N + k] * L[size_t(j) * N + k];
                    MultiIndex c{};
                    c[0] = i + 1;
                    c[1] = j + 1;
                    s[out.flat(c)] = acc;
                }
            break;
        }
    }
    return out;
}

// ----------------------------------------------------------------------------
// Filtration masks and conditional expectation
// ----------------------------------------------------------------------------

// F^eta_x: generated by the noise cells whose i-extent lies below x_i for
// every i in eta.
struct FiltrationMask {
    IndexSet directions;
    Point threshold;

    bool cell_in_past(const GridField& cells, const MultiIndex& c) const {
        double h = cells.h();
        for (int i = 1; i <= cells.dim(); ++i) {
            if (!directions.contains(i)) continue;
            if ((c[i - 1] + 1) * h > threshold[i - 1] + 1e-9 * h) return false;
        }
        return true;
    }
};

// A functional of the noise cells of one Monte Carlo sample, re-evaluable on
// modified cells.
using NoiseFunctional = std::function<double(std::span<const double>, int)>;

// E[Z | F^eta_x] per sample. K = 0 selects the exact mode (masked-out cells
// zeroed; valid when the functional has no diagonal quadratic terms in the
// future cells, e.g. linear functionals). K > 0 averages K resamples of the
// future cells, unbiased for any noise-measurable functional.
inline std::vector<double> conditional_expectation(const NoiseFunctional& Z,
                                                   const FiltrationMask& mask,
                                                   const NoiseSample& noise, int K = 0) {
    const int M = noise.samples();
    const GridField& cells = noise.cells;
    std::vector<double> out(M, 0.0);
    std::vector<double> buf(cells.points_per_sample());
    std::vector<char> past(cells.points_per_sample());
    MultiIndex ext{};
    for (int i = 0; i < cells.dim(); ++i) ext[i] = cells.cells();
    {
        size_t f = 0;
        for_each_multi(cells.dim(), ext, [&](const MultiIndex& c) {
            past[f++] = mask.cell_in_past(cells, c) ? 1 : 0;
        });
    }
    double sd = std::sqrt(cells.cell_volume());

    for (int m = 0; m < M; ++m) {
        auto src = cells.sample(m);
        if (K <= 0) {
            for (size_t c = 0; c < buf.size(); ++c) buf[c] = past[c] ? src[c] : 0.0;
            out[m] = Z(buf, m);
        } else {
            double acc = 0.0;
            for (int k = 0; k < K; ++k) {
                uint64_t stream = streams::kResampleBase | (uint64_t(m) << 20) | uint64_t(k);
                for (size_t c = 0; c < buf.size(); ++c)
                    buf[c] = past[c] ? src[c] : sd * normal_at(noise.seed, stream, c);
                acc += Z(buf, m);
            }
            out[m] = acc / K;
        }
    }
    return out;
}

}  // namespace recon
