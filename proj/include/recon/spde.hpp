#pragma once

// Mixed hyperbolic SPDE on [0,T]^d by Picard iteration on the grid:
//   u(x) = I(v)(x) + int_0^x R(sigma(u).xi)(dy) + int_0^x R((f u).dZ)(dy).
// Default solver is the Haar/left-point fast path (both integrals are
// cumulative sums of cell terms frozen at the lower-left corner); the
// wavelet-reconstruction route is cross-checked against it on interior boxes.

#include "recon/calculus.hpp"
#include "recon/holder.hpp"

#include <cmath>

namespace recon {

// I(v)(x) = sum over proper subsets theta of [d] of (-1)^{1+#theta^c} v(pi^theta_x 0).
inline double boundary_term(const std::function<double(const Point&)>& v, const Point& x) {
    const int d = x.dim();
    double acc = 0;
    Point zero(d, 0.0);
    for (const IndexSet& theta : all_subsets(d)) {
        if (theta == IndexSet::full(d)) continue;
        double sign = ((1 + theta.complement().count()) % 2 == 0) ? 1.0 : -1.0;
        acc += sign * v(project(theta, x, zero));
    }
    return acc;
}

struct SpdeProblem {
    int d = 2;
    double T = 1.0;
    int N = 256;

    std::function<double(double)> sigma;  // diffusion nonlinearity (may be null = 0)
    double sigma_lip = 1.0;

    bool has_f = false;
    ClassifiedField f;  // Young coefficient field (samples 1 or M)

    bool has_Z = false;
    GridField Z;  // deterministic driver, corner values, M = 1
    double beta = 0.75;

    std::function<double(const Point&)> boundary_v;  // datum on the 0-boundary

    Point alpha{0.45, 0.45};
    Point delta{0.25, 0.25};
    int m = 2;
    bool enforce_hypotheses = true;

    void validate() const {
        detail::require(d == 2, "SpdeProblem: solver is exercised at d = 2");
        if (!enforce_hypotheses) return;
        for (int i = 0; i < d; ++i) {
            detail::require(beta > 0.5 && beta < 1.0, "SpdeProblem: beta in (1/2,1)");
            detail::require(std::fabs(delta[i] - (beta - 0.5)) < 1e-9,
                            "SpdeProblem: delta = beta - 1/2");
            detail::require(delta[i] <= alpha[i] && alpha[i] < 0.5,
                            "SpdeProblem: delta <= alpha < 1/2");
            detail::require(alpha[i] + beta + delta[i] > 1.0,
                            "SpdeProblem: alpha + beta + delta > 1");
        }
    }
};

struct SpdeSolution {
    GridField u;
    std::vector<double> iteration_diffs;  // sup-over-grid L2 differences
    std::vector<double> ratios;           // successive contraction ratios
    bool converged = false;
    int patches = 1;
};

namespace spde_detail {

inline GridField boundary_field(const SpdeProblem& p) {
    GridField out(p.d, p.N, p.T, 1, FieldKind::corner_values);
    MultiIndex ext{};
    for (int i = 0; i < p.d; ++i) ext[i] = p.N + 1;
    auto s = out.sample(0);
    size_t idx = 0;
    for_each_multi(p.d, ext, [&](const MultiIndex& c) {
        s[idx++] = p.boundary_v ? boundary_term(p.boundary_v, out.corner_point(c)) : 0.0;
    });
    return out;
}

// One sample's integrand cells: sigma(u_ll) dW + (f u)_ll dZ (left-point rule).
inline void integrand_cells(const SpdeProblem& p, std::span<const double> u_corners,
                            std::span<const double> noise_cells, int sample,
                            std::span<double> out) {
    const int N = p.N;
    const double* f_corners = nullptr;
    const double* z_corners = nullptr;
    if (p.has_f)
        f_corners = p.f.field.sample(p.f.field.samples() == 1 ? 0 : sample).data();
    if (p.has_Z) z_corners = p.Z.sample(0).data();
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            size_t cell = size_t(i) * N + j;
            size_t ll = size_t(i) * (N + 1) + j;
            double ull = u_corners[ll];
            double g = 0;
            if (p.sigma) g += p.sigma(ull) * noise_cells[cell];
            if (p.has_f && p.has_Z) {
                double boxz = z_corners[ll + size_t(N) + 2] - z_corners[ll + size_t(N) + 1] -
                              z_corners[ll + 1] + z_corners[ll];
                g += f_corners[ll] * ull * boxz;
            }
            out[cell] = g;
        }
    }
}

}  // namespace spde_detail

// One Picard step of the solution map on the whole grid (Haar fast path).
inline GridField picard_step(const GridField& u, const SpdeProblem& p, const NoiseSample& noise,
                             const GridField& Iv) {
    const int N = p.N, M = u.samples();
    GridField out(p.d, N, p.T, M, FieldKind::corner_values);
    std::vector<double> g(size_t(N) * N), corners((size_t(N) + 1) * (N + 1));
    for (int s = 0; s < M; ++s) {
        spde_detail::integrand_cells(p, u.sample(s), noise.cells.sample(s), s, g);
        cumulative_corners_sample(g, p.d, N, corners);
        auto dst = out.sample(s);
        auto iv = Iv.sample(0);
        for (size_t q = 0; q < dst.size(); ++q) dst[q] = iv[q] + corners[q];
    }
    return out;
}

inline double sup_l2_diff(const GridField& a, const GridField& b, int m = 2) {
    const int M = a.samples();
    std::vector<double> vals(static_cast<size_t>(M));
    double worst = 0;
    size_t pts = a.points_per_sample();
    int stride = std::max<size_t>(1, pts / 4096);
    for (size_t q = 0; q < pts; q += size_t(stride)) {
        for (int s = 0; s < M; ++s) vals[size_t(s)] = a.sample(s)[q] - b.sample(s)[q];
        worst = std::max(worst, lm_norm(vals, m));
    }
    return worst;
}

inline SpdeSolution solve(const SpdeProblem& p, const NoiseSample& noise, double tol = 1e-10,
                          int max_iter = 64, bool patching = false) {
    p.validate();
    detail::require(noise.resolution() == p.N && noise.dim() == p.d,
                    "solve: noise grid mismatch");
    const int M = noise.samples();
    GridField Iv = spde_detail::boundary_field(p);
    SpdeSolution sol{GridField(p.d, p.N, p.T, M, FieldKind::corner_values), {}, {}, false, 1};

    // start from the boundary term
    for (int s = 0; s < M; ++s) {
        auto dst = sol.u.sample(s);
        auto iv = Iv.sample(0);
        std::copy(iv.begin(), iv.end(), dst.begin());
    }

    if (!patching) {
        for (int it = 0; it < max_iter; ++it) {
            GridField next = picard_step(sol.u, p, noise, Iv);
            double diff = sup_l2_diff(next, sol.u, p.m);
            if (!sol.iteration_diffs.empty() && sol.iteration_diffs.back() > 0)
                sol.ratios.push_back(diff / sol.iteration_diffs.back());
            sol.iteration_diffs.push_back(diff);
            sol.u = std::move(next);
            if (diff < tol) {
                sol.converged = true;
                break;
            }
        }
        return sol;
    }

    // patched solve: lexicographic sweep over P x P sub-boxes, boundary data
    // handed forward through the already-final cells
    int P = 2;
    for (;;) {
        detail::require(p.N % P == 0, "solve: patch count must divide N");
        int pn = p.N / P;
        GridField u = sol.u;  // I(v) start
        std::vector<double> g(size_t(p.N) * p.N), corners((size_t(p.N) + 1) * (p.N + 1));
        double first_patch_ratio = 0;
        bool redo = false;
        for (int pi = 0; pi < P && !redo; ++pi)
            for (int pj = 0; pj < P && !redo; ++pj) {
                double prev_diff = -1;
                for (int it = 0; it < 200; ++it) {
                    double diff = 0;
                    std::vector<double> vals(static_cast<size_t>(M));
                    GridField next = u;
                    for (int s = 0; s < M; ++s) {
                        spde_detail::integrand_cells(p, u.sample(s), noise.cells.sample(s), s, g);
                        cumulative_corners_sample(g, p.d, p.N, corners);
                        auto dst = next.sample(s);
                        auto iv = Iv.sample(0);
                        for (int i = pi * pn; i <= (pi + 1) * pn; ++i)
                            for (int j = pj * pn; j <= (pj + 1) * pn; ++j) {
                                size_t q = size_t(i) * (p.N + 1) + size_t(j);
                                dst[q] = iv[q] + corners[q];
                            }
                    }
                    // measure only the in-patch movement
                    double worst = 0;
                    for (int i = pi * pn; i <= (pi + 1) * pn; i += std::max(1, pn / 8))
                        for (int j = pj * pn; j <= (pj + 1) * pn; j += std::max(1, pn / 8)) {
                            size_t q = size_t(i) * (p.N + 1) + size_t(j);
                            for (int s = 0; s < M; ++s)
                                vals[size_t(s)] = next.sample(s)[q] - u.sample(s)[q];
                            worst = std::max(worst, lm_norm(vals, p.m));
                        }
                    diff = worst;
                    u = std::move(next);
                    if (pi == 0 && pj == 0 && prev_diff > 0 && first_patch_ratio == 0)
                        first_patch_ratio = diff / prev_diff;
                    prev_diff = diff;
                    if (diff < tol) break;
                }
                if (pi == 0 && pj == 0 && first_patch_ratio >= 0.5 && P < 16) {
                    P *= 2;
                    redo = true;
                }
            }
        if (redo) continue;
        sol.u = std::move(u);
        sol.converged = true;
        sol.patches = P;
        sol.ratios.push_back(first_patch_ratio);
        return sol;
    }
}

// ----------------------------------------------------------------------------
// Diagnostics
// ----------------------------------------------------------------------------

// Couple a coarse noise to a fine one: coarse cell = sum of the fine cells it
// contains (consistent Brownian refinement).
inline NoiseSample aggregate_noise(const NoiseSample& fine, int coarse_N) {
    const int Nf = fine.resolution(), d = fine.dim(), M = fine.samples();
    detail::require(Nf % coarse_N == 0, "aggregate_noise: levels must nest");
    int k = Nf / coarse_N;
    NoiseSample out{GridField(d, coarse_N, fine.domain_size(), M, FieldKind::cell_density),
                    fine.seed};
    detail::require(d == 2, "aggregate_noise: d = 2");
    for (int s = 0; s < M; ++s) {
        auto src = fine.cells.sample(s);
        auto dst = out.cells.sample(s);
        for (int i = 0; i < coarse_N; ++i)
            for (int j = 0; j < coarse_N; ++j) {
                double acc = 0;
                for (int a = 0; a < k; ++a)
                    for (int b = 0; b < k; ++b)
                        acc += src[size_t(i * k + a) * Nf + size_t(j * k + b)];
                dst[size_t(i) * coarse_N + j] = acc;
            }
    }
    return out;
}

// Corner restriction of a corner field to a coarser nested grid.
inline GridField restrict_corners(const GridField& fine, int coarse_N) {
    detail::require(fine.kind() == FieldKind::corner_values && fine.cells() % coarse_N == 0,
                    "restrict_corners: levels must nest");
    const int d = fine.dim(), k = fine.cells() / coarse_N;
    GridField out(d, coarse_N, fine.domain_size(), fine.samples(), FieldKind::corner_values);
    MultiIndex ext{};
    for (int i = 0; i < d; ++i) ext[i] = coarse_N + 1;
    for (int s = 0; s < fine.samples(); ++s) {
        size_t idx = 0;
        auto dst = out.sample(s);
        for_each_multi(d, ext, [&](const MultiIndex& c) {
            MultiIndex cf = c;
            for (int i = 0; i < d; ++i) cf[i] *= k;
            dst[idx++] = fine.at(s, cf);
        });
    }
    return out;
}

struct MeshStudy {
    std::vector<int> levels;      // N values
    std::vector<double> diffs;    // RMS difference u_N vs u_2N on common corners
    RateFit fit;                  // log2 diff vs log2 N
};

// Solves the same problem at each level with coupled noise (coarse cells are
// aggregated fine cells). `configure` rebuilds the per-level fields (driver
// restriction, coefficient field) for the given N.
inline MeshStudy mesh_convergence_study(const SpdeProblem& p, const std::vector<int>& Ns, int M,
                                        uint64_t seed,
                                        const std::function<void(SpdeProblem&, int)>& configure,
                                        double tol = 1e-10) {
    detail::require(Ns.size() >= 2, "mesh_convergence_study: need at least two levels");
    int Nf = Ns.back();
    NoiseSample fine = sample_white_noise(Nf, p.T, p.d, M, seed);
    std::vector<GridField> sols;
    for (int N : Ns) {
        NoiseSample ns = (N == Nf) ? std::move(fine) : aggregate_noise(fine, N);
        SpdeProblem pl = p;
        pl.N = N;
        if (configure) configure(pl, N);
        auto sol = solve(pl, ns, tol, 256, false);
        sols.push_back(std::move(sol.u));
        if (N == Nf) fine = std::move(ns);
    }
    MeshStudy st;
    std::vector<double> xs, ys;
    for (size_t l = 0; l + 1 < Ns.size(); ++l) {
        const GridField& a = sols[l];
        const GridField& b = sols[l + 1];
        int k = Ns[l + 1] / Ns[l];
        double acc = 0;
        size_t cnt = 0;
        for (int i = 0; i <= Ns[l]; ++i)
            for (int j = 0; j <= Ns[l]; ++j) {
                MultiIndex ca{}, cb{};
                ca[0] = i;
                ca[1] = j;
                cb[0] = i * k;
                cb[1] = j * k;
                for (int s = 0; s < a.samples(); ++s) {
                    double dv = a.at(s, ca) - b.at(s, cb);
                    acc += dv * dv;
                    ++cnt;
                }
            }
        double rms = std::sqrt(acc / double(cnt));
        st.levels.push_back(Ns[l]);
        st.diffs.push_back(rms);
        if (rms > 0) {
            xs.push_back(std::log2(double(Ns[l])));
            ys.push_back(std::log2(rms));
        }
    }
    st.fit = fit_line(xs, ys);
    return st;
}

inline SeminormTable regularity_report(const SpdeSolution& sol, const HolderParams& params,
                                       const CondContext* ctx = nullptr) {
    return stochastic_seminorms(sol.u, params, ctx);
}

// Adaptedness: u at a probe corner is a function of the cells below it. Both
// recursions run the same fixed iteration count, so the comparison at the
// probe must be bit-identical.
inline double adaptedness_residual(const SpdeProblem& p, const NoiseSample& noise,
                                   const MultiIndex& probe, int iterations = 2 * 32 + 8) {
    NoiseSample masked{noise.cells, noise.seed};
    const int N = p.N;
    double h = p.T / N;
    Point thr(p.d);
    for (int i = 0; i < p.d; ++i) thr[i] = probe[i] * h;
    for (int s = 0; s < noise.samples(); ++s) {
        auto cells = masked.cells.sample(s);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                if (!((i + 1) * h <= thr[0] + 1e-12 * h && (j + 1) * h <= thr[1] + 1e-12 * h))
                    cells[size_t(i) * N + j] = 0.0;
    }
    GridField Iv = spde_detail::boundary_field(p);
    auto iterate = [&](const NoiseSample& ns) {
        GridField u(p.d, p.N, p.T, ns.samples(), FieldKind::corner_values);
        for (int s = 0; s < ns.samples(); ++s) {
            auto dst = u.sample(s);
            auto iv = Iv.sample(0);
            std::copy(iv.begin(), iv.end(), dst.begin());
        }
        for (int it = 0; it < iterations; ++it) u = picard_step(u, p, ns, Iv);
        return u;
    };
    GridField ua = iterate(noise);
    GridField ub = iterate(masked);
    double worst = 0;
    for (int s = 0; s < noise.samples(); ++s)
        worst = std::max(worst, std::fabs(ua.at(s, probe) - ub.at(s, probe)));
    return worst;
}

// Cross-check of the fast path against the wavelet-reconstruction route:
// box increments of the integral part vs the reconstructed germ paired with
// the box indicator at the grid level.
inline double spde_wavelet_crosscheck(const SpdeProblem& p, const NoiseSample& noise,
                                      const GridField& u, const WaveletBasisD& basis,
                                      int npairs = 5, uint64_t seed = 31) {
    const int N = p.N, M = u.samples();
    GridField Iv = spde_detail::boundary_field(p);

    Germ F;
    F.dim = p.d;
    F.samples = M;
    F.T = p.T;
    F.noise = &noise;
    auto dz = p.has_Z ? std::make_shared<RandomDistribution>(
                            mixed_derivative_distribution(p.Z, p.beta))
                      : nullptr;
    auto uf = std::make_shared<GridField>(u);
    const SpdeProblem* pp = &p;
    const GridField* cells = &noise.cells;
    F.evaluate = [uf, cells, dz, pp](const Point& x, const TestFunction& psi) {
        const int d = pp->d;
        CellWeights cw = cell_weights(psi, cells->cells(), cells->domain_size());
        std::vector<double> out(size_t(cells->samples()), 0.0);
        std::vector<double> zpair;
        if (dz) zpair = dz->pair(psi);
        for (int s = 0; s < cells->samples(); ++s) {
            double ux = calculus_detail::field_at(*uf, s, x);
            double acc = 0;
            if (pp->sigma)
                acc += pp->sigma(ux) *
                       pair_cells_with_weights(cells->sample(s), cw, cells->cells(), d);
            if (dz && pp->has_f)
                acc += calculus_detail::field_at(pp->f.field, s, x) * ux * zpair[0];
            out[size_t(s)] = acc;
        }
        return out;
    };

    int grid_level = int(std::lround(std::log2(N)));
    double worst = 0;
    for (int r = 0; r < npairs; ++r) {
        MultiIndex a{}, b{};
        for (int i = 0; i < p.d; ++i) {
            int lo = 1 + int(uniform_at(seed, uint64_t(i), uint64_t(r)) * (N / 2 - 2));
            int hi = lo + 1 + int(uniform_at(seed, 10 + uint64_t(i), uint64_t(r)) * (N / 2 - 2));
            a[i] = lo;
            b[i] = std::min(hi, N - 1);
        }
        Point lo = u.corner_point(a), hi = u.corner_point(b);
        auto rec = partial_sum(F, IndexSet::full(p.d), lo, indicator(lo, hi),
                               iso_level(p.d, grid_level), basis);
        for (int s = 0; s < M; ++s) {
            double fast = u.corner_increment(s, IndexSet::full(p.d), a, b) -
                          Iv.corner_increment(0, IndexSet::full(p.d), a, b);
            worst = std::max(worst, std::fabs(rec[size_t(s)] - fast));
        }
    }
    return worst;
}

}  // namespace recon
