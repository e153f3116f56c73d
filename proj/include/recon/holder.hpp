#pragma once

// Empirical estimators for the Holder-type norms: deterministic C^alpha,
// stochastic C^{alpha,delta}L_m, negative-regularity norms of random
// distributions, germ coherence norms, and the extended BDG inequality
// check. All sups run over finite dyadic samplings, so the estimates are
// lower bounds of the true sups; the acceptance criteria are rate fits and
// boundedness trends, not exact norms.

#include "recon/germ.hpp"
#include "recon/increments.hpp"

#include <cmath>
#include <numeric>

namespace recon {

struct HolderParams {
    Point alpha;   // per-axis
    Point delta;   // per-axis, >= 0 (kDeltaInf = martingale sentinel)
    int m = 2;
    double T = 1.0;
};

inline double lm_norm(std::span<const double> xs, int m) {
    double acc = 0;
    if (m == 2) {
        for (double x : xs) acc += x * x;
        return std::sqrt(acc / double(xs.size()));
    }
    for (double x : xs) acc += std::pow(std::fabs(x), m);
    return std::pow(acc / double(xs.size()), 1.0 / m);
}

// Batched standard error of the L_m norm estimate (4 batches).
inline double lm_norm_se(std::span<const double> xs, int m) {
    const int B = 4;
    size_t bs = xs.size() / B;
    if (bs < 2) return 0.0;
    std::vector<double> vals;
    for (int b = 0; b < B; ++b) vals.push_back(lm_norm(xs.subspan(size_t(b) * bs, bs), m));
    double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / B;
    double s2 = 0;
    for (double v : vals) s2 += (v - mean) * (v - mean);
    return std::sqrt(s2 / (B - 1) / B);
}

struct SeminormEntry {
    IndexSet theta, eta;
    double value = 0.0;   // sup over sampled pairs of the normalized increment
    double raw_sup = 0.0; // same without the denominator, at the finest separation
    bool conditioning_supported = true;
};

// One row per (theta, eta, separation): the CSV-facing granularity.
struct SeminormRow {
    IndexSet theta, eta;
    double separation = 0.0;
    double value = 0.0;  // normalized sup at this separation
    double se = 0.0;     // batched SE of the worst L_m estimate
};

struct SeminormTable {
    std::vector<SeminormEntry> entries;
    std::vector<SeminormRow> rows;
    std::vector<RateFit> axis_fits;  // fitted increment exponent per axis

    const SeminormEntry& find(const IndexSet& theta, const IndexSet& eta) const {
        for (const auto& e : entries)
            if (e.theta == theta && e.eta == eta) return e;
        throw std::invalid_argument("SeminormTable: no such entry");
    }
};

namespace holder_detail {

// Sampled dyadic separations: grid steps N/2^l for l = l_min..l_max.
inline std::vector<int> dyadic_steps(int N, int l_min = 2, int l_max = 7) {
    std::vector<int> out;
    for (int l = l_min; l <= l_max; ++l) {
        int s = N >> l;
        if (s >= 1 && (out.empty() || out.back() != s)) out.push_back(s);
    }
    return out;
}

// Base corners on a stride lattice with room for +sep on the theta axes.
inline std::vector<MultiIndex> base_corners(int N, int dim, int sep, const IndexSet& theta,
                                            int max_points = 64) {
    int per_axis = std::max(1, int(std::floor(std::pow(double(max_points), 1.0 / dim))));
    std::vector<MultiIndex> out;
    MultiIndex ext{};
    for (int i = 0; i < dim; ++i) ext[i] = per_axis;
    for_each_multi(dim, ext, [&](const MultiIndex& t) {
        MultiIndex c{};
        bool ok = true;
        for (int i = 0; i < dim; ++i) {
            int hi = theta.contains(i + 1) ? N - sep : N;
            if (hi < 0) {
                ok = false;
                break;
            }
            c[i] = (per_axis == 1) ? hi / 2 : (t[i] * hi) / (per_axis - 1 > 0 ? per_axis - 1 : 1);
            c[i] = std::min(c[i], hi);
        }
        if (ok) out.push_back(c);
    });
    return out;
}

}  // namespace holder_detail

// ----------------------------------------------------------------------------
// Deterministic C^alpha seminorms (corner field, M = 1)
// ----------------------------------------------------------------------------

inline SeminormTable deterministic_norm(const GridField& f, const Point& alpha) {
    detail::require(f.kind() == FieldKind::corner_values && f.samples() == 1,
                    "deterministic_norm: single-sample corner field expected");
    const int d = f.dim(), N = f.cells();
    const double h = f.h();
    SeminormTable table;
    for (const IndexSet& theta : all_subsets(d)) {
        SeminormEntry e{theta, IndexSet::empty(d), 0.0, 0.0, true};
        if (theta.empty_set()) {
            for (size_t i = 0; i < f.sample(0).size(); ++i)
                e.value = std::max(e.value, std::fabs(f.sample(0)[i]));
            e.raw_sup = e.value;
        } else {
            for (int sep : holder_detail::dyadic_steps(N)) {
                double denom = 1.0;
                for (int i = 1; i <= d; ++i)
                    if (theta.contains(i)) denom *= std::pow(sep * h, alpha[i - 1]);
                for (const MultiIndex& c : holder_detail::base_corners(N, d, sep, theta)) {
                    MultiIndex y = c;
                    for (int i = 1; i <= d; ++i)
                        if (theta.contains(i)) y[i - 1] += sep;
                    double inc = std::fabs(f.corner_increment(0, theta, c, y));
                    e.value = std::max(e.value, inc / denom);
                    if (sep == holder_detail::dyadic_steps(N).back())
                        e.raw_sup = std::max(e.raw_sup, inc);
                }
            }
        }
        table.entries.push_back(e);
    }
    // per-axis exponent fit: vary the separation on one axis, box on [d]
    for (int axis = 1; axis <= d; ++axis) {
        std::vector<double> xs, ys;
        for (int sep : holder_detail::dyadic_steps(N)) {
            double sup = 0;
            IndexSet full = IndexSet::full(d);
            for (const MultiIndex& c : holder_detail::base_corners(N, d, sep, full)) {
                MultiIndex y = c;
                for (int i = 1; i <= d; ++i) y[i - 1] += (i == axis) ? sep : N >> 3;
                bool ok = true;
                for (int i = 0; i < d; ++i) ok = ok && y[i] <= N;
                if (!ok) continue;
                sup = std::max(sup, std::fabs(f.corner_increment(0, full, c, y)));
            }
            if (sup > 0) {
                xs.push_back(std::log2(sep * h));
                ys.push_back(std::log2(sup));
            }
        }
        table.axis_fits.push_back(fit_line(xs, ys));
    }
    return table;
}

// ----------------------------------------------------------------------------
// Stochastic seminorms of random fields
// ----------------------------------------------------------------------------

// Conditioning context for a corner field that is a per-sample functional of
// the noise cells. `rebuild` recomputes the corner values of one sample from
// (possibly masked or resampled) cells; linear fields support the exact mask
// route, anything else falls back to K resamples.
struct CondContext {
    const NoiseSample* noise = nullptr;
    std::function<void(std::span<const double> cells, int sample, std::span<double> corners)>
        rebuild;
    bool linear = false;
    int K = 64;
};

inline SeminormTable stochastic_seminorms(const GridField& Y, const HolderParams& p,
                                          const CondContext* ctx = nullptr) {
    detail::require(Y.kind() == FieldKind::corner_values, "stochastic_seminorms: corner field");
    const int d = Y.dim(), N = Y.cells(), M = Y.samples();
    const double h = Y.h();
    SeminormTable table;
    std::vector<double> vals(static_cast<size_t>(M));

    auto steps = holder_detail::dyadic_steps(N);
    for (const IndexSet& theta : all_subsets(d)) {
        for (const IndexSet& eta : subsets_of(theta)) {
            if (theta.empty_set() && !eta.empty_set()) continue;
            SeminormEntry e{theta, eta, 0.0, 0.0, true};
            if (theta.empty_set()) {
                // sup_x || Y_x ||_m
                MultiIndex ext{};
                for (int i = 0; i < d; ++i) ext[i] = N + 1;
                int stride = std::max(1, N / 8);
                for_each_multi(d, ext, [&](const MultiIndex& c) {
                    for (int i = 0; i < d; ++i)
                        if (c[i] % stride) return;
                    for (int s = 0; s < M; ++s) vals[size_t(s)] = Y.at(s, c);
                    e.value = std::max(e.value, lm_norm(vals, p.m));
                });
                e.raw_sup = e.value;
                table.entries.push_back(e);
                continue;
            }
            if (!eta.empty_set() && (ctx == nullptr || !ctx->rebuild)) {
                e.conditioning_supported = false;
                table.entries.push_back(e);
                continue;
            }
            for (int sep : steps) {
                double denom = 1.0;
                for (int i = 1; i <= d; ++i) {
                    if (theta.contains(i)) denom *= std::pow(sep * h, p.alpha[i - 1]);
                    if (eta.contains(i))
                        denom *= std::pow(sep * h, std::min(p.delta[i - 1], 4.0));
                }
                double sep_value = 0.0, sep_se = 0.0;
                for (const MultiIndex& c : holder_detail::base_corners(N, d, sep, theta, 16)) {
                    MultiIndex y = c;
                    for (int i = 1; i <= d; ++i)
                        if (theta.contains(i)) y[i - 1] += sep;
                    if (eta.empty_set()) {
                        for (int s = 0; s < M; ++s)
                            vals[size_t(s)] = Y.corner_increment(s, theta, c, y);
                    } else {
                        // E^eta_x box^theta_{x,y} Y via masked / resampled rebuilds
                        FiltrationMask mask{eta, Y.corner_point(c)};
                        const GridField& cells = ctx->noise->cells;
                        std::vector<double> buf(cells.points_per_sample());
                        std::vector<double> corners(Y.points_per_sample());
                        GridField tmp(d, N, Y.domain_size(), 1, FieldKind::corner_values);
                        MultiIndex cext{};
                        for (int i = 0; i < d; ++i) cext[i] = N;
                        std::vector<char> past(cells.points_per_sample());
                        {
                            size_t fidx = 0;
                            for_each_multi(d, cext, [&](const MultiIndex& cc) {
                                past[fidx++] = mask.cell_in_past(cells, cc) ? 1 : 0;
                            });
                        }
                        double sd = std::sqrt(cells.cell_volume());
                        int K = ctx->linear ? 1 : ctx->K;
                        for (int s = 0; s < M; ++s) {
                            auto src = cells.sample(s);
                            double acc = 0;
                            for (int k = 0; k < K; ++k) {
                                if (ctx->linear) {
                                    for (size_t q = 0; q < buf.size(); ++q)
                                        buf[q] = past[q] ? src[q] : 0.0;
                                } else {
                                    uint64_t stream = streams::kResampleBase |
                                                      (uint64_t(s) << 20) | uint64_t(k);
                                    for (size_t q = 0; q < buf.size(); ++q)
                                        buf[q] = past[q]
                                                     ? src[q]
                                                     : sd * normal_at(ctx->noise->seed, stream, q);
                                }
                                ctx->rebuild(buf, s, tmp.sample(0));
                                acc += tmp.corner_increment(0, theta, c, y);
                            }
                            vals[size_t(s)] = acc / K;
                        }
                    }
                    double nrm = lm_norm(vals, p.m);
                    e.value = std::max(e.value, nrm / denom);
                    if (sep == steps.back()) e.raw_sup = std::max(e.raw_sup, nrm);
                    if (nrm / denom > sep_value) {
                        sep_value = nrm / denom;
                        sep_se = lm_norm_se(vals, p.m) / denom;
                    }
                }
                table.rows.push_back(SeminormRow{theta, eta, sep * h, sep_value, sep_se});
            }
            table.entries.push_back(e);
        }
    }
    // per-axis exponent fits of ||box^{[d]} Y||_m
    for (int axis = 1; axis <= d; ++axis) {
        std::vector<double> xs, ys;
        IndexSet full = IndexSet::full(d);
        for (int sep : steps) {
            double sup = 0;
            for (const MultiIndex& c : holder_detail::base_corners(N, d, sep, full, 16)) {
                MultiIndex y = c;
                bool ok = true;
                for (int i = 1; i <= d; ++i) {
                    y[i - 1] += (i == axis) ? sep : std::max(1, N >> 3);
                    ok = ok && y[i - 1] <= N;
                }
                if (!ok) continue;
                for (int s = 0; s < M; ++s) vals[size_t(s)] = Y.corner_increment(s, full, c, y);
                sup = std::max(sup, lm_norm(vals, p.m));
            }
            if (sup > 0) {
                xs.push_back(std::log2(sep * h));
                ys.push_back(std::log2(sup));
            }
        }
        table.axis_fits.push_back(fit_line(xs, ys));
    }
    return table;
}

// ----------------------------------------------------------------------------
// Negative-regularity norm of a random distribution
// ----------------------------------------------------------------------------

struct DistributionNormReport {
    double norm = 0.0;                  // sup over (x, lambda, eta) of the ratio
    RateFit lambda_fit;                 // log2 ||f(psi^lambda_x)||_m vs log2 lambda
    double per_axis_slope = 0.0;        // lambda_fit.slope / d
    double conditional_sup_ratio = 0.0; // sup eta!=0 entry / sup eta=0 entry
    bool conditioning_supported = true;
    int skipped_points = 0;
};

inline DistributionNormReport distribution_norm(const RandomDistribution& f,
                                                const HolderParams& p, int lambda_levels = 4,
                                                int translations_per_axis = 3) {
    const int d = f.dim;
    TestFunction psi = bump_quarter(d);
    DistributionNormReport rep;
    std::vector<double> xs, ys;
    double cond_sup = 0.0, plain_sup_norm = 0.0;

    // centers are pinned across lambda so the slope fit is clean
    double c_lo = std::ldexp(1.0, -1) * 0.5, c_hi = f.T - c_lo;
    for (int l = 1; l <= lambda_levels; ++l) {
        double lambda = std::ldexp(1.0, -l);
        double sup_norm = 0;
        double denom = std::pow(lambda, [&] {
            double s = 0;
            for (int i = 0; i < d; ++i) s += p.alpha[i];
            return s;
        }());
        for (int t = 0; t < translations_per_axis; ++t) {
            Point x(d);
            for (int i = 0; i < d; ++i) {
                double center = translations_per_axis == 1
                                    ? 0.5 * (c_lo + c_hi)
                                    : c_lo + (c_hi - c_lo) * double(t) /
                                                 double(translations_per_axis - 1);
                x[i] = center - 0.5 * lambda;
            }
            Box supp{x, x};
            for (int i = 0; i < d; ++i) supp.hi[i] = x[i] + lambda;
            if (!supp.inside(unit_box(d, f.T))) {
                ++rep.skipped_points;
                continue;
            }
            TestFunction pl = rescale(psi, x, lambda);
            auto vals = f.pair(pl);
            double nrm = lm_norm(vals, p.m);
            sup_norm = std::max(sup_norm, nrm);
            rep.norm = std::max(rep.norm, nrm / denom);

            // conditional entries E^eta_x f(psi^lambda_x): the support sits in
            // the future of x in every direction
            if (f.martingale) {
                cond_sup = std::max(cond_sup, 0.0);
            } else if (f.noise != nullptr) {
                for (int axis = 1; axis <= d; ++axis) {
                    FiltrationMask mask{IndexSet::single(d, axis), x};
                    NoiseFunctional Z = [&](std::span<const double> cells, int s) {
                        return f.pair_cells(pl, cells) + 0.0 * s;
                    };
                    auto ce = conditional_expectation(Z, mask, *f.noise, 0);
                    cond_sup = std::max(cond_sup, lm_norm(ce, p.m));
                }
            } else {
                rep.conditioning_supported = false;
            }
            plain_sup_norm = std::max(plain_sup_norm, nrm);
        }
        if (sup_norm > 0) {
            xs.push_back(-double(l));
            ys.push_back(std::log2(sup_norm));
        }
    }
    rep.lambda_fit = fit_line(xs, ys);
    rep.per_axis_slope = rep.lambda_fit.slope / d;
    rep.conditional_sup_ratio = plain_sup_norm > 0 ? cond_sup / plain_sup_norm : 0.0;
    return rep;
}

// ----------------------------------------------------------------------------
// Coherence norm of a germ
// ----------------------------------------------------------------------------

struct CoherenceRow {
    IndexSet theta, eta;
    double lambda = 1, sep = 0;
    double norm = 0, ratio = 0;
};

struct CoherenceReport {
    double norm = 0.0;  // sup of ratios over the sampled family
    std::vector<CoherenceRow> rows;
    bool conditioning_supported = true;
};

// Test functions with support [0,1]^theta x [-1,1]^{theta^c} per the
// coherence definition, built from the standard bump.
inline TestFunction coherence_bump(int d, const IndexSet& theta) {
    TestFunction base = bump(d);
    TestFunction out;
    out.smoothness = base.smoothness;
    for (int i = 1; i <= d; ++i) {
        if (theta.contains(i)) {
            Point c(1, 0.5), l(1, 0.5);
            TestFunction one;
            one.axes.push_back(base.axes[size_t(i - 1)]);
            out.axes.push_back(rescale(one, c, l).axes[0]);
        } else {
            out.axes.push_back(base.axes[size_t(i - 1)]);
        }
    }
    return out;
}

inline CoherenceReport coherence_norm(const Germ& F, const GermClass& cls, int m = 2,
                                      int lambda_levels = 3, int sep_levels = 3) {
    const int d = F.dim;
    CoherenceReport rep;
    for (const IndexSet& theta : all_subsets(d)) {
        TestFunction psi = coherence_bump(d, theta);
        for (const IndexSet& eta : subsets_of(theta)) {
            bool cond_exact_zero = !eta.empty_set() && F.martingale;
            if (!eta.empty_set() && !cond_exact_zero &&
                (!F.evaluate_cells || F.noise == nullptr)) {
                rep.conditioning_supported = false;
                continue;
            }
            for (int ll = 1; ll <= lambda_levels; ++ll) {
                double lambda = std::ldexp(1.0, -ll - 1);
                for (int sl = 1; sl <= sep_levels; ++sl) {
                    double sep = std::ldexp(1.0, -sl - 1);
                    // y centered; x offset below y on theta
                    Point y(d, 0.5), x(d, 0.5);
                    for (int i = 1; i <= d; ++i)
                        if (theta.contains(i)) x[i - 1] = y[i - 1] - sep;
                    TestFunction pl = rescale(psi, y, lambda);
                    std::vector<double> vals;
                    if (cond_exact_zero) {
                        vals.assign(size_t(F.samples), 0.0);
                    } else if (eta.empty_set()) {
                        vals = germ_rect_increment(F, theta, x, y, pl);
                    } else {
                        // resample the eta-future of x, K = 64
                        const int K = 64;
                        FiltrationMask mask{eta, x};
                        const GridField& cells = F.noise->cells;
                        std::vector<double> buf(cells.points_per_sample());
                        std::vector<char> past(cells.points_per_sample());
                        MultiIndex cext{};
                        for (int i = 0; i < d; ++i) cext[i] = cells.cells();
                        size_t fidx = 0;
                        for_each_multi(d, cext, [&](const MultiIndex& cc) {
                            past[fidx++] = mask.cell_in_past(cells, cc) ? 1 : 0;
                        });
                        double sd = std::sqrt(cells.cell_volume());
                        vals.assign(size_t(F.samples), 0.0);
                        auto subsets = subsets_of(theta);
                        for (int s = 0; s < F.samples; ++s) {
                            auto src = cells.sample(s);
                            double acc = 0;
                            for (int k = 0; k < K; ++k) {
                                uint64_t stream = streams::kResampleBase | (uint64_t(s) << 20) |
                                                  uint64_t(k);
                                for (size_t q = 0; q < buf.size(); ++q)
                                    buf[q] = past[q] ? src[q]
                                                     : sd * normal_at(F.noise->seed, stream, q);
                                double inc = 0;
                                for (const IndexSet& sub : subsets) {
                                    double sign =
                                        ((theta.count() - sub.count()) % 2 == 0) ? 1.0 : -1.0;
                                    inc += sign *
                                           F.evaluate_cells(project(sub, y, x), pl, buf, s);
                                }
                                acc += inc;
                            }
                            vals[size_t(s)] = acc / K;
                        }
                    }
                    double nrm = lm_norm(vals, m);
                    double denom = 1.0;
                    for (int i = 0; i < d; ++i) {
                        denom *= std::pow(lambda, cls.alpha[i]);
                        if (theta.contains(i + 1))
                            denom *= std::pow(sep + lambda, cls.gamma[i] - cls.alpha[i]);
                        if (eta.contains(i + 1))
                            denom *= std::pow(sep + lambda, std::min(cls.delta[i], 4.0));
                    }
                    double ratio = nrm / denom;
                    rep.norm = std::max(rep.norm, ratio);
                    rep.rows.push_back(CoherenceRow{theta, eta, lambda, sep, nrm, ratio});
                }
            }
        }
    }
    return rep;
}

// ----------------------------------------------------------------------------
// Extended BDG inequality check
// ----------------------------------------------------------------------------

// Z_k = mean_coef_k + noise_coef_k G_k on a d-dim index box, G_k iid standard
// normals attached to cell k (so Z_k is F_{k+1}-measurable and
// E^theta_k Z_k = mean_coef_k for theta != {}).
struct BdgInstance {
    int dim = 2;
    MultiIndex extents{};
    std::array<std::vector<double>, kMaxDim> a, b;  // per-axis profiles, 0 < b <= a
    double c = 1.0;
    uint64_t seed = 1;
    int samples = 2000;

    double mean_coef(const MultiIndex& k) const {
        double v = 1.0;
        for (int i = 0; i < dim; ++i) v *= b[size_t(i)][size_t(k[i])];
        return v;
    }
    double noise_coef(const MultiIndex& k) const {
        double v = 1.0;
        for (int i = 0; i < dim; ++i) v *= a[size_t(i)][size_t(k[i])];
        return v;
    }
};

struct BdgReport {
    double fitted_C = 0.0;          // max over (theta, eta) of LHS / RHS
    double worst_lhs = 0, worst_rhs = 0;
    IndexSet worst_theta, worst_eta;
    double hypothesis_c = 1.0;      // the c actually used in the RHS
};

// Smallest c with || E^theta_k Z_k ||_2 <= c b_{k,theta} a_{k,theta^c} over
// all k and theta, in closed form for the mean + noise*G structure.
inline double fit_bdg_constant(const BdgInstance& inst) {
    const int d = inst.dim;
    double c = 0;
    MultiIndex ext = inst.extents;
    for_each_multi(d, ext, [&](const MultiIndex& k) {
        double mean = inst.mean_coef(k), noise = inst.noise_coef(k);
        for (const IndexSet& theta : all_subsets(d)) {
            double bound = 1.0;
            for (int i = 1; i <= d; ++i)
                bound *= theta.contains(i) ? inst.b[size_t(i - 1)][size_t(k[i - 1])]
                                           : inst.a[size_t(i - 1)][size_t(k[i - 1])];
            double norm = theta.empty_set() ? std::sqrt(mean * mean + noise * noise)
                                            : std::fabs(mean);
            if (bound > 0) c = std::max(c, norm / bound);
        }
    });
    return c;
}

inline BdgReport bdg_check(const BdgInstance& inst_in, int m = 2) {
    BdgInstance inst = inst_in;
    if (inst.c <= 0) inst.c = fit_bdg_constant(inst);  // constants fitted, not supplied
    const int d = inst.dim;
    BdgReport rep{0.0, 0, 0, IndexSet::empty(d), IndexSet::empty(d), inst.c};
    size_t ncells = 1;
    for (int i = 0; i < d; ++i) ncells *= size_t(inst.extents[i]);

    std::vector<double> vals(static_cast<size_t>(inst.samples));
    for (const IndexSet& theta : all_subsets(d)) {
        if (theta.empty_set()) continue;
        for (const IndexSet& eta : subsets_of(theta)) {
            // LHS: E^eta at the minimal corner kills the noise part of every
            // cell whose eta-coordinates are not below 0, i.e. all of I_theta.
            double lhs;
            MultiIndex ext{};
            for (int i = 0; i < d; ++i) ext[i] = theta.contains(i + 1) ? inst.extents[i] : 1;
            if (!eta.empty_set()) {
                double acc = 0;
                for_each_multi(d, ext, [&](const MultiIndex& k) { acc += inst.mean_coef(k); });
                lhs = std::fabs(acc);
            } else {
                for (int s = 0; s < inst.samples; ++s) {
                    double acc = 0;
                    size_t idx = 0;
                    for_each_multi(d, ext, [&](const MultiIndex& k) {
                        size_t flat = 0;
                        for (int i = 0; i < d; ++i)
                            flat = flat * size_t(inst.extents[i]) + size_t(k[i]);
                        acc += inst.mean_coef(k) +
                               inst.noise_coef(k) * normal_at(inst.seed, uint64_t(s), flat);
                        ++idx;
                    });
                    vals[size_t(s)] = acc;
                }
                lhs = lm_norm(vals, m);
            }

            // RHS of the lemma: sum over splittings theta\eta = t1 |_| t2
            double rhs = 0;
            IndexSet rest = theta.minus(eta);
            for (const IndexSet& t1 : subsets_of(rest)) {
                IndexSet t2 = rest.minus(t1);
                IndexSet bset = eta.unite(t1);
                double bsum = 1.0;
                for (int i = 1; i <= d; ++i) {
                    if (!bset.contains(i)) continue;
                    double s = 0;
                    for (int k = 0; k < inst.extents[i - 1]; ++k)
                        s += inst.b[size_t(i - 1)][size_t(k)];
                    bsum *= s;
                }
                double asum = 1.0;
                for (int i = 1; i <= d; ++i) {
                    if (bset.contains(i)) continue;
                    if (t2.contains(i)) {
                        double s = 0;
                        for (int k = 0; k < inst.extents[i - 1]; ++k) {
                            double av = inst.a[size_t(i - 1)][size_t(k)];
                            s += av * av;
                        }
                        asum *= s;
                    } else {
                        double av = inst.a[size_t(i - 1)][0];  // pinned at the minimal corner
                        asum *= av * av;
                    }
                }
                rhs += bsum * std::sqrt(asum);
            }
            rhs *= inst.c;
            double ratio = rhs > 0 ? lhs / rhs : 0.0;
            if (ratio > rep.fitted_C) {
                rep.fitted_C = ratio;
                rep.worst_lhs = lhs;
                rep.worst_rhs = rhs;
                rep.worst_theta = theta;
                rep.worst_eta = eta;
            }
        }
    }
    return rep;
}

inline BdgInstance random_bdg_instance(int d, int n_per_axis, uint64_t seed, int samples = 2000) {
    BdgInstance inst;
    inst.dim = d;
    inst.seed = seed;
    inst.samples = samples;
    for (int i = 0; i < d; ++i) {
        inst.extents[i] = n_per_axis;
        inst.a[size_t(i)].resize(size_t(n_per_axis));
        inst.b[size_t(i)].resize(size_t(n_per_axis));
        double decay = 0.25 + 0.5 * uniform_at(seed, 7000 + uint64_t(i), 0);
        for (int k = 0; k < n_per_axis; ++k) {
            double u = uniform_at(seed, 7100 + uint64_t(i), uint64_t(k));
            double a = (0.5 + u) * std::pow(2.0, -decay * k);
            double v = uniform_at(seed, 7200 + uint64_t(i), uint64_t(k));
            inst.a[size_t(i)][size_t(k)] = a;
            inst.b[size_t(i)][size_t(k)] = a * (0.05 + 0.95 * v);  // 0 < b <= a
        }
    }
    return inst;
}

}  // namespace recon
