#pragma once

// Multiparameter stochastic sewing over grid-like dyadic partitions and its
// bridge to the reconstruction engine: the distributional derivative of a
// two-point germ is a reconstruction germ, and the sewing limits I^theta
// are the primitives of the partial reconstructions.

#include "recon/reconstruction.hpp"

#include <cmath>

namespace recon {

struct TwoPointGerm {
    int dim = 2;
    int samples = 1;
    double T = 1.0;
    bool adapted = true;
    bool martingale = false;  // E^eta_s delta^theta and Sigma-type sums vanish
    // evaluate on the simplex s <= t
    std::function<std::vector<double>(const Point&, const Point&)> evaluate;
};

// delta^i_u Xi_{s,t} = Xi_{s,t} - Xi_{s,pi^i_u t} - Xi_{pi^i_u s,t}, composed
// over the directions in eta (3^{#eta} germ evaluations).
inline std::vector<double> delta_op(const IndexSet& eta, const Point& u, const TwoPointGerm& Xi,
                                    const Point& s, const Point& t) {
    for (int i = 0; i < s.dim(); ++i)
        detail::require(s[i] <= u[i] + 1e-12 && u[i] <= t[i] + 1e-12,
                        "delta_op: needs s <= u <= t");
    auto mem = eta.members();
    std::function<std::vector<double>(const IndexSet&, const Point&, const Point&)> rec =
        [&](const IndexSet& rest, const Point& ss, const Point& tt) -> std::vector<double> {
        if (rest.empty_set()) return Xi.evaluate(ss, tt);
        int i = rest.members().front();
        IndexSet next = rest.minus(IndexSet::single(rest.dim(), i));
        auto a = rec(next, ss, tt);
        auto b = rec(next, ss, project(IndexSet::single(rest.dim(), i), u, tt));
        auto c = rec(next, project(IndexSet::single(rest.dim(), i), u, ss), tt);
        for (size_t q = 0; q < a.size(); ++q) a[q] -= b[q] + c[q];
        return a;
    };
    return rec(eta, s, t);
}

// ----------------------------------------------------------------------------
// Sewing limits over dyadic grid-like partitions
// ----------------------------------------------------------------------------

struct SewResult {
    std::vector<double> value;       // per-sample I^theta Xi_{s,t} at the last level
    std::vector<int> levels;
    std::vector<double> increments;  // L2 of successive Riemann-sum differences
    RateFit decay;
    bool converged = false;
};

// Riemann sum over P^theta at dyadic level l: the theta axes split into 2^l
// parts, the others keep the single interval [s_i, t_i].
inline std::vector<double> sewing_sum(const TwoPointGerm& Xi, const IndexSet& theta,
                                      const Point& s, const Point& t, int level) {
    const int d = Xi.dim;
    MultiIndex ext{};
    for (int i = 0; i < d; ++i) ext[i] = theta.contains(i + 1) ? (1 << level) : 1;
    std::vector<double> acc(size_t(Xi.samples), 0.0);
    for_each_multi(d, ext, [&](const MultiIndex& c) {
        Point lo(d), hi(d);
        for (int i = 0; i < d; ++i) {
            double parts = double(ext[i]);
            lo[i] = s[i] + (t[i] - s[i]) * double(c[i]) / parts;
            hi[i] = s[i] + (t[i] - s[i]) * double(c[i] + 1) / parts;
        }
        auto v = Xi.evaluate(lo, hi);
        for (size_t q = 0; q < acc.size(); ++q) acc[q] += v[q];
    });
    return acc;
}

// Optional coherence pre-scan: the normalized delta^theta increments must
// not blow up from the coarse scale to the fine scale.
inline bool sewing_prescan(const TwoPointGerm& Xi, const IndexSet& theta, const Point& s,
                           const Point& t) {
    if (theta.empty_set()) return true;
    const int d = Xi.dim;
    double prev = -1;
    bool ok = true;
    for (int l = 1; l <= 3; ++l) {
        Point tt(d), uu(d);
        for (int i = 0; i < d; ++i) {
            tt[i] = s[i] + (t[i] - s[i]) * std::ldexp(1.0, -l);
            uu[i] = s[i] + (t[i] - s[i]) * std::ldexp(1.0, -l - 1);
        }
        double nrm = lm_norm(delta_op(theta, uu, Xi, s, tt), 2);
        if (prev >= 0 && nrm > 50.0 * std::max(prev, 1e-300)) ok = false;
        prev = nrm;
    }
    return ok;
}

inline SewResult sew(const TwoPointGerm& Xi, const IndexSet& theta, const Point& s,
                     const Point& t, int level_min = 1, int level_max = 8,
                     double cauchy_tol = 1e-10, bool prescan = false) {
    if (prescan)
        detail::require(sewing_prescan(Xi, theta, s, t),
                        "sew: coherence pre-scan failed (delta increments grow)");
    SewResult res;
    std::vector<double> prev;
    for (int l = level_min; l <= level_max; ++l) {
        auto cur = sewing_sum(Xi, theta, s, t, l);
        if (!prev.empty()) {
            std::vector<double> diff(cur.size());
            for (size_t q = 0; q < cur.size(); ++q) diff[q] = cur[q] - prev[q];
            res.increments.push_back(lm_norm(diff, 2));
            res.levels.push_back(l);
        }
        prev = std::move(cur);
    }
    res.value = prev;
    std::vector<double> xs, ys;
    for (size_t i = 0; i < res.increments.size(); ++i)
        if (res.increments[i] > 0) {
            xs.push_back(double(res.levels[i]));
            ys.push_back(std::log2(res.increments[i]));
        }
    res.decay = fit_line(xs, ys);
    double last = res.increments.empty() ? 0.0 : res.increments.back();
    res.converged = last < cauchy_tol || (res.decay.slope < 0 && res.decay.r2 > 0.9) ||
                    res.decay.slope < -0.2;
    return res;
}

// ----------------------------------------------------------------------------
// Bridge to reconstruction
// ----------------------------------------------------------------------------

// Discrete distributional derivative: <d^1 g, psi> = sum_cells box_cell(g) *
// cell-average(psi); compact support kills the boundary terms of the
// summation by parts.
template <typename EvalT>
inline std::vector<double> pair_mixed_derivative(EvalT&& g_at, int samples,
                                                 const TestFunction& psi, int N, double T) {
    const int d = psi.dim();
    CellWeights cw = cell_weights(psi, N, T);
    std::vector<double> acc(size_t(samples), 0.0);
    double h = T / N;
    MultiIndex ext{};
    for (int i = 0; i < d; ++i) ext[i] = cw.hi[i] - cw.lo[i];
    for (int i = 0; i < d; ++i)
        if (ext[i] <= 0) return acc;
    for_each_multi(d, ext, [&](const MultiIndex& off) {
        double w = 1.0;
        MultiIndex c{};
        for (int i = 0; i < d; ++i) {
            c[i] = cw.lo[i] + off[i];
            w *= cw.w[size_t(i)][size_t(c[i])];
        }
        if (w == 0.0) return;
        // box increment of g over the cell via the 2^d corners
        for (const IndexSet& sub : all_subsets(d)) {
            Point corner(d);
            for (int i = 0; i < d; ++i)
                corner[i] = (c[i] + (sub.contains(i + 1) ? 1 : 0)) * h;
            double sign = ((d - sub.count()) % 2 == 0) ? 1.0 : -1.0;
            auto v = g_at(corner);
            for (size_t q = 0; q < acc.size(); ++q) acc[q] += sign * w * v[q] * h * h / (h * h);
        }
    });
    return acc;
}

// I^theta Xi_{x, t} at the grid partition level, as a function of t.
inline std::vector<double> sewing_limit_at(const TwoPointGerm& Xi, const IndexSet& theta,
                                           const Point& x, const Point& t, int N) {
    const int d = Xi.dim;
    double h = Xi.T / N;
    MultiIndex ext{};
    for (int i = 0; i < d; ++i) {
        if (theta.contains(i + 1)) {
            long long cells = std::llround((t[i] - x[i]) / h);
            ext[i] = int(std::max(0ll, cells));
        } else {
            ext[i] = 1;
        }
    }
    std::vector<double> acc(size_t(Xi.samples), 0.0);
    for (int i = 0; i < d; ++i)
        if (ext[i] == 0) return acc;
    for_each_multi(d, ext, [&](const MultiIndex& c) {
        Point lo(d), hi(d);
        for (int i = 0; i < d; ++i) {
            if (theta.contains(i + 1)) {
                lo[i] = x[i] + c[i] * h;
                hi[i] = lo[i] + h;
            } else {
                lo[i] = x[i];
                hi[i] = t[i];
            }
        }
        auto v = Xi.evaluate(lo, hi);
        for (size_t q = 0; q < acc.size(); ++q) acc[q] += v[q];
    });
    return acc;
}

struct BridgeReport {
    double rel_difference = 0.0;        // per-sample relative gap of the two routes
    double abs_difference = 0.0;
    double scale = 0.0;
    RateFit sewing_beta_fit;            // |t-s| exponent of delta^theta Xi
    RateFit germ_coherence_fit;         // coupled lambda = sep fit of box^theta F(psi^l_y)
    // the coherence transfer carries a lambda^{-d} localization factor, so the
    // matched-design slopes satisfy sewing ~ germ + d
    double exponent_gap = 0.0;
};

// Compare R^theta_x of F = d^1 Xi_{x,.} against <d^1 I^theta Xi_{x,.}, psi>.
inline BridgeReport sewing_reconstruction_bridge(const TwoPointGerm& Xi,
                                                 const WaveletBasisD& basis,
                                                 const IndexSet& theta, const Point& x,
                                                 const TestFunction& psi, int N) {
    const int d = Xi.dim;
    Box supp = psi.support();
    for (int i = 0; i < d; ++i)
        detail::require(supp.lo[i] > x[i] && supp.hi[i] < Xi.T,
                        "bridge: psi must be supported in (x, T)");

    // germ F_b(psi) = <d^1 Xi_{b,.}, psi>
    Germ F;
    F.dim = d;
    F.samples = Xi.samples;
    F.T = Xi.T;
    F.martingale = Xi.martingale;
    const TwoPointGerm* xp = &Xi;
    F.evaluate = [xp, N](const Point& b, const TestFunction& p) {
        return pair_mixed_derivative(
            [&](const Point& t) {
                Point tt = t;
                bool degenerate = false;
                for (int i = 0; i < xp->dim; ++i) {
                    if (tt[i] <= b[i]) degenerate = true;
                }
                if (degenerate) return std::vector<double>(size_t(xp->samples), 0.0);
                return xp->evaluate(b, tt);
            },
            xp->samples, p, N, xp->T);
    };

    int grid_level = int(std::lround(std::log2(double(N))));
    auto lhs = partial_sum(F, theta, x, psi, iso_level(d, grid_level), basis);

    std::vector<double> rhs;
    if (theta == IndexSet::full(d)) {
        // the full-theta limit is additive in every direction, so its box
        // increment over one cell telescopes to the single-box germ value
        CellWeights cw = cell_weights(psi, N, Xi.T);
        rhs.assign(size_t(Xi.samples), 0.0);
        double h = Xi.T / N;
        MultiIndex ext{};
        for (int i = 0; i < d; ++i) ext[i] = cw.hi[i] - cw.lo[i];
        for_each_multi(d, ext, [&](const MultiIndex& off) {
            double w = 1.0;
            Point lo(d), hi(d);
            for (int i = 0; i < d; ++i) {
                int c = cw.lo[i] + off[i];
                w *= cw.w[size_t(i)][size_t(c)];
                lo[i] = c * h;
                hi[i] = (c + 1) * h;
            }
            if (w == 0.0) return;
            auto v = Xi.evaluate(lo, hi);
            for (size_t q = 0; q < rhs.size(); ++q) rhs[q] += w * v[q];
        });
    } else {
        rhs = pair_mixed_derivative(
            [&](const Point& t) {
                Point tt = t;
                for (int i = 0; i < d; ++i)
                    if (tt[i] <= x[i]) return std::vector<double>(size_t(Xi.samples), 0.0);
                return sewing_limit_at(Xi, theta, x, tt, N);
            },
            Xi.samples, psi, N, Xi.T);
    }

    BridgeReport rep;
    std::vector<double> diff(lhs.size());
    for (size_t q = 0; q < lhs.size(); ++q) {
        diff[q] = lhs[q] - rhs[q];
        rep.abs_difference = std::max(rep.abs_difference, std::fabs(diff[q]));
        rep.scale = std::max(rep.scale, std::fabs(rhs[q]));
    }
    rep.rel_difference = rep.scale > 0 ? lm_norm(diff, 2) / lm_norm(rhs, 2) : 0.0;

    // exponent mapping: |t-s| slope of delta^theta Xi vs the (sep+lambda)
    // slope of box^theta F(psi^lambda_y)
    {
        std::vector<double> xs, ys;
        Point s0(d, 0.25);
        for (int l = 1; l <= 4; ++l) {
            double sep = std::ldexp(1.0, -l - 1);
            Point t0 = s0, u0 = s0;
            for (int i = 0; i < d; ++i) {
                t0[i] = s0[i] + sep;
                u0[i] = s0[i] + 0.5 * sep;
            }
            auto dv = delta_op(theta, u0, Xi, s0, t0);
            double nrm = lm_norm(dv, 2);
            if (nrm > 0) {
                xs.push_back(std::log2(sep));
                ys.push_back(std::log2(nrm));
            }
        }
        rep.sewing_beta_fit = fit_line(xs, ys);
    }
    {
        // matched design: lambda coupled to the separation
        std::vector<double> xs, ys;
        Point y0(d, 0.5);
        TestFunction base = coherence_bump(d, theta);
        for (int l = 1; l <= 4; ++l) {
            double sep = std::ldexp(1.0, -l - 1);
            double lambda = sep;
            Point xx = y0;
            for (int i = 0; i < d; ++i)
                if (theta.contains(i + 1)) xx[i] = y0[i] - sep;
            auto inc = germ_rect_increment(F, theta, xx, y0, rescale(base, y0, lambda));
            double nrm = lm_norm(inc, 2);
            if (nrm > 0) {
                xs.push_back(std::log2(sep));
                ys.push_back(std::log2(nrm));
            }
        }
        rep.germ_coherence_fit = fit_line(xs, ys);
    }
    rep.exponent_gap =
        std::fabs(rep.sewing_beta_fit.slope - (rep.germ_coherence_fit.slope + double(d)));
    return rep;
}

// Sewing property iv: fitted |t-s| slope of || E^eta_s sum (-1)^{#sub}
// I^{sub} Xi_{s,t} ||_m for eta = {} (martingale germs have exact-zero
// conditionals, reported separately).
struct SewingPropertyIv {
    IndexSet theta;
    double fitted_slope = 0.0;
    double predicted_slope = 0.0;
    double r2 = 0.0;
};

inline SewingPropertyIv sewing_property_iv(const TwoPointGerm& Xi, const IndexSet& theta,
                                           int N, const Point& alpha_c_beta_prediction,
                                           const Point& s0 = Point{0.25, 0.25}) {
    SewingPropertyIv out;
    out.theta = theta;
    const int d = Xi.dim;
    for (int i = 0; i < d; ++i) out.predicted_slope += alpha_c_beta_prediction[i];
    std::vector<double> xs, ys;
    for (int l = 1; l <= 4; ++l) {
        double sep = std::ldexp(1.0, -l - 1);
        Point t0 = s0;
        for (int i = 0; i < d; ++i) t0[i] = s0[i] + sep;
        std::vector<double> acc(size_t(Xi.samples), 0.0);
        for (const IndexSet& sub : subsets_of(theta)) {
            double sign = (sub.count() % 2 == 0) ? 1.0 : -1.0;
            auto v = sub.empty_set() ? Xi.evaluate(s0, t0) : sewing_limit_at(Xi, sub, s0, t0, N);
            for (size_t q = 0; q < acc.size(); ++q) acc[q] += sign * v[q];
        }
        double nrm = lm_norm(acc, 2);
        if (nrm > 0) {
            xs.push_back(std::log2(sep));
            ys.push_back(std::log2(nrm));
        }
    }
    auto fit = fit_line(xs, ys);
    out.fitted_slope = fit.slope;
    out.r2 = fit.r2;
    return out;
}

}  // namespace recon
