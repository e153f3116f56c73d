#pragma once

// The reconstruction engine: partial wavelet sums R^{theta,n}_x(psi) of a
// germ, Cauchy-monitored limits, the rectangular germ sums g^{kappa,n} (two
// algebraic routes, asserted against each other), and the verification of
// the characterizing properties of the reconstruction family.

#include "recon/germ.hpp"
#include "recon/holder.hpp"
#include "recon/wavelets.hpp"

#include <cmath>
#include <unordered_map>

namespace recon {

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Memo cache for germ evaluations within one reconstruction task, keyed by
// (level, wavelet position, base point). Single-threaded per task.
class GermEvalCache {
public:
    const std::vector<double>* find(uint64_t key) const {
        auto it = map_.find(key);
        return it == map_.end() ? nullptr : &it->second;
    }
    void insert(uint64_t key, std::vector<double> v) { map_.emplace(key, std::move(v)); }

    static uint64_t key(const MultiIndex& n, const Point& y, const Point& base, int dim) {
        uint64_t h = 1469598103934665603ull;
        auto mix = [&h](uint64_t v) {
            h ^= v;
            h *= 1099511628211ull;
        };
        for (int i = 0; i < dim; ++i) {
            mix(uint64_t(n[i]) + 1);
            mix(uint64_t(int64_t(std::llround(y[i] * 68719476736.0))));
            mix(uint64_t(int64_t(std::llround(base[i] * 68719476736.0))));
        }
        return h;
    }

private:
    std::unordered_map<uint64_t, std::vector<double>> map_;
};

namespace recon_detail {

inline std::vector<double> eval_cached(const Germ& F, const Point& base,
                                       const TestFunction& wavelet, const MultiIndex& n,
                                       const Point& y, GermEvalCache* cache) {
    if (!cache) return F.evaluate(base, wavelet);
    uint64_t k = GermEvalCache::key(n, y, base, F.dim);
    if (const auto* hit = cache->find(k)) return *hit;
    auto v = F.evaluate(base, wavelet);
    cache->insert(k, v);
    return v;
}

// Visit all y in Delta_n whose level-n wavelet support meets supp(psi),
// requiring the support to lie inside [0,T]^d.
template <typename Fn>
inline void for_each_position(const WaveletBasisD& basis, const MultiIndex& n,
                              const TestFunction& psi, Fn&& fn) {
    const int d = basis.dim;
    std::array<std::vector<double>, kMaxDim> pos;
    MultiIndex ext{};
    for (int i = 0; i < d; ++i) {
        pos[size_t(i)] = basis.axis_positions(n[size_t(i)], psi.axes[size_t(i)].lo,
                                              psi.axes[size_t(i)].hi);
        ext[i] = int(pos[size_t(i)].size());
        if (ext[i] == 0) return;
    }
    for_each_multi(d, ext, [&](const MultiIndex& t) {
        Point y(d);
        for (int i = 0; i < d; ++i) y[i] = pos[size_t(i)][size_t(t[i])];
        fn(y);
    });
}

inline void require_inside_domain(const WaveletBasisD& basis, const MultiIndex& n,
                                  const Point& y) {
    for (int i = 0; i < basis.dim; ++i) {
        double w = basis.T * std::ldexp(1.0, -n[size_t(i)]);
        if (y[i] < -1e-12 || y[i] + basis.base.support_width * w > basis.T + 1e-12)
            throw DomainError("partial_sum: wavelet support overflows the domain");
    }
}

}  // namespace recon_detail

// R^{theta,n}_x(psi) = sum_{y in Delta_n} F_{pi^theta_y x}(phi^n_y) <phi^n_y, psi>.
inline std::vector<double> partial_sum(const Germ& F, const IndexSet& theta, const Point& x,
                                       const TestFunction& psi, const MultiIndex& n,
                                       const WaveletBasisD& basis,
                                       GermEvalCache* cache = nullptr) {
    detail::require(theta.dim() == F.dim && psi.dim() == F.dim, "partial_sum: dimension mismatch");
    std::vector<double> acc(size_t(F.samples), 0.0);
    recon_detail::for_each_position(basis, n, psi, [&](const Point& y) {
        double w = basis.inner_product(IndexSet::empty(F.dim), n, y, psi);
        if (w == 0.0) return;
        recon_detail::require_inside_domain(basis, n, y);
        TestFunction wav = basis.scaling(n, y);
        Point base = project(theta, y, x);
        auto v = recon_detail::eval_cached(F, base, wav, n, y, cache);
        for (size_t s = 0; s < acc.size(); ++s) acc[s] += w * v[s];
    });
    return acc;
}

// ----------------------------------------------------------------------------
// Cauchy-monitored reconstruction
// ----------------------------------------------------------------------------

struct ReconstructResult {
    std::vector<double> value;       // per-sample R^{theta}_x(psi) at the last level
    std::vector<int> levels;         // isotropic level schedule
    std::vector<double> increments;  // L2 size of successive differences
    RateFit decay;                   // log2 increment vs level
    bool converged = false;
    std::string note;
};

struct ReconstructOptions {
    int n_min = 2;
    int n_max = 7;
    double cauchy_tol = 1e-10;
    bool skip_coherence_scan = false;
    int norm_m = 2;
};

// Cheap coherence pre-scan: the ratio table must not blow up from the coarse
// scale to the fine scale.
inline bool coherence_prescan(const Germ& F) {
    if (!F.declared) return true;
    auto rep = coherence_norm(F, *F.declared, 2, 2, 2);
    double coarse = 0, fine = 0;
    for (const auto& row : rep.rows) {
        if (row.theta.empty_set()) continue;
        if (row.lambda >= 0.25)
            coarse = std::max(coarse, row.ratio);
        else
            fine = std::max(fine, row.ratio);
    }
    return coarse == 0.0 || fine <= 50.0 * std::max(coarse, 1e-300);
}

inline ReconstructResult reconstruct(const Germ& F, const IndexSet& theta, const Point& x,
                                     const TestFunction& psi, const WaveletBasisD& basis,
                                     const ReconstructOptions& opt = {}) {
    // support-margin rule: psi must sit R 2^-n_min inside the domain
    double margin = basis.base.support_width * basis.T * std::ldexp(1.0, -opt.n_min);
    Box supp = psi.support();
    for (int i = 0; i < F.dim; ++i)
        if (supp.lo[i] < margin - 1e-12 || supp.hi[i] > basis.T - 1e-12)
            throw DomainError("reconstruct: support margin rule violated at n_min");

    if (!opt.skip_coherence_scan && !coherence_prescan(F))
        throw std::invalid_argument("reconstruct: coherence pre-scan failed (override to force)");

    ReconstructResult res;
    GermEvalCache cache;
    std::vector<double> prev;
    for (int k = opt.n_min; k <= opt.n_max; ++k) {
        auto cur = partial_sum(F, theta, x, psi, iso_level(F.dim, k), basis, &cache);
        if (!prev.empty()) {
            std::vector<double> diff(cur.size());
            for (size_t s = 0; s < cur.size(); ++s) diff[s] = cur[s] - prev[s];
            res.increments.push_back(lm_norm(diff, opt.norm_m));
            res.levels.push_back(k);
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
    if (last < opt.cauchy_tol) {
        res.converged = true;
        res.note = "increments below tolerance";
    } else if (res.decay.slope < 0 && res.decay.r2 > 0.9) {
        res.converged = true;
        res.note = "fitted decay negative with good fit";
    } else if (res.decay.slope < -0.2) {
        res.converged = true;
        res.note = "fitted decay negative";
    } else {
        res.converged = false;
        res.note = "increments not decaying";
    }
    return res;
}

// ----------------------------------------------------------------------------
// Rectangular germ sums g^{kappa,n}
// ----------------------------------------------------------------------------

struct RectGermSum {
    std::vector<double> value;        // route (b): corner-sum form
    double route_disagreement = 0.0;  // sup per-sample |route a - route b|
};

inline RectGermSum rect_germ_sum(const Germ& F, const IndexSet& kappa, const Point& x,
                                 const TestFunction& psi, const MultiIndex& n,
                                 const WaveletBasisD& basis, GermEvalCache* cache = nullptr,
                                 double assert_tol = 1e-10) {
    GermEvalCache local;
    if (!cache) cache = &local;

    // route (a): alternating sum of partial reconstructions
    std::vector<double> route_a(size_t(F.samples), 0.0);
    for (const IndexSet& eta : subsets_of(kappa)) {
        double sign = (eta.count() % 2 == 0) ? 1.0 : -1.0;
        auto v = partial_sum(F, eta, x, psi, n, basis, cache);
        for (size_t s = 0; s < route_a.size(); ++s) route_a[s] += sign * v[s];
    }

    // route (b): (-1)^{#kappa} sum_y box^kappa_{x,y} F(phi^n_y) <phi^n_y, psi>
    std::vector<double> route_b(size_t(F.samples), 0.0);
    double sign_k = (kappa.count() % 2 == 0) ? 1.0 : -1.0;
    recon_detail::for_each_position(basis, n, psi, [&](const Point& y) {
        double w = basis.inner_product(IndexSet::empty(F.dim), n, y, psi);
        if (w == 0.0) return;
        recon_detail::require_inside_domain(basis, n, y);
        TestFunction wav = basis.scaling(n, y);
        const int kc = kappa.count();
        for (const IndexSet& sub : subsets_of(kappa)) {
            double sign = ((kc - sub.count()) % 2 == 0) ? 1.0 : -1.0;
            Point base = project(sub, y, x);
            auto v = recon_detail::eval_cached(F, base, wav, n, y, cache);
            for (size_t s = 0; s < route_b.size(); ++s) route_b[s] += sign_k * sign * w * v[s];
        }
    });

    RectGermSum out;
    out.value = route_b;
    double scale = 0;
    for (size_t s = 0; s < route_b.size(); ++s) {
        out.route_disagreement = std::max(out.route_disagreement,
                                          std::fabs(route_a[s] - route_b[s]));
        scale = std::max(scale, std::fabs(route_b[s]));
    }
    detail::require(out.route_disagreement <= assert_tol * std::max(1.0, scale),
                    "rect_germ_sum: the two algebraic routes disagree");
    return out;
}

// ----------------------------------------------------------------------------
// Characterization report (Theorem properties 1-4)
// ----------------------------------------------------------------------------

struct CharacterizationRow {
    IndexSet theta, eta;
    double predicted_slope = 0.0;  // sum_theta gamma + sum_eta delta + sum_theta^c alpha
    double fitted_slope = 0.0;
    double fit_r2 = 0.0;
    bool zero_conditional = false;  // conditional values vanish identically
    double zero_residual = 0.0;     // sup |value| when zero_conditional
};

struct CharacterizationReport {
    double prop1_residual = 0.0;       // sup per-sample |R^{empty,n} - F_x(P_n psi)|
    double prop2_residual = 0.0;       // x_theta perturbation per-sample difference
    double prop3_residual = -1.0;      // masked re-evaluation difference (if supported)
    std::vector<CharacterizationRow> rows;
    std::vector<ReconstructResult> cauchy;  // one per theta != empty
};

// psi with support [1/4,3/4]^theta x [-3/4,3/4]^{theta^c}.
inline TestFunction characterization_bump(int d, const IndexSet& theta) {
    TestFunction base = bump(d);
    TestFunction out;
    out.smoothness = base.smoothness;
    for (int i = 1; i <= d; ++i) {
        TestFunction one;
        one.axes.push_back(base.axes[size_t(i - 1)]);
        if (theta.contains(i))
            out.axes.push_back(rescale(one, Point(1, 0.5), Point(1, 0.25)).axes[0]);
        else
            out.axes.push_back(rescale(one, Point(1, 0.0), Point(1, 0.75)).axes[0]);
    }
    return out;
}

struct CharacterizationOptions {
    Point z;                     // evaluation center (theta coords shared with x)
    Point x_off;                 // x coordinates off theta
    std::vector<Point> anchors;  // extra centers averaged into the slope fit
    int lambda_min = 1;          // lambda = 2^-l
    int lambda_max = 3;
    int n_eval = 7;              // evaluation level for the g sums
    int m = 2;
};

inline CharacterizationReport verify_characterization(const Germ& F, const GermClass& cls,
                                                      const WaveletBasisD& basis,
                                                      const CharacterizationOptions& opt) {
    const int d = F.dim;
    CharacterizationReport rep;

    // property 1: R^{empty,n}(psi) = F_x(P_n psi), and both settle at the grid
    TestFunction psi0 = rescale(characterization_bump(d, IndexSet::full(d)), opt.z, 0.5);
    {
        MultiIndex n = iso_level(d, opt.n_eval);
        Point x = opt.z;
        auto lhs = partial_sum(F, IndexSet::empty(d), x, psi0, n, basis);
        auto rhs = F.evaluate(x, basis.project(n, psi0));
        for (size_t s = 0; s < lhs.size(); ++s)
            rep.prop1_residual = std::max(rep.prop1_residual, std::fabs(lhs[s] - rhs[s]));
    }

    // property 2: independence of x_theta
    {
        MultiIndex n = iso_level(d, opt.n_eval);
        IndexSet theta = IndexSet::full(d);
        Point x1 = opt.z, x2 = opt.z;
        for (int i = 0; i < d; ++i) x2[i] = opt.z[i] * 0.7 + 0.1;
        auto a = partial_sum(F, theta, x1, psi0, n, basis);
        auto b = partial_sum(F, theta, x2, psi0, n, basis);
        for (size_t s = 0; s < a.size(); ++s)
            rep.prop2_residual = std::max(rep.prop2_residual, std::fabs(a[s] - b[s]));
    }

    // property 3: measurability. Mask away every noise cell not fully below
    // the rounded-up corner of x v supp(psi); re-evaluation must be identical.
    if (F.evaluate_cells && F.noise) {
        Box supp = psi0.support();
        const GridField& cells = F.noise->cells;
        double h = cells.h();
        Point thr(d);
        for (int i = 0; i < d; ++i)
            thr[i] = std::min(basis.T, (std::ceil(supp.hi[i] / h - 1e-9) + 1.0) * h);
        FiltrationMask mask{IndexSet::full(d), thr};
        MultiIndex cext{};
        for (int i = 0; i < d; ++i) cext[i] = cells.cells();
        std::vector<char> past(cells.points_per_sample());
        {
            size_t fidx = 0;
            for_each_multi(d, cext, [&](const MultiIndex& cc) {
                past[fidx++] = mask.cell_in_past(cells, cc) ? 1 : 0;
            });
        }
        MultiIndex n = iso_level(d, opt.n_eval);
        auto plain = partial_sum(F, IndexSet::full(d), opt.z, psi0, n, basis);
        std::vector<double> buf(cells.points_per_sample());
        rep.prop3_residual = 0.0;
        int probe = std::min(F.samples, 16);
        for (int s = 0; s < probe; ++s) {
            auto src = cells.sample(s);
            for (size_t q = 0; q < buf.size(); ++q) buf[q] = past[q] ? src[q] : 0.0;
            double masked = 0;
            recon_detail::for_each_position(basis, n, psi0, [&](const Point& y) {
                double w = basis.inner_product(IndexSet::empty(d), n, y, psi0);
                if (w == 0.0) return;
                TestFunction wav = basis.scaling(n, y);
                masked += w * F.evaluate_cells(project(IndexSet::full(d), y, opt.z), wav, buf, s);
            });
            rep.prop3_residual = std::max(rep.prop3_residual, std::fabs(masked - plain[size_t(s)]));
        }
    }

    // property 4: lambda-scaling of the g sums for every (theta, eta);
    // the log norms are averaged over the anchor centers per lambda
    std::vector<Point> centers = opt.anchors;
    if (centers.empty()) centers.push_back(opt.z);
    for (const IndexSet& theta : all_subsets(d)) {
        if (theta.empty_set()) continue;
        TestFunction psi = characterization_bump(d, theta);
        Point x(d);
        for (int i = 0; i < d; ++i)
            x[i] = theta.contains(i + 1) ? opt.z[i] : opt.x_off[i];

        std::vector<double> xs, ys;
        for (int l = opt.lambda_min; l <= opt.lambda_max; ++l) {
            double lambda = std::ldexp(1.0, -l);
            double acc = 0;
            for (const Point& z : centers) {
                Point xz(d);
                for (int i = 0; i < d; ++i)
                    xz[i] = theta.contains(i + 1) ? z[i] : opt.x_off[i];
                GermEvalCache cache;
                auto g = rect_germ_sum(F, theta, xz, rescale(psi, z, lambda),
                                       iso_level(d, opt.n_eval), basis, &cache);
                acc += std::log2(std::max(lm_norm(g.value, opt.m), 1e-300));
            }
            xs.push_back(-double(l));
            ys.push_back(acc / double(centers.size()));
        }
        auto fit = fit_line(xs, ys);

        for (const IndexSet& eta : subsets_of(theta)) {
            CharacterizationRow row;
            row.theta = theta;
            row.eta = eta;
            bool delta_inf = false;
            for (int i = 0; i < d; ++i) {
                if (theta.contains(i + 1))
                    row.predicted_slope += cls.gamma[i];
                else
                    row.predicted_slope += cls.alpha[i];
                if (eta.contains(i + 1)) {
                    row.predicted_slope += cls.delta[i];
                    if (cls.delta[i] >= kDeltaInf) delta_inf = true;
                }
            }
            if (eta.empty_set()) {
                row.fitted_slope = fit.slope;
                row.fit_r2 = fit.r2;
            } else if (F.martingale) {
                // conditionals vanish; confirm statistically with a small
                // resampled estimate when the germ is re-evaluable
                row.zero_conditional = true;
                row.zero_residual = -1.0;
                if (F.evaluate_cells && F.noise) {
                    const int K = F.mask_exact ? 1 : 16;
                    const int probe = std::min(F.samples, 32);
                    int l = opt.lambda_min;
                    double lambda = std::ldexp(1.0, -l);
                    TestFunction pl = rescale(psi, opt.z, lambda);
                    int n_cond = std::min(opt.n_eval, 5);
                    FiltrationMask mask{eta, x};
                    const GridField& cells = F.noise->cells;
                    MultiIndex cext{};
                    for (int i = 0; i < d; ++i) cext[i] = cells.cells();
                    std::vector<char> past(cells.points_per_sample());
                    size_t fidx = 0;
                    for_each_multi(d, cext, [&](const MultiIndex& cc) {
                        past[fidx++] = mask.cell_in_past(cells, cc) ? 1 : 0;
                    });
                    double sd = std::sqrt(cells.cell_volume());
                    std::vector<double> buf(cells.points_per_sample());
                    std::vector<double> cond(static_cast<size_t>(probe)), plain(static_cast<size_t>(probe));
                    MultiIndex n = iso_level(d, n_cond);
                    double sign_k = (theta.count() % 2 == 0) ? 1.0 : -1.0;
                    for (int s = 0; s < probe; ++s) {
                        double acc = 0;
                        for (int k = 0; k < K; ++k) {
                            uint64_t stream =
                                streams::kResampleBase | (uint64_t(s) << 20) | uint64_t(k);
                            auto src = cells.sample(s);
                            for (size_t q = 0; q < buf.size(); ++q)
                                buf[q] = past[q] ? src[q]
                                       : F.mask_exact
                                           ? 0.0
                                           : sd * normal_at(F.noise->seed, stream, q);
                            double g1 = 0;
                            recon_detail::for_each_position(basis, n, pl, [&](const Point& y) {
                                double w = basis.inner_product(IndexSet::empty(d), n, y, pl);
                                if (w == 0.0) return;
                                TestFunction wav = basis.scaling(n, y);
                                const int kc = theta.count();
                                for (const IndexSet& sub : subsets_of(theta)) {
                                    double sg = ((kc - sub.count()) % 2 == 0) ? 1.0 : -1.0;
                                    g1 += sign_k * sg * w *
                                          F.evaluate_cells(project(sub, y, x), wav, buf, s);
                                }
                            });
                            acc += g1;
                        }
                        cond[size_t(s)] = acc / K;
                    }
                    auto gref = rect_germ_sum(F, theta, x, pl, n, basis);
                    for (int s = 0; s < probe; ++s) plain[size_t(s)] = gref.value[size_t(s)];
                    double denom = lm_norm(plain, 2);
                    row.zero_residual = denom > 0 ? lm_norm(cond, 2) / denom : 0.0;
                }
            } else if (delta_inf) {
                row.zero_conditional = true;
                row.zero_residual = -1.0;
            } else {
                // finite delta without an exact hook: not estimated here
                row.zero_conditional = false;
                row.fitted_slope = fit.slope;
                row.fit_r2 = fit.r2;
            }
            rep.rows.push_back(row);
        }

        // Cauchy decay of the partial sums for this theta. The schedule starts
        // once the wavelet width resolves the test function (pre-asymptotic
        // coarse levels would pollute the fit).
        ReconstructOptions ro;
        TestFunction pc = rescale(psi, opt.z, 0.5);
        Box s4 = pc.support();
        double dist = basis.T, extent = basis.T;
        for (int i = 0; i < d; ++i) {
            dist = std::min({dist, s4.lo[i], basis.T - s4.hi[i]});
            extent = std::min(extent, s4.hi[i] - s4.lo[i]);
        }
        int n_margin = int(std::ceil(std::log2(basis.base.support_width * basis.T /
                                               std::max(dist, 1e-9))));
        int n_resolve = int(std::ceil(std::log2(4.0 * basis.T / std::max(extent, 1e-9))));
        ro.n_min = std::max({2, n_margin, n_resolve});
        ro.n_max = opt.n_eval;
        ro.skip_coherence_scan = true;
        rep.cauchy.push_back(reconstruct(F, theta, opt.z, pc, basis, ro));
    }
    return rep;
}

}  // namespace recon
