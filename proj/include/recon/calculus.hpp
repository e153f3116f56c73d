#pragma once

// Composition, scalar multiplication, Young and Ito/Walsh products, interior
// primitives and the integration map. Products of fields with distributions
// are exposed as germs for the reconstruction engine; with the Haar default
// everything also has an exact grid path via cell masses (left-point rule),
// and the wavelet-limit path is cross-checked against it.

#include "recon/reconstruction.hpp"

#include <cmath>

namespace recon {

inline constexpr int kMomentInf = 1 << 20;

// A field with advisory class bookkeeping (never enforced semantics).
struct ClassifiedField {
    GridField field;  // corner values
    Point alpha, delta;
    int m = 2;  // moment order, kMomentInf for (essentially) bounded
    bool adapted = true;
};

inline int product_moment(int m, int n) {
    if (m >= kMomentInf) return n;
    if (n >= kMomentInf) return m;
    return int(1.0 / (1.0 / m + 1.0 / n));
}

// Pointwise g(u); the declared exponent drops to alpha*eps/d.
inline ClassifiedField compose(const std::function<double(double)>& g, double holder_eps,
                               const ClassifiedField& u) {
    detail::require(holder_eps > 0 && holder_eps <= 1, "compose: eps in (0,1]");
    ClassifiedField out = u;
    for (double& v : out.field.raw()) v = g(v);
    for (int i = 0; i < u.field.dim(); ++i)
        out.alpha[i] = u.alpha[i] * holder_eps / u.field.dim();
    return out;
}

// Pointwise product; moments combine by the Holder rule 1/k = 1/m + 1/n.
inline ClassifiedField scalar_multiply(const ClassifiedField& f, const ClassifiedField& u) {
    detail::require(f.field.dim() == u.field.dim() && f.field.cells() == u.field.cells(),
                    "scalar_multiply: grid mismatch");
    detail::require(f.field.samples() == u.field.samples() || f.field.samples() == 1 ||
                        u.field.samples() == 1,
                    "scalar_multiply: sample mismatch");
    const GridField& big = f.field.samples() >= u.field.samples() ? f.field : u.field;
    ClassifiedField out;
    out.field = big;
    out.adapted = f.adapted && u.adapted;
    out.m = product_moment(f.m, u.m);
    out.alpha = f.alpha;
    out.delta = f.delta;
    for (int i = 0; i < big.dim(); ++i) {
        out.alpha[i] = std::min(f.alpha[i], u.alpha[i]);
        out.delta[i] = std::min(f.delta[i], u.delta[i]);
    }
    for (int s = 0; s < big.samples(); ++s) {
        auto dst = out.field.sample(s);
        auto fs = f.field.sample(f.field.samples() == 1 ? 0 : s);
        auto us = u.field.sample(u.field.samples() == 1 ? 0 : s);
        for (size_t i = 0; i < dst.size(); ++i) dst[i] = fs[i] * us[i];
    }
    return out;
}

// ----------------------------------------------------------------------------
// Product germs
// ----------------------------------------------------------------------------

namespace calculus_detail {

// u frozen at the germ base point: nearest corner lookup, broadcast over samples.
inline double field_at(const GridField& u, int sample, const Point& x) {
    return u.at(u.samples() == 1 ? 0 : sample, u.nearest_corner(x));
}

}  // namespace calculus_detail

// (u . zeta)_x(psi) = u(x) zeta(psi) for a deterministic distribution zeta in
// C^beta. Refused outside the reconstruction hypotheses unless overridden.
inline Germ young_product(const ClassifiedField& u, const RandomDistribution& zeta,
                          bool override_hypotheses = false) {
    const int d = u.field.dim();
    detail::require(zeta.samples == 1, "young_product: zeta must be deterministic");
    if (!override_hypotheses) {
        for (int i = 0; i < d; ++i) {
            double beta = zeta.alpha[i];
            detail::require(u.alpha[i] + beta > -0.5,
                            "young_product: alpha + beta > -1/2 violated");
            detail::require(u.alpha[i] + beta + std::min(u.delta[i], 4.0) > 0,
                            "young_product: alpha + beta + delta > 0 violated");
        }
    }
    Germ F;
    F.dim = d;
    F.samples = u.field.samples();
    F.T = u.field.domain_size();
    F.adapted = u.adapted;
    F.martingale = u.delta[0] >= kDeltaInf;  // conditionals inherit u's gain
    GermClass cls;
    cls.alpha = zeta.alpha;
    cls.gamma = Point(d);
    cls.delta = u.delta;
    for (int i = 0; i < d; ++i) cls.gamma[i] = u.alpha[i] + zeta.alpha[i];
    F.declared = cls;
    auto uf = std::make_shared<GridField>(u.field);
    auto zf = std::make_shared<RandomDistribution>(zeta);
    F.evaluate = [uf, zf, d](const Point& x, const TestFunction& psi) {
        auto base = zf->pair(psi);
        std::vector<double> out(size_t(std::max(uf->samples(), 1)));
        for (int s = 0; s < uf->samples(); ++s)
            out[size_t(s)] = calculus_detail::field_at(*uf, s, x) * base[0];
        return out;
    };
    return F;
}

// (u . xi)_x(psi) = u(x) xi(psi): the Walsh/Ito product germ.
inline Germ ito_product(const ClassifiedField& u, const NoiseSample& noise) {
    detail::require(u.adapted, "ito_product: u must be adapted to the noise filtration");
    detail::require(u.field.samples() == noise.samples(),
                    "ito_product: sample count mismatch");
    const int d = u.field.dim();
    Germ F;
    F.dim = d;
    F.samples = noise.samples();
    F.T = u.field.domain_size();
    F.noise = &noise;
    F.adapted = true;
    F.martingale = true;
    F.mask_exact = true;  // every contributing xi-cell lies in the eta-future
    GermClass cls;
    cls.alpha = Point(d, -0.5);
    cls.delta = Point(d, kDeltaInf);
    cls.gamma = Point(d);
    for (int i = 0; i < d; ++i) cls.gamma[i] = -0.5 + u.alpha[i];
    F.declared = cls;

    auto uf = std::make_shared<GridField>(u.field);
    const GridField* cells = &noise.cells;
    F.evaluate = [uf, cells, d](const Point& x, const TestFunction& psi) {
        CellWeights cw = cell_weights(psi, cells->cells(), cells->domain_size());
        std::vector<double> out(size_t(cells->samples()));
        for (int s = 0; s < cells->samples(); ++s)
            out[size_t(s)] = calculus_detail::field_at(*uf, s, x) *
                             pair_cells_with_weights(cells->sample(s), cw, cells->cells(), d);
        return out;
    };
    // re-evaluation on overridden cells: u is rebuilt only if it is the sheet
    // itself or deterministic; callers needing more wire their own hook
    F.evaluate_cells = [uf, cells, d](const Point& x, const TestFunction& psi,
                                      std::span<const double> override_cells, int s) {
        CellWeights cw = cell_weights(psi, cells->cells(), cells->domain_size());
        return calculus_detail::field_at(*uf, s, x) *
               pair_cells_with_weights(override_cells, cw, cells->cells(), d);
    };
    return F;
}

// Ito product whose integrand is re-evaluated from the noise cells (needed
// for exact measurability and conditioning checks when u = g(B)-type).
inline Germ ito_product_rebuildable(
    const ClassifiedField& u, const NoiseSample& noise,
    std::function<double(std::span<const double>, int, const Point&)> u_from_cells) {
    Germ F = ito_product(u, noise);
    const GridField* cells = &noise.cells;
    const int d = u.field.dim();
    F.evaluate_cells = [cells, d, u_from_cells](const Point& x, const TestFunction& psi,
                                                std::span<const double> override_cells, int s) {
        CellWeights cw = cell_weights(psi, cells->cells(), cells->domain_size());
        return u_from_cells(override_cells, s, x) *
               pair_cells_with_weights(override_cells, cw, cells->cells(), d);
    };
    return F;
}

// ----------------------------------------------------------------------------
// Grid reconstructions (left-point rule)
// ----------------------------------------------------------------------------

// Cell masses of R(u . zeta): u at the lower-left corner times the cell mass
// of zeta. With zeta = xi this is the Walsh integrand.
inline RandomDistribution product_reconstruction_masses(const ClassifiedField& u,
                                                        const RandomDistribution& zeta) {
    const int d = u.field.dim(), N = zeta.masses->cells();
    detail::require(u.field.cells() == N, "product_reconstruction_masses: grid mismatch");
    int M = std::max(u.field.samples(), zeta.samples);
    GridField masses(d, N, u.field.domain_size(), M, FieldKind::cell_density);
    MultiIndex ext{};
    for (int i = 0; i < d; ++i) ext[i] = N;
    for (int s = 0; s < M; ++s) {
        auto dst = masses.sample(s);
        auto zs = zeta.masses->sample(zeta.samples == 1 ? 0 : s);
        auto us = u.field.sample(u.field.samples() == 1 ? 0 : s);
        size_t f = 0;
        for_each_multi(d, ext, [&](const MultiIndex& c) {
            // lower-left corner of cell c in the corner indexing
            size_t uflat = 0;
            for (int i = 0; i < d; ++i) uflat = uflat * size_t(N + 1) + size_t(c[i]);
            dst[f] = us[uflat] * zs[f];
            ++f;
        });
    }
    Point alpha(d), delta(d);
    for (int i = 0; i < d; ++i) {
        alpha[i] = zeta.alpha[i];
        delta[i] = std::min(u.delta[i], zeta.delta[i]);
    }
    return distribution_from_masses(std::move(masses), zeta.noise, alpha, delta,
                                    product_moment(u.m, zeta.m),
                                    zeta.martingale);
}

// ----------------------------------------------------------------------------
// Interior primitive and the integration map
// ----------------------------------------------------------------------------

struct InteriorPrimitive {
    std::vector<double> value;       // per-sample oint_s^t f(dy), wavelet route
    std::vector<double> direct;      // per-sample direct pairing with 1_(s,t]
    std::vector<int> levels;
    std::vector<double> increments;  // Cauchy log of the wavelet route
    double route_residual = 0.0;     // sup |wavelet route - direct pairing|
};

inline void check_interior_margin(const Point& s, const Point& t, double T, double eps = 0.5) {
    for (int i = 0; i < s.dim(); ++i) {
        detail::require(s[i] > 0 && t[i] < T && s[i] <= t[i],
                        "interior_primitive: needs 0 < s <= t < T");
        double w = eps * (t[i] - s[i]);
        if (!(s[i] - w >= -1e-12 || t[i] + w <= T + 1e-12))
            throw DomainError("interior_primitive: epsilon-margin violated");
    }
}

inline InteriorPrimitive interior_primitive(const RandomDistribution& f, const Point& s,
                                            const Point& t, const WaveletBasisD& basis,
                                            int n_max) {
    const int d = f.dim;
    check_interior_margin(s, t, f.T);
    for (int i = 0; i < d; ++i)
        detail::require(f.alpha[i] > -1.0, "interior_primitive: needs alpha > -1");

    InteriorPrimitive out;
    TestFunction ind = indicator(s, t);
    out.direct = f.pair(ind);

    // first level where every contributing wavelet stays inside the domain
    double margin = basis.T;
    for (int i = 0; i < d; ++i) margin = std::min({margin, s[i], basis.T - t[i]});
    int n0 = std::max(1, int(std::ceil(std::log2(basis.base.support_width * basis.T /
                                                 std::max(margin, 1e-12)))));
    detail::require(n0 <= n_max, "interior_primitive: no admissible level below n_max");

    std::vector<double> prev;
    for (int k = n0; k <= n_max; ++k) {
        TestFunction pn = basis.project(iso_level(d, k), ind);
        auto cur = f.pair(pn);
        if (!prev.empty()) {
            std::vector<double> diff(cur.size());
            for (size_t q = 0; q < cur.size(); ++q) diff[q] = cur[q] - prev[q];
            out.increments.push_back(lm_norm(diff, 2));
            out.levels.push_back(k);
        }
        prev = std::move(cur);
    }
    out.value = prev;
    for (size_t q = 0; q < out.value.size(); ++q)
        out.route_residual = std::max(out.route_residual,
                                      std::fabs(out.value[q] - out.direct[q]));
    return out;
}

struct Primitive {
    GridField field;                  // corner values, zero on the 0-boundary
    Point alpha, delta;               // declared class of the primitive
    int m = 2;
    double assembly_residual = -1.0;  // dyadic-assembly cross-check, when run
};

// Y(x) = int_0^x f: exact cumulative sums of the cell masses (grid shadow of
// the integration map). The dyadic wavelet assembly is cross-checked at a few
// corners by primitive_assembly_check below.
inline Primitive primitive(const RandomDistribution& f) {
    for (int i = 0; i < f.dim; ++i)
        detail::require(f.alpha[i] > -1.0, "primitive: needs alpha > -1");
    Primitive out;
    out.field = cumulative_corners(*f.masses);
    out.alpha = f.alpha;
    out.delta = f.delta;
    out.m = f.m;
    for (int i = 0; i < f.dim; ++i) out.alpha[i] += 1.0;
    return out;
}

// Dyadic + midpoint-split assembly of int_0^x f at one corner. The box
// [0,x] splits at u = x/2 into 2^d sub-boxes; on the axes touching 0 the
// segment [0,u] is decomposed into dyadic shells [u 2^-k, u 2^-k+1]. Every
// all-shell piece is strictly interior and goes through the wavelet limit;
// pieces touching a sub-shell tail are paired directly (sub-cell slivers).
inline std::vector<double> primitive_assembled_at(const RandomDistribution& f, const Point& x,
                                                  const WaveletBasisD& basis, int n_max,
                                                  int k_dyadic = 6) {
    const int d = f.dim;
    std::vector<double> acc(size_t(f.samples), 0.0);
    Point u(d);
    for (int i = 0; i < d; ++i) u[i] = 0.5 * x[i];

    struct Segment {
        double lo, hi;
        bool tail;
    };
    for (const IndexSet& theta : all_subsets(d)) {
        std::array<std::vector<Segment>, kMaxDim> segs;
        for (int i = 0; i < d; ++i) {
            if (theta.contains(i + 1)) {
                for (int k = 1; k <= k_dyadic; ++k)
                    segs[size_t(i)].push_back(
                        {u[i] * std::ldexp(1.0, -k), u[i] * std::ldexp(1.0, -k + 1), false});
                segs[size_t(i)].push_back({0.0, u[i] * std::ldexp(1.0, -k_dyadic), true});
            } else {
                segs[size_t(i)].push_back({u[i], x[i], false});
            }
        }
        MultiIndex ext{};
        for (int i = 0; i < d; ++i) ext[i] = int(segs[size_t(i)].size());
        for_each_multi(d, ext, [&](const MultiIndex& t) {
            Point lo(d), hi(d);
            bool any_tail = false, nonempty = true;
            for (int i = 0; i < d; ++i) {
                const Segment& sg = segs[size_t(i)][size_t(t[i])];
                lo[i] = sg.lo;
                hi[i] = sg.hi;
                any_tail = any_tail || sg.tail;
                nonempty = nonempty && hi[i] > lo[i];
            }
            if (!nonempty) return;
            if (any_tail) {
                auto tail = f.pair(indicator(lo, hi));
                for (size_t q = 0; q < acc.size(); ++q) acc[q] += tail[q];
            } else {
                auto piece = interior_primitive(f, lo, hi, basis, n_max);
                for (size_t q = 0; q < acc.size(); ++q) acc[q] += piece.value[q];
            }
        });
    }
    return acc;
}

// Cross-check the cumulative-sum primitive against the dyadic assembly at a
// few corners; returns the max per-sample residual.
inline double primitive_assembly_check(const RandomDistribution& f, const Primitive& Y,
                                       const WaveletBasisD& basis, int n_max,
                                       const std::vector<Point>& corners) {
    double worst = 0;
    for (const Point& x : corners) {
        auto asm_vals = primitive_assembled_at(f, x, basis, n_max);
        MultiIndex c = Y.field.nearest_corner(x);
        for (int s = 0; s < f.samples; ++s)
            worst = std::max(worst, std::fabs(asm_vals[size_t(s)] - Y.field.at(s, c)));
    }
    return worst;
}

}  // namespace recon
