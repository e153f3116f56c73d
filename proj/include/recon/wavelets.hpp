#pragma once

// Compactly supported orthonormal wavelet systems (Haar, Daubechies-N).
//
// Representation: the level-n scaling/detail function is the dilate of the
// cascade iterate of depth J-n, so every represented basis function expands
// exactly, through the two-scale taps, into box functions on the common
// absolute lattice of width 2^-J. All wavelet-wavelet inner products are
// then exact tap algebra: orthonormality, the cross-level Kronecker pattern
// and the two-level scalar products hold to roundoff at any depth. Deeper
// iterates approximate the true scaling function better, which is what the
// pairings against smooth test functions see.
//
// Daubechies filters come from spectral factorization of the half-band
// polynomial (Durand-Kerner roots of the binomial polynomial).

#include "recon/common.hpp"
#include "recon/test_function.hpp"

#include <cmath>
#include <complex>

namespace recon {

enum class WaveletFamily { haar, daubechies };

namespace wavelet_detail {

// Roots of a complex-coefficient polynomial via Durand-Kerner, Newton-polished.
inline std::vector<std::complex<double>> poly_roots(std::vector<std::complex<double>> c) {
    using cd = std::complex<double>;
    while (c.size() > 1 && std::abs(c.back()) == 0.0) c.pop_back();
    int n = int(c.size()) - 1;
    if (n <= 0) return {};
    for (auto& x : c) x /= c[n];
    auto eval = [&](cd z, cd& dp) {
        cd p = c[size_t(n)];
        dp = 0;
        for (int k = n - 1; k >= 0; --k) {
            dp = dp * z + p;
            p = p * z + c[size_t(k)];
        }
        return p;
    };
    std::vector<cd> r(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) r[size_t(k)] = std::pow(cd(0.4, 0.9), k + 1);
    for (int it = 0; it < 400; ++it) {
        double worst = 0;
        for (int k = 0; k < n; ++k) {
            cd dp;
            cd num = eval(r[size_t(k)], dp);
            cd den = 1;
            for (int j = 0; j < n; ++j)
                if (j != k) den *= (r[size_t(k)] - r[size_t(j)]);
            cd step = num / den;
            r[size_t(k)] -= step;
            worst = std::max(worst, std::abs(step));
        }
        if (worst < 1e-14) break;
    }
    for (int k = 0; k < n; ++k) {
        for (int it = 0; it < 8; ++it) {
            cd dp;
            cd p = eval(r[size_t(k)], dp);
            if (std::abs(dp) == 0.0) break;
            r[size_t(k)] -= p / dp;
        }
    }
    return r;
}

// Daubechies-N scaling filter, 2N taps summing to sqrt(2).
inline std::vector<double> daubechies_filter(int N) {
    using cd = std::complex<double>;
    // P(y) = sum_{k<N} binom(N-1+k, k) y^k
    std::vector<cd> P(static_cast<size_t>(N));
    double binom = 1.0;
    for (int k = 0; k < N; ++k) {
        P[size_t(k)] = binom;
        binom = binom * double(N + k) / double(k + 1);
    }
    auto yroots = poly_roots(P);

    // y-root -> z^2 - (2-4y) z + 1 = 0; keep the root inside the unit disk
    std::vector<cd> zin;
    for (cd y : yroots) {
        cd s = 2.0 - 4.0 * y;
        cd disc = std::sqrt(s * s - 4.0);
        cd z1 = 0.5 * (s + disc), z2 = 0.5 * (s - disc);
        zin.push_back(std::abs(z1) < 1.0 ? z1 : z2);
    }

    // m0(z) = ((1+z)/2)^N prod (z - z_j)/(1 - z_j); h_m = sqrt(2) [z^m] m0
    std::vector<cd> coef = {1.0};
    auto mul = [&](cd a0, cd a1) {
        std::vector<cd> out(coef.size() + 1, cd(0));
        for (size_t i = 0; i < coef.size(); ++i) {
            out[i] += coef[i] * a0;
            out[i + 1] += coef[i] * a1;
        }
        coef = std::move(out);
    };
    for (int k = 0; k < N; ++k) mul(0.5, 0.5);
    for (cd zj : zin) mul(-zj / (1.0 - zj), 1.0 / (1.0 - zj));

    std::vector<double> h(coef.size());
    for (size_t i = 0; i < coef.size(); ++i) h[i] = std::sqrt(2.0) * coef[i].real();
    double s = 0;
    for (double x : h) s += x;
    for (double& x : h) x *= std::sqrt(2.0) / s;
    return h;
}

}  // namespace wavelet_detail

// ----------------------------------------------------------------------------
// 1-D basis
// ----------------------------------------------------------------------------

struct WaveletBasis1D {
    WaveletFamily family = WaveletFamily::haar;
    int r = 1;               // vanishing moments of the detail function
    int depth = 14;          // J: absolute lattice width 2^-J
    double shift = 0.0;      // translation applied to the standard construction
    int support_width = 1;   // functions supported on [0, support_width]

    std::vector<double> h, g;                    // scaling / detail taps
    std::vector<std::vector<double>> phi_iter;   // j = 0..J, pc cells of width 2^-j
    std::vector<std::vector<double>> det_iter;   // j = 1..J, from phi_iter[j-1]
    std::vector<double> phi_points;              // exact values at k 2^-J

    int max_level() const { return depth - 2; }
    double lattice_width() const { return std::ldexp(1.0, -depth); }

    // refinement / detail coefficients at half-integer offsets
    double a(double k) const {
        double m = 2.0 * k;
        int mi = int(std::lround(m));
        if (std::fabs(m - mi) > 1e-12 || mi < 0 || mi >= int(h.size())) return 0.0;
        return h[size_t(mi)];
    }
    double b(double k) const {
        double m = 2.0 * k;
        int mi = int(std::lround(m));
        if (std::fabs(m - mi) > 1e-12 || mi < 0 || mi >= int(g.size())) return 0.0;
        return g[size_t(mi)];
    }

    const std::vector<double>& iterate_for_level(int n, bool detail_fn) const {
        if (n < 0 || n > max_level())
            throw ResolutionError("wavelet level out of range for sampled depth J");
        return detail_fn ? det_iter[size_t(depth - n)] : phi_iter[size_t(depth - n)];
    }

    // L^2-normalized factor at level n on a domain of size T:
    // w = T 2^-n, value w^{-1/2} phi((t-y)/w), pc on absolute cells T 2^-J.
    Axis1D level_axis(int n, double y, double T, bool detail_fn) const {
        const auto& it = iterate_for_level(n, detail_fn);
        double w = T * std::ldexp(1.0, -n);
        double s = 1.0 / std::sqrt(w);
        std::vector<double> vals(it.size());
        for (size_t i = 0; i < it.size(); ++i) vals[i] = s * it[i];
        double dx = w * std::ldexp(1.0, -(depth - n));  // = T 2^-J
        return Axis1D::piecewise(y, dx, std::move(vals));
    }
    Axis1D scaling_axis(int n, double y, double T = 1.0) const {
        return level_axis(n, y, T, false);
    }
    Axis1D detail_axis(int n, double y, double T = 1.0) const {
        return level_axis(n, y, T, true);
    }
};

// Cascade construction. Iterate j lives on cells of width 2^-j over
// [0, support_width]; the refinement step is exact piecewise-constant algebra.
inline WaveletBasis1D build_basis(WaveletFamily family, int r, int depth = 14) {
    detail::require(depth >= 6 && depth <= 20, "build_basis: depth out of range");
    WaveletBasis1D b;
    b.family = family;
    b.r = r;
    b.depth = depth;

    if (family == WaveletFamily::haar) {
        detail::require(r == 1, "build_basis: Haar provides exactly one vanishing moment");
        b.h = {std::sqrt(0.5), std::sqrt(0.5)};
    } else {
        detail::require(r >= 2 && r <= 10,
                        "build_basis: Daubechies order (vanishing moments) must be in 2..10");
        b.h = wavelet_detail::daubechies_filter(r);
    }
    const int L = int(b.h.size());
    const int W = b.support_width = L - 1;
    const int J = depth;
    b.g.resize(size_t(L));
    for (int m = 0; m < L; ++m) b.g[size_t(m)] = ((m % 2) ? -1.0 : 1.0) * b.h[size_t(L - 1 - m)];

    const double s2 = std::sqrt(2.0);
    b.phi_iter.resize(size_t(J) + 1);
    b.det_iter.resize(size_t(J) + 1);
    if (family == WaveletFamily::haar) {
        // drift-free: the cascade is stationary at the box, cells exactly +-1
        for (int j = 0; j <= J; ++j) {
            b.phi_iter[size_t(j)].assign(size_t(1) << j, 1.0);
            if (j >= 1) {
                auto& det = b.det_iter[size_t(j)];
                det.assign(size_t(1) << j, 1.0);
                for (size_t c = det.size() / 2; c < det.size(); ++c) det[c] = -1.0;
            }
        }
        b.phi_points.assign((size_t(W) << J) + 1, 1.0);
        b.phi_points.back() = 0.0;
        return b;
    }
    b.phi_iter[0].assign(size_t(W), 0.0);
    b.phi_iter[0][0] = 1.0;  // box on [0,1)
    for (int j = 0; j < J; ++j) {
        const auto& src = b.phi_iter[size_t(j)];
        auto& phi = b.phi_iter[size_t(j) + 1];
        auto& det = b.det_iter[size_t(j) + 1];
        phi.assign(size_t(W) << (j + 1), 0.0);
        det.assign(size_t(W) << (j + 1), 0.0);
        for (size_t c = 0; c < phi.size(); ++c) {
            double ap = 0, ad = 0;
            for (int m = 0; m < L; ++m) {
                long long idx = (long long)c - ((long long)m << j);
                if (idx >= 0 && idx < (long long)src.size()) {
                    ap += b.h[size_t(m)] * src[size_t(idx)];
                    ad += b.g[size_t(m)] * src[size_t(idx)];
                }
            }
            phi[c] = s2 * ap;
            det[c] = s2 * ad;
        }
    }

    // Exact point samples: integer eigenvector + dyadic refinement.
    {
        int n = W - 1;
        std::vector<double> v(size_t(n), 1.0 / n);
        for (int it = 0; it < 240; ++it) {
            std::vector<double> nv(size_t(n), 0.0);
            for (int j = 1; j <= n; ++j)
                for (int i = 1; i <= n; ++i) {
                    int m = 2 * j - i;
                    if (m >= 0 && m < L)
                        nv[size_t(j - 1)] += s2 * b.h[size_t(m)] * v[size_t(i - 1)];
                }
            double s = 0;
            for (double x : nv) s += x;
            for (double& x : nv) x /= s;
            v = std::move(nv);
        }
        std::vector<double> pts((size_t(W) << J) + 1, 0.0);
        for (int k = 1; k < W; ++k) pts[size_t(k) << J] = v[size_t(k - 1)];
        for (int j = 0; j < J; ++j) {
            long long step = 1ll << (J - j - 1);
            for (long long p = step; p < (long long)pts.size(); p += 2 * step) {
                double x = double(p) * std::ldexp(1.0, -J);
                double acc = 0;
                for (int m = 0; m < L; ++m) {
                    double q = 2 * x - m;
                    if (q < 0 || q > W) continue;
                    long long qi = (long long)std::llround(q * std::ldexp(1.0, J));
                    acc += s2 * b.h[size_t(m)] * pts[size_t(qi)];
                }
                pts[size_t(p)] = acc;
            }
        }
        b.phi_points = std::move(pts);
    }
    return b;
}

// ----------------------------------------------------------------------------
// Tensorized basis
// ----------------------------------------------------------------------------

struct WaveletBasisD {
    WaveletBasis1D base;
    int dim = 2;
    double T = 1.0;

    // phi-hat^{zeta,n}_y as a separable test function (zeta empty: all scaling).
    TestFunction hat_wavelet(const IndexSet& zeta, const MultiIndex& n, const Point& y) const {
        TestFunction out;
        out.smoothness = 0;
        for (int i = 0; i < dim; ++i)
            out.axes.push_back(base.level_axis(n[size_t(i)], y[i], T, zeta.contains(i + 1)));
        return out;
    }
    TestFunction scaling(const MultiIndex& n, const Point& y) const {
        return hat_wavelet(IndexSet::empty(dim), n, y);
    }

    // <phi-hat^{zeta,n}_y, psi> as a product of 1-D integrals.
    double inner_product(const IndexSet& zeta, const MultiIndex& n, const Point& y,
                         const TestFunction& psi) const {
        detail::require(psi.dim() == dim, "inner_product: dimension mismatch");
        double v = 1.0;
        for (int i = 0; i < dim && v != 0.0; ++i) {
            Axis1D wav = base.level_axis(n[size_t(i)], y[i], T, zeta.contains(i + 1));
            const Axis1D& pax = psi.axes[i];
            if (!pax.pc && wav.pc->dx > 0.5 * (pax.hi - pax.lo))
                throw ResolutionError("inner_product: depth J too shallow for level n");
            v *= wav.integral_times(pax);
        }
        return v;
    }

    // Positions y in Delta_n whose level-n support [y, y + W w] meets [lo, hi].
    std::vector<double> axis_positions(int n, double lo, double hi) const {
        double w = T * std::ldexp(1.0, -n);
        int W = base.support_width;
        long long kmin = (long long)std::ceil((lo - double(W) * w) / w - 1e-12);
        long long kmax = (long long)std::floor(hi / w + 1e-12);
        std::vector<double> out;
        for (long long k = kmin; k <= kmax; ++k) out.push_back(double(k) * w);
        return out;
    }

    // P_n psi axis by axis; the result is pc on the absolute lattice.
    TestFunction project(const MultiIndex& n, const TestFunction& psi) const {
        detail::require(psi.dim() == dim, "project: dimension mismatch");
        TestFunction out;
        out.smoothness = 0;
        for (int i = 0; i < dim; ++i) {
            int ni = n[size_t(i)];
            double w = T * std::ldexp(1.0, -ni);
            auto ys = axis_positions(ni, psi.axes[i].lo, psi.axes[i].hi);
            detail::require(!ys.empty(), "project: empty overlap");
            double dx = T * std::ldexp(1.0, -base.depth);
            double x0 = ys.front();
            size_t ncells =
                size_t(std::llround((ys.back() + base.support_width * w - x0) / dx));
            std::vector<double> vals(ncells, 0.0);
            for (double y : ys) {
                Axis1D wav = base.scaling_axis(ni, y, T);
                double c = wav.integral_times(psi.axes[i]);
                if (c == 0.0) continue;
                size_t off = size_t(std::llround((y - x0) / dx));
                const auto& wv = *wav.pc->vals;
                for (size_t k = 0; k < wv.size(); ++k) vals[off + k] += c * wv[k];
            }
            out.axes.push_back(Axis1D::piecewise(x0, dx, std::move(vals)));
        }
        return out;
    }
};

inline MultiIndex iso_level(int dim, int k) {
    MultiIndex n{};
    for (int i = 0; i < dim; ++i) n[size_t(i)] = k;
    return n;
}

}  // namespace recon
