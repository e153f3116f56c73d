#pragma once

// Random distributions and germs realized on the noise grid. A grid-backed
// distribution carries per-sample cell masses (mass ~ pairing with the cell
// indicator); pairing with a separable test function is then a weighted sum
// with per-axis weights, exact whenever the test function is piecewise
// constant on grid cells.

#include "recon/grid_field.hpp"
#include "recon/noise.hpp"
#include "recon/test_function.hpp"

#include <memory>
#include <optional>

namespace recon {

// Declared regularity class (per-axis exponents). delta at or above
// kDeltaInf stands for "infinite conditional gain" (martingale structure).
inline constexpr double kDeltaInf = 100.0;

struct GermClass {
    Point alpha, gamma, delta;
};

// Per-axis cell weights of a separable test function on the grid:
// w_i[k] = (1/h) int_{cell k} psi_i. Cell average of psi over a cell is the
// product of the axis weights.
struct CellWeights {
    int dim = 0;
    std::array<std::vector<double>, kMaxDim> w;  // one vector of length N per axis
    MultiIndex lo{}, hi{};                       // covered cell index range [lo, hi)

    bool empty() const {
        for (int i = 0; i < dim; ++i)
            if (lo[i] >= hi[i]) return true;
        return false;
    }
};

inline CellWeights cell_weights(const TestFunction& psi, int N, double T) {
    CellWeights cw;
    cw.dim = psi.dim();
    double h = T / N;
    for (int i = 0; i < cw.dim; ++i) {
        const Axis1D& ax = psi.axes[size_t(i)];
        int k0 = std::clamp(int(std::floor(ax.lo / h)), 0, N);
        int k1 = std::clamp(int(std::ceil(ax.hi / h)), 0, N);
        cw.lo[i] = k0;
        cw.hi[i] = k1;
        cw.w[size_t(i)].assign(size_t(N), 0.0);
        for (int k = k0; k < k1; ++k)
            cw.w[size_t(i)][size_t(k)] = ax.integral(k * h, (k + 1) * h) / h;
    }
    return cw;
}

// sum_cells mass(cell) * prod_i w_i[cell_i] for one sample's cell array.
inline double pair_cells_with_weights(std::span<const double> cells, const CellWeights& cw,
                                      int N, int dim) {
    if (dim == 2) {
        double acc = 0;
        for (int i = cw.lo[0]; i < cw.hi[0]; ++i) {
            double wi = cw.w[0][size_t(i)];
            if (wi == 0.0) continue;
            double row = 0;
            const double* base = cells.data() + size_t(i) * N;
            const double* w2 = cw.w[1].data();
            for (int j = cw.lo[1]; j < cw.hi[1]; ++j) row += base[j] * w2[j];
            acc += wi * row;
        }
        return acc;
    }
    MultiIndex ext{};
    for (int i = 0; i < dim; ++i) ext[i] = cw.hi[i] - cw.lo[i];
    for (int i = 0; i < dim; ++i)
        if (ext[i] <= 0) return 0.0;
    double acc = 0;
    for_each_multi(dim, ext, [&](const MultiIndex& off) {
        double w = 1.0;
        size_t flat = 0;
        for (int i = 0; i < dim; ++i) {
            int k = cw.lo[i] + off[i];
            w *= cw.w[size_t(i)][size_t(k)];
            flat = flat * size_t(N) + size_t(k);
        }
        acc += w * cells[flat];
    });
    return acc;
}

// ----------------------------------------------------------------------------
// RandomDistribution
// ----------------------------------------------------------------------------

struct RandomDistribution {
    int dim = 2;
    int samples = 1;
    double T = 1.0;
    const NoiseSample* noise = nullptr;  // set when the masses are noise functionals
    bool martingale = false;             // conditional pairings vanish for future-supported psi
    Point alpha, delta;                  // declared class (advisory metadata)
    int m = 2;

    // per-sample cell masses at grid resolution; mass(cell) = pairing with 1_cell
    std::shared_ptr<const GridField> masses;

    std::vector<double> pair(const TestFunction& psi) const {
        detail::require(masses != nullptr, "RandomDistribution: no grid masses");
        CellWeights cw = cell_weights(psi, masses->cells(), T);
        std::vector<double> out(static_cast<size_t>(samples));
        for (int s = 0; s < samples; ++s)
            out[size_t(s)] = pair_cells_with_weights(masses->sample(s), cw, masses->cells(), dim);
        return out;
    }

    // pairing of one sample with externally supplied cell masses
    double pair_cells(const TestFunction& psi, std::span<const double> cells) const {
        detail::require(masses != nullptr, "RandomDistribution: no grid masses");
        CellWeights cw = cell_weights(psi, masses->cells(), T);
        return pair_cells_with_weights(cells, cw, masses->cells(), dim);
    }
};

inline RandomDistribution distribution_from_masses(GridField masses, const NoiseSample* noise,
                                                   Point alpha, Point delta, int m = 2,
                                                   bool martingale = false) {
    RandomDistribution rd;
    rd.dim = masses.dim();
    rd.samples = masses.samples();
    rd.T = masses.domain_size();
    rd.noise = noise;
    rd.martingale = martingale;
    rd.alpha = alpha;
    rd.delta = delta;
    rd.m = m;
    rd.masses = std::make_shared<const GridField>(std::move(masses));
    return rd;
}

// White noise as a grid distribution: masses are the noise cells themselves.
inline RandomDistribution white_noise_distribution(const NoiseSample& ns) {
    GridField masses = ns.cells;  // copy; the distribution owns its masses
    int d = ns.dim();
    return distribution_from_masses(std::move(masses), &ns, Point(d, -0.5), Point(d, kDeltaInf),
                                    2, true);
}

// Mixed-derivative distribution of a corner field Z: cell mass = full
// rectangular increment of Z over the cell (per sample).
inline RandomDistribution mixed_derivative_distribution(const GridField& Z, double beta) {
    detail::require(Z.kind() == FieldKind::corner_values, "mixed_derivative: corner field");
    const int d = Z.dim(), N = Z.cells();
    GridField masses(d, N, Z.domain_size(), Z.samples(), FieldKind::cell_density);
    MultiIndex ext{};
    for (int i = 0; i < d; ++i) ext[i] = N;
    for (int s = 0; s < Z.samples(); ++s) {
        auto dst = masses.sample(s);
        size_t f = 0;
        for_each_multi(d, ext, [&](const MultiIndex& c) {
            MultiIndex hi = c;
            for (int i = 0; i < d; ++i) ++hi[i];
            dst[f++] = Z.corner_increment(s, IndexSet::full(d), c, hi);
        });
    }
    return distribution_from_masses(std::move(masses), nullptr, Point(d, beta - 1.0),
                                    Point(d, 0.0), 2, false);
}

// ----------------------------------------------------------------------------
// Germ
// ----------------------------------------------------------------------------

struct Germ {
    int dim = 2;
    int samples = 1;
    double T = 1.0;
    const NoiseSample* noise = nullptr;
    bool adapted = true;
    bool martingale = false;  // E^eta_x box^theta F(psi) = 0 for eta != {} and
                              // test functions supported in the eta-future of x
    bool mask_exact = false;  // zeroing eta-future cells computes those
                              // conditional expectations exactly (no diagonal
                              // quadratic terms in the masked cells)
    std::optional<GermClass> declared;

    std::function<std::vector<double>(const Point&, const TestFunction&)> evaluate;
    // one sample on overridden noise cells (resampling / masking route)
    std::function<double(const Point&, const TestFunction&, std::span<const double>, int)>
        evaluate_cells;
};

// box^theta_{x,y} F(psi) per sample, corner sum over germ evaluations.
inline std::vector<double> germ_rect_increment(const Germ& F, const IndexSet& theta,
                                               const Point& x, const Point& y,
                                               const TestFunction& psi) {
    std::vector<double> acc(size_t(F.samples), 0.0);
    const int k = theta.count();
    for (const IndexSet& sub : subsets_of(theta)) {
        double sign = ((k - sub.count()) % 2 == 0) ? 1.0 : -1.0;
        auto v = F.evaluate(project(sub, y, x), psi);
        for (size_t s = 0; s < acc.size(); ++s) acc[s] += sign * v[s];
    }
    return acc;
}

}  // namespace recon
