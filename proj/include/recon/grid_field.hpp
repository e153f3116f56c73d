#pragma once

// Monte Carlo ensembles of real values on a dyadic grid over [0,T]^d.
// Cell fields hold densities / increments per cell (N^d values), corner
// fields hold pointwise values at grid corners ((N+1)^d values, the faces
// through 0 included). Sample-major layout, row-major within a sample.

#include "recon/common.hpp"
#include "recon/increments.hpp"

#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace recon {

enum class FieldKind { cell_density, corner_values };

class GridField {
public:
    GridField() = default;
    GridField(int dim, int cells_per_axis, double T, int samples, FieldKind kind)
        : dim_(dim), n_(cells_per_axis), T_(T), samples_(samples), kind_(kind) {
        detail::require(dim >= 1 && dim <= kMaxDim, "GridField: bad dimension");
        detail::require(cells_per_axis >= 1, "GridField: bad resolution");
        detail::require(samples >= 1, "GridField: bad sample count");
        data_.assign(size_t(samples) * points_per_sample(), 0.0);
    }

    int dim() const { return dim_; }
    int cells() const { return n_; }
    double domain_size() const { return T_; }
    int samples() const { return samples_; }
    FieldKind kind() const { return kind_; }
    double h() const { return T_ / n_; }
    double cell_volume() const {
        double v = 1.0;
        for (int i = 0; i < dim_; ++i) v *= h();
        return v;
    }

    int axis_points() const { return kind_ == FieldKind::cell_density ? n_ : n_ + 1; }
    size_t points_per_sample() const {
        size_t p = 1;
        for (int i = 0; i < dim_; ++i) p *= size_t(axis_points());
        return p;
    }

    std::span<double> sample(int m) {
        return {data_.data() + size_t(m) * points_per_sample(), points_per_sample()};
    }
    std::span<const double> sample(int m) const {
        return {data_.data() + size_t(m) * points_per_sample(), points_per_sample()};
    }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    size_t flat(const MultiIndex& idx) const {
        size_t f = 0;
        for (int i = 0; i < dim_; ++i) f = f * size_t(axis_points()) + size_t(idx[i]);
        return f;
    }
    MultiIndex unflat(size_t f) const {
        MultiIndex idx{};
        for (int i = dim_ - 1; i >= 0; --i) {
            idx[i] = int(f % size_t(axis_points()));
            f /= size_t(axis_points());
        }
        return idx;
    }

    double at(int m, const MultiIndex& idx) const { return sample(m)[flat(idx)]; }
    double& at(int m, const MultiIndex& idx) { return sample(m)[flat(idx)]; }

    // Corner index of the grid point nearest to p (corner fields only).
    MultiIndex nearest_corner(const Point& p) const {
        MultiIndex idx{};
        for (int i = 0; i < dim_; ++i) {
            int k = int(std::lround(p[i] / h()));
            idx[i] = std::clamp(k, 0, n_);
        }
        return idx;
    }
    Point corner_point(const MultiIndex& idx) const {
        Point p(dim_);
        for (int i = 0; i < dim_; ++i) p[i] = idx[i] * h();
        return p;
    }

    // Rectangular increment of a corner field between integer corners.
    double corner_increment(int m, const IndexSet& theta, const MultiIndex& ix,
                            const MultiIndex& iy) const {
        double acc = 0.0;
        int k = theta.count();
        auto s = sample(m);
        for (const IndexSet& sub : subsets_of(theta)) {
            MultiIndex corner = ix;
            for (int i = 1; i <= dim_; ++i)
                if (sub.contains(i)) corner[i - 1] = iy[i - 1];
            double sign = ((k - sub.count()) % 2 == 0) ? 1.0 : -1.0;
            acc += sign * s[flat(corner)];
        }
        return acc;
    }

private:
    int dim_ = 1;
    int n_ = 1;
    double T_ = 1.0;
    int samples_ = 1;
    FieldKind kind_ = FieldKind::cell_density;
    std::vector<double> data_;
};

// One sample's cumulative corner sums: corner t = sum of cells <= t, zero on
// the faces through 0. `corners` must have (N+1)^d entries.
inline void cumulative_corners_sample(std::span<const double> cells, int d, int N,
                                      std::span<double> corners) {
    MultiIndex cell_ext{}, corner_ext{};
    size_t cpts = 1;
    for (int i = 0; i < d; ++i) {
        cell_ext[i] = N;
        corner_ext[i] = N + 1;
        cpts *= size_t(N + 1);
    }
    std::fill(corners.begin(), corners.end(), 0.0);
    auto corner_flat = [&](const MultiIndex& c) {
        size_t f = 0;
        for (int i = 0; i < d; ++i) f = f * size_t(N + 1) + size_t(c[i]);
        return f;
    };
    size_t src_flat = 0;
    for_each_multi(d, cell_ext, [&](const MultiIndex& c) {
        MultiIndex shifted = c;
        for (int i = 0; i < d; ++i) ++shifted[i];
        corners[corner_flat(shifted)] = cells[src_flat++];
    });
    for (int axis = 0; axis < d; ++axis) {
        for_each_multi(d, corner_ext, [&](const MultiIndex& c) {
            if (c[axis] == 0) return;
            MultiIndex prev = c;
            --prev[axis];
            corners[corner_flat(c)] += corners[corner_flat(prev)];
        });
    }
}

// Corner field of cumulative sums over the whole ensemble.
inline GridField cumulative_corners(const GridField& cells) {
    detail::require(cells.kind() == FieldKind::cell_density,
                    "cumulative_corners: expected a cell field");
    const int d = cells.dim(), N = cells.cells();
    GridField out(d, N, cells.domain_size(), cells.samples(), FieldKind::corner_values);
    for (int m = 0; m < cells.samples(); ++m)
        cumulative_corners_sample(cells.sample(m), d, N, out.sample(m));
    return out;
}

// Sum of cells in the half-open index box [lo, hi) read off a cumulative
// corner field (inclusion-exclusion over the 2^d corners).
inline double box_sum(const GridField& cum, int m, const MultiIndex& lo,
                      const MultiIndex& hi) {
    return cum.corner_increment(m, IndexSet::full(cum.dim()), lo, hi);
}

}  // namespace recon
