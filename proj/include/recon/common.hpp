#pragma once

// Small fixed-capacity point / index-set algebra shared by every module.
// Dimensions are bounded at kMaxDim: the corner sums below cost 2^d
// evaluations, so higher d would be a footgun rather than a feature.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace recon {

inline constexpr int kMaxDim = 8;

namespace detail {
inline void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}
}  // namespace detail

// ----------------------------------------------------------------------------
// IndexSet: subset of {1,...,d}, stored as a bitmask over 0-based axes.
// ----------------------------------------------------------------------------

class IndexSet {
public:
    IndexSet() = default;
    explicit IndexSet(int dim, unsigned mask = 0u) : dim_(dim), mask_(mask) {
        detail::require(dim >= 1 && dim <= kMaxDim, "IndexSet: dimension out of range");
        detail::require(mask < (1u << dim), "IndexSet: member outside {1,...,d}");
    }

    static IndexSet empty(int dim) { return IndexSet(dim, 0u); }
    static IndexSet full(int dim) { return IndexSet(dim, (1u << dim) - 1u); }
    static IndexSet single(int dim, int axis) {
        detail::require(axis >= 1 && axis <= dim, "IndexSet: axis out of range");
        return IndexSet(dim, 1u << (axis - 1));
    }
    static IndexSet of(std::initializer_list<int> axes, int dim) {
        unsigned m = 0;
        for (int a : axes) {
            detail::require(a >= 1 && a <= dim, "IndexSet: axis out of range");
            m |= 1u << (a - 1);
        }
        return IndexSet(dim, m);
    }

    int dim() const { return dim_; }
    unsigned mask() const { return mask_; }
    int count() const { return __builtin_popcount(mask_); }
    bool empty_set() const { return mask_ == 0; }
    bool contains(int axis) const { return (mask_ >> (axis - 1)) & 1u; }

    IndexSet complement() const { return IndexSet(dim_, ~mask_ & ((1u << dim_) - 1u)); }
    IndexSet unite(const IndexSet& o) const { return IndexSet(dim_, mask_ | o.mask_); }
    IndexSet intersect(const IndexSet& o) const { return IndexSet(dim_, mask_ & o.mask_); }
    IndexSet minus(const IndexSet& o) const { return IndexSet(dim_, mask_ & ~o.mask_); }
    bool disjoint(const IndexSet& o) const { return (mask_ & o.mask_) == 0; }
    bool subset_of(const IndexSet& o) const { return (mask_ & ~o.mask_) == 0; }
    bool operator==(const IndexSet& o) const { return dim_ == o.dim_ && mask_ == o.mask_; }

    // Members in ascending axis order (1-based).
    std::vector<int> members() const {
        std::vector<int> out;
        for (int i = 1; i <= dim_; ++i)
            if (contains(i)) out.push_back(i);
        return out;
    }

    std::string str() const {
        std::string s = "{";
        bool first = true;
        for (int a : members()) {
            if (!first) s += ",";
            s += std::to_string(a);
            first = false;
        }
        return s + "}";
    }

private:
    int dim_ = 1;
    unsigned mask_ = 0;
};

// All subsets of `s`, ascending in bitmask value. The fixed order also fixes
// floating-point summation order wherever these drive corner sums.
inline std::vector<IndexSet> subsets_of(const IndexSet& s) {
    std::vector<IndexSet> out;
    unsigned m = s.mask();
    out.reserve(1u << s.count());
    for (unsigned sub = 0;; sub = (sub - m) & m) {
        out.push_back(IndexSet(s.dim(), sub));
        if (sub == m) break;
    }
    std::sort(out.begin(), out.end(),
              [](const IndexSet& a, const IndexSet& b) { return a.mask() < b.mask(); });
    return out;
}

inline std::vector<IndexSet> all_subsets(int dim) {
    return subsets_of(IndexSet::full(dim));
}

// ----------------------------------------------------------------------------
// Point: runtime-dimension point in [0,T]^d with inline storage.
// ----------------------------------------------------------------------------

class Point {
public:
    Point() = default;
    explicit Point(int dim, double fill = 0.0) : dim_(dim) {
        detail::require(dim >= 1 && dim <= kMaxDim, "Point: dimension out of range");
        v_.fill(0.0);
        for (int i = 0; i < dim; ++i) v_[i] = fill;
    }
    Point(std::initializer_list<double> coords) : dim_(int(coords.size())) {
        detail::require(dim_ >= 1 && dim_ <= kMaxDim, "Point: dimension out of range");
        v_.fill(0.0);
        int i = 0;
        for (double c : coords) v_[i++] = c;
    }

    int dim() const { return dim_; }
    double operator[](int i) const { return v_[i]; }
    double& operator[](int i) { return v_[i]; }

    bool operator==(const Point& o) const {
        if (dim_ != o.dim_) return false;
        for (int i = 0; i < dim_; ++i)
            if (v_[i] != o.v_[i]) return false;
        return true;
    }

    std::string str() const {
        std::string s = "(";
        for (int i = 0; i < dim_; ++i) {
            if (i) s += ",";
            s += std::to_string(v_[i]);
        }
        return s + ")";
    }

private:
    std::array<double, kMaxDim> v_{};
    int dim_ = 0;
};

using RealField = std::function<double(const Point&)>;

using MultiIndex = std::array<int, kMaxDim>;

// Row-major visit of the box {0..extents[i]-1}^d.
template <typename Fn>
inline void for_each_multi(int dim, const MultiIndex& extents, Fn&& fn) {
    MultiIndex idx{};
    while (true) {
        fn(idx);
        int axis = dim - 1;
        while (axis >= 0) {
            if (++idx[axis] < extents[axis]) break;
            idx[axis] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
}

// Axis-aligned box, used for test-function supports and domains.
struct Box {
    Point lo, hi;
    int dim() const { return lo.dim(); }
    bool contains(const Point& p) const {
        for (int i = 0; i < dim(); ++i)
            if (p[i] < lo[i] || p[i] > hi[i]) return false;
        return true;
    }
    bool inside(const Box& outer) const {
        for (int i = 0; i < dim(); ++i)
            if (lo[i] < outer.lo[i] || hi[i] > outer.hi[i]) return false;
        return true;
    }
    double volume() const {
        double v = 1.0;
        for (int i = 0; i < dim(); ++i) v *= (hi[i] - lo[i]);
        return v;
    }
};

inline Box unit_box(int dim, double T = 1.0) {
    return Box{Point(dim, 0.0), Point(dim, T)};
}

// Least-squares fit of y = slope*x + intercept, with R^2.
struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int npoints = 0;
    std::vector<double> xs, ys;
};

inline RateFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    detail::require(xs.size() == ys.size(), "fit_line: size mismatch");
    RateFit f;
    f.npoints = int(xs.size());
    f.xs = xs;
    f.ys = ys;
    if (f.npoints < 2) return f;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < f.npoints; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    double n = f.npoints;
    double den = n * sxx - sx * sx;
    if (den == 0) return f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_tot = syy - sy * sy / n;
    double ss_res = 0;
    for (int i = 0; i < f.npoints; ++i) {
        double r = ys[i] - (f.slope * xs[i] + f.intercept);
        ss_res += r * r;
    }
    f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

}  // namespace recon
