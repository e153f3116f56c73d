#pragma once

// Coordinate projections and rectangular increments of multiparameter
// functions, plus the combinatorial identities that the rest of the library
// leans on. Subsets are always enumerated in ascending bitmask order so every
// corner sum has a fixed floating-point evaluation order.

#include "recon/common.hpp"

#include <cmath>

namespace recon {

// pi^theta_x y: y with coordinates i in theta replaced by x_i.
inline Point project(const IndexSet& theta, const Point& x, const Point& y) {
    detail::require(x.dim() == y.dim() && theta.dim() == x.dim(),
                    "project: dimension mismatch");
    Point out = y;
    for (int i = 1; i <= theta.dim(); ++i)
        if (theta.contains(i)) out[i - 1] = x[i - 1];
    return out;
}

// Rectangular increment: sum over theta' of (-1)^{#(theta\theta')} f(pi^{theta'}_y x).
// Exactly 2^{#theta} evaluations of f; the empty set yields f(x).
inline double rect_increment(const IndexSet& theta, const Point& x, const Point& y,
                             const RealField& f) {
    detail::require(x.dim() == y.dim() && theta.dim() == x.dim(),
                    "rect_increment: dimension mismatch");
    double acc = 0.0;
    const int k = theta.count();
    for (const IndexSet& sub : subsets_of(theta)) {
        double sign = ((k - sub.count()) % 2 == 0) ? 1.0 : -1.0;
        acc += sign * f(project(sub, y, x));
    }
    return acc;
}

// Lemma: box^{theta1}_{x,y}(box^{theta2}_{.,y} f) = box^{theta1 u theta2}_{x,y} f
// for disjoint theta1, theta2. Verified pointwise to `tol`.
inline bool check_composition_identity(const IndexSet& theta1, const IndexSet& theta2,
                                       const Point& x, const Point& y, const RealField& f,
                                       double tol = 1e-12) {
    detail::require(theta1.disjoint(theta2), "composition identity: sets must be disjoint");
    RealField inner = [&](const Point& z) { return rect_increment(theta2, z, y, f); };
    double lhs = rect_increment(theta1, x, y, inner);
    double rhs = rect_increment(theta1.unite(theta2), x, y, f);
    return std::fabs(lhs - rhs) <= tol * std::max(1.0, std::fabs(rhs));
}

// Lemma: box^theta(f g) = sum over covers theta = theta1 u theta2 (ordered,
// not necessarily disjoint) of box^{theta1} f * box^{theta2} g.
inline bool check_product_identity(const IndexSet& theta, const Point& x, const Point& y,
                                   const RealField& f, const RealField& g,
                                   double tol = 1e-12) {
    RealField fg = [&](const Point& z) { return f(z) * g(z); };
    double lhs = rect_increment(theta, x, y, fg);
    double rhs = 0.0;
    for (const IndexSet& t1 : subsets_of(theta))
        for (const IndexSet& t2 : subsets_of(theta))
            if (t1.unite(t2) == theta)
                rhs += rect_increment(t1, x, y, f) * rect_increment(t2, x, y, g);
    return std::fabs(lhs - rhs) <= tol * std::max(1.0, std::fabs(lhs));
}

// One term of the shift expansion of box^theta_{x,y} f along eta.
struct ShiftTerm {
    double sign;       // +1 or -1
    Point base;        // pi^{eta1}_y x
    IndexSet indices;  // theta u eta2
};

// box^theta_{x,y} f = sum over eta = eta1 |_| eta2 of
//   (-1)^{#eta2} box^{theta u eta2}_{pi^{eta1}_y x, y} f.
// Terms come out in ascending bitmask order of eta2.
inline std::vector<ShiftTerm> shift_expand(const IndexSet& theta, const IndexSet& eta,
                                           const Point& x, const Point& y) {
    detail::require(theta.disjoint(eta), "shift_expand: sets must be disjoint");
    std::vector<ShiftTerm> terms;
    for (const IndexSet& eta2 : subsets_of(eta)) {
        IndexSet eta1 = eta.minus(eta2);
        double sign = (eta2.count() % 2 == 0) ? 1.0 : -1.0;
        terms.push_back(ShiftTerm{sign, project(eta1, y, x), theta.unite(eta2)});
    }
    return terms;
}

inline double eval_shift_terms(const std::vector<ShiftTerm>& terms, const Point& y,
                               const RealField& f) {
    double acc = 0.0;
    for (const ShiftTerm& t : terms) acc += t.sign * rect_increment(t.indices, t.base, y, f);
    return acc;
}

}  // namespace recon
