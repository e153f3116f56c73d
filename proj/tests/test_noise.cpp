#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "recon/noise.hpp"

#include <cmath>
#include <numeric>

using namespace recon;

namespace {

struct MeanSE {
    double mean, se;
};

MeanSE mean_se(const std::vector<double>& v) {
    double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double s2 = 0;
    for (double x : v) s2 += (x - m) * (x - m);
    s2 /= (v.size() - 1);
    return {m, std::sqrt(s2 / v.size())};
}

// Pair a sample's noise cells with the indicator of [0, b1] x [0, b2].
double pair_box(const GridField& cells, int m, double b1, double b2) {
    double h = cells.h();
    auto s = cells.sample(m);
    MultiIndex ext{};
    for (int i = 0; i < cells.dim(); ++i) ext[i] = cells.cells();
    double acc = 0;
    size_t f = 0;
    for_each_multi(cells.dim(), ext, [&](const MultiIndex& c) {
        // overlap fraction of cell with the box, per axis
        double w = 1.0;
        double lo0 = c[0] * h, lo1 = c[1] * h;
        w *= std::clamp((b1 - lo0) / h, 0.0, 1.0);
        w *= std::clamp((b2 - lo1) / h, 0.0, 1.0);
        acc += w * s[f++];
    });
    return acc;
}

}  // namespace

TEST_CASE("noise is reproducible and independent of evaluation order") {
    auto a = sample_white_noise(16, 1.0, 2, 4, 42);
    auto b = sample_white_noise(16, 1.0, 2, 4, 42);
    CHECK(a.cells.raw() == b.cells.raw());
    // direct counter access matches the materialized field, any order
    double sd = std::sqrt(a.cells.cell_volume());
    CHECK(a.cells.sample(3)[7] == white_noise_cell(42, 3, 7, sd));
    CHECK(a.cells.sample(0)[0] == white_noise_cell(42, 0, 0, sd));
    auto c = sample_white_noise(16, 1.0, 2, 4, 43);
    CHECK(c.cells.sample(0)[0] != a.cells.sample(0)[0]);
    // thread count cannot change the ensemble
    auto d4 = sample_white_noise(16, 1.0, 2, 4, 42, size_t(6) << 30, 4);
    CHECK(d4.cells.raw() == a.cells.raw());
}

TEST_CASE("memory cap raises a resource error") {
    CHECK_THROWS_AS(sample_white_noise(1024, 1.0, 2, 100000, 1), ResourceError);
}

TEST_CASE("white noise isometry and covariance") {
    const int M = 4000;
    auto ns = sample_white_noise(64, 1.0, 2, M, 1234);

    std::vector<double> full(M), half(M);
    for (int m = 0; m < M; ++m) {
        full[m] = pair_box(ns.cells, m, 1.0, 1.0);
        half[m] = pair_box(ns.cells, m, 0.5, 0.5);
    }

    auto mf = mean_se(full);
    CHECK(std::fabs(mf.mean) < 4 * mf.se);  // centered

    // Var[xi(1_{[0,1]^2})] = 1
    std::vector<double> sq(M);
    for (int m = 0; m < M; ++m) sq[m] = full[m] * full[m];
    auto vf = mean_se(sq);
    CHECK(std::fabs(vf.mean - 1.0) < 4 * vf.se);

    // Cov[xi(1_{[0,1/2]^2}), xi(1_{[0,1]^2})] = 1/4
    std::vector<double> prod(M);
    for (int m = 0; m < M; ++m) prod[m] = full[m] * half[m];
    auto cv = mean_se(prod);
    CHECK(std::fabs(cv.mean - 0.25) < 4 * cv.se);
}

TEST_CASE("isometry over a family of random piecewise-constant test functions") {
    const int M = 3000, N = 32;
    auto ns = sample_white_noise(N, 1.0, 2, M, 31415);
    for (int rep = 0; rep < 20; ++rep) {
        // random pc function on a coarse 4x4 partition
        std::array<double, 16> vals{};
        double l2sq = 0;
        for (int k = 0; k < 16; ++k) {
            vals[size_t(k)] = 2 * uniform_at(7, uint64_t(rep), uint64_t(k)) - 1;
            l2sq += vals[size_t(k)] * vals[size_t(k)] / 16.0;
        }
        std::vector<double> pairings(M, 0.0);
        for (int m = 0; m < M; ++m) {
            auto cells = ns.cells.sample(m);
            double acc = 0;
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j)
                    acc += vals[size_t((i * 4 / N) * 4 + (j * 4 / N))] * cells[size_t(i) * N + j];
            pairings[size_t(m)] = acc;
        }
        double var = 0;
        for (double v : pairings) var += v * v;
        var /= M;
        double se = l2sq * std::sqrt(2.0 / M);
        CAPTURE(rep);
        CHECK(std::fabs(var - l2sq) < 4 * se);
    }
}

TEST_CASE("dimension guard") {
    CHECK_THROWS_AS(Point(9), std::invalid_argument);
    CHECK_THROWS_AS(IndexSet(9), std::invalid_argument);
    CHECK_THROWS_AS(sample_white_noise(4, 1.0, 9, 1, 1), std::invalid_argument);
}

TEST_CASE("brownian sheet covariance and increment law") {
    const int M = 4000, N = 64;
    auto ns = sample_white_noise(N, 1.0, 2, M, 777);
    auto B = brownian_sheet(ns);

    MultiIndex i_half{}, i_full{}, i_q{}, i_3q{};
    i_half[0] = i_half[1] = N / 2;
    i_full[0] = i_full[1] = N;
    i_q[0] = i_q[1] = N / 4;
    i_3q[0] = i_3q[1] = 3 * N / 4;

    std::vector<double> cov(M), inc2(M);
    for (int m = 0; m < M; ++m) {
        cov[m] = B.at(m, i_half) * B.at(m, i_full);
        double inc = B.corner_increment(m, IndexSet::full(2), i_q, i_3q);
        inc2[m] = inc * inc;
    }
    auto c = mean_se(cov);
    CHECK(std::fabs(c.mean - 0.25) < 4 * c.se);  // E[B_s B_t] = prod min
    auto v = mean_se(inc2);
    CHECK(std::fabs(v.mean - 0.25) < 4 * v.se);  // Var box B = prod (t-s)

    // zero on the 0-faces
    MultiIndex edge{};
    edge[0] = 0;
    edge[1] = N / 3;
    CHECK(B.at(0, edge) == 0.0);
}

TEST_CASE("exact conditional expectation") {
    const int N = 16, M = 32;
    auto ns = sample_white_noise(N, 1.0, 2, M, 5);

    SUBCASE("functional supported in the future is killed") {
        // xi paired with indicator of (1/2,1]^2, conditioned on F^1_{(1/2,*)}
        NoiseFunctional Z = [&](std::span<const double> cells, int) {
            double acc = 0;
            for (int i = N / 2; i < N; ++i)
                for (int j = N / 2; j < N; ++j) acc += cells[size_t(i) * N + j];
            return acc;
        };
        FiltrationMask mask{IndexSet::of({1}, 2), Point{0.5, 0.5}};
        auto ce = conditional_expectation(Z, mask, ns, 0);
        for (double v : ce) CHECK(v == 0.0);
    }

    SUBCASE("masked cumulative sum reproduces E^1_s B_t") {
        // E^1_s B_t = B_{(s1, t2)} for s1 <= t1: oracle via the cumulative sum
        auto B = brownian_sheet(ns);
        MultiIndex it{};
        it[0] = 12;
        it[1] = 10;
        double s1 = 8.0 / N;
        NoiseFunctional Z = [&](std::span<const double> cells, int) {
            double acc = 0;
            for (int i = 0; i < it[0]; ++i)
                for (int j = 0; j < it[1]; ++j) acc += cells[size_t(i) * N + j];
            return acc;
        };
        FiltrationMask mask{IndexSet::of({1}, 2), Point{s1, 0.0}};
        auto ce = conditional_expectation(Z, mask, ns, 0);
        MultiIndex proj = it;
        proj[0] = 8;
        for (int m = 0; m < M; ++m) CHECK(ce[m] == doctest::Approx(B.at(m, proj)).epsilon(1e-12));
    }

    SUBCASE("directional conditionings commute bit-exactly and are idempotent") {
        NoiseFunctional Z = [&](std::span<const double> cells, int) {
            double acc = 0;
            for (size_t c = 0; c < cells.size(); ++c) acc += (1.0 + double(c % 7)) * cells[c];
            return acc;
        };
        FiltrationMask m1{IndexSet::of({1}, 2), Point{0.4, 0.0}};
        FiltrationMask m2{IndexSet::of({2}, 2), Point{0.0, 0.7}};
        FiltrationMask m12{IndexSet::full(2), Point{0.4, 0.7}};

        // E^1 E^2 = E^2 E^1 = E^{1,2}: composing exact masks is mask intersection
        auto apply = [&](const FiltrationMask& first, const FiltrationMask& second) {
            NoiseFunctional inner = [&](std::span<const double> cells, int m) {
                // evaluate E^first of Z on the modified cells: re-mask and eval
                GridField tmp(2, N, 1.0, 1, FieldKind::cell_density);
                std::copy(cells.begin(), cells.end(), tmp.sample(0).begin());
                NoiseSample one{std::move(tmp), ns.seed};
                return conditional_expectation(Z, first, one, 0)[0] + 0 * m;
            };
            return conditional_expectation(inner, second, ns, 0);
        };
        auto e12 = apply(m1, m2);
        auto e21 = apply(m2, m1);
        auto e_both = conditional_expectation(Z, m12, ns, 0);
        for (int m = 0; m < M; ++m) {
            CHECK(e12[m] == e21[m]);
            CHECK(e12[m] == e_both[m]);
        }
        // idempotence
        auto once = conditional_expectation(Z, m1, ns, 0);
        NoiseFunctional zmask = [&](std::span<const double> cells, int m) {
            GridField tmp(2, N, 1.0, 1, FieldKind::cell_density);
            std::copy(cells.begin(), cells.end(), tmp.sample(0).begin());
            NoiseSample one{std::move(tmp), ns.seed};
            return conditional_expectation(Z, m1, one, 0)[0] + 0 * m;
        };
        auto twice = conditional_expectation(zmask, m1, ns, 0);
        for (int m = 0; m < M; ++m) CHECK(once[m] == twice[m]);
    }
}

TEST_CASE("resampled conditional expectation is unbiased for a linear functional") {
    const int N = 8, M = 200;
    auto ns = sample_white_noise(N, 1.0, 2, M, 99);
    NoiseFunctional Z = [&](std::span<const double> cells, int) {
        double acc = 0;
        for (size_t c = 0; c < cells.size(); ++c) acc += cells[c];
        return acc;
    };
    FiltrationMask mask{IndexSet::of({1}, 2), Point{0.5, 0.0}};
    auto exact = conditional_expectation(Z, mask, ns, 0);
    auto sampled = conditional_expectation(Z, mask, ns, 256);
    // difference is the mean of 256 * (half the cells) fresh gaussians
    std::vector<double> diff(M);
    for (int m = 0; m < M; ++m) diff[m] = sampled[m] - exact[m];
    auto d = mean_se(diff);
    CHECK(std::fabs(d.mean) < 5 * std::sqrt(0.5 / 256.0));
}

TEST_CASE("deterministic drivers") {
    SUBCASE("smooth_poly box increment is exact") {
        auto Z = deterministic_driver(DriverKind::smooth_poly, 32, 1.0, 2);
        MultiIndex is{}, it{};
        is[0] = 4;
        is[1] = 8;
        it[0] = 20;
        it[1] = 28;
        double got = Z.corner_increment(0, IndexSet::full(2), is, it);
        double h = Z.h();
        CHECK(got == doctest::Approx((20 - 4) * h * (28 - 8) * h).epsilon(1e-12));
    }
    SUBCASE("fbm sheet has the product-covariance increment scaling") {
        const double H = 0.75;
        const int N = 128;
        auto Z = deterministic_driver(DriverKind::frozen_fbm_sheet, N, 1.0, 2, H);
        // spatial mean square of box increments at dyadic separations
        std::vector<double> xs, ys;
        for (int lev = 3; lev <= 6; ++lev) {
            int sep = N >> lev;
            double acc = 0;
            int cnt = 0;
            for (int i = 0; i + sep <= N; i += sep)
                for (int j = 0; j + sep <= N; j += sep) {
                    MultiIndex a{}, b{};
                    a[0] = i;
                    a[1] = j;
                    b[0] = i + sep;
                    b[1] = j + sep;
                    double inc = Z.corner_increment(0, IndexSet::full(2), a, b);
                    acc += inc * inc;
                    ++cnt;
                }
            xs.push_back(-double(lev));
            ys.push_back(0.5 * std::log2(acc / cnt));  // per realization, RMS
        }
        auto fit = fit_line(xs, ys);
        // slope of RMS box increment vs separation = 2H per the product law,
        // i.e. H per axis
        CHECK(fit.slope / 2 == doctest::Approx(H).epsilon(0.07));
        CHECK_THROWS_AS(deterministic_driver(DriverKind::frozen_fbm_sheet, 32, 1.0, 2, 0.3),
                        std::invalid_argument);
    }
    SUBCASE("driver is frozen: same config, same field") {
        auto a = deterministic_driver(DriverKind::frozen_fbm_sheet, 32, 1.0, 2, 0.75);
        auto b = deterministic_driver(DriverKind::frozen_fbm_sheet, 32, 1.0, 2, 0.75);
        CHECK(a.raw() == b.raw());
    }
}
