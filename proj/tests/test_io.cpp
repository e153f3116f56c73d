#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "recon/io.hpp"
#include "recon/noise.hpp"

#include <filesystem>

using namespace recon;
namespace fs = std::filesystem;

namespace {
fs::path tmpdir() {
    auto p = fs::temp_directory_path() / "recon_io_test";
    fs::create_directories(p);
    return p;
}
}  // namespace

TEST_CASE("grid field round-trips bit-exactly") {
    auto ns = sample_white_noise(16, 1.0, 2, 5, 77);
    auto B = brownian_sheet(ns);
    auto base = tmpdir() / "sheet";
    write_grid_field(B, base, ns.seed);
    auto back = read_grid_field(base);
    CHECK(back.dim() == B.dim());
    CHECK(back.cells() == B.cells());
    CHECK(back.samples() == B.samples());
    CHECK(back.kind() == FieldKind::corner_values);
    CHECK(back.raw() == B.raw());
}

TEST_CASE("wavelet basis round-trips and reproduces pairings") {
    for (auto fam : {WaveletFamily::haar, WaveletFamily::daubechies}) {
        auto b = build_basis(fam, fam == WaveletFamily::haar ? 1 : 3, 10);
        auto base = tmpdir() / (fam == WaveletFamily::haar ? "haar" : "db3");
        write_basis(b, base);
        auto back = read_basis(base);
        CHECK(back.r == b.r);
        CHECK(back.depth == b.depth);
        CHECK(back.shift == b.shift);
        CHECK(back.h == b.h);
        CHECK(back.phi_points == b.phi_points);
        // pairings computed from the reloaded basis are identical
        Axis1D a1 = b.scaling_axis(2, 0.25);
        Axis1D a2 = back.scaling_axis(2, 0.25);
        Axis1D d1 = b.detail_axis(3, 0.5);
        Axis1D d2 = back.detail_axis(3, 0.5);
        CHECK(a1.integral_times(d1) == a2.integral_times(d2));
    }
}

TEST_CASE("csv writer is deterministic and validates row width") {
    CsvWriter w({"a", "b"});
    w.row_values({1.0, 0.1234567890123456789});
    w.row({"x", "y"});
    auto p1 = tmpdir() / "t1.csv";
    auto p2 = tmpdir() / "t2.csv";
    w.write(p1);
    w.write(p2);
    std::ifstream f1(p1), f2(p2);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    CHECK(s1.rfind("a,b\n", 0) == 0);
    CHECK_THROWS_AS(w.row({"only-one"}), std::invalid_argument);
}
