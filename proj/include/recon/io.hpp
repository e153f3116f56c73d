#pragma once

// File formats: GridField <-> flat little-endian binary + JSON sidecar,
// wavelet basis dump/load, deterministic CSV tables, run manifests.

#include "recon/grid_field.hpp"
#include "recon/wavelets.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace recon {

using nlohmann::json;

namespace io_detail {
inline void write_doubles(const std::filesystem::path& p, std::span<const double> xs) {
    std::ofstream f(p, std::ios::binary);
    detail::require(f.good(), "io: cannot open output file");
    f.write(reinterpret_cast<const char*>(xs.data()),
            std::streamsize(xs.size() * sizeof(double)));
    detail::require(f.good(), "io: short write");
}

inline std::vector<double> read_doubles(const std::filesystem::path& p, size_t expect) {
    std::ifstream f(p, std::ios::binary);
    detail::require(f.good(), "io: cannot open input file");
    std::vector<double> xs(expect);
    f.read(reinterpret_cast<char*>(xs.data()), std::streamsize(expect * sizeof(double)));
    detail::require(size_t(f.gcount()) == expect * sizeof(double), "io: short read");
    return xs;
}

// fixed shortest-roundtrip formatting keeps CSV output byte-stable
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace io_detail

// ----------------------------------------------------------------------------
// GridField
// ----------------------------------------------------------------------------

inline void write_grid_field(const GridField& g, const std::filesystem::path& base,
                             uint64_t seed = 0) {
    json hdr;
    hdr["format"] = "grid-field-v1";
    hdr["dim"] = g.dim();
    hdr["cells_per_axis"] = g.cells();
    hdr["domain_size"] = g.domain_size();
    hdr["samples"] = g.samples();
    hdr["kind"] = g.kind() == FieldKind::cell_density ? "cell_density" : "corner_values";
    hdr["seed"] = seed;
    std::ofstream jf(base.string() + ".json");
    jf << hdr.dump(2) << "\n";
    io_detail::write_doubles(base.string() + ".bin", g.raw());
}

inline GridField read_grid_field(const std::filesystem::path& base) {
    std::ifstream jf(base.string() + ".json");
    detail::require(jf.good(), "read_grid_field: missing sidecar");
    json hdr = json::parse(jf);
    detail::require(hdr.at("format") == "grid-field-v1", "read_grid_field: bad format");
    FieldKind kind = hdr.at("kind") == "cell_density" ? FieldKind::cell_density
                                                      : FieldKind::corner_values;
    GridField g(hdr.at("dim"), hdr.at("cells_per_axis"), hdr.at("domain_size"),
                hdr.at("samples"), kind);
    g.raw() = io_detail::read_doubles(base.string() + ".bin", g.raw().size());
    return g;
}

// ----------------------------------------------------------------------------
// Wavelet basis dump/load: flat sample array + JSON header
// ----------------------------------------------------------------------------

inline void write_basis(const WaveletBasis1D& b, const std::filesystem::path& base) {
    json hdr;
    hdr["format"] = "wavelet-basis-v1";
    hdr["family"] = b.family == WaveletFamily::haar ? "haar" : "daubechies";
    hdr["vanishing_moments"] = b.r;
    hdr["depth"] = b.depth;
    hdr["shift"] = b.shift;
    hdr["support"] = {0.0, double(b.support_width)};
    hdr["scaling_taps"] = b.h;
    hdr["detail_taps"] = b.g;
    std::vector<size_t> offsets;
    std::vector<double> flat;
    for (int j = 0; j <= b.depth; ++j) {
        offsets.push_back(flat.size());
        flat.insert(flat.end(), b.phi_iter[size_t(j)].begin(), b.phi_iter[size_t(j)].end());
    }
    for (int j = 0; j <= b.depth; ++j) {
        offsets.push_back(flat.size());
        flat.insert(flat.end(), b.det_iter[size_t(j)].begin(), b.det_iter[size_t(j)].end());
    }
    offsets.push_back(flat.size());
    flat.insert(flat.end(), b.phi_points.begin(), b.phi_points.end());
    hdr["offsets"] = offsets;
    hdr["total"] = flat.size();
    std::ofstream jf(base.string() + ".json");
    jf << hdr.dump(2) << "\n";
    io_detail::write_doubles(base.string() + ".bin", flat);
}

inline WaveletBasis1D read_basis(const std::filesystem::path& base) {
    std::ifstream jf(base.string() + ".json");
    detail::require(jf.good(), "read_basis: missing sidecar");
    json hdr = json::parse(jf);
    detail::require(hdr.at("format") == "wavelet-basis-v1", "read_basis: bad format");
    WaveletBasis1D b;
    b.family = hdr.at("family") == "haar" ? WaveletFamily::haar : WaveletFamily::daubechies;
    b.r = hdr.at("vanishing_moments");
    b.depth = hdr.at("depth");
    b.shift = hdr.at("shift");
    b.h = hdr.at("scaling_taps").get<std::vector<double>>();
    b.g = hdr.at("detail_taps").get<std::vector<double>>();
    b.support_width = int(b.h.size()) - 1;
    std::vector<size_t> offsets = hdr.at("offsets").get<std::vector<size_t>>();
    auto flat = io_detail::read_doubles(base.string() + ".bin", hdr.at("total"));
    auto slice = [&](size_t a, size_t bnd) {
        return std::vector<double>(flat.begin() + std::ptrdiff_t(a),
                                   flat.begin() + std::ptrdiff_t(bnd));
    };
    b.phi_iter.resize(size_t(b.depth) + 1);
    b.det_iter.resize(size_t(b.depth) + 1);
    size_t k = 0;
    for (int j = 0; j <= b.depth; ++j, ++k)
        b.phi_iter[size_t(j)] = slice(offsets[k], offsets[k + 1]);
    for (int j = 0; j <= b.depth; ++j, ++k)
        b.det_iter[size_t(j)] = slice(offsets[k], offsets[k + 1]);
    b.phi_points = slice(offsets[k], flat.size());
    return b;
}

// ----------------------------------------------------------------------------
// CSV tables
// ----------------------------------------------------------------------------

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    void row(const std::vector<std::string>& cells) {
        detail::require(cells.size() == header_.size(), "csv: row width mismatch");
        rows_.push_back(cells);
    }
    void row_values(const std::vector<double>& vals) {
        std::vector<std::string> cells;
        for (double v : vals) cells.push_back(io_detail::fmt(v));
        row(cells);
    }

    void write(const std::filesystem::path& p) const {
        std::ofstream f(p);
        detail::require(f.good(), "csv: cannot open output");
        for (size_t i = 0; i < header_.size(); ++i)
            f << header_[i] << (i + 1 < header_.size() ? "," : "\n");
        for (const auto& r : rows_) {
            for (size_t i = 0; i < r.size(); ++i) f << r[i] << (i + 1 < r.size() ? "," : "\n");
        }
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline std::string fmt_double(double v) { return io_detail::fmt(v); }

}  // namespace recon
