#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ergolab/geometry.hpp"

namespace ergolab {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// All CSV floats are serialized with 17 significant digits so reruns are
/// byte-identical and values round-trip exactly.
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (std::size_t c = 0; c < header.size(); ++c)
        out << header[c] << (c + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out << format_g17(row[c]) << (c + 1 < row.size() ? "," : "\n");
    }
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Curve CSV reader: accepts either (rho,z) or (s,rho,z) columns, with or
/// without a header line.
inline PlaneCurve read_curve_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open curve file " + path.string());
    PlaneCurve c;
    std::string line;
    bool first = true;
    int rho_col = 0, z_col = 1, ncol = 2;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (first) {
            first = false;
            bool header = false;
            for (auto& s : cells)
                if (!s.empty() && !std::isdigit(static_cast<unsigned char>(s[0])) &&
                    s[0] != '-' && s[0] != '+' && s[0] != '.')
                    header = true;
            if (header) {
                for (std::size_t k = 0; k < cells.size(); ++k) {
                    if (cells[k] == "rho") rho_col = int(k);
                    if (cells[k] == "z") z_col = int(k);
                }
                ncol = int(cells.size());
                continue;
            }
            if (cells.size() >= 3) {
                rho_col = 1;
                z_col = 2;
            }
            ncol = int(cells.size());
        }
        if (int(cells.size()) < ncol) throw IoError("ragged curve CSV: " + path.string());
        c.pts.emplace_back(std::stod(cells[rho_col]), std::stod(cells[z_col]));
    }
    if (c.pts.size() < 4) throw IoError("curve CSV has fewer than 4 points");
    c.closed = true;
    return c;
}

inline void write_curve_csv(const std::filesystem::path& path, const PlaneCurve& curve,
                            const std::vector<double>& delta_vals = {},
                            const std::vector<double>& delta1_vals = {}) {
    std::vector<std::string> header{"s", "rho", "z"};
    if (!delta_vals.empty()) header.push_back("delta");
    if (!delta1_vals.empty()) header.push_back("delta1");
    auto s = curve.arc_fractions();
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < curve.pts.size(); ++k) {
        std::vector<double> row{s[k], curve.pts[k].x(), curve.pts[k].y()};
        if (!delta_vals.empty()) row.push_back(delta_vals[k]);
        if (!delta1_vals.empty()) row.push_back(delta1_vals[k]);
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

}  // namespace ergolab
