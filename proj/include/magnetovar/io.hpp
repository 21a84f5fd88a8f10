#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "field_grid.hpp"

namespace magnetovar {

// 17 significant digits: doubles round-trip exactly.
inline std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    // Cells are already-formatted strings; numbers go through format_number.
    void add_row(std::vector<std::string> cells) {
        if (cells.size() != header_.size()) throw Error("csv row width does not match the header");
        rows_.push_back(std::move(cells));
    }
    std::size_t rows() const { return rows_.size(); }

    std::string str() const {
        std::string out;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

// Legacy VTK, ASCII, cell centres of the interior block as points:
//
//   # vtk DataFile Version 3.0
//   magnetovar <title>
//   ASCII
//   DATASET STRUCTURED_POINTS
//   DIMENSIONS <nx> <ny> <nz>
//   ORIGIN <x0> <y0> <z0>
//   SPACING <h> <h> <h>
//   POINT_DATA <nx*ny*nz>
//   VECTORS <name> double
//   <vx> <vy> <vz>      (x fastest, then y, then z)
inline std::string vtk_cell_vectors(const CellVectorField& f, const std::string& title, const std::string& name) {
    const GridSpec& g = f.grid;
    const int lo = g.pad + 1;
    const Vec3 o = g.cell_center(lo, lo, lo);
    std::ostringstream s;
    s << "# vtk DataFile Version 3.0\n"
      << "magnetovar " << title << "\n"
      << "ASCII\n"
      << "DATASET STRUCTURED_POINTS\n"
      << "DIMENSIONS " << g.nx << ' ' << g.ny << ' ' << g.nz << "\n"
      << "ORIGIN " << format_number(o.x) << ' ' << format_number(o.y) << ' ' << format_number(o.z) << "\n"
      << "SPACING " << format_number(g.h) << ' ' << format_number(g.h) << ' ' << format_number(g.h) << "\n"
      << "POINT_DATA " << std::size_t(g.nx) * g.ny * g.nz << "\n"
      << "VECTORS " << name << " double\n";
    for (int k = lo; k < lo + g.nz; ++k)
        for (int j = lo; j < lo + g.ny; ++j)
            for (int i = lo; i < lo + g.nx; ++i) {
                const Vec3 v = f.v[g.index(i, j, k)];
                s << format_number(v.x) << ' ' << format_number(v.y) << ' ' << format_number(v.z) << '\n';
            }
    return s.str();
}

// Output directory of one run. Files written through it are removed again by
// discard(), so a failed run leaves nothing half-written behind.
class OutputDir {
public:
    explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {}

    const std::filesystem::path& path() const { return dir_; }

    // Creates the directory and proves it writable; IoError otherwise.
    void prepare() {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec || !fs::is_directory(dir_)) throw IoError("cannot create output directory " + dir_.string());
        const fs::path probe = dir_ / ".magnetovar_write_probe";
        {
            std::ofstream f(probe);
            if (!f || !(f << "probe") || (f.close(), !f)) {
                fs::remove(probe, ec);
                throw IoError("output directory is not writable: " + dir_.string());
            }
        }
        fs::remove(probe, ec);
    }

    void write(const std::string& name, const std::string& content) {
        const std::filesystem::path p = dir_ / name;
        written_.push_back(p);
        std::ofstream f(p, std::ios::binary);
        f << content;
        f.close();
        if (!f) throw IoError("failed to write " + p.string());
    }

    const std::vector<std::filesystem::path>& written() const { return written_; }

    void discard() {
        std::error_code ec;
        for (const auto& p : written_) std::filesystem::remove(p, ec);
        written_.clear();
    }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> written_;
};

}  // namespace magnetovar
