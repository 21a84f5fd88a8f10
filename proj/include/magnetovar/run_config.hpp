#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "minimize.hpp"
#include "thin_shell.hpp"

namespace magnetovar {

inline constexpr int kConfigVersion = 1;

// Flat `key = value` text; '#' starts a comment, keys may contain dots.
struct ConfigMap {
    std::map<std::string, std::string> values;
    std::map<std::string, int> lines;
    std::string source = "<config>";
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

inline ConfigMap parse_config_text(const std::string& text, const std::string& source = "<config>") {
    ConfigMap cfg;
    cfg.source = source;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected `key = value`");
        const std::string key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
        if (cfg.values.count(key))
            throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key `" + key + "`");
        cfg.values[key] = value;
        cfg.lines[key] = lineno;
    }
    return cfg;
}

inline ConfigMap load_config_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

struct RunConfig {
    std::optional<std::string> command;  // must match the command line when set
    Geometry geometry = Ellipsoid{};
    int cells_across = 16;
    SolverConfig solver;
    MaterialParams material;
    EnergyTerms terms;
    MinimizeConfig minimize;
    bool random_init = true;
    Vec3 init_direction{0, 0, 1};

    Surface surface = Sphere{};
    std::string m0 = "constant";  // constant | hedgehog | tangent
    Vec3 m0_direction{0, 0, 1};
    std::vector<double> eps_list{0.2, 0.1, 0.05};
    std::optional<double> delta;  // default_recovery_delta when unset
    bool bounds = true;
    StudyOptions study;

    int validate_samples = 3;
    int oracle_samples = 3;
    std::string out_dir = "magnetovar_out";
    bool write_vtk = true;
    std::uint64_t seed = 1;

    SurfaceVectorFn m0_fn() const {
        if (m0 == "constant") return constant_direction(m0_direction);
        if (m0 == "hedgehog") return hedgehog();
        if (m0 == "tangent") return principal_tangent();
        throw ConfigError("shell.m0 must be constant, hedgehog or tangent");
    }
    double recovery_delta() const { return delta ? *delta : default_recovery_delta(surface); }
};

namespace detail {

// Pulls typed values out of a ConfigMap; whatever is left at the end is an
// unknown key.
class ConfigReader {
public:
    explicit ConfigReader(const ConfigMap& m) : map_(m), left_(m.values) {}

    std::optional<std::string> take(const std::string& key) {
        auto it = left_.find(key);
        if (it == left_.end()) return std::nullopt;
        std::string v = it->second;
        left_.erase(it);
        return v;
    }

    void number(const std::string& key, double& out) {
        if (auto v = take(key)) out = parse_double(key, *v);
    }
    template <class Int>
    void integer(const std::string& key, Int& out) {
        if (auto v = take(key)) {
            Int x{};
            const auto r = std::from_chars(v->data(), v->data() + v->size(), x);
            if (r.ec != std::errc() || r.ptr != v->data() + v->size()) fail(key, "expected an integer, got `" + *v + "`");
            out = x;
        }
    }
    void boolean(const std::string& key, bool& out) {
        if (auto v = take(key)) {
            if (*v == "true" || *v == "1" || *v == "yes")
                out = true;
            else if (*v == "false" || *v == "0" || *v == "no")
                out = false;
            else
                fail(key, "expected true or false, got `" + *v + "`");
        }
    }
    void vec3(const std::string& key, Vec3& out) {
        if (auto v = take(key)) {
            const std::vector<double> xs = list(key, *v);
            if (xs.size() != 3) fail(key, "expected three comma-separated numbers");
            out = {xs[0], xs[1], xs[2]};
        }
    }
    void numbers(const std::string& key, std::vector<double>& out) {
        if (auto v = take(key)) out = v->empty() ? std::vector<double>{} : list(key, *v);
    }
    template <class Enum>
    void choice(const std::string& key, Enum& out, const std::map<std::string, Enum>& options) {
        if (auto v = take(key)) {
            auto it = options.find(*v);
            if (it == options.end()) {
                std::string all;
                for (const auto& [name, e] : options) all += (all.empty() ? "" : ", ") + name;
                fail(key, "expected one of " + all + ", got `" + *v + "`");
            }
            out = it->second;
        }
    }

    void finish() const {
        if (left_.empty()) return;
        const auto& [key, value] = *left_.begin();
        throw ConfigError(where(key) + "unknown key `" + key + "`");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ConfigError(where(key) + key + ": " + msg);
    }

private:
    std::string where(const std::string& key) const {
        auto it = map_.lines.find(key);
        return map_.source + (it != map_.lines.end() ? ":" + std::to_string(it->second) : "") + ": ";
    }
    double parse_double(const std::string& key, const std::string& s) const {
        double x = 0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(x))
            fail(key, "expected a number, got `" + s + "`");
        return x;
    }
    std::vector<double> list(const std::string& key, const std::string& s) const {
        std::vector<double> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
        return out;
    }

    const ConfigMap& map_;
    std::map<std::string, std::string> left_;
};

}  // namespace detail

// Builds a RunConfig; sub-configs are validated here except the solver
// tolerance, which `validate` treats as a warning.
inline RunConfig parse_run_config(const ConfigMap& map) {
    detail::ConfigReader r(map);
    RunConfig c;

    const auto version = r.take("config_version");
    if (!version) throw ConfigError(map.source + ": missing config_version");
    if (*version != std::to_string(kConfigVersion))
        throw ConfigError(map.source + ": unsupported config_version " + *version + " (expected " +
                          std::to_string(kConfigVersion) + ")");

    if (auto v = r.take("command")) {
        static const std::vector<std::string> known{"validate", "demag", "solve", "shell-study", "oracle"};
        if (std::find(known.begin(), known.end(), *v) == known.end()) r.fail("command", "unknown command `" + *v + "`");
        c.command = *v;
    }

    // surface, shared by shell geometries and the shell study
    std::string surface_kind = "sphere";
    if (auto v = r.take("surface.kind")) surface_kind = *v;
    Vec3 surface_center{};
    r.vec3("surface.center", surface_center);
    if (surface_kind == "sphere") {
        Sphere s{1.0, surface_center};
        r.number("surface.radius", s.radius);
        c.surface = s;
    } else if (surface_kind == "torus") {
        Torus t{1.0, 0.4, surface_center};
        r.number("surface.major", t.major);
        r.number("surface.minor", t.minor);
        c.surface = t;
    } else {
        r.fail("surface.kind", "expected sphere or torus");
    }
    validate(c.surface);

    std::string kind = "ellipsoid";
    if (auto v = r.take("geometry.kind")) kind = *v;
    Vec3 center{};
    r.vec3("geometry.center", center);
    if (kind == "ellipsoid") {
        Ellipsoid e{{1, 1, 1}, center};
        r.vec3("geometry.semi_axes", e.semi_axes);
        c.geometry = e;
    } else if (kind == "box") {
        Box b{{2, 2, 2}, center};
        r.vec3("geometry.extents", b.extents);
        c.geometry = b;
    } else if (kind == "shell") {
        Shell s{c.surface, 0.2};
        r.number("geometry.eps", s.eps);
        c.geometry = s;
    } else {
        r.fail("geometry.kind", "expected ellipsoid, box or shell");
    }
    validate(c.geometry);

    r.integer("grid.cells_across", c.cells_across);
    if (c.cells_across < 2) r.fail("grid.cells_across", "must be at least 2");

    r.number("solver.tol", c.solver.tol);
    r.integer("solver.max_iter", c.solver.max_iter);
    r.number("solver.pad_ratio", c.solver.pad_ratio);
    r.choice("solver.backend", c.solver.backend,
             {{"iterative", Backend::Iterative}, {"dense_oracle", Backend::DenseOracle}});
    r.choice("solver.preconditioner", c.solver.preconditioner,
             {{"spectral", Preconditioner::Spectral}, {"none", Preconditioner::None}});
    if (!(c.solver.tol > 0)) r.fail("solver.tol", "must be positive");
    if (c.solver.max_iter < 1) r.fail("solver.max_iter", "must be at least 1");
    if (!(c.solver.pad_ratio >= 0)) r.fail("solver.pad_ratio", "must be nonnegative");

    r.number("material.Q", c.material.Q);
    Vec3 axis = c.material.easy_axis, ha{};
    r.vec3("material.easy_axis", axis);
    if (!(norm(axis) > 0)) r.fail("material.easy_axis", "must be nonzero");
    c.material.easy_axis = normalized(axis);
    r.vec3("material.h_applied", ha);
    c.material.h_applied = ha;
    c.material.validate();

    r.boolean("energy.exchange", c.terms.exchange);
    r.boolean("energy.anisotropy", c.terms.anisotropy);
    r.boolean("energy.zeeman", c.terms.zeeman);
    r.boolean("energy.stray", c.terms.stray);

    r.choice("minimize.method", c.minimize.method,
             {{"projected_gradient", MinimizeMethod::ProjectedGradient},
              {"joint_alternating", MinimizeMethod::JointAlternating}});
    r.number("minimize.step", c.minimize.step);
    r.number("minimize.backtrack", c.minimize.backtrack);
    r.number("minimize.grad_tol", c.minimize.grad_tol);
    r.integer("minimize.max_iter", c.minimize.max_iter);
    r.integer("minimize.max_backtracks", c.minimize.max_backtracks);
    std::string init = "random";
    if (auto v = r.take("minimize.init")) init = *v;
    if (init != "random" && init != "uniform") r.fail("minimize.init", "expected random or uniform");
    c.random_init = init == "random";
    r.vec3("minimize.init_direction", c.init_direction);
    if (!(norm(c.init_direction) > 0)) r.fail("minimize.init_direction", "must be nonzero");
    c.minimize.validate();

    if (auto v = r.take("shell.m0")) c.m0 = *v;
    r.vec3("shell.m0_direction", c.m0_direction);
    (void)c.m0_fn();
    r.numbers("shell.eps_list", c.eps_list);
    for (std::size_t i = 0; i < c.eps_list.size(); ++i) {
        if (!(c.eps_list[i] > 0)) r.fail("shell.eps_list", "values must be positive");
        if (i > 0 && !(c.eps_list[i] < c.eps_list[i - 1])) r.fail("shell.eps_list", "must be strictly decreasing");
    }
    double delta = 0;
    r.number("shell.delta", delta);
    if (map.values.count("shell.delta")) {
        if (!(delta > 0 && delta < min_curvature_radius(c.surface)))
            r.fail("shell.delta", "must lie between 0 and the smallest curvature radius");
        c.delta = delta;
    }
    r.boolean("shell.bounds", c.bounds);
    r.integer("shell.grid_total", c.study.grid.total_cells);
    r.integer("shell.grid_pad", c.study.grid.pad_cells);
    r.number("shell.grid_margin", c.study.grid.margin);
    r.integer("shell.mesh_level", c.study.mesh_level);
    r.integer("shell.t_nodes", c.study.t_nodes);
    if (c.study.t_nodes < 2) r.fail("shell.t_nodes", "must be at least 2");

    r.integer("validate.samples", c.validate_samples);
    if (c.validate_samples < 1) r.fail("validate.samples", "must be at least 1");
    r.integer("oracle.samples", c.oracle_samples);
    if (c.oracle_samples < 1) r.fail("oracle.samples", "must be at least 1");
    if (auto v = r.take("output.dir")) c.out_dir = *v;
    r.boolean("output.vtk", c.write_vtk);
    r.integer("seed", c.seed);
    c.minimize.seed = c.seed;

    r.finish();
    return c;
}

}  // namespace magnetovar
