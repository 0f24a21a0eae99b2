// Command-line surface for the fractal toolkit: escape-scheme rasters, mapped
// sets via the inverse-map iteration, forward point clouds, ODE flows of point
// sets, box-counting dimension, grid comparison, and IFS oracle rasters.
//
// Exit codes: 0 success, 1 usage/configuration error, 2 compute error.
// Diagnostics go to stderr; data goes to files only.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fracdyn/analysis.hpp"
#include "fracdyn/fmi.hpp"
#include "fracdyn/flow.hpp"
#include "fracdyn/io.hpp"
#include "fracdyn/mapexpr.hpp"
#include "fracdyn/maps.hpp"
#include "fracdyn/schemes.hpp"

namespace {

using namespace fracdyn;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Option store: CLI11 parses argv into raw strings; config-file entries fill
// the gaps (command-line flags override file values). Typed conversion happens
// afterwards so error messages can name either the flag or the config line.
// ---------------------------------------------------------------------------

struct OptionSet {
    CLI::App* cmd = nullptr;
    std::map<std::string, std::string> raw;
    std::map<std::string, CLI::Option*> options;
    struct From {
        bool config = false;
        std::string path;
        long line = 0;
    };
    std::map<std::string, From> provided;

    CLI::Option* add(const std::string& name, const std::string& help) {
        auto* opt = cmd->add_option("--" + name, raw[name], help);
        options[name] = opt;
        return opt;
    }

    CLI::Option* add_flag(const std::string& name, const std::string& help) {
        auto* opt = cmd->add_flag_function(
            "--" + name, [this, name](std::int64_t) { raw[name] = "1"; }, help);
        options[name] = opt;
        return opt;
    }

    void finalize_from_cli() {
        for (auto& [name, opt] : options)
            if (opt->count() > 0) provided[name] = {};
    }

    void apply_config(const std::string& path) {
        std::vector<ConfigEntry> entries;
        try {
            entries = read_config_entries(path);
        } catch (const std::runtime_error& e) {
            throw UsageError(e.what());
        }
        for (const auto& e : entries) {
            auto it = options.find(e.key);
            if (it == options.end() || e.key == "config")
                throw UsageError(path + ":" + std::to_string(e.line) + ": unknown key '" +
                                 e.key + "'");
            if (provided.count(e.key) && !provided[e.key].config) continue;  // CLI wins
            raw[e.key] = e.value;
            provided[e.key] = {true, path, e.line};
        }
    }

    bool has(const std::string& name) const { return provided.count(name) > 0; }

    [[noreturn]] void fail(const std::string& name, const std::string& what) const {
        auto it = provided.find(name);
        if (it != provided.end() && it->second.config)
            throw UsageError(it->second.path + ":" + std::to_string(it->second.line) +
                             ": malformed value for '" + name + "': " + what);
        throw UsageError("invalid value for --" + name + ": " + what);
    }

    const std::string& str(const std::string& name) const { return raw.at(name); }

    std::string str_or(const std::string& name, const std::string& fallback) const {
        return has(name) ? raw.at(name) : fallback;
    }

    long integer(const std::string& name) const {
        const std::string& text = raw.at(name);
        try {
            std::size_t used = 0;
            const long v = std::stol(text, &used);
            if (used != text.size()) fail(name, "'" + text + "' is not an integer");
            return v;
        } catch (const UsageError&) {
            throw;
        } catch (const std::exception&) {
            fail(name, "'" + text + "' is not an integer");
        }
    }

    long integer_or(const std::string& name, long fallback) const {
        return has(name) ? integer(name) : fallback;
    }

    double real(const std::string& name) const {
        const std::string& text = raw.at(name);
        try {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            if (used != text.size()) fail(name, "'" + text + "' is not a number");
            return v;
        } catch (const UsageError&) {
            throw;
        } catch (const std::exception&) {
            fail(name, "'" + text + "' is not a number");
        }
    }

    double real_or(const std::string& name, double fallback) const {
        return has(name) ? real(name) : fallback;
    }

    void require(const std::string& name) const {
        if (!has(name)) throw UsageError("missing required flag --" + name);
    }

    std::vector<double> real_list(const std::string& name) const {
        const std::string& text = raw.at(name);
        std::vector<double> out;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto comma = text.find(',', pos);
            const std::string item =
                text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            try {
                std::size_t used = 0;
                out.push_back(std::stod(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                fail(name, "'" + item + "' is not a number");
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        return out;
    }

    GridSpec grid(const std::string& name, const RectDomain& domain, int def_w,
                  int def_h) const {
        int w = def_w, h = def_h;
        if (has(name)) {
            const std::string& text = raw.at(name);
            const auto x = text.find('x');
            if (x == std::string::npos) fail(name, "expected WIDTHxHEIGHT, e.g. 729x729");
            try {
                std::size_t used = 0;
                w = std::stoi(text.substr(0, x), &used);
                if (used != x) throw std::invalid_argument(text);
                const std::string rest = text.substr(x + 1);
                h = std::stoi(rest, &used);
                if (used != rest.size()) throw std::invalid_argument(text);
            } catch (const std::exception&) {
                fail(name, "expected WIDTHxHEIGHT, e.g. 729x729");
            }
        }
        if (w < 1 || h < 1) fail(name, "grid dimensions must be positive");
        return {domain, w, h};
    }

    RectDomain domain_or(const std::string& name, const RectDomain& fallback) const {
        if (!has(name)) return fallback;
        const auto v = real_list(name);
        if (v.size() != 4) fail(name, "expected x_min,x_max,y_min,y_max");
        RectDomain d{v[0], v[1], v[2], v[3]};
        try {
            d.validate();
        } catch (const std::invalid_argument& e) {
            fail(name, e.what());
        }
        return d;
    }
};

int threads_of(const OptionSet& opts) {
    const long t = opts.integer_or("threads", 0);
    if (t < 0) opts.fail("threads", "thread count must be >= 0");
    return static_cast<int>(t);
}

enum class OutputKind { Pgm, Ppm };

OutputKind output_kind(const OptionSet& opts, const std::string& name) {
    const std::string& path = opts.str(name);
    if (path.size() > 4 && path.substr(path.size() - 4) == ".pgm") return OutputKind::Pgm;
    if (path.size() > 4 && path.substr(path.size() - 4) == ".ppm") return OutputKind::Ppm;
    opts.fail(name, "output path must end in .pgm or .ppm");
}

void write_raster(const MembershipGrid& grid, const OptionSet& opts, const std::string& name) {
    if (output_kind(opts, name) == OutputKind::Pgm)
        write_pgm(grid, opts.str(name));
    else
        write_ppm(grid, opts.str(name));
}

// ---------------------------------------------------------------------------
// Scheme selection shared by generate and map.
// ---------------------------------------------------------------------------

struct SchemeChoice {
    bool gasket = false;
    CarpetScheme carpet{ModTent2D{}};
    GasketScheme gasket_scheme;
    EscapeCriterion criterion = EscapeCriterion::BothSimultaneous;
};

EscapeCriterion parse_criterion(const OptionSet& opts) {
    const std::string text = opts.str_or("criterion", "both-simultaneous");
    if (text == "any") return EscapeCriterion::AnyCoordinate;
    if (text == "both-eventually") return EscapeCriterion::BothEventually;
    if (text == "both-simultaneous") return EscapeCriterion::BothSimultaneous;
    opts.fail("criterion", "expected any | both-eventually | both-simultaneous");
}

SchemeChoice parse_scheme(const OptionSet& opts) {
    opts.require("scheme");
    const std::string& name = opts.str("scheme");
    SchemeChoice choice;

    if (name == "gasket") {
        choice.gasket = true;
        if (opts.has("criterion"))
            throw UsageError("conflicting flags: --criterion does not apply to --scheme "
                             "gasket (it uses the three-sign rule)");
        if (opts.has("b")) throw UsageError("conflicting flags: --b applies to sine schemes");
        GasketScheme g;
        g.a = opts.real_or("a", 2.0);
        if (!(g.a > 1.0)) opts.fail("a", "gasket parameter a must be > 1");
        try {
            g.alpha = make_profile(opts.str_or("alpha", "sin"));
            g.beta = make_profile(opts.str_or("beta", "sin"));
            g.gamma = make_profile(opts.str_or("gamma", "sin"));
        } catch (const mapexpr::ParseError& e) {
            throw UsageError(std::string("profile expression: ") + e.what());
        }
        choice.gasket_scheme = std::move(g);
        return choice;
    }

    for (const char* flag : {"alpha", "beta", "gamma"})
        if (opts.has(flag))
            throw UsageError(std::string("conflicting flags: --") + flag +
                             " applies only to --scheme gasket");

    choice.criterion = parse_criterion(opts);
    if (name == "tent") {
        choice.carpet = Tent2D{};
    } else if (name == "mod-tent") {
        choice.carpet = ModTent2D{};
    } else if (name == "sine" || name == "auto-sine") {
        const double a = opts.real_or("a", 3.0);
        const double b = opts.real_or("b", 3.0);
        if (!(a > 1.0)) opts.fail("a", "sine parameter a must be > 1");
        if (!(b > 1.0)) opts.fail("b", "sine parameter b must be > 1");
        if (name == "sine")
            choice.carpet = SineScheme{a, b};
        else
            choice.carpet = AutoSine{a, b};
    } else {
        opts.fail("scheme", "expected tent | mod-tent | sine | auto-sine | gasket");
    }
    return choice;
}

int parse_depth(const OptionSet& opts) {
    opts.require("depth");
    const long k = opts.integer("depth");
    if (k < 1) opts.fail("depth", "depth must be >= 1");
    if (k > 0xFFFE - 1) opts.fail("depth", "depth too large");
    return static_cast<int>(k);
}

std::vector<Point2> member_centers(const MembershipGrid& grid) {
    std::vector<Point2> pts;
    for (int j = 0; j < grid.height(); ++j)
        for (int i = 0; i < grid.width(); ++i)
            if (grid.is_member(i, j)) pts.push_back(cell_center(grid.spec(), i, j));
    return pts;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

int run_generate(const OptionSet& opts) {
    const SchemeChoice scheme = parse_scheme(opts);
    const int k = parse_depth(opts);
    const int threads = threads_of(opts);
    if (!opts.has("out") && !opts.has("points-out"))
        throw UsageError("missing required flag --out (or --points-out)");

    MembershipGrid grid;
    if (scheme.gasket) {
        if (opts.has("domain"))
            throw UsageError("conflicting flags: --domain does not apply to --scheme gasket "
                             "(rasters use the triangle's bounding box)");
        const GridSpec spec = opts.grid("grid", TriangleDomain::bounding_box(), 1024, 887);
        grid = membership_grid(scheme.gasket_scheme, spec, k, threads);
    } else {
        const RectDomain domain = opts.domain_or("domain", RectDomain::unit_square());
        const GridSpec spec = opts.grid("grid", domain, 729, 729);
        grid = membership_grid(scheme.carpet, scheme.criterion, spec, k, threads);
    }

    if (opts.has("out")) write_raster(grid, opts, "out");
    if (opts.has("points-out")) write_csv_points(member_centers(grid), opts.str("points-out"));
    std::cerr << "generate: " << grid.member_count() << " member cells of "
              << grid.spec().cell_count() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// map
// ---------------------------------------------------------------------------

PlaneMap parse_plane_map(const OptionSet& opts) {
    const int sources = (opts.has("map") ? 1 : 0) + (opts.has("map-expr") ? 1 : 0) +
                        (opts.has("affine") ? 1 : 0);
    if (sources == 0)
        throw UsageError("missing required flag --map (or --map-expr / --affine)");
    if (sources > 1)
        throw UsageError("conflicting flags: give exactly one of --map, --map-expr, --affine");

    if (opts.has("map")) {
        auto m = find_map(opts.str("map"));
        if (!m) {
            std::string names;
            for (const auto& n : registry_names()) names += " " + n;
            opts.fail("map", "unknown map '" + opts.str("map") + "'; registry:" + names);
        }
        return *m;
    }
    if (opts.has("affine")) {
        const auto c = opts.real_list("affine");
        if (c.size() != 6) opts.fail("affine", "expected six coefficients a,b,c,d,e,f");
        return make_affine(c[0], c[1], c[2], c[3], c[4], c[5]);
    }
    try {
        return from_mapdef(mapexpr::parse_map(opts.str("map-expr")), "expr");
    } catch (const mapexpr::ParseError& e) {
        opts.fail("map-expr", e.what());
    }
}

int run_map(const OptionSet& opts) {
    const PlaneMap map = parse_plane_map(opts);
    const SchemeChoice scheme = parse_scheme(opts);
    const int k = parse_depth(opts);
    const int threads = threads_of(opts);
    const std::string mode = opts.str_or("mode", "inverse");

    const RectDomain source_domain = scheme.gasket
                                         ? TriangleDomain::bounding_box()
                                         : opts.domain_or("domain", RectDomain::unit_square());

    if (mode == "inverse") {
        if (!map.has_inverse())
            throw UsageError("map '" + map.name +
                             "' has no inverse; use --mode forward for forward-only maps");
        const RectDomain target_domain =
            opts.domain_or("target-domain", default_mapped_domain(map, source_domain));
        const GridSpec target = opts.grid("grid", target_domain, 729, 729);
        MembershipGrid grid;
        if (scheme.gasket)
            grid = mapped_membership_grid(map, scheme.gasket_scheme, target, k, threads);
        else
            grid = mapped_membership_grid(map, scheme.carpet, scheme.criterion, target, k,
                                          threads, source_domain);

        if (opts.has("verify")) {
            const GridSpec source = opts.grid("source-grid", source_domain, 3 * target.width,
                                              3 * target.height);
            if (scheme.gasket)
                throw UsageError("--verify supports carpet schemes only");
            const auto report = verify_pushforward(map, scheme.carpet, scheme.criterion,
                                                   source, target, k, threads);
            opts.require("report");
            write_report({{"map", map.name},
                          {"agreement", fmt_g9(report.agreement)},
                          {"mapped_members", std::to_string(report.mapped_members)},
                          {"covered", std::to_string(report.covered)},
                          {"image_only", std::to_string(report.image_only)},
                          {"outside_cells", std::to_string(report.outside_cells)}},
                         opts.str("report"));
        }
        if (opts.has("out")) write_raster(grid, opts, "out");
        if (opts.has("points-out"))
            write_csv_points(member_centers(grid), opts.str("points-out"));
        if (!opts.has("out") && !opts.has("points-out") && !opts.has("verify"))
            throw UsageError("missing required flag --out (or --points-out / --verify)");
        std::cerr << "map: " << grid.member_count() << " member cells\n";
        return 0;
    }

    if (mode != "forward") opts.fail("mode", "expected inverse | forward");

    // forward mode: push member-cell centers through the map
    MembershipGrid plain;
    if (scheme.gasket) {
        const GridSpec spec = opts.grid("grid", TriangleDomain::bounding_box(), 1024, 887);
        plain = membership_grid(scheme.gasket_scheme, spec, k, threads);
    } else {
        const GridSpec spec = opts.grid("grid", source_domain, 729, 729);
        plain = membership_grid(scheme.carpet, scheme.criterion, spec, k, threads);
    }
    const auto fwd = forward_image_points(map, plain);
    if (!fwd.errors.empty())
        std::cerr << "map: " << fwd.errors.size() << " points failed to evaluate (first: "
                  << fwd.errors.front().message << ")\n";

    if (opts.has("points-out")) write_csv_points(fwd.points, opts.str("points-out"));
    if (opts.has("out")) {
        const RectDomain target_domain =
            opts.domain_or("target-domain", default_mapped_domain(map, source_domain));
        const GridSpec target = opts.grid("target-grid", target_domain, plain.spec().width,
                                          plain.spec().height);
        write_raster(rasterize_points(fwd.points, target), opts, "out");
    }
    if (!opts.has("out") && !opts.has("points-out"))
        throw UsageError("missing required flag --out (or --points-out)");
    std::cerr << "map: " << fwd.points.size() << " forward points\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

OdeSystem parse_system(const OptionSet& opts) {
    opts.require("system");
    const std::string& name = opts.str("system");
    if (name == "vdp") {
        for (const char* flag : {"delta", "beta", "alpha", "gamma", "omega", "dx", "dy"})
            if (opts.has(flag))
                throw UsageError(std::string("conflicting flags: --") + flag +
                                 " does not apply to --system vdp");
        return VanDerPol{opts.real_or("mu", 0.5)};
    }
    if (name == "duffing") {
        if (opts.has("mu") || opts.has("dx") || opts.has("dy"))
            throw UsageError("conflicting flags: duffing takes --delta --beta --alpha "
                             "--gamma --omega");
        return Duffing{opts.real_or("delta", 0.0), opts.real_or("beta", 0.0),
                       opts.real_or("alpha", 0.0), opts.real_or("gamma", 0.0),
                       opts.real_or("omega", 1.0)};
    }
    if (name == "expr") {
        opts.require("dx");
        opts.require("dy");
        try {
            return ExprSystem{mapexpr::parse_expr(opts.str("dx")),
                              mapexpr::parse_expr(opts.str("dy"))};
        } catch (const mapexpr::ParseError& e) {
            throw UsageError(std::string("system expression: ") + e.what());
        }
    }
    opts.fail("system", "expected vdp | duffing | expr");
}

int run_evolve(const OptionSet& opts) {
    const OdeSystem system = parse_system(opts);
    const int threads = threads_of(opts);
    IntegratorConfig cfg{opts.real_or("h", 1e-3)};
    if (!(cfg.step > 0.0)) opts.fail("h", "step must be > 0");

    opts.require("in");
    std::vector<Point2> points;
    try {
        points = read_csv_points(opts.str("in"));
    } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
    }

    const bool sections_mode = opts.has("times");
    const bool traj_mode = opts.has("t-end") || opts.has("dt-sample");
    if (sections_mode == traj_mode)
        throw UsageError("give exactly one of --times or --t-end with --dt-sample");

    if (sections_mode) {
        const auto times = opts.real_list("times");
        for (std::size_t i = 0; i < times.size(); ++i)
            if (times[i] < 0.0 || (i > 0 && times[i] <= times[i - 1]))
                opts.fail("times", "times must be ascending and >= 0");
        opts.require("out-prefix");
        const auto result = evolve_points(system, points, times, cfg, threads);
        for (std::size_t ti = 0; ti < times.size(); ++ti) {
            const std::string path =
                opts.str("out-prefix") + "_t" + fmt_g9(times[ti]) + ".csv";
            write_csv_points(result.sections[ti], path);
        }
        if (!result.failures.empty())
            std::cerr << "evolve: " << result.failures.size() << " of " << points.size()
                      << " points blew up (first at t = "
                      << fmt_g9(result.failures.front().time) << ")\n";
        std::cerr << "evolve: " << times.size() << " sections of " << points.size()
                  << " points\n";
        return 0;
    }

    opts.require("t-end");
    opts.require("dt-sample");
    opts.require("out");
    const double t_end = opts.real("t-end");
    const double dt = opts.real("dt-sample");
    if (!(dt > 0.0) || !(dt <= t_end))
        opts.fail("dt-sample", "require 0 < dt-sample <= t-end");
    const auto result = trajectory_samples(system, points, t_end, dt, cfg, threads);
    write_csv_samples(result.tracks, opts.str("out"));
    if (!result.failures.empty())
        std::cerr << "evolve: " << result.failures.size() << " points blew up\n";
    std::cerr << "evolve: sampled " << points.size() << " trajectories to t = " << fmt_g9(t_end)
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// dimension / compare / oracle
// ---------------------------------------------------------------------------

int run_dimension(const OptionSet& opts) {
    opts.require("in");
    opts.require("out");
    const long levels = opts.integer_or("levels", 6);
    if (levels < 3) opts.fail("levels", "levels must be >= 3");

    MembershipGrid grid;
    try {
        grid = grid_from_pgm(read_pgm(opts.str("in")));
    } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
    }
    const auto result = box_dimension(grid, static_cast<int>(levels));

    std::string sizes, counts;
    for (std::size_t i = 0; i < result.counts.size(); ++i) {
        if (i) sizes += " ", counts += " ";
        sizes += fmt_g9(result.box_sizes[i]);
        counts += std::to_string(result.counts[i]);
    }
    write_report({{"input", opts.str("in")},
                  {"width", std::to_string(grid.width())},
                  {"height", std::to_string(grid.height())},
                  {"members", std::to_string(grid.member_count())},
                  {"levels", std::to_string(levels)},
                  {"box_sizes", sizes},
                  {"box_counts", counts},
                  {"slope", fmt_g9(result.slope)},
                  {"r2", fmt_g9(result.r2)}},
                 opts.str("out"));
    std::cerr << "dimension: slope " << fmt_g9(result.slope) << "\n";
    return 0;
}

int run_compare(const OptionSet& opts) {
    opts.require("a");
    opts.require("b");
    opts.require("out");
    MembershipGrid a, b;
    try {
        a = grid_from_pgm(read_pgm(opts.str("a")));
        b = grid_from_pgm(read_pgm(opts.str("b")));
    } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
    }
    const auto cmp = compare_grids(a, b);
    write_report({{"a", opts.str("a")},
                  {"b", opts.str("b")},
                  {"agreement", fmt_g9(cmp.agreement)},
                  {"compared", std::to_string(cmp.compared)},
                  {"a_only", std::to_string(cmp.a_only)},
                  {"b_only", std::to_string(cmp.b_only)}},
                 opts.str("out"));
    std::cerr << "compare: agreement " << fmt_g9(cmp.agreement) << "\n";
    return 0;
}

int run_oracle(const OptionSet& opts) {
    opts.require("fractal");
    const std::string& name = opts.str("fractal");
    IfsTag tag;
    if (name == "carpet") tag = IfsTag::Carpet;
    else if (name == "gasket") tag = IfsTag::Gasket;
    else opts.fail("fractal", "expected carpet | gasket");

    opts.require("depth");
    const long k = opts.integer("depth");
    if (k < 0 || k > 7) opts.fail("depth", "oracle depth must be in [0, 7]");

    GridSpec spec;
    if (tag == IfsTag::Carpet) {
        const int n = static_cast<int>(std::llround(std::pow(3.0, std::max<long>(k, 1))));
        spec = opts.grid("grid", RectDomain::unit_square(), n, n);
    } else {
        spec = opts.grid("grid", TriangleDomain::bounding_box(), 1024, 887);
    }
    const auto grid = cells_to_grid(ifs_cells(tag, static_cast<int>(k)), spec);
    if (!opts.has("out") && !opts.has("points-out"))
        throw UsageError("missing required flag --out (or --points-out)");
    if (opts.has("out")) write_raster(grid, opts, "out");
    if (opts.has("points-out")) write_csv_points(member_centers(grid), opts.str("points-out"));
    std::cerr << "oracle: " << grid.member_count() << " member cells\n";
    return 0;
}

// ---------------------------------------------------------------------------

void add_common(OptionSet& set) {
    set.add("config", "key = value file; command-line flags override file values");
    set.add("threads", "worker threads (0 = hardware)");
}

void add_scheme_options(OptionSet& set) {
    set.add("scheme", "tent | mod-tent | sine | auto-sine | gasket");
    set.add("criterion", "any | both-eventually | both-simultaneous (carpet schemes)");
    set.add("a", "scheme parameter a");
    set.add("b", "scheme parameter b (sine schemes)");
    set.add("alpha", "gasket profile alpha: name or expression in x");
    set.add("beta", "gasket profile beta");
    set.add("gamma", "gasket profile gamma");
    set.add("depth", "iteration depth k");
    set.add("grid", "raster size WIDTHxHEIGHT");
    set.add("domain", "sampling rectangle x_min,x_max,y_min,y_max (carpet)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sierpinski-family fractals: escape schemes, plane maps, ODE flows"};
    app.require_subcommand(1);

    std::map<std::string, OptionSet> sets;
    std::map<std::string, int (*)(const OptionSet&)> runners;

    auto make_sub = [&](const std::string& name, const std::string& desc,
                        int (*runner)(const OptionSet&)) -> OptionSet& {
        OptionSet& set = sets[name];
        set.cmd = app.add_subcommand(name, desc);
        runners[name] = runner;
        add_common(set);
        return set;
    };

    {
        OptionSet& g = make_sub("generate", "raster a fractal scheme", run_generate);
        add_scheme_options(g);
        g.add("out", "raster output (.pgm grayscale stages, .ppm palette)");
        g.add("points-out", "CSV of member cell centers");
    }
    {
        OptionSet& m = make_sub("map", "map a fractal through a plane map", run_map);
        add_scheme_options(m);
        m.add("map", "registry map name");
        m.add("map-expr", "map text: 'fx, fy' or 'fx, fy | gx, gy'");
        m.add("affine", "affine coefficients a,b,c,d,e,f");
        m.add("mode", "inverse (pullback membership) | forward (push member points)");
        m.add("target-domain", "mapped rectangle D' x_min,x_max,y_min,y_max");
        m.add("target-grid", "raster size for forward-mode binning");
        m.add("source-grid", "source raster for --verify (default 3x target)");
        m.add_flag("verify", "run the pushforward coverage check");
        m.add("report", "report path for --verify");
        m.add("out", "raster output (.pgm or .ppm)");
        m.add("points-out", "CSV output of points");
    }
    {
        OptionSet& e = make_sub("evolve", "flow a point set through an ODE system", run_evolve);
        e.add("system", "vdp | duffing | expr");
        e.add("mu", "van der Pol damping");
        e.add("delta", "duffing delta");
        e.add("beta", "duffing beta");
        e.add("alpha", "duffing alpha");
        e.add("gamma", "duffing gamma");
        e.add("omega", "duffing omega");
        e.add("dx", "x' expression in t, x, y");
        e.add("dy", "y' expression in t, x, y");
        e.add("h", "integrator step (default 1e-3)");
        e.add("times", "section times t1,t2,...");
        e.add("out-prefix", "section CSVs are written to PREFIX_t<time>.csv");
        e.add("t-end", "trajectory end time");
        e.add("dt-sample", "trajectory sampling interval");
        e.add("in", "input CSV of points (header x,y)");
        e.add("out", "trajectory CSV output (header t,x,y)");
    }
    {
        OptionSet& d = make_sub("dimension", "box-counting dimension of a raster", run_dimension);
        d.add("in", "input PGM (byte 0 = member)");
        d.add("levels", "dyadic box levels (default 6)");
        d.add("out", "report path");
    }
    {
        OptionSet& c = make_sub("compare", "member agreement of two rasters", run_compare);
        c.add("a", "first PGM");
        c.add("b", "second PGM");
        c.add("out", "report path");
    }
    {
        OptionSet& o = make_sub("oracle", "rasterize the IFS cell oracle", run_oracle);
        o.add("fractal", "carpet | gasket");
        o.add("depth", "oracle depth k");
        o.add("grid", "raster size WIDTHxHEIGHT (carpet default 3^k square)");
        o.add("out", "raster output (.pgm or .ppm)");
        o.add("points-out", "CSV of member cell centers");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cerr << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        for (auto& [name, set] : sets) {
            if (!set.cmd->parsed()) continue;
            set.finalize_from_cli();
            if (set.has("config")) set.apply_config(set.str("config"));
            return runners[name](set);
        }
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "compute error: " << e.what() << "\n";
        return 2;
    }
}
