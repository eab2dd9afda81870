// Command-line front end: evaluates the field and region classification on
// grids, runs the regime-verification experiments, and emits CSV/JSON data
// for external plotting.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wallach/flow.hpp"
#include "wallach/io.hpp"

using json = nlohmann::ordered_json;
using namespace wallach;

namespace {

constexpr const char* kSchema = "wallach-flow/1";

struct GridSpec {
    double lo = 0.5, hi = 2.0;
    int n = 20;
};

GridSpec parse_grid(const std::string& s) {
    GridSpec g;
    char c1 = 0, c2 = 0;
    std::istringstream in(s);
    if (!(in >> g.lo >> c1 >> g.hi >> c2 >> g.n) || c1 != ':' || c2 != ':' || g.n < 1 ||
        !(g.lo > 0.0) || !(g.hi >= g.lo))
        throw CLI::ValidationError("--grid", "expected lo:hi:n with 0 < lo <= hi, n >= 1");
    return g;
}

double grid_at(const GridSpec& g, int i) {
    if (g.n == 1) return g.lo;
    return g.lo + (g.hi - g.lo) * i / (g.n - 1);
}

std::string region_label(const RegionClass& r) {
    std::string s;
    switch (r.kind) {
        case RegionClass::Kind::Interior: s = "interior"; break;
        case RegionClass::Kind::Exterior: s = "exterior"; break;
        case RegionClass::Kind::Boundary: s = "boundary(" + std::to_string(r.cone) + ")"; break;
    }
    if (r.on_diagonal) s += "/diagonal";
    return s;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
}

json point_json(const Point3& p) {
    return json::array({p.x1, p.x2, p.x3});
}

json events_json(const std::vector<CrossingEvent>& events) {
    json arr = json::array();
    for (const auto& e : events) {
        arr.push_back({{"time", e.time},
                       {"point", point_json(e.point)},
                       {"cone", e.cone},
                       {"direction", e.direction == CrossDirection::LeavingS ? "leaving" : "entering"},
                       {"refined", e.refined},
                       {"dgamma_dt", e.dgamma_dt}});
    }
    return arr;
}

const char* reason_label(StopReason r) {
    switch (r) {
        case StopReason::HorizonReached: return "horizon_reached";
        case StopReason::CoordinateUnderflow: return "coordinate_underflow";
        default: return "equilibrium_converged";
    }
}

// ---- field ----------------------------------------------------------------

int cmd_field(double a, const GridSpec& grid, const std::string& output) {
    std::string out;
    out.reserve(static_cast<std::size_t>(grid.n) * grid.n * grid.n * 64);
    out += "x1,x2,x3,f1,f2,f3,gamma1,gamma2,gamma3,region\n";
    for (int i = 0; i < grid.n; ++i)
        for (int j = 0; j < grid.n; ++j)
            for (int k = 0; k < grid.n; ++k) {
                const Point3 p(grid_at(grid, i), grid_at(grid, j), grid_at(grid, k));
                const Vec3 f = field_symmetric(a, p);
                const RegionClass r = classify_region(p);
                out += format_g17(p.x1) + ',' + format_g17(p.x2) + ',' + format_g17(p.x3) +
                       ',' + format_g17(f.v1) + ',' + format_g17(f.v2) + ',' +
                       format_g17(f.v3) + ',' + format_g17(r.g1) + ',' + format_g17(r.g2) +
                       ',' + format_g17(r.g3) + ',' + region_label(r) + '\n';
            }
    write_output(output, out);
    return 0;
}

// ---- portrait --------------------------------------------------------------

// Trace the boundary of D by 1-D root finding of the lifted gamma along rays
// from (1,1); only s1 has a printed closed parameterization.
json trace_boundary_curves(double /*a*/, int rays, double rmax) {
    json curves;
    std::array<std::vector<std::array<double, 2>>, 3> pts;
    for (int k = 0; k < rays; ++k) {
        const double theta = 2.0 * std::numbers::pi_v<double> * k / rays;
        const double dx = std::cos(theta), dy = std::sin(theta);
        auto value = [&](int i, double r) {
            const double x1 = 1.0 + r * dx, x2 = 1.0 + r * dy;
            if (!(x1 > 1e-9) || !(x2 > 1e-9)) return -1.0;
            return planar_l(i, 1.0, x1, x2);
        };
        // first boundary hit along the ray
        int hit = 0;
        double rlo = 0.0, rhi = 0.0;
        for (double r = 1e-3; r < rmax && hit == 0; r += 1e-2) {
            for (int i = 1; i <= 3; ++i) {
                if (value(i, r) < 0.0) {
                    hit = i;
                    rhi = r;
                    break;
                }
            }
            if (hit == 0) rlo = r;
        }
        if (hit == 0) continue;  // ray escapes through a cusp of D
        for (int it = 0; it < 80; ++it) {
            const double rm = 0.5 * (rlo + rhi);
            if (value(hit, rm) > 0.0)
                rlo = rm;
            else
                rhi = rm;
        }
        const double r = 0.5 * (rlo + rhi);
        pts[hit - 1].push_back({1.0 + r * dx, 1.0 + r * dy});
    }
    for (int i = 0; i < 3; ++i) {
        json arr = json::array();
        for (const auto& p : pts[i]) arr.push_back({p[0], p[1]});
        curves["s" + std::to_string(i + 1)] = std::move(arr);
    }
    return curves;
}

int cmd_portrait(double a, int starts, std::uint64_t seed, const std::string& output) {
    json doc;
    doc["schema"] = kSchema;
    doc["command"] = "portrait";
    doc["a"] = a;
    doc["c"] = 1.0;
    doc["seed"] = seed;

    const bool degenerate = std::fabs(a - 0.25) <= 1e-12;
    json eqs = json::array();
    const EquilibriumSet es = equilibria(a, 1.0);
    const auto membership = equilibrium_membership(a);
    for (int which = 0; which < 4; ++which) {
        const Point3& o = es.points[which];
        json e;
        e["which"] = which;
        e["point"] = {o.x1, o.x2};
        e["membership"] = region_label(membership[which]);
        e["degenerate"] = es.degenerate;
        if (!degenerate) {
            const PlanarClassification pc = planar_classification(a, which);
            e["kind"] = pc.kind == PlanarClassification::Kind::Node ? "node" : "saddle";
            e["stable"] = pc.stable;
            e["delta"] = pc.delta;
            e["rho"] = pc.rho;
            e["sigma"] = pc.sigma;
        } else {
            e["kind"] = "degenerate";
        }
        eqs.push_back(std::move(e));
        if (degenerate) break;  // all four coincide at (1,1)
    }
    doc["equilibria"] = std::move(eqs);

    doc["boundary_curves"] = trace_boundary_curves(a, 720, 12.0);

    json inv;
    for (int i = 1; i <= 3; ++i) {
        json arr = json::array();
        for (int k = 0; k <= 200; ++k) {
            const double p = 0.35 + (3.0 - 0.35) * k / 200.0;
            double x1, x2;
            if (i == 1) {
                x1 = 1.0 / (p * p), x2 = p;        // projection of I1
            } else if (i == 2) {
                x1 = p, x2 = 1.0 / (p * p);        // projection of I2
            } else {
                x1 = p, x2 = p;                    // projection of I3
            }
            arr.push_back({x1, x2});
        }
        inv["c" + std::to_string(i)] = std::move(arr);
    }
    doc["invariant_curves"] = std::move(inv);

    // tangency markers: the flux vanishes along the rays nu = nu1, nu2
    const FluxSplit split = critical_nus(a);
    if (split.regime == FluxSplit::Regime::SignChange ||
        split.regime == FluxSplit::Regime::TangentAtNu) {
        json tp = json::array();
        for (int cone = 1; cone <= 3; ++cone) {
            auto project = [&](double nu) {
                const ConeChart chart(cone, nu, std::cbrt(1.0 / (nu * (1.0 - nu + 2.0 * std::sqrt(nu * (nu - 1.0))))));
                const Point3 p = cone_point(chart);
                return json::array({p.x1, p.x2});
            };
            tp.push_back({{"cone", cone},
                          {"nu1", split.nu1},
                          {"nu2", split.nu2},
                          {"P", project(split.nu1)},
                          {"Q", project(split.nu2)}});
        }
        doc["tangency_points"] = std::move(tp);
    }

    json trajs = json::array();
    IntegratorOptions opts;
    opts.horizon = 30.0;
    for (int s = 0; s < starts; ++s) {
        Rng rng(seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(s + 1));
        const double x1 = std::exp(rng.uniform(std::log(0.4), std::log(2.5)));
        const double x2 = std::exp(rng.uniform(std::log(0.4), std::log(2.5)));
        PlanarTrajectory tr = integrate_planar(a, x1, x2, opts);
        json t;
        t["start"] = {x1, x2};
        t["reason"] = reason_label(tr.reason);
        json samples = json::array();
        const std::size_t stride = std::max<std::size_t>(1, tr.points.size() / 400);
        for (std::size_t k = 0; k < tr.points.size(); k += stride)
            samples.push_back({tr.times[k], tr.points[k].first, tr.points[k].second});
        if ((tr.points.size() - 1) % stride != 0)
            samples.push_back({tr.times.back(), tr.points.back().first, tr.points.back().second});
        t["samples"] = std::move(samples);
        json evs = json::array();
        for (const auto& e : tr.events)
            evs.push_back({{"time", e.time},
                           {"point", {e.x1, e.x2}},
                           {"curve", e.curve},
                           {"direction", e.direction == CrossDirection::LeavingS ? "leaving" : "entering"},
                           {"refined", e.refined}});
        t["events"] = std::move(evs);
        trajs.push_back(std::move(t));
    }
    doc["trajectories"] = std::move(trajs);

    write_output(output, doc.dump(2) + "\n");
    return 0;
}

// ---- verify ----------------------------------------------------------------

json report_json(const RegimeReport& rep) {
    json r;
    r["a"] = rep.a;
    r["n"] = rep.n;
    r["seed"] = rep.seed;
    r["theorem_case"] = rep.theorem_case;
    r["consistent"] = rep.consistent;
    if (!rep.violation.empty()) r["violation"] = rep.violation;
    r["inconclusive"] = rep.inconclusive;
    json runs = json::array();
    for (const auto& rec : rep.runs) {
        runs.push_back({{"start", point_json(rec.start)},
                        {"interior", rec.interior},
                        {"aimed", rec.aimed},
                        {"start_class", region_label(rec.start_class)},
                        {"final_class", region_label(rec.final_class)},
                        {"reason", reason_label(rec.reason)},
                        {"leaving", rec.leaving},
                        {"entering", rec.entering},
                        {"grazes", rec.grazes},
                        {"volume_drift", rec.volume_drift},
                        {"conservation_ok", rec.conservation_ok},
                        {"escalations", rec.escalations},
                        {"final_time", rec.final_time},
                        {"events", events_json(rec.events)}});
    }
    r["runs"] = std::move(runs);
    return r;
}

int cmd_verify(const std::vector<double>& avals, int n, std::uint64_t seed, bool with_ivp,
               const std::string& output) {
    json doc;
    doc["schema"] = kSchema;
    doc["command"] = "verify";
    doc["n"] = n;
    doc["seed"] = seed;
    bool all_ok = true;
    bool any_inconclusive = false;
    json reports = json::array();
    for (double a : avals) {
        const RegimeReport rep = run_regime_experiment(a, n, seed);
        all_ok = all_ok && rep.consistent;
        any_inconclusive = any_inconclusive || !rep.inconclusive.empty();
        reports.push_back(report_json(rep));
    }
    doc["reports"] = std::move(reports);
    if (any_inconclusive)
        doc["warning"] = "some runs were inconclusive at the escalated horizon";
    if (with_ivp) {
        const IvpResult r = boundary_ivp_experiment({});
        doc["ivp"] = {{"a", 0.26},
                      {"mesh_points", 5000},
                      {"mesh_index", r.mesh_index},
                      {"crossing", {r.crossing_x, r.crossing_y}},
                      {"boundary_y", r.boundary_y},
                      {"asymptote_coefficient", r.coefficient},
                      {"asymptote_exponent", r.exponent},
                      {"asymptote_intersection", {r.asymptote_x, r.asymptote_y}}};
    }
    doc["all_consistent"] = all_ok;
    write_output(output, doc.dump(2) + "\n");
    return all_ok ? 0 : 1;
}

// ---- analyze ---------------------------------------------------------------

int cmd_analyze(double a, const GridSpec& nu_grid, const GridSpec& a_grid,
                const std::string& output) {
    std::string out;
    out += "table,key,v1,v2,v3,v4,v5,note\n";
    for (int i = 0; i < nu_grid.n; ++i) {
        const double nu = grid_at(nu_grid, i);
        if (nu < 1.0) continue;
        const GHF f = g_h_f(nu);
        out += "F,," + format_g17(nu) + ',' + format_g17(f.G) + ',' + format_g17(f.H) + ',' +
               format_g17(f.F) + ",,\n";
    }
    for (int i = 0; i < a_grid.n; ++i) {
        const double av = grid_at(a_grid, i);
        if (!(av > 0.0) || !(av < 0.5)) continue;
        const FluxSplit split = critical_nus(av);
        std::string regime;
        switch (split.regime) {
            case FluxSplit::Regime::AlwaysNegative: regime = "always_negative"; break;
            case FluxSplit::Regime::TangentAtNu: regime = "tangent"; break;
            case FluxSplit::Regime::SignChange: regime = "sign_change"; break;
            case FluxSplit::Regime::AlwaysPositive: regime = "always_positive"; break;
        }
        out += "nu_roots,," + format_g17(av) + ',' + format_g17(split.nu1) + ',' +
               format_g17(split.nu2) + ",,," + regime + "\n";
    }
    const EquilibriumSet es = equilibria(a, 1.0);
    const auto membership = equilibrium_membership(a);
    const bool degenerate = es.degenerate;
    for (int which = 0; which < 4; ++which) {
        const Point3& o = es.points[which];
        out += "equilibrium,o" + std::to_string(which) + ',' + format_g17(o.x1) + ',' +
               format_g17(o.x2) + ',' + format_g17(o.x3) + ",,," +
               region_label(membership[which]) + "\n";
        if (!degenerate) {
            const EigenStructure s = eigen_structure(a, 1.0, which);
            for (int k = 0; k < 3; ++k) {
                const char* tag = s.tags[k] == EigenStructure::Tag::Stable     ? "stable"
                                  : s.tags[k] == EigenStructure::Tag::Unstable ? "unstable"
                                                                               : "center";
                out += "eigen,o" + std::to_string(which) + ',' +
                       format_g17(s.eigenvalues[k]) + ',' + format_g17(s.eigenvectors[k].v1) +
                       ',' + format_g17(s.eigenvectors[k].v2) + ',' +
                       format_g17(s.eigenvectors[k].v3) + ',' + std::to_string(k) + ',' + tag +
                       "\n";
            }
        }
    }
    write_output(output, out);
    return 0;
}

// ---- config overlay ---------------------------------------------------------

// Flags win over values from --config on conflict.
template <class T>
void overlay(const CLI::App* cmd, const json& cfg, const std::string& key, T& value) {
    if (!cfg.contains(key)) return;
    const CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt != nullptr && opt->count() > 0) return;
    value = cfg.at(key).get<T>();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamics of the normalized Ricci flow system on generalized Wallach spaces"};
    app.require_subcommand(1);

    std::string output;
    std::string format = "csv";
    std::string config_path;
    std::uint64_t seed = 1;
    app.add_option("--output", output, "output file (default: stdout)");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--seed", seed, "seed for all sampling");
    app.add_option("--config", config_path, "JSON config file; explicit flags win");

    auto* field_cmd = app.add_subcommand("field", "field, gammas and region over a 3D grid (CSV)");
    double field_a = 0.125;
    std::string field_grid = "0.5:2:20";
    field_cmd->add_option("--a", field_a, "symmetric parameter a");
    field_cmd->add_option("--grid", field_grid, "grid spec lo:hi:n per axis");

    auto* portrait_cmd = app.add_subcommand("portrait", "planar phase-portrait data (JSON)");
    double portrait_a = 0.125;
    int portrait_starts = 12;
    portrait_cmd->add_option("--a", portrait_a, "symmetric parameter a");
    portrait_cmd->add_option("--starts", portrait_starts, "number of seeded planar starts");

    auto* verify_cmd = app.add_subcommand("verify", "regime-verification experiments (JSON)");
    std::vector<double> verify_a;
    int verify_n = 100;
    bool verify_ivp = false;
    verify_cmd->add_option("--a", verify_a, "parameter values (default: canonical set)");
    verify_cmd->add_option("--n", verify_n, "trajectories per side");
    verify_cmd->add_flag("--ivp", verify_ivp, "include the a=0.26 boundary-crossing block");

    auto* analyze_cmd = app.add_subcommand("analyze", "F samples, nu roots, equilibria (CSV)");
    double analyze_a = 1.0 / 6.0;
    std::string analyze_nu_grid = "1:5:200";
    std::string analyze_a_grid = "0.215:0.2495:50";
    analyze_cmd->add_option("--a", analyze_a, "parameter for the equilibrium catalogue");
    analyze_cmd->add_option("--nu-grid", analyze_nu_grid, "nu grid spec lo:hi:n");
    analyze_cmd->add_option("--a-grid", analyze_a_grid, "a grid spec lo:hi:n");

    try {
        app.parse(argc, argv);

        json cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw CLI::ValidationError("--config", "cannot open " + config_path);
            try {
                in >> cfg;
            } catch (const std::exception& e) {
                throw CLI::ValidationError("--config", e.what());
            }
            overlay(&app, cfg, "output", output);
            overlay(&app, cfg, "seed", seed);
        }

        auto check_a = [](double a) {
            if (!(a > 0.0) || !(a < 0.5))
                throw CLI::ValidationError("--a", "admissible range is (0,1/2)");
        };

        if (field_cmd->parsed()) {
            overlay(field_cmd, cfg, "a", field_a);
            overlay(field_cmd, cfg, "grid", field_grid);
            check_a(field_a);
            return cmd_field(field_a, parse_grid(field_grid), output);
        }
        if (portrait_cmd->parsed()) {
            overlay(portrait_cmd, cfg, "a", portrait_a);
            overlay(portrait_cmd, cfg, "starts", portrait_starts);
            check_a(portrait_a);
            if (portrait_starts < 0)
                throw CLI::ValidationError("--starts", "must be non-negative");
            return cmd_portrait(portrait_a, portrait_starts, seed, output);
        }
        if (verify_cmd->parsed()) {
            overlay(verify_cmd, cfg, "a", verify_a);
            overlay(verify_cmd, cfg, "n", verify_n);
            overlay(verify_cmd, cfg, "ivp", verify_ivp);
            if (verify_a.empty())
                verify_a = {1.0 / 9, 1.0 / 8, 1.0 / 6, 3.0 / 14, 0.22, 0.25, 0.3};
            for (double a : verify_a) check_a(a);
            if (verify_n < 1) throw CLI::ValidationError("--n", "must be >= 1");
            return cmd_verify(verify_a, verify_n, seed, verify_ivp, output);
        }
        overlay(analyze_cmd, cfg, "a", analyze_a);
        overlay(analyze_cmd, cfg, "nu-grid", analyze_nu_grid);
        overlay(analyze_cmd, cfg, "a-grid", analyze_a_grid);
        check_a(analyze_a);
        return cmd_analyze(analyze_a, parse_grid(analyze_nu_grid), parse_grid(analyze_a_grid),
                           output);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // configuration failures exit with 2
    } catch (const std::domain_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
