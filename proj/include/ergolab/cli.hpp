#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "ergolab/characteristics.hpp"
#include "ergolab/config.hpp"
#include "ergolab/design.hpp"
#include "ergolab/ergosphere.hpp"
#include "ergolab/io.hpp"
#include "ergolab/metric_spec.hpp"
#include "ergolab/observables.hpp"
#include "ergolab/wave.hpp"

namespace ergolab::cli {

constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;
using nlohmann::json;

// exit codes
enum : int { kPass = 0, kAssertFail = 1, kParseError = 2, kValidationError = 3, kRuntimeError = 4 };

struct RunContext {
    KeyValueConfig cfg;
    fs::path out_dir;
    std::uint64_t seed = 0;
    json manifest;

    void add_check(const std::string& name, double value, double threshold, bool pass) {
        manifest["checks"].push_back(
            {{"name", name}, {"value", value}, {"threshold", threshold}, {"pass", pass}});
    }
    void add_check_leq(const std::string& name, double value, double threshold) {
        add_check(name, value, threshold, value <= threshold);
    }
    void add_output(const fs::path& p) { manifest["outputs"].push_back(p.string()); }

    bool all_pass() const {
        if (!manifest.contains("checks")) return true;
        for (const auto& c : manifest["checks"])
            if (!c["pass"].get<bool>()) return false;
        return true;
    }
};

inline std::set<std::string> metric_keys() {
    return {"metric.", "bump."};
}

// ---------------------------------------------------------------------------
// ergo: trace the ergosphere (Delta = 0) and restricted ergosphere
// (Delta1 = 0) of a metric, emit curve CSVs and a containment report.
// ---------------------------------------------------------------------------
inline void cmd_ergo(RunContext& ctx) {
    auto keys = metric_keys();
    keys.insert({"command", "seed", "window.rho_min", "window.rho_max", "window.z_min",
                 "window.z_max", "trace.resolution"});
    ctx.cfg.validate_keys(keys);
    MetricHandle mh = metric_from_config(ctx.cfg);
    Bbox window;
    window.expand(Vec2(ctx.cfg.get_double("window.rho_min", -4), ctx.cfg.get_double("window.z_min", -4)));
    window.expand(Vec2(ctx.cfg.get_double("window.rho_max", 4), ctx.cfg.get_double("window.z_max", 4)));
    int res = int(ctx.cfg.get_int("trace.resolution", 512));

    TraceResult ergo = trace_level_set(
        [&](const Vec2& p) { return delta_reduced(mh.metric, p); }, window, res);
    TraceResult restricted = trace_level_set(
        [&](const Vec2& p) { return delta1(mh.metric, p); }, window, res);

    auto dump = [&](const TraceResult& tr, const std::string& stem) {
        int k = 0;
        json comps = json::array();
        for (const auto& comp : tr.components) {
            std::vector<double> dv, d1v;
            for (const auto& p : comp.curve.pts) {
                dv.push_back(delta_reduced(mh.metric, p));
                d1v.push_back(delta1(mh.metric, p));
            }
            fs::path file = ctx.out_dir / (stem + "_" + std::to_string(k) + ".csv");
            write_curve_csv(file, comp.curve, dv, d1v);
            ctx.add_output(file);
            comps.push_back({{"file", file.string()},
                             {"points", comp.curve.pts.size()},
                             {"residual_max", comp.residual_max},
                             {"bbox_diag", comp.bbox.diag()}});
            ++k;
        }
        return comps;
    };
    ctx.manifest["ergosphere"] = dump(ergo, "ergosphere");
    ctx.manifest["restricted_ergosphere"] = dump(restricted, "restricted_ergosphere");

    // outermost restricted curve must lie inside-or-on the outermost ergosphere
    double band = 2.0 * window.diag() / res;
    ContainmentReport rep = containment_check(restricted.components.front().curve,
                                              ergo.components.front().curve, band);
    ctx.manifest["containment"] = {{"verdict", rep.verdict == ContainmentVerdict::inside
                                                   ? "inside"
                                                   : rep.verdict == ContainmentVerdict::touching
                                                         ? "touching"
                                                         : "violated"},
                                   {"touching_points", rep.touching_points.size()}};
    json touch = json::array();
    for (const auto& p : rep.touching_points) touch.push_back({p.x(), p.y()});
    ctx.manifest["containment"]["points"] = touch;
    ctx.add_check("restricted_inside_ergosphere", rep.violated_points.size(), 0,
                  rep.verdict != ContainmentVerdict::violated);
}

// ---------------------------------------------------------------------------
// horizon: closed-characteristic search.
// ---------------------------------------------------------------------------
inline void cmd_horizon(RunContext& ctx) {
    auto keys = metric_keys();
    keys.insert({"command", "seed", "window.rho_min", "window.rho_max", "window.z_min",
                 "window.z_max", "search.n_seeds", "search.step", "search.resolution",
                 "search.max_loops", "assert.expect"});
    ctx.cfg.validate_keys(keys);
    MetricHandle mh = metric_from_config(ctx.cfg);
    Bbox window;
    window.expand(Vec2(ctx.cfg.get_double("window.rho_min", -4), ctx.cfg.get_double("window.z_min", -4)));
    window.expand(Vec2(ctx.cfg.get_double("window.rho_max", 4), ctx.cfg.get_double("window.z_max", 4)));
    ClosedSearchOptions opt;
    opt.n_seeds = int(ctx.cfg.get_int("search.n_seeds", 16));
    opt.step = ctx.cfg.get_double("search.step", 1e-3);
    opt.trace_resolution = int(ctx.cfg.get_int("search.resolution", 512));
    opt.max_loops = ctx.cfg.get_double("search.max_loops", 3.0);

    ClosedSearchResult res = find_closed_characteristic(mh.metric, window, opt);
    json seeds = json::array();
    for (const auto& s : res.seeds)
        seeds.push_back({{"seed", {s.seed.x(), s.seed.y()}},
                         {"exit", to_string(s.reason)},
                         {"near_miss", s.near_miss},
                         {"length", s.length},
                         {"grazing_composite", s.grazing_composite}});
    ctx.manifest["certificate"] = {{"zero_set_found", res.zero_set_found},
                                   {"closed_found", res.horizon.has_value()},
                                   {"seeds", seeds},
                                   {"note", res.note}};
    if (res.horizon) {
        fs::path file = ctx.out_dir / "horizon.csv";
        write_curve_csv(file, *res.horizon);
        ctx.add_output(file);
        CharReport cr = characteristic_residual(mh.metric, *res.horizon);
        ctx.manifest["classification"] = to_string(cr.classification);
        ctx.add_check_leq("horizon_characteristic_residual", cr.residual, 1e-5);
    }
    if (ctx.cfg.has("assert.expect")) {
        std::string expect = ctx.cfg.get_string("assert.expect");
        bool want_closed = expect == "closed";
        ctx.add_check("closed_characteristic_expectation", res.horizon.has_value() ? 1 : 0,
                      want_closed ? 1 : 0, res.horizon.has_value() == want_closed);
    }
}

// ---------------------------------------------------------------------------
// check-surface: classify a curve loaded from CSV against a metric.
// ---------------------------------------------------------------------------
inline void cmd_check_surface(RunContext& ctx) {
    auto keys = metric_keys();
    keys.insert({"command", "seed", "curve.path", "assert.classification"});
    ctx.cfg.validate_keys(keys);
    MetricHandle mh = metric_from_config(ctx.cfg);
    PlaneCurve curve = read_curve_csv(ctx.cfg.get_string("curve.path"));
    CharReport rep = characteristic_residual(mh.metric, curve);
    ctx.manifest["surface"] = {{"points", curve.pts.size()},
                               {"residual", rep.residual},
                               {"flux_min", rep.flux_min},
                               {"flux_max", rep.flux_max},
                               {"classification", to_string(rep.classification)}};
    if (ctx.cfg.has("assert.classification")) {
        std::string want = ctx.cfg.get_string("assert.classification");
        ctx.add_check("classification_expectation", 0, 0,
                      want == to_string(rep.classification));
    }
}

// ---------------------------------------------------------------------------
// design: build a metric with a prescribed horizon and verify it.
// ---------------------------------------------------------------------------
inline void cmd_design(RunContext& ctx) {
    ctx.cfg.validate_keys({"command", "seed", "curve.", "design.dim"});
    PlaneCurve curve = curve_from_config(ctx.cfg, "curve.");
    int dim = int(ctx.cfg.get_int("design.dim", 2));
    HorizonMetric hm = build_horizon_metric(curve, dim);

    CharReport rep = characteristic_residual(hm.metric, hm.surface);
    double dmax = 0;
    for (const auto& p : hm.surface.pts) dmax = std::max(dmax, std::abs(delta(hm.metric, p)));
    // eikonal identity via finite differences at tube probes (fourth order)
    double eik = 0;
    auto a_of = [&](const Vec2& q) { return hm.eikonal->eval(q).a; };
    for (std::size_t k = 0; k < hm.surface.pts.size(); k += hm.surface.pts.size() / 16 + 1) {
        Vec2 p = hm.surface.pts[k];
        double h = 1e-3;
        auto d1 = [&](const Vec2& e) {
            return (-a_of(p + 2 * h * e) + 8 * a_of(p + h * e) - 8 * a_of(p - h * e) +
                    a_of(p - 2 * h * e)) /
                   (12 * h);
        };
        double gx = d1(Vec2(1, 0)), gy = d1(Vec2(0, 1));
        eik = std::max(eik, std::abs(gx * gx + gy * gy - a_of(p)));
    }
    ctx.add_check_leq("characteristic_residual", rep.residual, 1e-8);
    ctx.add_check_leq("delta_on_surface", dmax, 1e-8);
    ctx.add_check("black_hole_classification", 0, 0,
                  rep.classification == SurfaceClass::black_hole);
    ctx.add_check_leq("eikonal_identity_fd", eik, 1e-6);

    fs::path curve_file = ctx.out_dir / "designed_curve.csv";
    write_curve_csv(curve_file, hm.surface);
    ctx.add_output(curve_file);
    fs::path spec_file = ctx.out_dir / "designed_metric.cfg";
    {
        std::ofstream out(spec_file);
        out << "metric.family = horizon_design\n";
        out << "metric.curve.kind = csv\n";
        out << "metric.curve.path = " << curve_file.string() << "\n";
        out << "metric.design.dim = " << dim << "\n";
    }
    ctx.add_output(spec_file);
    ctx.manifest["verification"] = {{"classification", to_string(rep.classification)},
                                    {"flux_max", rep.flux_max}};
}

// ---------------------------------------------------------------------------
// perturb: bump-perturb a Kerr flow metric; report the characteristic
// violation and the closed-characteristic certificate.
// ---------------------------------------------------------------------------
inline void cmd_perturb(RunContext& ctx) {
    ctx.cfg.validate_keys({"command", "seed", "metric.", "bump.", "search.n_seeds",
                           "search.step"});
    KerrParams kp{ctx.cfg.get_double("metric.m", 1.0), ctx.cfg.get_double("metric.a", 0.5)};
    auto [rp, rm] = kerr_horizon_radii(kp);
    (void)rm;
    BumpSpec spec;
    spec.center = Vec2(ctx.cfg.get_double("bump.center_rho", std::sqrt(2.0 * kp.m * rp)),
                       ctx.cfg.get_double("bump.center_z", 0.0));
    spec.radius = ctx.cfg.get_double("bump.radius", 0.35);
    spec.epsilon = ctx.cfg.get_double("bump.epsilon", 0.05);

    FlowForm base = kerr_flow_form(kp);
    FlowForm pert = perturb_metric_bump(base, spec);
    StationaryMetric g0 = build_flow_metric(base);
    StationaryMetric ge = build_flow_metric(pert);

    // Delta1 is untouched; the characteristic condition fails only in U0
    PlaneCurve ell = kerr_horizon_ellipse(kp, rp, 2000);
    double d1_change = 0, inside = 0, outside = 0;
    std::mt19937_64 rng(ctx.seed);
    std::uniform_real_distribution<double> ur(-0.5, 0.5);
    for (int k = 0; k < 400; ++k) {
        Vec2 p = spec.center + Vec2(ur(rng), ur(rng));
        d1_change = std::max(d1_change, std::abs(delta1(ge, p) - delta1(g0, p)));
    }
    for (std::size_t k = 0; k < ell.pts.size(); ++k) {
        Eigen::Matrix2d B = ge.block2(ell.pts[k]);
        Vec2 n = ell.normals[k];
        double q = std::abs(n.dot(B * n)) / B.cwiseAbs().maxCoeff();
        ((ell.pts[k] - spec.center).norm() < spec.radius ? inside : outside) =
            std::max((ell.pts[k] - spec.center).norm() < spec.radius ? inside : outside, q);
    }
    ctx.add_check_leq("delta1_preserved", d1_change, 1e-12);
    ctx.add_check("characteristic_violation_inside_bump", inside, 1e-3, inside > 1e-3);
    ctx.add_check_leq("characteristic_residual_outside_bump", outside, 1e-10);

    Bbox window;
    window.expand(Vec2(-2.4, -2.4));
    window.expand(Vec2(2.4, 2.4));
    ClosedSearchOptions opt;
    opt.n_seeds = int(ctx.cfg.get_int("search.n_seeds", 32));
    opt.step = ctx.cfg.get_double("search.step", 2e-3);
    ClosedSearchResult res = find_closed_characteristic(ge, window, opt);
    json seeds = json::array();
    for (const auto& s : res.seeds)
        seeds.push_back({{"seed", {s.seed.x(), s.seed.y()}},
                         {"exit", to_string(s.reason)},
                         {"near_miss", s.near_miss},
                         {"grazing_composite", s.grazing_composite}});
    ctx.manifest["certificate"] = {{"zero_set_found", res.zero_set_found},
                                   {"closed_found", res.horizon.has_value()},
                                   {"trajectories", seeds.size()},
                                   {"seeds", seeds}};
    ctx.add_check("no_closed_characteristic", res.horizon.has_value() ? 1 : 0, 0,
                  !res.horizon.has_value());

    fs::path spec_file = ctx.out_dir / "perturbed_metric.cfg";
    {
        std::ofstream out(spec_file);
        out << "metric.family = kerr_bump\n";
        out << "metric.m = " << format_g17(kp.m) << "\n";
        out << "metric.a = " << format_g17(kp.a) << "\n";
        out << "bump.center_rho = " << format_g17(spec.center.x()) << "\n";
        out << "bump.center_z = " << format_g17(spec.center.y()) << "\n";
        out << "bump.radius = " << format_g17(spec.radius) << "\n";
        out << "bump.epsilon = " << format_g17(spec.epsilon) << "\n";
    }
    ctx.add_output(spec_file);
}

// ---------------------------------------------------------------------------
// wave: drive a simulation from grid/time/init keys.
// ---------------------------------------------------------------------------
inline SimConfig sim_config_from(const KeyValueConfig& cfg, const MetricHandle& mh) {
    SimConfig sim;
    sim.metric = mh.metric;
    sim.grid.rho_min = cfg.get_double("grid.rho_min", 0.0);
    sim.grid.rho_max = cfg.get_double("grid.rho_max", 12.0);
    sim.grid.z_min = cfg.get_double("grid.z_min", -12.0);
    sim.grid.z_max = cfg.get_double("grid.z_max", 12.0);
    sim.grid.n_rho = int(cfg.get_int("grid.n_rho", 200));
    sim.grid.n_z = int(cfg.get_int("grid.n_z", 400));
    std::string outer = cfg.get_string("boundary.outer", "sponge");
    sim.outer = outer == "reflecting" ? OuterBC::reflecting
                                      : outer == "free" ? OuterBC::free_wall : OuterBC::sponge;
    sim.sponge_frac = cfg.get_double("sponge.frac", 0.15);
    sim.sponge_sigma = cfg.get_double("sponge.sigma", 10.0);
    sim.cfl = cfg.get_double("time.cfl", 0.4);
    sim.ko_eps = cfg.get_double("time.ko_eps", 0.5);
    if (cfg.has("time.dt")) sim.dt_override = cfg.get_double("time.dt");
    sim.t_final = cfg.get_double("time.t_final", 10.0);
    sim.sample_every = int(cfg.get_int("time.sample_every", 0));
    if (cfg.get_bool("excise", mh.horizon.has_value()) && mh.horizon) sim.excision = *mh.horizon;
    double cx = cfg.get_double("init.center_rho", 5.0);
    double cy = cfg.get_double("init.center_z", 0.0);
    double w = cfg.get_double("init.width", 0.8);
    double amp = cfg.get_double("init.amplitude", 1.0);
    sim.u0 = [cx, cy, w, amp](double x, double y) {
        double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        return amp * std::exp(-r2 / (w * w));
    };
    return sim;
}

inline void cmd_wave(RunContext& ctx) {
    ctx.cfg.validate_keys({"command", "seed", "metric.", "bump.", "grid.", "time.", "init.",
                           "boundary.outer", "sponge.", "excise", "output.snapshot",
                           "assert.balance_rtol"});
    MetricHandle mh = metric_from_config(ctx.cfg);
    SimConfig sim = sim_config_from(ctx.cfg, mh);
    double balance_rtol = ctx.cfg.get_double("assert.balance_rtol", 0.05);
    SimResult res = run_simulation(sim, balance_rtol);

    std::vector<std::vector<double>> rows;
    const EnergyReport& rep = res.report;
    for (std::size_t k = 0; k < rep.times.size(); ++k)
        rows.push_back({rep.times[k], rep.E[k], rep.E1[k], rep.E2[k], rep.flux[k], rep.sup_u[k]});
    fs::path efile = ctx.out_dir / "energies.csv";
    write_csv(efile, {"t", "E", "E1", "E2", "flux", "sup_u"}, rows);
    ctx.add_output(efile);

    if (ctx.cfg.get_bool("output.snapshot", false)) {
        WaveSolver solver(sim);  // re-run deterministically for the final field
        int steps = int(std::ceil(sim.t_final / solver.suggested_dt() - 1e-12));
        for (int k = 0; k < steps; ++k) solver.step(sim.t_final / steps);
        std::vector<std::vector<double>> snap;
        for (const auto& row : solver.snapshot()) snap.push_back({row[0], row[1], row[2]});
        fs::path sfile = ctx.out_dir / "snapshot.csv";
        write_csv(sfile, {"rho", "z", "u"}, snap);
        ctx.add_output(sfile);
    }
    ctx.manifest["schwarzschild_type"] = res.schwarzschild_type;
    ctx.manifest["dt"] = rep.dt;
    for (const auto& c : res.checks) ctx.add_check(c.name, c.value, c.threshold, c.pass);
}

// ---------------------------------------------------------------------------
// travel-time: lambda profile and cumulative time along a straight path.
// ---------------------------------------------------------------------------
inline void cmd_travel_time(RunContext& ctx) {
    ctx.cfg.validate_keys(
        {"command", "seed", "metric.", "bump.", "path.from", "path.to", "path.samples"});
    MetricHandle mh = metric_from_config(ctx.cfg);
    std::vector<double> from = ctx.cfg.get_doubles("path.from");
    std::vector<double> to = ctx.cfg.get_doubles("path.to");
    if (int(from.size()) != mh.metric.arity() || int(to.size()) != mh.metric.arity())
        throw ConfigValidationError("path.from", "endpoint arity does not match the metric");
    PointN a(from.size()), b(to.size());
    for (std::size_t k = 0; k < from.size(); ++k) a[k] = from[k];
    for (std::size_t k = 0; k < to.size(); ++k) b[k] = to[k];
    ParamPath path = line_path(a, b);
    int samples = int(ctx.cfg.get_int("path.samples", 64));

    std::vector<std::vector<double>> rows;
    double vieta_worst = 0;
    for (int k = 1; k <= samples; ++k) {
        double sigma = double(k) / samples;
        LambdaPair l = lambda_pm(mh.metric, path, sigma);
        double T = travel_time(mh.metric, path, sigma);
        rows.push_back({sigma, l.plus, l.minus, T});
        // Vieta residuals against the restricted coefficients
        MetricMatrix cov = mh.metric.cov_at(path.pos(sigma));
        PointN v = path.vel(sigma);
        double a00 = cov(0, 0), a01 = 0, a11 = 0;
        for (int j = 1; j <= int(v.size()); ++j) {
            a01 += cov(0, j) * v[j - 1];
            for (int q = 1; q <= int(v.size()); ++q) a11 += cov(j, q) * v[j - 1] * v[q - 1];
        }
        vieta_worst = std::max(vieta_worst, std::abs(l.plus * l.minus - a00 / a11));
        vieta_worst = std::max(vieta_worst, std::abs(l.plus + l.minus + 2 * a01 / a11));
    }
    fs::path file = ctx.out_dir / "travel_time.csv";
    write_csv(file, {"sigma", "lambda_plus", "lambda_minus", "T"}, rows);
    ctx.add_output(file);
    ctx.add_check_leq("vieta_identity", vieta_worst, 1e-12);
}

// ---------------------------------------------------------------------------
// dn: boundary trace of a driven slab, with optional echo analysis.
// ---------------------------------------------------------------------------
inline void cmd_dn(RunContext& ctx) {
    ctx.cfg.validate_keys({"command", "seed", "metric.", "bump.", "grid.", "time.t_final",
                           "time.sample_every", "pulse.t0", "pulse.width", "pulse.amplitude",
                           "echo.enable", "echo.rtol"});
    MetricHandle mh = metric_from_config(ctx.cfg);
    DNConfig dn;
    dn.metric = mh.metric;
    dn.grid.rho_min = ctx.cfg.get_double("grid.rho_min", 0.0);
    dn.grid.rho_max = ctx.cfg.get_double("grid.rho_max", 0.5);
    dn.grid.z_min = ctx.cfg.get_double("grid.z_min", 0.0);
    dn.grid.z_max = ctx.cfg.get_double("grid.z_max", 4.0);
    dn.grid.n_rho = int(ctx.cfg.get_int("grid.n_rho", 8));
    dn.grid.n_z = int(ctx.cfg.get_int("grid.n_z", 1024));
    double t0 = ctx.cfg.get_double("pulse.t0", 0.3);
    double width = ctx.cfg.get_double("pulse.width", 0.8);
    double amp = ctx.cfg.get_double("pulse.amplitude", 1.0);
    dn.f = [=](double t, double) {
        double s = 2.0 * (t - t0) / width - 1.0;
        return s * s >= 1.0 ? 0.0 : amp * std::exp(1.0 - 1.0 / (1.0 - s * s));
    };
    dn.fdot = [=](double t, double) {
        double s = 2.0 * (t - t0) / width - 1.0;
        if (s * s >= 1.0) return 0.0;
        double f = std::exp(1.0 - 1.0 / (1.0 - s * s));
        return amp * f * (-2.0 * s / ((1.0 - s * s) * (1.0 - s * s))) * (2.0 / width);
    };
    dn.t_final = ctx.cfg.get_double("time.t_final", 10.0);
    dn.sample_every = int(ctx.cfg.get_int("time.sample_every", 8));
    DNTrace tr = dn_operator(dn);

    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < tr.times.size(); ++k)
        for (std::size_t i = 0; i < tr.s.size(); ++i)
            rows.push_back({tr.times[k], tr.s[i], tr.values[k][i]});
    fs::path file = ctx.out_dir / "dn_trace.csv";
    write_csv(file, {"t", "s", "value"}, rows);
    ctx.add_output(file);

    if (ctx.cfg.get_bool("echo.enable", false)) {
        double mid = 0.5 * (dn.grid.rho_min + dn.grid.rho_max);
        ParamPath path = line_path(point2(mid, dn.grid.z_min), point2(mid, dn.grid.z_max));
        double T_one_way = travel_time(mh.metric, path, 1.0);
        double t_echo = first_arrival(tr, t0 + width + 0.2);
        double expected = t0 + 2.0 * T_one_way;
        ctx.manifest["echo"] = {{"one_way_travel_time", T_one_way},
                                {"first_arrival", t_echo},
                                {"expected", expected}};
        double rtol = ctx.cfg.get_double("echo.rtol", 0.05);
        ctx.add_check("echo_matches_travel_time",
                      t_echo > 0 ? std::abs(t_echo - expected) / expected : 1.0, rtol,
                      t_echo > 0 && std::abs(t_echo - expected) / expected <= rtol);
    }
}

}  // namespace ergolab::cli
