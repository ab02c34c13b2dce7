#pragma once

#include "dsl/field_io.hpp"
#include "dsl/gaussian_ansatz.hpp"
#include "dsl/scenario.hpp"
#include "dsl/spectral.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace dsl {

inline constexpr int exit_ok = 0;
inline constexpr int exit_error = 1;
inline constexpr int exit_breach = 2;

struct RunReport {
    int exit_code = exit_ok;
    std::string status = "ok";  // ok | breach | error
    json summary;
    std::vector<std::string> artifacts;
    std::vector<std::string> warnings;
};

inline json codata_json() {
    return {{"hbar", codata::hbar},
            {"G", codata::G},
            {"c", codata::c},
            {"electron_mass", codata::electron_mass},
            {"neutron_mass", codata::neutron_mass}};
}

namespace detail {

// Writes files into the output directory and records them in order.
class ArtifactSink {
public:
    explicit ArtifactSink(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
        const auto path = dir_ / name;
        std::ofstream os(path, std::ios::binary);
        if (!os) throw Error("cannot write " + path.string());
        os << std::setprecision(csv_precision);
        body(os);
        if (!os) throw Error("write failed for " + path.string());
        names_.push_back(name);
    }

    void write_json(const std::string& name, const json& j) {
        write(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }

    const std::vector<std::string>& names() const { return names_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> names_;
};

struct RunContext {
    const Scenario& s;
    ArtifactSink& out;
    std::vector<std::string>& warnings;
    json& results;
};

inline json vec_out(const Vec3& v, int dims) { return vec_json(v, dims); }

inline json matrix_json(const Matrix4c& m) {
    json rows = json::array();
    for (int i = 0; i < 4; ++i) {
        json row = json::array();
        for (int j = 0; j < 4; ++j) row.push_back(complex_json(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

inline std::size_t step_count(const TimeControls& tc) {
    return static_cast<std::size_t>(std::ceil((tc.t_final - tc.t0) / tc.dt - 1e-9));
}

inline void csv_vec(std::ostream& os, const Vec3& v, int dims) {
    for (int a = 0; a < dims; ++a) os << ',' << v[a];
}

inline void csv_vec_header(std::ostream& os, const char* prefix, int dims) {
    for (int a = 0; a < dims; ++a) os << ',' << prefix << '_' << axis_name(a);
}

// ---------------------------------------------------------------------------

inline void run_evolve(RunContext& ctx) {
    const Scenario& s = ctx.s;
    const int dims = s.dims;
    const Grid grid = s.make_grid();
    const PilotWave pilot = s.pilot_wave();
    SpectralOps ops(grid);

    const ComplexField phi0 = s.soliton->sample(grid);
    SolitonState state = make_soliton_state(phi0, pilot, s.time.t0);
    const Vec3 x_start = state.barycentre();
    const double n_start = state.norm();
    const std::size_t n = step_count(s.time);
    const double h = (s.time.t_final - s.time.t0) / static_cast<double>(n);

    SolitonOptions opt;
    opt.breach_threshold = s.breach_threshold;

    // de Broglie-Bohm path of the initial barycentre, sampled on the same clock.
    std::optional<Trajectory> guide;
    try {
        GuidanceOptions go;
        go.stride = s.time.sample_every;
        guide = integrate_trajectory(pilot, x_start, s.time.t0, s.time.t_final, h, go);
    } catch (const NodeProximity& e) {
        ctx.warnings.push_back(std::string("NodeProximity: reference trajectory unavailable: ") + e.what());
    }

    struct Row {
        double t, norm, shape_error, width_ratio;
        Vec3 x0, v_drift, v_dbb, v_int;
    };
    std::vector<Row> rows;
    std::vector<NormSample> norms;
    double max_residual = 0.0, max_shape = 0.0, max_guide_dev = 0.0;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    auto record = [&](const SolitonState& st, bool has_step) {
        Row r{};
        r.t = st.time;
        r.x0 = st.barycentre();
        r.norm = st.norm();
        r.width_ratio = st.width_ratio;
        ComplexField ref = ops.translate(phi0, r.x0 - x_start);
        ref *= std::sqrt(r.norm / n_start);
        r.shape_error = shape_error(st.phi, ref);
        max_shape = std::max(max_shape, r.shape_error);
        if (has_step) {
            const auto d = drift_decomposition(st);
            r.v_drift = d.v_drift;
            r.v_dbb = d.v_dbb;
            r.v_int = d.v_int;
            const double vd = norm(d.v_drift);
            if (vd > 0.0) max_residual = std::max(max_residual, norm(d.residual()) / vd);
        } else {
            r.v_drift = {nan, nan, nan};
            r.v_dbb = s.constants.hbar_over_mass() * phase_data(pilot, st.time, r.x0, 0.0).grad_phase;
            r.v_int = internal_velocity(st.phi, s.constants);
        }
        if (guide) {
            const std::size_t k = rows.size();
            if (k < guide->positions.size()) max_guide_dev = std::max(max_guide_dev, norm(r.x0 - guide->positions[k]));
        }
        rows.push_back(r);
        norms.push_back(norm_sample(st));
    };

    record(state, false);
    SolitonEvolver ev(grid, opt);
    ev.run(state, h, n, [&](const SolitonState& st, std::size_t i) {
        if (i % s.time.sample_every == 0 || i == n) record(st, true);
    });
    for (const auto& w : state.warnings) ctx.warnings.push_back(w);

    ctx.out.write("evolve.csv", [&](std::ostream& os) {
        os << 't';
        csv_vec_header(os, "x0", dims);
        os << ",norm";
        csv_vec_header(os, "v_drift", dims);
        csv_vec_header(os, "v_dbb", dims);
        csv_vec_header(os, "v_int", dims);
        os << ",shape_error,width_ratio\n";
        for (const auto& r : rows) {
            os << r.t;
            csv_vec(os, r.x0, dims);
            os << ',' << r.norm;
            csv_vec(os, r.v_drift, dims);
            csv_vec(os, r.v_dbb, dims);
            csv_vec(os, r.v_int, dims);
            os << ',' << r.shape_error << ',' << r.width_ratio << '\n';
        }
    });
    ctx.out.write("field_final.csv", [&](std::ostream& os) { write_field_csv(state.phi, os); });

    json& res = ctx.results;
    res["steps"] = n;
    res["dt_used"] = h;
    res["final_time"] = state.time;
    res["final_barycentre"] = vec_out(state.barycentre(), dims);
    res["norm_ratio"] = state.norm() / n_start;
    res["shape_error"] = rows.back().shape_error;
    res["max_shape_error"] = max_shape;
    res["max_width_ratio"] = state.max_width_ratio;
    res["max_drift_residual_relative"] = max_residual;
    if (guide) res["max_barycentre_deviation"] = max_guide_dev;
    if (norms.size() >= 3) {
        const auto nr = norm_evolution_check(norms);
        res["norm_law"] = {{"max_rate_deviation", nr.max_rate_deviation},
                           {"max_ratio_deviation", nr.max_ratio_deviation},
                           {"max_norm_drift", nr.max_norm_drift}};
    }
}

inline GaussianSolitonParams gaussian_from_profile(const SolitonProfile& p, int dims, double t0) {
    const double a0 = 1.0 / (p.scale * p.scale);
    GaussianSolitonParams g;
    g.dims = dims;
    g.time = t0;
    for (int a = 0; a < dims; ++a) {
        const double c = p.center[a], q = p.momentum[a];
        g.axes[a] = {Complex(a0, 0.0), Complex(a0 * c, q), Complex(-0.5 * a0 * c * c, 0.0 - q * c)};
    }
    g.validate();
    return g;
}

inline void run_gaussian(RunContext& ctx) {
    const Scenario& s = ctx.s;
    const PilotWave pilot = s.pilot_wave();
    const auto p0 = gaussian_from_profile(*s.soliton, s.dims, s.time.t0);
    const auto tr = integrate_params(p0, pilot, s.time.t_final, s.time.dt, s.time.sample_every);
    const auto& last = tr.samples.back();

    ctx.out.write("gaussian.csv", [&](std::ostream& os) { write_gaussian_csv(tr.samples, os); });
    try {
        const ComplexField f = params_to_field(last, s.make_grid());
        ctx.out.write("field_final.csv", [&](std::ostream& os) { write_field_csv(f, os); });
    } catch (const InvalidArgument& e) {
        ctx.warnings.push_back(std::string("field reconstruction skipped: ") + e.what());
    }

    json& res = ctx.results;
    res["samples"] = tr.samples.size();
    res["final_time"] = last.time;
    res["final_barycentre"] = vec_out(last.barycentre(), s.dims);
    res["max_a_drift"] = tr.max_a_drift;
    res["max_im_b_drift"] = tr.max_im_b_drift;
    try {
        GuidanceOptions go;
        go.stride = s.time.sample_every;
        const std::size_t n = step_count(s.time);
        const double h = (s.time.t_final - s.time.t0) / static_cast<double>(n);
        const auto guide = integrate_trajectory(pilot, p0.barycentre(), s.time.t0, s.time.t_final, h, go);
        double dev = 0.0;
        for (std::size_t k = 0; k < std::min(guide.positions.size(), tr.samples.size()); ++k)
            dev = std::max(dev, norm(tr.samples[k].barycentre() - guide.positions[k]));
        res["max_barycentre_deviation"] = dev;
    } catch (const NodeProximity& e) {
        ctx.warnings.push_back(std::string("NodeProximity: reference trajectory unavailable: ") + e.what());
    }
}

inline std::vector<Vec3> initial_ensemble(const Scenario& s, const PilotWave& pilot) {
    const auto& e = s.ensemble;
    if (!e.initial.empty()) return e.initial;
    const Bins table = Bins::uniform(s.dims, e.lower, e.upper, e.table_bins);
    switch (e.sampling) {
        case Sampling::born: return sample_born(pilot, s.time.t0, table, e.size, s.seed);
        case Sampling::uniform: return sample_uniform(table, e.size, s.seed);
        case Sampling::histogram: return sample_histogram(table, e.weights, e.size, s.seed);
    }
    return {};
}

inline Ensemble run_ensemble(RunContext& ctx, const PilotWave& pilot) {
    const Scenario& s = ctx.s;
    GuidanceOptions go;
    go.stride = s.time.sample_every;
    const std::size_t n = step_count(s.time);
    const double h = (s.time.t_final - s.time.t0) / static_cast<double>(n);
    Ensemble ens = evolve_ensemble(pilot, initial_ensemble(s, pilot), s.ensemble.sampling, s.time.t0, s.time.t_final,
                                   h, go, s.threads);
    if (ens.lost_count() > 0)
        ctx.warnings.push_back("NodeProximity: " + std::to_string(ens.lost_count()) + " trajectories lost near nodes");
    ctx.results["ensemble_size"] = ens.size();
    ctx.results["lost"] = ens.lost_count();
    ctx.results["dt_used"] = h;
    return ens;
}

inline std::vector<double> axis_values(const std::vector<Vec3>& xs, int a) {
    std::vector<double> v;
    v.reserve(xs.size());
    for (const auto& x : xs) v.push_back(x[a]);
    return v;
}

inline void run_trajectories(RunContext& ctx) {
    const Scenario& s = ctx.s;
    const PilotWave pilot = s.pilot_wave();
    const Ensemble ens = run_ensemble(ctx, pilot);
    ctx.out.write("trajectories.csv", [&](std::ostream& os) {
        os << 't';
        for (std::size_t i = 0; i < ens.size(); ++i)
            for (int a = 0; a < s.dims; ++a) os << ',' << axis_name(a) << i;
        os << '\n';
        for (std::size_t k = 0; k < ens.times.size(); ++k) {
            os << ens.times[k];
            for (std::size_t i = 0; i < ens.size(); ++i) csv_vec(os, ens.positions[k][i], s.dims);
            os << '\n';
        }
    });
    if (s.ensemble.initial.empty()) {
        const Bins table = Bins::uniform(s.dims, s.ensemble.lower, s.ensemble.upper, s.ensemble.table_bins);
        const auto final_pos = ens.alive(ens.times.size() - 1);
        json ks = json::array();
        for (int a = 0; a < s.dims; ++a)
            ks.push_back(ks_statistic(axis_values(final_pos, a), born_marginal_cdf(pilot, ens.times.back(), table, a)));
        ctx.results["ks_final"] = ks;
        ctx.results["ks_critical_1pct"] = ks_critical_1pct(final_pos.size());
    }
}

inline void run_relax(RunContext& ctx) {
    const Scenario& s = ctx.s;
    const PilotWave pilot = s.pilot_wave();
    const Ensemble ens = run_ensemble(ctx, pilot);
    const Bins bins = Bins::uniform(s.dims, s.relax.lower, s.relax.upper, s.relax.bins);
    const std::size_t fine[] = {4096, 256, 64};
    const Bins table = Bins::uniform(s.dims, s.relax.lower, s.relax.upper, fine[s.dims - 1]);

    json report = json::array();
    std::vector<double> hs;
    std::size_t max_outside = 0;
    for (std::size_t k = 0; k < ens.times.size(); ++k) {
        const double t = ens.times[k];
        std::vector<Vec3> inside;
        for (const auto& x : ens.alive(k))
            if (bins.index(x) != bins.size()) inside.push_back(x);
        max_outside = std::max(max_outside, ens.size() - ens.lost_count() - inside.size());
        if (inside.empty()) throw NumericalError("every sample left the relaxation box at t = " + std::to_string(t));
        const double hval = relaxation_h(inside, pilot, t, bins);
        json ks = json::array();
        for (int a = 0; a < s.dims; ++a)
            ks.push_back(ks_statistic(axis_values(inside, a), born_marginal_cdf(pilot, t, table, a)));
        report.push_back({{"t", t}, {"H", hval}, {"ks", ks}, {"samples", inside.size()}});
        hs.push_back(hval);
    }
    if (max_outside > 0)
        ctx.warnings.push_back("up to " + std::to_string(max_outside) + " samples fell outside the relaxation box");

    ctx.out.write("relaxation.csv", [&](std::ostream& os) {
        os << "t,H";
        for (int a = 0; a < s.dims; ++a) os << ",ks_" << axis_name(a);
        os << '\n';
        for (const auto& r : report) {
            os << r["t"].get<double>() << ',' << r["H"].get<double>();
            for (const auto& v : r["ks"]) os << ',' << v.get<double>();
            os << '\n';
        }
    });
    ctx.out.write_json("relaxation.json", {{"bins_per_axis", s.relax.bins}, {"series", report}});
    ctx.results["H_initial"] = hs.front();
    ctx.results["H_final"] = hs.back();
    ctx.results["H_ratio"] = hs.front() > 0.0 ? hs.back() / hs.front() : 0.0;
}

inline void run_phases(RunContext& ctx) {
    const Scenario& s = ctx.s;
    const auto& cfg = s.experiment;
    const auto std_th = theta_standard(cfg);

    ctx.out.write("phases.csv", [&](std::ostream& os) {
        os << "model,mass_A,mass_B,path_A,path_B,theta,self_A,self_B,cross\n";
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                os << "standard,,," << branch_name(i) << ',' << branch_name(j) << ',' << std_th[i][j] << ",0,0,"
                   << std_th[i][j] << '\n';
        for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) {
                const auto t = theta_soliton_terms(cfg, k, l);
                const auto tot = t.total();
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        os << "soliton," << branch_name(k) << ',' << branch_name(l) << ',' << branch_name(i) << ','
                           << branch_name(j) << ',' << tot[i][j] << ',' << t.self_A[i][j] << ',' << t.self_B[i][j]
                           << ',' << t.cross[i][j] << '\n';
            }
    });

    const auto standard = final_state_standard(cfg);
    const auto soliton = final_state_soliton(cfg, s.branch_probabilities);
    ctx.out.write_json("density_matrices.json",
                       {{"basis", {"++", "+-", "-+", "--"}},
                        {"standard", matrix_json(standard.rho)},
                        {"soliton", matrix_json(soliton.rho)}});

    const auto rep = tomography_report(standard, soliton);
    json phase = json::array();
    for (int i = 0; i < 4; ++i) {
        json row = json::array();
        for (int j = 0; j < 4; ++j) row.push_back(rep.phase_difference(i, j));
        phase.push_back(row);
    }
    const json tomo = {{"purity_standard", rep.purity_standard},
                       {"purity_soliton", rep.purity_soliton},
                       {"fidelity", rep.fidelity},
                       {"negativity_standard", rep.negativity_standard},
                       {"negativity_soliton", rep.negativity_soliton},
                       {"phase_difference", phase}};
    ctx.out.write_json("tomography.json", tomo);

    const auto dA = single_device_dephasing(cfg.m_A, cfg.R_A, *cfg.intra_A, cfg.tau, cfg.constants, cfg.amp_A[0], cfg.amp_A[1]);
    const auto dB = single_device_dephasing(cfg.m_B, cfg.R_B, *cfg.intra_B, cfg.tau, cfg.constants, cfg.amp_B[0], cfg.amp_B[1]);
    ctx.results["tomography"] = tomo;
    ctx.results["dephasing"] = {{"A", dA.magnitude}, {"B", dB.magnitude}};
    ctx.results["phase_rows"] = 20;
}

inline void run_selfgrav(RunContext& ctx) {
    const Scenario& s = ctx.s;
    const auto& g = s.selfgrav;
    const SelfGravitySphere sphere{g.mass, g.radius};
    sphere.validate();
    ctx.out.write("potential.csv", [&](std::ostream& os) {
        os << "d,V\n";
        for (std::size_t i = 0; i < g.points; ++i) {
            const double d = g.d_max * static_cast<double>(i) / static_cast<double>(g.points - 1);
            os << d << ',' << sphere_potential(sphere, d, s.constants) << '\n';
        }
    });
    const auto k = soliton_spring_constant(g.mass, s.constants);
    ctx.results["V_centre"] = sphere_potential(sphere, 0.0, s.constants);
    ctx.results["V_surface"] = sphere_potential(sphere, g.radius, s.constants);
    ctx.results["compton_radius"] = compton_radius(g.mass, s.constants);
    ctx.results["self_coupling_ratio"] = k.ratio;
    ctx.results["k_grav"] = k.k_grav;
    ctx.results["k_focus"] = k.k_focus;
}

}  // namespace detail

/// Runs one scenario, writing its artifacts and summary.json into
/// s.out_dir. Solver failures are reported in the summary (with whatever
/// artifacts were already written) rather than thrown.
inline RunReport run(const Scenario& s) {
    namespace fs = std::filesystem;
    const auto start = std::chrono::steady_clock::now();
    RunReport rep;
    std::error_code ec;
    fs::create_directories(s.out_dir, ec);
    if (ec || !fs::is_directory(s.out_dir)) throw Error("output directory " + s.out_dir + " is not writable");

    detail::ArtifactSink sink(s.out_dir);
    json results = json::object();
    detail::RunContext ctx{s, sink, rep.warnings, results};
    std::string error;
    try {
        switch (s.kind) {
            case ScenarioKind::evolve: detail::run_evolve(ctx); break;
            case ScenarioKind::gaussian: detail::run_gaussian(ctx); break;
            case ScenarioKind::trajectories: detail::run_trajectories(ctx); break;
            case ScenarioKind::relax: detail::run_relax(ctx); break;
            case ScenarioKind::phases: detail::run_phases(ctx); break;
            case ScenarioKind::selfgrav: detail::run_selfgrav(ctx); break;
        }
    } catch (const std::exception& e) {
        error = e.what();
    }

    bool breach = false;
    for (const auto& w : rep.warnings)
        if (w.rfind("ApproximationBreach", 0) == 0) breach = true;
    if (!error.empty()) {
        rep.status = "error";
        rep.exit_code = exit_error;
    } else if (breach && s.fail_on_breach) {
        rep.status = "breach";
        rep.exit_code = exit_breach;
    }

    const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rep.artifacts = sink.names();
    rep.summary = {{"status", rep.status},
                   {"exit_code", rep.exit_code},
                   {"config", to_json(s)},
                   {"constants", constants_json(s.constants)},
                   {"codata", codata_json()},
                   {"runtime_seconds", runtime},
                   {"warnings", rep.warnings},
                   {"artifacts", rep.artifacts},
                   {"results", results}};
    if (!error.empty()) rep.summary["error"] = error;
    sink.write_json("summary.json", rep.summary);
    return rep;
}

}  // namespace dsl
