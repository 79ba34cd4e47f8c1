#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fdkit/divergence.hpp"
#include "fdkit/errors.hpp"
#include "fdkit/estimation.hpp"
#include "fdkit/plants.hpp"
#include "fdkit/projection.hpp"
#include "fdkit/signals.hpp"
#include "fdkit/systems.hpp"

namespace fdkit {

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

enum class FaultKind { none, actuator_bias, sensor_bias, actuator_gain };

inline const char* to_string(FaultKind k) {
    switch (k) {
        case FaultKind::none: return "none";
        case FaultKind::actuator_bias: return "actuator_bias";
        case FaultKind::sensor_bias: return "sensor_bias";
        case FaultKind::actuator_gain: return "actuator_gain";
    }
    return "?";
}

struct FaultSpec {
    FaultKind kind = FaultKind::none;
    double t_on = 0.0;
    VectorXd bias;        // actuator_bias / sensor_bias
    double factor = 1.0;  // actuator_gain
};

struct InputSpec {
    std::string kind = "sinusoid"; // sinusoid | step | file
    VectorXd amplitude;
    VectorXd frequency;
    VectorXd phase;
    bool random_phase = false;
    VectorXd step_value;
    double step_t_on = 0.0;
    std::string path; // kind == file
};

struct Scenario {
    std::string plant = "scalar_lti";
    std::optional<LtiSystem> custom; // plant == lti_custom
    InputSpec input;
    VectorXd x0;
    Grid grid{0.0, 1e-2, 100};
    FaultSpec fault;
    VectorXd noise_u, noise_y;
    int M = 100;
    double gamma = 0.95;
    double alpha = 0.1;
    double burn_in = 0.1;
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Config file: [section] headers with key = value lines; `#` comments.
// ---------------------------------------------------------------------------

namespace detail {

using ConfigMap = std::map<std::string, std::map<std::string, std::string>>;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline ConfigMap parse_config_text(std::istream& in) {
    ConfigMap cfg;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigInvalid("unterminated section on line " + std::to_string(line_no));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigInvalid("expected key = value on line " + std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigInvalid("empty key on line " + std::to_string(line_no));
        cfg[section][key] = val;
    }
    return cfg;
}

inline double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigInvalid("cannot parse number '" + s + "' for " + what);
    }
}

inline VectorXd to_vector(const std::string& s, const std::string& what) {
    std::istringstream is(s);
    std::vector<double> vals;
    std::string tok;
    while (is >> tok) vals.push_back(to_double(tok, what));
    if (vals.empty()) throw ConfigInvalid("empty vector for " + what);
    VectorXd v(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) v(i) = vals[i];
    return v;
}

inline MatrixXd to_matrix(const std::string& s, const std::string& what) {
    std::vector<VectorXd> rows;
    std::string row;
    std::istringstream is(s);
    while (std::getline(is, row, ';'))
        rows.push_back(to_vector(row, what));
    const Eigen::Index cols = rows.front().size();
    MatrixXd m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols)
            throw ConfigInvalid("ragged matrix for " + what);
        m.row(i) = rows[i];
    }
    return m;
}

inline VectorXd resize_to(const VectorXd& v, int dim) {
    if (v.size() == dim) return v;
    if (v.size() == 1) return VectorXd::Constant(dim, v(0));
    throw ConfigInvalid("vector length " + std::to_string(v.size()) +
                        " does not match channel count " + std::to_string(dim));
}

} // namespace detail

inline Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigInvalid("cannot open config '" + path + "'");
    auto cfg = detail::parse_config_text(in);
    auto get = [&](const std::string& sec, const std::string& key,
                   const std::string& fallback) -> std::string {
        auto s = cfg.find(sec);
        if (s == cfg.end()) return fallback;
        auto k = s->second.find(key);
        if (k == s->second.end()) return fallback;
        return k->second;
    };
    auto require = [&](const std::string& sec, const std::string& key) -> std::string {
        const std::string v = get(sec, key, "");
        if (v.empty())
            throw ConfigInvalid("missing [" + sec + "] " + key);
        return v;
    };

    Scenario sc;
    sc.plant = get("plant", "name", "scalar_lti");
    if (sc.plant == "lti_custom") {
        sc.custom = LtiSystem::make(detail::to_matrix(require("plant", "A"), "A"),
                                    detail::to_matrix(require("plant", "B"), "B"),
                                    detail::to_matrix(require("plant", "C"), "C"),
                                    detail::to_matrix(require("plant", "D"), "D"));
    } else if (sc.plant != "scalar_lti" && sc.plant != "scalar_cubic") {
        throw ConfigInvalid("unknown plant '" + sc.plant + "'");
    }

    sc.grid.t0 = detail::to_double(get("grid", "t0", "0"), "t0");
    sc.grid.dt = detail::to_double(require("grid", "dt"), "dt");
    const double steps_d = detail::to_double(require("grid", "steps"), "steps");
    if (!(sc.grid.dt > 0.0) || steps_d < 1 || steps_d != std::floor(steps_d))
        throw ConfigInvalid("grid needs dt > 0 and integer steps >= 1");
    sc.grid.steps = static_cast<int>(steps_d);
    sc.x0 = detail::to_vector(get("grid", "x0", "0"), "x0");

    sc.input.kind = get("input", "kind", "sinusoid");
    if (sc.input.kind == "sinusoid") {
        sc.input.amplitude = detail::to_vector(get("input", "amplitude", "1"), "amplitude");
        sc.input.frequency = detail::to_vector(get("input", "frequency", "1"), "frequency");
        const std::string ph = get("input", "phase", "0");
        if (ph == "random") {
            sc.input.random_phase = true;
        } else {
            sc.input.phase = detail::to_vector(ph, "phase");
        }
    } else if (sc.input.kind == "step") {
        sc.input.step_value = detail::to_vector(get("input", "value", "1"), "step value");
        sc.input.step_t_on = detail::to_double(get("input", "t_on", "0"), "step t_on");
    } else if (sc.input.kind == "file") {
        sc.input.path = require("input", "path");
    } else {
        throw ConfigInvalid("unknown input kind '" + sc.input.kind + "'");
    }

    const std::string fkind = get("fault", "kind", "none");
    if (fkind == "none") sc.fault.kind = FaultKind::none;
    else if (fkind == "actuator_bias") sc.fault.kind = FaultKind::actuator_bias;
    else if (fkind == "sensor_bias") sc.fault.kind = FaultKind::sensor_bias;
    else if (fkind == "actuator_gain") sc.fault.kind = FaultKind::actuator_gain;
    else throw ConfigInvalid("unknown fault kind '" + fkind + "'");
    if (sc.fault.kind != FaultKind::none) {
        sc.fault.t_on = detail::to_double(require("fault", "t_on"), "fault t_on");
        if (sc.fault.kind == FaultKind::actuator_gain)
            sc.fault.factor = detail::to_double(require("fault", "value"), "fault factor");
        else
            sc.fault.bias = detail::to_vector(require("fault", "value"), "fault bias");
        const double t1 = sc.grid.t(sc.grid.steps);
        if (sc.fault.t_on < sc.grid.t0 || sc.fault.t_on > t1)
            throw ConfigInvalid("fault t_on outside the grid");
    }

    sc.noise_u = detail::to_vector(get("noise", "u", "0"), "noise u");
    sc.noise_y = detail::to_vector(get("noise", "y", "0"), "noise y");

    const double M_d = detail::to_double(get("detect", "M", "100"), "M");
    if (M_d < 1 || M_d != std::floor(M_d))
        throw ConfigInvalid("window M must be a positive integer");
    sc.M = static_cast<int>(M_d);
    if (sc.M > sc.grid.steps + 1)
        throw ConfigInvalid("window M exceeds the number of grid samples");
    sc.gamma = detail::to_double(get("detect", "gamma", "0.95"), "gamma");
    sc.alpha = detail::to_double(get("detect", "alpha", "0.1"), "alpha");
    sc.burn_in = detail::to_double(get("detect", "burn_in", "0.1"), "burn_in");
    if (sc.burn_in < 0.0 || sc.burn_in >= 1.0)
        throw ConfigInvalid("burn_in fraction must lie in [0, 1)");
    const double seed_d = detail::to_double(get("detect", "seed", "0"), "seed");
    sc.seed = static_cast<std::uint64_t>(seed_d);
    return sc;
}

// ---------------------------------------------------------------------------
// Scenario execution
// ---------------------------------------------------------------------------

struct ScenarioData {
    PlantBundle plant;
    SignalWindow data;      // recorded (u, y) with faults and noise applied
    VectorXd x0;
    int burn_samples = 0;
};

inline PlantBundle scenario_plant(const Scenario& sc) {
    if (sc.plant == "lti_custom") return plants::custom_lti(*sc.custom);
    return make_builtin_plant(sc.plant);
}

inline InputSignal scenario_excitation(const Scenario& sc, int p) {
    if (sc.input.kind == "sinusoid") {
        VectorXd amp = detail::resize_to(sc.input.amplitude, p);
        VectorXd frq = detail::resize_to(sc.input.frequency, p);
        VectorXd phs;
        if (sc.input.random_phase) {
            CounterRng rng(sc.seed, 1);
            phs.resize(p);
            for (int i = 0; i < p; ++i) phs(i) = rng.uniform(0.0, 2.0 * M_PI);
        } else {
            phs = detail::resize_to(sc.input.phase, p);
        }
        return InputSignal::analytic(p, [amp, frq, phs, p](double t) {
            VectorXd u(p);
            for (int i = 0; i < p; ++i) u(i) = amp(i) * std::sin(frq(i) * t + phs(i));
            return u;
        });
    }
    if (sc.input.kind == "step") {
        VectorXd v = detail::resize_to(sc.input.step_value, p);
        const double ton = sc.input.step_t_on;
        return InputSignal::analytic(p, [v, ton, p](double t) {
            return (t >= ton) ? v : VectorXd::Zero(p).eval();
        });
    }
    // file input: the u columns of a stored window
    const SignalWindow w = load_csv(sc.input.path);
    if (w.p() != p)
        throw ConfigInvalid("file input has " + std::to_string(w.p()) + " channels, plant needs " +
                            std::to_string(p));
    return InputSignal::sampled(w.t0, w.dt, w.u_samples);
}

/// Simulate the plant under the scenario's fault and record noisy data.
/// The recorded input is the commanded one; actuator faults act on the
/// applied input only.
inline ScenarioData run_scenario_simulation(const Scenario& sc) {
    ScenarioData out{scenario_plant(sc), SignalWindow{}, VectorXd(), 0};
    const AffineSystem& sys = out.plant.system;
    out.x0 = detail::resize_to(sc.x0, sys.n);

    const InputSignal u_cmd = scenario_excitation(sc, sys.p);
    const FaultSpec fault = sc.fault;
    VectorXd act_bias = VectorXd::Zero(sys.p);
    if (fault.kind == FaultKind::actuator_bias)
        act_bias = detail::resize_to(fault.bias, sys.p);
    const InputSignal u_applied = InputSignal::analytic(sys.p, [=](double t) {
        VectorXd u = u_cmd(t);
        if (t >= fault.t_on) {
            if (fault.kind == FaultKind::actuator_bias) u += act_bias;
            else if (fault.kind == FaultKind::actuator_gain) u *= fault.factor;
        }
        return u;
    });

    const SimulationResult sim = simulate(sys, u_applied, out.x0, sc.grid);

    CounterRng rng_u(sc.seed, 2), rng_y(sc.seed, 3);
    const VectorXd nu = detail::resize_to(sc.noise_u, sys.p);
    const VectorXd ny = detail::resize_to(sc.noise_y, sys.m);
    VectorXd sens_bias = VectorXd::Zero(sys.m);
    if (fault.kind == FaultKind::sensor_bias)
        sens_bias = detail::resize_to(fault.bias, sys.m);

    std::vector<VectorXd> us(sc.grid.samples()), ys(sc.grid.samples());
    for (int k = 0; k < sc.grid.samples(); ++k) {
        us[k] = u_cmd(sc.grid.t(k));
        ys[k] = sim.window.y_samples[k];
        for (int j = 0; j < sys.p; ++j)
            if (nu(j) > 0.0) us[k](j) += rng_u.symmetric(nu(j));
        for (int j = 0; j < sys.m; ++j)
            if (ny(j) > 0.0) ys[k](j) += rng_y.symmetric(ny(j));
        if (fault.kind == FaultKind::sensor_bias && sc.grid.t(k) >= fault.t_on)
            ys[k] += sens_bias;
    }
    out.data = SignalWindow::make(sc.grid.t0, sc.grid.dt, std::move(us), std::move(ys));
    out.burn_samples = static_cast<int>(std::floor(sc.burn_in * sc.grid.samples()));
    return out;
}

/// Evaluation windows: consecutive non-overlapping M-sample blocks after the
/// burn-in prefix. The trailing remainder shorter than M is dropped.
inline std::vector<std::pair<int, int>> evaluation_windows(int samples, int burn, int M) {
    std::vector<std::pair<int, int>> out;
    for (int first = burn; first + M <= samples; first += M)
        out.emplace_back(first, M);
    if (out.empty() && samples - burn >= 1)
        out.emplace_back(burn, samples - burn); // short tail window
    return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct RunReport {
    std::string mode;
    Scenario scenario;
    std::vector<DetectionReport> windows;
    Verdict summary = Verdict::fault_free;
    int exit_code = 0;
    std::vector<std::string> files;
    // estimate mode extras
    double consistency_defect = 0.0;
    double zdelta_energy = 0.0;
    double data_energy = 0.0;
};

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void atomic_write(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f)
            throw ConfigInvalid("cannot write '" + tmp + "'");
        f << text;
    }
    std::filesystem::rename(tmp, path);
}

} // namespace detail

inline std::string render_report(const RunReport& rep) {
    std::ostringstream os;
    os << "mode: " << rep.mode << "\n";
    os << "plant: " << rep.scenario.plant << "\n";
    os << "seed: " << rep.scenario.seed << "\n";
    os << "grid: t0=" << detail::fmt(rep.scenario.grid.t0)
       << " dt=" << detail::fmt(rep.scenario.grid.dt)
       << " steps=" << rep.scenario.grid.steps << "\n";
    os << "fault: " << to_string(rep.scenario.fault.kind);
    if (rep.scenario.fault.kind != FaultKind::none)
        os << " t_on=" << detail::fmt(rep.scenario.fault.t_on);
    os << "\n";
    os << "burn_in: " << detail::fmt(rep.scenario.burn_in) << "\n";
    os << "windows: " << rep.windows.size() << "\n";
    for (std::size_t i = 0; i < rep.windows.size(); ++i) {
        const DetectionReport& d = rep.windows[i];
        os << "window " << i << ": t=[" << detail::fmt(d.t_start) << "," << detail::fmt(d.t_end)
           << "] M=" << d.M << " J=" << detail::fmt(d.J) << " J_th=" << detail::fmt(d.J_th)
           << " gamma_or_alpha=" << detail::fmt(d.gamma_or_alpha)
           << " verdict=" << to_string(d.verdict)
           << " stack_defect=" << detail::fmt(d.stack_defect)
           << " route_disagreement=" << detail::fmt(d.route_disagreement)
           << " maximality_violations=" << d.maximality_violations
           << " divergence_series=divergence.csv\n";
    }
    if (rep.mode == "estimate") {
        os << "consistency_defect: " << detail::fmt(rep.consistency_defect) << "\n";
        os << "zdelta_energy: " << detail::fmt(rep.zdelta_energy) << "\n";
        os << "data_energy: " << detail::fmt(rep.data_energy) << "\n";
    }
    os << "summary: " << to_string(rep.summary) << "\n";
    os << "exit: " << rep.exit_code << "\n";
    return os.str();
}

inline void check_out_dir(const std::string& out_dir) {
    if (!std::filesystem::is_directory(out_dir))
        throw ConfigInvalid("output directory '" + out_dir + "' does not exist");
}

inline std::vector<std::string> series_names(const std::string& prefix, int count) {
    std::vector<std::string> names(count);
    for (int i = 0; i < count; ++i) names[i] = prefix + "_" + std::to_string(i + 1);
    return names;
}

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

struct DetectSirArtifacts {
    ScenarioData sd;
    SirProjectionResult proj;
    WindowEvaluation full_eval;
    RunReport rep;
};

inline DetectSirArtifacts detect_sir_core(const Scenario& sc) {
    DetectSirArtifacts art;
    RunReport& rep = art.rep;
    rep.mode = "detect-sir";
    rep.scenario = sc;

    art.sd = run_scenario_simulation(sc);
    ScenarioData& sd = art.sd;
    const SirRealization sir = normalize_sir(sd.plant.system, sd.plant.storage_sir);
    art.proj = sir_project(sir, sd.data, sd.x0);
    const SirProjectionResult& proj = art.proj;
    art.full_eval = evaluate_J_sir(sd.data, proj);

    for (auto [first, count] : evaluation_windows(sd.data.count(), sd.burn_samples, sc.M)) {
        const SignalWindow w = sd.data.slice(first, count);
        SirProjectionResult pw;
        pw.t0 = w.t0;
        pw.dt = w.dt;
        pw.zhat.assign(proj.zhat.begin() + first, proj.zhat.begin() + first + count);
        pw.latent_v.assign(proj.latent_v.begin() + first, proj.latent_v.begin() + first + count);
        pw.state_x.assign(proj.state_x.begin() + first, proj.state_x.begin() + first + count);
        pw.H_series.assign(proj.H_series.begin() + first, proj.H_series.begin() + first + count);
        pw.Hdual_series.assign(proj.Hdual_series.begin() + first,
                               proj.Hdual_series.begin() + first + count);
        const WindowEvaluation ev = evaluate_J_sir(w, pw);
        DetectionReport d;
        d.J = ev.J;
        const StackedVector zM = stack(w);
        d.J_th = threshold_sir(sc.gamma, zM);
        d.gamma_or_alpha = sc.gamma;
        d.window_energy = 0.5 * zM.squared_norm();
        d.verdict = (d.window_energy < 1e-12) ? Verdict::fault_free : decide(d.J, d.J_th);
        d.divergence_series = ev.series.values;
        d.M = count;
        d.t_start = w.t0;
        d.t_end = w.t(count - 1);
        d.stack_defect = ev.stack_defect;
        d.route_disagreement = ev.series.max_route_disagreement;
        d.maximality_violations = ev.series.maximality_violations;
        rep.windows.push_back(std::move(d));
    }
    for (const auto& d : rep.windows)
        if (d.verdict == Verdict::faulty) rep.summary = Verdict::faulty;
    rep.exit_code = (rep.summary == Verdict::faulty) ? 2 : 0;
    return art;
}

inline RunReport run_detect_sir(const Scenario& sc, const std::string& out_dir) {
    check_out_dir(out_dir);
    DetectSirArtifacts art = detect_sir_core(sc);
    const ScenarioData& sd = art.sd;
    const SirProjectionResult& proj = art.proj;
    RunReport& rep = art.rep;

    save_csv(out_dir + "/data.csv", sd.data);
    save_series_csv(out_dir + "/zhat.csv", proj.t0, proj.dt,
                    series_names("zhat", sd.plant.system.p + sd.plant.system.m), proj.zhat);
    std::vector<VectorXd> hrows(sd.data.count());
    for (int k = 0; k < sd.data.count(); ++k) {
        hrows[k] = VectorXd(3);
        hrows[k] << art.full_eval.series.values[k], proj.H_series[k], proj.Hdual_series[k];
    }
    save_series_csv(out_dir + "/divergence.csv", proj.t0, proj.dt, {"D", "H", "Hdual"}, hrows);
    detail::atomic_write(out_dir + "/report.txt", render_report(rep));
    rep.files = {out_dir + "/data.csv", out_dir + "/zhat.csv", out_dir + "/divergence.csv",
                 out_dir + "/report.txt"};
    return rep;
}

struct DetectSkrArtifacts {
    ScenarioData sd;
    SkrProjectionResult proj;
    RunReport rep;
};

inline DetectSkrArtifacts detect_skr_core(const Scenario& sc) {
    DetectSkrArtifacts art;
    RunReport& rep = art.rep;
    rep.mode = "detect-skr";
    rep.scenario = sc;

    art.sd = run_scenario_simulation(sc);
    ScenarioData& sd = art.sd;
    const SkrRealization skr = normalize_skr(sd.plant.system, sd.plant.storage_skr, sd.plant.L);
    art.proj = skr_project(skr, sd.data, sd.x0);
    const SkrProjectionResult& proj = art.proj;

    for (auto [first, count] : evaluation_windows(sd.data.count(), sd.burn_samples, sc.M)) {
        const SignalWindow w = sd.data.slice(first, count);
        std::vector<VectorXd> zd(proj.zdelta.begin() + first, proj.zdelta.begin() + first + count);
        DetectionReport d;
        d.J = half_energy(stack_sequence(zd));
        const StackedVector zM = stack(w);
        d.J_th = threshold_skr(sc.alpha, zM);
        d.gamma_or_alpha = sc.alpha;
        d.window_energy = 0.5 * zM.squared_norm();
        d.verdict = (d.window_energy < 1e-12) ? Verdict::fault_free : decide(d.J, d.J_th);
        d.divergence_series.resize(count);
        for (int k = 0; k < count; ++k)
            d.divergence_series[k] = 0.5 * zd[k].squaredNorm();
        d.M = count;
        d.t_start = w.t0;
        d.t_end = w.t(count - 1);
        rep.windows.push_back(std::move(d));
    }
    for (const auto& d : rep.windows)
        if (d.verdict == Verdict::faulty) rep.summary = Verdict::faulty;
    rep.exit_code = (rep.summary == Verdict::faulty) ? 2 : 0;
    return art;
}

inline RunReport run_detect_skr(const Scenario& sc, const std::string& out_dir) {
    check_out_dir(out_dir);
    DetectSkrArtifacts art = detect_skr_core(sc);
    const ScenarioData& sd = art.sd;
    const SkrProjectionResult& proj = art.proj;
    RunReport& rep = art.rep;

    save_csv(out_dir + "/data.csv", sd.data);
    save_series_csv(out_dir + "/zdelta.csv", proj.t0, proj.dt,
                    series_names("zdelta", sd.plant.system.p + sd.plant.system.m), proj.zdelta);
    save_series_csv(out_dir + "/residual.csv", proj.t0, proj.dt,
                    series_names("r", sd.plant.system.m), proj.residual_r);
    std::vector<VectorXd> drows(sd.data.count());
    for (int k = 0; k < sd.data.count(); ++k)
        drows[k] = VectorXd::Constant(1, 0.5 * proj.zdelta[k].squaredNorm());
    save_series_csv(out_dir + "/divergence.csv", proj.t0, proj.dt, {"D"}, drows);
    detail::atomic_write(out_dir + "/report.txt", render_report(rep));
    rep.files = {out_dir + "/data.csv", out_dir + "/zdelta.csv", out_dir + "/residual.csv",
                 out_dir + "/divergence.csv", out_dir + "/report.txt"};
    return rep;
}

inline RunReport run_estimate(const Scenario& sc, const std::string& out_dir) {
    check_out_dir(out_dir);
    RunReport rep;
    rep.mode = "estimate";
    rep.scenario = sc;

    ScenarioData sd = run_scenario_simulation(sc);
    const SkrRealization skr = normalize_skr(sd.plant.system, sd.plant.storage_skr, sd.plant.L);
    const UncertaintyEstimate est = estimate_uncertainty(skr, sd.data, sd.x0, sc.burn_in);

    rep.consistency_defect = est.consistency_defect;
    rep.zdelta_energy = half_energy(stack_sequence(est.zdelta));
    rep.data_energy = half_energy(stack(sd.data));
    rep.summary = Verdict::fault_free;
    rep.exit_code = 0;

    save_csv(out_dir + "/data.csv", sd.data);
    std::vector<std::string> names;
    for (int i = 0; i < sd.plant.system.p; ++i) names.push_back("du_" + std::to_string(i + 1));
    for (int i = 0; i < sd.plant.system.m; ++i) names.push_back("dy_" + std::to_string(i + 1));
    save_series_csv(out_dir + "/zdelta.csv", est.t0, est.dt, names, est.zdelta);
    detail::atomic_write(out_dir + "/report.txt", render_report(rep));
    rep.files = {out_dir + "/data.csv", out_dir + "/zdelta.csv", out_dir + "/report.txt"};
    return rep;
}

inline RunReport run_simulate(const Scenario& sc, const std::string& out_dir) {
    check_out_dir(out_dir);
    RunReport rep;
    rep.mode = "simulate";
    rep.scenario = sc;
    ScenarioData sd = run_scenario_simulation(sc);
    save_csv(out_dir + "/data.csv", sd.data);
    detail::atomic_write(out_dir + "/report.txt", render_report(rep));
    rep.files = {out_dir + "/data.csv", out_dir + "/report.txt"};
    return rep;
}

} // namespace fdkit
