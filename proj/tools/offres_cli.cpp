// offres: pulse-level simulation and characterization of off-resonant
// coherent errors. Subcommands dispatch experiments from JSON configs and
// emit CSV grids plus a reproducible JSON summary.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

#include "offres/framespec.hpp"
#include "offres/heat.hpp"
#include "offres/io.hpp"
#include "offres/rb.hpp"

namespace fs = std::filesystem;
using namespace offres;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kPi = std::numbers::pi;

struct SchemaError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------- schema

const std::map<std::string, std::vector<std::string>>& section_keys() {
    static const std::map<std::string, std::vector<std::string>> keys = {
        {"", {"experiment", "seed", "model", "noise", "gate", "sweep", "interrogation", "cpmg",
              "drag", "rb", "heat", "coherence", "ramsey", "blindness", "simulate"}},
        {"model", {"kind", "detuning_mhz", "mu", "nu", "zeta_mhz", "carrier_ghz"}},
        {"noise", {"t1_us", "t2_us", "readout_error"}},
        {"gate", {"shape", "duration_ns", "sigma_ns", "rise_ns", "amp_mhz", "drag_beta_ns",
                  "phase_rad"}},
        {"sweep", {"phi_min_rad", "phi_max_rad", "phi_points", "n_min", "n_max", "n_step",
                   "initial_state", "prep"}},
        {"interrogation", {"tx_ns", "shape", "sigma_ns"}},
        {"cpmg", {"tau_start_ns", "tau_step_ns", "tau_points", "repetitions", "gate"}},
        {"drag", {"beta_min_ns", "beta_max_ns", "beta_points", "n_reps", "phi_peak_rad"}},
        {"rb", {"lengths", "samples", "pulse_1q_ns", "cx_ns", "coherent_x_error_rad",
                "interleaved"}},
        {"heat", {"inject", "n_values", "gate_duration_ns", "layer_ns", "use_pulse_gate",
                  "track_frames"}},
        {"coherence", {"qubits", "tg_ns", "t1_us", "t2_us", "t1_q1_us", "t2_q1_us"}},
        {"ramsey", {"max_reps", "target_state"}},
        {"blindness", {"t_gate_ns", "layer_ns"}},
        {"simulate", {"initial_state", "frame"}},
    };
    return keys;
}

void check_keys(const json& node, const std::string& section) {
    const auto& allowed = section_keys().at(section);
    for (const auto& [key, value] : node.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw SchemaError("unknown key '" + (section.empty() ? key : section + "." + key) +
                              "'");
        (void)value;
    }
}

double require_finite(const json& node, const std::string& field) {
    if (!node.is_number()) throw SchemaError(field + ": number required");
    double v = node.get<double>();
    if (!std::isfinite(v)) throw SchemaError(field + ": must be finite");
    return v;
}

double require_positive(const json& node, const std::string& field) {
    double v = require_finite(node, field);
    if (v <= 0) throw SchemaError(field + ": must be positive");
    return v;
}

const std::vector<std::string> kExperiments = {
    "simulate", "cpa",        "framespec-cr",   "framespec-spectator", "cpmg",
    "drag-cal", "ramsey-stark", "rb",           "purity-rb",           "interleaved-rb",
    "heat",     "coherence-limit", "heat-blindness"};

json default_model() {
    return json{{"kind", "single_qubit_drive"}, {"detuning_mhz", -50.0}, {"mu", 0.0},
                {"nu", 0.0},                    {"zeta_mhz", 0.0},       {"carrier_ghz", 0.0}};
}

json default_gate() {
    return json{{"shape", "square"},  {"duration_ns", 96.0},   {"sigma_ns", 14.22},
                {"rise_ns", 0.0},     {"amp_mhz", 0.0},        {"drag_beta_ns", 0.0},
                {"phase_rad", 0.0}};
}

json normalize_config(json cfg) {
    if (!cfg.is_object()) throw SchemaError("config: object required");
    check_keys(cfg, "");
    if (!cfg.contains("experiment")) throw SchemaError("experiment: missing");
    std::string exp = cfg.at("experiment").get<std::string>();
    if (std::find(kExperiments.begin(), kExperiments.end(), exp) == kExperiments.end())
        throw SchemaError("experiment: unknown kind '" + exp + "'");

    json out;
    out["experiment"] = exp;
    out["seed"] = cfg.value("seed", 1234);

    json model = default_model();
    if (cfg.contains("model"))
        for (auto& [k, v] : cfg.at("model").items()) model[k] = v;
    check_keys(model, "model");
    out["model"] = model;

    json noise = json{{"t1_us", json::array()}, {"t2_us", json::array()},
                      {"readout_error", json::array()}};
    if (cfg.contains("noise"))
        for (auto& [k, v] : cfg.at("noise").items()) noise[k] = v;
    check_keys(noise, "noise");
    out["noise"] = noise;

    json gate = default_gate();
    if (cfg.contains("gate"))
        for (auto& [k, v] : cfg.at("gate").items()) gate[k] = v;
    check_keys(gate, "gate");
    out["gate"] = gate;

    json sweep = json{{"phi_min_rad", -kPi}, {"phi_max_rad", kPi}, {"phi_points", 201},
                      {"n_min", 10},         {"n_max", 100},       {"n_step", 10},
                      {"initial_state", "0"}, {"prep", "plus"}};
    if (cfg.contains("sweep"))
        for (auto& [k, v] : cfg.at("sweep").items()) sweep[k] = v;
    check_keys(sweep, "sweep");
    out["sweep"] = sweep;

    json interr = json{{"tx_ns", 64.0}, {"shape", "square"}, {"sigma_ns", 0.0}};
    if (cfg.contains("interrogation"))
        for (auto& [k, v] : cfg.at("interrogation").items()) interr[k] = v;
    check_keys(interr, "interrogation");
    out["interrogation"] = interr;

    json cpmg = json{{"tau_start_ns", 0.0}, {"tau_step_ns", 0.222}, {"tau_points", 181},
                     {"repetitions", 16},   {"gate", "x_pi"}};
    if (cfg.contains("cpmg"))
        for (auto& [k, v] : cfg.at("cpmg").items()) cpmg[k] = v;
    check_keys(cpmg, "cpmg");
    out["cpmg"] = cpmg;

    json drag = json{{"beta_min_ns", -6.4}, {"beta_max_ns", 6.4}, {"beta_points", 33},
                     {"n_reps", 50},        {"phi_peak_rad", nullptr}};
    if (cfg.contains("drag"))
        for (auto& [k, v] : cfg.at("drag").items()) drag[k] = v;
    check_keys(drag, "drag");
    out["drag"] = drag;

    json rb = json{{"lengths", json::array({1, 5, 10, 20, 35, 50, 75, 100})},
                   {"samples", 10},
                   {"pulse_1q_ns", 28.44},
                   {"cx_ns", 300.0},
                   {"coherent_x_error_rad", 0.0},
                   {"interleaved", "none"}};
    if (cfg.contains("rb"))
        for (auto& [k, v] : cfg.at("rb").items()) rb[k] = v;
    check_keys(rb, "rb");
    out["rb"] = rb;

    json heat = json{{"inject", json::object()},
                     {"n_values", json::array({0, 4, 8, 12, 16, 20})},
                     {"gate_duration_ns", 300.0},
                     {"layer_ns", 35.55},
                     {"use_pulse_gate", false},
                     {"track_frames", false}};
    if (cfg.contains("heat"))
        for (auto& [k, v] : cfg.at("heat").items()) heat[k] = v;
    check_keys(heat, "heat");
    out["heat"] = heat;

    json coherence = json{{"qubits", 1},    {"tg_ns", 96.0},    {"t1_us", 124.0},
                          {"t2_us", 107.0}, {"t1_q1_us", 0.0},  {"t2_q1_us", 0.0}};
    if (cfg.contains("coherence"))
        for (auto& [k, v] : cfg.at("coherence").items()) coherence[k] = v;
    check_keys(coherence, "coherence");
    out["coherence"] = coherence;

    json ramsey = json{{"max_reps", 512}, {"target_state", "plus"}};
    if (cfg.contains("ramsey"))
        for (auto& [k, v] : cfg.at("ramsey").items()) ramsey[k] = v;
    check_keys(ramsey, "ramsey");
    out["ramsey"] = ramsey;

    json blindness = json{{"t_gate_ns", 300.0}, {"layer_ns", 35.55}};
    if (cfg.contains("blindness"))
        for (auto& [k, v] : cfg.at("blindness").items()) blindness[k] = v;
    check_keys(blindness, "blindness");
    out["blindness"] = blindness;

    json simulate = json{{"initial_state", "0"}, {"frame", "resonant"}};
    if (cfg.contains("simulate"))
        for (auto& [k, v] : cfg.at("simulate").items()) simulate[k] = v;
    check_keys(simulate, "simulate");
    out["simulate"] = simulate;

    return out;
}

// ---------------------------------------------------------------- builders

HamiltonianModel build_model(const json& m) {
    std::string kind = m.at("kind").get<std::string>();
    double detuning = require_finite(m.at("detuning_mhz"), "model.detuning_mhz") * kMhzToRad;
    if (kind == "single_qubit_drive") {
        SingleQubitDriveModel sq;
        sq.detuning = detuning;
        sq.carrier = m.value("carrier_ghz", 0.0) * 1e3 * kMhzToRad;
        return sq;
    }
    if (kind == "cross_resonance") {
        CrossResonanceModel cr;
        cr.detuning = detuning;
        cr.mu = require_finite(m.at("mu"), "model.mu");
        cr.nu = require_finite(m.at("nu"), "model.nu");
        cr.zeta = m.value("zeta_mhz", 0.0) * kMhzToRad;
        return cr;
    }
    if (kind == "spectator") {
        SpectatorModel sp;
        sp.detuning = detuning;
        sp.mu = require_finite(m.at("mu"), "model.mu");
        sp.nu = require_finite(m.at("nu"), "model.nu");
        return sp;
    }
    throw SchemaError("model.kind: unknown '" + kind + "'");
}

NoiseModel build_noise(const json& n, int nq) {
    NoiseModel out = NoiseModel::ideal(nq);
    auto fill = [&](const char* key, auto&& setter) {
        const auto& arr = n.at(key);
        if (!arr.is_array()) throw SchemaError(std::string("noise.") + key + ": array required");
        for (size_t q = 0; q < arr.size() && q < static_cast<size_t>(nq); ++q)
            setter(out.qubits[q], arr[q].get<double>(), std::string("noise.") + key);
    };
    fill("t1_us", [](QubitNoise& q, double v, const std::string& f) {
        if (v <= 0) throw SchemaError(f + ": must be positive");
        q.t1 = v * 1e-6;
    });
    fill("t2_us", [](QubitNoise& q, double v, const std::string& f) {
        if (v <= 0) throw SchemaError(f + ": must be positive");
        q.t2 = v * 1e-6;
    });
    fill("readout_error", [](QubitNoise& q, double v, const std::string& f) {
        if (v < 0 || v > 0.5) throw SchemaError(f + ": must lie in [0, 0.5]");
        q.confusion << 1 - v, v, v, 1 - v;
    });
    for (int q = 0; q < nq; ++q)
        if (out.qubits[q].t2 > 2 * out.qubits[q].t1)
            throw SchemaError("noise.t2_us: T2 must not exceed 2 T1");
    return out;
}

bool noise_configured(const json& n) {
    return !n.at("t1_us").empty() || !n.at("t2_us").empty() || !n.at("readout_error").empty();
}

Envelope build_envelope(const json& g, const std::string& prefix) {
    std::string shape = g.at("shape").get<std::string>();
    double duration = require_positive(g.at("duration_ns"), prefix + ".duration_ns") * kNs;
    Envelope env;
    if (shape == "square") {
        env = Envelope::square(duration);
    } else if (shape == "gaussian") {
        env = Envelope::gaussian(require_positive(g.at("sigma_ns"), prefix + ".sigma_ns") * kNs,
                                 duration);
    } else if (shape == "flat_top_gaussian") {
        env = Envelope::flat_top_gaussian(
            require_positive(g.at("sigma_ns"), prefix + ".sigma_ns") * kNs, duration,
            g.value("rise_ns", 0.0) * kNs);
    } else {
        throw SchemaError(prefix + ".shape: unknown '" + shape + "'");
    }
    double beta = g.value("drag_beta_ns", 0.0) * kNs;
    if (beta != 0.0) env = drag_wrap(env, beta);
    return env;
}

std::string model_drive_channel(const HamiltonianModel& model) {
    if (const auto* sq = std::get_if<SingleQubitDriveModel>(&model)) return sq->channel;
    if (const auto* cr = std::get_if<CrossResonanceModel>(&model)) return cr->control_channel;
    return std::get<SpectatorModel>(model).channel;
}

// resolves amp_mhz = 0 to the calibrated amplitude for the model kind
double resolve_amplitude(const HamiltonianModel& model, const Envelope& env, const json& g) {
    double amp = require_finite(g.at("amp_mhz"), "gate.amp_mhz") * kMhzToRad;
    if (amp != 0.0) return amp;
    if (const auto* sq = std::get_if<SingleQubitDriveModel>(&model)) {
        double guess = std::sqrt(kPi * std::abs(sq->detuning) / env.duration());
        return calibrate_stark_amplitude(*sq, env, 0.5 * guess, 2.5 * guess);
    }
    if (const auto* cr = std::get_if<CrossResonanceModel>(&model)) {
        if (cr->mu == 0.0) throw SchemaError("gate.amp_mhz: needs mu != 0 to auto-calibrate");
        return kPi / (2.0 * cr->mu * env.area());  // mu * integral(W) = pi/2
    }
    return (kPi / 2.0) / env.area();  // spectator: X_{pi/2} on the driven qubit
}

Schedule build_gate(const HamiltonianModel& model, const json& g, double* amp_out = nullptr) {
    Envelope env = build_envelope(g, "gate");
    double amp = resolve_amplitude(model, env, g);
    if (amp_out) *amp_out = amp;
    Pulse p{model_drive_channel(model), env, amp, 0.0, g.value("phase_rad", 0.0)};
    return single_pulse_schedule(p);
}

Pulse build_x_pulse(const std::string& channel, const json& interr) {
    double tx = require_positive(interr.at("tx_ns"), "interrogation.tx_ns") * kNs;
    std::string shape = interr.at("shape").get<std::string>();
    Envelope env;
    if (shape == "square") {
        env = Envelope::square(tx);
    } else if (shape == "gaussian") {
        double sigma = interr.value("sigma_ns", 0.0) * kNs;
        if (sigma <= 0) sigma = tx / 4.0;
        env = Envelope::gaussian(sigma, tx);
    } else {
        throw SchemaError("interrogation.shape: unknown '" + shape + "'");
    }
    return Pulse{channel, env, calibrate_area(env, kPi), 0.0, 0.0};
}

SweepSpec build_sweep(const json& s) {
    SweepSpec spec = make_sweep_spec(
        require_finite(s.at("phi_min_rad"), "sweep.phi_min_rad"),
        require_finite(s.at("phi_max_rad"), "sweep.phi_max_rad"),
        s.at("phi_points").get<int>(), s.at("n_min").get<int>(), s.at("n_max").get<int>(),
        s.at("n_step").get<int>());
    spec.initial_state = s.at("initial_state").get<std::string>();
    return spec;
}

Sector parse_sector(const std::string& s, const std::string& field) {
    if (s == "plus" || s == "plus0") return Sector::Plus;
    if (s == "minus" || s == "minus0") return Sector::Minus;
    throw SchemaError(field + ": expected plus or minus");
}

// ---------------------------------------------------------------- outputs

json peaks_to_json(const PeakExtraction& pe) {
    json arr = json::array();
    for (const auto& pk : pe.peaks) {
        arr.push_back(json{{"position_rad", pk.position},
                           {"height", pk.height},
                           {"half_width_rad", pk.half_width},
                           {"uncertainty_rad", pk.uncertainty},
                           {"aliased", pk.aliased}});
    }
    return arr;
}

void write_sweep_csv(const std::string& path, const SweepResult& r,
                     const std::vector<std::string>& pop_names) {
    std::vector<std::string> cols{"phi_rad", "n_reps"};
    for (const auto& n : pop_names) cols.push_back(n);
    std::vector<std::vector<double>> rows;
    for (size_t ni = 0; ni < r.n_grid.size(); ++ni)
        for (size_t pi = 0; pi < r.phi_grid.size(); ++pi) {
            std::vector<double> row{r.phi_grid[pi], static_cast<double>(r.n_grid[ni])};
            for (size_t s = 0; s < pop_names.size(); ++s)
                row.push_back(r.at(static_cast<int>(s), static_cast<int>(ni),
                                   static_cast<int>(pi)));
            rows.push_back(row);
        }
    write_csv(path, cols, rows);
}

struct Emitter {
    fs::path out_dir;
    json summary;

    explicit Emitter(const std::string& dir, const json& config) : out_dir(dir) {
        fs::create_directories(out_dir);
        summary["experiment"] = config.at("experiment");
        summary["version"] = kVersion;
        summary["seed"] = config.at("seed");
        summary["config_hash"] = config_hash(config);
        summary["config"] = config;
    }

    std::string csv_path(const std::string& name = "result.csv") const {
        return (out_dir / name).string();
    }

    void finish() {
        std::ofstream f(out_dir / "summary.json");
        f << summary.dump(2) << "\n";
        std::cout << summary.dump(2) << std::endl;
    }
};

// ---------------------------------------------------------------- experiments

int run_simulate(const json& cfg, Emitter& em) {
    HamiltonianModel model = build_model(cfg.at("model"));
    double amp = 0.0;
    Schedule gate = build_gate(model, cfg.at("gate"), &amp);
    PropagationOptions opts;
    std::string frame = cfg.at("simulate").at("frame").get<std::string>();
    if (frame == "resonant") opts.frame = ResonantFrame{};
    else if (frame == "drive") opts.frame = DriveFrame{};
    else throw SchemaError("simulate.frame: expected drive or resonant");
    Mat u = propagate(model, gate, opts);

    em.summary["results"]["amp_mhz"] = amp / kMhzToRad;
    json mat = json::array();
    for (int r = 0; r < u.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < u.cols(); ++c)
            row.push_back(json::array({u(r, c).real(), u(r, c).imag()}));
        mat.push_back(row);
    }
    em.summary["results"]["unitary"] = mat;
    if (model_qubits(model) == 1) {
        cxd a = 0.5 * u.trace();
        cxd ph = (std::abs(a) > 1e-12) ? std::conj(a) / std::abs(a) : cxd(1, 0);
        json coeffs;
        const char* names[4] = {"i", "x", "y", "z"};
        const char axes[4] = {'I', 'X', 'Y', 'Z'};
        for (int k = 0; k < 4; ++k) {
            cxd c = (k == 0) ? a : cxd(0.5) * cxd(0, 1) * (pauli1(axes[k]) * u).trace();
            coeffs[names[k]] = (c * ph).real();
        }
        em.summary["results"]["pauli_coefficients"] = coeffs;
        if (const auto* sq = std::get_if<SingleQubitDriveModel>(&model)) {
            em.summary["results"]["avg_gate_error_vs_ideal_z90"] =
                average_gate_error(u, ideal_stark_z(sq->detuning));
        }
    }
    PureState psi0 = initial_state_from_label(
        cfg.at("simulate").at("initial_state").get<std::string>(), model_qubits(model));
    Vec v = u * psi0.amp;
    std::vector<int> qubits(model_qubits(model));
    for (int q = 0; q < model_qubits(model); ++q) qubits[q] = q;
    auto pops = measure_populations(Mat(v * v.adjoint()), qubits);
    em.summary["results"]["populations"] = pops;
    return 0;
}

int run_cpa_cmd(const json& cfg, Emitter& em, ExperimentOptions& eo) {
    HamiltonianModel model = build_model(cfg.at("model"));
    double amp = 0.0;
    Schedule gate = build_gate(model, cfg.at("gate"), &amp);
    SweepSpec spec = build_sweep(cfg.at("sweep"));
    SweepResult r = run_cpa(model, gate, spec, eo);
    write_sweep_csv(em.csv_path(), r, {"pop_q0"});
    auto peaks = extract_peaks(r, 0, Aggregation::MeanOverN);
    em.summary["results"]["amp_mhz"] = amp / kMhzToRad;
    em.summary["results"]["peaks"] = peaks_to_json(peaks);
    em.summary["results"]["warnings"] = peaks.warnings;
    if (const auto* sq = std::get_if<SingleQubitDriveModel>(&model))
        em.summary["results"]["stark_peak_oracle_rad"] =
            stark_peak_oracle(amp, sq->detuning, gate.duration());
    em.summary["results"]["csv"] = "result.csv";
    return 0;
}

int run_framespec_cr(const json& cfg, Emitter& em, ExperimentOptions& eo) {
    json mcfg = cfg.at("model");
    mcfg["kind"] = "cross_resonance";
    HamiltonianModel model = build_model(mcfg);
    const auto& cr = std::get<CrossResonanceModel>(model);
    double amp = 0.0;
    Schedule gate = build_gate(model, cfg.at("gate"), &amp);
    Pulse x_pi = build_x_pulse(cr.target_channel, cfg.at("interrogation"));
    SweepSpec spec = build_sweep(cfg.at("sweep"));
    Sector prep = parse_sector(cfg.at("sweep").at("prep").get<std::string>(), "sweep.prep");
    SweepResult r = run_state_selective_framespec(cr, gate, x_pi, spec, prep, eo);
    write_sweep_csv(em.csv_path(), r, {"pop_control"});
    auto peaks = extract_peaks(r, 0, Aggregation::MeanOverN);
    em.summary["results"]["amp_mhz"] = amp / kMhzToRad;
    em.summary["results"]["peaks"] = peaks_to_json(peaks);
    em.summary["results"]["cr_peak_oracle_rad"] =
        cr_peak_oracle(amp, cr.detuning, cr.mu, gate.duration(), x_pi.duration(), prep);
    em.summary["results"]["csv"] = "result.csv";
    return 0;
}

int run_framespec_spectator(const json& cfg, Emitter& em, ExperimentOptions& eo) {
    json mcfg = cfg.at("model");
    mcfg["kind"] = "spectator";
    HamiltonianModel model = build_model(mcfg);
    const auto& sp = std::get<SpectatorModel>(model);
    double amp = 0.0;
    Schedule gate = build_gate(model, cfg.at("gate"), &amp);
    Pulse x_pi = build_x_pulse(sp.channel, cfg.at("interrogation"));
    SweepSpec spec = build_sweep(cfg.at("sweep"));
    Sector prep = parse_sector(cfg.at("sweep").at("prep").get<std::string>(), "sweep.prep");
    SweepResult r = run_spectator_framespec(sp, gate, x_pi, spec, prep, eo);
    write_sweep_csv(em.csv_path(), r, {"pop_q0", "pop_q1"});
    em.summary["results"]["amp_mhz"] = amp / kMhzToRad;
    em.summary["results"]["peaks_driven"] = peaks_to_json(extract_peaks(r, 0));
    em.summary["results"]["peaks_spectator"] = peaks_to_json(extract_peaks(r, 1));
    double trep = r.t_rep();
    em.summary["results"]["spectator_peak_oracle_rad"] =
        spectator_peak_oracle(sp.detuning, trep, prep);
    em.summary["results"]["spectator_ix_peak_rad"] = spectator_ix_peak(sp.detuning, trep);
    em.summary["results"]["csv"] = "result.csv";
    return 0;
}

int run_cpmg_cmd(const json& cfg, Emitter& em, ExperimentOptions& eo) {
    json mcfg = cfg.at("model");
    mcfg["kind"] = "spectator";
    HamiltonianModel model = build_model(mcfg);
    const auto& sp = std::get<SpectatorModel>(model);
    const json& c = cfg.at("cpmg");
    CpmgSpec spec;
    spec.tau_start = require_finite(c.at("tau_start_ns"), "cpmg.tau_start_ns") * kNs;
    spec.tau_step = require_positive(c.at("tau_step_ns"), "cpmg.tau_step_ns") * kNs;
    spec.tau_points = c.at("tau_points").get<int>();
    spec.repetitions = c.at("repetitions").get<int>();
    std::string g = c.at("gate").get<std::string>();
    if (g == "x_pi") spec.gate = CpmgGate::XPi;
    else if (g == "x_half") spec.gate = CpmgGate::XHalf;
    else throw SchemaError("cpmg.gate: expected x_pi or x_half");

    Envelope env = build_envelope(cfg.at("gate"), "gate");
    double angle = (spec.gate == CpmgGate::XPi) ? kPi : kPi / 2;
    Pulse pulse{sp.channel, env, calibrate_area(env, angle), 0.0, 0.0};
    CpmgResult r = run_cpmg(sp, pulse, spec, eo);

    std::vector<std::vector<double>> rows;
    for (size_t i = 0; i < r.taus.size(); ++i)
        rows.push_back({r.taus[i] / kNs, r.populations[0][i], r.populations[1][i]});
    write_csv(em.csv_path(), {"tau_ns", "pop_q0", "pop_q1"}, rows);
    auto peaks = find_peaks(r.taus, r.populations[1], 5.0, false);
    json ptau = json::array();
    for (const auto& pk : peaks.peaks) ptau.push_back(pk.position / kNs);
    em.summary["results"]["spectator_peak_taus_ns"] = ptau;
    json pred = json::array();
    for (double t : cpmg_peak_taus(sp.detuning, pulse.duration(), r.theta_g, spec.tau_start,
                                   spec.tau_start + (spec.tau_points - 1) * spec.tau_step))
        pred.push_back(t / kNs);
    em.summary["results"]["predicted_entangling_taus_ns"] = pred;
    em.summary["results"]["warnings"] = r.warnings;
    em.summary["results"]["csv"] = "result.csv";
    return 0;
}

int run_drag_cal(const json& cfg, Emitter& em, ExperimentOptions& eo) {
    HamiltonianModel model = build_model(cfg.at("model"));
    const json& d = cfg.at("drag");
    Envelope base = build_envelope(cfg.at("gate"), "gate");
    if (!base.differentiable())
        throw SchemaError("gate.shape: drag calibration needs a differentiable envelope");
    double amp = resolve_amplitude(model, base, cfg.at("gate"));
    std::string channel = model_drive_channel(model);

    auto builder = [&](double beta) {
        return single_pulse_schedule(Pulse{channel, drag_wrap(base, beta), amp, 0.0, 0.0});
    };

    double phi_peak;
    if (d.at("phi_peak_rad").is_null()) {
        SweepSpec scan = make_sweep_spec(-kPi, kPi, 629, d.at("n_reps").get<int>(),
                                         d.at("n_reps").get<int>(), 1);
        SweepResult sweep;
        Pulse x_pi = build_x_pulse(model_qubits(model) == 2 && std::holds_alternative<CrossResonanceModel>(model)
                                       ? std::get<CrossResonanceModel>(model).target_channel
                                       : channel,
                                   cfg.at("interrogation"));
        if (const auto* cr = std::get_if<CrossResonanceModel>(&model)) {
            sweep = run_state_selective_framespec(*cr, builder(0.0), x_pi, scan, Sector::Plus, eo);
        } else if (const auto* sp = std::get_if<SpectatorModel>(&model)) {
            sweep = run_spectator_framespec(*sp, builder(0.0), x_pi, scan, Sector::Plus, eo);
        } else {
            sweep = run_cpa(model, builder(0.0), scan, eo);
        }
        auto peaks = extract_peaks(sweep, 0, Aggregation::MeanOverN);
        if (peaks.peaks.empty()) throw CalibrationError("drag-cal: no amplified peak found");
        phi_peak = peaks.peaks.front().position;
    } else {
        phi_peak = d.at("phi_peak_rad").get<double>();
    }

    std::vector<double> betas;
    int points = d.at("beta_points").get<int>();
    double lo = d.at("beta_min_ns").get<double>() * kNs, hi = d.at("beta_max_ns").get<double>() * kNs;
    for (int i = 0; i < points; ++i)
        betas.push_back(lo + (hi - lo) * i / std::max(1, points - 1));

    const Pulse x_pi = build_x_pulse(
        std::holds_alternative<CrossResonanceModel>(model)
            ? std::get<CrossResonanceModel>(model).target_channel
            : channel,
        cfg.at("interrogation"));
    DragCalibration cal = calibrate_drag(model, builder, phi_peak, d.at("n_reps").get<int>(),
                                         betas, 0, Sector::Plus,
                                         model_qubits(model) == 2 ? &x_pi : nullptr, eo);
    std::vector<std::vector<double>> rows;
    for (size_t i = 0; i < cal.betas.size(); ++i)
        rows.push_back({cal.betas[i] / kNs, cal.populations[i]});
    write_csv(em.csv_path(), {"beta_ns", "population"}, rows);
    em.summary["results"]["amp_mhz"] = amp / kMhzToRad;
    em.summary["results"]["phi_peak_rad"] = phi_peak;
    em.summary["results"]["beta_opt_ns"] = cal.beta_opt / kNs;
    em.summary["results"]["population_at_opt"] = cal.population_at_opt;
    em.summary["results"]["csv"] = "result.csv";
    return 0;
}

int run_ramsey(const json& cfg, Emitter& em) {
    HamiltonianModel model = build_model(cfg.at("model"));
    Schedule gate = build_gate(model, cfg.at("gate"));
    const json& r = cfg.at("ramsey");
    StarkShiftResult res;
    if (const auto* sq = std::get_if<SingleQubitDriveModel>(&model)) {
        res = measure_stark_shift(*sq, gate, r.at("max_reps").get<int>());
    } else if (const auto* cr = std::get_if<CrossResonanceModel>(&model)) {
        Sector target = parse_sector(r.at("target_state").get<std::string>(),
                                     "ramsey.target_state");
        res = measure_stark_shift(*cr, gate, target, r.at("max_reps").get<int>());
    } else {
        throw SchemaError("ramsey-stark: model must be single_qubit_drive or cross_resonance");
    }
    std::vector<std::vector<double>> rows;
    for (size_t k = 0; k < res.phases.size(); ++k)
        rows.push_back({static_cast<double>(k + 1), res.phases[k]});
    write_csv(em.csv_path(), {"repetition", "phase_rad"}, rows);
    em.summary["results"]["theta_stark_rad"] = res.theta;
    em.summary["results"]["theta_stderr_rad"] = res.stderr;
    em.summary["results"]["csv"] = "result.csv";
    return 0;
}

json rb_result_json(const RBResult& r) {
    return json{{"lengths", r.lengths},
                {"means", r.means},
                {"alpha", r.fit.alpha},
                {"alpha_stderr", r.fit.alpha_stderr()},
                {"amplitude", r.fit.a},
                {"floor", r.fit.b},
                {"epc", r.epc},
                {"epc_stderr", r.epc_stderr},
                {"epg", r.epg},
                {"epg_stderr", r.epg_stderr}};
}

void write_rb_csv(const std::string& path, const RBResult& r) {
    std::vector<std::vector<double>> rows;
    for (size_t li = 0; li < r.lengths.size(); ++li)
        for (size_t si = 0; si < r.per_sample[li].size(); ++si)
            rows.push_back({static_cast<double>(r.lengths[li]), static_cast<double>(si),
                            r.per_sample[li][si]});
    write_csv(path, {"length", "sample", "value"}, rows);
}

// 1- or 2-qubit gate set per the rb config, with the optional coherent X
// rotation appended after each CX (purity demonstrations)
GateSet build_gate_set(int nq, const json& rb) {
    GateSet gates = GateSet::ideal(nq, rb.at("pulse_1q_ns").get<double>() * kNs,
                                   rb.at("cx_ns").get<double>() * kNs);
    double xerr = rb.at("coherent_x_error_rad").get<double>();
    if (nq == 2 && xerr != 0.0) {
        Mat cx = native_gate_unitary({"cx", 0, 1}, 2);
        Mat err = matrix_exp_hermitian(0.5 * xerr * pauli_matrix("XI"), 1.0);
        Mat combined = err * cx;
        double dur = rb.at("cx_ns").get<double>() * kNs;
        gates.gates["cx@0"] = {dur, [combined](double) { return combined; }, false};
    }
    return gates;
}

InterleavedGate build_interleaved(const json& cfg, int* nq_out) {
    const json& rb = cfg.at("rb");
    std::string kind = rb.at("interleaved").get<std::string>();
    InterleavedGate gate;
    if (kind == "stark_z90") {
        *nq_out = 1;
        json mcfg = cfg.at("model");
        mcfg["kind"] = "single_qubit_drive";
        HamiltonianModel model = build_model(mcfg);
        const auto& sq = std::get<SingleQubitDriveModel>(model);
        Schedule sched = build_gate(model, cfg.at("gate"));
        Mat u_drive = propagate(model, sched, {});
        double tg = sched.duration();
        auto rates = resonant_frame_rates(model);
        gate.impl.duration = tg;
        gate.impl.unitary = [u_drive, rates, tg](double t) {
            return Mat(frame_rotation(rates, t + tg) * u_drive *
                       frame_rotation(rates, t).adjoint());
        };
        gate.tableau = native_gate_tableau({sq.detuning >= 0 ? "z90" : "zm90", 0, -1}, 1);
        return gate;
    }
    if (kind == "cx_pulse") {
        *nq_out = 2;
        json mcfg = cfg.at("model");
        mcfg["kind"] = "cross_resonance";
        HamiltonianModel model = build_model(mcfg);
        Schedule sched = build_gate(model, cfg.at("gate"));
        Mat u_cr = propagate(model, sched, {});
        Mat dressed = dress_cr_to_zx90(u_cr);
        // CNOT = (Z_-180 x X_-90) ZX90 up to phase
        Mat dress2 = unitary_of_gates({{"z180", 0, -1}, {"xm90", 1, -1}}, 2);
        Mat cnot_pulse = dress2 * dressed;
        double tg = sched.duration();
        auto rates = resonant_frame_rates(model);
        gate.impl.duration = tg;
        gate.impl.unitary = [cnot_pulse, rates, tg](double t) {
            return Mat(frame_rotation(rates, t + tg) * cnot_pulse *
                       frame_rotation(rates, t).adjoint());
        };
        gate.tableau = native_gate_tableau({"cx", 0, 1}, 2);
        return gate;
    }
    throw SchemaError("rb.interleaved: unknown kind '" + kind + "'");
}

int run_rb_cmd(const json& cfg, Emitter& em, ExecPolicy policy, const std::string& mode) {
    const json& rbc = cfg.at("rb");
    RBSpec spec;
    for (const auto& l : rbc.at("lengths")) spec.lengths.push_back(l.get<int>());
    spec.samples = rbc.at("samples").get<int>();
    spec.seed = cfg.at("seed").get<std::uint64_t>();

    int nq = 2;
    InterleavedGate interleaved;
    bool has_interleaved = false;
    if (mode == "interleaved") {
        interleaved = build_interleaved(cfg, &nq);
        has_interleaved = true;
    } else {
        nq = cfg.at("noise").at("t1_us").size() == 1 ? 1 : 2;
    }
    spec.noise = build_noise(cfg.at("noise"), nq);
    GateSet gates = build_gate_set(nq, rbc);

    if (mode == "standard") {
        RBResult r = run_rb(spec, gates, nullptr, policy);
        write_rb_csv(em.csv_path(), r);
        em.summary["results"]["standard"] = rb_result_json(r);
    } else if (mode == "purity") {
        RBResult r = run_purity_rb(spec, gates, nullptr, policy);
        write_rb_csv(em.csv_path(), r);
        em.summary["results"]["purity"] = rb_result_json(r);
    } else {
        InterleavedRBResult r = run_interleaved_rb(spec, gates, interleaved, policy);
        write_rb_csv(em.csv_path(), r.reference);
        write_rb_csv(em.csv_path("result_interleaved.csv"), r.interleaved);
        em.summary["results"]["reference"] = rb_result_json(r.reference);
        em.summary["results"]["interleaved"] = rb_result_json(r.interleaved);
        em.summary["results"]["gate_error"] = r.gate_error;
        em.summary["results"]["gate_error_stderr"] = r.gate_error_stderr;
    }
    em.summary["results"]["csv"] = "result.csv";
    return 0;
}

int run_heat_cmd(const json& cfg, Emitter& em) {
    const json& h = cfg.at("heat");
    HeatOptions opts;
    opts.n_values.clear();
    for (const auto& n : h.at("n_values")) opts.n_values.push_back(n.get<int>());
    opts.gate_duration = h.at("gate_duration_ns").get<double>() * kNs;
    opts.layer_duration = h.at("layer_ns").get<double>() * kNs;

    std::function<Mat(double)> gate;
    if (h.at("use_pulse_gate").get<bool>()) {
        json mcfg = cfg.at("model");
        mcfg["kind"] = "cross_resonance";
        HamiltonianModel model = build_model(mcfg);
        Schedule sched = build_gate(model, cfg.at("gate"));
        Mat u = dress_cr_to_zx90(propagate(model, sched, {}));
        opts.gate_duration = sched.duration();
        if (h.at("track_frames").get<bool>()) opts.frame_rates = resonant_frame_rates(model);
        gate = [u](double) { return u; };
    } else {
        Mat u = ideal_zx90();
        for (const auto& [label, angle] : h.at("inject").items())
            u = matrix_exp_hermitian(0.5 * angle.get<double>() * pauli_matrix(label), 1.0) * u;
        gate = [u](double) { return u; };
    }
    HeatResult r = run_heat(gate, opts);
    std::vector<std::vector<double>> rows;
    const auto& table = heat_table();
    for (size_t k = 0; k < table.size(); ++k)
        rows.push_back({static_cast<double>(table[k].index), r.slopes[k], r.slope_stderr[k],
                        r.fit_residuals[k]});
    write_csv(em.csv_path(), {"sequence", "slope", "slope_stderr", "fit_residual"}, rows);
    json eps, unc;
    for (const auto& [label, v] : r.epsilon) eps[label] = v;
    for (const auto& [label, v] : r.uncertainty) unc[label] = v;
    em.summary["results"]["epsilon_rad"] = eps;
    em.summary["results"]["uncertainty_rad"] = unc;
    em.summary["results"]["nonlinearity"] = r.nonlinearity;
    em.summary["results"]["csv"] = "result.csv";
    return 0;
}

int run_coherence(const json& cfg, Emitter& em) {
    const json& c = cfg.at("coherence");
    int nq = c.at("qubits").get<int>();
    double tg = require_positive(c.at("tg_ns"), "coherence.tg_ns") * kNs;
    double t1 = require_positive(c.at("t1_us"), "coherence.t1_us") * 1e-6;
    double t2 = require_positive(c.at("t2_us"), "coherence.t2_us") * 1e-6;
    if (t2 > 2 * t1) throw SchemaError("coherence.t2_us: T2 must not exceed 2 T1");
    if (nq == 1) {
        em.summary["results"]["epsilon"] = coherence_limit_1q(tg, t1, t2);
    } else if (nq == 2) {
        double t1b = c.at("t1_q1_us").get<double>() * 1e-6;
        double t2b = c.at("t2_q1_us").get<double>() * 1e-6;
        if (t1b <= 0) t1b = t1;
        if (t2b <= 0) t2b = t2;
        double e = coherence_limit_2q(tg, t1, t2, t1b, t2b);
        em.summary["results"]["epsilon"] = e;
        em.summary["results"]["epc_per_clifford"] = 1.5 * e;
    } else {
        throw SchemaError("coherence.qubits: must be 1 or 2");
    }
    return 0;
}

int run_blindness(const json& cfg, Emitter& em) {
    json mcfg = cfg.at("model");
    mcfg["kind"] = "cross_resonance";
    HamiltonianModel model = build_model(mcfg);
    const auto& cr = std::get<CrossResonanceModel>(model);
    const json& b = cfg.at("blindness");
    BlindnessReport r = heat_blindness_demo(cr, b.at("t_gate_ns").get<double>() * kNs,
                                            b.at("layer_ns").get<double>() * kNs);
    em.summary["results"]["heat_xi_rad"] = r.heat_xi;
    em.summary["results"]["implied_rotation_rad"] = r.implied_rotation;
    em.summary["results"]["blind"] = r.blind;
    em.summary["results"]["stationary_injected_rad"] = r.stationary_injected;
    em.summary["results"]["stationary_recovered_rad"] = r.stationary_recovered;
    em.summary["results"]["commensurate_recovered_rad"] = r.commensurate_recovered;
    em.summary["results"]["commensurate_restored"] = r.commensurate_restored;
    return 0;
}

int dispatch(const json& cfg, const std::string& out_dir, ExecPolicy policy) {
    Emitter em(out_dir, cfg);
    ExperimentOptions eo;
    eo.policy = policy;
    int nq_guess = cfg.at("model").at("kind") == "single_qubit_drive" ? 1 : 2;
    if (noise_configured(cfg.at("noise"))) {
        eo.noise = build_noise(cfg.at("noise"), nq_guess);
        eo.confusion_on_readout = true;
    }
    std::string exp = cfg.at("experiment").get<std::string>();
    int rc = 0;
    if (exp == "simulate") rc = run_simulate(cfg, em);
    else if (exp == "cpa") rc = run_cpa_cmd(cfg, em, eo);
    else if (exp == "framespec-cr") rc = run_framespec_cr(cfg, em, eo);
    else if (exp == "framespec-spectator") rc = run_framespec_spectator(cfg, em, eo);
    else if (exp == "cpmg") rc = run_cpmg_cmd(cfg, em, eo);
    else if (exp == "drag-cal") rc = run_drag_cal(cfg, em, eo);
    else if (exp == "ramsey-stark") rc = run_ramsey(cfg, em);
    else if (exp == "rb") rc = run_rb_cmd(cfg, em, policy, "standard");
    else if (exp == "purity-rb") rc = run_rb_cmd(cfg, em, policy, "purity");
    else if (exp == "interleaved-rb") rc = run_rb_cmd(cfg, em, policy, "interleaved");
    else if (exp == "heat") rc = run_heat_cmd(cfg, em);
    else if (exp == "coherence-limit") rc = run_coherence(cfg, em);
    else if (exp == "heat-blindness") rc = run_blindness(cfg, em);
    else throw SchemaError("experiment: unknown kind '" + exp + "'");
    em.finish();
    return rc;
}

// --set key.path=value, value parsed as JSON when possible
void apply_override(json& cfg, const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw SchemaError("--set expects key.path=value");
    std::string path = kv.substr(0, eq), value = kv.substr(eq + 1);
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (...) {
        parsed = value;  // plain string
    }
    json* node = &cfg;
    size_t pos = 0;
    while (true) {
        size_t dot = path.find('.', pos);
        std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (dot == std::string::npos) {
            (*node)[key] = parsed;
            break;
        }
        node = &(*node)[key];
        pos = dot + 1;
    }
}

json error_json(const std::string& kind, const std::string& message) {
    json e;
    e["error"] = kind;
    e["message"] = message;
    return e;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"off-resonant error simulation and characterization"};
    app.require_subcommand(1);

    std::string config_path, preset, out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool serial = false;
    std::vector<std::string> overrides;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--preset", preset, "named preset from the presets directory");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "master seed")->each([&](const std::string&) {
            seed_set = true;
        });
        sub->add_option("--threads", threads, "worker threads (0 = OFFRES_THREADS or all)");
        sub->add_flag("--serial", serial, "run the serial reference executor");
        sub->add_option("--set", overrides, "override config values (key.path=value)");
    };

    for (const auto& name : kExperiments) add_common(app.add_subcommand(name));
    // extra direct flags for the coherence limit
    auto* coh = app.get_subcommand("coherence-limit");
    double t1_us = 0, t2_us = 0, tg_ns = 0, t1b_us = 0, t2b_us = 0;
    int coh_qubits = 0;
    coh->add_option("--t1-us", t1_us);
    coh->add_option("--t2-us", t2_us);
    coh->add_option("--tg-ns", tg_ns);
    coh->add_option("--t1-q1-us", t1b_us);
    coh->add_option("--t2-q1-us", t2b_us);
    coh->add_option("--qubits", coh_qubits);

    CLI11_PARSE(app, argc, argv);

    std::string experiment = app.get_subcommands().front()->get_name();
    try {
        json cfg;
        if (!preset.empty()) {
            const char* root = std::getenv("OFFRES_PRESET_DIR");
            fs::path dir = root ? fs::path(root) : fs::path("presets");
            std::ifstream f(dir / (preset + ".json"));
            if (!f) throw SchemaError("--preset: cannot open '" + preset + "'");
            f >> cfg;
        } else if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw SchemaError("--config: cannot open '" + config_path + "'");
            f >> cfg;
        } else {
            cfg = json::object();
        }
        cfg["experiment"] = experiment;
        if (seed_set) cfg["seed"] = seed;
        if (experiment == "coherence-limit") {
            if (tg_ns > 0) cfg["coherence"]["tg_ns"] = tg_ns;
            if (t1_us > 0) cfg["coherence"]["t1_us"] = t1_us;
            if (t2_us > 0) cfg["coherence"]["t2_us"] = t2_us;
            if (t1b_us > 0) cfg["coherence"]["t1_q1_us"] = t1b_us;
            if (t2b_us > 0) cfg["coherence"]["t2_q1_us"] = t2b_us;
            if (coh_qubits > 0) cfg["coherence"]["qubits"] = coh_qubits;
        }
        for (const auto& kv : overrides) apply_override(cfg, kv);
        json normalized = normalize_config(cfg);
        configure_threads(threads);
        ExecPolicy policy = serial ? ExecPolicy::Serial : ExecPolicy::OpenMP;
        return dispatch(normalized, out_dir, policy);
    } catch (const SchemaError& e) {
        std::cout << error_json("schema", e.what()).dump(2) << std::endl;
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cout << error_json("schema", e.what()).dump(2) << std::endl;
        return 2;
    } catch (const CalibrationError& e) {
        std::cout << error_json("calibration", e.what()).dump(2) << std::endl;
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cout << error_json("schema", e.what()).dump(2) << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cout << error_json("numerical", e.what()).dump(2) << std::endl;
        return 3;
    }
}
