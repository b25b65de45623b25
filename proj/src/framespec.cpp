#include "offres/framespec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace offres {

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<double> repetition_end_times(const Schedule& cpa, const Schedule& gate,
                                         double t_x, const std::vector<int>& n_grid) {
    std::vector<double> times;
    times.reserve(n_grid.size());
    double tg = gate.duration();
    for (int n : n_grid) {
        if (n == 0) {
            times.push_back(0.0);
        } else {
            double t = tg + (n - 1) * (t_x + tg);
            times.push_back(t);
        }
    }
    if (!times.empty() && times.back() > cpa.duration() + 1e-12)
        throw std::invalid_argument("repetition count beyond schedule span");
    return times;
}

void validate_spec(const SweepSpec& spec) {
    if (spec.phi_grid.empty() || spec.n_grid.empty())
        throw std::invalid_argument("sweep spec: empty grid");
    for (size_t i = 1; i < spec.phi_grid.size(); ++i)
        if (spec.phi_grid[i] <= spec.phi_grid[i - 1])
            throw std::invalid_argument("sweep spec: phi grid must be strictly increasing");
    for (size_t i = 1; i < spec.n_grid.size(); ++i)
        if (spec.n_grid[i] <= spec.n_grid[i - 1])
            throw std::invalid_argument("sweep spec: n grid must be strictly increasing");
    if (spec.n_grid.front() < 0) throw std::invalid_argument("sweep spec: negative repetitions");
}

// runs one phi column: builds the CPA schedule, propagates once with
// snapshots at the repetition boundaries, fills populations
struct ColumnJob {
    const HamiltonianModel* model;
    const Schedule* gate;
    const SweepSpec* spec;
    const ExperimentOptions* options;
    CpaInterrogation interrogation;
    double t_x = 0.0;
    PureState psi0;
    SweepResult* result;

    void operator()(int phi_index) const {
        double phi = spec->phi_grid[phi_index];
        int n_max = spec->n_grid.back();
        Schedule cpa = build_cpa_schedule(*gate, phi, n_max, interrogation);
        auto times = repetition_end_times(cpa, *gate, t_x, spec->n_grid);
        const bool noisy = !options->noise.trivial_relaxation();
        PropagationOptions popts = options->propagation;
        popts.noise = options->noise;
        const NoiseModel* readout =
            options->confusion_on_readout ? &options->noise : nullptr;

        std::vector<Mat> snaps;
        if (noisy) {
            snaps = propagate_snapshots(*model, cpa, psi0.density(), popts, times);
        } else {
            snaps = propagate_snapshots(*model, cpa, popts, times);
        }
        for (size_t ni = 0; ni < times.size(); ++ni) {
            Mat rho = noisy ? snaps[ni] : Mat((snaps[ni] * psi0.amp) * (snaps[ni] * psi0.amp).adjoint());
            for (size_t slot = 0; slot < spec->measured_qubits.size(); ++slot) {
                double p = excited_population(rho, spec->measured_qubits[slot], readout);
                result->populations[slot][ni * spec->phi_grid.size() +
                                          static_cast<size_t>(phi_index)] = p;
            }
        }
    }
};

SweepResult run_sweep(const HamiltonianModel& model, const Schedule& gate, const SweepSpec& spec,
                      const CpaInterrogation& interrogation, const PureState& psi0,
                      const ExperimentOptions& options) {
    validate_spec(spec);
    SweepResult result;
    result.phi_grid = spec.phi_grid;
    result.n_grid = spec.n_grid;
    result.measured_qubits = spec.measured_qubits;
    result.t_gate = gate.duration();
    result.t_interrogation =
        interrogation.rotated_x ? interrogation.rotated_x->x_pulse.duration() : 0.0;
    result.populations.assign(spec.measured_qubits.size(),
                              std::vector<double>(spec.phi_grid.size() * spec.n_grid.size(), 0.0));
    ColumnJob job{&model, &gate, &spec,    &options,
                  interrogation, result.t_interrogation, psi0, &result};
    parallel_for(options.policy, static_cast<int>(spec.phi_grid.size()),
                 [&](int i) { job(i); });
    return result;
}

}  // namespace

SweepSpec make_sweep_spec(double phi_min, double phi_max, int phi_points, int n_min, int n_max,
                          int n_step) {
    SweepSpec s;
    for (int i = 0; i < phi_points; ++i)
        s.phi_grid.push_back(phi_min + (phi_max - phi_min) * i / std::max(1, phi_points - 1));
    for (int n = n_min; n <= n_max; n += n_step) s.n_grid.push_back(n);
    return s;
}

std::vector<double> SweepResult::mean_over_n(int slot) const {
    std::vector<double> out(phi_grid.size(), 0.0);
    for (size_t ni = 0; ni < n_grid.size(); ++ni)
        for (size_t pi = 0; pi < phi_grid.size(); ++pi)
            out[pi] += populations[slot][ni * phi_grid.size() + pi];
    for (auto& v : out) v /= static_cast<double>(n_grid.size());
    return out;
}

std::vector<double> SweepResult::fixed_n(int slot, int n_value) const {
    auto it = std::find(n_grid.begin(), n_grid.end(), n_value);
    if (it == n_grid.end()) throw std::invalid_argument("fixed_n: value not in the n grid");
    size_t ni = static_cast<size_t>(it - n_grid.begin());
    return {populations[slot].begin() + ni * phi_grid.size(),
            populations[slot].begin() + (ni + 1) * phi_grid.size()};
}

PeakExtraction extract_peaks(const SweepResult& result, int slot, Aggregation aggregation,
                             int fixed_n_value, double threshold_factor) {
    std::vector<double> column;
    if (aggregation == Aggregation::MeanOverN) {
        column = result.mean_over_n(slot);
    } else {
        int n = fixed_n_value >= 0 ? fixed_n_value : result.n_grid.back();
        column = result.fixed_n(slot, n);
    }
    return find_peaks(result.phi_grid, column, threshold_factor, true);
}

PureState initial_state_from_label(const std::string& label, int n_qubits) {
    if (n_qubits == 1) {
        if (label == "0") return ket("0");
        if (label == "1") return ket("1");
        if (label == "plus") return ket_plus();
        if (label == "minus") return ket_minus();
    } else {
        if (label == "00") return ket("00");
        if (label == "plus0") return tensor(ket_plus(), ket("0"));
        if (label == "minus0") return tensor(ket_minus(), ket("0"));
        if (label == "0plus") return tensor(ket("0"), ket_plus());
        if (label == "0minus") return tensor(ket("0"), ket_minus());
    }
    throw std::invalid_argument("unknown initial state label '" + label + "'");
}

SweepResult run_cpa(const HamiltonianModel& model, const Schedule& gate, const SweepSpec& spec,
                    const ExperimentOptions& options) {
    PureState psi0 = initial_state_from_label(spec.initial_state, model_qubits(model));
    return run_sweep(model, gate, spec, {}, psi0, options);
}

SweepResult run_state_selective_framespec(const CrossResonanceModel& model, const Schedule& gate,
                                          const Pulse& x_pi, const SweepSpec& spec,
                                          Sector target_prep, const ExperimentOptions& options) {
    if (x_pi.channel != model.target_channel)
        throw std::invalid_argument("interrogation pulse must drive the target channel");
    PureState target = (target_prep == Sector::Plus) ? ket_plus() : ket_minus();
    PureState psi0 = tensor(ket("0"), target);
    SweepSpec s = spec;
    s.measured_qubits = {0};  // control
    CpaInterrogation interr;
    interr.rotated_x = RotatedXInterrogation{x_pi};
    return run_sweep(model, gate, s, interr, psi0, options);
}

SweepResult run_spectator_framespec(const SpectatorModel& model, const Schedule& gate,
                                    const Pulse& x_pi, const SweepSpec& spec, Sector prep,
                                    const ExperimentOptions& options) {
    if (x_pi.channel != model.channel)
        throw std::invalid_argument("interrogation pulse must drive the driven-qubit channel");
    PureState driven = (prep == Sector::Plus) ? ket_plus() : ket_minus();
    PureState psi0 = tensor(driven, ket("0"));
    SweepSpec s = spec;
    s.measured_qubits = {0, 1};  // driven, spectator
    CpaInterrogation interr;
    interr.rotated_x = RotatedXInterrogation{x_pi};
    return run_sweep(model, gate, s, interr, psi0, options);
}

std::vector<double> CpmgSpec::tau_grid() const {
    if (tau_step < 0.222e-9 - 1e-15)
        throw std::invalid_argument("cpmg: tau increment below the 0.222 ns granularity");
    if (tau_points <= 0) throw std::invalid_argument("cpmg: empty tau grid");
    std::vector<double> taus(tau_points);
    for (int i = 0; i < tau_points; ++i) taus[i] = tau_start + i * tau_step;
    return taus;
}

CpmgResult run_cpmg(const SpectatorModel& model, const Pulse& gate_pulse, const CpmgSpec& spec,
                    const ExperimentOptions& options) {
    CpmgResult result;
    result.taus = spec.tau_grid();
    result.t_gate = gate_pulse.duration();
    result.theta_g = (spec.gate == CpmgGate::XPi) ? kPi : 0.5 * kPi;
    result.populations.assign(2, std::vector<double>(result.taus.size(), 0.0));
    double width = 2.0 * kPi / (std::abs(model.detuning) * std::max(1, spec.repetitions));
    if (spec.tau_step > width)
        result.warnings.push_back("tau grid coarser than the expected peak width");

    PureState psi0 = tensor(ket_plus(), ket("0"));
    const HamiltonianModel hmodel = model;
    const bool noisy = !options.noise.trivial_relaxation();
    const NoiseModel* readout = options.confusion_on_readout ? &options.noise : nullptr;
    parallel_for(options.policy, static_cast<int>(result.taus.size()), [&](int i) {
        Schedule block;
        for (int r = 0; r < spec.repetitions; ++r) {
            block.append(gate_pulse);
            if (result.taus[i] > 0.0) block.append(Delay{result.taus[i]});
        }
        PropagationOptions popts = options.propagation;
        popts.noise = options.noise;
        Mat rho;
        if (noisy) {
            rho = propagate(hmodel, block, psi0.density(), popts);
        } else {
            Mat u = propagate(hmodel, block, popts);
            Vec v = u * psi0.amp;
            rho = v * v.adjoint();
        }
        result.populations[0][i] = excited_population(rho, 0, readout);
        result.populations[1][i] = excited_population(rho, 1, readout);
    });
    return result;
}

namespace {

StarkShiftResult stark_shift_from_trajectory(const std::vector<double>& xs,
                                             const std::vector<double>& ys, int max_reps) {
    std::vector<double> ks, phases;
    double prev = 0.0;
    for (int k = 0; k < max_reps; ++k) {
        double raw = std::atan2(ys[k], xs[k]);
        if (k > 0) {
            while (raw - prev > kPi) raw -= 2.0 * kPi;
            while (raw - prev < -kPi) raw += 2.0 * kPi;
        }
        phases.push_back(raw);
        prev = raw;
        ks.push_back(static_cast<double>(k + 1));
    }
    // require at least two full fringes before trusting the fit
    if (std::abs(phases.back() - phases.front()) < 4.0 * kPi)
        throw std::runtime_error("measure_stark_shift: fewer than two fringes; extend the grid");
    LinearFit fit = fit_linear(ks, phases);
    StarkShiftResult r;
    r.theta = -fit.slope;
    r.stderr = std::sqrt(std::max(fit.covariance(0, 0), 0.0));
    r.phases = phases;
    return r;
}

}  // namespace

StarkShiftResult measure_stark_shift(const SingleQubitDriveModel& model, const Schedule& gate,
                                     int max_reps) {
    PropagationOptions popts;
    Mat u = propagate(model, gate, popts);  // drive frame, one gate
    double tg = gate.duration();
    auto rates = resonant_frame_rates(model);
    Vec psi = ket_plus().amp;
    std::vector<double> xs, ys;
    Mat sx = pauli1('X'), sy = pauli1('Y');
    Vec cur = psi;
    for (int k = 1; k <= max_reps; ++k) {
        cur = u * cur;
        Vec res = frame_rotation(rates, k * tg) * cur;
        xs.push_back((res.adjoint() * sx * res)(0, 0).real());
        ys.push_back((res.adjoint() * sy * res)(0, 0).real());
    }
    return stark_shift_from_trajectory(xs, ys, max_reps);
}

StarkShiftResult measure_stark_shift(const CrossResonanceModel& model, const Schedule& gate,
                                     Sector target_state, int max_reps) {
    PropagationOptions popts;
    const HamiltonianModel hmodel = model;
    Mat u = propagate(hmodel, gate, popts);
    double tg = gate.duration();
    auto rates = resonant_frame_rates(hmodel);
    PureState target = (target_state == Sector::Plus) ? ket_plus() : ket_minus();
    Vec psi = tensor(ket_plus(), target).amp;
    Mat sxi = pauli_matrix("XI"), syi = pauli_matrix("YI");
    std::vector<double> xs, ys;
    Vec cur = psi;
    for (int k = 1; k <= max_reps; ++k) {
        cur = u * cur;
        Vec res = frame_rotation(rates, k * tg) * cur;
        xs.push_back((res.adjoint() * sxi * res)(0, 0).real());
        ys.push_back((res.adjoint() * syi * res)(0, 0).real());
    }
    return stark_shift_from_trajectory(xs, ys, max_reps);
}

DragCalibration calibrate_drag(const HamiltonianModel& model,
                               const std::function<Schedule(double)>& gate_builder,
                               double phi_peak, int n_reps, const std::vector<double>& beta_grid,
                               int measured_qubit, Sector prep, const Pulse* x_pi,
                               const ExperimentOptions& options) {
    if (beta_grid.size() < 3) throw std::invalid_argument("calibrate_drag: need >= 3 beta values");
    DragCalibration cal;
    cal.betas = beta_grid;
    cal.populations.assign(beta_grid.size(), 0.0);

    SweepSpec spec;
    spec.phi_grid = {phi_peak};
    spec.n_grid = {n_reps};
    spec.measured_qubits = {measured_qubit};

    parallel_for(options.policy, static_cast<int>(beta_grid.size()), [&](int i) {
        Schedule gate = gate_builder(beta_grid[i]);
        ExperimentOptions serial = options;
        serial.policy = ExecPolicy::Serial;  // outer loop already parallel
        SweepResult r;
        if (const auto* cr = std::get_if<CrossResonanceModel>(&model)) {
            if (!x_pi) throw std::invalid_argument("calibrate_drag: CR model needs the X_pi pulse");
            r = run_state_selective_framespec(*cr, gate, *x_pi, spec, prep, serial);
        } else if (const auto* sp = std::get_if<SpectatorModel>(&model)) {
            if (!x_pi) throw std::invalid_argument("calibrate_drag: spectator model needs X_pi");
            r = run_spectator_framespec(*sp, gate, *x_pi, spec, prep, serial);
            // measured_qubit selects driven (0) or spectator (1)
            r.populations = {r.populations[static_cast<size_t>(measured_qubit)]};
        } else {
            spec.initial_state = "0";
            r = run_cpa(model, gate, spec, serial);
        }
        cal.populations[i] = r.populations[0][0];
    });

    auto [jmin, jmax] = std::minmax_element(cal.populations.begin(), cal.populations.end());
    if (*jmax - *jmin < 1e-12) {
        // flat curve: nothing to correct
        cal.beta_opt = 0.0;
        cal.population_at_opt = *jmin;
        return cal;
    }
    size_t j = static_cast<size_t>(jmin - cal.populations.begin());
    if (j == 0 || j + 1 == cal.populations.size())
        throw CalibrationError("calibrate_drag: no interior minimum in the beta sweep");
    cal.interior_minimum = true;
    double y0 = cal.populations[j - 1], y1 = cal.populations[j], y2 = cal.populations[j + 1];
    double denom = y0 - 2.0 * y1 + y2;
    double step = cal.betas[j + 1] - cal.betas[j];
    double off = (denom != 0.0) ? 0.5 * (y0 - y2) / denom : 0.0;
    cal.beta_opt = cal.betas[j] + off * step;
    cal.population_at_opt = y1 - 0.25 * (y0 - y2) * off;
    return cal;
}

Schedule single_pulse_schedule(const Pulse& p) {
    Schedule s;
    s.append(p);
    return s;
}

Mat ideal_stark_z(double detuning) {
    double theta = (detuning >= 0 ? 1.0 : -1.0) * 0.5 * kPi;
    return matrix_exp_hermitian(0.5 * theta * pauli1('Z'), 1.0);
}

double calibrate_stark_amplitude(const SingleQubitDriveModel& model, const Envelope& env,
                                 double amp_lo, double amp_hi) {
    Mat ideal = ideal_stark_z(model.detuning);
    auto err = [&](double amp) {
        Pulse p{model.channel, env, amp, 0.0, 0.0};
        PropagationOptions popts;
        popts.frame = ResonantFrame{};
        Mat u = propagate(model, single_pulse_schedule(p), popts);
        return average_gate_error(u, ideal);
    };
    // golden-section minimization
    double lo = amp_lo, hi = amp_hi;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double m1 = hi - gr * (hi - lo), m2 = lo + gr * (hi - lo);
    double f1 = err(m1), f2 = err(m2);
    for (int it = 0; it < 200 && (hi - lo) > 1e-9 * std::abs(hi); ++it) {
        if (f1 < f2) {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - gr * (hi - lo);
            f1 = err(m1);
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + gr * (hi - lo);
            f2 = err(m2);
        }
    }
    return 0.5 * (lo + hi);
}

Mat cpa_phase_generator(const HamiltonianModel& model) {
    if (model_qubits(model) == 1) return 0.5 * pauli1('Z');
    return 0.5 * (pauli_matrix("ZI") + pauli_matrix("IZ"));
}

}  // namespace offres
