#pragma once

#include <functional>
#include <stdexcept>

#include "offres/analysis.hpp"
#include "offres/dynamics.hpp"
#include "offres/parallel.hpp"
#include "offres/pulse.hpp"

// Experiment builders and executors for the amplification protocols:
// continuous phase amplification, state-selective frame spectroscopy (CR and
// spectator variants), CPMG delay scans, Ramsey Stark-shift measurement and
// DRAG calibration sweeps. Grid columns are independent jobs executed through
// parallel_for; assembly is keyed by index, so results are deterministic.

namespace offres {

struct CalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SweepSpec {
    std::vector<double> phi_grid;      // radians, strictly increasing
    std::vector<int> n_grid;           // repetition counts, strictly increasing
    std::string initial_state = "0";   // run_cpa only
    std::vector<int> measured_qubits = {0};
};

SweepSpec make_sweep_spec(double phi_min, double phi_max, int phi_points, int n_min, int n_max,
                          int n_step);

struct SweepResult {
    std::vector<double> phi_grid;
    std::vector<int> n_grid;
    std::vector<int> measured_qubits;
    // populations[slot][n_index * phi_grid.size() + phi_index]
    std::vector<std::vector<double>> populations;
    double t_gate = 0.0;
    double t_interrogation = 0.0;
    double t_rep() const { return t_gate + t_interrogation; }

    double at(int slot, int n_index, int phi_index) const {
        return populations[slot][static_cast<size_t>(n_index) * phi_grid.size() +
                                 static_cast<size_t>(phi_index)];
    }
    std::vector<double> mean_over_n(int slot) const;
    std::vector<double> fixed_n(int slot, int n_value) const;
};

enum class Aggregation { MeanOverN, FixedN };

PeakExtraction extract_peaks(const SweepResult& result, int slot,
                             Aggregation aggregation = Aggregation::MeanOverN,
                             int fixed_n_value = -1, double threshold_factor = 5.0);

struct ExperimentOptions {
    ExecPolicy policy = ExecPolicy::OpenMP;
    NoiseModel noise;            // empty -> pure-state propagation
    PropagationOptions propagation;
    bool confusion_on_readout = false;
};

// CPA with a frame-change-only interrogation; H_phase = Z/2 per drive channel.
SweepResult run_cpa(const HamiltonianModel& model, const Schedule& gate, const SweepSpec& spec,
                    const ExperimentOptions& options = {});

// CR state-selective frame spectroscopy: target prepared in |+/-> of the first
// CR pulse, interrogating X_pi on the target advanced by phi/2 per repetition.
// Measures the control qubit.
SweepResult run_state_selective_framespec(const CrossResonanceModel& model, const Schedule& gate,
                                          const Pulse& x_pi, const SweepSpec& spec,
                                          Sector target_prep,
                                          const ExperimentOptions& options = {});

// Spectator variant: gate and interrogation X ride the driven-qubit channel;
// prep |+0> or |-0>. Measures both qubits.
SweepResult run_spectator_framespec(const SpectatorModel& model, const Schedule& gate,
                                    const Pulse& x_pi, const SweepSpec& spec, Sector prep,
                                    const ExperimentOptions& options = {});

enum class CpmgGate { XHalf, XPi };

struct CpmgSpec {
    double tau_start = 0.0;
    double tau_step = 0.222e-9;    // >= 0.222 ns, honored exactly
    int tau_points = 0;
    int repetitions = 16;
    CpmgGate gate = CpmgGate::XPi;

    std::vector<double> tau_grid() const;
};

struct CpmgResult {
    std::vector<double> taus;
    std::vector<std::vector<double>> populations;  // [qubit][tau]
    double t_gate = 0.0;
    double theta_g = 0.0;
    std::vector<std::string> warnings;
};

// driven qubit prepared in |+>, n repetitions of (gate, delay tau)
CpmgResult run_cpmg(const SpectatorModel& model, const Pulse& gate_pulse, const CpmgSpec& spec,
                    const ExperimentOptions& options = {});

struct StarkShiftResult {
    double theta = 0.0;            // fitted Z-phase per gate application
    double stderr = 0.0;
    std::vector<double> phases;    // unwrapped Ramsey phases per repetition
};

// Ramsey phase per gate. For the CR model the control qubit is measured with
// the target prepared in |+/->; the single-qubit variant measures the driven
// qubit directly.
StarkShiftResult measure_stark_shift(const SingleQubitDriveModel& model, const Schedule& gate,
                                     int max_reps = 256);
StarkShiftResult measure_stark_shift(const CrossResonanceModel& model, const Schedule& gate,
                                     Sector target_state, int max_reps = 256);

struct DragCalibration {
    std::vector<double> betas;
    std::vector<double> populations;
    double beta_opt = 0.0;         // parabolic refinement around the minimum
    double population_at_opt = 0.0;
    bool interior_minimum = false;
};

// Amplified excitation at phi_peak / fixed N versus the DRAG coefficient.
// gate_builder(beta) rebuilds the gate schedule with the wrapped envelope.
DragCalibration calibrate_drag(const HamiltonianModel& model,
                               const std::function<Schedule(double)>& gate_builder,
                               double phi_peak, int n_reps, const std::vector<double>& beta_grid,
                               int measured_qubit = 0, Sector prep = Sector::Plus,
                               const Pulse* x_pi = nullptr,
                               const ExperimentOptions& options = {});

// ---- gate construction helpers ----

Schedule single_pulse_schedule(const Pulse& p);

// peak amplitude minimizing the gate error against the ideal Stark Z rotation
// (Z_{sign(D) pi/2}); returns the calibrated amplitude in rad/s
double calibrate_stark_amplitude(const SingleQubitDriveModel& model, const Envelope& env,
                                 double amp_lo, double amp_hi);

Mat ideal_stark_z(double detuning);  // Z_{sign(D) pi/2}

// H_phase generator of the CPA reordering identity for a model's drive frame
Mat cpa_phase_generator(const HamiltonianModel& model);

PureState initial_state_from_label(const std::string& label, int n_qubits);

}  // namespace offres
