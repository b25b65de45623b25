#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <variant>

#include "offres/pulse.hpp"
#include "offres/qcore.hpp"

// Hamiltonian models, rotating-frame transformations and time-dependent
// propagation. All models are written in their drive frame after the RWA:
//
//   single-qubit drive : H = (D/2) Z + drive terms,          D = w_d - w_0
//   cross-resonance    : H = -(D/2) ZI + zeta ZZ + drive,    D = w_t - w_c
//   spectator          : H = -(D/2) IZ + drive,              D = w_s - w_0
//
// The per-model sign conventions follow the forms above exactly; each is
// validated against its own peak formula in the analysis module.

namespace offres {

struct SingleQubitDriveModel {
    double detuning = 0.0;          // rad/s
    std::string channel = "d0";
    double carrier = 0.0;           // rad/s qubit frequency, for non-RWA runs
};

struct CrossResonanceModel {
    double detuning = 0.0;          // rad/s, w_target - w_control
    double mu = 0.0;                // ZX / XI ratio
    double nu = 0.0;                // IX / XI ratio
    double zeta = 0.0;              // rad/s ZZ coefficient
    std::string control_channel = "u0";
    std::string target_channel = "d1";
};

struct SpectatorModel {
    double detuning = 0.0;          // rad/s, w_spectator - w_driven
    double mu = 0.0;
    double nu = 0.0;
    std::string channel = "d0";
};

using HamiltonianModel = std::variant<SingleQubitDriveModel, CrossResonanceModel, SpectatorModel>;

int model_qubits(const HamiltonianModel& model);
std::vector<std::string> model_channels(const HamiltonianModel& model);
// per-qubit Z rotation rates of the resonant frame relative to the drive frame
std::vector<double> resonant_frame_rates(const HamiltonianModel& model);

struct DriveFrame {};
struct ResonantFrame {};
struct CustomFrame {
    std::vector<double> rates;  // rad/s per qubit, relative to the drive frame
};
using Frame = std::variant<DriveFrame, ResonantFrame, CustomFrame>;

enum class PropagationMode { Unitary, DensityMatrix };

struct PropagationOptions {
    double dt_max = 1e-10;
    Frame frame = DriveFrame{};
    bool rwa = true;
    PropagationMode mode = PropagationMode::Unitary;
    bool auto_dt = true;            // shrink dt to meet stability/accuracy bounds
    double t0 = 0.0;                // absolute time of schedule start
    std::int64_t max_steps = 40'000'000;
    NoiseModel noise;               // density mode only
};

// Unitary over the full schedule, expressed in options.frame.
Mat propagate(const HamiltonianModel& model, const Schedule& schedule,
              const PropagationOptions& options);

// Density-matrix evolution with relaxation interleaved at every step.
Mat propagate(const HamiltonianModel& model, const Schedule& schedule, const Mat& rho0,
              const PropagationOptions& options);

// Cumulative propagators U(0 -> t_i) at the requested times, which must lie on
// instruction boundaries of the schedule. Unitary mode only.
std::vector<Mat> propagate_snapshots(const HamiltonianModel& model, const Schedule& schedule,
                                     const PropagationOptions& options,
                                     const std::vector<double>& times);

// Density-matrix snapshots rho(t_i); relaxation interleaved when noise is set.
std::vector<Mat> propagate_snapshots(const HamiltonianModel& model, const Schedule& schedule,
                                     const Mat& rho0, const PropagationOptions& options,
                                     const std::vector<double>& times);

// Conjugates a propagator over [t_start, t_end] between two diagonal rotating
// frames given by per-qubit rates relative to a common reference.
Mat change_frame(const Mat& u, const std::vector<double>& from_rates,
                 const std::vector<double>& to_rates, double t_start, double t_end);

// diag rotation R(t) = prod_q exp(-i rate_q t Z_q / 2)
Mat frame_rotation(const std::vector<double>& rates, double t);

// Operator-norm distance between RWA and non-RWA propagators of the schedule.
double rwa_validation(const HamiltonianModel& model, const Schedule& schedule,
                      PropagationOptions options = {});

struct MeasureOptions {
    std::optional<std::uint64_t> shots;  // exact probabilities when unset
    std::uint64_t seed = 0;
};

// Born probabilities for the listed qubits (bitstring index: first listed
// qubit is the most significant bit), with optional per-qubit confusion.
std::vector<double> measure_populations(const Mat& rho, const std::vector<int>& qubits,
                                        const NoiseModel* noise = nullptr,
                                        const MeasureOptions& opts = {});
std::vector<double> measure_populations(const PureState& psi, const std::vector<int>& qubits,
                                        const NoiseModel* noise = nullptr,
                                        const MeasureOptions& opts = {});

// P(qubit reads 1)
double excited_population(const Mat& rho, int qubit, const NoiseModel* noise = nullptr);

}  // namespace offres
