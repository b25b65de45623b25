#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "offres/analysis.hpp"
#include "offres/dynamics.hpp"

// Generalized Hamiltonian-error amplification sequences for a two-qubit gate
// close to ZX_{pi/2}. Fifteen sequences of the form
//
//   prep -> N x (gate, echo) -> post -> <Z> on control or target
//
// amplify all 15 two-qubit Pauli errors linearly in N. Each sequence row
// stores its sensitivity combination d<Z>/dN per unit error-rotation angle;
// the per-Pauli estimates solve the resulting linear system.

namespace offres {

struct HeatSequence {
    int index;                 // 1-based
    std::string prep_c, prep_t;
    std::string echo_c, echo_t;
    std::string post_c, post_t;
    char measure;              // 'C' or 'T'
    double alpha;              // dominant sensitivity magnitude
    std::array<double, 15> combo;  // over pauli_labels(2) without "II"
};

const std::vector<HeatSequence>& heat_table();
const std::vector<std::string>& heat_pauli_labels();  // 15 labels, II excluded

struct HeatOptions {
    std::vector<int> n_values{0, 4, 8, 12, 16, 20};
    double gate_duration = 0.0;
    double layer_duration = 0.0;       // prep/echo/post duration
    std::vector<double> frame_rates;   // non-empty: conjugate layers into the
                                       // gate frame at their start times
    double nonlinearity_tol = 0.05;    // RMS residual of the linear fit
};

struct HeatResult {
    std::map<std::string, double> epsilon;      // rotation angle per gate
    std::map<std::string, double> uncertainty;
    std::vector<double> slopes;                 // per sequence
    std::vector<double> slope_stderr;
    std::vector<double> fit_residuals;
    bool nonlinearity = false;
};

// gate(t) returns the repeated two-qubit unitary at absolute time t
HeatResult run_heat(const std::function<Mat(double)>& gate, const HeatOptions& options);

// expectation of one sequence at one repetition count (exposed for tests)
double heat_sequence_expectation(const HeatSequence& seq, int n,
                                 const std::function<Mat(double)>& gate,
                                 const HeatOptions& options);

Mat ideal_zx90();
// e^{-i angle/2 P} composed after the ideal gate
std::function<Mat(double)> zx90_with_static_error(const std::string& pauli, double angle);

// dresses a propagated CR unitary with a virtual control Z and target
// rotations, bringing it as close to ZX_{pi/2} as those knobs allow
Mat dress_cr_to_zx90(const Mat& u_cr);

struct BlindnessReport {
    double heat_xi = 0.0;                // quadrature XI/YI estimate, tracked frames
    double implied_rotation = 0.0;       // per-gate rotation from frame spectroscopy
    double stationary_injected = 0.0;
    double stationary_recovered = 0.0;
    double commensurate_recovered = 0.0;
    bool blind = false;                  // heat_xi < 0.1 * implied_rotation
    bool commensurate_restored = false;
};

// Demonstrates that HEAT misses the off-resonant XI excitation of a pulsed CR
// gate when the interleaved echoes live in the control's resonant frame,
// while state-selective frame spectroscopy exposes it.
BlindnessReport heat_blindness_demo(const CrossResonanceModel& model, double t_gate,
                                    double layer_duration);

}  // namespace offres
