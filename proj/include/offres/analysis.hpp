#pragma once

#include <Eigen/Dense>
#include <vector>

// Closed-form peak oracles, peak extraction, curve fitting and coherence
// limits. Peak positions are reported in (-pi, pi].
//
// Sign conventions: the oracles below are the forms verified by brute-force
// phi-maximization against the models in dynamics.hpp. For the cross-resonance
// and spectator models the detuning term enters with the opposite sign to the
// single-qubit drive case; this follows from the per-model Hamiltonian forms.

namespace offres {

double wrap_angle(double phi);  // into (-pi, pi]

// |<1|U|0>|^2 for a square pulse: (W^2/Wr^2) sin^2(Wr t / 2), Wr^2 = W^2 + D^2
double p10_closed_form(double omega, double delta, double t);

// sign(D) * sqrt(W^2 + D^2) * t_rep, wrapped
double stark_peak_oracle(double omega, double delta, double t_rep);

enum class Sector { Plus, Minus };

// control-sector peaks of the CR gate under state-selective frame
// spectroscopy; t_x is the interrogation X_pi duration
double cr_peak_oracle(double omega, double delta, double mu, double t_g, double t_x,
                      Sector sector);

// correlated driven/spectator peaks: -D t_rep -/+ pi/2 for the |+0>/|-0> preps
double spectator_peak_oracle(double delta, double t_rep, Sector sector);
// spectator-only crosstalk peak: -D t_rep
double spectator_ix_peak(double delta, double t_rep);

// CPMG delay positions: D (tau + t_g) = theta_g (entangling, |+> prep) or
// 0 (crosstalk) mod 2pi; returns all solutions in [tau_min, tau_max]
std::vector<double> cpmg_peak_taus(double delta, double t_g, double theta_g, double tau_min,
                                   double tau_max);

struct PeakFit {
    double position = 0.0;     // radians in (-pi, pi] (or seconds for tau scans)
    double height = 0.0;
    double half_width = 0.0;
    double uncertainty = 0.0;
    bool aliased = false;      // expected width below the grid step
};

struct PeakExtraction {
    std::vector<PeakFit> peaks;               // sorted by height, descending
    std::vector<std::string> warnings;
};

// local maxima above threshold_factor * median, parabolic refinement;
// set periodic=false for tau scans
PeakExtraction find_peaks(const std::vector<double>& xs, const std::vector<double>& values,
                          double threshold_factor = 5.0, bool periodic = true);

struct LinearFit {
    double slope = 0.0, intercept = 0.0;
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
    double residual = 0.0;
};
LinearFit fit_linear(const std::vector<double>& xs, const std::vector<double>& ys);

struct DecayFit {
    double a = 0.0;        // amplitude
    double alpha = 0.0;    // decay base per unit length
    double b = 0.0;        // floor
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
    double residual = 0.0;
    bool converged = false;
    double alpha_stderr() const { return std::sqrt(std::max(covariance(1, 1), 0.0)); }
};
// y = a * alpha^(power * n) + b; power 1 for survival decays, 2 for purity
DecayFit fit_decay(const std::vector<double>& lengths, const std::vector<double>& values,
                   int power = 1);

struct SinFit {
    double a = 0.0;        // rad/s
    double phi0 = 0.0;     // radians
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
    double residual = 0.0;
};
// fit sin(phi_i) to sin(a t_i + phi0); a_hint bounds the frequency scan
SinFit fit_sin(const std::vector<double>& ts, const std::vector<double>& phis, double a_max);

// Appendix-style coherence limits
double coherence_limit_1q(double t_g, double t1, double t2);
double coherence_limit_2q(double t_g, double t1_q0, double t2_q0, double t1_q1, double t2_q1);

}  // namespace offres
