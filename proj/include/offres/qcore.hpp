#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <string>
#include <vector>

// Dense complex linear algebra for 1- and 2-qubit Hilbert spaces, Pauli
// algebra, Kraus channels, PTMs and gate-error metrics.
//
// Conventions (fixed project-wide):
//   * Z|0> = +|0>, |0> is the ground state.
//   * Qubit 0 is the LEFT kron factor: "ZX" = Z on qubit 0, X on qubit 1.
//   * Pauli enumeration is lexicographic: II, IX, IY, IZ, XI, ...

namespace offres {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double kHermTol = 1e-10;

Mat pauli1(char label);                         // I, X, Y or Z
Mat pauli_matrix(const std::string& labels);    // kron over qubits, qubit 0 left
std::vector<std::string> pauli_labels(int n_qubits);

struct PauliString {
    std::string labels;  // one of I,X,Y,Z per qubit
    int n() const { return static_cast<int>(labels.size()); }
    Mat matrix() const { return pauli_matrix(labels); }
    bool identity() const { return labels.find_first_not_of('I') == std::string::npos; }
};

bool is_hermitian(const Mat& m, double tol = kHermTol);
bool is_unitary(const Mat& m, double tol = kHermTol);

// exp(-i H t) for Hermitian H via eigendecomposition. Dims 2 and 4 only.
Mat matrix_exp_hermitian(const Mat& h, double t);

struct PureState {
    Vec amp;
    int dim() const { return static_cast<int>(amp.size()); }
    Mat density() const { return amp * amp.adjoint(); }
};

PureState ket(const std::string& bits);          // "0", "10", ...
PureState ket_plus();                            // (|0>+|1>)/sqrt2
PureState ket_minus();
PureState tensor(const PureState& a, const PureState& b);

void check_density_matrix(const Mat& rho, double tol = kHermTol);

struct KrausChannel {
    std::vector<Mat> ops;

    int dim() const { return ops.empty() ? 0 : static_cast<int>(ops.front().rows()); }
    bool trace_preserving(double tol = kHermTol) const;
    Mat apply(const Mat& rho) const;

    static KrausChannel from_unitary(const Mat& u);
    // this-after-other: (this o other)(rho)
    KrausChannel compose_after(const KrausChannel& other) const;
    KrausChannel tensor_with(const KrausChannel& other) const;
};

// R_ij = Tr[P_i Lambda(P_j)] / d, Paulis in lexicographic order.
Eigen::MatrixXd pauli_transfer_matrix(const KrausChannel& channel);
Eigen::MatrixXd ptm_of_unitary(const Mat& u);

// eps = d/(d+1) (1 - Tr[R]/d^2), d = 2^n.
double average_gate_error(const Eigen::MatrixXd& r, int n_qubits);
// Error of u against ideal v: PTM of v^dag u fed through the formula above.
double average_gate_error(const Mat& u, const Mat& v_ideal);

double purity(const Mat& rho);
double purity_from_pauli_expectations(const std::map<std::string, double>& expectations,
                                      int n_qubits);

// Per-qubit relaxation parameters plus measurement confusion.
struct QubitNoise {
    double t1 = std::numeric_limits<double>::infinity();
    double t2 = std::numeric_limits<double>::infinity();
    // confusion(i, j) = P(read i | prepared j); columns sum to 1
    Eigen::Matrix2d confusion = Eigen::Matrix2d::Identity();
};

struct NoiseModel {
    std::vector<QubitNoise> qubits;

    bool trivial_relaxation() const;
    static NoiseModel ideal(int n_qubits);
    static NoiseModel uniform(int n_qubits, double t1, double t2, double readout_error = 0.0);
};

// Amplitude damping (1/T1) composed with pure dephasing (1/T2 - 1/(2 T1)).
KrausChannel relaxation_channel(double t1, double t2, double duration);

Mat apply_gate_noise(const Mat& rho, const NoiseModel& noise, double duration,
                     const std::vector<int>& qubits);

}  // namespace offres
