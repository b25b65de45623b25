#include "offres/qcore.hpp"

#include <cmath>
#include <stdexcept>

namespace offres {

namespace {
const cxd kI(0.0, 1.0);
}

Mat pauli1(char label) {
    Mat m(2, 2);
    switch (label) {
        case 'I': m << 1, 0, 0, 1; break;
        case 'X': m << 0, 1, 1, 0; break;
        case 'Y': m << 0, -kI, kI, 0; break;
        case 'Z': m << 1, 0, 0, -1; break;
        default: throw std::invalid_argument("unknown Pauli label");
    }
    return m;
}

Mat pauli_matrix(const std::string& labels) {
    if (labels.empty()) throw std::invalid_argument("empty Pauli string");
    Mat m = pauli1(labels[0]);
    for (size_t i = 1; i < labels.size(); ++i) {
        Mat next(m.rows() * 2, m.cols() * 2);
        Mat p = pauli1(labels[i]);
        for (int r = 0; r < m.rows(); ++r)
            for (int c = 0; c < m.cols(); ++c) next.block(2 * r, 2 * c, 2, 2) = m(r, c) * p;
        m = next;
    }
    return m;
}

std::vector<std::string> pauli_labels(int n_qubits) {
    static const char* axes = "IXYZ";
    std::vector<std::string> out;
    int count = 1;
    for (int i = 0; i < n_qubits; ++i) count *= 4;
    out.reserve(count);
    for (int idx = 0; idx < count; ++idx) {
        std::string s(n_qubits, 'I');
        int v = idx;
        for (int q = n_qubits - 1; q >= 0; --q) {
            s[q] = axes[v % 4];
            v /= 4;
        }
        out.push_back(s);
    }
    return out;
}

bool is_hermitian(const Mat& m, double tol) {
    return m.rows() == m.cols() && (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool is_unitary(const Mat& m, double tol) {
    if (m.rows() != m.cols()) return false;
    Mat d = m.adjoint() * m - Mat::Identity(m.rows(), m.cols());
    return d.cwiseAbs().maxCoeff() <= tol;
}

Mat matrix_exp_hermitian(const Mat& h, double t) {
    if (h.rows() != h.cols() || (h.rows() != 2 && h.rows() != 4))
        throw std::invalid_argument("matrix_exp_hermitian: dims 2 and 4 only");
    if (!is_hermitian(h))
        throw std::invalid_argument("matrix_exp_hermitian: input not Hermitian");
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    const auto& w = es.eigenvalues();
    const Mat& v = es.eigenvectors();
    Vec phases(w.size());
    for (int i = 0; i < w.size(); ++i) phases(i) = std::exp(-kI * w(i) * t);
    return v * phases.asDiagonal() * v.adjoint();
}

PureState ket(const std::string& bits) {
    int dim = 1 << bits.size();
    Vec v = Vec::Zero(dim);
    int idx = 0;
    for (char b : bits) {
        idx <<= 1;
        if (b == '1') idx |= 1;
        else if (b != '0') throw std::invalid_argument("ket: bits must be 0/1");
    }
    v(idx) = 1.0;
    return {v};
}

PureState ket_plus() {
    Vec v(2);
    v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    return {v};
}

PureState ket_minus() {
    Vec v(2);
    v << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
    return {v};
}

PureState tensor(const PureState& a, const PureState& b) {
    Vec v(a.dim() * b.dim());
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < b.dim(); ++j) v(i * b.dim() + j) = a.amp(i) * b.amp(j);
    return {v};
}

void check_density_matrix(const Mat& rho, double tol) {
    if (!is_hermitian(rho, tol)) throw std::invalid_argument("density matrix not Hermitian");
    if (std::abs(rho.trace().real() - 1.0) > tol || std::abs(rho.trace().imag()) > tol)
        throw std::invalid_argument("density matrix trace != 1");
    Eigen::SelfAdjointEigenSolver<Mat> es(rho);
    if (es.eigenvalues().minCoeff() < -1e-9)
        throw std::invalid_argument("density matrix not positive semidefinite");
}

bool KrausChannel::trace_preserving(double tol) const {
    if (ops.empty()) return false;
    Mat sum = Mat::Zero(dim(), dim());
    for (const Mat& k : ops) sum += k.adjoint() * k;
    return (sum - Mat::Identity(dim(), dim())).cwiseAbs().maxCoeff() <= tol;
}

Mat KrausChannel::apply(const Mat& rho) const {
    Mat out = Mat::Zero(dim(), dim());
    for (const Mat& k : ops) out += k * rho * k.adjoint();
    return out;
}

KrausChannel KrausChannel::from_unitary(const Mat& u) { return {{u}}; }

KrausChannel KrausChannel::compose_after(const KrausChannel& other) const {
    KrausChannel out;
    out.ops.reserve(ops.size() * other.ops.size());
    for (const Mat& a : ops)
        for (const Mat& b : other.ops) out.ops.push_back(a * b);
    return out;
}

KrausChannel KrausChannel::tensor_with(const KrausChannel& other) const {
    KrausChannel out;
    out.ops.reserve(ops.size() * other.ops.size());
    for (const Mat& a : ops)
        for (const Mat& b : other.ops) {
            Mat m(a.rows() * b.rows(), a.cols() * b.cols());
            for (int r = 0; r < a.rows(); ++r)
                for (int c = 0; c < a.cols(); ++c)
                    m.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
            out.ops.push_back(m);
        }
    return out;
}

Eigen::MatrixXd pauli_transfer_matrix(const KrausChannel& channel) {
    int d = channel.dim();
    int n = (d == 2) ? 1 : (d == 4 ? 2 : 0);
    if (n == 0) throw std::invalid_argument("PTM: 1 or 2 qubits only");
    if (!channel.trace_preserving())
        throw std::invalid_argument("PTM: channel is not trace preserving");
    auto labels = pauli_labels(n);
    int np = static_cast<int>(labels.size());
    std::vector<Mat> paulis;
    paulis.reserve(np);
    for (const auto& l : labels) paulis.push_back(pauli_matrix(l));
    Eigen::MatrixXd r(np, np);
    for (int j = 0; j < np; ++j) {
        Mat mapped = channel.apply(paulis[j]);
        for (int i = 0; i < np; ++i)
            r(i, j) = ((paulis[i] * mapped).trace() / static_cast<double>(d)).real();
    }
    return r;
}

Eigen::MatrixXd ptm_of_unitary(const Mat& u) {
    return pauli_transfer_matrix(KrausChannel::from_unitary(u));
}

double average_gate_error(const Eigen::MatrixXd& r, int n_qubits) {
    double d = static_cast<double>(1 << n_qubits);
    return d / (d + 1.0) * (1.0 - r.trace() / (d * d));
}

double average_gate_error(const Mat& u, const Mat& v_ideal) {
    int n = (u.rows() == 2) ? 1 : 2;
    return average_gate_error(ptm_of_unitary(v_ideal.adjoint() * u), n);
}

double purity(const Mat& rho) { return (rho * rho).trace().real(); }

double purity_from_pauli_expectations(const std::map<std::string, double>& expectations,
                                      int n_qubits) {
    double d = static_cast<double>(1 << n_qubits);
    double sum = 0.0;
    for (const auto& label : pauli_labels(n_qubits)) {
        auto it = expectations.find(label);
        if (it == expectations.end())
            throw std::invalid_argument("purity_from_pauli_expectations: missing <" + label + ">");
        sum += it->second * it->second;
    }
    return sum / d;
}

bool NoiseModel::trivial_relaxation() const {
    for (const auto& q : qubits)
        if (std::isfinite(q.t1) || std::isfinite(q.t2)) return false;
    return true;
}

NoiseModel NoiseModel::ideal(int n_qubits) {
    NoiseModel m;
    m.qubits.resize(n_qubits);
    return m;
}

NoiseModel NoiseModel::uniform(int n_qubits, double t1, double t2, double readout_error) {
    NoiseModel m;
    QubitNoise q;
    q.t1 = t1;
    q.t2 = t2;
    q.confusion << 1.0 - readout_error, readout_error, readout_error, 1.0 - readout_error;
    m.qubits.assign(n_qubits, q);
    return m;
}

KrausChannel relaxation_channel(double t1, double t2, double duration) {
    if (t2 > 2.0 * t1 + 1e-30) throw std::invalid_argument("relaxation_channel: T2 > 2 T1");
    if (duration < 0) throw std::invalid_argument("relaxation_channel: negative duration");
    double p = std::isfinite(t1) ? 1.0 - std::exp(-duration / t1) : 0.0;
    // pure dephasing rate; the T1 channel already contributes e^{-t/2T1} to coherences
    double gphi = 0.0;
    if (std::isfinite(t2)) gphi = 1.0 / t2 - (std::isfinite(t1) ? 0.5 / t1 : 0.0);
    double q = 0.5 * (1.0 - std::exp(-gphi * duration));

    KrausChannel amp;
    Mat k0(2, 2), k1(2, 2);
    k0 << 1, 0, 0, std::sqrt(1.0 - p);
    k1 << 0, std::sqrt(p), 0, 0;
    amp.ops = {k0, k1};

    KrausChannel deph;
    Mat d0 = std::sqrt(1.0 - q) * Mat::Identity(2, 2);
    Mat d1 = std::sqrt(q) * pauli1('Z');
    deph.ops = {d0, d1};

    return deph.compose_after(amp);
}

Mat apply_gate_noise(const Mat& rho, const NoiseModel& noise, double duration,
                     const std::vector<int>& qubits) {
    if (duration == 0.0 || noise.trivial_relaxation()) return rho;
    int n_total = (rho.rows() == 2) ? 1 : 2;
    Mat out = rho;
    for (int q : qubits) {
        const auto& nq = noise.qubits.at(q);
        if (!std::isfinite(nq.t1) && !std::isfinite(nq.t2)) continue;
        KrausChannel ch = relaxation_channel(nq.t1, nq.t2, duration);
        if (n_total == 2) {
            KrausChannel id{{Mat::Identity(2, 2)}};
            ch = (q == 0) ? ch.tensor_with(id) : id.tensor_with(ch);
        }
        out = ch.apply(out);
    }
    return out;
}

}  // namespace offres
