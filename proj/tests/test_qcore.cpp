#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "offres/qcore.hpp"
#include "support/oracles.hpp"

using namespace offres;
namespace oracle = offres::testing;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("matrix_exp_hermitian basics") {
    Mat zero = Mat::Zero(2, 2);
    CHECK((matrix_exp_hermitian(zero, 3.7) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);

    // e^{-i (pi/2) X} = -i X
    Mat h = 0.5 * kPi * pauli1('X');
    Mat u = matrix_exp_hermitian(h, 1.0);
    Mat expected = cxd(0.0, -1.0) * pauli1('X');
    CHECK((u - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("matrix_exp_hermitian agrees with the Taylor oracle") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Mat h = oracle::random_hermitian(4, rng);
        Mat u = matrix_exp_hermitian(h, 1.0);
        CHECK(is_unitary(u, 1e-9));
        CHECK((u - oracle::taylor_expm(h, 1.0)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("matrix_exp_hermitian rejects bad input") {
    Mat m(2, 2);
    m << 0, 1, 0, 0;  // not Hermitian
    CHECK_THROWS_AS(matrix_exp_hermitian(m, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(matrix_exp_hermitian(Mat::Zero(8, 8), 1.0), std::invalid_argument);
}

TEST_CASE("pauli strings") {
    Mat zx(4, 4);
    zx << 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, -1, 0, 0, -1, 0;
    CHECK((pauli_matrix("ZX") - zx).cwiseAbs().maxCoeff() < 1e-15);
    auto labels = pauli_labels(2);
    CHECK(labels.size() == 16);
    CHECK(labels[0] == "II");
    CHECK(labels[1] == "IX");
    CHECK(labels[4] == "XI");
    PauliString p{"XY"};
    CHECK(is_hermitian(p.matrix()));
    CHECK(is_unitary(p.matrix()));
    CHECK(std::abs(p.matrix().trace()) < 1e-15);
}

TEST_CASE("PTM of simple channels") {
    KrausChannel id = KrausChannel::from_unitary(Mat::Identity(2, 2));
    Eigen::MatrixXd r = pauli_transfer_matrix(id);
    CHECK((r - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);

    // fully depolarizing: mixture of the four Paulis
    KrausChannel dep;
    for (const char* l : {"I", "X", "Y", "Z"}) dep.ops.push_back(0.5 * pauli_matrix(l));
    Eigen::MatrixXd rd = pauli_transfer_matrix(dep);
    Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(4, 4);
    expect(0, 0) = 1.0;
    CHECK((rd - expect).cwiseAbs().maxCoeff() < 1e-12);

    // first row of any TP channel is (1, 0, ..., 0) and entries are bounded
    std::mt19937_64 rng(7);
    KrausChannel ch = oracle::random_channel(1, rng);
    Eigen::MatrixXd rc = pauli_transfer_matrix(ch);
    CHECK(std::abs(rc(0, 0) - 1.0) < 1e-10);
    for (int j = 1; j < 4; ++j) CHECK(std::abs(rc(0, j)) < 1e-10);
    CHECK(rc.cwiseAbs().maxCoeff() < 1.0 + 1e-9);
}

TEST_CASE("amplitude damping PTM matches direct channel action") {
    double t1 = 100e-6, duration = 1e-6;  // t/T1 = 0.01
    KrausChannel amp = relaxation_channel(t1, 2.0 * t1, duration);  // pure T1
    Eigen::MatrixXd r = pauli_transfer_matrix(amp);
    // oracle: apply the channel to each Pauli directly
    auto labels = pauli_labels(1);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            Mat mapped = amp.apply(pauli_matrix(labels[j]));
            double want = 0.5 * (pauli_matrix(labels[i]) * mapped).trace().real();
            CHECK(std::abs(r(i, j) - want) < 1e-10);
        }
    double p = 1.0 - std::exp(-duration / t1);
    CHECK(r(1, 1) == doctest::Approx(std::sqrt(1 - p)).epsilon(1e-10));
    CHECK(r(3, 0) == doctest::Approx(p).epsilon(1e-10));
    CHECK(r(3, 3) == doctest::Approx(1 - p).epsilon(1e-10));
}

TEST_CASE("PTM composition equals PTM product") {
    std::mt19937_64 rng(23);
    for (int n : {1, 2}) {
        KrausChannel a = oracle::random_channel(n, rng);
        KrausChannel b = oracle::random_channel(n, rng);
        Eigen::MatrixXd lhs = pauli_transfer_matrix(b.compose_after(a));
        Eigen::MatrixXd rhs = pauli_transfer_matrix(b) * pauli_transfer_matrix(a);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("average gate error") {
    CHECK(average_gate_error(Eigen::MatrixXd::Identity(4, 4), 1) == doctest::Approx(0.0));
    // fully depolarizing 1Q: Tr R = 1 -> (2/3)(1 - 1/4) = 1/2
    Eigen::MatrixXd rd = Eigen::MatrixXd::Zero(4, 4);
    rd(0, 0) = 1.0;
    CHECK(average_gate_error(rd, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("average gate error is global-phase invariant") {
    std::mt19937_64 rng(5);
    Mat u = oracle::random_unitary(2, rng);
    Mat v = oracle::random_unitary(2, rng);
    double e1 = average_gate_error(u, v);
    double e2 = average_gate_error(u, Mat(std::exp(cxd(0, 1.234)) * v));
    CHECK(e1 == doctest::Approx(e2).epsilon(1e-12));
}

TEST_CASE("purity") {
    CHECK(purity(ket("0").density()) == doctest::Approx(1.0));
    CHECK(purity(0.5 * Mat::Identity(2, 2)) == doctest::Approx(0.5));
    Vec bell(4);
    bell << 1 / std::sqrt(2.0), 0, 0, 1 / std::sqrt(2.0);
    CHECK(purity(bell * bell.adjoint()) == doctest::Approx(1.0));
}

TEST_CASE("purity from Pauli expectations") {
    std::map<std::string, double> e{{"I", 1.0}, {"X", 0.0}, {"Y", 0.0}, {"Z", 0.0}};
    CHECK(purity_from_pauli_expectations(e, 1) == doctest::Approx(0.5));
    e["Z"] = 1.0;
    CHECK(purity_from_pauli_expectations(e, 1) == doctest::Approx(1.0));
    e.erase("Y");
    CHECK_THROWS_AS(purity_from_pauli_expectations(e, 1), std::invalid_argument);

    // random 2Q states: matches Tr[rho^2] to 1e-10
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        Mat rho = oracle::random_density(4, rng, trial % 2 == 0);
        std::map<std::string, double> exps;
        for (const auto& l : pauli_labels(2))
            exps[l] = (pauli_matrix(l) * rho).trace().real();
        CHECK(std::abs(purity_from_pauli_expectations(exps, 2) - purity(rho)) < 1e-10);
    }
}

TEST_CASE("relaxation channel") {
    CHECK_THROWS_AS(relaxation_channel(10e-6, 30e-6, 1e-6), std::invalid_argument);

    NoiseModel noise = NoiseModel::uniform(1, 50e-6, 70e-6);
    Mat rho = ket("1").density();
    CHECK((apply_gate_noise(rho, noise, 0.0, {0}) - rho).cwiseAbs().maxCoeff() == 0.0);

    // |1><1| for duration T1 decays to population 1/e
    Mat decayed = apply_gate_noise(rho, noise, 50e-6, {0});
    CHECK(decayed(1, 1).real() == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));

    // trace preserved
    KrausChannel ch = relaxation_channel(50e-6, 70e-6, 3e-6);
    CHECK(ch.trace_preserving(1e-10));
}

TEST_CASE("relaxation matches the Lindblad oracle") {
    double t1 = 40e-6, t2 = 40e-6, duration = 300e-9;
    Mat rho0 = ket_plus().density();
    NoiseModel noise = NoiseModel::uniform(1, t1, t2);
    Mat got = apply_gate_noise(rho0, noise, duration, {0});
    Mat want = oracle::lindblad_relaxation(rho0, t1, t2, duration);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-8);
    // off-diagonal shrinks by exp(-duration/T2)
    CHECK(got(0, 1).real() == doctest::Approx(0.5 * std::exp(-duration / t2)).epsilon(1e-10));
}

TEST_CASE("two-qubit gate noise acts per qubit") {
    NoiseModel noise;
    noise.qubits.resize(2);
    noise.qubits[0] = {50e-6, 60e-6, Eigen::Matrix2d::Identity()};
    noise.qubits[1] = {80e-6, 90e-6, Eigen::Matrix2d::Identity()};
    Mat rho = ket("11").density();
    Mat out = apply_gate_noise(rho, noise, 5e-6, {0, 1});
    double p0 = std::exp(-5e-6 / 50e-6), p1 = std::exp(-5e-6 / 80e-6);
    CHECK(out(3, 3).real() == doctest::Approx(p0 * p1).epsilon(1e-10));
    CHECK(std::abs(out.trace().real() - 1.0) < 1e-12);
}
