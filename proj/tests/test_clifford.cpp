#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "offres/clifford.hpp"

using namespace offres;

namespace {

// equality up to global phase
bool same_up_to_phase(const Mat& a, const Mat& b, double tol = 1e-9) {
    cxd phase(0, 0);
    for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < a.cols(); ++c)
            if (std::abs(b(r, c)) > 1e-6) {
                phase = a(r, c) / b(r, c);
                goto found;
            }
found:
    if (std::abs(std::abs(phase) - 1.0) > tol) return false;
    return (a - phase * b).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

TEST_CASE("pauli op algebra") {
    PauliOp x = PauliOp::from_xz(1, 1, 0);
    PauliOp z = PauliOp::from_xz(1, 0, 1);
    PauliOp y = PauliOp::from_xz(1, 1, 1);
    CHECK((y.matrix() - pauli_matrix("Y")).cwiseAbs().maxCoeff() < 1e-15);
    // X Z = -i Y
    Mat xz = x.times(z).matrix();
    CHECK((xz - Mat(cxd(0, -1) * pauli_matrix("Y"))).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(!x.commutes_with(z));
    CHECK(x.commutes_with(x));
    PauliOp zx2 = PauliOp::from_xz(2, 0b10, 0b01);  // Z on qubit 0, X on qubit 1
    CHECK((zx2.matrix() - pauli_matrix("ZX")).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("native gate tableaus match their unitaries") {
    for (int n : {1, 2}) {
        std::vector<NativeGate> gates;
        for (int q = 0; q < n; ++q)
            for (const char* nm : {"x90", "xm90", "y90", "ym90", "z90", "zm90", "z180"})
                gates.push_back({nm, q, -1});
        if (n == 2) gates.push_back({"cx", 0, 1});
        for (const auto& g : gates) {
            Mat u = native_gate_unitary(g, n);
            CliffordElement t = native_gate_tableau(g, n);
            for (int k = 0; k < 2 * n; ++k) {
                PauliOp gen = (k < n) ? PauliOp::from_xz(n, 1u << k, 0)
                                      : PauliOp::from_xz(n, 0, 1u << (k - n));
                Mat conj = u * gen.matrix() * u.adjoint();
                CHECK((conj - t.images[static_cast<size_t>(k)].matrix()).cwiseAbs().maxCoeff() <
                      1e-12);
            }
        }
    }
}

TEST_CASE("sampled cliffords compose with their inverses to identity") {
    std::mt19937_64 rng(13);
    for (int n : {1, 2}) {
        for (int trial = 0; trial < 200; ++trial) {
            CliffordElement c = sample_clifford(n, rng);
            CHECK(c.inverse().compose_after(c).is_identity());
            CHECK(c.compose_after(c.inverse()).is_identity());
        }
    }
}

TEST_CASE("identity decomposes to nothing") {
    CHECK(decompose_clifford(CliffordElement::identity(1)).empty());
    CHECK(decompose_clifford(CliffordElement::identity(2)).empty());
}

TEST_CASE("decompositions reproduce the tableau unitary up to global phase") {
    std::mt19937_64 rng(101);
    for (int n : {1, 2}) {
        for (int trial = 0; trial < 500; ++trial) {
            CliffordElement c = sample_clifford(n, rng);
            auto gates = decompose_clifford(c);
            Mat via_gates = unitary_of_gates(gates, n);
            Mat via_tableau = c.unitary();
            CHECK(same_up_to_phase(via_gates, via_tableau));
        }
    }
}

TEST_CASE("the 1q group has 24 elements and the 2q group 11520") {
    std::mt19937_64 rng(55);
    for (auto [n, expected, draws] : {std::tuple{1, 24, 4000}, {2, 11520, 0}}) {
        if (n == 1) {
            std::set<std::string> seen;
            for (int i = 0; i < draws; ++i) {
                CliffordElement c = sample_clifford(n, rng);
                std::string key;
                for (const auto& img : c.images) key += img.label() + "|";
                seen.insert(key);
            }
            CHECK(static_cast<int>(seen.size()) == expected);
        } else {
            // count = symplectic order x sign choices = 720 x 16
            std::set<std::uint32_t> symp;
            std::mt19937_64 rng2(56);
            for (int i = 0; i < 40000; ++i)
                symp.insert(sample_clifford(2, rng2).symplectic_key());
            CHECK(static_cast<int>(symp.size()) == 720);
        }
    }
}

TEST_CASE("mean cx count over uniform 2q cliffords is 1.5") {
    std::mt19937_64 rng(77);
    double total = 0.0;
    const int samples = 10000;
    for (int i = 0; i < samples; ++i)
        total += cx_count(decompose_clifford(sample_clifford(2, rng)));
    double mean = total / samples;
    CHECK(std::abs(mean - 1.5) < 0.02);
}

TEST_CASE("1q sampling is uniform") {
    std::mt19937_64 rng(99);
    std::map<std::string, int> counts;
    const int draws = 24000;
    for (int i = 0; i < draws; ++i) {
        CliffordElement c = sample_clifford(1, rng);
        std::string key;
        for (const auto& img : c.images) key += img.label() + "|";
        counts[key]++;
    }
    REQUIRE(counts.size() == 24);
    for (const auto& [key, n] : counts) CHECK(std::abs(n - 1000) < 200);
}
