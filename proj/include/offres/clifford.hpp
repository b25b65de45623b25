#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "offres/qcore.hpp"

// Symplectic-tableau Clifford machinery for 1 and 2 qubits: uniform sampling,
// composition/inversion, CX-minimal decomposition into the native gate set
// {X+-90, Y+-90, Z+-90, Z180, CX} and tableau-to-unitary reconstruction.

namespace offres {

// i^phase * prod_q X_q^{x_q} Z_q^{z_q}; bit q of x/z refers to qubit q
struct PauliOp {
    int n = 1;
    unsigned x = 0, z = 0;
    int phase = 0;  // power of i, mod 4

    static PauliOp from_xz(int n, unsigned x, unsigned z, bool negative = false);
    Mat matrix() const;
    PauliOp times(const PauliOp& other) const;
    bool commutes_with(const PauliOp& other) const;
    bool negative_sign() const;  // true when the Hermitian representative is negated
    std::string label() const;   // e.g. "+XZ"
};

struct CliffordElement {
    int n = 1;
    // images of X_0..X_{n-1}, Z_0..Z_{n-1} under conjugation
    std::vector<PauliOp> images;

    static CliffordElement identity(int n);
    PauliOp apply(const PauliOp& p) const;
    CliffordElement compose_after(const CliffordElement& first) const;  // this o first
    CliffordElement inverse() const;
    bool operator==(const CliffordElement& other) const;
    bool is_identity() const;

    // unitary reconstructed from stabilizer images alone (independent of any
    // gate decomposition), fixed to a deterministic global phase
    Mat unitary() const;

    std::uint32_t symplectic_key() const;
};

CliffordElement sample_clifford(int n, std::mt19937_64& rng);

struct NativeGate {
    std::string name;  // x90, xm90, y90, ym90, z90, zm90, z180, cx
    int q0 = 0;        // cx: control
    int q1 = -1;       // cx: target
    bool is_virtual() const { return name == "z90" || name == "zm90" || name == "z180"; }
};

// CX-minimal decomposition (0..3 CX for two qubits, averaging 1.5 over the
// uniform distribution); virtual Z gates are free
std::vector<NativeGate> decompose_clifford(const CliffordElement& c);

int cx_count(const std::vector<NativeGate>& gates);

Mat native_gate_unitary(const NativeGate& g, int n);
Mat unitary_of_gates(const std::vector<NativeGate>& gates, int n);

// tableau of a native gate, for composing sequence inverses
CliffordElement native_gate_tableau(const NativeGate& g, int n);

}  // namespace offres
