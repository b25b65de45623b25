#pragma once

#include <functional>
#include <map>
#include <optional>

#include "offres/analysis.hpp"
#include "offres/clifford.hpp"
#include "offres/dynamics.hpp"
#include "offres/parallel.hpp"

// Standard, interleaved and purity randomized benchmarking. Native gate
// implementations can be ideal unitaries with per-gate relaxation, or
// time-dependent pulse gates (to inject non-stationary off-resonant errors);
// each sequence sample is an independent job keyed by (length, sample).

namespace offres {

struct GateImplementation {
    double duration = 0.0;
    // unitary as a function of the absolute start time; stationary gates
    // ignore the argument
    std::function<Mat(double)> unitary;
    bool is_virtual = false;  // zero duration, no relaxation applied
};

struct GateSet {
    int n = 1;
    std::map<std::string, GateImplementation> gates;

    // ideal implementations of the native set; 1Q pulses share one duration
    static GateSet ideal(int n, double pulse_duration, double cx_duration = 0.0);
};

struct InterleavedGate {
    GateImplementation impl;
    CliffordElement tableau;  // ideal Clifford action, for sequence inversion
};

struct RBSpec {
    std::vector<int> lengths;
    int samples = 10;
    std::uint64_t seed = 2024;
    NoiseModel noise;
    bool apply_confusion = true;
    std::optional<std::uint64_t> shots;  // exact expectation values when unset
};

struct RBResult {
    std::vector<int> lengths;
    std::vector<double> means;                    // survival or purity per length
    std::vector<std::vector<double>> per_sample;  // [length][sample]
    DecayFit fit;
    double epc = 0.0, epc_stderr = 0.0;
    double epg = 0.0, epg_stderr = 0.0;           // per 2Q gate (epc/1.5) or per Clifford (1Q)
};

RBResult run_rb(const RBSpec& spec, const GateSet& gates,
                const InterleavedGate* interleaved = nullptr,
                ExecPolicy policy = ExecPolicy::OpenMP);

struct InterleavedRBResult {
    RBResult reference;
    RBResult interleaved;
    double gate_error = 0.0;
    double gate_error_stderr = 0.0;
};

InterleavedRBResult run_interleaved_rb(const RBSpec& spec, const GateSet& gates,
                                       const InterleavedGate& gate,
                                       ExecPolicy policy = ExecPolicy::OpenMP);

// purity via 3^n measurement settings -> 4^n Pauli expectations per sequence;
// incoherent error per gate from (d-1)/d (1 - gamma^(1/n2)), n2 = 1.5 for 2Q
RBResult run_purity_rb(const RBSpec& spec, const GateSet& gates,
                       const InterleavedGate* interleaved = nullptr,
                       ExecPolicy policy = ExecPolicy::OpenMP);

// deterministic per-job seed derivation (keyed hash, collision-resistant)
std::uint64_t derive_seed(std::uint64_t master, const std::string& scope, std::uint64_t k1,
                          std::uint64_t k2);

}  // namespace offres
