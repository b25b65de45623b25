#include "offres/rb.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace offres {

namespace {
constexpr double kPi = std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct SequenceState {
    Mat rho;
    double t = 0.0;

    void apply_gate(const GateImplementation& g, const NoiseModel& noise,
                    const std::vector<int>& qubits) {
        Mat u = g.unitary(t);
        rho = u * rho * u.adjoint();
        if (!g.is_virtual && g.duration > 0.0) {
            rho = apply_gate_noise(rho, noise, g.duration, qubits);
            t += g.duration;
        }
    }
};

const GateImplementation& lookup(const GateSet& gates, const std::string& name) {
    auto it = gates.gates.find(name);
    if (it == gates.gates.end())
        throw std::invalid_argument("gate set is missing '" + name + "'");
    return it->second;
}

// shared sequence runner: applies m sampled Cliffords (optionally interleaved
// with a fixed gate), returning the final state and, if requested, the
// inverting Clifford's tableau product
SequenceState run_sequence(const RBSpec& spec, const GateSet& gates,
                           const InterleavedGate* interleaved, int length, std::uint64_t seed,
                           bool invert) {
    std::mt19937_64 rng(seed);
    int n = gates.n;
    std::vector<int> qubits(n);
    for (int q = 0; q < n; ++q) qubits[q] = q;

    SequenceState st{ket(std::string(static_cast<size_t>(n), '0')).density(), 0.0};
    CliffordElement total = CliffordElement::identity(n);
    for (int k = 0; k < length; ++k) {
        CliffordElement c = sample_clifford(n, rng);
        for (const auto& g : decompose_clifford(c))
            st.apply_gate(lookup(gates, g.name + (n == 2 ? "@" + std::to_string(g.q0) : "")),
                          spec.noise, qubits);
        total = c.compose_after(total);
        if (interleaved) {
            st.apply_gate(interleaved->impl, spec.noise, qubits);
            total = interleaved->tableau.compose_after(total);
        }
    }
    if (invert) {
        CliffordElement inv = total.inverse();
        for (const auto& g : decompose_clifford(inv))
            st.apply_gate(lookup(gates, g.name + (n == 2 ? "@" + std::to_string(g.q0) : "")),
                          spec.noise, qubits);
    }
    return st;
}

double survival_probability(const RBSpec& spec, const Mat& rho, int n, std::uint64_t seed) {
    std::vector<int> qubits(n);
    for (int q = 0; q < n; ++q) qubits[q] = q;
    MeasureOptions mo;
    mo.shots = spec.shots;
    mo.seed = seed;
    auto p = measure_populations(rho, qubits, spec.apply_confusion ? &spec.noise : nullptr, mo);
    return p[0];
}

void fill_error_rates(RBResult& r, int n) {
    double d = static_cast<double>(1 << n);
    r.epc = (d - 1.0) / d * (1.0 - r.fit.alpha);
    r.epc_stderr = (d - 1.0) / d * r.fit.alpha_stderr();
    double per_gate = (n == 2) ? 1.5 : 1.0;
    r.epg = r.epc / per_gate;
    r.epg_stderr = r.epc_stderr / per_gate;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, const std::string& scope, std::uint64_t k1,
                          std::uint64_t k2) {
    std::uint64_t h = splitmix64(master ^ fnv1a(scope));
    h = splitmix64(h ^ (0x9e3779b97f4a7c15ULL + k1));
    h = splitmix64(h ^ (0xc2b2ae3d27d4eb4fULL + k2));
    return h;
}

GateSet GateSet::ideal(int n, double pulse_duration, double cx_duration) {
    GateSet gs;
    gs.n = n;
    auto add = [&](const std::string& name, int q) {
        NativeGate g{name, q, -1};
        Mat u = native_gate_unitary(g, n);
        bool virt = g.is_virtual();
        std::string key = name + (n == 2 ? "@" + std::to_string(q) : "");
        gs.gates[key] = {virt ? 0.0 : pulse_duration, [u](double) { return u; }, virt};
    };
    for (int q = 0; q < n; ++q)
        for (const char* nm : {"x90", "xm90", "y90", "ym90", "z90", "zm90", "z180"}) add(nm, q);
    if (n == 2) {
        Mat cx = native_gate_unitary({"cx", 0, 1}, 2);
        gs.gates["cx@0"] = {cx_duration, [cx](double) { return cx; }, false};
    }
    return gs;
}

RBResult run_rb(const RBSpec& spec, const GateSet& gates, const InterleavedGate* interleaved,
                ExecPolicy policy) {
    if (spec.lengths.empty() || spec.samples < 1)
        throw std::invalid_argument("rb: empty lengths or samples < 1");
    RBResult result;
    result.lengths = spec.lengths;
    result.per_sample.assign(spec.lengths.size(),
                             std::vector<double>(static_cast<size_t>(spec.samples), 0.0));
    int jobs = static_cast<int>(spec.lengths.size()) * spec.samples;
    parallel_for(policy, jobs, [&](int j) {
        int li = j / spec.samples;
        int si = j % spec.samples;
        std::uint64_t seed =
            derive_seed(spec.seed, interleaved ? "rb-interleaved" : "rb-standard",
                        static_cast<std::uint64_t>(spec.lengths[li]),
                        static_cast<std::uint64_t>(si));
        SequenceState st =
            run_sequence(spec, gates, interleaved, spec.lengths[li], seed, true);
        result.per_sample[static_cast<size_t>(li)][static_cast<size_t>(si)] =
            survival_probability(spec, st.rho, gates.n, splitmix64(seed));
    });
    std::vector<double> xs, ys;
    for (size_t li = 0; li < spec.lengths.size(); ++li) {
        double m = 0.0;
        for (double v : result.per_sample[li]) m += v;
        m /= spec.samples;
        result.means.push_back(m);
        xs.push_back(static_cast<double>(spec.lengths[li]));
        ys.push_back(m);
    }
    result.fit = fit_decay(xs, ys, 1);
    fill_error_rates(result, gates.n);
    return result;
}

InterleavedRBResult run_interleaved_rb(const RBSpec& spec, const GateSet& gates,
                                       const InterleavedGate& gate, ExecPolicy policy) {
    InterleavedRBResult out;
    out.reference = run_rb(spec, gates, nullptr, policy);
    out.interleaved = run_rb(spec, gates, &gate, policy);
    double d = static_cast<double>(1 << gates.n);
    double ratio = out.interleaved.fit.alpha / out.reference.fit.alpha;
    out.gate_error = (d - 1.0) / d * (1.0 - ratio);
    double sa = out.interleaved.fit.alpha_stderr();
    double sr = out.reference.fit.alpha_stderr();
    double ar = out.reference.fit.alpha;
    double var = (sa / ar) * (sa / ar) +
                 (out.interleaved.fit.alpha * sr / (ar * ar)) *
                     (out.interleaved.fit.alpha * sr / (ar * ar));
    out.gate_error_stderr = (d - 1.0) / d * std::sqrt(var);
    return out;
}

namespace {

// measurement settings: rotate each qubit's X/Y/Z axis onto Z before readout
Mat setting_rotation(const std::string& bases, int n) {
    Mat u = Mat::Identity(1 << n, 1 << n);
    for (int q = 0; q < n; ++q) {
        NativeGate g{bases[static_cast<size_t>(q)] == 'X'
                         ? "ym90"
                         : (bases[static_cast<size_t>(q)] == 'Y' ? "x90" : "z90"),
                     q, -1};
        if (bases[static_cast<size_t>(q)] == 'Z') continue;
        u = native_gate_unitary(g, n) * u;
    }
    return u;
}

}  // namespace

RBResult run_purity_rb(const RBSpec& spec, const GateSet& gates, const InterleavedGate* interleaved,
                       ExecPolicy policy) {
    if (spec.lengths.empty() || spec.samples < 1)
        throw std::invalid_argument("purity rb: empty lengths or samples < 1");
    int n = gates.n;
    double d = static_cast<double>(1 << n);

    // all 3^n measurement settings
    std::vector<std::string> settings{""};
    for (int q = 0; q < n; ++q) {
        std::vector<std::string> next;
        for (const auto& s : settings)
            for (char b : {'X', 'Y', 'Z'}) next.push_back(s + b);
        settings = next;
    }
    std::vector<Mat> rotations;
    for (const auto& s : settings) rotations.push_back(setting_rotation(s, n));
    auto labels = pauli_labels(n);

    RBResult result;
    result.lengths = spec.lengths;
    result.per_sample.assign(spec.lengths.size(),
                             std::vector<double>(static_cast<size_t>(spec.samples), 0.0));
    int jobs = static_cast<int>(spec.lengths.size()) * spec.samples;
    parallel_for(policy, jobs, [&](int j) {
        int li = j / spec.samples;
        int si = j % spec.samples;
        std::uint64_t seed = derive_seed(spec.seed, "rb-purity",
                                         static_cast<std::uint64_t>(spec.lengths[li]),
                                         static_cast<std::uint64_t>(si));
        SequenceState st =
            run_sequence(spec, gates, interleaved, spec.lengths[li], seed, false);

        std::map<std::string, double> expectations;
        std::map<std::string, int> counts;
        std::vector<int> qubits(n);
        for (int q = 0; q < n; ++q) qubits[q] = q;
        for (size_t s = 0; s < settings.size(); ++s) {
            Mat rotated = rotations[s] * st.rho * rotations[s].adjoint();
            MeasureOptions mo;
            mo.shots = spec.shots;
            mo.seed = splitmix64(seed + s);
            auto probs = measure_populations(rotated, qubits,
                                             spec.apply_confusion ? &spec.noise : nullptr, mo);
            // every Pauli whose support matches this setting's bases
            for (const auto& label : labels) {
                bool compatible = true;
                for (int q = 0; q < n; ++q)
                    if (label[static_cast<size_t>(q)] != 'I' &&
                        label[static_cast<size_t>(q)] != settings[s][static_cast<size_t>(q)])
                        compatible = false;
                if (!compatible) continue;
                double val = 0.0;
                for (size_t idx = 0; idx < probs.size(); ++idx) {
                    int parity = 0;
                    for (int q = 0; q < n; ++q)
                        if (label[static_cast<size_t>(q)] != 'I')
                            parity ^= static_cast<int>(idx >> (n - 1 - q)) & 1;
                    val += (parity ? -1.0 : 1.0) * probs[idx];
                }
                expectations[label] += val;
                counts[label] += 1;
            }
        }
        for (auto& [label, v] : expectations) v /= counts[label];
        result.per_sample[static_cast<size_t>(li)][static_cast<size_t>(si)] =
            purity_from_pauli_expectations(expectations, n);
    });

    std::vector<double> xs, ys;
    for (size_t li = 0; li < spec.lengths.size(); ++li) {
        double m = 0.0;
        for (double v : result.per_sample[li]) m += v;
        m /= spec.samples;
        result.means.push_back(m);
        xs.push_back(static_cast<double>(spec.lengths[li]));
        ys.push_back(m);
    }
    result.fit = fit_decay(xs, ys, 2);
    double n2 = (n == 2) ? 1.5 : 1.0;
    result.epc = (d - 1.0) / d * (1.0 - result.fit.alpha);
    result.epc_stderr = (d - 1.0) / d * result.fit.alpha_stderr();
    result.epg = (d - 1.0) / d * (1.0 - std::pow(result.fit.alpha, 1.0 / n2));
    double dgamma = result.fit.alpha_stderr();
    double deriv = (result.fit.alpha > 0)
                       ? std::pow(result.fit.alpha, 1.0 / n2 - 1.0) / n2
                       : 0.0;
    result.epg_stderr = (d - 1.0) / d * deriv * dgamma;
    return result;
}

}  // namespace offres
