#include "offres/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

namespace offres {

namespace {

const cxd kI(0.0, 1.0);

struct DriveOps {
    Mat gx, gy;
};

struct CompiledModel {
    int nq = 1;
    Mat h0;
    std::map<std::string, DriveOps> drives;
    double carrier = 0.0;    // rad/s, qubit-0 lab frequency (non-RWA only)
    double frame_rate = 0.0; // rad/s carrier of the drive frame (non-RWA only)
};

CompiledModel compile(const HamiltonianModel& model) {
    CompiledModel cm;
    if (const auto* sq = std::get_if<SingleQubitDriveModel>(&model)) {
        cm.nq = 1;
        cm.h0 = 0.5 * sq->detuning * pauli1('Z');
        cm.drives[sq->channel] = {pauli1('X'), pauli1('Y')};
        cm.carrier = sq->carrier;
        cm.frame_rate = sq->carrier + sq->detuning;
    } else if (const auto* cr = std::get_if<CrossResonanceModel>(&model)) {
        cm.nq = 2;
        cm.h0 = -0.5 * cr->detuning * pauli_matrix("ZI") + cr->zeta * pauli_matrix("ZZ");
        cm.drives[cr->control_channel] = {
            pauli_matrix("XI") + cr->mu * pauli_matrix("ZX") + cr->nu * pauli_matrix("IX"),
            pauli_matrix("YI") + cr->mu * pauli_matrix("ZY") + cr->nu * pauli_matrix("IY")};
        cm.drives[cr->target_channel] = {pauli_matrix("IX"), pauli_matrix("IY")};
    } else {
        const auto& sp = std::get<SpectatorModel>(model);
        cm.nq = 2;
        cm.h0 = -0.5 * sp.detuning * pauli_matrix("IZ");
        cm.drives[sp.channel] = {
            pauli_matrix("XI") + sp.mu * pauli_matrix("ZX") + sp.nu * pauli_matrix("IX"),
            pauli_matrix("YI") + sp.mu * pauli_matrix("ZY") + sp.nu * pauli_matrix("IY")};
    }
    return cm;
}

struct ActivePulse {
    const Pulse* pulse;
    double start;
    double frame_phase;  // accumulated channel phase at this segment
};

// 2x2 step exp(-i H dt) for H = a I + v.sigma, closed form
Mat exp_step_2(const Mat& h, double dt) {
    double a = 0.5 * (h(0, 0).real() + h(1, 1).real());
    double vz = 0.5 * (h(0, 0).real() - h(1, 1).real());
    double vx = h(0, 1).real();
    double vy = -h(0, 1).imag();
    double n = std::sqrt(vx * vx + vy * vy + vz * vz);
    Mat u(2, 2);
    double c = std::cos(n * dt);
    double s = (n > 0.0) ? std::sin(n * dt) / n : dt;
    u(0, 0) = c - kI * s * vz;
    u(1, 1) = c + kI * s * vz;
    u(0, 1) = -kI * s * cxd(vx, -vy);
    u(1, 0) = -kI * s * cxd(vx, vy);
    return std::exp(-kI * a * dt) * u;
}

Mat exp_step(const Mat& h, double dt) {
    if (h.rows() == 2) return exp_step_2(h, dt);
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    Vec ph(h.rows());
    for (int i = 0; i < h.rows(); ++i) ph(i) = std::exp(-kI * es.eigenvalues()(i) * dt);
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

double spectral_norm_bound(const Mat& h) {
    // row-sum bound is cheap and adequate for step control
    double best = 0.0;
    for (int r = 0; r < h.rows(); ++r) {
        double s = 0.0;
        for (int c = 0; c < h.cols(); ++c) s += std::abs(h(r, c));
        best = std::max(best, s);
    }
    return best;
}

struct ChannelPhases {
    // FrameChange times and cumulative phases, sorted
    std::vector<double> times;
    std::vector<double> cumulative;
    double at(double t) const {
        auto it = std::upper_bound(times.begin(), times.end(), t);
        if (it == times.begin()) return 0.0;
        return cumulative[static_cast<size_t>(it - times.begin()) - 1];
    }
};

struct Integrator {
    const CompiledModel& cm;
    const Schedule& schedule;
    const PropagationOptions& opts;
    std::map<std::string, ChannelPhases> phases;
    std::vector<double> events;

    Integrator(const CompiledModel& c, const Schedule& s, const PropagationOptions& o)
        : cm(c), schedule(s), opts(o) {
        std::set<double> ev{0.0, schedule.duration()};
        for (const auto& ti : schedule.instructions()) {
            ev.insert(ti.start);
            ev.insert(ti.end());
            if (const auto* f = std::get_if<FrameChange>(&ti.inst)) {
                auto& cp = phases[f->channel];
                cp.times.push_back(ti.start);
                cp.cumulative.push_back(f->delta_phase);
            }
            const auto* p = std::get_if<Pulse>(&ti.inst);
            if (p && cm.drives.find(p->channel) == cm.drives.end())
                throw std::invalid_argument("propagate: channel '" + p->channel +
                                            "' not bound to the model");
        }
        for (auto& [ch, cp] : phases) {
            if (cm.drives.find(ch) == cm.drives.end())
                throw std::invalid_argument("propagate: channel '" + ch +
                                            "' not bound to the model");
            // times appended in schedule order; sort and accumulate
            std::vector<size_t> idx(cp.times.size());
            for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            std::stable_sort(idx.begin(), idx.end(),
                             [&](size_t a, size_t b) { return cp.times[a] < cp.times[b]; });
            std::vector<double> t2, c2;
            double run = 0.0;
            for (size_t i : idx) {
                run += cp.cumulative[i];
                t2.push_back(cp.times[i]);
                c2.push_back(run);
            }
            cp.times = t2;
            cp.cumulative = c2;
        }
        events.assign(ev.begin(), ev.end());
    }

    Mat hamiltonian(const std::vector<ActivePulse>& active, double t) const {
        Mat h = cm.h0;
        for (const auto& ap : active) {
            const Pulse& p = *ap.pulse;
            const DriveOps& ops = cm.drives.at(p.channel);
            cxd amp = p.peak_amp * p.envelope.value(t - ap.start);
            double theta0 = p.phase + ap.frame_phase;
            if (opts.rwa) {
                double theta = theta0 - p.detuning * (t + opts.t0);
                cxd rotated = amp * std::exp(-kI * theta);
                h += 0.5 * rotated.real() * ops.gx - 0.5 * rotated.imag() * ops.gy;
            } else {
                if (cm.carrier == 0.0)
                    throw std::invalid_argument("non-RWA run requires a carrier frequency");
                double wd = cm.frame_rate + p.detuning;
                double ta = t + opts.t0;
                double d = amp.real() * std::cos(wd * ta - theta0) -
                           amp.imag() * std::sin(wd * ta - theta0);
                h += d * (std::cos(cm.frame_rate * ta) * ops.gx +
                          std::sin(cm.frame_rate * ta) * ops.gy);
            }
        }
        return h;
    }

    template <typename StepFn>
    void run(StepFn&& step) const {
        run(step, [](double) {});
    }

    template <typename StepFn, typename BoundaryFn>
    void run(StepFn&& step, BoundaryFn&& boundary) const {
        std::int64_t steps_used = 0;
        boundary(0.0);
        for (size_t e = 0; e + 1 < events.size(); ++e) {
            double a = events[e], b = events[e + 1];
            if (b - a < 1e-18) {
                boundary(b);
                continue;
            }
            std::vector<ActivePulse> active;
            for (const auto& ti : schedule.instructions()) {
                const auto* p = std::get_if<Pulse>(&ti.inst);
                if (!p) continue;
                if (ti.start <= a + 1e-15 && ti.end() >= b - 1e-15)
                    active.push_back({p, ti.start, phases.count(p->channel)
                                                       ? phases.at(p->channel).at(a + 1e-15)
                                                       : 0.0});
            }
            bool constant = opts.rwa;
            for (const auto& ap : active)
                constant = constant && ap.pulse->detuning == 0.0 &&
                           ap.pulse->envelope.constant_on(a - ap.start, b - ap.start);
            if (constant) {
                Mat h = hamiltonian(active, 0.5 * (a + b));
                if (opts.mode == PropagationMode::Unitary) {
                    step(h, b - a, 1);
                } else {
                    // keep splitting error small when relaxation is interleaved
                    double dt = opts.noise.trivial_relaxation() ? (b - a) : opts.dt_max;
                    int n = std::max(1, static_cast<int>(std::ceil((b - a) / dt)));
                    step(h, (b - a) / n, n);
                    steps_used += n;
                }
                boundary(b);
                continue;
            }
            double mid = 0.5 * (a + b);
            Mat hm = hamiltonian(active, mid);
            double wmax = std::max(spectral_norm_bound(hm),
                                   std::max(spectral_norm_bound(hamiltonian(active, a + 1e-15)),
                                            spectral_norm_bound(hamiltonian(active, b - 1e-15))));
            double dt = opts.dt_max;
            if (opts.auto_dt && wmax > 0.0) dt = std::min(dt, 0.045 / wmax);
            // accuracy: midpoint local error ~ dt^3 (|Hdot| |H| / 12 + |Hddot| / 24);
            // sample the slew rate across the segment
            double h_eps = std::max((b - a) * 1e-6, 1e-15);
            double hdot = 0.0;
            for (double frac : {0.1, 0.25, 0.5, 0.75, 0.9}) {
                double tt = a + frac * (b - a);
                Mat hp = hamiltonian(active, std::min(tt + h_eps, b));
                Mat hmn = hamiltonian(active, std::max(tt - h_eps, a));
                hdot = std::max(hdot, spectral_norm_bound(hp - hmn) / (2.0 * h_eps));
            }
            auto err_per_step = [&](double step_dt) {
                return step_dt * step_dt * step_dt * (hdot * wmax / 12.0 + 1e-30);
            };
            if (opts.auto_dt) {
                while (err_per_step(dt) > 1e-6) dt *= 0.5;
            } else if (err_per_step(dt) > 1e-6) {
                throw std::runtime_error("propagate: dt_max too coarse (local error > 1e-6)");
            }
            int n = std::max(1, static_cast<int>(std::ceil((b - a) / dt)));
            steps_used += n;
            if (steps_used > opts.max_steps)
                throw std::runtime_error("propagate: step budget exceeded");
            double h_step = (b - a) / n;
            for (int i = 0; i < n; ++i) {
                Mat h = hamiltonian(active, a + (i + 0.5) * h_step);
                step(h, h_step, 1);
            }
            boundary(b);
        }
    }
};

std::vector<double> frame_rates(const HamiltonianModel& model, const Frame& frame) {
    if (std::holds_alternative<DriveFrame>(frame))
        return std::vector<double>(model_qubits(model), 0.0);
    if (std::holds_alternative<ResonantFrame>(frame)) return resonant_frame_rates(model);
    const auto& c = std::get<CustomFrame>(frame);
    if (static_cast<int>(c.rates.size()) != model_qubits(model))
        throw std::invalid_argument("custom frame: one rate per qubit required");
    return c.rates;
}

}  // namespace

int model_qubits(const HamiltonianModel& model) {
    return std::holds_alternative<SingleQubitDriveModel>(model) ? 1 : 2;
}

std::vector<std::string> model_channels(const HamiltonianModel& model) {
    if (const auto* sq = std::get_if<SingleQubitDriveModel>(&model)) return {sq->channel};
    if (const auto* cr = std::get_if<CrossResonanceModel>(&model))
        return {cr->control_channel, cr->target_channel};
    return {std::get<SpectatorModel>(model).channel};
}

std::vector<double> resonant_frame_rates(const HamiltonianModel& model) {
    // rates make the zero-drive propagator the identity in the target frame
    if (const auto* sq = std::get_if<SingleQubitDriveModel>(&model)) return {-sq->detuning};
    if (const auto* cr = std::get_if<CrossResonanceModel>(&model)) return {cr->detuning, 0.0};
    return {0.0, std::get<SpectatorModel>(model).detuning};
}

Mat frame_rotation(const std::vector<double>& rates, double t) {
    int dim = 1 << rates.size();
    Vec d(dim);
    for (int idx = 0; idx < dim; ++idx) {
        double phase = 0.0;
        for (size_t q = 0; q < rates.size(); ++q) {
            int bit = (idx >> (rates.size() - 1 - q)) & 1;
            phase += -0.5 * rates[q] * t * (bit == 0 ? 1.0 : -1.0);
        }
        d(idx) = std::exp(kI * phase);
    }
    Mat m = Mat::Zero(dim, dim);
    m.diagonal() = d;
    return m;
}

Mat change_frame(const Mat& u, const std::vector<double>& from_rates,
                 const std::vector<double>& to_rates, double t_start, double t_end) {
    if (from_rates.size() != to_rates.size())
        throw std::invalid_argument("change_frame: rate vectors differ in length");
    std::vector<double> rel(from_rates.size());
    for (size_t i = 0; i < rel.size(); ++i) rel[i] = to_rates[i] - from_rates[i];
    return frame_rotation(rel, t_end) * u * frame_rotation(rel, t_start).adjoint();
}

Mat propagate(const HamiltonianModel& model, const Schedule& schedule,
              const PropagationOptions& options) {
    CompiledModel cm = compile(model);
    int dim = 1 << cm.nq;
    Mat u = Mat::Identity(dim, dim);
    Integrator integ(cm, schedule, options);
    integ.run([&](const Mat& h, double dt, int n) {
        Mat s = exp_step(h, dt);
        for (int i = 0; i < n; ++i) u = s * u;
    });
    auto rates = frame_rates(model, options.frame);
    return frame_rotation(rates, options.t0 + schedule.duration()) * u *
           frame_rotation(rates, options.t0).adjoint();
}

Mat propagate(const HamiltonianModel& model, const Schedule& schedule, const Mat& rho0,
              const PropagationOptions& options) {
    CompiledModel cm = compile(model);
    PropagationOptions opts = options;
    opts.mode = PropagationMode::DensityMatrix;
    Mat rho = rho0;
    std::vector<int> all_qubits(cm.nq);
    for (int q = 0; q < cm.nq; ++q) all_qubits[q] = q;
    Integrator integ(cm, schedule, opts);
    const bool noisy = !opts.noise.trivial_relaxation();
    integ.run([&](const Mat& h, double dt, int n) {
        Mat s = exp_step(h, dt);
        for (int i = 0; i < n; ++i) {
            rho = s * rho * s.adjoint();
            if (noisy) rho = apply_gate_noise(rho, opts.noise, dt, all_qubits);
        }
    });
    auto rates = frame_rates(model, options.frame);
    Mat r = frame_rotation(rates, options.t0 + schedule.duration());
    return r * rho * r.adjoint();
}

namespace {

// matches requested snapshot times to event boundaries
struct SnapshotMatcher {
    std::vector<double> times;
    std::vector<size_t> order;   // indices of `times` sorted ascending
    size_t next = 0;
    double tol;

    SnapshotMatcher(std::vector<double> ts, double duration) : times(std::move(ts)) {
        order.resize(times.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](size_t a, size_t b) { return times[a] < times[b]; });
        tol = std::max(1e-15, 1e-9 * duration);
    }

    template <typename Fn>
    void on_boundary(double t, Fn&& record) {
        while (next < order.size() && times[order[next]] <= t + tol) {
            if (std::abs(times[order[next]] - t) > tol)
                throw std::invalid_argument("snapshot time not on an instruction boundary");
            record(order[next]);
            ++next;
        }
    }
};

}  // namespace

std::vector<Mat> propagate_snapshots(const HamiltonianModel& model, const Schedule& schedule,
                                     const PropagationOptions& options,
                                     const std::vector<double>& times) {
    CompiledModel cm = compile(model);
    int dim = 1 << cm.nq;
    Mat u = Mat::Identity(dim, dim);
    std::vector<Mat> out(times.size());
    SnapshotMatcher match(times, schedule.duration());
    auto rates = frame_rates(model, options.frame);
    Mat r0 = frame_rotation(rates, options.t0).adjoint();
    Integrator integ(cm, schedule, options);
    integ.run(
        [&](const Mat& h, double dt, int n) {
            Mat s = exp_step(h, dt);
            for (int i = 0; i < n; ++i) u = s * u;
        },
        [&](double t) {
            match.on_boundary(t, [&](size_t idx) {
                out[idx] = frame_rotation(rates, options.t0 + t) * u * r0;
            });
        });
    if (match.next != match.order.size())
        throw std::invalid_argument("snapshot time beyond the schedule span");
    return out;
}

std::vector<Mat> propagate_snapshots(const HamiltonianModel& model, const Schedule& schedule,
                                     const Mat& rho0, const PropagationOptions& options,
                                     const std::vector<double>& times) {
    CompiledModel cm = compile(model);
    PropagationOptions opts = options;
    opts.mode = PropagationMode::DensityMatrix;
    Mat rho = rho0;
    std::vector<int> all_qubits(cm.nq);
    for (int q = 0; q < cm.nq; ++q) all_qubits[q] = q;
    std::vector<Mat> out(times.size());
    SnapshotMatcher match(times, schedule.duration());
    auto rates = frame_rates(model, opts.frame);
    const bool noisy = !opts.noise.trivial_relaxation();
    Integrator integ(cm, schedule, opts);
    integ.run(
        [&](const Mat& h, double dt, int n) {
            Mat s = exp_step(h, dt);
            for (int i = 0; i < n; ++i) {
                rho = s * rho * s.adjoint();
                if (noisy) rho = apply_gate_noise(rho, opts.noise, dt, all_qubits);
            }
        },
        [&](double t) {
            match.on_boundary(t, [&](size_t idx) {
                Mat r = frame_rotation(rates, opts.t0 + t);
                out[idx] = r * rho * r.adjoint();
            });
        });
    if (match.next != match.order.size())
        throw std::invalid_argument("snapshot time beyond the schedule span");
    return out;
}

double rwa_validation(const HamiltonianModel& model, const Schedule& schedule,
                      PropagationOptions options) {
    options.mode = PropagationMode::Unitary;
    options.frame = DriveFrame{};
    options.rwa = true;
    Mat u_rwa = propagate(model, schedule, options);
    options.rwa = false;
    Mat u_full = propagate(model, schedule, options);
    return (u_rwa - u_full).operatorNorm();
}

namespace {

std::vector<double> marginal_probs(const Mat& rho, const std::vector<int>& qubits, int nq) {
    int dim = 1 << nq;
    int out_dim = 1 << qubits.size();
    std::vector<double> p(out_dim, 0.0);
    for (int idx = 0; idx < dim; ++idx) {
        int key = 0;
        for (size_t j = 0; j < qubits.size(); ++j) {
            int bit = (idx >> (nq - 1 - qubits[j])) & 1;
            key = (key << 1) | bit;
        }
        p[key] += rho(idx, idx).real();
    }
    return p;
}

void apply_confusion(std::vector<double>& p, const std::vector<int>& qubits,
                     const NoiseModel& noise) {
    int nb = static_cast<int>(qubits.size());
    for (int j = 0; j < nb; ++j) {
        const Eigen::Matrix2d& c = noise.qubits.at(qubits[j]).confusion;
        std::vector<double> q(p.size(), 0.0);
        for (size_t idx = 0; idx < p.size(); ++idx) {
            int bit = (idx >> (nb - 1 - j)) & 1;
            for (int out = 0; out < 2; ++out) {
                size_t jdx = idx;
                if (out != bit) jdx ^= (size_t{1} << (nb - 1 - j));
                q[jdx] += c(out, bit) * p[idx];
            }
        }
        p = q;
    }
}

}  // namespace

std::vector<double> measure_populations(const Mat& rho, const std::vector<int>& qubits,
                                        const NoiseModel* noise, const MeasureOptions& opts) {
    int nq = (rho.rows() == 2) ? 1 : 2;
    auto p = marginal_probs(rho, qubits, nq);
    if (noise) {
        for (int q : qubits) {
            const auto& c = noise->qubits.at(q).confusion;
            if (std::abs(c.col(0).sum() - 1.0) > 1e-9 || std::abs(c.col(1).sum() - 1.0) > 1e-9 ||
                c.minCoeff() < -1e-12)
                throw std::invalid_argument("measure_populations: invalid confusion matrix");
        }
        apply_confusion(p, qubits, *noise);
    }
    if (opts.shots) {
        std::mt19937_64 rng(opts.seed);
        std::discrete_distribution<int> dist(p.begin(), p.end());
        std::vector<double> counts(p.size(), 0.0);
        for (std::uint64_t s = 0; s < *opts.shots; ++s) counts[dist(rng)] += 1.0;
        for (auto& c : counts) c /= static_cast<double>(*opts.shots);
        return counts;
    }
    return p;
}

std::vector<double> measure_populations(const PureState& psi, const std::vector<int>& qubits,
                                        const NoiseModel* noise, const MeasureOptions& opts) {
    return measure_populations(psi.density(), qubits, noise, opts);
}

double excited_population(const Mat& rho, int qubit, const NoiseModel* noise) {
    auto p = measure_populations(rho, {qubit}, noise);
    return p[1];
}

}  // namespace offres
