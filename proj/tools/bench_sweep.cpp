// Benchmark: OpenMP sweep executor against the serial reference. Runs the
// same phase-amplification grid through both paths, reports wall times and
// verifies the outputs are bit-identical.

#include <chrono>
#include <cstdio>
#include <numbers>

#include "offres/framespec.hpp"

using namespace offres;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    int phi_points = (argc > 1) ? std::atoi(argv[1]) : 121;
    int n_max = (argc > 2) ? std::atoi(argv[2]) : 100;
    configure_threads(0);

    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    SingleQubitDriveModel model{kTwoPi * -50e6, "d0"};
    Envelope env = Envelope::flat_top_gaussian(14.22e-9, 96e-9);
    double amp = calibrate_stark_amplitude(model, env, kTwoPi * 10e6, kTwoPi * 35e6);
    Schedule gate;
    gate.append(Pulse{"d0", env, amp, 0.0, 0.0});
    SweepSpec spec = make_sweep_spec(-std::numbers::pi, std::numbers::pi, phi_points, 10,
                                     n_max, 10);

    std::printf("flat-top Stark CPA sweep: %d phi points x N <= %d (%d threads available)\n",
                phi_points, n_max, effective_threads());

    ExperimentOptions serial;
    serial.policy = ExecPolicy::Serial;
    auto t0 = clock_type::now();
    SweepResult ref = run_cpa(model, gate, spec, serial);
    double t_serial = seconds_since(t0);

    ExperimentOptions parallel;
    parallel.policy = ExecPolicy::OpenMP;
    t0 = clock_type::now();
    SweepResult par = run_cpa(model, gate, spec, parallel);
    double t_parallel = seconds_since(t0);

    double max_diff = 0.0;
    for (size_t s = 0; s < ref.populations.size(); ++s)
        for (size_t i = 0; i < ref.populations[s].size(); ++i)
            max_diff = std::max(max_diff,
                                std::abs(ref.populations[s][i] - par.populations[s][i]));

    std::printf("serial reference : %8.3f s\n", t_serial);
    std::printf("openmp           : %8.3f s   (speedup %.2fx)\n", t_parallel,
                t_serial / t_parallel);
    std::printf("max |serial - openmp| = %.3e\n", max_diff);
    if (max_diff != 0.0) {
        std::printf("FAIL: executors disagree\n");
        return 1;
    }
    std::printf("executors agree bit-for-bit\n");
    return 0;
}
