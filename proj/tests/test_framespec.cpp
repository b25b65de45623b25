#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "offres/framespec.hpp"
#include "support/oracles.hpp"

using namespace offres;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

Schedule square_gate(const std::string& channel, double amp, double duration) {
    Schedule s;
    s.append(Pulse{channel, Envelope::square(duration), amp, 0.0, 0.0});
    return s;
}

// distance between wrapped angles
double angdist(double a, double b) { return std::abs(wrap_angle(a - b)); }

}  // namespace

TEST_CASE("cpa of an ideal virtual-z gate stays dark") {
    SingleQubitDriveModel model{kTwoPi * -50e6, "d0"};
    Schedule gate;
    gate.append(FrameChange{"d0", kPi / 2});
    gate.append(Delay{10e-9});
    SweepSpec spec = make_sweep_spec(-3.0, 3.0, 21, 5, 25, 5);
    SweepResult r = run_cpa(model, gate, spec);
    for (double v : r.populations[0]) CHECK(v < 1e-10);
}

TEST_CASE("cpa reordering identity") {
    // schedule execution equals e^{-iN phi K} (e^{+i phi K} U)^N
    SingleQubitDriveModel model{kTwoPi * -50e6, "d0"};
    Schedule gate = square_gate("d0", kTwoPi * 16.25e6, 96e-9);
    const HamiltonianModel hmodel = model;
    Mat u = propagate(hmodel, gate, {});
    Mat k = cpa_phase_generator(hmodel);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> phid(-kPi, kPi);
    for (int trial = 0; trial < 6; ++trial) {
        double phi = phid(rng);
        int n = 1 + static_cast<int>(rng() % 50);
        Schedule cpa = build_cpa_schedule(gate, phi, n);
        Mat direct = propagate(hmodel, cpa, {});
        Mat v = matrix_exp_hermitian(k, -phi) * u;  // e^{+i phi K} U
        Mat closed = Mat::Identity(2, 2);
        for (int i = 0; i < n; ++i) closed = v * closed;
        closed = matrix_exp_hermitian(k, n * phi) * closed;
        CHECK((direct - closed).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("cpa reordering identity for the spectator model") {
    SpectatorModel sp;
    sp.detuning = kTwoPi * 60e6;
    sp.mu = 0.03;
    sp.nu = 0.015;
    double tg = 14.2e-9;
    Schedule gate = square_gate(sp.channel, (kPi / 2) / tg, tg);
    const HamiltonianModel hmodel = sp;
    Mat u = propagate(hmodel, gate, {});
    Mat k = cpa_phase_generator(hmodel);
    double phi = 0.77;
    int n = 21;
    Schedule cpa = build_cpa_schedule(gate, phi, n);
    Mat direct = propagate(hmodel, cpa, {});
    Mat v = matrix_exp_hermitian(k, -phi) * u;
    Mat closed = Mat::Identity(4, 4);
    for (int i = 0; i < n; ++i) closed = v * closed;
    closed = matrix_exp_hermitian(k, n * phi) * closed;
    CHECK((direct - closed).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("stark peak positions match the oracle across parameter sets") {
    struct Case {
        double delta_mhz, omega_factor, tg_ns;
    };
    // omega = omega_factor * the Z90-calibrated square amplitude
    std::vector<Case> cases = {
        {-50, 1.0, 96},  {-50, 1.0, 120}, {-50, 1.0, 150}, {-35, 1.0, 96}, {40, 1.0, 110},
        {-60, 1.0, 80},  {55, 1.0, 96},   {-45, 1.0, 200}, {30, 1.0, 140}, {-70, 1.0, 96},
    };
    int n_fixed = 50;
    for (const auto& c : cases) {
        double delta = kTwoPi * c.delta_mhz * 1e6;
        double tg = c.tg_ns * 1e-9;
        double omega = c.omega_factor * std::sqrt(kPi * std::abs(delta) / tg);
        SingleQubitDriveModel model{delta, "d0"};
        Schedule gate = square_gate("d0", omega, tg);
        SweepSpec spec = make_sweep_spec(-kPi, kPi, 629, 5, n_fixed, 5);
        SweepResult r = run_cpa(model, gate, spec);
        auto peaks = extract_peaks(r, 0, Aggregation::MeanOverN);
        REQUIRE(!peaks.peaks.empty());
        double oracle = stark_peak_oracle(omega, delta, tg);
        double width = peaks.peaks.front().half_width;
        CHECK(angdist(peaks.peaks.front().position, oracle) < std::max(width, 0.02));
    }
}

TEST_CASE("stark peak vanishes when the rabi angle is a multiple of 2pi") {
    // mod(Wr tg, 2pi) = 0 suppresses the excitation peak
    double delta = kTwoPi * -50e6;
    double tg = 96e-9;
    double omega = std::sqrt(kPi * std::abs(delta) / tg);
    double wr = std::hypot(omega, delta);
    double cycles = std::round(wr * tg / kTwoPi);
    // rescale omega so Wr tg = cycles * 2pi exactly
    double wr_target = cycles * kTwoPi / tg;
    REQUIRE(wr_target > std::abs(delta));
    double omega_null = std::sqrt(wr_target * wr_target - delta * delta);
    SingleQubitDriveModel model{delta, "d0"};
    Schedule gate = square_gate("d0", omega_null, tg);
    SweepSpec spec = make_sweep_spec(-kPi, kPi, 401, 5, 50, 5);
    SweepResult r = run_cpa(model, gate, spec);
    auto mean = r.mean_over_n(0);
    double grid_max = *std::max_element(mean.begin(), mean.end());
    size_t zero_idx = mean.size() / 2;
    double baseline = mean[zero_idx];  // phi = 0 column
    CHECK(grid_max < 5.0 * std::max(baseline, 1e-6));
}

TEST_CASE("cr state-selective peaks match the oracle and separate by pi") {
    struct Case {
        double delta_mhz, mu, tg_ns, tx_ns, nu;
    };
    std::vector<Case> cases = {
        {-59, 0.15, 300, 8, 0.0},  {-59, 0.15, 300, 24, 0.02}, {45, 0.12, 250, 8, 0.01},
        {-80, 0.10, 400, 16, 0.0}, {-59, 0.18, 260, 12, 0.015}, {65, 0.14, 350, 10, 0.0},
        {-42, 0.11, 320, 8, 0.01}, {50, 0.16, 280, 16, 0.02},  {-70, 0.13, 300, 12, 0.0},
        {38, 0.15, 360, 8, 0.0},
    };
    for (const auto& c : cases) {
        CrossResonanceModel model;
        model.detuning = kTwoPi * c.delta_mhz * 1e6;
        model.mu = c.mu;
        model.nu = c.nu;
        double tg = c.tg_ns * 1e-9, tx = c.tx_ns * 1e-9;
        double omega = kPi / (2 * c.mu * tg);
        Schedule gate = square_gate(model.control_channel, omega, tg);
        Pulse x_pi{model.target_channel, Envelope::square(tx), kPi / tx, 0.0, 0.0};
        SweepSpec spec = make_sweep_spec(-kPi, kPi, 701, 5, 45, 5);

        double pos[2];
        int s = 0;
        for (Sector sector : {Sector::Plus, Sector::Minus}) {
            SweepResult r = run_state_selective_framespec(model, gate, x_pi, spec, sector);
            auto peaks = extract_peaks(r, 0, Aggregation::MeanOverN);
            REQUIRE(!peaks.peaks.empty());
            double oracle = cr_peak_oracle(omega, model.detuning, model.mu, tg, tx, sector);
            double width = peaks.peaks.front().half_width;
            CHECK(angdist(peaks.peaks.front().position, oracle) < std::max(width, 0.03));
            pos[s++] = peaks.peaks.front().position;
        }
        // pi separation, the CNOT signature
        double grid_step = kTwoPi / 700.0;
        double sep = angdist(pos[0], pos[1]);
        CHECK(std::abs(sep - kPi) < grid_step + 0.1);
    }
}

TEST_CASE("cr framespec is flat when the drive vanishes") {
    CrossResonanceModel model;
    model.detuning = kTwoPi * -59e6;
    model.mu = 0.0;
    model.nu = 0.0;
    Schedule gate = square_gate(model.control_channel, 0.0, 100e-9);
    Pulse x_pi{model.target_channel, Envelope::square(16e-9), kPi / 16e-9, 0.0, 0.0};
    SweepSpec spec = make_sweep_spec(-3.0, 3.0, 31, 5, 25, 5);
    SweepResult r = run_state_selective_framespec(model, gate, x_pi, spec, Sector::Plus);
    for (double v : r.populations[0]) CHECK(v < 1e-9);
}

TEST_CASE("spectator framespec peaks and symmetries") {
    SpectatorModel model;
    model.detuning = kTwoPi * 60e6;
    model.mu = 0.03;
    model.nu = 0.015;
    double tg = 14.2e-9, tx = 64e-9;
    Schedule gate = square_gate(model.channel, (kPi / 2) / tg, tg);
    Pulse x_pi{model.channel, Envelope::square(tx), kPi / tx, 0.0, 0.0};
    SweepSpec spec = make_sweep_spec(-kPi, kPi, 801, 4, 32, 4);
    double trep = tg + tx;

    SweepResult plus = run_spectator_framespec(model, gate, x_pi, spec, Sector::Plus);
    auto spect_peaks = extract_peaks(plus, 1, Aggregation::MeanOverN);
    REQUIRE(spect_peaks.peaks.size() >= 2);
    double corr = spectator_peak_oracle(model.detuning, trep, Sector::Plus);
    double ix = spectator_ix_peak(model.detuning, trep);
    // both the correlated and the IX peak appear in the spectator trace
    bool corr_found = false, ix_found = false;
    for (const auto& pk : spect_peaks.peaks) {
        if (angdist(pk.position, corr) < std::max(pk.half_width, 0.03)) corr_found = true;
        if (angdist(pk.position, ix) < std::max(pk.half_width, 0.03)) ix_found = true;
    }
    CHECK(corr_found);
    CHECK(ix_found);
    // correlated peak also on the driven qubit near the same position
    auto driven_peaks = extract_peaks(plus, 0, Aggregation::MeanOverN, -1, 1.05);
    bool corr_on_driven = false;
    for (const auto& pk : driven_peaks.peaks)
        if (angdist(pk.position, corr) < std::max(pk.half_width, 0.05)) corr_on_driven = true;
    CHECK(corr_on_driven);

    // minus prep sits pi away
    SweepResult minus = run_spectator_framespec(model, gate, x_pi, spec, Sector::Minus);
    auto minus_peaks = extract_peaks(minus, 1, Aggregation::MeanOverN);
    REQUIRE(!minus_peaks.peaks.empty());
    double corr_minus = spectator_peak_oracle(model.detuning, trep, Sector::Minus);
    bool minus_found = false;
    for (const auto& pk : minus_peaks.peaks)
        if (angdist(pk.position, corr_minus) < std::max(pk.half_width, 0.03)) minus_found = true;
    CHECK(minus_found);

    // exchanging driven and spectator roles (Delta -> -Delta) reflects peaks
    SpectatorModel mirrored = model;
    mirrored.detuning = -model.detuning;
    SweepResult refl = run_spectator_framespec(mirrored, gate, x_pi, spec, Sector::Minus);
    auto refl_peaks = extract_peaks(refl, 1, Aggregation::MeanOverN);
    REQUIRE(!refl_peaks.peaks.empty());
    bool reflected = false;
    for (const auto& pk : refl_peaks.peaks)
        if (angdist(pk.position, -corr) < std::max(pk.half_width, 0.05)) reflected = true;
    CHECK(reflected);
}

TEST_CASE("spectator grid is flat without coupling") {
    SpectatorModel model;
    model.detuning = kTwoPi * 60e6;
    model.mu = 0.0;
    model.nu = 0.0;
    double tg = 14.2e-9;
    Schedule gate = square_gate(model.channel, (kPi / 2) / tg, tg);
    Pulse x_pi{model.channel, Envelope::square(64e-9), kPi / 64e-9, 0.0, 0.0};
    SweepSpec spec = make_sweep_spec(-3.0, 3.0, 21, 4, 16, 4);
    SweepResult r = run_spectator_framespec(model, gate, x_pi, spec, Sector::Plus);
    for (double v : r.populations[1]) CHECK(v < 1e-9);
}

TEST_CASE("peak position shifts linearly with interrogation duration, slope Delta") {
    SpectatorModel model;
    model.detuning = kTwoPi * 60e6;
    model.mu = 0.03;
    model.nu = 0.0;
    double tg = 14.2e-9;
    Schedule gate = square_gate(model.channel, (kPi / 2) / tg, tg);
    std::vector<double> txs, positions;
    for (double tx_ns : {40.0, 48.0, 56.0, 64.0, 72.0}) {
        double tx = tx_ns * 1e-9;
        Pulse x_pi{model.channel, Envelope::square(tx), kPi / tx, 0.0, 0.0};
        SweepSpec spec = make_sweep_spec(-kPi, kPi, 801, 4, 32, 4);
        SweepResult r = run_spectator_framespec(model, gate, x_pi, spec, Sector::Plus);
        auto peaks = extract_peaks(r, 1, Aggregation::MeanOverN);
        REQUIRE(!peaks.peaks.empty());
        txs.push_back(tx);
        positions.push_back(peaks.peaks.front().position);
    }
    // fit sin(phi) to sin(a t_X + phi0); |a| recovers |Delta| within a percent
    auto f = fit_sin(txs, positions, kTwoPi * 100e6);
    CHECK(std::abs(std::abs(f.a) - std::abs(model.detuning)) < 0.01 * std::abs(model.detuning));
}

TEST_CASE("populations are 2pi-periodic in phi") {
    SingleQubitDriveModel model{kTwoPi * -50e6, "d0"};
    double tg = 96e-9;
    double omega = std::sqrt(kPi * std::abs(model.detuning) / tg);
    Schedule gate = square_gate("d0", omega, tg);
    SweepSpec a, b;
    a.phi_grid = {0.4, 1.1};
    b.phi_grid = {0.4 + kTwoPi, 1.1 + kTwoPi};
    a.n_grid = b.n_grid = {10, 20};
    SweepResult ra = run_cpa(model, gate, a);
    SweepResult rb = run_cpa(model, gate, b);
    for (size_t i = 0; i < ra.populations[0].size(); ++i)
        CHECK(ra.populations[0][i] == doctest::Approx(rb.populations[0][i]).epsilon(1e-9));
}

TEST_CASE("global pulse phase offsets do not move populations") {
    SingleQubitDriveModel model{kTwoPi * -50e6, "d0"};
    double tg = 96e-9;
    double omega = std::sqrt(kPi * std::abs(model.detuning) / tg);
    SweepSpec spec = make_sweep_spec(-1.0, 1.0, 11, 10, 30, 10);
    Schedule gate = square_gate("d0", omega, tg);
    Pulse shifted{"d0", Envelope::square(tg), omega, 0.0, 0.9};
    Schedule gate2;
    gate2.append(shifted);
    SweepResult r1 = run_cpa(model, gate, spec);
    SweepResult r2 = run_cpa(model, gate2, spec);
    for (size_t i = 0; i < r1.populations[0].size(); ++i)
        CHECK(r1.populations[0][i] == doctest::Approx(r2.populations[0][i]).epsilon(1e-8));
}

TEST_CASE("serial and parallel execution agree bitwise") {
    SingleQubitDriveModel model{kTwoPi * -50e6, "d0"};
    double tg = 96e-9;
    double omega = std::sqrt(kPi * std::abs(model.detuning) / tg);
    Schedule gate = square_gate("d0", omega, tg);
    SweepSpec spec = make_sweep_spec(-kPi, kPi, 41, 10, 50, 10);
    ExperimentOptions serial, parallel;
    serial.policy = ExecPolicy::Serial;
    parallel.policy = ExecPolicy::OpenMP;
    SweepResult a = run_cpa(model, gate, spec, serial);
    SweepResult b = run_cpa(model, gate, spec, parallel);
    CHECK(a.populations == b.populations);
}

TEST_CASE("cpmg peak spacing and cpa correspondence") {
    SpectatorModel model;
    model.detuning = kTwoPi * 60e6;
    model.mu = 0.03;
    model.nu = 0.015;
    double tg = 21.32e-9;
    Pulse x_pi{model.channel, Envelope::square(tg), kPi / tg, 0.0, 0.0};
    CpmgSpec spec;
    spec.tau_start = 0.0;
    spec.tau_step = 0.222e-9;
    spec.tau_points = 181;  // to 40 ns
    spec.repetitions = 16;
    spec.gate = CpmgGate::XPi;
    CpmgResult r = run_cpmg(model, x_pi, spec);

    auto peaks = find_peaks(r.taus, r.populations[1], 5.0, false);
    REQUIRE(peaks.peaks.size() >= 2);
    std::vector<double> tau_peaks;
    for (const auto& pk : peaks.peaks)
        if (pk.height > 0.3 * peaks.peaks.front().height) tau_peaks.push_back(pk.position);
    std::sort(tau_peaks.begin(), tau_peaks.end());
    REQUIRE(tau_peaks.size() >= 2);
    double spacing = kTwoPi / std::abs(model.detuning);
    for (size_t i = 1; i < tau_peaks.size(); ++i)
        CHECK(tau_peaks[i] - tau_peaks[i - 1] == doctest::Approx(spacing).epsilon(0.05));

    // the predicted entangling positions: D (tau + tg) = theta_g mod 2pi
    auto predicted = cpmg_peak_taus(model.detuning, tg, r.theta_g, spec.tau_start,
                                    spec.tau_start + (spec.tau_points - 1) * spec.tau_step);
    for (double tau : tau_peaks) {
        double best = 1e9;
        for (double p : predicted) best = std::min(best, std::abs(tau - p));
        CHECK(best < 2.0 * spec.tau_step);
    }

    CHECK_THROWS_AS([&] {
        CpmgSpec bad = spec;
        bad.tau_step = 0.1e-9;
        bad.tau_grid();
    }(), std::invalid_argument);

    // coarse grids warn
    CpmgSpec coarse = spec;
    coarse.tau_step = 4e-9;
    coarse.tau_points = 10;
    CpmgResult rc = run_cpmg(model, x_pi, coarse);
    CHECK(!rc.warnings.empty());
}

TEST_CASE("spectator flat in cpmg when uncoupled") {
    SpectatorModel model;
    model.detuning = kTwoPi * 60e6;
    model.mu = 0.0;
    model.nu = 0.0;
    double tg = 21.32e-9;
    Pulse x_pi{model.channel, Envelope::square(tg), kPi / tg, 0.0, 0.0};
    CpmgSpec spec;
    spec.tau_points = 21;
    spec.tau_step = 0.444e-9;
    spec.repetitions = 8;
    CpmgResult r = run_cpmg(model, x_pi, spec);
    for (double v : r.populations[1]) CHECK(v < 1e-9);
}

TEST_CASE("stark shift measurement") {
    double delta = kTwoPi * -50e6, tg = 96e-9;
    // W = 0: no drive, no shift (fit has no fringes, so test via small drive)
    double omega_small = 0.05 * std::abs(delta);
    SingleQubitDriveModel model{delta, "d0"};
    StarkShiftResult r =
        measure_stark_shift(model, square_gate("d0", omega_small, tg), 4096);
    double first_order = -omega_small * omega_small * tg / (2.0 * delta);
    CHECK(r.theta / first_order > 0.95);
    CHECK(r.theta / first_order < 1.05);

    // calibrated gate: matches the exact rotation angle of the unitary
    double omega = kTwoPi * 16.2503e6;
    Schedule gate = square_gate("d0", omega, tg);
    StarkShiftResult rc = measure_stark_shift(model, gate, 4096);
    PropagationOptions res;
    res.frame = ResonantFrame{};
    Mat u = propagate(model, gate, res);
    cxd a = 0.5 * u.trace();
    double rotation = 2.0 * std::acos(std::min(1.0, std::abs(a)));
    CHECK(std::abs(std::abs(rc.theta) - rotation) < 1e-3);
    // and the Z-phase decomposition value up to the equatorial correction
    cxd d = 0.5 * cxd(0, 1) * (pauli1('Z') * u).trace();
    double z_phase = 2.0 * std::atan2(std::abs(d), std::abs(a));
    CHECK(std::abs(std::abs(rc.theta) - z_phase) < 5e-3);
}

TEST_CASE("drag calibration suppresses the stark peak") {
    double delta = kTwoPi * -50e6, tg = 96e-9, sigma = 14.22e-9;
    SingleQubitDriveModel model{delta, "d0"};
    Envelope base = Envelope::flat_top_gaussian(sigma, tg);
    double amp = calibrate_stark_amplitude(model, base, kTwoPi * 10e6, kTwoPi * 35e6);

    // locate the peak at fixed N = 50
    SweepSpec spec = make_sweep_spec(-kPi, kPi, 629, 10, 50, 10);
    Schedule gate0;
    gate0.append(Pulse{"d0", base, amp, 0.0, 0.0});
    SweepResult sweep = run_cpa(model, gate0, spec);
    auto peaks = extract_peaks(sweep, 0, Aggregation::FixedN, 50);
    REQUIRE(!peaks.peaks.empty());
    double phi_peak = peaks.peaks.front().position;

    auto builder = [&](double beta) {
        Schedule s;
        s.append(Pulse{"d0", drag_wrap(base, beta), amp, 0.0, 0.0});
        return s;
    };
    std::vector<double> betas;
    for (int i = -8; i <= 8; ++i) betas.push_back(i * 0.5e-9);
    const HamiltonianModel hmodel = model;
    DragCalibration cal = calibrate_drag(hmodel, builder, phi_peak, 50, betas);
    CHECK(cal.interior_minimum);
    double base_pop = cal.populations[8];  // beta = 0 entry
    CHECK(base_pop / std::max(cal.population_at_opt, 1e-12) > 20.0);
    // optimum close to 1/|Delta|
    CHECK(std::abs(cal.beta_opt - 1.0 / std::abs(delta)) < 1e-9);

    // error-free diagonal gate: flat curve, beta = 0 returned
    Schedule vz;
    vz.append(FrameChange{"d0", 1.0});
    vz.append(Delay{5e-9});
    auto flat_builder = [&](double) { return vz; };
    DragCalibration flat = calibrate_drag(hmodel, flat_builder, 0.3, 10, betas);
    CHECK(flat.beta_opt == 0.0);
    CHECK(!flat.interior_minimum);

    // a monotone sweep (minimum at the edge) is a calibration failure
    std::vector<double> onesided;
    for (int i = 2; i <= 8; ++i) onesided.push_back(i * 1.5e-9);
    CHECK_THROWS_AS(calibrate_drag(hmodel, builder, phi_peak, 50, onesided), CalibrationError);
}
