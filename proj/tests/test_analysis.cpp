#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>
#include <random>

#include "offres/analysis.hpp"
#include "offres/qcore.hpp"

using namespace offres;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;
}

TEST_CASE("p10 closed form") {
    CHECK(p10_closed_form(0.0, kTwoPi * 10e6, 1e-7) == 0.0);
    double tg = 20e-9;
    CHECK(p10_closed_form(kPi / tg, 0.0, tg) == doctest::Approx(1.0));
    // full Rabi cycle
    double omega = kTwoPi * 20e6, delta = kTwoPi * 15e6;
    double wr = std::hypot(omega, delta);
    CHECK(p10_closed_form(omega, delta, kTwoPi / wr) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("p10 equals the square-pulse propagator excitation") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> om(1e6, 80e6), de(-80e6, 80e6), tt(5e-9, 400e-9);
    for (int trial = 0; trial < 1000; ++trial) {
        double omega = kTwoPi * om(rng), delta = kTwoPi * de(rng), t = tt(rng);
        Mat h = 0.5 * (delta * pauli1('Z') + omega * pauli1('X'));
        Mat u = matrix_exp_hermitian(h, t);
        CHECK(std::abs(std::norm(u(1, 0)) - p10_closed_form(omega, delta, t)) < 1e-10);
    }
}

TEST_CASE("peak oracles: limits and symmetries") {
    double t = 110e-9;
    // stark: W -> 0 limit
    CHECK(stark_peak_oracle(0.0, kTwoPi * 30e6, t) ==
          doctest::Approx(wrap_angle(kTwoPi * 30e6 * t)));
    // odd in Delta
    CHECK(stark_peak_oracle(kTwoPi * 10e6, kTwoPi * -30e6, t) ==
          doctest::Approx(-stark_peak_oracle(kTwoPi * 10e6, kTwoPi * 30e6, t)));
    // 2pi-periodic in D*t
    double d = kTwoPi * 40e6;
    CHECK(stark_peak_oracle(0.0, d, t) ==
          doctest::Approx(stark_peak_oracle(0.0, d, t + kTwoPi / d)).epsilon(1e-9));

    // cr: mu = 0 reduces to the stark form with the detuning negated (the CR
    // free term carries the opposite sign convention)
    double om = kTwoPi * 12e6, dd = kTwoPi * -45e6;
    CHECK(cr_peak_oracle(om, dd, 0.0, t, 0.0, Sector::Plus) ==
          doctest::Approx(stark_peak_oracle(om, -dd, t)));
    CHECK(cr_peak_oracle(om, dd, 0.0, t, 0.0, Sector::Minus) ==
          doctest::Approx(cr_peak_oracle(om, dd, 0.0, t, 0.0, Sector::Plus)));
    // the sector shift changes sign only when |mu W| > |Delta|
    double mu = 0.1;
    CHECK(cr_peak_oracle(om, dd, mu, t, 0.0, Sector::Plus) !=
          cr_peak_oracle(om, dd, mu, t, 0.0, Sector::Minus));

    // spectator: Delta = 0
    CHECK(spectator_peak_oracle(0.0, t, Sector::Plus) == doctest::Approx(-kPi / 2));
    CHECK(spectator_peak_oracle(0.0, t, Sector::Minus) == doctest::Approx(kPi / 2));
    CHECK(spectator_ix_peak(0.0, t) == doctest::Approx(0.0));
    // exchanging roles reflects the peak and swaps the sector
    double ds = kTwoPi * 60e6;
    CHECK(spectator_peak_oracle(-ds, t, Sector::Plus) ==
          doctest::Approx(-spectator_peak_oracle(ds, t, Sector::Minus)).epsilon(1e-9));
    CHECK(spectator_ix_peak(-ds, t) == doctest::Approx(-spectator_ix_peak(ds, t)));
}

TEST_CASE("cr sector peaks separate by pi for a zx90 drive") {
    double tg = 300e-9, mu = 0.15;
    double om = kPi / (2 * mu * tg);  // mu W tg = pi/2
    double d = kTwoPi * -59e6;
    double plus = cr_peak_oracle(om, d, mu, tg, 0.0, Sector::Plus);
    double minus = cr_peak_oracle(om, d, mu, tg, 0.0, Sector::Minus);
    double sep = std::abs(wrap_angle(plus - minus));
    CHECK(sep == doctest::Approx(kPi).epsilon(0.02));
}

TEST_CASE("cpmg peak taus") {
    double d = kTwoPi * 60e6, tg = 21.32e-9;
    auto taus = cpmg_peak_taus(d, tg, kPi, 0.0, 40e-9);
    REQUIRE(taus.size() >= 2);
    for (size_t i = 1; i < taus.size(); ++i)
        CHECK(taus[i] - taus[i - 1] == doctest::Approx(kTwoPi / d).epsilon(1e-9));
    for (double tau : taus) CHECK(std::abs(wrap_angle(d * (tau + tg) - kPi)) < 1e-9);
}

TEST_CASE("find_peaks") {
    std::vector<double> xs, flat, shaped;
    int n = 401;
    for (int i = 0; i < n; ++i) {
        double x = -kPi + kTwoPi * i / (n - 1);
        xs.push_back(x);
        flat.push_back(1e-4);
        double s = std::sin(5.0 * (x - 1.0) / 2.0);
        shaped.push_back(s * s);
    }
    CHECK(find_peaks(xs, flat).peaks.empty());

    auto found = find_peaks(xs, shaped);
    REQUIRE(!found.peaks.empty());
    // maxima where 5(x-1)/2 = pi/2 + k pi; check the one at x = 1 + pi/5
    bool hit = false;
    for (const auto& pk : found.peaks)
        if (std::abs(pk.position - (1.0 + kPi / 5.0)) < (xs[1] - xs[0]) / 10.0) hit = true;
    CHECK(hit);
    CHECK(found.peaks.front().height == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(found.peaks.front().half_width > 0.0);
}

TEST_CASE("fit_linear recovers exact lines") {
    std::vector<double> xs{0, 1, 2, 3, 4}, ys;
    for (double x : xs) ys.push_back(2.0 * x + 1.0);
    auto f = fit_linear(xs, ys);
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit_decay recovers noiseless parameters") {
    std::vector<double> ns, ys;
    for (int n = 1; n <= 100; ++n) {
        ns.push_back(n);
        ys.push_back(0.5 * std::pow(0.99, n) + 0.5);
    }
    auto f = fit_decay(ns, ys, 1);
    CHECK(f.alpha == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(f.a == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(f.b == doctest::Approx(0.5).epsilon(1e-4));

    // power-2 (purity) variant
    std::vector<double> ps;
    for (double n : ns) ps.push_back(0.7 * std::pow(0.995, 2 * n) + 0.25);
    auto g = fit_decay(ns, ps, 2);
    CHECK(g.alpha == doctest::Approx(0.995).epsilon(1e-6));
}

TEST_CASE("fit_decay recovers alpha under 1% noise") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> noise(0.0, 0.01);
    int hits = 0, trials = 40;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> ns, ys;
        for (int n = 1; n <= 100; n += 2) {
            ns.push_back(n);
            ys.push_back(0.5 * std::pow(0.98, n) + 0.5 + noise(rng));
        }
        auto f = fit_decay(ns, ys, 1);
        if (std::abs(f.alpha - 0.98) <= 3.0 * std::max(f.alpha_stderr(), 1e-6)) ++hits;
    }
    CHECK(hits >= trials * 90 / 100);  // ~95% expected
}

TEST_CASE("fit_sin recovers the frequency from wrapped data") {
    double a_true = kTwoPi * 60e6, phi0 = 0.7;
    std::vector<double> ts, phis;
    for (int i = 0; i < 24; ++i) {
        double t = 4e-9 * i;
        ts.push_back(t);
        phis.push_back(wrap_angle(a_true * t + phi0));
    }
    auto f = fit_sin(ts, phis, kTwoPi * 100e6);
    CHECK(std::abs(f.a) == doctest::Approx(a_true).epsilon(0.01));
}

TEST_CASE("coherence limits") {
    CHECK(coherence_limit_1q(0.0, 124e-6, 107e-6) == 0.0);
    double e1 = coherence_limit_1q(96e-9, 124e-6, 107e-6);
    CHECK(e1 == doctest::Approx(4.28e-4).epsilon(0.01));

    double e2 = coherence_limit_2q(300e-9, 40e-6, 40e-6, 40e-6, 40e-6);
    CHECK(e2 == doctest::Approx(8.94e-3).epsilon(0.01));
    CHECK(1.5 * e2 == doctest::Approx(1.35e-2).epsilon(0.015));
}

TEST_CASE("coherence limit equals the channel construction") {
    // formula/channel duality at 1e-12
    for (auto [tg, t1, t2] : {std::tuple{96e-9, 124e-6, 107e-6}, {300e-9, 40e-6, 40e-6},
                              {50e-9, 80e-6, 20e-6}}) {
        KrausChannel ch = relaxation_channel(t1, t2, tg);
        double via_channel = average_gate_error(pauli_transfer_matrix(ch), 1);
        CHECK(std::abs(via_channel - coherence_limit_1q(tg, t1, t2)) < 1e-12);
    }
    KrausChannel q0 = relaxation_channel(40e-6, 30e-6, 300e-9);
    KrausChannel q1 = relaxation_channel(55e-6, 60e-6, 300e-9);
    double via_channel = average_gate_error(pauli_transfer_matrix(q0.tensor_with(q1)), 2);
    CHECK(std::abs(via_channel - coherence_limit_2q(300e-9, 40e-6, 30e-6, 55e-6, 60e-6)) < 1e-12);
}
