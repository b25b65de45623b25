#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "offres/heat.hpp"

using namespace offres;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;
}

TEST_CASE("sensitivity table matches finite-difference injections") {
    // every stored combination row is the measured linear response
    const double eps = 2e-4;
    HeatOptions opts;
    for (const auto& seq : heat_table()) {
        const auto& labels = heat_pauli_labels();
        for (size_t p = 0; p < labels.size(); ++p) {
            auto gate = zx90_with_static_error(labels[p], eps);
            std::vector<double> xs, ys;
            for (int n : opts.n_values) {
                xs.push_back(n);
                ys.push_back(heat_sequence_expectation(seq, n, gate, opts));
            }
            auto fit = fit_linear(xs, ys);
            double sens = fit.slope / eps;
            CHECK(std::abs(sens - seq.combo[p]) < 0.02);
        }
    }
}

TEST_CASE("ideal gate yields zero errors") {
    auto gate = [](double) { return ideal_zx90(); };
    HeatResult r = run_heat(gate, {});
    for (const auto& [label, v] : r.epsilon)
        CHECK(std::abs(v) < 3.0 * std::max(r.uncertainty.at(label), 1e-9) + 1e-9);
    CHECK(!r.nonlinearity);
}

TEST_CASE("static pauli rotations of 0.01 rad are recovered within 10 percent") {
    for (const auto& label : heat_pauli_labels()) {
        auto gate = zx90_with_static_error(label, 0.01);
        HeatResult r = run_heat(gate, {});
        CHECK(std::abs(r.epsilon.at(label) - 0.01) < 0.001);
        // other estimates stay small
        for (const auto& [other, v] : r.epsilon)
            if (other != label) CHECK(std::abs(v) < 0.002);
    }
}

TEST_CASE("pairwise sum of sequences 1 and 2 isolates the xi error") {
    auto gate = zx90_with_static_error("XI", 0.01);
    HeatOptions opts;
    const auto& table = heat_table();
    auto slope_of = [&](int k) {
        std::vector<double> xs, ys;
        for (int n : opts.n_values) {
            xs.push_back(n);
            ys.push_back(heat_sequence_expectation(table[static_cast<size_t>(k)], n, gate, opts));
        }
        return fit_linear(xs, ys).slope;
    };
    // <H1> + <H2> = -(alpha) * eps_xi * N with the stored signs
    double combined = -(slope_of(0) + slope_of(1));
    CHECK(combined == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("mixed injection recovered jointly") {
    Mat err = matrix_exp_hermitian(0.5 * 0.012 * pauli_matrix("ZX"), 1.0) *
              matrix_exp_hermitian(0.5 * 0.008 * pauli_matrix("IY"), 1.0) * ideal_zx90();
    auto gate = [err](double) { return err; };
    HeatResult r = run_heat(gate, {});
    CHECK(r.epsilon.at("ZX") == doctest::Approx(0.012).epsilon(0.1));
    CHECK(r.epsilon.at("IY") == doctest::Approx(0.008).epsilon(0.1));
}

TEST_CASE("repetition counts must be multiples of four") {
    HeatOptions opts;
    opts.n_values = {0, 3, 6};
    auto gate = [](double) { return ideal_zx90(); };
    CHECK_THROWS_AS(run_heat(gate, opts), std::invalid_argument);
}

TEST_CASE("large errors raise the nonlinearity flag") {
    auto gate = zx90_with_static_error("ZX", 0.5);
    HeatResult r = run_heat(gate, {});
    CHECK(r.nonlinearity);
}

TEST_CASE("heat blindness for off-resonant errors") {
    CrossResonanceModel model;
    model.detuning = kTwoPi * -59e6;
    model.mu = 0.15;
    model.nu = 0.0;
    // incommensurate: Delta * (t_gate + layer) far from 0 mod 2pi
    double t_gate = 300e-9, layer = 35.55e-9;
    BlindnessReport report = heat_blindness_demo(model, t_gate, layer);

    CHECK(report.implied_rotation > 0.0);
    CHECK(report.heat_xi < 0.1 * report.implied_rotation);
    CHECK(report.blind);
    // stationary control: the injected rotation is recovered
    CHECK(report.stationary_recovered ==
          doctest::Approx(report.stationary_injected).epsilon(0.1));
    // commensurate control: recovery restored
    CHECK(report.commensurate_restored);
}
