#include "offres/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace offres {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

double wrap_angle(double phi) {
    double w = std::fmod(phi + kPi, kTwoPi);
    if (w < 0) w += kTwoPi;
    return w - kPi == -kPi ? kPi : w - kPi;
}

double p10_closed_form(double omega, double delta, double t) {
    double wr2 = omega * omega + delta * delta;
    if (wr2 == 0.0) return 0.0;
    double s = std::sin(0.5 * std::sqrt(wr2) * t);
    return omega * omega / wr2 * s * s;
}

double stark_peak_oracle(double omega, double delta, double t_rep) {
    double wr = std::hypot(omega, delta);
    double sign = (delta >= 0) ? 1.0 : -1.0;
    return wrap_angle(sign * wr * t_rep);
}

double cr_peak_oracle(double omega, double delta, double mu, double t_g, double t_x,
                      Sector sector) {
    double shift = (sector == Sector::Plus) ? -mu * omega : mu * omega;
    double d_eff = delta + shift;
    double wr = std::hypot(omega, d_eff);
    double sign = (d_eff >= 0) ? 1.0 : -1.0;
    return wrap_angle(-sign * wr * t_g - delta * t_x);
}

double spectator_peak_oracle(double delta, double t_rep, Sector sector) {
    double half = (sector == Sector::Plus) ? -0.5 * kPi : 0.5 * kPi;
    return wrap_angle(-delta * t_rep + half);
}

double spectator_ix_peak(double delta, double t_rep) { return wrap_angle(-delta * t_rep); }

std::vector<double> cpmg_peak_taus(double delta, double t_g, double theta_g, double tau_min,
                                   double tau_max) {
    std::vector<double> out;
    if (delta == 0.0) return out;
    // D (tau + t_g) = theta_g + 2 pi m
    double lo = (delta * (tau_min + t_g) - theta_g) / kTwoPi;
    double hi = (delta * (tau_max + t_g) - theta_g) / kTwoPi;
    if (lo > hi) std::swap(lo, hi);
    for (long m = static_cast<long>(std::floor(lo)) - 1; m <= static_cast<long>(std::ceil(hi)) + 1;
         ++m) {
        double tau = (theta_g + kTwoPi * static_cast<double>(m)) / delta - t_g;
        if (tau >= tau_min - 1e-15 && tau <= tau_max + 1e-15) out.push_back(tau);
    }
    std::sort(out.begin(), out.end());
    return out;
}

PeakExtraction find_peaks(const std::vector<double>& xs, const std::vector<double>& values,
                          double threshold_factor, bool periodic) {
    if (xs.size() != values.size() || xs.size() < 3)
        throw std::invalid_argument("find_peaks: need >= 3 grid points");
    PeakExtraction out;
    std::vector<double> sorted = values;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    double median = sorted[sorted.size() / 2];
    double threshold = std::max(threshold_factor * median, 1e-12);
    size_t n = xs.size();
    double step = xs[1] - xs[0];

    auto val = [&](long i) -> double {
        if (periodic) {
            long m = static_cast<long>(n);
            return values[static_cast<size_t>(((i % m) + m) % m)];
        }
        if (i < 0 || i >= static_cast<long>(n)) return -1.0;
        return values[static_cast<size_t>(i)];
    };

    for (long i = 0; i < static_cast<long>(n); ++i) {
        double y = val(i);
        if (y < threshold) continue;
        if (!(y > val(i - 1) && y >= val(i + 1))) continue;
        PeakFit pk;
        double y0 = val(i - 1), y2 = val(i + 1);
        double denom = y0 - 2.0 * y + y2;
        double offset = (denom != 0.0) ? 0.5 * (y0 - y2) / denom : 0.0;
        pk.position = xs[static_cast<size_t>(i)] + offset * step;
        if (periodic) pk.position = wrap_angle(pk.position);
        pk.height = y - 0.25 * (y0 - y2) * offset;
        // half-width from half-maximum crossings
        double half = 0.5 * pk.height;
        long l = i, r = i;
        while (val(l - 1) > half && i - l < static_cast<long>(n)) --l;
        while (val(r + 1) > half && r - i < static_cast<long>(n)) ++r;
        pk.half_width = 0.5 * step * static_cast<double>(r - l + 1);
        pk.uncertainty = step / std::sqrt(12.0);
        pk.aliased = pk.half_width <= step;
        if (pk.aliased)
            out.warnings.push_back("peak near " + std::to_string(pk.position) +
                                   " narrower than the grid step");
        out.peaks.push_back(pk);
    }
    std::sort(out.peaks.begin(), out.peaks.end(),
              [](const PeakFit& a, const PeakFit& b) { return a.height > b.height; });
    return out;
}

LinearFit fit_linear(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("fit_linear: need >= 2 points");
    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double det = n * sxx - sx * sx;
    if (std::abs(det) < 1e-300) throw std::invalid_argument("fit_linear: singular design matrix");
    LinearFit f;
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sxx * sy - sx * sxy) / det;
    double ssr = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        double r = f.slope * xs[i] + f.intercept - ys[i];
        ssr += r * r;
    }
    f.residual = std::sqrt(ssr / n);
    double sigma2 = (xs.size() > 2) ? ssr / (n - 2.0) : 0.0;
    f.covariance << n / det, -sx / det, -sx / det, sxx / det;
    f.covariance *= sigma2;
    return f;
}

DecayFit fit_decay(const std::vector<double>& lengths, const std::vector<double>& values,
                   int power) {
    if (lengths.size() != values.size() || lengths.size() < 3)
        throw std::invalid_argument("fit_decay: need >= 3 points");
    if (power != 1 && power != 2) throw std::invalid_argument("fit_decay: power must be 1 or 2");
    size_t m = lengths.size();

    DecayFit f;
    // seeds: B from the tail, A from the head, alpha from log-linear regression
    f.b = values.back();
    f.a = values.front() - f.b;
    {
        std::vector<double> lx, ly;
        for (size_t i = 0; i + 1 < m; ++i) {
            double v = std::abs(values[i] - f.b);
            if (v > 1e-12) {
                lx.push_back(lengths[i]);
                ly.push_back(std::log(v));
            }
        }
        if (lx.size() >= 2) {
            LinearFit lf = fit_linear(lx, ly);
            f.alpha = std::exp(lf.slope / power);
        } else {
            f.alpha = 0.99;
        }
        f.alpha = std::clamp(f.alpha, 1e-6, 1.0);
    }

    auto model = [&](double n, double a, double alpha, double b) {
        return a * std::pow(alpha, power * n) + b;
    };
    double lambda = 1e-3;
    double prev_ssr = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
        Eigen::MatrixXd jac(m, 3);
        Eigen::VectorXd r(m);
        for (size_t i = 0; i < m; ++i) {
            double n = lengths[i];
            double apn = std::pow(f.alpha, power * n);
            r(i) = model(n, f.a, f.alpha, f.b) - values[i];
            jac(i, 0) = apn;
            jac(i, 1) = (f.alpha > 0) ? f.a * power * n * apn / f.alpha : 0.0;
            jac(i, 2) = 1.0;
        }
        double ssr = r.squaredNorm();
        Eigen::Matrix3d jtj = jac.transpose() * jac;
        Eigen::Matrix3d damped = jtj + lambda * Eigen::Matrix3d(jtj.diagonal().asDiagonal());
        Eigen::Vector3d step = damped.ldlt().solve(-jac.transpose() * r);
        if (!step.allFinite()) throw std::runtime_error("fit_decay: singular normal equations");
        double na = f.a + step(0), nalpha = std::clamp(f.alpha + step(1), 1e-9, 1.0), nb = f.b + step(2);
        double nssr = 0;
        for (size_t i = 0; i < m; ++i) {
            double d = model(lengths[i], na, nalpha, nb) - values[i];
            nssr += d * d;
        }
        if (nssr < ssr) {
            f.a = na;
            f.alpha = nalpha;
            f.b = nb;
            lambda = std::max(lambda * 0.5, 1e-12);
            if (std::abs(prev_ssr - nssr) < 1e-16 * (1.0 + nssr) || step.norm() < 1e-14) {
                f.converged = true;
                prev_ssr = nssr;
                break;
            }
            prev_ssr = nssr;
        } else {
            lambda *= 4.0;
            if (lambda > 1e12) break;
        }
        f.converged = true;  // last accepted state is the estimate
    }
    // covariance from the Jacobian at the solution
    Eigen::MatrixXd jac(m, 3);
    double ssr = 0;
    for (size_t i = 0; i < m; ++i) {
        double n = lengths[i];
        double apn = std::pow(f.alpha, power * n);
        double rr = model(n, f.a, f.alpha, f.b) - values[i];
        ssr += rr * rr;
        jac(i, 0) = apn;
        jac(i, 1) = (f.alpha > 0) ? f.a * power * n * apn / f.alpha : 0.0;
        jac(i, 2) = 1.0;
    }
    f.residual = std::sqrt(ssr / static_cast<double>(m));
    double sigma2 = (m > 3) ? ssr / static_cast<double>(m - 3) : 0.0;
    Eigen::Matrix3d jtj = jac.transpose() * jac;
    Eigen::FullPivLU<Eigen::Matrix3d> lu(jtj);
    if (lu.isInvertible()) f.covariance = lu.inverse() * sigma2;
    if (!f.converged) throw std::runtime_error("fit_decay: no convergence");
    return f;
}

SinFit fit_sin(const std::vector<double>& ts, const std::vector<double>& phis, double a_max) {
    if (ts.size() != phis.size() || ts.size() < 3)
        throw std::invalid_argument("fit_sin: need >= 3 points");
    size_t m = ts.size();
    std::vector<double> y(m);
    for (size_t i = 0; i < m; ++i) y[i] = std::sin(phis[i]);

    // scan a; for each, (cos phi0, sin phi0) solves a linear LSQ
    auto ssr_at = [&](double a, double* phi0_out) {
        double suu = 0, svv = 0, suv = 0, syu = 0, syv = 0;
        for (size_t i = 0; i < m; ++i) {
            double u = std::sin(a * ts[i]), v = std::cos(a * ts[i]);
            suu += u * u;
            svv += v * v;
            suv += u * v;
            syu += y[i] * u;
            syv += y[i] * v;
        }
        double det = suu * svv - suv * suv;
        double cu, cv;
        if (std::abs(det) < 1e-30) {
            cu = 1.0;
            cv = 0.0;
        } else {
            cu = (svv * syu - suv * syv) / det;
            cv = (suu * syv - suv * syu) / det;
        }
        double phi0 = std::atan2(cv, cu);
        double ssr = 0;
        for (size_t i = 0; i < m; ++i) {
            double r = std::sin(a * ts[i] + phi0) - y[i];
            ssr += r * r;
        }
        if (phi0_out) *phi0_out = phi0;
        return ssr;
    };

    double best_a = 0, best_ssr = std::numeric_limits<double>::infinity();
    const int scan = 4001;
    for (int i = 0; i < scan; ++i) {
        double a = -a_max + 2.0 * a_max * i / (scan - 1);
        double s = ssr_at(a, nullptr);
        if (s < best_ssr) {
            best_ssr = s;
            best_a = a;
        }
    }
    // golden-section refinement around the best scan point
    double lo = best_a - 2.0 * a_max / (scan - 1), hi = best_a + 2.0 * a_max / (scan - 1);
    for (int it = 0; it < 120; ++it) {
        double m1 = lo + 0.382 * (hi - lo), m2 = lo + 0.618 * (hi - lo);
        if (ssr_at(m1, nullptr) < ssr_at(m2, nullptr)) hi = m2;
        else lo = m1;
    }
    SinFit f;
    f.a = 0.5 * (lo + hi);
    double ssr = ssr_at(f.a, &f.phi0);
    f.residual = std::sqrt(ssr / static_cast<double>(m));
    // covariance via the (a, phi0) Jacobian
    Eigen::MatrixXd jac(m, 2);
    for (size_t i = 0; i < m; ++i) {
        double c = std::cos(f.a * ts[i] + f.phi0);
        jac(i, 0) = c * ts[i];
        jac(i, 1) = c;
    }
    double sigma2 = (m > 2) ? ssr / static_cast<double>(m - 2) : 0.0;
    Eigen::Matrix2d jtj = jac.transpose() * jac;
    Eigen::FullPivLU<Eigen::Matrix2d> lu(jtj);
    if (lu.isInvertible()) f.covariance = lu.inverse() * sigma2;
    return f;
}

double coherence_limit_1q(double t_g, double t1, double t2) {
    if (t_g < 0) throw std::invalid_argument("coherence_limit_1q: negative duration");
    return (3.0 - 2.0 * std::exp(-t_g / t2) - std::exp(-t_g / t1)) / 6.0;
}

double coherence_limit_2q(double t_g, double t1_q0, double t2_q0, double t1_q1, double t2_q1) {
    if (t_g < 0) throw std::invalid_argument("coherence_limit_2q: negative duration");
    auto e = [&](double tau) { return std::exp(-t_g / tau); };
    double sum = 0.0;
    sum += 2.0 * e(t2_q0) + e(t1_q0) + 2.0 * e(t2_q1) + e(t1_q1);
    sum += std::exp(-t_g * (1.0 / t1_q0 + 1.0 / t1_q1));
    sum += 4.0 * std::exp(-t_g * (1.0 / t2_q0 + 1.0 / t2_q1));
    sum += 2.0 * std::exp(-t_g * (1.0 / t1_q0 + 1.0 / t2_q1));
    sum += 2.0 * std::exp(-t_g * (1.0 / t2_q0 + 1.0 / t1_q1));
    return (15.0 - sum) / 20.0;
}

}  // namespace offres
