#include "offres/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace offres {

Envelope Envelope::square(double duration) {
    if (duration <= 0) throw std::invalid_argument("square: duration must be > 0");
    Envelope e;
    e.shape_ = SquareShape{duration};
    e.duration_ = duration;
    return e;
}

Envelope Envelope::gaussian(double sigma, double duration) {
    if (sigma <= 0) throw std::invalid_argument("gaussian: sigma must be > 0");
    if (duration == 0.0) duration = 4.0 * sigma;
    if (duration <= 0) throw std::invalid_argument("gaussian: duration must be > 0");
    Envelope e;
    e.shape_ = GaussianShape{sigma, duration};
    e.duration_ = duration;
    return e;
}

Envelope Envelope::flat_top_gaussian(double sigma, double duration, double rise) {
    if (sigma <= 0) throw std::invalid_argument("flat_top_gaussian: sigma must be > 0");
    if (rise == 0.0) rise = 2.0 * sigma;
    if (duration < 2.0 * rise)
        throw std::invalid_argument("flat_top_gaussian: duration shorter than rise + fall");
    Envelope e;
    e.shape_ = FlatTopGaussianShape{sigma, duration, rise};
    e.duration_ = duration;
    return e;
}

namespace {

// baseline-subtracted Gaussian edge: 0 at x=0, 1 at x=rise
double edge_value(double x, double rise, double sigma) {
    double b = std::exp(-rise * rise / (2.0 * sigma * sigma));
    return (std::exp(-(x - rise) * (x - rise) / (2.0 * sigma * sigma)) - b) / (1.0 - b);
}

double edge_derivative(double x, double rise, double sigma) {
    double b = std::exp(-rise * rise / (2.0 * sigma * sigma));
    double g = std::exp(-(x - rise) * (x - rise) / (2.0 * sigma * sigma));
    return g * (rise - x) / (sigma * sigma) / (1.0 - b);
}

}  // namespace

double Envelope::base_value(double t) const {
    if (t < 0.0 || t > duration_) return 0.0;
    if (std::holds_alternative<SquareShape>(shape_)) return 1.0;
    if (const auto* g = std::get_if<GaussianShape>(&shape_)) {
        double half = 0.5 * g->duration;
        double b = std::exp(-half * half / (2.0 * g->sigma * g->sigma));
        double v = std::exp(-(t - half) * (t - half) / (2.0 * g->sigma * g->sigma));
        return (v - b) / (1.0 - b);
    }
    const auto& f = std::get<FlatTopGaussianShape>(shape_);
    if (t < f.rise) return edge_value(t, f.rise, f.sigma);
    if (t > f.duration - f.rise) return edge_value(f.duration - t, f.rise, f.sigma);
    return 1.0;
}

double Envelope::base_derivative(double t) const {
    if (t < 0.0 || t > duration_) return 0.0;
    if (std::holds_alternative<SquareShape>(shape_)) return 0.0;
    if (const auto* g = std::get_if<GaussianShape>(&shape_)) {
        double half = 0.5 * g->duration;
        double b = std::exp(-half * half / (2.0 * g->sigma * g->sigma));
        double v = std::exp(-(t - half) * (t - half) / (2.0 * g->sigma * g->sigma));
        return v * (half - t) / (g->sigma * g->sigma) / (1.0 - b);
    }
    const auto& f = std::get<FlatTopGaussianShape>(shape_);
    if (t < f.rise) return edge_derivative(t, f.rise, f.sigma);
    if (t > f.duration - f.rise) return -edge_derivative(f.duration - t, f.rise, f.sigma);
    return 0.0;
}

std::complex<double> Envelope::value(double t) const {
    if (beta_ == 0.0) return base_value(t);
    return {base_value(t), beta_ * base_derivative(t)};
}

double Envelope::area() const {
    if (std::holds_alternative<SquareShape>(shape_)) return duration_;
    // 4096-point midpoint quadrature; envelopes are smooth
    const int n = 4096;
    double dt = duration_ / n, sum = 0.0;
    for (int i = 0; i < n; ++i) sum += base_value((i + 0.5) * dt);
    return sum * dt;
}

bool Envelope::constant_on(double a, double b) const {
    if (a > b) std::swap(a, b);
    if (std::holds_alternative<SquareShape>(shape_)) return a >= 0.0 && b <= duration_;
    if (const auto* f = std::get_if<FlatTopGaussianShape>(&shape_))
        return a >= f->rise && b <= f->duration - f->rise;
    return false;
}

bool Envelope::differentiable() const { return !std::holds_alternative<SquareShape>(shape_); }

Envelope Envelope::with_drag(double beta) const {
    Envelope e = *this;
    e.beta_ = beta;
    return e;
}

Envelope drag_wrap(const Envelope& env, double beta) {
    if (!env.differentiable())
        throw std::invalid_argument("drag_wrap: square envelopes have no derivative");
    return env.with_drag(beta);
}

double instruction_duration(const Instruction& inst) {
    if (const auto* p = std::get_if<Pulse>(&inst)) return p->duration();
    if (const auto* d = std::get_if<Delay>(&inst)) return d->duration;
    return 0.0;
}

void Schedule::register_channels(const Instruction& inst) {
    const std::string* ch = nullptr;
    if (const auto* p = std::get_if<Pulse>(&inst)) ch = &p->channel;
    if (const auto* f = std::get_if<FrameChange>(&inst)) ch = &f->channel;
    if (ch && !has_channel(*ch)) channels_.push_back(*ch);
}

bool Schedule::has_channel(const std::string& channel) const {
    return std::find(channels_.begin(), channels_.end(), channel) != channels_.end();
}

double Schedule::channel_end(const std::string& channel) const {
    double end = 0.0;
    for (const auto& ti : instructions_) {
        bool on_channel = false;
        if (const auto* p = std::get_if<Pulse>(&ti.inst)) on_channel = p->channel == channel;
        if (const auto* f = std::get_if<FrameChange>(&ti.inst)) on_channel = f->channel == channel;
        if (std::holds_alternative<Delay>(ti.inst) || std::holds_alternative<Barrier>(ti.inst))
            on_channel = true;
        if (on_channel) end = std::max(end, ti.end());
    }
    return end;
}

double Schedule::duration() const {
    double end = 0.0;
    for (const auto& ti : instructions_) end = std::max(end, ti.end());
    return end;
}

void Schedule::append(const Instruction& inst) {
    double start = 0.0;
    if (const auto* p = std::get_if<Pulse>(&inst)) start = channel_end(p->channel);
    else if (const auto* f = std::get_if<FrameChange>(&inst)) start = channel_end(f->channel);
    else start = duration();
    append_at(start, inst);
}

void Schedule::append_at(double start, const Instruction& inst) {
    if (start < 0.0) throw std::invalid_argument("schedule: negative start time");
    if (const auto* p = std::get_if<Pulse>(&inst)) {
        double end = start + p->duration();
        for (const auto& ti : instructions_) {
            const auto* q = std::get_if<Pulse>(&ti.inst);
            if (!q || q->channel != p->channel) continue;
            if (start < ti.end() - 1e-15 && ti.start < end - 1e-15)
                throw std::invalid_argument("schedule: overlapping pulses on channel " + p->channel);
        }
    }
    register_channels(inst);
    instructions_.push_back({start, inst});
    std::stable_sort(instructions_.begin(), instructions_.end(),
                     [](const TimedInstruction& a, const TimedInstruction& b) {
                         return a.start < b.start;
                     });
}

void Schedule::append_schedule(const Schedule& other) {
    double offset = duration();
    for (const auto& ti : other.instructions()) append_at(offset + ti.start, ti.inst);
}

double Schedule::accumulated_phase(const std::string& channel, double t) const {
    if (!has_channel(channel)) throw std::invalid_argument("unknown channel " + channel);
    double phase = 0.0;
    for (const auto& ti : instructions_) {
        const auto* f = std::get_if<FrameChange>(&ti.inst);
        if (f && f->channel == channel && ti.start <= t) phase += f->delta_phase;
    }
    return phase;
}

Schedule build_cpa_schedule(const Schedule& gate, double phi, int repetitions,
                            const CpaInterrogation& interrogation) {
    if (repetitions < 0) throw std::invalid_argument("build_cpa_schedule: negative repetitions");
    Schedule out;
    // every drive channel advances its frame together, the interrogation
    // channel included
    std::vector<std::string> drive_channels = gate.channels();
    if (interrogation.rotated_x) {
        const auto& ch = interrogation.rotated_x->x_pulse.channel;
        if (std::find(drive_channels.begin(), drive_channels.end(), ch) == drive_channels.end())
            drive_channels.push_back(ch);
    }
    for (int k = 1; k <= repetitions; ++k) {
        if (k > 1) {
            if (interrogation.rotated_x) {
                Pulse x = interrogation.rotated_x->x_pulse;
                // phase advanced by phi/2 relative to the preceding gate copy;
                // placed before the FrameChange so its accumulated frame phase
                // equals the previous copy's
                x.phase += phi / 2.0;
                out.append_at(out.duration(), x);
            }
            double t = out.duration();
            for (const auto& ch : drive_channels) out.append_at(t, FrameChange{ch, phi});
        }
        out.append_schedule(gate);
    }
    return out;
}

double calibrate_area(const Envelope& env, double angle) {
    return angle / env.area();
}

}  // namespace offres
