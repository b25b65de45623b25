#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

// Pulse envelopes, drive instructions, virtual-Z frame bookkeeping and
// time-ordered schedules. Envelopes are continuous-time functions sampled
// by the integrator; Gaussian shapes are baseline-subtracted so they start
// and end exactly at zero.

namespace offres {

struct SquareShape {
    double duration = 0.0;
};

struct GaussianShape {
    double sigma = 0.0;
    double duration = 0.0;  // defaults to 4 sigma
};

struct FlatTopGaussianShape {
    double sigma = 0.0;
    double duration = 0.0;  // total; rise = fall = 2 sigma
    double rise = 0.0;      // 0 -> use 2 sigma
};

class Envelope {
  public:
    Envelope() = default;
    static Envelope square(double duration);
    static Envelope gaussian(double sigma, double duration = 0.0);
    static Envelope flat_top_gaussian(double sigma, double duration, double rise = 0.0);

    double duration() const { return duration_; }
    // dimensionless complex value at t in [0, duration]; 0 outside
    std::complex<double> value(double t) const;
    // integral of the real part over [0, duration]
    double area() const;
    // true if value() is constant on the open interval (a, b)
    bool constant_on(double a, double b) const;
    bool differentiable() const;
    bool drag_wrapped() const { return beta_ != 0.0; }
    double drag_beta() const { return beta_; }
    Envelope with_drag(double beta) const;
    const std::variant<SquareShape, GaussianShape, FlatTopGaussianShape>& shape() const {
        return shape_;
    }

  private:
    double base_value(double t) const;
    double base_derivative(double t) const;

    std::variant<SquareShape, GaussianShape, FlatTopGaussianShape> shape_;
    double duration_ = 0.0;
    double beta_ = 0.0;  // seconds; imaginary part = beta * d(base)/dt
};

// base(t) + i * beta * base'(t); rejects Square bases.
Envelope drag_wrap(const Envelope& env, double beta);

struct Pulse {
    std::string channel;
    Envelope envelope;
    double peak_amp = 0.0;  // angular rad/s
    double detuning = 0.0;  // rad/s relative to the channel frame
    double phase = 0.0;     // radians
    double duration() const { return envelope.duration(); }
};

struct FrameChange {
    std::string channel;
    double delta_phase = 0.0;
};

struct Delay {
    double duration = 0.0;
};

struct Barrier {};

using Instruction = std::variant<Pulse, FrameChange, Delay, Barrier>;

double instruction_duration(const Instruction& inst);

struct TimedInstruction {
    double start = 0.0;
    Instruction inst;
    double end() const { return start + instruction_duration(inst); }
};

class Schedule {
  public:
    // appends at the current end of the instruction's channel (Delay/Barrier:
    // at the end of every channel)
    void append(const Instruction& inst);
    void append_at(double start, const Instruction& inst);
    void append_schedule(const Schedule& other);  // sequential concatenation

    const std::vector<TimedInstruction>& instructions() const { return instructions_; }
    const std::vector<std::string>& channels() const { return channels_; }
    double duration() const;
    double channel_end(const std::string& channel) const;
    bool has_channel(const std::string& channel) const;

    // sum of FrameChange.delta_phase on the channel at times <= t
    double accumulated_phase(const std::string& channel, double t) const;

  private:
    void register_channels(const Instruction& inst);

    std::vector<TimedInstruction> instructions_;
    std::vector<std::string> channels_;
};

struct RotatedXInterrogation {
    Pulse x_pulse;  // pi pulse; phase offset +phi/2 is added by the builder
};

struct CpaInterrogation {
    // frame_only: FrameChange(phi) on every drive channel before copies 2..N.
    // rotated_x: additionally an X_pi pulse before each FrameChange, with its
    // phase advanced by phi/2 relative to the preceding gate copy.
    std::optional<RotatedXInterrogation> rotated_x;
};

Schedule build_cpa_schedule(const Schedule& gate, double phi, int repetitions,
                            const CpaInterrogation& interrogation = {});

// peak amplitude giving a target rotation angle for a resonant drive
double calibrate_area(const Envelope& env, double angle);

}  // namespace offres
