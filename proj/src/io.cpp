#include "offres/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace offres {

namespace {

json envelope_to_json(const Envelope& env) {
    json e;
    if (const auto* s = std::get_if<SquareShape>(&env.shape())) {
        e["shape"] = "square";
        e["duration_ns"] = s->duration / kNs;
    } else if (const auto* g = std::get_if<GaussianShape>(&env.shape())) {
        e["shape"] = "gaussian";
        e["duration_ns"] = g->duration / kNs;
        e["sigma_ns"] = g->sigma / kNs;
    } else {
        const auto& f = std::get<FlatTopGaussianShape>(env.shape());
        e["shape"] = "flat_top_gaussian";
        e["duration_ns"] = f.duration / kNs;
        e["sigma_ns"] = f.sigma / kNs;
        e["rise_ns"] = f.rise / kNs;
    }
    e["drag_beta_ns"] = env.drag_beta() / kNs;
    return e;
}

Envelope envelope_from_json(const json& e) {
    std::string shape = e.at("shape").get<std::string>();
    double duration = e.at("duration_ns").get<double>() * kNs;
    Envelope env;
    if (shape == "square") {
        env = Envelope::square(duration);
    } else if (shape == "gaussian") {
        env = Envelope::gaussian(e.at("sigma_ns").get<double>() * kNs, duration);
    } else if (shape == "flat_top_gaussian") {
        env = Envelope::flat_top_gaussian(e.at("sigma_ns").get<double>() * kNs, duration,
                                          e.value("rise_ns", 0.0) * kNs);
    } else {
        throw std::invalid_argument("unknown envelope shape '" + shape + "'");
    }
    double beta = e.value("drag_beta_ns", 0.0) * kNs;
    if (beta != 0.0) env = drag_wrap(env, beta);
    return env;
}

}  // namespace

json pulse_to_json(const Pulse& p, double t_start) {
    json doc = envelope_to_json(p.envelope);
    json out;
    out["type"] = "pulse";
    out["t_start_ns"] = t_start / kNs;
    out["channel"] = p.channel;
    for (auto& [k, v] : doc.items()) out[k] = v;
    out["amp_mhz"] = p.peak_amp / kMhzToRad;
    out["detuning_mhz"] = p.detuning / kMhzToRad;
    out["phase_rad"] = p.phase;
    return out;
}

Pulse pulse_from_json(const json& doc) {
    Pulse p;
    p.channel = doc.at("channel").get<std::string>();
    p.envelope = envelope_from_json(doc);
    p.peak_amp = doc.at("amp_mhz").get<double>() * kMhzToRad;
    p.detuning = doc.value("detuning_mhz", 0.0) * kMhzToRad;
    p.phase = doc.value("phase_rad", 0.0);
    return p;
}

json schedule_to_json(const Schedule& schedule) {
    json doc;
    doc["channels"] = schedule.channels();
    json insts = json::array();
    for (const auto& ti : schedule.instructions()) {
        if (const auto* p = std::get_if<Pulse>(&ti.inst)) {
            insts.push_back(pulse_to_json(*p, ti.start));
        } else if (const auto* f = std::get_if<FrameChange>(&ti.inst)) {
            json j;
            j["type"] = "frame_change";
            j["t_start_ns"] = ti.start / kNs;
            j["channel"] = f->channel;
            j["delta_phase_rad"] = f->delta_phase;
            insts.push_back(j);
        } else if (const auto* d = std::get_if<Delay>(&ti.inst)) {
            json j;
            j["type"] = "delay";
            j["t_start_ns"] = ti.start / kNs;
            j["duration_ns"] = d->duration / kNs;
            insts.push_back(j);
        } else {
            json j;
            j["type"] = "barrier";
            j["t_start_ns"] = ti.start / kNs;
            insts.push_back(j);
        }
    }
    doc["instructions"] = insts;
    return doc;
}

Schedule schedule_from_json(const json& doc) {
    Schedule s;
    for (const auto& j : doc.at("instructions")) {
        std::string type = j.at("type").get<std::string>();
        double t = j.at("t_start_ns").get<double>() * kNs;
        if (type == "pulse") {
            s.append_at(t, pulse_from_json(j));
        } else if (type == "frame_change") {
            s.append_at(t, FrameChange{j.at("channel").get<std::string>(),
                                       j.at("delta_phase_rad").get<double>()});
        } else if (type == "delay") {
            s.append_at(t, Delay{j.at("duration_ns").get<double>() * kNs});
        } else if (type == "barrier") {
            s.append_at(t, Barrier{});
        } else {
            throw std::invalid_argument("unknown instruction type '" + type + "'");
        }
    }
    return s;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // prefer the shortest representation that round-trips
    for (int prec = 1; prec <= 16; ++prec) {
        char shorter[40];
        std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
        double back = std::strtod(shorter, nullptr);
        if (back == v) return shorter;
    }
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << "\n";
    for (const auto& row : rows) {
        if (row.size() != columns.size())
            throw std::invalid_argument("csv row width differs from the header");
        for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
        out << "\n";
    }
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const json& config) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(config.dump()));
    return buf;
}

}  // namespace offres
