#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "offres/pulse.hpp"

// Structured-text serialization: schedules round-trip through JSON documents,
// sweep grids land in CSV (comma separator, '.' decimal, mandatory header).
// Times serialize in ns and amplitudes in linear MHz; conversion to angular
// rad/s happens once at this boundary.

namespace offres {

using json = nlohmann::ordered_json;

json schedule_to_json(const Schedule& schedule);
Schedule schedule_from_json(const json& doc);

json pulse_to_json(const Pulse& p, double t_start);
Pulse pulse_from_json(const json& doc);

// column-major-stable CSV: one header row, then one row per record
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

std::string format_double(double v);  // shortest round-trip representation

std::uint64_t fnv1a64(const std::string& data);
std::string config_hash(const json& config);  // hex digest of the normalized text

inline constexpr double kMhzToRad = 2.0 * 3.14159265358979323846 * 1e6;
inline constexpr double kNs = 1e-9;

}  // namespace offres
