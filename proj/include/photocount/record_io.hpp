#pragma once

// ClickRecord serialization.
//
// CSV: '#'-prefixed key=value header lines followed by one timestamp per line,
// printed with 17 significant digits so parsing restores every bit:
//
//   # photocount-record v1
//   # omega=5
//   # delta=0
//   # gamma=1
//   # eta=1
//   # seed=1
//   # stream=0
//   # duration=40
//   0.71307346811324581
//   ...
//
// JSON: {"params": {...}, "seed": ..., "stream": ..., "duration": ..., "times": [...]}

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "photocount/trajectory.hpp"

namespace photocount {

void write_record_csv(std::ostream& out, const ClickRecord& record);
ClickRecord read_record_csv(std::istream& in);

nlohmann::json to_json(const AtomParams& params);
AtomParams params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ClickRecord& record);
ClickRecord record_from_json(const nlohmann::json& j);

/// Dispatches on extension (.json, otherwise CSV). Throws std::runtime_error
/// on I/O failure.
ClickRecord load_record(const std::string& path);

/// Shortest-round-trip-safe decimal form used by every writer.
std::string format_double(double value);

}  // namespace photocount
