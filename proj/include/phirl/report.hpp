#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace phirl {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

// Rounds to 12 significant digits; non-finite values become null.
Json number(double v);
// Recursively applies number() to every floating-point value.
Json round_numbers(const Json& j);

Json make_envelope(const std::string& command, Json config, Json results, const std::vector<std::string>& warnings);

// Pretty-printed with two-space indent and a trailing newline.
std::string dump_report(const Json& envelope);

}  // namespace phirl
