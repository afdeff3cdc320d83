#include "phirl/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace phirl {

Json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    double r = std::strtod(buf, nullptr);
    if (r == 0.0) r = 0.0;  // drop negative zero
    return r;
}

Json round_numbers(const Json& j) {
    if (j.is_number_float()) return number(j.get<double>());
    if (j.is_array()) {
        Json out = Json::array();
        for (const auto& e : j) out.push_back(round_numbers(e));
        return out;
    }
    if (j.is_object()) {
        Json out = Json::object();
        for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = round_numbers(it.value());
        return out;
    }
    return j;
}

Json make_envelope(const std::string& command, Json config, Json results, const std::vector<std::string>& warnings) {
    Json env;
    env["tool_version"] = kToolVersion;
    env["command"] = command;
    env["config"] = round_numbers(config);
    env["results"] = round_numbers(results);
    env["warnings"] = warnings;
    return env;
}

std::string dump_report(const Json& envelope) { return envelope.dump(2) + "\n"; }

}  // namespace phirl
