#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace tvacal {

/// printf "%.17g": enough digits to round-trip any double.
std::string format_double(double value);

/// Serializes JSON like nlohmann::json::dump, except floating-point numbers are
/// rendered with format_double and non-finite numbers become null.
std::string dump_json(const nlohmann::json& value, int indent = -1);

}  // namespace tvacal
