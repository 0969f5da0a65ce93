#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "tvacal/adapters.hpp"
#include "tvacal/metrics.hpp"

namespace tvacal {

// Calibrator JSON:
//   {"mode": "tva|ova|standard", "method": "...", "prediction_preserving": bool, "model": {...}}
// with model objects
//   {"method":"ts","T":t}
//   {"method":"vs","v":[...],"b":[...]}
//   {"method":"dc","W":[[...],...],"b":[...]}
//   {"method":"hb","scheme":"equal_size|equal_mass","edges":[...],"values":[...]}
//   {"method":"iso","breakpoints":[...],"values":[...]}
//   {"method":"beta","a":a,"b":b,"c":c}
//   {"method":"bbq","members":[hb objects],"weights":[...]}
//   {"method":"constant","value":v}
//   {"method":"<binary method>","normalize":bool,"members":[...]}   (ova)
//   {"method":"none"}
// Numbers are written with 17 significant digits.

nlohmann::json to_json(const BinaryModel& model);
BinaryModel binary_model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Calibrator& calibrator);
/// Throws InvalidInput for malformed or inconsistent documents.
Calibrator calibrator_from_json(const nlohmann::json& j);

std::string dump_calibrator(const Calibrator& calibrator);
Calibrator parse_calibrator(const std::string& text);

void save_calibrator(const Calibrator& calibrator, const std::filesystem::path& path);
Calibrator load_calibrator(const std::filesystem::path& path);

/// Flat object: ece, ece_equal_mass, brier, auroc (null when undefined), accuracy, mean_confidence.
nlohmann::json to_json(const MetricsReport& report);

}  // namespace tvacal
