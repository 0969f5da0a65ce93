#include "tvacal/serialization.hpp"

#include <fstream>
#include <sstream>

#include "tvacal/error.hpp"
#include "tvacal/format.hpp"

namespace tvacal {
namespace {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InvalidInput(std::string("calibrator JSON lacks field '") + key + "'");
  return j.at(key);
}

double number(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_number()) throw InvalidInput(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::vector<double> numbers(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_array()) throw InvalidInput(std::string("field '") + key + "' must be an array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw InvalidInput(std::string("field '") + key + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::string text(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_string()) throw InvalidInput(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

json binning_json(const BinningModel& m) {
  return json{{"method", "hb"}, {"scheme", to_string(m.scheme)}, {"edges", m.edges}, {"values", m.values}};
}

BinningModel binning_from_json(const json& j) {
  BinningModel m;
  m.scheme = parse_histogram_scheme(text(j, "scheme"));
  m.edges = numbers(j, "edges");
  m.values = numbers(j, "values");
  m.validate();
  return m;
}

}  // namespace

json to_json(const BinaryModel& model) {
  return std::visit(Overloaded{
                        [](const BinningModel& m) { return binning_json(m); },
                        [](const IsotonicModel& m) {
                          return json{{"method", "iso"}, {"breakpoints", m.breakpoints}, {"values", m.values}};
                        },
                        [](const BetaModel& m) { return json{{"method", "beta"}, {"a", m.a}, {"b", m.b}, {"c", m.c}}; },
                        [](const BbqModel& m) {
                          json members = json::array();
                          for (const auto& member : m.members) members.push_back(binning_json(member));
                          return json{{"method", "bbq"}, {"members", members}, {"weights", m.weights}};
                        },
                        [](const ConstantModel& m) { return json{{"method", "constant"}, {"value", m.value}}; },
                    },
                    model);
}

BinaryModel binary_model_from_json(const json& j) {
  const auto method = text(j, "method");
  BinaryModel out;
  if (method == "hb") {
    out = binning_from_json(j);
  } else if (method == "iso") {
    out = IsotonicModel{numbers(j, "breakpoints"), numbers(j, "values")};
  } else if (method == "beta") {
    out = BetaModel{number(j, "a"), number(j, "b"), number(j, "c")};
  } else if (method == "bbq") {
    BbqModel m;
    const auto& members = field(j, "members");
    if (!members.is_array()) throw InvalidInput("field 'members' must be an array");
    for (const auto& member : members) m.members.push_back(binning_from_json(member));
    m.weights = numbers(j, "weights");
    out = std::move(m);
  } else if (method == "constant") {
    out = ConstantModel{number(j, "value")};
  } else {
    throw InvalidInput("unknown binary model method '" + method + "'");
  }
  validate(out);
  return out;
}

json to_json(const Calibrator& calibrator) {
  json model = std::visit(
      Overloaded{
          [](const std::monostate&) { return json{{"method", "none"}}; },
          [](const TemperatureModel& m) { return json{{"method", "ts"}, {"T", m.temperature}}; },
          [](const VectorModel& m) { return json{{"method", "vs"}, {"v", m.weights}, {"b", m.bias}}; },
          [](const DirichletModel& m) {
            json rows = json::array();
            for (std::size_t k = 0; k < m.weights.rows(); ++k) {
              const auto r = m.weights.row(k);
              rows.push_back(std::vector<double>(r.begin(), r.end()));
            }
            return json{{"method", "dc"}, {"W", rows}, {"b", m.bias}};
          },
          [](const BinaryModel& m) { return to_json(m); },
          [&](const OvaEnsemble& m) {
            json members = json::array();
            for (const auto& member : m.members) members.push_back(to_json(member));
            return json{{"method", to_string(calibrator.method)}, {"normalize", m.normalize}, {"members", members}};
          },
      },
      calibrator.model);
  return json{{"mode", to_string(calibrator.mode)},
              {"method", to_string(calibrator.method)},
              {"prediction_preserving", calibrator.prediction_preserving()},
              {"model", std::move(model)}};
}

Calibrator calibrator_from_json(const json& j) {
  Calibrator c;
  try {
    c.mode = parse_mode(text(j, "mode"));
    c.method = parse_method(text(j, "method"));
  } catch (const InvalidParameter& e) {
    throw InvalidInput(e.what());
  }
  const auto& model = field(j, "model");
  if (c.method == Method::none) {
    c.model = std::monostate{};
  } else if (c.method == Method::ts) {
    c.model = TemperatureModel{number(model, "T")};
  } else if (c.method == Method::vs) {
    c.model = VectorModel{numbers(model, "v"), numbers(model, "b")};
  } else if (c.method == Method::dc) {
    const auto& rows = field(model, "W");
    if (!rows.is_array() || rows.empty()) throw InvalidInput("field 'W' must be a non-empty array of rows");
    const std::size_t L = rows.size();
    std::vector<double> values;
    for (const auto& r : rows) {
      if (!r.is_array() || r.size() != L) throw InvalidInput("field 'W' must be square");
      for (const auto& x : r) {
        if (!x.is_number()) throw InvalidInput("field 'W' must hold numbers");
        values.push_back(x.get<double>());
      }
    }
    c.model = DirichletModel{Matrix(L, L, std::move(values)), numbers(model, "b")};
  } else if (c.mode == Mode::ova) {
    OvaEnsemble e;
    const auto& normalize = field(model, "normalize");
    if (!normalize.is_boolean()) throw InvalidInput("field 'normalize' must be a boolean");
    e.normalize = normalize.get<bool>();
    const auto& members = field(model, "members");
    if (!members.is_array()) throw InvalidInput("field 'members' must be an array");
    for (const auto& member : members) e.members.push_back(binary_model_from_json(member));
    c.model = std::move(e);
  } else {
    c.model = binary_model_from_json(model);
  }
  try {
    c.validate();
  } catch (const InvalidParameter& e) {
    throw InvalidInput(e.what());
  }
  if (j.contains("prediction_preserving")) {
    const auto& flag = j.at("prediction_preserving");
    if (!flag.is_boolean() || flag.get<bool>() != c.prediction_preserving()) {
      throw InvalidInput("prediction_preserving flag disagrees with the method and mode");
    }
  }
  return c;
}

std::string dump_calibrator(const Calibrator& calibrator) { return dump_json(to_json(calibrator), 2) + "\n"; }

Calibrator parse_calibrator(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("calibrator JSON does not parse: ") + e.what());
  }
  return calibrator_from_json(j);
}

void save_calibrator(const Calibrator& calibrator, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  out << dump_calibrator(calibrator);
  if (!out) throw InvalidInput("write to " + path.string() + " failed");
}

Calibrator load_calibrator(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_calibrator(buffer.str());
}

json to_json(const MetricsReport& report) {
  json j{{"ece", report.ece},           {"ece_equal_mass", report.ece_equal_mass},
         {"brier", report.brier},       {"auroc", nullptr},
         {"accuracy", report.accuracy}, {"mean_confidence", report.mean_confidence}};
  if (report.auroc) j["auroc"] = *report.auroc;
  return j;
}

}  // namespace tvacal
