#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tvacal/adapters.hpp"
#include "tvacal/error.hpp"
#include "tvacal/io.hpp"
#include "tvacal/metrics.hpp"
#include "tvacal/serialization.hpp"
#include "tvacal/synthetic.hpp"

namespace py = pybind11;
using namespace tvacal;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<Label, py::array::c_style | py::array::forcecast>;
using FlagArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const DoubleArray& a) {
  if (a.ndim() != 2) throw InvalidInput("expected a 2-d array of logits");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

template <typename T, typename Array>
std::vector<T> to_vector(const Array& a) {
  if (a.ndim() != 1) throw InvalidInput("expected a 1-d array");
  return std::vector<T>(a.data(), a.data() + a.size());
}

LogitsDataset to_dataset(const DoubleArray& logits, const LabelArray& labels) {
  return LogitsDataset(to_matrix(logits), to_vector<Label>(labels));
}

DoubleArray from_matrix(const Matrix& m) {
  const std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())};
  return DoubleArray(shape, m.values().data());
}

template <typename T>
py::array_t<T> from_vector(const std::vector<T>& v) {
  return py::array_t<T>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::tuple dataset_tuple(const LogitsDataset& d) {
  const auto labels = d.labels();
  return py::make_tuple(from_matrix(d.logits()), from_vector(std::vector<Label>(labels.begin(), labels.end())));
}

py::dict summary_dict(const PredictionSummary& s) {
  py::dict d;
  d["predicted"] = from_vector(std::vector<std::uint32_t>(s.predicted.begin(), s.predicted.end()));
  d["confidence"] = from_vector(s.confidence);
  d["correct"] = from_vector(s.correct);
  return d;
}

py::dict report_dict(const MetricsReport& r) {
  py::dict d;
  d["ece"] = r.ece;
  d["ece_equal_mass"] = r.ece_equal_mass;
  d["brier"] = r.brier;
  d["auroc"] = r.auroc ? py::cast(*r.auroc) : py::none();
  d["accuracy"] = r.accuracy;
  d["mean_confidence"] = r.mean_confidence;
  return d;
}

std::optional<DatasetFormat> optional_format(const std::optional<std::string>& name) {
  if (!name) return std::nullopt;
  return parse_format(*name);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Post-hoc confidence calibration";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidInput>(m, "InvalidInput", error.ptr());
  py::register_exception<InvalidParameter>(m, "InvalidParameter", error.ptr());
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<OptimizationFailure>(m, "OptimizationFailure", error.ptr());
  py::register_exception<UndefinedMetric>(m, "UndefinedMetric", error.ptr());
  py::register_exception<DegenerateFit>(m, "DegenerateFit", error.ptr());

  m.def(
      "softmax", [](const DoubleArray& logits, double temperature) {
        return from_matrix(softmax(to_matrix(logits), temperature).matrix());
      },
      py::arg("logits"), py::arg("temperature") = 1.0);

  m.def(
      "predict",
      [](const DoubleArray& probs, const LabelArray& labels) {
        const auto y = to_vector<Label>(labels);
        return summary_dict(predict(ProbabilityMatrix(to_matrix(probs)), y));
      },
      py::arg("probs"), py::arg("labels"));

  m.def(
      "ece",
      [](const DoubleArray& confidence, const FlagArray& correct, std::size_t bins, const std::string& scheme) {
        return ece(to_vector<double>(confidence), to_vector<std::uint8_t>(correct), bins, parse_bin_scheme(scheme));
      },
      py::arg("confidence"), py::arg("correct"), py::arg("bins") = kDefaultEceBins,
      py::arg("scheme") = "equal_width");

  m.def(
      "brier",
      [](const DoubleArray& confidence, const FlagArray& correct) {
        return brier(to_vector<double>(confidence), to_vector<std::uint8_t>(correct));
      },
      py::arg("confidence"), py::arg("correct"));

  m.def(
      "auroc",
      [](const DoubleArray& confidence, const FlagArray& correct) {
        return auroc(to_vector<double>(confidence), to_vector<std::uint8_t>(correct));
      },
      py::arg("confidence"), py::arg("correct"));

  m.def(
      "reliability_diagram",
      [](const DoubleArray& confidence, const FlagArray& correct, std::size_t bins, const std::string& scheme) {
        const auto d = reliability_diagram(to_vector<double>(confidence), to_vector<std::uint8_t>(correct), bins,
                                           parse_bin_scheme(scheme));
        py::list out;
        for (const auto& b : d.bins) {
          py::dict row;
          row["lower"] = b.lower;
          row["upper"] = b.upper;
          row["count"] = b.count;
          row["accuracy"] = b.accuracy;
          row["mean_confidence"] = b.mean_confidence;
          out.append(row);
        }
        return out;
      },
      py::arg("confidence"), py::arg("correct"), py::arg("bins") = kDefaultEceBins,
      py::arg("scheme") = "equal_width");

  m.def(
      "generate",
      [](std::size_t classes, std::size_t samples, double scale, double temperature, std::uint64_t seed) {
        SynthSpec spec{classes, samples, scale, temperature, seed};
        return dataset_tuple(generate(spec));
      },
      py::arg("classes") = 100, py::arg("samples") = 10000, py::arg("scale") = 2.0, py::arg("temperature") = 1.0,
      py::arg("seed") = 0);

  m.def(
      "split",
      [](const DoubleArray& logits, const LabelArray& labels, double fraction, std::uint64_t seed) {
        const auto parts = split(to_dataset(logits, labels), fraction, seed);
        return py::make_tuple(from_vector(parts.calibration_rows), from_vector(parts.test_rows));
      },
      py::arg("logits"), py::arg("labels"), py::arg("fraction") = 0.5, py::arg("seed") = 0,
      "Row indices of the calibration and test parts.");

  m.def(
      "load_dataset",
      [](const std::filesystem::path& path, const std::optional<std::string>& format) {
        return dataset_tuple(load_dataset(path, optional_format(format).value_or(format_for_path(path))));
      },
      py::arg("path"), py::arg("format") = py::none());

  m.def(
      "save_dataset",
      [](const std::filesystem::path& path, const DoubleArray& logits, const LabelArray& labels,
         const std::optional<std::string>& format) {
        save_dataset(to_dataset(logits, labels), path, optional_format(format).value_or(format_for_path(path)));
      },
      py::arg("path"), py::arg("logits"), py::arg("labels"), py::arg("format") = py::none());

  py::class_<Calibrator>(m, "Calibrator")
      .def(py::init([] { return Calibrator::identity(); }))
      .def_static(
          "fit",
          [](const std::string& method, const std::string& mode, const DoubleArray& logits, const LabelArray& labels,
             std::size_t bins, const std::optional<std::string>& scheme, double lam, double learning_rate,
             std::size_t max_iterations, double tolerance, bool normalize, bool init_from_temperature) {
            CalibratorOptions options;
            options.bins = bins;
            if (scheme && *scheme != "auto") options.histogram_scheme = parse_histogram_scheme(*scheme);
            options.scaling.lambda = lam;
            options.scaling.learning_rate = learning_rate;
            options.scaling.max_iterations = max_iterations;
            options.scaling.tolerance = tolerance;
            options.normalize = normalize;
            options.init_from_temperature = init_from_temperature;
            return fit_calibrator(parse_method(method), parse_mode(mode), to_dataset(logits, labels), options);
          },
          py::arg("method"), py::arg("mode"), py::arg("logits"), py::arg("labels"),
          py::arg("bins") = kDefaultHistogramBins, py::arg("scheme") = py::none(), py::arg("lam") = 0.01,
          py::arg("learning_rate") = 0.01, py::arg("max_iterations") = 2000, py::arg("tolerance") = 1e-9,
          py::arg("normalize") = true, py::arg("init_from_temperature") = false)
      .def(
          "apply",
          [](const Calibrator& c, const DoubleArray& logits, const LabelArray& labels) {
            const auto out = apply_calibrator(c, to_dataset(logits, labels));
            py::dict d = summary_dict(out.summary);
            d["raw"] = summary_dict(out.raw);
            d["probabilities"] = out.probabilities ? py::object(from_matrix(*out.probabilities)) : py::none();
            return d;
          },
          py::arg("logits"), py::arg("labels"))
      .def(
          "evaluate",
          [](const Calibrator& c, const DoubleArray& logits, const LabelArray& labels, std::size_t bins) {
            return report_dict(evaluate(to_dataset(logits, labels), c, bins));
          },
          py::arg("logits"), py::arg("labels"), py::arg("bins") = kDefaultEceBins)
      .def_property_readonly("mode", [](const Calibrator& c) { return std::string(to_string(c.mode)); })
      .def_property_readonly("method", [](const Calibrator& c) { return std::string(to_string(c.method)); })
      .def_property_readonly("prediction_preserving", &Calibrator::prediction_preserving)
      .def_readonly("warnings", &Calibrator::warnings)
      .def("to_json", &dump_calibrator)
      .def_static("from_json", &parse_calibrator, py::arg("text"))
      .def("save", [](const Calibrator& c, const std::filesystem::path& p) { save_calibrator(c, p); }, py::arg("path"))
      .def_static("load", [](const std::filesystem::path& p) { return load_calibrator(p); }, py::arg("path"))
      .def("__repr__", [](const Calibrator& c) {
        return "<Calibrator " + std::string(to_string(c.method)) + "/" + std::string(to_string(c.mode)) + ">";
      });
}
