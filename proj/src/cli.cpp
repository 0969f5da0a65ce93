#include "tvacal/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>

#include "tvacal/adapters.hpp"
#include "tvacal/error.hpp"
#include "tvacal/format.hpp"
#include "tvacal/io.hpp"
#include "tvacal/serialization.hpp"
#include "tvacal/synthetic.hpp"

namespace tvacal::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public Error {
 public:
  using Error::Error;
};

DatasetFormat resolve_format(const std::string& flag, const fs::path& path) {
  return flag == "auto" ? format_for_path(path) : parse_format(flag);
}

// Writes to `path`, or to `out` when the path is empty or "-".
void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& write) {
  if (path.empty() || path == "-") {
    write(out);
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw InvalidInput("cannot open " + path + " for writing");
  write(file);
  if (!file) throw InvalidInput("write to " + path + " failed");
}

Calibrator calibrator_or_identity(const std::string& path) {
  return path.empty() ? Calibrator::identity() : load_calibrator(path);
}

const std::vector<std::string> kFormats{"auto", "csv", "binary"};

struct SynthArgs {
  SynthSpec spec;
  std::string output;
  std::string format = "auto";
};

struct SplitArgs {
  std::string input;
  std::string format = "auto";
  double fraction = 0.5;
  std::uint64_t seed = 0;
  std::string cal_output;
  std::string test_output;
};

struct FitArgs {
  std::string input;
  std::string format = "auto";
  std::string method;
  std::string mode;
  std::string output;
  std::size_t bins = kDefaultHistogramBins;
  std::string scheme = "auto";
  double lambda = 0.01;
  double learning_rate = 0.01;
  std::size_t max_iterations = 2000;
  double tolerance = 1e-9;
  std::string init = "default";
  bool no_normalize = false;
  std::vector<std::size_t> bbq_candidates;
};

struct ApplyArgs {
  std::string input;
  std::string format = "auto";
  std::string calibrator;
  std::string output;
};

struct EvalArgs {
  std::string input;
  std::string format = "auto";
  std::string calibrator;
  std::size_t bins = kDefaultEceBins;
  std::string output;
};

struct DiagramArgs {
  std::string input;
  std::string format = "auto";
  std::string calibrator;
  std::size_t bins = kDefaultEceBins;
  std::string scheme = "equal_width";
  std::string output;
};

void cmd_synth(const SynthArgs& a) {
  save_dataset(generate(a.spec), a.output, resolve_format(a.format, a.output));
}

void cmd_split(const SplitArgs& a) {
  const auto data = load_dataset(a.input, resolve_format(a.format, a.input));
  const auto parts = split(data, a.fraction, a.seed);
  save_dataset(parts.calibration, a.cal_output, resolve_format(a.format, a.cal_output));
  save_dataset(parts.test, a.test_output, resolve_format(a.format, a.test_output));
}

void cmd_fit(const FitArgs& a, std::ostream& err) {
  Method method;
  Mode mode;
  try {
    method = parse_method(a.method);
    mode = parse_mode(a.mode);
  } catch (const InvalidParameter& e) {
    throw UsageError(e.what());
  }
  if (method == Method::none || !is_valid_combination(method, mode)) {
    throw UsageError("invalid --method/--mode pair " + a.method + "/" + a.mode +
                     "; valid pairs: " + valid_combinations());
  }
  CalibratorOptions options;
  options.scaling.lambda = a.lambda;
  options.scaling.learning_rate = a.learning_rate;
  options.scaling.max_iterations = a.max_iterations;
  options.scaling.tolerance = a.tolerance;
  try {
    options.scaling.validate();
  } catch (const InvalidParameter& e) {
    throw UsageError(e.what());
  }
  options.bins = a.bins;
  if (a.scheme != "auto") options.histogram_scheme = parse_histogram_scheme(a.scheme);
  options.bbq_candidates = a.bbq_candidates;
  options.normalize = !a.no_normalize;
  options.init_from_temperature = a.init == "ts";

  const auto data = load_dataset(a.input, resolve_format(a.format, a.input));
  const auto calibrator = fit_calibrator(method, mode, data, options);
  for (const auto& w : calibrator.warnings) err << "warning: " << w << '\n';
  save_calibrator(calibrator, a.output);
}

void cmd_apply(const ApplyArgs& a, std::ostream& out) {
  const auto data = load_dataset(a.input, resolve_format(a.format, a.input));
  const auto result = apply_calibrator(calibrator_or_identity(a.calibrator), data);
  emit(a.output, out, [&](std::ostream& os) {
    os << "index,predicted,raw_confidence,calibrated_confidence,correct\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
      os << i << ',' << result.summary.predicted[i] << ',' << format_double(result.raw.confidence[i]) << ','
         << format_double(result.summary.confidence[i]) << ',' << int{result.summary.correct[i]} << '\n';
    }
  });
}

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto data = load_dataset(a.input, resolve_format(a.format, a.input));
  const auto calibrator = calibrator_or_identity(a.calibrator);
  const auto result = apply_calibrator(calibrator, data);
  nlohmann::json report{{"method", to_string(calibrator.method)},
                        {"mode", to_string(calibrator.mode)},
                        {"bins", a.bins},
                        {"samples", data.size()},
                        {"uncalibrated", to_json(summarize(result.raw, a.bins))},
                        {"calibrated", to_json(summarize(result.summary, a.bins))}};
  emit(a.output, out, [&](std::ostream& os) { os << dump_json(report, 2) << '\n'; });
}

void cmd_diagram(const DiagramArgs& a, std::ostream& out) {
  const auto data = load_dataset(a.input, resolve_format(a.format, a.input));
  const auto result = apply_calibrator(calibrator_or_identity(a.calibrator), data);
  const auto diagram =
      reliability_diagram(result.summary.confidence, result.summary.correct, a.bins, parse_bin_scheme(a.scheme));
  emit(a.output, out, [&](std::ostream& os) { write_diagram_csv(diagram, os); });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Post-hoc confidence calibration from exported logits", "tvacal"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a seeded synthetic logits dataset");
  s->add_option("--classes", synth.spec.classes, "Number of classes L")->check(CLI::Range(2ul, 1ul << 24));
  s->add_option("--samples", synth.spec.samples, "Number of samples N")->check(CLI::PositiveNumber);
  s->add_option("--scale", synth.spec.scale, "Standard deviation of the latent logits")->check(CLI::PositiveNumber);
  s->add_option("--tau", synth.spec.temperature, "Distortion temperature (logits are multiplied by it)")
      ->check(CLI::PositiveNumber);
  s->add_option("--seed", synth.spec.seed, "Generator seed");
  s->add_option("--output", synth.output, "Dataset file to write")->required();
  s->add_option("--format", synth.format, "Dataset format (auto: csv for .csv, else binary)")
      ->check(CLI::IsMember(kFormats));

  SplitArgs sp;
  auto* p = app.add_subcommand("split", "Split a dataset into calibration and test parts");
  p->add_option("--input", sp.input, "Dataset to split")->required();
  p->add_option("--format", sp.format, "Dataset format for all files")->check(CLI::IsMember(kFormats));
  p->add_option("--fraction", sp.fraction, "Calibration fraction; floor(fraction * N) rows go to calibration")
      ->check(CLI::Range(0.0, 1.0));
  p->add_option("--seed", sp.seed, "Shuffle seed");
  p->add_option("--cal-output", sp.cal_output, "Calibration part")->required();
  p->add_option("--test-output", sp.test_output, "Test part")->required();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit a calibrator and write it as JSON");
  f->add_option("--input", fit.input, "Calibration dataset")->required();
  f->add_option("--format", fit.format, "Dataset format")->check(CLI::IsMember(kFormats));
  f->add_option("--method", fit.method, "ts|vs|dc|hb|iso|beta|bbq")
      ->required()
      ->check(CLI::IsMember({"ts", "vs", "dc", "hb", "iso", "beta", "bbq"}));
  f->add_option("--mode", fit.mode, "standard|ova|tva")->required()->check(CLI::IsMember({"standard", "ova", "tva"}));
  f->add_option("--output", fit.output, "Calibrator JSON to write")->required();
  f->add_option("--bins", fit.bins, "Histogram binning bin count")->check(CLI::PositiveNumber);
  f->add_option("--scheme", fit.scheme, "Histogram binning scheme (auto picks the better on the calibration set)")
      ->check(CLI::IsMember({"auto", "equal_size", "equal_mass"}));
  f->add_option("--lambda", fit.lambda, "Regularization strength for vs/dc")->check(CLI::NonNegativeNumber);
  f->add_option("--lr", fit.learning_rate, "Gradient descent learning rate")->check(CLI::PositiveNumber);
  f->add_option("--max-iter", fit.max_iterations, "Maximum gradient descent iterations")->check(CLI::PositiveNumber);
  f->add_option("--tol", fit.tolerance, "Stop when the objective changes by less than this")
      ->check(CLI::PositiveNumber);
  f->add_option("--init", fit.init, "vs/dc initialization: default (identity) or ts (1/T from temperature scaling)")
      ->check(CLI::IsMember({"default", "ts"}));
  f->add_flag("--no-normalize", fit.no_normalize, "ova: do not renormalize calibrated class probabilities");
  f->add_option("--bbq-candidates", fit.bbq_candidates, "BBQ bin counts (default: around cbrt(N))")
      ->check(CLI::PositiveNumber);

  ApplyArgs ap;
  auto* a = app.add_subcommand("apply", "Write per-sample predictions and calibrated confidences as CSV");
  a->add_option("--input", ap.input, "Dataset")->required();
  a->add_option("--format", ap.format, "Dataset format")->check(CLI::IsMember(kFormats));
  a->add_option("--calibrator", ap.calibrator, "Calibrator JSON (default: identity)");
  a->add_option("--output", ap.output, "CSV to write (default: stdout)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Write uncalibrated and calibrated metrics as JSON");
  e->add_option("--input", ev.input, "Dataset")->required();
  e->add_option("--format", ev.format, "Dataset format")->check(CLI::IsMember(kFormats));
  e->add_option("--calibrator", ev.calibrator, "Calibrator JSON (default: identity)");
  e->add_option("--bins", ev.bins, "ECE bin count")->check(CLI::PositiveNumber);
  e->add_option("--output", ev.output, "JSON to write (default: stdout)");

  DiagramArgs dg;
  auto* d = app.add_subcommand("diagram", "Write reliability-diagram bins as CSV");
  d->add_option("--input", dg.input, "Dataset")->required();
  d->add_option("--format", dg.format, "Dataset format")->check(CLI::IsMember(kFormats));
  d->add_option("--calibrator", dg.calibrator, "Calibrator JSON (default: identity)");
  d->add_option("--bins", dg.bins, "Bin count")->check(CLI::PositiveNumber);
  d->add_option("--scheme", dg.scheme, "equal_width or equal_mass")
      ->check(CLI::IsMember({"equal_width", "equal_mass"}));
  d->add_option("--output", dg.output, "CSV to write (default: stdout)");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& arg : args) argv.push_back(arg.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*s) cmd_synth(synth);
    if (*p) cmd_split(sp);
    if (*f) cmd_fit(fit, err);
    if (*a) cmd_apply(ap, out);
    if (*e) cmd_eval(ev, out);
    if (*d) cmd_diagram(dg, out);
  } catch (const UsageError& error) {
    err << "usage error: " << error.what() << '\n';
    return kExitUsage;
  } catch (const InvalidParameter& error) {
    err << "usage error: " << error.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& error) {
    err << "error: " << error.what() << '\n';
    return kExitDataError;
  }
  return kExitOk;
}

}  // namespace tvacal::cli
