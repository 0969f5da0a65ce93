#include "tvacal/io.hpp"

#include <array>
#include <bit>
#include <type_traits>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "tvacal/error.hpp"
#include "tvacal/format.hpp"

namespace tvacal {
namespace {

constexpr std::array<char, 4> kMagic = {'C', 'A', 'L', 'B'};
constexpr std::uint16_t kVersion = 1;
constexpr auto npos = FormatError::npos;


std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint32_t>;
  auto bits = std::bit_cast<U>(value);
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
bool get_le(std::istream& in, T& value) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint32_t>;
  std::array<unsigned char, sizeof(U)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) return false;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(U{bytes[i]} << (8 * i));
  value = std::bit_cast<T>(bits);
  return true;
}


}  // namespace

DatasetFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? DatasetFormat::csv : DatasetFormat::binary;
}

DatasetFormat parse_format(std::string_view name) {
  if (name == "csv") return DatasetFormat::csv;
  if (name == "binary") return DatasetFormat::binary;
  throw InvalidParameter("unknown dataset format '" + std::string(name) + "' (expected csv or binary)");
}

LogitsDataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing CSV header", npos, npos);
  const auto header = split_fields(trim_cr(line));
  if (header.size() < 3) throw FormatError("CSV header needs at least two logit columns and a label", npos, npos);
  const std::size_t L = header.size() - 1;
  for (std::size_t j = 0; j < L; ++j) {
    if (header[j] != "logit_" + std::to_string(j)) {
      throw FormatError("expected header field 'logit_" + std::to_string(j) + "'", npos, j);
    }
  }
  if (header[L] != "label") throw FormatError("expected final header field 'label'", npos, L);

  std::vector<double> values;
  std::vector<Label> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const auto text = trim_cr(line);
    if (text.empty()) continue;
    const auto fields = split_fields(text);
    if (fields.size() != L + 1) {
      throw FormatError("expected " + std::to_string(L + 1) + " fields, found " + std::to_string(fields.size()),
                        row, npos);
    }
    for (std::size_t j = 0; j < L; ++j) {
      double v = 0.0;
      const auto f = fields[j];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || ptr != f.data() + f.size()) {
        throw FormatError("cannot parse logit '" + std::string(f) + "'", row, j);
      }
      if (!std::isfinite(v)) throw FormatError("non-finite logit", row, j);
      values.push_back(v);
    }
    const auto f = fields[L];
    std::uint64_t label = 0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), label);
    if (ec != std::errc{} || ptr != f.data() + f.size()) {
      throw FormatError("cannot parse label '" + std::string(f) + "'", row, L);
    }
    if (label >= L) {
      throw FormatError("label " + std::to_string(label) + " is not below L = " + std::to_string(L), row, L);
    }
    labels.push_back(static_cast<Label>(label));
    ++row;
  }
  if (row == 0) throw FormatError("CSV has no samples", 0, npos);
  return LogitsDataset(Matrix(row, L, std::move(values)), std::move(labels));
}

void write_csv(const LogitsDataset& dataset, std::ostream& out) {
  const std::size_t L = dataset.num_classes();
  for (std::size_t j = 0; j < L; ++j) out << "logit_" << j << ',';
  out << "label\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double z : dataset.logits().row(i)) out << format_double(z) << ',';
    out << dataset.labels()[i] << '\n';
  }
}

LogitsDataset read_binary(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("bad magic (expected CALB)", npos, npos);
  }
  std::uint16_t version = 0, reserved = 0;
  std::uint32_t n = 0, l = 0;
  if (!get_le(in, version) || !get_le(in, reserved) || !get_le(in, n) || !get_le(in, l)) {
    throw FormatError("truncated header", npos, npos);
  }
  if (version != kVersion) throw FormatError("unsupported version " + std::to_string(version), npos, npos);
  if (reserved != 0) throw FormatError("reserved header field is not zero", npos, npos);
  if (n == 0) throw FormatError("dataset has no samples", npos, npos);
  if (l < 2) throw FormatError("dataset needs at least two classes", npos, npos);
  const std::uint64_t count = std::uint64_t{n} * std::uint64_t{l};
  if (count > std::numeric_limits<std::size_t>::max() / sizeof(double) ||
      count > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError("N*L = " + std::to_string(count) + " overflows", npos, npos);
  }

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(count));
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < l; ++j) {
      float z = 0.0f;
      if (!get_le(in, z)) throw FormatError("truncated logits", i, j);
      if (!std::isfinite(z)) throw FormatError("non-finite logit", i, j);
      values.push_back(static_cast<double>(z));
    }
  }
  std::vector<Label> labels(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!get_le(in, labels[i])) throw FormatError("truncated labels", i, l);
    if (labels[i] >= l) {
      throw FormatError("label " + std::to_string(labels[i]) + " is not below L = " + std::to_string(l), i, l);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after labels", npos, npos);
  return LogitsDataset(Matrix(n, l, std::move(values)), std::move(labels));
}

void write_binary(const LogitsDataset& dataset, std::ostream& out) {
  if (dataset.size() > std::numeric_limits<std::uint32_t>::max() ||
      dataset.num_classes() > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidInput("dataset too large for the binary format");
  }
  out.write(kMagic.data(), kMagic.size());
  put_le(out, kVersion);
  put_le(out, std::uint16_t{0});
  put_le(out, static_cast<std::uint32_t>(dataset.size()));
  put_le(out, static_cast<std::uint32_t>(dataset.num_classes()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double z : dataset.logits().row(i)) {
      const auto f = static_cast<float>(z);
      if (!std::isfinite(f)) throw InvalidInput("logit " + format_double(z) + " does not fit in f32");
      put_le(out, f);
    }
  }
  for (Label y : dataset.labels()) put_le(out, static_cast<std::uint32_t>(y));
}

LogitsDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return format == DatasetFormat::csv ? read_csv(in) : read_binary(in);
}

void save_dataset(const LogitsDataset& dataset, const std::filesystem::path& path, DatasetFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  if (format == DatasetFormat::csv) {
    write_csv(dataset, out);
  } else {
    write_binary(dataset, out);
  }
  if (!out) throw InvalidInput("write to " + path.string() + " failed");
}

}  // namespace tvacal
