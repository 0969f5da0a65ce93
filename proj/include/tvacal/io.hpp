#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "tvacal/dataset.hpp"

namespace tvacal {

// Dataset file formats.
//
// CSV: header "logit_0,...,logit_{L-1},label", one sample per line, logits as
// decimal floats (written with 17 significant digits), label as a decimal integer.
//
// Binary (little-endian):
//   "CALB" | u16 version = 1 | u16 reserved = 0 | u32 N | u32 L
//   | N*L f32 logits, row-major | N u32 labels
//
// Parse failures throw FormatError carrying the offending row and column.
enum class DatasetFormat { csv, binary };

/// csv for a ".csv" extension, binary otherwise.
DatasetFormat format_for_path(const std::filesystem::path& path);
DatasetFormat parse_format(std::string_view name);

LogitsDataset read_csv(std::istream& in);
void write_csv(const LogitsDataset& dataset, std::ostream& out);

LogitsDataset read_binary(std::istream& in);
/// Logits are narrowed to f32; a value that does not fit throws InvalidInput.
void write_binary(const LogitsDataset& dataset, std::ostream& out);

LogitsDataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
void save_dataset(const LogitsDataset& dataset, const std::filesystem::path& path, DatasetFormat format);

}  // namespace tvacal
