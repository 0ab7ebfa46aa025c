#pragma once

#include "spcr/pcr.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace spcr {

/// Numeric CSV with a mandatory header row. Comma separated, '.' decimal.
struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& values);
void write_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& values);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

struct Dataset {
  std::vector<std::string> x_names;
  std::vector<std::string> y_names;
  Matrix x;
  Matrix y;
};

/// Loads a predictor and a response file; both must have the same row count.
Dataset load_csv(const std::string& path_x, const std::string& path_y);

/// A PcrModel together with the names of the predictor space it was fitted
/// in, so new data can be matched by column name.
struct ModelFile {
  PcrModel model;
  std::vector<std::string> x_names;  // length p
  std::vector<std::string> y_names;  // length q
  std::string method;
  std::uint64_t seed = 0;
};

inline constexpr int kModelFormatVersion = 1;

std::string serialize_model(const ModelFile& file);
ModelFile deserialize_model(const std::string& text);
void save_model(const std::string& path, const ModelFile& file);
ModelFile load_model(const std::string& path);

/// Arranges the columns of `table` into the model's predictor order. Columns
/// the model does not use are filled with the training means. Throws
/// SchemaError naming every selected column that is missing.
Matrix align_to_model(const ModelFile& file, const CsvTable& table);

}  // namespace spcr
