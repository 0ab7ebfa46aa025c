#include "spcr/io.hpp"

#include "spcr/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <system_error>

namespace spcr {

namespace {

using json = nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      return fields;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

std::string where(const std::string& path, std::size_t line_no) { return path + ":" + std::to_string(line_no); }

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const json& data = j.at("data");
  if (static_cast<Index>(data.size()) != rows) fail(ErrorKind::SchemaError, "matrix row count mismatch in model file");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = data.at(static_cast<std::size_t>(i));
    if (static_cast<Index>(row.size()) != cols) fail(ErrorKind::SchemaError, "matrix column count mismatch in model file");
    for (Index j2 = 0; j2 < cols; ++j2) m(i, j2) = row.at(static_cast<std::size_t>(j2)).get<double>();
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j.at(i).get<double>();
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IngestError, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);

  CsvTable table;
  std::vector<double> values;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;

    const auto fields = split_fields(line);
    if (table.header.empty()) {
      for (auto f : fields) {
        if (f.size() >= 2 && f.front() == '"' && f.back() == '"') f = f.substr(1, f.size() - 2);
        if (f.empty()) fail(ErrorKind::IngestError, where(path, line_no) + ": empty column name in header");
        table.header.emplace_back(f);
      }
      continue;
    }
    if (fields.size() != table.header.size())
      fail(ErrorKind::IngestError, where(path, line_no) + ": expected " + std::to_string(table.header.size()) +
                                       " fields, found " + std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string_view f = fields[c];
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v))
        fail(ErrorKind::IngestError, where(path, line_no) + ": column '" + table.header[c] +
                                         "' is not a finite number: '" + std::string(f) + "'");
      values.push_back(v);
    }
    ++rows;
  }
  if (table.header.empty()) fail(ErrorKind::IngestError, path + ": missing header row");
  if (rows == 0) fail(ErrorKind::IngestError, path + ": no data rows");

  const auto cols = static_cast<Index>(table.header.size());
  table.values.resize(static_cast<Index>(rows), cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) table.values(static_cast<Index>(r), c) = values[r * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
  return table;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& values) {
  if (static_cast<Index>(header.size()) != values.cols())
    fail(ErrorKind::InvalidArgument, "CSV header does not match the number of columns");
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
    out << '\n';
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IngestError, "cannot write " + path);
  write_csv(out, header, values);
}

Dataset load_csv(const std::string& path_x, const std::string& path_y) {
  CsvTable x = read_csv(path_x);
  CsvTable y = read_csv(path_y);
  if (x.values.rows() != y.values.rows())
    fail(ErrorKind::IngestError, "row count mismatch: " + path_x + " has " + std::to_string(x.values.rows()) +
                                     " rows, " + path_y + " has " + std::to_string(y.values.rows()));
  return Dataset{std::move(x.header), std::move(y.header), std::move(x.values), std::move(y.values)};
}

std::string serialize_model(const ModelFile& file) {
  const PcrModel& m = file.model;
  json j;
  j["format"] = "spcr-pcr-model";
  j["version"] = kModelFormatVersion;
  j["method"] = file.method;
  j["seed"] = file.seed;
  j["m"] = m.m;
  j["h"] = m.h;
  j["n_train"] = m.n_train;
  j["x_names"] = file.x_names;
  j["y_names"] = file.y_names;
  j["selected_indices"] = m.selected_indices;
  std::vector<std::string> selected;
  for (Index idx : m.selected_indices) selected.push_back(file.x_names.at(static_cast<std::size_t>(idx)));
  j["selected_names"] = selected;
  j["x_column_means"] = vector_to_json(m.x_column_means);
  j["y_means"] = vector_to_json(m.y_means);
  j["eigenvalues"] = vector_to_json(m.eigenvalues);
  j["loadings"] = matrix_to_json(m.loadings);
  j["coefficients"] = matrix_to_json(m.coefficients);
  j["cross"] = matrix_to_json(m.cross);
  return j.dump(1) + "\n";
}

ModelFile deserialize_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "spcr-pcr-model") fail(ErrorKind::SchemaError, "not a PCR model file");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
      fail(ErrorKind::SchemaError, "unsupported model format version " + std::to_string(version));

    ModelFile file;
    file.method = j.at("method").get<std::string>();
    file.seed = j.at("seed").get<std::uint64_t>();
    file.x_names = j.at("x_names").get<std::vector<std::string>>();
    file.y_names = j.at("y_names").get<std::vector<std::string>>();
    PcrModel& m = file.model;
    m.m = j.at("m").get<Index>();
    m.h = j.at("h").get<Index>();
    m.n_train = j.at("n_train").get<Index>();
    m.selected_indices = j.at("selected_indices").get<std::vector<Index>>();
    m.x_column_means = vector_from_json(j.at("x_column_means"));
    m.y_means = vector_from_json(j.at("y_means"));
    m.eigenvalues = vector_from_json(j.at("eigenvalues"));
    m.loadings = matrix_from_json(j.at("loadings"));
    m.coefficients = matrix_from_json(j.at("coefficients"));
    m.cross = matrix_from_json(j.at("cross"));

    const auto p = static_cast<Index>(file.x_names.size());
    const auto q = static_cast<Index>(file.y_names.size());
    bool ok = m.x_column_means.size() == p && m.y_means.size() == q &&
              static_cast<Index>(m.selected_indices.size()) == m.m && m.loadings.rows() == m.m &&
              m.loadings.cols() == m.h && m.coefficients.rows() == m.h && m.coefficients.cols() == q &&
              m.eigenvalues.size() == m.h && m.cross.rows() == m.m && m.cross.cols() == q;
    for (Index idx : m.selected_indices) ok = ok && idx >= 0 && idx < p;
    if (!ok) fail(ErrorKind::SchemaError, "model file has inconsistent dimensions");
    return file;
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("model file is missing a field: ") + e.what());
  }
}

void save_model(const std::string& path, const ModelFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IngestError, "cannot write " + path);
  out << serialize_model(file);
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IngestError, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str());
}

Matrix align_to_model(const ModelFile& file, const CsvTable& table) {
  std::map<std::string, Index> position;
  for (std::size_t c = 0; c < table.header.size(); ++c) position.emplace(table.header[c], static_cast<Index>(c));

  const PcrModel& m = file.model;
  Matrix z = Matrix(table.values.rows(), m.n_predictors());
  for (Index j = 0; j < z.cols(); ++j) z.col(j).setConstant(m.x_column_means(j));

  std::string missing;
  for (Index idx : m.selected_indices) {
    const std::string& name = file.x_names[static_cast<std::size_t>(idx)];
    auto it = position.find(name);
    if (it == position.end()) {
      missing += (missing.empty() ? "" : ", ") + name;
      continue;
    }
    z.col(idx) = table.values.col(it->second);
  }
  if (!missing.empty()) fail(ErrorKind::SchemaError, "predictor file is missing model columns: " + missing);
  return z;
}

}  // namespace spcr
