#include "s5id/io.hpp"

#include "s5id/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace s5id::io {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& key, Index cols_if_empty = 0) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "field '" + key + "' must be an array of rows");
  const auto rows = static_cast<Index>(j.size());
  if (rows == 0) return Matrix(0, cols_if_empty);
  const auto cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw Error(ErrorCode::ParseError, "field '" + key + "' row " + std::to_string(i) + " is ragged");
    }
    for (Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) {
        throw Error(ErrorCode::ParseError,
                    "field '" + key + "' entry (" + std::to_string(i) + "," + std::to_string(c) + ") is not a number");
      }
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

const json& require_field(const json& j, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::ParseError, "missing field '" + key + "'");
  return *it;
}

[[noreturn]] void parse_fail(std::size_t line, std::size_t column, const std::string& msg) {
  throw Error(ErrorCode::ParseError,
              "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg);
}

struct Field {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Field> split_fields(std::string_view line) {
  std::vector<Field> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? line.size() : comma;
    std::string_view field = line.substr(start, end - start);
    std::size_t col = start + 1;
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
      field.remove_prefix(1);
      ++col;
    }
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    out.push_back({field, col});
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_channel(std::string_view text, char prefix, Index expected) {
  if (text.size() < 3 || text[0] != prefix || text[1] != '_') return false;
  Index value = 0;
  auto [ptr, ec] = std::from_chars(text.data() + 2, text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size() && value == expected;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string model_to_json(const StateSpaceModel& model, const Var1Model* input_law) {
  model.validate_dimensions();
  json doc;
  doc["format"] = "s5id-model";
  doc["version"] = 1;
  doc["n"] = model.order();
  doc["m"] = model.inputs();
  doc["d"] = model.outputs();
  doc["A"] = matrix_to_json(model.A);
  doc["B"] = matrix_to_json(model.B);
  doc["C"] = matrix_to_json(model.C);
  doc["K"] = matrix_to_json(model.K);
  doc["innovation_cov"] = matrix_to_json(model.innovation_cov);
  if (input_law) {
    doc["input_law"] = {{"transition", matrix_to_json(input_law->transition)},
                        {"noise_cov", matrix_to_json(input_law->noise_cov)}};
  }
  return doc.dump(2) + "\n";
}

StateSpaceModel model_from_json(const std::string& text, std::optional<Var1Model>* input_law) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "model document must be an object");
  const json* root = &doc;
  if (doc.contains("model") && doc["model"].is_object()) root = &doc["model"];

  StateSpaceModel model;
  const Index m = root->value("m", Index{0});
  model.A = matrix_from_json(require_field(*root, "A"), "A");
  model.B = matrix_from_json(require_field(*root, "B"), "B", m);
  model.C = matrix_from_json(require_field(*root, "C"), "C");
  model.K = matrix_from_json(require_field(*root, "K"), "K");
  model.innovation_cov = matrix_from_json(require_field(*root, "innovation_cov"), "innovation_cov");
  model.validate_dimensions();

  if (input_law) {
    input_law->reset();
    auto it = root->find("input_law");
    if (it != root->end()) {
      Var1Model law;
      law.transition = matrix_from_json(require_field(*it, "transition"), "input_law.transition");
      law.noise_cov = matrix_from_json(require_field(*it, "noise_cov"), "input_law.noise_cov");
      *input_law = std::move(law);
    }
  }
  return model;
}

void write_model(const std::filesystem::path& path, const StateSpaceModel& model, const Var1Model* input_law) {
  write_text(path, model_to_json(model, input_law));
}

StateSpaceModel read_model(const std::filesystem::path& path, std::optional<Var1Model>* input_law) {
  return model_from_json(read_text(path), input_law);
}

std::string dataset_to_csv(const Dataset& data) {
  data.validate();
  const Index m = data.inputs.rows();
  const Index d = data.outputs.rows();
  std::string out = "t";
  for (Index i = 1; i <= m; ++i) out += ",u_" + std::to_string(i);
  for (Index i = 1; i <= d; ++i) out += ",y_" + std::to_string(i);
  out += '\n';
  out.reserve(out.size() + static_cast<std::size_t>(data.length() * (m + d + 1) * 25));
  for (Index t = 0; t < data.length(); ++t) {
    out += std::to_string(t);
    for (Index i = 0; i < m; ++i) (out += ',') += format_double(data.inputs(i, t));
    for (Index i = 0; i < d; ++i) (out += ',') += format_double(data.outputs(i, t));
    out += '\n';
  }
  return out;
}

Dataset dataset_from_csv(const std::string& text) {
  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    while (!rest.empty()) {
      const std::size_t nl = rest.find('\n');
      std::string_view line = rest.substr(0, nl);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
    }
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) parse_fail(1, 1, "empty file, expected header 't,u_1..u_m,y_1..y_d'");

  const auto header = split_fields(lines[0]);
  if (header[0].text != "t") parse_fail(1, header[0].column, "first column must be 't'");
  Index m = 0;
  Index d = 0;
  for (std::size_t k = 1; k < header.size(); ++k) {
    const Field& f = header[k];
    if (d == 0 && parse_channel(f.text, 'u', m + 1)) {
      ++m;
    } else if (parse_channel(f.text, 'y', d + 1)) {
      ++d;
    } else {
      parse_fail(1, f.column, "unexpected header field '" + std::string(f.text) + "'");
    }
  }
  if (m == 0) parse_fail(1, lines[0].size() + 1, "header has no input columns");
  if (d == 0) parse_fail(1, lines[0].size() + 1, "header has no output columns");

  const Index length = static_cast<Index>(lines.size()) - 1;
  if (length < 1) parse_fail(2, 1, "no data rows");
  Dataset data;
  data.inputs.resize(m, length);
  data.outputs.resize(d, length);
  const std::size_t width = static_cast<std::size_t>(1 + m + d);
  for (Index t = 0; t < length; ++t) {
    const std::size_t line_no = static_cast<std::size_t>(t) + 2;
    const auto fields = split_fields(lines[static_cast<std::size_t>(t) + 1]);
    if (fields.size() != width) {
      parse_fail(line_no, fields.back().column,
                 "expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    }
    Index stamp = 0;
    auto [tp, tec] = std::from_chars(fields[0].text.data(), fields[0].text.data() + fields[0].text.size(), stamp);
    if (tec != std::errc() || tp != fields[0].text.data() + fields[0].text.size() || stamp != t) {
      parse_fail(line_no, fields[0].column, "expected time index " + std::to_string(t));
    }
    for (std::size_t k = 1; k < width; ++k) {
      const Field& f = fields[k];
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(f.text.data(), f.text.data() + f.text.size(), value);
      if (f.text.empty() || ec != std::errc() || ptr != f.text.data() + f.text.size()) {
        parse_fail(line_no, f.column, "invalid number '" + std::string(f.text) + "'");
      }
      if (!std::isfinite(value)) parse_fail(line_no, f.column, "non-finite value");
      const Index idx = static_cast<Index>(k) - 1;
      if (idx < m) {
        data.inputs(idx, t) = value;
      } else {
        data.outputs(idx - m, t) = value;
      }
    }
  }
  data.provenance = "csv";
  return data;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  write_text(path, dataset_to_csv(data));
}

Dataset read_dataset(const std::filesystem::path& path) {
  Dataset data = dataset_from_csv(read_text(path));
  data.provenance = path.string();
  return data;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

}  // namespace s5id::io
