#include "pjml/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace pjml {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (char ch : line) {
    if (ch == sep) {
      parts.push_back(current);
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  parts.push_back(current);
  return parts;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::io, "cannot open file: " + path);
  return in;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::io, "cannot write file: " + path);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buffer[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buffer, sizeof(buffer), "%.*g", precision, v);
    if (std::strtod(buffer, nullptr) == v) break;
  }
  return buffer;
}

ResponseMatrix load_triplets(const std::string& path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  long line_number = 0;

  if (!std::getline(in, line)) throw EmptyDataError("empty file: " + path);
  ++line_number;
  {
    std::vector<std::string> header = split(strip_cr(line), ',');
    if (header.size() != 3 || header[0] != "person_id" || header[1] != "item_id" ||
        header[2] != "response") {
      throw ParseError("expected header person_id,item_id,response", line_number);
    }
  }

  std::vector<Cell> cells;
  std::vector<std::string> person_labels, item_labels;
  std::unordered_map<std::string, std::int32_t> person_index, item_index;
  std::unordered_map<std::int64_t, long> seen;

  while (std::getline(in, line)) {
    ++line_number;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> parts = split(line, ',');
    if (parts.size() != 3) throw ParseError("expected 3 fields", line_number);

    auto intern = [](std::unordered_map<std::string, std::int32_t>& index,
                     std::vector<std::string>& labels, const std::string& id) {
      auto [it, inserted] = index.try_emplace(id, static_cast<std::int32_t>(labels.size()));
      if (inserted) labels.push_back(id);
      return it->second;
    };
    std::int32_t pi = intern(person_index, person_labels, parts[0]);
    std::int32_t ii = intern(item_index, item_labels, parts[1]);

    std::uint8_t value;
    if (parts[2] == "0") {
      value = 0;
    } else if (parts[2] == "1") {
      value = 1;
    } else {
      throw ParseError("response must be 0 or 1, got '" + parts[2] + "'", line_number);
    }

    std::int64_t key = static_cast<std::int64_t>(pi) << 32 | static_cast<std::uint32_t>(ii);
    auto [it, inserted] = seen.try_emplace(key, line_number);
    if (!inserted) {
      throw ParseError("duplicate cell (" + parts[0] + ", " + parts[1] + "), first seen at line " +
                           std::to_string(it->second),
                       line_number);
    }
    cells.push_back({pi, ii, value});
  }

  if (cells.empty()) throw EmptyDataError("no data rows in " + path);
  ResponseMatrix out = ResponseMatrix::from_cells(static_cast<int>(person_labels.size()),
                                                  static_cast<int>(item_labels.size()),
                                                  std::move(cells));
  out.set_labels(std::move(person_labels), std::move(item_labels));
  return out;
}

ResponseMatrix load_dense(const std::string& path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  long line_number = 0;
  std::vector<Cell> cells;
  int rows = 0;
  long columns = -1;

  while (std::getline(in, line)) {
    ++line_number;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> parts = split(line, ',');
    if (columns < 0) {
      columns = static_cast<long>(parts.size());
    } else if (static_cast<long>(parts.size()) != columns) {
      throw ParseError("ragged row: expected " + std::to_string(columns) + " cells, got " +
                           std::to_string(parts.size()),
                       line_number);
    }
    for (long j = 0; j < columns; ++j) {
      const std::string& cell = parts[static_cast<std::size_t>(j)];
      if (cell == "NA") continue;
      if (cell == "0" || cell == "1") {
        cells.push_back({rows, static_cast<std::int32_t>(j),
                         static_cast<std::uint8_t>(cell == "1" ? 1 : 0)});
      } else {
        throw ParseError("cell must be 0, 1, or NA, got '" + cell + "'", line_number);
      }
    }
    ++rows;
  }
  return ResponseMatrix::from_cells(rows, columns < 0 ? 0 : static_cast<int>(columns),
                                    std::move(cells));
}

void save_triplets(const ResponseMatrix& U, const std::string& path) {
  std::ofstream out = open_for_write(path);
  out << "person_id,item_id,response\n";
  for (const Cell& c : U.cells()) {
    out << U.person_label(c.person) << ',' << U.item_label(c.item) << ','
        << static_cast<int>(c.value) << '\n';
  }
}

void save_matrix(const Mat& values, const std::vector<std::string>& row_labels,
                 const std::string& id_header, const std::string& path) {
  if (!row_labels.empty() && static_cast<Eigen::Index>(row_labels.size()) != values.rows()) {
    throw DimensionError("row label count does not match matrix rows");
  }
  std::ofstream out = open_for_write(path);
  out << id_header;
  for (Eigen::Index c = 0; c < values.cols(); ++c) out << ",col" << c;
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out << (row_labels.empty() ? std::to_string(i) : row_labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << ',' << format_double(values(i, c));
    out << '\n';
  }
}

std::pair<Mat, std::vector<std::string>> load_matrix(const std::string& path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  long line_number = 0;
  if (!std::getline(in, line)) throw EmptyDataError("empty file: " + path);
  ++line_number;
  const long columns = static_cast<long>(split(strip_cr(line), ',').size()) - 1;
  if (columns < 0) throw ParseError("missing header", line_number);

  std::vector<std::string> labels;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_number;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> parts = split(line, ',');
    if (static_cast<long>(parts.size()) != columns + 1) {
      throw ParseError("expected " + std::to_string(columns + 1) + " fields", line_number);
    }
    labels.push_back(parts[0]);
    for (long c = 0; c < columns; ++c) {
      const std::string& field = parts[static_cast<std::size_t>(c + 1)];
      char* end = nullptr;
      double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0') {
        throw ParseError("not a number: '" + field + "'", line_number);
      }
      values.push_back(v);
    }
  }
  Mat out(static_cast<Eigen::Index>(labels.size()), columns);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      out(i, c) = values[static_cast<std::size_t>(i * columns + c)];
    }
  }
  return {std::move(out), std::move(labels)};
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::io, "cannot open file: " + path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buffer[4096];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    for (std::streamsize k = 0; k < in.gcount(); ++k) {
      hash ^= static_cast<unsigned char>(buffer[k]);
      hash *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  return hex;
}

void RunManifest::write(const std::string& path) const {
  nlohmann::ordered_json doc;
  doc["subcommand"] = subcommand;
  doc["version"] = version;
  doc["seed"] = seed;
  doc["config"] = config;
  doc["inputs"] = inputs;
  doc["timings"] = timings;
  std::ofstream out = open_for_write(path);
  out << doc.dump(2) << '\n';
}

}  // namespace pjml
