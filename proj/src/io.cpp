// Apache License, Version 2.0, refer to LICENSE.txt

#include "rbhc/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rbhc {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_number(const std::string& field, std::size_t line_no,
                    const std::string& column) {
  const std::string text = strip(field);
  if (text.empty()) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": empty value in column '" + column + "'");
  }
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || errno == ERANGE ||
      !std::isfinite(value)) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": value '" + text + "' in column '" + column +
                             "' is not a finite number");
  }
  return value;
}

}  // namespace

LoadedDataset read_dataset_csv(const std::string& path,
                               const std::optional<std::string>& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("'" + path + "' is empty (header row required)");
  }
  const std::vector<std::string> header = split_csv_line(line);
  std::vector<std::string> names;
  names.reserve(header.size());
  for (const std::string& h : header) names.push_back(strip(h));

  std::ptrdiff_t label_idx = -1;
  if (label_column.has_value()) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (names[j] == *label_column) {
        label_idx = static_cast<std::ptrdiff_t>(j);
        break;
      }
    }
    if (label_idx < 0) {
      throw std::runtime_error("'" + path + "' has no column named '" +
                               *label_column + "'");
    }
  }

  LoadedDataset out;
  out.has_labels = label_idx >= 0;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (static_cast<std::ptrdiff_t>(j) != label_idx) {
      out.columns.push_back(names[j]);
    }
  }
  if (out.columns.empty()) {
    throw std::runtime_error("'" + path + "' has no data columns");
  }

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != names.size()) {
      throw std::runtime_error(
          "line " + std::to_string(line_no) + ": expected " +
          std::to_string(names.size()) + " fields, found " +
          std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(names.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const double v = parse_number(fields[j], line_no, names[j]);
      if (static_cast<std::ptrdiff_t>(j) == label_idx) {
        const double r = std::round(v);
        if (std::abs(v - r) > 1e-9) {
          throw std::runtime_error("line " + std::to_string(line_no) +
                                   ": label '" + fields[j] +
                                   "' is not an integer");
        }
        out.labels.push_back(static_cast<int>(r));
      } else {
        row.push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("'" + path + "' has no data rows");

  out.points.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(out.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
    }
  }
  return out;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path parent = target.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open '" + tmp.string() +
                               "' for writing");
    }
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target);
}

void write_dataset_csv(const std::string& path, const Eigen::MatrixXd& points,
                       const std::vector<int>* labels) {
  if (labels != nullptr &&
      static_cast<Eigen::Index>(labels->size()) != points.rows()) {
    throw std::invalid_argument("label count does not match row count");
  }
  std::string out;
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    if (j > 0) out += ',';
    out += "x" + std::to_string(j);
  }
  if (labels != nullptr) out += ",label";
  out += '\n';
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(points(i, j));
    }
    if (labels != nullptr) {
      out += ',';
      out += std::to_string((*labels)[static_cast<std::size_t>(i)]);
    }
    out += '\n';
  }
  write_text_atomic(path, out);
}

void write_forest_json(const std::string& path, const Forest& forest,
                       const std::vector<double>* merge_posteriors) {
  if (merge_posteriors != nullptr &&
      merge_posteriors->size() != forest.merges.size()) {
    throw std::invalid_argument("posterior count does not match merge count");
  }
  nlohmann::json doc;
  doc["leaf_count"] = forest.leaf_count;
  doc["roots"] = forest.roots;
  nlohmann::json merges = nlohmann::json::array();
  for (std::size_t i = 0; i < forest.merges.size(); ++i) {
    const MergeRecord& rec = forest.merges[i];
    nlohmann::json m;
    m["left"] = rec.left;
    m["right"] = rec.right;
    m["height"] = rec.height;
    m["new_size"] = rec.new_size;
    if (merge_posteriors != nullptr) m["merge_posterior"] = (*merge_posteriors)[i];
    merges.push_back(std::move(m));
  }
  doc["merges"] = std::move(merges);
  write_text_atomic(path, doc.dump(2) + "\n");
}

void write_linkage_csv(const std::string& path, const Forest& forest) {
  std::string out = "left,right,height,new_size\n";
  for (const MergeRecord& rec : forest.merges) {
    out += std::to_string(rec.left) + ',' + std::to_string(rec.right) + ',' +
           format_double(rec.height) + ',' + std::to_string(rec.new_size) +
           '\n';
  }
  write_text_atomic(path, out);
}

void write_partition_csv(const std::string& path, const Partition& part) {
  std::string out = "index,label\n";
  for (std::size_t i = 0; i < part.labels.size(); ++i) {
    out += std::to_string(i) + ',' + std::to_string(part.labels[i]) + '\n';
  }
  write_text_atomic(path, out);
}

}  // namespace rbhc
