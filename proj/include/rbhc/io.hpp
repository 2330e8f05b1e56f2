// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rbhc/agglomerate.hpp"
#include "rbhc/synth.hpp"

namespace rbhc {

/// Parsed numeric table. When a label column was requested it is split out
/// of the matrix into `labels`.
struct LoadedDataset {
  Eigen::MatrixXd points;
  std::vector<std::string> columns;  // names of the point columns
  std::vector<int> labels;           // empty unless a label column was read
  bool has_labels = false;
};

/// Reads a comma-separated table with a mandatory header row. Every value
/// must parse as a finite number; violations are reported with their line
/// number. `label_column`, when given, names the column holding integer
/// labels.
LoadedDataset read_dataset_csv(const std::string& path,
                               const std::optional<std::string>& label_column =
                                   std::nullopt);

/// Writes points (and labels when present) with a header row. Values are
/// printed with 17 significant digits so reads round-trip bit-for-bit.
void write_dataset_csv(const std::string& path, const Eigen::MatrixXd& points,
                       const std::vector<int>* labels);

/// Dendrogram forest as JSON. `merge_posteriors`, when given, must parallel
/// forest.merges and adds a "merge_posterior" field to each merge.
void write_forest_json(const std::string& path, const Forest& forest,
                       const std::vector<double>* merge_posteriors = nullptr);

/// Merge table as CSV: one row per merge (left, right, height, new_size).
void write_linkage_csv(const std::string& path, const Forest& forest);

/// Flat labels as CSV: point index, cluster label.
void write_partition_csv(const std::string& path, const Partition& part);

/// Writes `text` to `path` atomically (temp file + rename).
void write_text_atomic(const std::string& path, const std::string& text);

/// 17-significant-digit decimal rendering (shortest round-trip-safe form
/// we rely on everywhere numbers are serialized).
std::string format_double(double x);

}  // namespace rbhc
