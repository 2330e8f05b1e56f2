// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <vector>

#include "rbhc/cluster.hpp"

namespace rbhc {

/// One merge. Node ids: leaves are 0..n-1; merge i creates node n+i.
/// left < right always; height is the dissimilarity at merge time (heights
/// are not required to be monotone).
struct MergeRecord {
  std::int64_t left = 0;
  std::int64_t right = 0;
  double height = 0.0;
  std::int64_t new_size = 0;
};

/// A dendrogram forest: possibly more than one root when a merge threshold
/// stopped agglomeration early.
struct Forest {
  std::int64_t leaf_count = 0;
  std::vector<MergeRecord> merges;
  std::vector<std::int64_t> roots;  // ascending node id
};

/// Flat clustering: labels[i] is the cluster of leaf i, contiguous from 0
/// in ascending-root-id order.
struct Partition {
  std::vector<int> labels;
  int num_clusters = 0;
};

/// Instrumentation for the complexity contract of a clustering run.
struct RunStats {
  std::int64_t dissim_evals = 0;     // generator-level pair evaluations
  std::int64_t peak_aux_entries = 0; // heap entries (greedy) / chain+live (nn-chain)
  bool pairwise_matrix_allocated = false;
};

/// Greedy agglomeration: repeatedly merges the globally closest pair while
/// its dissimilarity is < lambda. Binary heap with lazy invalidation;
/// O(n^2 log n) time, O(n^2) heap space. Ties break on the lexicographically
/// smallest (min id, max id) pair.
Forest greedy_cluster(const Eigen::MatrixXd& points,
                      const FamilyDescriptor& fam, double lambda,
                      RunStats* stats = nullptr);

/// Thresholded nearest-neighbour-chain agglomeration. Walks
/// nearest-neighbour chains to a reciprocal pair; merges it when its
/// dissimilarity is < lambda, otherwise retires both clusters. O(n) live
/// state, no pairwise matrix. With lambda = +inf this degenerates to the
/// classic full-tree chain algorithm (exactly n-1 merges).
Forest nnchain_cluster(const Eigen::MatrixXd& points,
                       const FamilyDescriptor& fam, double lambda,
                       RunStats* stats = nullptr);

/// One cluster per root.
Partition extract_partition(const Forest& forest);

/// Partition induced by keeping only the first num_merges merges.
Partition partition_at(const Forest& forest, std::int64_t num_merges);

}  // namespace rbhc
