// Apache License, Version 2.0, refer to LICENSE.txt

#include "rbhc/agglomerate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace rbhc {
namespace {

struct Node {
  ClusterSummary summary;
  double f = 0.0;  // cached size * generator(mean_stat)
  bool alive = false;
};

struct NodeTable {
  std::vector<Node> nodes;
  std::vector<std::int64_t> live;     // live node ids, unordered
  std::vector<std::int64_t> live_pos; // id -> index in `live`, or -1
  SuffStat scratch;
  const FamilyDescriptor* fam = nullptr;
  RunStats* stats = nullptr;

  void init(const Eigen::MatrixXd& points, const FamilyDescriptor& f,
            RunStats* s) {
    fam = &f;
    stats = s;
    const std::int64_t n = points.rows();
    if (n < 1) throw std::invalid_argument("clustering needs at least one point");
    const std::int64_t capacity = 2 * n - 1;
    nodes.resize(static_cast<std::size_t>(capacity));
    live_pos.assign(static_cast<std::size_t>(capacity), -1);
    live.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      Node& node = nodes[static_cast<std::size_t>(i)];
      node.summary = summary_from_point(*fam, points.row(i), i);
      node.f = static_cast<double>(node.summary.size) *
               generator(*fam, node.summary.mean_stat);
      node.alive = true;
      live_pos[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(live.size());
      live.push_back(i);
    }
  }

  void remove_live(std::int64_t id) {
    const std::int64_t pos = live_pos[static_cast<std::size_t>(id)];
    const std::int64_t last = live.back();
    live[static_cast<std::size_t>(pos)] = last;
    live_pos[static_cast<std::size_t>(last)] = pos;
    live.pop_back();
    live_pos[static_cast<std::size_t>(id)] = -1;
    nodes[static_cast<std::size_t>(id)].alive = false;
  }

  double distance(std::int64_t a, std::int64_t b) {
    if (stats != nullptr) ++stats->dissim_evals;
    const Node& na = nodes[static_cast<std::size_t>(a)];
    const Node& nb = nodes[static_cast<std::size_t>(b)];
    return detail::dissimilarity_cached(*fam, na.summary, nb.summary, na.f,
                                        nb.f, scratch);
  }
};

void validate_lambda(double lambda) {
  if (std::isnan(lambda) || lambda < 0.0) {
    throw std::invalid_argument("merge threshold must be >= 0 (or +inf)");
  }
}

std::vector<std::int64_t> collect_roots(const NodeTable& table) {
  std::vector<std::int64_t> roots(table.live.begin(), table.live.end());
  std::sort(roots.begin(), roots.end());
  return roots;
}

void note_aux(RunStats* stats, std::int64_t entries) {
  if (stats != nullptr && entries > stats->peak_aux_entries) {
    stats->peak_aux_entries = entries;
  }
}

}  // namespace

Forest greedy_cluster(const Eigen::MatrixXd& points,
                      const FamilyDescriptor& fam, double lambda,
                      RunStats* stats) {
  validate_lambda(lambda);
  NodeTable table;
  table.init(points, fam, stats);
  const std::int64_t n = points.rows();

  Forest forest;
  forest.leaf_count = n;
  forest.merges.reserve(static_cast<std::size_t>(n > 0 ? n - 1 : 0));

  // Min-heap over (dissimilarity, min id, max id): equal dissimilarities
  // resolve to the lexicographically smallest id pair.
  using Entry = std::tuple<double, std::int64_t, std::int64_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      heap.emplace(table.distance(i, j), i, j);
    }
  }
  note_aux(stats, static_cast<std::int64_t>(heap.size()));

  std::int64_t next_id = n;
  while (!heap.empty()) {
    const auto [d, a, b] = heap.top();
    heap.pop();
    if (!table.nodes[static_cast<std::size_t>(a)].alive ||
        !table.nodes[static_cast<std::size_t>(b)].alive) {
      continue;  // stale entry for a consumed cluster
    }
    if (!(d < lambda)) break;

    const std::int64_t id = next_id++;
    Node& merged = table.nodes[static_cast<std::size_t>(id)];
    merged.summary =
        merge_summaries(table.nodes[static_cast<std::size_t>(a)].summary,
                        table.nodes[static_cast<std::size_t>(b)].summary);
    merged.f = static_cast<double>(merged.summary.size) *
               generator(fam, merged.summary.mean_stat);
    merged.alive = true;
    table.remove_live(a);
    table.remove_live(b);

    forest.merges.push_back(MergeRecord{std::min(a, b), std::max(a, b), d,
                                        merged.summary.size});

    for (const std::int64_t other : table.live) {
      heap.emplace(table.distance(id, other), std::min(id, other),
                   std::max(id, other));
    }
    table.live_pos[static_cast<std::size_t>(id)] =
        static_cast<std::int64_t>(table.live.size());
    table.live.push_back(id);
    note_aux(stats, static_cast<std::int64_t>(heap.size()));
  }

  forest.roots = collect_roots(table);
  return forest;
}

Forest nnchain_cluster(const Eigen::MatrixXd& points,
                       const FamilyDescriptor& fam, double lambda,
                       RunStats* stats) {
  validate_lambda(lambda);
  NodeTable table;
  table.init(points, fam, stats);
  const std::int64_t n = points.rows();

  Forest forest;
  forest.leaf_count = n;
  forest.merges.reserve(static_cast<std::size_t>(n > 0 ? n - 1 : 0));

  std::vector<std::int64_t> roots;  // retired clusters, in retirement order
  std::vector<std::int64_t> chain;
  std::vector<char> in_chain(table.nodes.size(), 0);
  chain.reserve(static_cast<std::size_t>(n));
  std::int64_t next_id = n;

  auto retire = [&](std::int64_t id) {
    roots.push_back(id);
    table.remove_live(id);
  };
  auto clear_chain = [&] {
    for (const std::int64_t id : chain) in_chain[static_cast<std::size_t>(id)] = 0;
    chain.clear();
  };

  while (!table.live.empty()) {
    if (chain.empty()) {
      if (table.live.size() == 1) {
        retire(table.live.front());
        break;
      }
      const std::int64_t start =
          *std::min_element(table.live.begin(), table.live.end());
      chain.push_back(start);
      in_chain[static_cast<std::size_t>(start)] = 1;
    }

    const std::int64_t a = chain.back();
    // Nearest live neighbour of `a` under (dissimilarity, id) lexicographic
    // order; the scan result is independent of `live` ordering.
    double best_d = std::numeric_limits<double>::infinity();
    std::int64_t best = -1;
    for (const std::int64_t other : table.live) {
      if (other == a) continue;
      const double d = table.distance(a, other);
      if (d < best_d || (d == best_d && other < best)) {
        best_d = d;
        best = other;
      }
    }
    if (best < 0) {
      throw std::logic_error("chain walk reached an isolated cluster");
    }
    note_aux(stats, static_cast<std::int64_t>(chain.size() + table.live.size()));

    const bool reciprocal =
        chain.size() >= 2 && best == chain[chain.size() - 2];
    if (reciprocal) {
      const std::int64_t b = best;
      in_chain[static_cast<std::size_t>(a)] = 0;
      in_chain[static_cast<std::size_t>(b)] = 0;
      chain.pop_back();
      chain.pop_back();
      if (best_d < lambda) {
        const std::int64_t id = next_id++;
        Node& merged = table.nodes[static_cast<std::size_t>(id)];
        merged.summary = merge_summaries(
            table.nodes[static_cast<std::size_t>(a)].summary,
            table.nodes[static_cast<std::size_t>(b)].summary);
        merged.f = static_cast<double>(merged.summary.size) *
                   generator(fam, merged.summary.mean_stat);
        merged.alive = true;
        table.remove_live(a);
        table.remove_live(b);
        forest.merges.push_back(MergeRecord{std::min(a, b), std::max(a, b),
                                            best_d, merged.summary.size});
        table.live_pos[static_cast<std::size_t>(id)] =
            static_cast<std::int64_t>(table.live.size());
        table.live.push_back(id);
      } else {
        // Reciprocal pair at or above threshold: neither cluster can ever
        // merge again (dissimilarities only grow along the chain), so both
        // become roots. Remaining chain entries may reference retired
        // neighbours, so the chain restarts from scratch.
        retire(a);
        retire(b);
        clear_chain();
      }
      continue;
    }

    if (in_chain[static_cast<std::size_t>(best)]) {
      // The nearest neighbour sits deeper in the chain: a stale prefix
      // left by an earlier merge. Restart the chain from `a`; at most one
      // restart can follow any merge, so progress is preserved.
      clear_chain();
      chain.push_back(a);
      in_chain[static_cast<std::size_t>(a)] = 1;
      continue;
    }

    chain.push_back(best);
    in_chain[static_cast<std::size_t>(best)] = 1;
  }

  std::sort(roots.begin(), roots.end());
  forest.roots = std::move(roots);
  return forest;
}

namespace {

Partition partition_from_merges(const Forest& forest, std::int64_t num_merges) {
  const std::int64_t n = forest.leaf_count;
  const std::int64_t total = n + num_merges;
  std::vector<std::int64_t> parent(static_cast<std::size_t>(total), -1);
  for (std::int64_t m = 0; m < num_merges; ++m) {
    const MergeRecord& rec = forest.merges[static_cast<std::size_t>(m)];
    const std::int64_t id = n + m;
    if (rec.left < 0 || rec.right <= rec.left || rec.right >= id) {
      throw std::invalid_argument("malformed merge record");
    }
    if (parent[static_cast<std::size_t>(rec.left)] != -1 ||
        parent[static_cast<std::size_t>(rec.right)] != -1) {
      throw std::invalid_argument("merge consumes an already-consumed node");
    }
    parent[static_cast<std::size_t>(rec.left)] = id;
    parent[static_cast<std::size_t>(rec.right)] = id;
  }

  // Parents always have larger ids, so a descending sweep resolves roots.
  std::vector<std::int64_t> root_of(static_cast<std::size_t>(total));
  std::vector<std::int64_t> root_ids;
  for (std::int64_t id = total - 1; id >= 0; --id) {
    const std::int64_t p = parent[static_cast<std::size_t>(id)];
    root_of[static_cast<std::size_t>(id)] =
        (p == -1) ? id : root_of[static_cast<std::size_t>(p)];
    if (p == -1) root_ids.push_back(id);
  }
  std::sort(root_ids.begin(), root_ids.end());

  std::vector<int> label_of_root(static_cast<std::size_t>(total), -1);
  for (std::size_t i = 0; i < root_ids.size(); ++i) {
    label_of_root[static_cast<std::size_t>(root_ids[i])] = static_cast<int>(i);
  }

  Partition part;
  part.num_clusters = static_cast<int>(root_ids.size());
  part.labels.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    part.labels[static_cast<std::size_t>(i)] =
        label_of_root[static_cast<std::size_t>(root_of[static_cast<std::size_t>(i)])];
  }
  return part;
}

}  // namespace

Partition extract_partition(const Forest& forest) {
  return partition_from_merges(forest,
                               static_cast<std::int64_t>(forest.merges.size()));
}

Partition partition_at(const Forest& forest, std::int64_t num_merges) {
  if (num_merges < 0 ||
      num_merges > static_cast<std::int64_t>(forest.merges.size())) {
    throw std::invalid_argument("merge count out of range");
  }
  return partition_from_merges(forest, num_merges);
}

}  // namespace rbhc
