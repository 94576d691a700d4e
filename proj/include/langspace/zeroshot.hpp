#ifndef LANGSPACE_ZEROSHOT_HPP
#define LANGSPACE_ZEROSHOT_HPP

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "langspace/catalog.hpp"
#include "langspace/embedding.hpp"
#include "langspace/metalearner.hpp"

namespace langspace {

/// Neighbor-count policy: k_min nearest are always taken; further neighbors
/// join only while their predicted distance stays below the threshold, up to
/// k_max. threshold = nullopt means "auto" (median 25th-nearest rule).
struct NeighborPolicy {
  int k_min = 5;
  int k_max = 25;
  std::optional<double> threshold;   // nullopt = auto
  bool distance_weighted = false;    // off by default: plain arithmetic mean
};

struct NeighborSelection {
  std::string target;
  std::vector<std::pair<std::string, double>> neighbors;  // ascending distance
  double threshold_used = 0.0;
  std::vector<double> approximated;
};

/// Median over supervised languages of the predicted distance to each
/// language's 25th-nearest supervised neighbor (self excluded). Even counts
/// take the mean of the two central values. Requires >= 26 supervised ids.
double auto_threshold(const Catalog& catalog, const MetaLearner& ml,
                      const std::set<std::string>& supervised);

/// Rank supervised languages by predicted ML distance to the target
/// (ascending, ties by id), take k_min unconditionally, extend below the
/// threshold up to k_max, and average the selected embeddings.
/// A target present in `supervised` is excluded from its own neighbor set
/// (leave-one-out).
NeighborSelection select_neighbors(const Catalog& catalog,
                                   const MetaLearner& ml,
                                   const std::set<std::string>& supervised,
                                   const EmbeddingTable& table,
                                   const std::string& target_id,
                                   const NeighborPolicy& policy);

/// Same, for a target language that is not in the catalog.
NeighborSelection select_neighbors(const Catalog& catalog,
                                   const MetaLearner& ml,
                                   const std::set<std::string>& supervised,
                                   const EmbeddingTable& table,
                                   const Language& target,
                                   const NeighborPolicy& policy);

/// Thin composition returning only the approximated embedding.
std::vector<double> approximate_unseen(const Catalog& catalog,
                                       const MetaLearner& ml,
                                       const std::set<std::string>& supervised,
                                       const EmbeddingTable& table,
                                       const std::string& target_id,
                                       const NeighborPolicy& policy);

}  // namespace langspace

#endif  // LANGSPACE_ZEROSHOT_HPP
