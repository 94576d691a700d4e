#include "langspace/zeroshot.hpp"

#include <algorithm>
#include <cmath>

#include "langspace/errors.hpp"

namespace langspace {

namespace {

void validate_policy(const NeighborPolicy& policy) {
  if (policy.k_min < 1) throw ValidationError("k_min must be at least 1");
  if (policy.k_max < policy.k_min)
    throw ValidationError("k_max must be at least k_min");
  if (policy.threshold && !(*policy.threshold >= 0.0))
    throw ValidationError("threshold must be non-negative");
}

std::vector<std::string> effective_supervised(
    const std::set<std::string>& supervised, const std::string& target_id) {
  std::vector<std::string> out;
  out.reserve(supervised.size());
  for (const auto& id : supervised)
    if (id != target_id) out.push_back(id);
  return out;
}

}  // namespace

double auto_threshold(const Catalog& catalog, const MetaLearner& ml,
                      const std::set<std::string>& supervised) {
  if (supervised.size() < 26)
    throw ValidationError(
        "auto threshold needs at least 26 supervised languages");
  std::vector<std::string> ids(supervised.begin(), supervised.end());
  std::vector<double> kth;
  kth.reserve(ids.size());
  std::vector<double> dists;
  for (const auto& id : ids) {
    dists.clear();
    for (const auto& other : ids) {
      if (other == id) continue;
      dists.push_back(ml.predict(metric_vector(catalog, id, other)));
    }
    std::sort(dists.begin(), dists.end());
    kth.push_back(dists[24]);  // 25th-nearest
  }
  std::sort(kth.begin(), kth.end());
  const std::size_t n = kth.size();
  if (n % 2 == 1) return kth[n / 2];
  return 0.5 * (kth[n / 2 - 1] + kth[n / 2]);
}

NeighborSelection select_neighbors(const Catalog& catalog,
                                   const MetaLearner& ml,
                                   const std::set<std::string>& supervised,
                                   const EmbeddingTable& table,
                                   const Language& target,
                                   const NeighborPolicy& policy) {
  validate_policy(policy);
  const std::vector<std::string> pool =
      effective_supervised(supervised, target.id);
  if (pool.size() < static_cast<std::size_t>(policy.k_min))
    throw ValidationError("need at least k_min supervised languages");

  std::vector<std::pair<double, std::string>> candidates;
  candidates.reserve(pool.size());
  for (const auto& id : pool)
    candidates.emplace_back(ml.predict(metric_vector(target, catalog.at(id))),
                            id);
  std::sort(candidates.begin(), candidates.end());

  NeighborSelection sel;
  sel.target = target.id;
  if (policy.threshold) {
    sel.threshold_used = *policy.threshold;
  } else {
    std::set<std::string> pool_set(pool.begin(), pool.end());
    sel.threshold_used = auto_threshold(catalog, ml, pool_set);
  }

  const std::size_t cap =
      std::min<std::size_t>(policy.k_max, candidates.size());
  std::size_t count = policy.k_min;
  while (count < cap && candidates[count].first < sel.threshold_used) ++count;

  sel.neighbors.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    sel.neighbors.emplace_back(candidates[i].second, candidates[i].first);

  // Average the selected embeddings: plain mean, or inverse-distance
  // weighted when the flag is on.
  std::vector<double> acc;
  double weight_sum = 0.0;
  for (const auto& [id, dist] : sel.neighbors) {
    const auto& row = table.at(id);
    if (acc.empty()) acc.assign(row.size(), 0.0);
    if (row.size() != acc.size())
      throw ValidationError("embedding table rows disagree on dimension");
    const double w = policy.distance_weighted ? 1.0 / (dist + 1e-9) : 1.0;
    weight_sum += w;
    for (std::size_t d = 0; d < row.size(); ++d) acc[d] += w * row[d];
  }
  for (double& x : acc) x /= weight_sum;
  sel.approximated = std::move(acc);
  return sel;
}

NeighborSelection select_neighbors(const Catalog& catalog,
                                   const MetaLearner& ml,
                                   const std::set<std::string>& supervised,
                                   const EmbeddingTable& table,
                                   const std::string& target_id,
                                   const NeighborPolicy& policy) {
  return select_neighbors(catalog, ml, supervised, table,
                          catalog.at(target_id), policy);
}

std::vector<double> approximate_unseen(const Catalog& catalog,
                                       const MetaLearner& ml,
                                       const std::set<std::string>& supervised,
                                       const EmbeddingTable& table,
                                       const std::string& target_id,
                                       const NeighborPolicy& policy) {
  return select_neighbors(catalog, ml, supervised, table, target_id, policy)
      .approximated;
}

}  // namespace langspace
