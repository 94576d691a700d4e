#ifndef LANGSPACE_METRICS_HPP
#define LANGSPACE_METRICS_HPP

#include <string>
#include <vector>

#include "langspace/catalog.hpp"

namespace langspace {

/// Distances are normalized by a fixed constant, pi times the WGS84
/// equatorial radius, so values stay comparable across catalogs.
inline constexpr double kMapNormalizerM = 20037508.0;  // 20,037.508 km

/// The three normalized pairwise distances for one language pair.
struct MetricVector {
  double tree = 0.0;
  double map = 0.0;
  double inv_asp = 0.0;

  double mean() const { return (tree + map + inv_asp) / 3.0; }
};

/// Normalized phylogenetic distance through the youngest common ancestor:
/// 1 - 2*depth(LCA)/(depth(a)+depth(b)), with depth = lineage length below
/// the implicit root and the LCA found as the longest common lineage prefix.
/// 1.0 when the lineages share no prefix; 0.0 iff a == b.
double tree_distance(const Catalog& catalog, const std::string& a,
                     const std::string& b);

/// Normalized geodesic distance between the languages' locations on the
/// WGS84 ellipsoid, divided by kMapNormalizerM and clamped to [0,1].
/// Endpoints are ordered internally so the result is exactly symmetric.
double map_distance(const Catalog& catalog, const std::string& a,
                    const std::string& b);

/// Inverse angular similarity of phoneme sets: 2*theta/pi where theta is the
/// angle between the binary inventory vectors. Computed from set sizes, so it
/// is exactly invariant under phoneme_universe permutation: cos(theta) =
/// |A intersect B| / sqrt(|A|*|B|).
double inverse_asp(const Catalog& catalog, const std::string& a,
                   const std::string& b);

/// All three metrics for a pair, canonicalized by (min id, max id).
MetricVector metric_vector(const Catalog& catalog, const std::string& a,
                           const std::string& b);

// Language-level versions, used for raw (not-in-catalog) zero-shot targets.
double tree_distance(const Language& a, const Language& b);
double map_distance(const Language& a, const Language& b);
double inverse_asp(const Language& a, const Language& b);
MetricVector metric_vector(const Language& a, const Language& b);

/// Symmetric half-matrix of MetricVectors over a whole catalog, keyed by
/// (min id, max id). Filled completely at construction; callers only read
/// afterwards, so concurrent access needs no locking.
class PairwiseCache {
 public:
  explicit PairwiseCache(const Catalog& catalog);

  const MetricVector& get(std::size_t i, std::size_t j) const;
  const MetricVector& get(const Catalog& catalog, const std::string& a,
                          const std::string& b) const;
  std::size_t size() const { return n_; }

 private:
  std::size_t n_ = 0;
  std::vector<MetricVector> cells_;  // upper triangle, row-major
};

}  // namespace langspace

#endif  // LANGSPACE_METRICS_HPP
