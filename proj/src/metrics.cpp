#include "langspace/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "langspace/errors.hpp"
#include "langspace/geodesic.hpp"

namespace langspace {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::size_t shared_prefix(const std::vector<std::string>& a,
                          const std::vector<std::string>& b) {
  std::size_t n = std::min(a.size(), b.size());
  std::size_t k = 0;
  while (k < n && a[k] == b[k]) ++k;
  return k;
}

std::size_t intersection_size(const std::set<std::string>& a,
                              const std::set<std::string>& b) {
  std::size_t count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}
}  // namespace

double tree_distance(const Language& a, const Language& b) {
  if (a.id == b.id) return 0.0;
  const std::size_t lcp = shared_prefix(a.lineage, b.lineage);
  if (lcp == 0) return 1.0;
  const double da = static_cast<double>(a.lineage.size());
  const double db = static_cast<double>(b.lineage.size());
  return 1.0 - 2.0 * static_cast<double>(lcp) / (da + db);
}

double map_distance(const Language& a, const Language& b) {
  if (!a.location)
    throw MetricError("language '" + a.id + "' has no location");
  if (!b.location)
    throw MetricError("language '" + b.id + "' has no location");
  if (a.id == b.id) return 0.0;

  // Order the endpoints so (a,b) and (b,a) take an identical floating-point
  // path: exact symmetry, not just symmetry up to rounding.
  GeoPoint p = *a.location;
  GeoPoint q = *b.location;
  if (q.latitude_deg < p.latitude_deg ||
      (q.latitude_deg == p.latitude_deg &&
       q.longitude_deg < p.longitude_deg))
    std::swap(p, q);
  if (p.latitude_deg == q.latitude_deg && p.longitude_deg == q.longitude_deg)
    return 0.0;

  const double meters = geo::geodesic_m(p.latitude_deg, p.longitude_deg,
                                        q.latitude_deg, q.longitude_deg);
  return std::clamp(meters / kMapNormalizerM, 0.0, 1.0);
}

double inverse_asp(const Language& a, const Language& b) {
  if (a.phonemes.empty())
    throw MetricError("language '" + a.id + "' has an empty phoneme inventory");
  if (b.phonemes.empty())
    throw MetricError("language '" + b.id + "' has an empty phoneme inventory");
  if (a.id == b.id) return 0.0;

  const auto na = a.phonemes.size();
  const auto nb = b.phonemes.size();
  const std::size_t inter = intersection_size(a.phonemes, b.phonemes);
  double cosine = static_cast<double>(inter) /
                  std::sqrt(static_cast<double>(na * nb));
  cosine = std::clamp(cosine, 0.0, 1.0);
  const double theta = std::acos(cosine);  // in [0, pi/2]: vectors non-negative
  return 2.0 * theta / kPi;
}

MetricVector metric_vector(const Language& a, const Language& b) {
  // Canonical pair order keeps every metric exactly symmetric.
  const Language* lo = &a;
  const Language* hi = &b;
  if (hi->id < lo->id) std::swap(lo, hi);
  MetricVector m;
  m.tree = tree_distance(*lo, *hi);
  m.map = map_distance(*lo, *hi);
  m.inv_asp = inverse_asp(*lo, *hi);
  return m;
}

double tree_distance(const Catalog& catalog, const std::string& a,
                     const std::string& b) {
  return tree_distance(catalog.at(a), catalog.at(b));
}

double map_distance(const Catalog& catalog, const std::string& a,
                    const std::string& b) {
  return map_distance(catalog.at(a), catalog.at(b));
}

double inverse_asp(const Catalog& catalog, const std::string& a,
                   const std::string& b) {
  return inverse_asp(catalog.at(a), catalog.at(b));
}

MetricVector metric_vector(const Catalog& catalog, const std::string& a,
                           const std::string& b) {
  return metric_vector(catalog.at(a), catalog.at(b));
}

PairwiseCache::PairwiseCache(const Catalog& catalog) : n_(catalog.size()) {
  cells_.resize(n_ * (n_ > 0 ? n_ - 1 : 0) / 2);
  const auto& langs = catalog.languages();
  std::size_t cell = 0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      cells_[cell++] = metric_vector(langs[i], langs[j]);
}

const MetricVector& PairwiseCache::get(std::size_t i, std::size_t j) const {
  if (i == j || i >= n_ || j >= n_)
    throw InternalError("pairwise cache: bad indices");
  if (j < i) std::swap(i, j);
  // row-major upper triangle: rows 0..i-1 hold (n-1-r) cells each
  const std::size_t row_start = i * (n_ - 1) - i * (i - 1) / 2;
  return cells_[row_start + (j - i - 1)];
}

const MetricVector& PairwiseCache::get(const Catalog& catalog,
                                       const std::string& a,
                                       const std::string& b) const {
  return get(catalog.index_of(a), catalog.index_of(b));
}

}  // namespace langspace
