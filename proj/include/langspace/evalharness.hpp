#ifndef LANGSPACE_EVALHARNESS_HPP
#define LANGSPACE_EVALHARNESS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "langspace/catalog.hpp"
#include "langspace/embedding.hpp"
#include "langspace/metalearner.hpp"

namespace langspace {

/// Neighbor-selection policy for the reconstruction experiment.
struct Policy {
  enum class Kind { random_pick, inv_asp, tree, map, avg, learned };
  Kind kind = Kind::avg;
  std::uint64_t seed = 0;          // random_pick only
  const MetaLearner* model = nullptr;  // learned only

  std::string name() const;
};

struct LanguageReconstruction {
  double sq_error = 0.0;                // squared L2 error / dim
  std::vector<std::string> neighbors;   // selected ids, selection order
};

struct ReconstructionReport {
  // config echo
  std::uint64_t seed = 0;
  std::vector<int> k_range;
  std::vector<std::string> policy_names;
  std::string catalog_file;
  std::string table_file;

  // policy -> k -> MSE across languages
  std::map<std::string, std::map<int, double>> mse;
  // policy -> k -> id -> detail
  std::map<std::string, std::map<int, std::map<std::string, LanguageReconstruction>>>
      per_language;
};

/// Leave-one-out reconstruction: for every language, policy, and k, select
/// the k nearest other languages under the policy's distance, average their
/// embeddings, and record the squared Euclidean error divided by the
/// embedding dimension. Random policies resample per (language, k) from the
/// policy seed.
ReconstructionReport reconstruct_all(const Catalog& catalog,
                                     const EmbeddingTable& table,
                                     const std::vector<Policy>& policies,
                                     const std::vector<int>& k_range);

/// Trapezoid area under each policy's MSE-vs-k curve, sorted ascending;
/// ties break by policy name.
std::vector<std::pair<std::string, double>> policy_mse_ordering(
    const ReconstructionReport& report);

enum class ReportFormat { csv, json };

/// CSV: a header comment documenting the MSE definition, then
/// policy,k,mse rows sorted by (policy, k). JSON: the full structure,
/// round-trippable via import_report. Both bit-stable for fixed inputs.
void export_report(const ReconstructionReport& report, const std::string& path,
                   ReportFormat format);
ReconstructionReport import_report(const std::string& path);

}  // namespace langspace

#endif  // LANGSPACE_EVALHARNESS_HPP
