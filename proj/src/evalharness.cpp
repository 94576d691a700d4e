#include "langspace/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "langspace/errors.hpp"
#include "langspace/metrics.hpp"
#include "langspace/rng.hpp"

namespace langspace {

using json = nlohmann::json;

std::string Policy::name() const {
  switch (kind) {
    case Kind::random_pick: return "random";
    case Kind::inv_asp: return "inv_asp";
    case Kind::tree: return "tree";
    case Kind::map: return "map";
    case Kind::avg: return "avg";
    case Kind::learned: return "learned";
  }
  throw InternalError("unhandled policy kind");
}

namespace {

// Stable per-(policy seed, target id, k) stream so results do not depend on
// catalog ordering.
std::uint64_t pick_seed(std::uint64_t seed, const std::string& id, int k) {
  std::uint64_t buf[3] = {seed, fnv1a64(id), static_cast<std::uint64_t>(k)};
  std::uint64_t state = fnv1a64(buf, sizeof buf);
  return splitmix64(state);
}

double policy_distance(const Policy& policy, const PairwiseCache& cache,
                       std::size_t i, std::size_t j) {
  const MetricVector& m = cache.get(i, j);
  switch (policy.kind) {
    case Policy::Kind::inv_asp: return m.inv_asp;
    case Policy::Kind::tree: return m.tree;
    case Policy::Kind::map: return m.map;
    case Policy::Kind::avg: return m.mean();
    case Policy::Kind::learned: return policy.model->predict(m);
    case Policy::Kind::random_pick: break;
  }
  throw InternalError("random policy has no distance");
}

}  // namespace

ReconstructionReport reconstruct_all(const Catalog& catalog,
                                     const EmbeddingTable& table,
                                     const std::vector<Policy>& policies,
                                     const std::vector<int>& k_range) {
  const auto& langs = catalog.languages();
  const std::size_t n = langs.size();
  if (policies.empty()) throw ValidationError("no policies given");
  if (k_range.empty()) throw ValidationError("empty k range");
  for (int k : k_range)
    if (k < 1 || static_cast<std::size_t>(k) >= n)
      throw ValidationError("k = " + std::to_string(k) +
                            " needs at least k + 1 languages");
  for (const auto& p : policies)
    if (p.kind == Policy::Kind::learned && p.model == nullptr)
      throw ValidationError("learned policy needs a model");

  const int dim = table.dim;
  for (const auto& lang : langs)
    if (static_cast<int>(table.at(lang.id).size()) != dim)
      throw ValidationError("embedding table rows disagree on dimension");

  PairwiseCache cache(catalog);

  ReconstructionReport report;
  report.k_range = k_range;
  for (const auto& p : policies) report.policy_names.push_back(p.name());

  std::vector<std::size_t> order;
  order.reserve(n - 1);
  for (const auto& policy : policies) {
    const std::string pname = policy.name();
    for (int k : k_range) {
      double total = 0.0;
      auto& detail = report.per_language[pname][k];
      for (std::size_t i = 0; i < n; ++i) {
        order.clear();
        for (std::size_t j = 0; j < n; ++j)
          if (j != i) order.push_back(j);

        if (policy.kind == Policy::Kind::random_pick) {
          Rng rng(pick_seed(policy.seed, langs[i].id, k));
          rng.shuffle(order);
        } else {
          std::sort(order.begin(), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double da = policy_distance(policy, cache, i, a);
                      const double db = policy_distance(policy, cache, i, b);
                      if (da != db) return da < db;
                      return langs[a].id < langs[b].id;
                    });
        }

        std::vector<double> acc(dim, 0.0);
        LanguageReconstruction rec;
        for (int t = 0; t < k; ++t) {
          const auto& row = table.at(langs[order[t]].id);
          for (int d = 0; d < dim; ++d) acc[d] += row[d];
          rec.neighbors.push_back(langs[order[t]].id);
        }
        const auto& truth = table.at(langs[i].id);
        double sq = 0.0;
        for (int d = 0; d < dim; ++d) {
          const double e = acc[d] / k - truth[d];
          sq += e * e;
        }
        rec.sq_error = sq / dim;
        total += rec.sq_error;
        detail[langs[i].id] = std::move(rec);
      }
      report.mse[pname][k] = total / static_cast<double>(n);
    }
  }
  return report;
}

std::vector<std::pair<std::string, double>> policy_mse_ordering(
    const ReconstructionReport& report) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [pname, curve] : report.mse) {
    double area = 0.0;
    if (curve.size() == 1) {
      area = curve.begin()->second;
    } else {
      auto it = curve.begin();
      auto prev = it++;
      for (; it != curve.end(); ++prev, ++it)
        area += 0.5 * (it->second + prev->second) *
                static_cast<double>(it->first - prev->first);
    }
    out.emplace_back(pname, area);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  return out;
}

namespace {

std::string num(double v) { return json(v).dump(); }

json report_to_json(const ReconstructionReport& report) {
  json root;
  root["seed"] = report.seed;
  root["k_range"] = report.k_range;
  root["policies"] = report.policy_names;
  root["catalog_file"] = report.catalog_file;
  root["table_file"] = report.table_file;
  json mse = json::object();
  for (const auto& [pname, curve] : report.mse) {
    json c = json::object();
    for (const auto& [k, v] : curve) c[std::to_string(k)] = v;
    mse[pname] = std::move(c);
  }
  root["mse"] = std::move(mse);
  json per = json::object();
  for (const auto& [pname, by_k] : report.per_language) {
    json pk = json::object();
    for (const auto& [k, by_id] : by_k) {
      json pid = json::object();
      for (const auto& [id, rec] : by_id)
        pid[id] = {{"sq_error", rec.sq_error}, {"neighbors", rec.neighbors}};
      pk[std::to_string(k)] = std::move(pid);
    }
    per[pname] = std::move(pk);
  }
  root["per_language"] = std::move(per);
  return root;
}

int parse_k(const std::string& key, const std::string& path) {
  try {
    std::size_t pos = 0;
    const int k = std::stoi(key, &pos);
    if (pos != key.size()) throw std::invalid_argument(key);
    return k;
  } catch (const std::exception&) {
    throw ValidationError("bad k key '" + key + "' in '" + path + "'");
  }
}

}  // namespace

void export_report(const ReconstructionReport& report, const std::string& path,
                   ReportFormat format) {
  std::ofstream out(path);
  if (!out) throw InternalError("cannot write '" + path + "'");
  if (format == ReportFormat::json) {
    out << report_to_json(report).dump(2) << "\n";
    return;
  }
  out << "# leave-one-out reconstruction error: squared L2 distance between\n"
      << "# the true embedding and the mean of the k selected neighbors,\n"
      << "# divided by the embedding dimension, averaged over languages\n"
      << "# catalog: " << report.catalog_file << "\n"
      << "# table: " << report.table_file << "\n"
      << "# seed: " << report.seed << "\n"
      << "policy,k,mse\n";
  for (const auto& [pname, curve] : report.mse)
    for (const auto& [k, v] : curve)
      out << pname << "," << k << "," << num(v) << "\n";
}

ReconstructionReport import_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw ParseError("invalid JSON in '" + path + "': " + e.what());
  }
  if (!root.is_object() || !root.contains("mse"))
    throw ValidationError("report '" + path + "' lacks an mse section");

  ReconstructionReport report;
  try {
    report.seed = root.value("seed", std::uint64_t{0});
    report.k_range = root.value("k_range", std::vector<int>{});
    report.policy_names = root.value("policies", std::vector<std::string>{});
    report.catalog_file = root.value("catalog_file", "");
    report.table_file = root.value("table_file", "");
    for (const auto& [pname, curve] : root["mse"].items())
      for (const auto& [key, v] : curve.items())
        report.mse[pname][parse_k(key, path)] = v.get<double>();
    if (root.contains("per_language")) {
      for (const auto& [pname, by_k] : root["per_language"].items()) {
        for (const auto& [key, by_id] : by_k.items()) {
          const int k = parse_k(key, path);
          for (const auto& [id, jrec] : by_id.items()) {
            LanguageReconstruction rec;
            rec.sq_error = jrec.at("sq_error").get<double>();
            rec.neighbors = jrec.at("neighbors").get<std::vector<std::string>>();
            report.per_language[pname][k][id] = std::move(rec);
          }
        }
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError("malformed report '" + path + "': " + e.what());
  }
  return report;
}

}  // namespace langspace
