#include "langspace/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "langspace/errors.hpp"
#include "langspace/rng.hpp"

namespace langspace {

using json = nlohmann::json;

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::fitted: return "fitted";
    case Provenance::imported: return "imported";
    case Provenance::synthetic: return "synthetic";
  }
  throw InternalError("unhandled provenance value");
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "fitted") return Provenance::fitted;
  if (s == "imported") return Provenance::imported;
  if (s == "synthetic") return Provenance::synthetic;
  throw ValidationError("unknown provenance '" + s + "'");
}

const std::vector<double>& EmbeddingTable::at(const std::string& id) const {
  auto it = entries.find(id);
  if (it == entries.end())
    throw ValidationError("no embedding for language id '" + id + "'");
  return it->second;
}

double euclidean(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size())
    throw ValidationError("euclidean: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double less_loss(const std::vector<double>& e1, const std::vector<double>& e2,
                 const MetricVector& metrics) {
  return std::abs(euclidean(e1, e2) - metrics.mean());
}

std::pair<std::vector<double>, std::vector<double>> less_gradient(
    const std::vector<double>& e1, const std::vector<double>& e2,
    const MetricVector& metrics, double eps) {
  if (e1.size() != e2.size())
    throw ValidationError("less_gradient: dimension mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < e1.size(); ++i) {
    const double d = e1[i] - e2[i];
    sq += d * d;
  }
  const double ds = std::sqrt(sq + eps * eps);
  const double r = ds - metrics.mean();
  const double sign = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
  std::vector<double> g1(e1.size()), g2(e2.size());
  for (std::size_t i = 0; i < e1.size(); ++i) {
    g1[i] = sign * (e1[i] - e2[i]) / ds;
    g2[i] = -g1[i];
  }
  return {std::move(g1), std::move(g2)};
}

EmbeddingTable fit_embeddings(const Catalog& catalog, int dim,
                              const LessConfig& cfg, FitReport* report) {
  if (dim <= 0) throw ValidationError("embedding dimension must be positive");
  if (cfg.epochs < 0) throw ValidationError("epochs must be non-negative");
  if (!(cfg.learning_rate > 0.0))
    throw ValidationError("learning rate must be positive");

  const auto& langs = catalog.languages();
  const std::size_t n = langs.size();

  Rng rng(cfg.seed);
  std::vector<std::vector<double>> x(n, std::vector<double>(dim));
  for (std::size_t i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) x[i][d] = rng.uniform(-0.1, 0.1);

  // The pair set is fixed before training and kept in sorted-id order.
  std::set<std::pair<std::size_t, std::size_t>> pair_set;
  if (cfg.pair_sampling == LessConfig::PairSampling::all_pairs) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) pair_set.emplace(i, j);
  } else {
    if (cfg.sample_k <= 0)
      throw ValidationError("sample_k must be positive");
    for (std::size_t i = 0; i < n && n > 1; ++i) {
      for (int s = 0; s < cfg.sample_k; ++s) {
        std::size_t j = rng.index(n - 1);
        if (j >= i) ++j;
        pair_set.emplace(std::min(i, j), std::max(i, j));
      }
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs(pair_set.begin(),
                                                         pair_set.end());

  std::vector<MetricVector> pair_metrics;
  pair_metrics.reserve(pairs.size());
  for (const auto& [i, j] : pairs)
    pair_metrics.push_back(metric_vector(langs[i], langs[j]));

  const double inv_pairs =
      pairs.empty() ? 0.0 : 1.0 / static_cast<double>(pairs.size());
  auto total_loss = [&]() {
    double acc = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p)
      acc += less_loss(x[pairs[p].first], x[pairs[p].second], pair_metrics[p]);
    return acc * inv_pairs * cfg.loss_weight;
  };

  const double initial = total_loss();
  std::vector<std::vector<double>> grad(n, std::vector<double>(dim));
  for (int epoch = 0; epoch < cfg.epochs && !pairs.empty(); ++epoch) {
    for (auto& row : grad) std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto [i, j] = pairs[p];
      auto [g1, g2] = less_gradient(x[i], x[j], pair_metrics[p], cfg.epsilon);
      for (int d = 0; d < dim; ++d) {
        grad[i][d] += g1[d];
        grad[j][d] += g2[d];
      }
    }
    const double step = cfg.learning_rate * inv_pairs * cfg.loss_weight;
    for (std::size_t i = 0; i < n; ++i)
      for (int d = 0; d < dim; ++d) {
        x[i][d] -= step * grad[i][d];
        if (!std::isfinite(x[i][d]))
          throw InternalError("embedding fit diverged to a non-finite value");
      }
  }
  const double final_loss = total_loss();

  EmbeddingTable table;
  table.dim = dim;
  table.provenance = Provenance::fitted;
  for (std::size_t i = 0; i < n; ++i) table.entries[langs[i].id] = x[i];
  if (report) {
    report->initial_loss = initial;
    report->final_loss = final_loss;
    report->epochs = cfg.epochs;
    report->pair_count = pairs.size();
  }
  return table;
}

double hidden_mixture(const MetricVector& m) {
  constexpr double tau = 0.12;
  const double a = m.tree;
  const double b = m.inv_asp;
  // Soft minimum, shifted so it is >= 0 everywhere and 0 only at the origin.
  const double soft_min =
      std::min(a, b) - tau * std::log1p(std::exp(-std::abs(a - b) / tau));
  const double shifted = soft_min + tau * std::log(2.0);
  const double s = 0.75 * m.map * m.tree + 0.10 * m.map + 0.15 * shifted;
  return 2.60 * std::sqrt(std::max(s, 0.0));
}

namespace {

std::string double_token(double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof bits);
  std::ostringstream os;
  os << std::hex << bits;
  return os.str();
}

// Content signature covering everything the metrics can see except the id
// itself: location, lineage above the leaf, and the phoneme inventory.
// Languages that duplicate another's content share a signature.
std::string content_signature(const Language& lang) {
  std::string sig;
  if (lang.location) {
    sig += double_token(lang.location->latitude_deg);
    sig += '\x1f';
    sig += double_token(lang.location->longitude_deg);
  } else {
    sig += "none";
  }
  sig += '\x1e';
  for (std::size_t i = 0; i + 1 < lang.lineage.size(); ++i) {
    sig += lang.lineage[i];
    sig += '\x1f';
  }
  sig += '\x1e';
  for (const auto& ph : lang.phonemes) {
    sig += ph;
    sig += '\x1f';
  }
  return sig;
}

// Standard normal keyed by the synthesis seed and the unordered pair of
// content digests, so renaming or duplicating languages cannot shift it.
double keyed_normal(std::uint64_t seed, std::uint64_t d1, std::uint64_t d2) {
  const std::uint64_t lo = std::min(d1, d2);
  const std::uint64_t hi = std::max(d1, d2);
  std::uint64_t buf[3] = {seed, lo, hi};
  std::uint64_t state = fnv1a64(buf, sizeof buf);
  const std::uint64_t r1 = splitmix64(state);
  const std::uint64_t r2 = splitmix64(state);
  const double u1 = static_cast<double>((r1 >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(r2 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major).
// Deterministic: fixed sweep order, no pivot search.
void jacobi_eigh(std::vector<double> a, std::size_t n, std::vector<double>& v,
                 std::vector<double>& evals) {
  v.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  double norm0 = 0.0;
  for (double x : a) norm0 += x * x;
  const double tol = 1e-26 * std::max(norm0, 1e-300);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * a[p * n + q] * a[p * n + q];
    if (off <= tol) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        a[p * n + p] = app - t * apq;
        a[q * n + q] = aqq + t * apq;
        a[p * n + q] = a[q * n + p] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = a[p * n + k] = c * akp - s * akq;
          a[k * n + q] = a[q * n + k] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  evals.resize(n);
  for (std::size_t i = 0; i < n; ++i) evals[i] = a[i * n + i];
}

}  // namespace

EmbeddingTable synthesize_embeddings(const Catalog& catalog, int dim,
                                     std::uint64_t seed, double noise) {
  if (dim <= 0) throw ValidationError("embedding dimension must be positive");
  if (noise < 0.0) throw ValidationError("noise scale must be non-negative");

  const auto& langs = catalog.languages();
  const std::size_t n = langs.size();

  // Collapse content-identical languages into classes; first-seen order over
  // the sorted catalog fixes the class indexing.
  std::map<std::string, std::size_t> class_of_sig;
  std::vector<std::size_t> rep;           // class -> representative language
  std::vector<std::uint64_t> digest;      // class -> content digest
  std::vector<std::size_t> cls(n);        // language -> class
  for (std::size_t i = 0; i < n; ++i) {
    const std::string sig = content_signature(langs[i]);
    auto [it, inserted] = class_of_sig.emplace(sig, rep.size());
    if (inserted) {
      rep.push_back(i);
      digest.push_back(fnv1a64(sig));
    }
    cls[i] = it->second;
  }
  const std::size_t m = rep.size();

  // Target distances: hidden mixture between class representatives plus
  // digest-keyed noise, floored away from zero.
  std::vector<double> dist(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const MetricVector mv = metric_vector(langs[rep[i]], langs[rep[j]]);
      double d = hidden_mixture(mv);
      if (noise > 0.0) d += noise * keyed_normal(seed, digest[i], digest[j]);
      d = std::max(d, 1e-6);
      dist[i * m + j] = dist[j * m + i] = d;
    }
  }

  EmbeddingTable table;
  table.dim = dim;
  table.provenance = Provenance::synthetic;

  if (m == 0) return table;
  if (m == 1) {
    for (std::size_t i = 0; i < n; ++i)
      table.entries[langs[i].id] = std::vector<double>(dim, 0.0);
    return table;
  }

  // Classical multidimensional scaling: double-center the squared distances,
  // take the top eigenpairs of the Gram matrix.
  std::vector<double> b(m * m);
  std::vector<double> row_mean(m, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d2 = dist[i * m + j] * dist[i * m + j];
      b[i * m + j] = d2;
      row_mean[i] += d2;
    }
    row_mean[i] /= static_cast<double>(m);
    grand += row_mean[i];
  }
  grand /= static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      b[i * m + j] = -0.5 * (b[i * m + j] - row_mean[i] - row_mean[j] + grand);

  std::vector<double> vecs, vals;
  jacobi_eigh(std::move(b), m, vecs, vals);

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (vals[i] != vals[j]) return vals[i] > vals[j];
    return i < j;
  });

  std::vector<std::vector<double>> class_rows(m, std::vector<double>(dim, 0.0));
  const std::size_t cap = std::min<std::size_t>(dim, m);
  for (std::size_t t = 0; t < cap; ++t) {
    const double ev = vals[order[t]];
    if (ev <= 0.0) break;
    const double scale = std::sqrt(ev);
    const std::size_t col = order[t];
    // Fix the eigenvector sign by the first non-negligible component.
    double lead = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (std::abs(vecs[k * m + col]) > 1e-9) {
        lead = vecs[k * m + col];
        break;
      }
    }
    const double flip = lead < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < m; ++k)
      class_rows[k][t] = flip * vecs[k * m + col] * scale;
  }

  for (std::size_t i = 0; i < n; ++i)
    table.entries[langs[i].id] = class_rows[cls[i]];
  return table;
}

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw ParseError("invalid JSON in '" + path + "': " + e.what());
  }
  return root;
}

}  // namespace

std::string save_table(const EmbeddingTable& table) {
  json root;
  root["dim"] = table.dim;
  root["provenance"] = to_string(table.provenance);
  json entries = json::object();
  for (const auto& [id, vec] : table.entries) entries[id] = vec;
  root["entries"] = std::move(entries);
  return root.dump(2) + "\n";
}

void save_table(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InternalError("cannot write '" + path + "'");
  out << save_table(table);
}

EmbeddingTable load_table(const std::string& path) {
  const json root = read_json_file(path);
  if (!root.is_object() || !root.contains("dim") ||
      !root.contains("provenance") || !root.contains("entries"))
    throw ValidationError("embedding table '" + path +
                          "' must carry dim, provenance and entries");
  if (!root["dim"].is_number_integer() || root["dim"].get<int>() <= 0)
    throw ValidationError("embedding table dim must be a positive integer");
  if (!root["provenance"].is_string())
    throw ValidationError("embedding table provenance must be a string");
  if (!root["entries"].is_object())
    throw ValidationError("embedding table entries must be an object");

  EmbeddingTable table;
  table.dim = root["dim"].get<int>();
  table.provenance = provenance_from_string(root["provenance"].get<std::string>());
  for (const auto& [id, value] : root["entries"].items()) {
    if (!value.is_array() || static_cast<int>(value.size()) != table.dim)
      throw ValidationError("embedding for '" + id + "' must be an array of " +
                            std::to_string(table.dim) + " numbers");
    std::vector<double> vec;
    vec.reserve(value.size());
    for (const auto& x : value) {
      if (!x.is_number())
        throw ValidationError("embedding for '" + id +
                              "' contains a non-numeric component");
      const double xv = x.get<double>();
      if (!std::isfinite(xv))
        throw ValidationError("embedding for '" + id +
                              "' contains a non-finite component");
      vec.push_back(xv);
    }
    table.entries[id] = std::move(vec);
  }
  return table;
}

}  // namespace langspace
