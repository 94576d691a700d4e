// End-to-end acceptance gate. Each criterion prints one PASS/FAIL line;
// the exit code is the number of failed criteria.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geo_oracle.hpp"
#include "helpers.hpp"
#include "langspace/embedding.hpp"
#include "langspace/errors.hpp"
#include "langspace/evalharness.hpp"
#include "langspace/metalearner.hpp"
#include "langspace/metrics.hpp"
#include "langspace/rng.hpp"
#include "langspace/zeroshot.hpp"

using namespace langspace;

namespace {

using Failure = std::optional<std::string>;

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// 1. Symmetry, identity and range of all three metrics on sampled pairs.
Failure metric_axioms() {
  auto cat = testutil::load_fixture();
  const std::size_t n = cat.size();
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto& a = cat.languages()[rng.index(n)];
    const auto& b = cat.languages()[rng.index(n)];
    const auto m = metric_vector(cat, a.id, b.id);
    const auto r = metric_vector(cat, b.id, a.id);
    if (m.tree != r.tree || m.map != r.map || m.inv_asp != r.inv_asp)
      return "symmetry violated for (" + a.id + ", " + b.id + ")";
    for (double v : {m.tree, m.map, m.inv_asp})
      if (!(v >= 0.0 && v <= 1.0))
        return "out-of-range value " + fmt(v) + " for (" + a.id + ", " +
               b.id + ")";
    if (a.id == b.id && (m.tree != 0.0 || m.map != 0.0 || m.inv_asp != 0.0))
      return "identity not zero for " + a.id;
  }
  for (const auto& lang : cat.languages()) {
    const auto m = metric_vector(cat, lang.id, lang.id);
    if (m.tree != 0.0 || m.map != 0.0 || m.inv_asp != 0.0)
      return "identity not zero for " + lang.id;
  }
  return std::nullopt;
}

// 2. Normalized map distances against an independent geodesic formula.
Failure geodesic_accuracy() {
  for (const auto& p : testutil::geo_pairs()) {
    std::vector<Language> langs;
    langs.push_back(testutil::make_language("a", p.lat1, p.lon1, {"F"}));
    langs.push_back(testutil::make_language("b", p.lat2, p.lon2, {"F"}));
    Catalog cat{std::move(langs)};
    const double km = map_distance(cat, "a", "b") * 20037.508;
    const double oracle_km = testutil::lambert_m(p.lat1, p.lon1, p.lat2, p.lon2) / 1000.0;
    const double rel = std::fabs(km - oracle_km) / oracle_km;
    if (!(rel < 0.005))
      return std::string(p.name) + ": " + fmt(km) + " km vs oracle " +
             fmt(oracle_km) + " km (rel " + fmt(rel) + ")";
    if (std::string(p.name) == "paris-london" &&
        !(std::fabs(km - 343.9) / 343.9 < 0.005))
      return "paris-london: " + fmt(km) + " km, expected 343.9 km within 0.5%";
  }
  return std::nullopt;
}

// 3. The loss vanishes at matched distances; gradients match finite
// differences.
Failure structure_loss() {
  Rng rng(5150);
  int built = 0;
  while (built < 10000) {
    const int dim = 2 + static_cast<int>(rng.index(7));
    MetricVector m;
    m.tree = rng.uniform();
    m.map = rng.uniform();
    m.inv_asp = rng.uniform();
    std::vector<double> e1(dim), dir(dim);
    for (auto& v : e1) v = rng.uniform(-1.0, 1.0);
    double norm = 0.0;
    for (auto& v : dir) {
      v = rng.uniform(-1.0, 1.0);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    ++built;
    auto e2 = e1;
    for (int d = 0; d < dim; ++d) e2[d] += m.mean() * dir[d] / norm;
    const double loss = less_loss(e1, e2, m);
    if (!(std::fabs(loss) <= 1e-12))
      return "matched-distance loss " + fmt(loss) + " exceeds 1e-12";
  }

  const double h = 1e-6;
  double worst = 0.0;
  int checked = 0;
  while (checked < 100) {
    const int dim = 3;
    MetricVector m;
    m.tree = rng.uniform();
    m.map = rng.uniform();
    m.inv_asp = rng.uniform();
    std::vector<double> e1(dim), e2(dim);
    for (auto& v : e1) v = rng.uniform(-1.0, 1.0);
    for (auto& v : e2) v = rng.uniform(-1.0, 1.0);
    if (std::fabs(euclidean(e1, e2) - m.mean()) < 1e-3) continue;  // kink
    ++checked;
    const auto [g1, g2] = less_gradient(e1, e2, m);
    for (int d = 0; d < dim; ++d) {
      auto test = [&](std::vector<double>& point, double analytic) {
        const double keep = point[d];
        point[d] = keep + h;
        const double up = less_loss(e1, e2, m);
        point[d] = keep - h;
        const double dn = less_loss(e1, e2, m);
        point[d] = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double rel =
            std::fabs(analytic - fd) /
            std::max({std::fabs(analytic), std::fabs(fd), 1e-8});
        worst = std::max(worst, rel);
      };
      test(e1, g1[d]);
      test(e2, g2[d]);
    }
  }
  if (!(worst < 1e-4))
    return "max relative gradient error " + fmt(worst) + " exceeds 1e-4";
  return std::nullopt;
}

// 4. Fitting the bundled catalog: distances land near metric means.
Failure embedding_fit() {
  auto cat = testutil::load_fixture();
  LessConfig cfg;  // 2000 epochs, lr 0.5, all pairs, seed 42
  FitReport report;
  auto table = fit_embeddings(cat, 16, cfg, &report);

  const auto& langs = cat.languages();
  double mad = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < langs.size(); ++i)
    for (std::size_t j = i + 1; j < langs.size(); ++j) {
      const double want = metric_vector(cat, langs[i].id, langs[j].id).mean();
      const double got = euclidean(table.at(langs[i].id), table.at(langs[j].id));
      mad += std::fabs(got - want);
      ++count;
    }
  mad /= static_cast<double>(count);
  if (!(mad < 0.05))
    return "mean absolute deviation " + fmt(mad) + " exceeds 0.05";
  if (!(report.final_loss < 0.5 * report.initial_loss))
    return "final loss " + fmt(report.final_loss) + " not below half of " +
           fmt(report.initial_loss);
  return std::nullopt;
}

// 5. Capacity, gradient correctness, and recovery of an exactly realizable
// distance function.
Failure meta_learner() {
  if (MetaLearner::parameter_count() != 96)
    return "parameter count " + fmt(MetaLearner::parameter_count()) + " != 96";

  Rng rng(31);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    auto ml = MetaLearner::random_init(rng.next_u64());
    MetricVector m;
    m.tree = rng.uniform();
    m.map = rng.uniform();
    m.inv_asp = rng.uniform();
    worst = std::max(worst, backprop_check(ml, m, rng.uniform(0.0, 2.0)));
  }
  if (!(worst < 1e-4))
    return "gradient check " + fmt(worst) + " exceeds 1e-4";

  // A catalog whose metric means are exactly realizable as Euclidean
  // distances: one genus (constant tree term), identical inventories
  // (zero inventory term), and equally spaced points along the equator
  // (the ellipsoid distance is linear in longitude there). The target
  // d(i,j) = c0 + beta*|i-j| embeds as an orthogonal sum of a regular
  // simplex, a Brownian-motion staircase, and a straight line.
  const int n = 50;
  std::vector<Language> langs;
  for (int i = 0; i < n; ++i) {
    char id[8];
    std::snprintf(id, sizeof(id), "l%02d", i);
    langs.push_back(testutil::make_language(
        id, 0.0, 3.0 * i, {"linefam", "linegen"}, {"p", "t", "k", "a"}));
  }
  Catalog cat{std::move(langs)};
  const auto first = metric_vector(cat, "l00", "l01");
  const double c0 = first.tree / 3.0;
  const double beta = first.map / 3.0;

  const int dim = 2 * n;
  EmbeddingTable table;
  table.dim = dim;
  table.provenance = Provenance::imported;
  const double simplex = c0 / std::sqrt(2.0);
  const double stair = std::sqrt(2.0 * c0 * beta);
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(dim, 0.0);
    row[i] = simplex;
    for (int j = 1; j <= i; ++j) row[n + j - 1] = stair;
    row[2 * n - 1] = beta * i;
    table.entries[cat.languages()[i].id] = std::move(row);
  }

  // construction sanity: distances realize the metric means
  double max_dev = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const auto& a = cat.languages()[i];
      const auto& b = cat.languages()[j];
      const double want = metric_vector(cat, a.id, b.id).mean();
      const double got = euclidean(table.at(a.id), table.at(b.id));
      max_dev = std::max(max_dev, std::fabs(got - want));
    }
  if (!(max_dev < 1e-9))
    return "exact table construction off by " + fmt(max_dev);

  TrainConfig cfg;
  cfg.epochs = 8000;
  cfg.patience = 800;
  TrainReport report;
  train(cat, table, cfg, &report);
  const double rmse = std::sqrt(report.best_val_loss);
  if (!(rmse < 0.03))
    return "validation RMSE " + fmt(rmse) + " exceeds 0.03";
  return std::nullopt;
}

// 6. The synthetic reconstruction benchmark reproduces the expected policy
// ordering with clear margins.
Failure benchmark_ordering() {
  auto cat = testutil::load_fixture();
  auto table = synthesize_embeddings(cat, 16, 42, 0.05);
  auto model = train(cat, table, TrainConfig{});

  std::vector<Policy> policies;
  Policy rnd;
  rnd.kind = Policy::Kind::random_pick;
  rnd.seed = 42;
  policies.push_back(rnd);
  for (auto kind : {Policy::Kind::inv_asp, Policy::Kind::tree, Policy::Kind::map,
                    Policy::Kind::avg}) {
    Policy p;
    p.kind = kind;
    policies.push_back(p);
  }
  Policy learned;
  learned.kind = Policy::Kind::learned;
  learned.model = &model;
  policies.push_back(learned);

  std::vector<int> ks(30);
  for (int k = 1; k <= 30; ++k) ks[k - 1] = k;
  auto report = reconstruct_all(cat, table, policies, ks);
  auto order = policy_mse_ordering(report);

  std::ostringstream os;
  for (const auto& [name, auc] : order) os << " " << name << "=" << auc;
  const std::string aucs = "auc:" + os.str();

  if (order.front().first != "learned") return "best policy is not learned; " + aucs;
  if (order[1].first != "avg") return "second policy is not avg; " + aucs;
  if (order.back().first != "random") return "worst policy is not random; " + aucs;
  const std::set<std::string> middle{order[2].first, order[3].first,
                                     order[4].first};
  if (middle != std::set<std::string>{"inv_asp", "tree", "map"})
    return "single metrics are not the middle of the order; " + aucs;
  if (!(order[0].second < order[1].second && order[1].second < order[2].second))
    return "learned/avg/metric areas are not strictly increasing; " + aucs;

  const double learned_auc = order[0].second;
  const double avg_auc = order[1].second;
  const double random_auc = order.back().second;
  if (!(learned_auc <= 0.95 * avg_auc))
    return "learned does not beat avg by 5%; " + aucs;
  for (const auto& [name, auc] : order)
    if (name != "random" && !(auc <= 0.8 * random_auc))
      return name + " does not beat random by 20%; " + aucs;
  return std::nullopt;
}

// 7. Threshold and neighbor-count contracts on a 30-language catalog.
Failure neighbor_contract() {
  auto full = testutil::load_fixture();
  std::vector<Language> sub(full.languages().begin(),
                            full.languages().begin() + 30);
  Catalog cat{std::move(sub)};
  auto table = synthesize_embeddings(cat, 8, 42, 0.0);
  std::set<std::string> supervised;
  for (const auto& l : cat.languages()) supervised.insert(l.id);

  {
    // exact equality against a direct recomputation
    auto ml = MetaLearner::random_init(3);
    std::vector<double> kth;
    for (const auto& a : supervised) {
      std::vector<double> dists;
      for (const auto& b : supervised) {
        if (a == b) continue;
        dists.push_back(ml.predict(metric_vector(cat, a, b)));
      }
      std::sort(dists.begin(), dists.end());
      kth.push_back(dists[24]);
    }
    std::sort(kth.begin(), kth.end());
    const double brute = (kth[14] + kth[15]) / 2.0;
    const double got = auto_threshold(cat, ml, supervised);
    if (got != brute)
      return "auto threshold " + fmt(got) + " != brute force " + fmt(brute);
  }

  Rng rng(777);
  for (int trial = 0; trial < 1000; ++trial) {
    auto ml = MetaLearner::random_init(rng.next_u64());
    const auto& target = cat.languages()[rng.index(cat.size())];

    NeighborPolicy narrow;
    narrow.threshold = rng.uniform(0.0, 2.0);
    NeighborPolicy wide = narrow;
    wide.threshold = *narrow.threshold + rng.uniform(0.0, 2.0);
    wide.distance_weighted = rng.uniform() < 0.5;

    const auto a = select_neighbors(cat, ml, supervised, table, target.id, narrow);
    const auto b = select_neighbors(cat, ml, supervised, table, target.id, wide);

    for (const auto* sel : {&a, &b}) {
      if (sel->neighbors.size() < 5 || sel->neighbors.size() > 25)
        return "neighbor count " + fmt(sel->neighbors.size()) +
               " outside [5, 25] for " + target.id;
      for (std::size_t i = 1; i < sel->neighbors.size(); ++i)
        if (sel->neighbors[i - 1].second > sel->neighbors[i].second)
          return "neighbors not sorted for " + target.id;
      for (std::size_t i = 5; i < sel->neighbors.size(); ++i)
        if (!(sel->neighbors[i].second < sel->threshold_used))
          return "neighbor beyond the floor at or above the threshold";
      // componentwise convex hull of the selected rows
      for (int d = 0; d < table.dim; ++d) {
        double lo = 1e300, hi = -1e300;
        for (const auto& [id, dist] : sel->neighbors) {
          lo = std::min(lo, table.at(id)[d]);
          hi = std::max(hi, table.at(id)[d]);
        }
        if (sel->approximated[d] < lo - 1e-12 || sel->approximated[d] > hi + 1e-12)
          return "approximation leaves the convex hull for " + target.id;
      }
    }
    // a wider threshold can only extend the selection
    if (a.neighbors.size() > b.neighbors.size())
      return "wider threshold shrank the selection for " + target.id;
    for (std::size_t i = 0; i < a.neighbors.size(); ++i)
      if (a.neighbors[i].first != b.neighbors[i].first)
        return "wider threshold reordered the selection for " + target.id;
  }
  return std::nullopt;
}

// 8. The CLI pipeline is byte-identical across reruns.
Failure pipeline_determinism() {
  const std::string cli = LANGSPACE_CLI_PATH;
  const std::string cat_args = " --catalog " + testutil::fixture_languages() +
                               " --inventories " + testutil::fixture_inventories();
  testutil::TempDir dirs[2];
  for (auto& dir : dirs) {
    // run from inside the scratch directory so every artifact path (and its
    // echo inside the report) is identical between the two runs
    const std::string prefix = "cd " + dir.file("") + " && " + cli + " --quiet ";
    const std::vector<std::string> cmds = {
        prefix + "less synth" + cat_args +
            " --dim 16 --noise 0.05 --seed 42 --out table.json",
        prefix + "meta train" + cat_args +
            " --embeddings table.json --seed 42 --out model.json",
        prefix + "eval reconstruct" + cat_args +
            " --embeddings table.json --model model.json"
            " --policies all --k 1..30 --seed 42 --format json"
            " --out report.json",
    };
    for (const auto& cmd : cmds) {
      const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
      const int code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
      if (code != 0)
        return "pipeline step exited with code " + fmt(code) + ": " + cmd;
    }
  }
  for (const char* name : {"table.json", "model.json", "report.json"}) {
    const auto a = testutil::read_file(dirs[0].file(name));
    const auto b = testutil::read_file(dirs[1].file(name));
    if (a.empty()) return std::string(name) + " is empty";
    if (a != b) return std::string(name) + " differs between reruns";
  }
  return std::nullopt;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Failure (*run)();
  };
  const std::vector<Criterion> criteria = {
      {"metric axioms", metric_axioms},
      {"geodesic accuracy", geodesic_accuracy},
      {"structure loss and gradient", structure_loss},
      {"embedding fit quality", embedding_fit},
      {"meta-learner capacity and fit", meta_learner},
      {"benchmark policy ordering", benchmark_ordering},
      {"neighbor selection contract", neighbor_contract},
      {"pipeline determinism", pipeline_determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Failure failure;
    try {
      failure = criteria[i].run();
    } catch (const std::exception& e) {
      failure = std::string("unexpected exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::ostringstream line;
    line.precision(2);
    line << std::fixed;
    if (failure) {
      ++failures;
      line << "[FAIL] " << (i + 1) << ". " << criteria[i].name << " (" << secs
           << " s): " << *failure;
    } else {
      line << "[PASS] " << (i + 1) << ". " << criteria[i].name << " (" << secs
           << " s)";
    }
    std::cout << line.str() << std::endl;
  }
  if (failures == 0)
    std::cout << "all " << criteria.size() << " acceptance criteria passed"
              << std::endl;
  else
    std::cout << failures << " of " << criteria.size()
              << " acceptance criteria failed" << std::endl;
  return failures;
}
