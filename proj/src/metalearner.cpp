#include "langspace/metalearner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <utility>

#include "json.hpp"
#include "langspace/errors.hpp"
#include "langspace/rng.hpp"

namespace langspace {

using json = nlohmann::json;

namespace {

double softplus(double z) { return z > 30.0 ? z : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double relu(double z) { return z > 0.0 ? z : 0.0; }

struct Activations {
  std::array<double, MetaLearner::kHidden> z1, h1, z2, h2;
  double z3 = 0.0;
  double y = 0.0;
};

Activations forward(const MetaLearner& ml, const MetricVector& m) {
  const double in[3] = {m.tree, m.map, m.inv_asp};
  Activations a;
  for (int j = 0; j < MetaLearner::kHidden; ++j) {
    double z = 0.0;
    for (int k = 0; k < MetaLearner::kIn; ++k) z += ml.w1()[j * 3 + k] * in[k];
    a.z1[j] = z;
    a.h1[j] = relu(z);
  }
  for (int j = 0; j < MetaLearner::kHidden; ++j) {
    double z = 0.0;
    for (int k = 0; k < MetaLearner::kHidden; ++k)
      z += ml.w2()[j * 8 + k] * a.h1[k];
    a.z2[j] = z;
    a.h2[j] = relu(z);
  }
  for (int k = 0; k < MetaLearner::kHidden; ++k) a.z3 += ml.w3()[k] * a.h2[k];
  a.y = softplus(a.z3);
  return a;
}

// Accumulates d(dy * y)/dw into g, given upstream dy = dL/dy for one sample.
void accumulate_gradient(const MetaLearner& ml, const MetricVector& m,
                         const Activations& a, double dy,
                         std::array<double, MetaLearner::kParams>& g) {
  const double in[3] = {m.tree, m.map, m.inv_asp};
  const double dz3 = dy * sigmoid(a.z3);

  std::array<double, MetaLearner::kHidden> dz2{};
  for (int k = 0; k < MetaLearner::kHidden; ++k) {
    g[88 + k] += dz3 * a.h2[k];
    dz2[k] = a.z2[k] > 0.0 ? dz3 * ml.w3()[k] : 0.0;
  }

  std::array<double, MetaLearner::kHidden> dh1{};
  for (int j = 0; j < MetaLearner::kHidden; ++j) {
    if (dz2[j] == 0.0) continue;
    for (int k = 0; k < MetaLearner::kHidden; ++k) {
      g[24 + j * 8 + k] += dz2[j] * a.h1[k];
      dh1[k] += dz2[j] * ml.w2()[j * 8 + k];
    }
  }

  for (int j = 0; j < MetaLearner::kHidden; ++j) {
    const double dz1 = a.z1[j] > 0.0 ? dh1[j] : 0.0;
    if (dz1 == 0.0) continue;
    for (int k = 0; k < MetaLearner::kIn; ++k) g[j * 3 + k] += dz1 * in[k];
  }
}

double& param_ref(MetaLearner& ml, int idx) {
  if (idx < 24) return ml.w1()[idx];
  if (idx < 88) return ml.w2()[idx - 24];
  return ml.w3()[idx - 88];
}

// Spectral norm via power iteration on W^T W; deterministic all-ones start.
double spectral_norm(const double* w, int rows, int cols) {
  std::vector<double> v(cols, 1.0 / std::sqrt(static_cast<double>(cols)));
  std::vector<double> wv(rows), u(cols);
  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    for (int r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (int c = 0; c < cols; ++c) acc += w[r * cols + c] * v[c];
      wv[r] = acc;
    }
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int r = 0; r < rows; ++r) acc += w[r * cols + c] * wv[r];
      u[c] = acc;
    }
    double norm = 0.0;
    for (double x : u) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (int c = 0; c < cols; ++c) v[c] = u[c] / norm;
    if (std::abs(norm - lambda) <= 1e-14 * std::max(norm, 1.0)) {
      lambda = norm;
      break;
    }
    lambda = norm;
  }
  return std::sqrt(lambda);
}

}  // namespace

MetaLearner MetaLearner::random_init(std::uint64_t seed) {
  Rng rng(seed);
  MetaLearner ml;
  for (auto& w : ml.w1_) w = rng.uniform(-0.5, 0.5);
  for (auto& w : ml.w2_) w = rng.uniform(-0.5, 0.5);
  for (auto& w : ml.w3_) w = rng.uniform(-0.5, 0.5);
  return ml;
}

double MetaLearner::predict(const MetricVector& m) const {
  return forward(*this, m).y;
}

std::array<double, MetaLearner::kParams> MetaLearner::loss_gradient(
    const MetricVector& m, double target) const {
  std::array<double, kParams> g{};
  const Activations a = forward(*this, m);
  accumulate_gradient(*this, m, a, 2.0 * (a.y - target), g);
  return g;
}

double MetaLearner::lipschitz_bound() const {
  return spectral_norm(w1_.data(), kHidden, kIn) *
         spectral_norm(w2_.data(), kHidden, kHidden) *
         spectral_norm(w3_.data(), 1, kHidden);
}

MetaLearner train(const Catalog& catalog, const EmbeddingTable& table,
                  const TrainConfig& cfg, TrainReport* report) {
  if (cfg.epochs <= 0) throw ValidationError("epochs must be positive");
  if (!(cfg.learning_rate > 0.0))
    throw ValidationError("learning rate must be positive");
  if (cfg.validation_fraction < 0.0 || cfg.validation_fraction >= 1.0)
    throw ValidationError("validation fraction must be in [0, 1)");

  const auto& langs = catalog.languages();
  const std::size_t n = langs.size();

  std::vector<MetricVector> inputs;
  std::vector<double> targets;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      inputs.push_back(metric_vector(langs[i], langs[j]));
      targets.push_back(euclidean(table.at(langs[i].id), table.at(langs[j].id)));
    }
  }
  const std::size_t total = targets.size();
  if (total < 2)
    throw ValidationError(
        "training needs at least three languages (two labelled pairs)");

  Rng rng(cfg.seed);
  std::vector<std::size_t> perm(total);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  const std::size_t n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(cfg.validation_fraction *
                                  static_cast<double>(total)));
  if (n_val >= total)
    throw ValidationError("validation split leaves no training pairs");
  std::vector<std::size_t> val_idx(perm.begin(), perm.begin() + n_val);
  std::vector<std::size_t> train_idx(perm.begin() + n_val, perm.end());

  MetaLearner net;
  for (auto& w : net.w1()) w = rng.uniform(-0.5, 0.5);
  for (auto& w : net.w2()) w = rng.uniform(-0.5, 0.5);
  for (auto& w : net.w3()) w = rng.uniform(-0.5, 0.5);

  auto mse_over = [&](const MetaLearner& ml,
                      const std::vector<std::size_t>& idx) {
    double acc = 0.0;
    for (std::size_t i : idx) {
      const double d = ml.predict(inputs[i]) - targets[i];
      acc += d * d;
    }
    return acc / static_cast<double>(idx.size());
  };

  MetaLearner best = net;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int halvings = 0;
  int since_best = 0;
  int epochs_run = 0;
  double prev_loss = mse_over(net, train_idx);
  const double inv_train = 1.0 / static_cast<double>(train_idx.size());

  std::vector<double> train_curve, val_curve;
  train_curve.reserve(cfg.epochs);
  val_curve.reserve(cfg.epochs);

  for (int ep = 0; ep < cfg.epochs; ++ep) {
    std::array<double, MetaLearner::kParams> g{};
    for (std::size_t i : train_idx) {
      const Activations a = forward(net, inputs[i]);
      accumulate_gradient(net, inputs[i], a,
                          2.0 * (a.y - targets[i]) * inv_train, g);
    }

    // Transient step-halving: retry the epoch's step at half the rate until
    // the training loss stops increasing; the next epoch starts fresh.
    const MetaLearner saved = net;
    double cur_lr = cfg.learning_rate;
    double new_loss = 0.0;
    while (true) {
      net = saved;
      for (int p = 0; p < MetaLearner::kParams; ++p)
        param_ref(net, p) -= cur_lr * g[p];
      new_loss = mse_over(net, train_idx);
      if (new_loss <= prev_loss + 1e-9 || cur_lr < 1e-14) break;
      cur_lr *= 0.5;
      ++halvings;
    }
    prev_loss = new_loss;
    const double val_loss = mse_over(net, val_idx);
    train_curve.push_back(new_loss);
    val_curve.push_back(val_loss);
    epochs_run = ep + 1;

    if (val_loss < best_val - 1e-12) {
      best_val = val_loss;
      best = net;
      best_epoch = ep;
      since_best = 0;
    } else if (++since_best > cfg.patience) {
      break;
    }
  }

  if (report) {
    report->train_curve = std::move(train_curve);
    report->val_curve = std::move(val_curve);
    report->best_val_loss = best_val;
    report->best_epoch = best_epoch;
    report->halvings = halvings;
    report->train_pairs = train_idx.size();
    report->val_pairs = val_idx.size();
    report->seed = cfg.seed;
    report->epochs_run = epochs_run;
  }
  return best;
}

double backprop_check(const MetaLearner& ml, const MetricVector& m,
                      double target) {
  const auto analytic = ml.loss_gradient(m, target);
  const double h = 1e-5;
  double worst = 0.0;
  MetaLearner probe = ml;
  for (int p = 0; p < MetaLearner::kParams; ++p) {
    const double orig = param_ref(probe, p);
    param_ref(probe, p) = orig + h;
    const double up = probe.predict(m) - target;
    param_ref(probe, p) = orig - h;
    const double dn = probe.predict(m) - target;
    param_ref(probe, p) = orig;
    const double fd = (up * up - dn * dn) / (2.0 * h);
    const double denom =
        std::max({std::abs(analytic[p]), std::abs(fd), 1e-8});
    worst = std::max(worst, std::abs(analytic[p] - fd) / denom);
  }
  return worst;
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

std::string save_model(const MetaLearner& ml, const TrainReport* report) {
  json root;
  root["arch"] = {MetaLearner::kIn, MetaLearner::kHidden, MetaLearner::kHidden,
                  1};
  root["activation"] = {{"hidden", "relu"}, {"output", "softplus"},
                        {"bias", false}};
  root["weights"] = {std::vector<double>(ml.w1().begin(), ml.w1().end()),
                     std::vector<double>(ml.w2().begin(), ml.w2().end()),
                     std::vector<double>(ml.w3().begin(), ml.w3().end())};
  if (report) {
    root["training"] = {{"best_val_loss", report->best_val_loss},
                        {"best_epoch", report->best_epoch},
                        {"halvings", report->halvings},
                        {"train_pairs", report->train_pairs},
                        {"val_pairs", report->val_pairs},
                        {"seed", report->seed},
                        {"epochs_run", report->epochs_run}};
  }
  return root.dump(2) + "\n";
}

void save_model(const MetaLearner& ml, const std::string& path,
                const TrainReport* report) {
  std::ofstream out(path);
  if (!out) throw InternalError("cannot write '" + path + "'");
  out << save_model(ml, report);
}

MetaLearner load_model(const std::string& path) {
  const json root = read_json_file(path);
  if (!root.is_object() || !root.contains("arch") || !root.contains("weights"))
    throw ValidationError("model file '" + path +
                          "' must carry arch and weights");
  const std::vector<int> want_arch = {3, 8, 8, 1};
  if (root["arch"].get<std::vector<int>>() != want_arch)
    throw ValidationError("unsupported architecture in '" + path + "'");
  if (root.contains("activation")) {
    const auto& act = root["activation"];
    if (act.value("hidden", "relu") != "relu" ||
        act.value("output", "softplus") != "softplus" ||
        act.value("bias", false) != false)
      throw ValidationError("unsupported activation spec in '" + path + "'");
  }
  const auto& w = root["weights"];
  if (!w.is_array() || w.size() != 3 || w[0].size() != 24 ||
      w[1].size() != 64 || w[2].size() != 8)
    throw ValidationError("model weights in '" + path +
                          "' must be three arrays of 24, 64 and 8 numbers");
  MetaLearner ml;
  auto fill = [&](const json& arr, double* dst, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      if (!arr[i].is_number())
        throw ValidationError("non-numeric weight in '" + path + "'");
      dst[i] = arr[i].get<double>();
      if (!std::isfinite(dst[i]))
        throw ValidationError("non-finite weight in '" + path + "'");
    }
  };
  fill(w[0], ml.w1().data(), 24);
  fill(w[1], ml.w2().data(), 64);
  fill(w[2], ml.w3().data(), 8);
  return ml;
}

}  // namespace langspace
