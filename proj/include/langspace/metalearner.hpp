#ifndef LANGSPACE_METALEARNER_HPP
#define LANGSPACE_METALEARNER_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "langspace/catalog.hpp"
#include "langspace/embedding.hpp"
#include "langspace/metrics.hpp"

namespace langspace {

/// The learned distance function: a bias-free perceptron 3 -> 8 -> 8 -> 1
/// (24 + 64 + 8 = 96 parameters), rectifier hidden units, softplus output.
class MetaLearner {
 public:
  static constexpr int kIn = 3;
  static constexpr int kHidden = 8;
  static constexpr int kParams = 96;

  MetaLearner() = default;

  /// Weights uniform in [-0.5, 0.5] from the seeded PRNG, w1 then w2 then w3,
  /// row-major.
  static MetaLearner random_init(std::uint64_t seed);

  double predict(const MetricVector& m) const;

  /// Squared-error gradient d/dw (predict(m) - target)^2 over all 96
  /// parameters, in the same order the weights are stored.
  std::array<double, kParams> loss_gradient(const MetricVector& m,
                                            double target) const;

  static constexpr int parameter_count() { return kParams; }

  /// Product of the spectral norms of the three weight matrices: a Lipschitz
  /// bound for predict on bounded inputs (softplus and relu are 1-Lipschitz).
  double lipschitz_bound() const;

  std::array<double, 24>& w1() { return w1_; }
  std::array<double, 64>& w2() { return w2_; }
  std::array<double, 8>& w3() { return w3_; }
  const std::array<double, 24>& w1() const { return w1_; }
  const std::array<double, 64>& w2() const { return w2_; }
  const std::array<double, 8>& w3() const { return w3_; }

 private:
  // w1_[j*3+k]: input k -> hidden1 j; w2_[j*8+k]: hidden1 k -> hidden2 j;
  // w3_[k]: hidden2 k -> output.
  std::array<double, 24> w1_{};
  std::array<double, 64> w2_{};
  std::array<double, 8> w3_{};
};

struct TrainConfig {
  int epochs = 6000;
  double learning_rate = 1.0;
  std::uint64_t seed = 42;
  double validation_fraction = 0.1;
  int patience = 600;
};

struct TrainReport {
  std::vector<double> train_curve;
  std::vector<double> val_curve;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  int halvings = 0;  // step-halving events on loss increase
  std::size_t train_pairs = 0;
  std::size_t val_pairs = 0;
  std::uint64_t seed = 0;
  int epochs_run = 0;
};

/// Minimize mean squared error between predict(m(l1,l2)) and
/// euclidean(e(l1), e(l2)) over all unordered catalog pairs, split into
/// train/validation by seeded shuffle. Full-batch descent with step-halving
/// on loss increase; returns the network at the best validation loss.
MetaLearner train(const Catalog& catalog, const EmbeddingTable& table,
                  const TrainConfig& cfg, TrainReport* report = nullptr);

/// Max relative error between analytic gradients of the squared error and
/// central finite differences (h = 1e-5) over all 96 parameters.
double backprop_check(const MetaLearner& ml, const MetricVector& m,
                      double target);

/// JSON {"arch":[3,8,8,1], "activation":{...}, "weights":[[..],[..],[..]],
/// "training":{...}}; decimal serialization preserves weights exactly.
std::string save_model(const MetaLearner& ml, const TrainReport* report = nullptr);
void save_model(const MetaLearner& ml, const std::string& path,
                const TrainReport* report = nullptr);
MetaLearner load_model(const std::string& path);

}  // namespace langspace

#endif  // LANGSPACE_METALEARNER_HPP
