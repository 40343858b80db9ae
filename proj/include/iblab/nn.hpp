#ifndef IBLAB_NN_HPP
#define IBLAB_NN_HPP

#include <cstdint>
#include <vector>

#include "iblab/mi_est.hpp"
#include "iblab/types.hpp"

namespace iblab::nn {

struct MLPConfig {
  int input_dim = 0;
  std::vector<int> hidden_widths;
  ActivationKind activation = ActivationKind::kTanh;
  int num_classes = 2;
  std::uint64_t seed = 1;
  double learning_rate = 0.1;
  int batch_size = 256;
  int epochs = 0;
  double momentum = 0.0;  // 0 = plain sgd
};

// Throws InputDomainError naming the offending field. train_samples bounds
// the batch size; pass 0 to skip that check.
void require_valid(const MLPConfig& cfg, int train_samples = 0);

struct Layer {
  Matrix w;  // out x in
  Vector b;
};

struct Model {
  std::vector<Layer> layers;  // hidden layers then the softmax output layer
  ActivationKind activation = ActivationKind::kTanh;
  int input_dim = 0;
  int num_classes = 0;

  int hidden_count() const { return static_cast<int>(layers.size()) - 1; }
  std::size_t parameter_count() const;
  // FNV-1a over the parameter bytes; equal seeds give equal checksums.
  std::uint64_t weight_checksum() const;
};

// Uniform fan-scaled init, range +-sqrt(6/(fan_in+fan_out)), zero biases,
// drawn in a fixed order from cfg.seed.
Model init(const MLPConfig& cfg);

struct Forward {
  std::vector<Matrix> hidden;  // one per hidden layer, width x batch
  Matrix probs;                // num_classes x batch, columns sum to 1
};

Forward forward(const Model& model, const Matrix& batch);

// Mean cross-entropy of the true classes under probs.
double cross_entropy(const Matrix& probs, const std::vector<int>& labels);
double accuracy(const Matrix& probs, const std::vector<int>& labels);

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;       // mean cross-entropy on the training set
  double train_acc = 0.0;
  double test_acc = 0.0;   // NaN when no test set was given
};

struct TrainTrace {
  std::vector<int> logged_epochs;
  std::vector<EpochMetrics> metrics;                       // per logged epoch
  std::vector<std::vector<mi::ActivationSnapshot>> snapshots;  // [epoch][layer]
};

// Minibatch SGD on mean cross-entropy with seeded shuffling. At every epoch
// in log_schedule (0 = before any update) the full eval set is forwarded and
// all hidden layers are snapshotted. Reruns with equal inputs reproduce the
// trace bit-identically. Throws NumericError naming epoch and batch if the
// loss goes non-finite.
TrainTrace train(Model& model, const Matrix& train_x,
                 const std::vector<int>& train_y, const Matrix& test_x,
                 const std::vector<int>& test_y, const Matrix& eval_x,
                 const MLPConfig& cfg, const std::vector<int>& log_schedule);

// Max relative error between analytic gradients and central differences
// (step 1e-5) over every parameter. Meant for models of <= ~200 parameters.
double gradient_check(const Model& model, const Matrix& x,
                      const std::vector<int>& y);

// {0} + round(r^k) deduplicated, r fixed so ~target_points values span
// [1, epochs]. Dense early, sparse late.
std::vector<int> geometric_log_schedule(int epochs, int target_points = 60);

}  // namespace iblab::nn

#endif  // IBLAB_NN_HPP
