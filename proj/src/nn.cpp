#include "iblab/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "iblab/rng.hpp"

namespace iblab::nn {

void require_valid(const MLPConfig& cfg, int train_samples) {
  if (cfg.input_dim < 1) throw InputDomainError("input_dim must be positive");
  if (cfg.hidden_widths.empty()) {
    throw InputDomainError("hidden_widths must be nonempty");
  }
  for (const int w : cfg.hidden_widths) {
    if (w < 1) throw InputDomainError("hidden_widths entries must be positive");
  }
  if (cfg.num_classes < 2) {
    throw InputDomainError("num_classes must be at least 2");
  }
  if (!(cfg.learning_rate > 0.0) && cfg.learning_rate != 0.0) {
    throw InputDomainError("learning_rate must be nonnegative");
  }
  if (!std::isfinite(cfg.learning_rate)) {
    throw InputDomainError("learning_rate must be finite");
  }
  if (cfg.batch_size < 1) throw InputDomainError("batch_size must be positive");
  if (train_samples > 0 && cfg.batch_size > train_samples) {
    throw InputDomainError("batch_size exceeds training-set size");
  }
  if (cfg.epochs < 0) throw InputDomainError("epochs must be nonnegative");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) {
    throw InputDomainError("momentum must lie in [0, 1)");
  }
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) {
    n += static_cast<std::size_t>(l.w.size()) +
         static_cast<std::size_t>(l.b.size());
  }
  return n;
}

std::uint64_t Model::weight_checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, &p[i], sizeof(bits));
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xff;
        h *= 1099511628211ull;
      }
    }
  };
  for (const auto& l : layers) {
    mix(l.w.data(), static_cast<std::size_t>(l.w.size()));
    mix(l.b.data(), static_cast<std::size_t>(l.b.size()));
  }
  return h;
}

Model init(const MLPConfig& cfg) {
  require_valid(cfg);
  Model model;
  model.activation = cfg.activation;
  model.input_dim = cfg.input_dim;
  model.num_classes = cfg.num_classes;

  std::vector<int> dims;
  dims.push_back(cfg.input_dim);
  dims.insert(dims.end(), cfg.hidden_widths.begin(), cfg.hidden_widths.end());
  dims.push_back(cfg.num_classes);

  Rng rng(cfg.seed);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const int fan_in = dims[i];
    const int fan_out = dims[i + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Layer layer;
    layer.w.resize(fan_out, fan_in);
    // Column-major fill order, fixed for reproducibility.
    for (Eigen::Index c = 0; c < layer.w.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
        layer.w(r, c) = rng.uniform(-bound, bound);
      }
    }
    layer.b = Vector::Zero(fan_out);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

namespace {

void apply_activation(Matrix& h, ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kTanh:
      h = h.array().tanh();
      break;
    case ActivationKind::kRelu:
      h = h.cwiseMax(0.0);
      break;
    case ActivationKind::kLinear:
      break;
  }
}

// Derivative in terms of the activation output.
Matrix activation_grad(const Matrix& h, ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kTanh:
      return 1.0 - h.array().square();
    case ActivationKind::kRelu:
      return (h.array() > 0.0).cast<double>();
    case ActivationKind::kLinear:
      return Matrix::Ones(h.rows(), h.cols());
  }
  return Matrix();
}

Matrix softmax(const Matrix& logits) {
  Matrix p = logits;
  const Eigen::RowVectorXd maxes = p.colwise().maxCoeff();
  p.rowwise() -= maxes;
  p = p.array().exp();
  const Eigen::RowVectorXd sums = p.colwise().sum();
  p.array().rowwise() /= sums.array();
  return p;
}

struct Grads {
  std::vector<Matrix> w;
  std::vector<Vector> b;
};

// Forward + backward on one batch; returns mean cross-entropy.
double backprop(const Model& model, const Matrix& x,
                const std::vector<int>& y, Grads& grads) {
  const auto n_layers = model.layers.size();
  std::vector<Matrix> acts;  // input then hidden outputs
  acts.reserve(n_layers);
  acts.push_back(x);
  for (std::size_t i = 0; i + 1 < n_layers; ++i) {
    Matrix h = model.layers[i].w * acts.back();
    h.colwise() += model.layers[i].b;
    apply_activation(h, model.activation);
    acts.push_back(std::move(h));
  }
  Matrix logits = model.layers.back().w * acts.back();
  logits.colwise() += model.layers.back().b;
  const Matrix probs = softmax(logits);

  const auto batch = x.cols();
  double loss = 0.0;
  Matrix delta = probs;
  for (Eigen::Index i = 0; i < batch; ++i) {
    loss -= std::log(std::max(probs(y[static_cast<std::size_t>(i)], i),
                              1e-300));
    delta(y[static_cast<std::size_t>(i)], i) -= 1.0;
  }
  loss /= static_cast<double>(batch);
  delta /= static_cast<double>(batch);

  for (std::size_t li = n_layers; li-- > 0;) {
    grads.w[li].noalias() = delta * acts[li].transpose();
    grads.b[li] = delta.rowwise().sum();
    if (li > 0) {
      Matrix back = model.layers[li].w.transpose() * delta;
      delta = back.cwiseProduct(activation_grad(acts[li], model.activation));
    }
  }
  return loss;
}

}  // namespace

Forward forward(const Model& model, const Matrix& batch) {
  if (batch.rows() != model.input_dim) {
    throw InputDomainError("batch has " + std::to_string(batch.rows()) +
                           " features, model expects " +
                           std::to_string(model.input_dim));
  }
  Forward out;
  Matrix h = batch;
  for (std::size_t i = 0; i + 1 < model.layers.size(); ++i) {
    Matrix next = model.layers[i].w * h;
    next.colwise() += model.layers[i].b;
    apply_activation(next, model.activation);
    out.hidden.push_back(next);
    h = std::move(next);
  }
  Matrix logits = model.layers.back().w * h;
  logits.colwise() += model.layers.back().b;
  out.probs = softmax(logits);
  return out;
}

double cross_entropy(const Matrix& probs, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(probs.cols()) != labels.size()) {
    throw InputDomainError("probability columns do not match label count");
  }
  double loss = 0.0;
  for (Eigen::Index i = 0; i < probs.cols(); ++i) {
    loss -= std::log(
        std::max(probs(labels[static_cast<std::size_t>(i)], i), 1e-300));
  }
  return loss / static_cast<double>(probs.cols());
}

double accuracy(const Matrix& probs, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(probs.cols()) != labels.size()) {
    throw InputDomainError("probability columns do not match label count");
  }
  std::int64_t hits = 0;
  for (Eigen::Index i = 0; i < probs.cols(); ++i) {
    Eigen::Index arg = 0;
    probs.col(i).maxCoeff(&arg);
    if (arg == labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probs.cols());
}

TrainTrace train(Model& model, const Matrix& train_x,
                 const std::vector<int>& train_y, const Matrix& test_x,
                 const std::vector<int>& test_y, const Matrix& eval_x,
                 const MLPConfig& cfg, const std::vector<int>& log_schedule) {
  require_valid(cfg, static_cast<int>(train_x.cols()));
  if (static_cast<std::size_t>(train_x.cols()) != train_y.size()) {
    throw InputDomainError("training labels do not match sample count");
  }
  const std::set<int> log_at(log_schedule.begin(), log_schedule.end());
  for (const int e : log_at) {
    if (e < 0 || e > cfg.epochs) {
      throw InputDomainError("log schedule entry " + std::to_string(e) +
                             " outside [0, epochs]");
    }
  }

  TrainTrace trace;
  auto log_epoch = [&](int epoch) {
    const Forward eval = forward(model, eval_x);
    std::vector<mi::ActivationSnapshot> snaps;
    snaps.reserve(eval.hidden.size());
    for (std::size_t l = 0; l < eval.hidden.size(); ++l) {
      mi::ActivationSnapshot s;
      s.epoch = epoch;
      s.layer = static_cast<int>(l);
      s.values = eval.hidden[l];
      s.kind = cfg.activation;
      snaps.push_back(std::move(s));
    }
    const Forward on_train = forward(model, train_x);
    EpochMetrics m;
    m.epoch = epoch;
    m.loss = cross_entropy(on_train.probs, train_y);
    m.train_acc = accuracy(on_train.probs, train_y);
    m.test_acc = test_x.cols() > 0
                     ? accuracy(forward(model, test_x).probs, test_y)
                     : std::nan("");
    trace.logged_epochs.push_back(epoch);
    trace.metrics.push_back(m);
    trace.snapshots.push_back(std::move(snaps));
  };

  Grads grads, velocity;
  grads.w.resize(model.layers.size());
  grads.b.resize(model.layers.size());
  if (cfg.momentum > 0.0) {
    velocity.w.resize(model.layers.size());
    velocity.b.resize(model.layers.size());
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
      velocity.w[i] = Matrix::Zero(model.layers[i].w.rows(),
                                   model.layers[i].w.cols());
      velocity.b[i] = Vector::Zero(model.layers[i].b.size());
    }
  }

  Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  const auto n = train_x.cols();
  std::vector<int> order(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  if (log_at.count(0)) log_epoch(0);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index count =
          std::min<Eigen::Index>(cfg.batch_size, n - start);
      Matrix xb(train_x.rows(), count);
      std::vector<int> yb(static_cast<std::size_t>(count));
      for (Eigen::Index k = 0; k < count; ++k) {
        const int src = order[static_cast<std::size_t>(start + k)];
        xb.col(k) = train_x.col(src);
        yb[static_cast<std::size_t>(k)] = train_y[static_cast<std::size_t>(src)];
      }
      const double loss = backprop(model, xb, yb, grads);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss at epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(start / cfg.batch_size));
      }
      for (std::size_t li = 0; li < model.layers.size(); ++li) {
        if (cfg.momentum > 0.0) {
          velocity.w[li] = cfg.momentum * velocity.w[li] -
                           cfg.learning_rate * grads.w[li];
          velocity.b[li] = cfg.momentum * velocity.b[li] -
                           cfg.learning_rate * grads.b[li];
          model.layers[li].w += velocity.w[li];
          model.layers[li].b += velocity.b[li];
        } else {
          model.layers[li].w -= cfg.learning_rate * grads.w[li];
          model.layers[li].b -= cfg.learning_rate * grads.b[li];
        }
      }
    }
    if (log_at.count(epoch)) log_epoch(epoch);
  }
  return trace;
}

double gradient_check(const Model& model, const Matrix& x,
                      const std::vector<int>& y) {
  Model probe = model;
  Grads grads;
  grads.w.resize(probe.layers.size());
  grads.b.resize(probe.layers.size());
  backprop(probe, x, y, grads);

  const double step = 1e-5;
  auto loss_at = [&]() {
    const Forward f = forward(probe, x);
    return cross_entropy(f.probs, y);
  };

  double worst = 0.0;
  auto check_param = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + step;
    const double up = loss_at();
    param = saved - step;
    const double down = loss_at();
    param = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom =
        std::max({std::abs(analytic), std::abs(numeric), 1e-4});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };

  for (std::size_t li = 0; li < probe.layers.size(); ++li) {
    auto& layer = probe.layers[li];
    for (Eigen::Index i = 0; i < layer.w.size(); ++i) {
      check_param(layer.w.data()[i], grads.w[li].data()[i]);
    }
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) {
      check_param(layer.b.data()[i], grads.b[li].data()[i]);
    }
  }
  return worst;
}

std::vector<int> geometric_log_schedule(int epochs, int target_points) {
  if (epochs < 0) throw InputDomainError("epochs must be nonnegative");
  std::set<int> sched{0};
  if (epochs >= 1) {
    const int k_max = std::max(1, target_points - 1);
    const double r = std::pow(static_cast<double>(epochs),
                              1.0 / static_cast<double>(k_max));
    for (int k = 0; k <= k_max; ++k) {
      const int e = static_cast<int>(std::llround(std::pow(r, k)));
      sched.insert(std::clamp(e, 1, epochs));
    }
    sched.insert(epochs);
  }
  return std::vector<int>(sched.begin(), sched.end());
}

}  // namespace iblab::nn
