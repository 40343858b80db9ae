#include "iblab/types.hpp"

#include <cmath>

namespace iblab {

void require_valid(const FeatureMatrix& z) {
  if (z.values.rows() < 1 || z.values.cols() < 1) {
    throw InputDomainError("feature matrix must have at least one row and one column");
  }
  if (!z.values.allFinite()) {
    throw InputDomainError("feature matrix contains non-finite entries");
  }
}

std::vector<int> Partition::class_sizes() const {
  if (num_classes < 1) {
    throw PartitionError("partition needs at least one class");
  }
  std::vector<int> sizes(num_classes, 0);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const int c = assignment[i];
    if (c < 0 || c >= num_classes) {
      throw PartitionError("sample " + std::to_string(i) + " has class " +
                           std::to_string(c) + ", outside [0, " +
                           std::to_string(num_classes) + ")");
    }
    ++sizes[c];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (sizes[c] == 0) {
      throw PartitionError("class " + std::to_string(c) + " is empty");
    }
  }
  return sizes;
}

std::vector<std::vector<int>> Partition::class_members() const {
  class_sizes();  // runs the invariant checks
  std::vector<std::vector<int>> members(num_classes);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    members[assignment[i]].push_back(static_cast<int>(i));
  }
  return members;
}

void require_valid(const Partition& pi, int sample_count) {
  if (pi.samples() != sample_count) {
    throw InputDomainError("partition covers " + std::to_string(pi.samples()) +
                           " samples, feature matrix has " +
                           std::to_string(sample_count));
  }
  pi.class_sizes();
}

Precision::Precision(double epsilon) : epsilon_(epsilon) {
  if (!std::isfinite(epsilon) || epsilon <= 0.0) {
    throw InputDomainError("precision must be a finite positive real");
  }
}

const char* to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kTanh:
      return "tanh";
    case ActivationKind::kRelu:
      return "relu";
    case ActivationKind::kLinear:
      return "linear";
  }
  return "?";
}

ActivationKind activation_from_string(const std::string& name) {
  if (name == "tanh") return ActivationKind::kTanh;
  if (name == "relu") return ActivationKind::kRelu;
  if (name == "linear") return ActivationKind::kLinear;
  throw InputDomainError("unknown activation '" + name +
                         "' (expected tanh, relu, or linear)");
}

}  // namespace iblab
