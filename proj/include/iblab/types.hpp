#ifndef IBLAB_TYPES_HPP
#define IBLAB_TYPES_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "iblab/common.hpp"

namespace iblab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Feature matrix Z: one column per sample, dim() rows.
struct FeatureMatrix {
  Matrix values;

  int dim() const { return static_cast<int>(values.rows()); }
  int samples() const { return static_cast<int>(values.cols()); }
};

// Throws InputDomainError if z is empty or contains non-finite entries.
void require_valid(const FeatureMatrix& z);

// Per-sample class assignment. Realizes the diagonal membership matrices:
// sample i belongs to class assignment[i], classes indexed in [0, num_classes).
struct Partition {
  int num_classes = 0;
  std::vector<int> assignment;

  int samples() const { return static_cast<int>(assignment.size()); }
  // Count of samples per class. Throws PartitionError if an index is out of
  // range or a class is empty.
  std::vector<int> class_sizes() const;
  // Column indices of each class, in sample order.
  std::vector<std::vector<int>> class_members() const;
};

// Validates the partition against a feature matrix with sample_count columns.
void require_valid(const Partition& pi, int sample_count);

// Coding precision (distortion level). Strictly positive.
class Precision {
 public:
  explicit Precision(double epsilon);
  double value() const { return epsilon_; }

 private:
  double epsilon_;
};

enum class ActivationKind { kTanh, kRelu, kLinear };

const char* to_string(ActivationKind kind);
ActivationKind activation_from_string(const std::string& name);

}  // namespace iblab

#endif  // IBLAB_TYPES_HPP
