#include "iblab/rates.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace iblab::rates {

double logdet_gram(const FeatureMatrix& z, double alpha) {
  require_valid(z);
  if (!std::isfinite(alpha) || alpha <= 0.0) {
    throw InputDomainError("gram scale alpha must be a finite positive real");
  }
  const auto& v = z.values;
  // det(E_d + a Z Z^T) = det(E_M + a Z^T Z); factorize the smaller side.
  Matrix gram;
  if (v.rows() <= v.cols()) {
    gram.noalias() = v * v.transpose();
  } else {
    gram.noalias() = v.transpose() * v;
  }
  gram *= alpha;
  gram.diagonal().array() += 1.0;

  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw NumericError("Cholesky factorization failed on " +
                       std::to_string(gram.rows()) + "x" +
                       std::to_string(gram.cols()) + " Gram matrix");
  }
  const auto diag = llt.matrixLLT().diagonal();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag[i] > 0.0) || !std::isfinite(diag[i])) {
      throw NumericError("non-positive Cholesky pivot on " +
                         std::to_string(gram.rows()) + "x" +
                         std::to_string(gram.cols()) + " Gram matrix");
    }
    logdet += std::log(diag[i]);
  }
  return 2.0 * logdet;
}

double coding_rate(const FeatureMatrix& z, Precision eps) {
  const double d = z.dim();
  const double m = z.samples();
  const double alpha = d / (m * eps.value() * eps.value());
  return 0.5 * logdet_gram(z, alpha);
}

FeatureMatrix class_columns(const FeatureMatrix& z, const Partition& pi,
                            int cls) {
  const auto members = pi.class_members();
  const auto& idx = members.at(cls);
  Matrix sub(z.values.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    sub.col(static_cast<Eigen::Index>(k)) = z.values.col(idx[k]);
  }
  return FeatureMatrix{std::move(sub)};
}

double conditional_coding_rate(const FeatureMatrix& z, const Partition& pi,
                               Precision eps) {
  require_valid(z);
  require_valid(pi, z.samples());
  const double d = z.dim();
  const double m = z.samples();
  const auto members = pi.class_members();

  double total = 0.0;
  for (int c = 0; c < pi.num_classes; ++c) {
    const auto& idx = members[c];
    Matrix sub(z.values.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      sub.col(static_cast<Eigen::Index>(k)) = z.values.col(idx[k]);
    }
    const double tr = static_cast<double>(idx.size());  // tr(Pi_j)
    const double alpha = d / (tr * eps.value() * eps.value());
    total += (tr / m) * 0.5 * logdet_gram(FeatureMatrix{std::move(sub)}, alpha);
  }
  return total;
}

double rate_reduction(const FeatureMatrix& z, const Partition& pi,
                      Precision eps) {
  return coding_rate(z, eps) - conditional_coding_rate(z, pi, eps);
}

FeatureMatrix center_rows(const FeatureMatrix& z) {
  require_valid(z);
  Matrix centered = z.values;
  centered.colwise() -= z.values.rowwise().mean();
  return FeatureMatrix{std::move(centered)};
}

}  // namespace iblab::rates
