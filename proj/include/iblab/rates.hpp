#ifndef IBLAB_RATES_HPP
#define IBLAB_RATES_HPP

#include "iblab/types.hpp"

namespace iblab::rates {

// log det(E + alpha * Z Z^T), natural log. Factorizes on the smaller Gram
// side (d x d or M x M give the same value), so the cost is O(min(d,M)^3).
double logdet_gram(const FeatureMatrix& z, double alpha);

// Whole-set coding rate R(Z, eps) = 1/2 log det(d/(M eps^2) Z Z^T + E), nats.
double coding_rate(const FeatureMatrix& z, Precision eps);

// Class-conditional rate
//   R^c(Z, eps | Pi) = 1/2 sum_j tr(Pi_j)/M log det(d/(tr(Pi_j) eps^2) Z Pi_j Z^T + E)
// computed per class on the column submatrix Z_j.
double conditional_coding_rate(const FeatureMatrix& z, const Partition& pi,
                               Precision eps);

// Rate reduction: coding_rate - conditional_coding_rate.
double rate_reduction(const FeatureMatrix& z, const Partition& pi,
                      Precision eps);

// Subtracts the per-row sample mean. Off the default path: raw activations
// are analyzed as logged unless the caller asks for centering.
FeatureMatrix center_rows(const FeatureMatrix& z);

// Column submatrix of one class.
FeatureMatrix class_columns(const FeatureMatrix& z, const Partition& pi,
                            int cls);

}  // namespace iblab::rates

#endif  // IBLAB_RATES_HPP
