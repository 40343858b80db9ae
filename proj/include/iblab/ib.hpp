#ifndef IBLAB_IB_HPP
#define IBLAB_IB_HPP

#include <iosfwd>
#include <optional>
#include <vector>

#include "iblab/types.hpp"

namespace iblab::ib {

// Tradeoff coefficient between the two mutual-information terms. Strictly
// positive; no upper bound.
class TradeoffBeta {
 public:
  explicit TradeoffBeta(double beta);
  double value() const { return beta_; }

 private:
  double beta_;
};

enum class EntropyRegime { kDiscrete, kDifferential };

// H(Z), H(Z|X), H(Z|Y) in nats. In the discrete regime conditioning cannot
// increase entropy, so h_z_given_* <= h_z is enforced (1e-9 slack);
// differential entropies may be negative and skip that check.
struct EntropyTriple {
  double h_z = 0.0;
  double h_z_given_x = 0.0;
  double h_z_given_y = 0.0;
  EntropyRegime regime = EntropyRegime::kDifferential;
};

EntropyTriple make_entropy_triple(double h_z, double h_z_given_x,
                                  double h_z_given_y, EntropyRegime regime);

// I(X,Z) - beta * I(Y,Z).
double ib_lagrangian(double i_xz, double i_yz, TradeoffBeta beta);

// (1 - beta)(H(Z) - H(Z|X)) + beta (H(Z|Y) - H(Z|X)). Equal to the Lagrangian
// whenever the triple and the MI pair are mutually consistent; the inserted
// beta (H(Z|X) - H(Z|X)) term is identically zero.
double transformed_ib(const EntropyTriple& e, TradeoffBeta beta);

// Decomposition of transformed_ib, exposed so the sign flip of the first
// term at beta = 1 is directly inspectable.
struct TransformedTerms {
  double info_term = 0.0;     // (1 - beta)(H(Z) - H(Z|X))
  double entropy_gap = 0.0;   // beta (H(Z|Y) - H(Z|X))
  double total() const { return info_term + entropy_gap; }
};
TransformedTerms transformed_ib_terms(const EntropyTriple& e,
                                      TradeoffBeta beta);

// Linear-Gaussian noise channel: zhat = Theta x + c, c ~ N(0, eps^2/d E),
// output dimension d = theta.rows().
struct GaussianChannel {
  Matrix theta;    // d x D
  Matrix sigma_x;  // D x D, symmetric PSD
  Precision eps;
};

// Throws InputDomainError when the channel invariants fail (asymmetric or
// indefinite sigma_x, non-finite entries, shape mismatch).
void require_valid(const GaussianChannel& ch);

struct SchurCovariances {
  Matrix sigma_zhat;         // Theta Sigma_X Theta^T + eps^2/d E
  Matrix sigma_x_zhat;       // Theta Sigma_X
  Matrix conditional_closed; // eps^2/d E
  // Schur-complement route Sigma_zhat - Sigma_xz Sigma_X^-1 Sigma_zx; empty
  // when sigma_x is singular and the inverse path is skipped.
  std::optional<Matrix> conditional_schur;
};

SchurCovariances schur_covariances(const GaussianChannel& ch);

// Differential entropy of N(0, sigma): 1/2 ln((2 pi e)^dim det sigma), nats.
// Throws InputDomainError naming the minimum eigenvalue when sigma is not
// positive definite.
double gaussian_entropy(const Matrix& sigma);

// Closed-form Gaussian objective
//   (1-beta)/2 log det(d/(M eps^2) Z Z^T + E)
//   + beta/2 sum_j tr(Pi_j)/M log det(d/(tr(Pi_j) eps^2) Z Pi_j Z^T + E)
// which equals (1-beta) R + beta R^c.
double gaussian_delta_i(const FeatureMatrix& z, const Partition& pi,
                        Precision eps, TradeoffBeta beta);

// -gaussian_delta_i; the quantity the bottleneck objective maximizes.
// Algebraically equal to beta * rate_reduction - coding_rate.
double neg_delta_i(const FeatureMatrix& z, const Partition& pi, Precision eps,
                   TradeoffBeta beta);

struct SpecialCaseRow {
  double beta = 0.0;
  double neg_delta_i = 0.0;
  double delta_r = 0.0;
  double residual = 0.0;    // |neg_delta_i / beta - delta_r|
  double predicted = 0.0;   // coding_rate / beta
  bool pass = false;
};

struct SpecialCaseReport {
  std::vector<SpecialCaseRow> rows;     // one per requested beta, input order
  bool residual_monotone = true;        // strictly decreasing in beta
  bool all_pass() const;
};

inline constexpr double kSpecialCaseRelTol = 1e-9;

// Checks, per beta, that the scaled objective approaches the rate reduction
// at the exact speed coding_rate / beta.
SpecialCaseReport verify_special_case(const FeatureMatrix& z,
                                      const Partition& pi, Precision eps,
                                      const std::vector<TradeoffBeta>& betas);

// {0.5, 1, 2, 10, 100, 1000, 10000}: spans both beta regimes plus the
// asymptotic one.
std::vector<TradeoffBeta> default_beta_sweep();

// CSV with header beta,neg_delta_i,delta_r,residual,predicted,pass.
void write_report_csv(const SpecialCaseReport& report, std::ostream& out);

}  // namespace iblab::ib

#endif  // IBLAB_IB_HPP
