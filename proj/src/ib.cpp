#include "iblab/ib.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "iblab/rates.hpp"

namespace iblab::ib {

namespace {
constexpr double kTwoPiE = 17.079468445347134;  // 2 pi e
constexpr double kSymTol = 1e-10;
}  // namespace

TradeoffBeta::TradeoffBeta(double beta) : beta_(beta) {
  if (!std::isfinite(beta) || beta <= 0.0) {
    throw InputDomainError("tradeoff beta must be a finite positive real");
  }
}

EntropyTriple make_entropy_triple(double h_z, double h_z_given_x,
                                  double h_z_given_y, EntropyRegime regime) {
  if (!std::isfinite(h_z) || !std::isfinite(h_z_given_x) ||
      !std::isfinite(h_z_given_y)) {
    throw InputDomainError("entropy triple must be finite");
  }
  if (regime == EntropyRegime::kDiscrete) {
    if (h_z_given_x > h_z + 1e-9 || h_z_given_y > h_z + 1e-9) {
      throw InputDomainError(
          "discrete conditional entropy exceeds marginal entropy");
    }
  }
  return EntropyTriple{h_z, h_z_given_x, h_z_given_y, regime};
}

double ib_lagrangian(double i_xz, double i_yz, TradeoffBeta beta) {
  if (!std::isfinite(i_xz) || !std::isfinite(i_yz)) {
    throw InputDomainError("mutual information inputs must be finite");
  }
  return i_xz - beta.value() * i_yz;
}

TransformedTerms transformed_ib_terms(const EntropyTriple& e,
                                      TradeoffBeta beta) {
  TransformedTerms t;
  t.info_term = (1.0 - beta.value()) * (e.h_z - e.h_z_given_x);
  t.entropy_gap = beta.value() * (e.h_z_given_y - e.h_z_given_x);
  return t;
}

double transformed_ib(const EntropyTriple& e, TradeoffBeta beta) {
  return transformed_ib_terms(e, beta).total();
}

void require_valid(const GaussianChannel& ch) {
  if (ch.theta.rows() < 1 || ch.theta.cols() < 1) {
    throw InputDomainError("channel map theta must be nonempty");
  }
  if (!ch.theta.allFinite() || !ch.sigma_x.allFinite()) {
    throw InputDomainError("channel matrices contain non-finite entries");
  }
  if (ch.sigma_x.rows() != ch.sigma_x.cols() ||
      ch.sigma_x.rows() != ch.theta.cols()) {
    throw InputDomainError("sigma_x must be square with theta.cols() rows");
  }
  if ((ch.sigma_x - ch.sigma_x.transpose()).cwiseAbs().maxCoeff() > kSymTol) {
    throw InputDomainError("sigma_x is not symmetric (tolerance 1e-10)");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(ch.sigma_x,
                                           Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) {
    throw InputDomainError("sigma_x has eigenvalue below -1e-10, not PSD");
  }
}

SchurCovariances schur_covariances(const GaussianChannel& ch) {
  require_valid(ch);
  const auto d = ch.theta.rows();
  const double noise = ch.eps.value() * ch.eps.value() / static_cast<double>(d);

  SchurCovariances out;
  out.sigma_zhat.noalias() = ch.theta * ch.sigma_x * ch.theta.transpose();
  out.sigma_zhat.diagonal().array() += noise;
  out.sigma_x_zhat.noalias() = ch.theta * ch.sigma_x;
  out.conditional_closed = noise * Matrix::Identity(d, d);

  // The inverse route needs a nonsingular sigma_x; otherwise only the closed
  // form is reported.
  Eigen::SelfAdjointEigenSolver<Matrix> es(ch.sigma_x);
  const auto& ev = es.eigenvalues();
  const double cutoff = std::max(ev.maxCoeff(), 0.0) * 1e-12;
  if (ev.minCoeff() > cutoff && ev.minCoeff() > 0.0) {
    const Matrix sigma_x_inv =
        es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
        es.eigenvectors().transpose();
    Matrix schur = out.sigma_zhat;
    schur.noalias() -=
        out.sigma_x_zhat * sigma_x_inv * out.sigma_x_zhat.transpose();
    out.conditional_schur = std::move(schur);
  }
  return out;
}

double gaussian_entropy(const Matrix& sigma) {
  if (sigma.rows() < 1 || sigma.rows() != sigma.cols() || !sigma.allFinite()) {
    throw InputDomainError("covariance must be a nonempty finite square matrix");
  }
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > kSymTol) {
    throw InputDomainError("covariance is not symmetric (tolerance 1e-10)");
  }
  const auto dim = sigma.rows();
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma, Eigen::EigenvaluesOnly);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6e", es.eigenvalues().minCoeff());
    throw InputDomainError(
        "covariance is not positive definite (min eigenvalue " +
        std::string(buf) + ")");
  }
  double logdet = 0.0;
  const auto diag = llt.matrixLLT().diagonal();
  for (Eigen::Index i = 0; i < dim; ++i) {
    logdet += std::log(diag[i]);
  }
  logdet *= 2.0;
  return 0.5 * (static_cast<double>(dim) * std::log(kTwoPiE) + logdet);
}

double gaussian_delta_i(const FeatureMatrix& z, const Partition& pi,
                        Precision eps, TradeoffBeta beta) {
  const double r = rates::coding_rate(z, eps);
  const double rc = rates::conditional_coding_rate(z, pi, eps);
  return (1.0 - beta.value()) * r + beta.value() * rc;
}

double neg_delta_i(const FeatureMatrix& z, const Partition& pi, Precision eps,
                   TradeoffBeta beta) {
  return -gaussian_delta_i(z, pi, eps, beta);
}

bool SpecialCaseReport::all_pass() const {
  if (rows.empty()) return false;
  for (const auto& r : rows) {
    if (!r.pass) return false;
  }
  return residual_monotone;
}

SpecialCaseReport verify_special_case(const FeatureMatrix& z,
                                      const Partition& pi, Precision eps,
                                      const std::vector<TradeoffBeta>& betas) {
  if (betas.empty()) {
    throw InputDomainError("verify_special_case needs at least one beta");
  }
  const double r = rates::coding_rate(z, eps);
  const double dr = rates::rate_reduction(z, pi, eps);

  SpecialCaseReport report;
  report.rows.reserve(betas.size());
  for (const auto& beta : betas) {
    SpecialCaseRow row;
    row.beta = beta.value();
    row.neg_delta_i = neg_delta_i(z, pi, eps, beta);
    row.delta_r = dr;
    row.residual = std::abs(row.neg_delta_i / row.beta - row.delta_r);
    row.predicted = r / row.beta;
    row.pass = std::abs(row.residual - row.predicted) <=
               kSpecialCaseRelTol * std::max(1.0, std::abs(row.predicted));
    report.rows.push_back(row);
  }

  // Residual must shrink strictly as beta grows. The degenerate R = 0 case
  // has every residual at zero; treat that as vacuously monotone.
  std::vector<SpecialCaseRow> sorted = report.rows;
  std::sort(sorted.begin(), sorted.end(),
            [](const SpecialCaseRow& a, const SpecialCaseRow& b) {
              return a.beta < b.beta;
            });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].beta == sorted[i - 1].beta) continue;
    const bool both_zero =
        sorted[i - 1].residual < 1e-12 && sorted[i].residual < 1e-12;
    if (!both_zero && !(sorted[i].residual < sorted[i - 1].residual)) {
      report.residual_monotone = false;
    }
  }
  return report;
}

std::vector<TradeoffBeta> default_beta_sweep() {
  std::vector<TradeoffBeta> betas;
  for (double b : {0.5, 1.0, 2.0, 10.0, 100.0, 1000.0, 10000.0}) {
    betas.emplace_back(b);
  }
  return betas;
}

void write_report_csv(const SpecialCaseReport& report, std::ostream& out) {
  out << "beta,neg_delta_i,delta_r,residual,predicted,pass\n";
  char buf[256];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g,%s\n",
                  r.beta, r.neg_delta_i, r.delta_r, r.residual, r.predicted,
                  r.pass ? "PASS" : "FAIL");
    out << buf;
  }
}

}  // namespace iblab::ib
