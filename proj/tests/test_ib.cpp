#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "iblab/ib.hpp"
#include "iblab/pipeline.hpp"
#include "iblab/rates.hpp"
#include "iblab/rng.hpp"
#include "oracles.hpp"

using namespace iblab;
using ib::EntropyRegime;
using ib::TradeoffBeta;

namespace {

Matrix random_psd(Rng& rng, int n, double eig_lo, double eig_hi) {
  Matrix a(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) a(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(a);
  const Matrix q = qr.householderQ();
  Vector eig(n);
  for (int i = 0; i < n; ++i) eig[i] = rng.uniform(eig_lo, eig_hi);
  Matrix psd = q * eig.asDiagonal() * q.transpose();
  return 0.5 * (psd + psd.transpose());  // symmetrize rounding
}

}  // namespace

TEST_CASE("ib_lagrangian arithmetic") {
  CHECK(ib::ib_lagrangian(1.0, 1.0, TradeoffBeta(1.0)) == doctest::Approx(0.0));
  CHECK(ib::ib_lagrangian(2.0, 0.0, TradeoffBeta(5.0)) == doctest::Approx(2.0));
  CHECK(ib::ib_lagrangian(1.3, 0.7, TradeoffBeta(2.5)) ==
        doctest::Approx(-0.45).epsilon(1e-15));
}

TEST_CASE("beta must be positive and finite") {
  CHECK_THROWS_AS(TradeoffBeta(0.0), InputDomainError);
  CHECK_THROWS_AS(TradeoffBeta(-2.0), InputDomainError);
  CHECK_THROWS_AS(TradeoffBeta(std::nan("")), InputDomainError);
}

TEST_CASE("transformed_ib trivial values") {
  for (const double c : {-3.0, 0.0, 7.5}) {
    const auto e = ib::make_entropy_triple(c, c, c, EntropyRegime::kDifferential);
    CHECK(ib::transformed_ib(e, TradeoffBeta(4.2)) ==
          doctest::Approx(0.0).epsilon(1e-15));
  }
  const auto e =
      ib::make_entropy_triple(2.0, 0.5, 1.25, EntropyRegime::kDifferential);
  CHECK(ib::transformed_ib(e, TradeoffBeta(1.0)) ==
        doctest::Approx(1.25 - 0.5).epsilon(1e-15));
}

TEST_CASE("transformed_ib equals the Lagrangian on consistent triples") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double h_z = rng.uniform(-5.0, 10.0);
    const double h_zx = h_z - rng.uniform(0.0, 8.0);  // I(X;Z) >= 0
    const double h_zy = h_z - rng.uniform(0.0, 8.0);
    const double beta = std::pow(10.0, rng.uniform(-1.0, 3.0));
    const auto e =
        ib::make_entropy_triple(h_z, h_zx, h_zy, EntropyRegime::kDifferential);
    const double lhs = ib::transformed_ib(e, TradeoffBeta(beta));
    const double rhs =
        ib::ib_lagrangian(h_z - h_zx, h_z - h_zy, TradeoffBeta(beta));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)}));
  }
}

TEST_CASE("first transformed term flips sign at beta = 1") {
  const auto e =
      ib::make_entropy_triple(3.0, 1.0, 2.0, EntropyRegime::kDifferential);
  CHECK(ib::transformed_ib_terms(e, TradeoffBeta(0.5)).info_term > 0.0);
  CHECK(ib::transformed_ib_terms(e, TradeoffBeta(1.0)).info_term ==
        doctest::Approx(0.0));
  CHECK(ib::transformed_ib_terms(e, TradeoffBeta(2.0)).info_term < 0.0);
}

TEST_CASE("discrete regime enforces conditioning bounds") {
  CHECK_THROWS_AS(
      ib::make_entropy_triple(1.0, 1.5, 0.5, EntropyRegime::kDiscrete),
      InputDomainError);
  CHECK_NOTHROW(
      ib::make_entropy_triple(1.0, 1.5, 0.5, EntropyRegime::kDifferential));
}

TEST_CASE("schur covariances on plug-in channels") {
  {
    ib::GaussianChannel ch{Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                           Precision(1.0)};
    const auto cov = ib::schur_covariances(ch);
    CHECK((cov.sigma_zhat - 1.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <
          1e-14);
    REQUIRE(cov.conditional_schur.has_value());
    CHECK((*cov.conditional_schur - 0.5 * Matrix::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((cov.conditional_closed - 0.5 * Matrix::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
  }
  {
    ib::GaussianChannel ch{Matrix::Zero(3, 4), Matrix::Identity(4, 4),
                           Precision(0.9)};
    const auto cov = ib::schur_covariances(ch);
    const double noise = 0.81 / 3.0;
    CHECK((cov.sigma_zhat - noise * Matrix::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
  }
}

TEST_CASE("both conditional covariance routes agree on random channels") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + static_cast<int>(rng.below(4));
    const int big = 2 + static_cast<int>(rng.below(5));
    Matrix theta(d, big);
    for (Eigen::Index c = 0; c < theta.cols(); ++c) {
      for (Eigen::Index r = 0; r < theta.rows(); ++r) {
        theta(r, c) = rng.normal();
      }
    }
    ib::GaussianChannel ch{theta, random_psd(rng, big, 0.5, 2.0),
                           Precision(0.7)};
    const auto cov = ib::schur_covariances(ch);
    REQUIRE(cov.conditional_schur.has_value());
    CHECK((*cov.conditional_schur - cov.conditional_closed)
              .cwiseAbs()
              .maxCoeff() < 1e-9);
  }
}

TEST_CASE("singular sigma_x skips the inverse route") {
  Matrix sigma = Matrix::Zero(3, 3);
  sigma(0, 0) = 1.0;  // rank 1
  ib::GaussianChannel ch{Matrix::Identity(3, 3), sigma, Precision(1.0)};
  const auto cov = ib::schur_covariances(ch);
  CHECK(!cov.conditional_schur.has_value());
  CHECK((cov.conditional_closed - (1.0 / 3.0) * Matrix::Identity(3, 3))
            .cwiseAbs()
            .maxCoeff() < 1e-14);
}

TEST_CASE("gaussian_entropy closed forms") {
  CHECK(ib::gaussian_entropy(Matrix::Identity(1, 1)) ==
        doctest::Approx(0.5 * std::log(2.0 * M_PI * M_E)).epsilon(1e-13));
  for (const int d : {2, 5}) {
    CHECK(ib::gaussian_entropy(Matrix::Identity(d, d)) ==
          doctest::Approx(0.5 * d * std::log(2.0 * M_PI * M_E))
              .epsilon(1e-13));
  }
}

TEST_CASE("gaussian_entropy matches the eigenvalue oracle") {
  Rng rng(9);
  const Matrix sigma = random_psd(rng, 4, 0.2, 3.0);
  CHECK(ib::gaussian_entropy(sigma) ==
        doctest::Approx(oracles::gaussian_entropy_eig(sigma)).epsilon(1e-11));
}

TEST_CASE("gaussian_entropy names the bad eigenvalue") {
  Matrix sigma = Matrix::Identity(2, 2);
  sigma(1, 1) = -0.25;
  try {
    ib::gaussian_entropy(sigma);
    FAIL("expected InputDomainError");
  } catch (const InputDomainError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("eigenvalue") != std::string::npos);
    CHECK(msg.find("-2.5") != std::string::npos);
  }
}

TEST_CASE("gaussian_delta_i composes the two rates") {
  Rng rng(10);
  for (int trial = 0; trial < 40; ++trial) {
    cli::RandomInstance inst = cli::random_instance(rng, 6, 24, 3);
    const Precision eps(0.5);
    const double beta = std::pow(10.0, rng.uniform(-0.5, 3.0));
    const double r = rates::coding_rate(inst.z, eps);
    const double rc = rates::conditional_coding_rate(inst.z, inst.pi, eps);
    const double di =
        ib::gaussian_delta_i(inst.z, inst.pi, eps, TradeoffBeta(beta));
    CHECK(di == doctest::Approx((1.0 - beta) * r + beta * rc).epsilon(1e-11));
  }
}

TEST_CASE("gaussian_delta_i trivial cases") {
  Rng rng(11);
  cli::RandomInstance inst = cli::random_instance(rng, 4, 12, 2);
  const Precision eps(0.3);
  CHECK(ib::gaussian_delta_i(inst.z, inst.pi, eps, TradeoffBeta(1.0)) ==
        doctest::Approx(rates::conditional_coding_rate(inst.z, inst.pi, eps))
            .epsilon(1e-12));
  Partition pi{2, {0, 1, 0, 1}};
  CHECK(ib::gaussian_delta_i(FeatureMatrix{Matrix::Zero(3, 4)}, pi, eps,
                             TradeoffBeta(7.0)) ==
        doctest::Approx(0.0).epsilon(1e-15));
  CHECK(ib::neg_delta_i(FeatureMatrix{Matrix::Zero(3, 4)}, pi, eps,
                        TradeoffBeta(7.0)) ==
        doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("bridge identity: neg_delta_i = beta DeltaR - R") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    cli::RandomInstance inst = cli::random_instance(rng, 8, 32, 4);
    const double eps_choices[] = {0.1, 0.5, 1.0};
    const Precision eps(eps_choices[trial % 3]);
    const double beta_choices[] = {0.5, 1.0, 2.0, 10.0, 100.0, 1000.0};
    const double beta = beta_choices[trial % 6];
    const double lhs =
        ib::neg_delta_i(inst.z, inst.pi, eps, TradeoffBeta(beta));
    const double dr = rates::rate_reduction(inst.z, inst.pi, eps);
    const double r = rates::coding_rate(inst.z, eps);
    const double rhs = beta * dr - r;
    CHECK(std::abs(lhs - rhs) <=
          1e-9 * std::max(1.0, std::abs(beta * dr)));
  }
}

TEST_CASE("verify_special_case rows carry the exact residual") {
  Rng rng(13);
  cli::RandomInstance inst = cli::random_instance(rng, 5, 20, 3);
  const Precision eps(0.5);
  const double r = oracles::coding_rate_eig(inst.z.values, 0.5);

  std::vector<TradeoffBeta> betas;
  for (const double b : {1.0, 10.0, 100.0, 1000.0}) betas.emplace_back(b);
  const auto report = ib::verify_special_case(inst.z, inst.pi, eps, betas);
  REQUIRE(report.rows.size() == 4);
  for (const auto& row : report.rows) {
    CHECK(row.pass);
    CHECK(row.residual == doctest::Approx(r / row.beta).epsilon(1e-9));
  }
  CHECK(report.residual_monotone);
  CHECK(report.all_pass());

  // doubling beta halves the residual
  CHECK(report.rows[1].residual ==
        doctest::Approx(report.rows[0].residual / 10.0).epsilon(1e-9));
}

TEST_CASE("verify_special_case with K = 1 gives residual R/beta") {
  Rng rng(14);
  FeatureMatrix z{Matrix(3, 6)};
  for (Eigen::Index c = 0; c < 6; ++c) {
    for (Eigen::Index r = 0; r < 3; ++r) z.values(r, c) = rng.normal();
  }
  Partition pi{1, std::vector<int>(6, 0)};
  const auto report =
      ib::verify_special_case(z, pi, Precision(0.5), ib::default_beta_sweep());
  const double r = rates::coding_rate(z, Precision(0.5));
  for (const auto& row : report.rows) {
    CHECK(row.delta_r == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(row.residual == doctest::Approx(r / row.beta).epsilon(1e-9));
    CHECK(row.pass);
  }
  CHECK(report.all_pass());
}

TEST_CASE("special-case report CSV shape") {
  Rng rng(15);
  cli::RandomInstance inst = cli::random_instance(rng, 4, 10, 2);
  const auto report = ib::verify_special_case(
      inst.z, inst.pi, Precision(1.0), ib::default_beta_sweep());
  std::ostringstream out;
  ib::write_report_csv(report, out);
  const std::string text = out.str();
  CHECK(text.rfind("beta,neg_delta_i,delta_r,residual,predicted,pass\n", 0) ==
        0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 8);  // header + 7 rows
  CHECK(text.find("PASS") != std::string::npos);
}

TEST_CASE("gaussian consistency: entropy difference equals coding rate") {
  Rng rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    const int big = 2 + static_cast<int>(rng.below(4));
    const int d = 1 + static_cast<int>(rng.below(3));
    const int m = big + 1 + static_cast<int>(rng.below(20));
    Matrix x(big, m), theta(d, big);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = rng.normal();
    }
    for (Eigen::Index c = 0; c < theta.cols(); ++c) {
      for (Eigen::Index r = 0; r < theta.rows(); ++r) {
        theta(r, c) = rng.normal();
      }
    }
    const Matrix sigma_x = x * x.transpose() / static_cast<double>(m);
    const Precision eps(0.5);
    ib::GaussianChannel ch{theta, sigma_x, eps};
    const auto cov = ib::schur_covariances(ch);
    const double mi_gauss = ib::gaussian_entropy(cov.sigma_zhat) -
                            ib::gaussian_entropy(cov.conditional_closed);
    const FeatureMatrix z{theta * x};
    const double r = rates::coding_rate(z, eps);
    CHECK(std::abs(mi_gauss - r) <= 1e-8 * std::max(1.0, std::abs(r)));
  }
}
