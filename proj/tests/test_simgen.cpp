// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "oracles.hpp"
#include "quickiva/simgen.hpp"

using namespace quickiva;

TEST_CASE("rng streams are reproducible and splittable") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  CHECK(Rng::split(1, 0) != Rng::split(1, 1));
  CHECK(Rng::split(1, 0) != Rng::split(2, 0));
  CHECK(Rng::split(7, 3) == Rng::split(7, 3));
}

TEST_CASE("gaussian and gamma moments") {
  Rng rng(301);
  const int n = 200000;
  double mean = 0.0, var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    mean += g;
    var += g * g;
  }
  mean /= n;
  var /= n;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);

  for (double shape : {0.7, 2.0, 7.5}) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += rng.gamma(shape);
    CHECK(std::abs(acc / n - shape) < 0.05 * shape);
  }
}

TEST_CASE("exp-power sampler: unit variance across shapes") {
  Rng rng(302);
  const struct {
    int K;
    double alpha;
    double tol;
  } configs[] = {{1, 1.0, 0.01}, {1, 0.5, 0.01}, {3, 0.4, 0.02}};
  for (const auto& c : configs) {
    const Eigen::Index n = 1000000;
    const Matrix s = sample_exp_power(rng, c.K, c.alpha, n);
    for (int k = 0; k < c.K; ++k) {
      const double var = s.row(k).squaredNorm() / static_cast<double>(n);
      CHECK(std::abs(var - 1.0) < c.tol);
    }
  }
}

TEST_CASE("exp-power sampler: alpha=1 reduces to the circular Gaussian") {
  Rng rng(303);
  const Eigen::Index n = 200000;
  const Matrix s = sample_exp_power(rng, 1, 1.0, n);
  // E|s|^4 = 2 for a circular Gaussian
  double m4 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) m4 += std::norm(s(0, i)) * std::norm(s(0, i));
  CHECK(std::abs(m4 / n - 2.0) < 0.05);
}

TEST_CASE("exp-power sampler: Laplacean radial law vs rejection oracle") {
  Rng rng(304);
  const std::size_t n = 100000;
  const Matrix s = sample_exp_power(rng, 1, 0.5, n);
  std::vector<double> radii(n);
  for (std::size_t i = 0; i < n; ++i) radii[i] = std::abs(s(0, i));
  Rng rng2(305);
  const std::vector<double> oracle = oracles::rejection_radii(rng2, 1, 0.5, n);
  CHECK(oracles::ks_two_sample_pvalue(radii, oracle) > 0.01);

  // super-Gaussian: positive excess kurtosis of the real part
  double m2 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = s(0, i).real();
    m2 += x * x;
    m4 += x * x * x * x;
  }
  m2 /= n;
  m4 /= n;
  CHECK(m4 / (m2 * m2) - 3.0 > 0.0);
}

TEST_CASE("exp-power sampler: K=3 alpha=0.4 radial law") {
  Rng rng(306);
  const std::size_t n = 100000;
  const Matrix s = sample_exp_power(rng, 3, 0.4, n);
  std::vector<double> radii(n);
  for (std::size_t i = 0; i < n; ++i) radii[i] = s.col(i).norm();
  Rng rng2(307);
  const std::vector<double> oracle = oracles::rejection_radii(rng2, 3, 0.4, n);
  CHECK(oracles::ks_two_sample_pvalue(radii, oracle) > 0.01);
}

TEST_CASE("complex laplacean component law") {
  Rng rng(308);
  const Eigen::Index n = 400000;
  const Matrix s = complex_laplacean(rng, n);
  const double var = s.row(0).squaredNorm() / static_cast<double>(n);
  CHECK(std::abs(var - 1.0) < 0.02);
  double m4 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) m4 += std::norm(s(0, i)) * std::norm(s(0, i));
  CHECK(std::abs(m4 / n - 4.0) < 0.2);  // E|s|^4 = 4 for the scale mixture
  // rotation invariance: pseudo-variance vanishes
  Complex pseudo(0, 0);
  for (Eigen::Index i = 0; i < n; ++i) pseudo += s(0, i) * s(0, i);
  CHECK(std::abs(pseudo) / static_cast<double>(n) < 0.02);
}

TEST_CASE("haar unitary draws") {
  Rng rng(309);
  const Matrix u1 = random_unitary(rng, 1);
  CHECK(std::abs(std::abs(u1(0, 0)) - 1.0) < 1e-12);
  for (int n : {2, 5}) {
    const Matrix u = random_unitary(rng, n);
    CHECK((u.adjoint() * u - Matrix::Identity(n, n)).norm() <= 1e-12);
  }
  // Haar symmetry: entrywise means vanish over many draws
  Matrix mean = Matrix::Zero(3, 3);
  for (int rep = 0; rep < 10000; ++rep) mean += random_unitary(rng, 3);
  mean /= 10000.0;
  CHECK(mean.cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("random mixing condition cap") {
  Rng rng(310);
  for (int rep = 0; rep < 200; ++rep) {
    const Matrix a = random_mixing(rng, 4);
    Eigen::JacobiSVD<Matrix> svd(a);
    CHECK(svd.singularValues()(0) / svd.singularValues()(3) <= 1e4);
  }
}

TEST_CASE("extraction dataset structure and dependence") {
  Rng rng(311);
  Dataset data = generate_iva_dataset(rng, 3, 6, 2000);
  CHECK(data.K == 3);
  CHECK(data.T == 1);
  CHECK(data.d == 6);
  CHECK(data.Nb == 2000);
  REQUIRE(data.truth.has_value());
  for (int k = 0; k < 3; ++k) {
    CHECK((data.truth->demixing[k] * data.truth->mixing[k] - Matrix::Identity(6, 6)).norm() <
          1e-10);
    // the model reproduces the observations exactly
    CHECK((data.truth->mixing[k] * data.truth->sources[k] - data.block(k, 0)).norm() <
          1e-10 * data.block(k, 0).norm());
  }

  // ground-truth demixing extracts the SOI exactly (SIR at the cap)
  const Vector w = data.truth->demixing[0].row(0).adjoint();
  const Vector y = (w.adjoint() * data.block(0, 0)).transpose();
  const Vector soi = data.truth->sources[0].row(0).transpose();
  CHECK(sir(y, soi) == 150.0);

  // the SOI vector is uncorrelated across mixtures but fourth-order dependent
  Rng rng2(312);
  Dataset big = generate_iva_dataset(rng2, 3, 2, 100000);
  Matrix soi_rows(3, 100000);
  for (int k = 0; k < 3; ++k) soi_rows.row(k) = big.truth->sources[k].row(0);
  for (int j = 0; j < 3; ++j)
    for (int l = j + 1; l < 3; ++l) {
      Complex corr(0, 0);
      double dep = 0.0;
      for (int i = 0; i < 100000; ++i) {
        corr += soi_rows(j, i) * std::conj(soi_rows(l, i));
        dep += std::norm(soi_rows(j, i)) * std::norm(soi_rows(l, i));
      }
      CHECK(std::abs(corr) / 1e5 < 0.05);  // uncorrelated
      CHECK(dep / 1e5 - 1.0 > 0.1);        // dependent squared moduli
    }
}

TEST_CASE("K=1 extraction dataset reduces to plain single-mixture data") {
  Rng rng(318);
  Dataset data = generate_iva_dataset(rng, 1, 4, 500);
  CHECK(data.K == 1);
  CHECK(data.x.size() == 1);
  CHECK(data.truth->sources[0].rows() == 4);
}

TEST_CASE("csv dataset: constant demixing rows across blocks") {
  Rng rng(313);
  const int K = 2, d = 5, T = 3, ncsv = 3;
  Dataset data = generate_csv_dataset(rng, K, d, T, 500, ncsv);
  REQUIRE(data.truth.has_value());
  for (int k = 0; k < K; ++k) {
    for (int t = 1; t < T; ++t) {
      const Matrix& w0 = data.truth->demixing[k * T];
      const Matrix& wt = data.truth->demixing[k * T + t];
      CHECK((w0.topRows(ncsv) - wt.topRows(ncsv)).norm() == 0.0);  // exactly equal
      CHECK((wt - data.truth->mixing[k * T + t].inverse()).norm() < 1e-10 * wt.norm());
    }
    // the true CSV separating vector extracts the SOI on every block
    const Vector w = data.truth->demixing[k * T].row(0).adjoint();
    for (int t = 0; t < T; ++t) {
      const Vector y = (w.adjoint() * data.block(k, t)).transpose();
      const Vector soi = data.truth->sources[k * T + t].row(0).transpose();
      CHECK(sir(y, soi) == 150.0);
    }
  }
}

TEST_CASE("csv dataset with a single block matches the standard model structure") {
  Rng rng(319);
  Dataset data = generate_csv_dataset(rng, 2, 4, 1, 300, 2);
  CHECK(data.T == 1);
  CHECK(data.x.size() == 2);
  REQUIRE(data.truth.has_value());
  for (int k = 0; k < 2; ++k) {
    CHECK((data.truth->demixing[k] * data.truth->mixing[k] - Matrix::Identity(4, 4)).norm() <
          1e-10);
    const Vector w = data.truth->demixing[k].row(0).adjoint();
    const Vector y = (w.adjoint() * data.block(k, 0)).transpose();
    CHECK(sir(y, data.truth->sources[k].row(0).transpose()) == 150.0);
  }
}

TEST_CASE("separation dataset shape and variance") {
  Rng rng(314);
  Dataset data = generate_separation_dataset(rng, 3, 5, 5000, 0.4);
  CHECK(data.x.size() == 3);
  CHECK(data.block(2, 0).rows() == 5);
  CHECK(data.block(2, 0).cols() == 5000);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 5; ++i) {
      const double var = data.truth->sources[k].row(i).squaredNorm() / 5000.0;
      CHECK(std::abs(var - 1.0) < 0.35);  // heavy-tailed law, modest n
    }
  // distinct seeds give distinct mixing matrices
  Rng rng2(315);
  Dataset other = generate_separation_dataset(rng2, 3, 5, 100, 0.4);
  CHECK((other.truth->mixing[0] - data.truth->mixing[0]).norm() > 1e-3);
}

TEST_CASE("generators are bit-reproducible") {
  Rng a(316), b(316);
  Dataset da = generate_iva_dataset(a, 2, 3, 200);
  Dataset db = generate_iva_dataset(b, 2, 3, 200);
  CHECK((da.block(1, 0) - db.block(1, 0)).norm() == 0.0);
  Rng c(317), e(317);
  CHECK((generate_csv_dataset(c, 2, 3, 2, 100, 1).block(1, 1) -
         generate_csv_dataset(e, 2, 3, 2, 100, 1).block(1, 1))
            .norm() == 0.0);
}
