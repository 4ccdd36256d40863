#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "slda/model.hpp"
#include "slda/spectral.hpp"
#include "test_util.hpp"

using namespace slda;
using testutil::random_matrix;

namespace {

// Random D x D PSD matrix of exact rank k with eigenvalues in [1, 3].
Matrix low_rank_psd(int d, int k, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(d, k, rng));
  const Matrix q = qr.householderQ() * Matrix::Identity(d, k);
  Vector s(k);
  std::uniform_real_distribution<double> unif(1.0, 3.0);
  for (int i = 0; i < k; ++i) s(i) = unif(rng);
  return q * s.asDiagonal() * q.transpose();
}

// sum_i lambda_i v_i^{⊗3} with orthonormal v_i.
Tensor3 odeco(const Vector& lambda, const Matrix& v) {
  Tensor3 t(static_cast<int>(v.rows()));
  for (int i = 0; i < lambda.size(); ++i) t.add_cube(lambda(i), v.col(i));
  return t;
}

Matrix random_orthonormal(int d, int k, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(d, k, rng));
  return qr.householderQ() * Matrix::Identity(d, k);
}

PowerMethodOptions opts(std::uint64_t seed, int restarts = 30, int iterations = 50) {
  PowerMethodOptions o;
  o.seed = seed;
  o.restarts = restarts;
  o.iterations = iterations;
  return o;
}

}  // namespace

TEST_CASE("exact whitening invariants") {
  Rng rng = make_rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 6 + trial, k = 1 + trial % 5;
    const Matrix m = low_rank_psd(d, k, rng);
    const WhiteningMatrix wm = whiten_exact(m, k);
    CHECK(wm.w.rows() == d);
    CHECK(wm.w.cols() == k);
    CHECK(whitening_residual(m, wm.w) < 1e-10);
    CHECK((wm.w_pinv * wm.w - Matrix::Identity(k, k)).norm() < 1e-10);
    // W^+ recovers M on its range: (W^+)^T W^+ = M.
    CHECK((wm.w_pinv.transpose() * wm.w_pinv - m).norm() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    CHECK(wm.sigma_k == doctest::Approx(es.eigenvalues()(d - k)).epsilon(1e-10));
  }
}

TEST_CASE("whitening refuses a numerically rank-deficient second moment") {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 0) = 1.0;
  m(1, 1) = 1e-14;
  CHECK_THROWS_AS(whiten_exact(m, 2), RankDeficientError);
  CHECK_NOTHROW(whiten_exact(m, 1));
  CHECK_THROWS_AS(whiten_randomized(m, 2, 2, 1), RankDeficientError);
  try {
    whiten_exact(m, 2);
  } catch (const RankDeficientError& e) {
    CHECK(std::string(e.what()).find("reduce k") != std::string::npos);
  }
  CHECK_THROWS_AS(whiten_exact(m, 4), RankDeficientError);
  CHECK_THROWS_AS(whiten_exact(m, 0), ValidationError);
  Matrix asym = Matrix::Identity(3, 3);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(whiten_exact(asym, 2), ValidationError);
  CHECK_THROWS_AS(whiten_randomized(Matrix::Identity(3, 3), 2, 0, 1), ValidationError);
}

TEST_CASE("randomized whitening is exact on exact-rank inputs") {
  Rng rng = make_rng(42);
  for (int trial = 0; trial < 6; ++trial) {
    const int d = 40, k = 2 + trial;
    const Matrix m = low_rank_psd(d, k, rng);
    const WhiteningMatrix exact = whiten_exact(m, k);
    for (std::uint64_t seed : {1ULL, 2ULL}) {
      const WhiteningMatrix r = whiten_randomized(m, k, 2, seed);
      CHECK(whitening_residual(m, r.w) < 1e-6);
      // Any two whitenings of the same matrix differ by a rotation.
      CHECK((r.w * r.w.transpose() - exact.w * exact.w.transpose()).norm() < 1e-6);
      CHECK((r.w_pinv * r.w - Matrix::Identity(k, k)).norm() < 1e-8);
      CHECK(r.sigma_k == doctest::Approx(exact.sigma_k).epsilon(1e-6));
    }
  }
}

TEST_CASE("power method on a diagonal tensor") {
  Tensor3 t(3);
  t(0, 0, 0) = 2.0;
  t(1, 1, 1) = 1.0;
  const EigenDecomposition dec = robust_tpm(t, 2, opts(3));
  REQUIRE(dec.pairs.size() == 2);
  CHECK(dec.pairs[0].lambda == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(dec.pairs[1].lambda == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((dec.pairs[0].omega - Vector::Unit(3, 0)).norm() < 1e-10);
  CHECK((dec.pairs[1].omega - Vector::Unit(3, 1)).norm() < 1e-10);
  CHECK(dec.residual_norm < 1e-12);
  CHECK(dec.warnings.empty());
}

TEST_CASE("power method recovers random orthogonal decompositions") {
  Rng rng = make_rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 2 + trial % 6, d = k + trial % 3;
    Vector lambda(k);
    std::uniform_real_distribution<double> unif(0.5, 5.0);
    for (int i = 0; i < k; ++i) lambda(i) = unif(rng);
    const Matrix v = random_orthonormal(d, k, rng);
    const EigenDecomposition dec = robust_tpm(odeco(lambda, v), k, opts(trial, 30, 100));
    Matrix omegas(d, k);
    for (int i = 0; i < k; ++i) omegas.col(i) = dec.pairs[i].omega;
    CHECK((omegas.transpose() * omegas - Matrix::Identity(k, k)).norm() < 1e-9);
    std::vector<double> want(lambda.data(), lambda.data() + k);
    std::sort(want.rbegin(), want.rend());
    for (int i = 0; i < k; ++i) {
      CHECK(dec.pairs[i].lambda == doctest::Approx(want[i]).epsilon(1e-9));
      if (i > 0) CHECK(dec.pairs[i - 1].lambda >= dec.pairs[i].lambda);
      // Each recovered vector matches one true component.
      const double best = (v.transpose() * dec.pairs[i].omega).cwiseAbs().maxCoeff();
      CHECK(best == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(dec.residual_norm < 1e-9);
  }
}

TEST_CASE("lambda estimates never decrease on positive orthogonal tensors") {
  Rng rng = make_rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 4;
    Vector lambda = Vector::Constant(k, 1.0) + random_matrix(k, 1, rng).cwiseAbs();
    const Tensor3 t = odeco(lambda, random_orthonormal(6, k, rng));
    const EigenDecomposition dec = robust_tpm(t, k, opts(trial, 8, 5));
    for (const auto& p : dec.pairs) {
      for (std::size_t i = 1; i < p.lambda_trace.size(); ++i) {
        CHECK(p.lambda_trace[i] >= p.lambda_trace[i - 1] - 1e-12);
      }
    }
  }
}

TEST_CASE("power method is deterministic across runs and threads") {
  Rng rng = make_rng(45);
  Tensor3 t(5);
  std::normal_distribution<double> normal;
  for (auto& x : t.data()) x = normal(rng);
  t.symmetrize();
  t.add_cube(10.0, Vector::Unit(5, 0));
  t.add_cube(8.0, Vector::Unit(5, 1));
  PowerMethodOptions o = opts(7);
  const EigenDecomposition a = robust_tpm(t, 2, o);
  const EigenDecomposition b = robust_tpm(t, 2, o);
  o.threads = 4;
  const EigenDecomposition c = robust_tpm(t, 2, o);
  for (int i = 0; i < 2; ++i) {
    CHECK(a.pairs[i].lambda == b.pairs[i].lambda);
    CHECK(a.pairs[i].omega == b.pairs[i].omega);
    CHECK(a.pairs[i].omega == c.pairs[i].omega);
  }
  CHECK(a.residual_norm == c.residual_norm);
}

TEST_CASE("residual norm bounds the reconstruction error") {
  Rng rng = make_rng(46);
  for (int trial = 0; trial < 5; ++trial) {
    Vector lambda(3);
    lambda << 3.0, 2.0, 1.5;
    Tensor3 t = odeco(lambda, random_orthonormal(4, 3, rng));
    Tensor3 noise(4);
    std::normal_distribution<double> normal(0.0, 1e-3);
    for (auto& x : noise.data()) x = normal(rng);
    noise.symmetrize();
    t += noise;
    const EigenDecomposition dec = robust_tpm(t, 3, opts(trial));
    Tensor3 diff = t;
    for (const auto& p : dec.pairs) diff.add_cube(-p.lambda, p.omega);
    CHECK(dec.residual_norm <= diff.frobenius() + 1e-15);
    CHECK(dec.residual_norm == doctest::Approx(probe_operator_norm(diff, trial)).epsilon(1e-9));
    // Small perturbations move eigenvalues by a comparable amount.
    CHECK(std::abs(dec.pairs[0].lambda - 3.0) < 20 * noise.frobenius());
    CHECK(std::abs(dec.pairs[2].lambda - 1.5) < 20 * noise.frobenius());
  }
}

TEST_CASE("orientation exposes negative eigenvalues") {
  Tensor3 t(2);
  t(0, 0, 0) = 0.5;
  t(1, 1, 1) = -2.0;
  PowerMethodOptions o = opts(1);
  o.orientation = Vector::Ones(2);
  CHECK_THROWS_AS(robust_tpm(t, 2, o), NegativeEigenvalueError);
  // Without orientation the sign of ω absorbs the sign of λ.
  const EigenDecomposition dec = robust_tpm(t, 2, opts(1));
  CHECK(dec.pairs[0].lambda == doctest::Approx(2.0));
  CHECK(dec.pairs[0].omega(1) == doctest::Approx(-1.0));
  CHECK(dec.pairs[1].lambda == doctest::Approx(0.5));

  o.orientation = Vector::Ones(3);
  CHECK_THROWS_AS(robust_tpm(t, 2, o), ValidationError);
  CHECK_THROWS_AS(robust_tpm(t, 3, opts(1)), ValidationError);
  CHECK_THROWS_AS(robust_tpm(t, 2, opts(1, 1)), ValidationError);
}

TEST_CASE("population whitened third moment has the closed-form eigenvalues") {
  Rng rng = make_rng(47);
  for (int trial = 0; trial < 5; ++trial) {
    const double a0 = 0.3 + trial;
    const SldaModel m = testutil::toy_model(15, 4, a0, 0.0, rng);
    const ExactMoments ex = population_moments(m);
    const WhiteningMatrix wm = whiten_exact(ex.m2, 4);
    const EigenDecomposition dec = robust_tpm(ex.whitened_m3(wm.w), 4, opts(trial, 30, 100));
    std::vector<double> want;
    for (int i = 0; i < 4; ++i) {
      want.push_back(2.0 / (a0 + 2.0) * std::sqrt(a0 * (a0 + 1.0) / m.alpha(i)));
    }
    std::sort(want.rbegin(), want.rend());
    for (int i = 0; i < 4; ++i) {
      CHECK(dec.pairs[i].lambda == doctest::Approx(want[i]).epsilon(1e-8));
    }
  }
}
