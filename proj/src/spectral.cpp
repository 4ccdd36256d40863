#include "slda/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "slda/parallel.hpp"

namespace slda {

namespace {

void check_square_symmetric(const Matrix& m, int k) {
  if (m.rows() != m.cols()) throw ValidationError("second moment must be square");
  if (k < 1) throw ValidationError("k must be >= 1");
  if (k > m.rows()) {
    throw RankDeficientError("rank deficient: reduce k (k=" + std::to_string(k) +
                             " exceeds the dimension " + std::to_string(m.rows()) + ")");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw ValidationError("second moment is not symmetric");
  }
}

[[noreturn]] void rank_deficient(int k, double value, double threshold) {
  std::ostringstream os;
  os << "rank deficient: reduce k (value " << k << " of the second moment is " << value
     << ", tolerance " << threshold << ")";
  throw RankDeficientError(os.str());
}

Vector random_unit(Rng& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  for (;;) {
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
    const double n = v.norm();
    if (n > 0.0) return v / n;
  }
}

// θ <- T(I,θ,θ) / ||T(I,θ,θ)||; returns the step length ||θ_new - θ||.
double power_step(const Tensor3& t, Vector& theta) {
  Vector next = t.apply_twice(theta);
  const double n = next.norm();
  if (!(n > 0.0)) return 0.0;
  next /= n;
  const double step = (next - theta).norm();
  theta = std::move(next);
  return step;
}

double smallest_singular_value_sq(const Matrix& w_pinv) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(w_pinv * w_pinv.transpose());
  return es.eigenvalues()(0);
}

}  // namespace

double whitening_residual(const Matrix& m2, const Matrix& w) {
  const auto k = w.cols();
  return (w.transpose() * m2 * w - Matrix::Identity(k, k)).norm();
}

WhiteningMatrix whiten_exact(const Matrix& m2, int k, double rank_tolerance) {
  check_square_symmetric(m2, k);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m2);
  if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
  const auto d = m2.rows();
  // Eigenvalues come ascending; take the top k in descending order.
  Vector s(k);
  Matrix u(d, k);
  for (int i = 0; i < k; ++i) {
    s(i) = es.eigenvalues()(d - 1 - i);
    u.col(i) = es.eigenvectors().col(d - 1 - i);
  }
  const double threshold = rank_tolerance * std::max(s(0), 0.0);
  if (!(s(0) > 0.0) || !(s(k - 1) > threshold)) rank_deficient(k, s(k - 1), threshold);

  WhiteningMatrix wm;
  wm.w = u * s.cwiseSqrt().cwiseInverse().asDiagonal();
  wm.w_pinv = s.cwiseSqrt().asDiagonal() * u.transpose();
  wm.sigma_k = s(k - 1);
  return wm;
}

WhiteningMatrix whiten_randomized(const Matrix& m2, int k, int oversample, std::uint64_t seed,
                                  double rank_tolerance) {
  check_square_symmetric(m2, k);
  if (oversample < 1) throw ValidationError("oversample factor must be >= 1");
  const auto d = m2.rows();
  const auto width = std::min<Eigen::Index>(static_cast<Eigen::Index>(oversample) * k, d);

  Rng rng = make_rng(seed, 0x736b65746368ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix sketch(d, width);
  for (Eigen::Index j = 0; j < width; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) sketch(i, j) = normal(rng);
  }
  // Orthonormal columns keep S^T M S as well conditioned as M itself.
  Eigen::HouseholderQR<Matrix> qr(sketch);
  sketch = qr.householderQ() * Matrix::Identity(d, width);
  const Matrix c = m2 * sketch;
  Matrix omega = sketch.transpose() * c;
  omega = (0.5 * (omega + omega.transpose())).eval();

  Eigen::BDCSVD<Matrix> svd_c(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::BDCSVD<Matrix> svd_o(omega, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector sc = svd_c.singularValues().head(k);
  const Vector so = svd_o.singularValues().head(k);
  const double tc = rank_tolerance * sc(0);
  const double to = rank_tolerance * so(0);
  if (!(sc(0) > 0.0) || !(sc(k - 1) > tc)) rank_deficient(k, sc(k - 1), tc);
  if (!(so(0) > 0.0) || !(so(k - 1) > to)) rank_deficient(k, so(k - 1), to);

  const Matrix u_c = svd_c.matrixU().leftCols(k);
  const Matrix d_c = svd_c.matrixV().leftCols(k);
  const Matrix d_o = svd_o.matrixV().leftCols(k);

  WhiteningMatrix wm;
  wm.w = u_c * sc.cwiseInverse().asDiagonal() * (d_c.transpose() * d_o) *
         so.cwiseSqrt().asDiagonal();
  wm.w_pinv = wm.w.completeOrthogonalDecomposition().pseudoInverse();
  wm.sigma_k = smallest_singular_value_sq(wm.w_pinv);
  return wm;
}

double probe_operator_norm(const Tensor3& t, std::uint64_t seed, int probes) {
  Rng rng = make_rng(seed, 0x70726f6265ULL);
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    const Vector u = random_unit(rng, t.dim());
    worst = std::max(worst, std::abs(t.apply_thrice(u)));
  }
  return worst;
}

EigenDecomposition robust_tpm(const Tensor3& t, int k, const PowerMethodOptions& opt) {
  const int dim = t.dim();
  if (k < 1 || k > dim) throw ValidationError("robust_tpm: k must be in [1, tensor dimension]");
  if (opt.restarts < k) throw ValidationError("robust_tpm: restarts must be at least k");
  if (opt.iterations < 1) throw ValidationError("robust_tpm: iterations must be >= 1");
  const bool oriented = opt.orientation.size() > 0;
  if (oriented && opt.orientation.size() != dim) {
    throw ValidationError("robust_tpm: orientation has wrong dimension");
  }

  EigenDecomposition out;
  Tensor3 deflated = t;
  const auto restarts = static_cast<std::size_t>(opt.restarts);
  for (int round = 0; round < k; ++round) {
    std::vector<Vector> thetas(restarts);
    std::vector<double> values(restarts);
    parallel_for(restarts, opt.threads, [&](std::size_t r) {
      Rng rng = make_rng(opt.seed, static_cast<std::uint64_t>(round) + 1, r);
      Vector theta = random_unit(rng, dim);
      for (int it = 0; it < opt.iterations; ++it) power_step(deflated, theta);
      values[r] = deflated.apply_thrice(theta);
      thetas[r] = std::move(theta);
    });
    // Ties go to the lowest restart index.
    std::size_t best = 0;
    for (std::size_t r = 1; r < restarts; ++r) {
      if (values[r] > values[best]) best = r;
    }

    EigenPair pair;
    Vector theta = thetas[best];
    double step = 0.0;
    pair.lambda_trace.reserve(static_cast<std::size_t>(opt.iterations));
    for (int it = 0; it < opt.iterations; ++it) {
      step = power_step(deflated, theta);
      pair.lambda_trace.push_back(deflated.apply_thrice(theta));
    }
    double lambda = deflated.apply_thrice(theta);
    if (step > 1e-6) {
      pair.converged = false;
      std::ostringstream os;
      os << "power iteration round " << round + 1 << " not converged (last step " << step << ")";
      out.warnings.push_back(os.str());
      warn(os.str());
    }

    const bool flip = oriented ? opt.orientation.dot(theta) < 0.0 : lambda < 0.0;
    if (flip) {
      theta = -theta;
      lambda = -lambda;
    }
    if (!(lambda > 0.0)) {
      std::ostringstream os;
      os << "negative eigenvalue: whitened tensor not decomposable at this k (round "
         << round + 1 << " of " << k << ", lambda " << lambda << ")";
      throw NegativeEigenvalueError(os.str());
    }
    deflated.add_cube(-lambda, theta);
    pair.lambda = lambda;
    pair.omega = std::move(theta);
    out.pairs.push_back(std::move(pair));
  }

  std::stable_sort(out.pairs.begin(), out.pairs.end(),
                   [](const EigenPair& a, const EigenPair& b) { return a.lambda > b.lambda; });
  out.residual_norm = probe_operator_norm(deflated, opt.seed);
  return out;
}

}  // namespace slda
