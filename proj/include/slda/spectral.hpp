#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slda/common.hpp"
#include "slda/tensor.hpp"

namespace slda {

/// W with W^T M W = I_k, its pseudo-inverse, and the smallest retained
/// eigen/singular value of the second moment.
struct WhiteningMatrix {
  Matrix w;       // D x k
  Matrix w_pinv;  // k x D
  double sigma_k = 0.0;
};

/// Relative threshold below which the k-th retained value counts as zero.
inline constexpr double kDefaultRankTolerance = 1e-10;

/// Truncated eigendecomposition of a symmetric matrix, keeping the k
/// algebraically largest eigenvalues.
WhiteningMatrix whiten_exact(const Matrix& m2, int k, double rank_tolerance = kDefaultRankTolerance);

/// Nyström-style whitening from an orthonormalized Gaussian sketch of width oversample * k
/// (capped at D).
WhiteningMatrix whiten_randomized(const Matrix& m2, int k, int oversample, std::uint64_t seed,
                                  double rank_tolerance = kDefaultRankTolerance);

/// ||W^T M W - I||_F
double whitening_residual(const Matrix& m2, const Matrix& w);

struct EigenPair {
  double lambda = 0.0;
  Vector omega;
  /// lambda estimates T(θ,θ,θ) over the final refinement iterations.
  std::vector<double> lambda_trace;
  bool converged = true;
};

struct EigenDecomposition {
  std::vector<EigenPair> pairs;  // descending lambda
  double residual_norm = 0.0;
  std::vector<std::string> warnings;
};

struct PowerMethodOptions {
  int restarts = 100;    // L
  int iterations = 100;  // T
  std::uint64_t seed = 0;
  int threads = 1;
  /// Optional k-vector fixing each eigenvector's sign: ω is flipped so that
  /// orientation·ω >= 0. Without it the sign is chosen to make λ positive.
  Vector orientation;
};

/// Robust tensor power method with deflation. Throws NegativeEigenvalueError
/// when a selected eigenvalue is not positive.
EigenDecomposition robust_tpm(const Tensor3& t, int k, const PowerMethodOptions& options);

/// max over `probes` seeded random unit vectors u of |T(u,u,u)|.
double probe_operator_norm(const Tensor3& t, std::uint64_t seed, int probes = 20);

}  // namespace slda
