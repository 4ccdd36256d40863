#pragma once

#include <cstdint>

#include "slda/common.hpp"
#include "slda/corpus.hpp"
#include "slda/tensor.hpp"

namespace slda {

/// Parameters of a supervised LDA model: Dirichlet prior, topic-word
/// distributions (one column per topic), regression weights and response
/// noise level.
struct SldaModel {
  Vector alpha;
  Matrix topics;  // V x k, columns on the simplex
  Vector eta;
  double sigma = 0.0;

  int num_topics() const { return static_cast<int>(alpha.size()); }
  int vocab_size() const { return static_cast<int>(topics.rows()); }
  double alpha0() const { return alpha.sum(); }

  /// Checks dimensions, positivity of alpha, sigma >= 0, nonnegative topic
  /// entries and column sums within `column_tolerance` of 1.
  void validate(double column_tolerance = 1e-9) const;
};

/// Topic columns stacked with their regression weight, words scaled by
/// `scale`: column i is [scale * mu_i; eta_i].
struct JointTopicMatrix {
  Matrix vstar;  // (V+1) x k
  double scale = 1.0;

  static JointTopicMatrix from_model(const SldaModel& model, double scale);
};

struct RandomModelOptions {
  int vocab_size = 500;
  int num_topics = 20;
  double alpha0 = 1.0;  // alpha is homogeneous: alpha_i = alpha0 / k
  double sigma = 0.0;
  std::uint64_t seed = 0;
  /// Redraw topics while the smallest singular value is below this.
  double min_singular_value = 1e-3;
};

/// Synthetic model: uniform(0,1) topic entries with normalized columns,
/// standard normal eta, homogeneous alpha.
SldaModel random_model(const RandomModelOptions& options);

/// Draws documents from the generative process. Each document uses its own
/// generator derived from (seed, document index), so the result does not
/// depend on `threads` and the first n documents of a larger draw equal a
/// draw of n documents.
Corpus generate_corpus(const SldaModel& model, std::size_t num_docs, int doc_len,
                       std::uint64_t seed, int threads = 1);

/// Samples h ~ Dirichlet(alpha).
Vector sample_dirichlet(const Vector& alpha, Rng& rng);

struct DirichletMoments {
  Vector mean;     // E[h]
  Matrix second;   // E[h ⊗ h]
  Tensor3 third;   // E[h ⊗ h ⊗ h]
};

DirichletMoments dirichlet_moments(const Vector& alpha);

/// E[h ⊗ h] only; avoids the k^3 tensor.
Matrix dirichlet_second_moment(const Vector& alpha);

/// Population values of the observable moments of a model, in their
/// parameter form.
struct ExactMoments {
  SldaModel model;
  Vector m1;
  Matrix m2;
  Matrix my;
  double mean_y = 0.0;
  double mean_y2 = 0.0;

  /// M3(W, W, W) = 2 / (a0 (a0+1) (a0+2)) * sum_i alpha_i (W^T mu_i)^{⊗3}
  Tensor3 whitened_m3(const Matrix& w) const;
};

ExactMoments population_moments(const SldaModel& model);

struct ExactJointMoments {
  JointTopicMatrix joint;
  Vector alpha;
  Vector n1;
  Matrix n2;

  /// N3(W, W, W) for a (V+1) x k whitening matrix.
  Tensor3 whitened_n3(const Matrix& w) const;
};

ExactJointMoments population_joint_moments(const SldaModel& model, double scale);

}  // namespace slda
