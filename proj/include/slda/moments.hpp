#pragma once

#include "slda/common.hpp"
#include "slda/corpus.hpp"
#include "slda/tensor.hpp"

namespace slda {

/// Empirical observable moments for the two-stage method. `pair` is the
/// raw word co-occurrence estimate E[x1 ⊗ x2]; `m2` and `my` are centered.
struct MomentSet {
  Vector m1;
  Matrix pair;
  Matrix m2;
  Matrix my;
  Vector y_first;  // E[y x1]
  double mean_y = 0.0;
  double mean_y2 = 0.0;
  std::size_t num_docs = 0;
  double alpha0 = 0.0;
};

/// Centered moments of z = [scale * x; y].
struct JointMomentSet {
  Vector n1;
  Matrix pair;  // raw E[z1 ⊗ z2]
  Matrix n2;    // pair - a0/(a0+1) n1 n1^T - sigma^2 e e^T
  double sigma_assumed = 0.0;
  double scale = 1.0;
  double mean_y = 0.0;
  double mean_y2 = 0.0;
  std::size_t num_docs = 0;
  double alpha0 = 0.0;
};

/// Per-document sums behind MomentSet and JointMomentSet. Merging is plain
/// addition, so any partition of a corpus finalizes to the same moments.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(int vocab_size);

  void add(const Document& doc);
  void merge(const MomentAccumulator& other);

  MomentSet finalize(double alpha0) const;
  JointMomentSet finalize_joint(double alpha0, double sigma, double scale) const;

  int vocab_size() const { return static_cast<int>(first_.size()); }
  std::size_t num_docs() const { return docs_; }
  /// Largest entrywise difference of all partial sums, for merge checks.
  double max_abs_diff(const MomentAccumulator& other) const;

 private:
  Vector first_;
  Matrix pair_;
  Matrix y_pair_;
  Vector y_first_;
  double y_ = 0.0;
  double y2_ = 0.0;
  std::size_t docs_ = 0;
};

MomentSet estimate_moments(const Corpus& corpus, double alpha0, int threads = 1);
JointMomentSet estimate_joint_moments(const Corpus& corpus, double alpha0, double sigma,
                                      double scale, int threads = 1);

/// Work counters of the whitened third-moment pass, used to check that no
/// per-document step scales with V^2 or with M^3.
struct ThirdMomentWork {
  long long entries_visited = 0;  // sparse (word, count) entries read
  long long cubic_updates = 0;    // k^3 tensor updates
};

struct WhitenedTensor {
  Tensor3 t;
  ThirdMomentWork work;
};

/// Accumulates whitened raw third moments of z = [scale * x; y] (or of x
/// alone when the response row is absent) without forming any V^3 object.
class WhitenedThirdAccumulator {
 public:
  /// `word_rows` is the V x k word block of the whitening matrix;
  /// `response_row` is the k-vector for the response coordinate, or empty.
  WhitenedThirdAccumulator(const Matrix* word_rows, Vector response_row, double scale);

  void add(const Document& doc);
  void merge(const WhitenedThirdAccumulator& other);

  /// Average raw E[z1⊗z2⊗z3](W,W,W) over the documents seen.
  Tensor3 raw_third() const;
  /// Average raw E[z1⊗z2](W,W).
  Matrix raw_pair() const;
  ThirdMomentWork work() const { return work_; }
  /// Vocabulary rows contributing to the deferred diagonal term.
  long long diagonal_rows() const;

 private:
  const Matrix* word_rows_;
  Vector response_row_;
  double scale_;
  Tensor3 third_;
  Matrix pair_;
  Vector diag_coef_;  // sum over docs of 2 n_w / (m (m-1) (m-2))
  std::size_t docs_ = 0;
  ThirdMomentWork work_;
};

/// Third-order centering in whitened coordinates:
///   raw - a0/(a0+2) * (pair ⊗ first, all placements) + 2 a0^2 / ((a0+1)(a0+2)) first^{⊗3}
Tensor3 center_whitened_third(const Tensor3& raw, const Matrix& pair, const Vector& first,
                              double alpha0);

/// Noise correction for the joint third moment: the response noise adds
/// sigma^2 (e⊗e⊗N1 + placements) to the raw moment; after centering,
/// 2 sigma^2 / (a0+2) of it remains and is removed here.
void subtract_noise_third(Tensor3& t, const Vector& e_whitened, const Vector& n1_whitened,
                          double alpha0, double sigma);

/// M3(W,W,W) from a corpus. W is V x k, m1 the empirical first moment.
WhitenedTensor whitened_m3(const Corpus& corpus, double alpha0, const Matrix& w, const Vector& m1,
                           int threads = 1);

/// N3(W,W,W) from a corpus. W is (V+1) x k, n1 the empirical joint first moment.
WhitenedTensor whitened_n3(const Corpus& corpus, double alpha0, double sigma, double scale,
                           const Matrix& w, const Vector& n1, int threads = 1);

}  // namespace slda
