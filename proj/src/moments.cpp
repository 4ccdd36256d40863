#include "slda/moments.hpp"

#include <algorithm>
#include <cmath>

#include "slda/parallel.hpp"

namespace slda {

MomentAccumulator::MomentAccumulator(int vocab_size)
    : first_(Vector::Zero(vocab_size)),
      pair_(Matrix::Zero(vocab_size, vocab_size)),
      y_pair_(Matrix::Zero(vocab_size, vocab_size)),
      y_first_(Vector::Zero(vocab_size)) {}

void MomentAccumulator::add(const Document& doc) {
  const double m = doc.length();
  const double y = doc.response;
  const double inv1 = 1.0 / m;
  const double inv2 = 1.0 / (m * (m - 1.0));
  for (const auto& a : doc.words) {
    const double na = a.count;
    first_(a.word) += na * inv1;
    y_first_(a.word) += y * na * inv1;
    for (const auto& b : doc.words) {
      // Ordered pairs of distinct positions: n_a n_b, minus n_a on the diagonal.
      const double c = (a.word == b.word ? na * (na - 1.0) : na * b.count) * inv2;
      pair_(a.word, b.word) += c;
      y_pair_(a.word, b.word) += y * c;
    }
  }
  y_ += y;
  y2_ += y * y;
  ++docs_;
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.vocab_size() != vocab_size()) throw ValidationError("accumulator vocab mismatch");
  first_ += other.first_;
  pair_ += other.pair_;
  y_pair_ += other.y_pair_;
  y_first_ += other.y_first_;
  y_ += other.y_;
  y2_ += other.y2_;
  docs_ += other.docs_;
}

double MomentAccumulator::max_abs_diff(const MomentAccumulator& o) const {
  double d = std::max({(first_ - o.first_).cwiseAbs().maxCoeff(),
                       (pair_ - o.pair_).cwiseAbs().maxCoeff(),
                       (y_pair_ - o.y_pair_).cwiseAbs().maxCoeff(),
                       (y_first_ - o.y_first_).cwiseAbs().maxCoeff()});
  d = std::max({d, std::abs(y_ - o.y_), std::abs(y2_ - o.y2_)});
  if (docs_ != o.docs_) d = std::max(d, 1.0);
  return d;
}

MomentSet MomentAccumulator::finalize(double alpha0) const {
  if (docs_ == 0) throw ValidationError("no documents accumulated");
  if (!(alpha0 > 0.0)) throw ValidationError("alpha0 must be positive");
  const double n = static_cast<double>(docs_);
  const double a0 = alpha0;
  MomentSet ms;
  ms.alpha0 = a0;
  ms.num_docs = docs_;
  ms.m1 = first_ / n;
  ms.pair = pair_ / n;
  ms.y_first = y_first_ / n;
  ms.mean_y = y_ / n;
  ms.mean_y2 = y2_ / n;
  const Matrix m1m1 = ms.m1 * ms.m1.transpose();
  ms.m2 = ms.pair - (a0 / (a0 + 1.0)) * m1m1;
  const Matrix cross = ms.m1 * ms.y_first.transpose();
  ms.my = y_pair_ / n -
          (a0 / (a0 + 2.0)) * (ms.mean_y * ms.pair + cross + cross.transpose()) +
          (2.0 * a0 * a0 / ((a0 + 1.0) * (a0 + 2.0))) * ms.mean_y * m1m1;
  return ms;
}

JointMomentSet MomentAccumulator::finalize_joint(double alpha0, double sigma, double scale) const {
  if (docs_ == 0) throw ValidationError("no documents accumulated");
  if (!(alpha0 > 0.0)) throw ValidationError("alpha0 must be positive");
  if (!(sigma >= 0.0)) throw ValidationError("sigma must be >= 0");
  if (!(scale > 0.0)) throw ValidationError("scale must be positive");
  const double n = static_cast<double>(docs_);
  const int v = vocab_size();
  JointMomentSet js;
  js.alpha0 = alpha0;
  js.sigma_assumed = sigma;
  js.scale = scale;
  js.num_docs = docs_;
  js.mean_y = y_ / n;
  js.mean_y2 = y2_ / n;
  js.n1.resize(v + 1);
  js.n1.head(v) = scale * first_ / n;
  js.n1(v) = js.mean_y;
  js.pair.resize(v + 1, v + 1);
  js.pair.topLeftCorner(v, v) = (scale * scale / n) * pair_;
  js.pair.topRightCorner(v, 1) = (scale / n) * y_first_;
  js.pair.bottomLeftCorner(1, v) = js.pair.topRightCorner(v, 1).transpose();
  js.pair(v, v) = js.mean_y2;
  js.n2 = js.pair - (alpha0 / (alpha0 + 1.0)) * (js.n1 * js.n1.transpose());
  js.n2(v, v) -= sigma * sigma;
  return js;
}

namespace {

MomentAccumulator accumulate(const Corpus& corpus, int threads) {
  corpus.validate();
  return partitioned_reduce<MomentAccumulator>(
      corpus.size(), threads, [&] { return MomentAccumulator(corpus.vocab_size); },
      [&](MomentAccumulator& acc, std::size_t d) { acc.add(corpus.documents[d]); });
}

}  // namespace

MomentSet estimate_moments(const Corpus& corpus, double alpha0, int threads) {
  return accumulate(corpus, threads).finalize(alpha0);
}

JointMomentSet estimate_joint_moments(const Corpus& corpus, double alpha0, double sigma,
                                      double scale, int threads) {
  return accumulate(corpus, threads).finalize_joint(alpha0, sigma, scale);
}

WhitenedThirdAccumulator::WhitenedThirdAccumulator(const Matrix* word_rows, Vector response_row,
                                                   double scale)
    : word_rows_(word_rows),
      response_row_(std::move(response_row)),
      scale_(scale),
      third_(static_cast<int>(word_rows->cols())),
      pair_(Matrix::Zero(word_rows->cols(), word_rows->cols())),
      diag_coef_(Vector::Zero(word_rows->rows())) {}

void WhitenedThirdAccumulator::add(const Document& doc) {
  const Matrix& w = *word_rows_;
  const auto k = w.cols();
  const double m = doc.length();
  const double inv2 = 1.0 / (m * (m - 1.0));
  const double inv3 = inv2 / (m - 2.0);

  // u = W^T n and A = W^T diag(n) W, both O(nnz k^2).
  Vector u = Vector::Zero(k);
  Matrix a = Matrix::Zero(k, k);
  for (const auto& wc : doc.words) {
    const auto g = w.row(wc.word).transpose();
    u.noalias() += wc.count * g;
    a.noalias() += wc.count * (g * g.transpose());
    diag_coef_(wc.word) += 2.0 * wc.count * inv3;
  }
  work_.entries_visited += static_cast<long long>(doc.words.size());

  const double c = scale_;
  const double c2 = c * c;
  const double c3 = c2 * c;
  // Word block: (u^{⊗3} - placements of A ⊗ u) / (m (m-1) (m-2)); the
  // + 2 n_w g_w^{⊗3} diagonal part is deferred to raw_third().
  third_.add_cube(c3 * inv3, u);
  third_.add_sym_pair(-c3 * inv3, a, u);
  work_.cubic_updates += 2;

  Matrix word_pair = c2 * inv2 * (u * u.transpose() - a);
  pair_ += word_pair;

  if (response_row_.size() > 0) {
    const double y = doc.response;
    const Vector& e = response_row_;
    const Vector first = (c / m) * u;
    third_.add_sym_pair(y, word_pair, e);
    third_.add_sym_outer(y * y, e, first);
    third_.add_cube(y * y * y, e);
    work_.cubic_updates += 3;
    const Matrix cross = y * (first * e.transpose());
    pair_ += cross + cross.transpose();
    pair_ += (y * y) * (e * e.transpose());
  }
  ++docs_;
}

void WhitenedThirdAccumulator::merge(const WhitenedThirdAccumulator& other) {
  third_ += other.third_;
  pair_ += other.pair_;
  diag_coef_ += other.diag_coef_;
  docs_ += other.docs_;
  work_.entries_visited += other.work_.entries_visited;
  work_.cubic_updates += other.work_.cubic_updates;
}

Tensor3 WhitenedThirdAccumulator::raw_third() const {
  if (docs_ == 0) throw ValidationError("no documents accumulated");
  Tensor3 t = third_;
  const Matrix& w = *word_rows_;
  const double c3 = scale_ * scale_ * scale_;
  for (Eigen::Index v = 0; v < diag_coef_.size(); ++v) {
    if (diag_coef_(v) != 0.0) t.add_cube(c3 * diag_coef_(v), w.row(v).transpose());
  }
  t *= 1.0 / static_cast<double>(docs_);
  return t;
}

long long WhitenedThirdAccumulator::diagonal_rows() const {
  return static_cast<long long>((diag_coef_.array() != 0.0).count());
}

Matrix WhitenedThirdAccumulator::raw_pair() const {
  if (docs_ == 0) throw ValidationError("no documents accumulated");
  return pair_ / static_cast<double>(docs_);
}

Tensor3 center_whitened_third(const Tensor3& raw, const Matrix& pair, const Vector& first,
                              double alpha0) {
  const double a0 = alpha0;
  Tensor3 t = raw;
  t.add_sym_pair(-a0 / (a0 + 2.0), pair, first);
  t.add_cube(2.0 * a0 * a0 / ((a0 + 1.0) * (a0 + 2.0)), first);
  return t;
}

void subtract_noise_third(Tensor3& t, const Vector& e_whitened, const Vector& n1_whitened,
                          double alpha0, double sigma) {
  t.add_sym_outer(-2.0 * sigma * sigma / (alpha0 + 2.0), e_whitened, n1_whitened);
}

namespace {

struct ThirdPass {
  Tensor3 raw;
  Matrix pair;
  ThirdMomentWork work;
};

ThirdPass run_third_pass(const Corpus& corpus, const Matrix& word_rows, const Vector& response_row,
                         double scale, int threads) {
  corpus.validate();
  auto acc = partitioned_reduce<WhitenedThirdAccumulator>(
      corpus.size(), threads,
      [&] { return WhitenedThirdAccumulator(&word_rows, response_row, scale); },
      [&](WhitenedThirdAccumulator& a, std::size_t d) { a.add(corpus.documents[d]); });
  ThirdPass pass{acc.raw_third(), acc.raw_pair(), acc.work()};
  // The deferred diagonal part costs one cube per vocabulary row seen.
  pass.work.cubic_updates += acc.diagonal_rows();
  return pass;
}

}  // namespace

WhitenedTensor whitened_m3(const Corpus& corpus, double alpha0, const Matrix& w, const Vector& m1,
                           int threads) {
  if (w.rows() != corpus.vocab_size || m1.size() != corpus.vocab_size) {
    throw ValidationError("whitening matrix has " + std::to_string(w.rows()) +
                          " rows, corpus vocabulary is " + std::to_string(corpus.vocab_size));
  }
  if (!(alpha0 > 0.0)) throw ValidationError("alpha0 must be positive");
  ThirdPass pass = run_third_pass(corpus, w, Vector(), 1.0, threads);
  WhitenedTensor out;
  out.t = center_whitened_third(pass.raw, pass.pair, w.transpose() * m1, alpha0);
  out.t.symmetrize();
  out.work = pass.work;
  return out;
}

WhitenedTensor whitened_n3(const Corpus& corpus, double alpha0, double sigma, double scale,
                           const Matrix& w, const Vector& n1, int threads) {
  const int v = corpus.vocab_size;
  if (w.rows() != v + 1 || n1.size() != v + 1) {
    throw ValidationError("joint whitening matrix has " + std::to_string(w.rows()) +
                          " rows, expected " + std::to_string(v + 1));
  }
  if (!(alpha0 > 0.0)) throw ValidationError("alpha0 must be positive");
  if (!(sigma >= 0.0)) throw ValidationError("sigma must be >= 0");
  if (!(scale > 0.0)) throw ValidationError("scale must be positive");
  const Matrix word_rows = w.topRows(v);
  const Vector e = w.row(v).transpose();
  ThirdPass pass = run_third_pass(corpus, word_rows, e, scale, threads);
  const Vector first = w.transpose() * n1;
  WhitenedTensor out;
  out.t = center_whitened_third(pass.raw, pass.pair, first, alpha0);
  subtract_noise_third(out.t, e, first, alpha0, sigma);
  out.t.symmetrize();
  out.work = pass.work;
  return out;
}

}  // namespace slda
