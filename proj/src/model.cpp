#include "slda/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slda/parallel.hpp"

namespace slda {

void SldaModel::validate(double column_tolerance) const {
  const int k = num_topics();
  if (k < 1) throw ValidationError("model needs at least one topic");
  if (topics.cols() != k || eta.size() != k) {
    throw ValidationError("model dimensions disagree: alpha has " + std::to_string(k) +
                          " entries, topics has " + std::to_string(topics.cols()) +
                          " columns, eta has " + std::to_string(eta.size()));
  }
  if (vocab_size() < k) throw ValidationError("vocabulary smaller than number of topics");
  for (int i = 0; i < k; ++i) {
    if (!(alpha(i) > 0.0) || !std::isfinite(alpha(i))) {
      throw ValidationError("alpha[" + std::to_string(i) + "] must be positive");
    }
    if (!std::isfinite(eta(i))) throw ValidationError("eta must be finite");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be >= 0");
  for (int i = 0; i < k; ++i) {
    if ((topics.col(i).array() < 0.0).any() || !topics.col(i).allFinite()) {
      throw ValidationError("topic " + std::to_string(i) + " has negative or non-finite entries");
    }
    const double s = topics.col(i).sum();
    if (std::abs(s - 1.0) > column_tolerance) {
      throw ValidationError("topic " + std::to_string(i) + " sums to " + std::to_string(s) +
                            ", not 1");
    }
  }
}

JointTopicMatrix JointTopicMatrix::from_model(const SldaModel& model, double scale) {
  if (!(scale > 0.0)) throw ValidationError("scale must be positive");
  JointTopicMatrix j;
  j.scale = scale;
  const int v = model.vocab_size();
  j.vstar.resize(v + 1, model.num_topics());
  j.vstar.topRows(v) = scale * model.topics;
  j.vstar.row(v) = model.eta.transpose();
  return j;
}

SldaModel random_model(const RandomModelOptions& opt) {
  if (opt.num_topics < 1 || opt.vocab_size < opt.num_topics) {
    throw ValidationError("need 1 <= topics <= vocab");
  }
  if (!(opt.alpha0 > 0.0)) throw ValidationError("alpha0 must be positive");
  if (!(opt.sigma >= 0.0)) throw ValidationError("sigma must be >= 0");
  Rng rng = make_rng(opt.seed, 0x6d6f64656cULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  SldaModel m;
  const int v = opt.vocab_size;
  const int k = opt.num_topics;
  m.alpha = Vector::Constant(k, opt.alpha0 / k);
  m.sigma = opt.sigma;
  for (int attempt = 0;; ++attempt) {
    if (attempt == 1000) throw ValidationError("could not draw well-conditioned topics");
    m.topics.resize(v, k);
    for (int i = 0; i < k; ++i) {
      for (int w = 0; w < v; ++w) m.topics(w, i) = unif(rng);
      m.topics.col(i) /= m.topics.col(i).sum();
    }
    Eigen::JacobiSVD<Matrix> svd(m.topics);
    if (svd.singularValues()(k - 1) >= opt.min_singular_value) break;
  }
  m.eta.resize(k);
  for (int i = 0; i < k; ++i) m.eta(i) = normal(rng);
  return m;
}

Vector sample_dirichlet(const Vector& alpha, Rng& rng) {
  const auto k = alpha.size();
  Vector h(k);
  for (;;) {
    for (Eigen::Index i = 0; i < k; ++i) {
      std::gamma_distribution<double> g(alpha(i), 1.0);
      h(i) = g(rng);
    }
    const double s = h.sum();
    // All-zero draws only happen through underflow at very small alpha.
    if (s > 0.0) return h / s;
  }
}

namespace {

int sample_cumulative(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u * cdf.back());
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(),
                                                   static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

}  // namespace

Corpus generate_corpus(const SldaModel& model, std::size_t num_docs, int doc_len,
                       std::uint64_t seed, int threads) {
  model.validate();
  if (doc_len < kMinDocumentLength) throw ValidationError("doc_len must be at least 3");
  if (num_docs == 0) throw ValidationError("num_docs must be positive");
  const int v = model.vocab_size();
  const int k = model.num_topics();

  std::vector<std::vector<double>> word_cdf(static_cast<std::size_t>(k));
  for (int t = 0; t < k; ++t) {
    auto& cdf = word_cdf[static_cast<std::size_t>(t)];
    cdf.resize(static_cast<std::size_t>(v));
    double acc = 0.0;
    for (int w = 0; w < v; ++w) cdf[static_cast<std::size_t>(w)] = acc += model.topics(w, t);
  }

  Corpus corpus;
  corpus.vocab_size = v;
  corpus.documents.resize(num_docs);
  parallel_for(num_docs, threads, [&](std::size_t d) {
    Rng rng = make_rng(seed, d);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Vector h = sample_dirichlet(model.alpha, rng);
    std::vector<double> topic_cdf(static_cast<std::size_t>(k));
    double acc = 0.0;
    for (int t = 0; t < k; ++t) topic_cdf[static_cast<std::size_t>(t)] = acc += h(t);

    std::vector<int> counts(static_cast<std::size_t>(v), 0);
    for (int j = 0; j < doc_len; ++j) {
      const int z = sample_cumulative(topic_cdf, unif(rng));
      const int w = sample_cumulative(word_cdf[static_cast<std::size_t>(z)], unif(rng));
      ++counts[static_cast<std::size_t>(w)];
    }
    Document doc;
    for (int w = 0; w < v; ++w) {
      if (counts[static_cast<std::size_t>(w)] > 0) doc.words.push_back({w, counts[static_cast<std::size_t>(w)]});
    }
    std::normal_distribution<double> noise(0.0, 1.0);
    doc.response = model.eta.dot(h);
    if (model.sigma > 0.0) doc.response += model.sigma * noise(rng);
    corpus.documents[d] = std::move(doc);
  });
  return corpus;
}

Matrix dirichlet_second_moment(const Vector& alpha) {
  const double a0 = alpha.sum();
  Matrix second = alpha * alpha.transpose();
  second.diagonal() += alpha;
  return second / (a0 * (a0 + 1.0));
}

DirichletMoments dirichlet_moments(const Vector& alpha) {
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (!(alpha(i) > 0.0)) throw ValidationError("Dirichlet parameters must be positive");
  }
  const int k = static_cast<int>(alpha.size());
  const double a0 = alpha.sum();
  DirichletMoments dm;
  dm.mean = alpha / a0;
  dm.second = dirichlet_second_moment(alpha);
  dm.third = Tensor3(k);
  const double denom = a0 * (a0 + 1.0) * (a0 + 2.0);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      for (int l = 0; l < k; ++l) {
        // Rising factorials on repeated indices.
        const double aj = alpha(j) + (i == j ? 1.0 : 0.0);
        const double al = alpha(l) + (i == l ? 1.0 : 0.0) + (j == l ? 1.0 : 0.0);
        dm.third(i, j, l) = alpha(i) * aj * al / denom;
      }
    }
  }
  return dm;
}

ExactMoments population_moments(const SldaModel& model) {
  model.validate();
  const double a0 = model.alpha0();
  ExactMoments em;
  em.model = model;
  em.m1 = model.topics * model.alpha / a0;
  const Matrix weighted = model.topics * model.alpha.asDiagonal();
  em.m2 = weighted * model.topics.transpose() / (a0 * (a0 + 1.0));
  const Vector alpha_eta = model.alpha.cwiseProduct(model.eta);
  em.my = model.topics * alpha_eta.asDiagonal() * model.topics.transpose() *
          (2.0 / (a0 * (a0 + 1.0) * (a0 + 2.0)));
  em.mean_y = model.eta.dot(model.alpha) / a0;
  em.mean_y2 = model.eta.dot(dirichlet_second_moment(model.alpha) * model.eta) +
               model.sigma * model.sigma;
  return em;
}

namespace {

Tensor3 whitened_weighted_cubes(const Matrix& columns, const Vector& alpha, const Matrix& w) {
  if (w.rows() != columns.rows()) throw ValidationError("whitening matrix has wrong row count");
  const double a0 = alpha.sum();
  const double c = 2.0 / (a0 * (a0 + 1.0) * (a0 + 2.0));
  Tensor3 t(static_cast<int>(w.cols()));
  const Matrix images = w.transpose() * columns;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) t.add_cube(c * alpha(i), images.col(i));
  return t;
}

}  // namespace

Tensor3 ExactMoments::whitened_m3(const Matrix& w) const {
  return whitened_weighted_cubes(model.topics, model.alpha, w);
}

ExactJointMoments population_joint_moments(const SldaModel& model, double scale) {
  model.validate();
  ExactJointMoments jm;
  jm.joint = JointTopicMatrix::from_model(model, scale);
  jm.alpha = model.alpha;
  const double a0 = model.alpha0();
  jm.n1 = jm.joint.vstar * model.alpha / a0;
  jm.n2 = jm.joint.vstar * model.alpha.asDiagonal() * jm.joint.vstar.transpose() /
          (a0 * (a0 + 1.0));
  return jm;
}

Tensor3 ExactJointMoments::whitened_n3(const Matrix& w) const {
  return whitened_weighted_cubes(joint.vstar, alpha, w);
}

}  // namespace slda
