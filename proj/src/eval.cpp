#include "slda/eval.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "slda/parallel.hpp"

namespace slda {

std::vector<int> min_cost_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw ValidationError("assignment needs a square cost matrix");
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials u (rows), v (columns); p[j] is the row matched to column j.
  // Index 0 is a sentinel, real rows and columns are 1..n.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

Matrix topic_cost_matrix(const SldaModel& truth, const SldaModel& recovered) {
  if (truth.num_topics() != recovered.num_topics() ||
      truth.vocab_size() != recovered.vocab_size()) {
    std::ostringstream os;
    os << "dimension mismatch: truth has k=" << truth.num_topics() << ", V="
       << truth.vocab_size() << "; recovered has k=" << recovered.num_topics()
       << ", V=" << recovered.vocab_size();
    throw ValidationError(os.str());
  }
  const int k = truth.num_topics();
  Matrix cost(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      cost(i, j) = (truth.topics.col(i) - recovered.topics.col(j)).lpNorm<1>();
    }
  }
  return cost;
}

TopicMatching match_topics(const SldaModel& truth, const SldaModel& recovered) {
  const Matrix cost = topic_cost_matrix(truth, recovered);
  TopicMatching m;
  m.perm = min_cost_assignment(cost);
  for (std::size_t i = 0; i < m.perm.size(); ++i) {
    m.cost += cost(static_cast<Eigen::Index>(i), m.perm[i]);
  }
  return m;
}

Vector infer_mixture_gibbs(const Document& doc, const SldaModel& model, int burnin, int samples,
                           std::uint64_t seed) {
  if (burnin < 0) throw ValidationError("burn-in must be >= 0");
  if (samples < 1) throw ValidationError("need at least one retained sweep");
  const int k = model.num_topics();
  const int v = model.vocab_size();
  const double a0 = model.alpha0();

  std::vector<int> tokens;
  tokens.reserve(static_cast<std::size_t>(doc.length()));
  for (const auto& wc : doc.words) {
    if (wc.word < 0 || wc.word >= v) {
      throw ValidationError("word " + std::to_string(wc.word + 1) + " outside vocabulary of size " +
                            std::to_string(v));
    }
    for (int c = 0; c < wc.count; ++c) tokens.push_back(wc.word);
  }
  const int m = static_cast<int>(tokens.size());
  if (k == 1) return Vector::Ones(1);
  if (m == 0) return model.alpha / a0;

  // Per distinct word: the topic weights mu_{t,w}, smoothed if all are zero.
  std::vector<Vector> weights(static_cast<std::size_t>(v));
  for (const auto& wc : doc.words) {
    Vector w = model.topics.row(wc.word).transpose();
    if (!(w.maxCoeff() > 0.0)) {
      warn("word " + std::to_string(wc.word + 1) +
           " has zero probability under every topic; smoothing with 1e-12");
      w = Vector::Constant(k, 1e-12);
    }
    weights[static_cast<std::size_t>(wc.word)] = std::move(w);
  }

  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> z(static_cast<std::size_t>(m));
  Vector n = Vector::Zero(k);
  Vector p(k);

  auto draw = [&](int word) {
    const Vector& w = weights[static_cast<std::size_t>(word)];
    double total = 0.0;
    for (int t = 0; t < k; ++t) {
      total += (model.alpha(t) + n(t)) * w(t);
      p(t) = total;
    }
    const double r = unif(rng) * total;
    for (int t = 0; t < k - 1; ++t) {
      if (r < p(t)) return t;
    }
    return k - 1;
  };

  // Sequential initialization from the predictive of the tokens so far.
  for (int j = 0; j < m; ++j) {
    z[j] = draw(tokens[j]);
    n(z[j]) += 1.0;
  }

  Vector acc = Vector::Zero(k);
  for (int sweep = 0; sweep < burnin + samples; ++sweep) {
    for (int j = 0; j < m; ++j) {
      n(z[j]) -= 1.0;
      z[j] = draw(tokens[j]);
      n(z[j]) += 1.0;
    }
    if (sweep >= burnin) acc += n;
  }
  Vector h = (acc / samples + model.alpha) / (a0 + m);
  return h / h.sum();
}

std::optional<double> predictive_r2(const std::vector<double>& y, const std::vector<double>& yhat) {
  if (y.size() != yhat.size()) throw ValidationError("prediction count mismatch");
  if (y.empty()) return std::nullopt;
  double mean = 0.0;
  for (double x : y) mean += x;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (!(ss_tot > 0.0)) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

void fill_parameter_errors(EvalReport& report, const SldaModel& truth,
                           const SldaModel& recovered) {
  const TopicMatching match = match_topics(truth, recovered);
  double l1_alpha = 0.0, l1_eta = 0.0;
  report.topics.clear();
  for (int i = 0; i < truth.num_topics(); ++i) {
    const int j = match.perm[static_cast<std::size_t>(i)];
    TopicErrorRow row;
    row.truth_topic = i;
    row.recovered_topic = j;
    row.l1_mu = (truth.topics.col(i) - recovered.topics.col(j)).lpNorm<1>();
    row.alpha_true = truth.alpha(i);
    row.alpha_hat = recovered.alpha(j);
    row.eta_true = truth.eta(i);
    row.eta_hat = recovered.eta(j);
    l1_alpha += std::abs(row.alpha_true - row.alpha_hat);
    l1_eta += std::abs(row.eta_true - row.eta_hat);
    report.topics.push_back(row);
  }
  report.l1_alpha = l1_alpha;
  report.l1_eta = l1_eta;
  report.l1_mu = match.cost;
}

EvalReport evaluate(const SldaModel* truth, const SldaModel& recovered, const Corpus& test,
                    const GibbsConfig& gibbs) {
  recovered.validate(1e-6);
  if (test.vocab_size != recovered.vocab_size()) {
    std::ostringstream os;
    os << "vocabulary size mismatch: model has V=" << recovered.vocab_size()
       << ", test corpus has V=" << test.vocab_size;
    throw ValidationError(os.str());
  }
  EvalReport report;
  if (truth != nullptr) fill_parameter_errors(report, *truth, recovered);

  const std::size_t docs = test.size();
  report.num_docs = docs;
  report.predictions.assign(docs, 0.0);
  std::vector<double> loglik(docs, 0.0);
  std::vector<long long> tokens(docs, 0);
  parallel_for(docs, gibbs.threads, [&](std::size_t d) {
    const Document& doc = test.documents[d];
    const Vector h = infer_mixture_gibbs(doc, recovered, gibbs.burnin, gibbs.samples,
                                         make_rng(gibbs.seed, d)());
    report.predictions[d] = recovered.eta.dot(h);
    double ll = 0.0;
    for (const auto& wc : doc.words) {
      ll += wc.count * std::log(recovered.topics.row(wc.word).dot(h));
    }
    loglik[d] = ll;
    tokens[d] = doc.length();
  });

  const std::vector<double> y = test.responses();
  double sq = 0.0, ll = 0.0;
  for (std::size_t d = 0; d < docs; ++d) {
    sq += (y[d] - report.predictions[d]) * (y[d] - report.predictions[d]);
    ll += loglik[d];
    report.num_tokens += tokens[d];
  }
  report.mse = docs > 0 ? sq / static_cast<double>(docs) : 0.0;
  report.pr2 = predictive_r2(y, report.predictions);
  if (!report.pr2) warn("test responses have zero variance; pR2 is undefined");
  report.neg_perword_ll =
      report.num_tokens > 0 ? -ll / static_cast<double>(report.num_tokens) : 0.0;
  return report;
}

namespace {

nlohmann::json opt(const std::optional<double>& x) {
  return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
}

std::string csv_value(const std::optional<double>& x) {
  if (!x) return "";
  std::ostringstream os;
  os.precision(17);
  os << *x;
  return os.str();
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["l1_alpha"] = opt(r.l1_alpha);
  j["l1_eta"] = opt(r.l1_eta);
  j["l1_mu"] = opt(r.l1_mu);
  j["mse"] = r.mse;
  j["pr2"] = opt(r.pr2);
  j["neg_perword_ll"] = std::isfinite(r.neg_perword_ll) ? nlohmann::json(r.neg_perword_ll)
                                                         : nlohmann::json("inf");
  j["num_docs"] = r.num_docs;
  j["num_tokens"] = r.num_tokens;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& t : r.topics) {
    rows.push_back({{"truth_topic", t.truth_topic},
                    {"recovered_topic", t.recovered_topic},
                    {"l1_mu", t.l1_mu},
                    {"alpha_true", t.alpha_true},
                    {"alpha_hat", t.alpha_hat},
                    {"eta_true", t.eta_true},
                    {"eta_hat", t.eta_hat}});
  }
  j["topics"] = rows;
  return j;
}

std::string report_csv_header() {
  return std::string(kEvalCsvVersion) +
         "\nl1_alpha,l1_eta,l1_mu,mse,pr2,neg_perword_ll,num_docs,num_tokens\n";
}

std::string report_csv_row(const EvalReport& r) {
  std::ostringstream os;
  os << csv_value(r.l1_alpha) << ',' << csv_value(r.l1_eta) << ',' << csv_value(r.l1_mu) << ','
     << csv_value(r.mse) << ',' << csv_value(r.pr2) << ',' << csv_value(r.neg_perword_ll) << ','
     << r.num_docs << ',' << r.num_tokens << '\n';
  return os.str();
}

}  // namespace slda
