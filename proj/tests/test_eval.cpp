#include <doctest.h>

#include <cmath>

#include "oracles/oracles.hpp"
#include "slda/eval.hpp"
#include "test_util.hpp"

using namespace slda;
using testutil::random_matrix;
using testutil::toy_model;

namespace {

SldaModel permuted(const SldaModel& m, const std::vector<int>& perm) {
  // Column perm[i] of the result is column i of m.
  SldaModel out = m;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.topics.col(perm[i]) = m.topics.col(static_cast<Eigen::Index>(i));
    out.alpha(perm[i]) = m.alpha(static_cast<Eigen::Index>(i));
    out.eta(perm[i]) = m.eta(static_cast<Eigen::Index>(i));
  }
  return out;
}

}  // namespace

TEST_CASE("Hungarian assignment equals exhaustive search") {
  Rng rng = make_rng(61);
  std::uniform_int_distribution<int> small(0, 3);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 7;
    Matrix cost = random_matrix(n, n, rng).cwiseAbs();
    // Integer costs exercise ties.
    if (trial % 3 == 0) cost = cost.unaryExpr([&](double) { return double(small(rng)); });
    const auto perm = min_cost_assignment(cost);
    double got = 0.0;
    std::vector<int> seen(n, 0);
    for (int i = 0; i < n; ++i) {
      got += cost(i, perm[i]);
      ++seen[perm[i]];
    }
    CHECK(std::count(seen.begin(), seen.end(), 1) == n);
    CHECK(got == doctest::Approx(oracle::exhaustive_assignment(cost)).epsilon(1e-12));
  }
  CHECK(min_cost_assignment(Matrix(0, 0)).empty());
  CHECK_THROWS_AS(min_cost_assignment(Matrix::Zero(2, 3)), ValidationError);
}

TEST_CASE("matching undoes a permutation of the topics") {
  Rng rng = make_rng(62);
  const SldaModel m = toy_model(20, 5, 1.0, 0.0, rng);
  const std::vector<int> perm = {3, 0, 4, 1, 2};
  const SldaModel p = permuted(m, perm);
  const TopicMatching match = match_topics(m, p);
  CHECK(match.perm == perm);
  CHECK(match.cost == 0.0);
  EvalReport r;
  fill_parameter_errors(r, m, p);
  CHECK(*r.l1_alpha == 0.0);
  CHECK(*r.l1_eta == 0.0);
  CHECK(*r.l1_mu == 0.0);
  REQUIRE(r.topics.size() == 5);
  CHECK(r.topics[2].recovered_topic == 4);

  SldaModel shifted = p;
  shifted.eta.array() += 0.1;
  shifted.alpha(0) += 0.25;
  fill_parameter_errors(r, m, shifted);
  CHECK(*r.l1_eta == doctest::Approx(0.5));
  CHECK(*r.l1_alpha == doctest::Approx(0.25));

  const SldaModel other = toy_model(21, 5, 1.0, 0.0, rng);
  CHECK_THROWS_AS(match_topics(m, other), ValidationError);
}

TEST_CASE("Gibbs inference: degenerate cases are exact") {
  Rng rng = make_rng(63);
  SldaModel one = toy_model(6, 1, 2.0, 0.0, rng);
  const Document doc = testutil::random_doc(6, 10, rng);
  CHECK(infer_mixture_gibbs(doc, one, 5, 5, 1) == Vector::Ones(1));

  SldaModel m;
  m.alpha = Vector::Zero(2);
  m.alpha << 0.3, 0.7;
  m.topics = Matrix::Zero(4, 2);
  m.topics.col(0) << 0.5, 0.5, 0.0, 0.0;
  m.topics.col(1) << 0.0, 0.0, 0.5, 0.5;
  m.eta = Vector::Zero(2);
  Document d;
  d.words = {{0, 3}, {1, 2}};
  // Every assignment is forced, so the estimate is exact.
  const Vector h = infer_mixture_gibbs(d, m, 10, 10, 3);
  CHECK(h(0) == doctest::Approx(5.3 / 6.0).epsilon(1e-14));
  CHECK(h(1) == doctest::Approx(0.7 / 6.0).epsilon(1e-14));

  CHECK(infer_mixture_gibbs(Document{}, m, 10, 10, 3) == m.alpha);
  CHECK_THROWS_AS(infer_mixture_gibbs(d, m, -1, 10, 3), ValidationError);
  CHECK_THROWS_AS(infer_mixture_gibbs(d, m, 1, 0, 3), ValidationError);
  Document outside;
  outside.words = {{4, 1}};
  CHECK_THROWS_AS(infer_mixture_gibbs(outside, m, 1, 1, 3), ValidationError);
}

TEST_CASE("Gibbs inference converges to the enumerated posterior mean") {
  Rng rng = make_rng(64);
  for (int trial = 0; trial < 4; ++trial) {
    const SldaModel m = toy_model(5, 2 + trial % 2, 0.5 + trial, 0.0, rng);
    const Document doc = testutil::random_doc(5, 5, rng);
    const Vector want = oracle::enumerate_posterior_mean(doc, m);
    const Vector got = infer_mixture_gibbs(doc, m, 500, 40000, trial);
    CHECK((got - want).cwiseAbs().maxCoeff() < 0.01);
  }
}

TEST_CASE("Gibbs estimates lie in the simplex and are seed-deterministic") {
  Rng rng = make_rng(65);
  const SldaModel m = toy_model(30, 4, 0.8, 0.0, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const Document doc = testutil::random_doc(30, 3 + trial, rng);
    const Vector h = infer_mixture_gibbs(doc, m, 20, 20, trial);
    CHECK(h.minCoeff() > 0.0);
    CHECK(std::abs(h.sum() - 1.0) < 1e-12);
    CHECK(h == infer_mixture_gibbs(doc, m, 20, 20, trial));
  }
}

TEST_CASE("predictive R^2") {
  const std::vector<double> y = {1.0, 2.0, 4.0, 7.0};
  std::vector<double> mean(4, 3.5);
  CHECK(*predictive_r2(y, mean) == doctest::Approx(0.0));
  CHECK(*predictive_r2(y, y) == 1.0);
  std::vector<double> yhat = {1.5, 2.0, 3.0, 6.0};
  const double r = *predictive_r2(y, yhat);
  std::vector<double> ys = y, yhats = yhat;
  for (auto& x : ys) x += 100.0;
  for (auto& x : yhats) x += 100.0;
  CHECK(*predictive_r2(ys, yhats) == doctest::Approx(r).epsilon(1e-12));
  CHECK_FALSE(predictive_r2({2.0, 2.0}, {1.0, 3.0}).has_value());
}

TEST_CASE("self-evaluation of a sharp model predicts well") {
  RandomModelOptions o;
  o.vocab_size = 100;
  o.num_topics = 5;
  o.seed = 66;
  const SldaModel m = random_model(o);
  // At 200 words per document the inference floor sits near 0.93-0.945.
  const Corpus test = generate_corpus(m, 300, 400, 67);
  GibbsConfig g;
  g.seed = 1;
  const EvalReport r = evaluate(&m, m, test, g);
  CHECK(*r.pr2 >= 0.95);
  CHECK(*r.l1_mu == 0.0);
  CHECK(r.num_docs == 300);
  CHECK(r.num_tokens == 300 * 400);
  CHECK(std::isfinite(r.neg_perword_ll));
  CHECK(r.neg_perword_ll > 0.0);

  g.threads = 4;
  const EvalReport t = evaluate(&m, m, test, g);
  CHECK(t.predictions == r.predictions);
  CHECK(t.neg_perword_ll == r.neg_perword_ll);

  const std::string row = report_csv_row(r);
  CHECK(std::count(row.begin(), row.end(), ',') == 7);
  CHECK(report_csv_header().rfind(kEvalCsvVersion, 0) == 0);
  const nlohmann::json j = report_to_json(r);
  CHECK(j["num_docs"] == 300);
  CHECK(j["topics"].size() == 5);

  const EvalReport none = evaluate(nullptr, m, test.prefix(5), GibbsConfig{10, 10, 0, 1});
  CHECK_FALSE(none.l1_mu.has_value());
  CHECK(report_to_json(none)["l1_mu"].is_null());
}

TEST_CASE("evaluation rejects a vocabulary mismatch") {
  Rng rng = make_rng(68);
  const SldaModel m = toy_model(10, 2, 1.0, 0.0, rng);
  const Corpus c = testutil::random_corpus(12, 5, 3, 6, rng);
  try {
    evaluate(nullptr, m, c, GibbsConfig{});
    FAIL("expected a mismatch error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("vocabulary size mismatch") != std::string::npos);
  }
}
