#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slda/corpus.hpp"
#include "slda/model.hpp"

namespace slda {

/// perm[i] is the recovered topic matched to true topic i.
struct TopicMatching {
  std::vector<int> perm;
  double cost = 0.0;
};

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian
/// method, O(n^3)). Returns the column assigned to each row.
std::vector<int> min_cost_assignment(const Matrix& cost);

/// cost(i, j) = ||truth_i - recovered_j||_1 over topic columns.
Matrix topic_cost_matrix(const SldaModel& truth, const SldaModel& recovered);

TopicMatching match_topics(const SldaModel& truth, const SldaModel& recovered);

struct GibbsConfig {
  int burnin = 200;
  int samples = 200;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Posterior mean of the topic mixture of one document with the topics held
/// fixed, by collapsed Gibbs sampling over the word-topic assignments.
Vector infer_mixture_gibbs(const Document& doc, const SldaModel& model, int burnin, int samples,
                           std::uint64_t seed);

/// 1 - sum (y - yhat)^2 / sum (y - ybar)^2, absent when y is constant.
std::optional<double> predictive_r2(const std::vector<double>& y, const std::vector<double>& yhat);

struct TopicErrorRow {
  int truth_topic = 0;
  int recovered_topic = 0;
  double l1_mu = 0.0;
  double alpha_true = 0.0;
  double alpha_hat = 0.0;
  double eta_true = 0.0;
  double eta_hat = 0.0;
};

struct EvalReport {
  // Parameter errors after matching; present only when a truth model is given.
  std::optional<double> l1_alpha;
  std::optional<double> l1_eta;
  std::optional<double> l1_mu;
  double mse = 0.0;
  std::optional<double> pr2;
  double neg_perword_ll = 0.0;
  std::size_t num_docs = 0;
  long long num_tokens = 0;
  std::vector<TopicErrorRow> topics;
  std::vector<double> predictions;
};

/// L1 errors only, for runs that skip prediction.
void fill_parameter_errors(EvalReport& report, const SldaModel& truth,
                           const SldaModel& recovered);

EvalReport evaluate(const SldaModel* truth, const SldaModel& recovered, const Corpus& test,
                    const GibbsConfig& gibbs);

nlohmann::json report_to_json(const EvalReport& report);

inline constexpr const char* kEvalCsvVersion = "# slda-eval-csv v1";
std::string report_csv_header();
std::string report_csv_row(const EvalReport& report);

}  // namespace slda
