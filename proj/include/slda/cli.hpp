#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slda/common.hpp"
#include "slda/recovery.hpp"

namespace slda::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kRankDeficient = 10,
  kNegativeEigenvalue = 11,
  kIo = 12,
};

/// Bad flag values or combinations that the parser itself cannot see.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// An input file exists and parses but its content is invalid.
class InputError : public Error {
 public:
  using Error::Error;
};

int exit_code_for(const std::exception& e);

/// One per command invocation.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json outputs = nlohmann::json::object();
  std::vector<std::pair<std::string, double>> timings;
  nlohmann::json diagnostics = nlohmann::json::object();
  std::vector<std::string> warnings;
  std::string status = "ok";
  int exit_code = 0;

  nlohmann::json to_json() const;
};

struct SweepConfig {
  int vocab_size = 100;
  int num_topics = 5;
  int doc_len = 200;
  double alpha0 = 1.0;
  double sigma = 0.5;
  std::vector<std::size_t> sizes;
  std::vector<Method> methods{Method::two_stage, Method::joint};
  int trials = 1;
  std::uint64_t seed = 0;
  /// Held-out documents per trial for MSE and pR2; 0 skips prediction.
  std::size_t test_docs = 0;
  int burnin = 200;
  int samples = 200;
  RecoveryConfig recovery;  // method, k, alpha0, sigma_assumed, seed are set per cell
};

struct SweepRow {
  Method method = Method::two_stage;
  std::size_t num_docs = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";
  int exit_code = 0;
  double l1_alpha = 0.0;
  double l1_eta = 0.0;
  double l1_mu = 0.0;
  std::optional<double> mse;
  std::optional<double> pr2;
  std::optional<double> neg_perword_ll;
  double seconds = 0.0;
  std::string message;
};

/// Every (trial, size, method) cell. Failed cells keep their status and
/// message and the sweep moves on. Trial t uses seed + t for the model, the
/// corpus and the recovery; smaller sizes are prefixes of the largest draw.
std::vector<SweepRow> run_sweep(const SweepConfig& cfg);

inline constexpr const char* kSweepCsvVersion = "# slda-sweep-csv v1";
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args);
int main(int argc, char** argv);

}  // namespace slda::cli
