#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slda/corpus.hpp"
#include "slda/model.hpp"
#include "slda/spectral.hpp"

namespace slda {

enum class Method { two_stage, joint };
enum class WhiteningKind { exact, randomized };

std::string to_string(Method m);
std::string to_string(WhiteningKind w);
Method parse_method(const std::string& s);
WhiteningKind parse_whitening(const std::string& s);

struct RecoveryConfig {
  Method method = Method::two_stage;
  double alpha0 = 1.0;
  int k = 1;
  int restarts = 100;    // L
  int iterations = 100;  // T
  double sigma_assumed = 0.0;  // joint only
  double scale = 100.0;        // joint only
  WhiteningKind whitening = WhiteningKind::exact;
  int oversample = 10;
  std::uint64_t seed = 0;
  int threads = 1;
  double rank_tolerance = kDefaultRankTolerance;

  void validate() const;
};

struct RecoveredModel {
  SldaModel model;
  RecoveryConfig config;
  double residual_norm = 0.0;
  double whitening_residual = 0.0;
  std::vector<double> lambdas;  // per recovered topic, same order as model columns
  double max_clamped_mass = 0.0;
  /// |mean_y - sum_i eta_i alpha_i / alpha0| on the recovered parameters.
  double mean_y_discrepancy = 0.0;
  /// For the joint method: sigma re-estimated from the response moments
  /// with the two-stage formula. The model itself carries sigma_assumed.
  std::optional<double> sigma_moment_estimate;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, double>> timings;  // stage, seconds
};

/// Whitened third moment as a function of the whitening matrix, so that
/// empirical and exact moments drive the same pipeline.
using WhitenedThirdFn = std::function<Tensor3(const Matrix&)>;

struct TwoStageInputs {
  Matrix m2;
  Matrix my;
  double mean_y = 0.0;
  double mean_y2 = 0.0;
  WhitenedThirdFn whitened_m3;
};

struct JointInputs {
  Matrix n2;  // (V+1) x (V+1), words scaled by cfg.scale
  double mean_y = 0.0;
  double mean_y2 = 0.0;
  WhitenedThirdFn whitened_n3;
};

TwoStageInputs two_stage_inputs(const ExactMoments& exact);
/// Exact joint moments at the given model's scale-free parameters.
JointInputs joint_inputs(const SldaModel& model, double scale);

RecoveredModel recover_two_stage(const TwoStageInputs& in, const RecoveryConfig& cfg);
RecoveredModel recover_two_stage(const Corpus& corpus, const RecoveryConfig& cfg);
RecoveredModel recover_joint(const JointInputs& in, const RecoveryConfig& cfg);
RecoveredModel recover_joint(const Corpus& corpus, const RecoveryConfig& cfg);
/// Dispatches on cfg.method.
RecoveredModel recover(const Corpus& corpus, const RecoveryConfig& cfg);

struct SigmaEstimate {
  double sigma = 0.0;
  double sigma2_raw = 0.0;  // before clamping at zero
  double mean_y_discrepancy = 0.0;
  bool moment_mismatch = false;
};

/// sigma^2 = E[y^2] - eta^T E[h ⊗ h] eta with the Dirichlet second moment of
/// alpha_hat, clamped at zero.
SigmaEstimate recover_sigma(double mean_y, double mean_y2, const Vector& alpha_hat,
                            const Vector& eta_hat);

}  // namespace slda
