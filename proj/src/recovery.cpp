#include "slda/recovery.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "slda/moments.hpp"

namespace slda {

std::string to_string(Method m) { return m == Method::two_stage ? "two-stage" : "joint"; }
std::string to_string(WhiteningKind w) {
  return w == WhiteningKind::exact ? "exact" : "randomized";
}

Method parse_method(const std::string& s) {
  if (s == "two-stage" || s == "two_stage") return Method::two_stage;
  if (s == "joint") return Method::joint;
  throw ValidationError("unknown method '" + s + "' (expected two-stage or joint)");
}

WhiteningKind parse_whitening(const std::string& s) {
  if (s == "exact") return WhiteningKind::exact;
  if (s == "randomized") return WhiteningKind::randomized;
  throw ValidationError("unknown whitening '" + s + "' (expected exact or randomized)");
}

void RecoveryConfig::validate() const {
  if (!(alpha0 > 0.0)) throw ValidationError("alpha0 must be positive");
  if (k < 1) throw ValidationError("k must be >= 1");
  if (!(scale > 0.0)) throw ValidationError("scale must be positive");
  if (!(sigma_assumed >= 0.0)) throw ValidationError("sigma must be >= 0");
  if (restarts < k) throw ValidationError("restarts must be at least k");
  if (iterations < 1) throw ValidationError("iterations must be >= 1");
  if (oversample < 1) throw ValidationError("oversample must be >= 1");
}

SigmaEstimate recover_sigma(double mean_y, double mean_y2, const Vector& alpha_hat,
                            const Vector& eta_hat) {
  if (alpha_hat.size() != eta_hat.size()) throw ValidationError("alpha/eta size mismatch");
  for (Eigen::Index i = 0; i < alpha_hat.size(); ++i) {
    if (!(alpha_hat(i) > 0.0)) throw ValidationError("alpha_hat must be positive");
  }
  SigmaEstimate est;
  est.sigma2_raw = mean_y2 - eta_hat.dot(dirichlet_second_moment(alpha_hat) * eta_hat);
  est.mean_y_discrepancy = std::abs(mean_y - eta_hat.dot(alpha_hat) / alpha_hat.sum());
  const double tolerance = 1e-12 * std::max(1.0, std::abs(mean_y2));
  if (est.sigma2_raw < -tolerance) {
    est.moment_mismatch = true;
    std::ostringstream os;
    os << "moment mismatch: estimated sigma^2 = " << est.sigma2_raw << " < 0, using 0";
    warn(os.str());
  }
  est.sigma = std::sqrt(std::max(est.sigma2_raw, 0.0));
  return est;
}

TwoStageInputs two_stage_inputs(const ExactMoments& exact) {
  TwoStageInputs in;
  in.m2 = exact.m2;
  in.my = exact.my;
  in.mean_y = exact.mean_y;
  in.mean_y2 = exact.mean_y2;
  in.whitened_m3 = [exact](const Matrix& w) { return exact.whitened_m3(w); };
  return in;
}

JointInputs joint_inputs(const SldaModel& model, double scale) {
  const ExactJointMoments jm = population_joint_moments(model, scale);
  const ExactMoments em = population_moments(model);
  JointInputs in;
  in.n2 = jm.n2;
  in.mean_y = em.mean_y;
  in.mean_y2 = em.mean_y2;
  in.whitened_n3 = [jm](const Matrix& w) { return jm.whitened_n3(w); };
  return in;
}

namespace {

class StageTimer {
 public:
  explicit StageTimer(RecoveredModel& out) : out_(out), start_(clock::now()) {}
  void lap(const std::string& stage) {
    const auto now = clock::now();
    out_.timings.emplace_back(stage, std::chrono::duration<double>(now - start_).count());
    start_ = now;
  }

 private:
  using clock = std::chrono::steady_clock;
  RecoveredModel& out_;
  clock::time_point start_;
};

WhiteningMatrix whiten(const Matrix& m, const RecoveryConfig& cfg) {
  if (cfg.whitening == WhiteningKind::exact) return whiten_exact(m, cfg.k, cfg.rank_tolerance);
  return whiten_randomized(m, cfg.k, cfg.oversample, cfg.seed, cfg.rank_tolerance);
}

EigenDecomposition decompose(const Tensor3& t, const RecoveryConfig& cfg,
                             const Vector& orientation) {
  PowerMethodOptions opt;
  opt.restarts = cfg.restarts;
  opt.iterations = cfg.iterations;
  opt.seed = cfg.seed;
  opt.threads = cfg.threads;
  opt.orientation = orientation;
  return robust_tpm(t, cfg.k, opt);
}

double alpha_from_lambda(double lambda, double a0) {
  return 4.0 * a0 * (a0 + 1.0) / ((a0 + 2.0) * (a0 + 2.0) * lambda * lambda);
}

// Clamps negative entries to zero and renormalizes each column.
void clean_topics(Matrix& topics, RecoveredModel& out) {
  for (Eigen::Index i = 0; i < topics.cols(); ++i) {
    double clamped = 0.0;
    for (Eigen::Index w = 0; w < topics.rows(); ++w) {
      if (topics(w, i) < 0.0) {
        clamped -= topics(w, i);
        topics(w, i) = 0.0;
      }
    }
    out.max_clamped_mass = std::max(out.max_clamped_mass, clamped);
    const double s = topics.col(i).sum();
    if (!(s > 0.0)) throw NegativeEigenvalueError("recovered topic has no positive mass");
    topics.col(i) /= s;
  }
  if (out.max_clamped_mass > 1e-9) {
    std::ostringstream os;
    os << "clamped negative topic mass up to " << out.max_clamped_mass;
    out.warnings.push_back(os.str());
    warn(os.str());
  }
}

void collect(RecoveredModel& out, const EigenDecomposition& dec) {
  out.residual_norm = dec.residual_norm;
  out.warnings.insert(out.warnings.end(), dec.warnings.begin(), dec.warnings.end());
  for (const auto& p : dec.pairs) out.lambdas.push_back(p.lambda);
}

}  // namespace

RecoveredModel recover_two_stage(const TwoStageInputs& in, const RecoveryConfig& cfg) {
  cfg.validate();
  RecoveredModel out;
  out.config = cfg;
  StageTimer timer(out);
  const double a0 = cfg.alpha0;
  const int v = static_cast<int>(in.m2.rows());

  const WhiteningMatrix wm = whiten(in.m2, cfg);
  out.whitening_residual = whitening_residual(in.m2, wm.w);
  timer.lap("whitening");

  const Tensor3 t = in.whitened_m3(wm.w);
  timer.lap("third_moment");

  const Vector orientation = wm.w_pinv * Vector::Ones(v);
  const EigenDecomposition dec = decompose(t, cfg, orientation);
  collect(out, dec);
  timer.lap("decomposition");

  const Matrix my_w = wm.w.transpose() * in.my * wm.w;
  const int k = cfg.k;
  SldaModel& m = out.model;
  m.alpha.resize(k);
  m.eta.resize(k);
  m.topics.resize(v, k);
  for (int i = 0; i < k; ++i) {
    const auto& p = dec.pairs[static_cast<std::size_t>(i)];
    m.alpha(i) = alpha_from_lambda(p.lambda, a0);
    m.topics.col(i) = (0.5 * (a0 + 2.0) * p.lambda) * (wm.w_pinv.transpose() * p.omega);
    m.eta(i) = 0.5 * (a0 + 2.0) * p.omega.dot(my_w * p.omega);
  }
  clean_topics(m.topics, out);

  const SigmaEstimate se = recover_sigma(in.mean_y, in.mean_y2, m.alpha, m.eta);
  m.sigma = se.sigma;
  out.mean_y_discrepancy = se.mean_y_discrepancy;
  if (se.moment_mismatch) out.warnings.push_back("moment mismatch in sigma recovery");
  timer.lap("recovery");
  return out;
}

RecoveredModel recover_joint(const JointInputs& in, const RecoveryConfig& cfg) {
  cfg.validate();
  RecoveredModel out;
  out.config = cfg;
  StageTimer timer(out);
  const double a0 = cfg.alpha0;
  const int v = static_cast<int>(in.n2.rows()) - 1;
  if (v < 1) throw ValidationError("joint second moment too small");

  const WhiteningMatrix wm = whiten(in.n2, cfg);
  out.whitening_residual = whitening_residual(in.n2, wm.w);
  timer.lap("whitening");

  const Tensor3 t = in.whitened_n3(wm.w);
  timer.lap("third_moment");

  Vector word_mass = Vector::Ones(v + 1);
  word_mass(v) = 0.0;
  const Vector orientation = wm.w_pinv * word_mass;
  const EigenDecomposition dec = decompose(t, cfg, orientation);
  collect(out, dec);
  timer.lap("decomposition");

  const int k = cfg.k;
  SldaModel& m = out.model;
  m.alpha.resize(k);
  m.eta.resize(k);
  m.topics.resize(v, k);
  for (int i = 0; i < k; ++i) {
    const auto& p = dec.pairs[static_cast<std::size_t>(i)];
    m.alpha(i) = alpha_from_lambda(p.lambda, a0);
    const Vector joint = (0.5 * (a0 + 2.0) * p.lambda) * (wm.w_pinv.transpose() * p.omega);
    m.topics.col(i) = joint.head(v) / cfg.scale;
    m.eta(i) = joint(v);
  }
  clean_topics(m.topics, out);
  m.sigma = cfg.sigma_assumed;

  if (std::isfinite(in.mean_y) && std::isfinite(in.mean_y2)) {
    const SigmaEstimate se = recover_sigma(in.mean_y, in.mean_y2, m.alpha, m.eta);
    out.sigma_moment_estimate = se.sigma;
    out.mean_y_discrepancy = se.mean_y_discrepancy;
  }
  timer.lap("recovery");
  return out;
}

RecoveredModel recover_two_stage(const Corpus& corpus, const RecoveryConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const MomentSet ms = estimate_moments(corpus, cfg.alpha0, cfg.threads);
  const double moment_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  TwoStageInputs in;
  in.m2 = ms.m2;
  in.my = ms.my;
  in.mean_y = ms.mean_y;
  in.mean_y2 = ms.mean_y2;
  in.whitened_m3 = [&](const Matrix& w) {
    return whitened_m3(corpus, cfg.alpha0, w, ms.m1, cfg.threads).t;
  };
  RecoveredModel out = recover_two_stage(in, cfg);
  out.timings.insert(out.timings.begin(), {"moments", moment_seconds});
  return out;
}

RecoveredModel recover_joint(const Corpus& corpus, const RecoveryConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const JointMomentSet js =
      estimate_joint_moments(corpus, cfg.alpha0, cfg.sigma_assumed, cfg.scale, cfg.threads);
  const double moment_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  JointInputs in;
  in.n2 = js.n2;
  in.mean_y = js.mean_y;
  in.mean_y2 = js.mean_y2;
  in.whitened_n3 = [&](const Matrix& w) {
    return whitened_n3(corpus, cfg.alpha0, cfg.sigma_assumed, cfg.scale, w, js.n1, cfg.threads).t;
  };
  RecoveredModel out = recover_joint(in, cfg);
  out.timings.insert(out.timings.begin(), {"moments", moment_seconds});
  return out;
}

RecoveredModel recover(const Corpus& corpus, const RecoveryConfig& cfg) {
  return cfg.method == Method::two_stage ? recover_two_stage(corpus, cfg)
                                         : recover_joint(corpus, cfg);
}

}  // namespace slda
