#include "slda/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>

#include <CLI11.hpp>

#include "slda/eval.hpp"
#include "slda/io.hpp"
#include "slda/model.hpp"
#include "slda/moments.hpp"
#include "slda/parallel.hpp"
#include "slda/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace slda::cli {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return kUsage;
  if (dynamic_cast<const RankDeficientError*>(&e)) return kRankDeficient;
  if (dynamic_cast<const NegativeEigenvalueError*>(&e)) return kNegativeEigenvalue;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const InputError*>(&e)) {
    return kIo;
  }
  return kFailure;
}

json RunManifest::to_json() const {
  json j;
  j["tool"] = "slda";
  j["version"] = SLDA_VERSION;
  j["command"] = command;
  j["argv"] = argv;
  j["config"] = config;
  j["seed"] = seed;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  json t = json::object();
  for (const auto& [stage, seconds] : timings) t[stage] = seconds;
  j["timings"] = t;
  j["diagnostics"] = diagnostics;
  j["warnings"] = warnings;
  j["status"] = status;
  j["exit_code"] = exit_code;
  return j;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string output_dir() {
  const char* env = std::getenv("SLDA_OUT_DIR");
  return env != nullptr && *env != '\0' ? std::string(env) : std::string(".");
}

std::string default_output(const std::string& name) {
  return (fs::path(output_dir()) / name).string();
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

SldaModel load_model(const std::string& path) {
  try {
    return read_model(path);
  } catch (const ValidationError& e) {
    throw InputError(e.what());
  }
}

Corpus load_corpus(const std::string& docs, const std::string& responses) {
  Corpus c = read_corpus(docs, responses);
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw InputError(docs + ": " + e.what());
  }
  return c;
}

json recovery_config_json(const RecoveryConfig& c) {
  return {{"method", to_string(c.method)},
          {"alpha0", c.alpha0},
          {"k", c.k},
          {"restarts", c.restarts},
          {"iterations", c.iterations},
          {"sigma", c.sigma_assumed},
          {"scale", c.scale},
          {"whitening", to_string(c.whitening)},
          {"oversample", c.oversample},
          {"seed", c.seed},
          {"threads", c.threads},
          {"rank_tolerance", c.rank_tolerance}};
}

void check_recovery_config(const RecoveryConfig& c) {
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
}

// ---- generate

struct GenerateOptions {
  int vocab = 500;
  int topics = 20;
  std::size_t docs = 0;
  int doc_len = 250;
  double alpha0 = 1.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::size_t test_docs = 0;
  int threads = 0;
  std::string out;
};

void cmd_generate(const GenerateOptions& o, RunManifest& m) {
  if (o.topics > o.vocab) throw UsageError("--topics cannot exceed --vocab");
  if (o.doc_len < kMinDocumentLength) throw UsageError("--doc-len must be at least 3");
  const int threads = resolve_threads(o.threads);
  m.seed = o.seed;
  m.config = {{"vocab", o.vocab},   {"topics", o.topics}, {"docs", o.docs},
              {"doc_len", o.doc_len}, {"alpha0", o.alpha0}, {"sigma", o.sigma},
              {"seed", o.seed},     {"test_docs", o.test_docs}, {"threads", threads}};
  ensure_dir(o.out);
  const fs::path dir(o.out);

  auto start = Clock::now();
  RandomModelOptions mo;
  mo.vocab_size = o.vocab;
  mo.num_topics = o.topics;
  mo.alpha0 = o.alpha0;
  mo.sigma = o.sigma;
  mo.seed = o.seed;
  const SldaModel model = random_model(mo);
  m.timings.emplace_back("model", seconds_since(start));

  start = Clock::now();
  const Corpus train = generate_corpus(model, o.docs, o.doc_len, o.seed, threads);
  m.timings.emplace_back("corpus", seconds_since(start));

  start = Clock::now();
  const std::string docword = (dir / "docword.txt").string();
  const std::string responses = (dir / "responses.txt").string();
  const std::string model_path = (dir / "model.json").string();
  write_corpus(train, docword, responses);
  write_model(model, model_path);
  m.outputs = {{"docword", docword}, {"responses", responses}, {"model", model_path}};
  if (o.test_docs > 0) {
    const Corpus test = generate_corpus(model, o.test_docs, o.doc_len,
                                        make_rng(o.seed, 0x74657374ULL)(), threads);
    const std::string tdw = (dir / "test_docword.txt").string();
    const std::string tr = (dir / "test_responses.txt").string();
    write_corpus(test, tdw, tr);
    m.outputs["test_docword"] = tdw;
    m.outputs["test_responses"] = tr;
  }
  m.timings.emplace_back("write", seconds_since(start));
}

// ---- recover

struct RecoverOptions {
  std::string docs;
  std::string responses;
  std::string method = "two-stage";
  double alpha0 = 1.0;
  int topics = 0;
  double sigma = 0.0;
  double scale = 100.0;
  std::string whitening = "exact";
  int oversample = 10;
  int restarts = 100;
  int iters = 100;
  std::uint64_t seed = 0;
  int threads = 0;
  double rank_tol = kDefaultRankTolerance;
  std::string out;
};

RecoveryConfig recovery_config(const RecoverOptions& o) {
  RecoveryConfig c;
  try {
    c.method = parse_method(o.method);
    c.whitening = parse_whitening(o.whitening);
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  c.alpha0 = o.alpha0;
  c.k = o.topics;
  c.sigma_assumed = o.sigma;
  c.scale = o.scale;
  c.oversample = o.oversample;
  c.restarts = o.restarts;
  c.iterations = o.iters;
  c.seed = o.seed;
  c.threads = resolve_threads(o.threads);
  c.rank_tolerance = o.rank_tol;
  check_recovery_config(c);
  return c;
}

void cmd_recover(const RecoverOptions& o, RunManifest& m) {
  const RecoveryConfig cfg = recovery_config(o);
  m.seed = cfg.seed;
  m.config = recovery_config_json(cfg);
  m.inputs = {{"docs", o.docs}, {"responses", o.responses}};
  m.outputs = {{"model", o.out}};

  auto start = Clock::now();
  const Corpus corpus = load_corpus(o.docs, o.responses);
  m.timings.emplace_back("read", seconds_since(start));

  const RecoveredModel rec = recover(corpus, cfg);
  for (const auto& t : rec.timings) m.timings.push_back(t);

  json d;
  d["lambdas"] = rec.lambdas;
  d["residual_norm"] = rec.residual_norm;
  d["whitening_residual"] = rec.whitening_residual;
  d["max_clamped_mass"] = rec.max_clamped_mass;
  d["mean_y_discrepancy"] = rec.mean_y_discrepancy;
  if (rec.sigma_moment_estimate) d["sigma_moment_estimate"] = *rec.sigma_moment_estimate;
  m.diagnostics = d;

  start = Clock::now();
  ensure_parent(o.out);
  write_model(rec.model, o.out);
  m.timings.emplace_back("write", seconds_since(start));
}

// ---- eval

struct EvalOptions {
  std::string model;
  std::string test_docs;
  std::string test_responses;
  std::string truth;
  int burnin = 200;
  int samples = 200;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
};

void cmd_eval(const EvalOptions& o, RunManifest& m) {
  GibbsConfig g;
  g.burnin = o.burnin;
  g.samples = o.samples;
  g.seed = o.seed;
  g.threads = resolve_threads(o.threads);
  m.seed = o.seed;
  m.config = {{"burnin", g.burnin}, {"samples", g.samples}, {"seed", g.seed},
              {"threads", g.threads}};
  m.inputs = {{"model", o.model}, {"test_docs", o.test_docs},
              {"test_responses", o.test_responses}};
  if (!o.truth.empty()) m.inputs["truth"] = o.truth;
  const std::string json_path = o.out + ".json";
  const std::string csv_path = o.out + ".csv";
  m.outputs = {{"report", json_path}, {"csv", csv_path}};

  auto start = Clock::now();
  const SldaModel model = load_model(o.model);
  std::optional<SldaModel> truth;
  if (!o.truth.empty()) truth = load_model(o.truth);
  const Corpus test = load_corpus(o.test_docs, o.test_responses);
  m.timings.emplace_back("read", seconds_since(start));

  start = Clock::now();
  const EvalReport report = evaluate(truth ? &*truth : nullptr, model, test, g);
  m.timings.emplace_back("evaluate", seconds_since(start));

  ensure_parent(json_path);
  write_text_file(json_path, report_to_json(report).dump(2) + "\n");
  write_text_file(csv_path, report_csv_header() + report_csv_row(report));
  std::cout << "mse " << fmt(report.mse) << "\n";
  std::cout << "pr2 " << (report.pr2 ? fmt(*report.pr2) : std::string("undefined")) << "\n";
  std::cout << "neg_perword_ll " << fmt(report.neg_perword_ll) << "\n";
  if (report.l1_mu) {
    std::cout << "l1_alpha " << fmt(*report.l1_alpha) << "\nl1_eta " << fmt(*report.l1_eta)
              << "\nl1_mu " << fmt(*report.l1_mu) << "\n";
  }
}

// ---- sweep

struct SweepOptions {
  int vocab = 100;
  int topics = 5;
  int doc_len = 200;
  double alpha0 = 1.0;
  double sigma = 0.5;
  std::vector<std::size_t> sizes;
  std::vector<std::string> methods{"two-stage", "joint"};
  int trials = 1;
  std::uint64_t seed = 0;
  std::size_t test_docs = 0;
  int burnin = 200;
  int samples = 200;
  double scale = 100.0;
  std::string whitening = "exact";
  int oversample = 10;
  int restarts = 100;
  int iters = 100;
  int threads = 0;
  std::string out;
};

void cmd_sweep(const SweepOptions& o, RunManifest& m) {
  SweepConfig c;
  c.vocab_size = o.vocab;
  c.num_topics = o.topics;
  c.doc_len = o.doc_len;
  c.alpha0 = o.alpha0;
  c.sigma = o.sigma;
  c.sizes = o.sizes;
  c.trials = o.trials;
  c.seed = o.seed;
  c.test_docs = o.test_docs;
  c.burnin = o.burnin;
  c.samples = o.samples;
  c.methods.clear();
  try {
    for (const auto& s : o.methods) c.methods.push_back(parse_method(s));
    c.recovery.whitening = parse_whitening(o.whitening);
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  if (c.sizes.empty()) throw UsageError("--sizes needs at least one value");
  if (o.topics > o.vocab) throw UsageError("--topics cannot exceed --vocab");
  c.recovery.scale = o.scale;
  c.recovery.oversample = o.oversample;
  c.recovery.restarts = o.restarts;
  c.recovery.iterations = o.iters;
  c.recovery.threads = resolve_threads(o.threads);
  c.recovery.k = o.topics;
  c.recovery.alpha0 = o.alpha0;
  check_recovery_config(c.recovery);

  m.seed = o.seed;
  std::vector<std::string> method_names;
  for (auto mt : c.methods) method_names.push_back(to_string(mt));
  json rc = recovery_config_json(c.recovery);
  rc.erase("method");
  m.config = {{"vocab", o.vocab},       {"topics", o.topics},   {"doc_len", o.doc_len},
              {"alpha0", o.alpha0},     {"sigma", o.sigma},     {"sizes", o.sizes},
              {"methods", method_names}, {"trials", o.trials},  {"seed", o.seed},
              {"test_docs", o.test_docs}, {"burnin", o.burnin}, {"samples", o.samples},
              {"recovery", rc}};
  m.outputs = {{"csv", o.out}};

  const auto start = Clock::now();
  const std::vector<SweepRow> rows = run_sweep(c);
  m.timings.emplace_back("sweep", seconds_since(start));
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.status == "ok" ? 0 : 1;
  m.diagnostics = {{"cells", rows.size()}, {"failed_cells", failed}};

  ensure_parent(o.out);
  write_text_file(o.out, sweep_csv(rows));
}

// ---- moments

struct MomentsOptions {
  std::string docs;
  std::string responses;
  double alpha0 = 1.0;
  int threads = 0;
  std::string out;
};

void cmd_moments(const MomentsOptions& o, RunManifest& m) {
  if (!(o.alpha0 > 0.0)) throw UsageError("--alpha0 must be positive");
  const int threads = resolve_threads(o.threads);
  m.config = {{"alpha0", o.alpha0}, {"threads", threads}};
  m.inputs = {{"docs", o.docs}, {"responses", o.responses}};
  m.outputs = {{"moments", o.out}};
  const Corpus corpus = load_corpus(o.docs, o.responses);
  const auto start = Clock::now();
  const MomentSet ms = estimate_moments(corpus, o.alpha0, threads);
  m.timings.emplace_back("moments", seconds_since(start));

  std::ostringstream os;
  const auto v = ms.m1.size();
  os << "# slda-moments v1\n";
  os << "V " << v << " alpha0 " << fmt(o.alpha0) << " docs " << ms.num_docs << "\n";
  os << "mean_y " << fmt(ms.mean_y) << "\nmean_y2 " << fmt(ms.mean_y2) << "\n";
  os << "m1\n";
  for (Eigen::Index i = 0; i < v; ++i) os << (i ? " " : "") << fmt(ms.m1(i));
  os << "\n";
  auto dump = [&](const char* name, const Matrix& a) {
    os << name << "\n";
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) os << (j ? " " : "") << fmt(a(i, j));
      os << "\n";
    }
  };
  dump("m2", ms.m2);
  dump("my", ms.my);
  ensure_parent(o.out);
  write_text_file(o.out, os.str());
}

// ---- decompose

struct DecomposeOptions {
  std::string tensor;
  int topics = 0;
  std::vector<double> orientation;
  int restarts = 100;
  int iters = 100;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
};

Tensor3 tensor_from_json(const json& j, const std::string& path) {
  try {
    const int dim = j.at("dim").get<int>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (dim < 1) throw InputError(path + ": dim must be positive");
    const auto n = static_cast<std::size_t>(dim) * dim * dim;
    if (data.size() != n) {
      throw InputError(path + ": expected " + std::to_string(n) + " entries, found " +
                       std::to_string(data.size()));
    }
    Tensor3 t(dim);
    std::size_t idx = 0;
    for (int a = 0; a < dim; ++a) {
      for (int b = 0; b < dim; ++b) {
        for (int c = 0; c < dim; ++c) t(a, b, c) = data[idx++];
      }
    }
    return t;
  } catch (const json::exception& e) {
    throw InputError(path + ": malformed tensor file: " + e.what());
  }
}

void cmd_decompose(const DecomposeOptions& o, RunManifest& m) {
  PowerMethodOptions p;
  p.restarts = o.restarts;
  p.iterations = o.iters;
  p.seed = o.seed;
  p.threads = resolve_threads(o.threads);
  if (!o.orientation.empty()) {
    p.orientation = Eigen::Map<const Vector>(o.orientation.data(),
                                             static_cast<Eigen::Index>(o.orientation.size()));
  }
  m.seed = o.seed;
  m.config = {{"topics", o.topics}, {"restarts", o.restarts}, {"iterations", o.iters},
              {"seed", o.seed},     {"threads", p.threads},  {"orientation", o.orientation}};
  m.inputs = {{"tensor", o.tensor}};
  m.outputs = {{"decomposition", o.out}};

  const Tensor3 t = tensor_from_json(read_json_file(o.tensor), o.tensor);
  if (o.topics > t.dim()) throw UsageError("--topics exceeds the tensor dimension");
  if (o.restarts < o.topics) throw UsageError("--restarts must be at least --topics");
  if (!o.orientation.empty() && static_cast<int>(o.orientation.size()) != t.dim()) {
    throw UsageError("--orientation needs one value per tensor dimension");
  }
  const auto start = Clock::now();
  const EigenDecomposition dec = robust_tpm(t, o.topics, p);
  m.timings.emplace_back("decomposition", seconds_since(start));

  json pairs = json::array();
  for (const auto& pr : dec.pairs) {
    pairs.push_back({{"lambda", pr.lambda},
                     {"omega", std::vector<double>(pr.omega.data(),
                                                   pr.omega.data() + pr.omega.size())},
                     {"converged", pr.converged}});
  }
  const json out = {{"pairs", pairs}, {"residual_norm", dec.residual_norm}};
  ensure_parent(o.out);
  write_text_file(o.out, out.dump(2) + "\n");
}

// ---- stats

struct StatsOptions {
  std::string docs;
  std::string out;
};

void cmd_stats(const StatsOptions& o, RunManifest& m) {
  m.inputs = {{"docs", o.docs}};
  m.outputs = {{"stats", o.out}};
  const Corpus corpus = read_docword(o.docs);
  const CorpusStats s = corpus_stats(corpus);
  const json j = {{"num_docs", s.num_docs},
                  {"vocab_size", s.vocab_size},
                  {"total_tokens", s.total_tokens},
                  {"median_length", s.median_length},
                  {"distinct_words_used", s.distinct_words_used}};
  std::cout << j.dump(2) << "\n";
  ensure_parent(o.out);
  write_text_file(o.out, j.dump(2) + "\n");
}

std::string manifest_path_for(const std::string& command, const std::string& primary) {
  if (command == "generate") return (fs::path(primary) / "manifest.json").string();
  return primary + ".manifest.json";
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '\n') {
      q += ' ';
      continue;
    }
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string csv_opt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

}  // namespace

std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  if (cfg.sizes.empty()) throw ValidationError("sweep needs at least one size");
  if (cfg.trials < 1) throw ValidationError("sweep needs at least one trial");
  const std::size_t largest = *std::max_element(cfg.sizes.begin(), cfg.sizes.end());
  std::vector<SweepRow> rows;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(trial);
    RandomModelOptions mo;
    mo.vocab_size = cfg.vocab_size;
    mo.num_topics = cfg.num_topics;
    mo.alpha0 = cfg.alpha0;
    mo.sigma = cfg.sigma;
    mo.seed = seed;
    const SldaModel truth = random_model(mo);
    const Corpus full = generate_corpus(truth, largest, cfg.doc_len, seed, cfg.recovery.threads);
    Corpus test;
    if (cfg.test_docs > 0) {
      test = generate_corpus(truth, cfg.test_docs, cfg.doc_len, make_rng(seed, 0x74657374ULL)(),
                             cfg.recovery.threads);
    }
    for (std::size_t n : cfg.sizes) {
      const Corpus train = full.prefix(n);
      for (Method method : cfg.methods) {
        SweepRow row;
        row.method = method;
        row.num_docs = n;
        row.trial = trial;
        row.seed = seed;
        RecoveryConfig rc = cfg.recovery;
        rc.method = method;
        rc.k = cfg.num_topics;
        rc.alpha0 = cfg.alpha0;
        rc.sigma_assumed = cfg.sigma;
        rc.seed = seed;
        const auto start = Clock::now();
        try {
          const RecoveredModel rec = recover(train, rc);
          EvalReport report;
          if (cfg.test_docs > 0) {
            GibbsConfig g;
            g.burnin = cfg.burnin;
            g.samples = cfg.samples;
            g.seed = seed;
            g.threads = rc.threads;
            report = evaluate(&truth, rec.model, test, g);
            row.mse = report.mse;
            row.pr2 = report.pr2;
            row.neg_perword_ll = report.neg_perword_ll;
          } else {
            fill_parameter_errors(report, truth, rec.model);
          }
          row.l1_alpha = *report.l1_alpha;
          row.l1_eta = *report.l1_eta;
          row.l1_mu = *report.l1_mu;
        } catch (const std::exception& e) {
          row.exit_code = exit_code_for(e);
          row.status = "failed";
          row.message = e.what();
        }
        row.seconds = seconds_since(start);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << kSweepCsvVersion << "\n";
  os << "method,num_docs,trial,seed,status,exit_code,l1_alpha,l1_eta,l1_mu,mse,pr2,"
        "neg_perword_ll,seconds,message\n";
  for (const auto& r : rows) {
    const bool ok = r.status == "ok";
    os << to_string(r.method) << ',' << r.num_docs << ',' << r.trial << ',' << r.seed << ','
       << r.status << ',' << r.exit_code << ',' << (ok ? fmt(r.l1_alpha) : "") << ','
       << (ok ? fmt(r.l1_eta) : "") << ',' << (ok ? fmt(r.l1_mu) : "") << ',' << csv_opt(r.mse)
       << ',' << csv_opt(r.pr2) << ',' << csv_opt(r.neg_perword_ll) << ',' << fmt(r.seconds)
       << ',' << csv_quote(r.message) << '\n';
  }
  return os.str();
}

namespace {

struct WarningCapture {
  explicit WarningCapture(std::vector<std::string>& into) {
    set_warning_sink([&into, this](const std::string& msg) {
      std::lock_guard<std::mutex> lock(mutex);
      into.push_back(msg);
      std::cerr << "warning: " << msg << "\n";
    });
  }
  ~WarningCapture() { set_warning_sink(nullptr); }
  std::mutex mutex;
};

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Spectral method-of-moments toolkit for supervised LDA"};
  app.name("slda");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(SLDA_VERSION));

  auto add_threads = [](CLI::App* c, int& t) {
    c->add_option("--threads", t, "worker threads (0 = available parallelism)")
        ->check(CLI::NonNegativeNumber);
  };

  GenerateOptions gen;
  gen.out = output_dir();
  auto* g = app.add_subcommand("generate", "sample a synthetic model and corpus");
  g->add_option("--vocab", gen.vocab, "vocabulary size")->check(CLI::PositiveNumber);
  g->add_option("--topics", gen.topics, "number of topics")->check(CLI::PositiveNumber);
  g->add_option("--docs", gen.docs, "training documents")->required()->check(CLI::PositiveNumber);
  g->add_option("--doc-len", gen.doc_len, "words per document")->check(CLI::PositiveNumber);
  g->add_option("--alpha0", gen.alpha0, "Dirichlet concentration")->check(CLI::PositiveNumber);
  g->add_option("--sigma", gen.sigma, "response noise")->check(CLI::NonNegativeNumber);
  g->add_option("--seed", gen.seed);
  g->add_option("--test-docs", gen.test_docs, "held-out documents");
  g->add_option("--out", gen.out, "output directory");
  add_threads(g, gen.threads);

  RecoverOptions rec;
  rec.out = default_output("model.json");
  auto* r = app.add_subcommand("recover", "recover model parameters from a corpus");
  r->add_option("--docs", rec.docs, "docword file")->required();
  r->add_option("--responses", rec.responses, "responses file")->required();
  r->add_option("--method", rec.method, "two-stage or joint");
  r->add_option("--alpha0", rec.alpha0)->check(CLI::PositiveNumber);
  r->add_option("--topics", rec.topics)->required()->check(CLI::PositiveNumber);
  r->add_option("--sigma", rec.sigma, "response noise assumed by the joint method")
      ->check(CLI::NonNegativeNumber);
  r->add_option("--scale", rec.scale, "word scaling of the joint method")
      ->check(CLI::PositiveNumber);
  r->add_option("--whitening", rec.whitening, "exact or randomized");
  r->add_option("--oversample", rec.oversample)->check(CLI::PositiveNumber);
  r->add_option("--restarts", rec.restarts)->check(CLI::PositiveNumber);
  r->add_option("--iters", rec.iters)->check(CLI::PositiveNumber);
  r->add_option("--seed", rec.seed);
  r->add_option("--rank-tol", rec.rank_tol, "relative eigenvalue cutoff")
      ->check(CLI::NonNegativeNumber);
  r->add_option("--out", rec.out, "model file");
  add_threads(r, rec.threads);

  EvalOptions ev;
  ev.out = default_output("eval");
  auto* e = app.add_subcommand("eval", "evaluate a model on held-out documents");
  e->add_option("--model", ev.model)->required();
  e->add_option("--test-docs", ev.test_docs)->required();
  e->add_option("--test-responses", ev.test_responses)->required();
  e->add_option("--truth", ev.truth, "ground-truth model for parameter errors");
  e->add_option("--burnin", ev.burnin)->check(CLI::NonNegativeNumber);
  e->add_option("--samples", ev.samples)->check(CLI::PositiveNumber);
  e->add_option("--seed", ev.seed);
  e->add_option("--out", ev.out, "output prefix (.json and .csv are appended)");
  add_threads(e, ev.threads);

  SweepOptions sw;
  sw.out = default_output("sweep.csv");
  auto* s = app.add_subcommand("sweep", "recovery error across corpus sizes");
  s->add_option("--vocab", sw.vocab)->check(CLI::PositiveNumber);
  s->add_option("--topics", sw.topics)->check(CLI::PositiveNumber);
  s->add_option("--doc-len", sw.doc_len)->check(CLI::Range(3, 1 << 30));
  s->add_option("--alpha0", sw.alpha0)->check(CLI::PositiveNumber);
  s->add_option("--sigma", sw.sigma)->check(CLI::NonNegativeNumber);
  s->add_option("--sizes", sw.sizes, "comma-separated corpus sizes")
      ->required()
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  s->add_option("--methods", sw.methods, "comma-separated methods")->delimiter(',');
  s->add_option("--trials", sw.trials)->check(CLI::PositiveNumber);
  s->add_option("--seed", sw.seed);
  s->add_option("--test-docs", sw.test_docs);
  s->add_option("--burnin", sw.burnin)->check(CLI::NonNegativeNumber);
  s->add_option("--samples", sw.samples)->check(CLI::PositiveNumber);
  s->add_option("--scale", sw.scale)->check(CLI::PositiveNumber);
  s->add_option("--whitening", sw.whitening);
  s->add_option("--oversample", sw.oversample)->check(CLI::PositiveNumber);
  s->add_option("--restarts", sw.restarts)->check(CLI::PositiveNumber);
  s->add_option("--iters", sw.iters)->check(CLI::PositiveNumber);
  s->add_option("--out", sw.out, "CSV file");
  add_threads(s, sw.threads);

  MomentsOptions mo;
  mo.out = default_output("moments.txt");
  auto* mc = app.add_subcommand("moments", "dump the empirical m1, M2 and My");
  mc->add_option("--docs", mo.docs)->required();
  mc->add_option("--responses", mo.responses)->required();
  mc->add_option("--alpha0", mo.alpha0)->check(CLI::PositiveNumber);
  mc->add_option("--out", mo.out);
  add_threads(mc, mo.threads);

  DecomposeOptions de;
  de.out = default_output("decomposition.json");
  auto* d = app.add_subcommand("decompose", "robust tensor power method on a tensor file");
  d->add_option("--tensor", de.tensor, "JSON file with dim and row-major data")->required();
  d->add_option("--topics", de.topics)->required()->check(CLI::PositiveNumber);
  d->add_option("--orientation", de.orientation, "comma-separated sign reference")
      ->delimiter(',');
  d->add_option("--restarts", de.restarts)->check(CLI::PositiveNumber);
  d->add_option("--iters", de.iters)->check(CLI::PositiveNumber);
  d->add_option("--seed", de.seed);
  d->add_option("--out", de.out);
  add_threads(d, de.threads);

  StatsOptions st;
  st.out = default_output("stats.json");
  auto* sc = app.add_subcommand("stats", "corpus summary");
  sc->add_option("--docs", st.docs)->required();
  sc->add_option("--out", st.out);

  std::string replay_path;
  auto* rp = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  rp->add_option("manifest", replay_path)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  if (rp->parsed()) {
    try {
      const json j = read_json_file(replay_path);
      return run(j.at("argv").get<std::vector<std::string>>());
    } catch (const json::exception& err) {
      std::cerr << "error: " << replay_path << ": malformed manifest: " << err.what() << "\n";
      return kIo;
    } catch (const std::exception& err) {
      std::cerr << "error: " << err.what() << "\n";
      return exit_code_for(err);
    }
  }

  RunManifest manifest;
  manifest.argv = args;
  CLI::App* chosen = app.get_subcommands().front();
  manifest.command = chosen->get_name();
  std::string primary;
  if (g->parsed()) primary = gen.out;
  if (r->parsed()) primary = rec.out;
  if (e->parsed()) primary = ev.out;
  if (s->parsed()) primary = sw.out;
  if (mc->parsed()) primary = mo.out;
  if (d->parsed()) primary = de.out;
  if (sc->parsed()) primary = st.out;
  const std::string manifest_path = manifest_path_for(manifest.command, primary);

  int code = kOk;
  {
    WarningCapture capture(manifest.warnings);
    const auto start = Clock::now();
    try {
      if (g->parsed()) cmd_generate(gen, manifest);
      if (r->parsed()) cmd_recover(rec, manifest);
      if (e->parsed()) cmd_eval(ev, manifest);
      if (s->parsed()) cmd_sweep(sw, manifest);
      if (mc->parsed()) cmd_moments(mo, manifest);
      if (d->parsed()) cmd_decompose(de, manifest);
      if (sc->parsed()) cmd_stats(st, manifest);
    } catch (const std::exception& err) {
      code = exit_code_for(err);
      manifest.status = "failed";
      manifest.diagnostics["error"] = err.what();
      std::cerr << "error: " << err.what() << "\n";
    }
    manifest.timings.emplace_back("total", seconds_since(start));
  }
  manifest.exit_code = code;
  try {
    ensure_parent(manifest_path);
    write_text_file(manifest_path, manifest.to_json().dump(2) + "\n");
  } catch (const std::exception& err) {
    std::cerr << "error: cannot write manifest: " << err.what() << "\n";
    if (code == kOk) code = kIo;
  }
  return code;
}

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace slda::cli
