#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "slda/eval.hpp"
#include "slda/io.hpp"
#include "slda/model.hpp"
#include "slda/moments.hpp"
#include "slda/recovery.hpp"
#include "slda/spectral.hpp"

namespace py = pybind11;
using namespace slda;

namespace {

std::vector<std::pair<int, int>> words_of(const Document& d) {
  std::vector<std::pair<int, int>> out;
  for (const auto& wc : d.words) out.emplace_back(wc.word, wc.count);
  return out;
}

void set_words(Document& d, const std::vector<std::pair<int, int>>& words) {
  d.words.clear();
  for (auto [w, c] : words) d.words.push_back({w, c});
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["l1_alpha"] = r.l1_alpha ? py::cast(*r.l1_alpha) : py::none();
  d["l1_eta"] = r.l1_eta ? py::cast(*r.l1_eta) : py::none();
  d["l1_mu"] = r.l1_mu ? py::cast(*r.l1_mu) : py::none();
  d["mse"] = r.mse;
  d["pr2"] = r.pr2 ? py::cast(*r.pr2) : py::none();
  d["neg_perword_ll"] = r.neg_perword_ll;
  d["num_docs"] = r.num_docs;
  d["num_tokens"] = r.num_tokens;
  d["predictions"] = r.predictions;
  return d;
}

}  // namespace

PYBIND11_MODULE(spectral_slda, m) {
  m.doc() = "Spectral method-of-moments estimation for supervised LDA";
  m.attr("__version__") = SLDA_VERSION;

  auto base = py::register_exception<Error>(m, "SldaError");
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<RankDeficientError>(m, "RankDeficientError", base.ptr());
  py::register_exception<NegativeEigenvalueError>(m, "NegativeEigenvalueError", base.ptr());

  py::class_<SldaModel>(m, "SldaModel")
      .def(py::init<>())
      .def(py::init([](Vector alpha, Matrix topics, Vector eta, double sigma) {
             SldaModel s{std::move(alpha), std::move(topics), std::move(eta), sigma};
             s.validate();
             return s;
           }),
           py::arg("alpha"), py::arg("topics"), py::arg("eta"), py::arg("sigma") = 0.0)
      .def_readwrite("alpha", &SldaModel::alpha)
      .def_readwrite("topics", &SldaModel::topics)
      .def_readwrite("eta", &SldaModel::eta)
      .def_readwrite("sigma", &SldaModel::sigma)
      .def_property_readonly("num_topics", &SldaModel::num_topics)
      .def_property_readonly("vocab_size", &SldaModel::vocab_size)
      .def_property_readonly("alpha0", &SldaModel::alpha0)
      .def("validate", &SldaModel::validate, py::arg("column_tolerance") = 1e-9);

  py::class_<Document>(m, "Document")
      .def(py::init<>())
      .def(py::init([](const std::vector<std::pair<int, int>>& words, double response) {
             Document d;
             set_words(d, words);
             d.response = response;
             return d;
           }),
           py::arg("words"), py::arg("response") = 0.0)
      .def_property("words", &words_of, &set_words)
      .def_readwrite("response", &Document::response)
      .def_property_readonly("length", &Document::length);

  py::class_<Corpus>(m, "Corpus")
      .def(py::init<>())
      .def_readwrite("documents", &Corpus::documents)
      .def_readwrite("vocab_size", &Corpus::vocab_size)
      .def("__len__", &Corpus::size)
      .def("validate", &Corpus::validate)
      .def("responses", &Corpus::responses)
      .def("set_responses", &Corpus::set_responses)
      .def("prefix", &Corpus::prefix);

  m.def(
      "random_model",
      [](int vocab_size, int num_topics, double alpha0, double sigma, std::uint64_t seed) {
        RandomModelOptions o;
        o.vocab_size = vocab_size;
        o.num_topics = num_topics;
        o.alpha0 = alpha0;
        o.sigma = sigma;
        o.seed = seed;
        return random_model(o);
      },
      py::arg("vocab_size"), py::arg("num_topics"), py::arg("alpha0") = 1.0,
      py::arg("sigma") = 0.0, py::arg("seed") = 0);
  m.def("generate_corpus", &generate_corpus, py::arg("model"), py::arg("num_docs"),
        py::arg("doc_len"), py::arg("seed") = 0, py::arg("threads") = 1,
        py::call_guard<py::gil_scoped_release>());

  m.def("read_corpus", &read_corpus, py::arg("docword"), py::arg("responses"));
  m.def("write_corpus", &write_corpus, py::arg("corpus"), py::arg("docword"),
        py::arg("responses"));
  m.def("read_model", &read_model, py::arg("path"));
  m.def("write_model", &write_model, py::arg("model"), py::arg("path"));

  m.def(
      "population_moments",
      [](const SldaModel& model) {
        const ExactMoments e = population_moments(model);
        py::dict d;
        d["m1"] = e.m1;
        d["m2"] = e.m2;
        d["my"] = e.my;
        d["mean_y"] = e.mean_y;
        d["mean_y2"] = e.mean_y2;
        return d;
      },
      py::arg("model"));
  m.def(
      "estimate_moments",
      [](const Corpus& corpus, double alpha0, int threads) {
        MomentSet s;
        {
          py::gil_scoped_release release;
          s = estimate_moments(corpus, alpha0, threads);
        }
        py::dict d;
        d["m1"] = s.m1;
        d["m2"] = s.m2;
        d["my"] = s.my;
        d["mean_y"] = s.mean_y;
        d["mean_y2"] = s.mean_y2;
        return d;
      },
      py::arg("corpus"), py::arg("alpha0"), py::arg("threads") = 1);

  m.def(
      "whiten",
      [](const Matrix& m2, int k, bool randomized, int oversample, std::uint64_t seed) {
        const WhiteningMatrix w =
            randomized ? whiten_randomized(m2, k, oversample, seed) : whiten_exact(m2, k);
        return py::make_tuple(w.w, w.w_pinv);
      },
      py::arg("m2"), py::arg("k"), py::arg("randomized") = false, py::arg("oversample") = 10,
      py::arg("seed") = 0);
  m.def("whitening_residual", &whitening_residual, py::arg("m2"), py::arg("w"));

  py::class_<RecoveredModel>(m, "RecoveredModel")
      .def_readonly("model", &RecoveredModel::model)
      .def_readonly("lambdas", &RecoveredModel::lambdas)
      .def_readonly("residual_norm", &RecoveredModel::residual_norm)
      .def_readonly("whitening_residual", &RecoveredModel::whitening_residual)
      .def_readonly("max_clamped_mass", &RecoveredModel::max_clamped_mass)
      .def_readonly("mean_y_discrepancy", &RecoveredModel::mean_y_discrepancy)
      .def_readonly("sigma_moment_estimate", &RecoveredModel::sigma_moment_estimate)
      .def_readonly("warnings", &RecoveredModel::warnings)
      .def_readonly("timings", &RecoveredModel::timings);

  m.def(
      "recover",
      [](const Corpus& corpus, int k, const std::string& method, double alpha0, double sigma,
         double scale, const std::string& whitening, int oversample, int restarts,
         int iterations, std::uint64_t seed, int threads) {
        RecoveryConfig cfg;
        cfg.method = parse_method(method);
        cfg.k = k;
        cfg.alpha0 = alpha0;
        cfg.sigma_assumed = sigma;
        cfg.scale = scale;
        cfg.whitening = parse_whitening(whitening);
        cfg.oversample = oversample;
        cfg.restarts = restarts;
        cfg.iterations = iterations;
        cfg.seed = seed;
        cfg.threads = threads;
        py::gil_scoped_release release;
        return recover(corpus, cfg);
      },
      py::arg("corpus"), py::arg("k"), py::arg("method") = "two-stage", py::arg("alpha0") = 1.0,
      py::arg("sigma") = 0.0, py::arg("scale") = 100.0, py::arg("whitening") = "exact",
      py::arg("oversample") = 10, py::arg("restarts") = 100, py::arg("iterations") = 100,
      py::arg("seed") = 0, py::arg("threads") = 1);

  m.def("recover_sigma",
        [](double mean_y, double mean_y2, const Vector& alpha, const Vector& eta) {
          return recover_sigma(mean_y, mean_y2, alpha, eta).sigma;
        },
        py::arg("mean_y"), py::arg("mean_y2"), py::arg("alpha"), py::arg("eta"));

  m.def(
      "match_topics",
      [](const SldaModel& truth, const SldaModel& recovered) {
        const TopicMatching t = match_topics(truth, recovered);
        return py::make_tuple(t.perm, t.cost);
      },
      py::arg("truth"), py::arg("recovered"));
  m.def("min_cost_assignment", &min_cost_assignment, py::arg("cost"));
  m.def("infer_mixture_gibbs", &infer_mixture_gibbs, py::arg("doc"), py::arg("model"),
        py::arg("burnin") = 200, py::arg("samples") = 200, py::arg("seed") = 0);
  m.def("predictive_r2", &predictive_r2, py::arg("y"), py::arg("yhat"));
  m.def(
      "evaluate",
      [](const SldaModel& recovered, const Corpus& test, const SldaModel* truth, int burnin,
         int samples, std::uint64_t seed, int threads) {
        EvalReport r;
        {
          py::gil_scoped_release release;
          r = evaluate(truth, recovered, test, GibbsConfig{burnin, samples, seed, threads});
        }
        return report_dict(r);
      },
      py::arg("recovered"), py::arg("test"), py::arg("truth") = nullptr, py::arg("burnin") = 200,
      py::arg("samples") = 200, py::arg("seed") = 0, py::arg("threads") = 1);
}
