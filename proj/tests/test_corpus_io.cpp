#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "slda/corpus.hpp"
#include "slda/io.hpp"
#include "test_util.hpp"

using namespace slda;
using testutil::TempDir;
using testutil::write_file;

namespace {

// Line number reported by a ParseError, or 0 when nothing was thrown.
std::size_t error_line(const std::string& path) {
  try {
    read_docword(path);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

std::string error_text(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("docword: repeated pairs are summed and documents keep their order") {
  TempDir tmp;
  const auto p = tmp.file("dw.txt");
  write_file(p, "2\n5\n3\n1 1 2\n1 3 1\n2 5 4\n2 2 1\n");
  testutil::WarningCollector warnings;
  const Corpus c = read_docword(p);
  REQUIRE(c.size() == 2);
  CHECK(c.vocab_size == 5);
  CHECK(c.documents[0].length() == 3);
  CHECK(c.documents[1].length() == 5);
  CHECK(c.documents[1].words.front().word == 1);
  // The header declares 3 entries but 4 follow.
  CHECK(warnings.contains("header declares 3 entries, found 4"));

  write_file(p, "1 4 3\n1 2 1\n1 2 2\n1 4 1\n");
  const Corpus d = read_docword(p);
  REQUIRE(d.documents[0].words.size() == 2);
  CHECK(d.documents[0].words[0] == WordCount{1, 3});
  CHECK(d.documents[0].words[1] == WordCount{3, 1});
}

TEST_CASE("docword: errors name the line") {
  TempDir tmp;
  const auto p = tmp.file("dw.txt");
  write_file(p, "2\nfive\n3\n");
  CHECK(error_line(p) == 2);
  write_file(p, "2\n5\n");
  CHECK_THROWS_AS(read_docword(p), ParseError);
  write_file(p, "1\n5\n1\n1 6 3\n");
  CHECK(error_line(p) == 4);
  write_file(p, "1\n5\n2\n1 1 3\n1 2 0\n");
  CHECK(error_line(p) == 5);
  write_file(p, "1\n5\n1\n1 2\n");
  CHECK(error_line(p) == 4);
  write_file(p, "1\n5\n1\n2 1 3\n");
  CHECK(error_line(p) == 4);
  write_file(p, "1\n5\n1\n1 1 -2\n");
  CHECK(error_line(p) == 4);

  // Document 7 has only two words; the error points at its last entry.
  std::string text = "7\n4\n8\n";
  for (int d = 1; d <= 6; ++d) text += std::to_string(d) + " 1 3\n";
  text += "7 2 1\n7 3 1\n";
  write_file(p, text);
  CHECK(error_line(p) == 11);
  CHECK(error_text([&] { read_docword(p); }).find("document 7 has fewer than 3 words") !=
        std::string::npos);

  CHECK_THROWS_AS(read_docword(tmp.file("missing.txt")), IoError);
}

TEST_CASE("responses: parsing and count checks") {
  TempDir tmp;
  const auto p = tmp.file("y.txt");
  write_file(p, "0.5\n-1.0\n2.25\n");
  const auto y = read_responses(p, 3);
  CHECK(y == std::vector<double>{0.5, -1.0, 2.25});
  write_file(p, "0.5\n-1.0\n");
  CHECK(error_text([&] { read_responses(p, 3); }).find("expected 3 responses, found 2") !=
        std::string::npos);
  write_file(p, "");
  CHECK(read_responses(p, 0).empty());
  write_file(p, "1\nabc\n3\n");
  try {
    read_responses(p, 3);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("corpus round trip through files is exact") {
  TempDir tmp;
  Rng rng = make_rng(3);
  const SldaModel m = testutil::toy_model(30, 3, 1.0, 0.7, rng);
  const Corpus c = generate_corpus(m, 200, 12, 17);
  write_corpus(c, tmp.file("d.txt"), tmp.file("r.txt"));
  const Corpus back = read_corpus(tmp.file("d.txt"), tmp.file("r.txt"));
  CHECK(back == c);
}

TEST_CASE("model round trip is bitwise") {
  TempDir tmp;
  Rng rng = make_rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const SldaModel m = testutil::toy_model(9, 3, 0.3 + trial, 0.1 * trial, rng);
    write_model(m, tmp.file("m.json"));
    const SldaModel back = read_model(tmp.file("m.json"));
    CHECK(back.alpha == m.alpha);
    CHECK(back.eta == m.eta);
    CHECK(back.topics == m.topics);
    CHECK(back.sigma == m.sigma);
  }
}

TEST_CASE("model files: version and column policy") {
  TempDir tmp;
  Rng rng = make_rng(5);
  const SldaModel m = testutil::toy_model(4, 2, 1.0, 0.2, rng);
  nlohmann::json j = model_to_json(m);

  auto with_column_sum = [&](double s) {
    nlohmann::json c = j;
    for (auto& row : c["topics"]) row[0] = row[0].get<double>() * s;
    return c;
  };
  CHECK_THROWS_AS(model_from_json(with_column_sum(0.9)), ValidationError);
  {
    testutil::WarningCollector w;
    const SldaModel r = model_from_json(with_column_sum(1.0 + 1e-8));
    CHECK(std::abs(r.topics.col(0).sum() - 1.0) < 1e-14);
    CHECK(w.contains("renormalized"));
  }
  nlohmann::json v = j;
  v["version"] = 2;
  CHECK(error_text([&] { model_from_json(v); }).find("version") != std::string::npos);
  nlohmann::json a = j;
  a["alpha"][0] = -1.0;
  a.erase("alpha0");
  CHECK_THROWS_AS(model_from_json(a), ValidationError);
  nlohmann::json s = j;
  s.erase("sigma");
  CHECK_THROWS_AS(model_from_json(s), ValidationError);

  testutil::write_file(tmp.file("bad.json"), "{ not json");
  CHECK_THROWS_AS(read_model(tmp.file("bad.json")), ParseError);
}

TEST_CASE("corpus statistics match a recount") {
  Rng rng = make_rng(6);
  const Corpus c = testutil::random_corpus(25, 41, 3, 20, rng);
  const CorpusStats s = corpus_stats(c);
  long long tokens = 0;
  std::vector<int> lengths;
  std::set<int> used;
  for (const auto& d : c.documents) {
    int m = 0;
    for (const auto& wc : d.words) {
      m += wc.count;
      used.insert(wc.word);
    }
    tokens += m;
    lengths.push_back(m);
  }
  std::sort(lengths.begin(), lengths.end());
  CHECK(s.num_docs == 41);
  CHECK(s.vocab_size == 25);
  CHECK(s.total_tokens == tokens);
  CHECK(s.median_length == lengths[20]);
  CHECK(s.distinct_words_used == static_cast<int>(used.size()));
}

TEST_CASE("corpus validation and responses") {
  Corpus c;
  c.vocab_size = 3;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  Document d;
  d.words = {{0, 1}, {2, 1}};
  c.documents.push_back(d);
  CHECK(error_text([&] { c.validate(); }).find("fewer than 3 words") != std::string::npos);
  c.documents[0].words[1].count = 2;
  CHECK_NOTHROW(c.validate());
  c.documents[0].words[1].word = 3;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.documents[0].words[1].word = 2;
  CHECK(error_text([&] { c.set_responses({1.0, 2.0}); }) == "expected 1 responses, found 2");
}

TEST_CASE("standardize_responses gives zero mean and unit variance") {
  Rng rng = make_rng(7);
  Corpus c = testutil::random_corpus(10, 50, 3, 5, rng);
  for (auto& d : c.documents) d.response = 3.0 + 2.0 * d.response;
  const auto before = c.responses();
  const ResponseTransform tr = standardize_responses(c);
  double mean = 0, var = 0;
  for (double y : c.responses()) mean += y;
  mean /= 50;
  for (double y : c.responses()) var += (y - mean) * (y - mean);
  var /= 50;
  CHECK(std::abs(mean) < 1e-12);
  CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.documents[7].response * tr.scale + tr.shift == doctest::Approx(before[7]));

  for (auto& d : c.documents) d.response = 4.0;
  const ResponseTransform flat = standardize_responses(c);
  CHECK(flat.scale == 1.0);
  CHECK(c.documents[0].response == 0.0);
}
