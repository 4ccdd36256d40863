#include "slda/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace slda {

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Splits a line into whitespace-separated integer fields.
bool parse_integers(const std::string& line, std::vector<long long>& out) {
  out.clear();
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) {
    long long value = 0;
    const auto* first = tok.data();
    const auto* last = tok.data() + tok.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return false;
    out.push_back(value);
  }
  return true;
}

}  // namespace

Corpus read_docword(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<long long> fields;

  // Header: N, V, NNZ. Usually one per line; a single "N V NNZ" line is also accepted.
  std::vector<long long> header;
  while (header.size() < 3) {
    if (!std::getline(in, line)) throw ParseError(path, line_no, "truncated header");
    ++line_no;
    if (is_blank(line)) continue;
    if (!parse_integers(line, fields) || header.size() + fields.size() > 3) {
      throw ParseError(path, line_no, "malformed header, expected N, V and NNZ");
    }
    header.insert(header.end(), fields.begin(), fields.end());
  }
  const long long num_docs = header[0];
  const long long vocab = header[1];
  const long long nnz = header[2];
  if (num_docs < 1 || vocab < 1 || nnz < 0) {
    throw ParseError(path, line_no, "malformed header, N and V must be positive");
  }
  const std::size_t header_line = line_no;

  std::vector<std::map<int, long long>> counts(static_cast<std::size_t>(num_docs));
  std::vector<std::size_t> last_line(static_cast<std::size_t>(num_docs), header_line);
  long long triplets = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    if (!parse_integers(line, fields) || fields.size() != 3) {
      throw ParseError(path, line_no, "expected \"docId wordId count\"");
    }
    const long long d = fields[0];
    const long long w = fields[1];
    const long long c = fields[2];
    if (d < 1 || d > num_docs) {
      throw ParseError(path, line_no, "doc id " + std::to_string(d) + " outside [1, " +
                                          std::to_string(num_docs) + "]");
    }
    if (w < 1 || w > vocab) {
      throw ParseError(path, line_no, "word id " + std::to_string(w) + " outside [1, " +
                                          std::to_string(vocab) + "]");
    }
    if (c <= 0) throw ParseError(path, line_no, "count must be positive");
    auto& slot = counts[static_cast<std::size_t>(d - 1)][static_cast<int>(w - 1)];
    slot += c;
    if (slot > 1'000'000'000LL) throw ParseError(path, line_no, "count overflow");
    last_line[static_cast<std::size_t>(d - 1)] = line_no;
    ++triplets;
  }
  if (triplets != nnz) {
    warn(path + ": header declares " + std::to_string(nnz) + " entries, found " +
         std::to_string(triplets));
  }

  Corpus corpus;
  corpus.vocab_size = static_cast<int>(vocab);
  corpus.documents.resize(static_cast<std::size_t>(num_docs));
  for (std::size_t d = 0; d < counts.size(); ++d) {
    auto& doc = corpus.documents[d];
    long long m = 0;
    for (const auto& [w, c] : counts[d]) {
      doc.words.push_back({w, static_cast<int>(c)});
      m += c;
    }
    if (m < kMinDocumentLength) {
      throw ParseError(path, last_line[d],
                       "document " + std::to_string(d + 1) + " has fewer than 3 words");
    }
  }
  return corpus;
}

void write_docword(const Corpus& corpus, const std::string& path) {
  std::ofstream out = open_output(path);
  std::size_t nnz = 0;
  for (const auto& doc : corpus.documents) nnz += doc.words.size();
  out << corpus.size() << '\n' << corpus.vocab_size << '\n' << nnz << '\n';
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (const auto& wc : corpus.documents[d].words) {
      out << d + 1 << ' ' << wc.word + 1 << ' ' << wc.count << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + path);
}

std::vector<double> read_responses(const std::string& path, std::size_t expected) {
  std::ifstream in = open_input(path);
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto begin = line.find_first_not_of(" \t");
    const auto end = line.find_last_not_of(" \t\r") + 1;
    const std::string tok = line.substr(begin, end - begin);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(value)) {
      throw ParseError(path, line_no, "cannot parse response \"" + tok + "\"");
    }
    out.push_back(value);
  }
  if (out.size() != expected) {
    throw ParseError(path, line_no, "expected " + std::to_string(expected) +
                                        " responses, found " + std::to_string(out.size()));
  }
  return out;
}

void write_responses(const std::vector<double>& responses, const std::string& path) {
  std::ofstream out = open_output(path);
  for (double y : responses) out << format_double(y) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

Corpus read_corpus(const std::string& docword_path, const std::string& responses_path) {
  Corpus corpus = read_docword(docword_path);
  corpus.set_responses(read_responses(responses_path, corpus.size()));
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::string& docword_path,
                  const std::string& responses_path) {
  write_docword(corpus, docword_path);
  write_responses(corpus.responses(), responses_path);
}

nlohmann::json model_to_json(const SldaModel& model) {
  nlohmann::json j;
  j["format"] = "slda-model";
  j["version"] = kModelFormatVersion;
  j["k"] = model.num_topics();
  j["V"] = model.vocab_size();
  j["alpha0"] = model.alpha0();
  j["alpha"] = std::vector<double>(model.alpha.data(), model.alpha.data() + model.alpha.size());
  j["eta"] = std::vector<double>(model.eta.data(), model.eta.data() + model.eta.size());
  j["sigma"] = model.sigma;
  auto rows = nlohmann::json::array();
  for (Eigen::Index w = 0; w < model.topics.rows(); ++w) {
    std::vector<double> row(static_cast<std::size_t>(model.topics.cols()));
    for (Eigen::Index t = 0; t < model.topics.cols(); ++t) {
      row[static_cast<std::size_t>(t)] = model.topics(w, t);
    }
    rows.push_back(std::move(row));
  }
  j["topics"] = std::move(rows);
  return j;
}

SldaModel model_from_json(const nlohmann::json& j, const std::string& origin) {
  auto fail = [&](const std::string& what) -> ValidationError {
    return ValidationError(origin + ": " + what);
  };
  try {
    if (!j.is_object()) throw fail("model file must be an object");
    if (!j.contains("version") || j.at("version").get<int>() != kModelFormatVersion) {
      throw fail("unsupported model format version (expected " +
                 std::to_string(kModelFormatVersion) + ")");
    }
    const int k = j.at("k").get<int>();
    const int v = j.at("V").get<int>();
    if (k < 1 || v < 1) throw fail("k and V must be positive");
    const auto alpha = j.at("alpha").get<std::vector<double>>();
    const auto eta = j.at("eta").get<std::vector<double>>();
    const auto& rows = j.at("topics");
    if (alpha.size() != static_cast<std::size_t>(k) || eta.size() != static_cast<std::size_t>(k)) {
      throw fail("alpha/eta length differs from k");
    }
    if (!rows.is_array() || rows.size() != static_cast<std::size_t>(v)) {
      throw fail("topics must have V rows");
    }
    SldaModel m;
    m.alpha = Eigen::Map<const Vector>(alpha.data(), k);
    m.eta = Eigen::Map<const Vector>(eta.data(), k);
    m.sigma = j.at("sigma").get<double>();
    m.topics.resize(v, k);
    for (int w = 0; w < v; ++w) {
      const auto row = rows.at(static_cast<std::size_t>(w)).get<std::vector<double>>();
      if (row.size() != static_cast<std::size_t>(k)) {
        throw fail("topics row " + std::to_string(w + 1) + " has wrong length");
      }
      for (int t = 0; t < k; ++t) m.topics(w, t) = row[static_cast<std::size_t>(t)];
    }
    if (j.contains("alpha0")) {
      const double a0 = j.at("alpha0").get<double>();
      if (std::abs(a0 - m.alpha0()) > 1e-9 * std::max(1.0, std::abs(a0))) {
        throw fail("alpha0 does not equal the sum of alpha");
      }
    }
    // Structural checks first, with column sums loose; then the column policy.
    m.validate(1e-6);
    for (int t = 0; t < k; ++t) {
      const double s = m.topics.col(t).sum();
      if (std::abs(s - 1.0) > 1e-9) {
        warn(origin + ": topic " + std::to_string(t) + " sums to " + std::to_string(s) +
             ", renormalized");
        m.topics.col(t) /= s;
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("malformed model file: ") + e.what());
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    if (what.rfind(origin, 0) == 0) throw;
    throw fail(what);
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in = open_input(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, 0, std::string("invalid JSON: ") + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out = open_output(path);
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

void write_model(const SldaModel& model, const std::string& path) {
  write_text_file(path, model_to_json(model).dump(2) + "\n");
}

SldaModel read_model(const std::string& path) {
  return model_from_json(read_json_file(path), path);
}

}  // namespace slda
