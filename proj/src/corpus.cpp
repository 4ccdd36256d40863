#include "slda/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace slda {

int Document::length() const {
  int m = 0;
  for (const auto& wc : words) m += wc.count;
  return m;
}

void Corpus::validate() const {
  if (documents.empty()) throw ValidationError("corpus has no documents");
  if (vocab_size < 1) throw ValidationError("vocabulary size must be positive");
  for (std::size_t d = 0; d < documents.size(); ++d) {
    const auto& doc = documents[d];
    int prev = -1;
    for (const auto& wc : doc.words) {
      if (wc.word < 0 || wc.word >= vocab_size) {
        throw ValidationError("document " + std::to_string(d + 1) + " has word id " +
                              std::to_string(wc.word + 1) + " outside [1, " +
                              std::to_string(vocab_size) + "]");
      }
      if (wc.word <= prev) {
        throw ValidationError("document " + std::to_string(d + 1) + " words not sorted/unique");
      }
      if (wc.count <= 0) {
        throw ValidationError("document " + std::to_string(d + 1) + " has non-positive count");
      }
      prev = wc.word;
    }
    if (doc.length() < kMinDocumentLength) {
      throw ValidationError("document " + std::to_string(d + 1) + " has fewer than 3 words");
    }
    if (!std::isfinite(doc.response)) {
      throw ValidationError("document " + std::to_string(d + 1) + " has non-finite response");
    }
  }
}

std::vector<double> Corpus::responses() const {
  std::vector<double> out;
  out.reserve(documents.size());
  for (const auto& doc : documents) out.push_back(doc.response);
  return out;
}

void Corpus::set_responses(const std::vector<double>& responses) {
  if (responses.size() != documents.size()) {
    throw ValidationError("expected " + std::to_string(documents.size()) + " responses, found " +
                          std::to_string(responses.size()));
  }
  for (std::size_t d = 0; d < documents.size(); ++d) documents[d].response = responses[d];
}

Corpus Corpus::prefix(std::size_t count) const {
  Corpus out;
  out.vocab_size = vocab_size;
  const auto n = std::min(count, documents.size());
  out.documents.assign(documents.begin(), documents.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats s;
  s.num_docs = corpus.size();
  s.vocab_size = corpus.vocab_size;
  std::vector<int> lengths;
  lengths.reserve(corpus.size());
  std::vector<char> used(static_cast<std::size_t>(std::max(corpus.vocab_size, 0)), 0);
  for (const auto& doc : corpus.documents) {
    const int m = doc.length();
    lengths.push_back(m);
    s.total_tokens += m;
    for (const auto& wc : doc.words) {
      if (wc.word >= 0 && wc.word < corpus.vocab_size) used[static_cast<std::size_t>(wc.word)] = 1;
    }
  }
  s.distinct_words_used = static_cast<int>(std::count(used.begin(), used.end(), 1));
  if (!lengths.empty()) {
    std::sort(lengths.begin(), lengths.end());
    const auto n = lengths.size();
    s.median_length = n % 2 == 1 ? lengths[n / 2]
                                 : 0.5 * (static_cast<double>(lengths[n / 2 - 1]) + lengths[n / 2]);
  }
  return s;
}

ResponseTransform standardize_responses(Corpus& corpus) {
  ResponseTransform tr;
  const auto n = corpus.size();
  if (n == 0) return tr;
  double mean = 0.0;
  for (const auto& doc : corpus.documents) mean += doc.response;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const auto& doc : corpus.documents) var += (doc.response - mean) * (doc.response - mean);
  var /= static_cast<double>(n);
  tr.shift = mean;
  tr.scale = var > 0.0 ? std::sqrt(var) : 1.0;
  for (auto& doc : corpus.documents) doc.response = (doc.response - tr.shift) / tr.scale;
  return tr;
}

}  // namespace slda
