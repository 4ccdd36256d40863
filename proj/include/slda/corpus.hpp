#pragma once

#include <vector>

#include "slda/common.hpp"

namespace slda {

struct WordCount {
  int word = 0;  // 0-based vocabulary index
  int count = 0;

  bool operator==(const WordCount&) const = default;
};

/// Bag-of-words document with its real-valued response.
struct Document {
  std::vector<WordCount> words;  // sorted by word, unique, counts > 0
  double response = 0.0;

  int length() const;
  bool operator==(const Document&) const = default;
};

struct Corpus {
  std::vector<Document> documents;
  int vocab_size = 0;

  std::size_t size() const { return documents.size(); }
  /// Throws ValidationError if any document breaks the length or id invariants.
  void validate() const;
  std::vector<double> responses() const;
  /// Replaces responses in document order; the count must match.
  void set_responses(const std::vector<double>& responses);
  /// Leading documents, used for nested sample-size ladders.
  Corpus prefix(std::size_t count) const;

  bool operator==(const Corpus&) const = default;
};

/// Documents need three word positions for the third-order estimators.
inline constexpr int kMinDocumentLength = 3;

struct CorpusStats {
  std::size_t num_docs = 0;
  int vocab_size = 0;
  long long total_tokens = 0;
  double median_length = 0.0;
  int distinct_words_used = 0;
};

CorpusStats corpus_stats(const Corpus& corpus);

/// Shift and scale applied by standardize_responses: y' = (y - shift) / scale.
struct ResponseTransform {
  double shift = 0.0;
  double scale = 1.0;
};

/// Zero-mean, unit-variance responses. A constant response vector only gets
/// the shift (scale stays 1).
ResponseTransform standardize_responses(Corpus& corpus);

}  // namespace slda
