#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slda/corpus.hpp"
#include "slda/model.hpp"

namespace slda {

// Sparse docword format (1-indexed, UCI bag-of-words layout):
//   N
//   V
//   NNZ
//   docId wordId count     (NNZ lines)
//
// Repeated (doc, word) pairs are summed. Responses are left at zero.
Corpus read_docword(const std::string& path);
void write_docword(const Corpus& corpus, const std::string& path);

/// One decimal literal per line; the count must equal `expected`.
std::vector<double> read_responses(const std::string& path, std::size_t expected);
void write_responses(const std::vector<double>& responses, const std::string& path);

/// docword + responses in one step.
Corpus read_corpus(const std::string& docword_path, const std::string& responses_path);
void write_corpus(const Corpus& corpus, const std::string& docword_path,
                  const std::string& responses_path);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const SldaModel& model);
/// Column sums off by more than 1e-6 are rejected; between 1e-9 and 1e-6 the
/// columns are renormalized with a warning.
SldaModel model_from_json(const nlohmann::json& doc, const std::string& origin = "<json>");

void write_model(const SldaModel& model, const std::string& path);
SldaModel read_model(const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace slda
