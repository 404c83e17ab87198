#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tsforge::lexstats {

struct TokenizerSpec {
  bool lowercase = true;
  bool strip_edge_punctuation = true;
};

std::vector<std::string> tokenize(const std::string& text,
                                  const TokenizerSpec& spec = {});

// Type-token ratio |V| / N; throws MetricError on empty input.
double ttr(const std::vector<std::string>& tokens);

// Shannon entropy of the sliding-window n-gram distribution, in the given
// log base; throws MetricError when fewer than n tokens.
double ngram_entropy(const std::vector<std::string>& tokens, int n,
                     double log_base = 2.0);

struct LexReport {
  double ttr = 0.0;
  std::map<int, double> entropy;  // n in {1,2,3}
  double avg_len = 0.0;
  int n_questions = 0;
};

void to_json(nlohmann::json& j, const LexReport& r);
std::string format_lex_table(const std::string& name, const LexReport& r);

struct AnalyzeOptions {
  TokenizerSpec tokenizer;
  double log_base = 2.0;
  int subset_size = 0;  // 0 or >= corpus size -> no sampling
  std::uint64_t seed = 0;
};

// Corpus-level report: pooled-token TTR and unigram entropy, per-question
// n-grams pooled for n >= 2 (no cross-question grams), mean tokens per
// question. Optional uniform sub-sampling of the question list.
LexReport analyze(const std::vector<std::string>& questions,
                  const AnalyzeOptions& options = {});

}  // namespace tsforge::lexstats
