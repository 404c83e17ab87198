#include "tsforge/lexstats.hpp"

#include "tsforge/errors.hpp"
#include "tsforge/rng.hpp"
#include "tsforge/textutil.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace tsforge::lexstats {

std::vector<std::string> tokenize(const std::string& text,
                                  const TokenizerSpec& spec) {
  std::istringstream in(text);
  std::vector<std::string> tokens;
  std::string raw;
  while (in >> raw) {
    std::string token = spec.lowercase ? to_lower(raw) : raw;
    if (spec.strip_edge_punctuation) {
      std::size_t b = 0;
      std::size_t e = token.size();
      while (b < e && std::ispunct(static_cast<unsigned char>(token[b]))) ++b;
      while (e > b && std::ispunct(static_cast<unsigned char>(token[e - 1])))
        --e;
      token = token.substr(b, e - b);
    }
    if (!token.empty()) tokens.push_back(std::move(token));
  }
  return tokens;
}

double ttr(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw MetricError("ttr: empty token sequence");
  const std::unordered_set<std::string> types(tokens.begin(), tokens.end());
  return static_cast<double>(types.size()) /
         static_cast<double>(tokens.size());
}

namespace {

double entropy_of_counts(const std::unordered_map<std::string, long>& counts,
                         double log_base) {
  long total = 0;
  for (const auto& [gram, c] : counts) total += c;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (const auto& [gram, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h / std::log(log_base);
}

void count_ngrams(const std::vector<std::string>& tokens, int n,
                  std::unordered_map<std::string, long>& counts) {
  if (static_cast<int>(tokens.size()) < n) return;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string gram = tokens[i];
    for (int k = 1; k < n; ++k) {
      gram += '\x1f';  // unit separator, cannot appear in tokens
      gram += tokens[i + k];
    }
    ++counts[gram];
  }
}

}  // namespace

double ngram_entropy(const std::vector<std::string>& tokens, int n,
                     double log_base) {
  if (n < 1) throw MetricError("ngram_entropy: n must be >= 1");
  if (static_cast<int>(tokens.size()) < n) {
    throw MetricError("ngram_entropy: fewer tokens than n");
  }
  std::unordered_map<std::string, long> counts;
  count_ngrams(tokens, n, counts);
  return entropy_of_counts(counts, log_base);
}

void to_json(nlohmann::json& j, const LexReport& r) {
  j = nlohmann::json{{"ttr", r.ttr},
                     {"avg_len", r.avg_len},
                     {"n_questions", r.n_questions},
                     {"entropy", nlohmann::json::object()}};
  for (const auto& [n, h] : r.entropy) {
    j["entropy"][std::to_string(n)] = h;
  }
}

std::string format_lex_table(const std::string& name, const LexReport& r) {
  std::ostringstream out;
  out << "dataset            TTR     1-Ent   2-Ent   3-Ent   Avg-Len  N\n";
  char line[160];
  auto ent = [&](int n) {
    const auto it = r.entropy.find(n);
    return it == r.entropy.end() ? 0.0 : it->second;
  };
  std::snprintf(line, sizeof(line),
                "%-18s %-7.4f %-7.4f %-7.4f %-7.4f %-8.2f %d\n", name.c_str(),
                r.ttr, ent(1), ent(2), ent(3), r.avg_len, r.n_questions);
  out << line;
  return out.str();
}

LexReport analyze(const std::vector<std::string>& questions,
                  const AnalyzeOptions& options) {
  if (questions.empty()) throw MetricError("analyze: empty question list");

  std::vector<const std::string*> subset;
  subset.reserve(questions.size());
  for (const auto& q : questions) subset.push_back(&q);
  if (options.subset_size > 0 &&
      options.subset_size < static_cast<int>(questions.size())) {
    Rng rng(options.seed);
    for (int i = 0; i < options.subset_size; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(i) + rng.index(subset.size() - i);
      std::swap(subset[static_cast<std::size_t>(i)], subset[j]);
    }
    subset.resize(static_cast<std::size_t>(options.subset_size));
  }

  LexReport report;
  report.n_questions = static_cast<int>(subset.size());

  std::unordered_set<std::string> types;
  long total_tokens = 0;
  std::map<int, std::unordered_map<std::string, long>> gram_counts;
  for (const std::string* q : subset) {
    const auto tokens = tokenize(*q, options.tokenizer);
    total_tokens += static_cast<long>(tokens.size());
    types.insert(tokens.begin(), tokens.end());
    for (int n : {1, 2, 3}) count_ngrams(tokens, n, gram_counts[n]);
  }
  if (total_tokens == 0) throw MetricError("analyze: corpus has no tokens");

  report.ttr =
      static_cast<double>(types.size()) / static_cast<double>(total_tokens);
  report.avg_len = static_cast<double>(total_tokens) /
                   static_cast<double>(subset.size());
  for (int n : {1, 2, 3}) {
    report.entropy[n] = entropy_of_counts(gram_counts[n], options.log_base);
  }
  return report;
}

}  // namespace tsforge::lexstats
