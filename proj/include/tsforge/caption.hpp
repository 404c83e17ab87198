#pragma once

#include "tsforge/profiler.hpp"
#include "tsforge/services.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tsforge::corpus {

struct CaptionRequest {
  std::string series_text;        // serialized values, full precision
  std::optional<std::string> plot_svg;
  std::string template_id;
};

struct CaptionResult {
  std::map<std::string, std::string> structured;  // perspective -> text
  std::string unstructured;
  std::string raw_reply;
  std::string cache_key;
  bool parse_failed = false;
};

// Stable cache key over (values at full precision, template id, model).
std::string caption_cache_key(const synthkit::TimeSeries& ts,
                              const std::string& template_id,
                              const std::string& model_name);

// Asks the caption service for structured + unstructured descriptions of a
// series. Replies are JSON objects {"structured": {perspective: text},
// "caption": text}; unparseable replies are kept raw with parse_failed set.
// Results are cached by content key; a cache hit never calls the client.
CaptionResult caption_via_service(const synthkit::TimeSeries& ts,
                                  const std::string& template_id,
                                  ChatClient& client, const FileCache& cache,
                                  bool include_plot = false);

// Builds the caption prompt sent to the provider (exposed for tests and
// for live-run auditing).
std::vector<ChatMessage> caption_prompt(const CaptionRequest& request);

inline const std::vector<std::string>& caption_perspectives() {
  static const std::vector<std::string> kPerspectives = {
      "trend", "seasonality", "volatility", "outliers", "summary"};
  return kPerspectives;
}

struct QaCandidate {
  std::string domain;
  std::string background;
  std::string question;
  std::string answer;
  std::string task_type;  // reasoning | decision
  bool reviewed = false;  // human curation is out of scope: always false
};

inline const std::vector<std::string>& qa_domains() {
  static const std::vector<std::string> kDomains = {
      "finance", "healthcare", "e-commerce", "environment", "social"};
  return kDomains;
}

// Asks the generation service for knowledge-intensive QA candidates about a
// series in one of the five domains. Schema-invalid replies are dropped
// (logged to stderr); candidates are returned unreviewed.
std::vector<QaCandidate> generate_domain_qa(
    const std::string& domain, const synthkit::TimeSeries& ts,
    const profiler::FeatureProfile& profile, ChatClient& client);

}  // namespace tsforge::corpus
