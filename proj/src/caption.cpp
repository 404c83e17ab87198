#include "tsforge/caption.hpp"

#include "tsforge/errors.hpp"
#include "tsforge/plot.hpp"
#include "tsforge/textutil.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>

namespace tsforge::corpus {

std::string caption_cache_key(const synthkit::TimeSeries& ts,
                              const std::string& template_id,
                              const std::string& model_name) {
  std::string blob;
  char buf[40];
  for (double v : ts.values) {
    std::snprintf(buf, sizeof(buf), "%.17g,", v);
    blob += buf;
  }
  blob += "|" + template_id + "|" + model_name;
  return hex64(fnv1a64(blob));
}

std::vector<ChatMessage> caption_prompt(const CaptionRequest& request) {
  std::string user =
      "You are given a univariate time series. Reply with a JSON object of "
      "the form {\"structured\": {\"trend\": ..., \"seasonality\": ..., "
      "\"volatility\": ..., \"outliers\": ..., \"summary\": ...}, "
      "\"caption\": ...} where each structured field characterizes the "
      "series from that perspective and the caption is a concise free-form "
      "summary.\n";
  user += "Template: " + request.template_id + "\n";
  user += "Series: " + request.series_text + "\n";
  if (request.plot_svg) {
    user += "Plot (SVG):\n" + *request.plot_svg + "\n";
  }
  return {{"system", "You describe time series precisely and concisely."},
          {"user", user}};
}

namespace {

CaptionResult parse_caption_reply(const std::string& reply) {
  CaptionResult result;
  result.raw_reply = reply;
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(reply);
  } catch (const nlohmann::json::exception&) {
    result.parse_failed = true;
    return result;
  }
  if (!parsed.contains("structured") || !parsed["structured"].is_object() ||
      !parsed.contains("caption") || !parsed["caption"].is_string()) {
    result.parse_failed = true;
    return result;
  }
  for (const auto& p : caption_perspectives()) {
    if (!parsed["structured"].contains(p) ||
        !parsed["structured"][p].is_string()) {
      result.parse_failed = true;
      return result;
    }
    result.structured[p] = parsed["structured"][p].get<std::string>();
  }
  result.unstructured = parsed["caption"].get<std::string>();
  return result;
}

}  // namespace

CaptionResult caption_via_service(const synthkit::TimeSeries& ts,
                                  const std::string& template_id,
                                  ChatClient& client, const FileCache& cache,
                                  bool include_plot) {
  const std::string key =
      caption_cache_key(ts, template_id, client.model_name());

  std::string reply;
  if (auto cached = cache.get(key)) {
    reply = *cached;
  } else {
    CaptionRequest request;
    char buf[40];
    for (std::size_t i = 0; i < ts.values.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", ts.values[i]);
      if (i) request.series_text += ", ";
      request.series_text += buf;
    }
    request.template_id = template_id;
    if (include_plot && ts.values.size() >= 2) {
      request.plot_svg = render_plot(ts);
    }
    reply = client.complete(caption_prompt(request));
    cache.put(key, reply);
  }

  CaptionResult result = parse_caption_reply(reply);
  result.cache_key = key;
  return result;
}

std::vector<QaCandidate> generate_domain_qa(
    const std::string& domain, const synthkit::TimeSeries& ts,
    const profiler::FeatureProfile& profile, ChatClient& client) {
  const auto& domains = qa_domains();
  if (std::find(domains.begin(), domains.end(), domain) == domains.end()) {
    throw ConfigError("generate_domain_qa: unknown domain '" + domain + "'");
  }

  nlohmann::json profile_json = profile;
  std::string user =
      "Domain: " + domain +
      "\nGiven the time series facts below, produce a JSON array of "
      "question-answer items. Each item must be an object with fields "
      "\"background\" (domain context), \"question\", \"answer\", and "
      "\"task_type\" (either \"reasoning\" or \"decision\").\n";
  user += "Facts: " + profile_json.dump() + "\n";
  char buf[40];
  user += "Series: ";
  for (std::size_t i = 0; i < ts.values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6g", ts.values[i]);
    if (i) user += ", ";
    user += buf;
  }

  const std::string reply = client.complete(
      {{"system", "You write knowledge-intensive time series QA items."},
       {"user", user}});

  std::vector<QaCandidate> items;
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(reply);
  } catch (const nlohmann::json::exception&) {
    std::cerr << "generate_domain_qa: dropped unparseable reply for domain "
              << domain << "\n";
    return items;
  }
  if (!parsed.is_array()) {
    std::cerr << "generate_domain_qa: dropped non-array reply for domain "
              << domain << "\n";
    return items;
  }
  for (const auto& item : parsed) {
    if (!item.is_object() || !item.contains("background") ||
        !item.contains("question") || !item.contains("answer") ||
        !item.contains("task_type") || !item["background"].is_string() ||
        !item["question"].is_string() || !item["answer"].is_string() ||
        !item["task_type"].is_string()) {
      std::cerr << "generate_domain_qa: dropped schema-invalid item\n";
      continue;
    }
    const std::string task_type = item["task_type"].get<std::string>();
    if (task_type != "reasoning" && task_type != "decision") {
      std::cerr << "generate_domain_qa: dropped item with task_type '"
                << task_type << "'\n";
      continue;
    }
    items.push_back({domain, item["background"].get<std::string>(),
                     item["question"].get<std::string>(),
                     item["answer"].get<std::string>(), task_type, false});
  }
  return items;
}

}  // namespace tsforge::corpus
