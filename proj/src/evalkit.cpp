#include "tsforge/evalkit.hpp"

#include "tsforge/errors.hpp"
#include "tsforge/rng.hpp"
#include "tsforge/textutil.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tsforge::evalkit {

namespace {

const std::map<std::string, Task>& task_table() {
  static const std::map<std::string, Task> kTable = {
      {"trend", Task::kTrend},
      {"volatility", Task::kVolatility},
      {"seasonality", Task::kSeasonality},
      {"outlier", Task::kOutlier},
      {"forecast", Task::kForecast},
      {"imputation", Task::kImputation},
      {"classification", Task::kClassification},
      {"anomaly", Task::kAnomaly},
      {"judgement", Task::kJudgement},
      {"mcq", Task::kMcq},
      {"open_ended", Task::kOpenEnded},
      {"knots_reasoning", Task::kKnotsReasoning},
      {"knots_decision", Task::kKnotsDecision},
  };
  return kTable;
}

}  // namespace

std::string task_name(Task t) {
  for (const auto& [name, task] : task_table()) {
    if (task == t) return name;
  }
  return "mcq";
}

Task task_from_name(const std::string& name) {
  const auto it = task_table().find(name);
  if (it == task_table().end()) throw ConfigError("unknown task: " + name);
  return it->second;
}

Scoring task_scoring(Task t) {
  switch (t) {
    case Task::kForecast:
    case Task::kImputation:
      return Scoring::kSmape;
    case Task::kOpenEnded:
    case Task::kKnotsReasoning:
    case Task::kKnotsDecision:
      return Scoring::kJudge;
    default:
      return Scoring::kAccuracy;
  }
}

void EvalItem::validate() const {
  switch (task_scoring(task)) {
    case Scoring::kSmape: {
      if (!instructed_length) {
        throw ConfigError("item " + id + ": missing instructed_length");
      }
      if (!std::holds_alternative<std::vector<double>>(gold)) {
        throw ConfigError("item " + id + ": gold must be a numeric sequence");
      }
      break;
    }
    case Scoring::kAccuracy: {
      if (choices.size() < 2) {
        throw ConfigError("item " + id + ": needs at least 2 choices");
      }
      if (!std::holds_alternative<std::string>(gold)) {
        throw ConfigError("item " + id + ": gold must be a label");
      }
      const std::string& g = std::get<std::string>(gold);
      const bool found = std::any_of(
          choices.begin(), choices.end(),
          [&](const Choice& c) { return c.label == g; });
      if (!found) {
        throw ConfigError("item " + id + ": gold label not among choices");
      }
      break;
    }
    case Scoring::kJudge: {
      if (!std::holds_alternative<std::string>(gold)) {
        throw ConfigError("item " + id + ": gold must be reference text");
      }
      break;
    }
  }
}

void to_json(nlohmann::json& j, const EvalItem& item) {
  j = nlohmann::json{{"id", item.id},
                     {"task", task_name(item.task)},
                     {"question", item.question}};
  if (item.series) j["series"] = item.series->values;
  if (!item.choices.empty()) {
    j["choices"] = nlohmann::json::array();
    for (const auto& c : item.choices) {
      j["choices"].push_back({{"label", c.label}, {"text", c.text}});
    }
  }
  if (std::holds_alternative<std::string>(item.gold)) {
    j["gold"] = std::get<std::string>(item.gold);
  } else {
    j["gold"] = std::get<std::vector<double>>(item.gold);
  }
  if (item.instructed_length) j["instructed_length"] = *item.instructed_length;
}

void from_json(const nlohmann::json& j, EvalItem& item) {
  item.id = j.at("id").get<std::string>();
  item.task = task_from_name(j.at("task").get<std::string>());
  item.question = j.at("question").get<std::string>();
  if (j.contains("series") && !j["series"].is_null()) {
    TimeSeries ts;
    ts.values = j["series"].get<std::vector<double>>();
    item.series = std::move(ts);
  }
  item.choices.clear();
  if (j.contains("choices")) {
    for (const auto& c : j["choices"]) {
      item.choices.push_back({c.at("label").get<std::string>(),
                              c.at("text").get<std::string>()});
    }
  }
  const auto& gold = j.at("gold");
  if (gold.is_string()) {
    item.gold = gold.get<std::string>();
  } else if (gold.is_array()) {
    item.gold = gold.get<std::vector<double>>();
  } else {
    throw ConfigError("item " + item.id + ": gold must be string or array");
  }
  if (j.contains("instructed_length") && !j["instructed_length"].is_null()) {
    item.instructed_length = j["instructed_length"].get<int>();
  }
  item.validate();
}

std::vector<EvalItem> load_items(const std::string& jsonl_path) {
  std::ifstream in(jsonl_path);
  if (!in) throw ConfigError("benchmark file not found: " + jsonl_path);
  std::vector<EvalItem> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      items.push_back(nlohmann::json::parse(line).get<EvalItem>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(jsonl_path + ":" + std::to_string(lineno) + ": " +
                       e.what());
    }
  }
  return items;
}

void PromptPlan::validate() const {
  if (shots < 3 || shots > 5) {
    throw ConfigError("prompt plan: shots must be in [3, 5]");
  }
  for (const auto& [task, items] : demos) {
    if (static_cast<int>(items.size()) != shots) {
      throw ConfigError("prompt plan: task " + task_name(task) + " has " +
                        std::to_string(items.size()) + " demos, expected " +
                        std::to_string(shots));
    }
  }
}

namespace {

TimeSeries make_series(std::initializer_list<double> values) {
  TimeSeries ts;
  ts.values = values;
  return ts;
}

std::vector<Choice> direction_choices() {
  return {{"A", "increasing"}, {"B", "decreasing"}, {"C", "stable"}};
}

std::vector<Choice> yes_no_choices() {
  return {{"A", "yes"}, {"B", "no"}};
}

}  // namespace

std::vector<EvalItem> builtin_demos(Task task, int shots) {
  std::vector<EvalItem> demos;
  for (int i = 0; i < shots; ++i) {
    EvalItem d;
    d.task = task;
    d.id = "demo-" + task_name(task) + "-" + std::to_string(i);
    switch (task_scoring(task)) {
      case Scoring::kAccuracy: {
        if (i % 2 == 0) {
          d.series = make_series({1, 2, 3, 4, 5, 6, 7, 8});
          d.question = "What is the overall direction of this series?";
          d.choices = direction_choices();
          d.gold = std::string("A");
        } else {
          d.series = make_series({9, 8, 7, 6, 5, 4, 3, 2});
          d.question = "What is the overall direction of this series?";
          d.choices = direction_choices();
          d.gold = std::string("B");
        }
        if (task == Task::kJudgement || task == Task::kAnomaly) {
          d.choices = yes_no_choices();
          d.question = i % 2 == 0
                           ? "Does this series increase over its window?"
                           : "Does this series increase over its window?";
          d.gold = std::string(i % 2 == 0 ? "A" : "B");
        }
        break;
      }
      case Scoring::kSmape: {
        d.series = make_series({1, 2, 3, 4, 5, 6});
        d.question = "Predict the next 2 values of this series.";
        d.instructed_length = 2;
        d.gold = std::vector<double>{7.0 + i, 8.0 + i};
        d.series->values[0] += i;  // vary demos across shots
        break;
      }
      case Scoring::kJudge: {
        d.series = make_series({1, 3, 2, 4, 3, 5});
        d.question = "Describe the short-term behavior of this series.";
        d.gold = std::string(
            "The series alternates up and down while drifting upward.");
        break;
      }
    }
    demos.push_back(std::move(d));
  }
  return demos;
}

std::string render_question(const EvalItem& item,
                            const SerializationSpec& spec) {
  std::string text;
  if (item.series) {
    text += "Series: " + corpus::serialize_series(*item.series, spec) + "\n";
  }
  text += item.question;
  for (const auto& c : item.choices) {
    text += "\n" + c.label + ") " + c.text;
  }
  if (item.instructed_length) {
    text += "\nRespond with exactly " + std::to_string(*item.instructed_length) +
            " values wrapped in " + spec.open + spec.close + " tags.";
  } else if (!item.choices.empty()) {
    text += "\nAnswer with the letter of the correct option.";
  }
  return text;
}

std::string render_gold(const EvalItem& item, const SerializationSpec& spec) {
  if (std::holds_alternative<std::vector<double>>(item.gold)) {
    TimeSeries ts;
    ts.values = std::get<std::vector<double>>(item.gold);
    return corpus::serialize_series(ts, spec);
  }
  return std::get<std::string>(item.gold);
}

std::vector<ChatMessage> assemble_prompt(const EvalItem& item,
                                         const PromptPlan& plan,
                                         const SerializationSpec& spec) {
  plan.validate();
  const auto it = plan.demos.find(item.task);
  const std::vector<EvalItem> demos =
      it != plan.demos.end() ? it->second : builtin_demos(item.task, plan.shots);

  std::vector<ChatMessage> messages;
  messages.push_back({"system", plan.system_preamble});
  for (const auto& demo : demos) {
    if (demo.id == item.id) {
      throw ConfigError("assemble_prompt: demo overlaps test item " + item.id);
    }
    messages.push_back({"user", render_question(demo, spec)});
    messages.push_back({"assistant", render_gold(demo, spec)});
  }
  messages.push_back({"user", render_question(item, spec)});
  return messages;
}

std::optional<std::string> extract_choice(const std::string& answer,
                                          const std::vector<Choice>& choices) {
  if (choices.empty()) throw ConfigError("extract_choice: no choices");

  // Rule 1: standalone choice-letter tokens. Unambiguous only when every
  // such token names the same option.
  std::istringstream in(answer);
  std::string token;
  std::string seen_label;
  bool ambiguous = false;
  while (in >> token) {
    // strip edge punctuation, e.g. "B." or "(B)"
    std::size_t b = 0;
    std::size_t e = token.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(token[b]))) ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(token[e - 1])))
      --e;
    const std::string core = token.substr(b, e - b);
    if (core.size() != 1) continue;
    for (const auto& c : choices) {
      if (to_lower(core) == to_lower(c.label)) {
        if (!seen_label.empty() && seen_label != c.label) ambiguous = true;
        seen_label = c.label;
      }
    }
  }
  if (!seen_label.empty() && !ambiguous) return seen_label;

  // Rule 2: exactly one option's text contained in the answer.
  const std::string lower = to_lower(answer);
  std::string match;
  int matches = 0;
  for (const auto& c : choices) {
    if (!c.text.empty() && lower.find(to_lower(c.text)) != std::string::npos) {
      ++matches;
      match = c.label;
    }
  }
  if (matches == 1) return match;

  return std::nullopt;  // Rule 3: parse-failure
}

namespace {

struct FoundNumber {
  double value;
  std::size_t begin;
  std::size_t end;
};

std::vector<FoundNumber> scan_numbers(const std::string& text) {
  std::vector<FoundNumber> numbers;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    const bool starts =
        std::isdigit(static_cast<unsigned char>(c)) ||
        ((c == '-' || c == '+' || c == '.') && i + 1 < text.size() &&
         std::isdigit(static_cast<unsigned char>(text[i + 1])));
    if (!starts) {
      ++i;
      continue;
    }
    char* end = nullptr;
    const double v = std::strtod(text.c_str() + i, &end);
    const std::size_t len = static_cast<std::size_t>(end - (text.c_str() + i));
    if (len == 0) {
      ++i;
      continue;
    }
    numbers.push_back({v, i, i + len});
    i += len;
  }
  return numbers;
}

// A run of numbers stays contiguous while the text between neighbors is
// short filler without sentence punctuation ("3, 4, then 5" is one run).
std::vector<double> longest_run(const std::string& text,
                                const std::vector<FoundNumber>& numbers) {
  std::vector<double> best;
  std::vector<double> current;
  for (std::size_t i = 0; i < numbers.size(); ++i) {
    if (!current.empty()) {
      const std::string gap = text.substr(
          numbers[i - 1].end, numbers[i].begin - numbers[i - 1].end);
      const bool breaks =
          gap.size() > 16 ||
          gap.find_first_of(".!?:;\n") != std::string::npos;
      if (breaks) {
        if (current.size() > best.size()) best = current;
        current.clear();
      }
    }
    current.push_back(numbers[i].value);
  }
  if (current.size() > best.size()) best = current;
  return best;
}

}  // namespace

std::optional<std::vector<double>> extract_sequence(
    const std::string& answer, const SerializationSpec& spec) {
  std::string scope = answer;
  const std::size_t open_pos = answer.find(spec.open);
  if (open_pos != std::string::npos) {
    const std::size_t body = open_pos + spec.open.size();
    const std::size_t close_pos = answer.find(spec.close, body);
    if (close_pos != std::string::npos) {
      scope = answer.substr(body, close_pos - body);
      const auto numbers = scan_numbers(scope);
      if (numbers.empty()) return std::nullopt;
      std::vector<double> out;
      out.reserve(numbers.size());
      for (const auto& n : numbers) out.push_back(n.value);
      return out;
    }
  }
  const auto numbers = scan_numbers(scope);
  if (numbers.empty()) return std::nullopt;
  return longest_run(scope, numbers);
}

double smape(const std::vector<double>& actual,
             const std::vector<double>& forecast) {
  if (actual.empty() || forecast.empty()) {
    throw MetricError("smape: empty input");
  }
  if (actual.size() != forecast.size()) {
    throw MetricError("smape: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t t = 0; t < actual.size(); ++t) {
    const double denom = (std::fabs(actual[t]) + std::fabs(forecast[t])) / 2.0;
    if (denom == 0.0) continue;  // |A|=|F|=0 contributes 0
    acc += std::fabs(forecast[t] - actual[t]) / denom;
  }
  return acc / static_cast<double>(actual.size());
}

double adjusted_error(double error, int generated_length,
                      int instructed_length) {
  return generated_length == instructed_length ? error : error * 1.1;
}

double accuracy(const std::vector<std::optional<std::string>>& predictions,
                const std::vector<std::string>& golds) {
  if (predictions.size() != golds.size()) {
    throw MetricError("accuracy: length mismatch");
  }
  if (predictions.empty()) throw MetricError("accuracy: empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (predictions[i] && *predictions[i] == golds[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(golds.size());
}

std::vector<ChatMessage> judge_prompt(const EvalItem& item,
                                      const std::string& answer) {
  std::string user =
      "Grade the candidate answer against the reference on factual "
      "correctness, temporal logic, completeness, and conciseness. Reply "
      "with a single overall score from 0.0 to 10.0 in the form "
      "\"Score: X\".\n";
  user += "Question: " + item.question + "\n";
  user += "Reference answer: " +
          (std::holds_alternative<std::string>(item.gold)
               ? std::get<std::string>(item.gold)
               : std::string("(numeric)")) +
          "\n";
  user += "Candidate answer: " + answer + "\n";
  return {{"system", "You are a strict evaluator of time series answers."},
          {"user", user}};
}

namespace {

std::optional<double> parse_judge_reply(const std::string& reply) {
  const std::string lower = to_lower(reply);
  std::size_t start = lower.find("score");
  const std::string scope =
      start == std::string::npos ? reply : reply.substr(start);
  const auto numbers = scan_numbers(scope);
  if (numbers.empty()) return std::nullopt;
  const double score = numbers.front().value;
  if (score < 0.0 || score > 10.0) return std::nullopt;
  return score;
}

}  // namespace

std::optional<double> judge_score(const EvalItem& item,
                                  const std::string& answer,
                                  ChatClient& judge) {
  const auto messages = judge_prompt(item, answer);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string reply = judge.complete(messages);
    if (const auto score = parse_judge_reply(reply)) return score;
  }
  return std::nullopt;  // judge-failure, counted by the caller
}

void to_json(nlohmann::json& j, const MetricReport& r) {
  nlohmann::json tasks = nlohmann::json::object();
  for (const auto& [task, m] : r.per_task) {
    nlohmann::json tj = {{"n_items", m.n_items},
                         {"scored", m.scored},
                         {"parse_failures", m.parse_failures},
                         {"item_failures", m.item_failures},
                         {"judge_failures", m.judge_failures}};
    if (m.accuracy) tj["accuracy"] = *m.accuracy;
    if (m.smape) tj["smape"] = *m.smape;
    if (m.adjusted_smape) tj["adjusted_smape"] = *m.adjusted_smape;
    if (m.judge_mean) tj["judge_mean"] = *m.judge_mean;
    tasks[task_name(task)] = tj;
  }
  j = nlohmann::json{{"per_task", tasks},
                     {"seed", r.seed},
                     {"model", r.model},
                     {"timestamp", r.timestamp}};
}

void from_json(const nlohmann::json& j, MetricReport& r) {
  r.seed = j.at("seed").get<std::uint64_t>();
  r.model = j.value("model", "");
  r.timestamp = j.value("timestamp", "");
  r.per_task.clear();
  for (const auto& [name, tj] : j.at("per_task").items()) {
    TaskMetrics m;
    m.n_items = tj.at("n_items").get<int>();
    m.scored = tj.value("scored", 0);
    m.parse_failures = tj.value("parse_failures", 0);
    m.item_failures = tj.value("item_failures", 0);
    m.judge_failures = tj.value("judge_failures", 0);
    if (tj.contains("accuracy")) m.accuracy = tj["accuracy"].get<double>();
    if (tj.contains("smape")) m.smape = tj["smape"].get<double>();
    if (tj.contains("adjusted_smape")) {
      m.adjusted_smape = tj["adjusted_smape"].get<double>();
    }
    if (tj.contains("judge_mean")) {
      m.judge_mean = tj["judge_mean"].get<double>();
    }
    r.per_task[task_from_name(name)] = m;
  }
}

std::string format_report_table(const MetricReport& r) {
  std::ostringstream out;
  out << "task               n    acc     smape   adj     judge   pfail\n";
  for (const auto& [task, m] : r.per_task) {
    char line[160];
    auto fmt = [](const std::optional<double>& v) {
      char buf[16];
      if (v) {
        std::snprintf(buf, sizeof(buf), "%.4f", *v);
      } else {
        std::snprintf(buf, sizeof(buf), "-");
      }
      return std::string(buf);
    };
    std::snprintf(line, sizeof(line), "%-18s %-4d %-7s %-7s %-7s %-7s %d\n",
                  task_name(task).c_str(), m.n_items, fmt(m.accuracy).c_str(),
                  fmt(m.smape).c_str(), fmt(m.adjusted_smape).c_str(),
                  fmt(m.judge_mean).c_str(), m.parse_failures);
    out << line;
  }
  return out.str();
}

namespace {

std::string now_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace

MetricReport run_benchmark(const std::vector<EvalItem>& items,
                           ChatClient& model, const PromptPlan& plan,
                           const SampleSpec& sample_spec, std::uint64_t seed,
                           ChatClient* judge,
                           const SerializationSpec& spec) {
  plan.validate();
  std::map<Task, std::vector<const EvalItem*>> by_task;
  for (const auto& item : items) by_task[item.task].push_back(&item);

  MetricReport report;
  report.seed = seed;
  report.model = model.model_name();
  report.timestamp = now_timestamp();

  int task_index = 0;
  for (auto& [task, pool] : by_task) {
    const auto want_it = sample_spec.per_task.find(task);
    const int available = static_cast<int>(pool.size());
    int want = want_it != sample_spec.per_task.end() && want_it->second > 0
                   ? want_it->second
                   : available;
    if (want > available) {
      throw ConfigError("run_benchmark: task " + task_name(task) +
                        " requests " + std::to_string(want) + " of " +
                        std::to_string(available) + " items");
    }

    // Seeded sample without replacement (partial Fisher-Yates).
    Rng rng(seed + static_cast<std::uint64_t>(task_index++) * 0x9e3779b97f4a7c15ULL);
    std::vector<const EvalItem*> sampled = pool;
    for (int i = 0; i < want; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(i) + rng.index(sampled.size() - i);
      std::swap(sampled[static_cast<std::size_t>(i)], sampled[j]);
    }
    sampled.resize(static_cast<std::size_t>(want));

    TaskMetrics metrics;
    metrics.n_items = want;
    const Scoring scoring = task_scoring(task);
    if (scoring == Scoring::kJudge && judge == nullptr) {
      throw ConfigError("run_benchmark: task " + task_name(task) +
                        " needs a judge client");
    }

    double acc_correct = 0.0;
    double smape_sum = 0.0;
    double adj_sum = 0.0;
    double judge_sum = 0.0;
    int judge_scored = 0;

    for (const EvalItem* item : sampled) {
      std::string reply;
      bool failed = false;
      try {
        reply = model.complete(assemble_prompt(*item, plan, spec));
      } catch (const ProviderError&) {
        failed = true;
      }
      if (failed) {
        ++metrics.item_failures;
        if (scoring == Scoring::kSmape) {
          smape_sum += 2.0;  // worst case, consistent with parse-failure
          adj_sum += 2.0 * 1.1;
        }
        continue;
      }
      ++metrics.scored;

      switch (scoring) {
        case Scoring::kAccuracy: {
          const auto pred = extract_choice(reply, item->choices);
          if (!pred) {
            ++metrics.parse_failures;
          } else if (*pred == std::get<std::string>(item->gold)) {
            acc_correct += 1.0;
          }
          break;
        }
        case Scoring::kSmape: {
          const auto& gold = std::get<std::vector<double>>(item->gold);
          const int instructed =
              item->instructed_length ? *item->instructed_length
                                      : static_cast<int>(gold.size());
          const auto seq = extract_sequence(reply, spec);
          if (!seq || seq->empty()) {
            // Parse-failure path: worst-case error, penalized (length 0).
            ++metrics.parse_failures;
            smape_sum += 2.0;
            adj_sum += adjusted_error(2.0, 0, instructed);
            break;
          }
          const std::size_t common = std::min(gold.size(), seq->size());
          const std::vector<double> a(gold.begin(), gold.begin() + common);
          const std::vector<double> f(seq->begin(), seq->begin() + common);
          const double e = smape(a, f);
          smape_sum += e;
          adj_sum += adjusted_error(e, static_cast<int>(seq->size()),
                                    instructed);
          break;
        }
        case Scoring::kJudge: {
          const auto score = judge_score(*item, reply, *judge);
          if (score) {
            judge_sum += *score;
            ++judge_scored;
          } else {
            ++metrics.judge_failures;
          }
          break;
        }
      }
    }

    switch (scoring) {
      case Scoring::kAccuracy:
        metrics.accuracy = want > 0 ? acc_correct / want : 0.0;
        break;
      case Scoring::kSmape:
        if (want > 0) {
          metrics.smape = smape_sum / want;
          metrics.adjusted_smape = adj_sum / want;
        }
        break;
      case Scoring::kJudge:
        if (judge_scored > 0) metrics.judge_mean = judge_sum / judge_scored;
        break;
    }
    report.per_task[task] = metrics;
  }
  return report;
}

std::map<std::string, MetricSummary> aggregate_runs(
    const std::vector<MetricReport>& reports) {
  if (reports.size() < 2) {
    throw MetricError("aggregate_runs: need at least 2 reports");
  }
  for (const auto& r : reports) {
    if (r.per_task.size() != reports.front().per_task.size()) {
      throw MetricError("aggregate_runs: mismatched task sets");
    }
    for (const auto& [task, metrics] : reports.front().per_task) {
      if (r.per_task.find(task) == r.per_task.end()) {
        throw MetricError("aggregate_runs: mismatched task sets");
      }
    }
  }

  std::map<std::string, std::vector<double>> series;
  for (const auto& r : reports) {
    for (const auto& [task, m] : r.per_task) {
      const std::string prefix = task_name(task) + ".";
      if (m.accuracy) series[prefix + "accuracy"].push_back(*m.accuracy);
      if (m.smape) series[prefix + "smape"].push_back(*m.smape);
      if (m.adjusted_smape) {
        series[prefix + "adjusted_smape"].push_back(*m.adjusted_smape);
      }
      if (m.judge_mean) series[prefix + "judge_mean"].push_back(*m.judge_mean);
    }
  }

  std::map<std::string, MetricSummary> summary;
  for (const auto& [name, values] : series) {
    if (values.size() != reports.size()) {
      throw MetricError("aggregate_runs: metric " + name +
                        " missing from some runs");
    }
    MetricSummary s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.sample_std = std::sqrt(acc / static_cast<double>(values.size() - 1));
    summary[name] = s;
  }
  return summary;
}

}  // namespace tsforge::evalkit
