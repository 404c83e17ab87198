#pragma once

#include "tsforge/serialize.hpp"
#include "tsforge/services.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tsforge::evalkit {

using corpus::ChatClient;
using corpus::ChatMessage;
using corpus::SerializationSpec;
using synthkit::TimeSeries;

enum class Task {
  kTrend,
  kVolatility,
  kSeasonality,
  kOutlier,
  kForecast,
  kImputation,
  kClassification,
  kAnomaly,
  kJudgement,
  kMcq,
  kOpenEnded,
  kKnotsReasoning,
  kKnotsDecision,
};

std::string task_name(Task t);
Task task_from_name(const std::string& name);

// Metric family a task is scored with.
enum class Scoring { kAccuracy, kSmape, kJudge };
Scoring task_scoring(Task t);

struct Choice {
  std::string label;  // e.g. "A"
  std::string text;
};

// Gold answer payload: a label, a numeric sequence, or reference text.
using Gold = std::variant<std::string, std::vector<double>>;

struct EvalItem {
  std::string id;
  Task task = Task::kMcq;
  std::optional<TimeSeries> series;
  std::string question;
  std::vector<Choice> choices;
  Gold gold;
  std::optional<int> instructed_length;  // forecast / imputation

  void validate() const;
};

void to_json(nlohmann::json& j, const EvalItem& item);
void from_json(const nlohmann::json& j, EvalItem& item);

std::vector<EvalItem> load_items(const std::string& jsonl_path);

struct PromptPlan {
  int shots = 3;  // paper protocol allows 3-5
  std::map<Task, std::vector<EvalItem>> demos;
  std::string system_preamble =
      "You answer questions about time series. Follow the response format "
      "shown in the examples.";

  void validate() const;
};

// Default demonstration items per task, used when a benchmark file does not
// ship its own demos.
std::vector<EvalItem> builtin_demos(Task task, int shots);

// Renders one eval item as a user-turn question (series, question, choices).
std::string render_question(const EvalItem& item,
                            const SerializationSpec& spec);

// Renders the gold answer the way a demonstration's assistant turn shows it.
std::string render_gold(const EvalItem& item, const SerializationSpec& spec);

// System preamble, then `shots` (user, assistant) demonstration pairs, then
// the test question as the final user turn.
std::vector<ChatMessage> assemble_prompt(const EvalItem& item,
                                         const PromptPlan& plan,
                                         const SerializationSpec& spec);

// MCQ answer extraction. Rule order: unambiguous standalone choice letter,
// then unique case-insensitive containment of exactly one option text, then
// parse-failure (nullopt).
std::optional<std::string> extract_choice(const std::string& answer,
                                          const std::vector<Choice>& choices);

// Numeric sequence extraction: numbers inside the wrapper tags when
// present, else the longest contiguous run of separated numbers.
std::optional<std::vector<double>> extract_sequence(
    const std::string& answer, const SerializationSpec& spec = {});

// SMAPE in [0, 2]; a 0/0 term contributes 0. Requires equal non-empty
// lengths (alignment is the caller's job).
double smape(const std::vector<double>& actual,
             const std::vector<double>& forecast);

// x1.1 penalty iff the generated length differs from the instructed one.
double adjusted_error(double error, int generated_length,
                      int instructed_length);

double accuracy(const std::vector<std::optional<std::string>>& predictions,
                const std::vector<std::string>& golds);

// Judge prompt embedding question, reference, candidate, and the rubric
// dimensions (factual correctness, temporal logic, completeness,
// conciseness). Exposed for tests.
std::vector<ChatMessage> judge_prompt(const EvalItem& item,
                                      const std::string& answer);

// Parses the overall 0-10 score from a judge reply; out-of-range or
// unparseable replies get one retry, then count as judge-failure (nullopt).
std::optional<double> judge_score(const EvalItem& item,
                                  const std::string& answer,
                                  ChatClient& judge);

struct TaskMetrics {
  int n_items = 0;
  int scored = 0;
  int parse_failures = 0;
  int item_failures = 0;
  std::optional<double> accuracy;
  std::optional<double> smape;
  std::optional<double> adjusted_smape;
  std::optional<double> judge_mean;
  int judge_failures = 0;
};

struct MetricReport {
  std::map<Task, TaskMetrics> per_task;
  std::uint64_t seed = 0;
  std::string model;
  std::string timestamp;
};

void to_json(nlohmann::json& j, const MetricReport& r);
void from_json(const nlohmann::json& j, MetricReport& r);
std::string format_report_table(const MetricReport& r);

struct SampleSpec {
  std::map<Task, int> per_task;  // 0 or missing -> all items
};

// Full protocol: seeded per-task sampling, assemble -> query -> extract ->
// score with the task-appropriate metric, aggregated per task. The judge
// client may be null when no judge-scored tasks are present.
MetricReport run_benchmark(const std::vector<EvalItem>& items,
                           ChatClient& model, const PromptPlan& plan,
                           const SampleSpec& sample_spec, std::uint64_t seed,
                           ChatClient* judge = nullptr,
                           const SerializationSpec& spec = {});

struct MetricSummary {
  double mean = 0.0;
  double sample_std = 0.0;  // n-1 denominator
};

// Mean +- sample std per metric across independent runs; requires >= 2
// reports over identical task sets.
std::map<std::string, MetricSummary> aggregate_runs(
    const std::vector<MetricReport>& reports);

}  // namespace tsforge::evalkit
