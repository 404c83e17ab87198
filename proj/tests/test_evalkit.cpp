#include <doctest.h>

#include "tsforge/errors.hpp"
#include "tsforge/evalkit.hpp"
#include "tsforge/rng.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

using namespace tsforge;
using namespace tsforge::evalkit;

namespace {

TimeSeries series(std::vector<double> values) {
  TimeSeries ts;
  ts.values = std::move(values);
  return ts;
}

EvalItem mcq_item(const std::string& id, const std::string& gold_label) {
  EvalItem item;
  item.id = id;
  item.task = Task::kTrend;
  item.series = series({1, 2, 3, 4, 5});
  item.question = "What is the overall direction of this series?";
  item.choices = {{"A", "increasing"}, {"B", "decreasing"}, {"C", "stable"}};
  item.gold = gold_label;
  item.validate();
  return item;
}

EvalItem forecast_item(const std::string& id, std::vector<double> gold) {
  EvalItem item;
  item.id = id;
  item.task = Task::kForecast;
  item.series = series({1, 2, 3, 4, 5, 6});
  item.question = "Predict the next values of this series.";
  item.instructed_length = static_cast<int>(gold.size());
  item.gold = std::move(gold);
  item.validate();
  return item;
}

EvalItem judge_item(const std::string& id) {
  EvalItem item;
  item.id = id;
  item.task = Task::kOpenEnded;
  item.series = series({1, 3, 2, 4});
  item.question = "Describe this series.";
  item.gold = std::string("It zigzags upward.");
  item.validate();
  return item;
}

// Independent SMAPE implementation used as an oracle: accumulates the
// per-step ratios in a vector first, then averages.
double smape_oracle(const std::vector<double>& a, const std::vector<double>& f) {
  std::vector<double> terms;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = (std::abs(a[i]) + std::abs(f[i])) / 2.0;
    terms.push_back(denom == 0.0 ? 0.0 : std::abs(f[i] - a[i]) / denom);
  }
  double total = 0.0;
  for (double t : terms) total += t;
  return total / static_cast<double>(terms.size());
}

// Looks up the test item whose rendered question is the prompt's final user
// turn, so stubs can answer relative to the gold.
const EvalItem* match_item(const std::vector<EvalItem>& items,
                           const std::vector<corpus::ChatMessage>& messages,
                           const SerializationSpec& spec) {
  const std::string& question = messages.back().content;
  for (const auto& item : items) {
    if (render_question(item, spec) == question) return &item;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("assemble_prompt lays out system, shots, and the question") {
  const auto item = mcq_item("q-1", "A");
  PromptPlan plan;
  plan.shots = 3;
  const auto messages = assemble_prompt(item, plan, {});
  REQUIRE(messages.size() == 8);  // system + 3x(user, assistant) + user
  CHECK(messages[0].role == "system");
  for (int i = 0; i < 3; ++i) {
    CHECK(messages[1 + 2 * i].role == "user");
    CHECK(messages[2 + 2 * i].role == "assistant");
  }
  CHECK(messages.back().role == "user");
  CHECK(messages.back().content.find("<ts>1.00, 2.00, 3.00, 4.00, 5.00</ts>") !=
        std::string::npos);
  CHECK(messages.back().content.find("A) increasing") != std::string::npos);
}

TEST_CASE("assemble_prompt rejects demos that overlap the test item") {
  const auto item = mcq_item("q-overlap", "A");
  PromptPlan plan;
  plan.demos[Task::kTrend] = {mcq_item("d-0", "A"), mcq_item("q-overlap", "B"),
                              mcq_item("d-2", "C")};
  CHECK_THROWS_AS(assemble_prompt(item, plan, {}), ConfigError);
}

TEST_CASE("prompt plan enforces the 3-5 shot range") {
  PromptPlan plan;
  plan.shots = 2;
  CHECK_THROWS_AS(plan.validate(), ConfigError);
  plan.shots = 6;
  CHECK_THROWS_AS(plan.validate(), ConfigError);
  plan.shots = 5;
  CHECK_NOTHROW(plan.validate());
}

TEST_CASE("extract_choice follows the rule ladder") {
  const std::vector<Choice> choices = {
      {"A", "increasing"}, {"B", "decreasing"}, {"C", "stable"}};
  CHECK(extract_choice("B", choices) == "B");
  CHECK(extract_choice("The answer is B.", choices) == "B");
  CHECK(extract_choice("(c)", choices) == "C");
  // standalone letters in conflict: ambiguous, and no option text appears
  CHECK_FALSE(extract_choice("A or B", choices).has_value());
  // no standalone letter, unique option text containment
  CHECK(extract_choice("It looks increasing to me", choices) == "A");
  // two option texts contained: still ambiguous
  CHECK_FALSE(
      extract_choice("Either increasing or decreasing", choices).has_value());
  CHECK_FALSE(extract_choice("no committal reply", choices).has_value());
}

TEST_CASE("extract_sequence prefers wrapped values") {
  const auto wrapped = extract_sequence("Sure: <ts>1.00, -2.50</ts> done. 9 9");
  REQUIRE(wrapped.has_value());
  CHECK(*wrapped == std::vector<double>{1.0, -2.5});
}

TEST_CASE("extract_sequence falls back to the longest number run") {
  const auto run = extract_sequence("It was 3, 4, then 5");
  REQUIRE(run.has_value());
  CHECK(*run == std::vector<double>{3.0, 4.0, 5.0});

  // sentence punctuation breaks runs
  const auto split = extract_sequence("First 1.5. Then 2, 3, 4.");
  REQUIRE(split.has_value());
  CHECK(*split == std::vector<double>{2.0, 3.0, 4.0});

  CHECK_FALSE(extract_sequence("no numerals at all").has_value());
}

TEST_CASE("smape worked example and the zero-denominator rule") {
  CHECK(smape({1.0, 2.0}, {2.0, 2.0}) == doctest::Approx(1.0 / 3.0));
  CHECK(smape({0.0, 1.0}, {0.0, 1.0}) == doctest::Approx(0.0));
  CHECK(smape({0.0}, {1.0}) == doctest::Approx(2.0));  // upper bound
  CHECK_THROWS_AS(smape({}, {}), MetricError);
  CHECK_THROWS_AS(smape({1.0}, {1.0, 2.0}), MetricError);
}

TEST_CASE("smape matches an independent oracle and its invariants") {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(8), f(8);
    for (int i = 0; i < 8; ++i) {
      a[i] = rng.normal() * 3.0;
      f[i] = rng.normal() * 3.0;
    }
    const double s = smape(a, f);
    CHECK(s == doctest::Approx(smape_oracle(a, f)).epsilon(1e-12));
    CHECK(s >= 0.0);
    CHECK(s <= 2.0);
    CHECK(smape(f, a) == doctest::Approx(s).epsilon(1e-12));  // symmetric
    std::vector<double> a2 = a, f2 = f;
    for (auto& v : a2) v *= 7.0;
    for (auto& v : f2) v *= 7.0;
    CHECK(smape(a2, f2) == doctest::Approx(s).epsilon(1e-9));  // scale-free
  }
}

TEST_CASE("adjusted_error applies the penalty only on length mismatch") {
  CHECK(adjusted_error(0.5, 4, 4) == 0.5);
  CHECK(adjusted_error(0.5, 3, 4) == 0.5 * 1.1);
  CHECK(adjusted_error(0.5, 5, 4) == 0.5 * 1.1);
  CHECK(adjusted_error(0.0, 3, 4) == 0.0);
}

TEST_CASE("accuracy counts parse failures as misses") {
  const std::vector<std::optional<std::string>> preds = {
      std::string("A"), std::nullopt, std::string("B")};
  CHECK(accuracy(preds, {"A", "B", "B"}) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(accuracy({}, {}), MetricError);
}

TEST_CASE("judge_prompt carries the rubric and both answers") {
  const auto item = judge_item("j-1");
  const auto messages = judge_prompt(item, "my answer");
  REQUIRE(messages.size() == 2);
  const std::string& user = messages.back().content;
  CHECK(user.find("factual") != std::string::npos);
  CHECK(user.find("temporal logic") != std::string::npos);
  CHECK(user.find("completeness") != std::string::npos);
  CHECK(user.find("conciseness") != std::string::npos);
  CHECK(user.find("Reference answer: It zigzags upward.") != std::string::npos);
  CHECK(user.find("Candidate answer: my answer") != std::string::npos);
}

TEST_CASE("judge_score parses scores and retries once") {
  const auto item = judge_item("j-2");

  auto good = corpus::StubChatClient::fixed("Score: 7.5");
  CHECK(judge_score(item, "x", *good) == doctest::Approx(7.5));
  CHECK(good->call_count() == 1);

  auto prose = corpus::StubChatClient::fixed("I give this a score of 8");
  CHECK(judge_score(item, "x", *prose) == doctest::Approx(8.0));

  auto out_of_range = corpus::StubChatClient::fixed("Score: 11");
  CHECK_FALSE(judge_score(item, "x", *out_of_range).has_value());
  CHECK(out_of_range->call_count() == 2);  // one retry

  int calls = 0;
  corpus::StubChatClient flaky([&](const std::vector<ChatMessage>&) {
    return ++calls == 1 ? "garbled" : "Score: 4.0";
  });
  CHECK(judge_score(item, "x", flaky) == doctest::Approx(4.0));
  CHECK(flaky.call_count() == 2);
}

TEST_CASE("run_benchmark with a gold-echoing model is perfect") {
  std::vector<EvalItem> items;
  for (int i = 0; i < 6; ++i) {
    items.push_back(mcq_item("m-" + std::to_string(i), i % 2 ? "A" : "B"));
    items.back().series = series({1.0 + i, 2.0 + i, 3.0 + i});
  }
  for (int i = 0; i < 4; ++i) {
    items.push_back(forecast_item("f-" + std::to_string(i),
                                  {1.5 + i, 2.5 + i, 3.5 + i}));
    items.back().series = series({0.5 + i, 1.0 + i});
  }
  const SerializationSpec spec;
  corpus::StubChatClient oracle(
      [&](const std::vector<ChatMessage>& messages) {
        const EvalItem* item = match_item(items, messages, spec);
        REQUIRE(item != nullptr);
        return render_gold(*item, spec);
      },
      "stub-oracle");

  PromptPlan plan;
  SampleSpec sample;
  sample.per_task = {{Task::kTrend, 4}, {Task::kForecast, 3}};
  const auto report = run_benchmark(items, oracle, plan, sample, 7);

  const auto& trend = report.per_task.at(Task::kTrend);
  CHECK(trend.n_items == 4);
  CHECK(trend.parse_failures == 0);
  CHECK(*trend.accuracy == doctest::Approx(1.0));

  const auto& fc = report.per_task.at(Task::kForecast);
  CHECK(fc.n_items == 3);
  CHECK(*fc.smape == doctest::Approx(0.0));
  CHECK(*fc.adjusted_smape == doctest::Approx(0.0));

  // determinism up to the timestamp
  auto again = run_benchmark(items, oracle, plan, sample, 7);
  nlohmann::json a(report), b(again);
  a.erase("timestamp");
  b.erase("timestamp");
  CHECK(a.dump() == b.dump());
}

TEST_CASE("a wrong-answer model scores zero accuracy") {
  std::vector<EvalItem> items = {mcq_item("w-0", "A"), mcq_item("w-1", "B")};
  items[1].series = series({9, 8, 7});
  const SerializationSpec spec;
  corpus::StubChatClient anti([&](const std::vector<ChatMessage>& messages) {
    const EvalItem* item = match_item(items, messages, spec);
    REQUIRE(item != nullptr);
    return std::string(std::get<std::string>(item->gold) == "A" ? "B" : "A");
  });
  const auto report = run_benchmark(items, anti, PromptPlan{}, {}, 1);
  CHECK(*report.per_task.at(Task::kTrend).accuracy == doctest::Approx(0.0));
}

TEST_CASE("truncated forecasts pay the length penalty") {
  std::vector<EvalItem> items = {
      forecast_item("t-0", {2.0, 4.0, 6.0, 8.0})};
  const SerializationSpec spec;
  corpus::StubChatClient truncating(
      [&](const std::vector<ChatMessage>&) {
        // three of the four instructed values, each off by +1
        return corpus::serialize_series(series({3.0, 5.0, 7.0}), spec);
      });
  const auto report = run_benchmark(items, truncating, PromptPlan{}, {}, 1);
  const auto& m = report.per_task.at(Task::kForecast);
  const double prefix = smape({2.0, 4.0, 6.0}, {3.0, 5.0, 7.0});
  CHECK(prefix > 0.0);
  CHECK(*m.smape == doctest::Approx(prefix));
  CHECK(*m.adjusted_smape == doctest::Approx(prefix * 1.1));
}

TEST_CASE("unparseable model output is worst-cased, not dropped") {
  std::vector<EvalItem> items = {forecast_item("p-0", {1.0, 2.0}),
                                 mcq_item("p-1", "A")};
  auto mute = corpus::StubChatClient::fixed("I cannot answer that.");
  const auto report = run_benchmark(items, *mute, PromptPlan{}, {}, 1);

  const auto& fc = report.per_task.at(Task::kForecast);
  CHECK(fc.parse_failures == 1);
  CHECK(*fc.smape == doctest::Approx(2.0));
  CHECK(*fc.adjusted_smape == doctest::Approx(2.2));

  const auto& trend = report.per_task.at(Task::kTrend);
  CHECK(trend.parse_failures == 1);
  CHECK(*trend.accuracy == doctest::Approx(0.0));  // denominator is n_items
}

TEST_CASE("provider failures are tallied per item") {
  std::vector<EvalItem> items = {mcq_item("e-0", "A"), mcq_item("e-1", "B")};
  items[1].series = series({5, 4, 3});
  int calls = 0;
  corpus::StubChatClient flaky([&](const std::vector<ChatMessage>&) -> std::string {
    if (++calls == 1) throw ProviderError("transient");
    return "A";
  });
  const auto report = run_benchmark(items, flaky, PromptPlan{}, {}, 1);
  const auto& m = report.per_task.at(Task::kTrend);
  CHECK(m.item_failures == 1);
  CHECK(m.scored == 1);
  CHECK(m.n_items == 2);
}

TEST_CASE("judge-scored tasks need a judge and use its scores") {
  std::vector<EvalItem> items = {judge_item("j-3")};
  auto model = corpus::StubChatClient::fixed("An answer.");
  CHECK_THROWS_AS(run_benchmark(items, *model, PromptPlan{}, {}, 1),
                  ConfigError);

  auto judge = corpus::StubChatClient::fixed("Score: 7.5");
  const auto report =
      run_benchmark(items, *model, PromptPlan{}, {}, 1, judge.get());
  CHECK(*report.per_task.at(Task::kOpenEnded).judge_mean ==
        doctest::Approx(7.5));
}

TEST_CASE("oversampling a task is a configuration error") {
  std::vector<EvalItem> items = {mcq_item("o-0", "A")};
  auto model = corpus::StubChatClient::fixed("A");
  SampleSpec sample;
  sample.per_task = {{Task::kTrend, 5}};
  CHECK_THROWS_AS(run_benchmark(items, *model, PromptPlan{}, sample, 1),
                  ConfigError);
}

namespace {

MetricReport report_with(double acc, double sm) {
  MetricReport r;
  TaskMetrics trend;
  trend.n_items = 10;
  trend.accuracy = acc;
  r.per_task[Task::kTrend] = trend;
  TaskMetrics fc;
  fc.n_items = 10;
  fc.smape = sm;
  fc.adjusted_smape = sm * 1.1;
  r.per_task[Task::kForecast] = fc;
  return r;
}

}  // namespace

TEST_CASE("aggregate_runs reports mean and sample std per metric") {
  const auto summary = aggregate_runs(
      {report_with(0.6, 0.30), report_with(0.7, 0.32), report_with(0.8, 0.34)});
  const auto& acc = summary.at("trend.accuracy");
  CHECK(acc.mean == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(acc.sample_std == doctest::Approx(0.1).epsilon(1e-9));
  const auto& sm = summary.at("forecast.smape");
  CHECK(sm.mean == doctest::Approx(0.32).epsilon(1e-12));
  CHECK(sm.sample_std == doctest::Approx(0.02).epsilon(1e-9));
  CHECK(summary.count("forecast.adjusted_smape") == 1);
}

TEST_CASE("aggregate_runs rejects thin or mismatched inputs") {
  CHECK_THROWS_AS(aggregate_runs({report_with(0.6, 0.3)}), MetricError);
  auto other = report_with(0.6, 0.3);
  other.per_task.erase(Task::kForecast);
  CHECK_THROWS_AS(aggregate_runs({report_with(0.7, 0.3), other}), MetricError);
}

TEST_CASE("eval items survive a JSON round trip") {
  const auto item = forecast_item("rt-0", {1.25, -2.5});
  const auto back =
      nlohmann::json::parse(nlohmann::json(item).dump()).get<EvalItem>();
  CHECK(back.id == item.id);
  CHECK(back.task == item.task);
  CHECK(std::get<std::vector<double>>(back.gold) ==
        std::get<std::vector<double>>(item.gold));
  CHECK(back.instructed_length == item.instructed_length);
  REQUIRE(back.series.has_value());
  CHECK(back.series->values == item.series->values);
}
