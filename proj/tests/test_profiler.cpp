#include <doctest.h>

#include "tsforge/profiler.hpp"
#include "tsforge/rng.hpp"
#include "tsforge/synthkit.hpp"
#include "tsforge/textutil.hpp"

#include <cmath>
#include <set>
#include <string>
#include <vector>

using namespace tsforge;
using namespace tsforge::profiler;

namespace {

TimeSeries series(std::vector<double> values) {
  TimeSeries ts;
  ts.values = std::move(values);
  return ts;
}

TimeSeries sine(int length, double period) {
  TimeSeries ts;
  ts.values.resize(length);
  for (int t = 0; t < length; ++t) {
    ts.values[t] = std::sin(2.0 * M_PI * t / period);
  }
  return ts;
}

TimeSeries noise(int length, std::uint64_t seed) {
  TimeSeries ts;
  Rng rng(seed);
  ts.values.resize(length);
  for (auto& v : ts.values) v = rng.normal();
  return ts;
}

// Pulls every number out of a rendered description.
std::vector<std::string> numbers_in(const std::string& text) {
  std::vector<std::string> found;
  std::size_t i = 0;
  while (i < text.size()) {
    const bool starts =
        std::isdigit(static_cast<unsigned char>(text[i])) ||
        (text[i] == '-' && i + 1 < text.size() &&
         std::isdigit(static_cast<unsigned char>(text[i + 1])));
    if (!starts) {
      ++i;
      continue;
    }
    std::size_t j = i;
    if (text[j] == '-') ++j;
    while (j < text.size() &&
           (std::isdigit(static_cast<unsigned char>(text[j])) ||
            text[j] == '.')) {
      ++j;
    }
    std::string token = text.substr(i, j - i);
    while (!token.empty() && token.back() == '.') token.pop_back();
    found.push_back(token);
    i = j;
  }
  return found;
}

}  // namespace

TEST_CASE("trend of a perfect ascending line") {
  const auto f = extract_trend(series({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}));
  CHECK(f.slope == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.direction == TrendDirection::kIncreasing);
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("trend of a constant series") {
  const auto f = extract_trend(series(std::vector<double>(16, 3.5)));
  CHECK(f.slope == 0.0);
  CHECK(f.r2 == 0.0);
  CHECK(f.direction == TrendDirection::kStable);
}

TEST_CASE("trend of a descending line") {
  std::vector<double> values(64);
  for (int t = 0; t < 64; ++t) values[t] = 10.0 - t;
  const auto f = extract_trend(series(values));
  CHECK(f.direction == TrendDirection::kDecreasing);
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("seasonality of a clean sinusoid") {
  const auto f = detect_seasonality(sine(240, 24.0), 120);
  REQUIRE(f.period.has_value());
  CHECK(*f.period == 24);
  CHECK(f.strength >= 0.9);
}

TEST_CASE("iid noise rarely triggers seasonality") {
  int detections = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto f = detect_seasonality(noise(512, seed), 256);
    if (f.period) ++detections;
  }
  CHECK(detections <= 10);  // >= 95% of trials clean
}

TEST_CASE("constant series has no seasonality") {
  const auto f = detect_seasonality(series(std::vector<double>(64, 1.0)), 32);
  CHECK_FALSE(f.period.has_value());
}

TEST_CASE("volatility of a straight line is zero") {
  std::vector<double> values(32);
  for (int t = 0; t < 32; ++t) values[t] = t;
  const auto f = measure_volatility(series(values));
  CHECK(f.diff_ratio == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_FALSE(f.high);
}

TEST_CASE("volatility of an alternating series is 2") {
  // n = 64: std of values is exactly 1; the 63 diffs are 32x(-2), 31x(+2),
  // so their population std is exactly sqrt(4 - (2/63)^2).
  std::vector<double> values(64);
  for (int t = 0; t < 64; ++t) values[t] = t % 2 == 0 ? 1.0 : -1.0;
  const auto f = measure_volatility(series(values), 1.0);
  const double expected = std::sqrt(4.0 - (2.0 / 63) * (2.0 / 63));
  CHECK(f.diff_ratio == doctest::Approx(expected).epsilon(1e-12));
  CHECK(f.high);
}

TEST_CASE("volatility of a dense sinusoid is low") {
  const auto f = measure_volatility(sine(256, 64.0), 1.0);
  CHECK(f.diff_ratio < 0.25);
  CHECK_FALSE(f.high);
}

TEST_CASE("single spike among zeros is the only outlier") {
  std::vector<double> values(64, 0.0);
  values[7] = 100.0;
  const auto out = detect_outliers(series(values), 3.0);
  REQUIRE(out.indices.size() == 1);
  CHECK(out.indices[0] == 7);
  CHECK(std::fabs(out.zscores[0]) >= 3.0);
}

TEST_CASE("a monotone line has no outliers") {
  std::vector<double> values(64);
  for (int t = 0; t < 64; ++t) values[t] = t;
  CHECK(detect_outliers(series(values), 3.0).indices.empty());
}

TEST_CASE("a constant series has no outliers") {
  CHECK(detect_outliers(series(std::vector<double>(32, 5.0)), 3.0)
            .indices.empty());
}

TEST_CASE("structured trend text names the direction and slope") {
  std::vector<double> values(16);
  for (int t = 0; t < 16; ++t) values[t] = 0.8 * t;
  auto profile = profile_series(series(values));
  REQUIRE(profile.trend.direction == TrendDirection::kIncreasing);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto text = render_structured(profile, Perspective::kTrend, seed);
    CHECK(text.find("increas") != std::string::npos);
    CHECK(text.find("0.80") != std::string::npos);
  }
}

TEST_CASE("different phrasing seeds change only the surface form") {
  auto profile = profile_series(sine(240, 24.0));
  const auto a = render_structured(profile, Perspective::kSummary, 0);
  const auto b = render_structured(profile, Perspective::kSummary, 1);
  CHECK(a != b);
  CHECK(numbers_in(a) == numbers_in(b));
}

TEST_CASE("seasonality text names the detected lag") {
  auto profile = profile_series(sine(240, 24.0));
  REQUIRE(profile.seasonality.period.has_value());
  REQUIRE(*profile.seasonality.period == 24);
  const auto text =
      render_structured(profile, Perspective::kSeasonality, 3);
  CHECK(text.find("24") != std::string::npos);
}

TEST_CASE("profiling is invariant under positive affine maps") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto base = noise(128, seed);
    TimeSeries scaled;
    scaled.values = base.values;
    for (auto& v : scaled.values) v = 3.0 * v + 11.0;

    const auto p = profile_series(base);
    const auto q = profile_series(scaled);
    CHECK(p.trend.direction == q.trend.direction);
    CHECK(q.trend.slope == doctest::Approx(3.0 * p.trend.slope).epsilon(1e-9));
    CHECK(p.seasonality.period.has_value() ==
          q.seasonality.period.has_value());
    if (p.seasonality.period) {
      CHECK(*p.seasonality.period == *q.seasonality.period);
    }
    CHECK(p.outliers.indices == q.outliers.indices);
    CHECK(p.volatility.high == q.volatility.high);
    CHECK(q.volatility.diff_ratio ==
          doctest::Approx(p.volatility.diff_ratio).epsilon(1e-9));
  }
}

TEST_CASE("negating a series mirrors the trend and keeps structure") {
  std::vector<double> values(64);
  for (int t = 0; t < 64; ++t) {
    values[t] = 0.5 * t + std::sin(2.0 * M_PI * t / 16.0);
  }
  const auto base = series(values);
  TimeSeries negated;
  negated.values = values;
  for (auto& v : negated.values) v = -v;

  const auto p = profile_series(base);
  const auto q = profile_series(negated);
  CHECK(p.trend.direction == TrendDirection::kIncreasing);
  CHECK(q.trend.direction == TrendDirection::kDecreasing);
  CHECK(p.seasonality.period.has_value() == q.seasonality.period.has_value());
  if (p.seasonality.period) {
    CHECK(*p.seasonality.period == *q.seasonality.period);
  }
  CHECK(p.outliers.indices == q.outliers.indices);
  CHECK(q.volatility.diff_ratio ==
        doctest::Approx(p.volatility.diff_ratio).epsilon(1e-12));
}

TEST_CASE("every number in a rendered description matches the profile") {
  // 1,000 random profiles x 5 perspectives: each embedded number must
  // round-trip to a profile fact at 2 decimals.
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto ts = noise(64, seed);
    const auto profile = profile_series(ts);

    std::set<std::string> facts = {
        format_fixed(profile.trend.slope, 2),
        format_fixed(profile.trend.r2, 2),
        format_fixed(profile.volatility.diff_ratio, 2),
        format_fixed(profile.mean, 2),
        format_fixed(profile.stdev, 2),
        format_fixed(profile.peak_value, 2),
        format_fixed(profile.trough_value, 2),
        std::to_string(profile.peak_index),
        std::to_string(profile.trough_index),
        std::to_string(profile.outliers.indices.size()),
    };
    if (profile.seasonality.period) {
      facts.insert(std::to_string(*profile.seasonality.period));
      facts.insert(format_fixed(profile.seasonality.strength, 2));
    }
    for (int idx : profile.outliers.indices) {
      facts.insert(std::to_string(idx));
    }

    for (auto perspective :
         {Perspective::kTrend, Perspective::kSeasonality,
          Perspective::kVolatility, Perspective::kOutliers,
          Perspective::kSummary}) {
      const auto text = render_structured(profile, perspective, seed);
      for (const auto& number : numbers_in(text)) {
        CHECK_MESSAGE(facts.count(number) == 1,
                      "unmatched number '" << number << "' in: " << text);
        ++checked;
      }
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("profiles survive a JSON round trip") {
  const auto profile = profile_series(sine(240, 24.0));
  const nlohmann::json j = profile;
  const auto back = j.get<FeatureProfile>();
  CHECK(back.trend.slope == profile.trend.slope);
  CHECK(back.seasonality.period == profile.seasonality.period);
  CHECK(back.outliers.indices == profile.outliers.indices);
  CHECK(back.peak_value == profile.peak_value);
}
