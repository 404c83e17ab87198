#include "tsforge/profiler.hpp"

#include "tsforge/errors.hpp"
#include "tsforge/textutil.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace tsforge::profiler {

namespace {

double population_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / v.size());
}

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
  return 0.5 * (v[n / 2 - 1] + hi);
}

}  // namespace

std::vector<double> autocorrelation(const std::vector<double>& values,
                                    int max_lag) {
  const int n = static_cast<int>(values.size());
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double x : values) var += (x - mean) * (x - mean);
  var /= n;
  if (var <= 0.0) return {};

  std::vector<double> acf;
  acf.reserve(static_cast<std::size_t>(max_lag) + 1);
  for (int k = 0; k <= max_lag && k < n; ++k) {
    double acc = 0.0;
    for (int t = 0; t + k < n; ++t) {
      acc += (values[t] - mean) * (values[t + k] - mean);
    }
    acc /= (n - k);
    acf.push_back(std::clamp(acc / var, -1.0, 1.0));
  }
  return acf;
}

TrendFeature extract_trend(const TimeSeries& ts, double deadband) {
  const int n = static_cast<int>(ts.values.size());
  TrendFeature f;
  const double tbar = (n - 1) / 2.0;
  const double xbar =
      std::accumulate(ts.values.begin(), ts.values.end(), 0.0) / n;
  double sxt = 0.0;
  double stt = 0.0;
  double sxx = 0.0;
  for (int t = 0; t < n; ++t) {
    sxt += (t - tbar) * (ts.values[t] - xbar);
    stt += (t - tbar) * (t - tbar);
    sxx += (ts.values[t] - xbar) * (ts.values[t] - xbar);
  }
  if (sxx <= 0.0) {
    f.slope = 0.0;
    f.intercept = xbar;
    f.r2 = 0.0;
    f.direction = TrendDirection::kStable;
    return f;
  }
  f.slope = sxt / stt;
  f.intercept = xbar - f.slope * tbar;
  f.r2 = std::clamp((sxt * sxt) / (stt * sxx), 0.0, 1.0);
  const double sd = std::sqrt(sxx / n);
  if (std::fabs(f.slope) * (n - 1) < deadband * sd) {
    f.direction = TrendDirection::kStable;
  } else {
    f.direction = f.slope > 0 ? TrendDirection::kIncreasing
                              : TrendDirection::kDecreasing;
  }
  return f;
}

SeasonalityFeature detect_seasonality(const TimeSeries& ts, int max_lag,
                                      double floor) {
  SeasonalityFeature f;
  const int n = static_cast<int>(ts.values.size());
  max_lag = std::min(max_lag, n / 2);
  if (max_lag < 2) return f;
  // One extra lag so the local-maximum test has a right neighbor at max_lag.
  const int extent = std::min(max_lag + 1, n - 1);
  const std::vector<double> acf = autocorrelation(ts.values, extent);
  if (acf.empty()) return f;  // zero variance
  for (int k = 2; k <= max_lag && k < static_cast<int>(acf.size()); ++k) {
    if (acf[k] < floor) continue;
    const bool left_ok = acf[k] >= acf[k - 1];
    const bool right_ok =
        k + 1 >= static_cast<int>(acf.size()) || acf[k] >= acf[k + 1];
    if (left_ok && right_ok) {
      f.period = k;
      f.strength = acf[k];
      break;
    }
  }
  return f;
}

VolatilityFeature measure_volatility(const TimeSeries& ts, double threshold) {
  VolatilityFeature f;
  const double sd = population_std(ts.values);
  if (sd <= 0.0) return f;
  std::vector<double> diffs(ts.values.size() - 1);
  for (std::size_t i = 0; i + 1 < ts.values.size(); ++i) {
    diffs[i] = ts.values[i + 1] - ts.values[i];
  }
  f.diff_ratio = population_std(diffs) / sd;
  f.high = f.diff_ratio >= threshold;
  return f;
}

OutlierSet detect_outliers(const TimeSeries& ts, double z_thresh) {
  if (z_thresh <= 0.0) throw ConfigError("detect_outliers: z_thresh <= 0");
  OutlierSet out;
  const int n = static_cast<int>(ts.values.size());
  const double med = median_of(ts.values);
  std::vector<double> dev(ts.values.size());
  for (int i = 0; i < n; ++i) dev[i] = std::fabs(ts.values[i] - med);
  const double mad = median_of(dev);

  double center = med;
  double scale = 1.4826 * mad;
  if (scale <= 0.0) {
    center = std::accumulate(ts.values.begin(), ts.values.end(), 0.0) / n;
    scale = population_std(ts.values);
    if (scale <= 0.0) return out;  // constant series
  }
  for (int i = 0; i < n; ++i) {
    const double z = (ts.values[i] - center) / scale;
    if (std::fabs(z) >= z_thresh) {
      out.indices.push_back(i);
      out.zscores.push_back(z);
    }
  }
  return out;
}

FeatureProfile profile_series(const TimeSeries& ts,
                              const ProfilerConfig& config) {
  FeatureProfile p;
  const int n = static_cast<int>(ts.values.size());
  p.trend = extract_trend(ts, config.trend_deadband);
  const int max_lag = config.max_lag > 0 ? config.max_lag : n / 2;
  p.seasonality = detect_seasonality(ts, max_lag, config.seasonality_floor);
  p.volatility = measure_volatility(ts, config.volatility_threshold);
  p.outliers = detect_outliers(ts, config.outlier_z);
  const auto peak = std::max_element(ts.values.begin(), ts.values.end());
  const auto trough = std::min_element(ts.values.begin(), ts.values.end());
  p.peak_index = static_cast<int>(peak - ts.values.begin());
  p.peak_value = *peak;
  p.trough_index = static_cast<int>(trough - ts.values.begin());
  p.trough_value = *trough;
  p.mean = std::accumulate(ts.values.begin(), ts.values.end(), 0.0) / n;
  p.stdev = population_std(ts.values);
  return p;
}

std::string direction_name(TrendDirection d) {
  switch (d) {
    case TrendDirection::kIncreasing: return "increasing";
    case TrendDirection::kDecreasing: return "decreasing";
    case TrendDirection::kStable: return "stable";
  }
  return "stable";
}

void to_json(nlohmann::json& j, const FeatureProfile& p) {
  j = nlohmann::json{
      {"trend",
       {{"slope", p.trend.slope},
        {"intercept", p.trend.intercept},
        {"r2", p.trend.r2},
        {"direction", direction_name(p.trend.direction)}}},
      {"seasonality",
       {{"period", p.seasonality.period ? nlohmann::json(*p.seasonality.period)
                                        : nlohmann::json(nullptr)},
        {"strength", p.seasonality.strength}}},
      {"volatility",
       {{"diff_ratio", p.volatility.diff_ratio},
        {"klass", p.volatility.high ? "high" : "low"}}},
      {"outliers",
       {{"indices", p.outliers.indices}, {"zscores", p.outliers.zscores}}},
      {"peak", {{"index", p.peak_index}, {"value", p.peak_value}}},
      {"trough", {{"index", p.trough_index}, {"value", p.trough_value}}},
      {"mean", p.mean},
      {"std", p.stdev}};
}

void from_json(const nlohmann::json& j, FeatureProfile& p) {
  const auto& t = j.at("trend");
  p.trend.slope = t.at("slope").get<double>();
  p.trend.intercept = t.at("intercept").get<double>();
  p.trend.r2 = t.at("r2").get<double>();
  const std::string dir = t.at("direction").get<std::string>();
  p.trend.direction = dir == "increasing" ? TrendDirection::kIncreasing
                      : dir == "decreasing" ? TrendDirection::kDecreasing
                                            : TrendDirection::kStable;
  const auto& s = j.at("seasonality");
  if (!s.at("period").is_null()) p.seasonality.period = s.at("period").get<int>();
  p.seasonality.strength = s.at("strength").get<double>();
  const auto& v = j.at("volatility");
  p.volatility.diff_ratio = v.at("diff_ratio").get<double>();
  p.volatility.high = v.at("klass").get<std::string>() == "high";
  const auto& o = j.at("outliers");
  p.outliers.indices = o.at("indices").get<std::vector<int>>();
  p.outliers.zscores = o.at("zscores").get<std::vector<double>>();
  p.peak_index = j.at("peak").at("index").get<int>();
  p.peak_value = j.at("peak").at("value").get<double>();
  p.trough_index = j.at("trough").at("index").get<int>();
  p.trough_value = j.at("trough").at("value").get<double>();
  p.mean = j.at("mean").get<double>();
  p.stdev = j.at("std").get<double>();
}

Perspective perspective_from_name(const std::string& name) {
  if (name == "trend") return Perspective::kTrend;
  if (name == "seasonality") return Perspective::kSeasonality;
  if (name == "volatility") return Perspective::kVolatility;
  if (name == "outliers") return Perspective::kOutliers;
  if (name == "summary") return Perspective::kSummary;
  throw ConfigError("unknown perspective: " + name);
}

std::string perspective_name(Perspective p) {
  switch (p) {
    case Perspective::kTrend: return "trend";
    case Perspective::kSeasonality: return "seasonality";
    case Perspective::kVolatility: return "volatility";
    case Perspective::kOutliers: return "outliers";
    case Perspective::kSummary: return "summary";
  }
  return "summary";
}

namespace {

const char* kBuiltinTemplates = R"(
trend: The series trend is {direction}, with a slope of {slope} per step (r-squared {r2}).
trend: Overall the values are {direction}; a least-squares fit gives slope {slope} and r-squared {r2}.
trend: Direction: {direction}. The fitted line has slope {slope} with a goodness of fit of {r2}.
trend: A linear fit (slope {slope}, r-squared {r2}) indicates {direction} movement across the window.
trend: Across the observed window the level is {direction}, sloping at {slope} per step (fit quality {r2}).
seasonality: A repeating cycle of length {period} is present (autocorrelation {strength}).
seasonality: The series is periodic with period {period}; the seasonal strength is {strength}.
seasonality: Seasonal behavior recurs every {period} steps, with correlation {strength} at that lag.
seasonality: Lag {period} shows a pronounced autocorrelation peak of {strength}, indicating seasonality.
seasonality: Periodicity detected: cycle length {period}, strength {strength}.
seasonality_none: No clear periodic pattern is detected in the series.
seasonality_none: The series shows no notable seasonality.
seasonality_none: There is no repeating cycle strong enough to register as seasonal.
seasonality_none: Seasonal structure is absent from this window.
volatility: Volatility is {klass}: the step-to-step change ratio is {diff_ratio}.
volatility: The series exhibits {klass} volatility with a difference ratio of {diff_ratio}.
volatility: Fluctuation level: {klass} (std of first differences over std of values: {diff_ratio}).
volatility: With a diff-to-level ratio of {diff_ratio}, the fluctuations are {klass}.
outliers: There are {count} outlying points, at positions {indices}.
outliers: {count} observations deviate sharply from the rest; they sit at indices {indices}.
outliers: Anomalous values occur at {indices} ({count} in total).
outliers: The series contains {count} outliers located at {indices}.
outliers_none: No outliers stand out from the general pattern.
outliers_none: The series is free of anomalous spikes or drops.
outliers_none: Every point stays within the expected range; nothing registers as an outlier.
outliers_none: There are no significant deviations from the overall pattern.
summary: Mean {mean}, std {std}; the maximum {peak_value} occurs at index {peak_index} and the minimum {trough_value} at index {trough_index}; overall the series is {direction}.
summary: The series (mean {mean}, std {std}) peaks at {peak_value} (index {peak_index}), bottoms out at {trough_value} (index {trough_index}), and is {direction} overall.
summary: Level summary: average {mean} with spread {std}; high point {peak_value} at {peak_index}, low point {trough_value} at {trough_index}; general direction {direction}.
summary: Averaging {mean} with a standard deviation of {std}, the series reaches {peak_value} at step {peak_index} and falls to {trough_value} at step {trough_index}; it is {direction} in aggregate.
)";

std::string substitute(std::string text, const std::string& key,
                       const std::string& value) {
  const std::string token = "{" + key + "}";
  std::size_t pos = 0;
  while ((pos = text.find(token, pos)) != std::string::npos) {
    text.replace(pos, token.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace

TemplateSet TemplateSet::builtin() {
  TemplateSet set;
  std::istringstream in(kBuiltinTemplates);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    set.families_[trim(line.substr(0, colon))].push_back(
        trim(line.substr(colon + 1)));
  }
  return set;
}

TemplateSet TemplateSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("template file not found: " + path);
  TemplateSet set;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    set.families_[trim(line.substr(0, colon))].push_back(
        trim(line.substr(colon + 1)));
  }
  for (const char* required :
       {"trend", "seasonality", "seasonality_none", "volatility", "outliers",
        "outliers_none", "summary"}) {
    if (set.families_.find(required) == set.families_.end()) {
      throw ConfigError(std::string("template file missing family: ") +
                        required);
    }
  }
  return set;
}

const std::vector<std::string>& TemplateSet::family(
    const std::string& name) const {
  const auto it = families_.find(name);
  if (it == families_.end() || it->second.empty()) {
    throw ConfigError("no templates for family: " + name);
  }
  return it->second;
}

std::string render_structured(const FeatureProfile& profile, Perspective p,
                              std::uint64_t phrasing_seed,
                              const TemplateSet& templates) {
  std::string family = perspective_name(p);
  if (p == Perspective::kSeasonality && !profile.seasonality.period) {
    family = "seasonality_none";
  }
  if (p == Perspective::kOutliers && profile.outliers.indices.empty()) {
    family = "outliers_none";
  }
  const auto& pool = templates.family(family);
  std::string text = pool[phrasing_seed % pool.size()];

  text = substitute(text, "direction", direction_name(profile.trend.direction));
  text = substitute(text, "slope", format_fixed(profile.trend.slope, 2));
  text = substitute(text, "r2", format_fixed(profile.trend.r2, 2));
  if (profile.seasonality.period) {
    text = substitute(text, "period", std::to_string(*profile.seasonality.period));
    text = substitute(text, "strength",
                      format_fixed(profile.seasonality.strength, 2));
  }
  text = substitute(text, "diff_ratio",
                    format_fixed(profile.volatility.diff_ratio, 2));
  text = substitute(text, "klass", profile.volatility.high ? "high" : "low");
  text = substitute(text, "count",
                    std::to_string(profile.outliers.indices.size()));
  std::string idx_list;
  for (std::size_t i = 0; i < profile.outliers.indices.size(); ++i) {
    if (i) idx_list += ", ";
    idx_list += std::to_string(profile.outliers.indices[i]);
  }
  text = substitute(text, "indices", idx_list);
  text = substitute(text, "mean", format_fixed(profile.mean, 2));
  text = substitute(text, "std", format_fixed(profile.stdev, 2));
  text = substitute(text, "peak_value", format_fixed(profile.peak_value, 2));
  text = substitute(text, "peak_index", std::to_string(profile.peak_index));
  text = substitute(text, "trough_value",
                    format_fixed(profile.trough_value, 2));
  text = substitute(text, "trough_index",
                    std::to_string(profile.trough_index));
  return text;
}

}  // namespace tsforge::profiler
