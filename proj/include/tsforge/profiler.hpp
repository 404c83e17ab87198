#pragma once

#include "tsforge/synthkit.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tsforge::profiler {

using synthkit::TimeSeries;

enum class TrendDirection { kIncreasing, kDecreasing, kStable };

struct TrendFeature {
  double slope = 0.0;      // per raw index step
  double intercept = 0.0;
  double r2 = 0.0;
  TrendDirection direction = TrendDirection::kStable;
};

struct SeasonalityFeature {
  std::optional<int> period;
  double strength = 0.0;  // acf at the detected lag
};

struct VolatilityFeature {
  double diff_ratio = 0.0;  // std of first differences / std of values
  bool high = false;
};

struct OutlierSet {
  std::vector<int> indices;       // strictly increasing
  std::vector<double> zscores;    // matching robust z-scores
};

struct FeatureProfile {
  TrendFeature trend;
  SeasonalityFeature seasonality;
  VolatilityFeature volatility;
  OutlierSet outliers;
  int peak_index = 0;
  double peak_value = 0.0;
  int trough_index = 0;
  double trough_value = 0.0;
  double mean = 0.0;
  double stdev = 0.0;
};

struct ProfilerConfig {
  double trend_deadband = 0.2;       // stable iff |slope|*(n-1) < deadband*std
  double seasonality_floor = 0.3;    // minimum acf at the detected lag
  double volatility_threshold = 1.0;
  double outlier_z = 3.0;
  int max_lag = 0;                   // 0 -> length/2
};

// Sample autocorrelation at lags 0..max_lag, mean-removed, each lag's
// cross product averaged over its n-k terms. Zero-variance input yields
// an empty vector.
std::vector<double> autocorrelation(const std::vector<double>& values,
                                    int max_lag);

TrendFeature extract_trend(const TimeSeries& ts, double deadband = 0.2);
SeasonalityFeature detect_seasonality(const TimeSeries& ts, int max_lag,
                                      double floor = 0.3);
VolatilityFeature measure_volatility(const TimeSeries& ts,
                                     double threshold = 1.0);
OutlierSet detect_outliers(const TimeSeries& ts, double z_thresh = 3.0);

FeatureProfile profile_series(const TimeSeries& ts,
                              const ProfilerConfig& config = {});

std::string direction_name(TrendDirection d);

void to_json(nlohmann::json& j, const FeatureProfile& p);
void from_json(const nlohmann::json& j, FeatureProfile& p);

enum class Perspective { kTrend, kSeasonality, kVolatility, kOutliers,
                         kSummary };

Perspective perspective_from_name(const std::string& name);
std::string perspective_name(Perspective p);

// Phrasing templates for structured descriptions, >= 4 phrasings per
// perspective. Loadable from a plain-text asset file with lines of the
// form "family: template with {placeholders}".
class TemplateSet {
 public:
  static TemplateSet builtin();
  static TemplateSet load(const std::string& path);

  const std::vector<std::string>& family(const std::string& name) const;

 private:
  std::map<std::string, std::vector<std::string>> families_;
};

// Renders one perspective of a profile as text; the phrasing is selected
// by seed and every embedded number round-trips to the profile at two
// decimals.
std::string render_structured(const FeatureProfile& profile, Perspective p,
                              std::uint64_t phrasing_seed,
                              const TemplateSet& templates =
                                  TemplateSet::builtin());

}  // namespace tsforge::profiler
