#pragma once

#include <stdexcept>
#include <string>

namespace tsforge {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SynthesisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProviderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MixingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tsforge
