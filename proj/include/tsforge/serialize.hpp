#pragma once

#include "tsforge/synthkit.hpp"

#include <string>

namespace tsforge::corpus {

using synthkit::TimeSeries;

// Text encoding for series embedded in prompts: fixed-point numbers joined
// by a delimiter inside wrapper tags, e.g. "<ts>1.00, 2.50</ts>".
struct SerializationSpec {
  int decimals = 2;
  std::string delimiter = ", ";
  std::string open = "<ts>";
  std::string close = "</ts>";

  void validate() const;
};

std::string serialize_series(const TimeSeries& ts,
                             const SerializationSpec& spec = {});

// Inverse of serialize_series up to quantization. Tolerates extra
// whitespace around delimiters; throws ParseError (with the element index)
// on malformed numbers or missing wrappers.
TimeSeries parse_series(const std::string& text,
                        const SerializationSpec& spec = {});

}  // namespace tsforge::corpus
