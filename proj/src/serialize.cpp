#include "tsforge/serialize.hpp"

#include "tsforge/errors.hpp"
#include "tsforge/textutil.hpp"

#include <cctype>
#include <cstdlib>

namespace tsforge::corpus {

void SerializationSpec::validate() const {
  if (decimals < 0) throw ConfigError("serialization: decimals < 0");
  if (delimiter.empty()) throw ConfigError("serialization: empty delimiter");
  for (char c : delimiter) {
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' ||
        c == '.') {
      throw ConfigError("serialization: delimiter must not contain digits, "
                        "signs, or decimal points");
    }
  }
}

std::string serialize_series(const TimeSeries& ts,
                             const SerializationSpec& spec) {
  spec.validate();
  std::string out = spec.open;
  for (std::size_t i = 0; i < ts.values.size(); ++i) {
    if (i) out += spec.delimiter;
    out += format_fixed(ts.values[i], spec.decimals);
  }
  out += spec.close;
  return out;
}

namespace {

std::vector<std::string> split_elements(const std::string& body,
                                        const std::string& delimiter) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = body.find(delimiter, start);
    if (pos == std::string::npos) {
      parts.push_back(body.substr(start));
      break;
    }
    parts.push_back(body.substr(start, pos - start));
    start = pos + delimiter.size();
  }
  return parts;
}

}  // namespace

TimeSeries parse_series(const std::string& text,
                        const SerializationSpec& spec) {
  spec.validate();
  const std::size_t open_pos = text.find(spec.open);
  if (open_pos == std::string::npos) {
    throw ParseError("parse_series: missing open wrapper " + spec.open);
  }
  const std::size_t body_start = open_pos + spec.open.size();
  const std::size_t close_pos = text.find(spec.close, body_start);
  if (close_pos == std::string::npos) {
    throw ParseError("parse_series: missing close wrapper " + spec.close);
  }
  const std::string body = text.substr(body_start, close_pos - body_start);

  TimeSeries ts;
  if (trim(body).empty()) return ts;

  const auto parts = split_elements(body, trim(spec.delimiter).empty()
                                              ? spec.delimiter
                                              : trim(spec.delimiter));
  ts.values.reserve(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string token = trim(parts[i]);
    if (token.empty()) {
      throw ParseError("parse_series: empty element at index " +
                       std::to_string(i));
    }
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size()) {
      throw ParseError("parse_series: malformed number at element " +
                       std::to_string(i) + ": '" + token + "'");
    }
    ts.values.push_back(v);
  }
  return ts;
}

}  // namespace tsforge::corpus
