#include "tsforge/knowledge.hpp"

#include "tsforge/errors.hpp"
#include "tsforge/textutil.hpp"

#include <algorithm>
#include <sstream>

namespace tsforge::corpus {

namespace {

std::vector<std::string> split_paragraphs(const std::string& document) {
  std::vector<std::string> paragraphs;
  std::string current;
  std::istringstream in(document);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) {
      if (!current.empty()) {
        paragraphs.push_back(trim(current));
        current.clear();
      }
    } else {
      if (!current.empty()) current += "\n";
      current += line;
    }
  }
  if (!current.empty()) paragraphs.push_back(trim(current));
  return paragraphs;
}

}  // namespace

std::vector<std::string> chunk_paragraphs(const std::string& document,
                                          const ChunkSpec& spec) {
  const auto paragraphs = split_paragraphs(document);
  std::vector<std::string> chunks;
  std::size_t i = 0;
  while (i < paragraphs.size()) {
    double tokens = 0.0;
    std::size_t j = i;
    std::string chunk;
    while (j < paragraphs.size()) {
      const double next = estimate_tokens(paragraphs[j]);
      // Always take at least one paragraph per chunk.
      if (j > i && tokens + next > spec.target_tokens) break;
      if (!chunk.empty()) chunk += "\n\n";
      chunk += paragraphs[j];
      tokens += next;
      ++j;
      if (tokens >= spec.target_tokens) break;
    }
    chunks.push_back(chunk);
    if (j >= paragraphs.size()) break;
    const std::size_t consumed = j - i;
    const std::size_t overlap =
        std::min(static_cast<std::size_t>(spec.overlap_paragraphs),
                 consumed - 1);
    i = j - overlap;
  }
  return chunks;
}

std::vector<CorpusRecord> ingest_knowledge(const std::string& document,
                                           const ChunkSpec& spec,
                                           ChatClient* cleaner,
                                           const std::string& source_id) {
  if (trim(document).empty()) {
    throw ConfigError("ingest_knowledge: empty document");
  }
  std::vector<CorpusRecord> records;
  const auto chunks = chunk_paragraphs(document, spec);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    std::string content = chunks[i];
    if (cleaner != nullptr) {
      content = cleaner->complete(
          {{"system",
            "Clean the following text for use as training data. Reply with "
            "the cleaned text only."},
           {"user", content}});
    }
    if (trim(content).empty()) continue;  // cleaned away entirely
    CorpusRecord rec;
    rec.kind = RecordKind::kKnowledge;
    rec.id = "knowledge-" + hex64(fnv1a64(content)) + "-" + std::to_string(i);
    rec.meta.source = source_id;
    rec.messages.push_back(
        {"user", "Study the following time series reference material."});
    rec.messages.push_back({"assistant", content});
    rec.meta.token_estimate = std::max(estimate_tokens(content), 1.0);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace tsforge::corpus
