#pragma once

#include "tsforge/records.hpp"
#include "tsforge/services.hpp"

#include <string>
#include <vector>

namespace tsforge::corpus {

struct ChunkSpec {
  double target_tokens = 400.0;
  int overlap_paragraphs = 0;  // trailing paragraphs repeated in next chunk
};

// Splits a document into paragraphs (blank-line separated), regroups them
// into chunks near target_tokens with the stated paragraph overlap, and
// wraps each chunk as a knowledge-kind record. An optional cleaning client
// rewrites each chunk; chunks that come back empty are dropped.
std::vector<CorpusRecord> ingest_knowledge(const std::string& document,
                                           const ChunkSpec& spec,
                                           ChatClient* cleaner = nullptr,
                                           const std::string& source_id = "");

// Paragraph-boundary chunking, exposed for tests.
std::vector<std::string> chunk_paragraphs(const std::string& document,
                                          const ChunkSpec& spec);

}  // namespace tsforge::corpus
