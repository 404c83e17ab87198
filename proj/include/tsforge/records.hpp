#pragma once

#include "tsforge/serialize.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tsforge::corpus {

enum class RecordKind {
  kTs2TextStructured,
  kTs2TextUnstructured,
  kText2Ts,
  kKnowledge,
  kGeneral,
};

std::string kind_name(RecordKind k);
RecordKind kind_from_name(const std::string& name);

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

struct RecordMeta {
  std::uint64_t seed = 0;
  std::string source;       // provenance id, e.g. the series id
  std::string kernel_expr;  // empty for non-synthetic records
  double token_estimate = 0.0;
};

// One chat-formatted training example.
struct CorpusRecord {
  std::string id;
  RecordKind kind = RecordKind::kKnowledge;
  std::vector<ChatMessage> messages;
  RecordMeta meta;
};

void to_json(nlohmann::json& j, const CorpusRecord& r);
void from_json(const nlohmann::json& j, CorpusRecord& r);

// Whitespace word count x 1.3; an approximation, reported as such.
double estimate_tokens(const std::string& text);

// Instruction phrasings for the two record directions. Loadable from a
// plain-text file with "ts2text: ..." / "text2ts: ..." lines.
class InstructionPool {
 public:
  static InstructionPool builtin();
  static InstructionPool load(const std::string& path);

  const std::string& pick(const std::string& direction,
                          std::uint64_t seed) const;

 private:
  std::map<std::string, std::vector<std::string>> pools_;
};

enum class RecordDirection { kTs2Text, kText2Ts };

// Builds one chat record from an aligned (series, description) pair. The
// text2ts direction reuses the identical pair with the roles swapped, so
// both directions share the same provenance id.
CorpusRecord build_record(const TimeSeries& series,
                          const std::string& description,
                          RecordDirection direction, RecordKind kind,
                          std::uint64_t seed,
                          const SerializationSpec& spec = {},
                          const InstructionPool& instructions =
                              InstructionPool::builtin(),
                          const std::string& source_id = "");

struct MixSpec {
  std::map<RecordKind, double> ratios;  // must sum to 1 +- 1e-9
  int shard_size = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

// Largest-remainder apportionment of `total` across the ratio map;
// deterministic (ties broken by kind order).
std::map<RecordKind, int> apportion(const MixSpec& mix, int total);

// Selects per-kind records by seeded sampling without replacement,
// shuffles globally, and writes JSONL shards of shard_size records into
// out_dir (shard-00000.jsonl, ...). Returns the shard paths in order.
std::vector<std::string> mix_and_shard(
    const std::map<RecordKind, std::vector<CorpusRecord>>& by_kind,
    const MixSpec& mix, int total, const std::string& out_dir);

}  // namespace tsforge::corpus
