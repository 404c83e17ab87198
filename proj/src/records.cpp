#include "tsforge/records.hpp"

#include "tsforge/errors.hpp"
#include "tsforge/rng.hpp"
#include "tsforge/textutil.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace tsforge::corpus {

std::string kind_name(RecordKind k) {
  switch (k) {
    case RecordKind::kTs2TextStructured: return "ts2text_structured";
    case RecordKind::kTs2TextUnstructured: return "ts2text_unstructured";
    case RecordKind::kText2Ts: return "text2ts";
    case RecordKind::kKnowledge: return "knowledge";
    case RecordKind::kGeneral: return "general";
  }
  return "knowledge";
}

RecordKind kind_from_name(const std::string& name) {
  if (name == "ts2text_structured") return RecordKind::kTs2TextStructured;
  if (name == "ts2text_unstructured") return RecordKind::kTs2TextUnstructured;
  if (name == "text2ts") return RecordKind::kText2Ts;
  if (name == "knowledge") return RecordKind::kKnowledge;
  if (name == "general") return RecordKind::kGeneral;
  throw ConfigError("unknown record kind: " + name);
}

void to_json(nlohmann::json& j, const CorpusRecord& r) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : r.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  nlohmann::json meta = {{"seed", r.meta.seed},
                         {"source", r.meta.source},
                         {"token_estimate", r.meta.token_estimate}};
  if (!r.meta.kernel_expr.empty()) meta["kernel_expr"] = r.meta.kernel_expr;
  j = nlohmann::json{{"id", r.id},
                     {"kind", kind_name(r.kind)},
                     {"messages", messages},
                     {"meta", meta}};
}

void from_json(const nlohmann::json& j, CorpusRecord& r) {
  r.id = j.at("id").get<std::string>();
  r.kind = kind_from_name(j.at("kind").get<std::string>());
  r.messages.clear();
  for (const auto& m : j.at("messages")) {
    r.messages.push_back({m.at("role").get<std::string>(),
                          m.at("content").get<std::string>()});
  }
  const auto& meta = j.at("meta");
  r.meta.seed = meta.at("seed").get<std::uint64_t>();
  r.meta.source = meta.value("source", "");
  r.meta.kernel_expr = meta.value("kernel_expr", "");
  r.meta.token_estimate = meta.at("token_estimate").get<double>();
}

double estimate_tokens(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  std::size_t words = 0;
  while (in >> word) ++words;
  return static_cast<double>(words) * 1.3;
}

namespace {

const char* kBuiltinInstructions = R"(
ts2text: Describe the temporal characteristics of the following time series.
ts2text: Summarize the pattern shown by this series.
ts2text: What does this time series look like? Characterize its behavior.
ts2text: Analyze the series below and report its salient temporal features.
ts2text: Provide a concise description of the dynamics of this time series.
text2ts: Generate a time series that matches the following description.
text2ts: Produce a sequence of values consistent with this characterization.
text2ts: Synthesize a time series exhibiting the described behavior.
text2ts: Write out a series of numbers that realizes this description.
)";

}  // namespace

InstructionPool InstructionPool::builtin() {
  std::istringstream in(kBuiltinInstructions);
  InstructionPool pool;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    pool.pools_[trim(line.substr(0, colon))].push_back(
        trim(line.substr(colon + 1)));
  }
  return pool;
}

InstructionPool InstructionPool::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("instruction pool not found: " + path);
  InstructionPool pool;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    pool.pools_[trim(line.substr(0, colon))].push_back(
        trim(line.substr(colon + 1)));
  }
  for (const char* required : {"ts2text", "text2ts"}) {
    if (pool.pools_.find(required) == pool.pools_.end()) {
      throw ConfigError(std::string("instruction pool missing: ") + required);
    }
  }
  return pool;
}

const std::string& InstructionPool::pick(const std::string& direction,
                                         std::uint64_t seed) const {
  const auto it = pools_.find(direction);
  if (it == pools_.end() || it->second.empty()) {
    throw ConfigError("no instructions for direction: " + direction);
  }
  return it->second[seed % it->second.size()];
}

CorpusRecord build_record(const TimeSeries& series,
                          const std::string& description,
                          RecordDirection direction, RecordKind kind,
                          std::uint64_t seed, const SerializationSpec& spec,
                          const InstructionPool& instructions,
                          const std::string& source_id) {
  if (description.empty()) {
    throw ConfigError("build_record: empty description");
  }
  const std::string serialized = serialize_series(series, spec);
  CorpusRecord rec;
  rec.kind = kind;
  rec.meta.seed = seed;
  rec.meta.source = source_id;
  rec.meta.kernel_expr = series.kernel_expr;

  const char* dir_tag =
      direction == RecordDirection::kTs2Text ? "ts2text" : "text2ts";
  rec.id = std::string(dir_tag) + "-" +
           hex64(fnv1a64(serialized + "|" + description)) + "-" +
           std::to_string(seed);

  if (direction == RecordDirection::kTs2Text) {
    const std::string& instr = instructions.pick("ts2text", seed);
    rec.messages.push_back({"user", instr + "\n" + serialized});
    rec.messages.push_back({"assistant", description});
  } else {
    const std::string& instr = instructions.pick("text2ts", seed);
    rec.messages.push_back({"user", instr + "\n" + description});
    rec.messages.push_back({"assistant", serialized});
  }
  double tokens = 0.0;
  for (const auto& m : rec.messages) tokens += estimate_tokens(m.content);
  rec.meta.token_estimate = std::max(tokens, 1.0);
  return rec;
}

void MixSpec::validate() const {
  if (shard_size <= 0) throw ConfigError("mix: shard_size must be positive");
  double sum = 0.0;
  for (const auto& [kind, ratio] : ratios) {
    if (ratio < 0.0) {
      throw ConfigError("mix.ratio: negative ratio for " + kind_name(kind));
    }
    sum += ratio;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw ConfigError("mix.ratio: ratios sum to " + std::to_string(sum) +
                      ", expected 1");
  }
}

std::map<RecordKind, int> apportion(const MixSpec& mix, int total) {
  mix.validate();
  std::map<RecordKind, int> counts;
  std::vector<std::pair<double, RecordKind>> remainders;
  int allocated = 0;
  for (const auto& [kind, ratio] : mix.ratios) {
    const double exact = ratio * total;
    const int floor_count = static_cast<int>(std::floor(exact + 1e-12));
    counts[kind] = floor_count;
    allocated += floor_count;
    remainders.push_back({exact - floor_count, kind});
  }
  // Largest remainders first; ties broken by kind order for determinism.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) {
                     return a.first > b.first;
                   });
  for (int i = 0; i < total - allocated; ++i) {
    counts[remainders[static_cast<std::size_t>(i) % remainders.size()]
               .second] += 1;
  }
  return counts;
}

std::vector<std::string> mix_and_shard(
    const std::map<RecordKind, std::vector<CorpusRecord>>& by_kind,
    const MixSpec& mix, int total, const std::string& out_dir) {
  const auto counts = apportion(mix, total);

  // Check availability before any sampling so errors name every deficit.
  std::string deficit;
  for (const auto& [kind, count] : counts) {
    const auto it = by_kind.find(kind);
    const int available =
        it == by_kind.end() ? 0 : static_cast<int>(it->second.size());
    if (available < count) {
      deficit += (deficit.empty() ? "" : "; ") + kind_name(kind) +
                 ": required " + std::to_string(count) + ", available " +
                 std::to_string(available);
    }
  }
  if (!deficit.empty()) throw MixingError("mix_and_shard: deficit: " + deficit);

  Rng rng(mix.seed);
  std::vector<const CorpusRecord*> selected;
  selected.reserve(static_cast<std::size_t>(total));
  for (const auto& [kind, count] : counts) {
    if (count == 0) continue;
    const auto& pool = by_kind.at(kind);
    // Partial Fisher-Yates: the first `count` slots are a uniform sample
    // without replacement.
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int i = 0; i < count; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(i) + rng.index(order.size() - i);
      std::swap(order[static_cast<std::size_t>(i)], order[j]);
      selected.push_back(&pool[order[static_cast<std::size_t>(i)]]);
    }
  }

  // Global shuffle.
  for (std::size_t i = selected.size(); i > 1; --i) {
    std::swap(selected[i - 1], selected[rng.index(i)]);
  }

  std::filesystem::create_directories(out_dir);
  std::vector<std::string> paths;
  std::ofstream out;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (i % static_cast<std::size_t>(mix.shard_size) == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "shard-%05zu.jsonl",
                    i / static_cast<std::size_t>(mix.shard_size));
      paths.push_back((std::filesystem::path(out_dir) / name).string());
      out.close();
      out.open(paths.back(), std::ios::trunc);
      if (!out) throw MixingError("mix_and_shard: cannot open " + paths.back());
    }
    out << nlohmann::json(*selected[i]).dump() << "\n";
  }
  return paths;
}

}  // namespace tsforge::corpus
