#include "tsforge/pipeline.hpp"

#include "tsforge/errors.hpp"
#include "tsforge/plot.hpp"
#include "tsforge/profiler.hpp"
#include "tsforge/textutil.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace tsforge::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("config: unknown key '" +
                        (path.empty() ? key : path + "." + key) + "'");
    }
  }
}

void require_path(const std::string& path, const std::string& key) {
  if (!path.empty() && !fs::exists(path)) {
    throw ConfigError("config: " + key + " references missing path: " + path);
  }
}

ProviderConfig parse_provider(const json& obj, const std::string& path) {
  check_keys(obj, {"provider", "endpoint", "model"}, path);
  ProviderConfig p;
  p.provider = obj.value("provider", "stub");
  p.endpoint = obj.value("endpoint", "");
  p.model = obj.value("model", p.provider);
  if (p.provider == "endpoint" && p.endpoint.empty()) {
    throw ConfigError("config: " + path + ".endpoint required for provider "
                      "'endpoint'");
  }
  return p;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StageError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StageError("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& content) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StageError("cannot write " + path);
  out << content;
}

}  // namespace

PipelineConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  check_keys(root, {"synth", "caption", "build", "mix", "eval", "judge",
                    "analyze"},
             "");

  PipelineConfig cfg;
  cfg.raw_json = root.dump();

  if (root.contains("synth")) {
    const auto& s = root["synth"];
    check_keys(s, {"count", "length", "max_kernels", "jitter", "seed",
                   "decimals"},
               "synth");
    cfg.synth.count = s.value("count", 100);
    cfg.synth.synth.length = s.value("length", 256);
    cfg.synth.synth.max_kernels = s.value("max_kernels", 5);
    cfg.synth.synth.jitter = s.value("jitter", 1e-6);
    cfg.synth.synth.seed = s.value("seed", 0ULL);
    cfg.synth.synth.decimals = s.value("decimals", 2);
    if (cfg.synth.count <= 0) throw ConfigError("config: synth.count <= 0");
    if (cfg.synth.synth.length < 8) {
      throw ConfigError("config: synth.length must be >= 8");
    }
    if (cfg.synth.synth.max_kernels < 1) {
      throw ConfigError("config: synth.max_kernels must be >= 1");
    }
    if (cfg.synth.synth.jitter <= 0) {
      throw ConfigError("config: synth.jitter must be positive");
    }
  }

  if (root.contains("caption")) {
    const auto& c = root["caption"];
    check_keys(c, {"provider", "endpoint", "model", "template_ids",
                   "max_inflight", "retries", "include_plot", "cache_dir"},
               "caption");
    json prov = json::object();
    for (const char* k : {"provider", "endpoint", "model"}) {
      if (c.contains(k)) prov[k] = c[k];
    }
    cfg.caption.provider = parse_provider(prov, "caption");
    if (c.contains("template_ids")) {
      cfg.caption.template_ids =
          c["template_ids"].get<std::vector<std::string>>();
    }
    if (cfg.caption.template_ids.empty()) {
      throw ConfigError("config: caption.template_ids must be non-empty");
    }
    cfg.caption.max_inflight = c.value("max_inflight", 4);
    cfg.caption.retries = c.value("retries", 3);
    cfg.caption.include_plot = c.value("include_plot", false);
    cfg.caption.cache_dir = c.value("cache_dir", "caption-cache");
    if (cfg.caption.max_inflight < 1) {
      throw ConfigError("config: caption.max_inflight must be >= 1");
    }
  }

  if (root.contains("build")) {
    const auto& b = root["build"];
    check_keys(b, {"decimals", "delimiter", "open", "close",
                   "instruction_pool", "template_file", "knowledge_paths",
                   "general_path", "knowledge_target_tokens",
                   "knowledge_overlap"},
               "build");
    cfg.build.serialization.decimals = b.value("decimals", 2);
    cfg.build.serialization.delimiter = b.value("delimiter", ", ");
    cfg.build.serialization.open = b.value("open", "<ts>");
    cfg.build.serialization.close = b.value("close", "</ts>");
    cfg.build.serialization.validate();
    cfg.build.instruction_pool = b.value("instruction_pool", "");
    cfg.build.template_file = b.value("template_file", "");
    if (b.contains("knowledge_paths")) {
      cfg.build.knowledge_paths =
          b["knowledge_paths"].get<std::vector<std::string>>();
    }
    cfg.build.general_path = b.value("general_path", "");
    cfg.build.knowledge_target_tokens =
        b.value("knowledge_target_tokens", 400.0);
    cfg.build.knowledge_overlap = b.value("knowledge_overlap", 0);
    require_path(cfg.build.instruction_pool, "build.instruction_pool");
    require_path(cfg.build.template_file, "build.template_file");
    require_path(cfg.build.general_path, "build.general_path");
    for (const auto& p : cfg.build.knowledge_paths) {
      require_path(p, "build.knowledge_paths");
    }
  }

  // Default mix: the ts2text slice split across structured/unstructured.
  cfg.mix.mix.ratios = {
      {corpus::RecordKind::kTs2TextStructured, 0.35},
      {corpus::RecordKind::kTs2TextUnstructured, 0.20},
      {corpus::RecordKind::kText2Ts, 0.20},
      {corpus::RecordKind::kKnowledge, 0.10},
      {corpus::RecordKind::kGeneral, 0.15},
  };
  if (root.contains("mix")) {
    const auto& m = root["mix"];
    check_keys(m, {"ratios", "shard_size", "seed", "total"}, "mix");
    if (m.contains("ratios")) {
      cfg.mix.mix.ratios.clear();
      for (const auto& [name, ratio] : m["ratios"].items()) {
        cfg.mix.mix.ratios[corpus::kind_from_name(name)] = ratio.get<double>();
      }
    }
    cfg.mix.mix.shard_size = m.value("shard_size", 1000);
    cfg.mix.mix.seed = m.value("seed", 0ULL);
    cfg.mix.total = m.value("total", 0);
    try {
      cfg.mix.mix.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config: mix.ratio: ") + e.what());
    }
  }

  if (root.contains("eval")) {
    const auto& e = root["eval"];
    check_keys(e, {"benchmarks", "shots", "samples", "seeds", "provider",
                   "endpoint", "model", "judge"},
               "eval");
    if (e.contains("benchmarks")) {
      for (const auto& [name, path] : e["benchmarks"].items()) {
        const std::string p = path.get<std::string>();
        require_path(p, "eval.benchmarks." + name);
        cfg.eval.benchmarks[evalkit::task_from_name(name)] = p;
      }
    }
    cfg.eval.shots = e.value("shots", 3);
    if (cfg.eval.shots < 3 || cfg.eval.shots > 5) {
      throw ConfigError("config: eval.shots must be in [3, 5]");
    }
    if (e.contains("samples")) {
      for (const auto& [name, count] : e["samples"].items()) {
        cfg.eval.samples[evalkit::task_from_name(name)] = count.get<int>();
      }
    }
    if (e.contains("seeds")) {
      cfg.eval.seeds = e["seeds"].get<std::vector<std::uint64_t>>();
    }
    if (cfg.eval.seeds.empty()) {
      throw ConfigError("config: eval.seeds must be non-empty");
    }
    json prov = json::object();
    for (const char* k : {"provider", "endpoint", "model"}) {
      if (e.contains(k)) prov[k] = e[k];
    }
    cfg.eval.model = parse_provider(prov, "eval");
    if (e.contains("judge")) {
      cfg.eval.judge = parse_provider(e["judge"], "eval.judge");
    }
  }

  if (root.contains("judge")) {
    const auto& jd = root["judge"];
    check_keys(jd, {"provider", "endpoint", "model", "items", "answers"},
               "judge");
    json prov = json::object();
    for (const char* k : {"provider", "endpoint", "model"}) {
      if (jd.contains(k)) prov[k] = jd[k];
    }
    cfg.judge.provider = parse_provider(prov, "judge");
    cfg.judge.items_path = jd.value("items", "");
    cfg.judge.answers_path = jd.value("answers", "");
    require_path(cfg.judge.items_path, "judge.items");
    require_path(cfg.judge.answers_path, "judge.answers");
  }

  if (root.contains("analyze")) {
    const auto& a = root["analyze"];
    check_keys(a, {"lowercase", "strip_edge_punctuation", "log_base",
                   "subset_size", "seed", "input"},
               "analyze");
    cfg.analyze.tokenizer.lowercase = a.value("lowercase", true);
    cfg.analyze.tokenizer.strip_edge_punctuation =
        a.value("strip_edge_punctuation", true);
    cfg.analyze.log_base = a.value("log_base", 2.0);
    cfg.analyze.subset_size = a.value("subset_size", 0);
    cfg.analyze.seed = a.value("seed", 0ULL);
    cfg.analyze.input = a.value("input", "");
    require_path(cfg.analyze.input, "analyze.input");
    if (cfg.analyze.log_base <= 1.0) {
      throw ConfigError("config: analyze.log_base must be > 1");
    }
  }

  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config(text);
}

std::string file_digest(const std::string& path) {
  return hex64(fnv1a64(read_file(path)));
}

void record_stage(const std::string& out_dir, const PipelineConfig& config,
                  const StageResult& result) {
  const fs::path manifest_path = fs::path(out_dir) / "manifest.json";
  json manifest;
  if (fs::exists(manifest_path)) {
    manifest = json::parse(read_file(manifest_path.string()));
  } else {
    manifest = json::object();
  }
  manifest["tool_version"] = kToolVersion;
  manifest["config_hash"] = hex64(fnv1a64(config.raw_json));
  if (!manifest.contains("stages")) manifest["stages"] = json::object();
  json stage;
  stage["inputs"] = result.inputs;
  stage["outputs"] = result.outputs;
  manifest["stages"][result.stage] = stage;
  write_file(manifest_path.string(), manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Provider factories

std::unique_ptr<corpus::ChatClient> make_caption_client(
    const ProviderConfig& provider) {
  if (provider.provider == "endpoint") {
    return std::make_unique<corpus::HttpChatClient>(provider.endpoint,
                                                    provider.model);
  }
  if (provider.provider == "stub") {
    return std::make_unique<corpus::StubChatClient>(
        [](const std::vector<corpus::ChatMessage>& messages) {
          // Deterministic placeholder captions keyed off the request hash.
          const std::string& req = messages.back().content;
          const std::string tag = hex64(fnv1a64(req)).substr(0, 6);
          json reply = {
              {"structured",
               {{"trend", "Trend placeholder " + tag + "."},
                {"seasonality", "Seasonality placeholder " + tag + "."},
                {"volatility", "Volatility placeholder " + tag + "."},
                {"outliers", "Outlier placeholder " + tag + "."},
                {"summary", "Summary placeholder " + tag + "."}}},
              {"caption",
               "A synthetic series with mixed temporal structure (" + tag +
                   ")."}};
          return reply.dump();
        },
        provider.model);
  }
  throw ConfigError("unknown caption provider: " + provider.provider);
}

std::unique_ptr<corpus::ChatClient> make_model_client(
    const ProviderConfig& provider,
    const std::vector<evalkit::EvalItem>& items,
    const corpus::SerializationSpec& spec) {
  if (provider.provider == "endpoint") {
    return std::make_unique<corpus::HttpChatClient>(provider.endpoint,
                                                    provider.model);
  }

  // The stub models answer by looking the test item up from the final user
  // turn, which assemble_prompt renders deterministically.
  auto lookup = std::make_shared<std::map<std::string, evalkit::EvalItem>>();
  for (const auto& item : items) {
    (*lookup)[evalkit::render_question(item, spec)] = item;
  }
  const std::string kind = provider.provider;

  auto responder = [lookup, kind,
                    spec](const std::vector<corpus::ChatMessage>& messages)
      -> std::string {
    const auto it = lookup->find(messages.back().content);
    if (it == lookup->end()) return "no idea";
    const evalkit::EvalItem& item = it->second;

    if (kind == "stub-oracle") return evalkit::render_gold(item, spec);

    if (kind == "stub-wrong") {
      if (std::holds_alternative<std::string>(item.gold)) {
        const std::string& gold = std::get<std::string>(item.gold);
        for (const auto& c : item.choices) {
          if (c.label != gold) return c.label;
        }
        return "completely unrelated text";
      }
      auto values = std::get<std::vector<double>>(item.gold);
      for (double& v : values) v += 1000.0;
      synthkit::TimeSeries ts;
      ts.values = values;
      return corpus::serialize_series(ts, spec);
    }

    if (kind == "stub-truncate") {
      if (std::holds_alternative<std::vector<double>>(item.gold)) {
        auto values = std::get<std::vector<double>>(item.gold);
        if (!values.empty()) values.pop_back();
        synthkit::TimeSeries ts;
        ts.values = values;
        return corpus::serialize_series(ts, spec);
      }
      return evalkit::render_gold(item, spec);
    }

    return evalkit::render_gold(item, spec);  // plain "stub" echoes gold
  };
  return std::make_unique<corpus::StubChatClient>(responder, provider.model);
}

std::unique_ptr<corpus::ChatClient> make_judge_client(
    const ProviderConfig& provider) {
  if (provider.provider == "endpoint") {
    return std::make_unique<corpus::HttpChatClient>(provider.endpoint,
                                                    provider.model);
  }
  if (provider.provider == "stub-oracle") {
    // Scores 10 when the candidate matches the reference embedded in the
    // judge prompt, 5 otherwise.
    return std::make_unique<corpus::StubChatClient>(
        [](const std::vector<corpus::ChatMessage>& messages) -> std::string {
          const std::string& prompt = messages.back().content;
          const std::string ref_tag = "Reference answer: ";
          const std::string cand_tag = "Candidate answer: ";
          const std::size_t r = prompt.find(ref_tag);
          const std::size_t c = prompt.find(cand_tag);
          if (r == std::string::npos || c == std::string::npos) {
            return "Score: 0.0";
          }
          const std::size_t r_end = prompt.find('\n', r);
          const std::size_t c_end = prompt.find('\n', c);
          const std::string reference =
              prompt.substr(r + ref_tag.size(), r_end - r - ref_tag.size());
          const std::string candidate =
              prompt.substr(c + cand_tag.size(), c_end - c - cand_tag.size());
          return trim(reference) == trim(candidate) ? "Score: 10.0"
                                                    : "Score: 5.0";
        },
        provider.model);
  }
  // plain "stub": fixed mid-scale score
  return std::make_unique<corpus::StubChatClient>(
      [](const std::vector<corpus::ChatMessage>&) { return "Score: 7.5"; },
      provider.model);
}

// ---------------------------------------------------------------------------
// Stages

namespace {

StageResult stage_synth(const PipelineConfig& cfg, const std::string& out_dir,
                        bool dry_run) {
  StageResult result{"synth", {}, {}};
  const std::string out_path =
      (fs::path(out_dir) / "series.jsonl").string();
  if (dry_run) {
    std::cout << "synth: would write " << cfg.synth.count << " series to "
              << out_path << "\n";
    return result;
  }
  const auto bank = synthkit::default_bank(cfg.synth.synth.length);
  std::ostringstream out;
  for (int i = 0; i < cfg.synth.count; ++i) {
    // Disjoint seeds per item: one for the expression, one for the draw.
    const std::uint64_t expr_seed =
        cfg.synth.synth.seed + 2ULL * static_cast<std::uint64_t>(i);
    const std::uint64_t draw_seed = expr_seed + 1ULL;
    const auto expr = synthkit::sample_kernel_expr(
        bank, cfg.synth.synth.max_kernels, expr_seed);
    const auto ts = synthkit::draw_series(expr, cfg.synth.synth, draw_seed);
    char id[32];
    std::snprintf(id, sizeof(id), "series-%06d", i);
    json line = {{"id", id},
                 {"seed", draw_seed},
                 {"kernel_expr", ts.kernel_expr},
                 {"values", ts.values}};
    out << line.dump() << "\n";
  }
  write_file(out_path, out.str());
  result.outputs[out_path] = file_digest(out_path);
  return result;
}

struct SeriesRow {
  std::string id;
  synthkit::TimeSeries ts;
};

std::vector<SeriesRow> load_series(const std::string& path) {
  std::vector<SeriesRow> rows;
  for (const auto& line : read_lines(path)) {
    const json j = json::parse(line);
    SeriesRow row;
    row.id = j.at("id").get<std::string>();
    row.ts.values = j.at("values").get<std::vector<double>>();
    row.ts.kernel_expr = j.value("kernel_expr", "");
    row.ts.seed = j.value("seed", 0ULL);
    rows.push_back(std::move(row));
  }
  return rows;
}

StageResult stage_profile(const PipelineConfig& cfg,
                          const std::string& out_dir, bool dry_run) {
  StageResult result{"profile", {}, {}};
  const std::string in_path = (fs::path(out_dir) / "series.jsonl").string();
  const std::string out_path =
      (fs::path(out_dir) / "profiles.jsonl").string();
  if (dry_run) {
    std::cout << "profile: would read " << in_path << " and write "
              << out_path << "\n";
    return result;
  }
  if (!fs::exists(in_path)) {
    throw StageError("profile: missing input " + in_path);
  }
  result.inputs[in_path] = file_digest(in_path);
  std::ostringstream out;
  for (const auto& row : load_series(in_path)) {
    const auto profile = profiler::profile_series(row.ts);
    json line = {{"id", row.id}, {"profile", profile}};
    out << line.dump() << "\n";
  }
  write_file(out_path, out.str());
  result.outputs[out_path] = file_digest(out_path);
  return result;
}

StageResult stage_caption(const PipelineConfig& cfg,
                          const std::string& out_dir, bool dry_run) {
  StageResult result{"caption", {}, {}};
  const std::string in_path = (fs::path(out_dir) / "series.jsonl").string();
  const std::string out_path =
      (fs::path(out_dir) / "captions.jsonl").string();
  if (dry_run) {
    std::cout << "caption: would caption " << in_path << " via provider '"
              << cfg.caption.provider.provider << "' into " << out_path
              << "\n";
    return result;
  }
  if (!fs::exists(in_path)) {
    throw StageError("caption: missing input " + in_path);
  }
  result.inputs[in_path] = file_digest(in_path);

  const auto rows = load_series(in_path);
  auto client = make_caption_client(cfg.caption.provider);
  const corpus::FileCache cache(
      (fs::path(out_dir) / cfg.caption.cache_dir).string());

  std::vector<corpus::CaptionResult> results(rows.size());
  std::atomic<std::size_t> next{0};
  const int workers =
      std::max(1, std::min<int>(cfg.caption.max_inflight,
                                static_cast<int>(rows.size())));
  std::vector<std::thread> threads;
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mu;
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= rows.size() || failed.load()) break;
        const std::string& template_id =
            cfg.caption.template_ids[i % cfg.caption.template_ids.size()];
        try {
          results[i] = corpus::caption_via_service(
              rows[i].ts, template_id, *client, cache,
              cfg.caption.include_plot);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(failure_mu);
          failure = e.what();
          failed = true;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failed) throw ProviderError("caption: " + failure);

  std::ostringstream out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    json line = {{"id", rows[i].id},
                 {"cache_key", results[i].cache_key},
                 {"parse_failed", results[i].parse_failed},
                 {"structured", results[i].structured},
                 {"caption", results[i].unstructured}};
    out << line.dump() << "\n";
  }
  write_file(out_path, out.str());
  result.outputs[out_path] = file_digest(out_path);
  return result;
}

StageResult stage_build(const PipelineConfig& cfg, const std::string& out_dir,
                        bool dry_run) {
  StageResult result{"build", {}, {}};
  const std::string series_path =
      (fs::path(out_dir) / "series.jsonl").string();
  const std::string profiles_path =
      (fs::path(out_dir) / "profiles.jsonl").string();
  const std::string captions_path =
      (fs::path(out_dir) / "captions.jsonl").string();
  const std::string out_path =
      (fs::path(out_dir) / "records.jsonl").string();
  if (dry_run) {
    std::cout << "build: would build records from " << series_path << " into "
              << out_path << "\n";
    return result;
  }
  for (const auto& p : {series_path, profiles_path}) {
    if (!fs::exists(p)) throw StageError("build: missing input " + p);
    result.inputs[p] = file_digest(p);
  }

  const auto rows = load_series(series_path);
  std::map<std::string, profiler::FeatureProfile> profiles;
  for (const auto& line : read_lines(profiles_path)) {
    const json j = json::parse(line);
    profiles[j.at("id").get<std::string>()] =
        j.at("profile").get<profiler::FeatureProfile>();
  }
  std::map<std::string, std::pair<bool, std::string>> captions;
  if (fs::exists(captions_path)) {
    result.inputs[captions_path] = file_digest(captions_path);
    for (const auto& line : read_lines(captions_path)) {
      const json j = json::parse(line);
      captions[j.at("id").get<std::string>()] = {
          j.value("parse_failed", false),
          j.value("caption", std::string())};
    }
  }

  const auto instructions =
      cfg.build.instruction_pool.empty()
          ? corpus::InstructionPool::builtin()
          : corpus::InstructionPool::load(cfg.build.instruction_pool);
  const auto templates = cfg.build.template_file.empty()
                             ? profiler::TemplateSet::builtin()
                             : profiler::TemplateSet::load(
                                   cfg.build.template_file);
  const auto perspectives = {
      profiler::Perspective::kTrend, profiler::Perspective::kSeasonality,
      profiler::Perspective::kVolatility, profiler::Perspective::kOutliers,
      profiler::Perspective::kSummary};

  std::ostringstream out;
  std::uint64_t seed_counter = cfg.synth.synth.seed;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto pit = profiles.find(rows[i].id);
    if (pit == profiles.end()) {
      throw StageError("build: no profile for " + rows[i].id);
    }
    const auto perspective =
        *(perspectives.begin() + static_cast<long>(i % perspectives.size()));
    const std::string description = profiler::render_structured(
        pit->second, perspective, seed_counter, templates);

    // Forward and reversed records share the identical pair and source id.
    const auto ts2text = corpus::build_record(
        rows[i].ts, description, corpus::RecordDirection::kTs2Text,
        corpus::RecordKind::kTs2TextStructured, seed_counter,
        cfg.build.serialization, instructions, rows[i].id);
    const auto text2ts = corpus::build_record(
        rows[i].ts, description, corpus::RecordDirection::kText2Ts,
        corpus::RecordKind::kText2Ts, seed_counter, cfg.build.serialization,
        instructions, rows[i].id);
    out << json(ts2text).dump() << "\n" << json(text2ts).dump() << "\n";

    const auto cit = captions.find(rows[i].id);
    if (cit != captions.end() && !cit->second.first &&
        !cit->second.second.empty()) {
      const auto unstructured = corpus::build_record(
          rows[i].ts, cit->second.second, corpus::RecordDirection::kTs2Text,
          corpus::RecordKind::kTs2TextUnstructured, seed_counter,
          cfg.build.serialization, instructions, rows[i].id);
      out << json(unstructured).dump() << "\n";
    }
    ++seed_counter;
  }

  corpus::ChunkSpec chunk_spec{cfg.build.knowledge_target_tokens,
                               cfg.build.knowledge_overlap};
  for (const auto& path : cfg.build.knowledge_paths) {
    result.inputs[path] = file_digest(path);
    const auto records = corpus::ingest_knowledge(read_file(path), chunk_spec,
                                                  nullptr, path);
    for (const auto& rec : records) out << json(rec).dump() << "\n";
  }

  if (!cfg.build.general_path.empty()) {
    result.inputs[cfg.build.general_path] =
        file_digest(cfg.build.general_path);
    std::size_t idx = 0;
    for (const auto& line : read_lines(cfg.build.general_path)) {
      const json j = json::parse(line);
      const std::string text = j.at("text").get<std::string>();
      corpus::CorpusRecord rec;
      rec.kind = corpus::RecordKind::kGeneral;
      rec.id = "general-" + hex64(fnv1a64(text)) + "-" + std::to_string(idx++);
      rec.meta.source = cfg.build.general_path;
      rec.messages.push_back({"user", "Read the following passage."});
      rec.messages.push_back({"assistant", text});
      rec.meta.token_estimate =
          std::max(corpus::estimate_tokens(text), 1.0);
      out << json(rec).dump() << "\n";
    }
  }

  write_file(out_path, out.str());
  result.outputs[out_path] = file_digest(out_path);
  return result;
}

StageResult stage_mix(const PipelineConfig& cfg, const std::string& out_dir,
                      bool dry_run) {
  StageResult result{"mix", {}, {}};
  const std::string in_path = (fs::path(out_dir) / "records.jsonl").string();
  const std::string shard_dir = (fs::path(out_dir) / "shards").string();
  if (dry_run) {
    std::cout << "mix: would shard " << in_path << " into " << shard_dir
              << "\n";
    return result;
  }
  if (!fs::exists(in_path)) throw StageError("mix: missing input " + in_path);
  result.inputs[in_path] = file_digest(in_path);

  std::map<corpus::RecordKind, std::vector<corpus::CorpusRecord>> by_kind;
  int available = 0;
  for (const auto& line : read_lines(in_path)) {
    auto rec = json::parse(line).get<corpus::CorpusRecord>();
    by_kind[rec.kind].push_back(std::move(rec));
    ++available;
  }
  const int total = cfg.mix.total > 0 ? cfg.mix.total : available;
  const auto shards =
      corpus::mix_and_shard(by_kind, cfg.mix.mix, total, shard_dir);
  for (const auto& shard : shards) {
    result.outputs[shard] = file_digest(shard);
  }
  return result;
}

StageResult stage_eval(const PipelineConfig& cfg, const std::string& out_dir,
                       bool dry_run) {
  StageResult result{"eval", {}, {}};
  if (cfg.eval.benchmarks.empty()) {
    throw StageError("eval: no benchmarks configured");
  }
  if (dry_run) {
    std::cout << "eval: would evaluate " << cfg.eval.benchmarks.size()
              << " benchmark file(s) over " << cfg.eval.seeds.size()
              << " seed(s) with provider '" << cfg.eval.model.provider
              << "'\n";
    return result;
  }

  std::vector<evalkit::EvalItem> items;
  for (const auto& [task, path] : cfg.eval.benchmarks) {
    result.inputs[path] = file_digest(path);
    for (auto& item : evalkit::load_items(path)) {
      if (item.task != task) {
        throw StageError("eval: item " + item.id + " in " + path +
                         " has task " + evalkit::task_name(item.task));
      }
      items.push_back(std::move(item));
    }
  }

  const auto model =
      make_model_client(cfg.eval.model, items, cfg.build.serialization);
  const auto judge = make_judge_client(cfg.eval.judge);

  evalkit::PromptPlan plan;
  plan.shots = cfg.eval.shots;
  evalkit::SampleSpec sample_spec;
  sample_spec.per_task = cfg.eval.samples;

  std::vector<evalkit::MetricReport> reports;
  for (const std::uint64_t seed : cfg.eval.seeds) {
    auto report = evalkit::run_benchmark(items, *model, plan, sample_spec,
                                         seed, judge.get(),
                                         cfg.build.serialization);
    const std::string path =
        (fs::path(out_dir) / ("report-" + std::to_string(seed) + ".json"))
            .string();
    write_file(path, json(report).dump(2) + "\n");
    result.outputs[path] = file_digest(path);
    std::cout << evalkit::format_report_table(report);
    reports.push_back(std::move(report));
  }

  if (reports.size() >= 2) {
    const auto summary = evalkit::aggregate_runs(reports);
    json agg = json::object();
    for (const auto& [name, s] : summary) {
      agg[name] = {{"mean", s.mean}, {"sample_std", s.sample_std}};
    }
    const std::string path =
        (fs::path(out_dir) / "report-aggregate.json").string();
    write_file(path, agg.dump(2) + "\n");
    result.outputs[path] = file_digest(path);
  }
  return result;
}

StageResult stage_judge(const PipelineConfig& cfg, const std::string& out_dir,
                        bool dry_run) {
  StageResult result{"judge", {}, {}};
  if (cfg.judge.items_path.empty() || cfg.judge.answers_path.empty()) {
    throw StageError("judge: items and answers paths must be configured");
  }
  if (dry_run) {
    std::cout << "judge: would score " << cfg.judge.answers_path
              << " against " << cfg.judge.items_path << "\n";
    return result;
  }
  result.inputs[cfg.judge.items_path] = file_digest(cfg.judge.items_path);
  result.inputs[cfg.judge.answers_path] = file_digest(cfg.judge.answers_path);

  std::map<std::string, evalkit::EvalItem> items;
  for (auto& item : evalkit::load_items(cfg.judge.items_path)) {
    items[item.id] = std::move(item);
  }
  const auto judge = make_judge_client(cfg.judge.provider);

  json scores = json::object();
  double sum = 0.0;
  int scored = 0;
  int failures = 0;
  for (const auto& line : read_lines(cfg.judge.answers_path)) {
    const json j = json::parse(line);
    const std::string id = j.at("id").get<std::string>();
    const auto it = items.find(id);
    if (it == items.end()) throw StageError("judge: unknown item id " + id);
    const auto score = evalkit::judge_score(
        it->second, j.at("answer").get<std::string>(), *judge);
    if (score) {
      scores[id] = *score;
      sum += *score;
      ++scored;
    } else {
      scores[id] = nullptr;
      ++failures;
    }
  }
  json out = {{"scores", scores},
              {"judge_mean", scored > 0 ? json(sum / scored) : json(nullptr)},
              {"scored", scored},
              {"judge_failures", failures}};
  const std::string path = (fs::path(out_dir) / "judge.json").string();
  write_file(path, out.dump(2) + "\n");
  result.outputs[path] = file_digest(path);
  return result;
}

StageResult stage_analyze(const PipelineConfig& cfg,
                          const std::string& out_dir, bool dry_run) {
  StageResult result{"analyze", {}, {}};
  if (cfg.analyze.input.empty()) {
    throw StageError("analyze: input path must be configured");
  }
  if (dry_run) {
    std::cout << "analyze: would analyze " << cfg.analyze.input << "\n";
    return result;
  }
  result.inputs[cfg.analyze.input] = file_digest(cfg.analyze.input);

  std::vector<std::string> questions;
  for (const auto& line : read_lines(cfg.analyze.input)) {
    questions.push_back(
        json::parse(line).at("question").get<std::string>());
  }
  lexstats::AnalyzeOptions options;
  options.tokenizer = cfg.analyze.tokenizer;
  options.log_base = cfg.analyze.log_base;
  options.subset_size = cfg.analyze.subset_size;
  options.seed = cfg.analyze.seed;
  const auto report = lexstats::analyze(questions, options);

  const std::string path = (fs::path(out_dir) / "analyze.json").string();
  write_file(path, json(report).dump(2) + "\n");
  result.outputs[path] = file_digest(path);
  std::cout << lexstats::format_lex_table(
      fs::path(cfg.analyze.input).stem().string(), report);
  return result;
}

StageResult stage_report(const PipelineConfig& cfg, const std::string& out_dir,
                         bool dry_run) {
  StageResult result{"report", {}, {}};
  const std::string manifest_path =
      (fs::path(out_dir) / "manifest.json").string();
  const std::string out_path = (fs::path(out_dir) / "report.txt").string();
  if (dry_run) {
    std::cout << "report: would summarize " << manifest_path << " into "
              << out_path << "\n";
    return result;
  }
  std::ostringstream out;
  out << "tsforge run report\n==================\n";
  if (fs::exists(manifest_path)) {
    result.inputs[manifest_path] = file_digest(manifest_path);
    const json manifest = json::parse(read_file(manifest_path));
    out << "config hash: " << manifest.value("config_hash", "") << "\n";
    out << "tool version: " << manifest.value("tool_version", "") << "\n\n";
    if (manifest.contains("stages")) {
      for (const auto& [stage, info] : manifest["stages"].items()) {
        out << "stage " << stage << "\n";
        for (const auto& [path, digest] : info["outputs"].items()) {
          out << "  out " << path << " " << digest.get<std::string>() << "\n";
        }
      }
    }
  } else {
    out << "(no manifest found in " << out_dir << ")\n";
  }
  for (const auto& name : {"report-aggregate.json", "analyze.json",
                           "judge.json"}) {
    const std::string path = (fs::path(out_dir) / name).string();
    if (fs::exists(path)) {
      out << "\n" << name << ":\n" << read_file(path);
    }
  }
  write_file(out_path, out.str());
  result.outputs[out_path] = file_digest(out_path);
  std::cout << out.str();
  return result;
}

}  // namespace

StageResult run_stage(const std::string& stage, const PipelineConfig& config,
                      const std::string& out_dir, bool dry_run) {
  if (!dry_run) fs::create_directories(out_dir);
  StageResult result;
  if (stage == "synth") {
    result = stage_synth(config, out_dir, dry_run);
  } else if (stage == "profile") {
    result = stage_profile(config, out_dir, dry_run);
  } else if (stage == "caption") {
    result = stage_caption(config, out_dir, dry_run);
  } else if (stage == "build") {
    result = stage_build(config, out_dir, dry_run);
  } else if (stage == "mix") {
    result = stage_mix(config, out_dir, dry_run);
  } else if (stage == "eval") {
    result = stage_eval(config, out_dir, dry_run);
  } else if (stage == "judge") {
    result = stage_judge(config, out_dir, dry_run);
  } else if (stage == "analyze") {
    result = stage_analyze(config, out_dir, dry_run);
  } else if (stage == "report") {
    result = stage_report(config, out_dir, dry_run);
  } else {
    throw ConfigError("unknown stage: " + stage);
  }
  if (!dry_run) record_stage(out_dir, config, result);
  return result;
}

}  // namespace tsforge::pipeline
