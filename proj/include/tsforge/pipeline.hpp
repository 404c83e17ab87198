#pragma once

#include "tsforge/caption.hpp"
#include "tsforge/evalkit.hpp"
#include "tsforge/knowledge.hpp"
#include "tsforge/lexstats.hpp"
#include "tsforge/records.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tsforge::pipeline {

inline constexpr const char* kToolVersion = "0.1.0";

struct ProviderConfig {
  std::string provider = "stub";  // stub | stub-oracle | stub-wrong |
                                  // stub-truncate | endpoint
  std::string endpoint;           // required when provider == endpoint
  std::string model = "stub";
};

struct SynthStageConfig {
  int count = 100;
  synthkit::SynthConfig synth;
};

struct CaptionStageConfig {
  ProviderConfig provider;
  std::vector<std::string> template_ids = {"default"};
  int max_inflight = 4;
  int retries = 3;
  bool include_plot = false;
  std::string cache_dir = "caption-cache";
};

struct BuildStageConfig {
  corpus::SerializationSpec serialization;
  std::string instruction_pool;  // optional path, builtin when empty
  std::string template_file;     // optional path, builtin when empty
  std::vector<std::string> knowledge_paths;
  std::string general_path;  // optional JSONL of {"text": ...}
  double knowledge_target_tokens = 400.0;
  int knowledge_overlap = 0;
};

struct MixStageConfig {
  corpus::MixSpec mix;
  int total = 0;  // 0 -> every available record
};

struct EvalStageConfig {
  std::map<evalkit::Task, std::string> benchmarks;
  int shots = 3;
  std::map<evalkit::Task, int> samples;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  ProviderConfig model;
  ProviderConfig judge;
};

struct JudgeStageConfig {
  ProviderConfig provider;
  std::string items_path;
  std::string answers_path;  // JSONL of {"id", "answer"}
};

struct AnalyzeStageConfig {
  lexstats::TokenizerSpec tokenizer;
  double log_base = 2.0;
  int subset_size = 0;
  std::uint64_t seed = 0;
  std::string input;  // JSONL of {"question": ...}
};

struct PipelineConfig {
  SynthStageConfig synth;
  CaptionStageConfig caption;
  BuildStageConfig build;
  MixStageConfig mix;
  EvalStageConfig eval;
  JudgeStageConfig judge;
  AnalyzeStageConfig analyze;
  std::string raw_json;  // canonical dump, hashed into the manifest
};

// Strict loader: unknown keys are rejected with the offending key path;
// referenced paths must exist; defaults filled as documented.
PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config(const std::string& json_text);

struct StageResult {
  std::string stage;
  std::map<std::string, std::string> inputs;   // path -> digest
  std::map<std::string, std::string> outputs;  // path -> digest
};

// Appends the stage result to <out_dir>/manifest.json.
void record_stage(const std::string& out_dir, const PipelineConfig& config,
                  const StageResult& result);

std::string file_digest(const std::string& path);

// Builds the chat client named by a provider config. Model/judge oracle
// stubs need the eval items to look up golds.
std::unique_ptr<corpus::ChatClient> make_caption_client(
    const ProviderConfig& provider);
std::unique_ptr<corpus::ChatClient> make_model_client(
    const ProviderConfig& provider, const std::vector<evalkit::EvalItem>& items,
    const corpus::SerializationSpec& spec);
std::unique_ptr<corpus::ChatClient> make_judge_client(
    const ProviderConfig& provider);

// Stage entry points. Each returns the manifest delta; with dry_run they
// print the plan and write nothing.
StageResult run_stage(const std::string& stage, const PipelineConfig& config,
                      const std::string& out_dir, bool dry_run);

}  // namespace tsforge::pipeline
