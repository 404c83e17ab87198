#include <doctest.h>

#include "tsforge/caption.hpp"
#include "tsforge/errors.hpp"
#include "tsforge/knowledge.hpp"
#include "tsforge/plot.hpp"
#include "tsforge/records.hpp"
#include "tsforge/rng.hpp"
#include "tsforge/serialize.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace tsforge;
using namespace tsforge::corpus;

namespace {

TimeSeries series(std::vector<double> values) {
  TimeSeries ts;
  ts.values = std::move(values);
  return ts;
}

TimeSeries random_standardized(int length, std::uint64_t seed) {
  TimeSeries ts;
  Rng rng(seed);
  ts.values.resize(length);
  double mean = 0.0;
  for (auto& v : ts.values) {
    v = rng.normal();
    mean += v;
  }
  mean /= length;
  double var = 0.0;
  for (double v : ts.values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / length);
  for (auto& v : ts.values) v = (v - mean) / sd;
  return ts;
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "tsforge-tests" /
                   name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("serialize_series formats fixed-point with wrappers") {
  CHECK(serialize_series(series({1.0, 2.5})) == "<ts>1.00, 2.50</ts>");
  CHECK(serialize_series(series({-0.005})) == "<ts>-0.01</ts>");
  CHECK(serialize_series(series({})) == "<ts></ts>");
}

TEST_CASE("parse_series inverts serialization within quantization") {
  double max_err = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto ts = random_standardized(32, seed);
    const auto parsed = parse_series(serialize_series(ts));
    REQUIRE(parsed.values.size() == ts.values.size());
    for (std::size_t i = 0; i < ts.values.size(); ++i) {
      max_err = std::max(max_err, std::fabs(parsed.values[i] - ts.values[i]));
    }
  }
  CHECK(max_err <= 0.005);
}

TEST_CASE("parse_series tolerates stray whitespace") {
  const auto ts = parse_series("<ts>1.00 ,2.50</ts>");
  REQUIRE(ts.values.size() == 2);
  CHECK(ts.values[0] == doctest::Approx(1.0));
  CHECK(ts.values[1] == doctest::Approx(2.5));
}

TEST_CASE("parse_series reports malformed elements and missing wrappers") {
  CHECK_THROWS_WITH_AS(parse_series("<ts>1.0a</ts>"),
                       doctest::Contains("element 0"), ParseError);
  CHECK_THROWS_AS(parse_series("1.00, 2.00"), ParseError);
}

TEST_CASE("build_record keeps the description verbatim in ts2text") {
  const auto ts = series({1.0, 2.0, 3.0});
  const auto rec = build_record(ts, "an ascending line",
                                RecordDirection::kTs2Text,
                                RecordKind::kTs2TextStructured, 5);
  REQUIRE(rec.messages.size() == 2);
  CHECK(rec.messages[0].role == "user");
  CHECK(rec.messages[1].role == "assistant");
  CHECK(rec.messages[1].content == "an ascending line");
  CHECK(rec.messages[0].content.find("<ts>1.00, 2.00, 3.00</ts>") !=
        std::string::npos);
  CHECK(rec.meta.token_estimate > 0);
}

TEST_CASE("text2ts reverses the identical pair") {
  const auto ts = series({1.0, 2.0, 3.0});
  const auto rec = build_record(ts, "an ascending line",
                                RecordDirection::kText2Ts,
                                RecordKind::kText2Ts, 5);
  CHECK(rec.messages[1].content == serialize_series(ts));
  CHECK(rec.messages[0].content.find("an ascending line") !=
        std::string::npos);
}

TEST_CASE("build_record is deterministic") {
  const auto ts = series({0.5, -0.5, 1.5});
  const auto a = build_record(ts, "desc", RecordDirection::kTs2Text,
                              RecordKind::kTs2TextStructured, 17);
  const auto b = build_record(ts, "desc", RecordDirection::kTs2Text,
                              RecordKind::kTs2TextStructured, 17);
  CHECK(nlohmann::json(a).dump() == nlohmann::json(b).dump());
}

TEST_CASE("render_plot draws one polyline with every point") {
  const auto ts = random_standardized(50, 3);
  const auto svg = render_plot(ts);
  std::size_t polylines = 0;
  std::size_t pos = 0;
  while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
    ++polylines;
    pos += 1;
  }
  CHECK(polylines == 1);
  // count coordinate pairs in the points attribute
  const std::size_t begin = svg.find("points=\"") + 8;
  const std::size_t end = svg.find('"', begin);
  const std::string points = svg.substr(begin, end - begin);
  CHECK(std::count(points.begin(), points.end(), ',') == 50);
  CHECK(render_plot(ts) == svg);  // byte-identical
}

TEST_CASE("two-point series spans the plot area corners") {
  const auto svg = render_plot(series({0.0, 1.0}));
  // bottom-left corner (index 0, min value) then top-right (max value)
  CHECK(svg.find("points=\"50.00,260.00 780.00,20.00\"") !=
        std::string::npos);
}

TEST_CASE("knowledge chunking keeps small documents whole") {
  const std::string doc = "First paragraph here.\n\nSecond one.\n\nThird.";
  const auto records = ingest_knowledge(doc, {1000.0, 0});
  REQUIRE(records.size() == 1);
  CHECK(records[0].kind == RecordKind::kKnowledge);
  CHECK(records[0].messages[1].content.find("First paragraph") !=
        std::string::npos);
  CHECK(records[0].messages[1].content.find("Third") != std::string::npos);
}

TEST_CASE("chunks reproduce the source paragraphs in order") {
  std::string doc;
  std::vector<std::string> paragraphs;
  for (int i = 0; i < 12; ++i) {
    std::string p = "Paragraph " + std::to_string(i) +
                    " with several words of filler content inside.";
    paragraphs.push_back(p);
    doc += p + "\n\n";
  }
  ChunkSpec spec{20.0, 1};
  const auto chunks = chunk_paragraphs(doc, spec);
  REQUIRE(chunks.size() > 1);
  // Dropping each chunk's leading overlap paragraph reconstructs the
  // original order.
  std::string reconstructed = chunks[0];
  for (std::size_t i = 1; i < chunks.size(); ++i) {
    const std::size_t cut = chunks[i].find("\n\n");
    reconstructed += "\n\n" + (cut == std::string::npos
                                   ? chunks[i]
                                   : chunks[i].substr(cut + 2));
  }
  std::string expected;
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    if (i) expected += "\n\n";
    expected += paragraphs[i];
  }
  CHECK(reconstructed == expected);
}

TEST_CASE("a cleaning stub rewrites chunk contents") {
  StubChatClient upper([](const std::vector<ChatMessage>& messages) {
    std::string out = messages.back().content;
    for (char& c : out) c = static_cast<char>(std::toupper(c));
    return out;
  });
  const auto records = ingest_knowledge("hello world", {100.0, 0}, &upper);
  REQUIRE(records.size() == 1);
  CHECK(records[0].messages[1].content == "HELLO WORLD");
}

TEST_CASE("caption_via_service parses stub replies and caches them") {
  const auto dir = temp_dir("caption-cache");
  FileCache cache(dir.string());
  nlohmann::json reply = {
      {"structured",
       {{"trend", "t"}, {"seasonality", "s"}, {"volatility", "v"},
        {"outliers", "o"}, {"summary", "m"}}},
      {"caption", "short caption"}};
  auto stub = StubChatClient::fixed(reply.dump());

  const auto ts = random_standardized(16, 1);
  const auto first = caption_via_service(ts, "default", *stub, cache);
  CHECK_FALSE(first.parse_failed);
  CHECK(first.unstructured == "short caption");
  CHECK(first.structured.at("trend") == "t");
  CHECK(stub->call_count() == 1);

  const auto second = caption_via_service(ts, "default", *stub, cache);
  CHECK(stub->call_count() == 1);  // served from cache
  CHECK(second.unstructured == first.unstructured);
  CHECK(second.cache_key == first.cache_key);
}

TEST_CASE("caption replies missing perspectives degrade gracefully") {
  const auto dir = temp_dir("caption-cache-bad");
  FileCache cache(dir.string());
  nlohmann::json reply = {{"structured", {{"trend", "t"}}},
                          {"caption", "c"}};
  auto stub = StubChatClient::fixed(reply.dump());
  const auto result =
      caption_via_service(random_standardized(16, 2), "default", *stub, cache);
  CHECK(result.parse_failed);
  CHECK_FALSE(result.raw_reply.empty());
}

TEST_CASE("generate_domain_qa accepts valid stub items") {
  nlohmann::json reply = nlohmann::json::array(
      {{{"background", "retail sales context"},
        {"question", "Will demand rise?"},
        {"answer", "Yes, the trend is up."},
        {"task_type", "reasoning"}}});
  StubChatClient stub(
      [&](const std::vector<ChatMessage>&) { return reply.dump(); });
  const auto ts = random_standardized(32, 3);
  const auto profile = profiler::profile_series(ts);
  const auto items = generate_domain_qa("e-commerce", ts, profile, stub);
  REQUIRE(items.size() == 1);
  CHECK(items[0].domain == "e-commerce");
  CHECK_FALSE(items[0].reviewed);
}

TEST_CASE("generate_domain_qa drops schema-invalid replies") {
  auto stub = StubChatClient::fixed("not json at all");
  const auto ts = random_standardized(32, 4);
  const auto profile = profiler::profile_series(ts);
  CHECK(generate_domain_qa("finance", ts, profile, *stub).empty());
}

TEST_CASE("generate_domain_qa rejects unknown domains") {
  auto stub = StubChatClient::fixed("[]");
  const auto ts = random_standardized(32, 5);
  const auto profile = profiler::profile_series(ts);
  CHECK_THROWS_AS(generate_domain_qa("aviation", ts, profile, *stub),
                  ConfigError);
}

namespace {

std::map<RecordKind, std::vector<CorpusRecord>> make_pools(
    const std::map<RecordKind, int>& sizes) {
  std::map<RecordKind, std::vector<CorpusRecord>> pools;
  for (const auto& [kind, size] : sizes) {
    for (int i = 0; i < size; ++i) {
      CorpusRecord rec;
      rec.kind = kind;
      rec.id = kind_name(kind) + "-" + std::to_string(i);
      rec.messages = {{"user", "q"}, {"assistant", "a"}};
      rec.meta.token_estimate = 4.0;
      pools[kind].push_back(std::move(rec));
    }
  }
  return pools;
}

}  // namespace

TEST_CASE("apportionment is exact for exact ratios") {
  MixSpec mix;
  mix.ratios = {{RecordKind::kTs2TextStructured, 0.6},
                {RecordKind::kText2Ts, 0.2},
                {RecordKind::kKnowledge, 0.1},
                {RecordKind::kGeneral, 0.1}};
  const auto counts = apportion(mix, 10000);
  CHECK(counts.at(RecordKind::kTs2TextStructured) == 6000);
  CHECK(counts.at(RecordKind::kText2Ts) == 2000);
  CHECK(counts.at(RecordKind::kKnowledge) == 1000);
  CHECK(counts.at(RecordKind::kGeneral) == 1000);
}

TEST_CASE("apportionment distributes remainders to a full total") {
  MixSpec mix;
  mix.ratios = {{RecordKind::kTs2TextStructured, 1.0 / 3.0},
                {RecordKind::kText2Ts, 1.0 / 3.0},
                {RecordKind::kKnowledge, 1.0 / 3.0}};
  const auto counts = apportion(mix, 100);
  int total = 0;
  for (const auto& [kind, c] : counts) total += c;
  CHECK(total == 100);
}

TEST_CASE("mix_and_shard is deterministic and conserves records") {
  const auto pools = make_pools({{RecordKind::kTs2TextStructured, 300},
                                 {RecordKind::kText2Ts, 120},
                                 {RecordKind::kKnowledge, 80},
                                 {RecordKind::kGeneral, 60}});
  MixSpec mix;
  mix.ratios = {{RecordKind::kTs2TextStructured, 0.6},
                {RecordKind::kText2Ts, 0.2},
                {RecordKind::kKnowledge, 0.1},
                {RecordKind::kGeneral, 0.1}};
  mix.shard_size = 64;
  mix.seed = 99;

  const auto dir_a = temp_dir("shards-a");
  const auto dir_b = temp_dir("shards-b");
  const auto shards_a = mix_and_shard(pools, mix, 400, dir_a.string());
  const auto shards_b = mix_and_shard(pools, mix, 400, dir_b.string());
  REQUIRE(shards_a.size() == shards_b.size());

  std::set<std::string> ids;
  int records = 0;
  for (std::size_t i = 0; i < shards_a.size(); ++i) {
    const auto bytes_a = slurp(shards_a[i]);
    CHECK(bytes_a == slurp(shards_b[i]));
    std::istringstream in(bytes_a);
    std::string line;
    while (std::getline(in, line)) {
      const auto rec = nlohmann::json::parse(line).get<CorpusRecord>();
      CHECK(ids.insert(rec.id).second);  // no duplicates
      ++records;
    }
  }
  CHECK(records == 400);
}

TEST_CASE("mix_and_shard names every deficit") {
  const auto pools = make_pools({{RecordKind::kTs2TextStructured, 10},
                                 {RecordKind::kText2Ts, 10}});
  MixSpec mix;
  mix.ratios = {{RecordKind::kTs2TextStructured, 0.5},
                {RecordKind::kText2Ts, 0.5}};
  const auto dir = temp_dir("shards-deficit");
  CHECK_THROWS_WITH_AS(mix_and_shard(pools, mix, 100, dir.string()),
                       doctest::Contains("required 50, available 10"),
                       MixingError);
}

TEST_CASE("ratios must sum to one") {
  MixSpec mix;
  mix.ratios = {{RecordKind::kTs2TextStructured, 0.5},
                {RecordKind::kText2Ts, 0.48}};
  CHECK_THROWS_AS(mix.validate(), ConfigError);
}

TEST_CASE("corpus records survive a JSON round trip") {
  const auto rec = build_record(series({1.0, -1.0}), "flips sign",
                                RecordDirection::kTs2Text,
                                RecordKind::kTs2TextStructured, 7);
  const auto back =
      nlohmann::json::parse(nlohmann::json(rec).dump()).get<CorpusRecord>();
  CHECK(back.id == rec.id);
  CHECK(back.kind == rec.kind);
  CHECK(back.messages.size() == rec.messages.size());
  CHECK(back.meta.token_estimate == rec.meta.token_estimate);
}
