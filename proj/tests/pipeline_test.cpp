#include "shiftlab/pipeline.hpp"

#include <random>
#include <sstream>

#include <gtest/gtest.h>

using namespace shiftlab;

namespace {

TermDictionary demo_dict() {
  return TermDictionary::from_entries(
      "demo", {{0, "cat", {"cat"}, {}},
               {1, "dog", {"dog"}, {"hot dog"}},
               {2, "fox", {"red fox", "fox"}, {}}});
}

std::string manifest_line(const std::string& id, const std::string& title, int gt = -1) {
  nlohmann::json j{{"sample_id", id}, {"title", title}};
  if (gt >= 0) j["gt_label"] = gt;
  return j.dump() + "\n";
}

}  // namespace

TEST(Pipeline, LabelsInInputOrderWithAudit) {
  std::string input = manifest_line("a", "a cat sat", 0) +
                      manifest_line("b", "red fox den", 2) +
                      manifest_line("c", "nothing here", 1) +
                      manifest_line("d", "hot dog stand", 1);
  TermDictionary dict = demo_dict();
  std::istringstream in(input);
  std::ostringstream out;
  LabelPipelineConfig config;
  config.strategy = {StrategyKind::single_class, 25};
  LabelPipelineStats stats = run_label_pipeline(in, out, dict, config);

  EXPECT_EQ(stats.audit.total, 4u);
  EXPECT_EQ(stats.audit.labeled, 2u);   // c matches nothing, d excluded via "hot dog"
  EXPECT_EQ(stats.audit.correct, 2u);
  EXPECT_EQ(stats.histogram.counts.at(0), 1u);
  EXPECT_EQ(stats.histogram.counts.at(2), 1u);
  EXPECT_EQ(stats.histogram.counts.at(1), 0u);

  std::istringstream lines(out.str());
  std::string line;
  std::vector<std::string> ids;
  while (std::getline(lines, line)) {
    nlohmann::json j = nlohmann::json::parse(line);
    ids.push_back(j["sample_id"]);
  }
  EXPECT_EQ(ids, (std::vector<std::string>{"a", "b", "c", "d"}));
}

TEST(Pipeline, MalformedLinesAreCountedAndRunContinues) {
  std::string input = manifest_line("a", "cat") + "{broken json\n" +
                      "{\"sample_id\":\"nocaption\"}\n" + manifest_line("b", "dog");
  TermDictionary dict = demo_dict();
  std::istringstream in(input);
  std::ostringstream out;
  LabelPipelineStats stats = run_label_pipeline(in, out, dict, {});
  EXPECT_EQ(stats.audit.total, 2u);
  EXPECT_EQ(stats.audit.record_errors, 2u);
  ASSERT_EQ(stats.errors.size(), 2u);
  EXPECT_EQ(stats.errors[0].first, 2u);  // line numbers of the bad lines
  EXPECT_EQ(stats.errors[1].first, 3u);
}

TEST(Pipeline, MetaAndBlankLinesAreSkipped) {
  std::string input = "{\"_meta\":{\"tool\":\"shiftlab\"}}\n\n" + manifest_line("a", "cat");
  TermDictionary dict = demo_dict();
  std::istringstream in(input);
  std::ostringstream out;
  LabelPipelineStats stats = run_label_pipeline(in, out, dict, {});
  EXPECT_EQ(stats.audit.total, 1u);
  EXPECT_EQ(stats.audit.record_errors, 0u);
}

TEST(Pipeline, NonAsciiCaptionsMatchAccentedTerms) {
  TermDictionary dict = TermDictionary::from_entries(
      "fr", {{0, "café", {"café", "café au lait"}, {}}, {1, "cat", {"cat"}, {}}});
  // NFC composition: the decomposed form (e + combining acute) must match the
  // composed dictionary term; case folding covers the uppercase variant.
  std::string input =
      manifest_line("a", "Visiting the CAFÉ!", 0) +
      manifest_line("b", std::string("a café au lait, please"), 0) +
      manifest_line("c", "plain cafe", 0);
  std::istringstream in(input);
  std::ostringstream out;
  LabelPipelineConfig config;
  config.strategy = {StrategyKind::single_class, 25};
  LabelPipelineStats stats = run_label_pipeline(in, out, dict, config);
  EXPECT_EQ(stats.audit.labeled, 2u);  // "cafe" without the accent is another token
  EXPECT_EQ(stats.audit.correct, 2u);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  nlohmann::json row_a = nlohmann::json::parse(line);
  EXPECT_EQ(row_a["labels"], nlohmann::json::array({0}));
  std::getline(lines, line);
  nlohmann::json row_b = nlohmann::json::parse(line);
  ASSERT_FALSE(row_b["spans"].empty());
  EXPECT_EQ(row_b["spans"][0]["term"], "café au lait");
}

TEST(Pipeline, ByteIdenticalAcrossThreadCounts) {
  std::ostringstream input;
  std::mt19937_64 rng(63);
  std::vector<std::string> pool{"cat", "dog", "fox", "red", "hot", "tree", "sat"};
  for (int i = 0; i < 5000; ++i) {
    std::string title;
    size_t n = 1 + rng() % 6;
    for (size_t w = 0; w < n; ++w) {
      if (!title.empty()) title.push_back(' ');
      title += pool[rng() % pool.size()];
    }
    input << manifest_line("s" + std::to_string(i), title, static_cast<int>(rng() % 3));
  }
  TermDictionary dict = demo_dict();
  std::string reference;
  for (int threads : {1, 2, 5}) {
    std::istringstream in(input.str());
    std::ostringstream out;
    LabelPipelineConfig config;
    config.strategy = {StrategyKind::multi_class, 25};
    config.parallel.threads = threads;
    config.parallel.batch_lines = 128;
    LabelPipelineStats stats = run_label_pipeline(in, out, dict, config);
    EXPECT_EQ(stats.audit.total, 5000u);
    if (reference.empty())
      reference = out.str();
    else
      EXPECT_EQ(out.str(), reference);
  }
}
