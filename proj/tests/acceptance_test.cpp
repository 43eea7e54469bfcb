// Acceptance suite: one test per release criterion, each printing its own
// pass/fail line through the runner. Golden numbers come from published
// tables and figure data; everything else is checked against independent
// oracles at the stated tolerances.

#include <chrono>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "figure_data.hpp"
#include "oracles.hpp"
#include "shiftlab/shiftlab.hpp"
#include "testutil.hpp"

using namespace shiftlab;
using nlohmann::json;
using testutil::fresh_dir;
using testutil::run_cli;
using testutil::slurp;
using testutil::write;
namespace fs = std::filesystem;

namespace {

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// C1: average_robustness((.791,.373,.378,.153)) = .424 +-0.0005 and
//     E.R.R. = .487 +-0.001; E.R.R.(0.123, 0.236) = 0.521 +-0.001.
TEST(Acceptance, C1_MetricGoldens) {
  std::vector<double> shifts{0.791, 0.373, 0.378, 0.153};
  double avg = average_robustness(shifts);
  EXPECT_NEAR(avg, 0.424, 0.0005);
  auto err = effective_robustness_ratio(avg, 0.870);
  ASSERT_TRUE(err.has_value());
  EXPECT_NEAR(*err, 0.487, 0.001);
  auto err2 = effective_robustness_ratio(0.123, 0.236);
  ASSERT_TRUE(err2.has_value());
  EXPECT_NEAR(*err2, 0.521, 0.001);
}

// C2: top-10 averages over the published scatter values reproduce the trend
//     points: 0.578 / 0.655 / 0.720 by parameter bin and 0.884 (>=100m) on
//     the 100-class set; 0.717 (vit) and 0.668 (convolution) by family.
TEST(Acceptance, C2_FigureDataReproduction) {
  auto check_group = [](const figdata::BinScatter& g) {
    std::vector<ModelMetadata> models;
    std::vector<size_t> members;
    for (size_t i = 0; i < g.values.size(); ++i) {
      ModelMetadata m;
      m.model_id = "m" + std::to_string(i);
      m.metrics[g.metric] = g.values[i];
      members.push_back(i);
      models.push_back(std::move(m));
    }
    BinSummary s = top_k_average(models, members, g.metric, 10);
    ASSERT_TRUE(s.top_k_mean.has_value());
    EXPECT_NEAR(*s.top_k_mean, g.trend, 0.001) << g.bin << " " << g.metric;
  };
  for (const auto& g : figdata::kParamBins)
    if (g.metric == "avg_rob_in1000" || g.bin == ">=100m") check_group(g);
  for (const auto& g : figdata::kFamilyBins)
    if (g.metric == "avg_rob_in1000") check_group(g);

  // The same numbers end-to-end through the CLI aggregate pipeline.
  fs::path dir = fresh_dir("accept_agg");
  std::string csv = "model_id,parameter_count,avg_rob_in1000,avg_rob_in100\n";
  auto values_of = [](const std::string& bin, const std::string& metric) {
    for (const auto& g : figdata::kParamBins)
      if (g.bin == bin && g.metric == metric) return g.values;
    return std::vector<double>{};
  };
  struct BinInfo {
    std::string label;
    uint64_t base_params;
  };
  for (const BinInfo& b : {BinInfo{"<50m", 20'000'000}, BinInfo{"50m-100m", 60'000'000},
                           BinInfo{">=100m", 150'000'000}}) {
    std::vector<double> in1000 = values_of(b.label, "avg_rob_in1000");
    std::vector<double> in100 = values_of(b.label, "avg_rob_in100");
    for (size_t i = 0; i < in1000.size(); ++i) {
      csv += b.label + "model" + std::to_string(i) + "," +
             std::to_string(b.base_params + i * 1'000'000) + "," +
             format_double(in1000[i]) + "," + format_double(in100[i]) + "\n";
    }
  }
  write(dir / "models.csv", csv);
  fs::path out = dir / "out";
  std::string output;
  ASSERT_EQ(run_cli("aggregate --metadata " + (dir / "models.csv").string() +
                        " --dimension parameter_count --edges 5e7,1e8" +
                        " --metrics avg_rob_in1000,avg_rob_in100 --k 10 --out " + out.string(),
                    &output),
            0)
      << output;
  json summaries = json::parse(slurp(out / "summaries.json"));
  std::map<std::pair<std::string, std::string>, double> means;
  for (const auto& b : summaries["bins"])
    means[{b["bin"], b["metric"]}] = b["top_k_mean"].get<double>();
  EXPECT_NEAR((means[{"<50m", "avg_rob_in1000"}]), 0.578, 0.001);
  EXPECT_NEAR((means[{"50m-100m", "avg_rob_in1000"}]), 0.655, 0.001);
  EXPECT_NEAR((means[{">=100m", "avg_rob_in1000"}]), 0.720, 0.001);
  EXPECT_NEAR((means[{">=100m", "avg_rob_in100"}]), 0.884, 0.001);
}

// C3: the published marginal rows pass at tolerance 0.002; a 0.05
//     perturbation fails.
TEST(Acceptance, C3_MarginalConsistency) {
  for (const auto& row : {figdata::kVolo, figdata::kVgg16}) {
    MarginalCheck c = marginal_consistency_check(row.by_label_set, row.by_shift, 0.002);
    EXPECT_TRUE(c.pass) << row.name << " diff " << c.difference;
  }
  for (const auto& row : {figdata::kVolo, figdata::kVgg16}) {
    std::vector<double> perturbed = row.by_label_set;
    perturbed[1] += 0.05;
    EXPECT_FALSE(marginal_consistency_check(perturbed, row.by_shift, 0.002).pass) << row.name;
    std::vector<double> down = row.by_shift;
    down[0] -= 0.05;
    EXPECT_FALSE(marginal_consistency_check(row.by_label_set, down, 0.002).pass) << row.name;
  }
}

// C4: on 10,000 random captions x a 100-class random dictionary (terms of
//     1-3 tokens), find_matches equals exhaustive n-gram enumeration exactly
//     and strict/sc/mc containment holds per record. Runtime < 10 s.
TEST(Acceptance, C4_MatcherOracleEquivalence) {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(0xACCE97);
  oracle::RandomDict od = oracle::random_dictionary(rng, 100, 5, 3, 400);
  std::map<int32_t, ClassEntry> entries;
  for (const oracle::Term& t : od.terms) {
    ClassEntry& e = entries[t.class_id];
    e.class_id = t.class_id;
    e.class_name = "class" + std::to_string(t.class_id);
    std::string phrase;
    for (const std::string& tok : t.tokens) {
      if (!phrase.empty()) phrase.push_back(' ');
      phrase += tok;
    }
    e.terms.push_back(phrase);
  }
  std::vector<ClassEntry> list;
  for (auto& [id, e] : entries) list.push_back(std::move(e));
  TermDictionary dict = TermDictionary::from_entries("fuzz100", list);

  const MatchStrategy strict{StrategyKind::strict, 25};
  const MatchStrategy sc{StrategyKind::single_class, 25};
  const MatchStrategy mc{StrategyKind::multi_class, 25};

  int matched_records = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<std::string> tokens = oracle::random_caption(rng, od, 24);
    if (i % 5 == 0) tokens.insert(tokens.begin() + tokens.size() / 2, kFieldBoundaryToken);
    MatchOutcome out = find_matches(tokens, dict);

    std::set<oracle::SpanKey> got;
    for (const TokenSpan& s : out.spans) got.emplace(s.start, s.length, s.class_id);
    ASSERT_EQ(got, oracle::find_matches(tokens, kFieldBoundaryToken, od.terms)) << "record " << i;

    auto ls = decide_label(out, strict).labels;
    auto lsc = decide_label(out, sc).labels;
    auto lmc = decide_label(out, mc).labels;
    for (int32_t c : ls)
      ASSERT_NE(std::find(lsc.begin(), lsc.end(), c), lsc.end());
    for (int32_t c : lsc)
      ASSERT_NE(std::find(lmc.begin(), lmc.end(), c), lmc.end());
    matched_records += !lmc.empty();
  }
  EXPECT_GT(matched_records, 1000);  // the corpus genuinely exercises matching
  EXPECT_LT(elapsed_s(t0), 10.0);
}

// C5: utilization = label_accuracy x coverage exactly on fuzzed audits; the
//     published (0.89 label acc, 0.72 util) pair is consistent with derived
//     coverage 0.809.
TEST(Acceptance, C5_AuditIdentities) {
  std::mt19937_64 rng(0xACCE55);
  for (int i = 0; i < 20000; ++i) {
    uint64_t total = 1 + rng() % 100000;
    uint64_t labeled = rng() % (total + 1);
    uint64_t correct = labeled ? rng() % (labeled + 1) : 0;
    AuditReport r;
    r.total = total;
    r.labeled = labeled;
    r.correct = correct;
    r.gt_present = total;
    // All three fractions derive from one count triple, so the identity
    // (c/l)*(l/t) = c/t is exact in rational arithmetic; the double-precision
    // product may round, hence the 1e-12 bound on the recomputed form.
    ASSERT_NEAR(r.label_accuracy() * r.coverage(), r.utilization(), 1e-12);
    ASSERT_TRUE(audit_identity_check(r).consistent);
  }

  double derived_coverage = 0.72 / 0.89;
  EXPECT_NEAR(derived_coverage, 0.809, 0.0005);
  EXPECT_TRUE(audit_identity_check(0.89, derived_coverage, 0.72).consistent);
}

// C6: remapping onto a subset never hurts per-sample correctness for samples
//     whose gt lies in the subset (10,000 dense vectors); the partition
//     average identity holds exactly on a class-balanced eval set.
TEST(Acceptance, C6_SubsetMonotonicity) {
  std::mt19937_64 rng(0xACCE56);
  std::vector<LabelSet::Class> classes;
  for (int32_t i = 0; i < 24; ++i) classes.push_back({i, "c" + std::to_string(i)});
  LabelSet parent("p", classes);

  for (int i = 0; i < 10000; ++i) {
    PredictionRecord pred;
    pred.sample_id = "s";
    pred.kind = PredictionKind::dense;
    for (size_t c = 0; c < parent.size(); ++c)
      pred.dense.push_back((rng() % 1000) / 1000.0);
    std::set<int32_t> sub;
    while (sub.size() < 8) sub.insert(static_cast<int32_t>(rng() % parent.size()));
    std::vector<int32_t> sv(sub.begin(), sub.end());
    LabelSet target = subset(parent, sv);
    int32_t gt = sv[rng() % sv.size()];

    bool full_correct =
        remap_prediction(pred, parent, subset(parent, parent.ids())).argmax_class == gt;
    bool sub_correct = remap_prediction(pred, parent, target).argmax_class == gt;
    ASSERT_GE(sub_correct, full_correct) << "sample " << i;
  }

  // Partition-average identity on a class-balanced set: 12 classes x 5
  // samples, k = 4 equal parts.
  std::vector<LabelSet::Class> cls12;
  for (int32_t i = 0; i < 12; ++i) cls12.push_back({i, "c" + std::to_string(i)});
  LabelSet ls("bal", cls12);
  const int per_class = 5;
  EvalSet es;
  es.id = "balanced";
  es.shift_kind = ShiftKind::base;
  std::vector<PredictionRecord> preds;
  for (int32_t c = 0; c < 12; ++c) {
    for (int m = 0; m < per_class; ++m) {
      std::string id = "s" + std::to_string(c) + "_" + std::to_string(m);
      es.samples.push_back({id, c});
      PredictionRecord p;
      p.sample_id = id;
      p.kind = PredictionKind::dense;
      for (int32_t k = 0; k < 12; ++k) p.dense.push_back((rng() % 1000) / 1000.0);
      preds.push_back(std::move(p));
    }
  }
  const size_t k = 4;
  LabelSetPartition parts = partition_into_k(ls, k, 99);
  int64_t total_correct = 0, total_samples = 0;
  double acc_sum = 0.0;
  std::vector<int64_t> part_sizes;
  for (const LabelSet& part : parts.parts) {
    EvalResult r = score_predictions(preds, es, ls, part.ids(), "m");
    total_correct += r.trace();
    total_samples += static_cast<int64_t>(r.total);
    acc_sum += r.accuracy();
    part_sizes.push_back(static_cast<int64_t>(r.total));
  }
  for (int64_t n : part_sizes) ASSERT_EQ(n, part_sizes[0]);  // balanced parts
  double mean_of_parts = acc_sum / static_cast<double>(k);
  double overall = static_cast<double>(total_correct) / static_cast<double>(total_samples);
  // Equal denominators make the two expressions the same rational number.
  ASSERT_EQ(total_samples, static_cast<int64_t>(k) * part_sizes[0]);
  EXPECT_NEAR(mean_of_parts, overall, 1e-12);
}

// C7: confusion identities hold exactly on fuzzed evaluations.
TEST(Acceptance, C7_ConfusionIdentities) {
  std::mt19937_64 rng(0xACCE57);
  for (int iter = 0; iter < 300; ++iter) {
    int32_t n_classes = 2 + static_cast<int32_t>(rng() % 12);
    std::vector<LabelSet::Class> classes;
    for (int32_t i = 0; i < n_classes; ++i) classes.push_back({i, ""});
    LabelSet ls("f", classes);
    EvalSet es;
    es.id = "fz";
    es.shift_kind = ShiftKind::base;
    std::vector<PredictionRecord> preds;
    std::map<int32_t, int64_t> class_counts;
    int64_t correct = 0;
    size_t n = 1 + rng() % 500;
    for (size_t i = 0; i < n; ++i) {
      int32_t gt = static_cast<int32_t>(rng() % n_classes);
      int32_t pr = static_cast<int32_t>(rng() % n_classes);
      std::string id = "s" + std::to_string(i);
      es.samples.push_back({id, gt});
      PredictionRecord p;
      p.sample_id = id;
      p.kind = PredictionKind::argmax;
      p.argmax_class = pr;
      preds.push_back(std::move(p));
      ++class_counts[gt];
      correct += gt == pr;
    }
    EvalResult r = score_predictions(preds, es, ls, {}, "m");
    ASSERT_EQ(r.trace(), correct);
    ASSERT_DOUBLE_EQ(r.accuracy(), static_cast<double>(correct) / static_cast<double>(n));
    for (size_t c = 0; c < ls.size(); ++c) {
      int64_t expected =
          class_counts.count(static_cast<int32_t>(c)) ? class_counts[static_cast<int32_t>(c)] : 0;
      ASSERT_EQ(r.row_count(c), expected);
    }
  }
}

// C8: cmd_label pushes 1,000,000 synthetic records through a 100-class
//     dictionary (~5 terms/class) in under 60 s, byte-identical across runs.
TEST(Acceptance, C8_MillionRecordThroughput) {
  fs::path dir = fresh_dir("accept_throughput");

  // 100-class dictionary, 5 terms each, 1-3 tokens.
  std::mt19937_64 rng(0xACCE58);
  json dict_classes = json::array();
  std::vector<std::string> term_words;
  for (int w = 0; w < 300; ++w) term_words.push_back("term" + std::to_string(w));
  std::set<std::string> used;
  for (int c = 0; c < 100; ++c) {
    json terms = json::array();
    int added = 0;
    while (added < 5) {
      size_t len = 1 + rng() % 3;
      std::string phrase;
      for (size_t t = 0; t < len; ++t) {
        if (!phrase.empty()) phrase.push_back(' ');
        phrase += term_words[rng() % term_words.size()];
      }
      if (used.insert(phrase).second) {
        terms.push_back(phrase);
        ++added;
      }
    }
    dict_classes.push_back({{"id", c}, {"name", "class" + std::to_string(c)}, {"terms", terms}});
  }
  write(dir / "dict.json", json{{"labelset_id", "bench"}, {"classes", dict_classes}}.dump());

  {
    std::ofstream manifest(dir / "manifest.jsonl", std::ios::binary);
    std::vector<std::string> filler{"a", "photo", "of", "the", "and", "with", "my",
                                    "holiday", "trip", "city", "beach", "mountain"};
    std::string line;
    for (int i = 0; i < 1000000; ++i) {
      std::string title;
      size_t n = 4 + rng() % 12;
      for (size_t w = 0; w < n; ++w) {
        if (!title.empty()) title.push_back(' ');
        if (rng() % 3 == 0)
          title += term_words[rng() % term_words.size()];
        else
          title += filler[rng() % filler.size()];
      }
      line = json{{"sample_id", "s" + std::to_string(i)},
                  {"title", title},
                  {"gt_label", static_cast<int>(rng() % 100)}}
                 .dump();
      manifest << line << "\n";
    }
  }

  fs::path out = dir / "out";
  std::string args = "label --manifest " + (dir / "manifest.jsonl").string() + " --dict " +
                     (dir / "dict.json").string() + " --out " + out.string() + " --strategy sc";

  std::string output;
  auto t1 = std::chrono::steady_clock::now();
  ASSERT_EQ(run_cli(args, &output), 0) << output;
  double run1 = elapsed_s(t1);
  std::string labels1 = slurp(out / "labels.jsonl");
  std::string audit1 = slurp(out / "audit.json");

  auto t2 = std::chrono::steady_clock::now();
  ASSERT_EQ(run_cli(args, &output), 0) << output;
  double run2 = elapsed_s(t2);

  json audit = json::parse(audit1);
  EXPECT_EQ(audit["total"], 1000000);
  EXPECT_GT(audit["labeled"].get<int64_t>(), 100000);  // matching genuinely happened
  EXPECT_EQ(slurp(out / "labels.jsonl"), labels1);
  EXPECT_EQ(slurp(out / "audit.json"), audit1);
  EXPECT_LT(run1, 60.0) << "first run took " << run1 << "s";
  EXPECT_LT(run2, 60.0) << "second run took " << run2 << "s";

  std::error_code ec;
  fs::remove_all(dir, ec);  // ~0.5 GB of fixtures
}
