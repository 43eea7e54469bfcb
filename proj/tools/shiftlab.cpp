// shiftlab: caption labeling via subset matching, dataset audits, and
// robustness scoring across distribution shifts, as reproducible batch runs.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shiftlab/shiftlab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shiftlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRecordErrors = 1;
constexpr int kExitFatal = 2;

class FatalError : public std::runtime_error {
 public:
  explicit FatalError(const std::string& what) : std::runtime_error(what) {}
};

// Bookkeeping emitted for every run, success or failure: tool version,
// effective config, input digests, wall time, warnings and errors.
struct RunContext {
  std::string command;
  std::optional<fs::path> out_dir;
  uint64_t seed = 0;
  std::string config_text;
  std::string config_digest;
  std::map<std::string, std::string> input_digests;
  std::vector<std::string> warnings;
  std::vector<std::string> errors;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void set_config(const std::string& text) {
    config_text = text;
    config_digest = to_hex(fnv1a64(command + "\n" + text));
  }

  json meta() const {
    return json{{"tool", kToolName},
                {"version", kVersion},
                {"command", command},
                {"config_digest", config_digest},
                {"seed", seed}};
  }

  void add_input(const fs::path& p) {
    input_digests[p.string()] = to_hex(digest_file(p.string()));
  }

  void warn(std::string msg) {
    std::cerr << "warning: " << msg << "\n";
    warnings.push_back(std::move(msg));
  }

  json manifest(int exit_code) const {
    auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    return json{{"_meta", meta()},
                {"config", config_text},
                {"inputs", input_digests},
                {"wall_ms", wall},
                {"exit_code", exit_code},
                {"warnings", warnings},
                {"errors", errors}};
  }

  // To the output directory when one was created; otherwise to stderr so a
  // failed validation still leaves a trace without partial output.
  void finish(int exit_code) const {
    json m = manifest(exit_code);
    if (out_dir && fs::exists(*out_dir)) {
      std::ofstream out(*out_dir / "run_manifest.json");
      out << m.dump(2) << "\n";
    } else {
      std::cerr << m.dump(2) << "\n";
    }
  }
};

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p))
    throw FatalError(std::string(what) + " not found: " + p.string());
}

void write_text(const fs::path& p, std::string_view content) {
  write_file(p.string(), content);
}

void write_json_doc(const fs::path& p, json doc, const RunContext& ctx) {
  doc["_meta"] = ctx.meta();
  std::ofstream out(p);
  if (!out) throw FatalError("cannot write " + p.string());
  out << doc.dump(2) << "\n";
}

std::string csv_header_comment(const RunContext& ctx) {
  return "# " + std::string(kToolName) + " v" + kVersion + " config=" + ctx.config_digest +
         " seed=" + std::to_string(ctx.seed) + "\n";
}

std::string meta_line(const RunContext& ctx) {
  return json{{"_meta", ctx.meta()}}.dump() + "\n";
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos <= csv.size()) {
    size_t comma = csv.find(',', pos);
    if (comma == std::string::npos) comma = csv.size();
    std::string item = csv.substr(pos, comma - pos);
    if (!item.empty()) {
      auto v = parse_number(item);
      if (!v) throw FatalError("not a number: \"" + item + "\"");
      out.push_back(*v);
    }
    pos = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------- label ---

struct LabelArgs {
  std::string manifest, dict, out;
  std::string strategy = "sc";
  int mc_cap = 25;
  std::string exclude_mode = "per-class";
  std::string fields = "title,tags,description,alt_text";
  int threads = 0;
  int batch = 2048;
  uint64_t seed = 0;
};

int run_label(const LabelArgs& a, RunContext& ctx) {
  require_file(a.manifest, "caption manifest");
  require_file(a.dict, "term dictionary");
  LabelPipelineConfig config;
  config.strategy = {parse_strategy(a.strategy), a.mc_cap};
  config.mode = parse_exclusion_mode(a.exclude_mode);
  config.field_order = parse_field_order(a.fields);
  config.parallel.threads = a.threads;
  config.parallel.batch_lines = static_cast<size_t>(a.batch);
  if (config.strategy.mc_cap < 1) throw FatalError("--mc-cap must be >= 1");

  ctx.add_input(a.manifest);
  ctx.add_input(a.dict);
  TermDictionary dict = TermDictionary::load_file(a.dict);

  fs::create_directories(*ctx.out_dir);
  std::ifstream in(a.manifest, std::ios::binary);
  std::ofstream labels(*ctx.out_dir / "labels.jsonl", std::ios::binary);
  if (!labels) throw FatalError("cannot write labels.jsonl");
  labels << meta_line(ctx);

  LabelPipelineStats stats = run_label_pipeline(in, labels, dict, config);
  labels.close();

  for (const auto& [line, msg] : stats.errors)
    ctx.errors.push_back("line " + std::to_string(line) + ": " + msg);
  if (stats.audit.record_errors > stats.errors.size())
    ctx.errors.push_back(std::to_string(stats.audit.record_errors - stats.errors.size()) +
                         " further record errors");

  json audit = audit_to_json(stats.audit);
  audit["strategy"] = to_string(config.strategy.kind);
  audit["exclude_mode"] = to_string(config.mode);
  write_json_doc(*ctx.out_dir / "audit.json", std::move(audit), ctx);
  write_text(*ctx.out_dir / "audit.txt", csv_header_comment(ctx) + audit_to_text(stats.audit));
  write_json_doc(*ctx.out_dir / "histogram.json", histogram_to_json(stats.histogram), ctx);
  write_text(*ctx.out_dir / "histogram.csv",
             csv_header_comment(ctx) + histogram_to_csv(stats.histogram, &dict));
  return stats.audit.record_errors ? kExitRecordErrors : kExitOk;
}

// ---------------------------------------------------------------- audit ---

struct LabelRow {
  std::string sample_id;
  std::vector<int32_t> labels;
  bool dropped = true;
};

// Streams a labels.jsonl file (skipping the _meta header line).
template <typename Fn>
uint64_t for_each_label_row(const std::string& path, std::vector<std::string>& errors, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FatalError("cannot open labels file: " + path);
  std::string line;
  uint64_t line_no = 0, bad = 0;
  while (read_line(in, line)) {
    ++line_no;
    if (line.empty() || is_meta_line(line)) continue;
    try {
      json j = json::parse(line);
      LabelRow row;
      row.sample_id = j.at("sample_id").get<std::string>();
      row.labels = j.at("labels").get<std::vector<int32_t>>();
      row.dropped = j.at("dropped").get<bool>();
      fn(row);
    } catch (const std::exception& ex) {
      ++bad;
      if (errors.size() < kMaxStoredErrors)
        errors.push_back("line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return bad;
}

struct AuditArgs {
  std::string labels, manifest, dict, out;
  double check_label_acc = -1, check_coverage = -1, check_utilization = -1;
  double tolerance = 1e-3;
};

int run_audit(const AuditArgs& a, RunContext& ctx) {
  // Pure identity-check mode: verify a claimed (accuracy, coverage,
  // utilization) triple without any files.
  bool triple = a.check_label_acc >= 0 || a.check_coverage >= 0 || a.check_utilization >= 0;
  if (triple) {
    if (a.check_label_acc < 0 || a.check_coverage < 0 || a.check_utilization < 0)
      throw FatalError("--label-acc, --coverage and --utilization must be given together");
    IdentityVerdict v = audit_identity_check(a.check_label_acc, a.check_coverage,
                                             a.check_utilization, a.tolerance);
    json doc{{"label_accuracy", a.check_label_acc},
             {"coverage", a.check_coverage},
             {"utilization", a.check_utilization},
             {"tolerance", a.tolerance},
             {"difference", v.difference},
             {"consistent", v.consistent}};
    if (ctx.out_dir) {
      fs::create_directories(*ctx.out_dir);
      write_json_doc(*ctx.out_dir / "identity_check.json", doc, ctx);
    }
    std::cout << (v.consistent ? "consistent" : "INCONSISTENT") << " |acc*cov - util| = "
              << format_double(v.difference) << "\n";
    return v.consistent ? kExitOk : kExitRecordErrors;
  }

  require_file(a.labels, "labels file");
  ctx.add_input(a.labels);
  std::optional<TermDictionary> dict;
  if (!a.dict.empty()) {
    require_file(a.dict, "term dictionary");
    ctx.add_input(a.dict);
    dict = TermDictionary::load_file(a.dict);
  }

  // Ground truth joined from the original manifest when provided.
  std::unordered_map<std::string, int32_t> gt;
  if (!a.manifest.empty()) {
    require_file(a.manifest, "caption manifest");
    ctx.add_input(a.manifest);
    std::ifstream in(a.manifest, std::ios::binary);
    std::string line;
    while (read_line(in, line)) {
      if (line.empty() || is_meta_line(line)) continue;
      try {
        CaptionRecord rec = parse_caption_record_line(line);
        if (rec.gt_label) gt[rec.sample_id] = *rec.gt_label;
      } catch (const std::exception&) {
        // manifest errors are counted by `label`; the audit join just skips
      }
    }
  }

  AuditReport report;
  ClassHistogram hist;
  if (dict) hist.init_universe(dict->classes());
  report.record_errors = for_each_label_row(a.labels, ctx.errors, [&](const LabelRow& row) {
    LabeledSample s;
    s.sample_id = row.sample_id;
    s.labels = row.labels;
    s.dropped = row.dropped;
    if (auto it = gt.find(row.sample_id); it != gt.end()) s.gt_label = it->second;
    report.add(s);
    for (int32_t c : row.labels) hist.add_label(c);
  });

  fs::create_directories(*ctx.out_dir);
  json doc = audit_to_json(report);
  IdentityVerdict v = audit_identity_check(report, a.tolerance);
  doc["identity_consistent"] = v.consistent;
  write_json_doc(*ctx.out_dir / "audit.json", std::move(doc), ctx);
  write_text(*ctx.out_dir / "audit.txt", csv_header_comment(ctx) + audit_to_text(report));
  write_json_doc(*ctx.out_dir / "histogram.json", histogram_to_json(hist), ctx);
  write_text(*ctx.out_dir / "histogram.csv",
             csv_header_comment(ctx) + histogram_to_csv(hist, dict ? &*dict : nullptr));
  std::cout << audit_to_text(report);
  return report.record_errors ? kExitRecordErrors : kExitOk;
}

// -------------------------------------------------------------- balance ---

struct BalanceArgs {
  std::string labels, out;
  uint64_t target = 0;  // 0 = smallest represented class
  std::string mode = "undersample";
  uint64_t seed = 0;
};

int run_balance(const BalanceArgs& a, RunContext& ctx) {
  require_file(a.labels, "labels file");
  ctx.add_input(a.labels);

  std::map<int32_t, std::vector<std::string>> occurrences;
  ClassHistogram hist;
  uint64_t bad = for_each_label_row(a.labels, ctx.errors, [&](const LabelRow& row) {
    for (int32_t c : row.labels) {
      occurrences[c].push_back(row.sample_id);
      hist.add_label(c);
    }
  });
  if (hist.total == 0) throw FatalError("labels file has no labeled samples");

  uint64_t target = a.target;
  if (target == 0) {
    target = UINT64_MAX;
    for (const auto& [c, n] : hist.counts)
      if (n > 0) target = std::min(target, n);
  }

  RebalancePlan plan = rebalance_plan(hist, target, parse_rebalance_mode(a.mode), a.seed);
  RebalanceSelection sel = apply_rebalance(plan, occurrences);

  fs::create_directories(*ctx.out_dir);
  write_json_doc(*ctx.out_dir / "plan.json", rebalance_plan_to_json(plan), ctx);
  std::ofstream out(*ctx.out_dir / "selected.jsonl", std::ios::binary);
  out << meta_line(ctx);
  for (const auto& [cls, sample] : sel.rows)
    out << json{{"class", cls}, {"sample_id", sample}}.dump() << "\n";
  std::cout << "target " << target << ", " << plan.classes.size() << " classes, "
            << sel.rows.size() << " selected occurrences\n";
  return bad ? kExitRecordErrors : kExitOk;
}

// ----------------------------------------------------------------- eval ---

struct EvalArgs {
  std::string labelset, out, model_id;
  std::vector<std::string> evalsets;
  std::vector<std::string> preds;
  std::vector<std::string> shift_universes;  // KIND=path
  std::string subset;
  int partition = 0;
  uint64_t seed = 0;
  bool best = false;
  bool confusion = false;
};

int run_eval(const EvalArgs& a, RunContext& ctx) {
  require_file(a.labelset, "label set");
  for (const auto& p : a.evalsets) require_file(p, "eval set");
  for (const auto& p : a.preds) require_file(p, "prediction log");
  if (!a.subset.empty()) require_file(a.subset, "subset file");
  if (a.preds.empty()) throw FatalError("at least one --preds log is required");
  if (!a.model_id.empty() && a.preds.size() > 1)
    throw FatalError("--model-id only applies to a single prediction log");

  ctx.add_input(a.labelset);
  LabelSet full = LabelSet::load_file(a.labelset);

  // Shift class universes, e.g. --shift-universe R=imagenet_r_classes.json
  std::map<ShiftKind, std::vector<int32_t>> universes;
  for (const std::string& spec : a.shift_universes) {
    size_t eq = spec.find('=');
    if (eq == std::string::npos)
      throw FatalError("--shift-universe expects KIND=FILE, got " + spec);
    ShiftKind kind = parse_shift_kind(spec.substr(0, eq));
    std::string path = spec.substr(eq + 1);
    require_file(path, "shift universe");
    ctx.add_input(path);
    universes[kind] = LabelSet::load_file(path).ids();
  }

  // Evaluation restricted to a subset of the label set when requested.
  LabelSet effective = full;
  if (!a.subset.empty()) {
    ctx.add_input(a.subset);
    effective = subset(full, LabelSet::load_file(a.subset).ids());
  }

  std::vector<EvalSet> evalsets;
  for (const std::string& p : a.evalsets) {
    ctx.add_input(p);
    EvalSet e = EvalSet::load_file(p);
    if (!e.labelset_id.empty() && e.labelset_id != full.id())
      throw FatalError("eval set " + e.id + " is over label set " + e.labelset_id +
                       ", not " + full.id());
    evalsets.push_back(std::move(e));
  }

  fs::create_directories(*ctx.out_dir);

  std::string accs_csv = csv_header_comment(ctx) +
                         "model_id,checkpoint,labelset,eval_set,shift,total,accuracy\n";
  std::string reports_csv =
      csv_header_comment(ctx) +
      "model_id,checkpoint,labelset,base_accuracy,acc_V2,acc_S,acc_R,acc_A,avg_robustness,err\n";
  std::string partitions_csv =
      csv_header_comment(ctx) + "model_id,checkpoint,eval_set,part,total,accuracy\n";
  std::ofstream results_jsonl(*ctx.out_dir / "results.jsonl", std::ios::binary);
  results_jsonl << meta_line(ctx);

  auto shift_cell = [](const RobustnessReport& r, ShiftKind k) -> std::string {
    auto it = r.shift_accuracies.find(k);
    return it == r.shift_accuracies.end() ? std::string{} : format_double(it->second);
  };

  for (const std::string& pred_path : a.preds) {
    std::string model_id = !a.model_id.empty() ? a.model_id : fs::path(pred_path).stem().string();
    ctx.add_input(pred_path);

    // Group predictions by (checkpoint, eval set).
    std::map<std::string, std::map<std::string, std::vector<PredictionRecord>>> grouped;
    {
      std::ifstream in(pred_path, std::ios::binary);
      std::string line;
      uint64_t line_no = 0;
      while (read_line(in, line)) {
        ++line_no;
        if (line.empty() || is_meta_line(line)) continue;
        try {
          PredictionRecord p = parse_prediction_line(line);
          grouped[p.checkpoint_tag][p.eval_set_id].push_back(std::move(p));
        } catch (const std::exception& ex) {
          throw FatalError(pred_path + ":" + std::to_string(line_no) + ": " + ex.what());
        }
      }
    }
    if (grouped.empty()) throw FatalError("prediction log " + pred_path + " is empty");

    std::vector<RobustnessReport> checkpoint_reports;
    json model_doc{{"model_id", model_id}, {"labelset", effective.id()}, {"checkpoints", json::array()}};

    for (auto& [checkpoint, by_evalset] : grouped) {
      std::vector<EvalResult> base_results, shift_results;
      for (const EvalSet& es : evalsets) {
        auto it = by_evalset.find(es.id);
        if (it == by_evalset.end())
          throw FatalError("model " + model_id + " checkpoint \"" + checkpoint +
                           "\" has no predictions for eval set " + es.id);
        // Shared classes: R/A-style shifts are scored only on the
        // intersection of the label set with the shift's class universe.
        std::vector<int32_t> allowed = effective.ids();
        if (auto u = universes.find(es.shift_kind); u != universes.end())
          allowed = shared_classes(effective, u->second, es.id).shared;
        if (allowed.empty()) {
          ctx.warn("eval set " + es.id + " shares no classes with the label set; skipped");
          continue;
        }
        EvalResult r = score_predictions(it->second, es, full, allowed, model_id);
        r.checkpoint_tag = checkpoint;
        if (r.surplus_predictions)
          ctx.warn(std::to_string(r.surplus_predictions) + " surplus predictions ignored on " +
                   es.id + " (" + model_id + ", checkpoint \"" + checkpoint + "\")");
        accs_csv += model_id + "," + checkpoint + "," + effective.id() + "," + es.id + "," +
                    to_string(es.shift_kind) + "," + std::to_string(r.total) + "," +
                    format_double(r.accuracy()) + "\n";
        results_jsonl << eval_result_to_json(r, a.confusion).dump() << "\n";

        // Disjoint sub-problems: partition the label set, score each part on
        // the samples it owns.
        if (a.partition > 0) {
          LabelSetPartition parts =
              partition_into_k(effective, static_cast<size_t>(a.partition), a.seed);
          double acc_sum = 0.0;
          size_t parts_used = 0;
          for (size_t pi = 0; pi < parts.parts.size(); ++pi) {
            std::vector<int32_t> part_ids = parts.parts[pi].ids();
            if (auto u = universes.find(es.shift_kind); u != universes.end())
              part_ids = shared_classes(parts.parts[pi], u->second, es.id).shared;
            if (part_ids.empty()) continue;
            EvalResult pr = score_predictions(it->second, es, full, part_ids, model_id);
            if (pr.total == 0) continue;
            partitions_csv += model_id + "," + checkpoint + "," + es.id + "," +
                              std::to_string(pi) + "," + std::to_string(pr.total) + "," +
                              format_double(pr.accuracy()) + "\n";
            acc_sum += pr.accuracy();
            ++parts_used;
          }
          if (parts_used) {
            partitions_csv += model_id + "," + checkpoint + "," + es.id + ",mean," + "," +
                              format_double(acc_sum / static_cast<double>(parts_used)) + "\n";
          }
        }

        if (r.shift_kind == ShiftKind::base)
          base_results.push_back(std::move(r));
        else
          shift_results.push_back(std::move(r));
      }

      if (base_results.size() > 1)
        throw FatalError("more than one base eval set for checkpoint \"" + checkpoint + "\"");
      if (!base_results.empty() && !shift_results.empty()) {
        RobustnessReport rep = build_report(base_results[0], shift_results);
        reports_csv += model_id + "," + checkpoint + "," + effective.id() + "," +
                       format_double(rep.base_accuracy) + "," + shift_cell(rep, ShiftKind::V2) +
                       "," + shift_cell(rep, ShiftKind::S) + "," + shift_cell(rep, ShiftKind::R) +
                       "," + shift_cell(rep, ShiftKind::A) + "," +
                       format_double(rep.avg_robustness) + "," +
                       (rep.err ? format_double(*rep.err) : std::string{}) + "\n";
        // Display rounds to 3 decimals; the CSV/JSON artifacts keep full precision.
        char err_buf[32] = "n/a";
        if (rep.err) snprintf(err_buf, sizeof(err_buf), "%.3f", *rep.err);
        char line[256];
        snprintf(line, sizeof(line), "%-24s %-12s val %.3f  avg rob %.3f  err %s\n",
                 model_id.c_str(), checkpoint.empty() ? "-" : checkpoint.c_str(),
                 rep.base_accuracy, rep.avg_robustness, err_buf);
        std::cout << line;
        model_doc["checkpoints"].push_back(robustness_report_to_json(rep));
        checkpoint_reports.push_back(std::move(rep));
      } else {
        ctx.warn("checkpoint \"" + checkpoint + "\" of " + model_id +
                 " lacks a base or shift evaluation; no robustness report");
      }
    }

    if (a.best && !checkpoint_reports.empty()) {
      model_doc["best"] = robustness_report_to_json(select_best_checkpoint(checkpoint_reports));
    }
    write_json_doc(*ctx.out_dir / ("model." + model_id + ".json"), std::move(model_doc), ctx);
  }

  write_text(*ctx.out_dir / "accuracies.csv", accs_csv);
  write_text(*ctx.out_dir / "reports.csv", reports_csv);
  if (a.partition > 0) write_text(*ctx.out_dir / "partitions.csv", partitions_csv);
  return kExitOk;
}

// ------------------------------------------------------------ aggregate ---

struct AggregateArgs {
  std::string metadata, out;
  std::string dimension = "parameter_count";
  std::string edges;
  std::string metrics;
  int k = 10;
};

int run_aggregate(const AggregateArgs& a, RunContext& ctx) {
  require_file(a.metadata, "metadata table");
  ctx.add_input(a.metadata);
  if (a.k < 1) throw FatalError("--k must be >= 1");

  std::ifstream in(a.metadata, std::ios::binary);
  std::string ext = fs::path(a.metadata).extension().string();
  MetadataLoad load =
      (ext == ".jsonl" || ext == ".ndjson") ? load_metadata_jsonl(in) : load_metadata_csv(in);
  for (const std::string& w : load.warnings) ctx.warn(w);
  if (load.models.empty()) throw FatalError("metadata table has no models");

  BinSpec::Dimension dim = parse_dimension(a.dimension);
  BinSpec spec;
  if (dim == BinSpec::Dimension::architecture_family || dim == BinSpec::Dimension::loss_kind) {
    spec = BinSpec::categorical(dim);
  } else {
    if (a.edges.empty()) throw FatalError("--edges is required for numeric dimensions");
    spec = BinSpec::numeric(dim, parse_double_list(a.edges));
  }

  std::vector<std::string> metrics;
  if (!a.metrics.empty()) {
    size_t pos = 0;
    while (pos <= a.metrics.size()) {
      size_t comma = a.metrics.find(',', pos);
      if (comma == std::string::npos) comma = a.metrics.size();
      if (comma > pos) metrics.push_back(a.metrics.substr(pos, comma - pos));
      pos = comma + 1;
    }
  } else {
    std::map<std::string, bool> seen;
    for (const ModelMetadata& m : load.models)
      for (const auto& [k, v] : m.metrics) seen.emplace(k, true);
    for (const auto& [k, v] : seen) metrics.push_back(k);
  }
  if (metrics.empty()) throw FatalError("no metric columns found");

  Binning binning = bin_models(load.models, spec);
  for (const auto& [model, reason] : binning.excluded) ctx.warn(model + ": " + reason);

  std::vector<BinSummary> summaries;
  for (size_t b = 0; b < binning.bins.size(); ++b) {
    if (binning.bins[b].empty()) continue;
    for (const std::string& metric : metrics) {
      BinSummary s = top_k_average(load.models, binning.bins[b], metric,
                                   static_cast<size_t>(a.k), b, spec.bin_label(b));
      if (!s.top_k_mean)
        ctx.warn("bin " + spec.bin_label(b) + " has no models with metric " + metric);
      summaries.push_back(std::move(s));
    }
  }

  fs::create_directories(*ctx.out_dir);
  json doc{{"dimension", to_string(spec.dimension)},
           {"k", a.k},
           {"models", load.models.size()},
           {"excluded", binning.excluded.size()},
           {"bins", json::array()}};
  for (const BinSummary& s : summaries) {
    json b{{"bin", s.bin_label},
           {"metric", s.metric},
           {"members", s.member_count},
           {"top_ids", s.top_ids},
           {"top_values", s.top_values},
           {"values", s.values}};
    b["top_k_mean"] = s.top_k_mean ? json(*s.top_k_mean) : json(nullptr);
    doc["bins"].push_back(std::move(b));
  }
  write_json_doc(*ctx.out_dir / "summaries.json", std::move(doc), ctx);

  std::vector<ScatterSeries> series = emit_series(summaries, metrics);
  write_text(*ctx.out_dir / "series.csv", csv_header_comment(ctx) + series_to_csv(series));
  std::cout << "wrote " << summaries.size() << " bin summaries over " << metrics.size()
            << " metrics\n";
  return kExitOk;
}

// ---------------------------------------------------------------- check ---

struct CheckArgs {
  std::string a, b, input, out, name = "row";
  double tolerance = 0.002;
};

int run_check(const CheckArgs& args, RunContext& ctx) {
  struct Row {
    std::string name;
    std::vector<double> a, b;
  };
  std::vector<Row> rows;
  if (!args.input.empty()) {
    require_file(args.input, "check input");
    ctx.add_input(args.input);
    json doc = json::parse(read_file(args.input));
    for (const auto& r : doc.at("rows")) {
      rows.push_back({r.value("name", std::string{"row"}),
                      r.at("by_a").get<std::vector<double>>(),
                      r.at("by_b").get<std::vector<double>>()});
    }
  }
  if (!args.a.empty() || !args.b.empty()) {
    if (args.a.empty() || args.b.empty())
      throw FatalError("--a and --b must be given together");
    rows.push_back({args.name, parse_double_list(args.a), parse_double_list(args.b)});
  }
  if (rows.empty()) throw FatalError("nothing to check: pass --a/--b or --input");

  json results = json::array();
  bool all_pass = true;
  for (const Row& r : rows) {
    MarginalCheck c = marginal_consistency_check(r.a, r.b, args.tolerance);
    all_pass = all_pass && c.pass;
    std::cout << r.name << ": mean_a=" << format_double(c.mean_a)
              << " mean_b=" << format_double(c.mean_b)
              << " diff=" << format_double(c.difference) << " -> "
              << (c.pass ? "pass" : "FAIL") << "\n";
    results.push_back(json{{"name", r.name},
                           {"mean_a", c.mean_a},
                           {"mean_b", c.mean_b},
                           {"difference", c.difference},
                           {"pass", c.pass}});
  }
  if (ctx.out_dir) {
    fs::create_directories(*ctx.out_dir);
    write_json_doc(*ctx.out_dir / "check.json",
                   json{{"tolerance", args.tolerance}, {"rows", std::move(results)}}, ctx);
  }
  return all_pass ? kExitOk : kExitRecordErrors;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"caption labeling, dataset audits and robustness evaluation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "run configuration file (INI/TOML); flags override");
  app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);

  LabelArgs label_args;
  CLI::App* label = app.add_subcommand("label", "label a caption manifest via subset matching");
  label->add_option("--manifest", label_args.manifest, "caption manifest (JSONL)")->required();
  label->add_option("--dict", label_args.dict, "term dictionary (JSON)")->required();
  label->add_option("--out", label_args.out, "output directory")->required();
  label->add_option("--strategy", label_args.strategy, "strict|sc|mc")
      ->check(CLI::IsMember({"strict", "sc", "mc"}));
  label->add_option("--mc-cap", label_args.mc_cap, "max classes per sample under mc");
  label->add_option("--exclude-mode", label_args.exclude_mode, "per-class|global")
      ->check(CLI::IsMember({"per-class", "global"}));
  label->add_option("--fields", label_args.fields, "caption field order");
  label->add_option("--threads", label_args.threads, "worker threads (0 = all cores)");
  label->add_option("--batch", label_args.batch, "records per worker batch");
  label->add_option("--seed", label_args.seed, "run seed (recorded in artifacts)");

  AuditArgs audit_args;
  CLI::App* audit = app.add_subcommand("audit", "audit a labeled manifest");
  audit->add_option("--labels", audit_args.labels, "labels.jsonl from `label`");
  audit->add_option("--manifest", audit_args.manifest, "original manifest (for ground truth)");
  audit->add_option("--dict", audit_args.dict, "term dictionary (class universe)");
  audit->add_option("--out", audit_args.out, "output directory");
  audit->add_option("--label-acc", audit_args.check_label_acc, "claimed label accuracy");
  audit->add_option("--coverage", audit_args.check_coverage, "claimed coverage");
  audit->add_option("--utilization", audit_args.check_utilization, "claimed utilization");
  audit->add_option("--tolerance", audit_args.tolerance, "identity check tolerance");

  BalanceArgs balance_args;
  CLI::App* balance = app.add_subcommand("balance", "plan class rebalancing");
  balance->add_option("--labels", balance_args.labels, "labels.jsonl")->required();
  balance->add_option("--out", balance_args.out, "output directory")->required();
  balance->add_option("--target", balance_args.target,
                      "samples per class (0 = smallest represented class)");
  balance->add_option("--mode", balance_args.mode, "undersample|oversample")
      ->check(CLI::IsMember({"undersample", "oversample"}));
  balance->add_option("--seed", balance_args.seed, "sampling seed");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "score prediction logs");
  eval->add_option("--labelset", eval_args.labelset, "label set (JSON)")->required();
  eval->add_option("--evalset", eval_args.evalsets, "eval set file (repeatable)")->required();
  eval->add_option("--preds", eval_args.preds, "prediction log, one model each (repeatable)")
      ->required();
  eval->add_option("--model-id", eval_args.model_id, "model id (single log only)");
  eval->add_option("--shift-universe", eval_args.shift_universes,
                   "KIND=FILE class universe for a shift (repeatable)");
  eval->add_option("--subset", eval_args.subset, "label subset file: remapped evaluation");
  eval->add_option("--partition", eval_args.partition, "partition the label set into K parts");
  eval->add_option("--seed", eval_args.seed, "partition seed");
  eval->add_flag("--best", eval_args.best, "select the best checkpoint per model");
  eval->add_flag("--confusion", eval_args.confusion, "include confusion matrices in results");
  eval->add_option("--out", eval_args.out, "output directory")->required();

  AggregateArgs agg_args;
  CLI::App* aggregate = app.add_subcommand("aggregate", "bin models and average the top k");
  aggregate->add_option("--metadata", agg_args.metadata, "model metadata table (CSV or JSONL)")
      ->required();
  aggregate->add_option("--dimension", agg_args.dimension,
                        "parameter_count|architecture_family|input_resolution|"
                        "train_sample_count|loss_kind");
  aggregate->add_option("--edges", agg_args.edges, "bin edges for numeric dimensions");
  aggregate->add_option("--metrics", agg_args.metrics, "metric columns (default: all)");
  aggregate->add_option("--k", agg_args.k, "top-k per bin");
  aggregate->add_option("--out", agg_args.out, "output directory")->required();

  CheckArgs check_args;
  CLI::App* check = app.add_subcommand("check", "marginal consistency check");
  check->add_option("--a", check_args.a, "first marginal (comma-separated)");
  check->add_option("--b", check_args.b, "second marginal (comma-separated)");
  check->add_option("--name", check_args.name, "row name for --a/--b");
  check->add_option("--input", check_args.input, "JSON file with {rows:[{name,by_a,by_b}]}");
  check->add_option("--tolerance", check_args.tolerance, "max |mean(a)-mean(b)|");
  check->add_option("--out", check_args.out, "output directory (optional)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? kExitFatal : kExitOk;
  }

  CLI::App* sub = app.get_subcommands().front();
  RunContext ctx;
  ctx.command = sub->get_name();
  ctx.set_config(sub->config_to_str(true, false));

  std::string out_opt;
  if (sub == label) out_opt = label_args.out;
  if (sub == audit) out_opt = audit_args.out;
  if (sub == balance) out_opt = balance_args.out;
  if (sub == eval) out_opt = eval_args.out;
  if (sub == aggregate) out_opt = agg_args.out;
  if (sub == check) out_opt = check_args.out;
  if (!out_opt.empty()) ctx.out_dir = fs::path(out_opt);
  if (sub == label) ctx.seed = label_args.seed;
  if (sub == balance) ctx.seed = balance_args.seed;
  if (sub == eval) ctx.seed = eval_args.seed;

  int code = kExitFatal;
  try {
    if (sub == label) code = run_label(label_args, ctx);
    else if (sub == audit) code = run_audit(audit_args, ctx);
    else if (sub == balance) code = run_balance(balance_args, ctx);
    else if (sub == eval) code = run_eval(eval_args, ctx);
    else if (sub == aggregate) code = run_aggregate(agg_args, ctx);
    else if (sub == check) code = run_check(check_args, ctx);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    ctx.errors.push_back(ex.what());
    code = kExitFatal;
  }
  try {
    ctx.finish(code);
  } catch (const std::exception&) {
    // the run manifest is best-effort on teardown
  }
  return code;
}
