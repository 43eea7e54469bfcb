#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftlab/evaluate.hpp"

namespace shiftlab {

// Unweighted arithmetic mean of shift accuracies (the base set excluded).
inline double average_robustness(std::span<const double> shift_accuracies) {
  if (shift_accuracies.empty())
    throw std::invalid_argument("average_robustness: no shift accuracies");
  double sum = 0.0;
  for (double a : shift_accuracies) {
    if (!(a >= 0.0 && a <= 1.0))
      throw std::invalid_argument("average_robustness: accuracy outside [0,1]");
    sum += a;
  }
  return sum / static_cast<double>(shift_accuracies.size());
}

// Average robustness over base accuracy; undefined when the base is zero.
inline std::optional<double> effective_robustness_ratio(double avg_robustness,
                                                        double base_accuracy) {
  if (base_accuracy <= 0.0) return std::nullopt;
  return avg_robustness / base_accuracy;
}

struct RobustnessReport {
  std::string model_id;
  std::string checkpoint_tag;
  std::string labelset_id;
  double base_accuracy = 0.0;
  std::map<ShiftKind, double> shift_accuracies;
  double avg_robustness = 0.0;
  std::optional<double> err;
};

inline RobustnessReport build_report(const EvalResult& base,
                                     std::span<const EvalResult> shifts) {
  if (base.shift_kind != ShiftKind::base)
    throw EvalError("build_report: base result is a " +
                    std::string(to_string(base.shift_kind)) + " evaluation");
  if (shifts.empty()) throw EvalError("build_report: no shift results");

  RobustnessReport rep;
  rep.model_id = base.model_id;
  rep.checkpoint_tag = base.checkpoint_tag;
  rep.labelset_id = base.classes.id();
  rep.base_accuracy = base.accuracy();

  std::vector<double> accs;
  for (const EvalResult& s : shifts) {
    if (s.model_id != base.model_id)
      throw EvalError("build_report: mixed model ids (" + base.model_id + " vs " +
                      s.model_id + ")");
    if (s.shift_kind == ShiftKind::base)
      throw EvalError("build_report: shift list contains a base evaluation");
    if (!rep.shift_accuracies.emplace(s.shift_kind, s.accuracy()).second)
      throw EvalError("build_report: duplicate shift kind " +
                      std::string(to_string(s.shift_kind)));
    accs.push_back(s.accuracy());
  }
  rep.avg_robustness = average_robustness(accs);
  rep.err = effective_robustness_ratio(rep.avg_robustness, rep.base_accuracy);
  return rep;
}

// Peak average robustness across a model's evaluated checkpoints. Ties go to
// the higher base accuracy, then the smallest checkpoint tag, so selection
// does not depend on input order.
inline const RobustnessReport& select_best_checkpoint(
    std::span<const RobustnessReport> reports) {
  if (reports.empty())
    throw std::invalid_argument("select_best_checkpoint: no reports");
  const RobustnessReport* best = &reports[0];
  for (const RobustnessReport& r : reports.subspan(1)) {
    if (r.avg_robustness > best->avg_robustness ||
        (r.avg_robustness == best->avg_robustness &&
         (r.base_accuracy > best->base_accuracy ||
          (r.base_accuracy == best->base_accuracy &&
           r.checkpoint_tag < best->checkpoint_tag)))) {
      best = &r;
    }
  }
  return *best;
}

inline nlohmann::json robustness_report_to_json(const RobustnessReport& r) {
  nlohmann::json shifts = nlohmann::json::object();
  for (const auto& [kind, acc] : r.shift_accuracies) shifts[to_string(kind)] = acc;
  nlohmann::json j{{"model_id", r.model_id},
                   {"checkpoint", r.checkpoint_tag},
                   {"labelset", r.labelset_id},
                   {"base_accuracy", r.base_accuracy},
                   {"shift_accuracies", std::move(shifts)},
                   {"avg_robustness", r.avg_robustness}};
  if (r.err)
    j["err"] = *r.err;
  else
    j["err"] = nullptr;
  return j;
}

}  // namespace shiftlab
