#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftlab/audit.hpp"
#include "shiftlab/random.hpp"

namespace shiftlab {

enum class RebalanceMode { undersample, oversample };

inline const char* to_string(RebalanceMode m) {
  return m == RebalanceMode::undersample ? "undersample" : "oversample";
}

inline RebalanceMode parse_rebalance_mode(std::string_view s) {
  if (s == "undersample") return RebalanceMode::undersample;
  if (s == "oversample") return RebalanceMode::oversample;
  throw std::invalid_argument("unknown rebalance mode: " + std::string(s));
}

enum class RebalanceAction { keep_all, undersample, oversample };

inline const char* to_string(RebalanceAction a) {
  switch (a) {
    case RebalanceAction::keep_all: return "keep_all";
    case RebalanceAction::undersample: return "undersample";
    case RebalanceAction::oversample: return "oversample";
  }
  return "?";
}

struct ClassPlan {
  int32_t class_id = 0;
  uint64_t count = 0;
  RebalanceAction action = RebalanceAction::keep_all;
  // Undersample mode leaves an under-target class alone; the gap is recorded
  // rather than silently ignored.
  uint64_t shortfall = 0;
};

struct RebalancePlan {
  uint64_t seed = 0;
  uint64_t target = 0;
  RebalanceMode mode = RebalanceMode::undersample;
  std::vector<ClassPlan> classes;   // ascending class id
  std::vector<int32_t> excluded;    // zero-count classes, cannot reach any target
};

// The mode governs under-target classes only; over-target classes are
// always cut down to the target.
inline RebalancePlan rebalance_plan(const ClassHistogram& hist, uint64_t target,
                                    RebalanceMode mode, uint64_t seed) {
  if (target < 1) throw std::invalid_argument("rebalance target must be >= 1");
  RebalancePlan plan;
  plan.seed = seed;
  plan.target = target;
  plan.mode = mode;
  for (const auto& [class_id, count] : hist.counts) {
    if (count == 0) {
      plan.excluded.push_back(class_id);
      continue;
    }
    ClassPlan cp;
    cp.class_id = class_id;
    cp.count = count;
    if (count > target) {
      cp.action = RebalanceAction::undersample;
    } else if (count == target) {
      cp.action = RebalanceAction::keep_all;
    } else if (mode == RebalanceMode::oversample) {
      cp.action = RebalanceAction::oversample;
    } else {
      cp.action = RebalanceAction::keep_all;
      cp.shortfall = target - count;
    }
    plan.classes.push_back(cp);
  }
  return plan;
}

// Indices into the class's ordered occurrence list. Undersample picks a
// uniform subset (emitted ascending, preserving manifest order); oversample
// is `target` i.i.d. draws with replacement, in draw order.
inline std::vector<uint64_t> select_indices(const ClassPlan& cp, uint64_t target,
                                            uint64_t seed) {
  std::mt19937_64 rng = seeded_rng(seed, static_cast<uint64_t>(cp.class_id));
  switch (cp.action) {
    case RebalanceAction::keep_all: {
      std::vector<uint64_t> all(cp.count);
      for (uint64_t i = 0; i < cp.count; ++i) all[i] = i;
      return all;
    }
    case RebalanceAction::undersample: {
      std::vector<uint64_t> picked = sample_without_replacement(cp.count, target, rng);
      std::sort(picked.begin(), picked.end());
      return picked;
    }
    case RebalanceAction::oversample: {
      std::vector<uint64_t> picked(target);
      for (uint64_t i = 0; i < target; ++i) picked[i] = bounded_draw(rng, cp.count);
      return picked;
    }
  }
  return {};
}

struct RebalanceSelection {
  // (class, sample_id) occurrences, classes ascending.
  std::vector<std::pair<int32_t, std::string>> rows;
};

inline RebalanceSelection apply_rebalance(
    const RebalancePlan& plan,
    const std::map<int32_t, std::vector<std::string>>& occurrences_by_class) {
  RebalanceSelection sel;
  for (const ClassPlan& cp : plan.classes) {
    auto it = occurrences_by_class.find(cp.class_id);
    if (it == occurrences_by_class.end() || it->second.size() != cp.count) {
      throw std::runtime_error("rebalance plan does not match manifest for class " +
                               std::to_string(cp.class_id));
    }
    for (uint64_t idx : select_indices(cp, plan.target, plan.seed)) {
      sel.rows.emplace_back(cp.class_id, it->second[idx]);
    }
  }
  return sel;
}

inline nlohmann::json rebalance_plan_to_json(const RebalancePlan& plan) {
  nlohmann::json classes = nlohmann::json::array();
  for (const ClassPlan& cp : plan.classes) {
    nlohmann::json c{{"class", cp.class_id},
                     {"count", cp.count},
                     {"action", to_string(cp.action)}};
    if (cp.shortfall) c["shortfall"] = cp.shortfall;
    classes.push_back(std::move(c));
  }
  return nlohmann::json{{"seed", plan.seed},
                        {"target_per_class", plan.target},
                        {"mode", to_string(plan.mode)},
                        {"classes", std::move(classes)},
                        {"excluded", plan.excluded}};
}

}  // namespace shiftlab
