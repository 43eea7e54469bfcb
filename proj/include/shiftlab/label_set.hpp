#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftlab/random.hpp"

namespace shiftlab {

// An ordered class universe. Immutable after construction; subsetting and
// partitioning produce new sets that remember their parent.
class LabelSet {
 public:
  struct Class {
    int32_t id = 0;
    std::string name;
  };

  LabelSet() = default;
  LabelSet(std::string id, std::vector<Class> classes, std::string parent_id = {})
      : id_(std::move(id)), parent_id_(std::move(parent_id)), classes_(std::move(classes)) {
    for (size_t i = 0; i < classes_.size(); ++i) {
      if (!index_.emplace(classes_[i].id, i).second) {
        throw std::invalid_argument("label set " + id_ + " has duplicate class id " +
                                    std::to_string(classes_[i].id));
      }
    }
  }

  static LabelSet parse(const nlohmann::json& j) {
    std::vector<Class> classes;
    for (const auto& c : j.at("classes")) {
      classes.push_back({c.at("id").get<int32_t>(), c.value("name", std::string{})});
    }
    return LabelSet(j.value("id", std::string{}), std::move(classes),
                    j.value("parent_id", std::string{}));
  }

  static LabelSet load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open label set file: " + path);
    nlohmann::json j;
    in >> j;
    return parse(j);
  }

  nlohmann::json to_json() const {
    nlohmann::json classes = nlohmann::json::array();
    for (const Class& c : classes_) classes.push_back({{"id", c.id}, {"name", c.name}});
    nlohmann::json j{{"id", id_}, {"classes", std::move(classes)}};
    if (!parent_id_.empty()) j["parent_id"] = parent_id_;
    return j;
  }

  const std::string& id() const { return id_; }
  const std::string& parent_id() const { return parent_id_; }
  size_t size() const { return classes_.size(); }
  const Class& at(size_t pos) const { return classes_[pos]; }
  const std::vector<Class>& classes() const { return classes_; }

  bool contains(int32_t class_id) const { return index_.count(class_id) != 0; }
  std::optional<size_t> position(int32_t class_id) const {
    auto it = index_.find(class_id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<int32_t> ids() const {
    std::vector<int32_t> out;
    out.reserve(classes_.size());
    for (const Class& c : classes_) out.push_back(c.id);
    return out;
  }

 private:
  std::string id_;
  std::string parent_id_;
  std::vector<Class> classes_;
  std::unordered_map<int32_t, size_t> index_;
};

// Restriction to the given ids, keeping parent order. Unknown ids are fatal.
inline LabelSet subset(const LabelSet& parent, std::span<const int32_t> class_ids,
                       std::string subset_id = {}) {
  std::unordered_set<int32_t> wanted(class_ids.begin(), class_ids.end());
  for (int32_t id : class_ids) {
    if (!parent.contains(id)) {
      throw std::invalid_argument("subset: class id " + std::to_string(id) +
                                  " not in label set " + parent.id());
    }
  }
  std::vector<LabelSet::Class> classes;
  for (const auto& c : parent.classes()) {
    if (wanted.count(c.id)) classes.push_back(c);
  }
  if (subset_id.empty()) subset_id = parent.id() + "-subset" + std::to_string(classes.size());
  return LabelSet(std::move(subset_id), std::move(classes), parent.id());
}

struct LabelSetPartition {
  std::string parent_id;
  uint64_t seed = 0;
  std::vector<LabelSet> parts;
};

// Uniformly random disjoint parts covering the parent, sizes differing by at
// most one, each part ordered as in the parent. Deterministic under `seed`.
inline LabelSetPartition partition_into_k(const LabelSet& parent, size_t k, uint64_t seed) {
  if (k < 1) throw std::invalid_argument("partition_into_k: k must be >= 1");
  if (k > parent.size()) {
    throw std::invalid_argument("partition_into_k: k=" + std::to_string(k) +
                                " exceeds label set size " + std::to_string(parent.size()));
  }
  std::vector<size_t> positions(parent.size());
  for (size_t i = 0; i < positions.size(); ++i) positions[i] = i;
  std::mt19937_64 rng = seeded_rng(seed);
  deterministic_shuffle(positions, rng);

  size_t n = parent.size();
  size_t base = n / k, extra = n % k;
  LabelSetPartition partition;
  partition.parent_id = parent.id();
  partition.seed = seed;
  size_t cursor = 0;
  for (size_t p = 0; p < k; ++p) {
    size_t take = base + (p < extra ? 1 : 0);
    std::vector<size_t> chunk(positions.begin() + cursor, positions.begin() + cursor + take);
    cursor += take;
    std::sort(chunk.begin(), chunk.end());
    std::vector<LabelSet::Class> classes;
    classes.reserve(take);
    for (size_t pos : chunk) classes.push_back(parent.at(pos));
    partition.parts.emplace_back(parent.id() + "-p" + std::to_string(p), std::move(classes),
                                 parent.id());
  }
  return partition;
}

struct SharedClassMap {
  std::string eval_set_id;
  std::vector<int32_t> shared;  // ordered as the label set
  bool empty_warning = false;   // evaluation impossible on an empty intersection
};

inline SharedClassMap shared_classes(const LabelSet& labelset,
                                     std::span<const int32_t> shift_universe,
                                     std::string eval_set_id = {}) {
  std::unordered_set<int32_t> universe(shift_universe.begin(), shift_universe.end());
  SharedClassMap map;
  map.eval_set_id = std::move(eval_set_id);
  for (const auto& c : labelset.classes()) {
    if (universe.count(c.id)) map.shared.push_back(c.id);
  }
  map.empty_warning = map.shared.empty();
  return map;
}

}  // namespace shiftlab
