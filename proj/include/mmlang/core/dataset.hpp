#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "mmlang/core/error.hpp"
#include "mmlang/core/language.hpp"
#include "mmlang/core/task.hpp"

namespace mmlang {

enum class Split { train, validation, test };

inline constexpr std::array<Split, 3> kAllSplits{Split::train, Split::validation, Split::test};

constexpr std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

inline std::optional<Split> parse_split(std::string_view s) {
  for (auto sp : kAllSplits)
    if (to_string(sp) == s) return sp;
  return std::nullopt;
}

enum class Provenance { original, machine_translated, human_translated };

constexpr std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::original: return "original";
    case Provenance::machine_translated: return "machine-translated";
    case Provenance::human_translated: return "human-translated";
  }
  return "?";
}

inline std::optional<Provenance> parse_provenance(std::string_view s) {
  for (auto p : {Provenance::original, Provenance::machine_translated, Provenance::human_translated})
    if (to_string(p) == s) return p;
  return std::nullopt;
}

struct MultimodalExample {
  std::string id;
  std::string text;
  std::string image_ref;
  int label = 0;
  Language language = Language::en;
  Split split = Split::train;

  friend bool operator==(const MultimodalExample&, const MultimodalExample&) = default;
};

// One language version of a task's dataset. Immutable once validated; all
// language versions of a task share (id, split, label) and differ in text.
struct DatasetVersion {
  TaskSpec task;
  Language language = Language::en;
  Provenance provenance = Provenance::original;
  std::vector<MultimodalExample> examples;

  std::vector<MultimodalExample> subset(Split s) const {
    std::vector<MultimodalExample> out;
    for (const auto& e : examples)
      if (e.split == s) out.push_back(e);
    return out;
  }

  SplitSizes split_sizes() const {
    SplitSizes sizes;
    for (const auto& e : examples) {
      switch (e.split) {
        case Split::train: ++sizes.train; break;
        case Split::validation: ++sizes.validation; break;
        case Split::test: ++sizes.test; break;
      }
    }
    return sizes;
  }

  const MultimodalExample* find(std::string_view id) const {
    for (const auto& e : examples)
      if (e.id == id) return &e;
    return nullptr;
  }

  friend bool operator==(const DatasetVersion&, const DatasetVersion&) = default;
};

// Throws ValidationError on the first violated invariant.
inline void validate(const DatasetVersion& dv) {
  dv.task.validate();
  if (dv.examples.empty()) throw ValidationError("no examples");
  std::unordered_set<std::string> ids;
  for (const auto& e : dv.examples) {
    if (e.id.empty()) throw ValidationError("example with empty id");
    if (!ids.insert(e.id).second) throw ValidationError("duplicate id '" + e.id + "'");
    if (!dv.task.valid_label(e.label))
      throw ValidationError("label " + std::to_string(e.label) + " out of range for example '" +
                            e.id + "'");
    if (e.language != dv.language)
      throw ValidationError("example '" + e.id + "' language differs from dataset language");
    if (e.image_ref.empty()) throw ValidationError("example '" + e.id + "' has no image_ref");
  }
}

// Ids whose (split, label) disagree between versions or that are missing from
// at least one version. Sorted, unique. Empty iff the versions are parallel.
inline std::vector<std::string> check_parallel(std::span<const DatasetVersion> versions) {
  std::set<std::string> bad;
  if (versions.size() < 2) return {};
  using Key = std::pair<Split, int>;
  std::vector<std::map<std::string, Key>> tables;
  tables.reserve(versions.size());
  std::set<std::string> all_ids;
  for (const auto& v : versions) {
    auto& t = tables.emplace_back();
    for (const auto& e : v.examples) {
      t.emplace(e.id, Key{e.split, e.label});
      all_ids.insert(e.id);
    }
  }
  for (const auto& id : all_ids) {
    std::optional<Key> first;
    for (const auto& t : tables) {
      auto it = t.find(id);
      if (it == t.end()) {
        bad.insert(id);
        break;
      }
      if (!first) {
        first = it->second;
      } else if (*first != it->second) {
        bad.insert(id);
        break;
      }
    }
  }
  return {bad.begin(), bad.end()};
}

// Fraction of examples per class, optionally restricted to one split.
inline std::vector<double> class_proportions(const DatasetVersion& dv,
                                             std::optional<Split> split = std::nullopt) {
  std::vector<double> counts(dv.task.num_classes(), 0.0);
  double n = 0;
  for (const auto& e : dv.examples) {
    if (split && e.split != *split) continue;
    counts[static_cast<std::size_t>(e.label)] += 1;
    n += 1;
  }
  if (n > 0)
    for (auto& c : counts) c /= n;
  return counts;
}

}  // namespace mmlang
