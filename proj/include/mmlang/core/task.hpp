#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mmlang/core/error.hpp"

namespace mmlang {

enum class MetricMode { macro, binary_positive };

constexpr std::string_view to_string(MetricMode m) {
  return m == MetricMode::macro ? "macro" : "binary-positive";
}

inline MetricMode metric_mode_from_string(std::string_view s) {
  if (s == "macro") return MetricMode::macro;
  if (s == "binary-positive") return MetricMode::binary_positive;
  throw ParseError("unknown metric mode '" + std::string(s) + "'");
}

struct TaskSpec {
  std::string name;
  std::vector<std::string> classes;
  MetricMode metric_mode = MetricMode::macro;
  // Set iff metric_mode == binary_positive.
  std::optional<int> positive_class;

  std::size_t num_classes() const { return classes.size(); }

  bool valid_label(int label) const {
    return label >= 0 && static_cast<std::size_t>(label) < classes.size();
  }

  void validate() const {
    if (name.empty()) throw ValidationError("task name is empty");
    if (classes.size() < 2)
      throw ValidationError("task '" + name + "' needs at least two classes");
    std::set<std::string> seen;
    for (const auto& c : classes) {
      if (c.empty()) throw ValidationError("task '" + name + "' has an empty class label");
      if (!seen.insert(c).second)
        throw ValidationError("task '" + name + "' repeats class label '" + c + "'");
    }
    const bool binary = metric_mode == MetricMode::binary_positive;
    if (binary != positive_class.has_value())
      throw ValidationError("task '" + name +
                            "': positive class is required exactly for binary-positive mode");
    if (positive_class && !valid_label(*positive_class))
      throw ValidationError("task '" + name + "': positive class out of range");
  }

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;

  std::size_t total() const { return train + validation + test; }
  friend bool operator==(const SplitSizes&, const SplitSizes&) = default;
};

namespace tasks {

inline TaskSpec crisis() {
  return {"crisis",
          {"infrastructure_and_utility_damage", "rescue_volunteering_or_donation_effort",
           "affected_individuals", "other_relevant_information", "not_humanitarian"},
          MetricMode::macro,
          std::nullopt};
}

// label 0 = real, label 1 = fake; metrics are reported for the fake class.
inline TaskSpec fake_news() {
  return {"fake_news", {"real", "fake"}, MetricMode::binary_positive, 1};
}

inline TaskSpec emotion() {
  return {"emotion", {"creepy", "gore", "happy", "rage"}, MetricMode::macro, std::nullopt};
}

inline std::vector<TaskSpec> all() { return {crisis(), fake_news(), emotion()}; }

inline std::optional<TaskSpec> builtin(std::string_view name) {
  for (auto& t : all())
    if (t.name == name) return t;
  return std::nullopt;
}

// Published split sizes of the three datasets.
inline std::optional<SplitSizes> reference_split_sizes(std::string_view name) {
  if (name == "crisis") return SplitSizes{5263, 998, 955};
  if (name == "fake_news") return SplitSizes{9502, 1055, 2687};
  if (name == "emotion") return SplitSizes{2568, 321, 318};
  return std::nullopt;
}

// Published class proportions (fractions, in class-index order).
inline std::optional<std::vector<double>> reference_class_proportions(std::string_view name) {
  if (name == "crisis") return std::vector<double>{0.10, 0.14, 0.01, 0.22, 0.53};
  if (name == "fake_news") return std::vector<double>{0.79, 0.21};
  if (name == "emotion") return std::vector<double>{0.22, 0.25, 0.34, 0.19};
  return std::nullopt;
}

}  // namespace tasks
}  // namespace mmlang
