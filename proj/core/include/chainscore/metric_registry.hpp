#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace chainscore {

enum class Direction { HigherBetter, LowerBetter, None };

struct NumericalKind {
  double lo;  // may be -inf
  double hi;  // may be +inf
  Direction direction = Direction::None;
};

struct CategoricalKind {
  std::vector<std::string> labels;
};

using MetricKind = std::variant<NumericalKind, CategoricalKind>;

struct MetricSpec {
  std::string name;
  int index = -1;  // dense, assigned at registration, canonical order
  MetricKind kind;

  bool is_numerical() const { return std::holds_alternative<NumericalKind>(kind); }
  const NumericalKind& numerical() const { return std::get<NumericalKind>(kind); }
  const CategoricalKind& categorical() const { return std::get<CategoricalKind>(kind); }
};

// A metric value: double for numerical metrics, label string for categorical.
using MetricValue = std::variant<double, std::string>;

// Partial labelling of one utterance, keyed by metric index. Absent = absent;
// there is no placeholder value anywhere downstream.
using LabelSet = std::map<int, MetricValue>;

class Registry {
 public:
  // Returns the new dense index. Throws DuplicateName / InvalidKind.
  int register_metric(const std::string& name, MetricKind kind);

  // Throws UnknownMetric / NonFinite / OutOfRange / UnknownLabel.
  void validate_value(int index, const MetricValue& value) const;

  const MetricSpec& at(int index) const;
  const MetricSpec& at(const std::string& name) const;
  std::optional<int> find(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name).has_value(); }

  int size() const { return static_cast<int>(metrics_.size()); }
  const std::vector<MetricSpec>& metrics() const { return metrics_; }

  // Structured-text registry file: one object per metric, file order is the
  // canonical order.
  std::string to_json_string() const;
  static Registry from_json_string(const std::string& text);
  void save(const std::string& path) const;
  static Registry load(const std::string& path);

 private:
  std::vector<MetricSpec> metrics_;
  std::map<std::string, int> by_name_;
};

}  // namespace chainscore
