#include "chainscore/metric_registry.hpp"

#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

#include "chainscore/error.hpp"
#include "chainscore/util.hpp"

namespace chainscore {

namespace {

const char* direction_name(Direction d) {
  switch (d) {
    case Direction::HigherBetter: return "higher_better";
    case Direction::LowerBetter: return "lower_better";
    case Direction::None: return "none";
  }
  return "none";
}

Direction direction_from_name(const std::string& name) {
  if (name == "higher_better") return Direction::HigherBetter;
  if (name == "lower_better") return Direction::LowerBetter;
  if (name == "none") return Direction::None;
  fail(Errc::ParseError, "unknown direction '" + name + "'");
}

}  // namespace

int Registry::register_metric(const std::string& name, MetricKind kind) {
  if (name.empty()) fail(Errc::InvalidKind, "metric name must be non-empty");
  if (by_name_.count(name)) fail(Errc::DuplicateName, "metric '" + name + "' already registered");

  if (const auto* num = std::get_if<NumericalKind>(&kind)) {
    if (std::isnan(num->lo) || std::isnan(num->hi))
      fail(Errc::InvalidKind, "range of '" + name + "' is NaN");
    if (!(num->lo < num->hi))
      fail(Errc::InvalidKind, "range of '" + name + "' is empty: [" + format_double(num->lo) +
                                  ", " + format_double(num->hi) + "]");
  } else {
    const auto& labels = std::get<CategoricalKind>(kind).labels;
    if (labels.empty()) fail(Errc::InvalidKind, "'" + name + "' has no labels");
    std::set<std::string> seen;
    for (const std::string& label : labels) {
      if (label.empty()) fail(Errc::InvalidKind, "'" + name + "' has an empty label");
      if (!seen.insert(label).second)
        fail(Errc::InvalidKind, "'" + name + "' repeats label '" + label + "'");
    }
  }

  int index = static_cast<int>(metrics_.size());
  metrics_.push_back(MetricSpec{name, index, std::move(kind)});
  by_name_[name] = index;
  return index;
}

void Registry::validate_value(int index, const MetricValue& value) const {
  const MetricSpec& spec = at(index);
  if (spec.is_numerical()) {
    const double* v = std::get_if<double>(&value);
    if (!v)
      fail(Errc::KindMismatch, "'" + spec.name + "' is numerical, got a label");
    if (!std::isfinite(*v)) fail(Errc::NonFinite, "'" + spec.name + "' value is not finite");
    const NumericalKind& num = spec.numerical();
    if (*v < num.lo || *v > num.hi)
      fail(Errc::OutOfRange, "'" + spec.name + "' value " + format_double(*v) + " outside [" +
                                 format_double(num.lo) + ", " + format_double(num.hi) + "]");
  } else {
    const std::string* label = std::get_if<std::string>(&value);
    if (!label)
      fail(Errc::KindMismatch, "'" + spec.name + "' is categorical, got a number");
    const auto& labels = spec.categorical().labels;
    for (const std::string& known : labels)
      if (known == *label) return;
    fail(Errc::UnknownLabel, "'" + spec.name + "' has no label '" + *label + "'");
  }
}

const MetricSpec& Registry::at(int index) const {
  if (index < 0 || index >= size())
    fail(Errc::UnknownMetric, "no metric with index " + std::to_string(index));
  return metrics_[size_t(index)];
}

const MetricSpec& Registry::at(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) fail(Errc::UnknownMetric, "no metric named '" + name + "'");
  return metrics_[size_t(it->second)];
}

std::optional<int> Registry::find(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::string Registry::to_json_string() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const MetricSpec& spec : metrics_) {
    nlohmann::json m;
    m["name"] = spec.name;
    if (spec.is_numerical()) {
      const NumericalKind& num = spec.numerical();
      m["kind"] = "numerical";
      // JSON has no infinity; unbounded ends are stored as null
      if (std::isinf(num.lo)) m["lo"] = nullptr; else m["lo"] = num.lo;
      if (std::isinf(num.hi)) m["hi"] = nullptr; else m["hi"] = num.hi;
      m["direction"] = direction_name(num.direction);
    } else {
      m["kind"] = "categorical";
      m["labels"] = spec.categorical().labels;
    }
    arr.push_back(std::move(m));
  }
  return arr.dump(2) + "\n";
}

Registry Registry::from_json_string(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("registry: ") + e.what());
  }
  if (!arr.is_array()) fail(Errc::ParseError, "registry must be an array of metrics");

  Registry reg;
  try {
    for (const auto& m : arr) {
      std::string name = m.at("name").get<std::string>();
      std::string kind = m.at("kind").get<std::string>();
      if (kind == "numerical") {
        NumericalKind num;
        num.lo = m.at("lo").is_null() ? -std::numeric_limits<double>::infinity()
                                      : m.at("lo").get<double>();
        num.hi = m.at("hi").is_null() ? std::numeric_limits<double>::infinity()
                                      : m.at("hi").get<double>();
        num.direction = m.contains("direction")
                            ? direction_from_name(m.at("direction").get<std::string>())
                            : Direction::None;
        reg.register_metric(name, num);
      } else if (kind == "categorical") {
        CategoricalKind cat;
        cat.labels = m.at("labels").get<std::vector<std::string>>();
        reg.register_metric(name, cat);
      } else {
        fail(Errc::ParseError, "metric '" + name + "' has unknown kind '" + kind + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("registry: ") + e.what());
  }
  return reg;
}

void Registry::save(const std::string& path) const { write_text_file(path, to_json_string()); }

Registry Registry::load(const std::string& path) {
  return from_json_string(read_text_file(path));
}

}  // namespace chainscore
