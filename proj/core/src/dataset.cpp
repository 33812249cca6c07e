#include "chainscore/dataset.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "chainscore/error.hpp"
#include "chainscore/util.hpp"

namespace chainscore {

using nlohmann::json;

std::vector<UtteranceRecord> read_dataset(const std::string& path, const Registry& registry) {
  std::istringstream in(read_text_file(path));
  std::vector<UtteranceRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(Errc::ParseError, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    auto bad = [&](const std::string& why) {
      fail(Errc::ParseError, path + ":" + std::to_string(line_no) + ": " + why);
    };
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) bad("record needs a string id");
    if (!j.contains("features") || !j["features"].is_array()) bad("record needs a feature array");
    if (!j.contains("metrics") || !j["metrics"].is_object()) bad("record needs a metrics object");

    UtteranceRecord rec;
    rec.id = j["id"].get<std::string>();
    for (const json& f : j["features"]) {
      if (!f.is_number()) bad("features must be numbers");
      rec.features.push_back(f.get<double>());
    }
    for (const auto& [name, value] : j["metrics"].items()) {
      std::optional<int> m = registry.find(name);
      if (!m) fail(Errc::UnknownMetric, path + ":" + std::to_string(line_no) +
                                            ": unregistered metric '" + name + "'");
      MetricValue mv;
      if (value.is_number())
        mv = value.get<double>();
      else if (value.is_string())
        mv = value.get<std::string>();
      else
        bad("metric '" + name + "' must be a number or a label string");
      registry.validate_value(*m, mv);
      rec.labels[*m] = std::move(mv);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_dataset(const std::string& path, const Registry& registry,
                   const std::vector<UtteranceRecord>& records) {
  std::string out;
  for (const UtteranceRecord& rec : records) {
    json j;
    j["id"] = rec.id;
    j["features"] = rec.features;
    j["metrics"] = json::object();
    for (const auto& [m, value] : rec.labels) {
      registry.validate_value(m, value);
      const std::string& name = registry.at(m).name;
      if (const auto* num = std::get_if<double>(&value))
        j["metrics"][name] = *num;
      else
        j["metrics"][name] = std::get<std::string>(value);
    }
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

std::map<int, std::vector<double>> collect_numeric_values(
    const Registry& registry, const std::vector<UtteranceRecord>& records) {
  std::map<int, std::vector<double>> values;
  for (const UtteranceRecord& rec : records)
    for (const auto& [m, value] : rec.labels)
      if (registry.at(m).is_numerical()) values[m].push_back(std::get<double>(value));
  return values;
}

std::vector<double> coverage(const Registry& registry,
                             const std::vector<UtteranceRecord>& records) {
  if (records.empty()) fail(Errc::EmptyInput, "coverage of an empty dataset");
  std::vector<double> present(registry.size(), 0.0);
  for (const UtteranceRecord& rec : records)
    for (const auto& [m, value] : rec.labels) present[m] += 1.0;
  for (double& p : present) p /= double(records.size());
  return present;
}

}  // namespace chainscore
