// chainscore: simulate / fit-codecs / recon-study / train / decode / evaluate
// / order-trace over one JSON run config. Every command writes its artifact
// plus a manifest (tool version, config hash, input hashes) and is
// byte-reproducible from the same config and seed.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "chainscore/chain.hpp"
#include "chainscore/dataset.hpp"
#include "chainscore/decoder.hpp"
#include "chainscore/error.hpp"
#include "chainscore/eval.hpp"
#include "chainscore/metric_registry.hpp"
#include "chainscore/sequence_model.hpp"
#include "chainscore/synthetic.hpp"
#include "chainscore/tokenizer.hpp"
#include "chainscore/util.hpp"
#include "chainscore/vocabulary.hpp"
#include "embedded_presets.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace chainscore;

namespace {

constexpr const char* kToolVersion = CHAINSCORE_VERSION;

// ---- run config -------------------------------------------------------------

struct RunConfig {
  uint64_t seed = 0;
  Registry registry;
  GeneratorConfig generator;  // seed is filled in per command
  std::vector<double> split_ratios{0.8, 0.1, 0.1};
  BinStrategy strategy = BinStrategy::Percentile;
  int tokens = 500;
  TrainOptions model;
  int beam = 1;
  std::string raw;  // exact config bytes, hashed into manifests
};

double range_bound(const json& metric, const char* key, double fallback) {
  if (!metric.contains(key) || metric.at(key).is_null()) return fallback;
  return metric.at(key).get<double>();
}

Direction direction_from_name(const std::string& name) {
  if (name == "higher_better") return Direction::HigherBetter;
  if (name == "lower_better") return Direction::LowerBetter;
  if (name.empty() || name == "none") return Direction::None;
  fail(Errc::InvalidConfig, "unknown direction '" + name + "'");
}

RunConfig load_config(const std::string& path) {
  RunConfig rc;
  rc.raw = read_text_file(path);
  json j;
  try {
    j = json::parse(rc.raw);
  } catch (const json::exception& e) {
    fail(Errc::ParseError, path + ": " + e.what());
  }
  try {
    rc.seed = j.value("seed", uint64_t{0});

    for (const json& m : j.at("registry")) {
      std::string name = m.at("name").get<std::string>();
      std::string kind = m.at("kind").get<std::string>();
      if (kind == "numerical") {
        double inf = std::numeric_limits<double>::infinity();
        rc.registry.register_metric(
            name, NumericalKind{range_bound(m, "lo", -inf), range_bound(m, "hi", inf),
                                direction_from_name(m.value("direction", ""))});
      } else if (kind == "categorical") {
        rc.registry.register_metric(
            name, CategoricalKind{m.at("labels").get<std::vector<std::string>>()});
      } else {
        fail(Errc::InvalidConfig, path + ": metric '" + name + "' has unknown kind '" + kind + "'");
      }
    }

    if (j.contains("generator")) {
      const json& g = j.at("generator");
      rc.generator.count = g.value("count", 0);
      rc.generator.latent_dim = g.value("latent_dim", 1);
      rc.generator.feature_dim = g.value("feature_dim", 2);
      rc.generator.loading_scale = g.value("loading_scale", 1.0);
      rc.generator.feature_noise = g.value("feature_noise", 0.05);
      for (const json& m : g.value("metrics", json::array())) {
        MetricGen gen;
        gen.loading = m.value("loading", std::vector<double>{});
        gen.sigma = m.value("sigma", 0.5);
        gen.transform = transform_from_name(m.value("transform", "identity"));
        gen.missing_rate = m.value("missing_rate", 0.0);
        gen.label_probs = m.value("label_probs", std::vector<double>{});
        rc.generator.metrics.push_back(std::move(gen));
      }
    }

    if (j.contains("split")) rc.split_ratios = j.at("split").value("ratios", rc.split_ratios);
    if (j.contains("codec")) {
      rc.strategy = strategy_from_name(j.at("codec").value("strategy", "percentile"));
      rc.tokens = j.at("codec").value("tokens", 500);
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      rc.model.kind = model_kind_from_name(m.value("kind", "conditional_backoff"));
      rc.model.alpha = m.value("alpha", 0.5);
      rc.model.feature_dims = m.value("feature_dims", 2);
      rc.model.feature_buckets = m.value("feature_buckets", 4);
    }
    if (j.contains("decode")) rc.beam = j.at("decode").value("beam", 1);
  } catch (const json::exception& e) {
    fail(Errc::ParseError, path + ": " + e.what());
  }
  return rc;
}

// ---- manifests ---------------------------------------------------------------

// Inputs are keyed by role, not path, so reruns in different directories stay
// byte-identical. No timestamps, ever.
void write_manifest(const std::string& path, const std::string& command, const RunConfig& rc,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    const json& options) {
  json m;
  m["tool_version"] = kToolVersion;
  m["command"] = command;
  m["config_hash"] = hex64(fnv1a64(rc.raw));
  json in = json::object();
  for (const auto& [role, bytes] : inputs) in[role] = hex64(fnv1a64(bytes));
  m["inputs"] = std::move(in);
  m["options"] = options;
  write_text_file(path, m.dump(2) + "\n");
}

// ---- codec artifact ----------------------------------------------------------

std::string codec_set_to_json(const Registry& registry, const CodecSet& codecs,
                              BinStrategy strategy, int tokens) {
  json j;
  j["format"] = "chainscore.codecs";
  j["version"] = 1;
  j["strategy"] = strategy_name(strategy);
  j["tokens"] = tokens;
  j["numeric"] = json::array();
  j["categorical"] = json::array();
  for (const MetricSpec& spec : registry.metrics()) {
    if (spec.is_numerical())
      j["numeric"].push_back(json::parse(codecs.numeric.at(spec.index).to_json_string()));
    else
      j["categorical"].push_back(
          {{"metric", spec.name}, {"labels", spec.categorical().labels}});
  }
  return j.dump(2) + "\n";
}

CodecSet codec_set_from_json(const std::string& text, const std::string& path,
                             const Registry& registry) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::CorruptArtifact, path + ": " + e.what());
  }
  if (j.value("format", "") != "chainscore.codecs")
    fail(Errc::CorruptArtifact, path + " is not a codec set artifact");
  if (j.value("version", 0) != 1)
    fail(Errc::VersionMismatch, path + ": unsupported codec artifact version");

  std::map<std::string, json> numeric, categorical;
  try {
    for (const json& c : j.at("numeric")) numeric[c.at("metric").get<std::string>()] = c;
    for (const json& c : j.at("categorical")) categorical[c.at("metric").get<std::string>()] = c;
  } catch (const json::exception& e) {
    fail(Errc::CorruptArtifact, path + ": " + e.what());
  }

  CodecSet set;
  for (const MetricSpec& spec : registry.metrics()) {
    if (spec.is_numerical()) {
      auto it = numeric.find(spec.name);
      if (it == numeric.end())
        fail(Errc::ArtifactMismatch, path + " holds no codec for metric '" + spec.name + "'");
      set.numeric.emplace(spec.index, NumericCodec::from_json_string(it->second.dump()));
    } else {
      auto it = categorical.find(spec.name);
      if (it == categorical.end())
        fail(Errc::ArtifactMismatch, path + " holds no codec for metric '" + spec.name + "'");
      if (it->second.at("labels").get<std::vector<std::string>>() != spec.categorical().labels)
        fail(Errc::ArtifactMismatch,
             path + ": label set for '" + spec.name + "' does not match the registry");
      set.categorical.emplace(spec.index, CategoricalCodec(spec.name, spec.categorical().labels));
    }
  }
  return set;
}

// ---- order presets -----------------------------------------------------------

std::vector<std::string> parse_order_text(const std::string& text) {
  std::vector<std::string> names;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    size_t b = line.find_last_not_of(" \t\r");
    line = line.substr(a, b - a + 1);
    if (line.empty() || line[0] == '#') continue;
    names.push_back(line);
  }
  return names;
}

std::vector<std::string> preset_names(const std::string& preset) {
  if (preset.rfind("file:", 0) == 0) return read_order_file(preset.substr(5));
  if (const char* dir = std::getenv("CHAINSCORE_PRESETS")) {
    fs::path candidate = fs::path(dir) / (preset + ".txt");
    if (fs::exists(candidate)) return read_order_file(candidate.string());
  }
  if (preset == "order-mr") return parse_order_text(chainscore_cli::kOrderMrText);
  if (preset == "order-c2f") return parse_order_text(chainscore_cli::kOrderC2fText);
  fail(Errc::InvalidConfig,
       "unknown order preset '" + preset + "' (expected order-mr, order-c2f, or file:PATH)");
}

// ---- shared option bundle ------------------------------------------------------

struct CliOptions {
  std::string config_path;
  std::string out;
  std::string data, codecs, model, pred, truth;
  std::string query, order_preset, model_kind;
  uint64_t seed = 0;
  int beam = 0;
  int tokens = 0;
  std::string strategy;
  bool teacher_forced = false;
  bool seed_set = false, beam_set = false, tokens_set = false;
};

RunConfig effective_config(const CliOptions& opt) {
  RunConfig rc = load_config(opt.config_path);
  if (opt.seed_set) rc.seed = opt.seed;
  if (opt.beam_set) rc.beam = opt.beam;
  if (opt.tokens_set) rc.tokens = opt.tokens;
  if (!opt.strategy.empty()) rc.strategy = strategy_from_name(opt.strategy);
  if (!opt.model_kind.empty()) rc.model.kind = model_kind_from_name(opt.model_kind);
  return rc;
}

std::string metric_name(const Registry& registry, int index) { return registry.at(index).name; }

std::vector<std::string> order_names(const Registry& registry, const std::vector<int>& order) {
  std::vector<std::string> names;
  for (int m : order) names.push_back(metric_name(registry, m));
  return names;
}

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : csv) {
    if (c == ',') {
      parts.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  parts.push_back(current);
  for (std::string& p : parts) {
    size_t a = p.find_first_not_of(" \t");
    size_t b = p.find_last_not_of(" \t");
    p = (a == std::string::npos) ? "" : p.substr(a, b - a + 1);
  }
  parts.erase(std::remove(parts.begin(), parts.end(), std::string()), parts.end());
  return parts;
}

// ---- commands ------------------------------------------------------------------

int cmd_simulate(const CliOptions& opt) {
  RunConfig rc = effective_config(opt);
  if (rc.split_ratios.size() != 3)
    fail(Errc::InvalidConfig, "split.ratios must list exactly three shares (train/val/test)");
  GeneratorConfig gen = rc.generator;
  gen.seed = rc.seed;
  std::vector<UtteranceRecord> records = generate(rc.registry, gen);
  std::vector<std::vector<UtteranceRecord>> parts = split(records, rc.split_ratios, rc.seed + 1);

  fs::create_directories(opt.out);
  const char* names[3] = {"train", "val", "test"};
  for (int i = 0; i < 3; ++i)
    write_dataset(opt.out + "/" + names[i] + ".jsonl", rc.registry, parts[size_t(i)]);

  std::printf("%zu records -> %zu train / %zu val / %zu test\n", records.size(), parts[0].size(),
              parts[1].size(), parts[2].size());
  std::printf("%-24s %8s %8s %8s\n", "label coverage", "train", "val", "test");
  std::vector<std::vector<double>> cov;
  for (const auto& part : parts) cov.push_back(coverage(rc.registry, part));
  for (const MetricSpec& spec : rc.registry.metrics())
    std::printf("%-24s %7.1f%% %7.1f%% %7.1f%%\n", spec.name.c_str(),
                100.0 * cov[0][size_t(spec.index)], 100.0 * cov[1][size_t(spec.index)],
                100.0 * cov[2][size_t(spec.index)]);

  write_manifest(opt.out + "/manifest.json", "simulate", rc, {},
                 {{"seed", rc.seed},
                  {"count", gen.count},
                  {"ratios", rc.split_ratios}});
  return 0;
}

int cmd_fit_codecs(const CliOptions& opt) {
  RunConfig rc = effective_config(opt);
  std::string data_bytes = read_text_file(opt.data);
  std::vector<UtteranceRecord> records = read_dataset(opt.data, rc.registry);
  CodecSet codecs = fit_codec_set(rc.registry, collect_numeric_values(rc.registry, records),
                                  rc.strategy, rc.tokens);
  write_text_file(opt.out, codec_set_to_json(rc.registry, codecs, rc.strategy, rc.tokens));

  for (const MetricSpec& spec : rc.registry.metrics()) {
    if (spec.is_numerical())
      std::printf("%-24s %d bins (%s)\n", spec.name.c_str(),
                  codecs.numeric.at(spec.index).bins(), strategy_name(rc.strategy));
    else
      std::printf("%-24s %d labels\n", spec.name.c_str(),
                  codecs.categorical.at(spec.index).size());
  }

  write_manifest(opt.out + ".manifest.json", "fit-codecs", rc, {{"data", data_bytes}},
                 {{"strategy", strategy_name(rc.strategy)}, {"tokens", rc.tokens}});
  return 0;
}

int cmd_recon_study(const CliOptions& opt) {
  RunConfig rc = effective_config(opt);
  std::string data_bytes = read_text_file(opt.data);
  std::vector<UtteranceRecord> records = read_dataset(opt.data, rc.registry);
  std::map<int, std::vector<double>> values = collect_numeric_values(rc.registry, records);

  json rows = json::array();
  std::string table;
  char line[160];
  std::snprintf(line, sizeof(line), "%-24s %-12s %8s %12s %12s\n", "metric", "strategy", "tokens",
                "rmse", "mae");
  table += line;
  for (BinStrategy strategy : {BinStrategy::Linear, BinStrategy::Percentile}) {
    for (int tokens : {rc.tokens, 2 * rc.tokens}) {
      CodecSet codecs = fit_codec_set(rc.registry, values, strategy, tokens);
      for (const MetricSpec& spec : rc.registry.metrics()) {
        if (!spec.is_numerical()) continue;
        auto it = values.find(spec.index);
        if (it == values.end() || it->second.empty()) continue;
        ReconReport rep = reconstruction_report(codecs.numeric.at(spec.index), it->second);
        rows.push_back({{"metric", spec.name},
                        {"strategy", strategy_name(strategy)},
                        {"tokens", tokens},
                        {"rmse", rep.rmse},
                        {"mae", rep.mae},
                        {"count", rep.count}});
        std::snprintf(line, sizeof(line), "%-24s %-12s %8d %12.6g %12.6g\n", spec.name.c_str(),
                      strategy_name(strategy), tokens, rep.rmse, rep.mae);
        table += line;
      }
    }
  }
  std::fputs(table.c_str(), stdout);

  json out;
  out["tokens"] = json::array({rc.tokens, 2 * rc.tokens});
  out["rows"] = std::move(rows);
  write_text_file(opt.out, out.dump(2) + "\n");
  write_manifest(opt.out + ".manifest.json", "recon-study", rc, {{"data", data_bytes}},
                 {{"tokens", rc.tokens}});
  return 0;
}

int cmd_train(const CliOptions& opt) {
  RunConfig rc = effective_config(opt);
  std::string data_bytes = read_text_file(opt.data);
  std::string codec_bytes = read_text_file(opt.codecs);
  CodecSet codecs = codec_set_from_json(codec_bytes, opt.codecs, rc.registry);
  TokenVocabulary vocab = TokenVocabulary::build(rc.registry, codecs);
  std::vector<UtteranceRecord> records = read_dataset(opt.data, rc.registry);

  TrainOptions train_opt = rc.model;
  train_opt.order_seed = rc.seed;
  TrainedModel model = TrainedModel::train(rc.registry, vocab, codecs, records, train_opt);
  model.save(opt.out);

  std::printf("trained %s model on %zu records, vocabulary %s\n", model_kind_name(model.kind()),
              records.size(), hex64(vocab.hash()).c_str());
  write_manifest(opt.out + ".manifest.json", "train", rc,
                 {{"data", data_bytes}, {"codecs", codec_bytes}},
                 {{"kind", model_kind_name(train_opt.kind)},
                  {"alpha", train_opt.alpha},
                  {"feature_dims", train_opt.feature_dims},
                  {"feature_buckets", train_opt.feature_buckets},
                  {"order_seed", train_opt.order_seed}});
  return 0;
}

json value_to_json(const MetricValue& value) {
  if (std::holds_alternative<double>(value)) return std::get<double>(value);
  return std::get<std::string>(value);
}

int cmd_decode(const CliOptions& opt) {
  RunConfig rc = effective_config(opt);
  std::string data_bytes = read_text_file(opt.data);
  std::string codec_bytes = read_text_file(opt.codecs);
  std::string model_bytes = read_text_file(opt.model);
  CodecSet codecs = codec_set_from_json(codec_bytes, opt.codecs, rc.registry);
  TokenVocabulary vocab = TokenVocabulary::build(rc.registry, codecs);
  TrainedModel model = TrainedModel::from_json_string(model_bytes, vocab);
  std::vector<UtteranceRecord> records = read_dataset(opt.data, rc.registry);

  std::optional<std::vector<int>> static_order;
  if (!opt.order_preset.empty())
    static_order = resolve_order(rc.registry, preset_names(opt.order_preset), true);

  std::vector<int> query;
  if (!opt.query.empty())
    query = resolve_order(rc.registry, split_csv(opt.query), false);
  else if (static_order)
    query = *static_order;
  else
    for (int m = 0; m < rc.registry.size(); ++m) query.push_back(m);

  std::string out_text;
  size_t rows = 0;
  for (const UtteranceRecord& rec : records) {
    PredictionSet ps;
    if (opt.teacher_forced) {
      const std::vector<int>& base = static_order ? *static_order : query;
      std::vector<int> order;
      for (int m : base)
        if (rec.labels.count(m)) order.push_back(m);
      if (order.empty()) continue;  // nothing labelled to force
      ps = decode_teacher_forced(model, rc.registry, codecs, rec.features, rec.labels, order);
    } else {
      DecodeRequest req;
      req.query = query;
      req.beam = rc.beam;
      if (static_order) {
        req.mode = DecodeMode::Static;
        req.static_order = *static_order;
      }
      ps = decode(model, rc.registry, codecs, rec.features, req);
    }
    json row;
    row["id"] = rec.id;
    row["order"] = order_names(rc.registry, ps.order);
    row["loglik"] = ps.loglik;
    json metrics = json::object();
    for (const auto& [m, pred] : ps.metrics)
      metrics[metric_name(rc.registry, m)] = {{"value", value_to_json(pred.value)},
                                              {"confidence", pred.confidence}};
    row["metrics"] = std::move(metrics);
    out_text += row.dump();
    out_text += '\n';
    ++rows;
  }
  write_text_file(opt.out, out_text);
  std::printf("decoded %zu of %zu utterances\n", rows, records.size());

  json options = {{"beam", rc.beam},
                  {"mode", static_order ? "static" : "dynamic"},
                  {"teacher_forced", opt.teacher_forced},
                  {"query", order_names(rc.registry, query)}};
  if (static_order) options["order"] = order_names(rc.registry, *static_order);
  write_manifest(opt.out + ".manifest.json", "decode", rc,
                 {{"data", data_bytes}, {"model", model_bytes}, {"codecs", codec_bytes}},
                 options);
  return 0;
}

// Prediction rows as written by cmd_decode, parsed leniently enough to accept
// any row carrying id / order / metrics.
std::vector<json> read_prediction_rows(const std::string& path) {
  std::string text = read_text_file(path);
  std::vector<json> rows;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      fail(Errc::ParseError, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!row.is_object() || !row.contains("id") || !row.contains("metrics"))
      fail(Errc::ParseError,
           path + ":" + std::to_string(line_no) + ": expected a prediction record");
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_evaluate(const CliOptions& opt) {
  RunConfig rc = effective_config(opt);
  std::string pred_bytes = read_text_file(opt.pred);
  std::string truth_bytes = read_text_file(opt.truth);
  std::string codec_bytes = read_text_file(opt.codecs);
  CodecSet codecs = codec_set_from_json(codec_bytes, opt.codecs, rc.registry);
  std::vector<UtteranceRecord> truth = read_dataset(opt.truth, rc.registry);
  std::vector<json> preds = read_prediction_rows(opt.pred);

  std::map<std::string, const UtteranceRecord*> by_id;
  for (const UtteranceRecord& rec : truth) by_id[rec.id] = &rec;

  std::vector<MetricReport> reports;
  for (const MetricSpec& spec : rc.registry.metrics()) {
    PairedSeries series;
    PairedLabels labels;
    for (const json& row : preds) {
      auto rec_it = by_id.find(row.at("id").get<std::string>());
      if (rec_it == by_id.end()) continue;
      auto label_it = rec_it->second->labels.find(spec.index);
      if (label_it == rec_it->second->labels.end()) continue;
      const json& metrics = row.at("metrics");
      if (!metrics.contains(spec.name)) continue;
      const json& value = metrics.at(spec.name).at("value");
      if (spec.is_numerical()) {
        if (!value.is_number())
          fail(Errc::ParseError, opt.pred + ": non-numeric prediction for '" + spec.name + "'");
        series.truth.push_back(std::get<double>(label_it->second));
        series.pred.push_back(value.get<double>());
      } else {
        if (!value.is_string())
          fail(Errc::ParseError, opt.pred + ": non-label prediction for '" + spec.name + "'");
        labels.truth.push_back(std::get<std::string>(label_it->second));
        labels.pred.push_back(value.get<std::string>());
      }
    }
    MetricReport report;
    report.metric = spec.name;
    report.is_numerical = spec.is_numerical();
    if (spec.is_numerical()) {
      if (series.truth.empty()) continue;
      report.n = int(series.truth.size());
      report.regression = regression_scores(series, codecs.numeric.at(spec.index));
      report.rank = rank_scores(series);
    } else {
      if (labels.truth.empty()) continue;
      report.n = int(labels.truth.size());
      report.classification = classification_scores(labels, spec.categorical().labels);
    }
    reports.push_back(std::move(report));
  }

  ScoreReport score = aggregate(reports);
  write_text_file(opt.out, report_to_json(score));
  std::fputs(report_to_text(score).c_str(), stdout);
  write_manifest(opt.out + ".manifest.json", "evaluate", rc,
                 {{"pred", pred_bytes}, {"truth", truth_bytes}, {"codecs", codec_bytes}}, {});
  return 0;
}

int cmd_order_trace(const CliOptions& opt) {
  RunConfig rc = effective_config(opt);
  std::string pred_bytes = read_text_file(opt.pred);
  std::vector<json> rows = read_prediction_rows(opt.pred);

  std::vector<PredictionSet> decodes;
  for (const json& row : rows) {
    PredictionSet ps;
    int position = 0;
    for (const json& name : row.value("order", json::array())) {
      std::optional<int> m = rc.registry.find(name.get<std::string>());
      if (!m) fail(Errc::UnknownMetric, opt.pred + ": unregistered metric '" +
                                            name.get<std::string>() + "' in a visit order");
      ps.order.push_back(*m);
      ps.metrics[*m].position = position++;
    }
    decodes.push_back(std::move(ps));
  }
  OrderTrace trace = order_trace(decodes, rc.registry.size());

  // Table-3 shape: metrics ranked by average visit position, never-visited last.
  std::vector<int> ranked;
  for (int m = 0; m < rc.registry.size(); ++m) ranked.push_back(m);
  std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) {
    bool va = trace.visits[size_t(a)] > 0, vb = trace.visits[size_t(b)] > 0;
    if (va != vb) return va;
    if (va && trace.mean_position[size_t(a)] != trace.mean_position[size_t(b)])
      return trace.mean_position[size_t(a)] < trace.mean_position[size_t(b)];
    return metric_name(rc.registry, a) < metric_name(rc.registry, b);
  });

  json out;
  out["metrics"] = json::array();
  std::printf("%4s  %-24s %14s %8s\n", "rank", "metric", "mean position", "visits");
  int rank = 0;
  for (int m : ranked) {
    bool visited = trace.visits[size_t(m)] > 0;
    json entry;
    entry["metric"] = metric_name(rc.registry, m);
    entry["visits"] = trace.visits[size_t(m)];
    entry["mean_position"] = visited ? json(trace.mean_position[size_t(m)]) : json(nullptr);
    out["metrics"].push_back(std::move(entry));
    if (visited)
      std::printf("%4d  %-24s %14.4f %8d\n", ++rank, metric_name(rc.registry, m).c_str(),
                  trace.mean_position[size_t(m)], trace.visits[size_t(m)]);
    else
      std::printf("%4s  %-24s %14s %8d\n", "-", metric_name(rc.registry, m).c_str(), "never",
                  trace.visits[size_t(m)]);
  }
  write_text_file(opt.out, out.dump(2) + "\n");
  write_manifest(opt.out + ".manifest.json", "order-trace", rc, {{"pred", pred_bytes}}, {});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speech metric chains: simulate, tokenize, train, decode, evaluate"};
  app.require_subcommand(1);

  CliOptions opt;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opt.config_path, "run config JSON")->required();
    cmd->add_option("--out", opt.out, "output path")->required();
    cmd->add_option("--seed", opt.seed, "override the config seed")
        ->each([&](const std::string&) { opt.seed_set = true; });
  };

  CLI::App* simulate = app.add_subcommand("simulate", "generate synthetic train/val/test splits");
  add_common(simulate);

  CLI::App* fit = app.add_subcommand("fit-codecs", "fit value codecs on a dataset");
  add_common(fit);
  fit->add_option("--data", opt.data, "training dataset (jsonl)")->required();
  fit->add_option("--tokens", opt.tokens, "override codec token budget")
      ->each([&](const std::string&) { opt.tokens_set = true; });
  fit->add_option("--strategy", opt.strategy, "override binning strategy (linear|percentile)");

  CLI::App* recon = app.add_subcommand("recon-study",
                                       "reconstruction error of both binning strategies");
  add_common(recon);
  recon->add_option("--data", opt.data, "dataset (jsonl)")->required();
  recon->add_option("--tokens", opt.tokens, "base token budget (also fits 2x)")
      ->each([&](const std::string&) { opt.tokens_set = true; });

  CLI::App* train = app.add_subcommand("train", "train a sequence model");
  add_common(train);
  train->add_option("--data", opt.data, "training dataset (jsonl)")->required();
  train->add_option("--codecs", opt.codecs, "fitted codec artifact")->required();
  train->add_option("--model-kind", opt.model_kind,
                    "override model kind (marginal|conditional_backoff)");

  CLI::App* decode = app.add_subcommand("decode", "predict metrics for a dataset");
  add_common(decode);
  decode->add_option("--data", opt.data, "dataset to decode (jsonl)")->required();
  decode->add_option("--model", opt.model, "trained model artifact")->required();
  decode->add_option("--codecs", opt.codecs, "fitted codec artifact")->required();
  decode->add_option("--beam", opt.beam, "override beam width")
      ->each([&](const std::string&) { opt.beam_set = true; });
  decode->add_option("--query", opt.query, "comma-separated metrics to predict");
  decode->add_option("--order-preset", opt.order_preset,
                     "static visit order: order-mr, order-c2f, or file:PATH");
  decode->add_flag("--teacher-forced", opt.teacher_forced,
                   "feed ground-truth tokens instead of predictions");

  CLI::App* evaluate = app.add_subcommand("evaluate", "score predictions against ground truth");
  add_common(evaluate);
  evaluate->add_option("--pred", opt.pred, "prediction rows (jsonl)")->required();
  evaluate->add_option("--truth", opt.truth, "ground-truth dataset (jsonl)")->required();
  evaluate->add_option("--codecs", opt.codecs, "fitted codec artifact")->required();

  CLI::App* trace = app.add_subcommand("order-trace", "average visit position per metric");
  add_common(trace);
  trace->add_option("--pred", opt.pred, "prediction rows (jsonl)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(opt);
    if (fit->parsed()) return cmd_fit_codecs(opt);
    if (recon->parsed()) return cmd_recon_study(opt);
    if (train->parsed()) return cmd_train(opt);
    if (decode->parsed()) return cmd_decode(opt);
    if (evaluate->parsed()) return cmd_evaluate(opt);
    if (trace->parsed()) return cmd_order_trace(opt);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    bool artifact = e.code() == Errc::VersionMismatch || e.code() == Errc::ArtifactMismatch;
    return artifact ? 3 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;  // unreachable: require_subcommand(1)
}
