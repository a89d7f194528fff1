#include "nexcv/report.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "nexcv/csv.hpp"
#include "nexcv/error.hpp"

namespace nexcv {
namespace {

using ojson = nlohmann::ordered_json;

double round6(double x) {
  const double r = std::round(x * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;  // no "-0.0"
}

std::string fixed6(double x) { return fmt::format("{:.6f}", round6(x)); }

ojson optional_number(const std::optional<double>& v) {
  return v ? ojson(round6(*v)) : ojson(nullptr);
}

ojson mode_json(const SelectionMode& mode) {
  ojson m;
  if (const auto* c = std::get_if<CutoffMode>(&mode)) {
    m["kind"] = "cutoff";
    m["K"] = c->k;
  } else {
    m["kind"] = "proportional";
    m["P"] = round6(std::get<ProportionalMode>(mode).p);
  }
  return m;
}

ojson config_json(const NexCvConfig& cfg) {
  ojson c;
  c["mode"] = mode_json(cfg.mode);
  c["t"] = round6(cfg.test_fraction);
  c["retries"] = cfg.retries;
  c["threshold"] = round6(cfg.confidence_threshold);
  c["seed"] = cfg.seed;
  return c;
}

ojson summary_json(const MetricSummary& s) {
  ojson j;
  j["mean"] = round6(s.mean);
  j["std"] = round6(s.std);
  j["n"] = s.n;
  return j;
}

ojson aggregate_json(const Aggregate& a) {
  ojson j;
  j["accuracy"] = summary_json(a.accuracy);
  j["macro_f1"] = summary_json(a.macro_f1);
  j["micro_f1"] = summary_json(a.micro_f1);
  j["carefulness"] = a.carefulness ? summary_json(*a.carefulness) : ojson(nullptr);
  return j;
}

// Reading back.

const ojson& field(const ojson& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(fmt::format("report JSON: missing field \"{}\"", key));
  }
  return obj.at(key);
}

SelectionMode mode_from_json(const ojson& m) {
  const auto kind = field(m, "kind").get<std::string>();
  if (kind == "cutoff") return CutoffMode{field(m, "K").get<int>()};
  if (kind == "proportional") return ProportionalMode{field(m, "P").get<double>()};
  throw Error(fmt::format("report JSON: unknown mode kind '{}'", kind));
}

NexCvConfig config_from_json(const ojson& c) {
  NexCvConfig cfg;
  cfg.mode = mode_from_json(field(c, "mode"));
  cfg.test_fraction = field(c, "t").get<double>();
  cfg.retries = field(c, "retries").get<int>();
  cfg.confidence_threshold = field(c, "threshold").get<double>();
  cfg.seed = field(c, "seed").get<std::uint64_t>();
  return cfg;
}

MetricSummary summary_from_json(const ojson& j) {
  return {field(j, "mean").get<double>(), field(j, "std").get<double>(),
          field(j, "n").get<std::size_t>()};
}

Aggregate aggregate_from_json(const ojson& j) {
  Aggregate a;
  a.accuracy = summary_from_json(field(j, "accuracy"));
  a.macro_f1 = summary_from_json(field(j, "macro_f1"));
  a.micro_f1 = summary_from_json(field(j, "micro_f1"));
  if (const auto& c = field(j, "carefulness"); !c.is_null()) a.carefulness = summary_from_json(c);
  return a;
}

std::optional<double> optional_from_json(const ojson& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

ojson parse_document(std::string_view text) {
  try {
    return ojson::parse(text);
  } catch (const ojson::exception& e) {
    throw Error(fmt::format("report JSON: {}", e.what()));
  }
}

std::string mode_label(const SelectionMode& mode) {
  if (const auto* c = std::get_if<CutoffMode>(&mode)) return fmt::format("cutoff K={}", c->k);
  return fmt::format("proportional P={}", std::get<ProportionalMode>(mode).p);
}

std::string md_escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    if (c == '|') {
      out += "\\|";
    } else if (c == '\n' || c == '\r') {
      out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string summary_cell(const MetricSummary& s) {
  return fmt::format("{} ± {}", fixed6(s.mean), fixed6(s.std));
}

}  // namespace

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now));
}

std::string render_json(const EvaluationReport& r, std::optional<std::string> produced_at) {
  ojson doc;
  doc["schema_version"] = kSchemaVersion;
  doc["produced_at"] = produced_at ? *produced_at : utc_timestamp();
  doc["dataset_name"] = r.dataset_name;
  doc["config"] = config_json(r.config);

  doc["retries"] = ojson::array();
  for (const auto& rec : r.retries) {
    ojson j;
    j["accuracy"] = round6(rec.accuracy);
    j["macro_f1"] = round6(rec.macro_f1);
    j["micro_f1"] = round6(rec.micro_f1);
    j["carefulness"] = optional_number(rec.carefulness);
    j["train_size"] = rec.train_size;
    j["test_size"] = rec.test_size;
    j["negatives_in_test"] = rec.negatives_in_test;
    j["fit_ms"] = round6(rec.fit_ms);
    j["predict_ms"] = round6(rec.predict_ms);
    doc["retries"].push_back(std::move(j));
  }
  doc["aggregate"] = aggregate_json(r.aggregate);

  doc["confusion"] = ojson::array();
  for (const auto& [key, count] : r.confusion.cells()) {
    ojson j;
    j["gold"] = key.first;
    j["predicted"] = key.second;
    j["count"] = count;
    doc["confusion"].push_back(std::move(j));
  }
  doc["pairs"] = ojson::array();
  for (const auto& p : r.pairs) {
    ojson j;
    j["a"] = p.a;
    j["b"] = p.b;
    j["score"] = p.score;
    doc["pairs"].push_back(std::move(j));
  }
  doc["examples"] = ojson::array();
  for (const auto& e : r.examples) {
    ojson j;
    j["pair"] = ojson::array({e.a, e.b});
    j["text"] = e.text;
    j["gold"] = e.gold;
    j["guess"] = e.guess;
    j["confidence"] = round6(e.confidence);
    doc["examples"].push_back(std::move(j));
  }
  doc["oos_leaks"] = ojson::array();
  for (const auto& l : r.oos_leaks) {
    ojson j;
    j["label"] = l.label;
    j["count"] = l.count;
    doc["oos_leaks"].push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

std::string render_json(const ComparisonReport& r, std::optional<std::string> produced_at) {
  ojson doc;
  doc["schema_version"] = kSchemaVersion;
  doc["produced_at"] = produced_at ? *produced_at : utc_timestamp();
  doc["dataset_name"] = r.dataset_name;
  doc["config"] = config_json(r.config);
  doc["engines"] = ojson::array();
  for (const auto& e : r.engines) {
    ojson j;
    j["name"] = e.name;
    j["ok"] = e.ok;
    j["error"] = e.ok ? ojson(nullptr) : ojson(e.error);
    j["settings"] = ojson::array();
    for (const auto& s : e.settings) {
      ojson sj;
      sj["setting"] = s.name;
      sj["mode"] = mode_json(s.mode);
      const auto agg = aggregate_json(s.aggregate);
      for (const auto& [k, v] : agg.items()) sj[k] = v;
      j["settings"].push_back(std::move(sj));
    }
    if (e.ok) {
      j["range"]["min"] = round6(e.min_accuracy);
      j["range"]["mean"] = round6(e.mean_accuracy);
      j["range"]["max"] = round6(e.max_accuracy);
    } else {
      j["range"] = nullptr;
    }
    doc["engines"].push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

ParsedEvaluationReport parse_evaluation_json(std::string_view json_text) {
  const auto doc = parse_document(json_text);
  ParsedEvaluationReport out;
  auto& r = out.report;
  try {
    out.produced_at = field(doc, "produced_at").get<std::string>();
    r.dataset_name = field(doc, "dataset_name").get<std::string>();
    r.config = config_from_json(field(doc, "config"));
    for (const auto& j : field(doc, "retries")) {
      RetryRecord rec;
      rec.accuracy = field(j, "accuracy").get<double>();
      rec.macro_f1 = field(j, "macro_f1").get<double>();
      rec.micro_f1 = field(j, "micro_f1").get<double>();
      rec.carefulness = optional_from_json(field(j, "carefulness"));
      rec.train_size = field(j, "train_size").get<std::size_t>();
      rec.test_size = field(j, "test_size").get<std::size_t>();
      rec.negatives_in_test = field(j, "negatives_in_test").get<std::size_t>();
      rec.fit_ms = field(j, "fit_ms").get<double>();
      rec.predict_ms = field(j, "predict_ms").get<double>();
      r.retries.push_back(rec);
    }
    r.aggregate = aggregate_from_json(field(doc, "aggregate"));
    for (const auto& j : field(doc, "confusion")) {
      r.confusion.add(field(j, "gold").get<std::string>(), field(j, "predicted").get<std::string>(),
                      field(j, "count").get<std::size_t>());
    }
    for (const auto& j : field(doc, "pairs")) {
      r.pairs.push_back({field(j, "a").get<std::string>(), field(j, "b").get<std::string>(),
                         field(j, "score").get<std::size_t>()});
    }
    for (const auto& j : field(doc, "examples")) {
      const auto& pair = field(j, "pair");
      r.examples.push_back({pair.at(0).get<std::string>(), pair.at(1).get<std::string>(),
                            field(j, "text").get<std::string>(),
                            field(j, "gold").get<std::string>(),
                            field(j, "guess").get<std::string>(),
                            field(j, "confidence").get<double>()});
    }
    for (const auto& j : field(doc, "oos_leaks")) {
      r.oos_leaks.push_back({field(j, "label").get<std::string>(),
                             field(j, "count").get<std::size_t>()});
    }
  } catch (const ojson::exception& e) {
    throw Error(fmt::format("report JSON: {}", e.what()));
  }
  return out;
}

ParsedComparisonReport parse_comparison_json(std::string_view json_text) {
  const auto doc = parse_document(json_text);
  ParsedComparisonReport out;
  auto& r = out.report;
  try {
    out.produced_at = field(doc, "produced_at").get<std::string>();
    r.dataset_name = field(doc, "dataset_name").get<std::string>();
    r.config = config_from_json(field(doc, "config"));
    for (const auto& j : field(doc, "engines")) {
      EngineComparison e;
      e.name = field(j, "name").get<std::string>();
      e.ok = field(j, "ok").get<bool>();
      if (const auto& err = field(j, "error"); !err.is_null()) e.error = err.get<std::string>();
      for (const auto& sj : field(j, "settings")) {
        e.settings.push_back({field(sj, "setting").get<std::string>(),
                              mode_from_json(field(sj, "mode")), aggregate_from_json(sj)});
      }
      if (const auto& range = field(j, "range"); !range.is_null()) {
        e.min_accuracy = field(range, "min").get<double>();
        e.mean_accuracy = field(range, "mean").get<double>();
        e.max_accuracy = field(range, "max").get<double>();
      }
      r.engines.push_back(std::move(e));
    }
  } catch (const ojson::exception& e) {
    throw Error(fmt::format("report JSON: {}", e.what()));
  }
  return out;
}

std::string render_markdown(const EvaluationReport& r, std::size_t top_pairs) {
  std::string md;
  auto out = std::back_inserter(md);
  fmt::format_to(out, "# nex-cv evaluation: {}\n\n", md_escape(r.dataset_name));
  fmt::format_to(out, "Selection: {}; test fraction {}; {} retries; threshold {}; seed {}\n\n",
                 mode_label(r.config.mode), r.config.test_fraction, r.config.retries,
                 r.config.confidence_threshold, r.config.seed);

  fmt::format_to(out, "## Headline metrics\n\n");
  fmt::format_to(out, "| metric | mean | std | retries |\n|---|---|---|---|\n");
  auto row = [&](std::string_view name, const MetricSummary& s) {
    fmt::format_to(out, "| {} | {} | {} | {} |\n", name, fixed6(s.mean), fixed6(s.std), s.n);
  };
  row("accuracy", r.aggregate.accuracy);
  row("macro_f1", r.aggregate.macro_f1);
  row("micro_f1", r.aggregate.micro_f1);
  if (r.aggregate.carefulness) {
    row("carefulness", *r.aggregate.carefulness);
  } else {
    fmt::format_to(out, "| carefulness | n/a | n/a | 0 |\n");
  }

  fmt::format_to(out, "\n## Most confused pairs\n\n");
  if (r.pairs.empty()) {
    fmt::format_to(out, "No confusions observed.\n");
  } else {
    const std::size_t shown = std::min(top_pairs, r.pairs.size());
    for (std::size_t i = 0; i < shown; ++i) {
      const auto& p = r.pairs[i];
      fmt::format_to(out, "{}. **{}** / **{}**: {} confusions\n", i + 1, md_escape(p.a),
                     md_escape(p.b), p.score);
      for (const auto& e : r.examples) {
        if (e.a != p.a || e.b != p.b) continue;
        fmt::format_to(out, "   - \"{}\" (gold {}, guessed {}, confidence {})\n",
                       md_escape(e.text), md_escape(e.gold), md_escape(e.guess),
                       fixed6(e.confidence));
      }
    }
  }

  if (!r.oos_leaks.empty()) {
    fmt::format_to(out, "\n## Out-of-scope items answered\n\n| label | count |\n|---|---|\n");
    for (const auto& l : r.oos_leaks) fmt::format_to(out, "| {} | {} |\n", md_escape(l.label), l.count);
  }

  fmt::format_to(out, "\n## Retries\n\n");
  fmt::format_to(out,
                 "| retry | accuracy | macro_f1 | micro_f1 | carefulness | train | test | "
                 "negatives |\n|---|---|---|---|---|---|---|---|\n");
  for (std::size_t i = 0; i < r.retries.size(); ++i) {
    const auto& rec = r.retries[i];
    fmt::format_to(out, "| {} | {} | {} | {} | {} | {} | {} | {} |\n", i, fixed6(rec.accuracy),
                   fixed6(rec.macro_f1), fixed6(rec.micro_f1),
                   rec.carefulness ? fixed6(*rec.carefulness) : "n/a", rec.train_size,
                   rec.test_size, rec.negatives_in_test);
  }
  return md;
}

std::string render_markdown(const ComparisonReport& r) {
  std::string md;
  auto out = std::back_inserter(md);
  fmt::format_to(out, "# nex-cv engine comparison: {}\n\n", md_escape(r.dataset_name));
  fmt::format_to(out, "Test fraction {}; {} retries; threshold {}; seed {}\n\n",
                 r.config.test_fraction, r.config.retries, r.config.confidence_threshold,
                 r.config.seed);

  fmt::format_to(out, "## Accuracy range across settings\n\n");
  fmt::format_to(out, "| engine | min | mean | max |\n|---|---|---|---|\n");
  for (const auto& e : r.engines) {
    if (e.ok) {
      fmt::format_to(out, "| {} | {} | {} | {} |\n", md_escape(e.name), fixed6(e.min_accuracy),
                     fixed6(e.mean_accuracy), fixed6(e.max_accuracy));
    } else {
      fmt::format_to(out, "| {} | failed | failed | failed |\n", md_escape(e.name));
    }
  }

  fmt::format_to(out, "\n## Per-setting breakdown\n\n");
  fmt::format_to(out,
                 "| engine | setting | accuracy | macro_f1 | carefulness |\n|---|---|---|---|---|\n");
  for (const auto& e : r.engines) {
    for (const auto& s : e.settings) {
      fmt::format_to(out, "| {} | {} | {} | {} | {} |\n", md_escape(e.name), s.name,
                     summary_cell(s.aggregate.accuracy), summary_cell(s.aggregate.macro_f1),
                     s.aggregate.carefulness ? summary_cell(*s.aggregate.carefulness) : "n/a");
    }
  }

  bool any_failed = false;
  for (const auto& e : r.engines) any_failed = any_failed || !e.ok;
  if (any_failed) {
    fmt::format_to(out, "\n## Failed engines\n\n");
    for (const auto& e : r.engines) {
      if (!e.ok) fmt::format_to(out, "- {}: {}\n", md_escape(e.name), md_escape(e.error));
    }
  }
  return md;
}

CsvKind parse_csv_kind(std::string_view which) {
  if (which == "retries") return CsvKind::Retries;
  if (which == "confusion") return CsvKind::Confusion;
  if (which == "pairs") return CsvKind::Pairs;
  throw std::invalid_argument(fmt::format("unknown CSV kind '{}'", which));
}

std::string emit_csv(const EvaluationReport& r, std::string_view which) {
  return emit_csv(r, parse_csv_kind(which));
}

std::string emit_csv(const EvaluationReport& r, CsvKind which) {
  std::string out;
  switch (which) {
    case CsvKind::Retries:
      out = "retry,accuracy,macro_f1,micro_f1,carefulness,train_size,test_size,negatives_in_test,"
            "fit_ms,predict_ms\n";
      for (std::size_t i = 0; i < r.retries.size(); ++i) {
        const auto& rec = r.retries[i];
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", i, fixed6(rec.accuracy),
                           fixed6(rec.macro_f1), fixed6(rec.micro_f1),
                           rec.carefulness ? fixed6(*rec.carefulness) : "", rec.train_size,
                           rec.test_size, rec.negatives_in_test, fixed6(rec.fit_ms),
                           fixed6(rec.predict_ms));
      }
      break;
    case CsvKind::Confusion:
      out = "gold,predicted,count\n";
      for (const auto& [key, count] : r.confusion.cells()) {
        out += csv::join({key.first, key.second, std::to_string(count)}) + "\n";
      }
      break;
    case CsvKind::Pairs:
      out = "label_a,label_b,score\n";
      for (const auto& p : r.pairs) out += csv::join({p.a, p.b, std::to_string(p.score)}) + "\n";
      break;
  }
  return out;
}

}  // namespace nexcv
