#include "nexcv/cli.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>

#include <CLI11.hpp>

#include "nexcv/baseline.hpp"
#include "nexcv/dataset.hpp"
#include "nexcv/error.hpp"
#include "nexcv/evaluation.hpp"
#include "nexcv/external.hpp"
#include "nexcv/report.hpp"

namespace nexcv {
namespace {

// Raised for flag combinations CLI11 cannot express; maps to exit 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct DataFlags {
  std::string data;
  std::string format;
};

struct RunFlags {
  double t = 0.2;
  int retries = 10;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  std::string out;
  std::string markdown;
  std::string csv_dir;
  unsigned jobs = 1;
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--data", f.data, "dataset file (.csv or .jsonl)")->required();
  cmd->add_option("--format", f.format, "dataset format, inferred from the extension if omitted")
      ->check(CLI::IsMember({"csv", "jsonl"}));
}

const auto kOpenUnit = CLI::Validator(
    [](std::string& s) -> std::string {
      double v = 0.0;
      try {
        v = std::stod(s);
      } catch (const std::exception&) {
        return "not a number: " + s;
      }
      return v > 0.0 && v < 1.0 ? std::string() : "must lie in (0, 1)";
    },
    "(0,1)");

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_outputs = true) {
  cmd->add_option("--t", f.t, "test fraction")->check(kOpenUnit)->capture_default_str();
  cmd->add_option("--retries", f.retries, "number of retries")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--threshold", f.threshold, "confidence threshold for answering")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "base seed; retry i uses seed + i")->capture_default_str();
  cmd->add_option("--jobs", f.jobs, "retries evaluated in parallel")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  if (with_outputs) {
    cmd->add_option("--out", f.out, "JSON report path");
    cmd->add_option("--markdown", f.markdown, "markdown report path");
    cmd->add_option("--csv-dir", f.csv_dir, "directory for retries/confusion/pairs CSV files");
  }
}

Dataset load(const DataFlags& f) {
  const std::filesystem::path path(f.data);
  if (!std::filesystem::exists(path)) throw DatasetError(fmt::format("no such file '{}'", f.data));
  DatasetFormat format;
  if (f.format.empty()) {
    format = format_from_path(path);
  } else {
    format = f.format == "csv" ? DatasetFormat::Csv : DatasetFormat::Jsonl;
  }
  return load_dataset(path, format);
}

// Warns about data-quality issues; throws when the dataset cannot be evaluated.
void check_for_evaluation(const Dataset& d, std::ostream& err) {
  for (const auto& issue : validate_dataset(d)) {
    if (issue.kind == DatasetIssue::Kind::TooFewLabels) throw DatasetError(issue.message);
    fmt::print(err, "warning: {}\n", issue.message);
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(fmt::format("cannot write '{}'", path));
  f << content;
}

NexCvConfig make_config(const RunFlags& f, SelectionMode mode) {
  NexCvConfig cfg;
  cfg.mode = mode;
  cfg.test_fraction = f.t;
  cfg.retries = f.retries;
  cfg.confidence_threshold = f.threshold;
  cfg.seed = f.seed;
  return cfg;
}

void write_outputs(const EvaluationReport& r, const RunFlags& f, const std::string& default_out,
                   std::size_t top) {
  write_file(f.out.empty() ? default_out : f.out, render_json(r));
  if (!f.markdown.empty()) write_file(f.markdown, render_markdown(r, top));
  if (!f.csv_dir.empty()) {
    std::filesystem::create_directories(f.csv_dir);
    for (const char* which : {"retries", "confusion", "pairs"}) {
      write_file((std::filesystem::path(f.csv_dir) / fmt::format("{}.csv", which)).string(),
                 emit_csv(r, which));
    }
  }
}

void print_pairs(const EvaluationReport& r, std::size_t top, bool with_examples, std::ostream& out) {
  if (r.pairs.empty()) {
    fmt::print(out, "no confusions observed\n");
    return;
  }
  const std::size_t shown = std::min(top, r.pairs.size());
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& p = r.pairs[i];
    fmt::print(out, "{}. {} / {}  score {}\n", i + 1, p.a, p.b, p.score);
    if (!with_examples) continue;
    for (const auto& e : r.examples) {
      if (e.a == p.a && e.b == p.b) {
        fmt::print(out, "     \"{}\"  gold={} guess={} confidence={:.6f}\n", e.text, e.gold,
                   e.guess, e.confidence);
      }
    }
  }
}

void print_headline(const EvaluationReport& r, std::ostream& out) {
  const auto& a = r.aggregate;
  fmt::print(out, "dataset      {}\n", r.dataset_name);
  fmt::print(out, "accuracy     {:.6f} ± {:.6f}\n", a.accuracy.mean, a.accuracy.std);
  fmt::print(out, "macro_f1     {:.6f} ± {:.6f}\n", a.macro_f1.mean, a.macro_f1.std);
  fmt::print(out, "micro_f1     {:.6f} ± {:.6f}\n", a.micro_f1.mean, a.micro_f1.std);
  if (a.carefulness) {
    fmt::print(out, "carefulness  {:.6f} ± {:.6f} ({} retries)\n", a.carefulness->mean,
               a.carefulness->std, a.carefulness->n);
  } else {
    fmt::print(out, "carefulness  n/a (no abstentions)\n");
  }
}

NamedFactory parse_engine(const std::string& spec, std::chrono::milliseconds timeout) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw UsageError(fmt::format("engine spec '{}' must be name=builtin or name=cmd:<command>", spec));
  }
  std::string name = spec.substr(0, eq);
  const std::string kind = spec.substr(eq + 1);
  if (kind == "builtin") return {std::move(name), baseline_factory()};
  if (kind.rfind("cmd:", 0) == 0 && kind.size() > 4) {
    return {std::move(name), external_factory(kind.substr(4), timeout)};
  }
  throw UsageError(fmt::format("unknown engine kind in '{}'", spec));
}

struct SyntheticShape {
  std::size_t count = 0;
  std::size_t min = 0;
  std::size_t max = 0;
};

// "5x100" or "20x5..10".
SyntheticShape parse_shape(const std::string& s, bool allow_range) {
  static const std::regex pattern(R"((\d+)x(\d+)(?:\.\.(\d+))?)");
  std::smatch m;
  if (!std::regex_match(s, m, pattern) || (m[3].matched && !allow_range)) {
    throw UsageError(fmt::format("cannot parse class shape '{}'", s));
  }
  SyntheticShape shape;
  shape.count = std::stoul(m[1]);
  shape.min = std::stoul(m[2]);
  shape.max = m[3].matched ? std::stoul(m[3]) : shape.min;
  if (shape.min > shape.max) throw UsageError(fmt::format("empty size range in '{}'", s));
  return shape;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"nex-cv: evaluate text classifiers with negative examples drawn from small classes",
               "nexcv"};
  app.require_subcommand(1);

  // evaluate
  DataFlags eval_data;
  RunFlags eval_run;
  std::string eval_mode;
  std::optional<int> eval_k;
  std::optional<double> eval_p;
  auto* evaluate = app.add_subcommand("evaluate", "run nex-cv and write a report");
  add_data_flags(evaluate, eval_data);
  add_run_flags(evaluate, eval_run);
  evaluate->add_option("--mode", eval_mode, "negative-class selection")
      ->check(CLI::IsMember({"cutoff", "proportional"}));
  evaluate->add_option("--k", eval_k, "cutoff: classes with fewer than K examples are negatives")
      ->check(CLI::NonNegativeNumber);
  evaluate->add_option("--p", eval_p, "proportional: smallest classes covering fraction P")
      ->check(CLI::Range(0.0, 1.0));
  std::size_t eval_top = 3;
  evaluate->add_option("--top", eval_top, "confused pairs to print")->capture_default_str();

  // pairs
  DataFlags pairs_data;
  RunFlags pairs_run;
  std::size_t pairs_top = 3;
  auto* pairs = app.add_subcommand("pairs", "rank the most confused class pairs (K=0, P=0.15)");
  add_data_flags(pairs, pairs_data);
  add_run_flags(pairs, pairs_run);
  pairs->add_option("--top", pairs_top, "pairs to print")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // compare
  DataFlags cmp_data;
  RunFlags cmp_run;
  std::vector<std::string> engines;
  double engine_timeout = 60.0;
  auto* comparecmd = app.add_subcommand("compare", "compare engines across the three settings");
  add_data_flags(comparecmd, cmp_data);
  add_run_flags(comparecmd, cmp_run);
  comparecmd->add_option("--engine", engines, "name=builtin or name=cmd:<command> (repeatable)")
      ->required();
  comparecmd->add_option("--engine-timeout", engine_timeout, "seconds per engine request")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // validate
  DataFlags val_data;
  RunFlags val_run;
  double tolerance = 0.03;
  auto* validate = app.add_subcommand("validate", "compare nex-cv (K=0, P=0) with 5-fold CV");
  add_data_flags(validate, val_data);
  add_run_flags(validate, val_run, false);
  validate->add_option("--tolerance", tolerance, "allowed accuracy difference")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  // synth
  std::string large = "5x100";
  std::string small = "20x5..10";
  SyntheticSpec synth_spec;
  std::string synth_out;
  std::string synth_format;
  std::string synth_name;
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--large", large, "large classes as COUNTxSIZE")->capture_default_str();
  synth->add_option("--small", small, "small classes as COUNTxMIN..MAX")->capture_default_str();
  synth->add_option("--vocab", synth_spec.vocab_per_class, "tokens per class vocabulary")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--overlap", synth_spec.overlap_fraction,
                    "fraction of vocabulary shared by adjacent classes")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  synth->add_option("--min-tokens", synth_spec.min_tokens)->capture_default_str();
  synth->add_option("--max-tokens", synth_spec.max_tokens)->capture_default_str();
  synth->add_option("--seed", synth_spec.seed)->capture_default_str();
  synth->add_option("--out", synth_out, "output dataset path")->required();
  synth->add_option("--format", synth_format)->check(CLI::IsMember({"csv", "jsonl"}));
  synth->add_option("--name", synth_name, "dataset name (unused in CSV output)");

  // stats
  DataFlags stats_data;
  auto* stats = app.add_subcommand("stats", "per-class counts and data-quality issues");
  add_data_flags(stats, stats_data);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (evaluate->parsed()) {
      SelectionMode mode;
      if (eval_mode == "cutoff") {
        if (eval_p) throw UsageError("--p cannot be used with --mode cutoff");
        mode = CutoffMode{eval_k.value_or(0)};
      } else if (eval_mode == "proportional") {
        if (eval_k) throw UsageError("--k cannot be used with --mode proportional");
        mode = ProportionalMode{eval_p.value_or(0.0)};
      } else {
        if (eval_k && eval_p) throw UsageError("--k and --p are mutually exclusive");
        mode = eval_p ? SelectionMode(ProportionalMode{*eval_p}) : SelectionMode(CutoffMode{eval_k.value_or(0)});
      }
      if (const auto* p = std::get_if<ProportionalMode>(&mode); p && p->p >= 1.0) {
        throw UsageError("--p must be below 1");
      }
      const auto d = load(eval_data);
      check_for_evaluation(d, err);
      const auto report =
          run_nexcv(d, make_config(eval_run, mode), baseline_factory(), {eval_run.jobs});
      write_outputs(report, eval_run, "nexcv-report.json", eval_top);
      print_headline(report, out);
      fmt::print(out, "top confused pairs:\n");
      print_pairs(report, eval_top, false, out);
      return kExitOk;
    }

    if (pairs->parsed()) {
      const auto d = load(pairs_data);
      check_for_evaluation(d, err);
      const auto report = run_nexcv(d, make_config(pairs_run, triage_setting().mode),
                                    baseline_factory(), {pairs_run.jobs});
      if (!pairs_run.out.empty() || !pairs_run.markdown.empty() || !pairs_run.csv_dir.empty()) {
        write_outputs(report, pairs_run, pairs_run.out.empty() ? "nexcv-pairs.json" : pairs_run.out,
                      pairs_top);
      }
      print_pairs(report, pairs_top, true, out);
      return kExitOk;
    }

    if (comparecmd->parsed()) {
      std::vector<NamedFactory> factories;
      const std::chrono::milliseconds timeout(static_cast<long long>(engine_timeout * 1000.0));
      for (const auto& spec : engines) factories.push_back(parse_engine(spec, timeout));
      const auto d = load(cmp_data);
      check_for_evaluation(d, err);
      const auto report =
          compare(d, make_config(cmp_run, CutoffMode{0}), factories, {cmp_run.jobs});
      write_file(cmp_run.out.empty() ? "nexcv-compare.json" : cmp_run.out, render_json(report));
      const auto md = render_markdown(report);
      if (!cmp_run.markdown.empty()) write_file(cmp_run.markdown, md);
      fmt::print(out, "{}", md);
      bool any_ok = false;
      for (const auto& e : report.engines) {
        any_ok = any_ok || e.ok;
        if (!e.ok) fmt::print(err, "engine '{}' failed: {}\n", e.name, e.error);
      }
      return any_ok ? kExitOk : kExitUsage;
    }

    if (validate->parsed()) {
      const auto d = load(val_data);
      check_for_evaluation(d, err);
      const auto v = validate_metric(d, baseline_factory(), tolerance, val_run.seed,
                                     val_run.threshold, {val_run.jobs});
      fmt::print(out, "nex-cv (K=0, P=0) accuracy  {:.6f}\n", v.nexcv_accuracy);
      fmt::print(out, "5-fold CV accuracy         {:.6f}\n", v.kfold_accuracy);
      fmt::print(out, "difference                 {:.6f} (tolerance {:.6f})\n", v.difference,
                 v.tolerance);
      fmt::print(out, "{}\n", v.passed ? "PASS" : "FAIL");
      return v.passed ? kExitOk : kExitCheckFailed;
    }

    if (synth->parsed()) {
      const auto l = parse_shape(large, false);
      const auto s = parse_shape(small, true);
      synth_spec.n_large = l.count;
      synth_spec.large_size = l.min;
      synth_spec.n_small = s.count;
      synth_spec.small_min = s.min;
      synth_spec.small_max = s.max;
      auto d = generate_synthetic(synth_spec);
      if (!synth_name.empty()) d.name = synth_name;
      const auto format = synth_format.empty()
                              ? format_from_path(synth_out)
                              : (synth_format == "csv" ? DatasetFormat::Csv : DatasetFormat::Jsonl);
      save_dataset(d, synth_out, format);
      fmt::print(out, "wrote {} examples over {} labels to {}\n", d.size(),
                 class_stats(d).counts.size(), synth_out);
      return kExitOk;
    }

    if (stats->parsed()) {
      const auto d = load(stats_data);
      const auto st = class_stats(d);
      fmt::print(out, "{:<32} {:>8}\n", "label", "count");
      for (auto it = st.sorted.rbegin(); it != st.sorted.rend(); ++it) {
        fmt::print(out, "{:<32} {:>8}\n", *it, st.counts.at(*it));
      }
      fmt::print(out, "total {} examples, {} labels\n", st.total, st.counts.size());
      if (!st.sorted.empty()) {
        fmt::print(out, "smallest {} ({}), largest {} ({})\n", st.sorted.front(),
                   st.counts.at(st.sorted.front()), st.sorted.back(),
                   st.counts.at(st.sorted.back()));
      }
      for (const auto& issue : validate_dataset(d)) fmt::print(out, "issue: {}\n", issue.message);
      return kExitOk;
    }
  } catch (const UsageError& e) {
    fmt::print(err, "usage error: {}\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace nexcv
