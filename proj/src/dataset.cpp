#include "nexcv/dataset.hpp"

#include <fmt/format.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nexcv/csv.hpp"
#include "nexcv/error.hpp"
#include "nexcv/rng.hpp"

namespace nexcv {
namespace {

bool is_valid_utf8(std::string_view s) {
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(s.data());
  const auto length = static_cast<std::int32_t>(s.size());
  std::int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) return false;
  }
  return true;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

void check_example(const LabeledExample& ex, std::size_t line) {
  if (is_blank(ex.text)) throw DatasetError("text is empty", line);
  if (ex.label.empty()) throw DatasetError("label is empty", line);
  if (ex.label.find_first_of("\r\n") != std::string::npos) {
    throw DatasetError("label contains a line break", line);
  }
  if (ex.label == kOutOfScope) {
    throw DatasetError(fmt::format("label '{}' is reserved", kOutOfScope), line);
  }
  if (!is_valid_utf8(ex.text) || !is_valid_utf8(ex.label)) {
    throw DatasetError("invalid UTF-8", line);
  }
}

std::vector<LabeledExample> parse_csv(std::string_view content) {
  std::istringstream in{std::string(content)};
  const auto records = csv::read(in);
  if (records.empty()) throw DatasetError("empty file");

  const auto& header = records.front();
  if (header.fields.size() != 2 || header.fields[0] != "text" || header.fields[1] != "label") {
    throw DatasetError("header must be 'text,label'", header.line);
  }

  std::vector<LabeledExample> out;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;  // blank line
    if (rec.fields.size() != 2) {
      throw DatasetError(fmt::format("expected 2 fields, found {}", rec.fields.size()), rec.line);
    }
    LabeledExample ex{rec.fields[0], rec.fields[1]};
    check_example(ex, rec.line);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<LabeledExample> parse_jsonl(std::string_view content) {
  std::vector<LabeledExample> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (is_blank(line)) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DatasetError(fmt::format("invalid JSON ({})", e.what()), line_no);
    }
    if (!obj.is_object()) throw DatasetError("record is not a JSON object", line_no);
    for (const char* key : {"text", "label"}) {
      const auto it = obj.find(key);
      if (it == obj.end()) throw DatasetError(fmt::format("missing key \"{}\"", key), line_no);
      if (!it->is_string()) throw DatasetError(fmt::format("\"{}\" is not a string", key), line_no);
    }
    LabeledExample ex{obj["text"].get<std::string>(), obj["label"].get<std::string>()};
    check_example(ex, line_no);
    out.push_back(std::move(ex));
  }
  return out;
}

std::string pseudo_word(std::size_t id) {
  static constexpr std::string_view consonants = "bdfgklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  constexpr std::size_t base = consonants.size() * vowels.size();
  constexpr std::size_t three_syllables = base * base * base;
  // Bijective scramble of the three-syllable range so neighbouring ids do
  // not share long prefixes. Larger ids get four or more syllables.
  if (id < three_syllables) {
    id = static_cast<std::size_t>(std::uint64_t(id) * 2654435761ULL % three_syllables);
  }
  std::string word;
  for (int digits = 0; digits < 3 || id > 0; ++digits) {
    const std::size_t syllable = id % base;
    id /= base;
    word.push_back(consonants[syllable / vowels.size()]);
    word.push_back(vowels[syllable % vowels.size()]);
  }
  return word;
}

std::string class_label(const SyntheticSpec& spec, std::size_t class_index) {
  const std::size_t width = std::max<std::size_t>(
      2, std::to_string(std::max(spec.n_large, spec.n_small)).size());
  if (class_index < spec.n_large) return fmt::format("large_{:0{}}", class_index, width);
  return fmt::format("small_{:0{}}", class_index - spec.n_large, width);
}

}  // namespace

DatasetFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return DatasetFormat::Csv;
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return DatasetFormat::Jsonl;
  throw DatasetError(fmt::format("cannot infer dataset format from '{}'", path.string()));
}

Dataset parse_dataset(std::string_view content, DatasetFormat format, std::string name) {
  if (is_blank(content)) throw DatasetError("empty file");
  Dataset d;
  d.name = std::move(name);
  d.examples = format == DatasetFormat::Csv ? parse_csv(content) : parse_jsonl(content);
  if (d.examples.empty()) throw DatasetError("file contains no records");
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), format, path.stem().string());
}

std::string serialize_dataset(const Dataset& d, DatasetFormat format) {
  std::string out;
  if (format == DatasetFormat::Csv) {
    out = "text,label\n";
    for (const auto& ex : d.examples) {
      out += csv::join({ex.text, ex.label});
      out.push_back('\n');
    }
  } else {
    for (const auto& ex : d.examples) {
      nlohmann::ordered_json obj;
      obj["text"] = ex.text;
      obj["label"] = ex.label;
      out += obj.dump();
      out.push_back('\n');
    }
  }
  return out;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path, DatasetFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError(fmt::format("cannot write '{}'", path.string()));
  out << serialize_dataset(d, format);
}

std::vector<DatasetIssue> validate_dataset(const Dataset& d) {
  std::vector<DatasetIssue> issues;
  const auto stats = class_stats(d);

  if (stats.counts.size() < 2) {
    issues.push_back({DatasetIssue::Kind::TooFewLabels,
                      fmt::format("fewer than 2 labels ({} found)", stats.counts.size()),
                      {},
                      {}});
  }
  for (const auto& [label, count] : stats.counts) {
    if (count == 1) {
      issues.push_back({DatasetIssue::Kind::SingletonClass,
                        fmt::format("label '{}' has exactly 1 example", label),
                        {label},
                        {}});
    }
  }

  std::map<std::string, std::set<std::string>> labels_by_text;
  for (const auto& ex : d.examples) labels_by_text[ex.text].insert(ex.label);
  for (const auto& [text, labels] : labels_by_text) {
    if (labels.size() < 2) continue;
    std::vector<std::string> list(labels.begin(), labels.end());
    issues.push_back({DatasetIssue::Kind::CrossLabelDuplicate,
                      fmt::format("text \"{}\" appears under labels {}", text,
                                  fmt::join(list, ", ")),
                      list,
                      text});
  }
  return issues;
}

std::size_t ClassStats::count(const std::string& label) const {
  const auto it = counts.find(label);
  return it == counts.end() ? 0 : it->second;
}

ClassStats class_stats(const Dataset& d) {
  ClassStats stats;
  for (const auto& ex : d.examples) ++stats.counts[ex.label];
  stats.total = d.examples.size();
  stats.sorted.reserve(stats.counts.size());
  for (const auto& entry : stats.counts) stats.sorted.push_back(entry.first);
  // counts is keyed by label, so a stable sort on count keeps label order for ties.
  std::stable_sort(stats.sorted.begin(), stats.sorted.end(),
                   [&](const std::string& a, const std::string& b) {
                     return stats.counts.at(a) < stats.counts.at(b);
                   });
  return stats;
}

std::vector<std::string> synthetic_vocabulary(const SyntheticSpec& spec, std::size_t class_index) {
  const std::size_t v = spec.vocab_per_class;
  const std::size_t n_classes = spec.n_large + spec.n_small;
  const auto shared = static_cast<std::size_t>(
      std::lround(std::clamp(spec.overlap_fraction, 0.0, 1.0) * static_cast<double>(v)));

  std::vector<std::string> vocab;
  vocab.reserve(v);
  for (std::size_t j = 0; j < v; ++j) vocab.push_back(pseudo_word(class_index * v + j));
  // The tail of this class's vocabulary is replaced by the head of the next one.
  if (class_index + 1 < n_classes) {
    for (std::size_t j = 0; j < shared; ++j) {
      vocab[v - shared + j] = pseudo_word((class_index + 1) * v + j);
    }
  }
  return vocab;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_large < 1) throw Error("synthetic dataset needs at least one large class");
  if (spec.large_size < 1) throw Error("large class size must be >= 1");
  if (spec.vocab_per_class < 1) throw Error("vocabulary per class must be >= 1");
  if (spec.n_small > 0 && (spec.small_min < 1 || spec.small_min > spec.small_max)) {
    throw Error("small class size range must satisfy 1 <= min <= max");
  }
  if (spec.min_tokens < 1 || spec.min_tokens > spec.max_tokens) {
    throw Error("token count range must satisfy 1 <= min <= max");
  }
  if (spec.overlap_fraction < 0.0 || spec.overlap_fraction > 1.0) {
    throw Error("overlap fraction must lie in [0, 1]");
  }

  Rng rng(spec.seed);
  Dataset d;
  d.name = fmt::format("synthetic-{}", spec.seed);
  const std::size_t n_classes = spec.n_large + spec.n_small;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto vocab = synthetic_vocabulary(spec, c);
    const std::size_t size =
        c < spec.n_large ? spec.large_size
                         : static_cast<std::size_t>(rng.between(
                               static_cast<std::int64_t>(spec.small_min),
                               static_cast<std::int64_t>(spec.small_max)));
    const auto label = class_label(spec, c);
    for (std::size_t e = 0; e < size; ++e) {
      const auto length = static_cast<std::size_t>(rng.between(
          static_cast<std::int64_t>(spec.min_tokens), static_cast<std::int64_t>(spec.max_tokens)));
      std::string text;
      for (std::size_t t = 0; t < length; ++t) {
        if (t > 0) text.push_back(' ');
        text += vocab[rng.below(vocab.size())];
      }
      d.examples.push_back({std::move(text), label});
    }
  }
  return d;
}

}  // namespace nexcv
