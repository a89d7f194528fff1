#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "nexcv/evaluation.hpp"

namespace nexcv {

inline constexpr std::string_view kSchemaVersion = "1.0";

// Current UTC time as ISO-8601, e.g. 2026-01-31T12:00:00Z.
std::string utc_timestamp();

// Deterministic key order; reals rounded to 6 decimal places; undefined
// carefulness is null. produced_at defaults to the current time.
std::string render_json(const EvaluationReport& r,
                        std::optional<std::string> produced_at = std::nullopt);
std::string render_json(const ComparisonReport& r,
                        std::optional<std::string> produced_at = std::nullopt);

// Inverse of render_json for evaluation reports; the returned timestamp is
// the document's produced_at. Throws Error on documents that do not match
// the schema shape.
struct ParsedEvaluationReport {
  EvaluationReport report;
  std::string produced_at;
};
ParsedEvaluationReport parse_evaluation_json(std::string_view json_text);

struct ParsedComparisonReport {
  ComparisonReport report;
  std::string produced_at;
};
ParsedComparisonReport parse_comparison_json(std::string_view json_text);

// Headline metrics, then the top `top_pairs` confused pairs with their
// representative examples.
std::string render_markdown(const EvaluationReport& r, std::size_t top_pairs = 3);
std::string render_markdown(const ComparisonReport& r);

enum class CsvKind { Retries, Confusion, Pairs };

// "retries", "confusion" or "pairs"; throws std::invalid_argument otherwise.
CsvKind parse_csv_kind(std::string_view which);
std::string emit_csv(const EvaluationReport& r, CsvKind which);
std::string emit_csv(const EvaluationReport& r, std::string_view which);

}  // namespace nexcv
