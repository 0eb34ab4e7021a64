#pragma once

#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace discourse::eval {

enum class Task { sentiment, hate };

std::string to_string(Task t);
Task task_from_string(std::string_view s);
/// sentiment: {negative, neutral, positive}; hate: {hate, normal}
const std::vector<std::string>& label_set(Task t);

inline constexpr std::size_t kPrimaryRaters = 4;

struct AnnotationSet {
  std::string post_id;
  Task task = Task::hate;
  std::vector<std::string> votes;           ///< the four primary raters
  std::optional<std::string> tie_breaker;   ///< the fifth rater, consulted on ties
};

struct GoldLabel {
  std::string post_id;
  Task task = Task::hate;
  std::string label;
};

/// The label with the most votes; when several labels share the top count the
/// tie-breaker must name one of them. Throws ContractViolation on a vote count
/// other than four or an unresolvable tie.
std::string majority_vote(std::span<const std::string> votes, const std::optional<std::string>& tie_breaker);

GoldLabel gold_label(const AnnotationSet& a);

struct KappaResult {
  double kappa = 0.0;
  bool degenerate = false;  ///< expected agreement was 1
};

/// Fleiss' kappa over an items x categories count matrix whose rows all sum
/// to the same rater count n >= 2.
KappaResult fleiss_kappa(const std::vector<std::vector<std::uint64_t>>& counts);

/// Count matrix from the primary votes of annotation sets of one task.
std::vector<std::vector<std::uint64_t>> vote_counts(std::span<const AnnotationSet> sets, Task task);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;  ///< gold items of this class
};

enum class Averaging { binary, macro };

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::map<std::string, ClassMetrics> per_class;
  Averaging averaging = Averaging::macro;
  std::string positive_label;  ///< binary mode only
  std::size_t n = 0;           ///< aligned items
  std::vector<std::string> warnings;
};

struct MetricsMode {
  Averaging averaging = Averaging::macro;
  std::string positive_label;  ///< required for binary

  static MetricsMode binary(std::string positive) { return {Averaging::binary, std::move(positive)}; }
  static MetricsMode macro() { return {Averaging::macro, {}}; }
};

/// Precision/recall/F1 over post ids present in both maps (post id -> label).
/// Empty denominators count as 0 and add a warning. Macro averaging is over
/// `labels` (or the union of observed labels when empty). Throws
/// ContractViolation when the id sets do not intersect.
MetricsReport precision_recall_f1(const std::map<std::string, std::string>& preds,
                                  const std::map<std::string, std::string>& gold, const MetricsMode& mode,
                                  const std::vector<std::string>& labels = {});

nlohmann::json to_json(const MetricsReport& r);

struct TableRow {
  std::string task;
  std::string model;
  MetricsReport report;
};

/// Aligned text table: Task | Model | Precision | Recall | F1.
std::string render_table(std::span<const TableRow> rows);

/// JSONL {post_id, task, votes:[...], tie_breaker}.
std::vector<AnnotationSet> load_annotations(const std::filesystem::path& path);
/// JSONL {post_id, task, label}; returns task -> (post id -> label).
std::map<Task, std::map<std::string, std::string>> load_predictions(const std::filesystem::path& path);

}  // namespace discourse::eval
