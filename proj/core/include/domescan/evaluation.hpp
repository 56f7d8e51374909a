#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "domescan/annotation.hpp"

namespace domescan {

struct PredictedInstance {
  RleMask mask;
  std::string label;
  double score = 0.0;

  friend bool operator==(const PredictedInstance&, const PredictedInstance&) = default;
};

struct PredictionSet {
  std::uint32_t frame_id = 0;
  std::vector<PredictedInstance> instances;

  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

/// One line per instance: {"frame_id", "class", "score", "rle"} with optional
/// "height" / "width". Masks take the dimensions of the matching ground
/// truth when the line carries none. Returns sets keyed by frame id.
std::map<std::uint32_t, PredictionSet> parse_predictions_jsonl(std::string_view text);
std::map<std::uint32_t, PredictionSet> load_predictions(const std::string& path);
std::string predictions_to_jsonl(std::span<const PredictionSet> sets);

struct MatchCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

using ClassCounts = std::map<std::string, MatchCounts>;

inline constexpr double kDefaultIouThreshold = 0.5;
inline constexpr double kDefaultScoreThreshold = 0.5;

double mask_iou(const Grid<std::uint8_t>& a, const Grid<std::uint8_t>& b);

/// Drops predictions scoring below `score_threshold`, then visits the rest in
/// descending score (ties by instance index). Each takes the unmatched
/// same-class ground truth of highest IoU (ties by index) when that IoU is
/// at least `iou_threshold`. Throws DimensionMismatch when a mask does not
/// match the frame.
ClassCounts match_instances(const AnnotationSet& gt, const PredictionSet& pred,
                            double iou_threshold = kDefaultIouThreshold,
                            double score_threshold = kDefaultScoreThreshold);

struct ClassMetrics {
  MatchCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;  // ground-truth instances, tp + fn

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

/// P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R); each 0 on a zero denominator.
ClassMetrics metrics_from_counts(const MatchCounts& counts);

/// sum(w_i v_i) / sum(w_i), 0 when the weights sum to 0.
double weighted_average(std::span<const double> values, std::span<const double> weights);

struct EvalReport {
  std::vector<std::string> classes;  // row order
  std::map<std::string, ClassMetrics> per_class;
  ClassMetrics weighted;  // counts summed; P/R/F1 weighted by support
  double iou_threshold = kDefaultIouThreshold;
  double score_threshold = kDefaultScoreThreshold;
  std::size_t frames = 0;
};

/// Per-class metrics from counts aggregated over a split. The weighted row
/// uses `class_weights` when given, otherwise each class's GT count.
EvalReport report(const ClassCounts& aggregate, std::span<const std::string> classes,
                  double iou_threshold = kDefaultIouThreshold, double score_threshold = kDefaultScoreThreshold,
                  const std::map<std::string, double>* class_weights = nullptr);

/// Matches every ground-truth frame against its predictions (frames missing
/// from `predictions` count as empty) and reports over `task`'s classes.
EvalReport evaluate(std::span<const AnnotationSet> ground_truth,
                    const std::map<std::uint32_t, PredictionSet>& predictions, std::span<const std::string> classes,
                    double iou_threshold = kDefaultIouThreshold, double score_threshold = kDefaultScoreThreshold,
                    unsigned jobs = 1);

std::string format_report(const EvalReport& report);
std::string report_to_json(const EvalReport& report);

struct AblationRow {
  std::string excluded;  // "" for no exclusion, otherwise a channel name or alias
  bool positional = false;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

AblationRow ablation_row(std::string excluded, bool positional, const EvalReport& report);

/// Markdown table ordered like the channel-ablation experiment: rows without
/// positional channels first, each block ordered none, NIR, reflectivity,
/// signal, range. Values are printed with two decimals.
std::string ablation_table(std::span<const AblationRow> rows);

}  // namespace domescan
