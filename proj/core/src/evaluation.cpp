#include "domescan/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "domescan/error.hpp"
#include "domescan/pipeline.hpp"
#include "domescan/representation.hpp"

namespace domescan {

namespace {

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

nlohmann::ordered_json metrics_json(const ClassMetrics& m) {
  return {{"tp", m.counts.tp},       {"fp", m.counts.fp}, {"fn", m.counts.fn}, {"precision", m.precision},
          {"recall", m.recall},      {"f1", m.f1},        {"support", m.support}};
}

// Position of a channel in the ablation table; unknown names sort last.
int ablation_order(const std::string& excluded) {
  if (excluded.empty() || excluded == "-" || excluded == "none") return 0;
  std::string canonical;
  try {
    const auto names = resolve_channels(excluded);
    canonical = names.size() == 1 ? names.front() : "pos";
  } catch (const Error&) {
    return 100;
  }
  if (canonical == kChannelNir) return 1;
  if (canonical == kChannelReflectivity) return 2;
  if (canonical == kChannelSignal) return 3;
  if (canonical == kChannelRevRange) return 4;
  return 50;
}

std::string ablation_label(const std::string& excluded) {
  switch (ablation_order(excluded)) {
    case 0: return "-";
    case 1: return "NIR";
    case 2: return "Reflectivity";
    case 3: return "Signal";
    case 4: return "Range";
    default: return excluded;
  }
}

}  // namespace

std::map<std::uint32_t, PredictionSet> parse_predictions_jsonl(std::string_view text) {
  std::map<std::uint32_t, PredictionSet> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    auto doc = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
    const std::string where = "predictions line " + std::to_string(line_no);
    if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::MalformedDocument, where);
    try {
      PredictedInstance inst;
      const auto frame_id = doc.at("frame_id").get<std::uint32_t>();
      inst.label = doc.at("class").get<std::string>();
      inst.score = doc.at("score").get<double>();
      inst.mask.counts = doc.at("rle").get<std::vector<std::uint32_t>>();
      inst.mask.rows = doc.value("height", -1);
      inst.mask.cols = doc.value("width", -1);
      if (!(inst.score >= 0.0 && inst.score <= 1.0)) {
        throw Error(ErrorCode::InvariantViolation, where, "score must lie in [0, 1]");
      }
      auto& set = out[frame_id];
      set.frame_id = frame_id;
      set.instances.push_back(std::move(inst));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaViolation, where, e.what());
    }
    if (end == text.size()) break;
  }
  return out;
}

std::map<std::uint32_t, PredictionSet> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, path, "cannot open predictions");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_predictions_jsonl(ss.str());
}

std::string predictions_to_jsonl(std::span<const PredictionSet> sets) {
  std::string out;
  for (const auto& set : sets) {
    for (const auto& inst : set.instances) {
      nlohmann::ordered_json j;
      j["frame_id"] = set.frame_id;
      j["class"] = inst.label;
      j["score"] = inst.score;
      j["rle"] = inst.mask.counts;
      if (inst.mask.rows >= 0) {
        j["height"] = inst.mask.rows;
        j["width"] = inst.mask.cols;
      }
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

double mask_iou(const Grid<std::uint8_t>& a, const Grid<std::uint8_t>& b) {
  std::uint64_t inter = 0;
  std::uint64_t uni = 0;
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t k = 0; k < da.size(); ++k) {
    const bool x = da[k] != 0;
    const bool y = db[k] != 0;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

ClassCounts match_instances(const AnnotationSet& gt, const PredictionSet& pred, double iou_threshold,
                            double score_threshold) {
  auto decode = [&](RleMask mask, const char* what) {
    if (mask.rows < 0) {
      mask.rows = gt.rows;
      mask.cols = gt.cols;
    }
    if (mask.rows != gt.rows || mask.cols != gt.cols) {
      throw Error(ErrorCode::DimensionMismatch, what, "mask size differs from the frame");
    }
    try {
      return rle_decode(mask);
    } catch (const Error&) {
      throw Error(ErrorCode::DimensionMismatch, what,
                  "runs do not cover the " + std::to_string(gt.rows) + "x" + std::to_string(gt.cols) + " frame");
    }
  };

  std::vector<Grid<std::uint8_t>> gt_masks;
  gt_masks.reserve(gt.instances.size());
  for (const auto& inst : gt.instances) gt_masks.push_back(decode(inst.mask, "ground truth"));

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < pred.instances.size(); ++i) {
    if (pred.instances[i].score >= score_threshold) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pred.instances[a].score > pred.instances[b].score;
  });

  ClassCounts counts;
  std::vector<bool> matched(gt.instances.size(), false);
  for (std::size_t idx : order) {
    const auto& p = pred.instances[idx];
    const auto mask = decode(p.mask, "prediction");
    double best_iou = -1.0;
    std::size_t best = gt.instances.size();
    for (std::size_t g = 0; g < gt.instances.size(); ++g) {
      if (matched[g] || gt.instances[g].label != p.label) continue;
      const double iou = mask_iou(mask, gt_masks[g]);
      if (iou > best_iou) {
        best_iou = iou;
        best = g;
      }
    }
    if (best < gt.instances.size() && best_iou >= iou_threshold) {
      matched[best] = true;
      ++counts[p.label].tp;
    } else {
      ++counts[p.label].fp;
    }
  }
  for (std::size_t g = 0; g < gt.instances.size(); ++g) {
    if (!matched[g]) ++counts[gt.instances[g].label].fn;
  }
  return counts;
}

ClassMetrics metrics_from_counts(const MatchCounts& c) {
  ClassMetrics m;
  m.counts = c;
  m.support = c.tp + c.fn;
  m.precision = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  m.recall = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

double weighted_average(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) throw Error(ErrorCode::DimensionMismatch, "weights");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += weights[i] * values[i];
    den += weights[i];
  }
  return den == 0.0 ? 0.0 : num / den;
}

EvalReport report(const ClassCounts& aggregate, std::span<const std::string> classes, double iou_threshold,
                  double score_threshold, const std::map<std::string, double>* class_weights) {
  EvalReport r;
  r.iou_threshold = iou_threshold;
  r.score_threshold = score_threshold;
  r.classes.assign(classes.begin(), classes.end());
  // Classes seen in the counts but absent from the vocabulary still get a row.
  for (const auto& [label, _] : aggregate) {
    if (std::find(r.classes.begin(), r.classes.end(), label) == r.classes.end()) r.classes.push_back(label);
  }

  std::vector<double> p, rc, f, w;
  MatchCounts total;
  for (const auto& label : r.classes) {
    auto it = aggregate.find(label);
    const MatchCounts counts = it == aggregate.end() ? MatchCounts{} : it->second;
    const ClassMetrics m = metrics_from_counts(counts);
    r.per_class[label] = m;
    total += counts;
    p.push_back(m.precision);
    rc.push_back(m.recall);
    f.push_back(m.f1);
    double weight = static_cast<double>(m.support);
    if (class_weights != nullptr) {
      auto wit = class_weights->find(label);
      weight = wit == class_weights->end() ? 0.0 : wit->second;
    }
    w.push_back(weight);
  }
  r.weighted.counts = total;
  r.weighted.support = total.tp + total.fn;
  r.weighted.precision = weighted_average(p, w);
  r.weighted.recall = weighted_average(rc, w);
  r.weighted.f1 = weighted_average(f, w);
  return r;
}

EvalReport evaluate(std::span<const AnnotationSet> ground_truth,
                    const std::map<std::uint32_t, PredictionSet>& predictions, std::span<const std::string> classes,
                    double iou_threshold, double score_threshold, unsigned jobs) {
  std::vector<ClassCounts> per_frame(ground_truth.size());
  parallel_for(ground_truth.size(), jobs, [&](std::size_t i) {
    const AnnotationSet& gt = ground_truth[i];
    auto it = predictions.find(gt.frame_id);
    const PredictionSet empty{gt.frame_id, {}};
    per_frame[i] = match_instances(gt, it == predictions.end() ? empty : it->second, iou_threshold, score_threshold);
  });
  ClassCounts aggregate;
  for (const auto& frame : per_frame) {
    for (const auto& [label, c] : frame) aggregate[label] += c;
  }
  EvalReport r = report(aggregate, classes, iou_threshold, score_threshold);
  r.frames = ground_truth.size();
  return r;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %6s %6s %6s %9s %9s %9s %8s\n", "class", "TP", "FP", "FN", "precision",
                "recall", "F1", "support");
  out << line;
  auto row = [&](const std::string& name, const ClassMetrics& m) {
    std::snprintf(line, sizeof line, "%-10s %6llu %6llu %6llu %9s %9s %9s %8llu\n", name.c_str(),
                  static_cast<unsigned long long>(m.counts.tp), static_cast<unsigned long long>(m.counts.fp),
                  static_cast<unsigned long long>(m.counts.fn), fixed4(m.precision).c_str(),
                  fixed4(m.recall).c_str(), fixed4(m.f1).c_str(), static_cast<unsigned long long>(m.support));
    out << line;
  };
  for (const auto& label : r.classes) row(label, r.per_class.at(label));
  row("w. avg", r.weighted);
  std::snprintf(line, sizeof line, "frames: %zu  iou >= %.2f  score >= %.2f\n", r.frames, r.iou_threshold,
                r.score_threshold);
  out << line;
  return out.str();
}

std::string report_to_json(const EvalReport& r) {
  nlohmann::ordered_json doc;
  doc["iou_threshold"] = r.iou_threshold;
  doc["score_threshold"] = r.score_threshold;
  doc["frames"] = r.frames;
  doc["classes"] = nlohmann::ordered_json::object();
  for (const auto& label : r.classes) doc["classes"][label] = metrics_json(r.per_class.at(label));
  doc["weighted_average"] = metrics_json(r.weighted);
  return doc.dump(2);
}

AblationRow ablation_row(std::string excluded, bool positional, const EvalReport& report) {
  return {std::move(excluded), positional, report.weighted.precision, report.weighted.recall, report.weighted.f1};
}

std::string ablation_table(std::span<const AblationRow> rows) {
  std::vector<const AblationRow*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const AblationRow* a, const AblationRow* b) {
    if (a->positional != b->positional) return !a->positional;
    return ablation_order(a->excluded) < ablation_order(b->excluded);
  });
  std::string out = "| Excluded channel | Pos. enc. | Precision | Recall | F1-score |\n"
                    "|---|---|---|---|---|\n";
  for (const auto* r : sorted) {
    out += "| " + ablation_label(r->excluded) + " | " + (r->positional ? "✓" : "✗") + " | " +
           fixed2(r->precision) + " | " + fixed2(r->recall) + " | " + fixed2(r->f1) + " |\n";
  }
  return out;
}

}  // namespace domescan
