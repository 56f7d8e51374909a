#include "domescan/annotation.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "domescan/error.hpp"

namespace domescan {

RleMask rle_encode(const Grid<std::uint8_t>& mask) {
  RleMask rle{mask.rows(), mask.cols(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (auto v : mask.data()) {
    const std::uint8_t bit = v ? 1 : 0;
    if (bit != current) {
      rle.counts.push_back(run);
      run = 0;
      current = bit;
    }
    ++run;
  }
  rle.counts.push_back(run);
  return rle;
}

Grid<std::uint8_t> rle_decode(const RleMask& rle) {
  if (rle.rows < 0 || rle.cols < 0) throw Error(ErrorCode::InvariantViolation, "rle", "negative dimensions");
  const std::uint64_t total = static_cast<std::uint64_t>(rle.rows) * static_cast<std::uint64_t>(rle.cols);
  const std::uint64_t sum = std::accumulate(rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
  if (sum != total) {
    throw Error(ErrorCode::InvariantViolation, "rle",
                "runs sum to " + std::to_string(sum) + ", mask has " + std::to_string(total) + " pixels");
  }
  Grid<std::uint8_t> mask(rle.rows, rle.cols);
  std::size_t pos = 0;
  std::uint8_t bit = 0;
  for (auto run : rle.counts) {
    if (bit) std::fill_n(mask.data().begin() + static_cast<std::ptrdiff_t>(pos), run, std::uint8_t{1});
    pos += run;
    bit ^= 1;
  }
  return mask;
}

std::uint64_t rle_area(const RleMask& rle) {
  std::uint64_t area = 0;
  for (std::size_t i = 1; i < rle.counts.size(); i += 2) area += rle.counts[i];
  return area;
}

std::string_view to_string(Task task) { return task == Task::kPerson ? "person" : "action"; }

Task parse_task(std::string_view text) {
  if (text == "person") return Task::kPerson;
  if (text == "action") return Task::kAction;
  throw Error(ErrorCode::SchemaViolation, "task", "expected person or action, got '" + std::string(text) + "'");
}

const std::vector<std::string>& task_vocabulary(Task task) {
  static const std::vector<std::string> person{"person"};
  static const std::vector<std::string> action{"sitting", "walking", "waving"};
  return task == Task::kPerson ? person : action;
}

bool in_vocabulary(Task task, std::string_view label) {
  const auto& vocab = task_vocabulary(task);
  return std::find(vocab.begin(), vocab.end(), label) != vocab.end();
}

void validate(const AnnotationSet& set, Task task) {
  for (const auto& inst : set.instances) {
    if (inst.mask.rows != set.rows || inst.mask.cols != set.cols) {
      throw Error(ErrorCode::DimensionMismatch, "mask", "instance mask does not match the frame");
    }
    rle_decode(inst.mask);
    if (!in_vocabulary(task, inst.label)) {
      throw Error(ErrorCode::InvariantViolation, "class",
                  "'" + inst.label + "' is not in the " + std::string(to_string(task)) + " vocabulary");
    }
  }
}

std::string annotations_to_json(const AnnotationSet& set, Task task) {
  nlohmann::ordered_json doc;
  doc["frame_id"] = set.frame_id;
  doc["height"] = set.rows;
  doc["width"] = set.cols;
  doc["task"] = std::string(to_string(task));
  doc["instances"] = nlohmann::ordered_json::array();
  for (const auto& inst : set.instances) {
    doc["instances"].push_back({{"class", inst.label}, {"rle", inst.mask.counts}});
  }
  return doc.dump();
}

AnnotationSet annotations_from_json(std::string_view text) {
  auto doc = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::MalformedDocument, "annotations");
  AnnotationSet set;
  try {
    set.frame_id = doc.at("frame_id").get<std::uint32_t>();
    set.rows = doc.at("height").get<int>();
    set.cols = doc.at("width").get<int>();
    for (const auto& inst : doc.at("instances")) {
      set.instances.push_back({RleMask{set.rows, set.cols, inst.at("rle").get<std::vector<std::uint32_t>>()},
                               inst.at("class").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, "annotations", e.what());
  }
  if (doc.contains("task")) validate(set, parse_task(doc["task"].get<std::string>()));
  return set;
}

void write_annotations(const std::string& path, const AnnotationSet& set, Task task) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, path, "cannot open for writing");
  out << annotations_to_json(set, task) << '\n';
}

AnnotationSet read_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return annotations_from_json(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path, e.what());
  }
}

}  // namespace domescan
