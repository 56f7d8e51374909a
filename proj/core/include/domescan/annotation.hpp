#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "domescan/grid.hpp"

namespace domescan {

/// Binary mask as run lengths over the row-major pixel order. Runs
/// alternate background/foreground and always start with a background run,
/// which may be empty.
struct RleMask {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint32_t> counts;

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

RleMask rle_encode(const Grid<std::uint8_t>& mask);
/// Throws InvariantViolation("rle") unless the runs sum to rows * cols.
Grid<std::uint8_t> rle_decode(const RleMask& rle);
std::uint64_t rle_area(const RleMask& rle);

enum class Task { kPerson, kAction };

std::string_view to_string(Task task);
Task parse_task(std::string_view text);
/// {"person"} or {"sitting", "walking", "waving"}.
const std::vector<std::string>& task_vocabulary(Task task);
bool in_vocabulary(Task task, std::string_view label);

struct AnnotatedInstance {
  RleMask mask;
  std::string label;

  friend bool operator==(const AnnotatedInstance&, const AnnotatedInstance&) = default;
};

struct AnnotationSet {
  std::uint32_t frame_id = 0;
  int rows = 0;
  int cols = 0;
  std::vector<AnnotatedInstance> instances;

  friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

/// Masks decode to rows x cols and every label belongs to `task`.
void validate(const AnnotationSet& set, Task task);

std::string annotations_to_json(const AnnotationSet& set, Task task);
AnnotationSet annotations_from_json(std::string_view text);
void write_annotations(const std::string& path, const AnnotationSet& set, Task task);
AnnotationSet read_annotations(const std::string& path);

}  // namespace domescan
