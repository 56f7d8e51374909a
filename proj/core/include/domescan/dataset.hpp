#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "domescan/annotation.hpp"
#include "domescan/representation.hpp"

namespace domescan {

struct SplitAssignment {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> val;
  std::vector<std::uint32_t> test;

  friend bool operator==(const SplitAssignment&, const SplitAssignment&) = default;
};

/// Seeded shuffle (mt19937_64 + Fisher-Yates, see random.hpp), then
/// train = floor(0.70 N), val = floor(0.15 N), test = the rest.
/// Throws TooFewFrames for N < 3.
SplitAssignment split(std::vector<std::uint32_t> frames, std::uint64_t seed);

/// Column reversal of every channel and mask. The posy channel is also
/// negated: flipping the scan horizontally mirrors the scene about the x-z
/// plane. Throws DimensionMismatch when the pair disagrees on size.
std::pair<FrameRepresentation, AnnotationSet> hflip(const FrameRepresentation& rep, const AnnotationSet& ann);
FrameRepresentation hflip(const FrameRepresentation& rep);
AnnotationSet hflip(const AnnotationSet& ann);

struct AugmentationPolicy {
  bool hflip = false;
  double probability = 0.5;
  std::vector<std::uint32_t> flipped;  // train frames that received a flipped copy

  friend bool operator==(const AugmentationPolicy&, const AugmentationPolicy&) = default;
};

// Dataset directory:
//   root/manifest.json            this manifest
//   root/meta.json                sensor intrinsics
//   root/frames/frame_<id>.ldt    raw scans, or representations in exported datasets
//   root/annotations/<id>.json    instances with RLE masks
//   root/splits.json              train / val / test frame ids
struct DatasetManifest {
  std::string root;
  Task task = Task::kPerson;
  std::vector<std::uint32_t> frames;
  SplitAssignment splits;
  std::uint64_t seed = 0;
  RepresentationConfig channels;
  /// True once frames/ holds representations rather than raw scans.
  bool exported = false;
  AugmentationPolicy augmentation;

  std::string meta_path() const;
  std::string frames_dir() const;
  std::string frame_path(std::uint32_t frame_id) const;
  std::string annotation_path(std::uint32_t frame_id) const;
};

/// Throws InvariantViolation unless the splits partition the frame list.
void validate(const DatasetManifest& manifest);

std::string dataset_manifest_to_json(const DatasetManifest& manifest);
DatasetManifest dataset_manifest_from_json(std::string_view text, std::string root);

/// Writes manifest.json and splits.json.
void save_dataset(const DatasetManifest& manifest);

/// Source of datasets. The native importer reads the layout above; adapters
/// for other on-disk layouts implement the same interface.
class DatasetImporter {
 public:
  virtual ~DatasetImporter() = default;
  virtual DatasetManifest import(const std::string& root) = 0;
};

/// Reads root/manifest.json when present; otherwise discovers frames under
/// root/frames and starts an unsplit manifest for `task`.
class NativeDatasetImporter : public DatasetImporter {
 public:
  explicit NativeDatasetImporter(Task task = Task::kPerson) : task_(task) {}
  DatasetManifest import(const std::string& root) override;

 private:
  Task task_;
};

DatasetManifest load_dataset(const std::string& root, Task task = Task::kPerson);

/// Assigns splits with `seed` and saves the manifest.
DatasetManifest split_dataset(DatasetManifest manifest, std::uint64_t seed);

/// One row of the channel-ablation grid: the excluded channel ("" for none)
/// and whether positional channels are present.
struct AblationConfig {
  std::string excluded;
  bool positional = false;

  friend bool operator==(const AblationConfig&, const AblationConfig&) = default;
};

/// The ten configurations: {none, nir, refl, signal, range} x {without, with}
/// positional channels, in table order.
std::vector<AblationConfig> ablation_grid();

/// Builds representations of every frame of a raw dataset with `excluded`
/// dropped, into out_root with annotations, splits and meta copied. The new
/// manifest records the exclusion. Throws UnknownChannel when the channel is
/// not part of the configuration.
DatasetManifest ablation_export(const DatasetManifest& manifest, const std::string& excluded,
                                const std::string& out_root, unsigned jobs = 0);

/// Writes a horizontally flipped copy (frames/frame_<id>.flip.ldt and
/// annotations/<id>.flip.json) of each train frame selected by a seeded coin
/// with `probability`. The dataset must already hold representations.
DatasetManifest augment_flip(DatasetManifest manifest, std::uint64_t seed, double probability = 0.5,
                             unsigned jobs = 0);

}  // namespace domescan
