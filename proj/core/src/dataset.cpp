#include "domescan/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "domescan/error.hpp"
#include "domescan/pipeline.hpp"
#include "domescan/random.hpp"
#include "domescan/storage.hpp"

namespace domescan {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, path.string(), "cannot open for writing");
  out << text << '\n';
}

ojson config_to_json(const RepresentationConfig& c) {
  ojson j;
  j["positional"] = c.positional;
  j["nir_scale"] = c.nir_scale;
  j["signal_scale"] = c.signal_scale;
  j["reflectivity_scale"] = c.reflectivity_scale;
  j["max_range_mm"] = c.max_range_mm;
  j["position_scale_m"] = c.position_scale_m;
  j["projection_mode"] = std::string(to_string(c.projection_mode));
  j["excluded"] = c.excluded;
  return j;
}

RepresentationConfig config_from_json(const nlohmann::json& j) {
  RepresentationConfig c;
  c.positional = j.value("positional", c.positional);
  c.nir_scale = j.value("nir_scale", c.nir_scale);
  c.signal_scale = j.value("signal_scale", c.signal_scale);
  c.reflectivity_scale = j.value("reflectivity_scale", c.reflectivity_scale);
  c.max_range_mm = j.value("max_range_mm", c.max_range_mm);
  c.position_scale_m = j.value("position_scale_m", c.position_scale_m);
  c.projection_mode = parse_projection_mode(j.value("projection_mode", std::string("standard")));
  c.excluded = j.value("excluded", std::vector<std::string>{});
  return c;
}

ChannelManifest channel_manifest(const RepresentationConfig& config) {
  ChannelManifest m;
  m.channels = config.channels();
  m.excluded = config.excluded;
  m.projection_mode = config.projection_mode;
  return m;
}

}  // namespace

SplitAssignment split(std::vector<std::uint32_t> frames, std::uint64_t seed) {
  const std::size_t n = frames.size();
  if (n < 3) throw Error(ErrorCode::TooFewFrames, "frames", "need at least 3, got " + std::to_string(n));
  Rng rng(seed);
  shuffle(std::span<std::uint32_t>(frames), rng);
  const std::size_t train = n * 70 / 100;
  const std::size_t val = n * 15 / 100;
  SplitAssignment out;
  out.train.assign(frames.begin(), frames.begin() + static_cast<std::ptrdiff_t>(train));
  out.val.assign(frames.begin() + static_cast<std::ptrdiff_t>(train),
                 frames.begin() + static_cast<std::ptrdiff_t>(train + val));
  out.test.assign(frames.begin() + static_cast<std::ptrdiff_t>(train + val), frames.end());
  return out;
}

FrameRepresentation hflip(const FrameRepresentation& rep) {
  FrameRepresentation out = rep;
  const int posy = rep.channel_index(kChannelPosY);
  for (int c = 0; c < rep.channels(); ++c) {
    for (int r = 0; r < rep.rows; ++r) {
      for (int q = 0; q < rep.cols; ++q) {
        const float v = rep.at(c, r, rep.cols - 1 - q);
        out.at(c, r, q) = c == posy ? -v : v;
      }
    }
  }
  return out;
}

AnnotationSet hflip(const AnnotationSet& ann) {
  AnnotationSet out = ann;
  for (auto& inst : out.instances) {
    const Grid<std::uint8_t> mask = rle_decode(inst.mask);
    Grid<std::uint8_t> flipped(mask.rows(), mask.cols());
    for (int r = 0; r < mask.rows(); ++r) {
      for (int q = 0; q < mask.cols(); ++q) flipped(r, q) = mask(r, mask.cols() - 1 - q);
    }
    inst.mask = rle_encode(flipped);
  }
  return out;
}

std::pair<FrameRepresentation, AnnotationSet> hflip(const FrameRepresentation& rep, const AnnotationSet& ann) {
  if (rep.rows != ann.rows || rep.cols != ann.cols) {
    throw Error(ErrorCode::DimensionMismatch, "annotations", "annotation and representation sizes differ");
  }
  return {hflip(rep), hflip(ann)};
}

std::string DatasetManifest::meta_path() const { return (fs::path(root) / "meta.json").string(); }
std::string DatasetManifest::frames_dir() const { return (fs::path(root) / "frames").string(); }
std::string DatasetManifest::frame_path(std::uint32_t frame_id) const {
  return (fs::path(frames_dir()) / scan_filename(frame_id)).string();
}
std::string DatasetManifest::annotation_path(std::uint32_t frame_id) const {
  return (fs::path(root) / "annotations" / (std::to_string(frame_id) + ".json")).string();
}

void validate(const DatasetManifest& manifest) {
  const auto& s = manifest.splits;
  const std::size_t assigned = s.train.size() + s.val.size() + s.test.size();
  if (assigned == 0) return;  // not split yet
  std::multiset<std::uint32_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  const std::multiset<std::uint32_t> frames(manifest.frames.begin(), manifest.frames.end());
  if (all != frames) {
    throw Error(ErrorCode::InvariantViolation, "splits", "splits must be disjoint and cover every frame");
  }
}

std::string dataset_manifest_to_json(const DatasetManifest& m) {
  ojson doc;
  doc["task"] = std::string(to_string(m.task));
  doc["seed"] = m.seed;
  doc["exported"] = m.exported;
  doc["frames"] = m.frames;
  doc["channels"] = config_to_json(m.channels);
  doc["augmentation"] = {{"hflip", m.augmentation.hflip},
                         {"probability", m.augmentation.probability},
                         {"flipped", m.augmentation.flipped}};
  doc["splits"] = {{"train", m.splits.train}, {"val", m.splits.val}, {"test", m.splits.test}};
  return doc.dump(2);
}

DatasetManifest dataset_manifest_from_json(std::string_view text, std::string root) {
  auto doc = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::MalformedDocument, "manifest.json");
  DatasetManifest m;
  m.root = std::move(root);
  try {
    m.task = parse_task(doc.at("task").get<std::string>());
    m.seed = doc.value("seed", std::uint64_t{0});
    m.exported = doc.value("exported", false);
    m.frames = doc.at("frames").get<std::vector<std::uint32_t>>();
    if (doc.contains("channels")) m.channels = config_from_json(doc["channels"]);
    if (doc.contains("augmentation")) {
      const auto& a = doc["augmentation"];
      m.augmentation.hflip = a.value("hflip", false);
      m.augmentation.probability = a.value("probability", 0.5);
      m.augmentation.flipped = a.value("flipped", std::vector<std::uint32_t>{});
    }
    if (doc.contains("splits")) {
      const auto& s = doc["splits"];
      m.splits.train = s.value("train", std::vector<std::uint32_t>{});
      m.splits.val = s.value("val", std::vector<std::uint32_t>{});
      m.splits.test = s.value("test", std::vector<std::uint32_t>{});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, "manifest.json", e.what());
  }
  validate(m);
  return m;
}

void save_dataset(const DatasetManifest& manifest) {
  validate(manifest);
  fs::create_directories(manifest.root);
  write_text(fs::path(manifest.root) / "manifest.json", dataset_manifest_to_json(manifest));
  ojson splits;
  splits["seed"] = manifest.seed;
  splits["train"] = manifest.splits.train;
  splits["val"] = manifest.splits.val;
  splits["test"] = manifest.splits.test;
  write_text(fs::path(manifest.root) / "splits.json", splits.dump(2));
}

DatasetManifest NativeDatasetImporter::import(const std::string& root) {
  const fs::path manifest_path = fs::path(root) / "manifest.json";
  if (fs::exists(manifest_path)) return dataset_manifest_from_json(read_text(manifest_path), root);

  DatasetManifest m;
  m.root = root;
  m.task = task_;
  for (const auto& file : list_frame_files(m.frames_dir())) m.frames.push_back(frame_id_from_filename(file));
  return m;
}

DatasetManifest load_dataset(const std::string& root, Task task) {
  NativeDatasetImporter importer(task);
  return importer.import(root);
}

DatasetManifest split_dataset(DatasetManifest manifest, std::uint64_t seed) {
  manifest.seed = seed;
  manifest.splits = split(manifest.frames, seed);
  save_dataset(manifest);
  return manifest;
}

std::vector<AblationConfig> ablation_grid() {
  std::vector<AblationConfig> grid;
  for (bool positional : {false, true}) {
    for (const char* excluded : {"", "nir", "refl", "signal", "revrange"}) {
      grid.push_back({excluded, positional});
    }
  }
  return grid;
}

DatasetManifest ablation_export(const DatasetManifest& manifest, const std::string& excluded,
                                const std::string& out_root, unsigned jobs) {
  if (manifest.exported) {
    throw Error(ErrorCode::SchemaViolation, manifest.root, "ablation needs a dataset of raw scans");
  }
  RepresentationConfig config = manifest.channels;
  if (!excluded.empty()) {
    const auto available = config.channels();
    for (auto& name : resolve_channels(excluded)) {
      const bool present = std::any_of(available.begin(), available.end(),
                                       [&](const ChannelInfo& c) { return c.name == name; });
      if (!present) throw Error(ErrorCode::UnknownChannel, excluded, "not part of the channel configuration");
      config.excluded.push_back(std::move(name));
    }
  }

  auto intrinsics = std::make_shared<const SensorIntrinsics>(load_metadata(manifest.meta_path()));
  DatasetManifest out = manifest;
  out.root = out_root;
  out.channels = config;
  out.exported = true;
  fs::create_directories(out.frames_dir());
  fs::create_directories(fs::path(out_root) / "annotations");

  export_representations(manifest.frames_dir(), intrinsics, config, out.frames_dir(), jobs);
  fs::copy_file(manifest.meta_path(), out.meta_path(), fs::copy_options::overwrite_existing);
  for (auto id : manifest.frames) {
    if (fs::exists(manifest.annotation_path(id))) {
      fs::copy_file(manifest.annotation_path(id), out.annotation_path(id), fs::copy_options::overwrite_existing);
    }
  }
  save_dataset(out);
  return out;
}

DatasetManifest augment_flip(DatasetManifest manifest, std::uint64_t seed, double probability, unsigned jobs) {
  if (!manifest.exported) {
    throw Error(ErrorCode::SchemaViolation, manifest.root, "flip augmentation needs exported representations");
  }
  Rng rng(seed);
  std::vector<std::uint32_t> chosen;
  for (auto id : manifest.splits.train) {
    if (uniform_unit(rng) < probability) chosen.push_back(id);
  }
  const ChannelManifest channels = channel_manifest(manifest.channels);
  const fs::path frames = manifest.frames_dir();

  parallel_for(chosen.size(), jobs, [&](std::size_t i) {
    const std::uint32_t id = chosen[i];
    const FrameRepresentation rep = read_representation(manifest.frame_path(id), channels, id);
    AnnotationSet ann{id, rep.rows, rep.cols, {}};
    if (fs::exists(manifest.annotation_path(id))) ann = read_annotations(manifest.annotation_path(id));
    const auto [flipped_rep, flipped_ann] = hflip(rep, ann);
    write_representation((frames / ("frame_" + std::to_string(id) + ".flip.ldt")).string(), flipped_rep);
    write_annotations((fs::path(manifest.root) / "annotations" / (std::to_string(id) + ".flip.json")).string(),
                      flipped_ann, manifest.task);
  });

  manifest.augmentation.hflip = true;
  manifest.augmentation.probability = probability;
  manifest.augmentation.flipped = chosen;
  save_dataset(manifest);
  return manifest;
}

}  // namespace domescan
