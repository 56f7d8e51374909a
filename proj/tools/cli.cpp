#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "domescan/dataset.hpp"
#include "domescan/error.hpp"
#include "domescan/evaluation.hpp"
#include "domescan/ingest.hpp"
#include "domescan/intrinsics.hpp"
#include "domescan/pipeline.hpp"
#include "domescan/projection.hpp"
#include "domescan/representation.hpp"
#include "domescan/storage.hpp"
#include "domescan/synth.hpp"
#include "domescan/wire.hpp"

namespace domescan::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  bool json = false;
  unsigned jobs = 0;
  int verbose = 0;
};

struct Context {
  Globals globals;
  std::ostream& out;
  std::ostream& err;

  void log(const std::string& line) const {
    if (globals.verbose > 0) err << line << '\n';
  }
  // Human text unless --json, in which case only the JSON document.
  void report(const std::string& text, const ojson& doc) const {
    if (globals.json) {
      out << doc.dump(2) << '\n';
    } else {
      out << text;
    }
  }
};

std::shared_ptr<const SensorIntrinsics> load_intrinsics(std::string path, const Context& ctx) {
  if (path.empty()) {
    if (const char* env = std::getenv("DOMESCAN_META"); env != nullptr) path = env;
  }
  if (path.empty()) throw UsageError("--meta is required (or set DOMESCAN_META)");
  if (!fs::is_regular_file(path)) throw UsageError("metadata file not found: " + path);
  std::vector<std::string> warnings;
  auto intr = std::make_shared<const SensorIntrinsics>(load_metadata(path, &warnings));
  for (const auto& w : warnings) ctx.err << "warning: " << w << '\n';
  ctx.log("intrinsics: " + std::to_string(intr->beam_count) + " beams x " + std::to_string(intr->scan_width) +
          " columns");
  return intr;
}

void require_dir(const std::string& path) {
  if (!fs::is_directory(path)) throw UsageError("directory not found: " + path);
}

ojson stats_json(const AssemblerStats& s) {
  return {{"packets_accepted", s.packets_accepted},
          {"decode_errors", s.decode_errors},
          {"late_packets", s.late_packets},
          {"scans_emitted", s.scans_emitted}};
}

// --- ingest -----------------------------------------------------------------

struct DecodeArgs {
  std::string in, meta, out;
};

int cmd_decode(const DecodeArgs& a, const Context& ctx) {
  auto intr = load_intrinsics(a.meta, ctx);
  const auto bytes = read_file_bytes(a.in);
  AssemblerStats stats;
  const auto scans = assemble(bytes, intr, &stats);
  fs::create_directories(a.out);
  ojson frames = ojson::array();
  for (const auto& scan : scans) {
    write_scan((fs::path(a.out) / scan_filename(scan.frame_id)).string(), scan);
    frames.push_back({{"frame_id", scan.frame_id}, {"completeness", scan.completeness()}});
    ctx.log("frame " + std::to_string(scan.frame_id) + " completeness " + std::to_string(scan.completeness()));
  }
  ojson doc = stats_json(stats);
  doc["frames"] = frames;
  ctx.report("decoded " + std::to_string(scans.size()) + " frames (" + std::to_string(stats.decode_errors) +
                 " decode errors, " + std::to_string(stats.late_packets) + " late packets) into " + a.out + "\n",
             doc);
  return kExitOk;
}

struct ListenArgs {
  int port = 7502;
  std::string meta, out;
  std::size_t frames = 0;
  int idle_ms = 2000;
  bool any = false;
};

int cmd_listen(const ListenArgs& a, const Context& ctx) {
  auto intr = load_intrinsics(a.meta, ctx);
  UdpListener::Options options;
  options.port = static_cast<std::uint16_t>(a.port);
  UdpListener listener(intr, options, a.any);
  ctx.log("listening on port " + std::to_string(listener.bound_port()));
  fs::create_directories(a.out);
  std::size_t written = 0;
  while (a.frames == 0 || written < a.frames) {
    auto scan = listener.next(std::chrono::milliseconds(a.idle_ms));
    if (!scan) break;
    write_scan((fs::path(a.out) / scan_filename(scan->frame_id)).string(), *scan);
    ctx.log("frame " + std::to_string(scan->frame_id) + " completeness " + std::to_string(scan->completeness()));
    ++written;
  }
  listener.stop();
  while (a.frames == 0 || written < a.frames) {
    auto scan = listener.next(std::chrono::milliseconds(0));
    if (!scan) break;
    write_scan((fs::path(a.out) / scan_filename(scan->frame_id)).string(), *scan);
    ++written;
  }
  const auto s = listener.stats();
  if (s.beam_count_mismatch) throw Error(ErrorCode::BeamCountMismatch, "datagram", "packet beam count differs");
  ojson doc{{"frames_written", written},   {"datagrams", s.datagrams},         {"decode_errors", s.decode_errors},
            {"late_packets", s.late_packets}, {"scans_emitted", s.scans_emitted}, {"queue_drops", s.queue_drops}};
  ctx.report("received " + std::to_string(s.datagrams) + " datagrams, wrote " + std::to_string(written) +
                 " frames into " + a.out + "\n",
             doc);
  return kExitOk;
}

struct ReplayArgs {
  std::string in;
  int port = 7502;
  double rate = 10.0;
};

int cmd_replay(const ReplayArgs& a, const Context& ctx) {
  const auto bytes = read_file_bytes(a.in);
  const auto sent = replay_udp(bytes, static_cast<std::uint16_t>(a.port), a.rate);
  ctx.report("sent " + std::to_string(sent) + " datagrams\n", ojson{{"datagrams", sent}});
  return kExitOk;
}

struct BenchArgs {
  std::string in, meta, mode = "standard";
  std::size_t min_frames = 100;
  bool no_pos = false;
};

int cmd_bench(const BenchArgs& a, const Context& ctx) {
  auto intr = load_intrinsics(a.meta, ctx);
  const auto bytes = read_file_bytes(a.in);
  BenchOptions options;
  options.positional = !a.no_pos;
  options.mode = parse_projection_mode(a.mode);
  options.min_frames = a.min_frames;
  const auto r = bench(bytes, intr, options);
  char line[256];
  std::snprintf(line, sizeof line,
                "%zu frames (%dx%d) in %.3f s: %.1f scans/s, mean latency %.2f ms, p99 %.2f ms\n", r.frames, r.rows,
                r.cols, r.total_seconds, r.scans_per_second, r.mean_latency_ms, r.p99_latency_ms);
  ojson doc{{"frames", r.frames},
            {"rows", r.rows},
            {"cols", r.cols},
            {"total_seconds", r.total_seconds},
            {"scans_per_second", r.scans_per_second},
            {"mean_latency_ms", r.mean_latency_ms},
            {"p99_latency_ms", r.p99_latency_ms}};
  ctx.report(line, doc);
  return kExitOk;
}

// --- projection / representation ----------------------------------------------

struct ProjectArgs {
  std::string in, meta, mode = "standard", out;
};

int cmd_project(const ProjectArgs& a, const Context& ctx) {
  auto intr = load_intrinsics(a.meta, ctx);
  const auto mode = parse_projection_mode(a.mode);
  const auto scan = read_scan(a.in, intr);
  const auto points = project(scan, *intr, mode);
  write_points(a.out, points);
  std::size_t valid = 0;
  for (auto v : points.valid.data()) valid += v;
  ctx.report("projected " + std::to_string(valid) + " valid points (" + std::string(to_string(mode)) + ") to " +
                 a.out + "\n",
             ojson{{"frame_id", scan.frame_id}, {"mode", to_string(mode)}, {"valid_points", valid}});
  return kExitOk;
}

struct ExportArgs {
  std::string in, meta, channels = "nir,refl,signal,revrange", out, mode = "standard";
  std::vector<std::string> exclude;
};

RepresentationConfig config_from_flags(const std::string& channel_list, const std::vector<std::string>& exclude) {
  RepresentationConfig config;
  std::vector<std::string> wanted;
  std::stringstream ss(channel_list);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    for (auto& name : resolve_channels(token)) wanted.push_back(std::move(name));
  }
  auto has = [&](std::string_view n) { return std::find(wanted.begin(), wanted.end(), n) != wanted.end(); };
  config.positional = has(kChannelPosX) || has(kChannelPosY) || has(kChannelPosZ);
  for (auto name : kAllChannels) {
    const bool positional_name = name == kChannelPosX || name == kChannelPosY || name == kChannelPosZ;
    if (positional_name && !config.positional) continue;
    if (!has(name)) config.excluded.emplace_back(name);
  }
  for (const auto& e : exclude) {
    for (auto& name : resolve_channels(e)) {
      if (std::find(config.excluded.begin(), config.excluded.end(), name) == config.excluded.end()) {
        config.excluded.push_back(std::move(name));
      }
    }
  }
  return config;
}

int cmd_export(const ExportArgs& a, const Context& ctx) {
  auto intr = load_intrinsics(a.meta, ctx);
  auto config = config_from_flags(a.channels, a.exclude);
  config.projection_mode = parse_projection_mode(a.mode);
  const auto ids = export_representations(a.in, intr, config, a.out, ctx.globals.jobs);
  ojson names = ojson::array();
  for (const auto& c : config.channels()) names.push_back(c.name);
  ctx.report("exported " + std::to_string(ids.size()) + " frames with " + std::to_string(names.size()) +
                 " channels to " + a.out + "\n",
             ojson{{"frames", ids.size()}, {"channels", names}});
  return kExitOk;
}

// --- dataset ------------------------------------------------------------------

struct SplitArgs {
  std::string dataset, task = "person";
  std::uint64_t seed = 0;
};

ojson splits_json(const SplitAssignment& s) {
  return {{"train", s.train.size()}, {"val", s.val.size()}, {"test", s.test.size()}};
}

int cmd_split(const SplitArgs& a, const Context& ctx) {
  require_dir(a.dataset);
  const auto m = split_dataset(load_dataset(a.dataset, parse_task(a.task)), a.seed);
  ctx.report("split " + std::to_string(m.frames.size()) + " frames: " + std::to_string(m.splits.train.size()) +
                 " train, " + std::to_string(m.splits.val.size()) + " val, " +
                 std::to_string(m.splits.test.size()) + " test (seed " + std::to_string(a.seed) + ")\n",
             ojson{{"seed", a.seed}, {"splits", splits_json(m.splits)}});
  return kExitOk;
}

struct AugmentArgs {
  std::string dataset;
  bool flip = false;
  double probability = 0.5;
  std::uint64_t seed = 0;
};

int cmd_augment(const AugmentArgs& a, const Context& ctx) {
  require_dir(a.dataset);
  if (!a.flip) throw UsageError("augment: no augmentation selected (use --flip)");
  const auto m = augment_flip(load_dataset(a.dataset), a.seed, a.probability, ctx.globals.jobs);
  ctx.report("flipped " + std::to_string(m.augmentation.flipped.size()) + " of " +
                 std::to_string(m.splits.train.size()) + " train frames\n",
             ojson{{"flipped", m.augmentation.flipped}, {"probability", a.probability}, {"seed", a.seed}});
  return kExitOk;
}

struct AblateArgs {
  std::string dataset, exclude, out;
  bool positional = false;
};

int cmd_ablate(const AblateArgs& a, const Context& ctx) {
  require_dir(a.dataset);
  auto m = load_dataset(a.dataset);
  m.channels.positional = a.positional;
  const std::string excluded = a.exclude == "none" || a.exclude == "-" ? "" : a.exclude;
  const auto out = ablation_export(m, excluded, a.out, ctx.globals.jobs);
  ojson names = ojson::array();
  for (const auto& c : out.channels.channels()) names.push_back(c.name);
  ctx.report("exported " + std::to_string(out.frames.size()) + " frames with channels " + names.dump() + " to " +
                 a.out + "\n",
             ojson{{"frames", out.frames.size()}, {"channels", names}, {"positional", a.positional}});
  return kExitOk;
}

// --- evaluation ---------------------------------------------------------------

struct EvalArgs {
  std::string gt, pred, task, split;
  double iou = kDefaultIouThreshold;
  double score = kDefaultScoreThreshold;
};

bool is_flip_copy(const fs::path& p) { return p.stem().extension() == ".flip"; }

std::vector<AnnotationSet> load_ground_truth(const EvalArgs& a, Task& task) {
  std::vector<AnnotationSet> gt;
  if (fs::exists(fs::path(a.gt) / "manifest.json")) {
    const auto m = load_dataset(a.gt);
    if (a.task.empty()) task = m.task;
    std::vector<std::uint32_t> ids = m.frames;
    if (a.split == "train") ids = m.splits.train;
    if (a.split == "val") ids = m.splits.val;
    if (a.split == "test") ids = m.splits.test;
    for (auto id : ids) gt.push_back(read_annotations(m.annotation_path(id)));
    return gt;
  }
  if (!a.split.empty()) throw UsageError("--split needs a dataset directory with manifest.json");
  fs::path dir = a.gt;
  if (fs::is_directory(dir / "annotations")) dir /= "annotations";
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json" && !is_flip_copy(e.path())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) gt.push_back(read_annotations(f.string()));
  return gt;
}

int cmd_eval(const EvalArgs& a, const Context& ctx) {
  require_dir(a.gt);
  Task task = a.task.empty() ? Task::kPerson : parse_task(a.task);
  const auto gt = load_ground_truth(a, task);
  for (const auto& set : gt) validate(set, task);
  const auto preds = load_predictions(a.pred);
  const auto& classes = task_vocabulary(task);
  const auto r = evaluate(gt, preds, classes, a.iou, a.score, ctx.globals.jobs);
  if (!ctx.globals.json) ctx.out << format_report(r);
  ctx.out << report_to_json(r) << '\n';
  return kExitOk;
}

// --- synthetic data -----------------------------------------------------------

struct SynthArgs {
  std::string scene, meta, out, dataset, mode = "standard", task = "person";
  int frames = 1;
  std::uint64_t seed = 0;
  double noise_mm = 0.0;
};

int cmd_synth(const SynthArgs& a, const Context& ctx) {
  auto intr = load_intrinsics(a.meta, ctx);
  if (a.out.empty() && a.dataset.empty()) throw UsageError("synth: give --out and/or --dataset");
  if (a.frames < 1) throw UsageError("synth: --frames must be at least 1");
  const Task task = parse_task(a.task);
  synth::RenderOptions options;
  options.mode = parse_projection_mode(a.mode);
  options.noise_std_mm = a.noise_mm;
  options.noise_seed = a.seed;

  std::vector<synth::Scene> scenes;
  Rng rng(a.seed);
  std::optional<synth::Scene> base;
  if (!a.scene.empty()) {
    base = synth::load_scene(a.scene);
    synth::validate(*base, task);
  }
  for (int f = 0; f < a.frames; ++f) {
    scenes.push_back(base ? synth::animate(*base, f) : synth::random_scene(rng, task));
  }

  if (!a.out.empty()) {
    const auto stream = synth::make_stream(scenes, intr, options);
    write_file_bytes(a.out, stream);
    ctx.log("wrote " + std::to_string(stream.size()) + " bytes to " + a.out);
  }
  if (!a.dataset.empty()) {
    DatasetManifest m;
    m.root = a.dataset;
    m.task = task;
    fs::create_directories(m.frames_dir());
    fs::create_directories(fs::path(a.dataset) / "annotations");
    std::ofstream(m.meta_path()) << serialize_metadata(*intr);
    for (int f = 0; f < a.frames; ++f) {
      const auto id = static_cast<std::uint32_t>(f);
      auto frame_options = options;
      frame_options.noise_seed = options.noise_seed + static_cast<std::uint64_t>(f);
      const auto r = synth::render(scenes[static_cast<std::size_t>(f)], intr, frame_options, id);
      write_scan(m.frame_path(id), r.scan);
      write_annotations(m.annotation_path(id), r.annotations, task);
      m.frames.push_back(id);
    }
    if (m.frames.size() >= 3) {
      m = split_dataset(m, a.seed);
    } else {
      m.splits.train = m.frames;
      save_dataset(m);
    }
  }
  ctx.report("rendered " + std::to_string(a.frames) + " frames\n",
             ojson{{"frames", a.frames}, {"stream", a.out}, {"dataset", a.dataset}});
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"LiDAR scan ingest, projection, dataset and evaluation tools", "domescan"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Globals g;
  app.add_flag("--json", g.json, "Print reports as JSON");
  app.add_option("--jobs,-j", g.jobs, "Worker threads for per-frame stages (0 = all cores)");
  app.add_flag("-v,--verbose", g.verbose, "Verbose progress on stderr");

  auto existing = CLI::ExistingFile;
  auto positive_port = CLI::Range(0, 65535);

  DecodeArgs decode;
  auto* s_decode = app.add_subcommand("decode", "Assemble a recorded packet stream into scan files");
  s_decode->add_option("--in", decode.in, "Recorded stream")->required()->check(existing);
  s_decode->add_option("--meta", decode.meta, "Sensor metadata JSON");
  s_decode->add_option("--out", decode.out, "Output directory")->required();

  ListenArgs listen;
  auto* s_listen = app.add_subcommand("listen", "Receive packets over UDP and write scan files");
  s_listen->add_option("--port", listen.port, "UDP port")->check(positive_port);
  s_listen->add_option("--meta", listen.meta, "Sensor metadata JSON");
  s_listen->add_option("--out", listen.out, "Output directory")->required();
  s_listen->add_option("--frames", listen.frames, "Stop after this many frames (0 = until idle)");
  s_listen->add_option("--idle-ms", listen.idle_ms, "Stop after this long without a scan");
  s_listen->add_flag("--any", listen.any, "Bind all interfaces instead of loopback");

  ReplayArgs replay;
  auto* s_replay = app.add_subcommand("replay", "Send a recorded stream to a local UDP port");
  s_replay->add_option("--in", replay.in, "Recorded stream")->required()->check(existing);
  s_replay->add_option("--port", replay.port, "UDP port")->check(positive_port);
  s_replay->add_option("--rate", replay.rate, "Frames per second (0 = unpaced)");

  BenchArgs bench_args;
  auto* s_bench = app.add_subcommand("bench", "Time decode, projection and representation over a stream");
  s_bench->add_option("--in", bench_args.in, "Recorded stream")->required()->check(existing);
  s_bench->add_option("--meta", bench_args.meta, "Sensor metadata JSON");
  s_bench->add_option("--mode", bench_args.mode, "Projection mode: standard|paper");
  s_bench->add_option("--min-frames", bench_args.min_frames, "Minimum number of complete frames");
  s_bench->add_flag("--no-pos", bench_args.no_pos, "Skip the positional channels");

  ProjectArgs proj;
  auto* s_project = app.add_subcommand("project", "Convert a scan file to 3D points");
  s_project->add_option("--in", proj.in, "Scan file")->required()->check(existing);
  s_project->add_option("--meta", proj.meta, "Sensor metadata JSON");
  s_project->add_option("--mode", proj.mode, "Projection mode: standard|paper");
  s_project->add_option("--out", proj.out, "Point file")->required();

  ExportArgs exp;
  auto* s_export = app.add_subcommand("export", "Build channel images for every scan in a directory");
  s_export->add_option("--in", exp.in, "Directory of scan files")->required()->check(CLI::ExistingDirectory);
  s_export->add_option("--meta", exp.meta, "Sensor metadata JSON");
  s_export->add_option("--channels", exp.channels, "Comma-separated channels, 'pos' adds the positional ones");
  s_export->add_option("--exclude", exp.exclude, "Channel to drop");
  s_export->add_option("--mode", exp.mode, "Projection mode for positional channels");
  s_export->add_option("--out", exp.out, "Output directory")->required();

  SplitArgs split_args;
  auto* s_split = app.add_subcommand("split", "Assign train/val/test splits");
  s_split->add_option("--dataset", split_args.dataset, "Dataset root")->required();
  s_split->add_option("--seed", split_args.seed, "Shuffle seed")->required();
  s_split->add_option("--task", split_args.task, "person|action, for datasets without a manifest");

  AugmentArgs aug;
  auto* s_augment = app.add_subcommand("augment", "Add flipped copies of train frames");
  s_augment->add_option("--dataset", aug.dataset, "Exported dataset root")->required();
  s_augment->add_flag("--flip", aug.flip, "Horizontal flip");
  s_augment->add_option("--p", aug.probability, "Per-frame flip probability")->check(CLI::Range(0.0, 1.0));
  s_augment->add_option("--seed", aug.seed, "Coin seed");

  AblateArgs abl;
  auto* s_ablate = app.add_subcommand("ablate", "Export a dataset with one channel removed");
  s_ablate->add_option("--dataset", abl.dataset, "Raw dataset root")->required();
  s_ablate->add_option("--exclude", abl.exclude, "Channel to drop (none for the full set)")->required();
  s_ablate->add_flag("--pos", abl.positional, "Include the positional channels");
  s_ablate->add_option("--out", abl.out, "Output dataset root")->required();

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("eval", "Score predictions against ground-truth masks");
  s_eval->add_option("--gt", ev.gt, "Dataset root or directory of annotation files")->required();
  s_eval->add_option("--pred", ev.pred, "Predictions, JSON lines")->required()->check(existing);
  s_eval->add_option("--iou", ev.iou, "IoU threshold")->check(CLI::Range(0.0, 1.0));
  s_eval->add_option("--score", ev.score, "Score threshold")->check(CLI::Range(0.0, 1.0));
  s_eval->add_option("--task", ev.task, "person|action");
  s_eval->add_option("--split", ev.split, "Restrict to one split of a dataset")
      ->check(CLI::IsMember({"train", "val", "test"}));

  SynthArgs syn;
  auto* s_synth = app.add_subcommand("synth", "Render synthetic scenes to a packet stream or dataset");
  s_synth->add_option("--scene", syn.scene, "Scene JSON (random scenes when omitted)")->check(existing);
  s_synth->add_option("--meta", syn.meta, "Sensor metadata JSON");
  s_synth->add_option("--frames", syn.frames, "Number of frames");
  s_synth->add_option("--out", syn.out, "Stream file");
  s_synth->add_option("--dataset", syn.dataset, "Also write a raw dataset here");
  s_synth->add_option("--mode", syn.mode, "Projection mode used to cast rays");
  s_synth->add_option("--task", syn.task, "person|action");
  s_synth->add_option("--seed", syn.seed, "Scene and noise seed");
  s_synth->add_option("--noise-mm", syn.noise_mm, "Gaussian range noise");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  const Context ctx{g, out, err};
  try {
    if (*s_decode) return cmd_decode(decode, ctx);
    if (*s_listen) return cmd_listen(listen, ctx);
    if (*s_replay) return cmd_replay(replay, ctx);
    if (*s_bench) return cmd_bench(bench_args, ctx);
    if (*s_project) return cmd_project(proj, ctx);
    if (*s_export) return cmd_export(exp, ctx);
    if (*s_split) return cmd_split(split_args, ctx);
    if (*s_augment) return cmd_augment(aug, ctx);
    if (*s_ablate) return cmd_ablate(abl, ctx);
    if (*s_eval) return cmd_eval(ev, ctx);
    if (*s_synth) return cmd_synth(syn, ctx);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace domescan::cli
