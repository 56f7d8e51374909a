#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "domescan/annotation.hpp"
#include "domescan/intrinsics.hpp"
#include "domescan/storage.hpp"
#include "domescan/synth.hpp"
#include "domescan/wire.hpp"
#include "test_util.hpp"

using namespace domescan;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "domescan");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string write_meta(const testutil::TempDir& dir, int beams = 16, int width = 64) {
  const auto path = dir.str("meta.json");
  std::ofstream(path) << serialize_metadata(make_uniform_intrinsics(beams, width));
  return path;
}

}  // namespace

TEST(Cli, UnknownSubcommandIsUsageError) {
  const auto r = run_cli({"frobnicate"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"eval"}).code, 1);  // missing required flags
}

TEST(Cli, EvalOnFixture) {
  testutil::TempDir dir;
  std::filesystem::create_directories(dir.path() / "gt");
  AnnotationSet gt{4, 2, 4, {{RleMask{2, 4, {0, 4, 4}}, "person"}}};
  write_annotations(dir.str("gt/4.json"), gt, Task::kPerson);
  std::ofstream(dir.str("p.jsonl")) << "{\"frame_id\": 4, \"class\": \"person\", \"score\": 0.9, \"rle\": [0, 4, 4]}\n";
  const auto r = run_cli({"eval", "--gt", dir.str("gt"), "--pred", dir.str("p.jsonl")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("person"), std::string::npos);
  EXPECT_NE(r.out.find("\"weighted_average\""), std::string::npos);
  EXPECT_NE(r.out.find("\"f1\": 1.0"), std::string::npos);
}

TEST(Cli, ProjectOnTruncatedFrameIsDataError) {
  testutil::TempDir dir;
  const auto meta = write_meta(dir);
  auto intr = std::make_shared<const SensorIntrinsics>(make_uniform_intrinsics(16, 64));
  write_scan(dir.str("frame_1.ldt"), LidarScan(1, intr));
  auto bytes = read_file_bytes(dir.str("frame_1.ldt"));
  bytes.resize(bytes.size() / 2);
  write_file_bytes(dir.str("frame_1.ldt"), bytes);
  const auto r = run_cli({"project", "--in", dir.str("frame_1.ldt"), "--meta", meta, "--out", dir.str("p.ldt")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("TruncatedFile"), std::string::npos) << r.err;
}

TEST(Cli, MetaFromEnvironment) {
  testutil::TempDir dir;
  const auto meta = write_meta(dir);
  auto intr = std::make_shared<const SensorIntrinsics>(make_uniform_intrinsics(16, 64));
  write_scan(dir.str("frame_1.ldt"), LidarScan(1, intr));
  ::unsetenv("DOMESCAN_META");
  EXPECT_EQ(run_cli({"project", "--in", dir.str("frame_1.ldt"), "--out", dir.str("p.ldt")}).code, 1);
  ::setenv("DOMESCAN_META", meta.c_str(), 1);
  const auto r = run_cli({"--json", "project", "--in", dir.str("frame_1.ldt"), "--out", dir.str("p.ldt")});
  ::unsetenv("DOMESCAN_META");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\"valid_points\": 0"), std::string::npos);
  EXPECT_NO_THROW(read_points(dir.str("p.ldt")));
}

TEST(Cli, SynthDecodeSplitAblateAugmentIdempotent) {
  testutil::TempDir dir;
  const auto meta = write_meta(dir);
  ASSERT_EQ(run_cli({"synth", "--meta", meta, "--frames", "6", "--seed", "3", "--out", dir.str("s.bin"),
                     "--dataset", dir.str("raw")})
                .code,
            0);
  auto r = run_cli({"decode", "--in", dir.str("s.bin"), "--meta", meta, "--out", dir.str("scans")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(list_frame_files(dir.str("scans")).size(), 6u);

  r = run_cli({"--json", "split", "--dataset", dir.str("raw"), "--seed", "11"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto first = r.out;
  EXPECT_EQ(run_cli({"--json", "split", "--dataset", dir.str("raw"), "--seed", "11"}).out, first);

  r = run_cli({"ablate", "--dataset", dir.str("raw"), "--exclude", "nir", "--pos", "--out", dir.str("abl"),
               "--jobs", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto a1 = read_file_bytes(dir.str("abl/frames/frame_0.ldt"));
  ASSERT_EQ(run_cli({"ablate", "--dataset", dir.str("raw"), "--exclude", "nir", "--pos", "--out", dir.str("abl")})
                .code,
            0);
  EXPECT_EQ(read_file_bytes(dir.str("abl/frames/frame_0.ldt")), a1);
  EXPECT_EQ(run_cli({"ablate", "--dataset", dir.str("raw"), "--exclude", "depth", "--out", dir.str("x")}).code, 2);

  r = run_cli({"augment", "--dataset", dir.str("abl"), "--flip", "--p", "1", "--seed", "1"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(run_cli({"augment", "--dataset", dir.str("abl")}).code, 1);

  r = run_cli({"export", "--in", dir.str("scans"), "--meta", meta, "--channels", "nir,refl,signal,revrange,pos",
               "--exclude", "refl", "--out", dir.str("exp"), "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\"posz\""), std::string::npos);
  EXPECT_EQ(r.out.find("\"refl\""), std::string::npos);
}
