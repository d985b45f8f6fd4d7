#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "admc/record_replay.hpp"
#include "support.hpp"

namespace admc {
namespace {

using test::Rng;

RecordingHeader sample_header() {
  RecordingHeader h;
  h.tick_rate = 50.0;
  h.set("session", "unit");
  h.set("scheme", "AdmcThreshold");
  h.set("initial_subset", "5;6");
  h.registry.push_back({kViewId, "camera", {1, 1, 1}, {}});
  h.registry.push_back({kArmId, "gripper", {0.04, 0.12, 0.02}, {}});
  h.registry.push_back({"block", "cube_blue", {0.05, 0.05, 0.05}, {"Graspable"}});
  return h;
}

std::vector<FrameRecord> random_frames(Rng& rng, int count) {
  std::vector<FrameRecord> frames;
  for (int i = 0; i < count; ++i) {
    FrameRecord f;
    f.tick = i;
    f.timestamp = i / 50.0;
    f.view = {rng.vec3(), rng.rotation(), Frame::World};
    f.arm = {rng.vec3(), rng.rotation(), Frame::World};
    f.finger_aperture = rng.uniform(0.0, 1.0);
    f.active_subset = i < count / 2 ? std::vector<int>{5, 6} : std::vector<int>{0, 5};
    f.labels = {SuggestionLabel::Optimal, SuggestionLabel::Adjustment, SuggestionLabel::Gripper};
    f.objects.push_back({"block", {rng.vec3(), rng.rotation(), Frame::World}});
    frames.push_back(std::move(f));
  }
  return frames;
}

std::string write_all(const RecordingHeader& h, const std::vector<FrameRecord>& frames) {
  std::ostringstream os;
  RecordWriter w(os);
  w.write_header(h);
  for (const auto& f : frames) w.record_tick(f);
  w.flush();
  return os.str();
}

Recording parse_text(const std::string& text) {
  std::istringstream is(text);
  return parse_recording(is);
}

std::size_t parse_error_line(const std::string& text) {
  try {
    parse_text(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no ParseError";
  return 0;
}

TEST(Writer, HeaderPlusOneGroupPerTick) {
  Rng rng(50);
  const std::string text = write_all(sample_header(), random_frames(rng, 100));
  std::istringstream is(text);
  std::string line;
  int header = 0;
  int control = 0;
  int poses = 0;
  while (std::getline(is, line)) {
    if (line.starts_with("#")) ++header;
    if (line.starts_with("C,")) ++control;
    if (line.starts_with("F,")) ++poses;
  }
  EXPECT_EQ(header, 2 + 3 + 3);
  EXPECT_EQ(control, 100);
  EXPECT_EQ(poses, 300);
  EXPECT_TRUE(text.starts_with("#H,version,1\n#H,tick_rate,50\n"));
  EXPECT_NE(text.find("#O,block,cube_blue,0.05,0.05,0.05,Graspable\n"), std::string::npos);
}

TEST(Writer, RefusesFramesWithoutHeader) {
  std::ostringstream os;
  RecordWriter w(os);
  try {
    w.record_tick({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingHeader);
  }
  EXPECT_TRUE(os.str().empty());
}

TEST(Writer, RefusesTickGapsAndUnknownObjects) {
  Rng rng(51);
  auto frames = random_frames(rng, 3);
  std::ostringstream os;
  RecordWriter w(os);
  w.write_header(sample_header());
  w.record_tick(frames[0]);
  EXPECT_THROW(w.record_tick(frames[2]), Error);
  frames[1].objects[0].id = "ghost";
  EXPECT_THROW(w.record_tick(frames[1]), Error);
}

TEST(Header, Validation) {
  RecordingHeader h = sample_header();
  EXPECT_NO_THROW(h.validate());
  h.registry.push_back(h.registry.back());
  EXPECT_THROW(h.validate(), Error);
  h = sample_header();
  h.registry[2].mesh = "a,b";
  EXPECT_THROW(h.validate(), Error);
  h = sample_header();
  h.tick_rate = 0;
  EXPECT_THROW(h.validate(), Error);
}

TEST(Parse, BitExactRoundTrip) {
  Rng rng(52);
  const RecordingHeader h = sample_header();
  const auto frames = random_frames(rng, 200);
  const std::string text = write_all(h, frames);
  const Recording rec = parse_text(text);
  EXPECT_EQ(rec.header, h);
  ASSERT_EQ(rec.frames.size(), frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    EXPECT_EQ(rec.frames[i], frames[i]) << "frame " << i;
  }
  EXPECT_EQ(write_all(rec.header, rec.frames), text);
}

TEST(Parse, TruncatedFileReportsOffendingLine) {
  Rng rng(53);
  const std::string text = write_all(sample_header(), random_frames(rng, 5));
  // cut in the middle of the last F row
  const std::size_t last_c = text.rfind("\nC,");
  const std::size_t cut = text.rfind("\nF,", last_c) + 10;
  const std::string truncated = text.substr(0, cut);
  const std::size_t lines = static_cast<std::size_t>(std::count(truncated.begin(), truncated.end(), '\n')) + 1;
  EXPECT_EQ(parse_error_line(truncated), lines);
}

TEST(Parse, IncompleteGroupAtEnd) {
  Rng rng(54);
  const std::string text = write_all(sample_header(), random_frames(rng, 3));
  const std::size_t last_c = text.rfind("C,");
  EXPECT_GT(parse_error_line(text.substr(0, last_c)), 0u);
}

TEST(Parse, GarbageLines) {
  const std::string head = "#H,version,1\n#H,tick_rate,50\n#O,view,camera,1,1,1,\n#O,arm,gripper,1,1,1,\n";
  EXPECT_EQ(parse_error_line(head + "X,1,2\n"), 5u);
  EXPECT_EQ(parse_error_line(head + "F,0,0,view,1,2,3,1,0,0,0\nF,0,0,arm,1,2,3,2,0,0,0\n"), 6u);
  EXPECT_EQ(parse_error_line(head + "F,0,0,view,1,2,abc,1,0,0,0\n"), 5u);
  EXPECT_EQ(parse_error_line("#H,tick_rate,50\n"), 1u);
}

TEST(Parse, VersionMismatch) {
  try {
    parse_text("#H,version,2\n#H,tick_rate,50\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVersionMismatch);
  }
}

TEST(Replay, IdentityReplay) {
  Rng rng(55);
  Recording rec{sample_header(), random_frames(rng, 40)};
  Replayer r(rec);
  EXPECT_EQ(replay_all(r), rec.frames);
  EXPECT_FALSE(r.next());
  r.reset();
  EXPECT_EQ(r.next(), rec.frames.front());
}

TEST(Replay, HookRepositionsCamera) {
  Rng rng(56);
  Recording rec{sample_header(), random_frames(rng, 20)};
  const Pose cam{{0, 0, 5}, Rotation::pitch(kPi / 2), Frame::World};
  Replayer r(rec, std::nullopt, [&](FrameRecord& f) { f.view = cam; });
  const auto out = replay_all(r);
  ASSERT_EQ(out.size(), rec.frames.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].view, cam);
    EXPECT_EQ(out[i].objects, rec.frames[i].objects);
    EXPECT_EQ(out[i].arm, rec.frames[i].arm);
  }
  EXPECT_NE(write_all(r.header(), out), write_all(rec.header, rec.frames));
}

TEST(Replay, SceneOverrideMatchesById) {
  Rng rng(57);
  Recording rec{sample_header(), random_frames(rng, 10)};
  SceneObject block;
  block.id = "block";
  block.mesh = "mug";
  SceneObject lamp;
  lamp.id = "lamp";
  lamp.mesh = "lamp";
  lamp.pose.position = {0.3, 0.3, 0.1};
  Replayer r(rec, SceneOverride{{block, lamp}});
  EXPECT_EQ(r.header().registry.size(), 4u);
  EXPECT_EQ(r.header().registry[2].mesh, "mug");
  const auto out = replay_all(r);
  for (std::size_t i = 0; i < out.size(); ++i) {
    ASSERT_EQ(out[i].objects.size(), 2u);
    EXPECT_EQ(out[i].objects[0].pose, rec.frames[i].objects[0].pose);
    EXPECT_EQ(out[i].objects[1].pose, lamp.pose);
  }
}

TEST(Replay, MetricsFromSubsetChanges) {
  Rng rng(58);
  RecordingHeader h = sample_header();
  h.set("episode", "3");
  Recording rec{h, random_frames(rng, 100)};
  const Metrics m = replay_metrics(rec);
  EXPECT_EQ(m.mode_switches, 1);
  EXPECT_EQ(m.suggestions_accepted, 1);
  EXPECT_DOUBLE_EQ(m.completion_time, 2.0);
  EXPECT_EQ(m.episodes_completed, 4);
  rec.header.set("scheme", "Classic");
  EXPECT_EQ(replay_metrics(rec).suggestions_accepted, 0);
}

TEST(IndexList, RoundTrip) {
  EXPECT_EQ(format_index_list({0, 5, -1}), "0;5;-1");
  EXPECT_EQ(parse_index_list("0;5;-1"), (std::vector<int>{0, 5, -1}));
  EXPECT_TRUE(parse_index_list("").empty());
  EXPECT_THROW(parse_index_list("0;x"), Error);
}

TEST(AsyncRecorder, WritesSameBytesAsWriter) {
  test::TempDir dir("rec");
  Rng rng(59);
  const RecordingHeader h = sample_header();
  const auto frames = random_frames(rng, 300);
  AsyncRecorder rec;
  rec.open(dir.path() / "a.csv", h);
  for (const auto& f : frames) rec.push(f);
  rec.open(dir.path() / "b.csv", h);
  rec.push(frames[0]);
  rec.close();
  rec.flush();
  EXPECT_FALSE(rec.error());
  EXPECT_EQ(test::read_file(dir.path() / "a.csv"), write_all(h, frames));
  EXPECT_EQ(test::read_file(dir.path() / "b.csv"), write_all(h, {frames[0]}));
  EXPECT_EQ(load_recording(dir.path() / "a.csv").frames, frames);
}

TEST(AsyncRecorder, SurfacesIoErrors) {
  test::TempDir dir("rec_err");
  std::ofstream(dir.path() / "blocker") << "x";
  AsyncRecorder rec;
  rec.open(dir.path() / "blocker" / "y.csv", sample_header());
  EXPECT_THROW(rec.flush(), Error);
  EXPECT_TRUE(rec.error());
}

TEST(AsyncRecorder, FrameWithoutOpenFileIsMissingHeader) {
  AsyncRecorder rec;
  rec.push(FrameRecord{});
  try {
    rec.flush();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingHeader);
  }
}

}  // namespace
}  // namespace admc
