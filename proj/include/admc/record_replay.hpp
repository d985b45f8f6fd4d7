/**
 * @file record_replay.hpp
 * @brief CSV recording of per-tick poses and control metadata, and replay
 *        with scene substitution and per-frame hooks.
 *
 * File layout:
 *
 *     #H,version,1
 *     #H,tick_rate,50
 *     #H,<key>,<value>            (free-form metadata, order preserved)
 *     #O,id,mesh,sx,sy,sz,tag;tag
 *     F,tick,t,objid,px,py,pz,qw,qx,qy,qz   (view, arm, then each object)
 *     C,tick,aperture,i;j,Label;Label
 *
 * Numbers use the shortest decimal form that parses back to the same double,
 * so a parse/print cycle is byte-stable.
 */

#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "admc/arm_sim.hpp"
#include "admc/core_math.hpp"
#include "admc/error.hpp"
#include "admc/suggestion_engine.hpp"
#include "admc/task_scenario.hpp"

namespace admc {

constexpr int kRecordingVersion = 1;
inline const std::string kViewId = "view";
inline const std::string kArmId = "arm";

struct RegistryEntry {
  std::string id;
  std::string mesh;
  Vec3 scale{1.0, 1.0, 1.0};
  std::vector<std::string> tags;

  bool operator==(const RegistryEntry&) const = default;
};

struct RecordingHeader {
  int version = kRecordingVersion;
  double tick_rate = 50.0;
  /// Extra `#H` lines (session name, scheme, initial subset, ...).
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<RegistryEntry> registry;

  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  /// Throws Error(kInvalidConfig) on duplicate ids, a non-positive tick rate,
  /// or characters that would break the CSV layout.
  void validate() const;
  bool operator==(const RecordingHeader&) const = default;
};

struct ObjectPose {
  std::string id;
  Pose pose;

  bool operator==(const ObjectPose&) const = default;
};

struct FrameRecord {
  std::int64_t tick = 0;
  double timestamp = 0.0;
  Pose view;
  Pose arm;
  double finger_aperture = 1.0;
  std::vector<int> active_subset;
  std::vector<SuggestionLabel> labels;
  std::vector<ObjectPose> objects;

  bool operator==(const FrameRecord&) const = default;
};

/// Registry entry for a scene object: scale is the full box size.
RegistryEntry registry_entry(const SceneObject& obj);

/// Serializes frames onto a stream. The header must come first and ticks
/// must increase by exactly one.
class RecordWriter {
 public:
  explicit RecordWriter(std::ostream& os) : os_(os) {}

  void write_header(const RecordingHeader& header);
  /// Throws Error(kMissingHeader) before write_header, Error(kInvalidConfig)
  /// on a tick gap or an unregistered object, Error(kIo) on stream failure.
  void record_tick(const FrameRecord& frame);
  void flush();

  bool has_header() const { return header_.has_value(); }

 private:
  std::ostream& os_;
  std::optional<RecordingHeader> header_;
  std::optional<std::int64_t> last_tick_;
};

std::string format_header(const RecordingHeader& header);
std::string format_frame(const FrameRecord& frame);

struct Recording {
  RecordingHeader header;
  std::vector<FrameRecord> frames;
};

/// Throws ParseError (Error(kParse), with line number) or
/// Error(kVersionMismatch).
Recording parse_recording(std::istream& is);
Recording load_recording(const std::filesystem::path& path);

/// Error(kParse) carrying the 1-based line where parsing failed.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

using FrameHook = std::function<void(FrameRecord&)>;

/// Replacement scene: objects matched by id take their poses from the
/// recording, the rest stay where the scene puts them.
struct SceneOverride {
  std::vector<SceneObject> objects;
};

/// Pull-based replay. Each yielded frame has already been through the hook.
class Replayer {
 public:
  Replayer(Recording recording, std::optional<SceneOverride> scene = std::nullopt,
           FrameHook hook = {});

  std::optional<FrameRecord> next();
  void reset() { cursor_ = 0; }
  std::size_t size() const { return recording_.frames.size(); }
  /// Header describing the replayed scene (the override's registry if any).
  const RecordingHeader& header() const { return header_; }

 private:
  Recording recording_;
  std::optional<SceneOverride> scene_;
  FrameHook hook_;
  RecordingHeader header_;
  std::size_t cursor_ = 0;
};

std::vector<FrameRecord> replay_all(Replayer& replayer);

/// Episode metrics reconstructed from a recording of one completed episode:
/// switches are changes of the active subset, starting from the header's
/// `initial_subset`; acceptances are the switches that bind a suggestion in
/// the ADMC schemes; time is the frame count over the tick rate.
Metrics replay_metrics(const Recording& recording);

std::string format_index_list(const std::vector<int>& idx);
std::vector<int> parse_index_list(std::string_view text);

/// Background writer: the tick loop enqueues, one thread does the file I/O.
class AsyncRecorder {
 public:
  AsyncRecorder();
  ~AsyncRecorder();
  AsyncRecorder(const AsyncRecorder&) = delete;
  AsyncRecorder& operator=(const AsyncRecorder&) = delete;

  /// Starts a new file; a previously open one is flushed and closed.
  void open(std::filesystem::path path, RecordingHeader header);
  void push(FrameRecord frame);
  void close();
  /// Blocks until the queue is drained; rethrows the first writer error.
  void flush();
  std::optional<std::string> error() const;

 private:
  struct Open {
    std::filesystem::path path;
    RecordingHeader header;
  };
  struct Close {};
  using Command = std::variant<Open, FrameRecord, Close>;

  void run(std::stop_token stop);
  void handle(Command& cmd);
  void fail(const std::string& message);

  mutable std::mutex mutex_;
  std::condition_variable_any cv_;
  std::condition_variable drained_;
  std::deque<Command> queue_;
  bool busy_ = false;
  std::optional<std::string> error_;
  std::optional<ErrorCode> error_code_;

  std::ofstream file_;
  std::optional<RecordWriter> writer_;
  std::jthread thread_;
};

}  // namespace admc
