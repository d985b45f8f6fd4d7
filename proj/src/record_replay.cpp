#include "admc/record_replay.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "admc/csv_number.hpp"

namespace admc {

namespace {

bool csv_safe(std::string_view s) {
  return s.find_first_of(",;\n\r") == std::string_view::npos;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

void append_pose_row(std::string& out, std::int64_t tick, double t, const std::string& id,
                     const Pose& p) {
  const Rotation& q = p.orientation;
  out += "F,";
  out += std::to_string(tick);
  (out += ',') += format_double(t);
  (out += ',') += id;
  for (double v : {p.position.x, p.position.y, p.position.z, q.w(), q.x(), q.y(), q.z()}) {
    (out += ',') += format_double(v);
  }
  out += '\n';
}

std::string labels_field(const std::vector<SuggestionLabel>& labels) {
  std::vector<std::string> parts;
  parts.reserve(labels.size());
  for (auto l : labels) parts.emplace_back(to_string(l));
  return join(parts, ';');
}

}  // namespace

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + what), line_(line) {}

std::optional<std::string> RecordingHeader::get(const std::string& key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void RecordingHeader::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : metadata) {
    if (k == key) {
      v = value;
      return;
    }
  }
  metadata.emplace_back(key, value);
}

void RecordingHeader::validate() const {
  if (!(tick_rate > 0.0) || !std::isfinite(tick_rate)) {
    throw Error(ErrorCode::kInvalidConfig, "recording tick rate must be positive");
  }
  for (const auto& [k, v] : metadata) {
    if (k.empty() || !csv_safe(k) || k == "version" || k == "tick_rate" ||
        v.find_first_of(",\n\r") != std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig, "bad header entry '" + k + "'");
    }
  }
  std::set<std::string> ids;
  for (const auto& e : registry) {
    if (e.id.empty() || !csv_safe(e.id) || !csv_safe(e.mesh)) {
      throw Error(ErrorCode::kInvalidConfig, "bad registry entry '" + e.id + "'");
    }
    for (const auto& t : e.tags) {
      if (t.empty() || !csv_safe(t)) {
        throw Error(ErrorCode::kInvalidConfig, "bad tag on '" + e.id + "'");
      }
    }
    if (!ids.insert(e.id).second) {
      throw Error(ErrorCode::kInvalidConfig, "duplicate registry id '" + e.id + "'");
    }
  }
}

RegistryEntry registry_entry(const SceneObject& obj) {
  return {obj.id, obj.mesh, obj.half_extents * 2.0,
          std::vector<std::string>(obj.tags.begin(), obj.tags.end())};
}

std::string format_index_list(const std::vector<int>& idx) {
  std::vector<std::string> parts;
  parts.reserve(idx.size());
  for (int i : idx) parts.push_back(std::to_string(i));
  return join(parts, ';');
}

std::vector<int> parse_index_list(std::string_view text) {
  std::vector<int> out;
  if (text.empty()) return out;
  for (auto part : split(text, ';')) {
    const auto v = parse_int(part);
    if (!v || *v < kNoColumn || *v > 1000) {
      throw Error(ErrorCode::kParse, "bad index '" + std::string(part) + "'");
    }
    out.push_back(static_cast<int>(*v));
  }
  return out;
}

std::string format_header(const RecordingHeader& header) {
  std::string out;
  out += "#H,version," + std::to_string(header.version) + '\n';
  out += "#H,tick_rate," + format_double(header.tick_rate) + '\n';
  for (const auto& [k, v] : header.metadata) out += "#H," + k + ',' + v + '\n';
  for (const auto& e : header.registry) {
    out += "#O," + e.id + ',' + e.mesh;
    for (double s : {e.scale.x, e.scale.y, e.scale.z}) (out += ',') += format_double(s);
    (out += ',') += join(e.tags, ';');
    out += '\n';
  }
  return out;
}

std::string format_frame(const FrameRecord& frame) {
  std::string out;
  append_pose_row(out, frame.tick, frame.timestamp, kViewId, frame.view);
  append_pose_row(out, frame.tick, frame.timestamp, kArmId, frame.arm);
  for (const auto& o : frame.objects) {
    append_pose_row(out, frame.tick, frame.timestamp, o.id, o.pose);
  }
  out += "C," + std::to_string(frame.tick) + ',' + format_double(frame.finger_aperture) + ',' +
         format_index_list(frame.active_subset) + ',' + labels_field(frame.labels) + '\n';
  return out;
}

void RecordWriter::write_header(const RecordingHeader& header) {
  if (header_) throw Error(ErrorCode::kInvalidConfig, "header already written");
  header.validate();
  os_ << format_header(header);
  if (!os_) throw Error(ErrorCode::kIo, "failed to write recording header");
  header_ = header;
}

void RecordWriter::record_tick(const FrameRecord& frame) {
  if (!header_) throw Error(ErrorCode::kMissingHeader, "recording header not written");
  if (last_tick_ && frame.tick != *last_tick_ + 1) {
    throw Error(ErrorCode::kInvalidConfig,
                "tick " + std::to_string(frame.tick) + " does not follow " +
                    std::to_string(*last_tick_));
  }
  for (const auto& o : frame.objects) {
    const bool known = std::any_of(header_->registry.begin(), header_->registry.end(),
                                   [&](const RegistryEntry& e) { return e.id == o.id; });
    if (!known) throw Error(ErrorCode::kInvalidConfig, "object '" + o.id + "' not registered");
  }
  os_ << format_frame(frame);
  if (!os_) throw Error(ErrorCode::kIo, "failed to write frame");
  last_tick_ = frame.tick;
}

void RecordWriter::flush() {
  os_.flush();
  if (!os_) throw Error(ErrorCode::kIo, "failed to flush recording");
}

namespace {

class RecordingParser {
 public:
  Recording parse(std::istream& is) {
    std::string line;
    while (std::getline(is, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto fields = split(line, ',');
      const auto kind = fields[0];
      if (kind == "#H") {
        header_line(fields);
      } else if (kind == "#O") {
        registry_line(fields);
      } else if (kind == "F") {
        frame_line(fields);
      } else if (kind == "C") {
        control_line(fields);
      } else {
        fail("unknown row kind '" + std::string(kind) + "'");
      }
    }
    if (!seen_version_) fail("missing version header");
    if (open_) fail("incomplete frame group for tick " + std::to_string(open_->tick));
    return std::move(rec_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_no_, what); }

  void expect_fields(const std::vector<std::string_view>& f, std::size_t n) const {
    if (f.size() != n) {
      fail("expected " + std::to_string(n) + " fields, got " + std::to_string(f.size()));
    }
  }

  double number(std::string_view s) const {
    const auto v = parse_double(s);
    if (!v || !std::isfinite(*v)) fail("bad number '" + std::string(s) + "'");
    return *v;
  }

  std::int64_t integer(std::string_view s) const {
    const auto v = parse_int(s);
    if (!v) fail("bad integer '" + std::string(s) + "'");
    return *v;
  }

  void header_line(const std::vector<std::string_view>& f) {
    if (in_body_) fail("header line after frame data");
    expect_fields(f, 3);
    const std::string key(f[1]);
    if (!seen_version_) {
      if (key != "version") fail("first header line must be the version");
      const auto v = integer(f[2]);
      if (v != kRecordingVersion) {
        throw Error(ErrorCode::kVersionMismatch,
                    "recording version " + std::to_string(v) + ", expected " +
                        std::to_string(kRecordingVersion));
      }
      rec_.header.version = static_cast<int>(v);
      seen_version_ = true;
    } else if (key == "tick_rate") {
      rec_.header.tick_rate = number(f[2]);
      if (!(rec_.header.tick_rate > 0.0)) fail("tick rate must be positive");
    } else if (key == "version") {
      fail("duplicate version line");
    } else {
      rec_.header.metadata.emplace_back(key, std::string(f[2]));
    }
  }

  void registry_line(const std::vector<std::string_view>& f) {
    if (in_body_) fail("registry line after frame data");
    if (!seen_version_) fail("missing version header");
    expect_fields(f, 7);
    RegistryEntry e;
    e.id = f[1];
    e.mesh = f[2];
    e.scale = {number(f[3]), number(f[4]), number(f[5])};
    if (!f[6].empty()) {
      for (auto t : split(f[6], ';')) e.tags.emplace_back(t);
    }
    for (const auto& other : rec_.header.registry) {
      if (other.id == e.id) fail("duplicate registry id '" + e.id + "'");
    }
    rec_.header.registry.push_back(std::move(e));
  }

  void frame_line(const std::vector<std::string_view>& f) {
    if (!seen_version_) fail("missing version header");
    in_body_ = true;
    expect_fields(f, 11);
    const std::int64_t tick = integer(f[1]);
    const double t = number(f[2]);
    const std::string id(f[3]);
    const Vec3 p{number(f[4]), number(f[5]), number(f[6])};
    const double qw = number(f[7]), qx = number(f[8]), qy = number(f[9]), qz = number(f[10]);
    const double n2 = qw * qw + qx * qx + qy * qy + qz * qz;
    if (std::abs(n2 - 1.0) > 1e-6) fail("orientation is not a unit quaternion");
    const Pose pose{p, Rotation::from_components(qw, qx, qy, qz), Frame::World};

    if (!open_) {
      if (id != kViewId) fail("frame group must start with the view row");
      if (!rec_.frames.empty() && tick != rec_.frames.back().tick + 1) {
        fail("tick " + std::to_string(tick) + " does not follow " +
             std::to_string(rec_.frames.back().tick));
      }
      open_ = FrameRecord{};
      open_->tick = tick;
      open_->timestamp = t;
      open_->view = pose;
      rows_ = 1;
      return;
    }
    if (tick != open_->tick) fail("tick changes inside a frame group");
    if (t != open_->timestamp) fail("timestamp changes inside a frame group");
    if (rows_ == 1) {
      if (id != kArmId) fail("second row of a frame group must be the arm");
      open_->arm = pose;
    } else {
      if (id == kViewId || id == kArmId) fail("repeated '" + id + "' row");
      for (const auto& o : open_->objects) {
        if (o.id == id) fail("repeated object '" + id + "'");
      }
      open_->objects.push_back({id, pose});
    }
    ++rows_;
  }

  void control_line(const std::vector<std::string_view>& f) {
    if (!open_ || rows_ < 2) fail("control row without view and arm rows");
    expect_fields(f, 5);
    if (integer(f[1]) != open_->tick) fail("control row tick does not match its group");
    open_->finger_aperture = number(f[2]);
    try {
      open_->active_subset = parse_index_list(f[3]);
    } catch (const Error& e) {
      fail(e.what());
    }
    if (!f[4].empty()) {
      for (auto part : split(f[4], ';')) {
        const auto label = parse_label(part);
        if (!label) fail("unknown suggestion label '" + std::string(part) + "'");
        open_->labels.push_back(*label);
      }
    }
    rec_.frames.push_back(std::move(*open_));
    open_.reset();
  }

  Recording rec_;
  std::optional<FrameRecord> open_;
  std::size_t rows_ = 0;
  std::size_t line_no_ = 0;
  bool seen_version_ = false;
  bool in_body_ = false;
};

}  // namespace

Recording parse_recording(std::istream& is) { return RecordingParser{}.parse(is); }

Recording load_recording(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open recording " + path.string());
  return parse_recording(in);
}

Replayer::Replayer(Recording recording, std::optional<SceneOverride> scene, FrameHook hook)
    : recording_(std::move(recording)), scene_(std::move(scene)), hook_(std::move(hook)) {
  header_ = recording_.header;
  if (scene_) {
    std::vector<RegistryEntry> registry;
    for (const auto& e : header_.registry) {
      if (e.id == kViewId || e.id == kArmId) registry.push_back(e);
    }
    for (const auto& obj : scene_->objects) registry.push_back(registry_entry(obj));
    header_.registry = std::move(registry);
  }
}

std::optional<FrameRecord> Replayer::next() {
  if (cursor_ >= recording_.frames.size()) return std::nullopt;
  FrameRecord frame = recording_.frames[cursor_++];
  if (scene_) {
    std::vector<ObjectPose> objects;
    objects.reserve(scene_->objects.size());
    for (const auto& obj : scene_->objects) {
      auto it = std::find_if(frame.objects.begin(), frame.objects.end(),
                             [&](const ObjectPose& o) { return o.id == obj.id; });
      objects.push_back({obj.id, it != frame.objects.end() ? it->pose : obj.pose});
    }
    frame.objects = std::move(objects);
  }
  if (hook_) hook_(frame);
  return frame;
}

std::vector<FrameRecord> replay_all(Replayer& replayer) {
  std::vector<FrameRecord> out;
  out.reserve(replayer.size());
  while (auto f = replayer.next()) out.push_back(std::move(*f));
  return out;
}

Metrics replay_metrics(const Recording& recording) {
  Metrics m;
  const auto& h = recording.header;
  std::vector<int> subset;
  if (auto init = h.get("initial_subset")) subset = parse_index_list(*init);
  for (const auto& f : recording.frames) {
    if (f.active_subset != subset) {
      ++m.mode_switches;
      subset = f.active_subset;
    }
  }
  const auto scheme = h.get("scheme").value_or("");
  if (scheme == "AdmcContinuous" || scheme == "AdmcThreshold") {
    m.suggestions_accepted = m.mode_switches;
  }
  m.completion_time = static_cast<double>(recording.frames.size()) / h.tick_rate;
  long long before = 0;
  if (auto e = h.get("episode")) before = parse_int(*e).value_or(0);
  m.episodes_completed = static_cast<int>(before) + 1;
  return m;
}

AsyncRecorder::AsyncRecorder() : thread_([this](std::stop_token st) { run(st); }) {}

AsyncRecorder::~AsyncRecorder() {
  try {
    close();
    flush();
  } catch (...) {
  }
  thread_.request_stop();
  cv_.notify_all();
}

void AsyncRecorder::open(std::filesystem::path path, RecordingHeader header) {
  {
    std::lock_guard lock(mutex_);
    queue_.emplace_back(Open{std::move(path), std::move(header)});
  }
  cv_.notify_one();
}

void AsyncRecorder::push(FrameRecord frame) {
  {
    std::lock_guard lock(mutex_);
    queue_.emplace_back(std::move(frame));
  }
  cv_.notify_one();
}

void AsyncRecorder::close() {
  {
    std::lock_guard lock(mutex_);
    queue_.emplace_back(Close{});
  }
  cv_.notify_one();
}

void AsyncRecorder::flush() {
  std::unique_lock lock(mutex_);
  drained_.wait(lock, [this] { return queue_.empty() && !busy_; });
  if (error_) throw Error(error_code_.value_or(ErrorCode::kIo), *error_);
}

std::optional<std::string> AsyncRecorder::error() const {
  std::lock_guard lock(mutex_);
  return error_;
}

void AsyncRecorder::fail(const std::string& message) {
  std::lock_guard lock(mutex_);
  if (!error_) error_ = message;
}

void AsyncRecorder::run(std::stop_token stop) {
  for (;;) {
    Command cmd;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, stop, [this] { return !queue_.empty(); });
      if (queue_.empty()) return;
      cmd = std::move(queue_.front());
      queue_.pop_front();
      busy_ = true;
    }
    try {
      handle(cmd);
    } catch (const Error& e) {
      std::lock_guard lock(mutex_);
      if (!error_) {
        error_ = e.what();
        error_code_ = e.code();
      }
    } catch (const std::exception& e) {
      fail(e.what());
    }
    {
      std::lock_guard lock(mutex_);
      busy_ = false;
      if (queue_.empty()) drained_.notify_all();
    }
  }
}

void AsyncRecorder::handle(Command& cmd) {
  if (auto* o = std::get_if<Open>(&cmd)) {
    if (writer_) {
      writer_->flush();
      writer_.reset();
    }
    if (file_.is_open()) file_.close();
    if (o->path.has_parent_path()) std::filesystem::create_directories(o->path.parent_path());
    file_.open(o->path, std::ios::binary | std::ios::trunc);
    if (!file_) throw Error(ErrorCode::kIo, "cannot create " + o->path.string());
    writer_.emplace(file_);
    writer_->write_header(o->header);
  } else if (auto* f = std::get_if<FrameRecord>(&cmd)) {
    if (!writer_) throw Error(ErrorCode::kMissingHeader, "no recording open");
    writer_->record_tick(*f);
  } else {
    if (writer_) {
      writer_->flush();
      writer_.reset();
    }
    if (file_.is_open()) file_.close();
  }
}

}  // namespace admc
