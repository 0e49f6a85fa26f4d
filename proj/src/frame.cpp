#include "povpool/frame.hpp"

#include "povpool/error.hpp"
#include "povpool/png_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>

namespace povpool {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFramePrefix = "frame_";
constexpr const char* kFrameSuffix = ".png";

// frame_%06d.png -> index, or nullopt for anything else in the directory.
std::optional<long> frame_index_of(const fs::path& name) {
  std::string stem = name.filename().string();
  if (stem.size() != 6 + 6 + 4) return std::nullopt;
  if (stem.rfind(kFramePrefix, 0) != 0) return std::nullopt;
  if (stem.substr(12) != kFrameSuffix) return std::nullopt;
  std::string digits = stem.substr(6, 6);
  if (!std::all_of(digits.begin(), digits.end(),
                   [](unsigned char c) { return std::isdigit(c); })) {
    return std::nullopt;
  }
  long value = 0;
  std::from_chars(digits.data(), digits.data() + digits.size(), value);
  return value;
}

std::string frame_file_name(long index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06ld.png", index);
  return buf;
}

std::vector<long> list_frame_indices(const fs::path& dir) {
  std::vector<long> indices;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (auto idx = frame_index_of(entry.path())) indices.push_back(*idx);
  }
  std::sort(indices.begin(), indices.end());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] != static_cast<long>(i) + 1) {
      fail(Errc::SourceGap, "frame numbering gap in " + dir.string() + ": expected " +
                                frame_file_name(static_cast<long>(i) + 1));
    }
  }
  return indices;
}

class DirectorySource : public FrameSource {
 public:
  DirectorySource(fs::path dir, ClipMeta meta) : dir_(std::move(dir)), meta_(meta) {}

  std::optional<Frame> next() override {
    if (next_index_ > meta_.total_frames) return std::nullopt;
    fs::path file = dir_ / frame_file_name(next_index_);
    if (!fs::exists(file)) {
      fail(Errc::SourceGap, "missing " + file.string());
    }
    Frame frame;
    frame.index = static_cast<int>(next_index_);
    frame.timestamp_s = static_cast<double>(next_index_ - 1) / meta_.fps;
    frame.image = read_png(file);
    check_dims(frame.image);
    ++next_index_;
    return frame;
  }

 private:
  void check_dims(const Image& image) {
    if (width_ < 0) {
      width_ = image.width;
      height_ = image.height;
      return;
    }
    if (image.width != width_ || image.height != height_) {
      fail(Errc::DimensionMismatch,
           "frame " + std::to_string(next_index_) + " is " + std::to_string(image.width) +
               "x" + std::to_string(image.height) + ", expected " + std::to_string(width_) +
               "x" + std::to_string(height_));
    }
  }

  fs::path dir_;
  ClipMeta meta_;
  long next_index_ = 1;
  int width_ = -1;
  int height_ = -1;
};

struct RawStreamMeta {
  int width = 0;
  int height = 0;
  int fps = 0;
  long frames = 0;
};

fs::path sidecar_path(const fs::path& stream) {
  fs::path p = stream;
  p.replace_extension(".json");
  return p;
}

RawStreamMeta read_sidecar(const fs::path& stream) {
  fs::path side = sidecar_path(stream);
  std::ifstream in(side);
  if (!in) {
    fail(Errc::MetaMissing, "raw stream sidecar not found: " + side.string());
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(Errc::MetaMissing, "unreadable sidecar " + side.string() + ": " + e.what());
  }
  RawStreamMeta meta;
  try {
    meta.width = doc.at("width").get<int>();
    meta.height = doc.at("height").get<int>();
    meta.fps = doc.at("fps").get<int>();
    meta.frames = doc.at("frames").get<long>();
  } catch (const json::exception& e) {
    fail(Errc::MetaMissing, "sidecar " + side.string() + " missing field: " + e.what());
  }
  if (meta.width <= 0 || meta.height <= 0 || meta.fps <= 0 || meta.frames < 0) {
    fail(Errc::MetaMissing, "sidecar " + side.string() + " has out-of-domain values");
  }
  return meta;
}

class RawStreamSource : public FrameSource {
 public:
  RawStreamSource(const fs::path& path, RawStreamMeta meta)
      : meta_(meta), in_(path, std::ios::binary) {
    if (!in_) {
      fail(Errc::IoError, "cannot open " + path.string());
    }
    auto frame_bytes = static_cast<std::uintmax_t>(meta_.width) * meta_.height * 3;
    auto size = fs::file_size(path);
    if (size / frame_bytes < static_cast<std::uintmax_t>(meta_.frames)) {
      fail(Errc::SourceGap, path.string() + " holds " + std::to_string(size / frame_bytes) +
                                " full frames, sidecar declares " +
                                std::to_string(meta_.frames));
    }
  }

  std::optional<Frame> next() override {
    if (next_index_ > meta_.frames) return std::nullopt;
    Frame frame;
    frame.index = static_cast<int>(next_index_);
    frame.timestamp_s = static_cast<double>(next_index_ - 1) / meta_.fps;
    frame.image.width = meta_.width;
    frame.image.height = meta_.height;
    frame.image.pixels.resize(static_cast<std::size_t>(meta_.width) * meta_.height * 3);
    in_.read(reinterpret_cast<char*>(frame.image.pixels.data()),
             static_cast<std::streamsize>(frame.image.pixels.size()));
    if (in_.gcount() != static_cast<std::streamsize>(frame.image.pixels.size())) {
      fail(Errc::SourceGap, "raw stream ended at frame " + std::to_string(next_index_));
    }
    ++next_index_;
    return frame;
  }

 private:
  RawStreamMeta meta_;
  std::ifstream in_;
  long next_index_ = 1;
};

bool is_raw_stream(const fs::path& path) {
  return fs::is_regular_file(path) && path.extension() == ".rgb24";
}

}  // namespace

ClipMeta probe_source(const fs::path& path, int fps_hint) {
  if (is_raw_stream(path)) {
    RawStreamMeta raw = read_sidecar(path);
    return ClipMeta{raw.fps, raw.frames};
  }
  if (fs::is_directory(path)) {
    if (fps_hint <= 0) {
      fail(Errc::BadParameter, "image directories need an explicit fps > 0");
    }
    auto indices = list_frame_indices(path);
    return ClipMeta{fps_hint, static_cast<long>(indices.size())};
  }
  fail(Errc::IoError, path.string() + " is neither an image directory nor a .rgb24 stream");
}

std::unique_ptr<FrameSource> open_frame_source(const fs::path& path, const ClipMeta& meta) {
  if (meta.fps <= 0) {
    fail(Errc::BadParameter, "fps must be positive");
  }
  if (is_raw_stream(path)) {
    RawStreamMeta raw = read_sidecar(path);
    return std::make_unique<RawStreamSource>(path, raw);
  }
  if (fs::is_directory(path)) {
    list_frame_indices(path);  // reject gaps up front
    return std::make_unique<DirectorySource>(path, meta);
  }
  fail(Errc::IoError, path.string() + " is neither an image directory nor a .rgb24 stream");
}

WindowStream::WindowStream(FrameSource& source, const ClipMeta& meta)
    : source_(source), meta_(meta) {
  if (meta.fps <= 0) {
    fail(Errc::BadParameter, "fps must be positive");
  }
  total_windows_ = meta.seconds();
}

std::optional<SecondWindow> WindowStream::next() {
  if (next_second_ > total_windows_) return std::nullopt;
  SecondWindow window;
  window.second_index = next_second_;
  window.frames.reserve(static_cast<std::size_t>(meta_.fps));
  for (int i = 0; i < meta_.fps; ++i) {
    auto frame = source_.next();
    if (!frame) {
      fail(Errc::TruncatedClip, "source ended inside second " + std::to_string(next_second_));
    }
    window.frames.push_back(std::move(*frame));
  }
  ++next_second_;
  return window;
}

std::vector<SecondWindow> collect_windows(FrameSource& source, const ClipMeta& meta) {
  WindowStream stream(source, meta);
  std::vector<SecondWindow> windows;
  while (auto w = stream.next()) {
    windows.push_back(std::move(*w));
  }
  return windows;
}

}  // namespace povpool
