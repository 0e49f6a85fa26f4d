#pragma once

#include "povpool/image.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

namespace povpool {

/// One decoded frame. index is the 1-based position in the clip.
struct Frame {
  int index = 0;
  double timestamp_s = 0.0;
  Image image;
};

struct ClipMeta {
  int fps = 0;           // f > 0
  long total_frames = 0; // T >= 0

  /// S = floor(T / f).
  long seconds() const { return fps > 0 ? total_frames / fps : 0; }

  /// Frames past the last full second, dropped by windowing.
  long dropped_trailing() const { return total_frames - seconds() * fps; }
};

/// The f frames of wall-clock second s: indices (s-1)*f+1 .. s*f.
struct SecondWindow {
  int second_index = 0;
  std::vector<Frame> frames;
};

/// Sequential frame reader. Implementations yield frames in index order and
/// raise SourceGap / DimensionMismatch on structural problems.
class FrameSource {
 public:
  virtual ~FrameSource() = default;

  /// Next frame, or nullopt when the source is exhausted.
  virtual std::optional<Frame> next() = 0;
};

/// Determine ClipMeta for a source path.
///
/// Image directories (frame_%06d.png starting at 000001) take fps from
/// fps_hint and count their files; a numbering gap raises SourceGap. Raw
/// streams (<name>.rgb24) read everything from the JSON sidecar
/// <name>.json; a missing sidecar raises MetaMissing.
ClipMeta probe_source(const std::filesystem::path& path, int fps_hint);

/// Open a source for streaming. meta should come from probe_source (or match
/// it); the stream re-validates dimensions and counts as it reads.
std::unique_ptr<FrameSource> open_frame_source(const std::filesystem::path& path,
                                               const ClipMeta& meta);

/// Groups a frame stream into the S = floor(T/f) full second windows.
/// Frames past S*f are dropped; a stream that ends before S*f frames raises
/// TruncatedClip.
class WindowStream {
 public:
  WindowStream(FrameSource& source, const ClipMeta& meta);

  std::optional<SecondWindow> next();

  long total_windows() const { return total_windows_; }

 private:
  FrameSource& source_;
  ClipMeta meta_;
  long total_windows_ = 0;
  int next_second_ = 1;
};

/// Materialize every window; convenience for small clips and tests.
std::vector<SecondWindow> collect_windows(FrameSource& source, const ClipMeta& meta);

}  // namespace povpool
