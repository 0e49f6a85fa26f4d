#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace povpool {

/// One timed subtitle span. start_s < end_s and text is nonempty after
/// trimming; the parser drops cues that cannot satisfy this.
struct SubtitleCue {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string text;

  bool operator==(const SubtitleCue&) const = default;
};

struct SubtitleParseStats {
  long out_of_order_indices = 0;  // SRT numbering that was not increasing
  long dropped_cues = 0;          // empty text after tag stripping, or start >= end
};

/// Subtitle text overlapping wall-clock second s, joined chronologically.
struct SecondText {
  int second_index = 0;
  std::string text;
};

/// Parse SubRip text (WebVTT accepted when the WEBVTT header is present).
/// Cues come back sorted by start time, ties keeping file order; markup in
/// <...> or {...} is stripped; multi-line cue text is joined with single
/// spaces. A malformed timing line raises ParseError naming the line.
std::vector<SubtitleCue> parse_srt_text(std::string_view content,
                                        SubtitleParseStats* stats = nullptr);

std::vector<SubtitleCue> parse_srt(const std::filesystem::path& path,
                                   SubtitleParseStats* stats = nullptr);

/// Render cues back to SubRip. parse(serialize(parse(x))) == parse(x).
std::string serialize_srt(const std::vector<SubtitleCue>& cues);

/// Collect the cues whose span [a, b) intersects second s's bin [s-1, s),
/// joined by single spaces in non-decreasing start order (ties keep input
/// order). Works on unsorted cue lists.
SecondText second_text(const std::vector<SubtitleCue>& cues, int s);

}  // namespace povpool
