#include "povpool/subtitles.hpp"

#include "povpool/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

namespace povpool {

namespace {

std::string strip_tags(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '<' || c == '{') {
      char closer = (c == '<') ? '>' : '}';
      std::size_t end = text.find(closer, i + 1);
      if (end != std::string_view::npos) {
        i = end + 1;
        continue;
      }
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = true;  // drop leading whitespace
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_space = true;
    } else {
      if (in_space && !out.empty()) out.push_back(' ');
      out.push_back(c);
      in_space = false;
    }
  }
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c);
  });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// H:MM:SS,mmm with the hour field optional and either ',' or '.' before the
// milliseconds. Advances pos past the timestamp on success.
std::optional<double> parse_timestamp(std::string_view line, std::size_t& pos) {
  auto read_int = [&](int max_digits, int& digits_read) -> std::optional<long> {
    long value = 0;
    digits_read = 0;
    while (pos < line.size() && digits_read < max_digits &&
           std::isdigit(static_cast<unsigned char>(line[pos]))) {
      value = value * 10 + (line[pos] - '0');
      ++pos;
      ++digits_read;
    }
    if (digits_read == 0) return std::nullopt;
    return value;
  };

  int digits = 0;
  std::vector<long> fields;
  auto first = read_int(6, digits);
  if (!first) return std::nullopt;
  fields.push_back(*first);
  while (pos < line.size() && line[pos] == ':' && fields.size() < 3) {
    ++pos;
    auto next = read_int(2, digits);
    if (!next) return std::nullopt;
    fields.push_back(*next);
  }
  if (fields.size() < 2) return std::nullopt;  // at least MM:SS
  if (pos >= line.size() || (line[pos] != ',' && line[pos] != '.')) return std::nullopt;
  ++pos;
  auto ms = read_int(3, digits);
  if (!ms) return std::nullopt;
  long millis = *ms;
  for (int i = digits; i < 3; ++i) millis *= 10;  // "1,5" means 500 ms

  long seconds = 0;
  for (long field : fields) seconds = seconds * 60 + field;
  return static_cast<double>(seconds) + static_cast<double>(millis) / 1000.0;
}

struct TimingLine {
  double start = 0.0;
  double end = 0.0;
};

std::optional<TimingLine> parse_timing_line(std::string_view line) {
  std::size_t pos = 0;
  std::string_view body = trim(line);
  auto start = parse_timestamp(body, pos);
  if (!start) return std::nullopt;
  while (pos < body.size() && body[pos] == ' ') ++pos;
  if (body.substr(pos, 3) != "-->") return std::nullopt;
  pos += 3;
  while (pos < body.size() && body[pos] == ' ') ++pos;
  auto end = parse_timestamp(body, pos);
  if (!end) return std::nullopt;
  // Anything after the end timestamp is a cue setting (WebVTT); ignore it.
  return TimingLine{*start, *end};
}

}  // namespace

std::vector<SubtitleCue> parse_srt_text(std::string_view content, SubtitleParseStats* stats) {
  SubtitleParseStats local;
  // BOM
  if (content.substr(0, 3) == "\xEF\xBB\xBF") content.remove_prefix(3);

  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start <= content.size()) {
      std::size_t eol = content.find('\n', start);
      if (eol == std::string_view::npos) eol = content.size();
      std::string_view line = content.substr(start, eol - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      if (eol == content.size()) break;
      start = eol + 1;
    }
  }

  bool webvtt = !lines.empty() && trim(lines[0]).substr(0, 6) == "WEBVTT";

  std::vector<SubtitleCue> cues;
  long last_index = 0;
  std::size_t i = webvtt ? 1 : 0;
  while (i < lines.size()) {
    if (trim(lines[i]).empty()) {
      ++i;
      continue;
    }
    // Block starts here; gather it.
    std::size_t block_start = i;
    std::size_t block_end = i;
    while (block_end < lines.size() && !trim(lines[block_end]).empty()) ++block_end;

    std::size_t timing_at = block_start;
    std::optional<TimingLine> timing = parse_timing_line(lines[timing_at]);
    if (!timing && block_end - block_start >= 2) {
      // First line is an SRT index or a WebVTT cue identifier.
      std::string_view head = trim(lines[block_start]);
      timing = parse_timing_line(lines[block_start + 1]);
      if (timing) {
        timing_at = block_start + 1;
        if (all_digits(head)) {
          long index = std::stol(std::string(head));
          if (index <= last_index) ++local.out_of_order_indices;
          last_index = index;
        }
      }
    }
    if (!timing) {
      std::string_view head = trim(lines[block_start]);
      if (webvtt && (head.substr(0, 4) == "NOTE" || head == "STYLE" || head == "REGION")) {
        i = block_end;  // comment/style block
        continue;
      }
      std::size_t bad_line = lines[block_start].find("-->") != std::string_view::npos ||
                                     block_end - block_start < 2
                                 ? block_start
                                 : block_start + 1;
      fail(Errc::ParseError,
           "malformed timestamp at line " + std::to_string(bad_line + 1));
    }

    std::string text;
    for (std::size_t j = timing_at + 1; j < block_end; ++j) {
      if (!text.empty()) text.push_back(' ');
      text.append(lines[j]);
    }
    text = collapse_whitespace(strip_tags(text));

    if (text.empty() || !(timing->start < timing->end)) {
      ++local.dropped_cues;
    } else {
      cues.push_back(SubtitleCue{timing->start, timing->end, std::move(text)});
    }
    i = block_end;
  }

  std::stable_sort(cues.begin(), cues.end(),
                   [](const SubtitleCue& a, const SubtitleCue& b) { return a.start_s < b.start_s; });
  if (stats) *stats = local;
  return cues;
}

std::vector<SubtitleCue> parse_srt(const std::filesystem::path& path, SubtitleParseStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_srt_text(buffer.str(), stats);
}

namespace {

std::string format_timestamp(double seconds) {
  long total_ms = std::lround(seconds * 1000.0);
  long ms = total_ms % 1000;
  long s = (total_ms / 1000) % 60;
  long m = (total_ms / 60000) % 60;
  long h = total_ms / 3600000;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02ld:%02ld:%02ld,%03ld", h, m, s, ms);
  return buf;
}

}  // namespace

std::string serialize_srt(const std::vector<SubtitleCue>& cues) {
  std::string out;
  for (std::size_t i = 0; i < cues.size(); ++i) {
    out += std::to_string(i + 1);
    out += '\n';
    out += format_timestamp(cues[i].start_s);
    out += " --> ";
    out += format_timestamp(cues[i].end_s);
    out += '\n';
    out += cues[i].text;
    out += "\n\n";
  }
  return out;
}

SecondText second_text(const std::vector<SubtitleCue>& cues, int s) {
  if (s < 1) fail(Errc::BadParameter, "second index must be >= 1");
  const double bin_start = static_cast<double>(s - 1);
  const double bin_end = static_cast<double>(s);

  // [a, b) meets [s-1, s) iff a < s and b > s-1.
  std::vector<std::size_t> hits;
  for (std::size_t j = 0; j < cues.size(); ++j) {
    if (cues[j].start_s < bin_end && cues[j].end_s > bin_start) hits.push_back(j);
  }
  std::stable_sort(hits.begin(), hits.end(), [&](std::size_t a, std::size_t b) {
    return cues[a].start_s < cues[b].start_s;
  });

  SecondText out;
  out.second_index = s;
  for (std::size_t j : hits) {
    if (!out.text.empty()) out.text.push_back(' ');
    out.text += cues[j].text;
  }
  return out;
}

}  // namespace povpool
