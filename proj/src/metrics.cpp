#include "povpool/metrics.hpp"

#include "povpool/error.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <unordered_map>

namespace povpool {

namespace {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

TwoTurnOutput split_two_turn(std::string_view raw) {
  static constexpr std::string_view kReasoning = "reasoning:";
  static constexpr std::string_view kAnswer = "final answer:";

  const std::string lowered = to_lower(raw);
  TwoTurnOutput out;

  const std::size_t answer_at = lowered.rfind(kAnswer);
  if (answer_at == std::string::npos) {
    out.answer = std::string(trim_view(raw));
    out.markers_found = false;
    return out;
  }
  out.answer = std::string(trim_view(raw.substr(answer_at + kAnswer.size())));

  const std::size_t reasoning_at =
      std::string_view(lowered).substr(0, answer_at).rfind(kReasoning);
  if (reasoning_at == std::string::npos) {
    out.markers_found = false;
    return out;
  }
  const std::size_t begin = reasoning_at + kReasoning.size();
  out.reasoning = std::string(trim_view(raw.substr(begin, answer_at - begin)));
  return out;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    unsigned char uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      pending_space = true;
    } else if (!std::ispunct(uc)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      out.push_back(static_cast<char>(std::tolower(uc)));
      pending_space = false;
    }
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::string normalized = normalize_text(text);
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start < normalized.size()) {
    std::size_t end = normalized.find(' ', start);
    if (end == std::string::npos) end = normalized.size();
    tokens.emplace_back(normalized.substr(start, end - start));
    start = end + 1;
  }
  return tokens;
}

double token_f1(std::string_view pred, std::string_view ref) {
  const std::vector<std::string> p = tokenize(pred);
  const std::vector<std::string> r = tokenize(ref);
  if (p.empty() && r.empty()) return 1.0;
  if (p.empty() || r.empty()) return 0.0;

  std::unordered_map<std::string, long> ref_counts;
  for (const std::string& t : r) ++ref_counts[t];
  long overlap = 0;
  for (const std::string& t : p) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      ++overlap;
      --it->second;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / static_cast<double>(p.size());
  const double recall = static_cast<double>(overlap) / static_cast<double>(r.size());
  return 2.0 * precision * recall / (precision + recall);
}

namespace {

std::unordered_map<std::string, long> ngram_counts(const std::vector<std::string>& tokens,
                                                   int n) {
  std::unordered_map<std::string, long> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int j = 1; j < n; ++j) {
      key.push_back('\x1f');
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

double bleu(std::string_view pred, std::string_view ref, int max_n, bool* smoothed) {
  if (max_n < 1) fail(Errc::BadParameter, "max_n must be >= 1");
  if (smoothed) *smoothed = false;

  const std::vector<std::string> p = tokenize(pred);
  const std::vector<std::string> r = tokenize(ref);
  const double c = static_cast<double>(p.size());
  const double rlen = static_cast<double>(r.size());
  if (p.empty()) return 0.0;

  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto pred_grams = ngram_counts(p, n);
    const auto ref_grams = ngram_counts(r, n);
    long matches = 0;
    long total = 0;
    for (const auto& [gram, count] : pred_grams) {
      total += count;
      auto it = ref_grams.find(gram);
      if (it != ref_grams.end()) matches += std::min(count, it->second);
    }
    double precision = total > 0 ? static_cast<double>(matches) / static_cast<double>(total) : 0.0;
    if (precision == 0.0) {
      precision = 1.0 / (2.0 * c);
      if (smoothed) *smoothed = true;
    }
    log_sum += std::log(precision);
  }
  const double brevity = c < rlen ? std::exp(1.0 - rlen / c) : 1.0;
  return brevity * std::exp(log_sum / max_n);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  if (m == 0 || n == 0) return 0;

  if (m <= 64) {
    // Bit-parallel LCS: one machine word carries the column, pattern masks
    // mark where each distinct token of `a` occurs.
    std::vector<std::pair<std::string_view, std::uint64_t>> masks;
    masks.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      std::string_view tok = a[i];
      auto it = std::find_if(masks.begin(), masks.end(),
                             [&](const auto& e) { return e.first == tok; });
      if (it == masks.end()) {
        masks.emplace_back(tok, std::uint64_t{1} << i);
      } else {
        it->second |= std::uint64_t{1} << i;
      }
    }
    const std::uint64_t full = m == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << m) - 1;
    std::uint64_t v = full;
    for (std::size_t j = 0; j < n; ++j) {
      std::string_view tok = b[j];
      std::uint64_t pm = 0;
      auto it = std::find_if(masks.begin(), masks.end(),
                             [&](const auto& e) { return e.first == tok; });
      if (it != masks.end()) pm = it->second;
      const std::uint64_t u = v & pm;
      v = (v + u) | (v - u);
    }
    return m - static_cast<std::size_t>(std::popcount(v & full));
  }

  std::vector<std::size_t> prev(n + 1, 0);
  std::vector<std::size_t> cur(n + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

double lcs_f_measure(std::size_t len_pred, std::size_t len_ref, std::size_t lcs) {
  if (len_pred == 0 && len_ref == 0) return 1.0;
  if (lcs == 0) return 0.0;
  const double precision = static_cast<double>(lcs) / static_cast<double>(len_pred);
  const double recall = static_cast<double>(lcs) / static_cast<double>(len_ref);
  return 2.0 * precision * recall / (precision + recall);
}

double rouge_l(std::string_view pred, std::string_view ref) {
  const std::vector<std::string> p = tokenize(pred);
  const std::vector<std::string> r = tokenize(ref);
  return lcs_f_measure(p.size(), r.size(), lcs_length(p, r));
}

double embed_cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) {
    fail(Errc::DimMismatch, "vector dimensions " + std::to_string(u.size()) + " vs " +
                                std::to_string(v.size()));
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) fail(Errc::ZeroVector, "cosine of a zero vector");
  return u.dot(v) / (nu * nv);
}

std::optional<char> mcq_letter(std::string_view answer) {
  const std::vector<std::string> tokens = tokenize(answer);
  if (tokens.empty()) return std::nullopt;
  const std::string& first = tokens.front();
  if (first.size() == 1 && std::isalpha(static_cast<unsigned char>(first[0]))) {
    return first[0];
  }
  return std::nullopt;
}

bool mcq_match(std::string_view pred_answer, std::string_view ref_answer) {
  const auto p = mcq_letter(pred_answer);
  const auto r = mcq_letter(ref_answer);
  return p.has_value() && r.has_value() && *p == *r;
}

MetricReport score_record(const TwoTurnOutput& pred, const TwoTurnOutput& ref,
                          const std::optional<EmbedPair>& embeds) {
  MetricReport report;
  report.f1 = token_f1(pred.answer, ref.answer);
  report.bleu1 = bleu(pred.answer, ref.answer, 1, &report.bleu1_smoothed);
  report.bleu4_bp = bleu(pred.answer, ref.answer, 4, &report.bleu4_smoothed);
  report.rouge_l = rouge_l(pred.answer, ref.answer);
  report.rouge_l_r = rouge_l(pred.reasoning, ref.reasoning);
  if (embeds) {
    report.embed_cos = std::max(0.0, embed_cosine(embeds->pred_vec, embeds->ref_vec));
    if (embeds->pred_vec_r && embeds->ref_vec_r) {
      report.embed_cos_r = std::max(0.0, embed_cosine(*embeds->pred_vec_r, *embeds->ref_vec_r));
    }
  }
  return report;
}

MetricReport average_reports(const std::vector<MetricReport>& reports) {
  if (reports.empty()) fail(Errc::EmptyBatch, "no records to average");
  MetricReport mean;
  double cos_sum = 0.0;
  long cos_count = 0;
  double cos_r_sum = 0.0;
  long cos_r_count = 0;
  for (const MetricReport& r : reports) {
    mean.f1 += r.f1;
    mean.bleu1 += r.bleu1;
    mean.bleu4_bp += r.bleu4_bp;
    mean.rouge_l += r.rouge_l;
    mean.rouge_l_r += r.rouge_l_r;
    mean.bleu1_smoothed = mean.bleu1_smoothed || r.bleu1_smoothed;
    mean.bleu4_smoothed = mean.bleu4_smoothed || r.bleu4_smoothed;
    if (r.embed_cos) {
      cos_sum += *r.embed_cos;
      ++cos_count;
    }
    if (r.embed_cos_r) {
      cos_r_sum += *r.embed_cos_r;
      ++cos_r_count;
    }
  }
  const double n = static_cast<double>(reports.size());
  mean.f1 /= n;
  mean.bleu1 /= n;
  mean.bleu4_bp /= n;
  mean.rouge_l /= n;
  mean.rouge_l_r /= n;
  if (cos_count > 0) mean.embed_cos = cos_sum / static_cast<double>(cos_count);
  if (cos_r_count > 0) mean.embed_cos_r = cos_r_sum / static_cast<double>(cos_r_count);
  return mean;
}

}  // namespace povpool
