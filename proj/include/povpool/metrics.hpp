#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace povpool {

/// The two spans elicited from a model response. `markers_found` is false on
/// the degraded path where one or both markers were missing and the whole
/// string became the answer.
struct TwoTurnOutput {
  std::string reasoning;
  std::string answer;
  bool markers_found = true;
};

/// Case-insensitive search for the last "Reasoning:" before the last
/// "Final Answer:". Missing markers yield empty reasoning and the whole
/// trimmed string as the answer, flagged via `markers_found`.
TwoTurnOutput split_two_turn(std::string_view raw);

/// Lowercase, strip punctuation characters, collapse whitespace.
std::string normalize_text(std::string_view text);

/// normalize_text, then split on whitespace.
std::vector<std::string> tokenize(std::string_view text);

/// Bag-of-tokens F1 over normalized tokens. Both empty -> 1.0, one empty -> 0.0.
double token_f1(std::string_view pred, std::string_view ref);

/// Geometric mean of modified n-gram precisions up to max_n with brevity
/// penalty exp(1 - r/c) when c < r. Zero precisions are replaced by 1/(2c);
/// `smoothed` (when given) reports whether that happened.
double bleu(std::string_view pred, std::string_view ref, int max_n, bool* smoothed = nullptr);

/// Length of the longest common subsequence of two token sequences.
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// LCS-based F-measure with beta=1 from the three counts alone.
/// Both lengths zero -> 1.0; lcs zero -> 0.0.
double lcs_f_measure(std::size_t len_pred, std::size_t len_ref, std::size_t lcs);

/// ROUGE-L: P = LCS/|pred|, R = LCS/|ref|, F = 2PR/(P+R).
double rouge_l(std::string_view pred, std::string_view ref);

/// u.v / (|u||v|). Dimensions must match and both norms must be nonzero.
double embed_cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Option letter of a multiple-choice answer: the first normalized token when
/// it is a single letter, e.g. "(b) the hallway" -> 'b'.
std::optional<char> mcq_letter(std::string_view answer);

/// Option-letter exact match of two answers.
bool mcq_match(std::string_view pred_answer, std::string_view ref_answer);

/// Embedding vectors for one record; the reasoning pair is optional.
struct EmbedPair {
  Eigen::VectorXd pred_vec;
  Eigen::VectorXd ref_vec;
  std::optional<Eigen::VectorXd> pred_vec_r;
  std::optional<Eigen::VectorXd> ref_vec_r;
};

struct MetricReport {
  double f1 = 0.0;
  double bleu1 = 0.0;
  double bleu4_bp = 0.0;
  double rouge_l = 0.0;
  std::optional<double> embed_cos;
  double rouge_l_r = 0.0;
  std::optional<double> embed_cos_r;
  bool bleu1_smoothed = false;
  bool bleu4_smoothed = false;
};

/// Scores the answer span with every lexical metric and the reasoning span
/// with the -R variants; embedding cosines appear only when vectors are
/// supplied. Cosines are clamped at 0 so the report stays within [0, 1].
MetricReport score_record(const TwoTurnOutput& pred, const TwoTurnOutput& ref,
                          const std::optional<EmbedPair>& embeds = std::nullopt);

/// Field-wise mean; optional fields average over the records that have them.
MetricReport average_reports(const std::vector<MetricReport>& reports);

}  // namespace povpool
