#pragma once

#include "povpool/pooling.hpp"
#include "povpool/subtitles.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace povpool {

/// Uniform subsample of seconds under a context cap.
///
/// K = min(S, S_max) seconds are kept, one per stratum, using the midpoint
/// rule s_k = floor((k - 1/2) * S / K) + 1. When S <= S_max the plan is the
/// identity 1..S.
struct SubsamplePlan {
  int total_seconds = 0;  ///< S
  int s_max = 0;
  int k = 0;                 ///< min(S, S_max)
  std::vector<int> indices;  ///< strictly increasing seconds in [1, S]
};

SubsamplePlan plan_subsample(int total_seconds, int s_max);

/// Reference to one pooled image on disk, relative to the manifest.
struct PooledRef {
  int second = 0;
  std::string image;
};

/// One interleaved pair: the subtitle text for a kept second followed by the
/// pooled image for that second.
struct ManifestEntry {
  int second = 0;
  std::string text;
  std::string image;

  bool operator==(const ManifestEntry&) const = default;
};

enum class PromptMode { Freeform, Mcq };

PromptMode prompt_mode_from_name(const std::string& name);
std::string prompt_mode_name(PromptMode mode);

/// Ordered alternation of per-second subtitle text and pooled-image
/// references, plus the question scaffold around it.
struct InterleavedManifest {
  std::string question;
  std::string system_prompt;
  std::optional<std::string> key_frame;
  PoolingSpec pooling;
  int s_max = 0;
  std::vector<ManifestEntry> entries;
};

/// System prompt used in every manifest. Mentions the key frame (placeholder
/// `<image:0>`) only when one is present; MCQ mode adds the answer-with-letter
/// instruction.
std::string make_system_prompt(bool has_key_frame, PromptMode mode);

/// Assembles the manifest for a subsample plan. `texts` is looked up by
/// second index (a missing second contributes empty text); every planned
/// second must have a pooled reference or the pipeline is incomplete.
InterleavedManifest build_manifest(const SubsamplePlan& plan,
                                   const std::vector<SecondText>& texts,
                                   const std::vector<PooledRef>& pooled,
                                   const std::optional<std::string>& key_frame,
                                   const std::string& question,
                                   const PoolingSpec& pooling,
                                   PromptMode mode = PromptMode::Freeform);

/// Renders the prompt text: system prompt, question (plus options block when
/// `options` is nonempty, labeled a, b, c, ...), the interleaved text and
/// `<image:k>` placeholders in entry order (k = 1..K; `<image:0>` is the key
/// frame), and the two elicitors.
std::string build_prompt(const InterleavedManifest& manifest,
                         const std::vector<std::string>& options = {});

inline constexpr const char* kReasoningElicitor = "Reasoning:";
inline constexpr const char* kAnswerElicitor = "Final Answer:";

/// Inputs to the context-length estimate.
struct BudgetParams {
  long m = 256;                  ///< visual tokens per pooled image
  long n_sys_q = 128;            ///< system + question tokens
  std::vector<long> text_counts; ///< per-second subtitle token counts, [s-1]

  void validate() const;
};

struct BudgetReport {
  int k = 0;
  int fps = 0;
  long m = 0;
  long n_sys_q = 0;
  long text_total = 0;  ///< sum of text_counts over kept seconds
  long pooled = 0;      ///< n_sys_q + sum_k (text_counts[s_k] + m)
  long unpooled = 0;    ///< n_sys_q + sum_k text_counts[s_k] + K*f*m
  double ratio = 0.0;   ///< unpooled / pooled
  long ratio_rounded = 0;
};

BudgetReport estimate_budget(const SubsamplePlan& plan, const BudgetParams& params, int fps);

/// Whitespace-delimited token count, the default per-second |u| proxy.
long count_text_tokens(std::string_view text);

nlohmann::json pooling_spec_to_json(const PoolingSpec& spec);
PoolingSpec pooling_spec_from_json(const nlohmann::json& js);

nlohmann::json manifest_to_json(const InterleavedManifest& manifest);
InterleavedManifest manifest_from_json(const nlohmann::json& js);

void write_manifest(const std::filesystem::path& path, const InterleavedManifest& manifest);
InterleavedManifest read_manifest(const std::filesystem::path& path);

nlohmann::json budget_report_to_json(const BudgetReport& report);

}  // namespace povpool
