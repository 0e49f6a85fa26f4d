#include "povpool/interleave.hpp"

#include "povpool/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <unordered_map>

namespace povpool {

SubsamplePlan plan_subsample(int total_seconds, int s_max) {
  if (total_seconds < 0) fail(Errc::BadParameter, "total seconds must be >= 0");
  if (s_max < 1) fail(Errc::BadParameter, "s-max must be >= 1");

  SubsamplePlan plan;
  plan.total_seconds = total_seconds;
  plan.s_max = s_max;
  plan.k = std::min(total_seconds, s_max);
  plan.indices.reserve(plan.k);
  const long S = total_seconds;
  const long K = plan.k;
  for (long k = 1; k <= K; ++k) {
    long s = (2 * k - 1) * S / (2 * K) + 1;
    s = std::clamp(s, 1L, S);
    plan.indices.push_back(static_cast<int>(s));
  }
  return plan;
}

std::string prompt_mode_name(PromptMode mode) {
  return mode == PromptMode::Mcq ? "mcq" : "freeform";
}

PromptMode prompt_mode_from_name(const std::string& name) {
  if (name == "freeform") return PromptMode::Freeform;
  if (name == "mcq") return PromptMode::Mcq;
  fail(Errc::BadParameter, "unknown prompt mode '" + name + "'");
}

std::string make_system_prompt(bool has_key_frame, PromptMode mode) {
  std::string prompt =
      "You are a careful assistant that answers questions about a video. "
      "The video is presented as one pooled image per second, each preceded "
      "by the subtitle text heard during that second. First think through "
      "the evidence after \"Reasoning:\", then give a short answer after "
      "\"Final Answer:\".";
  if (mode == PromptMode::Mcq) {
    prompt += " Answer with the letter of the correct option.";
  }
  if (has_key_frame) {
    prompt +=
        " The frame at <image:0> shows the exact moment the question was "
        "asked; use it to ground your answer.";
  }
  return prompt;
}

InterleavedManifest build_manifest(const SubsamplePlan& plan,
                                   const std::vector<SecondText>& texts,
                                   const std::vector<PooledRef>& pooled,
                                   const std::optional<std::string>& key_frame,
                                   const std::string& question,
                                   const PoolingSpec& pooling,
                                   PromptMode mode) {
  std::unordered_map<int, const std::string*> text_by_second;
  for (const SecondText& t : texts) text_by_second.emplace(t.second_index, &t.text);
  std::unordered_map<int, const std::string*> image_by_second;
  for (const PooledRef& p : pooled) image_by_second.emplace(p.second, &p.image);

  InterleavedManifest manifest;
  manifest.question = question;
  manifest.system_prompt = make_system_prompt(key_frame.has_value(), mode);
  manifest.key_frame = key_frame;
  manifest.pooling = pooling;
  manifest.s_max = plan.s_max;
  manifest.entries.reserve(plan.indices.size());
  for (int second : plan.indices) {
    auto image = image_by_second.find(second);
    if (image == image_by_second.end()) {
      fail(Errc::IncompletePipeline,
           "no pooled image for planned second " + std::to_string(second));
    }
    ManifestEntry entry;
    entry.second = second;
    if (auto text = text_by_second.find(second); text != text_by_second.end()) {
      entry.text = *text->second;
    }
    entry.image = *image->second;
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

std::string build_prompt(const InterleavedManifest& manifest,
                         const std::vector<std::string>& options) {
  if (manifest.question.empty()) fail(Errc::PromptError, "question is empty");
  if (options.size() > 26) fail(Errc::PromptError, "more than 26 options");

  std::string prompt = manifest.system_prompt;
  prompt += "\n\nQuestion: ";
  prompt += manifest.question;
  prompt += '\n';
  if (!options.empty()) {
    prompt += "\nOptions:\n";
    for (std::size_t i = 0; i < options.size(); ++i) {
      prompt += static_cast<char>('a' + i);
      prompt += ") ";
      prompt += options[i];
      prompt += '\n';
    }
  }
  prompt += '\n';
  for (std::size_t k = 0; k < manifest.entries.size(); ++k) {
    const ManifestEntry& entry = manifest.entries[k];
    if (!entry.text.empty()) {
      prompt += entry.text;
      prompt += '\n';
    }
    prompt += "<image:" + std::to_string(k + 1) + ">\n";
  }
  prompt += '\n';
  prompt += kReasoningElicitor;
  prompt += "\n\n";
  prompt += kAnswerElicitor;
  prompt += '\n';
  return prompt;
}

void BudgetParams::validate() const {
  if (m < 1) fail(Errc::BadParameter, "m must be >= 1");
  if (n_sys_q < 0) fail(Errc::BadParameter, "sys-tokens must be >= 0");
}

BudgetReport estimate_budget(const SubsamplePlan& plan, const BudgetParams& params, int fps) {
  params.validate();
  if (fps < 1) fail(Errc::BadParameter, "fps must be >= 1");

  BudgetReport report;
  report.k = plan.k;
  report.fps = fps;
  report.m = params.m;
  report.n_sys_q = params.n_sys_q;
  for (int second : plan.indices) {
    std::size_t at = static_cast<std::size_t>(second - 1);
    if (at < params.text_counts.size()) report.text_total += params.text_counts[at];
  }
  report.pooled = params.n_sys_q + report.text_total + static_cast<long>(plan.k) * params.m;
  report.unpooled = params.n_sys_q + report.text_total +
                    static_cast<long>(plan.k) * fps * params.m;
  report.ratio = report.pooled > 0
                     ? static_cast<double>(report.unpooled) / static_cast<double>(report.pooled)
                     : 1.0;
  report.ratio_rounded = std::lround(report.ratio);
  return report;
}

long count_text_tokens(std::string_view text) {
  long count = 0;
  bool in_token = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

nlohmann::json pooling_spec_to_json(const PoolingSpec& spec) {
  nlohmann::json js;
  js["operator"] = operator_name(spec.op);
  js["fps"] = spec.fps;
  if (spec.lambda) js["lambda"] = *spec.lambda;
  if (spec.alpha) js["alpha"] = *spec.alpha;
  if (spec.sigma) js["sigma"] = *spec.sigma;
  return js;
}

PoolingSpec pooling_spec_from_json(const nlohmann::json& js) {
  PoolingSpec spec;
  try {
    const std::string name = js.at("operator").get<std::string>();
    const auto op = operator_from_name(name);
    if (!op) fail(Errc::ParseError, "unknown operator '" + name + "'");
    spec.op = *op;
    spec.fps = js.at("fps").get<int>();
    if (js.contains("lambda")) spec.lambda = js["lambda"].get<double>();
    if (js.contains("alpha")) spec.alpha = js["alpha"].get<double>();
    if (js.contains("sigma")) spec.sigma = js["sigma"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("bad pooling spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

nlohmann::json manifest_to_json(const InterleavedManifest& manifest) {
  nlohmann::json js;
  js["question"] = manifest.question;
  js["system_prompt"] = manifest.system_prompt;
  js["key_frame"] = manifest.key_frame ? nlohmann::json(*manifest.key_frame)
                                       : nlohmann::json(nullptr);
  js["pooling"] = pooling_spec_to_json(manifest.pooling);
  js["pooling"]["s_max"] = manifest.s_max;
  js["pooling"]["subsample"] = "midpoint";
  js["entries"] = nlohmann::json::array();
  for (const ManifestEntry& entry : manifest.entries) {
    js["entries"].push_back({{"second", entry.second},
                             {"text", entry.text},
                             {"image", entry.image}});
  }
  return js;
}

InterleavedManifest manifest_from_json(const nlohmann::json& js) {
  InterleavedManifest manifest;
  try {
    manifest.question = js.at("question").get<std::string>();
    manifest.system_prompt = js.at("system_prompt").get<std::string>();
    if (js.contains("key_frame") && !js["key_frame"].is_null()) {
      manifest.key_frame = js["key_frame"].get<std::string>();
    }
    manifest.pooling = pooling_spec_from_json(js.at("pooling"));
    manifest.s_max = js.at("pooling").value("s_max", 0);
    for (const nlohmann::json& e : js.at("entries")) {
      ManifestEntry entry;
      entry.second = e.at("second").get<int>();
      entry.text = e.at("text").get<std::string>();
      entry.image = e.at("image").get<std::string>();
      manifest.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("bad manifest: ") + e.what());
  }
  return manifest;
}

void write_manifest(const std::filesystem::path& path, const InterleavedManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path.string());
  out << manifest_to_json(manifest).dump(2) << '\n';
  if (!out) fail(Errc::IoError, "short write to " + path.string());
}

InterleavedManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + path.string());
  nlohmann::json js;
  try {
    in >> js;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, path.string() + ": " + e.what());
  }
  return manifest_from_json(js);
}

nlohmann::json budget_report_to_json(const BudgetReport& report) {
  return nlohmann::json{{"k", report.k},
                        {"fps", report.fps},
                        {"m", report.m},
                        {"n_sys_q", report.n_sys_q},
                        {"text_total", report.text_total},
                        {"pooled", report.pooled},
                        {"unpooled", report.unpooled},
                        {"ratio", report.ratio},
                        {"ratio_rounded", report.ratio_rounded}};
}

}  // namespace povpool
