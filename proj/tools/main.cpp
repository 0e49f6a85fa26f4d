#include "povpool/error.hpp"
#include "povpool/frame.hpp"
#include "povpool/interleave.hpp"
#include "povpool/losses.hpp"
#include "povpool/metrics.hpp"
#include "povpool/png_io.hpp"
#include "povpool/pooling.hpp"
#include "povpool/subtitles.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <deque>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string pooled_file_name(int second) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "pooled_%04d.png", second);
  return buf;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) povpool::fail(povpool::Errc::IoError, "cannot write " + path.string());
  out << content;
  if (!out) povpool::fail(povpool::Errc::IoError, "short write to " + path.string());
}

void write_json_file(const fs::path& path, const json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) povpool::fail(povpool::Errc::IoError, "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    povpool::fail(povpool::Errc::ParseError, path.string() + ": " + e.what());
  }
  return doc;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) povpool::fail(povpool::Errc::IoError, "cannot open " + path.string());
  std::vector<json> records;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::exception& e) {
      povpool::fail(povpool::Errc::ParseError,
                    path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::vector<std::string> read_option_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) povpool::fail(povpool::Errc::IoError, "cannot open " + path.string());
  std::vector<std::string> options;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) options.push_back(line);
  }
  return options;
}

int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

povpool::PoolingSpec make_pooling_spec(const std::string& op_name, int fps,
                                       std::optional<double> lambda,
                                       std::optional<double> alpha,
                                       std::optional<double> sigma) {
  const auto op = povpool::operator_from_name(op_name);
  if (!op) povpool::fail(povpool::Errc::BadParameter, "unknown operator '" + op_name + "'");

  povpool::PoolingSpec spec;
  spec.op = *op;
  spec.fps = fps;
  switch (*op) {
    case povpool::PoolOperator::WA:
    case povpool::PoolOperator::WAR:
      if (lambda) povpool::fail(povpool::Errc::BadParameter, "--lambda applies only to wae");
      if (alpha || sigma) {
        povpool::fail(povpool::Errc::BadParameter, "--alpha/--sigma apply only to bblf");
      }
      break;
    case povpool::PoolOperator::WAE:
      if (alpha || sigma) {
        povpool::fail(povpool::Errc::BadParameter, "--alpha/--sigma apply only to bblf");
      }
      spec.lambda = lambda ? *lambda : 1.0 / fps;
      break;
    case povpool::PoolOperator::BBLF:
      if (lambda) povpool::fail(povpool::Errc::BadParameter, "--lambda applies only to wae");
      spec.alpha = alpha ? *alpha : 0.5;
      spec.sigma = sigma ? *sigma : 2.0;
      break;
  }
  spec.validate();
  return spec;
}

struct PoolOutcome {
  povpool::ClipMeta meta;
  povpool::PoolingSpec spec;
  long seconds = 0;
  bool key_frame_written = false;
};

// Streams the clip once, pooling each second window and writing
// pooled_%04d.png in second order plus pooling.json. Windows are pooled on up
// to `jobs` worker threads; writes stay sequential so outputs are byte-stable
// regardless of the worker count.
PoolOutcome pool_clip(const fs::path& input, int fps_hint, const std::string& op_name,
                      std::optional<double> lambda, std::optional<double> alpha,
                      std::optional<double> sigma, const fs::path& out_dir, int jobs,
                      std::optional<int> question_second) {
  const povpool::ClipMeta meta = povpool::probe_source(input, fps_hint);
  const povpool::PoolingSpec spec = make_pooling_spec(op_name, meta.fps, lambda, alpha, sigma);
  const long seconds = meta.seconds();
  if (question_second && (*question_second < 1 || *question_second > seconds)) {
    povpool::fail(povpool::Errc::BadParameter,
                  "question second " + std::to_string(*question_second) +
                      " outside the clip's " + std::to_string(seconds) + " full seconds");
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) povpool::fail(povpool::Errc::IoError, "cannot create " + out_dir.string());

  const auto source = povpool::open_frame_source(input, meta);
  povpool::WindowStream stream(*source, meta);

  PoolOutcome outcome{meta, spec, seconds, false};
  const int workers = resolve_jobs(jobs);
  std::deque<std::future<povpool::PooledFrame>> pending;
  auto drain_one = [&] {
    povpool::PooledFrame pooled = pending.front().get();
    pending.pop_front();
    povpool::write_png(out_dir / pooled_file_name(pooled.second_index), pooled.image);
  };

  while (auto window = stream.next()) {
    if (question_second && window->second_index == *question_second) {
      povpool::write_png(out_dir / "keyframe.png", povpool::key_frame(*window).image);
      outcome.key_frame_written = true;
    }
    if (workers <= 1) {
      const povpool::PooledFrame pooled = povpool::pool_second(*window, spec);
      povpool::write_png(out_dir / pooled_file_name(pooled.second_index), pooled.image);
    } else {
      while (pending.size() >= static_cast<std::size_t>(workers)) drain_one();
      pending.push_back(std::async(
          std::launch::async,
          [w = std::move(*window), spec] { return povpool::pool_second(w, spec); }));
    }
  }
  while (!pending.empty()) drain_one();

  json pooling = povpool::pooling_spec_to_json(spec);
  pooling["seconds"] = seconds;
  pooling["source_frames"] = meta.total_frames;
  pooling["dropped_trailing"] = meta.dropped_trailing();
  write_json_file(out_dir / "pooling.json", pooling);
  return outcome;
}

// ---------------------------------------------------------------- pool ----

struct PoolArgs {
  std::string input;
  int fps = 0;
  std::string op = "wa";
  std::optional<double> lambda;
  std::optional<double> alpha;
  std::optional<double> sigma;
  std::string out;
  int jobs = 0;
};

void cmd_pool(const PoolArgs& args) {
  const PoolOutcome outcome = pool_clip(args.input, args.fps, args.op, args.lambda, args.alpha,
                                        args.sigma, args.out, args.jobs, std::nullopt);
  json summary{{"operator", povpool::operator_name(outcome.spec.op)},
               {"fps", outcome.meta.fps},
               {"seconds", outcome.seconds},
               {"dropped_trailing", outcome.meta.dropped_trailing()}};
  std::cout << summary.dump() << '\n';
}

// ---------------------------------------------------------- interleave ----

struct InterleaveArgs {
  std::string pooled_dir;
  std::string subs;
  std::string question;
  std::string key_frame;
  int s_max = 60;
  long m = 256;
  long sys_tokens = 128;
  std::string mode = "freeform";
  std::string options_file;
  std::string out;
};

struct InterleaveArtifacts {
  povpool::SubsamplePlan plan;
  povpool::BudgetReport budget;
};

InterleaveArtifacts emit_interleaved(const fs::path& out_dir, const fs::path& pooled_dir,
                                     const povpool::PoolingSpec& spec, int total_seconds,
                                     const std::vector<povpool::SubtitleCue>& cues,
                                     const std::string& question,
                                     const std::optional<std::string>& key_frame_ref,
                                     int s_max, long m, long sys_tokens,
                                     povpool::PromptMode mode,
                                     const std::vector<std::string>& options) {
  const povpool::SubsamplePlan plan = povpool::plan_subsample(total_seconds, s_max);

  std::vector<povpool::SecondText> texts;
  texts.reserve(plan.indices.size());
  for (int s : plan.indices) texts.push_back(povpool::second_text(cues, s));

  const bool same_dir = fs::exists(out_dir) && fs::exists(pooled_dir) &&
                        fs::equivalent(out_dir, pooled_dir);
  std::vector<povpool::PooledRef> refs;
  refs.reserve(plan.indices.size());
  for (int s : plan.indices) {
    const std::string name = pooled_file_name(s);
    if (!fs::exists(pooled_dir / name)) continue;  // build_manifest reports the gap
    refs.push_back({s, same_dir ? name
                                : fs::relative(pooled_dir / name, out_dir).generic_string()});
  }

  const povpool::InterleavedManifest manifest = povpool::build_manifest(
      plan, texts, refs, key_frame_ref, question, spec, mode);
  povpool::write_manifest(out_dir / "manifest.json", manifest);
  write_text_file(out_dir / "prompt.txt", povpool::build_prompt(manifest, options));

  povpool::BudgetParams params;
  params.m = m;
  params.n_sys_q = sys_tokens;
  params.text_counts.assign(static_cast<std::size_t>(total_seconds), 0);
  for (const povpool::SecondText& t : texts) {
    params.text_counts[static_cast<std::size_t>(t.second_index - 1)] =
        povpool::count_text_tokens(t.text);
  }
  const povpool::BudgetReport budget = povpool::estimate_budget(plan, params, spec.fps);
  write_json_file(out_dir / "budget.json", povpool::budget_report_to_json(budget));
  return {plan, budget};
}

void cmd_interleave(const InterleaveArgs& args) {
  const fs::path pooled_dir = args.pooled_dir;
  const json pooling = read_json_file(pooled_dir / "pooling.json");
  const povpool::PoolingSpec spec = povpool::pooling_spec_from_json(pooling);
  int seconds = 0;
  try {
    seconds = pooling.at("seconds").get<int>();
  } catch (const json::exception& e) {
    povpool::fail(povpool::Errc::ParseError, std::string("bad pooling.json: ") + e.what());
  }

  std::vector<povpool::SubtitleCue> cues;
  if (!args.subs.empty()) cues = povpool::parse_srt(args.subs);

  const fs::path out_dir = args.out;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) povpool::fail(povpool::Errc::IoError, "cannot create " + out_dir.string());

  std::optional<std::string> key_frame;
  if (!args.key_frame.empty()) key_frame = args.key_frame;
  std::vector<std::string> options;
  if (!args.options_file.empty()) options = read_option_lines(args.options_file);

  const InterleaveArtifacts made = emit_interleaved(
      out_dir, pooled_dir, spec, seconds, cues, args.question, key_frame, args.s_max, args.m,
      args.sys_tokens, povpool::prompt_mode_from_name(args.mode), options);

  json summary{{"entries", made.plan.k}, {"budget", povpool::budget_report_to_json(made.budget)}};
  std::cout << summary.dump() << '\n';
}

// -------------------------------------------------------------- budget ----

struct BudgetArgs {
  int seconds = -1;
  int s_max = 60;
  long m = 256;
  long sys_tokens = 128;
  int fps = 0;
  long text_per_sec = 0;
  std::string counts_file;
  std::string subs;
  std::string manifest;
  std::string out;
};

void cmd_budget(const BudgetArgs& args) {
  povpool::SubsamplePlan plan;
  povpool::BudgetParams params;
  params.m = args.m;
  params.n_sys_q = args.sys_tokens;
  int fps = args.fps;

  if (!args.manifest.empty()) {
    const povpool::InterleavedManifest manifest = povpool::read_manifest(args.manifest);
    int max_second = 0;
    for (const povpool::ManifestEntry& e : manifest.entries) {
      max_second = std::max(max_second, e.second);
    }
    plan.total_seconds = max_second;
    plan.s_max = manifest.s_max > 0 ? manifest.s_max : static_cast<int>(manifest.entries.size());
    plan.k = static_cast<int>(manifest.entries.size());
    params.text_counts.assign(static_cast<std::size_t>(max_second), 0);
    for (const povpool::ManifestEntry& e : manifest.entries) {
      plan.indices.push_back(e.second);
      params.text_counts[static_cast<std::size_t>(e.second - 1)] =
          povpool::count_text_tokens(e.text);
    }
    if (fps < 1) fps = manifest.pooling.fps;
  } else {
    if (args.seconds < 0) {
      povpool::fail(povpool::Errc::BadParameter, "--seconds (or --manifest) is required");
    }
    if (fps < 1) povpool::fail(povpool::Errc::BadParameter, "--fps is required");
    plan = povpool::plan_subsample(args.seconds, args.s_max);
    const auto total = static_cast<std::size_t>(args.seconds);
    if (!args.counts_file.empty()) {
      const json doc = read_json_file(args.counts_file);
      if (!doc.is_array()) {
        povpool::fail(povpool::Errc::ParseError,
                      args.counts_file + ": expected a JSON array of per-second counts");
      }
      try {
        params.text_counts = doc.get<std::vector<long>>();
      } catch (const json::exception& e) {
        povpool::fail(povpool::Errc::ParseError, args.counts_file + ": " + e.what());
      }
    } else if (!args.subs.empty()) {
      const std::vector<povpool::SubtitleCue> cues = povpool::parse_srt(args.subs);
      params.text_counts.resize(total, 0);
      for (int s = 1; s <= args.seconds; ++s) {
        params.text_counts[static_cast<std::size_t>(s - 1)] =
            povpool::count_text_tokens(povpool::second_text(cues, s).text);
      }
    } else {
      if (args.text_per_sec < 0) {
        povpool::fail(povpool::Errc::BadParameter, "--text-per-sec must be >= 0");
      }
      params.text_counts.assign(total, args.text_per_sec);
    }
  }

  const povpool::BudgetReport report = povpool::estimate_budget(plan, params, fps);
  const json doc = povpool::budget_report_to_json(report);
  if (!args.out.empty()) write_json_file(args.out, doc);
  std::cout << doc.dump() << '\n';
}

// -------------------------------------------------------- eval-metrics ----

struct EvalArgs {
  std::string pred;
  std::string ref;
  std::string embeds;
  std::string out;
  bool mcq_accuracy = false;
};

povpool::TwoTurnOutput record_output(const json& rec, const fs::path& path) {
  povpool::TwoTurnOutput out;
  try {
    if (rec.contains("answer") || rec.contains("reasoning")) {
      out.reasoning = rec.value("reasoning", std::string{});
      out.answer = rec.value("answer", std::string{});
    } else if (rec.contains("raw")) {
      out = povpool::split_two_turn(rec.at("raw").get<std::string>());
    } else {
      povpool::fail(povpool::Errc::ParseError,
                    path.string() + ": record needs \"answer\"/\"reasoning\" or \"raw\"");
    }
  } catch (const json::exception& e) {
    povpool::fail(povpool::Errc::ParseError, path.string() + ": " + e.what());
  }
  return out;
}

std::string record_id(const json& rec, const fs::path& path) {
  if (!rec.contains("id")) {
    povpool::fail(povpool::Errc::ParseError, path.string() + ": record without \"id\"");
  }
  const json& id = rec["id"];
  return id.is_string() ? id.get<std::string>() : id.dump();
}

Eigen::VectorXd vector_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty()) {
    povpool::fail(povpool::Errc::ParseError, where + ": expected a nonempty number array");
  }
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      povpool::fail(povpool::Errc::ParseError, where + ": expected a number array");
    }
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return v;
}

void cmd_eval_metrics(const EvalArgs& args) {
  const fs::path pred_path = args.pred;
  const fs::path ref_path = args.ref;

  std::unordered_map<std::string, povpool::TwoTurnOutput> refs;
  for (const json& rec : read_jsonl(ref_path)) {
    refs[record_id(rec, ref_path)] = record_output(rec, ref_path);
  }

  std::unordered_map<std::string, povpool::EmbedPair> embeds;
  if (!args.embeds.empty()) {
    const fs::path embeds_path = args.embeds;
    for (const json& rec : read_jsonl(embeds_path)) {
      const std::string id = record_id(rec, embeds_path);
      povpool::EmbedPair pair;
      try {
        pair.pred_vec = vector_from_json(rec.at("pred_vec"), embeds_path.string());
        pair.ref_vec = vector_from_json(rec.at("ref_vec"), embeds_path.string());
        if (rec.contains("pred_vec_r") && rec.contains("ref_vec_r")) {
          pair.pred_vec_r = vector_from_json(rec["pred_vec_r"], embeds_path.string());
          pair.ref_vec_r = vector_from_json(rec["ref_vec_r"], embeds_path.string());
        }
      } catch (const json::exception& e) {
        povpool::fail(povpool::Errc::ParseError, embeds_path.string() + ": " + e.what());
      }
      embeds.emplace(id, std::move(pair));
    }
  }

  std::vector<povpool::MetricReport> reports;
  long missing_markers = 0;
  long mcq_hits = 0;
  long count = 0;
  for (const json& rec : read_jsonl(pred_path)) {
    const std::string id = record_id(rec, pred_path);
    const auto ref = refs.find(id);
    if (ref == refs.end()) {
      povpool::fail(povpool::Errc::ParseError, "no reference record for id \"" + id + "\"");
    }
    const povpool::TwoTurnOutput pred = record_output(rec, pred_path);
    if (!pred.markers_found) ++missing_markers;
    std::optional<povpool::EmbedPair> pair;
    if (auto e = embeds.find(id); e != embeds.end()) pair = e->second;
    reports.push_back(povpool::score_record(pred, ref->second, pair));
    if (args.mcq_accuracy && povpool::mcq_match(pred.answer, ref->second.answer)) ++mcq_hits;
    ++count;
  }

  const povpool::MetricReport mean = povpool::average_reports(reports);
  json doc{{"records", count},
           {"f1", mean.f1},
           {"bleu1", mean.bleu1},
           {"bleu4_bp", mean.bleu4_bp},
           {"rouge_l", mean.rouge_l},
           {"rouge_l_r", mean.rouge_l_r},
           {"bleu1_smoothed", mean.bleu1_smoothed},
           {"bleu4_smoothed", mean.bleu4_smoothed},
           {"missing_markers", missing_markers}};
  if (mean.embed_cos) doc["embed_cos"] = *mean.embed_cos;
  if (mean.embed_cos_r) doc["embed_cos_r"] = *mean.embed_cos_r;
  if (args.mcq_accuracy) {
    doc["mcq_accuracy"] = count > 0 ? static_cast<double>(mcq_hits) / count : 0.0;
  }
  if (!args.out.empty()) write_json_file(args.out, doc);
  std::cout << doc.dump() << '\n';
}

// -------------------------------------------------------------- losses ----

struct LossArgs {
  std::string kind;
  std::string input;
  double beta = 0.1;
  bool breakdown = false;
  std::string out;
};

povpool::TokenLogProbs logprobs_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty()) {
    povpool::fail(povpool::Errc::ParseError, where + ": expected a nonempty number array");
  }
  povpool::TokenLogProbs t(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      povpool::fail(povpool::Errc::ParseError, where + ": expected a number array");
    }
    const double v = arr[i].get<double>();
    if (v > 0.0) {
      povpool::fail(povpool::Errc::BadParameter,
                    where + ": log-probabilities must be <= 0, got " + std::to_string(v));
    }
    t(static_cast<Eigen::Index>(i)) = v;
  }
  return t;
}

void cmd_losses(const LossArgs& args) {
  const fs::path input = args.input;
  const std::vector<json> records = read_jsonl(input);
  json doc{{"kind", args.kind}, {"records", records.size()}};
  json breakdown = json::array();

  if (args.kind == "sft") {
    std::vector<povpool::TokenLogProbs> batch;
    batch.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      const std::string where = input.string() + " record " + std::to_string(i);
      try {
        batch.push_back(logprobs_from_json(records[i].at("logp"), where));
      } catch (const json::exception& e) {
        povpool::fail(povpool::Errc::ParseError, where + ": " + e.what());
      }
    }
    doc["loss"] = povpool::sft_loss(batch);
    if (args.breakdown) {
      for (std::size_t i = 0; i < batch.size(); ++i) {
        breakdown.push_back({{"index", i}, {"nll", -povpool::seq_loglik(batch[i])}});
      }
    }
  } else {
    std::vector<povpool::PreferenceRecord> batch;
    batch.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      const std::string where = input.string() + " record " + std::to_string(i);
      povpool::PreferenceRecord rec;
      try {
        rec.policy_pos = logprobs_from_json(records[i].at("policy_pos"), where);
        rec.policy_neg = logprobs_from_json(records[i].at("policy_neg"), where);
        rec.ref_pos = logprobs_from_json(records[i].at("ref_pos"), where);
        rec.ref_neg = logprobs_from_json(records[i].at("ref_neg"), where);
        rec.beta = records[i].value("beta", args.beta);
      } catch (const json::exception& e) {
        povpool::fail(povpool::Errc::ParseError, where + ": " + e.what());
      }
      rec.validate();
      batch.push_back(std::move(rec));
    }
    doc["beta"] = args.beta;
    doc["loss"] = povpool::dpo_loss(batch);
    if (args.breakdown) {
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const double delta = povpool::dpo_delta(batch[i]);
        breakdown.push_back({{"index", i},
                             {"delta", delta},
                             {"loss", povpool::softplus(-batch[i].beta * delta)}});
      }
    }
  }

  if (args.breakdown) doc["per_record"] = breakdown;
  if (!args.out.empty()) write_json_file(args.out, doc);
  std::cout << doc.dump() << '\n';
}

// ----------------------------------------------------------------- run ----

struct RunArgs {
  std::string input;
  int fps = 0;
  std::string subs;
  std::string question;
  std::optional<int> question_second;
  std::string op = "wa";
  std::optional<double> lambda;
  std::optional<double> alpha;
  std::optional<double> sigma;
  int s_max = 60;
  long m = 256;
  long sys_tokens = 128;
  std::string mode = "freeform";
  std::string options_file;
  std::string out;
  int jobs = 0;
};

void cmd_run(const RunArgs& args) {
  const fs::path out_dir = args.out;
  const PoolOutcome pooled = pool_clip(args.input, args.fps, args.op, args.lambda, args.alpha,
                                       args.sigma, out_dir, args.jobs, args.question_second);

  const bool subs_missing = args.subs.empty();
  std::vector<povpool::SubtitleCue> cues;
  if (!subs_missing) cues = povpool::parse_srt(args.subs);

  std::optional<std::string> key_frame;
  if (pooled.key_frame_written) key_frame = "keyframe.png";
  std::vector<std::string> options;
  if (!args.options_file.empty()) options = read_option_lines(args.options_file);
  const povpool::PromptMode mode = povpool::prompt_mode_from_name(args.mode);

  const InterleaveArtifacts made = emit_interleaved(
      out_dir, out_dir, pooled.spec, static_cast<int>(pooled.seconds), cues, args.question,
      key_frame, args.s_max, args.m, args.sys_tokens, mode, options);

  json run;
  run["input"] = args.input;
  run["fps"] = pooled.meta.fps;
  run["pooling"] = povpool::pooling_spec_to_json(pooled.spec);
  run["seconds"] = pooled.seconds;
  run["source_frames"] = pooled.meta.total_frames;
  run["dropped_trailing"] = pooled.meta.dropped_trailing();
  run["subtitles"] = subs_missing ? json(nullptr) : json(args.subs);
  run["subtitles_missing"] = subs_missing;
  run["question"] = args.question;
  run["question_second"] = args.question_second ? json(*args.question_second) : json(nullptr);
  run["key_frame"] = key_frame ? json(*key_frame) : json(nullptr);
  run["s_max"] = args.s_max;
  run["m"] = args.m;
  run["sys_tokens"] = args.sys_tokens;
  run["mode"] = povpool::prompt_mode_name(mode);
  run["options_file"] = args.options_file.empty() ? json(nullptr) : json(args.options_file);
  run["options"] = options;
  run["entries"] = made.plan.k;
  run["budget"] = povpool::budget_report_to_json(made.budget);
  write_json_file(out_dir / "run.json", run);

  json summary{{"seconds", pooled.seconds},
               {"entries", made.plan.k},
               {"budget", povpool::budget_report_to_json(made.budget)}};
  std::cout << summary.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal pooling and prompt assembly for video question answering"};
  app.require_subcommand(1);

  PoolArgs pool_args;
  auto* pool = app.add_subcommand("pool", "Pool a clip into one image per second");
  pool->add_option("--input,-i", pool_args.input, "Frame directory or .rgb24 stream")
      ->required();
  pool->add_option("--fps", pool_args.fps, "Frames per second (required for directories)");
  pool->add_option("--op", pool_args.op, "Operator: wa, wae, war, bblf")
      ->default_str("wa");
  pool->add_option("--lambda", pool_args.lambda, "WAE decay rate (default 1/fps)");
  pool->add_option("--alpha", pool_args.alpha, "BBLF blend weight in [0,1] (default 0.5)");
  pool->add_option("--sigma", pool_args.sigma, "BBLF blur sigma > 0 (default 2.0)");
  pool->add_option("--out,-o", pool_args.out, "Output directory")->required();
  pool->add_option("--jobs,-j", pool_args.jobs, "Worker threads (0 = all cores)")
      ->envname("POVPOOL_JOBS");
  pool->callback([&] { cmd_pool(pool_args); });

  InterleaveArgs il_args;
  auto* il = app.add_subcommand("interleave",
                                "Build manifest.json, prompt.txt and budget.json from pooled "
                                "images and subtitles");
  il->add_option("--pooled", il_args.pooled_dir, "Directory with pooling.json + pooled PNGs")
      ->required();
  il->add_option("--subs", il_args.subs, "SubRip/WebVTT subtitle file");
  il->add_option("--question", il_args.question, "Question text");
  il->add_option("--key-frame", il_args.key_frame,
                 "Key-frame image reference recorded in the manifest");
  il->add_option("--s-max", il_args.s_max, "Max seconds kept")->default_str("60");
  il->add_option("--m", il_args.m, "Visual tokens per image")->default_str("256");
  il->add_option("--sys-tokens", il_args.sys_tokens, "System + question token count")
      ->default_str("128");
  il->add_option("--mode", il_args.mode, "freeform or mcq")->default_str("freeform");
  il->add_option("--options-file", il_args.options_file, "Answer options, one per line");
  il->add_option("--out,-o", il_args.out, "Output directory")->required();
  il->callback([&] { cmd_interleave(il_args); });

  BudgetArgs budget_args;
  auto* budget = app.add_subcommand("budget", "Token budget arithmetic");
  budget->add_option("--seconds", budget_args.seconds, "Clip length in full seconds");
  budget->add_option("--s-max", budget_args.s_max, "Max seconds kept")->default_str("60");
  budget->add_option("--m", budget_args.m, "Visual tokens per image")->default_str("256");
  budget->add_option("--sys-tokens", budget_args.sys_tokens, "System + question token count")
      ->default_str("128");
  budget->add_option("--fps", budget_args.fps, "Raw frame rate for the unpooled estimate");
  budget->add_option("--text-per-sec", budget_args.text_per_sec,
                     "Uniform subtitle tokens per second");
  budget->add_option("--counts-file", budget_args.counts_file,
                     "JSON array of per-second token counts");
  budget->add_option("--subs", budget_args.subs, "Count tokens from a subtitle file");
  budget->add_option("--manifest", budget_args.manifest,
                     "Take kept seconds and texts from a manifest.json");
  budget->add_option("--out,-o", budget_args.out, "Write the report here as well");
  budget->callback([&] { cmd_budget(budget_args); });

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval-metrics", "Score predictions against references");
  eval->add_option("--pred", eval_args.pred, "Predictions JSONL")->required();
  eval->add_option("--ref", eval_args.ref, "References JSONL")->required();
  eval->add_option("--embeds", eval_args.embeds, "Embedding vectors JSONL");
  eval->add_flag("--mcq-accuracy", eval_args.mcq_accuracy,
                 "Also report option-letter exact-match accuracy");
  eval->add_option("--out,-o", eval_args.out, "Write report.json here as well");
  eval->callback([&] { cmd_eval_metrics(eval_args); });

  LossArgs loss_args;
  auto* losses = app.add_subcommand("losses", "SFT / DPO loss numerics over a JSONL batch");
  losses->add_option("--kind", loss_args.kind, "sft or dpo")
      ->required()
      ->check(CLI::IsMember({"sft", "dpo"}));
  losses->add_option("--input", loss_args.input, "Records JSONL")->required();
  losses->add_option("--beta", loss_args.beta, "DPO beta for records without one")
      ->default_str("0.1");
  losses->add_flag("--breakdown", loss_args.breakdown, "Include per-record values");
  losses->add_option("--out,-o", loss_args.out, "Write the result here as well");
  losses->callback([&] { cmd_losses(loss_args); });

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "pool + align + interleave + budget in one pass");
  run->add_option("--input,-i", run_args.input, "Frame directory or .rgb24 stream")
      ->required();
  run->add_option("--fps", run_args.fps, "Frames per second (required for directories)");
  run->add_option("--subs", run_args.subs, "SubRip/WebVTT subtitle file");
  run->add_option("--question", run_args.question, "Question text");
  run->add_option("--question-second", run_args.question_second,
                  "Second whose last frame becomes keyframe.png");
  run->add_option("--op", run_args.op, "Operator: wa, wae, war, bblf")->default_str("wa");
  run->add_option("--lambda", run_args.lambda, "WAE decay rate (default 1/fps)");
  run->add_option("--alpha", run_args.alpha, "BBLF blend weight in [0,1] (default 0.5)");
  run->add_option("--sigma", run_args.sigma, "BBLF blur sigma > 0 (default 2.0)");
  run->add_option("--s-max", run_args.s_max, "Max seconds kept")->default_str("60");
  run->add_option("--m", run_args.m, "Visual tokens per image")->default_str("256");
  run->add_option("--sys-tokens", run_args.sys_tokens, "System + question token count")
      ->default_str("128");
  run->add_option("--mode", run_args.mode, "freeform or mcq")->default_str("freeform");
  run->add_option("--options-file", run_args.options_file, "Answer options, one per line");
  run->add_option("--out,-o", run_args.out, "Output directory")->required();
  run->add_option("--jobs,-j", run_args.jobs, "Worker threads (0 = all cores)")
      ->envname("POVPOOL_JOBS");
  run->callback([&] { cmd_run(run_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    const json err{{"error",
                    {{"code", "BadParameter"}, {"exit", 2}, {"message", e.what()}}}};
    std::cerr << err.dump() << '\n';
    return 2;
  } catch (const povpool::Error& e) {
    const int exit_code = povpool::errc_exit_code(e.code());
    const json err{{"error",
                    {{"code", povpool::errc_name(e.code())},
                     {"exit", exit_code},
                     {"message", e.what()}}}};
    std::cerr << err.dump() << '\n';
    return exit_code;
  } catch (const std::exception& e) {
    const json err{{"error", {{"code", "Internal"}, {"exit", 1}, {"message", e.what()}}}};
    std::cerr << err.dump() << '\n';
    return 1;
  }
  return 0;
}
