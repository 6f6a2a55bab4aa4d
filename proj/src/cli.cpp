#include "oobnet/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "oobnet/checkpoint.hpp"
#include "oobnet/data.hpp"
#include "oobnet/metrics.hpp"
#include "oobnet/pipeline.hpp"
#include "oobnet/train.hpp"

namespace oobnet::cli {

namespace fs = std::filesystem;

namespace {

struct TrainArgs {
  std::string data_dir;
  std::string split;
  std::string out;
  std::uint64_t seed = 0;
  int epochs = train::TrainConfig{}.epochs;
  int clip_len = train::TrainConfig{}.clip_len;
  double lr = train::TrainConfig{}.learning_rate;
  std::string preset = "desk";
};

struct EvalArgs {
  std::string checkpoint;
  std::string data_dir;
  std::string split;
  double threshold = 0.5;
  std::string report;
  int clip_len = train::TrainConfig{}.clip_len;
  std::vector<std::string> groups;
};

struct PredictArgs {
  std::string checkpoint;
  std::string video_dir;
  std::string out_trace;
  double threshold = 0.5;
  int clip_len = train::TrainConfig{}.clip_len;
};

struct RedactArgs {
  std::string trace;
  std::string checkpoint;
  std::string video_dir;
  std::string mode = "blur";
  std::int64_t margin = pipeline::RedactionPolicy{}.margin_frames;
  int blur_kernel = pipeline::RedactionPolicy{}.blur_kernel;
  std::string out;
  double threshold = 0.5;
  int clip_len = train::TrainConfig{}.clip_len;
};

struct StatsArgs {
  std::string data_dir;
  std::string split;
  std::string out;
};

void require_threshold(double t) {
  if (!(t > 0.0 && t < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "--threshold must lie strictly between 0 and 1");
  }
}

fs::path split_path(const std::string& data_dir, const std::string& split) {
  return split.empty() ? fs::path(data_dir) / "split.json" : fs::path(split);
}

std::string pct(std::optional<double> v) {
  return v ? metrics::format_fixed(*v * 100.0, 2) : std::string("n/a");
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  train::TrainConfig config;
  config.seed = a.seed;
  config.epochs = a.epochs;
  config.clip_len = a.clip_len;
  config.learning_rate = a.lr;
  config.validate();
  const ModelConfig model = ModelConfig::preset(a.preset);

  const auto spec = load_split_file(split_path(a.data_dir, a.split), a.data_dir);
  const DatasetSplit data = load_dataset(spec, model.input_size);
  out << "loaded " << data.train.size() << " training and " << data.validation.size()
      << " validation videos\n";

  fs::create_directories(a.out);
  const auto start = std::chrono::steady_clock::now();
  const auto result = train::train(model, data.train, data.validation, config,
                                   [&](const train::EpochLog& row) {
                                     char line[128];
                                     std::snprintf(line, sizeof(line),
                                                   "epoch %3d  loss %.5f  val_f1 %.4f%s\n",
                                                   row.epoch, row.train_loss, row.val_f1,
                                                   row.is_best ? "  *" : "");
                                     out << line << std::flush;
                                   });
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  save_checkpoint(result.best_params, model, fs::path(a.out) / "best.oobn");
  write_text_file(fs::path(a.out) / "train_log.csv", train::training_log_csv(result.log));
  out << "best epoch " << result.best_epoch << " (val F1 "
      << metrics::format_fixed(result.best_val_f1, 4) << "), " << metrics::format_fixed(secs, 1)
      << " s; wrote " << (fs::path(a.out) / "best.oobn").string() << "\n";
  return kExitOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  require_threshold(a.threshold);
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const auto spec = load_split_file(split_path(a.data_dir, a.split), a.data_dir);
  std::vector<std::string> wanted = a.groups;
  if (wanted.empty()) {
    for (const auto& g : spec.group_order) {
      if (g != "train") wanted.push_back(g);
    }
  }
  SplitSpec subset;
  for (const auto& g : wanted) {
    auto it = spec.groups.find(g);
    if (it == spec.groups.end()) {
      throw Error(ErrorCode::kInvalidArgument, "split has no group '" + g + "'");
    }
    subset.group_order.push_back(g);
    subset.groups[g] = it->second;
  }

  std::vector<std::pair<std::string, std::vector<AnnotatedSequence>>> loaded;
  const auto indexed = index_split(subset);
  for (const auto& group : subset.group_order) {
    const auto& videos = indexed.at(group);
    auto& seqs = loaded.emplace_back(group, std::vector<AnnotatedSequence>{}).second;
    for (const auto& v : videos) seqs.push_back(load_sequence(v, ckpt.config.input_size));
  }
  std::vector<std::pair<std::string, std::span<const AnnotatedSequence>>> groups;
  for (const auto& [name, seqs] : loaded) groups.emplace_back(name, seqs);

  const auto report = pipeline::evaluate(ckpt, groups, a.threshold, a.clip_len);
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  for (const auto& g : report.groups) {
    const auto& m = g.pooled.metrics;
    out << g.pooled.name << ": auc " << pct(m.roc_auc) << "  ap "
        << pct(m.average_precision) << "  f1 " << pct(m.f1) << "  precision "
        << pct(m.precision) << "  recall " << pct(m.recall) << "  (tp " << g.pooled.cm.tp
        << " fp " << g.pooled.cm.fp << " tn " << g.pooled.cm.tn << " fn " << g.pooled.cm.fn
        << ")\n";
  }
  out << "false negatives: " << report.fn_count << " of " << report.total_frames
      << " frames (" << pct(report.fn_rate) << "%)\n";
  const std::string json = pipeline::report_json(report);
  if (a.report.empty()) {
    out << json;
  } else {
    write_text_file(a.report, json);
  }
  return kExitOk;
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  require_threshold(a.threshold);
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const VideoRecord video = index_video(a.video_dir, "", false);
  const auto seq = load_sequence(video, ckpt.config.input_size);
  const auto trace = pipeline::predict_video(ckpt, seq, a.threshold, a.clip_len);
  pipeline::write_trace(trace, a.out_trace);
  const auto positives = std::count(trace.labels.begin(), trace.labels.end(), 1);
  out << trace.video_id << ": " << trace.size() << " frames, " << positives
      << " out-of-body at threshold " << a.threshold << "\n";
  return kExitOk;
}

int cmd_redact(const RedactArgs& a, std::ostream& out) {
  pipeline::RedactionPolicy policy;
  policy.mode = pipeline::parse_redaction_mode(a.mode);
  policy.margin_frames = a.margin;
  policy.blur_kernel = a.blur_kernel;
  policy.validate();
  require_threshold(a.threshold);

  const VideoRecord video = index_video(a.video_dir, "", false);
  pipeline::PredictionTrace trace;
  if (!a.trace.empty()) {
    trace = pipeline::read_trace(a.trace, video.manifest.video_id);
  } else {
    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    trace = pipeline::predict_video(ckpt, load_sequence(video, ckpt.config.input_size),
                                    a.threshold, a.clip_len);
  }
  if (trace.size() != video.sampled.size()) {
    throw Error(ErrorCode::kCountMismatch,
                "trace has " + std::to_string(trace.size()) + " frames but the video has " +
                    std::to_string(video.sampled.size()));
  }
  const auto segments = pipeline::segments_from_trace(trace, policy);
  const auto summary = pipeline::apply_redaction(video.sampled_rows(), video.dir, segments,
                                                 policy, a.out);
  out << video.manifest.video_id << ": " << segments.size() << " segment(s), "
      << summary.frames_redacted << " frame(s) " << pipeline::to_string(policy.mode)
      << (policy.mode == pipeline::RedactionMode::kDelete ? "" : "ed") << ", "
      << summary.frames_deleted << " deleted, " << summary.frames_out << " written to "
      << a.out << "\n";
  return kExitOk;
}

int cmd_stats(const StatsArgs& a, std::ostream& out) {
  const auto spec = load_split_file(split_path(a.data_dir, a.split), a.data_dir);
  std::vector<GroupStats> rows;
  const auto indexed = index_split(spec);
  for (const auto& group : spec.group_order) {
    const auto& videos = indexed.at(group);
    std::vector<SequenceSummary> all;
    std::vector<std::string> centers;
    for (const auto& v : videos) {
      all.push_back(summarize(v.manifest.center_id, v.labels));
      if (std::find(centers.begin(), centers.end(), v.manifest.center_id) == centers.end()) {
        centers.push_back(v.manifest.center_id);
      }
    }
    rows.push_back(dataset_stats(group, all));
    if (centers.size() > 1) {
      for (const auto& c : centers) {
        std::vector<SequenceSummary> mine;
        for (const auto& s : all) {
          if (s.center_id == c) mine.push_back(s);
        }
        rows.push_back(dataset_stats(group + "/" + c, mine));
      }
    }
  }
  const std::string csv = stats_csv(rows);
  if (a.out.empty()) {
    out << csv;
  } else {
    write_text_file(a.out, csv);
    out << "wrote " << a.out << "\n";
  }
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::kUsage:
      return kExitUsage;
    case ErrorCategory::kNumeric:
      return kExitNumeric;
    case ErrorCategory::kData:
      break;
  }
  return kExitData;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Out-of-body frame detection and redaction for endoscopic video", "oobnet"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a split of labeled videos");
  train_cmd->add_option("--data-dir", ta.data_dir, "Dataset root")->required();
  train_cmd->add_option("--split", ta.split, "Split JSON (default <data-dir>/split.json)");
  train_cmd->add_option("--out", ta.out, "Output directory")->required();
  train_cmd->add_option("--seed", ta.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--epochs", ta.epochs, "Training epochs")->capture_default_str();
  train_cmd->add_option("--clip-len", ta.clip_len, "Frames per clip")->capture_default_str();
  train_cmd->add_option("--lr", ta.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--preset", ta.preset, "Model size: desk, tiny, mobilenet_v2")
      ->capture_default_str();

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint per video, center and group");
  eval_cmd->add_option("--checkpoint", ea.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--data-dir", ea.data_dir, "Dataset root")->required();
  eval_cmd->add_option("--split", ea.split, "Split JSON (default <data-dir>/split.json)");
  eval_cmd->add_option("--threshold", ea.threshold, "Decision threshold in (0, 1)")
      ->capture_default_str();
  eval_cmd->add_option("--report", ea.report, "Write the JSON report here instead of stdout");
  eval_cmd->add_option("--clip-len", ea.clip_len, "Frames per inference clip")
      ->capture_default_str();
  eval_cmd->add_option("--groups", ea.groups, "Groups to evaluate (default: all but train)");

  PredictArgs pa;
  auto* predict_cmd = app.add_subcommand("predict", "Write a per-frame prediction trace");
  predict_cmd->add_option("--checkpoint", pa.checkpoint, "Checkpoint file")->required();
  predict_cmd->add_option("--video-dir", pa.video_dir, "Video directory")->required();
  predict_cmd->add_option("--out-trace", pa.out_trace, "Trace CSV to write")->required();
  predict_cmd->add_option("--threshold", pa.threshold, "Decision threshold in (0, 1)")
      ->capture_default_str();
  predict_cmd->add_option("--clip-len", pa.clip_len, "Frames per inference clip")
      ->capture_default_str();

  RedactArgs ra;
  auto* redact_cmd = app.add_subcommand("redact", "Black out, blur or delete out-of-body frames");
  auto* trace_opt = redact_cmd->add_option("--trace", ra.trace, "Prediction trace CSV");
  auto* ckpt_opt = redact_cmd->add_option("--checkpoint", ra.checkpoint,
                                          "Predict with this checkpoint instead of a trace");
  trace_opt->excludes(ckpt_opt);
  redact_cmd->add_option("--video-dir", ra.video_dir, "Video directory")->required();
  redact_cmd->add_option("--mode", ra.mode, "blackout, blur or delete")
      ->capture_default_str()
      ->check(CLI::IsMember({"blackout", "blur", "delete"}));
  redact_cmd->add_option("--margin", ra.margin, "Extra frames on each side of a segment")
      ->capture_default_str();
  redact_cmd->add_option("--blur-kernel", ra.blur_kernel, "Odd box size, at least 9")
      ->capture_default_str();
  redact_cmd->add_option("--out", ra.out, "Output directory")->required();
  redact_cmd->add_option("--threshold", ra.threshold, "Threshold when predicting")
      ->capture_default_str();
  redact_cmd->add_option("--clip-len", ra.clip_len, "Frames per inference clip")
      ->capture_default_str();

  StatsArgs sa;
  auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics as CSV");
  stats_cmd->add_option("--data-dir", sa.data_dir, "Dataset root")->required();
  stats_cmd->add_option("--split", sa.split, "Split JSON (default <data-dir>/split.json)");
  stats_cmd->add_option("--out", sa.out, "CSV file to write (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (redact_cmd->parsed() && ra.trace.empty() && ra.checkpoint.empty()) {
      throw CLI::RequiredError("redact needs --trace or --checkpoint");
    }
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (!args.empty()) err << "error: " << e.what() << "\n";
    const CLI::App* shown = &app;
    for (const auto* sub : app.get_subcommands()) shown = sub;
    err << shown->help();
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(ta, out);
    if (eval_cmd->parsed()) return cmd_eval(ea, out, err);
    if (predict_cmd->parsed()) return cmd_predict(pa, out);
    if (redact_cmd->parsed()) return cmd_redact(ra, out);
    if (stats_cmd->parsed()) return cmd_stats(sa, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace oobnet::cli
