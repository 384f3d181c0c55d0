#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <thread>

#include "exmo/autoencoder.hpp"
#include "exmo/data.hpp"
#include "exmo/errors.hpp"
#include "exmo/evaluation.hpp"
#include "exmo/gradcheck.hpp"
#include "exmo/model_io.hpp"
#include "exmo/parallel.hpp"
#include "exmo/scoring.hpp"
#include "exmo/ssq.hpp"
#include "exmo/synthcam.hpp"
#include "exmo/text_format.hpp"
#include "exmo/train.hpp"

namespace exmo {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void setup_logging() {
  auto logger = spdlog::get("exmo");
  if (!logger) {
    logger = spdlog::stderr_color_st("exmo");
    logger->set_pattern("[%l] %v");
  }
  spdlog::set_default_logger(logger);
  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("EXMO_LOG")) {
    level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; only honour it when asked for.
    if (level == spdlog::level::off && std::string(env) != "off") level = spdlog::level::info;
  }
  spdlog::set_level(level);
}

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// One subcommand's settings: defaults, overlaid by a JSON config file, then
/// by flags that were actually given on the command line.
class Settings {
 public:
  Settings(CLI::App* cmd, json defaults) : cmd_(cmd), merged_(std::move(defaults)) {
    cmd_->add_option("--config", config_path_, "JSON file with settings (flags take precedence)");
    add<std::uint64_t>("--seed", "seed", "Base random seed");
    add<int>("--threads", "threads", "Worker threads (results do not depend on this)");
  }

  template <typename T>
  CLI::Option* add(const std::string& flag, const std::string& key, const std::string& help) {
    if (!merged_.contains(key)) throw std::logic_error("no default for " + key);
    return cmd_->add_option_function<T>(flag, [this, key](const T& v) { given_[key] = v; }, help);
  }

  CLI::Option* add_flag(const std::string& flag, const std::string& key, const std::string& help) {
    return cmd_->add_flag_function(flag, [this, key](std::int64_t n) { given_[key] = n > 0; }, help);
  }

  /// Applies the config file and flags. Unknown config keys are usage errors.
  const json& resolve() {
    if (!config_path_.empty()) {
      std::ifstream in(config_path_);
      if (!in) throw ArgumentError("cannot read config file " + config_path_);
      json file;
      try {
        file = json::parse(in);
      } catch (const json::exception& e) {
        throw ArgumentError("config file " + config_path_ + ": " + e.what());
      }
      if (!file.is_object()) throw ArgumentError("config file " + config_path_ + " must hold a JSON object");
      for (auto it = file.begin(); it != file.end(); ++it) {
        if (!merged_.contains(it.key())) throw ArgumentError("config file: unknown setting '" + it.key() + "'");
        merged_[it.key()] = it.value();
      }
    }
    for (auto it = given_.begin(); it != given_.end(); ++it) merged_[it.key()] = it.value();
    set_thread_count(get<int>("threads"));
    return merged_;
  }

  template <typename T>
  T get(const std::string& key) const {
    try {
      return merged_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ArgumentError("setting '" + key + "': " + e.what());
    }
  }

  fs::path path(const std::string& key, bool required = true) const {
    const auto s = get<std::string>(key);
    if (required && s.empty()) throw ArgumentError("--" + dashed(key) + " is required");
    return s;
  }

  std::string dump() const { return merged_.dump(2) + "\n"; }

 private:
  static std::string dashed(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
  }

  CLI::App* cmd_;
  json merged_;
  json given_ = json::object();
  std::string config_path_;
};

json common_defaults(json extra) {
  json j = {{"seed", 0}, {"threads", default_threads()}, {"out", ""}};
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

fs::path sidecar(const fs::path& model_path, const std::string& suffix) {
  return model_path.parent_path() / (model_path.stem().string() + suffix);
}

// ---------------------------------------------------------------- train

struct TrainCommand {
  Settings settings;

  explicit TrainCommand(CLI::App* cmd)
      : settings(cmd, common_defaults({{"manifest", ""},
                                       {"base_channels", 16},
                                       {"frame_size", kFrameSize},
                                       {"epochs", 20},
                                       {"finetune_epochs", 20},
                                       {"batch_size", 8},
                                       {"max_steps", -1},
                                       {"learning_rate", 1e-3},
                                       {"beta1", 0.9},
                                       {"beta2", 0.999},
                                       {"epsilon", 1e-8},
                                       {"window_step", 1},
                                       {"strides", {1, 2, 3}},
                                       {"checkpoint_every", 0},
                                       {"per_stack_crop", false}})) {
    settings.add<std::string>("--manifest", "manifest", "Dataset manifest (JSON list of {path, role, label})");
    settings.add<std::string>("--out", "out", "Model file to write; sidecars go next to it");
    settings.add<int>("--base-channels", "base_channels", "Channels of the first encoder stage");
    settings.add<int>("--frame-size", "frame_size", "Square input size (multiple of 32)");
    settings.add<int>("--epochs", "epochs", "Pre-training epochs");
    settings.add<int>("--finetune-epochs", "finetune_epochs", "Fine-tuning epochs");
    settings.add<int>("--batch-size", "batch_size", "Stacks per update");
    settings.add<std::int64_t>("--max-steps", "max_steps", "Cap on updates per phase (-1: none)");
    settings.add<double>("--lr", "learning_rate", "Adam learning rate");
    settings.add<double>("--beta1", "beta1", "Adam first-moment decay");
    settings.add<double>("--beta2", "beta2", "Adam second-moment decay");
    settings.add<double>("--epsilon", "epsilon", "Adam epsilon");
    settings.add<int>("--window-step", "window_step", "Frames between consecutive training stacks");
    settings.add<std::vector<int>>("--strides", "strides", "Temporal augmentation strides");
    settings.add<std::int64_t>("--checkpoint-every", "checkpoint_every", "Checkpoint period in steps (0: off)");
    settings.add_flag("--per-stack-crop", "per_stack_crop", "Draw a fresh fine-tuning crop for every stack");
  }

  std::unique_ptr<StackSource> finetune_source(const std::vector<ManifestEntry>& entries,
                                               const PrepareOptions& prep, int step) const {
    if (!settings.get<bool>("per_stack_crop")) {
      auto ds = std::make_unique<StackDataset>(prep.frame_size);
      for (auto& seq : prepare_sequences(entries, Role::finetune, prep)) ds->add(std::move(seq), step);
      return ds;
    }
    auto list = std::make_unique<StackList>();
    std::size_t index = 0;
    for (const auto& entry : entries) {
      if (entry.role != Role::finetune) continue;
      FrameSequence seq = load_frames(entry.path);
      if (!entry.label.empty()) seq.source_id = entry.label;
      seq = seq.height() / 2 >= prep.frame_size && seq.width() / 2 >= prep.frame_size
                ? half_resize(seq)
                : resize(seq, prep.frame_size, prep.frame_size);
      Rng rng(derive_seed(prep.seed, 2000 + index++));
      for (const auto& sub : temporal_augment(seq, prep.strides, kStackFrames)) {
        for (auto& st : window_stacks_random_crop(sub, rng, step, prep.frame_size)) list->items().push_back(std::move(st));
      }
    }
    return list;
  }

  int run() {
    settings.resolve();
    const fs::path manifest = settings.path("manifest");
    const fs::path out = settings.path("out");
    if (!fs::exists(manifest)) throw ArgumentError("manifest not found: " + manifest.string());
    const auto seed = settings.get<std::uint64_t>("seed");

    NetworkConfig config;
    config.base_channels = settings.get<int>("base_channels");
    config.input_size = settings.get<int>("frame_size");
    config.seed = seed;
    config.validate();

    TrainPlan plan;
    plan.batch_size = settings.get<int>("batch_size");
    plan.max_steps = settings.get<std::int64_t>("max_steps");
    plan.adam = {settings.get<double>("learning_rate"), settings.get<double>("beta1"), settings.get<double>("beta2"),
                 settings.get<double>("epsilon")};
    plan.checkpoint_every = settings.get<std::int64_t>("checkpoint_every");
    if (plan.checkpoint_every > 0) plan.checkpoint_path = sidecar(out, ".ckpt.exmo");
    const int step = settings.get<int>("window_step");

    PrepareOptions prep;
    prep.strides = settings.get<std::vector<int>>("strides");
    prep.frame_size = config.input_size;
    prep.seed = seed;

    const auto entries = read_manifest(manifest);
    StackDataset pretrain_data(config.input_size);
    for (auto& seq : prepare_sequences(entries, Role::pretrain, prep)) pretrain_data.add(std::move(seq), step);
    const auto finetune_data = finetune_source(entries, prep, step);
    if (pretrain_data.size() == 0 && finetune_data->size() == 0) {
      throw ArgumentError("manifest has no pretrain or finetune clips with at least 5 frames");
    }

    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    write_text_file(sidecar(out, ".config.json"), settings.dump());

    Model model = build<float>(config);
    std::string loss_csv = "step,phase,loss\n";
    std::int64_t global_step = 0;
    auto run_phase = [&](TrainPhase phase, const StackSource& data, int epochs, std::uint64_t stream) {
      if (data.size() == 0 || epochs == 0) return;
      TrainPlan p = plan;
      p.phase = phase;
      p.epochs = epochs;
      p.shuffle_seed = derive_seed(seed, stream);
      if (static_cast<std::size_t>(p.batch_size) > data.size()) {
        spdlog::warn("only {} stacks available; batch size reduced from {}", data.size(), p.batch_size);
        p.batch_size = static_cast<int>(data.size());
      }
      const char* name = phase == TrainPhase::pretrain ? "pretrain" : "finetune";
      spdlog::info("{}: {} stacks, {} epochs, batch {}", name, data.size(), epochs, p.batch_size);
      const auto result = train(model, data, p, [&](std::int64_t s, double loss) {
        if (s % 50 == 0) spdlog::debug("{} step {} loss {}", name, s, loss);
      });
      for (double loss : result.losses) {
        loss_csv += std::to_string(++global_step) + "," + name + "," + format_number(loss) + "\n";
      }
    };
    run_phase(TrainPhase::pretrain, pretrain_data, settings.get<int>("epochs"), 1);
    run_phase(TrainPhase::finetune, *finetune_data, settings.get<int>("finetune_epochs"), 2);

    save_model(model, out);
    write_text_file(sidecar(out, ".loss.csv"), loss_csv);
    spdlog::info("wrote {} ({} updates)", out.string(), global_step);
    return kExitOk;
  }
};

// ---------------------------------------------------------------- score

struct ScoreCommand {
  Settings settings;

  explicit ScoreCommand(CLI::App* cmd)
      : settings(cmd, common_defaults({{"model", ""},
                                       {"inputs", json::array()},
                                       {"manifest", ""},
                                       {"role", "test"}})) {
    settings.add<std::string>("--model", "model", "Trained model file");
    settings.add<std::vector<std::string>>("--input", "inputs", "Frame directory or raw clip (repeatable)");
    settings.add<std::string>("--manifest", "manifest", "Score every manifest clip with --role");
    settings.add<std::string>("--role", "role", "Manifest role to score");
    settings.add<std::string>("--out", "out", "Output directory for per-video CSV and JSON");
  }

  int run() {
    settings.resolve();
    const fs::path out = settings.path("out");
    const fs::path model_path = settings.path("model");

    struct Input {
      fs::path path;
      std::string label;
    };
    std::vector<Input> inputs;
    for (const auto& p : settings.get<std::vector<std::string>>("inputs")) inputs.push_back({p, ""});
    if (const auto manifest = settings.path("manifest", false); !manifest.empty()) {
      if (!fs::exists(manifest)) throw ArgumentError("manifest not found: " + manifest.string());
      const Role role = parse_role(settings.get<std::string>("role"));
      for (const auto& e : read_manifest(manifest)) {
        if (e.role == role) inputs.push_back({e.path, e.label});
      }
    }
    if (inputs.empty()) throw ArgumentError("nothing to score: give --input or --manifest");

    const Model model = load_model(model_path);
    const int size = model.config.input_size;

    const bool created = !fs::exists(out);
    std::vector<fs::path> written;
    try {
      fs::create_directories(out);
      std::set<std::string> seen;
      for (const auto& input : inputs) {
        FrameSequence seq = load_frames(input.path);
        if (!input.label.empty()) seq.source_id = input.label;
        if (!seen.insert(seq.source_id).second) throw ValidationError("duplicate video id '" + seq.source_id + "'");
        if (seq.height() != size || seq.width() != size) seq = resize(seq, size, size);
        const ScoreSeries series = score_video(model, seq);
        const fs::path csv = out / (series.video_id + ".csv");
        const fs::path summary = out / (series.video_id + ".json");
        written.push_back(csv);
        write_score_csv(series, csv);
        written.push_back(summary);
        write_text_file(summary, score_summary_json(series));
        spdlog::info("{}: {} frames, mean s_m {}", series.video_id, series.entries.size(), aggregate(series));
      }
      written.push_back(out / "score_config.json");
      write_text_file(written.back(), settings.dump());
    } catch (...) {
      std::error_code ec;
      for (const auto& p : written) fs::remove(p, ec);
      if (created) fs::remove_all(out, ec);
      throw;
    }
    return kExitOk;
  }
};

// ---------------------------------------------------------------- ssq

SsqMode parse_ssq_mode(const std::string& s) {
  if (s == "literal") return SsqMode::literal;
  if (s == "kennedy") return SsqMode::kennedy;
  throw ArgumentError("unknown SSQ mode '" + s + "' (literal, kennedy)");
}

SubjectiveMode parse_subjective(const std::string& s) {
  if (s == "delta") return SubjectiveMode::delta;
  if (s == "post") return SubjectiveMode::post;
  throw ArgumentError("unknown subjective mode '" + s + "' (delta, post)");
}

struct SsqCommand {
  Settings settings;

  explicit SsqCommand(CLI::App* cmd)
      : settings(cmd, common_defaults({{"input", ""}, {"mode", "literal"}, {"subjective", "delta"}})) {
    settings.add<std::string>("--input", "input", "Response CSV (subject,content,phase,<16 ratings>)");
    settings.add<std::string>("--mode", "mode", "literal (single 3.74 weight) or kennedy (classical clusters)");
    settings.add<std::string>("--subjective", "subjective", "delta (post minus pre) or post");
    settings.add<std::string>("--out", "out", "Output directory");
  }

  int run() {
    settings.resolve();
    const fs::path input = settings.path("input");
    const fs::path out = settings.path("out");
    const SsqMode mode = parse_ssq_mode(settings.get<std::string>("mode"));
    const SubjectiveMode subjective = parse_subjective(settings.get<std::string>("subjective"));
    if (mode == SsqMode::kennedy) spdlog::info("kennedy mode: classical cluster membership and weights");

    const auto records = score_responses(read_ssq_responses(input), mode, subjective);
    fs::create_directories(out);
    write_text_file(out / "ssq_scores.csv", ssq_score_csv(records));
    if (mode == SsqMode::kennedy) {
      std::string csv = "subject,content,nausea,oculomotor,disorientation\n";
      for (const auto& r : records) {
        const auto s = kennedy_subscales(r.score);
        csv += r.subject + "," + r.content + "," + format_number(s.nausea) + "," + format_number(s.oculomotor) + "," +
               format_number(s.disorientation) + "\n";
      }
      write_text_file(out / "ssq_subscales.csv", csv);
    }
    write_text_file(out / "ssq_config.json", settings.dump());
    spdlog::info("scored {} subject/content pairs", records.size());
    return kExitOk;
  }
};

// ---------------------------------------------------------------- eval

std::vector<ScoreSeries> read_score_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p = in;
    if (!fs::exists(p)) throw IngestionError(p.string() + ": no such file or directory");
    if (fs::is_directory(p)) {
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
      }
    } else {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<ScoreSeries> series;
  for (const auto& f : files) series.push_back(read_score_csv(f, f.stem().string()));
  return series;
}

struct EvalCommand {
  Settings settings;

  explicit EvalCommand(CLI::App* cmd)
      : settings(cmd, common_defaults({{"scores", json::array()},
                                       {"ssq", ""},
                                       {"aggregation", "mean"},
                                       {"subjective", "delta"},
                                       {"small_sample_limit", 10}})) {
    settings.add<std::vector<std::string>>("--scores", "scores", "Score CSV files or directories of them");
    settings.add<std::string>("--ssq", "ssq", "SSQ score CSV from the ssq command");
    settings.add<std::string>("--aggregation", "aggregation", "Per-video aggregate: mean or pNN (e.g. p95)");
    settings.add<std::string>("--subjective", "subjective", "How the SSQ scores were formed: delta or post");
    settings.add<int>("--small-sample-limit", "small_sample_limit", "Warn when fewer contents than this");
    settings.add<std::string>("--out", "out", "Report directory");
  }

  int run() {
    settings.resolve();
    const fs::path out = settings.path("out");
    const auto score_inputs = settings.get<std::vector<std::string>>("scores");
    if (score_inputs.empty()) throw ArgumentError("--scores is required");

    ReportOptions options;
    options.aggregation = Aggregation::parse(settings.get<std::string>("aggregation"));
    options.small_sample_limit = static_cast<std::size_t>(std::max(0, settings.get<int>("small_sample_limit")));
    options.subjective_label = parse_subjective(settings.get<std::string>("subjective")) == SubjectiveMode::delta
                                   ? "mean post-minus-pre total SSQ"
                                   : "mean post-exposure total SSQ";

    const auto series = read_score_inputs(score_inputs);
    if (series.empty()) throw IngestionError("no score CSV files found");
    std::vector<SsqRecord> ssq;
    if (const auto p = settings.path("ssq", false); !p.empty()) ssq = read_ssq_scores(p);

    const auto summary = emit_report(series, ssq, out, options);
    write_text_file(out / "eval_config.json", settings.dump());
    if (summary.plcc) {
      std::printf("PLCC %.6f over %zu contents\n", *summary.plcc, summary.n_contents);
    } else {
      std::printf("PLCC unavailable\n");
    }
    for (const auto& c : summary.caveats) spdlog::warn("{}", c);
    return kExitOk;
  }
};

// ---------------------------------------------------------------- synth

struct SynthCommand {
  Settings settings;

  explicit SynthCommand(CLI::App* cmd)
      : settings(cmd, common_defaults({{"texture", "noise"},
                                       {"velocities", {1.0}},
                                       {"frames", 32},
                                       {"size", kFrameSize},
                                       {"cell", 16},
                                       {"motion", "translate"},
                                       {"role", "pretrain"}})) {
    settings.add<std::string>("--texture", "texture", "checker, noise or gradient");
    settings.add<std::vector<double>>("--velocity", "velocities", "Pixels (or degrees) per frame; repeatable");
    settings.add<int>("--frames", "frames", "Frames per clip");
    settings.add<int>("--size", "size", "Frame side in pixels");
    settings.add<int>("--cell", "cell", "Checker square or coarsest noise cell");
    settings.add<std::string>("--motion", "motion", "translate or rotate");
    settings.add<std::string>("--role", "role", "Role recorded in the emitted manifest");
    settings.add<std::string>("--out", "out", "Output directory");
  }

  int run() {
    settings.resolve();
    const fs::path out = settings.path("out");
    const std::string motion = settings.get<std::string>("motion");
    if (motion != "translate" && motion != "rotate") throw ArgumentError("unknown motion '" + motion + "'");
    const Role role = parse_role(settings.get<std::string>("role"));

    fs::create_directories(out);
    json manifest = json::array();
    for (double v : settings.get<std::vector<double>>("velocities")) {
      SynthSpec spec;
      spec.texture = parse_texture(settings.get<std::string>("texture"));
      spec.velocity = v;
      spec.n_frames = settings.get<int>("frames");
      spec.size = settings.get<int>("size");
      spec.cell = settings.get<int>("cell");
      spec.seed = settings.get<std::uint64_t>("seed");
      spec.motion = motion == "rotate" ? MotionKind::rotate : MotionKind::translate;
      const FrameSequence seq = generate(spec);
      write_frames(seq, out / seq.source_id);
      manifest.push_back({{"path", seq.source_id}, {"role", to_string(role)}, {"label", seq.source_id}});
      spdlog::info("wrote {} frames to {}", seq.size(), (out / seq.source_id).string());
    }
    write_text_file(out / "manifest.json", manifest.dump(2) + "\n");
    write_text_file(out / "synth_config.json", settings.dump());
    return kExitOk;
  }
};

// ---------------------------------------------------------------- gradcheck

struct GradcheckCommand {
  Settings settings;

  explicit GradcheckCommand(CLI::App* cmd) : settings(cmd, common_defaults({{"precision", "double"}})) {
    settings.add<std::string>("--precision", "precision", "double or single");
    settings.add<std::string>("--out", "out", "Optional directory for gradcheck.csv");
  }

  int run() {
    settings.resolve();
    const auto rows = run_gradcheck(parse_precision(settings.get<std::string>("precision")),
                                    settings.get<std::uint64_t>("seed"));
    bool ok = true;
    std::string csv = "op,max_rel_error,tolerance,checked,result\n";
    std::printf("%-16s %14s %10s %8s  %s\n", "op", "max rel err", "tolerance", "checked", "result");
    for (const auto& r : rows) {
      ok = ok && r.pass();
      const char* verdict = r.pass() ? "PASS" : "FAIL";
      std::printf("%-16s %14.3e %10.0e %8zu  %s\n", r.op.c_str(), r.max_rel_error, r.tolerance, r.checked, verdict);
      csv += r.op + "," + format_number(r.max_rel_error) + "," + format_number(r.tolerance) + "," +
             std::to_string(r.checked) + "," + verdict + "\n";
    }
    if (const auto out = settings.path("out", false); !out.empty()) {
      fs::create_directories(out);
      write_text_file(out / "gradcheck.csv", csv);
      write_text_file(out / "gradcheck_config.json", settings.dump());
    }
    return ok ? kExitOk : kExitCheckFailed;
  }
};

}  // namespace

int run_cli(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Exceptional-motion scoring for video sickness assessment"};
  app.name("exmo");
  app.require_subcommand(1);

  TrainCommand train_cmd(app.add_subcommand("train", "Train the reconstruction network from a manifest"));
  ScoreCommand score_cmd(app.add_subcommand("score", "Per-frame exceptional motion scores for videos"));
  SsqCommand ssq_cmd(app.add_subcommand("ssq", "Score simulator sickness questionnaires"));
  EvalCommand eval_cmd(app.add_subcommand("eval", "Correlate video scores with SSQ totals and write a report"));
  SynthCommand synth_cmd(app.add_subcommand("synth", "Generate synthetic clips with controlled motion"));
  GradcheckCommand grad_cmd(app.add_subcommand("gradcheck", "Check analytic gradients against finite differences"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (app.got_subcommand("train")) return train_cmd.run();
    if (app.got_subcommand("score")) return score_cmd.run();
    if (app.got_subcommand("ssq")) return ssq_cmd.run();
    if (app.got_subcommand("eval")) return eval_cmd.run();
    if (app.got_subcommand("synth")) return synth_cmd.run();
    if (app.got_subcommand("gradcheck")) return grad_cmd.run();
  } catch (const TrainingError& e) {
    spdlog::error("training diverged: {}", e.what());
    if (!e.last_checkpoint().empty()) spdlog::error("last checkpoint: {}", e.last_checkpoint());
    return kExitDiverged;
  } catch (const FormatError& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const IngestionError& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const DegenerateInputError& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> storage{"exmo"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace exmo
