// ecgnet command-line tool: prepare / train / eval / predict.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 numeric failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecgnet/config.hpp"
#include "ecgnet/data/manifest.hpp"
#include "ecgnet/data/payload.hpp"
#include "ecgnet/data/pipeline.hpp"
#include "ecgnet/data/split.hpp"
#include "ecgnet/metrics.hpp"
#include "ecgnet/nn/checkpoint.hpp"
#include "ecgnet/nn/model.hpp"
#include "ecgnet/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ecgnet;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct Overrides {
  std::string config;
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::string arch;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> threads;
  bool no_sign_flip = false;
  bool no_random_offset = false;
  std::string out;
};

RunConfig resolve_config(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (!o.manifest.empty()) c.manifest = o.manifest;
  if (o.seed) c.seed = *o.seed;
  if (!o.arch.empty()) {
    const auto x = o.arch.find('x');
    try {
      if (x == std::string::npos) throw std::invalid_argument(o.arch);
      c.architecture.window_size = std::stoul(o.arch.substr(0, x));
      c.architecture.conv_layers = std::stoul(o.arch.substr(x + 1));
    } catch (const std::logic_error&) {
      throw ConfigError("--arch expects WINDOWxLAYERS such as 512x7, got '" + o.arch + "'");
    }
  }
  if (o.batch_size) c.batch_size = *o.batch_size;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.threads) c.threads = *o.threads;
  if (o.no_sign_flip) c.augment.sign_flip = false;
  if (o.no_random_offset) c.augment.random_offset = false;
  if (!o.out.empty()) c.out_dir = o.out;
  if (c.manifest.empty()) throw ConfigError("no manifest given (set \"manifest\" in --config or pass --manifest)");
  c.validate();
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
  if (!os) throw DataError("cannot write '" + path.string() + "'");
}

/// Moves staged files into place only after all of them were written, so a
/// failure leaves no partial set of outputs behind.
class StagedOutputs {
public:
  explicit StagedOutputs(fs::path dir) : dir_(std::move(dir)) {}
  ~StagedOutputs() {
    for (const auto& [tmp, final_path] : files_) fs::remove(tmp);
  }

  fs::path stage(const std::string& name) {
    fs::create_directories(dir_);
    files_.emplace_back(dir_ / ("." + name + ".tmp"), dir_ / name);
    return files_.back().first;
  }

  void commit() {
    for (const auto& [tmp, final_path] : files_) fs::rename(tmp, final_path);
    files_.clear();
  }

private:
  fs::path dir_;
  std::vector<std::pair<fs::path, fs::path>> files_;
};

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

struct Prepared {
  data::Manifest manifest;
  data::SplitAssignment split;
  dsp::ScaleStats scale;
};

Prepared compute_split_and_scale(const RunConfig& c) {
  Prepared p;
  p.manifest = data::load_manifest(c.manifest);
  if (p.manifest.records.empty()) throw DataError("manifest '" + c.manifest.string() + "' has no records");
  const auto result = data::stratified_subject_split(p.manifest, c.targets(), c.seed);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  p.split = result.assignment;
  const auto train_meta = data::select_split(p.manifest, p.split, data::Split::train);
  p.scale = data::training_scale(data::condition_records(p.manifest, train_meta, c.preprocessing, c.threads), p.split);
  return p;
}

int cmd_prepare(const Overrides& o) {
  const RunConfig c = resolve_config(o);
  const Prepared p = compute_split_and_scale(c);
  StagedOutputs out(c.out_dir);
  data::write_split_file(out.stage("split.tsv"), p.split);
  write_text(out.stage("scale.json"), json_text(p.scale));
  write_text(out.stage("config.json"), json_text(c));
  out.commit();

  std::array<std::size_t, 3> sizes{};
  for (const auto& [id, s] : p.split) ++sizes[static_cast<std::size_t>(s)];
  std::cout << "split: " << sizes[0] << " train, " << sizes[1] << " validation, " << sizes[2] << " test\n"
            << "wrote " << (c.out_dir / "split.tsv").string() << ", " << (c.out_dir / "scale.json").string() << '\n';
  return 0;
}

/// Loads the split and scale written by `prepare`, computing them if absent.
Prepared load_or_prepare(const RunConfig& c) {
  const fs::path split_path = c.out_dir / "split.tsv", scale_path = c.out_dir / "scale.json";
  if (!fs::exists(split_path) || !fs::exists(scale_path)) {
    Prepared p = compute_split_and_scale(c);
    StagedOutputs out(c.out_dir);
    data::write_split_file(out.stage("split.tsv"), p.split);
    write_text(out.stage("scale.json"), json_text(p.scale));
    out.commit();
    return p;
  }
  Prepared p;
  p.manifest = data::load_manifest(c.manifest);
  p.split = data::read_split_file(split_path);
  std::ifstream is(scale_path);
  try {
    p.scale = json::parse(is).get<dsp::ScaleStats>();
  } catch (const json::exception& e) {
    throw FormatError(scale_path.string() + ": " + e.what());
  }
  return p;
}

std::vector<data::PreparedRecord> prepare_split(const Prepared& p, data::Split which, const dsp::PreprocessSpec& spec,
                                                const dsp::ScaleStats& scale, std::size_t threads) {
  const auto meta = data::select_split(p.manifest, p.split, which);
  return data::apply_scale(data::condition_records(p.manifest, meta, spec, threads), scale);
}

int cmd_train(const Overrides& o, const std::vector<std::string>& argv) {
  const RunConfig c = resolve_config(o);
  const Prepared p = load_or_prepare(c);
  const auto train_set = prepare_split(p, data::Split::train, c.preprocessing, p.scale, c.threads);
  const auto val_set = prepare_split(p, data::Split::validation, c.preprocessing, p.scale, c.threads);
  std::cerr << "training on " << train_set.size() << " records, validating on " << val_set.size() << '\n';

  fs::create_directories(c.out_dir);
  const json run = {{"version", ECGNET_VERSION}, {"command", argv}, {"config", c}, {"seed", c.seed},
                    {"scale", p.scale}};
  write_text(c.out_dir / "config.json", json_text(c));

  std::ofstream log(c.out_dir / "epochs.jsonl", std::ios::trunc);
  train::TrainOptions options = c.train_options();
  options.dump_dir = c.out_dir / "failure";
  options.on_epoch = [&](const train::EpochLog& e) {
    json line = train::epoch_log_json(e);
    line["sign_flip"] = c.augment.sign_flip;
    line["random_offset"] = c.augment.random_offset;
    log << line.dump() << '\n' << std::flush;
    std::cerr << "epoch " << e.epoch << "  lr " << e.lr << "  train_loss " << e.train_loss << "  val_loss "
              << e.val_loss << "  val_acc " << e.val_acc << '\n';
  };
  const auto result = train::train<double>(c.architecture, train_set, val_set, options);

  json meta = run;
  meta["epoch"] = result.best_epoch;
  meta["val_acc"] = result.best_val_acc;
  meta["preprocessing"] = c.preprocessing;
  nn::save_checkpoint(c.out_dir / "best.ckpt", result.best, meta);
  meta["epoch"] = result.log.size();
  meta.erase("val_acc");
  nn::save_checkpoint(c.out_dir / "last.ckpt", result.last, meta);

  json summary = run;
  summary["best_epoch"] = result.best_epoch;
  summary["best_val_acc"] = result.best_val_acc;
  summary["skipped_records"] = result.skipped;
  write_text(c.out_dir / "run.json", json_text(summary));
  std::cout << "best epoch " << result.best_epoch << " (validation accuracy " << result.best_val_acc << "), wrote "
            << (c.out_dir / "best.ckpt").string() << '\n';
  return 0;
}

struct LoadedCheckpoint {
  nn::Checkpoint<double> ckpt;
  dsp::PreprocessSpec preprocessing;
  dsp::ScaleStats scale;
};

LoadedCheckpoint load_model(const std::string& path) {
  LoadedCheckpoint l{nn::load_checkpoint<double>(path), {}, {}};
  if (!l.ckpt.meta.contains("scale") || !l.ckpt.meta.contains("preprocessing"))
    throw FormatError("checkpoint '" + path + "' lacks preprocessing/scale metadata; use one written by 'train'");
  l.preprocessing = l.ckpt.meta["preprocessing"].get<dsp::PreprocessSpec>();
  l.scale = l.ckpt.meta["scale"].get<dsp::ScaleStats>();
  return l;
}

int cmd_eval(const Overrides& o, const std::string& checkpoint, const std::string& split_name,
             const std::string& report_path) {
  const RunConfig c = resolve_config(o);
  const LoadedCheckpoint m = load_model(checkpoint);
  Prepared p;
  p.manifest = data::load_manifest(c.manifest);
  p.split = data::read_split_file(c.out_dir / "split.tsv");
  const auto records = prepare_split(p, data::split_from_string(split_name), m.preprocessing, m.scale, c.threads);
  const train::EvalResult r = train::evaluate(m.ckpt.params, records, c.threads);
  if (r.confusion.total() == 0) throw DataError("no record of split '" + split_name + "' is long enough to evaluate");

  json report = metrics_report(r.confusion);
  report["split"] = split_name;
  report["checkpoint"] = checkpoint;
  report["mean_loss"] = r.mean_loss;
  report["skipped_records"] = r.skipped;
  std::cout << json_text(report);
  if (!report_path.empty()) {
    json preds = json::array();
    for (const auto& pr : r.predictions)
      preds.push_back({{"record_id", pr.record_id},
                       {"truth", std::string(rhythm_name(pr.truth))},
                       {"predicted", std::string(rhythm_name(pr.predicted))},
                       {"probabilities", pr.probs}});
    report["predictions"] = preds;
    write_text(report_path, json_text(report));
  }
  return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& signal_path, std::string database,
                std::optional<double> fs_override) {
  const LoadedCheckpoint m = load_model(checkpoint);
  const data::Payload payload = data::read_payload(signal_path);
  const double fs = fs_override.value_or(payload.fs);
  if (database.empty()) {
    if (m.scale.by_database.size() != 1)
      throw ConfigError("checkpoint was trained on several databases; choose one with --database");
    database = m.scale.by_database.begin()->first;
  }
  const std::vector<double> raw(payload.samples.begin(), payload.samples.end());
  for (double v : raw)
    if (!std::isfinite(v)) throw FormatError("signal '" + signal_path + "' contains non-finite samples");
  const auto x = dsp::apply_scale(dsp::filter_and_resample(raw, fs, m.preprocessing), m.scale.at(database));
  const auto& config = m.ckpt.params.config();
  const auto windows = extract_windows<double>(x, config.window_size, 0);
  const auto probs = nn::model_forward(windows, m.ckpt.params, nn::Mode::eval);

  json out;
  out["class"] = std::string(rhythm_name(train::argmax(probs)));
  json by_class = json::object();
  for (std::size_t k = 0; k < probs.size(); ++k) by_class[std::string(rhythm_name(k))] = probs[k];
  out["probabilities"] = by_class;
  out["windows"] = windows.windows();
  std::cout << json_text(out);
  return 0;
}

void add_run_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--manifest", o.manifest, "Dataset manifest (JSONL); overrides the config");
  cmd->add_option("--seed", o.seed, "Run seed");
  cmd->add_option("--arch", o.arch, "Architecture WINDOWxLAYERS: 512x7, 1024x7 or 1024x8");
  cmd->add_option("--batch-size", o.batch_size, "Records per batch");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  cmd->add_flag("--no-sign-flip", o.no_sign_flip, "Disable random sign flips");
  cmd->add_flag("--no-random-offset", o.no_random_offset, "Disable random window offsets");
  cmd->add_option("--out", o.out, "Output directory");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"ecgnet: convolutional-recurrent ECG rhythm classifier"};
  app.set_version_flag("--version", ECGNET_VERSION);
  app.require_subcommand(1);

  Overrides prepare_o, train_o, eval_o;
  std::string eval_ckpt, eval_split = "test", eval_report;
  std::string pred_ckpt, pred_signal, pred_db;
  std::optional<double> pred_fs;

  auto* prepare = app.add_subcommand("prepare", "Split the dataset and compute scale statistics");
  add_run_options(prepare, prepare_o);
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  add_run_options(train_cmd, train_o);
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  add_run_options(eval, eval_o);
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--split", eval_split, "train, validation or test")
      ->check(CLI::IsMember({"train", "validation", "test"}));
  eval->add_option("--report", eval_report, "Also write the report with per-record predictions here");
  auto* predict = app.add_subcommand("predict", "Classify one signal file");
  predict->add_option("--checkpoint", pred_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  predict->add_option("--signal", pred_signal, "Signal payload file")->required();
  predict->add_option("--database", pred_db, "Database whose scale statistics apply");
  predict->add_option("--fs", pred_fs, "Override the sampling rate stored in the payload");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*prepare) return cmd_prepare(prepare_o);
    if (*train_cmd) return cmd_train(train_o, std::vector<std::string>(argv, argv + argc));
    if (*eval) return cmd_eval(eval_o, eval_ckpt, eval_split, eval_report);
    if (*predict) return cmd_predict(pred_ckpt, pred_signal, pred_db, pred_fs);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
