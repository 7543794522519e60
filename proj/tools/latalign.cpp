// latalign command-line tool: import, synth, train, evaluate, sweep, inspect, project, erp.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "latalign/error.hpp"
#include "latalign/eval/composition.hpp"
#include "latalign/eval/erp.hpp"
#include "latalign/eval/metrics.hpp"
#include "latalign/eval/montage.hpp"
#include "latalign/eval/projection.hpp"
#include "latalign/eval/sweep.hpp"
#include "latalign/eval/topography.hpp"
#include "latalign/io/adapters.hpp"
#include "latalign/io/synthetic.hpp"
#include "latalign/io/trial_archive.hpp"
#include "latalign/log.hpp"
#include "latalign/model/checkpoint.hpp"
#include "latalign/train/config.hpp"
#include "latalign/train/folds.hpp"
#include "latalign/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace latalign;

namespace {

/// Collects what a command did and writes manifest.json into the output directory.
class Manifest {
 public:
  Manifest(std::string command, fs::path out) : command_(std::move(command)), out_(std::move(out)) {
    start_ = std::chrono::steady_clock::now();
    started_at_ = std::time(nullptr);
  }
  json& config() { return doc_["config"]; }
  json& seeds() { return doc_["seeds"]; }
  void artifact(const fs::path& p) { doc_["artifacts"].push_back(fs::relative(p, out_).generic_string()); }

  void write() {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    doc_["tool"] = "latalign";
    doc_["version"] = LATALIGN_VERSION;
    doc_["command"] = command_;
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&started_at_));
    doc_["timings"] = {{"started_utc", stamp}, {"elapsed_s", elapsed}};
    if (!doc_.contains("artifacts")) doc_["artifacts"] = json::array();
    std::ofstream(out_ / "manifest.json") << doc_.dump(2) << "\n";
  }

 private:
  std::string command_;
  fs::path out_;
  json doc_ = json::object();
  std::chrono::steady_clock::time_point start_;
  std::time_t started_at_;
};

void write_json(const fs::path& p, const json& j, Manifest& m) {
  std::ofstream out(p);
  require(out.good(), ErrorCode::Io, "cannot write " + p.string());
  out << j.dump(2) << "\n";
  m.artifact(p);
}

fs::path prepare_out(const std::string& out) {
  require(!out.empty(), ErrorCode::ConfigInvalid, "--out is required");
  fs::create_directories(out);
  return fs::path(out);
}

std::vector<fs::path> checkpoint_files(const fs::path& dir) {
  require(fs::exists(dir), ErrorCode::Io, "checkpoint path does not exist: " + dir.string());
  std::vector<fs::path> files;
  if (fs::is_regular_file(dir)) return {dir};
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".ckpt") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  require(!files.empty(), ErrorCode::Io, "no .ckpt files in " + dir.string());
  return files;
}

/// Sessions of the checkpoint's validation subjects, or every session when the
/// archive holds none of them.
std::vector<std::size_t> eval_sessions(const TrialArchive& archive, const json& meta) {
  std::vector<std::string> subjects = meta.value("val_subjects", std::vector<std::string>{});
  auto sessions = archive.sessions_of(subjects);
  if (sessions.empty())
    for (std::size_t i = 0; i < archive.sessions.size(); ++i) sessions.push_back(i);
  return sessions;
}

Method checkpoint_method(const json& meta, const std::string& override_mode) {
  if (!override_mode.empty()) return parse_method(override_mode);
  return parse_method(meta.value("method", std::string("baseline")));
}

TrialArchive load_archive(const std::string& path, const std::optional<std::pair<double, double>>& window) {
  TrialArchive a = read_trial_archive(path);
  if (window) a = crop_archive(a, window->first, window->second);
  return a;
}

std::optional<std::pair<double, double>> parse_window(const std::vector<double>& w) {
  if (w.empty()) return std::nullopt;
  require(w.size() == 2 && w[1] > w[0], ErrorCode::ConfigInvalid, "--window expects two increasing values");
  return std::make_pair(w[0], w[1]);
}

// --- commands -----------------------------------------------------------------

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string config;
};

int cmd_import(const CommonFlags& common, const std::string& source, const std::string& root) {
  const fs::path out = prepare_out(common.out);
  Manifest m("import", out);
  m.config() = {{"source", source}, {"root", root}};
  TrialArchive archive;
  if (source == "physionet_mi" || source == "physionet_me") {
    PhysionetMiOptions opt;
    opt.paradigm = source == "physionet_mi" ? MotorParadigm::Imagery : MotorParadigm::Execution;
    archive = import_physionet_mi(root, opt);
  } else if (source == "sleep") {
    archive = import_sleep(root);
  } else if (source == "openbmi") {
    archive = import_openbmi(root);
  } else {
    fail(ErrorCode::ConfigInvalid, "--source must be physionet_mi, physionet_me, sleep or openbmi");
  }
  write_trial_archive(archive, out / "archive");
  m.artifact(out / "archive");
  log_info("imported " + std::to_string(archive.sessions.size()) + " sessions, " +
           std::to_string(archive.total_trials()) + " trials");
  m.write();
  return 0;
}

int cmd_synth(const CommonFlags& common) {
  const fs::path out = prepare_out(common.out);
  Manifest m("synth", out);
  SyntheticSpec spec;
  if (!common.config.empty()) spec = read_json_file(common.config).get<SyntheticSpec>();
  if (common.seed) spec.seed = *common.seed;
  m.config() = spec;
  m.seeds() = {{"synthetic", spec.seed}};
  const TrialArchive archive = generate_synthetic(spec);
  write_trial_archive(archive, out / "archive");
  m.artifact(out / "archive");
  log_info("generated " + std::to_string(archive.sessions.size()) + " subjects, " +
           std::to_string(archive.total_trials()) + " trials");
  m.write();
  return 0;
}

int cmd_train(const CommonFlags& common, const std::string& archive_flag, std::optional<std::size_t> fold_flag,
              std::optional<std::size_t> epochs_flag, const std::string& method_flag) {
  require(!common.config.empty(), ErrorCode::ConfigInvalid, "--config is required for train");
  json doc = read_json_file(common.config);
  if (!archive_flag.empty()) doc["archive"] = archive_flag;
  if (!common.out.empty()) doc["output_dir"] = common.out;
  if (!method_flag.empty()) doc["method"] = method_flag;
  if (common.seed) doc["train"]["seed"] = *common.seed;
  if (epochs_flag) doc["train"]["epochs"] = *epochs_flag;
  if (fold_flag) doc["fold"] = *fold_flag;
  const ExperimentConfig cfg = parse_experiment_config(doc);
  require(!cfg.output_dir.empty(), ErrorCode::ConfigInvalid, "output_dir missing (config or --out)");
  const fs::path out = prepare_out(cfg.output_dir);
  Manifest m("train", out);
  m.config() = to_json(cfg);
  m.seeds() = {{"train", cfg.train.seed}, {"plan", cfg.plan.seed}};

  const TrialArchive archive = load_archive(cfg.archive, cfg.window_s);
  const ModelSpec spec = resolve_model_spec(cfg, archive);
  const auto folds = make_folds(archive.subjects(), cfg.train.fold_count, cfg.train.seed);

  std::ofstream metrics(out / "metrics.csv");
  metrics << "fold,epoch,metric,value\n";
  metrics.precision(10);
  json summary = {{"method", std::string(to_string(cfg.method))}, {"folds", json::array()}};
  std::vector<double> accs;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (cfg.fold && *cfg.fold != f) continue;
    log_info("fold " + std::to_string(f + 1) + "/" + std::to_string(folds.size()) + ": " +
             std::to_string(folds[f].val_subjects.size()) + " validation subjects");
    FoldOutcome r = train_fold(archive, folds[f], f, spec, cfg.method, cfg.plan, cfg.train, [&](const EpochRecord& e) {
      metrics << f << "," << e.epoch << ",train_loss," << e.train_loss << "\n";
      if (e.val_balanced_accuracy) metrics << f << "," << e.epoch << ",val_balanced_accuracy," << *e.val_balanced_accuracy << "\n";
      std::string line = "  epoch " + std::to_string(e.epoch) + " loss " + std::to_string(e.train_loss);
      if (e.val_balanced_accuracy) line += " val_bacc " + std::to_string(*e.val_balanced_accuracy);
      log_info(line);
    });
    char name[32];
    std::snprintf(name, sizeof name, "fold_%02zu.ckpt", f);
    save_checkpoint(out / name, *r.model,
                    {{"method", std::string(to_string(cfg.method))},
                     {"fold", f},
                     {"val_subjects", folds[f].val_subjects},
                     {"train_subjects", folds[f].train_subjects},
                     {"seed", cfg.train.seed}});
    m.artifact(out / name);
    accs.push_back(r.val_balanced_accuracy);
    summary["folds"].push_back({{"fold", f}, {"val_subjects", folds[f].val_subjects},
                                {"val_balanced_accuracy", r.val_balanced_accuracy}});
  }
  metrics.close();
  m.artifact(out / "metrics.csv");
  double mean = 0.0;
  for (double a : accs) mean += a;
  summary["mean_val_balanced_accuracy"] = accs.empty() ? 0.0 : mean / static_cast<double>(accs.size());
  write_json(out / "summary.json", summary, m);
  m.write();
  return 0;
}

int cmd_evaluate(const CommonFlags& common, const std::string& ckpt_dir, const std::string& archive_path,
                 const std::string& mode, const std::vector<double>& window) {
  const fs::path out = prepare_out(common.out);
  Manifest m("evaluate", out);
  m.config() = {{"checkpoints", ckpt_dir}, {"archive", archive_path}, {"mode", mode}, {"window_s", window}};
  const TrialArchive archive = load_archive(archive_path, parse_window(window));
  std::ofstream metrics(out / "metrics.csv");
  metrics << "fold,epoch,metric,value\n";
  metrics.precision(10);
  json summary = {{"folds", json::array()}};
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& file : checkpoint_files(ckpt_dir)) {
    LoadedCheckpoint ck = load_checkpoint(file);
    const Method method = checkpoint_method(ck.metadata, mode);
    const auto sessions = eval_sessions(archive, ck.metadata);
    const Predictions p = predict_sessions(*ck.model, archive, sessions, method);
    const double bacc = balanced_accuracy(p.labels, p.predicted);
    const auto fold = ck.metadata.value("fold", count);
    metrics << fold << ",," << "balanced_accuracy," << bacc << "\n";
    summary["folds"].push_back({{"checkpoint", file.filename().string()}, {"fold", fold},
                                {"method", std::string(to_string(method))}, {"balanced_accuracy", bacc}});
    log_info(file.filename().string() + ": balanced accuracy " + std::to_string(bacc));
    total += bacc;
    ++count;
  }
  metrics.close();
  m.artifact(out / "metrics.csv");
  summary["mean_balanced_accuracy"] = total / static_cast<double>(count);
  write_json(out / "summary.json", summary, m);
  m.write();
  return 0;
}

int cmd_sweep(const CommonFlags& common, const std::string& ckpt_dir, const std::string& archive_path,
              std::size_t n, std::size_t reps, const std::string& mode, std::size_t eval_per_class,
              const std::vector<double>& window) {
  const fs::path out = prepare_out(common.out);
  Manifest m("sweep", out);
  const std::uint64_t seed = common.seed.value_or(0);
  m.config() = {{"checkpoints", ckpt_dir}, {"archive", archive_path}, {"n", n}, {"repetitions", reps},
                {"mode", mode}, {"eval_per_class", eval_per_class}, {"window_s", window}};
  m.seeds() = {{"sweep", seed}};
  const TrialArchive archive = load_archive(archive_path, parse_window(window));
  json summary = {{"checkpoints", json::array()}};
  for (const auto& file : checkpoint_files(ckpt_dir)) {
    LoadedCheckpoint ck = load_checkpoint(file);
    SweepOptions opt;
    opt.n = n;
    opt.repetitions = reps;
    opt.seed = seed;
    opt.method = checkpoint_method(ck.metadata, mode);
    opt.eval_per_class = eval_per_class;
    const CompositionGrid grid = imbalance_sweep(*ck.model, archive, eval_sessions(archive, ck.metadata), opt);
    const std::vector<double> probs(archive.n_classes(), 1.0 / static_cast<double>(archive.n_classes()));
    const double wa = weighted_accuracy(grid, probs);
    const fs::path csv = out / (file.stem().string() + "_grid.csv");
    write_grid_csv(csv, grid);
    m.artifact(csv);
    summary["checkpoints"].push_back({{"checkpoint", file.filename().string()},
                                      {"method", std::string(to_string(opt.method))},
                                      {"weighted_accuracy", wa},
                                      {"entries", grid.size()}});
    log_info(file.filename().string() + ": weighted accuracy " + std::to_string(wa));
  }
  write_json(out / "summary.json", summary, m);
  m.write();
  return 0;
}

int cmd_inspect(const CommonFlags& common, const std::string& ckpt_dir, const std::string& montage_name,
                const std::string& archive_path) {
  const fs::path out = prepare_out(common.out);
  Manifest m("inspect", out);
  m.config() = {{"checkpoints", ckpt_dir}, {"montage", montage_name}, {"archive", archive_path}};
  const Montage montage = load_montage(montage_name);
  std::vector<Eigen::MatrixXd> weights;
  for (const auto& file : checkpoint_files(ckpt_dir)) weights.push_back(load_checkpoint(file).model->spatial_weights());
  std::vector<std::string> channels;
  if (!archive_path.empty()) {
    channels = read_trial_archive(archive_path).channel_names;
  } else {
    channels = synthetic_channel_names(static_cast<std::size_t>(weights.front().cols()));
    log_warning("no --archive given; assuming the synthetic montage channel order");
  }
  const Topography topo = topography(weights, channels, montage);
  write_json(out / "topography.json", to_json(topo, montage.name), m);
  std::string top;
  for (std::size_t i = 0; i < std::min<std::size_t>(5, topo.ranking.size()); ++i) top += " " + channels[topo.ranking[i]];
  log_info("most relevant electrodes:" + top);
  m.write();
  return 0;
}

int cmd_project(const CommonFlags& common, const std::string& ckpt_dir, const std::string& archive_path,
                std::size_t hook, const std::string& mode, const std::vector<double>& window) {
  const fs::path out = prepare_out(common.out);
  Manifest m("project", out);
  m.config() = {{"checkpoints", ckpt_dir}, {"archive", archive_path}, {"hook", hook}, {"mode", mode}, {"window_s", window}};
  const TrialArchive archive = load_archive(archive_path, parse_window(window));
  // The projection uses the first checkpoint (first fold) only.
  const fs::path file = checkpoint_files(ckpt_dir).front();
  LoadedCheckpoint ck = load_checkpoint(file);
  const auto clouds = latent_projection(*ck.model, archive, eval_sessions(archive, ck.metadata), hook,
                                        checkpoint_method(ck.metadata, mode));
  write_json(out / "projection.json",
             {{"checkpoint", file.filename().string()}, {"hook", hook}, {"subjects", to_json(clouds)}}, m);
  m.write();
  return 0;
}

int cmd_erp(const CommonFlags& common, const std::string& archive_path, const std::vector<std::string>& electrodes,
            const std::vector<double>& band) {
  const fs::path out = prepare_out(common.out);
  Manifest m("erp", out);
  m.config() = {{"archive", archive_path}, {"electrodes", electrodes}, {"band_hz", band}};
  const TrialArchive archive = read_trial_archive(archive_path);
  const ErpAverage erp = erp_grand_average(archive, electrodes, parse_window(band));
  write_json(out / "erp.json", to_json(erp), m);
  m.write();
  return 0;
}

int exit_code_for(ErrorCode code) {
  switch (category_of(code)) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Data: return 3;
    case ErrorCategory::Runtime: return 4;
  }
  return 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subject-wise statistical alignment for EEG decoders"};
  app.set_version_flag("--version", std::string(LATALIGN_VERSION));
  app.require_subcommand(1);

  CommonFlags common;
  std::uint64_t seed_value = 0;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed_value, "Master seed (overrides the config)")->each([&](const std::string&) {
      common.seed = seed_value;
    });
    cmd->add_option("--out", common.out, "Output directory");
    cmd->add_option("--config", common.config, "JSON configuration file");
  };

  std::string source, root;
  auto* import = app.add_subcommand("import", "Convert a public dataset into a trial archive");
  add_common(import);
  import->add_option("--source", source, "physionet_mi | physionet_me | sleep | openbmi")->required();
  import->add_option("--root", root, "Dataset root (OpenBMI: pre-converted trial archive)")->required();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-subject archive");
  add_common(synth);

  std::string archive, method_flag;
  std::optional<std::size_t> fold, epochs;
  std::size_t fold_value = 0, epochs_value = 0;
  auto* train = app.add_subcommand("train", "Cross-validated training from a config");
  add_common(train);
  train->add_option("--archive", archive, "Trial archive (overrides the config)");
  train->add_option("--method", method_flag, "baseline | euclidean | adaptive | latent");
  train->add_option("--fold", fold_value, "Run a single fold")->each([&](const std::string&) { fold = fold_value; });
  train->add_option("--epochs", epochs_value, "Epoch count")->each([&](const std::string&) { epochs = epochs_value; });

  std::string ckpt, mode, montage = "standard_1010";
  std::vector<double> window, band;
  std::size_t n = 21, reps = 10, hook = 3, eval_per_class = 0;
  std::vector<std::string> electrodes = {"Fpz", "F7", "F8"};

  auto* evaluate = app.add_subcommand("evaluate", "Score checkpoints on an archive");
  add_common(evaluate);
  evaluate->add_option("--checkpoints", ckpt, "Checkpoint file or directory")->required();
  evaluate->add_option("--archive", archive, "Trial archive")->required();
  evaluate->add_option("--mode", mode, "Inference method (default: the checkpoint's)");
  evaluate->add_option("--window", window, "Crop trials to [t0 t1] seconds")->expected(2);

  auto* sweep = app.add_subcommand("sweep", "Class-composition sweep with weighted accuracy");
  add_common(sweep);
  sweep->add_option("--checkpoints", ckpt, "Checkpoint file or directory")->required();
  sweep->add_option("--archive", archive, "Trial archive")->required();
  sweep->add_option("--n", n, "Context size");
  sweep->add_option("--reps", reps, "Context resamples per composition and subject");
  sweep->add_option("--mode", mode, "Inference method (default: the checkpoint's)");
  sweep->add_option("--eval-per-class", eval_per_class, "Evaluation trials per class (0: all balanced)");
  sweep->add_option("--window", window, "Crop trials to [t0 t1] seconds")->expected(2);

  std::string inspect_archive;
  auto* inspect = app.add_subcommand("inspect", "Spatial-filter topography of checkpoints");
  add_common(inspect);
  inspect->add_option("--checkpoints", ckpt, "Checkpoint file or directory")->required();
  inspect->add_option("--montage", montage, "standard_1010 or a name,x,y,z CSV");
  inspect->add_option("--archive", inspect_archive, "Archive supplying the channel names");

  auto* project = app.add_subcommand("project", "MDS projection of latent features at a hook");
  add_common(project);
  project->add_option("--checkpoints", ckpt, "Checkpoint file or directory")->required();
  project->add_option("--archive", archive, "Trial archive")->required();
  project->add_option("--hook", hook, "Hook index (0 = input)");
  project->add_option("--mode", mode, "Inference method (default: the checkpoint's)");
  project->add_option("--window", window, "Crop trials to [t0 t1] seconds")->expected(2);

  auto* erp = app.add_subcommand("erp", "Grand-average traces per class");
  add_common(erp);
  erp->add_option("--archive", archive, "Trial archive")->required();
  erp->add_option("--electrodes", electrodes, "Electrodes to average");
  erp->add_option("--band", band, "Bandpass [low high] Hz")->expected(2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*import) return cmd_import(common, source, root);
    if (*synth) return cmd_synth(common);
    if (*train) return cmd_train(common, archive, fold, epochs, method_flag);
    if (*evaluate) return cmd_evaluate(common, ckpt, archive, mode, window);
    if (*sweep) return cmd_sweep(common, ckpt, archive, n, reps, mode, eval_per_class, window);
    if (*inspect) return cmd_inspect(common, ckpt, montage, inspect_archive);
    if (*project) return cmd_project(common, ckpt, archive, hook, mode, window);
    if (*erp) return cmd_erp(common, archive, electrodes, band);
  } catch (const Error& e) {
    std::cerr << "latalign: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "latalign: ConfigInvalid: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "latalign: Io: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "latalign: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
