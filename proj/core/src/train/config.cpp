#include "latalign/train/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "latalign/error.hpp"

namespace latalign {

namespace {

class Problems {
 public:
  void add(const std::string& key, const std::string& what) { items_.push_back(key + ": " + what); }
  template <typename F>
  void guard(const std::string& key, F&& f) {
    try {
      f();
    } catch (const Error& e) {
      add(key, e.what());
    } catch (const nlohmann::json::exception& e) {
      add(key, e.what());
    }
  }
  void unknown_keys(const nlohmann::json& obj, const std::string& prefix, const std::set<std::string>& known) {
    if (!obj.is_object()) {
      add(prefix.empty() ? "<root>" : prefix, "expected an object");
      return;
    }
    for (const auto& [key, _] : obj.items())
      if (!known.count(key)) add(prefix + key, "unknown key");
  }
  void raise() const {
    if (items_.empty()) return;
    std::string msg = "invalid configuration (" + std::to_string(items_.size()) + " problem" +
                      (items_.size() == 1 ? "" : "s") + "):";
    for (const auto& i : items_) msg += "\n  " + i;
    fail(ErrorCode::ConfigInvalid, msg);
  }

 private:
  std::vector<std::string> items_;
};

}  // namespace

ExperimentConfig parse_experiment_config(const nlohmann::json& doc) {
  Problems problems;
  ExperimentConfig c;
  problems.unknown_keys(doc, "", {"archive", "output_dir", "method", "window_s", "model", "plan", "train", "fold"});
  if (!doc.is_object()) problems.raise();

  problems.guard("archive", [&] { c.archive = doc.at("archive").get<std::string>(); });
  problems.guard("output_dir", [&] { c.output_dir = doc.value("output_dir", std::string()); });
  problems.guard("method", [&] { c.method = parse_method(doc.value("method", std::string("baseline"))); });
  if (doc.contains("window_s"))
    problems.guard("window_s", [&] {
      const auto w = doc.at("window_s").get<std::vector<double>>();
      require(w.size() == 2 && w[1] > w[0] && w[0] >= 0.0, ErrorCode::ConfigInvalid,
              "expected [t0, t1] with 0 <= t0 < t1");
      c.window_s = std::make_pair(w[0], w[1]);
    });
  if (doc.contains("fold")) problems.guard("fold", [&] { c.fold = doc.at("fold").get<std::size_t>(); });

  if (doc.contains("model")) {
    const auto& m = doc.at("model");
    problems.unknown_keys(m, "model.",
                          {"architecture", "n_temporal_filters", "n_spatial_filters", "dropout"});
    if (m.is_object()) {
      problems.guard("model.architecture", [&] {
        c.architecture = m.value("architecture", std::string("eegnet"));
        parse_architecture(c.architecture);
      });
      for (const char* key : {"n_temporal_filters", "n_spatial_filters"})
        if (m.contains(key))
          problems.guard(std::string("model.") + key, [&] {
            require(m.at(key).get<long>() >= 1, ErrorCode::ConfigInvalid, "must be positive");
          });
      if (m.contains("dropout"))
        problems.guard("model.dropout", [&] {
          const double p = m.at("dropout").get<double>();
          require(p >= 0.0 && p < 1.0, ErrorCode::ConfigInvalid, "must lie in [0, 1)");
        });
      c.model_overrides = m;
      c.model_overrides.erase("architecture");
    }
  }
  if (doc.contains("plan")) {
    const auto& p = doc.at("plan");
    problems.unknown_keys(p, "plan.", {"subjects_per_batch", "trials_per_subject", "class_balance", "ratio", "seed"});
    problems.guard("plan", [&] {
      c.plan = p.get<BatchPlan>();
      require(c.plan.subjects_per_batch >= 1, ErrorCode::ConfigInvalid, "subjects_per_batch must be positive");
      require(c.plan.trials_per_subject >= 2, ErrorCode::ConfigInvalid, "trials_per_subject must be at least 2");
    });
  }
  if (doc.contains("train")) {
    const auto& t = doc.at("train");
    problems.unknown_keys(t, "train.",
                          {"learning_rate", "weight_decay", "epochs", "class_weights", "seed", "fold_count", "eval_every"});
    problems.guard("train", [&] {
      c.train = t.get<TrainConfig>();
      c.train.validate();
    });
  }
  if (c.fold && *c.fold >= c.train.fold_count)
    problems.add("fold", "must be below train.fold_count (" + std::to_string(c.train.fold_count) + ")");
  problems.raise();
  return c;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(read_json_file(path));
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["archive"] = c.archive;
  j["output_dir"] = c.output_dir;
  j["method"] = std::string(to_string(c.method));
  if (c.window_s) j["window_s"] = {c.window_s->first, c.window_s->second};
  nlohmann::json model = c.model_overrides;
  model["architecture"] = c.architecture;
  j["model"] = model;
  j["plan"] = c.plan;
  j["train"] = c.train;
  if (c.fold) j["fold"] = *c.fold;
  return j;
}

ModelSpec resolve_model_spec(const ExperimentConfig& c, const TrialArchive& archive) {
  require(!archive.sessions.empty(), ErrorCode::InsufficientTrials, "archive has no sessions");
  ModelSpec spec = ModelSpec::defaults(parse_architecture(c.architecture), archive.channel_names.size(),
                                       archive.sessions.front().n_times, archive.n_classes(), archive.rate_hz);
  spec.n_temporal_filters = c.model_overrides.value("n_temporal_filters", spec.n_temporal_filters);
  spec.n_spatial_filters = c.model_overrides.value("n_spatial_filters", spec.n_spatial_filters);
  spec.dropout = c.model_overrides.value("dropout", spec.dropout);
  spec.alignment_mode = alignment_mode_for(c.method);
  spec.validate();
  return spec;
}

}  // namespace latalign
