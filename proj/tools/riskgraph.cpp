#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "riskgraph/config.hpp"
#include "riskgraph/errors.hpp"
#include "riskgraph/io_util.hpp"
#include "riskgraph/kernels.hpp"
#include "riskgraph/synth.hpp"
#include "riskgraph/train_eval.hpp"
#include "riskgraph/version.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace riskgraph;

namespace {

constexpr int kExitData = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInternal = 3;

constexpr const char* kManifestName = "manifest.json";

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("RISKGRAPH_SEED");
  if (!raw || !*raw) return std::nullopt;
  const std::string s(raw);
  if (s.find_first_not_of("0123456789") != std::string::npos || s.size() > 19) {
    throw ConfigError("RISKGRAPH_SEED must be a non-negative integer, got '" + s + "'");
  }
  return std::stoull(s);
}

fs::path parent_or_cwd(const fs::path& file) {
  return file.has_parent_path() ? file.parent_path() : fs::path(".");
}

class Manifest {
 public:
  explicit Manifest(std::string command) : started_(utc_now()) {
    doc_["command"] = std::move(command);
    doc_["tool_version"] = std::string(kToolVersion);
    doc_["config"] = ordered_json::object();
    doc_["inputs"] = ordered_json::object();
    doc_["outputs"] = ordered_json::object();
  }

  ordered_json& config() { return doc_["config"]; }
  void input(const std::string& key, const fs::path& p) { doc_["inputs"][key] = p.string(); }
  void output(const std::string& key, const fs::path& p) { doc_["outputs"][key] = p.string(); }
  void seed(std::uint64_t s) { doc_["seed"] = s; }

  void write(const fs::path& dir) {
    doc_["started_at"] = started_;
    doc_["finished_at"] = utc_now();
    write_file_atomic(dir / kManifestName, doc_.dump(2) + "\n");
  }

 private:
  std::string started_;
  ordered_json doc_;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw LoadError("cannot create directory " + dir.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  fs::path out;
  std::size_t users = 600;
  double balance = 0.5;
  std::optional<std::uint64_t> seed;
  std::string profile = "weibo";
  bool force = false;
};

void cmd_synth(const SynthArgs& a) {
  if (a.users < 4) throw ConfigError("--users must be at least 4");
  if (!(a.balance > 0.0 && a.balance < 1.0)) throw ConfigError("--balance must lie in (0, 1)");
  if (fs::exists(a.out)) {
    if (!fs::is_directory(a.out)) throw LoadError(a.out.string() + " exists and is not a directory");
    if (!fs::is_empty(a.out) && !a.force) {
      throw LoadError("refusing to write into non-empty directory " + a.out.string() +
                      " (pass --force to overwrite)");
    }
  }
  const std::uint64_t seed = a.seed ? *a.seed : env_seed().value_or(1);

  SynthConfig config;
  if (a.profile == "weibo") config = SynthConfig::weibo(a.users, a.balance);
  else if (a.profile == "reddit") config = SynthConfig::reddit(a.users);
  else config = SynthConfig::planted_stress(a.users);

  Manifest m("synth");
  m.config()["profile"] = a.profile;
  m.config()["users"] = a.users;
  if (a.profile == "weibo") m.config()["balance"] = a.balance;
  m.seed(seed);

  const auto cohort = generate_synthetic_cohort(config, seed);
  ensure_dir(a.out);
  save_cohort(cohort, a.out);
  m.output("cohort", a.out);
  m.write(a.out);

  std::vector<std::size_t> per_class(static_cast<std::size_t>(cohort.class_count()), 0);
  for (const auto& u : cohort.users) ++per_class[static_cast<std::size_t>(u.label)];
  std::cout << "wrote " << cohort.users.size() << " users to " << a.out.string() << "\n";
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    std::cout << "  class " << c << ": " << per_class[c] << "\n";
  }
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  fs::path data;
  fs::path config;
  fs::path model_out;
};

void cmd_train(const TrainArgs& a) {
  std::set<std::string> given;
  TrainConfig config = a.config.empty() ? TrainConfig{} : load_train_config(a.config, &given);
  if (!given.count("train.seed")) {
    if (const auto s = env_seed()) config.seed = *s;
  }

  std::vector<std::string> warnings;
  const auto cohort = load_cohort(a.data, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

  Manifest m("train");
  for (const auto& [k, v] : config_values(config)) m.config()[k] = v;
  m.seed(config.seed);
  m.input("data", a.data);
  if (!a.config.empty()) m.input("config", a.config);

  const auto result = train(cohort, config);

  const fs::path dir = parent_or_cwd(a.model_out);
  ensure_dir(dir);
  const fs::path log_path = dir / "training_log.csv";
  const fs::path layout_path = dir / "layout.json";
  save_model(result.model, a.model_out);
  write_file_atomic(log_path, training_log_csv(result.log));
  write_file_atomic(layout_path, result.model.layout.to_json());
  m.output("model", a.model_out);
  m.output("training_log", log_path);
  m.output("layout", layout_path);
  m.write(dir);

  std::cout << "layout width " << result.model.layout.total_width() << ", "
            << result.model.attention.class_count << " classes\n";
  if (result.best_epoch == 0) {
    std::cout << "kept initial parameters\n";
  } else {
    const auto& best = result.log[result.best_epoch - 1];
    std::cout << "best epoch " << best.epoch << " of " << result.log.size()
              << ": val_accuracy " << format_double(best.val_accuracy) << ", val_f1 "
              << format_double(best.val_f1) << "\n";
  }
  std::cout << "model written to " << a.model_out.string() << "\n";
}

// ---------------------------------------------------------------------------

void check_labels(const CohortDataset& cohort, const Model& model) {
  const auto classes = static_cast<int>(model.attention.class_count);
  for (const auto& u : cohort.users) {
    if (u.label >= classes) {
      throw LoadError("user " + u.user_id + " has label " + std::to_string(u.label) +
                      " but the model predicts " + std::to_string(classes) + " classes");
    }
  }
}

// A layout.json in the data directory pins the layout the data was prepared for.
void check_data_layout(const fs::path& data, const Model& model) {
  const fs::path p = data / "layout.json";
  if (!fs::exists(p)) return;
  const auto layout = PropertyLayout::from_json(read_file(p));
  if (!(layout == model.layout)) {
    throw LoadError("layout mismatch: model has " + model.layout.describe() + "; " + p.string() +
                    " has " + layout.describe());
  }
}

struct EvalArgs {
  fs::path data;
  fs::path model;
  std::string split = "test";
  fs::path out;
};

void cmd_eval(const EvalArgs& a) {
  const Split split = parse_split(a.split);
  const Model model = load_model(a.model);
  const auto cohort = load_cohort(a.data);
  check_data_layout(a.data, model);
  check_labels(cohort, model);
  const auto result = evaluate(model, cohort, split);
  const std::string text = format_report(result.report, result.confusion);
  std::cout << text;

  const fs::path dir = a.out.empty() ? parent_or_cwd(a.model) / ("eval_" + a.split) : a.out;
  ensure_dir(dir);
  const fs::path metrics = dir / ("metrics_" + a.split + ".txt");
  write_file_atomic(metrics, text);
  Manifest m("eval");
  m.config()["split"] = a.split;
  m.input("data", a.data);
  m.input("model", a.model);
  m.output("metrics", metrics);
  m.write(dir);
}

// ---------------------------------------------------------------------------

struct InfoGainArgs {
  fs::path data;
  fs::path model;
  fs::path out;
};

void cmd_infogain(const InfoGainArgs& a) {
  const auto cohort = load_cohort(a.data);
  std::optional<Model> model;
  if (!a.model.empty()) {
    model = load_model(a.model);
    check_labels(cohort, *model);
  }
  const auto report = rank_categories(cohort, model ? &*model : nullptr);
  const fs::path dir = parent_or_cwd(a.out);
  ensure_dir(dir);
  write_file_atomic(a.out, info_gain_csv(report));

  Manifest m("infogain");
  m.config()["labels"] = model ? "model_predictions" : "dataset_labels";
  m.input("data", a.data);
  if (model) m.input("model", a.model);
  m.output("csv", a.out);
  m.write(dir);

  for (const auto& c : report.categories) {
    std::cout << to_string(c.category) << " " << format_double(c.mean_gain) << "\n";
  }
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  fs::path model;
  fs::path data;
  std::string user;
};

void cmd_predict(const PredictArgs& a) {
  const Model model = load_model(a.model);
  const auto cohort = load_cohort(a.data);
  check_data_layout(a.data, model);
  const auto index = cohort.user_index();
  const auto it = index.find(a.user);
  if (it == index.end()) throw LoadError("unknown user id '" + a.user + "'");
  const std::size_t u = it->second;

  const auto inputs = prepare_inputs(cohort, model.features);
  const ForwardTrace t = trace_user(model, inputs, u);

  std::cout << "user " << a.user << "\n";
  std::cout << "predicted class " << t.output.predicted << "\n";
  std::cout << "probabilities:\n";
  for (std::size_t c = 0; c < t.output.probs.size(); ++c) {
    std::cout << "  class " << c << " " << format_double(t.output.probs[c]) << "\n";
  }

  const Vector& alpha = t.center.alpha;
  std::vector<std::size_t> order(alpha.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return alpha[x] > alpha[y]; });
  order.resize(std::min<std::size_t>(5, order.size()));
  std::cout << "top property attention"
            << (model.attention.property_attention ? "" : " (disabled, uniform)") << ":\n";
  for (std::size_t col : order) {
    std::cout << "  " << model.layout.column_name(col) << " " << format_double(alpha[col]) << "\n";
  }

  std::cout << "neighbour attention:\n";
  if (t.neighbour_ids.empty()) {
    std::cout << "  no neighbours\n";
  } else {
    for (std::size_t k = 0; k < t.neighbour_ids.size(); ++k) {
      std::cout << "  " << cohort.users[t.neighbour_ids[k]].user_id << " "
                << format_double(t.betas[k]) << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Suicidal ideation detection over personal knowledge graphs"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Cap on worker threads")->check(CLI::PositiveNumber);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic cohort");
  s->add_option("--out", synth.out, "Output cohort directory")->required();
  s->add_option("--users", synth.users, "Number of users");
  s->add_option("--balance", synth.balance, "Share of label-1 users (weibo profile)");
  s->add_option("--seed", synth.seed, "Random seed");
  s->add_option("--profile", synth.profile, "Cohort profile")
      ->check(CLI::IsMember({"weibo", "reddit", "planted_stress"}));
  s->add_flag("--force", synth.force, "Overwrite a non-empty output directory");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--data", tr.data, "Cohort directory")->required();
  t->add_option("--config", tr.config, "Config file");
  t->add_option("--model-out", tr.model_out, "Model file to write")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a model on one split");
  e->add_option("--data", ev.data, "Cohort directory")->required();
  e->add_option("--model", ev.model, "Model file")->required();
  e->add_option("--split", ev.split, "Split to evaluate")
      ->check(CLI::IsMember({"validation", "test"}));
  e->add_option("--out", ev.out, "Output directory (default: eval_<split> beside the model)");

  InfoGainArgs ig;
  auto* g = app.add_subcommand("infogain", "Rank properties by information gain");
  g->add_option("--data", ig.data, "Cohort directory")->required();
  g->add_option("--model", ig.model, "Use this model's predictions as labels");
  g->add_option("--out", ig.out, "CSV file to write")->required();

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Classify one user and show attention weights");
  p->add_option("--model", pr.model, "Model file")->required();
  p->add_option("--data", pr.data, "Cohort directory")->required();
  p->add_option("--user", pr.user, "User id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitConfig;
  }

  try {
    kernels::set_thread_count(threads);
    if (s->parsed()) cmd_synth(synth);
    else if (t->parsed()) cmd_train(tr);
    else if (e->parsed()) cmd_eval(ev);
    else if (g->parsed()) cmd_infogain(ig);
    else if (p->parsed()) cmd_predict(pr);
    return 0;
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const LoadError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << "\n";
    return kExitInternal;
  }
}
