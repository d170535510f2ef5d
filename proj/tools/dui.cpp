// Command-line front end: train/unlearn/eval single-shot runs, the full
// experiment grid, and config validation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dui/runner.hpp"

namespace {

struct GlobalFlags {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

dui::ExperimentConfig load_effective_config(const GlobalFlags& g) {
  dui::ExperimentConfig cfg = dui::load_config(g.config_path);
  if (g.seed) {
    cfg.run_seed = *g.seed;
    cfg.request.seed = *g.seed;
  }
  if (g.threads) cfg.threads = *g.threads;
  if (!g.out_dir.empty()) cfg.output_dir = g.out_dir;
  return cfg;
}

void write_json(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dui::Error("cannot write " + path);
  out << j.dump(2) << "\n";
}

int cmd_validate(const GlobalFlags& g) {
  const dui::ExperimentConfig cfg = dui::load_config(g.config_path);
  std::cout << "config ok, digest " << dui::config_digest(cfg) << "\n";
  return 0;
}

int cmd_train(const GlobalFlags& g) {
  dui::ExperimentConfig cfg = load_effective_config(g);
  dui::Prepared p = dui::prepare(cfg);
  dui::TrainResult tr = dui::train(p.base_spec, p.train_view(), p.train_loss, cfg.train);
  std::filesystem::create_directories(cfg.output_dir);
  const std::string model_path = cfg.output_dir + "/model.bin";
  dui::save_params(model_path, p.base_spec, tr.theta);
  const dui::EvalReport ev = dui::evaluate_holdout(p, p.base_spec, tr.theta);
  nlohmann::ordered_json j;
  j["model_path"] = model_path;
  j["spec_digest"] = dui::to_hex(dui::spec_digest(p.base_spec));
  j["epochs_run"] = tr.epochs_run;
  j["final_loss"] = tr.final_loss;
  j["final_grad_norm"] = tr.final_grad_norm;
  j["macro_f1"] = ev.macro_f1;
  j["micro_f1"] = ev.micro_f1;
  j["brier"] = ev.brier;
  write_json(cfg.output_dir + "/train.json", j);
  std::cout << "trained " << dui::to_string(p.base_spec.arch) << " in " << tr.runtime_seconds
            << " s, macro F1 " << ev.macro_f1 << ", model written to " << model_path << "\n";
  return 0;
}

int cmd_unlearn(const GlobalFlags& g, const std::string& model_path,
                const std::string& request_path, const std::string& method_name) {
  dui::ExperimentConfig cfg = load_effective_config(g);
  dui::Prepared p = dui::prepare(cfg);
  const dui::Vec theta = dui::load_params(model_path, p.base_spec);

  dui::UnlearnRequest request;
  std::filesystem::create_directories(cfg.output_dir);
  if (!request_path.empty()) {
    std::ifstream in(request_path, std::ios::binary);
    if (!in) throw dui::Error("cannot open request file: " + request_path);
    std::stringstream ss;
    ss << in.rdbuf();
    request = dui::parse_request(ss.str());
  } else {
    request = dui::make_request(p, cfg.request, cfg.request.unlearn_ratios.front(),
                                cfg.request.seed);
    std::ofstream out(cfg.output_dir + "/request.txt", std::ios::binary);
    out << dui::serialize_request(request);
  }

  dui::UnlearnConfig ucfg = cfg.unlearn;
  ucfg.retrain_options = cfg.train;
  if (method_name == "retrain") ucfg.method = dui::UnlearnMethod::retrain;
  else if (method_name == "influence") ucfg.method = dui::UnlearnMethod::influence;
  else if (method_name == "dui") ucfg.method = dui::UnlearnMethod::dui;
  else throw dui::ConfigError("--method: expected retrain|influence|dui, got '" + method_name + "'");

  const dui::AppliedRequest applied = dui::apply_request(p, request);
  const dui::UnlearnResult res =
      dui::unlearn(p.base_spec, theta, p.train_view(), applied, ucfg, p.train_loss);
  const std::string out_path = cfg.output_dir + "/theta_star.bin";
  dui::save_params(out_path, p.base_spec, res.theta_star);

  const dui::EvalReport ev = dui::evaluate(p, p.base_spec, res.theta_star, applied);
  nlohmann::ordered_json j;
  j["method"] = dui::to_string(ucfg.method);
  j["theta_star_path"] = out_path;
  j["influence_grad_norm"] = res.diagnostics.influence_grad_norm;
  if (res.diagnostics.lissa_residual) j["lissa_residual"] = *res.diagnostics.lissa_residual;
  if (res.diagnostics.condition_estimate)
    j["condition_estimate"] = *res.diagnostics.condition_estimate;
  j["loss_before_total"] = res.diagnostics.loss_before.total;
  j["loss_after_total"] = res.diagnostics.loss_after.total;
  j["macro_f1"] = ev.macro_f1;
  j["warnings"] = res.diagnostics.warnings;
  write_json(cfg.output_dir + "/unlearn.json", j);
  std::cout << "unlearned (" << dui::to_string(ucfg.method) << ") in " << res.runtime_seconds
            << " s, macro F1 " << ev.macro_f1 << ", parameters written to " << out_path << "\n";
  return 0;
}

int cmd_eval(const GlobalFlags& g, const std::string& model_path) {
  dui::ExperimentConfig cfg = load_effective_config(g);
  dui::Prepared p = dui::prepare(cfg);
  const dui::Vec theta = dui::load_params(model_path, p.base_spec);
  const dui::EvalReport ev = dui::evaluate_holdout(p, p.base_spec, theta);
  nlohmann::ordered_json j;
  j["macro_f1"] = ev.macro_f1;
  j["micro_f1"] = ev.micro_f1;
  j["brier"] = ev.brier;
  std::filesystem::create_directories(cfg.output_dir);
  write_json(cfg.output_dir + "/eval.json", j);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_experiment(const GlobalFlags& g) {
  dui::ExperimentConfig cfg = load_effective_config(g);
  const dui::ExperimentOutcome outcome = dui::run_experiment(cfg);
  dui::write_reports(cfg.output_dir, outcome, cfg);
  int failures = 0;
  for (const auto& r : outcome.records) {
    if (!r.ok()) {
      ++failures;
      std::cerr << "cell failed: method=" << r.method << " ratio=" << r.ratio
                << " repeat=" << r.repeat << ": " << r.error << "\n";
    }
  }
  std::cout << "wrote " << cfg.output_dir << "/report.json, report.csv, summary.csv ("
            << outcome.records.size() - failures << "/" << outcome.records.size()
            << " cells ok)\n";
  return outcome.any_failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distribution-aware machine unlearning toolkit"};
  app.require_subcommand(1);

  GlobalFlags g;
  std::string model_path, request_path, method_name = "influence";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", g.config_path, "experiment config file")->required();
    cmd->add_option("--seed", g.seed, "override the request/run seed");
    cmd->add_option("--threads", g.threads, "grid parallelism (1 = bit-reproducible)");
    cmd->add_option("--out", g.out_dir, "output directory override");
  };

  CLI::App* c_validate = app.add_subcommand("validate-config", "check a config file and exit");
  add_common(c_validate);
  CLI::App* c_train = app.add_subcommand("train", "fit the base model and persist it");
  add_common(c_train);
  CLI::App* c_unlearn =
      app.add_subcommand("unlearn", "apply one unlearning request to a persisted model");
  add_common(c_unlearn);
  c_unlearn->add_option("--model", model_path, "persisted model parameters")->required();
  c_unlearn->add_option("--request", request_path,
                        "serialized request (generated from config when absent)");
  c_unlearn->add_option("--method", method_name, "retrain|influence|dui");
  CLI::App* c_eval = app.add_subcommand("eval", "metrics of a persisted model on the held-out split");
  add_common(c_eval);
  c_eval->add_option("--model", model_path, "persisted model parameters")->required();
  CLI::App* c_experiment =
      app.add_subcommand("experiment", "run the full (ratio x method x repeat) grid");
  add_common(c_experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (c_validate->parsed()) return cmd_validate(g);
    if (c_train->parsed()) return cmd_train(g);
    if (c_unlearn->parsed()) return cmd_unlearn(g, model_path, request_path, method_name);
    if (c_eval->parsed()) return cmd_eval(g, model_path);
    if (c_experiment->parsed()) return cmd_experiment(g);
  } catch (const dui::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;  // malformed configs are usage errors
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
