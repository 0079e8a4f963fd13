#include "lcs/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lcs/csv.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lcs/controllers.hpp"
#include "lcs/dataset.hpp"
#include "lcs/eval.hpp"
#include "lcs/report.hpp"
#include "lcs/train.hpp"
#include "lcs/trajgen.hpp"

namespace lcs::bench {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string> kEvalMethods = {
    "oracle-lqr", "naive-lqr", "sdc-sdlqr", "sdc-linlqr", "ccm"};

std::string zero_pad(int value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s = "0" + s;
  return s;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  return json::parse(in);
}

// Draws the rollout start state; frac >= 1 samples the whole state box,
// otherwise the reference start is perturbed within frac of the box.
sys::Vec draw_initial_state(const sys::SystemSpec& system, const sys::Vec& xbar0,
                            double frac, Rng& rng) {
  sys::Vec x0(system.n);
  do {
    for (int d = 0; d < system.n; ++d) {
      const double lo = system.state_box.lower(d);
      const double hi = system.state_box.upper(d);
      if (frac >= 1.0) {
        x0(d) = rng.uniform(lo, hi);
      } else {
        x0(d) = xbar0(d) + rng.uniform(frac * lo, frac * hi);
      }
    }
  } while ((x0 - xbar0).norm() == 0.0);
  return x0;
}

std::vector<traj::ReferenceTrajectory> load_trajectories(
    const std::string& dir, const sys::SystemSpec& system, int count) {
  std::vector<traj::ReferenceTrajectory> trajectories;
  for (int k = 0; k < count; ++k) {
    const std::string path = dir + "/traj_" + zero_pad(k, 3) + ".csv";
    if (!fs::exists(path)) {
      throw std::runtime_error("trajectory file not found: " + path);
    }
    trajectories.push_back(
        traj::ReferenceTrajectory::load_csv(path, system.n, system.m));
  }
  return trajectories;
}

int cmd_gen_data(const std::string& system_name, const std::string& mode,
                 int n, int n_traj, int n_aux, std::uint64_t seed,
                 const std::string& out_dir) {
  const sys::SystemSpec system = sys::make_system(system_name);
  fs::create_directories(out_dir);

  Rng rng(seed);
  learn::LabelledDataset labelled;
  if (mode == "uniform") {
    Rng stream = rng.split(1);
    labelled = learn::generate_uniform(system, n, stream);
  } else if (mode == "onpolicy") {
    if (n_traj <= 0) throw std::invalid_argument("onpolicy mode needs --n-traj");
    labelled = traj::collect_onpolicy(system, n_traj, seed);
  } else {
    throw std::invalid_argument("unknown mode: " + mode);
  }
  labelled.save_csv(out_dir + "/labelled.csv");

  Rng sdc_stream = rng.split(2);
  learn::generate_sdc_aux(system, n_aux, sdc_stream)
      .save_csv(out_dir + "/sdc_aux.csv");
  Rng ccm_stream = rng.split(3);
  learn::generate_ccm_aux(system, n_aux, ccm_stream)
      .save_csv(out_dir + "/ccm_aux.csv");
  std::cout << "wrote " << labelled.size() << " labelled samples and " << n_aux
            << " aux samples to " << out_dir << "\n";
  return 0;
}

int cmd_gen_traj(std::string system_name, int count, std::uint64_t seed,
                 std::string out_dir) {
  const sys::SystemSpec system = sys::make_system(system_name);
  fs::create_directories(out_dir);
  const std::vector<traj::ReferenceTrajectory> trajectories =
      traj::make_test_set(system, count, seed);
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    trajectories[k].save_csv(out_dir + "/traj_" +
                             zero_pad(static_cast<int>(k), 3) + ".csv");
  }
  traj::save_trajectory_index(out_dir + "/index.json", trajectories, seed);
  std::cout << "wrote " << trajectories.size() << " trajectories to " << out_dir
            << "\n";
  return 0;
}

int cmd_train(std::string system_name, std::string method_name,
              std::string data_path, std::string sdc_aux_path,
              std::string ccm_aux_path, int epochs, std::uint64_t seed,
              std::vector<int> hidden, double lr, std::string out_dir) {
  const sys::SystemSpec system = sys::make_system(system_name);
  const learn::Method method = learn::method_from_string(method_name);
  if (!fs::exists(data_path)) {
    throw std::runtime_error("dataset not found: " + data_path);
  }
  const learn::LabelledDataset labelled =
      learn::LabelledDataset::load_csv(data_path, system.n, system.m);

  learn::SdcAuxDataset sdc_aux;
  learn::CcmAuxDataset ccm_aux;
  if (method == learn::Method::kSdc) {
    if (!fs::exists(sdc_aux_path)) {
      throw std::runtime_error("aux dataset not found: " + sdc_aux_path);
    }
    sdc_aux = learn::SdcAuxDataset::load_csv(sdc_aux_path, system.n);
  } else if (method == learn::Method::kCcm) {
    if (!fs::exists(ccm_aux_path)) {
      throw std::runtime_error("aux dataset not found: " + ccm_aux_path);
    }
    ccm_aux = learn::CcmAuxDataset::load_csv(ccm_aux_path, system.n, system.m);
  }

  learn::TrainConfig config;
  config.epochs = epochs;
  config.seed = seed;
  config.hidden = hidden;
  config.learning_rate = lr;
  const learn::TrainResult result = learn::train(
      method, labelled, method == learn::Method::kSdc ? &sdc_aux : nullptr,
      method == learn::Method::kCcm ? &ccm_aux : nullptr, config);

  learn::Checkpoint info;
  info.method = method_name;
  info.system = system_name;
  info.n = system.n;
  info.m = system.m;
  info.hidden = hidden;
  info.seed = seed;
  info.labelled_size = labelled.size();
  info.lambda_floor = config.lambda_floor;
  info.overshoot = config.overshoot;
  info.decay_rate = config.decay_rate;
  learn::save_checkpoint(out_dir, info, result.dyn,
                         method == learn::Method::kSdc ? &result.sdc : nullptr,
                         method == learn::Method::kCcm ? &result.ccm : nullptr);
  learn::save_training_log(out_dir + "/train_log.csv", result.log);
  std::cout << "best validation loss "
            << csv::format_double(result.best_val_loss) << " at epoch "
            << result.best_epoch << "; checkpoint in " << out_dir << "\n";
  return 0;
}

int cmd_eval(std::string system_name, std::string method, std::string ckpt_dir,
             std::string traj_dir, int n_test, std::uint64_t seed,
             double perturb_frac, std::string out_dir) {
  if (std::find(kEvalMethods.begin(), kEvalMethods.end(), method) ==
      kEvalMethods.end()) {
    throw std::invalid_argument("unknown evaluation method: " + method);
  }
  const sys::SystemSpec system = sys::make_system(system_name);

  learn::LoadedCheckpoint checkpoint;
  const bool needs_checkpoint = method != "oracle-lqr";
  if (needs_checkpoint) {
    if (ckpt_dir.empty() || !fs::exists(ckpt_dir + "/manifest.json")) {
      throw std::runtime_error("checkpoint not found: " + ckpt_dir);
    }
    checkpoint = learn::load_checkpoint(ckpt_dir);
  }

  const std::vector<traj::ReferenceTrajectory> trajectories =
      load_trajectories(traj_dir, system, n_test);

  const std::string records_dir = out_dir + "/records";
  fs::create_directories(records_dir);
  const int labelled_size = needs_checkpoint ? checkpoint.info.labelled_size : 0;

  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    Rng rng = Rng(seed).split(1000 + static_cast<std::uint64_t>(k));
    const sys::Vec x0 = draw_initial_state(
        system, trajectories[k].states.col(0), perturb_frac, rng);
    auto controller = ctrl::make_method_controller(
        method, system, needs_checkpoint ? &checkpoint : nullptr);
    EvalRecord record = rollout(*controller, system, trajectories[k], x0);
    record.labelled_size = labelled_size;
    record.seed = seed;
    record.traj_id = static_cast<int>(k);
    record.save_json(records_dir + "/rec_" + method + "_" + system_name + "_N" +
                     std::to_string(labelled_size) + "_seed" +
                     std::to_string(seed) + "_traj" +
                     zero_pad(static_cast<int>(k), 3) + ".json");
  }
  std::cout << "evaluated " << method << " on " << trajectories.size()
            << " trajectories\n";
  return 0;
}

int cmd_report(std::string records_dir, std::string out_dir) {
  const std::vector<EvalRecord> records = load_records(records_dir);
  if (records.empty()) {
    throw std::runtime_error("no records found in " + records_dir);
  }
  write_report(out_dir, records);
  std::cout << "report written to " << out_dir << " (" << records.size()
            << " records)\n";
  return 0;
}

}  // namespace

void RunConfig::validate() const {
  if (std::find(kEvalMethods.begin(), kEvalMethods.end(), method) ==
      kEvalMethods.end()) {
    throw std::invalid_argument("config: unknown method: " + method);
  }
  if (system != "spacecraft" && system != "pvtol") {
    throw std::invalid_argument("config: unknown system: " + system);
  }
  if (n_labelled <= 0 || n_aux <= 0 || epochs <= 0 || n_test <= 0 ||
      n_traj < 0 || seeds.empty()) {
    throw std::invalid_argument("config: counts must be positive");
  }
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  const json doc = load_json_file(path);
  RunConfig config;
  if (doc.contains("system")) config.system = doc["system"];
  if (doc.contains("method")) config.method = doc["method"];
  if (doc.contains("n_labelled")) config.n_labelled = doc["n_labelled"];
  if (doc.contains("n_traj")) config.n_traj = doc["n_traj"];
  if (doc.contains("n_aux")) config.n_aux = doc["n_aux"];
  if (doc.contains("epochs")) config.epochs = doc["epochs"];
  if (doc.contains("seeds")) {
    config.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
  }
  if (doc.contains("n_test")) config.n_test = doc["n_test"];
  if (doc.contains("out_dir")) config.out_dir = doc["out_dir"];
  if (doc.contains("hidden")) config.hidden = doc["hidden"].get<std::vector<int>>();
  if (doc.contains("learning_rate")) config.learning_rate = doc["learning_rate"];
  if (doc.contains("perturb_frac")) config.perturb_frac = doc["perturb_frac"];
  config.validate();
  return config;
}

void RunConfig::apply_paper_scale() {
  n_test = 100;
  seeds = {0, 1, 2, 3, 4};
  epochs = 50000;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"control-oriented dynamics learning toolkit"};
  app.require_subcommand(1);

  // gen-data
  auto* gen_data = app.add_subcommand("gen-data", "generate training datasets");
  std::string gd_config, gd_system = "spacecraft", gd_mode = "uniform";
  int gd_n = 1000, gd_ntraj = 0, gd_naux = 10000;
  std::uint64_t gd_seed = 0;
  std::string gd_out = "data";
  gen_data->add_option("--config", gd_config, "RunConfig JSON file");
  gen_data->add_option("--system", gd_system, "spacecraft | pvtol");
  gen_data->add_option("--mode", gd_mode, "uniform | onpolicy");
  gen_data->add_option("--n", gd_n, "labelled sample count (uniform mode)");
  gen_data->add_option("--n-traj", gd_ntraj, "trajectory count (onpolicy mode)");
  gen_data->add_option("--n-aux", gd_naux, "aux sample count");
  gen_data->add_option("--seed", gd_seed, "RNG seed");
  gen_data->add_option("--out", gd_out, "output directory");

  // gen-traj
  auto* gen_traj = app.add_subcommand("gen-traj", "generate test trajectories");
  std::string gt_config, gt_system = "spacecraft", gt_out = "trajectories";
  int gt_count = 20;
  std::uint64_t gt_seed = 0;
  gen_traj->add_option("--config", gt_config, "RunConfig JSON file");
  gen_traj->add_option("--system", gt_system, "spacecraft | pvtol");
  gen_traj->add_option("--count", gt_count, "number of trajectories");
  gen_traj->add_option("--seed", gt_seed, "RNG seed");
  gen_traj->add_option("--out", gt_out, "output directory");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string tr_config;
  std::string tr_system = "spacecraft", tr_method = "naive";
  std::string tr_data = "data/labelled.csv";
  std::string tr_sdc_aux = "data/sdc_aux.csv", tr_ccm_aux = "data/ccm_aux.csv";
  int tr_epochs = 5000;
  std::uint64_t tr_seed = 0;
  std::vector<int> tr_hidden = {128, 128};
  double tr_lr = 1e-3;
  std::string tr_out = "checkpoint";
  train_cmd->add_option("--config", tr_config, "RunConfig JSON file");
  train_cmd->add_option("--system", tr_system, "spacecraft | pvtol");
  train_cmd->add_option("--method", tr_method, "naive | sdc | ccm");
  train_cmd->add_option("--data", tr_data, "labelled CSV path");
  train_cmd->add_option("--sdc-aux", tr_sdc_aux, "SDC aux CSV path");
  train_cmd->add_option("--ccm-aux", tr_ccm_aux, "CCM aux CSV path");
  train_cmd->add_option("--epochs", tr_epochs, "training epochs");
  train_cmd->add_option("--seed", tr_seed, "RNG seed");
  train_cmd->add_option("--hidden", tr_hidden, "hidden layer widths");
  train_cmd->add_option("--lr", tr_lr, "Adam learning rate");
  train_cmd->add_option("--out", tr_out, "checkpoint directory");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "closed-loop evaluation");
  std::string ev_config;
  std::string ev_system = "spacecraft", ev_method = "oracle-lqr";
  std::string ev_ckpt, ev_traj = "trajectories", ev_out = "results";
  int ev_ntest = 20;
  std::uint64_t ev_seed = 0;
  double ev_perturb = 1.0;
  eval_cmd->add_option("--config", ev_config, "RunConfig JSON file");
  eval_cmd->add_option("--system", ev_system, "spacecraft | pvtol");
  eval_cmd->add_option("--method", ev_method,
                       "oracle-lqr | naive-lqr | sdc-sdlqr | sdc-linlqr | ccm");
  eval_cmd->add_option("--checkpoint", ev_ckpt, "checkpoint directory");
  eval_cmd->add_option("--traj-dir", ev_traj, "trajectory directory");
  eval_cmd->add_option("--n-test", ev_ntest, "number of test trajectories");
  eval_cmd->add_option("--seed", ev_seed, "RNG seed");
  eval_cmd->add_option("--perturb-frac", ev_perturb,
                       "initial-state draw: 1.0 = whole box, otherwise "
                       "fraction of the box around the reference start");
  eval_cmd->add_option("--out", ev_out, "output directory");

  // report
  auto* report_cmd = app.add_subcommand("report", "tables and plots");
  std::string rp_records = "results/records", rp_out = "results";
  report_cmd->add_option("--records-dir", rp_records, "records directory");
  report_cmd->add_option("--out", rp_out, "report output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen_data->parsed()) {
      if (!gd_config.empty()) {
        const RunConfig cfg = RunConfig::from_json_file(gd_config);
        if (gen_data->count("--system") == 0) gd_system = cfg.system;
        if (gen_data->count("--n") == 0) gd_n = cfg.n_labelled;
        if (gen_data->count("--n-traj") == 0) gd_ntraj = cfg.n_traj;
        if (gen_data->count("--n-aux") == 0) gd_naux = cfg.n_aux;
        if (gen_data->count("--out") == 0) gd_out = cfg.out_dir;
        if (gen_data->count("--mode") == 0 && cfg.n_traj > 0) gd_mode = "onpolicy";
      }
      return cmd_gen_data(gd_system, gd_mode, gd_n, gd_ntraj, gd_naux, gd_seed,
                          gd_out);
    }
    if (gen_traj->parsed()) {
      if (!gt_config.empty()) {
        const RunConfig cfg = RunConfig::from_json_file(gt_config);
        if (gen_traj->count("--system") == 0) gt_system = cfg.system;
        if (gen_traj->count("--count") == 0) gt_count = cfg.n_test;
      }
      return cmd_gen_traj(gt_system, gt_count, gt_seed, gt_out);
    }
    if (train_cmd->parsed()) {
      if (!tr_config.empty()) {
        const RunConfig cfg = RunConfig::from_json_file(tr_config);
        if (train_cmd->count("--system") == 0) tr_system = cfg.system;
        if (train_cmd->count("--epochs") == 0) tr_epochs = cfg.epochs;
        if (train_cmd->count("--hidden") == 0) tr_hidden = cfg.hidden;
        if (train_cmd->count("--lr") == 0) tr_lr = cfg.learning_rate;
      }
      return cmd_train(tr_system, tr_method, tr_data, tr_sdc_aux, tr_ccm_aux,
                       tr_epochs, tr_seed, tr_hidden, tr_lr, tr_out);
    }
    if (eval_cmd->parsed()) {
      if (!ev_config.empty()) {
        const RunConfig cfg = RunConfig::from_json_file(ev_config);
        if (eval_cmd->count("--system") == 0) ev_system = cfg.system;
        if (eval_cmd->count("--method") == 0) ev_method = cfg.method;
        if (eval_cmd->count("--n-test") == 0) ev_ntest = cfg.n_test;
        if (eval_cmd->count("--perturb-frac") == 0) ev_perturb = cfg.perturb_frac;
      }
      return cmd_eval(ev_system, ev_method, ev_ckpt, ev_traj, ev_ntest, ev_seed,
                      ev_perturb, ev_out);
    }
    if (report_cmd->parsed()) {
      return cmd_report(rp_records, rp_out);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace lcs::bench
