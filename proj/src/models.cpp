#include "lcs/models.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lcs/rng.hpp"

namespace lcs::learn {

using lcs::Rng;

namespace {

using nlohmann::json;

std::vector<int> widths_for(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> w;
  w.push_back(in);
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

Mat reshape_row_major(const Vec& v, int rows, int cols) {
  Mat out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out(i, j) = v(i * cols + j);
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

DynamicsModel DynamicsModel::init(int n, int m, const std::vector<int>& hidden,
                                  std::uint64_t seed) {
  Rng rng(seed);
  DynamicsModel model;
  model.n = n;
  model.m = m;
  model.f_net = ad::Network::init(widths_for(n, hidden, n), rng.split(1).seed());
  model.b_net =
      ad::Network::init(widths_for(n, hidden, n * m), rng.split(2).seed());
  return model;
}

Mat DynamicsModel::b(const Vec& x) const {
  return reshape_row_major(b_net.forward(x), n, m);
}

Mat DynamicsModel::jac_b_col(const Vec& x, int j) const {
  const Mat jb = b_net.jacobian(x);  // (n·m) × n
  Mat out(n, n);
  for (int i = 0; i < n; ++i) out.row(i) = jb.row(i * m + j);
  return out;
}

SdcModel SdcModel::init(int n, int m, const std::vector<int>& hidden,
                        std::uint64_t seed) {
  Rng rng(seed);
  SdcModel model;
  model.n = n;
  model.m = m;
  for (int j = 0; j <= m; ++j) {
    model.a_nets.push_back(
        ad::Network::init(widths_for(2 * n, hidden, n * n),
                          rng.split(10 + j).seed()));
  }
  return model;
}

Mat SdcModel::a_factor(int field_index, const Vec& xbar, const Vec& e) const {
  Vec in(2 * n);
  in << xbar, e;
  return reshape_row_major(a_nets.at(field_index).forward(in), n, n);
}

Mat SdcModel::a_sdc(const Vec& xbar, const Vec& ubar, const Vec& e) const {
  Mat a = a_factor(0, xbar, e);
  for (int j = 0; j < m; ++j) a += ubar(j) * a_factor(j + 1, xbar, e);
  return a;
}

CcmModel CcmModel::init(int n, int m, const std::vector<int>& hidden,
                        std::uint64_t seed) {
  Rng rng(seed);
  CcmModel model;
  model.n = n;
  model.m = m;
  model.l_net =
      ad::Network::init(widths_for(n, hidden, n * n), rng.split(20).seed());
  model.k_net =
      ad::Network::init(widths_for(2 * n, hidden, m * n), rng.split(21).seed());
  return model;
}

Mat CcmModel::metric(const Vec& x) const {
  const Mat l = reshape_row_major(l_net.forward(x), n, n);
  return lambda_floor * Mat::Identity(n, n) + l * l.transpose();
}

Mat CcmModel::gain(const Vec& x, const Vec& xbar) const {
  Vec in(2 * n);
  in << x, xbar;
  return reshape_row_major(k_net.forward(in), m, n);
}

Vec CcmModel::feedback(const Vec& x, const Vec& xbar) const {
  return gain(x, xbar) * (x - xbar);
}

Vec flatten_all(const std::vector<const ad::Network*>& nets) {
  Vec theta(total_param_count(nets));
  int offset = 0;
  for (const ad::Network* net : nets) {
    theta.segment(offset, net->param_count()) = net->flatten();
    offset += net->param_count();
  }
  return theta;
}

void unflatten_all(const std::vector<ad::Network*>& nets, const Vec& theta) {
  int offset = 0;
  for (ad::Network* net : nets) {
    net->unflatten(theta.segment(offset, net->param_count()));
    offset += net->param_count();
  }
  if (offset != theta.size()) {
    throw std::invalid_argument("unflatten_all: size mismatch");
  }
}

int total_param_count(const std::vector<const ad::Network*>& nets) {
  int count = 0;
  for (const ad::Network* net : nets) count += net->param_count();
  return count;
}

void save_checkpoint(const std::string& dir, const Checkpoint& info,
                     const DynamicsModel& dyn, const SdcModel* sdc,
                     const CcmModel* ccm) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["method"] = info.method;
  manifest["system"] = info.system;
  manifest["n"] = info.n;
  manifest["m"] = info.m;
  manifest["hidden"] = info.hidden;
  manifest["seed"] = info.seed;
  manifest["labelled_size"] = info.labelled_size;
  json nets;
  nets["f_net"] = "f_net.json";
  nets["b_net"] = "b_net.json";
  write_file(dir + "/f_net.json", dyn.f_net.to_json());
  write_file(dir + "/b_net.json", dyn.b_net.to_json());
  if (sdc != nullptr) {
    for (std::size_t j = 0; j < sdc->a_nets.size(); ++j) {
      const std::string name = "a_net" + std::to_string(j);
      nets[name] = name + ".json";
      write_file(dir + "/" + name + ".json", sdc->a_nets[j].to_json());
    }
  }
  if (ccm != nullptr) {
    nets["l_net"] = "l_net.json";
    nets["k_net"] = "k_net.json";
    write_file(dir + "/l_net.json", ccm->l_net.to_json());
    write_file(dir + "/k_net.json", ccm->k_net.to_json());
    manifest["hyperparameters"] = {{"lambda_floor", info.lambda_floor},
                                   {"overshoot", info.overshoot},
                                   {"decay_rate", info.decay_rate}};
  }
  manifest["networks"] = std::move(nets);
  write_file(dir + "/manifest.json", manifest.dump(2));
}

LoadedCheckpoint load_checkpoint(const std::string& dir) {
  const json manifest = json::parse(read_file(dir + "/manifest.json"));
  LoadedCheckpoint ckpt;
  ckpt.info.method = manifest.at("method").get<std::string>();
  ckpt.info.system = manifest.at("system").get<std::string>();
  ckpt.info.n = manifest.at("n").get<int>();
  ckpt.info.m = manifest.at("m").get<int>();
  ckpt.info.hidden = manifest.at("hidden").get<std::vector<int>>();
  ckpt.info.seed = manifest.at("seed").get<std::uint64_t>();
  ckpt.info.labelled_size = manifest.value("labelled_size", 0);
  const json& nets = manifest.at("networks");
  const int n = ckpt.info.n, m = ckpt.info.m;

  auto load_net = [&](const std::string& name) {
    return ad::Network::from_json(
        read_file(dir + "/" + nets.at(name).get<std::string>()));
  };

  ckpt.dyn.n = n;
  ckpt.dyn.m = m;
  ckpt.dyn.f_net = load_net("f_net");
  ckpt.dyn.b_net = load_net("b_net");
  if (ckpt.dyn.f_net.input_dim() != n || ckpt.dyn.f_net.output_dim() != n ||
      ckpt.dyn.b_net.output_dim() != n * m) {
    throw std::runtime_error("checkpoint: dynamics net shape mismatch");
  }

  if (ckpt.info.method == "sdc") {
    ckpt.sdc.n = n;
    ckpt.sdc.m = m;
    for (int j = 0; j <= m; ++j) {
      ckpt.sdc.a_nets.push_back(load_net("a_net" + std::to_string(j)));
      if (ckpt.sdc.a_nets.back().input_dim() != 2 * n ||
          ckpt.sdc.a_nets.back().output_dim() != n * n) {
        throw std::runtime_error("checkpoint: SDC net shape mismatch");
      }
    }
  } else if (ckpt.info.method == "ccm") {
    ckpt.ccm.n = n;
    ckpt.ccm.m = m;
    const json& hp = manifest.at("hyperparameters");
    ckpt.ccm.lambda_floor = hp.at("lambda_floor").get<double>();
    ckpt.ccm.overshoot = hp.at("overshoot").get<double>();
    ckpt.ccm.decay_rate = hp.at("decay_rate").get<double>();
    ckpt.info.lambda_floor = ckpt.ccm.lambda_floor;
    ckpt.info.overshoot = ckpt.ccm.overshoot;
    ckpt.info.decay_rate = ckpt.ccm.decay_rate;
    ckpt.ccm.l_net = load_net("l_net");
    ckpt.ccm.k_net = load_net("k_net");
    if (ckpt.ccm.l_net.output_dim() != n * n ||
        ckpt.ccm.k_net.input_dim() != 2 * n ||
        ckpt.ccm.k_net.output_dim() != m * n) {
      throw std::runtime_error("checkpoint: CCM net shape mismatch");
    }
  }
  return ckpt;
}

}  // namespace lcs::learn
