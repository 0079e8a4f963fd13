#include "lcs/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace lcs::ad {

using nlohmann::json;

int Network::param_count() const {
  int count = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    count += static_cast<int>(weights[l].size() + biases[l].size());
  }
  return count;
}

Vec Network::forward(const Vec& x) const {
  if (x.size() != input_dim()) {
    throw std::invalid_argument("network: input dimension mismatch");
  }
  Vec a = x;
  for (int l = 0; l < num_layers(); ++l) {
    a = weights[l] * a + biases[l];
    if (l + 1 < num_layers()) a = a.array().tanh();
  }
  return a;
}

Mat Network::forward_batch(const Mat& x) const {
  if (x.rows() != input_dim()) {
    throw std::invalid_argument("network: input dimension mismatch");
  }
  Mat a = x;
  for (int l = 0; l < num_layers(); ++l) {
    a = (weights[l] * a).colwise() + biases[l];
    if (l + 1 < num_layers()) a = a.array().tanh();
  }
  return a;
}

Mat Network::jacobian(const Vec& x) const {
  if (x.size() != input_dim()) {
    throw std::invalid_argument("network: input dimension mismatch");
  }
  Vec a = x;
  Mat j = weights[0];
  for (int l = 0; l < num_layers(); ++l) {
    if (l > 0) j = weights[l] * j;
    if (l + 1 < num_layers()) {
      a = (weights[l] * a + biases[l]).array().tanh();
      const Vec d = 1.0 - a.array().square();
      j = d.asDiagonal() * j;
    }
  }
  return j;
}

Vec Network::flatten() const {
  Vec theta(param_count());
  int k = 0;
  for (int l = 0; l < num_layers(); ++l) {
    const Mat& w = weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index jj = 0; jj < w.cols(); ++jj) theta(k++) = w(i, jj);
    }
    for (Eigen::Index i = 0; i < biases[l].size(); ++i) {
      theta(k++) = biases[l](i);
    }
  }
  return theta;
}

void Network::unflatten(const Vec& theta) {
  if (theta.size() != param_count()) {
    throw std::invalid_argument("network: parameter vector size mismatch");
  }
  int k = 0;
  for (int l = 0; l < num_layers(); ++l) {
    Mat& w = weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index jj = 0; jj < w.cols(); ++jj) w(i, jj) = theta(k++);
    }
    for (Eigen::Index i = 0; i < biases[l].size(); ++i) {
      biases[l](i) = theta(k++);
    }
  }
}

std::string Network::to_json() const {
  json doc;
  doc["layer_widths"] = layer_widths;
  doc["activation"] = "tanh";
  json ws = json::array();
  for (const Mat& w : weights) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index jj = 0; jj < w.cols(); ++jj) row.push_back(w(i, jj));
      rows.push_back(std::move(row));
    }
    ws.push_back(std::move(rows));
  }
  doc["weights"] = std::move(ws);
  json bs = json::array();
  for (const Vec& b : biases) {
    json row = json::array();
    for (Eigen::Index i = 0; i < b.size(); ++i) row.push_back(b(i));
    bs.push_back(std::move(row));
  }
  doc["biases"] = std::move(bs);
  return doc.dump();
}

Network Network::from_json(const std::string& text) {
  json doc = json::parse(text);
  if (!doc.contains("layer_widths") || !doc.contains("weights") ||
      !doc.contains("biases")) {
    throw std::runtime_error("network checkpoint: missing field");
  }
  if (doc.value("activation", "tanh") != "tanh") {
    throw std::runtime_error("network checkpoint: unsupported activation");
  }
  Network net;
  net.layer_widths = doc["layer_widths"].get<std::vector<int>>();
  if (net.layer_widths.size() < 2) {
    throw std::runtime_error("network checkpoint: need at least two widths");
  }
  const int layers = static_cast<int>(net.layer_widths.size()) - 1;
  const json& ws = doc["weights"];
  const json& bs = doc["biases"];
  if (static_cast<int>(ws.size()) != layers ||
      static_cast<int>(bs.size()) != layers) {
    throw std::runtime_error("network checkpoint: layer count mismatch");
  }
  for (int l = 0; l < layers; ++l) {
    const int rows = net.layer_widths[l + 1];
    const int cols = net.layer_widths[l];
    if (static_cast<int>(ws[l].size()) != rows) {
      throw std::runtime_error("network checkpoint: weight shape mismatch");
    }
    Mat w(rows, cols);
    for (int i = 0; i < rows; ++i) {
      if (static_cast<int>(ws[l][i].size()) != cols) {
        throw std::runtime_error("network checkpoint: weight shape mismatch");
      }
      for (int jj = 0; jj < cols; ++jj) w(i, jj) = ws[l][i][jj].get<double>();
    }
    if (static_cast<int>(bs[l].size()) != rows) {
      throw std::runtime_error("network checkpoint: bias shape mismatch");
    }
    Vec b(rows);
    for (int i = 0; i < rows; ++i) b(i) = bs[l][i].get<double>();
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

Network Network::init(const std::vector<int>& widths, std::uint64_t seed) {
  if (widths.size() < 2) {
    throw std::invalid_argument("network: need at least input and output widths");
  }
  Network net;
  net.layer_widths = widths;
  std::mt19937_64 rng(seed);
  auto unit = [&rng]() {
    // Uniform in [0, 1) from the top 53 bits; avoids std::distribution
    // portability quirks.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Mat w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index jj = 0; jj < w.cols(); ++jj) {
        w(i, jj) = bound * (2.0 * unit() - 1.0);
      }
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vec::Zero(fan_out));
  }
  return net;
}

NetworkVars push_network(Tape& tape, const Network& net) {
  NetworkVars vars;
  for (int l = 0; l < net.num_layers(); ++l) {
    vars.weights.push_back(tape.leaf(net.weights[l]));
    vars.biases.push_back(tape.leaf(net.biases[l]));
  }
  return vars;
}

Var net_forward(Tape& tape, const Network& net, const NetworkVars& vars,
                Var x) {
  if (tape.value(x).rows() != net.input_dim()) {
    throw std::invalid_argument("net_forward: input dimension mismatch");
  }
  Var a = x;
  for (int l = 0; l < net.num_layers(); ++l) {
    a = tape.add_col(tape.matmul(vars.weights[l], a), vars.biases[l]);
    if (l + 1 < net.num_layers()) a = tape.tanh(a);
  }
  return a;
}

Var net_input_jacobian(Tape& tape, const Network& net, const NetworkVars& vars,
                       Var x) {
  const Mat& xv = tape.value(x);
  if (xv.rows() != net.input_dim() || xv.cols() != 1) {
    throw std::invalid_argument("net_input_jacobian: expects a single column");
  }
  Var a = x;
  Var j = vars.weights[0];
  for (int l = 0; l < net.num_layers(); ++l) {
    if (l > 0) j = tape.matmul(vars.weights[l], j);
    if (l + 1 < net.num_layers()) {
      a = tape.tanh(tape.add_col(tape.matmul(vars.weights[l], a), vars.biases[l]));
      // tanh′(z) = 1 − tanh(z)².
      const Var d = tape.shift(tape.neg(tape.cmul(a, a)), 1.0);
      j = tape.row_scale(d, j);
    }
  }
  return j;
}

int accumulate_network_grad(const Tape& tape, const Network& net,
                            const NetworkVars& vars, Vec& grad, int offset) {
  int k = offset;
  for (int l = 0; l < net.num_layers(); ++l) {
    const Mat& gw = tape.adjoint(vars.weights[l]);
    for (Eigen::Index i = 0; i < gw.rows(); ++i) {
      for (Eigen::Index jj = 0; jj < gw.cols(); ++jj) grad(k++) += gw(i, jj);
    }
    const Mat& gb = tape.adjoint(vars.biases[l]);
    for (Eigen::Index i = 0; i < gb.rows(); ++i) grad(k++) += gb(i, 0);
  }
  return k;
}

}  // namespace lcs::ad
