#ifndef LCS_NETWORK_HPP_
#define LCS_NETWORK_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "lcs/tape.hpp"

namespace lcs::ad {

/// Fully connected MLP with tanh hidden activations and an identity output
/// layer. Weights are stored explicitly so the same network can be evaluated
/// untaped (fast path for controllers) or taped (for training).
struct Network {
  std::vector<int> layer_widths;  // [n_in, h_1, ..., n_out]
  std::vector<Mat> weights;       // weights[l]: widths[l+1] × widths[l]
  std::vector<Vec> biases;        // biases[l]: widths[l+1]

  int input_dim() const { return layer_widths.front(); }
  int output_dim() const { return layer_widths.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
  int param_count() const;

  Vec forward(const Vec& x) const;
  Mat forward_batch(const Mat& x) const;   // columns are samples
  Mat jacobian(const Vec& x) const;        // d output / d input, n_out × n_in

  Vec flatten() const;
  void unflatten(const Vec& theta);

  std::string to_json() const;
  static Network from_json(const std::string& text);

  /// Uniform ±√(6/(fan_in+fan_out)) weights, zero biases.
  static Network init(const std::vector<int>& widths, std::uint64_t seed);
};

/// Per-call tape handles for one network's parameters.
struct NetworkVars {
  std::vector<Var> weights;
  std::vector<Var> biases;
};

NetworkVars push_network(Tape& tape, const Network& net);

/// Taped forward pass; x may be a batch (n_in × P).
Var net_forward(Tape& tape, const Network& net, const NetworkVars& vars, Var x);

/// Taped analytic input-Jacobian at a single input (n_in × 1):
/// J = W_L·diag(tanh′(z_{L−1}))·…·diag(tanh′(z_1))·W_1. Built from taped
/// primitives so losses containing J stay differentiable in the weights.
Var net_input_jacobian(Tape& tape, const Network& net, const NetworkVars& vars,
                       Var x);

/// Adds the tape adjoints of `vars` into grad[offset ...], using the same
/// element order as Network::flatten(). Returns the offset past this network.
int accumulate_network_grad(const Tape& tape, const Network& net,
                            const NetworkVars& vars, Vec& grad, int offset);

}  // namespace lcs::ad

#endif  // LCS_NETWORK_HPP_
