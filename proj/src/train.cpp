#include "lcs/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lcs/csv.hpp"
#include "lcs/optim.hpp"

namespace lcs::learn {

namespace {

using ad::Tape;
using ad::Var;

std::vector<int> shuffled_indices(int count, Rng& rng) {
  std::vector<int> idx(count);
  for (int i = 0; i < count; ++i) idx[i] = i;
  for (int i = count - 1; i > 0; --i) {
    std::swap(idx[i], idx[rng.index(i + 1)]);
  }
  return idx;
}

Mat select(const Mat& data, const std::vector<int>& idx) {
  Mat out(data.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(i) = data.col(idx[i]);
  return out;
}

struct LabelledView {
  Mat x, u, xdot;
};

LabelledView view(const LabelledDataset& data, const std::vector<int>& idx) {
  return {select(data.x, idx), select(data.u, idx), select(data.xdot, idx)};
}

PairBatch draw_pairs(const LabelledView& data, int count, Rng& rng) {
  const int n = static_cast<int>(data.x.cols());
  std::vector<int> first(count), second(count);
  for (int i = 0; i < count; ++i) {
    first[i] = static_cast<int>(rng.index(n));
    second[i] = static_cast<int>(rng.index(n));
  }
  PairBatch pairs;
  pairs.x = select(data.x, first);
  pairs.u = select(data.u, first);
  pairs.xdot = select(data.xdot, first);
  pairs.xbar = select(data.x, second);
  pairs.ubar = select(data.u, second);
  pairs.xbardot = select(data.xdot, second);
  return pairs;
}

// Networks whose parameters are optimized, in flat-vector order.
std::vector<const ad::Network*> param_nets(Method method,
                                           const DynamicsModel& dyn,
                                           const SdcModel& sdc,
                                           const CcmModel& ccm) {
  std::vector<const ad::Network*> nets = {&dyn.f_net, &dyn.b_net};
  if (method == Method::kSdc) {
    for (const ad::Network& net : sdc.a_nets) nets.push_back(&net);
  } else if (method == Method::kCcm) {
    nets.push_back(&ccm.l_net);
    nets.push_back(&ccm.k_net);
  }
  return nets;
}

std::vector<ad::Network*> param_nets_mut(Method method, DynamicsModel& dyn,
                                         SdcModel& sdc, CcmModel& ccm) {
  std::vector<ad::Network*> nets = {&dyn.f_net, &dyn.b_net};
  if (method == Method::kSdc) {
    for (ad::Network& net : sdc.a_nets) nets.push_back(&net);
  } else if (method == Method::kCcm) {
    nets.push_back(&ccm.l_net);
    nets.push_back(&ccm.k_net);
  }
  return nets;
}

}  // namespace

Method method_from_string(const std::string& name) {
  if (name == "naive") return Method::kNaive;
  if (name == "sdc") return Method::kSdc;
  if (name == "ccm") return Method::kCcm;
  throw std::invalid_argument("unknown training method: " + name);
}

std::string method_to_string(Method method) {
  switch (method) {
    case Method::kNaive: return "naive";
    case Method::kSdc: return "sdc";
    case Method::kCcm: return "ccm";
  }
  return "?";
}

TrainResult train(Method method, const LabelledDataset& labelled,
                  const SdcAuxDataset* sdc_aux, const CcmAuxDataset* ccm_aux,
                  const TrainConfig& config) {
  labelled.validate();
  const int n = static_cast<int>(labelled.x.rows());
  const int m = static_cast<int>(labelled.u.rows());
  const int total = labelled.size();
  if (total < 10) {
    throw std::invalid_argument("train: need at least 10 labelled samples");
  }
  if (method == Method::kSdc && (sdc_aux == nullptr || sdc_aux->size() == 0)) {
    throw std::invalid_argument("train: SDC method requires an aux dataset");
  }
  if (method == Method::kCcm && (ccm_aux == nullptr || ccm_aux->size() == 0)) {
    throw std::invalid_argument("train: CCM method requires an aux dataset");
  }

  const int val_count = static_cast<int>(config.val_fraction * total);
  if (val_count < 1) throw std::invalid_argument("train: empty validation split");

  Rng rng(config.seed);

  TrainResult result;
  result.dyn = DynamicsModel::init(n, m, config.hidden, rng.split(1).seed());
  if (method == Method::kSdc) {
    result.sdc = SdcModel::init(n, m, config.hidden, rng.split(2).seed());
  } else if (method == Method::kCcm) {
    result.ccm = CcmModel::init(n, m, config.hidden, rng.split(3).seed());
    result.ccm.lambda_floor = config.lambda_floor;
    result.ccm.overshoot = config.overshoot;
    result.ccm.decay_rate = config.decay_rate;
  }

  // Hold out 10% of the labelled data (and of each aux set).
  Rng split_rng = rng.split(4);
  const std::vector<int> order = shuffled_indices(total, split_rng);
  const std::vector<int> val_idx(order.begin(), order.begin() + val_count);
  const std::vector<int> train_idx(order.begin() + val_count, order.end());
  const LabelledView train_data = view(labelled, train_idx);
  const LabelledView val_data = view(labelled, val_idx);

  Mat aux_x_train, aux_xbar_train, aux_ubar_train;
  Mat aux_x_val, aux_xbar_val, aux_ubar_val;
  if (method != Method::kNaive) {
    const Mat& ax = (method == Method::kSdc) ? sdc_aux->x : ccm_aux->x;
    const Mat& axb = (method == Method::kSdc) ? sdc_aux->xbar : ccm_aux->xbar;
    const int aux_total = static_cast<int>(ax.cols());
    const int aux_val = std::max(1, static_cast<int>(config.val_fraction * aux_total));
    Rng aux_rng = rng.split(5);
    const std::vector<int> aux_order = shuffled_indices(aux_total, aux_rng);
    const std::vector<int> av(aux_order.begin(), aux_order.begin() + aux_val);
    const std::vector<int> at(aux_order.begin() + aux_val, aux_order.end());
    aux_x_train = select(ax, at);
    aux_xbar_train = select(axb, at);
    aux_x_val = select(ax, av);
    aux_xbar_val = select(axb, av);
    if (method == Method::kCcm) {
      aux_ubar_train = select(ccm_aux->ubar, at);
      aux_ubar_val = select(ccm_aux->ubar, av);
    }
  }

  // Fixed validation draws so the monitored loss is a stable functional.
  Rng val_rng = rng.split(6);
  PairBatch val_pairs;
  if (method == Method::kSdc) {
    val_pairs = draw_pairs(val_data, val_count, val_rng);
  }
  if (method == Method::kCcm) {
    // The CCM aux loss is per-sample; cap the monitored split at one batch.
    const int cap = std::min(static_cast<int>(aux_x_val.cols()), config.aux_batch);
    aux_x_val = aux_x_val.leftCols(cap).eval();
    aux_xbar_val = aux_xbar_val.leftCols(cap).eval();
    aux_ubar_val = aux_ubar_val.leftCols(cap).eval();
  }

  auto nets = param_nets(method, result.dyn, result.sdc, result.ccm);
  auto nets_mut = param_nets_mut(method, result.dyn, result.sdc, result.ccm);
  Vec theta = flatten_all(nets);
  ad::AdamState adam(theta.size(), config.learning_rate);
  Vec grad(theta.size());

  Tape tape;

  auto build_loss = [&](Tape& t, const LabelledView& data,
                        const PairBatch* pairs, const Mat* aux_x,
                        const Mat* aux_xbar, const Mat* aux_ubar) -> Var {
    const TapedDyn td = push_dyn(t, result.dyn);
    Var loss = loss_dyn_reg(t, td, data.x, data.u, data.xdot);
    if (method == Method::kSdc) {
      const TapedSdc ts = push_sdc(t, result.sdc);
      loss = t.add(loss, loss_sdc_reg(t, ts, td, *pairs));
      loss = t.add(loss, loss_sdc_aux(t, ts, td, *aux_x, *aux_xbar));
    } else if (method == Method::kCcm) {
      const TapedCcm tc = push_ccm(t, result.ccm);
      loss = t.add(loss, loss_ccm_aux(t, tc, td, *aux_x, *aux_xbar, *aux_ubar));
    }
    return loss;
  };

  auto accumulate_grads = [&](const Tape& t, const TapedDyn& td,
                              const TapedSdc* ts, const TapedCcm* tc) {
    grad.setZero();
    int off = accumulate_network_grad(t, result.dyn.f_net, td.f, grad, 0);
    off = accumulate_network_grad(t, result.dyn.b_net, td.b, grad, off);
    if (ts != nullptr) {
      for (std::size_t j = 0; j < ts->a.size(); ++j) {
        off = accumulate_network_grad(t, result.sdc.a_nets[j], ts->a[j], grad,
                                      off);
      }
    }
    if (tc != nullptr) {
      off = accumulate_network_grad(t, result.ccm.l_net, tc->l, grad, off);
      off = accumulate_network_grad(t, result.ccm.k_net, tc->k, grad, off);
    }
  };

  const int train_count = static_cast<int>(train_idx.size());
  const bool full_batch = train_count <= config.full_batch_limit;

  Rng epoch_rng = rng.split(7);
  Vec best_theta = theta;
  result.best_val_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    int steps = 0;

    const std::vector<int> sweep =
        full_batch ? std::vector<int>() : shuffled_indices(train_count, epoch_rng);
    const int num_chunks =
        full_batch ? 1 : (train_count + config.minibatch - 1) / config.minibatch;

    for (int chunk = 0; chunk < num_chunks; ++chunk) {
      LabelledView step_data;
      if (full_batch) {
        step_data = train_data;
      } else {
        const int lo = chunk * config.minibatch;
        const int hi = std::min(train_count, lo + config.minibatch);
        std::vector<int> pick(sweep.begin() + lo, sweep.begin() + hi);
        step_data = {select(train_data.x, pick), select(train_data.u, pick),
                     select(train_data.xdot, pick)};
      }

      PairBatch pairs;
      Mat aux_x, aux_xbar, aux_ubar;
      if (method == Method::kSdc) {
        pairs = draw_pairs(train_data, static_cast<int>(step_data.x.cols()),
                           epoch_rng);
      }
      if (method != Method::kNaive) {
        const int aux_n = static_cast<int>(aux_x_train.cols());
        const int batch = std::min(config.aux_batch, aux_n);
        std::vector<int> pick(batch);
        for (int i = 0; i < batch; ++i) {
          pick[i] = static_cast<int>(epoch_rng.index(aux_n));
        }
        aux_x = select(aux_x_train, pick);
        aux_xbar = select(aux_xbar_train, pick);
        if (method == Method::kCcm) aux_ubar = select(aux_ubar_train, pick);
      }

      tape.clear();
      const TapedDyn td = push_dyn(tape, result.dyn);
      Var loss = loss_dyn_reg(tape, td, step_data.x, step_data.u, step_data.xdot);
      TapedSdc ts;
      TapedCcm tc;
      if (method == Method::kSdc) {
        ts = push_sdc(tape, result.sdc);
        loss = tape.add(loss, loss_sdc_reg(tape, ts, td, pairs));
        loss = tape.add(loss, loss_sdc_aux(tape, ts, td, aux_x, aux_xbar));
      } else if (method == Method::kCcm) {
        tc = push_ccm(tape, result.ccm);
        loss = tape.add(loss,
                        loss_ccm_aux(tape, tc, td, aux_x, aux_xbar, aux_ubar));
      }

      const double loss_value = tape.value(loss)(0, 0);
      if (!std::isfinite(loss_value)) {
        throw std::runtime_error("train: non-finite loss at epoch " +
                                 std::to_string(epoch));
      }
      epoch_loss += loss_value;
      ++steps;

      tape.backward(loss);
      accumulate_grads(tape, td, method == Method::kSdc ? &ts : nullptr,
                       method == Method::kCcm ? &tc : nullptr);
      adam.step(theta, grad);
      unflatten_all(nets_mut, theta);
    }

    // Validation loss with the epoch's parameters.
    tape.clear();
    Var val_loss_var = build_loss(
        tape, val_data, &val_pairs,
        method != Method::kNaive ? &aux_x_val : nullptr,
        method != Method::kNaive ? &aux_xbar_val : nullptr,
        method == Method::kCcm ? &aux_ubar_val : nullptr);
    double val_loss = tape.value(val_loss_var)(0, 0);
    if (!std::isfinite(val_loss)) {
      throw std::runtime_error("train: non-finite validation loss at epoch " +
                               std::to_string(epoch));
    }
    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      best_theta = theta;
    }
    result.log.push_back({epoch, epoch_loss / std::max(1, steps), val_loss});
  }

  unflatten_all(nets_mut, best_theta);
  return result;
}

void save_training_log(const std::string& path,
                       const std::vector<TrainLogRow>& log) {
  csv::Table table;
  table.header = {"epoch", "train_loss", "val_loss"};
  table.rows.resize(static_cast<Eigen::Index>(log.size()), 3);
  for (std::size_t i = 0; i < log.size(); ++i) {
    table.rows(static_cast<Eigen::Index>(i), 0) = log[i].epoch;
    table.rows(static_cast<Eigen::Index>(i), 1) = log[i].train_loss;
    table.rows(static_cast<Eigen::Index>(i), 2) = log[i].val_loss;
  }
  table.save(path);
}

}  // namespace lcs::learn
