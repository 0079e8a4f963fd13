#ifndef LCS_TRAIN_HPP_
#define LCS_TRAIN_HPP_

#include <string>
#include <vector>

#include "lcs/dataset.hpp"
#include "lcs/losses.hpp"

namespace lcs::learn {

enum class Method { kNaive, kSdc, kCcm };

Method method_from_string(const std::string& name);
std::string method_to_string(Method method);

struct TrainConfig {
  int epochs = 5000;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {128, 128};
  double val_fraction = 0.10;
  int full_batch_limit = 1000;  // minibatch above this labelled size
  int minibatch = 256;
  int aux_batch = 256;          // aux samples per step
  double lambda_floor = 0.1;
  double overshoot = 10.0;      // α
  double decay_rate = 0.5;      // β
};

struct TrainLogRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  DynamicsModel dyn;
  SdcModel sdc;  // populated for Method::kSdc
  CcmModel ccm;  // populated for Method::kCcm
  std::vector<TrainLogRow> log;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

/// Trains the requested method with Adam, monitoring the method's total loss
/// on a held-out validation split and returning the parameters with the
/// lowest validation loss. Aux datasets are required by the methods that use
/// them and ignored otherwise.
TrainResult train(Method method, const LabelledDataset& labelled,
                  const SdcAuxDataset* sdc_aux, const CcmAuxDataset* ccm_aux,
                  const TrainConfig& config);

void save_training_log(const std::string& path,
                       const std::vector<TrainLogRow>& log);

}  // namespace lcs::learn

#endif  // LCS_TRAIN_HPP_
