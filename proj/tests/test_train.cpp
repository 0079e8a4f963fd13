#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "lcs/linalg.hpp"
#include "lcs/losses.hpp"
#include "lcs/systems.hpp"
#include "lcs/train.hpp"

using namespace lcs::learn;
using lcs::Rng;

namespace {

// Linear benchmark system for realizable fits.
LabelledDataset linear_data(const Mat& a, const Mat& b, int count, Rng& rng) {
  LabelledDataset data;
  const int n = static_cast<int>(a.rows()), m = static_cast<int>(b.cols());
  data.x.resize(n, count);
  data.u.resize(m, count);
  for (int i = 0; i < data.x.size(); ++i) data.x.data()[i] = 2.0 * rng.unit() - 1.0;
  for (int i = 0; i < data.u.size(); ++i) data.u.data()[i] = 2.0 * rng.unit() - 1.0;
  data.xdot = a * data.x + b * data.u;
  return data;
}

}  // namespace

TEST_CASE("naive training fits a linear system") {
  Rng rng(1);
  Mat a(3, 3), b(3, 2);
  for (int i = 0; i < a.size(); ++i) a.data()[i] = 2.0 * rng.unit() - 1.0;
  for (int i = 0; i < b.size(); ++i) b.data()[i] = 2.0 * rng.unit() - 1.0;
  const LabelledDataset data = linear_data(a, b, 500, rng);

  TrainConfig config;
  config.epochs = 2000;
  config.hidden = {32, 32};
  config.seed = 7;
  const TrainResult result = train(Method::kNaive, data, nullptr, nullptr, config);

  // Held-out check on fresh samples against the mean label energy.
  const LabelledDataset held = linear_data(a, b, 200, rng);
  double err = 0.0, scale = 0.0;
  for (int i = 0; i < held.size(); ++i) {
    const Eigen::VectorXd pred =
        result.dyn.f(held.x.col(i)) + result.dyn.b(held.x.col(i)) * held.u.col(i);
    err += (held.xdot.col(i) - pred).squaredNorm();
    scale += held.xdot.col(i).squaredNorm();
  }
  CHECK(err / held.size() <= 1e-3 * (scale / held.size()));
}

TEST_CASE("validation checkpointing returns the logged minimum") {
  const lcs::sys::SystemSpec system = lcs::sys::make_spacecraft();
  Rng rng(3);
  const LabelledDataset data = generate_uniform(system, 60, rng);
  TrainConfig config;
  config.epochs = 40;
  config.hidden = {8};
  config.seed = 5;
  const TrainResult result = train(Method::kNaive, data, nullptr, nullptr, config);

  REQUIRE(result.log.size() == 40);
  double min_val = result.log.front().val_loss;
  for (const TrainLogRow& row : result.log) min_val = std::min(min_val, row.val_loss);
  CHECK(result.best_val_loss == doctest::Approx(min_val));
  CHECK(result.best_val_loss <= result.log.front().val_loss);
}

TEST_CASE("identical seeds give bit-identical logs; different seeds differ") {
  const lcs::sys::SystemSpec system = lcs::sys::make_spacecraft();
  Rng rng(4);
  const LabelledDataset data = generate_uniform(system, 40, rng);
  Rng rng2(5);
  const SdcAuxDataset aux = generate_sdc_aux(system, 80, rng2);

  TrainConfig config;
  config.epochs = 12;
  config.hidden = {6};
  config.seed = 9;
  const TrainResult r1 = train(Method::kSdc, data, &aux, nullptr, config);
  const TrainResult r2 = train(Method::kSdc, data, &aux, nullptr, config);
  REQUIRE(r1.log.size() == r2.log.size());
  for (std::size_t i = 0; i < r1.log.size(); ++i) {
    CHECK(r1.log[i].train_loss == r2.log[i].train_loss);
    CHECK(r1.log[i].val_loss == r2.log[i].val_loss);
  }

  config.seed = 10;
  const TrainResult r3 = train(Method::kSdc, data, &aux, nullptr, config);
  CHECK(r3.log.front().val_loss != r1.log.front().val_loss);
}

TEST_CASE("ccm training machinery runs and keeps its guarantees") {
  const lcs::sys::SystemSpec system = lcs::sys::make_spacecraft();
  Rng rng(6);
  const LabelledDataset data = generate_uniform(system, 40, rng);
  Rng rng2(7);
  const CcmAuxDataset aux = generate_ccm_aux(system, 50, rng2);

  TrainConfig config;
  config.epochs = 8;
  config.hidden = {6};
  config.aux_batch = 16;
  config.seed = 11;
  const TrainResult result = train(Method::kCcm, data, nullptr, &aux, config);
  CHECK(result.log.size() == 8);

  // Constructional guarantees survive training.
  const Eigen::VectorXd x = data.x.col(0);
  CHECK(lcs::linalg::sym_eigenvalues(result.ccm.metric(x))(0) >=
        result.ccm.lambda_floor - 1e-12);
  CHECK(result.ccm.feedback(x, x).norm() == 0.0);
}

TEST_CASE("training rejects bad inputs") {
  const lcs::sys::SystemSpec system = lcs::sys::make_spacecraft();
  Rng rng(8);
  const LabelledDataset tiny = generate_uniform(system, 5, rng);
  TrainConfig config;
  config.epochs = 1;
  CHECK_THROWS_AS(train(Method::kNaive, tiny, nullptr, nullptr, config),
                  std::invalid_argument);

  const LabelledDataset data = generate_uniform(system, 20, rng);
  CHECK_THROWS_AS(train(Method::kSdc, data, nullptr, nullptr, config),
                  std::invalid_argument);
}

TEST_CASE("checkpoint round trip preserves every network") {
  const lcs::sys::SystemSpec system = lcs::sys::make_spacecraft();
  Rng rng(9);
  const LabelledDataset data = generate_uniform(system, 30, rng);
  Rng rng2(10);
  const SdcAuxDataset aux = generate_sdc_aux(system, 40, rng2);
  TrainConfig config;
  config.epochs = 3;
  config.hidden = {5};
  const TrainResult result = train(Method::kSdc, data, &aux, nullptr, config);

  const std::string dir =
      (std::filesystem::temp_directory_path() / "lcs_ckpt_test").string();
  Checkpoint info;
  info.method = "sdc";
  info.system = system.name;
  info.n = system.n;
  info.m = system.m;
  info.hidden = config.hidden;
  info.seed = config.seed;
  info.labelled_size = data.size();
  save_checkpoint(dir, info, result.dyn, &result.sdc, nullptr);

  const LoadedCheckpoint loaded = load_checkpoint(dir);
  CHECK(loaded.info.method == "sdc");
  CHECK(loaded.info.labelled_size == 30);
  CHECK((loaded.dyn.f_net.flatten() - result.dyn.f_net.flatten()).norm() == 0.0);
  CHECK((loaded.sdc.a_nets[2].flatten() - result.sdc.a_nets[2].flatten()).norm() ==
        0.0);
  std::filesystem::remove_all(dir);
}
