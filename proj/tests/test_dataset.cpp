#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lcs/dataset.hpp"

using namespace lcs::learn;
using lcs::Rng;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("lcs_dataset_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("uniform generation labels with the true dynamics") {
  const lcs::sys::SystemSpec sys = lcs::sys::make_spacecraft();
  Rng rng(1);
  const LabelledDataset data = generate_uniform(sys, 50, rng);
  CHECK(data.size() == 50);
  for (int i = 0; i < data.size(); ++i) {
    const auto expected =
        lcs::sys::eval_dynamics(sys, data.x.col(i), data.u.col(i));
    CHECK((data.xdot.col(i) - expected).norm() == 0.0);
  }
}

TEST_CASE("labelled csv round trip is exact") {
  const lcs::sys::SystemSpec sys = lcs::sys::make_pvtol();
  Rng rng(2);
  const LabelledDataset data = generate_uniform(sys, 25, rng);
  TempDir dir;
  data.save_csv(dir.file("labelled.csv"));
  const LabelledDataset loaded =
      LabelledDataset::load_csv(dir.file("labelled.csv"), sys.n, sys.m);
  CHECK((loaded.x - data.x).norm() == 0.0);
  CHECK((loaded.u - data.u).norm() == 0.0);
  CHECK((loaded.xdot - data.xdot).norm() == 0.0);
}

TEST_CASE("aux csv round trips and header checks") {
  const lcs::sys::SystemSpec sys = lcs::sys::make_spacecraft();
  Rng rng(3);
  TempDir dir;

  const SdcAuxDataset sdc = generate_sdc_aux(sys, 30, rng);
  sdc.save_csv(dir.file("sdc.csv"));
  const SdcAuxDataset sdc2 = SdcAuxDataset::load_csv(dir.file("sdc.csv"), sys.n);
  CHECK((sdc2.x - sdc.x).norm() == 0.0);
  CHECK((sdc2.xbar - sdc.xbar).norm() == 0.0);

  const CcmAuxDataset ccm = generate_ccm_aux(sys, 30, rng);
  ccm.save_csv(dir.file("ccm.csv"));
  const CcmAuxDataset ccm2 =
      CcmAuxDataset::load_csv(dir.file("ccm.csv"), sys.n, sys.m);
  CHECK((ccm2.ubar - ccm.ubar).norm() == 0.0);

  // Wrong shape metadata must be rejected.
  CHECK_THROWS_AS(SdcAuxDataset::load_csv(dir.file("ccm.csv"), sys.n),
                  std::runtime_error);
  CHECK_THROWS_AS(LabelledDataset::load_csv(dir.file("sdc.csv"), sys.n, sys.m),
                  std::runtime_error);
}

TEST_CASE("same seed gives byte-identical csv files") {
  const lcs::sys::SystemSpec sys = lcs::sys::make_spacecraft();
  TempDir dir;
  for (int run = 0; run < 2; ++run) {
    Rng rng(77);
    generate_uniform(sys, 40, rng).save_csv(
        dir.file("run" + std::to_string(run) + ".csv"));
  }
  std::ifstream a(dir.file("run0.csv")), b(dir.file("run1.csv"));
  const std::string sa((std::istreambuf_iterator<char>(a)),
                       std::istreambuf_iterator<char>());
  const std::string sb((std::istreambuf_iterator<char>(b)),
                       std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  CHECK(!sa.empty());
}
