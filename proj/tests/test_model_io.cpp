#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "hoverid/model_io.hpp"

using namespace hoverid;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "hoverid_model_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

PlantModel sample_plant() {
  PlantModel pm;
  pm.mode = ModeSplit::lateral();
  pm.narx.cfg = {2, 2, 1, 4, 2};
  pm.narx.mlp = mlp_init({12, 5, 4}, 17);
  pm.narx.mlp.biases[0][2] = 0.1 / 3.0;
  pm.narx.y_norm = {{0.1, 0.2, 1e-300, -4.0}, {1.0 / 3.0, 2.0, 3.0, 4.0}};
  pm.narx.u_norm = {{0.0, 0.0}, {0.25, 0.125}};
  pm.training.seeds = {1, 2, 3};
  pm.training.heldout_mse = {0.3, 0.1, 0.2};
  pm.training.chosen_seed = 2;
  pm.training.fit.cost = 0.012345678901234567;
  pm.training.fit.iterations = 7;
  pm.training.fit.termination = Termination::StepTol;
  pm.training.fit.cost_history = {1.0, 0.5, 0.012345678901234567};
  pm.training.train = {2, 70};
  pm.training.test = {70, 100};
  return pm;
}

}  // namespace

TEST(ModelIo, PlantRoundTripIsExact) {
  const PlantModel pm = sample_plant();
  const auto path = scratch("plant.json");
  save_plant_model(pm, path);
  const PlantModel back = load_plant_model(path);
  EXPECT_EQ(back.mode, pm.mode);
  EXPECT_EQ(back.narx.cfg, pm.narx.cfg);
  EXPECT_EQ(back.narx.mlp, pm.narx.mlp);
  EXPECT_EQ(back.narx.y_norm, pm.narx.y_norm);
  EXPECT_EQ(back.narx.u_norm, pm.narx.u_norm);
  EXPECT_EQ(back.training.seeds, pm.training.seeds);
  EXPECT_EQ(back.training.heldout_mse, pm.training.heldout_mse);
  EXPECT_EQ(back.training.fit.cost, pm.training.fit.cost);
  EXPECT_EQ(back.training.fit.termination, Termination::StepTol);
  EXPECT_EQ(back.training.fit.cost_history, pm.training.fit.cost_history);
  EXPECT_EQ(back.training.test.begin, 70u);
  // Writing again yields the same bytes.
  const auto again = scratch("plant2.json");
  save_plant_model(back, again);
  std::ifstream a(path), b(again);
  const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
}

TEST(ModelIo, ControllerRoundTrip) {
  const PlantModel pm = sample_plant();
  const Controller c = make_controller(pm, {"phi", "r"}, ControllerConfig{}, 4);
  TrainedController tc{c, {}, {4, 5}, 5};
  tc.fit.cost = 0.5;
  tc.fit.cost_history = {0.5};
  const auto path = scratch("ctrl.json");
  save_controller(c, path, &tc);
  const Controller back = load_controller(path);
  EXPECT_EQ(back.mode, c.mode);
  EXPECT_EQ(back.tracked, c.tracked);
  EXPECT_EQ(back.mlp, c.mlp);
  EXPECT_EQ(back.reference_norm, c.reference_norm);
  EXPECT_EQ(back.output_norm, c.output_norm);
  EXPECT_EQ(back.control_norm, c.control_norm);
  ASSERT_EQ(back.limits.size(), c.limits.size());
  for (std::size_t i = 0; i < c.limits.size(); ++i) {
    EXPECT_EQ(back.limits[i].lo, c.limits[i].lo);
    EXPECT_EQ(back.limits[i].hi, c.limits[i].hi);
  }
  EXPECT_EQ(read_json(path).at("training").at("chosen_seed"), 5);
}

TEST(ModelIo, RoleMismatchAndMalformedInput) {
  const auto plant_path = scratch("plant_role.json");
  save_plant_model(sample_plant(), plant_path);
  try {
    load_controller(plant_path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadConfig);
  }
  const auto bad = scratch("bad.json");
  std::ofstream(bad) << "{ not json";
  try {
    load_plant_model(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadConfig);
  }
  Json j = to_json(sample_plant());
  j["weights"][0].erase(0);
  EXPECT_THROW(plant_model_from_json(j), Error);
  Json k = to_json(sample_plant());
  k.erase("y_norm");
  EXPECT_THROW(plant_model_from_json(k), Error);
  try {
    load_plant_model(scratch("does_not_exist.json"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}
