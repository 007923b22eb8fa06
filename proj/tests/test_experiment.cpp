#include <doctest.h>

#include <sstream>

#include "gyronn/errors.hpp"
#include "gyronn/experiment.hpp"
#include "support.hpp"

using namespace gyronn;

namespace {

const std::string kRoot = GYRONN_SOURCE_DIR;

ExperimentConfig parse_text(const std::string& text) {
  std::istringstream in("plant.file = params/reference_plant.txt\n" + text);
  return parse_experiment(KeyValueFile::parse(in), kRoot);
}

}  // namespace

TEST_CASE("key=value parsing") {
  std::istringstream in("# comment\na = 1\n\nb = x, y ,z  # trailing\nflag = true\n");
  const KeyValueFile kv = KeyValueFile::parse(in);
  CHECK(kv.get_int("a") == 1);
  CHECK(kv.get_list("b") == std::vector<std::string>{"x", "y", "z"});
  CHECK(kv.get_bool_or("flag", false));
  CHECK(kv.get_or("missing", "d") == "d");
  CHECK_THROWS_AS(kv.get("missing"), ValidationError);
  CHECK_THROWS_AS(kv.reject_unknown({"a", "b"}), ValidationError);
  std::istringstream dup("a = 1\na = 2\n");
  CHECK_THROWS_AS(KeyValueFile::parse(dup), ValidationError);
  std::istringstream junk("no equals sign\n");
  CHECK_THROWS_AS(KeyValueFile::parse(junk), ValidationError);
  CHECK(split_list("").empty());
}

TEST_CASE("integer lists and layer specs") {
  CHECK(parse_int_list({"1-4", "8"}) == std::vector<int>{1, 2, 3, 4, 8});
  CHECK(parse_int_list({"-2"}) == std::vector<int>{-2});
  CHECK_THROWS_AS(parse_int_list({"5-3"}), ValidationError);
  CHECK_THROWS_AS(parse_int_list({"abc"}), ValidationError);
  CHECK(parse_layer_spec("6") == std::vector<int>{6});
  CHECK(parse_layer_spec("8x4") == std::vector<int>{8, 4});
  CHECK_THROWS_AS(parse_layer_spec("0"), ValidationError);
}

TEST_CASE("defaults derive the gain and the cutoff frequency") {
  const ExperimentConfig cfg = parse_text("");
  CHECK(cfg.plant.H == 0.4);
  CHECK(cfg.gain.P.rows() == 3);
  CHECK(cfg.cutoff_hz == doctest::Approx(4.0).epsilon(0.05));
  CHECK(cfg.cell.sampling.excitation.frequency == cfg.cutoff_hz);
  CHECK(cfg.cell.topology == TopologyKind::nn_as_observer_plus_p);
  CHECK(cfg.cell.sampling.channels == ChannelList{0, 3});
  CHECK(cfg.sweep_hidden.size() == 12);
  CHECK(cfg.sweep_memory_depths.size() == 12);
  CHECK(cfg.sweep_activations.size() == 2);
  CHECK(cfg.sweep_algorithms.size() == 3);
  CHECK_FALSE(cfg.seed.has_value());
  CHECK_THROWS_AS(cfg.master_seed_or_throw(), ValidationError);
  // Noise-free verification unless requested.
  CHECK(cfg.cell.sim.imu.gyro_noise_std == 0.0);
}

TEST_CASE("explicit keys land in the cell configuration") {
  const ExperimentConfig cfg = parse_text(
      "seed = 12\n"
      "imu.gyro_noise_std = 0.01\n"
      "control.natural_freqs = 10, 12, 14\n"
      "control.topology = regulator\n"
      "network.hidden = 5x3\n"
      "network.activation = logsig\n"
      "sampling.frequency = 2.5\n"
      "sampling.memory_depth = 4\n"
      "sampling.channels = g1, a1, g2\n"
      "sampling.record_stride = 20\n"
      "trainer.algorithm = newton\n"
      "trainer.max_epochs = 17\n"
      "sim.duration = 2\n"
      "sim.noisy = true\n"
      "sweep.frequencies = 1, 2\n"
      "sweep.hidden = 2-4\n"
      "sweep.replicates = 5\n");
  CHECK(*cfg.seed == 12);
  CHECK(cfg.master_seed_or_throw() == 12);
  CHECK(cfg.cell.topology == TopologyKind::nn_as_regulator);
  CHECK(cfg.cell.arch.hidden == std::vector<int>{5, 3});
  CHECK(cfg.cell.arch.hidden_activation == Activation::logsig);
  CHECK(cfg.cell.sampling.excitation.frequency == 2.5);
  CHECK(cfg.cell.sampling.memory_depth == 4);
  CHECK(cfg.cell.sampling.channels == ChannelList{0, 3, 1});
  CHECK(cfg.cell.trainer.algorithm == Algorithm::newton);
  CHECK(cfg.cell.trainer.max_epochs == 17);
  CHECK(cfg.cell.sim.duration == 2.0);
  CHECK(cfg.cell.sim.imu.gyro_noise_std == 0.01);
  CHECK(cfg.sweep_frequencies == std::vector<double>{1, 2});
  CHECK(cfg.sweep_hidden == std::vector<int>{2, 3, 4});
  CHECK(cfg.sweep_replicates == 5);
  CHECK(cfg.cutoff_hz < 2.0);

  const CellConfig run = cfg.run_cell_config();
  CHECK(run.init_seed == ReplicateSeeds::derive(12, 0).init);
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS_AS(parse_text("sampling.colour = red\n"), ValidationError);
  CHECK_THROWS_AS(parse_text("control.topology = pid\n"), ValidationError);
  CHECK_THROWS_AS(parse_text("sampling.channels = g4\n"), ValidationError);
  CHECK_THROWS_AS(parse_text("trainer.max_epochs = 0\n"), ValidationError);
  CHECK_THROWS_AS(parse_text("sweep.replicates = 0\n"), ValidationError);
  CHECK_THROWS_AS(parse_text("data.file = nowhere.csv\n"), ValidationError);
  CHECK_THROWS_AS(parse_text("sampling.record_stride = 15\n"), ValidationError);
  std::istringstream none("seed = 1\n");
  CHECK_THROWS_AS(parse_experiment(KeyValueFile::parse(none), kRoot), ValidationError);
}

TEST_CASE("shipped configurations load") {
  const ExperimentConfig ref = load_experiment(kRoot + "/configs/reference.txt");
  CHECK(ref.seed.has_value());
  CHECK(ref.cell.topology == TopologyKind::nn_as_observer_plus_p);
  const ExperimentConfig oracle = load_experiment(kRoot + "/configs/oracle.txt");
  CHECK(oracle.cell.topology == TopologyKind::full_state_feedback);
}
