#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gyronn/kernels.hpp"
#include "gyronn/nn.hpp"

namespace gyronn {

/// Recorded (measurement window -> target) pairs in physical units, with the
/// scaling used to standardize them for training and deployment.
struct TrainingSet {
  Dataset raw;
  int memory_depth = 0;
  ChannelList channels;
  Standardizer input;   ///< per channel, pooled over all delays
  Standardizer output;  ///< per target component
  std::map<std::string, std::string> metadata;
  std::vector<std::string> warnings;

  Eigen::Index size() const { return raw.size(); }
  void validate() const;
  Dataset standardized() const;
  /// Computes `input` and `output` from `raw`.
  void fit_scaling();
  NetworkRecord make_record(Mlp net) const;
};

enum class Algorithm { gradient, newton, levenberg_marquardt };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

struct TrainerConfig {
  Algorithm algorithm = Algorithm::levenberg_marquardt;
  double learning_rate = 0.05;
  double lm_damping_init = 1e-3;
  double lm_damping_up = 10.0;
  double lm_damping_down = 0.1;
  int lm_max_retries = 30;
  int newton_max_halvings = 30;  ///< backtracking halvings per Newton epoch
  double lm_damping_max = 1e10;
  double loss_goal = 1e-6;
  int max_epochs = 30000;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

struct TrainingReport {
  std::vector<double> loss_history;  ///< loss after each epoch
  int epochs_used = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  bool converged = false;
  bool stalled = false;  ///< LM damping overflowed
  double wall_time_s = 0.0;
};

double loss(const Mlp& net, const Dataset& data);
Eigen::VectorXd loss_gradient(const Mlp& net, const Dataset& data);

Mlp gradient_step(const Mlp& net, const Dataset& data, double learning_rate,
                  SampleOrder order = {});

/// Relative eigenvalue floor of J^T J below which Newton treats a direction
/// as rank deficient.
inline constexpr double kNewtonRankTol = 1e-12;

struct NewtonStepInfo {
  bool used_pseudo_inverse = false;
};
/// Gauss-Newton step: solves (J^T J) d = -J^T e, i.e. H d = -g, with the
/// pseudo-inverse on rank-deficient directions.
Mlp newton_step(const Mlp& net, const Dataset& data, SampleOrder order = {},
                NewtonStepInfo* info = nullptr);

struct NewtonSearchResult {
  Mlp net;
  double loss = 0.0;
  double step = 0.0;  ///< accepted fraction of the Gauss-Newton step
  bool accepted = false;
  bool used_pseudo_inverse = false;
};
/// Gauss-Newton direction with backtracking: tries fractions 1, 1/2, ...
/// (at most `max_halvings` halvings) and keeps the first that lowers the
/// loss. Used by the Newton epoch loop; `accepted` is false when none did.
NewtonSearchResult newton_search_step(const Mlp& net, const Dataset& data, int max_halvings,
                                      SampleOrder order = {});

struct LmStepResult {
  Mlp net;
  double damping = 0.0;
  bool accepted = false;
  double loss = 0.0;
  bool stalled = false;
};
/// One damped step (H + damping I) d = -g with the multiplicative schedule
/// of `config`; retries with larger damping until the loss decreases.
LmStepResult lm_step(const Mlp& net, const Dataset& data, double damping,
                     const TrainerConfig& config, SampleOrder order = {});

struct TrainResult {
  Mlp net;
  TrainingReport report;
};

/// Epoch loop: shuffle, one optimizer pass over the whole set, record the
/// loss; stop at loss_goal or max_epochs. Throws NumericalError on a
/// non-finite loss, naming the epoch.
TrainResult train(const Mlp& net, const Dataset& data, const TrainerConfig& config);

/// Seeded Fisher-Yates permutation of 0..n-1 for the given epoch.
std::vector<Eigen::Index> shuffled_order(Eigen::Index n, std::uint64_t seed, int epoch);

void write_report_csv(std::ostream& out, const TrainingReport& report);

void save_training_set(const std::string& csv_path, const TrainingSet& set);
TrainingSet load_training_set(const std::string& csv_path);

}  // namespace gyronn
