#include "gyronn/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "gyronn/csv.hpp"
#include "gyronn/errors.hpp"
#include "gyronn/keyvalue.hpp"
#include "gyronn/seeding.hpp"

namespace gyronn {

// ---------------------------------------------------------------------------
// TrainingSet

void TrainingSet::validate() const {
  raw.validate();
  const auto c = static_cast<Eigen::Index>(channels.size());
  if (c == 0) throw ValidationError("training set: no channels");
  if (raw.inputs.rows() != c * (memory_depth + 1))
    throw DimensionError("training set: window width != channels x (memory_depth + 1)");
  if (input.size() != c || output.size() != raw.targets.rows())
    throw DimensionError("training set: scaling does not match data");
}

void TrainingSet::fit_scaling() {
  raw.validate();
  const auto c = static_cast<Eigen::Index>(channels.size());
  const Eigen::Index n = raw.size();
  input = Standardizer::identity(c);
  for (Eigen::Index ch = 0; ch < c; ++ch) {
    double sum = 0.0, sq = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index r = ch; r < raw.inputs.rows(); r += c) {
      sum += raw.inputs.row(r).sum();
      count += n;
    }
    const double mean = sum / static_cast<double>(count);
    for (Eigen::Index r = ch; r < raw.inputs.rows(); r += c)
      sq += (raw.inputs.row(r).array() - mean).square().sum();
    const double sd = std::sqrt(sq / static_cast<double>(count));
    input.mean[ch] = mean;
    if (sd > 0.0) {
      input.std[ch] = sd;
    } else {
      warnings.push_back("input channel " + channel_name(channels[static_cast<std::size_t>(ch)]) +
                         " is constant; scaling left at 1");
    }
  }
  const Eigen::Index out = raw.targets.rows();
  output = Standardizer::identity(out);
  Eigen::VectorXd sd(out);
  for (Eigen::Index i = 0; i < out; ++i) {
    output.mean[i] = raw.targets.row(i).mean();
    sd[i] = std::sqrt((raw.targets.row(i).array() - output.mean[i]).square().mean());
  }
  // Targets that barely move (uncoupled axes) are scaled relative to the
  // largest component instead of being blown up to unit variance.
  const double floor = 1e-3 * sd.maxCoeff();
  for (Eigen::Index i = 0; i < out; ++i)
    output.std[i] = sd.maxCoeff() > 0.0 ? std::max(sd[i], floor) : 1.0;
}

Dataset TrainingSet::standardized() const {
  validate();
  const auto c = static_cast<Eigen::Index>(channels.size());
  Dataset d;
  d.inputs.resize(raw.inputs.rows(), raw.inputs.cols());
  for (Eigen::Index r = 0; r < raw.inputs.rows(); ++r)
    d.inputs.row(r) = (raw.inputs.row(r).array() - input.mean[r % c]) / input.std[r % c];
  d.targets = (raw.targets.colwise() - output.mean).array().colwise() / output.std.array();
  return d;
}

NetworkRecord TrainingSet::make_record(Mlp net) const {
  NetworkRecord rec{std::move(net), memory_depth, channels, input, output};
  rec.validate();
  return rec;
}

// ---------------------------------------------------------------------------
// Config

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::gradient: return "gradient";
    case Algorithm::newton: return "newton";
    case Algorithm::levenberg_marquardt: return "levenberg_marquardt";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "gradient") return Algorithm::gradient;
  if (name == "newton") return Algorithm::newton;
  if (name == "levenberg_marquardt" || name == "lm") return Algorithm::levenberg_marquardt;
  throw ValidationError("unknown training algorithm '" + name + "'");
}

void TrainerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("trainer: learning_rate must be > 0");
  if (!(lm_damping_init > 0.0)) throw ValidationError("trainer: lm_damping_init must be > 0");
  if (!(lm_damping_up > 1.0)) throw ValidationError("trainer: lm_damping_up must be > 1");
  if (!(lm_damping_down > 0.0 && lm_damping_down < 1.0))
    throw ValidationError("trainer: lm_damping_down must be in (0, 1)");
  if (lm_max_retries < 1) throw ValidationError("trainer: lm_max_retries must be >= 1");
  if (!(lm_damping_max > lm_damping_init))
    throw ValidationError("trainer: lm_damping_max must exceed lm_damping_init");
  if (newton_max_halvings < 0) throw ValidationError("trainer: newton_max_halvings must be >= 0");
  if (!(loss_goal > 0.0)) throw ValidationError("trainer: loss_goal must be > 0");
  if (max_epochs < 1) throw ValidationError("trainer: max_epochs must be >= 1");
}

// ---------------------------------------------------------------------------
// Loss and steps

double loss(const Mlp& net, const Dataset& data) { return loss_parallel(net, data); }

Eigen::VectorXd loss_gradient(const Mlp& net, const Dataset& data) {
  return gradient_parallel(net, data);
}

Mlp gradient_step(const Mlp& net, const Dataset& data, double learning_rate, SampleOrder order) {
  const Eigen::VectorXd g = gradient_parallel(net, data, order);
  return net.with_parameters(net.flatten() - learning_rate * g);
}

namespace {

// Cholesky solve; on failure retry once with diagonal jitter 1e-12 * trace / n.
bool spd_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, Eigen::VectorXd& x,
               double min_rcond = 0.0) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success && llt.rcond() > min_rcond) {
    x = llt.solve(b);
    return x.allFinite();
  }
  Eigen::MatrixXd jittered = a;
  jittered.diagonal().array() += 1e-12 * a.trace() / static_cast<double>(a.rows());
  llt.compute(jittered);
  if (llt.info() != Eigen::Success || !(llt.rcond() > min_rcond)) return false;
  x = llt.solve(b);
  return x.allFinite();
}

}  // namespace

namespace {

// Pseudo-inverse solve of H d = -g through the symmetric eigendecomposition,
// dropping eigenvalues below 1e-12 of the largest. On a well-conditioned H
// this is the ordinary inverse.
NormalEquations newton_direction(const Mlp& net, const Dataset& data, SampleOrder order,
                                 Eigen::VectorXd& delta, bool& pinv) {
  NormalEquations ne = normal_equations_parallel(net, data, order);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ne.hessian);
  if (es.info() != Eigen::Success)
    throw SingularMatrixError("newton_step: eigendecomposition of J^T J failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cutoff = kNewtonRankTol * std::max(ev.maxCoeff(), 0.0);
  Eigen::VectorXd q = es.eigenvectors().transpose() * (-ne.gradient);
  pinv = false;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (ev[i] > cutoff && ev[i] > 0.0) {
      q[i] /= ev[i];
    } else {
      q[i] = 0.0;
      pinv = true;
    }
  }
  delta = es.eigenvectors() * q;
  if (!delta.allFinite()) throw SingularMatrixError("newton_step: normal equations unsolvable");
  return ne;
}

}  // namespace

Mlp newton_step(const Mlp& net, const Dataset& data, SampleOrder order, NewtonStepInfo* info) {
  Eigen::VectorXd delta;
  bool pinv = false;
  newton_direction(net, data, order, delta, pinv);
  if (info) info->used_pseudo_inverse = pinv;
  return net.with_parameters(net.flatten() + delta);
}

NewtonSearchResult newton_search_step(const Mlp& net, const Dataset& data, int max_halvings,
                                      SampleOrder order) {
  Eigen::VectorXd delta;
  bool pinv = false;
  const NormalEquations ne = newton_direction(net, data, order, delta, pinv);
  const Eigen::VectorXd theta = net.flatten();
  NewtonSearchResult res{net, ne.loss, 0.0, false, pinv};
  double step = 1.0;
  for (int k = 0; k <= max_halvings; ++k, step *= 0.5) {
    Mlp candidate = net.with_parameters(theta + step * delta);
    const double trial = loss_parallel(candidate, data, order);
    if (std::isfinite(trial) && trial < ne.loss) {
      res.net = std::move(candidate);
      res.loss = trial;
      res.step = step;
      res.accepted = true;
      return res;
    }
  }
  return res;
}

LmStepResult lm_step(const Mlp& net, const Dataset& data, double damping,
                     const TrainerConfig& config, SampleOrder order) {
  const NormalEquations ne = normal_equations_parallel(net, data, order);
  const Eigen::VectorXd theta = net.flatten();
  const Eigen::Index p = theta.size();
  LmStepResult res{net, damping, false, ne.loss, false};
  for (int attempt = 0; attempt < config.lm_max_retries; ++attempt) {
    Eigen::MatrixXd a = ne.hessian;
    a.diagonal().array() += res.damping;
    Eigen::VectorXd delta(p);
    if (!spd_solve(a, -ne.gradient, delta))
      throw SingularMatrixError("lm_step: damped normal equations are singular");
    Mlp candidate = net.with_parameters(theta + delta);
    const double trial = loss_parallel(candidate, data, order);
    if (std::isfinite(trial) && trial < ne.loss) {
      res.net = std::move(candidate);
      res.loss = trial;
      res.accepted = true;
      res.damping = std::max(res.damping * config.lm_damping_down, 1e-15);
      return res;
    }
    res.damping *= config.lm_damping_up;
    if (res.damping > config.lm_damping_max) {
      res.stalled = true;
      return res;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Epoch loop

std::vector<Eigen::Index> shuffled_order(Eigen::Index n, std::uint64_t seed, int epoch) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const std::uint64_t stream = derive_seed(seed, "shuffle", static_cast<std::uint64_t>(epoch));
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(counter_uniform(stream, static_cast<std::uint64_t>(i)) *
                                             static_cast<double>(i + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(std::min(j, i))]);
  }
  return order;
}

TrainResult train(const Mlp& initial, const Dataset& data, const TrainerConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  TrainResult result{initial, {}};
  TrainingReport& rep = result.report;
  rep.initial_loss = loss_parallel(initial, data);
  if (!std::isfinite(rep.initial_loss)) throw NumericalError("train: non-finite initial loss");
  rep.final_loss = rep.initial_loss;
  double damping = config.lm_damping_init;

  if (rep.initial_loss <= config.loss_goal) {
    rep.converged = true;
  } else {
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
      const auto order = shuffled_order(data.size(), config.shuffle_seed, epoch);
      double e = 0.0;
      switch (config.algorithm) {
        case Algorithm::gradient:
          result.net = gradient_step(result.net, data, config.learning_rate, order);
          e = loss_parallel(result.net, data, order);
          break;
        case Algorithm::newton: {
          NewtonSearchResult step =
              newton_search_step(result.net, data, config.newton_max_halvings, order);
          result.net = std::move(step.net);
          e = step.loss;
          rep.stalled = !step.accepted;
          break;
        }
        case Algorithm::levenberg_marquardt: {
          LmStepResult step = lm_step(result.net, data, damping, config, order);
          result.net = std::move(step.net);
          damping = step.damping;
          e = step.loss;
          rep.stalled = step.stalled;
          break;
        }
      }
      if (!std::isfinite(e))
        throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch));
      rep.loss_history.push_back(e);
      rep.epochs_used = epoch;
      rep.final_loss = e;
      if (e <= config.loss_goal) {
        rep.converged = true;
        break;
      }
      if (rep.stalled) break;
    }
  }
  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_report_csv(std::ostream& out, const TrainingReport& report) {
  CsvWriter csv(out);
  csv.header({"epoch", "loss"});
  for (std::size_t i = 0; i < report.loss_history.size(); ++i)
    csv.row({std::to_string(i + 1), format_double(report.loss_history[i])});
}

// ---------------------------------------------------------------------------
// Training set files: CSV body plus a key=value sidecar `<csv>.meta`.

namespace {

std::string join_values(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void save_training_set(const std::string& csv_path, const TrainingSet& set) {
  set.validate();
  const auto c = static_cast<Eigen::Index>(set.channels.size());
  std::vector<std::string> header;
  for (int d = 0; d <= set.memory_depth; ++d)
    for (int ch : set.channels) header.push_back("u_" + channel_name(ch) + "_k" + std::to_string(d));
  const Eigen::Index out = set.raw.targets.rows();
  const std::string target_prefix = out == kAxes ? "u" : "x";
  for (Eigen::Index i = 0; i < out; ++i) header.push_back(target_prefix + std::to_string(i + 1));
  {
    auto f = open_output(csv_path);
    CsvWriter csv(f);
    csv.header(header);
    std::vector<std::string> row(header.size());
    for (Eigen::Index s = 0; s < set.size(); ++s) {
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < set.raw.inputs.rows(); ++r)
        row[k++] = format_double(set.raw.inputs(r, s));
      for (Eigen::Index r = 0; r < out; ++r) row[k++] = format_double(set.raw.targets(r, s));
      csv.row(row);
    }
  }
  auto meta = open_output(csv_path + ".meta");
  meta << "memory_depth = " << set.memory_depth << '\n';
  meta << "channels = ";
  for (Eigen::Index i = 0; i < c; ++i)
    meta << (i ? "," : "") << channel_name(set.channels[static_cast<std::size_t>(i)]);
  meta << '\n';
  meta << "input_mean = " << join_values(set.input.mean) << '\n';
  meta << "input_std = " << join_values(set.input.std) << '\n';
  meta << "output_mean = " << join_values(set.output.mean) << '\n';
  meta << "output_std = " << join_values(set.output.std) << '\n';
  for (const auto& [k, v] : set.metadata) meta << "meta." << k << " = " << v << '\n';
}

TrainingSet load_training_set(const std::string& csv_path) {
  const auto kv = KeyValueFile::load(csv_path + ".meta");
  for (const auto& [k, v] : kv.entries())
    if (k.rfind("meta.", 0) != 0 && k != "memory_depth" && k != "channels" && k != "input_mean" &&
        k != "input_std" && k != "output_mean" && k != "output_std")
      throw ValidationError(kv.source() + ": unknown key '" + k + "'");
  TrainingSet set;
  set.memory_depth = static_cast<int>(kv.get_int("memory_depth"));
  set.channels = parse_channels(kv.get_list("channels"));
  set.input = {to_vector(kv.get_doubles("input_mean")), to_vector(kv.get_doubles("input_std"))};
  set.output = {to_vector(kv.get_doubles("output_mean")), to_vector(kv.get_doubles("output_std"))};
  for (const auto& [k, v] : kv.entries())
    if (k.rfind("meta.", 0) == 0) set.metadata[k.substr(5)] = v;

  std::ifstream in(csv_path);
  if (!in) throw ValidationError("cannot open '" + csv_path + "'");
  const CsvTable table = read_csv(in);
  const auto width = static_cast<Eigen::Index>(set.channels.size()) * (set.memory_depth + 1);
  const auto cols = static_cast<Eigen::Index>(table.header.size());
  if (cols <= width) throw DimensionError("training set: no target columns");
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  set.raw.inputs.resize(width, n);
  set.raw.targets.resize(cols - width, n);
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto& row = table.rows[static_cast<std::size_t>(s)];
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw DimensionError("training set: ragged row " + std::to_string(s + 2));
    for (Eigen::Index r = 0; r < cols; ++r) {
      const double v = parse_double(row[static_cast<std::size_t>(r)]);
      if (r < width) set.raw.inputs(r, s) = v;
      else set.raw.targets(r - width, s) = v;
    }
  }
  set.validate();
  return set;
}

}  // namespace gyronn
