#include <benchmark/benchmark.h>

#include <map>

#include "gyronn/kernels.hpp"
#include "gyronn/seeding.hpp"

using namespace gyronn;

namespace {

// Reference observer shape: 2 channels x 7 delays -> 6 tansig -> 6 states.
struct Problem {
  Mlp net;
  Dataset data;

  explicit Problem(Eigen::Index n) {
    const std::vector<int> sizes = {14, 6, 6};
    const std::vector<Activation> acts = {Activation::tansig, Activation::purelin};
    net = Mlp::random(sizes, acts, 1);
    data.inputs.resize(14, n);
    data.targets.resize(6, n);
    for (Eigen::Index i = 0; i < data.inputs.size(); ++i)
      data.inputs.data()[i] = counter_normal(2, static_cast<std::uint64_t>(i));
    for (Eigen::Index i = 0; i < data.targets.size(); ++i)
      data.targets.data()[i] = counter_normal(3, static_cast<std::uint64_t>(i));
  }
};

const Problem& problem(Eigen::Index n) {
  static std::map<Eigen::Index, Problem> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, Problem(n)).first;
  return it->second;
}

template <auto Fn>
void run(benchmark::State& state) {
  const Problem& p = problem(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(p.net, p.data, {}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

double loss_s(const Mlp& n, const Dataset& d, SampleOrder o) { return loss_serial(n, d, o); }
double loss_p(const Mlp& n, const Dataset& d, SampleOrder o) { return loss_parallel(n, d, o); }
Eigen::VectorXd grad_s(const Mlp& n, const Dataset& d, SampleOrder o) { return gradient_serial(n, d, o); }
Eigen::VectorXd grad_p(const Mlp& n, const Dataset& d, SampleOrder o) { return gradient_parallel(n, d, o); }

}  // namespace

BENCHMARK(run<loss_s>)->Name("loss/serial")->Arg(4750)->Arg(19000);
BENCHMARK(run<loss_p>)->Name("loss/parallel")->Arg(4750)->Arg(19000);
BENCHMARK(run<grad_s>)->Name("gradient/serial")->Arg(4750)->Arg(19000);
BENCHMARK(run<grad_p>)->Name("gradient/parallel")->Arg(4750)->Arg(19000);
BENCHMARK(run<normal_equations_serial>)->Name("normal_equations/serial")->Arg(4750)->Arg(19000);
BENCHMARK(run<normal_equations_parallel>)->Name("normal_equations/parallel")->Arg(4750)->Arg(19000);

BENCHMARK_MAIN();
