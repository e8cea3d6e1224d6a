#include <benchmark/benchmark.h>

#include "bolab/discretize.hpp"
#include "bolab/eigensolve.hpp"
#include "bolab/expr.hpp"
#include "bolab/model.hpp"
#include "bolab/transverse.hpp"

using namespace bolab;

namespace {

ModelSpec standard_model() {
  ModelDescription d;
  d.f_expr = "1 + x^2";
  d.g_expr = "y^2";
  return validate_model(d);
}

void BM_ExprEval(benchmark::State& state) {
  const Expr e = Expr::parse("(x^2 + y^2 - 1)^2 * (2 + x * exp(-(x^2 + y^2 - 1)^8))", {"x", "y"});
  double x = 0.1;
  for (auto _ : state) {
    const double args[2] = {x, 0.7};
    benchmark::DoNotOptimize(e.eval(args));
    x += 1e-9;
  }
}
BENCHMARK(BM_ExprEval);

void BM_AssembleFibered(benchmark::State& state) {
  const ModelSpec model = standard_model();
  const int n = static_cast<int>(state.range(0));
  const Grid grid({Axis{4, n}, Axis{8, n}});
  for (auto _ : state) benchmark::DoNotOptimize(assemble_fibered(model, h_of_hbar(0.1, 2), grid, 4));
  state.SetComplexityN(static_cast<long>(grid.size()));
}
BENCHMARK(BM_AssembleFibered)->Arg(101)->Arg(201)->Arg(401)->Unit(benchmark::kMillisecond);

void BM_IterativeLowest(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto op = assemble_fibered(standard_model(), h_of_hbar(0.2, 2), Grid({Axis{4, n}, Axis{7, n}}), 4);
  IterativeOptions o;
  o.store_vectors = false;
  for (auto _ : state) benchmark::DoNotOptimize(iterative_lowest(op, 3, o));
}
BENCHMARK(BM_IterativeLowest)->Arg(61)->Arg(121)->Unit(benchmark::kMillisecond);

void BM_TransverseSpectrum(benchmark::State& state) {
  const Expr g = Expr::parse("y^4", {"y"});
  for (auto _ : state) benchmark::DoNotOptimize(transverse_spectrum(g, 4, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_TransverseSpectrum)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
