#include <benchmark/benchmark.h>

#include "covform/dynamics.hpp"

using namespace covform;

namespace {

LinearConnection su2_kappa(const Chart& c) {
  const Subalgebra alg = Subalgebra::su2();
  const GridField coef = make_trig_field(c, FiberSignature::internal(3, 1), 5, 1);
  LinearConnection k = LinearConnection::zero(c, 2, ScalarKind::complex);
  k.algebra = alg;
  for (std::size_t p = 0; p < c.points(); ++p)
    for (int a = 0; a < c.dim(); ++a)
      for (int I = 0; I < 3; ++I)
        for (int f = 0; f < 4; ++f) k.k.at(p, a, f) += coef.at(p, a, I).real() * alg.basis[I][f];
  return k;
}

void BM_Gradient(benchmark::State& state) {
  const Chart c = Chart::with_period(4, static_cast<int>(state.range(0)), 1.0);
  const GridField f = make_trig_field(c, FiberSignature::internal(2, 3, Rep::complementary), 1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(gradient(f));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * c.points()));
}
BENCHMARK(BM_Gradient)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Curvature(benchmark::State& state) {
  const Chart c = Chart::with_period(4, static_cast<int>(state.range(0)), 1.0);
  const LinearConnection k = su2_kappa(c);
  for (auto _ : state) benchmark::DoNotOptimize(curvature(k));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * c.points()));
}
BENCHMARK(BM_Curvature)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_ReplacementResidual(benchmark::State& state) {
  const Chart c = Chart::with_period(4, static_cast<int>(state.range(0)), 1.0);
  const LinearConnection k = su2_kappa(c);
  const SpacetimeConnection G = SpacetimeConnection::from_gamma(
      make_trig_field(c, FiberSignature{{tangent(), cotangent(), cotangent()}, 0, Rep::standard}, 2, 1));
  const FiberSignature sig = FiberSignature::internal(2, 2, Rep::complementary);
  const GridField xi = make_trig_field(c, sig, 3, 1, ScalarKind::complex);
  const FiberConnection K(c, sig, {&k});
  for (auto _ : state) benchmark::DoNotOptimize(replacement_residual(xi, G, K));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * c.points()));
}
BENCHMARK(BM_ReplacementResidual)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Momenta(benchmark::State& state) {
  SectorSpec spec;
  spec.sector = static_cast<Sector>(state.range(0));
  spec.n = spec.sector == Sector::gravity ? 1 : 2;
  spec.mass = 0.5;
  const FiberPoint pt = random_fiber_point(spec, 9);
  for (auto _ : state) benchmark::DoNotOptimize(momenta_analytic(spec, pt));
  state.SetLabel(sector_name(spec.sector));
}
BENCHMARK(BM_Momenta)->DenseRange(0, 3);

void BM_FieldEquations(benchmark::State& state) {
  const Chart c = Chart::with_period(4, static_cast<int>(state.range(0)), 1.0);
  SectorSpec spec;
  spec.sector = Sector::boson;
  spec.n = 2;
  spec.mass = 1.0;
  const FiberSignature ms = matter_signature(spec);
  const DFState s = prolong(spec, make_trig_field(c, ms, 4, 1, ScalarKind::complex),
                            make_trig_field(c, ms.dual(), 5, 1, ScalarKind::complex), su2_kappa(c), flat_background(c));
  for (auto _ : state) benchmark::DoNotOptimize(field_eq_residual(s));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * c.points()));
}
BENCHMARK(BM_FieldEquations)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_ActionVariation(benchmark::State& state) {
  const Chart c = Chart::with_period(4, 8, 1.0);
  SectorSpec spec;
  spec.sector = Sector::gauge;
  spec.n = 2;
  const ActionTools tools(prolong(spec, GridField{}, GridField{}, su2_kappa(c), flat_background(c)));
  const bool local = state.range(0) == 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(local ? tools.variation_oracle(FieldSlot::kappa, 100, 1, 2, 1e-5)
                                   : tools.variation_oracle_full(FieldSlot::kappa, 100, 1, 2, 1e-5));
  state.SetLabel(local ? "local" : "full");
}
BENCHMARK(BM_ActionVariation)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
