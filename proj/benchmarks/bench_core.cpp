#include "lrmbayes/baselines.hpp"
#include "lrmbayes/calibrate.hpp"
#include "lrmbayes/lrm.hpp"
#include "lrmbayes/models.hpp"
#include "lrmbayes/samplers.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace lrmbayes;

namespace {

std::vector<StatePoint> cmp_points(std::size_t n)
{
    Rng rng = make_rng({.seed = 1, .stream = 1});
    std::vector<StatePoint> out;
    for (auto x : sample_cmp_rejection(4.0, 1.25, n, rng)) out.push_back({x});
    return out;
}

GaussianPrior cmp_prior()
{
    return {Eigen::Vector2d(3.0, 3.0), Eigen::Matrix2d::Identity()};
}

void BM_BuildQuadraticCmp(benchmark::State& st)
{
    const auto data = cmp_points(static_cast<std::size_t>(st.range(0)));
    const CmpUnivariate model;
    const auto M = build_offset_matching_set({1}, DomainSpec::counts(1));
    const auto q = smooth(fit_empirical(data), 0.0, std::nullopt);
    for (auto _ : st) benchmark::DoNotOptimize(build_quadratic(model, data, M, q));
    st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_BuildQuadraticCmp)->RangeMultiplier(2)->Range(250, 8000)->Complexity();

void BM_ConjugateUpdate(benchmark::State& st)
{
    const CmpGraphical model(10);
    const auto p = static_cast<Eigen::Index>(model.dimension());
    const Eigen::MatrixXd a = Eigen::MatrixXd::Random(p, p);
    QuadraticLoss loss;
    loss.Lambda = a * a.transpose() / static_cast<double>(p) + Eigen::MatrixXd::Identity(p, p);
    loss.nu = Eigen::VectorXd::Random(p);
    loss.n = 878;
    const GaussianPrior prior{Eigen::VectorXd::Zero(p), Eigen::MatrixXd::Identity(p, p)};
    for (auto _ : st) benchmark::DoNotOptimize(conjugate_update(prior, loss, 0.5));
}
BENCHMARK(BM_ConjugateUpdate);

void BM_CalibrateCmp(benchmark::State& st)
{
    const auto data = cmp_points(2000);
    const CmpUnivariate model;
    const auto M = build_offset_matching_set({1}, DomainSpec::counts(1));
    const auto problem = lrm_problem(model, data, M, PmfRecipe{}, cmp_prior());
    CalibrationConfig cfg;
    cfg.bootstrap = static_cast<std::size_t>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(calibrate_beta(problem, cfg));
}
BENCHMARK(BM_CalibrateCmp)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_DfdLossDerivatives(benchmark::State& st)
{
    const auto data = cmp_points(2000);
    const CmpUnivariate model;
    const DfdLoss loss(model, data, DomainSpec::counts(1));
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    const Eigen::Vector2d eta(1.4, 1.25);
    for (auto _ : st) {
        loss.derivatives(eta, g, h);
        benchmark::DoNotOptimize(g.data());
    }
}
BENCHMARK(BM_DfdLossDerivatives);

void BM_TruncatedLikelihoodValue(benchmark::State& st)
{
    const auto data = cmp_points(2000);
    const TruncatedLikelihoodLoss loss(data);
    const Eigen::Vector2d eta(1.4, 1.25);
    for (auto _ : st) benchmark::DoNotOptimize(loss.value(eta));
}
BENCHMARK(BM_TruncatedLikelihoodValue);

void BM_RwmhCmpDfd(benchmark::State& st)
{
    auto data = std::make_shared<const std::vector<StatePoint>>(cmp_points(2000));
    const CmpUnivariate model;
    const auto loss = std::make_shared<const DfdLoss>(model, *data, DomainSpec::counts(1));
    const LossTarget target(LossKind::Dfd, loss, cmp_prior(), 1.0);
    RwmhOptions o;
    o.iterations = static_cast<std::size_t>(st.range(0));
    o.chains = 1;
    for (auto _ : st)
        benchmark::DoNotOptimize(rwmh(target.function(), Eigen::Vector2d(1.4, 1.25), Eigen::Vector2d(0.05, 0.02), o,
                                      {.seed = 3}));
}
BENCHMARK(BM_RwmhCmpDfd)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_GibbsSweepIsing(benchmark::State& st)
{
    const auto g = static_cast<std::size_t>(st.range(0));
    const auto model = MrfModel::ising({g, g});
    Rng rng = make_rng({.seed = 4});
    auto lattice = gibbs_lattice(model, Eigen::Vector2d(0.3, 0.15), 1, rng).lattice;
    for (auto _ : st) gibbs_sweeps(model, Eigen::Vector2d(0.3, 0.15), lattice, 1, rng);
    st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * g * g));
}
BENCHMARK(BM_GibbsSweepIsing)->Arg(50)->Arg(150)->Arg(250);

void BM_MrfLocalLoss(benchmark::State& st)
{
    const auto g = static_cast<std::size_t>(st.range(0));
    const auto model = MrfModel::ising({g, g});
    Rng rng = make_rng({.seed = 5});
    const std::vector<StatePoint> lat{gibbs_lattice(model, Eigen::Vector2d(0.3, 0.15), 50, rng).lattice};
    for (auto _ : st) {
        const auto table = fit_local_conditionals(lat, model.geometry(), 2, 0.1);
        benchmark::DoNotOptimize(mrf_local_loss(model, table, lat));
    }
}
BENCHMARK(BM_MrfLocalLoss)->Arg(50)->Arg(150)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
