#include "lrmbayes/models.hpp"

#include <Eigen/LU>
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

using namespace lrmbayes;

namespace {

void check_deltas(const ExpFamilyModel& model, const StatePoint& x, const MatchingSet& M)
{
    for (const auto& m : M.moves(x)) {
        const auto y = lrmbayes::apply(x, m);
        const Eigen::VectorXd want = model.statistic(y) - model.statistic(x);
        CHECK((model.statistic_delta(x, m) - want).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(model.base_delta(x, m) == doctest::Approx(model.base_measure(y) - model.base_measure(x)));
    }
}

} // namespace

TEST_SUITE("models") {

TEST_CASE("CMP parameter maps")
{
    const CmpUnivariate m;
    const Eigen::Vector2d theta(4.0, 0.75);
    const auto eta = m.eta_of_theta(theta);
    CHECK(eta(0) == doctest::Approx(std::log(4.0)));
    CHECK(eta(1) == doctest::Approx(0.75));
    CHECK((m.theta_of_eta(eta) - theta).norm() < 1e-14);
    CHECK(m.statistic({3})(1) == doctest::Approx(-std::log(6.0)));
    CHECK(m.in_parameter_space(theta));
    CHECK_FALSE(m.in_parameter_space(Eigen::Vector2d(-1.0, 1.0)));
}

TEST_CASE("CMP log Jacobian matches a numerical determinant")
{
    const CmpUnivariate m;
    const Eigen::Vector2d theta(2.5, 1.1);
    Eigen::Matrix2d J;
    const double h = 1e-6;
    for (int j = 0; j < 2; ++j) {
        Eigen::Vector2d a = theta, b = theta;
        a(j) += h;
        b(j) -= h;
        J.col(j) = (m.eta_of_theta(a) - m.eta_of_theta(b)) / (2 * h);
    }
    CHECK(m.log_jacobian(theta) == doctest::Approx(std::log(std::abs(J.determinant()))).epsilon(1e-7));
}

TEST_CASE("graphical model indices and constraints")
{
    const CmpGraphical m(5);
    CHECK(m.dimension() == 2 * 5 + 10);
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = i + 1; j < 5; ++j) seen.insert(m.pair_index(i, j));
    CHECK(seen.size() == 10);
    CHECK(*seen.begin() == 5);
    CHECK(*seen.rbegin() == 14);
    const auto c = m.eta_constraints();
    REQUIRE(c.size() == m.dimension());
    for (std::size_t k = 0; k < 15; ++k) CHECK(c[k] == SignConstraint::None);
    for (std::size_t k = 15; k < 20; ++k) CHECK(c[k] == SignConstraint::Negative);
    Eigen::VectorXd theta = Eigen::VectorXd::Constant(20, 0.3);
    CHECK((m.theta_of_eta(m.eta_of_theta(theta)) - theta).norm() < 1e-14);
    CHECK(m.eta_of_theta(theta)(7) == doctest::Approx(-0.3));
}

TEST_CASE("property: statistic deltas equal statistic differences")
{
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<std::int64_t> cnt(0, 6);
    const CmpGraphical g(4);
    const auto Mg = build_offset_matching_set({-2, -1, 1, 2}, DomainSpec::counts(4));
    const CmpUnivariate u;
    const auto Mu = build_offset_matching_set({-1, 1}, DomainSpec::counts(1));
    const IngarchStep step(0.8, 1.3, -0.2);
    for (int rep = 0; rep < 60; ++rep) {
        StatePoint x(4);
        for (auto& v : x) v = cnt(rng);
        check_deltas(g, x, Mg);
        check_deltas(u, {x[0]}, Mu);
        check_deltas(step, {x[1]}, Mu);
    }
    const auto ising = MrfModel::ising({3, 4});
    const auto potts = MrfModel::potts({3, 4}, 3);
    const auto Mi = build_lattice_flip_matching_set(DomainSpec::lattice(3, 4, 2));
    const auto Mp = build_lattice_flip_matching_set(DomainSpec::lattice(3, 4, 3));
    for (int rep = 0; rep < 30; ++rep) {
        StatePoint a(12), b(12);
        for (auto& v : a) v = static_cast<std::int64_t>(rng() % 2);
        for (auto& v : b) v = static_cast<std::int64_t>(rng() % 3);
        check_deltas(ising, a, Mi);
        check_deltas(potts, b, Mp);
    }
}

TEST_CASE("Ising statistics by hand")
{
    const auto m = MrfModel::ising({2, 2});
    // spins: +1 -1 / +1 +1
    const StatePoint x{1, 0, 1, 1};
    const auto t = m.statistic(x);
    CHECK(t(0) == doctest::Approx(2.0));
    // pairs (0,1) -1, (2,3) +1, (0,2) +1, (1,3) -1
    CHECK(t(1) == doctest::Approx(0.0));
}

TEST_CASE("INGARCH recursion by direct loop")
{
    const std::vector<std::int64_t> xs{3, 0, 5, 2, 1};
    const double phi = 0.4, l0 = 1.7;
    const auto s = ingarch_statistics(xs, phi, l0);
    double a = 0.0, b = 0.0, c = std::log(l0);
    for (std::size_t t = 0; t < xs.size(); ++t) {
        CHECK(s.a[t] == doctest::Approx(a));
        CHECK(s.b[t] == doctest::Approx(b));
        CHECK(s.c[t] == doctest::Approx(c));
        b = 1.0 + phi * b;
        a = phi * a + std::log1p(static_cast<double>(xs[t]));
        c = phi * c;
    }
}

TEST_CASE("INGARCH step uses log lambda = c + theta1 b + theta2 a")
{
    const IngarchStep step(0.5, 2.0, 0.3);
    const Eigen::Vector3d theta(0.7, 0.4, 1.0);
    const auto eta = step.eta_of_theta(theta);
    const StatePoint x{4};
    const double log_lambda = 0.3 + 0.7 * 2.0 + 0.4 * 0.5;
    const double want = 4 * log_lambda - std::lgamma(5.0);
    CHECK(eta.dot(step.statistic(x)) + step.base_measure(x) == doctest::Approx(want));
}

} // TEST_SUITE
