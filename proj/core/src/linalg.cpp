#include "linalg.hpp"

#include "lrmbayes/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lrmbayes::detail {

double condition_estimate(const Eigen::MatrixXd& a)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double lo = ev.minCoeff();
    const double hi = ev.cwiseAbs().maxCoeff();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

Eigen::LLT<Eigen::MatrixXd> robust_cholesky(const Eigen::MatrixXd& a, const std::string& what)
{
    if (!a.allFinite()) throw NumericalError(what + " has non-finite entries");
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) return llt;

    const double scale = std::max(a.diagonal().cwiseAbs().mean(), 1.0);
    for (double jitter : {1e-12, 1e-10, 1e-8, 1e-6}) {
        Eigen::MatrixXd b = a;
        b.diagonal().array() += jitter * scale;
        llt.compute(b);
        if (llt.info() == Eigen::Success) return llt;
    }
    std::ostringstream os;
    os << what << " is not positive definite (condition estimate " << condition_estimate(a) << ")";
    throw NumericalError(os.str());
}

Eigen::MatrixXd spd_inverse(const Eigen::LLT<Eigen::MatrixXd>& llt)
{
    const auto n = llt.matrixL().rows();
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    return 0.5 * (inv + inv.transpose());
}

} // namespace lrmbayes::detail
