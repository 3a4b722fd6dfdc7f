#include "metawise/weights.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "metawise/numeric.hpp"

namespace metawise {

namespace {

void require(bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
}

Eigen::VectorXd to_vector(const CrowdWeights& w) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(w.values.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = w.values[static_cast<std::size_t>(i)];
    return v;
}

CrowdWeights from_vector(const Eigen::VectorXd& v) {
    CrowdWeights w;
    w.values.assign(v.data(), v.data() + v.size());
    return w;
}

double objective(const Eigen::VectorXd& w, const MomentModel& model) {
    const double bias = w.dot(model.means) - model.criterion_mean;
    return bias * bias + w.dot(model.covariance * w) + model.criterion_variance;
}

Eigen::VectorXd gradient(const Eigen::VectorXd& w, const MomentModel& model) {
    const double bias = w.dot(model.means) - model.criterion_mean;
    return 2.0 * bias * model.means + 2.0 * (model.covariance * w);
}

Eigen::VectorXd project(const Eigen::VectorXd& v) {
    std::vector<double> copy(v.data(), v.data() + v.size());
    const CrowdWeights w = project_to_simplex(copy);
    return to_vector(w);
}

// Largest eigenvalue of 2 (mu mu' + Sigma) by power iteration; the Lipschitz
// constant of the gradient.
double lipschitz_estimate(const MomentModel& model) {
    const Eigen::Index n = model.means.size();
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double lambda = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
        Eigen::VectorXd next = 2.0 * (model.means * model.means.dot(v) + model.covariance * v);
        const double norm = next.norm();
        if (norm == 0.0) return 1.0;  // zero Hessian; any step works
        next /= norm;
        const double next_lambda = norm;
        if (std::abs(next_lambda - lambda) <= 1e-12 * std::max(1.0, next_lambda)) {
            return next_lambda;
        }
        lambda = next_lambda;
        v = next;
    }
    return std::max(lambda, 1e-12);
}

}  // namespace

void MomentModel::validate() const {
    require(means.size() >= 1, "moment model needs at least one decision-maker");
    require(covariance.rows() == means.size() && covariance.cols() == means.size(),
            "covariance dimensions must match the means");
    require(std::isfinite(criterion_mean) && std::isfinite(criterion_variance) &&
                criterion_variance >= 0.0,
            "criterion moments must be finite with nonnegative variance");
    for (Eigen::Index i = 0; i < means.size(); ++i) {
        require(std::isfinite(means[i]), "means must be finite");
        require(covariance(i, i) >= 0.0, "covariance diagonal must be nonnegative");
        for (Eigen::Index j = 0; j < i; ++j) {
            require(std::abs(covariance(i, j) - covariance(j, i)) <= 1e-10,
                    "covariance must be symmetric (within 1e-10)");
        }
    }
}

double min_covariance_eigenvalue(const MomentModel& model) {
    model.validate();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(model.covariance);
    return solver.eigenvalues().minCoeff();
}

double expected_crowd_sq_error(const CrowdWeights& weights, const MomentModel& model) {
    model.validate();
    require(weights.values.size() == model.size(),
            "expected_crowd_sq_error: weight dimension must match the model");
    weights.validate();
    return objective(to_vector(weights), model);
}

CrowdWeights project_to_simplex(std::span<const double> v) {
    require(!v.empty(), "project_to_simplex: input must be nonempty");
    for (double x : v) require(std::isfinite(x), "project_to_simplex: input must be finite");

    std::vector<double> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());

    double cumulative = 0.0;
    double tau = 0.0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        cumulative += sorted[j];
        const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (sorted[j] - candidate > 0.0) tau = candidate;
    }

    CrowdWeights w;
    w.values.resize(v.size());
    CompensatedSum total;
    for (std::size_t i = 0; i < v.size(); ++i) {
        w.values[i] = std::max(v[i] - tau, 0.0);
        total.add(w.values[i]);
    }
    // Exact renormalization absorbs the threshold's rounding.
    const double sum = total.value();
    for (double& x : w.values) x /= sum;
    return w;
}

WeightsSolution optimal_weights(const MomentModel& model, double tolerance,
                                std::size_t max_iterations) {
    model.validate();
    require(tolerance > 0.0, "optimal_weights: tolerance must be positive");
    require(max_iterations >= 1, "optimal_weights: need at least one iteration");

    const Eigen::Index n = model.means.size();
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    double f = objective(w, model);
    double step = 1.0 / std::max(lipschitz_estimate(model), 1e-12);

    WeightsSolution solution;
    solution.kkt_residual = std::numeric_limits<double>::infinity();

    std::size_t iter = 0;
    for (; iter < max_iterations; ++iter) {
        const Eigen::VectorXd g = gradient(w, model);
        const double residual = (w - project(w - g)).norm();
        if (residual <= tolerance) {
            solution.converged = true;
            solution.kkt_residual = residual;
            break;
        }
        solution.kkt_residual = residual;

        // Backtracking on the proximal decrease condition.
        double s = step;
        Eigen::VectorXd next;
        double f_next = 0.0;
        for (int bt = 0; bt < 60; ++bt) {
            next = project(w - s * g);
            f_next = objective(next, model);
            const double quad = (next - w).squaredNorm() / (2.0 * s);
            if (f_next <= f - quad + 1e-18 * std::abs(f)) break;
            s *= 0.5;
        }
        if ((next - w).norm() == 0.0) {
            // Projection returned the same point; treat as converged at the
            // achievable precision.
            solution.converged = solution.kkt_residual <= std::sqrt(tolerance);
            break;
        }
        w = next;
        f = f_next;
    }

    solution.iterations = iter;
    solution.weights = from_vector(w);
    solution.objective = f;
    return solution;
}

}  // namespace metawise
