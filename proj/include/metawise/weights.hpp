// Optimal crowd-aggregation weights: minimize the expected squared error of
// the weighted crowd estimate over the probability simplex.
//
// For C = w . X with X independent of Y, the objective is
//   (w . mu - mu_Y)^2 + w' Sigma w + sigma_Y^2,
// a convex quadratic; sigma_Y^2 is an additive constant and does not move
// the argmin. Solved by projected gradient with backtracking from the
// uniform start, with the step initialized at 1/L from a power-iteration
// estimate of the Hessian norm.

#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>

#include "metawise/core.hpp"

namespace metawise {

struct MomentModel {
    Eigen::VectorXd means;        // mu_i per decision-maker
    Eigen::MatrixXd covariance;   // Sigma, symmetric positive-semidefinite
    double criterion_mean = 0.0;
    double criterion_variance = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(means.size()); }

    // Shape/symmetry/diagonal checks; PSD is checked separately because the
    // caller may want the offending eigenvalue.
    void validate() const;
};

// Smallest eigenvalue of the covariance; negative means not PSD.
double min_covariance_eigenvalue(const MomentModel& model);

double expected_crowd_sq_error(const CrowdWeights& weights, const MomentModel& model);

// Euclidean projection onto the probability simplex (sorted-threshold rule).
CrowdWeights project_to_simplex(std::span<const double> v);

struct WeightsSolution {
    CrowdWeights weights;
    double objective = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    double kkt_residual = 0.0;
};

// Projected-gradient minimization. Converged means the fixed-point residual
// ||w - P(w - grad f(w))|| fell below tolerance; otherwise the best iterate
// found is returned with converged = false.
WeightsSolution optimal_weights(const MomentModel& model, double tolerance = 1e-10,
                                std::size_t max_iterations = 200000);

}  // namespace metawise
