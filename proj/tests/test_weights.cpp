#include <doctest.h>

#include <cmath>
#include <vector>

#include "metawise/rng.hpp"
#include "metawise/weights.hpp"

using namespace metawise;

namespace {

MomentModel diagonal_model(std::vector<double> means, std::vector<double> variances,
                           double mu_y, double var_y = 0.0) {
    MomentModel model;
    const auto n = static_cast<Eigen::Index>(means.size());
    model.means = Eigen::Map<Eigen::VectorXd>(means.data(), n);
    model.covariance = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        model.covariance(i, i) = variances[static_cast<std::size_t>(i)];
    }
    model.criterion_mean = mu_y;
    model.criterion_variance = var_y;
    return model;
}

// Random PSD moment model: Sigma = A A' scaled down.
MomentModel random_model(RngStream& stream, std::size_t n) {
    Eigen::MatrixXd a(n, n);
    Eigen::VectorXd means(n);
    for (std::size_t i = 0; i < n; ++i) {
        means[static_cast<Eigen::Index>(i)] = stream.uniform(-10, 10);
        for (std::size_t j = 0; j < n; ++j) {
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                stream.uniform(-1, 1);
        }
    }
    MomentModel model;
    model.means = means;
    model.covariance = a * a.transpose();
    model.criterion_mean = stream.uniform(-10, 10);
    model.criterion_variance = stream.uniform(0, 2);
    return model;
}

}  // namespace

TEST_CASE("expected_crowd_sq_error: closed-form cases") {
    // One unbiased decision-maker with variance v: objective is v.
    const MomentModel one = diagonal_model({4.0}, {2.5}, 4.0);
    CHECK(expected_crowd_sq_error(CrowdWeights{{1.0}}, one) == doctest::Approx(2.5));

    // Two independent unbiased members, variance 1 each: variance of the mean.
    const MomentModel two = diagonal_model({3.0, 3.0}, {1.0, 1.0}, 3.0);
    CHECK(expected_crowd_sq_error(CrowdWeights::uniform(2), two) == doctest::Approx(0.5));

    // Bias term cancels, quadratic form remains: 0.5625*1 + 0.0625*4.
    const MomentModel biased = diagonal_model({5.0, 9.0}, {1.0, 4.0}, 6.0);
    CHECK(expected_crowd_sq_error(CrowdWeights{{0.75, 0.25}}, biased) ==
          doctest::Approx(0.8125).epsilon(1e-12));

    CHECK_THROWS_AS(expected_crowd_sq_error(CrowdWeights::uniform(3), two),
                    std::invalid_argument);
}

TEST_CASE("project_to_simplex: fixed points and hand-computed thresholds") {
    const auto fixed = project_to_simplex(std::vector<double>{0.2, 0.8});
    CHECK(fixed.values[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(fixed.values[1] == doctest::Approx(0.8).epsilon(1e-12));

    const auto corner = project_to_simplex(std::vector<double>{2.0, 0.0});
    CHECK(corner.values[0] == doctest::Approx(1.0));
    CHECK(corner.values[1] == doctest::Approx(0.0));

    const auto center = project_to_simplex(std::vector<double>{0.5, 0.5, 0.5});
    for (double w : center.values) CHECK(w == doctest::Approx(1.0 / 3).epsilon(1e-12));

    CHECK_THROWS_AS(project_to_simplex(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("project_to_simplex: optimality against random feasible points") {
    RngStream stream(61);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + stream.uniform_index(6);
        std::vector<double> v(n);
        for (auto& x : v) x = stream.uniform(-3, 3);
        const CrowdWeights projected = project_to_simplex(v);
        projected.validate();

        double projected_dist = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            projected_dist += (projected.values[i] - v[i]) * (projected.values[i] - v[i]);
        }
        // No random simplex point may be closer.
        for (int probe = 0; probe < 40; ++probe) {
            std::vector<double> p(n);
            double total = 0.0;
            for (auto& x : p) total += (x = -std::log(stream.uniform01() + 1e-300));
            double dist = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                p[i] /= total;
                dist += (p[i] - v[i]) * (p[i] - v[i]);
            }
            CHECK(projected_dist <= dist + 1e-12);
        }

        // Idempotent.
        const CrowdWeights twice = project_to_simplex(projected.values);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(twice.values[i] == doctest::Approx(projected.values[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("optimal_weights: inverse-variance solution for unbiased members") {
    const MomentModel model = diagonal_model({7.0, 7.0}, {1.0, 3.0}, 7.0);
    const WeightsSolution solution = optimal_weights(model);
    CHECK(solution.converged);
    CHECK(std::abs(solution.weights.values[0] - 0.75) < 1e-6);
    CHECK(std::abs(solution.weights.values[1] - 0.25) < 1e-6);
}

TEST_CASE("optimal_weights: perfect estimator takes all the weight") {
    MomentModel model = diagonal_model({10.0, 8.0, 12.0}, {0.0, 2.0, 3.0}, 10.0);
    const WeightsSolution solution = optimal_weights(model);
    CHECK(solution.converged);
    CHECK(solution.weights.values[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(solution.objective == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("optimal_weights: exchangeable members stay uniform") {
    MomentModel model = diagonal_model({5.0, 5.0, 5.0, 5.0}, {2.0, 2.0, 2.0, 2.0}, 6.0);
    const WeightsSolution solution = optimal_weights(model);
    CHECK(solution.converged);
    for (double w : solution.weights.values) {
        CHECK(w == doctest::Approx(0.25).epsilon(1e-9));
    }
}

TEST_CASE("optimal_weights: 2-member diagonal models match the analytic optimum") {
    // f(w) = (w mu1 + (1-w) mu2 - muY)^2 + w^2 v1 + (1-w)^2 v2 is quadratic
    // in the single free parameter; clamp its vertex into [0, 1].
    RngStream stream(71);
    for (int trial = 0; trial < 100; ++trial) {
        const double mu1 = stream.uniform(-5, 5);
        const double mu2 = stream.uniform(-5, 5);
        const double v1 = stream.uniform(0.05, 4.0);
        const double v2 = stream.uniform(0.05, 4.0);
        const double mu_y = stream.uniform(-5, 5);

        const double d = mu1 - mu2;
        const double denominator = d * d + v1 + v2;
        const double vertex = (v2 - d * (mu2 - mu_y)) / denominator;
        const double w_star = std::clamp(vertex, 0.0, 1.0);

        const MomentModel model = diagonal_model({mu1, mu2}, {v1, v2}, mu_y);
        const WeightsSolution solution = optimal_weights(model, 1e-12);
        CHECK(std::abs(solution.weights.values[0] - w_star) < 1e-6);
    }
}

TEST_CASE("optimal_weights: never worse than uniform, on the simplex, over PSD instances") {
    RngStream stream(81);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + stream.uniform_index(7);
        const MomentModel model = random_model(stream, n);
        const WeightsSolution solution = optimal_weights(model);

        double sum = 0.0;
        for (double w : solution.weights.values) {
            CHECK(w >= 0.0);
            sum += w;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);

        const double uniform_objective =
            expected_crowd_sq_error(CrowdWeights::uniform(n), model);
        CHECK(solution.objective <= uniform_objective + 1e-9);

        // Jensen at the moment level: uniform crowd error is at most the
        // average member's expected squared error.
        double member_average = 0.0;
        for (Eigen::Index i = 0; i < model.means.size(); ++i) {
            const double bias = model.means[i] - model.criterion_mean;
            member_average += bias * bias + model.covariance(i, i) + model.criterion_variance;
        }
        member_average /= static_cast<double>(n);
        CHECK(uniform_objective <= member_average + 1e-9);
    }
}

TEST_CASE("optimal_weights: translation invariance of the argmin") {
    RngStream stream(91);
    MomentModel model = random_model(stream, 4);
    const WeightsSolution base = optimal_weights(model);

    MomentModel shifted = model;
    shifted.means.array() += 123.5;
    shifted.criterion_mean += 123.5;
    const WeightsSolution moved = optimal_weights(shifted);

    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(moved.weights.values[i] == doctest::Approx(base.weights.values[i]).epsilon(1e-6));
    }
}

TEST_CASE("moment model validation and PSD gate") {
    MomentModel model = diagonal_model({1.0, 2.0}, {1.0, 1.0}, 0.0);
    CHECK_NOTHROW(model.validate());
    CHECK(min_covariance_eigenvalue(model) == doctest::Approx(1.0));

    model.covariance(0, 1) = 0.5;
    CHECK_THROWS_AS(model.validate(), std::invalid_argument);  // asymmetric

    model.covariance(1, 0) = 0.5;
    CHECK_NOTHROW(model.validate());

    // Indefinite covariance shows up as a negative eigenvalue.
    model.covariance(0, 1) = model.covariance(1, 0) = 2.0;
    CHECK(min_covariance_eigenvalue(model) < -1e-10);
}
