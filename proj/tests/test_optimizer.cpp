#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "jecl/optimizer.hpp"

using jecl::Optimizer;
using jecl::ParamRef;

TEST_CASE("one SGD step without momentum") {
    Optimizer::Config cfg;
    cfg.kind = Optimizer::Kind::SgdMomentum;
    cfg.learning_rate = 0.1;
    cfg.momentum = 0.0;
    Optimizer opt(cfg);
    std::vector<double> param{1.0};
    std::vector<double> grad{2.0};
    const ParamRef ref{param, grad};
    opt.step(std::span<const ParamRef>(&ref, 1));
    CHECK(param[0] == doctest::Approx(0.8));
}

TEST_CASE("zero gradient leaves parameters unchanged") {
    Optimizer::Config cfg;
    cfg.kind = Optimizer::Kind::SgdMomentum;
    cfg.learning_rate = 0.5;
    cfg.momentum = 0.0;
    Optimizer opt(cfg);
    std::vector<double> param{3.0, -2.0};
    std::vector<double> grad{0.0, 0.0};
    const ParamRef ref{param, grad};
    opt.step(std::span<const ParamRef>(&ref, 1));
    CHECK(param[0] == 3.0);
    CHECK(param[1] == -2.0);
}

TEST_CASE("two Adam steps match a hand-iterated recurrence") {
    Optimizer::Config cfg;
    cfg.kind = Optimizer::Kind::Adam;
    cfg.learning_rate = 0.05;
    Optimizer opt(cfg);

    // Scalar quadratic loss f(x) = x^2, gradient 2x.
    double x = 1.0;
    std::vector<double> param{x};
    std::vector<double> grad{2.0 * x};

    // Independent hand iteration of the update rule.
    double hx = x, m = 0.0, v = 0.0;
    for (int t = 1; t <= 2; ++t) {
        const double g = 2.0 * hx;
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        const double mhat = m / (1.0 - std::pow(cfg.beta1, t));
        const double vhat = v / (1.0 - std::pow(cfg.beta2, t));
        hx -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }

    for (int t = 0; t < 2; ++t) {
        grad[0] = 2.0 * param[0];
        const ParamRef ref{param, grad};
        opt.step(std::span<const ParamRef>(&ref, 1));
    }
    CHECK(param[0] == doctest::Approx(hx).epsilon(1e-12));
}

TEST_CASE("non-finite gradient is a training error with diagnostics") {
    Optimizer opt({});
    std::vector<double> param{1.0};
    std::vector<double> grad{std::nan("")};
    const ParamRef ref{param, grad};
    CHECK_THROWS_AS(opt.step(std::span<const ParamRef>(&ref, 1)), std::runtime_error);
}

TEST_CASE("changing slot shapes between steps is rejected") {
    Optimizer opt({});
    std::vector<double> param{1.0, 2.0};
    std::vector<double> grad{0.1, 0.1};
    const ParamRef ref{param, grad};
    opt.step(std::span<const ParamRef>(&ref, 1));
    std::vector<double> small_param{1.0};
    std::vector<double> small_grad{0.1};
    const ParamRef bad{small_param, small_grad};
    CHECK_THROWS_AS(opt.step(std::span<const ParamRef>(&bad, 1)), std::logic_error);
}

TEST_CASE("invalid hyperparameters are rejected") {
    Optimizer::Config cfg;
    cfg.learning_rate = -1.0;
    CHECK_THROWS_AS(Optimizer{cfg}, std::invalid_argument);
    cfg.learning_rate = 0.1;
    cfg.momentum = 1.0;
    CHECK_THROWS_AS(Optimizer{cfg}, std::invalid_argument);
}
