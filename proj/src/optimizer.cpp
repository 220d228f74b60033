#include "jecl/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace jecl {

void Optimizer::Config::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("optimizer: learning_rate must be > 0");
    if (momentum < 0.0 || momentum >= 1.0)
        throw std::invalid_argument("optimizer: momentum must be in [0,1)");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw std::invalid_argument("optimizer: beta parameters must be in [0,1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("optimizer: epsilon must be > 0");
}

Optimizer::Optimizer(Config cfg) : cfg_(cfg) { cfg_.validate(); }

void Optimizer::step(std::span<const ParamRef> params) {
    if (first_.empty()) {
        first_.resize(params.size());
        second_.resize(params.size());
        for (std::size_t s = 0; s < params.size(); ++s) {
            first_[s].assign(params[s].value.size(), 0.0);
            if (cfg_.kind == Kind::Adam) second_[s].assign(params[s].value.size(), 0.0);
        }
    } else if (params.size() != first_.size()) {
        throw std::logic_error("optimizer: slot count changed between steps");
    }

    for (std::size_t s = 0; s < params.size(); ++s) {
        const auto& p = params[s];
        if (p.value.size() != p.grad.size() || p.value.size() != first_[s].size())
            throw std::logic_error("optimizer: slot " + std::to_string(s) + " shape changed");
        for (std::size_t i = 0; i < p.grad.size(); ++i)
            if (!std::isfinite(p.grad[i]))
                throw std::runtime_error("optimizer: non-finite gradient in slot " +
                                         std::to_string(s) + " at index " + std::to_string(i));
    }

    ++t_;
    if (cfg_.kind == Kind::SgdMomentum) {
        for (std::size_t s = 0; s < params.size(); ++s) {
            auto& vel = first_[s];
            const auto& p = params[s];
            for (std::size_t i = 0; i < vel.size(); ++i) {
                vel[i] = cfg_.momentum * vel[i] - cfg_.learning_rate * p.grad[i];
                p.value[i] += vel[i];
            }
        }
        return;
    }

    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t s = 0; s < params.size(); ++s) {
        auto& m = first_[s];
        auto& v = second_[s];
        const auto& p = params[s];
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double g = p.grad[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p.value[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
    }
}

}  // namespace jecl
