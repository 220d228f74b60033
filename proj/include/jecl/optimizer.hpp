#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace jecl {

// One updatable tensor paired with its gradient for a step.
struct ParamRef {
    std::span<double> value;
    std::span<const double> grad;
};

// SGD+momentum and Adam over a fixed list of parameter slots. The caller
// must pass the same slots in the same order on every step; accumulator
// buffers are allocated on first use and shape-checked afterwards.
class Optimizer {
  public:
    enum class Kind : std::uint8_t { SgdMomentum, Adam };

    struct Config {
        Kind kind = Kind::Adam;
        double learning_rate = 1e-3;
        double momentum = 0.9;   // SGD only
        double beta1 = 0.9;      // Adam only
        double beta2 = 0.999;    // Adam only
        double epsilon = 1e-8;   // Adam only
        void validate() const;
    };

    explicit Optimizer(Config cfg);

    void step(std::span<const ParamRef> params);

    const Config& config() const { return cfg_; }
    std::uint64_t steps_taken() const { return t_; }

  private:
    Config cfg_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<double>> first_;   // momentum / Adam m
    std::vector<std::vector<double>> second_;  // Adam v
};

}  // namespace jecl
