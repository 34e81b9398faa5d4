#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wdncnn/tensor.hpp"

namespace wdncnn {

// A trainable tensor plus its ADAM state. Moments and step count start at
// zero and travel with the parameter through checkpoints.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor adam_m;
    Tensor adam_v;
    std::int64_t step_count = 0;

    Parameter() = default;
    Parameter(std::string name_, Tensor value_)
        : name(std::move(name_)),
          value(std::move(value_)),
          grad(value.shape()),
          adam_m(value.shape()),
          adam_v(value.shape())
 {}

    void zero_grad() {
        for (std::int64_t i = 0; i < grad.numel(); ++i) grad[i] = 0.0;
    }
};

// In-place ADAM update with bias correction. All gradients are validated
// before anything mutates, so a non-finite gradient aborts the whole step.
void adam_step(const std::vector<Parameter*>& params, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Zero-mean normal with std sqrt(2 / fan_in), fan_in = Cin*kh*kw; shape must
// be a convolution weight shape [Cout,Cin,kh,kw].
Tensor kaiming_normal_init(const Shape& shape, std::uint64_t seed);

}  // namespace wdncnn
