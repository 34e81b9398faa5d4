#include "wdncnn/optim.hpp"

#include <cmath>

#include "wdncnn/errors.hpp"
#include "wdncnn/rng.hpp"

namespace wdncnn {

void adam_step(const std::vector<Parameter*>& params, double lr, double beta1,
               double beta2, double eps) {
    if (!(lr > 0.0)) throw DomainError("adam_step: learning rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw DomainError("adam_step: betas must lie in [0, 1)");

    for (const Parameter* p : params) {
        if (!p->grad.all_finite())
            throw NumericError("adam_step: non-finite gradient in parameter '" +
                               p->name + "'");
    }

    for (Parameter* p : params) {
        p->step_count += 1;
        const double t = static_cast<double>(p->step_count);
        const double corr1 = 1.0 - std::pow(beta1, t);
        const double corr2 = 1.0 - std::pow(beta2, t);
        for (std::int64_t i = 0; i < p->value.numel(); ++i) {
            const double g = p->grad[i];
            p->adam_m[i] = beta1 * p->adam_m[i] + (1.0 - beta1) * g;
            p->adam_v[i] = beta2 * p->adam_v[i] + (1.0 - beta2) * g * g;
            const double mhat = p->adam_m[i] / corr1;
            const double vhat = p->adam_v[i] / corr2;
            p->value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

Tensor kaiming_normal_init(const Shape& shape, std::uint64_t seed) {
    if (shape.size() != 4)
        throw ShapeError(
            "kaiming_normal_init: expected a conv weight shape "
            "[Cout,Cin,kh,kw], got " +
            shape_str(shape));
    const double fan_in =
        static_cast<double>(shape[1]) * shape[2] * shape[3];
    const double stddev = std::sqrt(2.0 / fan_in);
    Rng rng(seed);
    Tensor t(shape);
    for (std::int64_t i = 0; i < t.numel(); ++i)
        t[i] = stddev * rng.normal();
    return t;
}

}  // namespace wdncnn
