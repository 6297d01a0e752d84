#include "atd3/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace atd3::num {

bool Adam::step(std::span<const Matrix* const> grads) {
    if (grads.size() != slots_.size())
        throw std::invalid_argument("adam: expected " + std::to_string(slots_.size()) +
                                    " gradients, got " + std::to_string(grads.size()));
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        if (!grads[i]->same_shape(*slots_[i].param))
            throw std::invalid_argument("adam: gradient shape " + grads[i]->shape_str() +
                                        " != parameter shape " + slots_[i].param->shape_str());
        if (!grads[i]->all_finite()) {
            ++skipped_;
            return false;
        }
    }
    ++step_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        Slot& s = slots_[i];
        const Matrix& g = *grads[i];
        for (std::size_t j = 0; j < g.size(); ++j) {
            const double gj = g.data[j];
            s.m.data[j] = cfg_.beta1 * s.m.data[j] + (1.0 - cfg_.beta1) * gj;
            s.v.data[j] = cfg_.beta2 * s.v.data[j] + (1.0 - cfg_.beta2) * gj * gj;
            const double mhat = s.m.data[j] / c1;
            const double vhat = s.v.data[j] / c2;
            s.param->data[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
    return true;
}

}  // namespace atd3::num
