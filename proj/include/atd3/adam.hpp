#pragma once

#include "atd3/matrix.hpp"

#include <span>
#include <vector>

namespace atd3::num {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a fixed list of parameter matrices. Parameters are
// attached once, in declaration order; step() consumes gradients in the same
// order. A step with any non-finite gradient is skipped entirely (reported by
// the false return) so a single bad batch cannot poison the moments.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void attach(Matrix& param) {
        slots_.push_back({&param, Matrix::zeros(param.rows, param.cols),
                          Matrix::zeros(param.rows, param.cols)});
    }

    bool step(std::span<const Matrix* const> grads);

    long step_count() const { return step_; }
    long skipped_count() const { return skipped_; }
    const AdamConfig& config() const { return cfg_; }
    std::size_t slot_count() const { return slots_.size(); }

private:
    struct Slot {
        Matrix* param;
        Matrix m;  // first moment
        Matrix v;  // second moment
    };
    AdamConfig cfg_;
    std::vector<Slot> slots_;
    long step_ = 0;
    long skipped_ = 0;
};

}  // namespace atd3::num
