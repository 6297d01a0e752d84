#include "atd3/matrix.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace atd3::num {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

CMap cmap(const Matrix& m) {
    return CMap(m.data.data(), static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
}
Map map(Matrix& m) {
    return Map(m.data.data(), static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
}

}  // namespace

bool Matrix::all_finite() const {
    for (const double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void matmul_into(Matrix& out, const Matrix& a, bool ta, const Matrix& b, bool tb, bool acc) {
    const std::size_t am = ta ? a.cols : a.rows;
    const std::size_t ak = ta ? a.rows : a.cols;
    const std::size_t bk = tb ? b.cols : b.rows;
    const std::size_t bn = tb ? b.rows : b.cols;
    if (ak != bk || out.rows != am || out.cols != bn)
        throw std::invalid_argument("matmul: incompatible shapes " + a.shape_str() + (ta ? "^T" : "") +
                                    " * " + b.shape_str() + (tb ? "^T" : "") + " -> " + out.shape_str());
    auto o = map(out);
    const auto ma = cmap(a);
    const auto mb = cmap(b);
    if (!ta && !tb) {
        if (acc) o.noalias() += ma * mb; else o.noalias() = ma * mb;
    } else if (ta && !tb) {
        if (acc) o.noalias() += ma.transpose() * mb; else o.noalias() = ma.transpose() * mb;
    } else if (!ta && tb) {
        if (acc) o.noalias() += ma * mb.transpose(); else o.noalias() = ma * mb.transpose();
    } else {
        if (acc) o.noalias() += ma.transpose() * mb.transpose(); else o.noalias() = ma.transpose() * mb.transpose();
    }
}

void add_into(Matrix& out, const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b) || !out.same_shape(a))
        throw std::invalid_argument("add: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    map(out) = cmap(a) + cmap(b);
}

void tanh_into(Matrix& out, const Matrix& a) {
    if (!out.same_shape(a)) throw std::invalid_argument("tanh: shape mismatch");
    map(out).array() = 1.0 - 2.0 / ((cmap(a).array() * 2.0).exp() + 1.0);
}

void softmax_rows_into(Matrix& out, const Matrix& a) {
    if (!out.same_shape(a)) throw std::invalid_argument("softmax: shape mismatch");
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* src = a.data.data() + i * a.cols;
        double* dst = out.data.data() + i * a.cols;
        double m = src[0];
        for (std::size_t j = 1; j < a.cols; ++j) m = std::max(m, src[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) {
            dst[j] = std::exp(src[j] - m);
            sum += dst[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < a.cols; ++j) dst[j] *= inv;
    }
}

void scale_into(Matrix& out, const Matrix& a, double k, bool acc) {
    if (!out.same_shape(a)) throw std::invalid_argument("scale: shape mismatch");
    if (acc) map(out) += cmap(a) * k; else map(out) = cmap(a) * k;
}

void row_scale_into(Matrix& out, const Matrix& a, const Matrix& s, bool acc) {
    if (s.cols != 1 || s.rows != a.rows || !out.same_shape(a))
        throw std::invalid_argument("row_scale: need s " + std::to_string(a.rows) + "x1, got " + s.shape_str());
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double k = s.data[i];
        const double* src = a.data.data() + i * a.cols;
        double* dst = out.data.data() + i * a.cols;
        if (acc)
            for (std::size_t j = 0; j < a.cols; ++j) dst[j] += src[j] * k;
        else
            for (std::size_t j = 0; j < a.cols; ++j) dst[j] = src[j] * k;
    }
}

void min_into(Matrix& out, const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b) || !out.same_shape(a))
        throw std::invalid_argument("min: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = std::min(a.data[i], b.data[i]);
}

double mse(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("mse: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

}  // namespace atd3::num
