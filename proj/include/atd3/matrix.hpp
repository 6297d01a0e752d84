#pragma once

#include <cstddef>
#include <cstdlib>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

namespace atd3::num {

// 64-byte-aligned storage. Alignment must be invariant across allocations:
// SIMD kernels peel differently for different base phases, and that would
// break bit-reproducibility between runs.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::size_t kAlign = 64;

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(std::size_t n) {
        if (n == 0) return nullptr;
        void* p = std::aligned_alloc(kAlign, ((n * sizeof(T) + kAlign - 1) / kAlign) * kAlign);
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) noexcept { std::free(p); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using AlignedVec = std::vector<double, AlignedAllocator<double>>;

// Dense row-major matrix of doubles. The only tensor type in the project;
// everything (windows, batches, parameters, scalars) is one of these.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    AlignedVec data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    static Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c, 0.0); }
    static Matrix scalar(double v) { return Matrix(1, 1, v); }

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::size_t size() const { return rows * cols; }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    bool is_scalar() const { return rows == 1 && cols == 1; }
    double scalar_value() const {
        if (!is_scalar()) throw std::logic_error("Matrix: scalar_value() on non 1x1");
        return data[0];
    }
    void resize(std::size_t r, std::size_t c) {
        rows = r;
        cols = c;
        data.assign(r * c, 0.0);
    }
    void fill(double v) { data.assign(data.size(), v); }

    bool all_finite() const;
    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }
};

// Kernels. All deterministic, all single-threaded. out must be pre-sized by
// the caller except where noted; acc=true accumulates instead of assigning.

// out (+)= op(a) * op(b) with optional transposes
void matmul_into(Matrix& out, const Matrix& a, bool transpose_a, const Matrix& b, bool transpose_b,
                 bool acc);

void add_into(Matrix& out, const Matrix& a, const Matrix& b);

// tanh computed as 1 - 2/(exp(2x)+1); vectorizes for doubles, exact at 0 and
// saturates cleanly to +-1 for large |x|
void tanh_into(Matrix& out, const Matrix& a);

// rows sum to 1 and stay strictly positive for finite input (max-subtracted)
void softmax_rows_into(Matrix& out, const Matrix& a);

void scale_into(Matrix& out, const Matrix& a, double k, bool acc);

// per-row scalar multiply: out_ij (+)= a_ij * s_i, s is rows x 1
void row_scale_into(Matrix& out, const Matrix& a, const Matrix& s, bool acc);

void min_into(Matrix& out, const Matrix& a, const Matrix& b);

double mse(const Matrix& a, const Matrix& b);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace atd3::num
