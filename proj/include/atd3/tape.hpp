#pragma once

#include "atd3/matrix.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace atd3::num {

// Thrown when a forward/backward pass hits non-finite values or an
// ill-formed record; the CLI maps this to the numerical-abort exit code.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class OpKind : std::uint8_t {
    Input,        // externally set data, no gradient kept
    Param,        // bound to caller-owned storage, gradient kept
    MatMul,
    Add,
    Tanh,
    SoftmaxRows,  // row-wise, max-subtracted
    ConcatCols,
    Slice,
    Scale,        // multiply by compile-time constant
    RowScale,     // multiply each row by a 1-column scalar node
    Mse,          // mean squared error reduction to 1x1
    MinElem,      // elementwise min
};

const char* op_name(OpKind k);

// A reusable computation record over a fixed, closed primitive set. Build the
// graph once, then alternate set-inputs / forward / backward as many times as
// needed; buffers are allocated at build time and never reallocated.
//
// Nodes are evaluated in insertion order (inputs always precede consumers by
// construction). Adjoints accumulate additively across consumers; the epoch
// counter stands in for zeroing every buffer on each backward pass.
class Tape {
public:
    using Id = int;

    struct Node {
        OpKind op;
        Id a = -1;
        Id b = -1;
        Matrix value;
        Matrix adjoint;
        std::uint32_t adj_epoch = 0;
        std::size_t r0 = 0, c0 = 0;  // slice origin
        double k = 0.0;              // scale constant
        Matrix* bound = nullptr;     // param storage
        std::string label;
    };

    Id input(std::size_t rows, std::size_t cols, std::string label = {});
    Id param(Matrix& storage, std::string label = {});

    Id matmul(Id a, Id b);
    Id add(Id a, Id b);
    Id tanh(Id a);
    Id softmax_rows(Id a);
    Id concat_cols(Id a, Id b);
    Id slice(Id a, std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols);
    Id scale(Id a, double k);
    Id row_scale(Id a, Id scalar_per_row);
    Id mse(Id pred, Id target);
    Id min_elem(Id a, Id b);

    // Mutable view of an input node's data (shape is fixed).
    Matrix& input_value(Id id);

    // Evaluates every node in order and returns the value of the terminal
    // (last) node. Rejects non-finite input/parameter data.
    const Matrix& forward();

    // Seeds d(terminal)/d(terminal) = 1 and propagates to all parameters.
    // Requires a prior forward() and a 1x1 terminal.
    void backward();

    const Matrix& value(Id id) const { return nodes_[check(id)].value; }

    // d(terminal)/d(node); zero matrix if the node did not reach the terminal
    const Matrix& adjoint(Id id) const;

    const std::vector<Id>& params() const { return params_; }
    const Node& node(Id id) const { return nodes_[check(id)]; }
    std::size_t node_count() const { return nodes_.size(); }
    Id terminal() const { return static_cast<Id>(nodes_.size()) - 1; }

private:
    Id push(Node n);
    int check(Id id) const;
    const Matrix& in_val(const Node& n, Id which) const { return nodes_[which == 0 ? n.a : n.b].value; }
    void eval(Node& n);
    void propagate(Node& n);
    // assign-or-accumulate `src` into the adjoint of node `dst`
    Matrix& adj_sink(Id dst, bool& fresh);

    std::vector<Node> nodes_;
    std::vector<Id> params_;
    std::uint32_t epoch_ = 0;
    bool forward_done_ = false;
    mutable Matrix zero_;  // returned for unreached adjoints
};

// Central-difference check of backward() against the record's own forward().
// Perturbs every parameter entry by +-h through the bound storage. This is the
// independent oracle for all gradient paths; it must stay free of any
// knowledge of the backward implementation.
struct GradCheckReport {
    double max_rel_err = 0.0;           // over every parameter entry
    // Same maximum but only over entries whose absolute disagreement exceeds
    // the resolution of central differences (~eps*|f|/h); below that the
    // comparison measures rounding, not the backward pass.
    double max_rel_err_resolved = 0.0;
    double noise_floor = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

GradCheckReport grad_check(Tape& tape, double h = 1e-5, double noise_floor = 1e-8);

}  // namespace atd3::num
