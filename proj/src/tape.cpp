#include "atd3/tape.hpp"

#include <algorithm>
#include <cmath>

namespace atd3::num {

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::Input: return "input";
        case OpKind::Param: return "param";
        case OpKind::MatMul: return "matmul";
        case OpKind::Add: return "add";
        case OpKind::Tanh: return "tanh";
        case OpKind::SoftmaxRows: return "softmax_rows";
        case OpKind::ConcatCols: return "concat_cols";
        case OpKind::Slice: return "slice";
        case OpKind::Scale: return "scale";
        case OpKind::RowScale: return "row_scale";
        case OpKind::Mse: return "mse";
        case OpKind::MinElem: return "min";
    }
    return "?";
}

namespace {
[[noreturn]] void reject(int id, OpKind op, const std::string& what) {
    throw std::invalid_argument("tape node " + std::to_string(id) + " (" + op_name(op) + "): " + what);
}
}  // namespace

int Tape::check(Id id) const {
    if (id < 0 || id >= static_cast<Id>(nodes_.size()))
        throw std::logic_error("tape: bad node id " + std::to_string(id));
    return id;
}

Tape::Id Tape::push(Node n) {
    const Id id = static_cast<Id>(nodes_.size());
    n.adjoint = Matrix::zeros(n.value.rows, n.value.cols);
    nodes_.push_back(std::move(n));
    forward_done_ = false;
    return id;
}

Tape::Id Tape::input(std::size_t rows, std::size_t cols, std::string label) {
    Node n;
    n.op = OpKind::Input;
    n.value = Matrix::zeros(rows, cols);
    n.label = std::move(label);
    return push(std::move(n));
}

Tape::Id Tape::param(Matrix& storage, std::string label) {
    Node n;
    n.op = OpKind::Param;
    n.value = Matrix::zeros(storage.rows, storage.cols);
    n.bound = &storage;
    n.label = std::move(label);
    const Id id = push(std::move(n));
    params_.push_back(id);
    return id;
}

Tape::Id Tape::matmul(Id a, Id b) {
    const Matrix& va = nodes_[check(a)].value;
    const Matrix& vb = nodes_[check(b)].value;
    if (va.cols != vb.rows)
        reject(static_cast<Id>(nodes_.size()), OpKind::MatMul,
               va.shape_str() + " * " + vb.shape_str());
    Node n;
    n.op = OpKind::MatMul;
    n.a = a;
    n.b = b;
    n.value = Matrix::zeros(va.rows, vb.cols);
    return push(std::move(n));
}

Tape::Id Tape::add(Id a, Id b) {
    const Matrix& va = nodes_[check(a)].value;
    const Matrix& vb = nodes_[check(b)].value;
    if (!va.same_shape(vb))
        reject(static_cast<Id>(nodes_.size()), OpKind::Add, va.shape_str() + " + " + vb.shape_str());
    Node n;
    n.op = OpKind::Add;
    n.a = a;
    n.b = b;
    n.value = Matrix::zeros(va.rows, va.cols);
    return push(std::move(n));
}

Tape::Id Tape::tanh(Id a) {
    const Matrix& va = nodes_[check(a)].value;
    Node n;
    n.op = OpKind::Tanh;
    n.a = a;
    n.value = Matrix::zeros(va.rows, va.cols);
    return push(std::move(n));
}

Tape::Id Tape::softmax_rows(Id a) {
    const Matrix& va = nodes_[check(a)].value;
    Node n;
    n.op = OpKind::SoftmaxRows;
    n.a = a;
    n.value = Matrix::zeros(va.rows, va.cols);
    return push(std::move(n));
}

Tape::Id Tape::concat_cols(Id a, Id b) {
    const Matrix& va = nodes_[check(a)].value;
    const Matrix& vb = nodes_[check(b)].value;
    if (va.rows != vb.rows)
        reject(static_cast<Id>(nodes_.size()), OpKind::ConcatCols,
               va.shape_str() + " | " + vb.shape_str());
    Node n;
    n.op = OpKind::ConcatCols;
    n.a = a;
    n.b = b;
    n.value = Matrix::zeros(va.rows, va.cols + vb.cols);
    return push(std::move(n));
}

Tape::Id Tape::slice(Id a, std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) {
    const Matrix& va = nodes_[check(a)].value;
    if (r0 + rows > va.rows || c0 + cols > va.cols)
        reject(static_cast<Id>(nodes_.size()), OpKind::Slice,
               "region out of range for " + va.shape_str());
    Node n;
    n.op = OpKind::Slice;
    n.a = a;
    n.r0 = r0;
    n.c0 = c0;
    n.value = Matrix::zeros(rows, cols);
    return push(std::move(n));
}

Tape::Id Tape::scale(Id a, double k) {
    const Matrix& va = nodes_[check(a)].value;
    Node n;
    n.op = OpKind::Scale;
    n.a = a;
    n.k = k;
    n.value = Matrix::zeros(va.rows, va.cols);
    return push(std::move(n));
}

Tape::Id Tape::row_scale(Id a, Id s) {
    const Matrix& va = nodes_[check(a)].value;
    const Matrix& vs = nodes_[check(s)].value;
    if (vs.cols != 1 || vs.rows != va.rows)
        reject(static_cast<Id>(nodes_.size()), OpKind::RowScale,
               va.shape_str() + " row-scaled by " + vs.shape_str());
    Node n;
    n.op = OpKind::RowScale;
    n.a = a;
    n.b = s;
    n.value = Matrix::zeros(va.rows, va.cols);
    return push(std::move(n));
}

Tape::Id Tape::mse(Id pred, Id target) {
    const Matrix& vp = nodes_[check(pred)].value;
    const Matrix& vt = nodes_[check(target)].value;
    if (!vp.same_shape(vt))
        reject(static_cast<Id>(nodes_.size()), OpKind::Mse, vp.shape_str() + " vs " + vt.shape_str());
    Node n;
    n.op = OpKind::Mse;
    n.a = pred;
    n.b = target;
    n.value = Matrix::zeros(1, 1);
    return push(std::move(n));
}

Tape::Id Tape::min_elem(Id a, Id b) {
    const Matrix& va = nodes_[check(a)].value;
    const Matrix& vb = nodes_[check(b)].value;
    if (!va.same_shape(vb))
        reject(static_cast<Id>(nodes_.size()), OpKind::MinElem,
               va.shape_str() + " vs " + vb.shape_str());
    Node n;
    n.op = OpKind::MinElem;
    n.a = a;
    n.b = b;
    n.value = Matrix::zeros(va.rows, va.cols);
    return push(std::move(n));
}

Matrix& Tape::input_value(Id id) {
    Node& n = nodes_[check(id)];
    if (n.op != OpKind::Input) throw std::logic_error("tape: input_value on non-input node");
    forward_done_ = false;
    return n.value;
}

void Tape::eval(Node& n) {
    switch (n.op) {
        case OpKind::Input:
            break;
        case OpKind::Param:
            n.value.data = n.bound->data;
            break;
        case OpKind::MatMul:
            matmul_into(n.value, nodes_[n.a].value, false, nodes_[n.b].value, false, false);
            break;
        case OpKind::Add:
            add_into(n.value, nodes_[n.a].value, nodes_[n.b].value);
            break;
        case OpKind::Tanh:
            tanh_into(n.value, nodes_[n.a].value);
            break;
        case OpKind::SoftmaxRows:
            softmax_rows_into(n.value, nodes_[n.a].value);
            break;
        case OpKind::ConcatCols: {
            const Matrix& a = nodes_[n.a].value;
            const Matrix& b = nodes_[n.b].value;
            for (std::size_t i = 0; i < a.rows; ++i) {
                double* dst = n.value.data.data() + i * n.value.cols;
                std::copy_n(a.data.data() + i * a.cols, a.cols, dst);
                std::copy_n(b.data.data() + i * b.cols, b.cols, dst + a.cols);
            }
            break;
        }
        case OpKind::Slice: {
            const Matrix& a = nodes_[n.a].value;
            for (std::size_t i = 0; i < n.value.rows; ++i)
                std::copy_n(a.data.data() + (n.r0 + i) * a.cols + n.c0, n.value.cols,
                            n.value.data.data() + i * n.value.cols);
            break;
        }
        case OpKind::Scale:
            scale_into(n.value, nodes_[n.a].value, n.k, false);
            break;
        case OpKind::RowScale:
            row_scale_into(n.value, nodes_[n.a].value, nodes_[n.b].value, false);
            break;
        case OpKind::Mse:
            n.value.data[0] = num::mse(nodes_[n.a].value, nodes_[n.b].value);
            break;
        case OpKind::MinElem:
            min_into(n.value, nodes_[n.a].value, nodes_[n.b].value);
            break;
    }
}

const Matrix& Tape::forward() {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        Node& n = nodes_[i];
        if (n.op == OpKind::Input || n.op == OpKind::Param) {
            if (n.op == OpKind::Param) n.value.data = n.bound->data;
            if (!n.value.all_finite())
                throw numeric_error("tape node " + std::to_string(i) + " (" + op_name(n.op) +
                                    (n.label.empty() ? "" : " '" + n.label + "'") +
                                    "): non-finite data");
        } else {
            eval(n);
        }
    }
    forward_done_ = true;
    return nodes_.back().value;
}

Matrix& Tape::adj_sink(Id dst, bool& fresh) {
    Node& n = nodes_[dst];
    fresh = n.adj_epoch != epoch_;
    n.adj_epoch = epoch_;
    return n.adjoint;
}

void Tape::propagate(Node& n) {
    const Matrix& g = n.adjoint;
    bool fresh = false;
    switch (n.op) {
        case OpKind::Input:
        case OpKind::Param:
            return;
        case OpKind::MatMul: {
            // dA += G * B^T, dB += A^T * G
            Matrix& da = adj_sink(n.a, fresh);
            matmul_into(da, g, false, nodes_[n.b].value, true, !fresh);
            Matrix& db = adj_sink(n.b, fresh);
            matmul_into(db, nodes_[n.a].value, true, g, false, !fresh);
            return;
        }
        case OpKind::Add: {
            Matrix& da = adj_sink(n.a, fresh);
            if (fresh) da.data = g.data;
            else for (std::size_t i = 0; i < da.size(); ++i) da.data[i] += g.data[i];
            Matrix& db = adj_sink(n.b, fresh);
            if (fresh) db.data = g.data;
            else for (std::size_t i = 0; i < db.size(); ++i) db.data[i] += g.data[i];
            return;
        }
        case OpKind::Tanh: {
            // d/dx tanh = 1 - tanh^2, using the cached output
            Matrix& da = adj_sink(n.a, fresh);
            const Matrix& y = n.value;
            if (fresh)
                for (std::size_t i = 0; i < da.size(); ++i)
                    da.data[i] = g.data[i] * (1.0 - y.data[i] * y.data[i]);
            else
                for (std::size_t i = 0; i < da.size(); ++i)
                    da.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
            return;
        }
        case OpKind::SoftmaxRows: {
            // per row: dx_j = y_j * (g_j - sum_k g_k y_k)
            Matrix& da = adj_sink(n.a, fresh);
            const Matrix& y = n.value;
            for (std::size_t i = 0; i < y.rows; ++i) {
                const double* yr = y.data.data() + i * y.cols;
                const double* gr = g.data.data() + i * y.cols;
                double* dr = da.data.data() + i * y.cols;
                double dot = 0.0;
                for (std::size_t j = 0; j < y.cols; ++j) dot += gr[j] * yr[j];
                if (fresh)
                    for (std::size_t j = 0; j < y.cols; ++j) dr[j] = yr[j] * (gr[j] - dot);
                else
                    for (std::size_t j = 0; j < y.cols; ++j) dr[j] += yr[j] * (gr[j] - dot);
            }
            return;
        }
        case OpKind::ConcatCols: {
            const Matrix& a = nodes_[n.a].value;
            const Matrix& b = nodes_[n.b].value;
            Matrix& da = adj_sink(n.a, fresh);
            for (std::size_t i = 0; i < a.rows; ++i) {
                const double* gr = g.data.data() + i * g.cols;
                double* dr = da.data.data() + i * a.cols;
                if (fresh) std::copy_n(gr, a.cols, dr);
                else for (std::size_t j = 0; j < a.cols; ++j) dr[j] += gr[j];
            }
            Matrix& db = adj_sink(n.b, fresh);
            for (std::size_t i = 0; i < b.rows; ++i) {
                const double* gr = g.data.data() + i * g.cols + a.cols;
                double* dr = db.data.data() + i * b.cols;
                if (fresh) std::copy_n(gr, b.cols, dr);
                else for (std::size_t j = 0; j < b.cols; ++j) dr[j] += gr[j];
            }
            return;
        }
        case OpKind::Slice: {
            Matrix& da = adj_sink(n.a, fresh);
            if (fresh) da.fill(0.0);
            const Matrix& a = nodes_[n.a].value;
            for (std::size_t i = 0; i < g.rows; ++i) {
                const double* gr = g.data.data() + i * g.cols;
                double* dr = da.data.data() + (n.r0 + i) * a.cols + n.c0;
                for (std::size_t j = 0; j < g.cols; ++j) dr[j] += gr[j];
            }
            return;
        }
        case OpKind::Scale: {
            Matrix& da = adj_sink(n.a, fresh);
            scale_into(da, g, n.k, !fresh);
            return;
        }
        case OpKind::RowScale: {
            const Matrix& a = nodes_[n.a].value;
            const Matrix& s = nodes_[n.b].value;
            Matrix& da = adj_sink(n.a, fresh);
            row_scale_into(da, g, s, !fresh);
            Matrix& ds = adj_sink(n.b, fresh);
            for (std::size_t i = 0; i < a.rows; ++i) {
                const double* gr = g.data.data() + i * a.cols;
                const double* ar = a.data.data() + i * a.cols;
                double dot = 0.0;
                for (std::size_t j = 0; j < a.cols; ++j) dot += gr[j] * ar[j];
                if (fresh) ds.data[i] = dot;
                else ds.data[i] += dot;
            }
            return;
        }
        case OpKind::Mse: {
            const Matrix& p = nodes_[n.a].value;
            const Matrix& t = nodes_[n.b].value;
            const double c = 2.0 * g.data[0] / static_cast<double>(p.size());
            Matrix& dp = adj_sink(n.a, fresh);
            if (fresh)
                for (std::size_t i = 0; i < p.size(); ++i) dp.data[i] = c * (p.data[i] - t.data[i]);
            else
                for (std::size_t i = 0; i < p.size(); ++i) dp.data[i] += c * (p.data[i] - t.data[i]);
            Matrix& dt = adj_sink(n.b, fresh);
            if (fresh)
                for (std::size_t i = 0; i < p.size(); ++i) dt.data[i] = -c * (p.data[i] - t.data[i]);
            else
                for (std::size_t i = 0; i < p.size(); ++i) dt.data[i] -= c * (p.data[i] - t.data[i]);
            return;
        }
        case OpKind::MinElem: {
            // ties route to the first argument
            const Matrix& a = nodes_[n.a].value;
            const Matrix& b = nodes_[n.b].value;
            Matrix& da = adj_sink(n.a, fresh);
            if (fresh) da.fill(0.0);
            for (std::size_t i = 0; i < a.size(); ++i)
                if (a.data[i] <= b.data[i]) da.data[i] += g.data[i];
            Matrix& db = adj_sink(n.b, fresh);
            if (fresh) db.fill(0.0);
            for (std::size_t i = 0; i < a.size(); ++i)
                if (a.data[i] > b.data[i]) db.data[i] += g.data[i];
            return;
        }
    }
}

void Tape::backward() {
    if (!forward_done_) throw std::logic_error("tape: backward before forward");
    if (nodes_.empty()) throw std::logic_error("tape: empty record");
    Node& term = nodes_.back();
    if (!term.value.is_scalar())
        throw std::logic_error("tape: terminal node must be 1x1, is " + term.value.shape_str());
    ++epoch_;
    term.adjoint.data[0] = 1.0;
    term.adj_epoch = epoch_;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (n.adj_epoch != epoch_) continue;  // did not reach the terminal
        propagate(n);
    }
}

const Matrix& Tape::adjoint(Id id) const {
    const Node& n = nodes_[check(id)];
    if (n.adj_epoch != epoch_ || epoch_ == 0) {
        zero_.resize(n.value.rows, n.value.cols);
        return zero_;
    }
    return n.adjoint;
}

GradCheckReport grad_check(Tape& tape, double h, double noise_floor) {
    tape.forward();
    tape.backward();

    // snapshot analytic adjoints before perturbing anything
    std::vector<Matrix> analytic;
    analytic.reserve(tape.params().size());
    for (const Tape::Id p : tape.params()) analytic.push_back(tape.adjoint(p));

    GradCheckReport rep;
    rep.noise_floor = noise_floor;
    for (std::size_t pi = 0; pi < tape.params().size(); ++pi) {
        const Tape::Id pid = tape.params()[pi];
        Matrix& storage = *tape.node(pid).bound;
        for (std::size_t i = 0; i < storage.size(); ++i) {
            const double saved = storage.data[i];
            storage.data[i] = saved + h;
            const double fp = tape.forward().scalar_value();
            storage.data[i] = saved - h;
            const double fm = tape.forward().scalar_value();
            storage.data[i] = saved;
            const double numeric = (fp - fm) / (2.0 * h);
            const double exact = analytic[pi].data[i];
            const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
            const double rel = std::abs(exact - numeric) / denom;
            if (std::abs(exact - numeric) > noise_floor)
                rep.max_rel_err_resolved = std::max(rep.max_rel_err_resolved, rel);
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst_param = tape.node(pid).label;
                rep.worst_index = i;
                rep.worst_analytic = exact;
                rep.worst_numeric = numeric;
            }
        }
    }
    tape.forward();  // restore cached values
    return rep;
}

}  // namespace atd3::num
