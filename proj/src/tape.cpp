#include "bgnn/tape.hpp"

#include <cmath>
#include <cstring>

namespace bgnn::ad {

namespace {

void require_same_shape(const Value& a, const Value& b, const char* op) {
    if (!a.t().same_shape(b.t()))
        throw ShapeError(std::string(op) + ": operand shapes differ");
}

Tape* common_tape(const std::vector<const Value*>& vals) {
    Tape* tape = nullptr;
    for (const Value* v : vals) {
        if (!v->tracked()) continue;
        if (tape == nullptr) tape = v->tape;
        else if (tape != v->tape) throw ContractError("operands recorded on different tapes");
    }
    return tape;
}

std::shared_ptr<const Tensor> share(Tensor t) {
    return std::make_shared<const Tensor>(std::move(t));
}

// ---- dense kernels ---------------------------------------------------------

Tensor k_matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
    Tensor out(a.rows(), b.cols());
    const int r = a.rows(), k = a.cols(), c = b.cols();
    for (int i = 0; i < r; ++i) {
        const double* arow = a.data() + static_cast<std::size_t>(i) * k;
        double* orow = out.data() + static_cast<std::size_t>(i) * c;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b.data() + static_cast<std::size_t>(p) * c;
            for (int j = 0; j < c; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

// A^T * b accumulated into `into`
void k_matmul_at_acc(const Tensor& a, const Tensor& g, Tensor& into) {
    // into (a.cols x g.cols) += a^T g
    const int r = a.rows(), k = a.cols(), c = g.cols();
    for (int i = 0; i < r; ++i) {
        const double* arow = a.data() + static_cast<std::size_t>(i) * k;
        const double* grow = g.data() + static_cast<std::size_t>(i) * c;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* irow = into.data() + static_cast<std::size_t>(p) * c;
            for (int j = 0; j < c; ++j) irow[j] += av * grow[j];
        }
    }
}

// g * b^T accumulated into `into`
void k_matmul_bt_acc(const Tensor& g, const Tensor& b, Tensor& into) {
    // into (g.rows x b.rows) += g b^T
    const int r = g.rows(), c = g.cols(), k = b.rows();
    for (int i = 0; i < r; ++i) {
        const double* grow = g.data() + static_cast<std::size_t>(i) * c;
        double* irow = into.data() + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double* brow = b.data() + static_cast<std::size_t>(p) * c;
            double s = 0.0;
            for (int j = 0; j < c; ++j) s += grow[j] * brow[j];
            irow[p] += s;
        }
    }
}

Tensor k_transpose(const Tensor& a) {
    Tensor out(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

// Cholesky factor (lower) of a symmetric positive definite matrix.
Tensor k_cholesky(const Tensor& a) {
    const int n = a.rows();
    if (a.cols() != n) throw ShapeError("cholesky: matrix not square");
    Tensor L(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (int p = 0; p < j; ++p) s -= L(i, p) * L(j, p);
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s))
                    throw SingularError("non-positive pivot in SPD factorization");
                L(i, i) = std::sqrt(s);
            } else {
                L(i, j) = s / L(j, j);
            }
        }
    }
    return L;
}

// Solve (L L^T) X = B given the Cholesky factor.
Tensor k_chol_solve(const Tensor& L, const Tensor& b) {
    const int n = L.rows(), m = b.cols();
    if (b.rows() != n) throw ShapeError("chol_solve: rhs rows mismatch");
    Tensor x = b;
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < n; ++i) {           // forward substitution
            double s = x(i, j);
            for (int p = 0; p < i; ++p) s -= L(i, p) * x(p, j);
            x(i, j) = s / L(i, i);
        }
        for (int i = n - 1; i >= 0; --i) {      // backward substitution
            double s = x(i, j);
            for (int p = i + 1; p < n; ++p) s -= L(p, i) * x(p, j);
            x(i, j) = s / L(i, i);
        }
    }
    return x;
}

} // namespace

Value constant(Tensor t) {
    Value v;
    v.v = share(std::move(t));
    return v;
}

Value constant(double scalar) { return constant(Tensor::scalar(scalar)); }

Value Tape::leaf(Tensor t) {
    Node n;
    n.op = OpKind::Leaf;
    n.out = share(std::move(t));
    Value v;
    v.v = n.out;
    v.tape = this;
    v.node = record(std::move(n));
    return v;
}

int Tape::record(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
}

namespace {

/// Builds the result Value and records a node when any input is tracked.
Value emit(OpKind op, std::vector<Value> inputs, Tensor out,
           double c = 0.0, int i0 = 0, int i1 = 0,
           std::shared_ptr<const std::vector<int>> index = nullptr,
           std::shared_ptr<const std::vector<Tensor>> basis = nullptr,
           std::shared_ptr<const Tensor> base = nullptr,
           std::shared_ptr<const Tensor> chol = nullptr);

} // namespace

struct TapeAccess {
    static Value emit_node(OpKind op, Tape* tape, std::vector<Value> inputs,
                           std::shared_ptr<const Tensor> out, double c, int i0, int i1,
                           std::shared_ptr<const std::vector<int>> index,
                           std::shared_ptr<const std::vector<Tensor>> basis,
                           std::shared_ptr<const Tensor> base,
                           std::shared_ptr<const Tensor> chol) {
        Value v;
        v.v = out;
        if (tape != nullptr) {
            Tape::Node n;
            n.op = op;
            n.in = std::move(inputs);
            n.out = out;
            n.c = c;
            n.i0 = i0;
            n.i1 = i1;
            n.index = std::move(index);
            n.basis = std::move(basis);
            n.base = std::move(base);
            n.chol = std::move(chol);
            v.tape = tape;
            v.node = tape->record(std::move(n));
        }
        return v;
    }
};

namespace {

Value emit(OpKind op, std::vector<Value> inputs, Tensor out,
           double c, int i0, int i1,
           std::shared_ptr<const std::vector<int>> index,
           std::shared_ptr<const std::vector<Tensor>> basis,
           std::shared_ptr<const Tensor> base,
           std::shared_ptr<const Tensor> chol) {
    std::vector<const Value*> ptrs;
    ptrs.reserve(inputs.size());
    for (const Value& v : inputs) ptrs.push_back(&v);
    Tape* tape = common_tape(ptrs);
    return TapeAccess::emit_node(op, tape, std::move(inputs), share(std::move(out)),
                                 c, i0, i1, std::move(index), std::move(basis),
                                 std::move(base), std::move(chol));
}

Tensor map_unary(const Tensor& a, double (*f)(double)) {
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

} // namespace

Value add(const Value& a, const Value& b) {
    require_same_shape(a, b, "add");
    Tensor out = a.t();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.t()[i];
    return emit(OpKind::Add, {a, b}, std::move(out));
}

Value sub(const Value& a, const Value& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a.t();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.t()[i];
    return emit(OpKind::Sub, {a, b}, std::move(out));
}

Value mul(const Value& a, const Value& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a.t();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.t()[i];
    return emit(OpKind::Mul, {a, b}, std::move(out));
}

Value div(const Value& a, const Value& b) {
    require_same_shape(a, b, "div");
    Tensor out = a.t();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= b.t()[i];
    return emit(OpKind::Div, {a, b}, std::move(out));
}

Value neg(const Value& a) {
    Tensor out = a.t();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = -out[i];
    return emit(OpKind::Neg, {a}, std::move(out));
}

Value relu(const Value& a) {
    Tensor out = a.t();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    return emit(OpKind::Relu, {a}, std::move(out));
}

Value tanh(const Value& a) {
    return emit(OpKind::Tanh, {a}, map_unary(a.t(), [](double x) { return std::tanh(x); }));
}

Value sigmoid(const Value& a) {
    return emit(OpKind::Sigmoid, {a},
                map_unary(a.t(), [](double x) { return 1.0 / (1.0 + std::exp(-x)); }));
}

Value sqrt(const Value& a) {
    return emit(OpKind::Sqrt, {a}, map_unary(a.t(), [](double x) { return std::sqrt(x); }));
}

Value square(const Value& a) {
    return emit(OpKind::Square, {a}, map_unary(a.t(), [](double x) { return x * x; }));
}

Value log1p(const Value& a) {
    return emit(OpKind::Log1p, {a}, map_unary(a.t(), [](double x) { return std::log1p(x); }));
}

Value scale(const Value& a, double c) {
    Tensor out = a.t();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
    return emit(OpKind::Scale, {a}, std::move(out), c);
}

Value add_const(const Value& a, double c) {
    Tensor out = a.t();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c;
    return emit(OpKind::AddConst, {a}, std::move(out), c);
}

namespace {
void require_rowvec(const Value& a, const Value& v, const char* op) {
    if (v.rows() != 1 || v.cols() != a.cols())
        throw ShapeError(std::string(op) + ": broadcast vector must be 1 x cols");
}
} // namespace

Value add_rowvec(const Value& a, const Value& v) {
    require_rowvec(a, v, "add_rowvec");
    Tensor out = a.t();
    for (int i = 0; i < out.rows(); ++i)
        for (int j = 0; j < out.cols(); ++j) out(i, j) += v.t()(0, j);
    return emit(OpKind::AddRowVec, {a, v}, std::move(out));
}

Value mul_rowvec(const Value& a, const Value& v) {
    require_rowvec(a, v, "mul_rowvec");
    Tensor out = a.t();
    for (int i = 0; i < out.rows(); ++i)
        for (int j = 0; j < out.cols(); ++j) out(i, j) *= v.t()(0, j);
    return emit(OpKind::MulRowVec, {a, v}, std::move(out));
}

Value div_rowvec(const Value& a, const Value& v) {
    require_rowvec(a, v, "div_rowvec");
    Tensor out = a.t();
    for (int i = 0; i < out.rows(); ++i)
        for (int j = 0; j < out.cols(); ++j) out(i, j) /= v.t()(0, j);
    return emit(OpKind::DivRowVec, {a, v}, std::move(out));
}

Value matmul(const Value& a, const Value& b) {
    return emit(OpKind::MatMul, {a, b}, k_matmul(a.t(), b.t()));
}

Value transpose(const Value& a) {
    return emit(OpKind::Transpose, {a}, k_transpose(a.t()));
}

Value concat_cols(const std::vector<Value>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: empty input list");
    const int rows = parts.front().rows();
    int cols = 0;
    for (const Value& p : parts) {
        if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
        cols += p.cols();
    }
    Tensor out(rows, cols);
    int off = 0;
    for (const Value& p : parts) {
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < p.cols(); ++j) out(i, off + j) = p.t()(i, j);
        off += p.cols();
    }
    return emit(OpKind::ConcatCols, parts, std::move(out));
}

Value slice_cols(const Value& a, int c0, int c1) {
    if (c0 < 0 || c1 > a.cols() || c0 >= c1) throw ShapeError("slice_cols: bad column range");
    Tensor out(a.rows(), c1 - c0);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = c0; j < c1; ++j) out(i, j - c0) = a.t()(i, j);
    return emit(OpKind::SliceCols, {a}, std::move(out), 0.0, c0, c1);
}

Value gather_rows(const Value& a, std::shared_ptr<const std::vector<int>> index) {
    Tensor out(static_cast<int>(index->size()), a.cols());
    for (std::size_t r = 0; r < index->size(); ++r) {
        const int src = (*index)[r];
        if (src < 0 || src >= a.rows()) throw ContractError("gather_rows: index out of range");
        for (int j = 0; j < a.cols(); ++j) out(static_cast<int>(r), j) = a.t()(src, j);
    }
    return emit(OpKind::GatherRows, {a}, std::move(out), 0.0, 0, 0, std::move(index));
}

Value segment_sum(const Value& a, std::shared_ptr<const std::vector<int>> index, int segments) {
    if (static_cast<int>(index->size()) != a.rows())
        throw ShapeError("segment_sum: index size must equal rows");
    Tensor out(segments, a.cols());
    for (int r = 0; r < a.rows(); ++r) {
        const int dst = (*index)[static_cast<std::size_t>(r)];
        if (dst < 0 || dst >= segments) throw ContractError("segment_sum: index out of range");
        for (int j = 0; j < a.cols(); ++j) out(dst, j) += a.t()(r, j);
    }
    return emit(OpKind::SegmentSum, {a}, std::move(out), 0.0, 0, segments, std::move(index));
}

Value row_sum(const Value& a) {
    Tensor out(a.rows(), 1);
    for (int i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols(); ++j) s += a.t()(i, j);
        out(i, 0) = s;
    }
    return emit(OpKind::RowSum, {a}, std::move(out));
}

Value col_sum(const Value& a) {
    Tensor out(1, a.cols());
    for (int j = 0; j < a.cols(); ++j) {
        double s = 0.0;
        for (int i = 0; i < a.rows(); ++i) s += a.t()(i, j);
        out(0, j) = s;
    }
    return emit(OpKind::ColSum, {a}, std::move(out));
}

Value sum_all(const Value& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.t().size(); ++i) s += a.t()[i];
    return emit(OpKind::SumAll, {a}, Tensor::scalar(s));
}

Value diag_vec(const Value& a) {
    if (a.rows() != a.cols()) throw ShapeError("diag_vec: matrix not square");
    Tensor out(a.rows(), 1);
    for (int i = 0; i < a.rows(); ++i) out(i, 0) = a.t()(i, i);
    return emit(OpKind::DiagVec, {a}, std::move(out));
}

Value reduce_min(const Value& a) {
    if (a.t().size() == 0) throw ContractError("reduce_min: empty tensor");
    std::size_t arg = 0;
    for (std::size_t i = 1; i < a.t().size(); ++i)
        if (a.t()[i] < a.t()[arg]) arg = i;
    return emit(OpKind::ReduceMin, {a}, Tensor::scalar(a.t()[arg]), 0.0, static_cast<int>(arg));
}

Value lincomb(std::shared_ptr<const Tensor> base,
              std::shared_ptr<const std::vector<Tensor>> basis,
              const Value& w) {
    if (w.cols() != 1 || w.rows() != static_cast<int>(basis->size()))
        throw ShapeError("lincomb: weights must be n x 1 matching basis count");
    Tensor out = *base;
    for (int l = 0; l < w.rows(); ++l) {
        const Tensor& g = (*basis)[static_cast<std::size_t>(l)];
        if (!g.same_shape(out)) throw ShapeError("lincomb: basis shape mismatch");
        const double wl = w.t()(l, 0);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += wl * g[i];
    }
    return emit(OpKind::LinComb, {w}, std::move(out), 0.0, 0, 0, nullptr, std::move(basis),
                std::move(base));
}

Value spd_solve(const Value& a, const Value& b) {
    if (a.rows() != a.cols() || a.rows() != b.rows())
        throw ShapeError("spd_solve: dimension mismatch");
    auto chol = std::make_shared<const Tensor>(k_cholesky(a.t()));
    Tensor x = k_chol_solve(*chol, b.t());
    return emit(OpKind::SpdSolve, {a, b}, std::move(x), 0.0, 0, 0, nullptr, nullptr, nullptr,
                std::move(chol));
}

// ---- backward --------------------------------------------------------------

void Tape::backward(const Value& loss) {
    if (!loss.tracked() || loss.tape != this)
        throw ContractError("backward: loss is not recorded on this tape");
    if (!loss.t().is_scalar()) throw ContractError("backward: loss must be scalar");
    if (!std::isfinite(loss.t()[0])) throw NumericError("backward: loss is non-finite");

    grads_.assign(nodes_.size(), Tensor());
    grads_[static_cast<std::size_t>(loss.node)] = Tensor::scalar(1.0);

    auto slot = [&](const Value& v) -> Tensor* {
        if (!v.tracked()) return nullptr;
        Tensor& g = grads_[static_cast<std::size_t>(v.node)];
        if (g.size() == 0) g = Tensor(v.rows(), v.cols());
        return &g;
    };

    for (int ni = loss.node; ni >= 0; --ni) {
        const Node& n = nodes_[static_cast<std::size_t>(ni)];
        const Tensor& g = grads_[static_cast<std::size_t>(ni)];
        if (g.size() == 0) continue;

        switch (n.op) {
        case OpKind::Leaf:
            break;
        case OpKind::Add: {
            if (Tensor* ga = slot(n.in[0]))
                for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
            if (Tensor* gb = slot(n.in[1]))
                for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i];
            break;
        }
        case OpKind::Sub: {
            if (Tensor* ga = slot(n.in[0]))
                for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
            if (Tensor* gb = slot(n.in[1]))
                for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
            break;
        }
        case OpKind::Mul: {
            const Tensor& a = n.in[0].t();
            const Tensor& b = n.in[1].t();
            if (Tensor* ga = slot(n.in[0]))
                for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * b[i];
            if (Tensor* gb = slot(n.in[1]))
                for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * a[i];
            break;
        }
        case OpKind::Div: {
            const Tensor& a = n.in[0].t();
            const Tensor& b = n.in[1].t();
            if (Tensor* ga = slot(n.in[0]))
                for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] / b[i];
            if (Tensor* gb = slot(n.in[1]))
                for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i] * a[i] / (b[i] * b[i]);
            break;
        }
        case OpKind::Neg: {
            if (Tensor* ga = slot(n.in[0]))
                for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] -= g[i];
            break;
        }
        case OpKind::Relu: {
            const Tensor& a = n.in[0].t();
            if (Tensor* ga = slot(n.in[0]))
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (a[i] > 0.0) (*ga)[i] += g[i];
            break;
        }
        case OpKind::Tanh: {
            const Tensor& y = *n.out;
            if (Tensor* ga = slot(n.in[0]))
                for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * (1.0 - y[i] * y[i]);
            break;
        }
        case OpKind::Sigmoid: {
            const Tensor& y = *n.out;
            if (Tensor* ga = slot(n.in[0]))
                for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * y[i] * (1.0 - y[i]);
            break;
        }
        case OpKind::Sqrt: {
            const Tensor& y = *n.out;
            if (Tensor* ga = slot(n.in[0]))
                for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * 0.5 / y[i];
            break;
        }
        case OpKind::Square: {
            const Tensor& a = n.in[0].t();
            if (Tensor* ga = slot(n.in[0]))
                for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * 2.0 * a[i];
            break;
        }
        case OpKind::Log1p: {
            const Tensor& a = n.in[0].t();
            if (Tensor* ga = slot(n.in[0]))
                for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] / (1.0 + a[i]);
            break;
        }
        case OpKind::Scale: {
            if (Tensor* ga = slot(n.in[0]))
                for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * n.c;
            break;
        }
        case OpKind::AddConst: {
            if (Tensor* ga = slot(n.in[0]))
                for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
            break;
        }
        case OpKind::AddRowVec: {
            if (Tensor* ga = slot(n.in[0]))
                for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
            if (Tensor* gv = slot(n.in[1]))
                for (int i = 0; i < g.rows(); ++i)
                    for (int j = 0; j < g.cols(); ++j) (*gv)(0, j) += g(i, j);
            break;
        }
        case OpKind::MulRowVec: {
            const Tensor& a = n.in[0].t();
            const Tensor& v = n.in[1].t();
            if (Tensor* ga = slot(n.in[0]))
                for (int i = 0; i < g.rows(); ++i)
                    for (int j = 0; j < g.cols(); ++j) (*ga)(i, j) += g(i, j) * v(0, j);
            if (Tensor* gv = slot(n.in[1]))
                for (int i = 0; i < g.rows(); ++i)
                    for (int j = 0; j < g.cols(); ++j) (*gv)(0, j) += g(i, j) * a(i, j);
            break;
        }
        case OpKind::DivRowVec: {
            const Tensor& a = n.in[0].t();
            const Tensor& v = n.in[1].t();
            if (Tensor* ga = slot(n.in[0]))
                for (int i = 0; i < g.rows(); ++i)
                    for (int j = 0; j < g.cols(); ++j) (*ga)(i, j) += g(i, j) / v(0, j);
            if (Tensor* gv = slot(n.in[1]))
                for (int i = 0; i < g.rows(); ++i)
                    for (int j = 0; j < g.cols(); ++j)
                        (*gv)(0, j) -= g(i, j) * a(i, j) / (v(0, j) * v(0, j));
            break;
        }
        case OpKind::MatMul: {
            const Tensor& a = n.in[0].t();
            const Tensor& b = n.in[1].t();
            if (Tensor* ga = slot(n.in[0])) k_matmul_bt_acc(g, b, *ga);
            if (Tensor* gb = slot(n.in[1])) k_matmul_at_acc(a, g, *gb);
            break;
        }
        case OpKind::Transpose: {
            if (Tensor* ga = slot(n.in[0]))
                for (int i = 0; i < g.rows(); ++i)
                    for (int j = 0; j < g.cols(); ++j) (*ga)(j, i) += g(i, j);
            break;
        }
        case OpKind::ConcatCols: {
            int off = 0;
            for (const Value& part : n.in) {
                if (Tensor* gp = slot(part)) {
                    for (int i = 0; i < gp->rows(); ++i)
                        for (int j = 0; j < gp->cols(); ++j) (*gp)(i, j) += g(i, off + j);
                }
                off += part.cols();
            }
            break;
        }
        case OpKind::SliceCols: {
            if (Tensor* ga = slot(n.in[0]))
                for (int i = 0; i < g.rows(); ++i)
                    for (int j = 0; j < g.cols(); ++j) (*ga)(i, n.i0 + j) += g(i, j);
            break;
        }
        case OpKind::GatherRows: {
            if (Tensor* ga = slot(n.in[0])) {
                const std::vector<int>& idx = *n.index;
                for (int r = 0; r < g.rows(); ++r)
                    for (int j = 0; j < g.cols(); ++j)
                        (*ga)(idx[static_cast<std::size_t>(r)], j) += g(r, j);
            }
            break;
        }
        case OpKind::SegmentSum: {
            if (Tensor* ga = slot(n.in[0])) {
                const std::vector<int>& idx = *n.index;
                for (int r = 0; r < ga->rows(); ++r)
                    for (int j = 0; j < g.cols(); ++j)
                        (*ga)(r, j) += g(idx[static_cast<std::size_t>(r)], j);
            }
            break;
        }
        case OpKind::RowSum: {
            if (Tensor* ga = slot(n.in[0]))
                for (int i = 0; i < ga->rows(); ++i)
                    for (int j = 0; j < ga->cols(); ++j) (*ga)(i, j) += g(i, 0);
            break;
        }
        case OpKind::ColSum: {
            if (Tensor* ga = slot(n.in[0]))
                for (int i = 0; i < ga->rows(); ++i)
                    for (int j = 0; j < ga->cols(); ++j) (*ga)(i, j) += g(0, j);
            break;
        }
        case OpKind::SumAll: {
            if (Tensor* ga = slot(n.in[0]))
                for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += g[0];
            break;
        }
        case OpKind::DiagVec: {
            if (Tensor* ga = slot(n.in[0]))
                for (int i = 0; i < g.rows(); ++i) (*ga)(i, i) += g(i, 0);
            break;
        }
        case OpKind::ReduceMin: {
            if (Tensor* ga = slot(n.in[0]))
                (*ga)[static_cast<std::size_t>(n.i0)] += g[0];
            break;
        }
        case OpKind::LinComb: {
            if (Tensor* gw = slot(n.in[0])) {
                for (int l = 0; l < gw->rows(); ++l) {
                    const Tensor& basis_l = (*n.basis)[static_cast<std::size_t>(l)];
                    double s = 0.0;
                    for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * basis_l[i];
                    (*gw)(l, 0) += s;
                }
            }
            break;
        }
        case OpKind::SpdSolve: {
            // X = A^{-1} B;  gB = A^{-1} gX;  gA = -gB X^T
            Tensor gb = k_chol_solve(*n.chol, g);
            if (Tensor* gbs = slot(n.in[1]))
                for (std::size_t i = 0; i < gb.size(); ++i) (*gbs)[i] += gb[i];
            if (Tensor* ga = slot(n.in[0])) {
                const Tensor& x = *n.out;
                for (int i = 0; i < ga->rows(); ++i)
                    for (int j = 0; j < ga->cols(); ++j) {
                        double s = 0.0;
                        for (int p = 0; p < x.cols(); ++p) s += gb(i, p) * x(j, p);
                        (*ga)(i, j) -= s;
                    }
            }
            break;
        }
        }
    }
}

Tensor Tape::grad(const Value& v) const {
    if (!v.tracked() || v.tape != this)
        throw ContractError("grad: value is not recorded on this tape");
    if (static_cast<std::size_t>(v.node) >= grads_.size()) return Tensor(v.rows(), v.cols());
    const Tensor& g = grads_[static_cast<std::size_t>(v.node)];
    if (g.size() == 0) return Tensor(v.rows(), v.cols());
    return g;
}

} // namespace bgnn::ad
