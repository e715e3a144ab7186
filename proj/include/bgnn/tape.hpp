#pragma once

#include <memory>
#include <vector>

#include "bgnn/tensor.hpp"

namespace bgnn::ad {

class Tape;

/// Handle to a tensor that may be tracked on a tape. Untracked values
/// (tape == nullptr) evaluate eagerly and take no gradient; mixing them
/// with tracked values treats them as constants.
struct Value {
    std::shared_ptr<const Tensor> v;
    Tape* tape = nullptr;
    int node = -1;

    Value() = default;
    const Tensor& t() const { return *v; }
    bool tracked() const { return tape != nullptr && node >= 0; }
    int rows() const { return v->rows(); }
    int cols() const { return v->cols(); }
};

/// Wrap a tensor as an untracked constant.
Value constant(Tensor t);
Value constant(double scalar);

enum class OpKind : unsigned char {
    Leaf, Add, Sub, Mul, Div, Neg,
    Relu, Tanh, Sigmoid, Sqrt, Square, Log1p,
    Scale, AddConst,
    AddRowVec, MulRowVec, DivRowVec,
    MatMul, Transpose,
    ConcatCols, SliceCols,
    GatherRows, SegmentSum,
    RowSum, ColSum, SumAll, DiagVec, ReduceMin,
    LinComb, SpdSolve,
};

/// Ordered record of primitive operations. Nodes are appended in
/// topological order; backward() visits them in exact reverse order once.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Register a differentiable input (parameter).
    Value leaf(Tensor t);

    /// Reverse sweep from a scalar loss node. Gradients of all leaves are
    /// available afterwards; leaves unreachable from the loss get exact zero.
    void backward(const Value& loss);

    /// Gradient of a tracked value after backward(). Zero tensor if the
    /// node was not reached.
    Tensor grad(const Value& v) const;

    std::size_t num_nodes() const { return nodes_.size(); }

private:
    friend struct TapeAccess;

    struct Node {
        OpKind op;
        std::vector<Value> in;
        std::shared_ptr<const Tensor> out;
        double c = 0.0;                                     // scalar payload
        int i0 = 0, i1 = 0;                                 // slice bounds / argmin / segment count
        std::shared_ptr<const std::vector<int>> index;      // gather / segment map
        std::shared_ptr<const std::vector<Tensor>> basis;   // LinComb basis matrices
        std::shared_ptr<const Tensor> base;                 // LinComb constant term
        std::shared_ptr<const Tensor> chol;                 // SpdSolve Cholesky factor
    };

    int record(Node node);

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
};

// ---- primitive operations ------------------------------------------------
// Elementwise binary ops require identical shapes.

Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value div(const Value& a, const Value& b);
Value neg(const Value& a);

Value relu(const Value& a);     // subgradient at 0 is 0
Value tanh(const Value& a);
Value sigmoid(const Value& a);
Value sqrt(const Value& a);
Value square(const Value& a);
Value log1p(const Value& a);

Value scale(const Value& a, double c);
Value add_const(const Value& a, double c);

// Row-vector broadcasts: v is 1 x cols(a).
Value add_rowvec(const Value& a, const Value& v);
Value mul_rowvec(const Value& a, const Value& v);
Value div_rowvec(const Value& a, const Value& v);

Value matmul(const Value& a, const Value& b);
Value transpose(const Value& a);

Value concat_cols(const std::vector<Value>& parts);
Value slice_cols(const Value& a, int c0, int c1);

/// out[r] = a[index[r]]; index values in [0, rows(a)).
Value gather_rows(const Value& a, std::shared_ptr<const std::vector<int>> index);
/// out[index[r]] += a[r], accumulated in ascending row order; out has
/// `segments` rows. The canonical accumulation order makes the result
/// independent of how callers store their edge lists.
Value segment_sum(const Value& a, std::shared_ptr<const std::vector<int>> index, int segments);

Value row_sum(const Value& a);  // r x 1
Value col_sum(const Value& a);  // 1 x c
Value sum_all(const Value& a);  // 1 x 1
Value diag_vec(const Value& a); // n x n -> n x 1
/// Minimum entry as 1x1; gradient flows to the first minimizer in row-major order.
Value reduce_min(const Value& a);

/// base + sum_l w[l] * basis[l], with w an n x 1 value and fixed basis matrices.
Value lincomb(std::shared_ptr<const Tensor> base,
              std::shared_ptr<const std::vector<Tensor>> basis,
              const Value& w);

/// X = A^{-1} B for symmetric positive definite A (Cholesky). The gradient
/// enters through the solve adjoint: gB = A^{-1} gX, gA = -gB X^T.
Value spd_solve(const Value& a, const Value& b);

/// Compare analytic gradients against this central finite-difference stencil
/// in tests: (f(x+h) - f(x-h)) / 2h.
inline constexpr double kFdStep = 1e-6;

} // namespace bgnn::ad
