#pragma once

#include "lesets/matrix.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace lesets {

namespace detail {
struct TensorNode {
    int rows = 0;
    int cols = 0;
    std::vector<double> value;
    std::vector<double> grad; // same size as value when requires_grad
    bool requires_grad = false;
};
} // namespace detail

/// Shared handle to a dense float64 array. Parameters persist across training
/// steps; intermediates are produced by Tape ops.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(int rows, int cols, bool requires_grad = false);
    static Tensor from_matrix(const Matrix& m, bool requires_grad = false);
    static Tensor scalar(double x, bool requires_grad = false);
    static Tensor row(const std::vector<double>& x, bool requires_grad = false);
    static Tensor column(const std::vector<double>& x, bool requires_grad = false);

    bool valid() const { return node_ != nullptr; }
    int rows() const { return node_->rows; }
    int cols() const { return node_->cols; }
    size_t size() const { return node_->value.size(); }
    bool requires_grad() const { return node_->requires_grad; }

    std::vector<double>& values() { return node_->value; }
    const std::vector<double>& values() const { return node_->value; }
    std::vector<double>& grads() { return node_->grad; }
    const std::vector<double>& grads() const { return node_->grad; }

    double& at(int r, int c) { return node_->value[static_cast<size_t>(r) * node_->cols + c]; }
    double at(int r, int c) const { return node_->value[static_cast<size_t>(r) * node_->cols + c]; }

    /// Value of a 1x1 tensor.
    double item() const;

    void zero_grad();
    bool same_node(const Tensor& o) const { return node_ == o.node_; }

private:
    std::shared_ptr<detail::TensorNode> node_;
    friend class Tape;
};

/// Records primitive ops in execution order; backward() replays the local
/// gradient closures exactly once in reverse. One tape per training context.
class Tape {
public:
    explicit Tape(bool recording = true) : recording_(recording) {}

    bool recording() const { return recording_; }
    size_t op_count() const { return ops_.size(); }

    // -- primitives -----------------------------------------------------
    Tensor matmul(const Tensor& a, const Tensor& b);
    Tensor transpose(const Tensor& a);
    Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b); // x*W + b per row
    Tensor add(const Tensor& a, const Tensor& b);
    Tensor scale(const Tensor& a, double c);
    Tensor elementwise_mul(const Tensor& a, const Tensor& b);
    Tensor concat_cols(const std::vector<Tensor>& parts); // same rows, widths add
    Tensor concat_rows(const std::vector<Tensor>& parts); // same cols, heights add
    Tensor slice_row(const Tensor& a, int row);           // 1 x cols view copy
    Tensor tanh(const Tensor& a);
    Tensor sigmoid(const Tensor& a);
    Tensor softplus(const Tensor& a);
    Tensor softmax_rows(const Tensor& a);
    Tensor mean_pool(const Tensor& a);                                  // column-wise mean -> 1 x d
    Tensor weighted_sum(const Tensor& a, const std::vector<double>& w); // sum_i w_i * row_i -> 1 x d
    Tensor l2_norm(const Tensor& a);                                    // Frobenius -> 1 x 1
    Tensor mse_loss(const Tensor& pred, const Tensor& target);

    /// Populates grads of every requires_grad tensor reachable from loss,
    /// then clears the tape for reuse.
    void backward(const Tensor& loss);

    void reset();

private:
    Tensor make(int rows, int cols, bool requires_grad);
    void record(std::function<void()> fn) { ops_.push_back(std::move(fn)); }
    static void check_finite(const Tensor& t, const char* op);

    bool recording_;
    std::vector<std::function<void()>> ops_;
};

/// Deterministic RNG used everywhere randomness is needed (splits, shuffles,
/// init); bit-stable across platforms unlike std distributions.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    double normal();                        // standard Gaussian (Box-Muller)
    int below(int n);                       // uniform on [0, n)

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) std::swap(v[i], v[below(i + 1)]);
    }

private:
    uint64_t s_[4];
    bool have_spare_ = false;
    double spare_ = 0;
};

struct GradCheckReport {
    double max_rel_err = 0;
    int n_checked = 0;
    int worst_param = -1;
    int worst_index = -1;
};

/// Central-difference check of backward() gradients; errors are relative with
/// a 1e-3 absolute floor. f must be deterministic and rebuild its computation
/// on the given tape each call.
GradCheckReport finite_diff_check(const std::function<Tensor(Tape&)>& f, const std::vector<Tensor>& params,
                                  double step);

} // namespace lesets
