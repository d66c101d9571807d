#include "lesets/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace lesets {

// ---------------------------------------------------------------- Tensor

static Tensor make_node(int rows, int cols, bool requires_grad) {
    Tensor t = Tensor::zeros(rows, cols, requires_grad);
    return t;
}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
    if (rows <= 0 || cols <= 0) throw std::runtime_error("tensor shape must be positive");
    Tensor t;
    t.node_ = std::make_shared<detail::TensorNode>();
    t.node_->rows = rows;
    t.node_->cols = cols;
    t.node_->value.assign(static_cast<size_t>(rows) * cols, 0.0);
    t.node_->requires_grad = requires_grad;
    if (requires_grad) t.node_->grad.assign(t.node_->value.size(), 0.0);
    return t;
}

Tensor Tensor::from_matrix(const Matrix& m, bool requires_grad) {
    Tensor t = zeros(m.rows, m.cols, requires_grad);
    t.node_->value = m.v;
    return t;
}

Tensor Tensor::scalar(double x, bool requires_grad) {
    Tensor t = zeros(1, 1, requires_grad);
    t.node_->value[0] = x;
    return t;
}

Tensor Tensor::row(const std::vector<double>& x, bool requires_grad) {
    Tensor t = zeros(1, static_cast<int>(x.size()), requires_grad);
    t.node_->value = x;
    return t;
}

Tensor Tensor::column(const std::vector<double>& x, bool requires_grad) {
    Tensor t = zeros(static_cast<int>(x.size()), 1, requires_grad);
    t.node_->value = x;
    return t;
}

double Tensor::item() const {
    if (rows() != 1 || cols() != 1) throw std::runtime_error("item() requires a 1x1 tensor");
    return node_->value[0];
}

void Tensor::zero_grad() {
    if (node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

// ---------------------------------------------------------------- Tape

Tensor Tape::make(int rows, int cols, bool requires_grad) {
    return make_node(rows, cols, recording_ && requires_grad);
}

void Tape::check_finite(const Tensor& t, const char* op) {
    for (double x : t.values())
        if (!std::isfinite(x)) throw std::runtime_error(std::string("non-finite value produced by ") + op);
}

static void require(bool cond, const char* msg) {
    if (!cond) throw std::runtime_error(msg);
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    const int m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = make(m, n, a.requires_grad() || b.requires_grad());
    const double* av = a.values().data();
    const double* bv = b.values().data();
    double* ov = out.values().data();
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) continue;
            for (int j = 0; j < n; ++j) ov[i * n + j] += aip * bv[p * n + j];
        }
    check_finite(out, "matmul");
    if (out.requires_grad()) {
        record([a, b, out]() {
            const int m = a.rows(), k = a.cols(), n = b.cols();
            const double* og = out.grads().data();
            if (a.requires_grad()) {
                double* ag = const_cast<Tensor&>(a).grads().data();
                const double* bv = b.values().data();
                // dA += dY * B^T
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        double acc = 0;
                        for (int j = 0; j < n; ++j) acc += og[i * n + j] * bv[p * n + j];
                        ag[i * k + p] += acc;
                    }
            }
            if (b.requires_grad()) {
                double* bg = const_cast<Tensor&>(b).grads().data();
                const double* av = a.values().data();
                // dB += A^T * dY
                for (int p = 0; p < k; ++p)
                    for (int i = 0; i < m; ++i) {
                        const double aip = av[i * k + p];
                        if (aip == 0.0) continue;
                        for (int j = 0; j < n; ++j) bg[p * n + j] += aip * og[i * n + j];
                    }
            }
        });
    }
    return out;
}

Tensor Tape::transpose(const Tensor& a) {
    Tensor out = make(a.cols(), a.rows(), a.requires_grad());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
    if (out.requires_grad()) {
        record([a, out]() {
            double* ag = const_cast<Tensor&>(a).grads().data();
            const int r = a.rows(), c = a.cols();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j) ag[i * c + j] += out.grads()[static_cast<size_t>(j) * r + i];
        });
    }
    return out;
}

Tensor Tape::affine(const Tensor& x, const Tensor& w, const Tensor& b) {
    require(x.cols() == w.rows(), "affine: x.cols must equal w.rows");
    require(b.rows() == 1 && b.cols() == w.cols(), "affine: bias must be 1 x w.cols");
    const int m = x.rows(), k = x.cols(), n = w.cols();
    Tensor out = make(m, n, x.requires_grad() || w.requires_grad() || b.requires_grad());
    const double* xv = x.values().data();
    const double* wv = w.values().data();
    const double* bv = b.values().data();
    double* ov = out.values().data();
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) ov[i * n + j] = bv[j];
        for (int p = 0; p < k; ++p) {
            const double xip = xv[i * k + p];
            if (xip == 0.0) continue;
            for (int j = 0; j < n; ++j) ov[i * n + j] += xip * wv[p * n + j];
        }
    }
    check_finite(out, "affine");
    if (out.requires_grad()) {
        record([x, w, b, out]() {
            const int m = x.rows(), k = x.cols(), n = w.cols();
            const double* og = out.grads().data();
            if (x.requires_grad()) {
                double* xg = const_cast<Tensor&>(x).grads().data();
                const double* wv = w.values().data();
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        double acc = 0;
                        for (int j = 0; j < n; ++j) acc += og[i * n + j] * wv[p * n + j];
                        xg[i * k + p] += acc;
                    }
            }
            if (w.requires_grad()) {
                double* wg = const_cast<Tensor&>(w).grads().data();
                const double* xv = x.values().data();
                for (int p = 0; p < k; ++p)
                    for (int i = 0; i < m; ++i) {
                        const double xip = xv[i * k + p];
                        if (xip == 0.0) continue;
                        for (int j = 0; j < n; ++j) wg[p * n + j] += xip * og[i * n + j];
                    }
            }
            if (b.requires_grad()) {
                double* bg = const_cast<Tensor&>(b).grads().data();
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) bg[j] += og[i * n + j];
            }
        });
    }
    return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
    Tensor out = make(a.rows(), a.cols(), a.requires_grad() || b.requires_grad());
    for (size_t i = 0; i < out.size(); ++i) out.values()[i] = a.values()[i] + b.values()[i];
    check_finite(out, "add");
    if (out.requires_grad()) {
        record([a, b, out]() {
            if (a.requires_grad()) {
                double* ag = const_cast<Tensor&>(a).grads().data();
                for (size_t i = 0; i < out.size(); ++i) ag[i] += out.grads()[i];
            }
            if (b.requires_grad()) {
                double* bg = const_cast<Tensor&>(b).grads().data();
                for (size_t i = 0; i < out.size(); ++i) bg[i] += out.grads()[i];
            }
        });
    }
    return out;
}

Tensor Tape::scale(const Tensor& a, double c) {
    Tensor out = make(a.rows(), a.cols(), a.requires_grad());
    for (size_t i = 0; i < out.size(); ++i) out.values()[i] = c * a.values()[i];
    check_finite(out, "scale");
    if (out.requires_grad()) {
        record([a, out, c]() {
            double* ag = const_cast<Tensor&>(a).grads().data();
            for (size_t i = 0; i < out.size(); ++i) ag[i] += c * out.grads()[i];
        });
    }
    return out;
}

Tensor Tape::elementwise_mul(const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "elementwise_mul: shape mismatch");
    Tensor out = make(a.rows(), a.cols(), a.requires_grad() || b.requires_grad());
    for (size_t i = 0; i < out.size(); ++i) out.values()[i] = a.values()[i] * b.values()[i];
    check_finite(out, "elementwise_mul");
    if (out.requires_grad()) {
        record([a, b, out]() {
            if (a.requires_grad()) {
                double* ag = const_cast<Tensor&>(a).grads().data();
                for (size_t i = 0; i < out.size(); ++i) ag[i] += b.values()[i] * out.grads()[i];
            }
            if (b.requires_grad()) {
                double* bg = const_cast<Tensor&>(b).grads().data();
                for (size_t i = 0; i < out.size(); ++i) bg[i] += a.values()[i] * out.grads()[i];
            }
        });
    }
    return out;
}

Tensor Tape::concat_cols(const std::vector<Tensor>& parts) {
    require(!parts.empty(), "concat_cols: no inputs");
    const int r = parts[0].rows();
    int total = 0;
    bool rg = false;
    for (const auto& p : parts) {
        require(p.rows() == r, "concat_cols: row mismatch");
        total += p.cols();
        rg = rg || p.requires_grad();
    }
    Tensor out = make(r, total, rg);
    int off = 0;
    for (const auto& p : parts) {
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < p.cols(); ++j) out.at(i, off + j) = p.at(i, j);
        off += p.cols();
    }
    if (out.requires_grad()) {
        record([parts, out]() {
            const int r = out.rows();
            int off = 0;
            for (const auto& p : parts) {
                if (p.requires_grad()) {
                    double* pg = const_cast<Tensor&>(p).grads().data();
                    for (int i = 0; i < r; ++i)
                        for (int j = 0; j < p.cols(); ++j)
                            pg[i * p.cols() + j] += out.grads()[static_cast<size_t>(i) * out.cols() + off + j];
                }
                off += p.cols();
            }
        });
    }
    return out;
}

Tensor Tape::concat_rows(const std::vector<Tensor>& parts) {
    require(!parts.empty(), "concat_rows: no inputs");
    const int c = parts[0].cols();
    int total = 0;
    bool rg = false;
    for (const auto& p : parts) {
        require(p.cols() == c, "concat_rows: column mismatch");
        total += p.rows();
        rg = rg || p.requires_grad();
    }
    Tensor out = make(total, c, rg);
    int off = 0;
    for (const auto& p : parts) {
        for (int i = 0; i < p.rows(); ++i)
            for (int j = 0; j < c; ++j) out.at(off + i, j) = p.at(i, j);
        off += p.rows();
    }
    if (out.requires_grad()) {
        record([parts, out]() {
            const int c = out.cols();
            int off = 0;
            for (const auto& p : parts) {
                if (p.requires_grad()) {
                    double* pg = const_cast<Tensor&>(p).grads().data();
                    for (int i = 0; i < p.rows(); ++i)
                        for (int j = 0; j < c; ++j)
                            pg[i * c + j] += out.grads()[static_cast<size_t>(off + i) * c + j];
                }
                off += p.rows();
            }
        });
    }
    return out;
}

Tensor Tape::slice_row(const Tensor& a, int row) {
    require(row >= 0 && row < a.rows(), "slice_row: row out of range");
    const int c = a.cols();
    Tensor out = make(1, c, a.requires_grad());
    for (int j = 0; j < c; ++j) out.at(0, j) = a.at(row, j);
    if (out.requires_grad()) {
        record([a, out, row]() {
            double* ag = const_cast<Tensor&>(a).grads().data();
            const int c = a.cols();
            for (int j = 0; j < c; ++j) ag[row * c + j] += out.grads()[j];
        });
    }
    return out;
}

Tensor Tape::tanh(const Tensor& a) {
    Tensor out = make(a.rows(), a.cols(), a.requires_grad());
    for (size_t i = 0; i < out.size(); ++i) out.values()[i] = std::tanh(a.values()[i]);
    check_finite(out, "tanh");
    if (out.requires_grad()) {
        record([a, out]() {
            double* ag = const_cast<Tensor&>(a).grads().data();
            for (size_t i = 0; i < out.size(); ++i) {
                const double y = out.values()[i];
                ag[i] += (1.0 - y * y) * out.grads()[i];
            }
        });
    }
    return out;
}

Tensor Tape::sigmoid(const Tensor& a) {
    Tensor out = make(a.rows(), a.cols(), a.requires_grad());
    for (size_t i = 0; i < out.size(); ++i) {
        const double x = a.values()[i];
        out.values()[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    check_finite(out, "sigmoid");
    if (out.requires_grad()) {
        record([a, out]() {
            double* ag = const_cast<Tensor&>(a).grads().data();
            for (size_t i = 0; i < out.size(); ++i) {
                const double y = out.values()[i];
                ag[i] += y * (1.0 - y) * out.grads()[i];
            }
        });
    }
    return out;
}

Tensor Tape::softplus(const Tensor& a) {
    Tensor out = make(a.rows(), a.cols(), a.requires_grad());
    for (size_t i = 0; i < out.size(); ++i) {
        const double x = a.values()[i];
        // log(1+e^x) without overflow for large |x|
        out.values()[i] = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    }
    check_finite(out, "softplus");
    if (out.requires_grad()) {
        record([a, out]() {
            double* ag = const_cast<Tensor&>(a).grads().data();
            for (size_t i = 0; i < out.size(); ++i) {
                const double x = a.values()[i];
                const double s = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
                ag[i] += s * out.grads()[i];
            }
        });
    }
    return out;
}

Tensor Tape::softmax_rows(const Tensor& a) {
    require(a.rows() >= 1 && a.cols() >= 1, "softmax over empty row");
    const int r = a.rows(), c = a.cols();
    Tensor out = make(r, c, a.requires_grad());
    for (int i = 0; i < r; ++i) {
        double mx = a.at(i, 0);
        for (int j = 1; j < c; ++j) mx = std::max(mx, a.at(i, j));
        double denom = 0;
        for (int j = 0; j < c; ++j) {
            const double e = std::exp(a.at(i, j) - mx);
            out.at(i, j) = e;
            denom += e;
        }
        for (int j = 0; j < c; ++j) out.at(i, j) /= denom;
    }
    check_finite(out, "softmax_rows");
    if (out.requires_grad()) {
        record([a, out]() {
            const int r = a.rows(), c = a.cols();
            double* ag = const_cast<Tensor&>(a).grads().data();
            for (int i = 0; i < r; ++i) {
                double dot = 0;
                for (int j = 0; j < c; ++j) dot += out.grads()[static_cast<size_t>(i) * c + j] * out.at(i, j);
                for (int j = 0; j < c; ++j) {
                    const double s = out.at(i, j);
                    ag[i * c + j] += s * (out.grads()[static_cast<size_t>(i) * c + j] - dot);
                }
            }
        });
    }
    return out;
}

Tensor Tape::mean_pool(const Tensor& a) {
    require(a.rows() >= 1, "mean_pool over empty input");
    const int r = a.rows(), c = a.cols();
    Tensor out = make(1, c, a.requires_grad());
    for (int j = 0; j < c; ++j) {
        double acc = 0;
        for (int i = 0; i < r; ++i) acc += a.at(i, j);
        out.at(0, j) = acc / r;
    }
    check_finite(out, "mean_pool");
    if (out.requires_grad()) {
        record([a, out]() {
            const int r = a.rows(), c = a.cols();
            double* ag = const_cast<Tensor&>(a).grads().data();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j) ag[i * c + j] += out.grads()[j] / r;
        });
    }
    return out;
}

Tensor Tape::weighted_sum(const Tensor& a, const std::vector<double>& w) {
    require(static_cast<int>(w.size()) == a.rows(), "weighted_sum: one weight per row required");
    require(a.rows() >= 1, "weighted_sum over empty input");
    const int r = a.rows(), c = a.cols();
    Tensor out = make(1, c, a.requires_grad());
    for (int j = 0; j < c; ++j) {
        double acc = 0;
        for (int i = 0; i < r; ++i) acc += w[i] * a.at(i, j);
        out.at(0, j) = acc;
    }
    check_finite(out, "weighted_sum");
    if (out.requires_grad()) {
        record([a, out, w]() {
            const int r = a.rows(), c = a.cols();
            double* ag = const_cast<Tensor&>(a).grads().data();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j) ag[i * c + j] += w[i] * out.grads()[j];
        });
    }
    return out;
}

Tensor Tape::l2_norm(const Tensor& a) {
    Tensor out = make(1, 1, a.requires_grad());
    double acc = 0;
    for (double x : a.values()) acc += x * x;
    out.values()[0] = std::sqrt(acc);
    check_finite(out, "l2_norm");
    if (out.requires_grad()) {
        record([a, out]() {
            const double norm = out.values()[0];
            if (norm == 0.0) return; // subgradient 0 at the origin
            double* ag = const_cast<Tensor&>(a).grads().data();
            const double g = out.grads()[0] / norm;
            for (size_t i = 0; i < a.size(); ++i) ag[i] += g * a.values()[i];
        });
    }
    return out;
}

Tensor Tape::mse_loss(const Tensor& pred, const Tensor& target) {
    require(pred.rows() == target.rows() && pred.cols() == target.cols(), "mse_loss: shape mismatch");
    const size_t n = pred.size();
    Tensor out = make(1, 1, pred.requires_grad() || target.requires_grad());
    double acc = 0;
    for (size_t i = 0; i < n; ++i) {
        const double d = pred.values()[i] - target.values()[i];
        acc += d * d;
    }
    out.values()[0] = acc / static_cast<double>(n);
    check_finite(out, "mse_loss");
    if (out.requires_grad()) {
        record([pred, target, out, n]() {
            const double g = 2.0 * out.grads()[0] / static_cast<double>(n);
            if (pred.requires_grad()) {
                double* pg = const_cast<Tensor&>(pred).grads().data();
                for (size_t i = 0; i < n; ++i) pg[i] += g * (pred.values()[i] - target.values()[i]);
            }
            if (target.requires_grad()) {
                double* tg = const_cast<Tensor&>(target).grads().data();
                for (size_t i = 0; i < n; ++i) tg[i] -= g * (pred.values()[i] - target.values()[i]);
            }
        });
    }
    return out;
}

void Tape::backward(const Tensor& loss) {
    if (!recording_) throw std::runtime_error("backward on a non-recording tape");
    if (loss.rows() != 1 || loss.cols() != 1) throw std::runtime_error("backward requires a scalar loss");
    if (!loss.requires_grad()) throw std::runtime_error("loss does not depend on any requires_grad tensor");
    const_cast<Tensor&>(loss).grads()[0] = 1.0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    reset();
}

void Tape::reset() { ops_.clear(); }

// ---------------------------------------------------------------- Rng

// xoshiro256** seeded via splitmix64.
Rng::Rng(uint64_t seed) {
    uint64_t x = seed;
    for (int i = 0; i < 4; ++i) {
        x += 0x9e3779b97f4a7c15ull;
        uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        s_[i] = z ^ (z >> 31);
    }
}

static inline uint64_t rotl64(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

uint64_t Rng::next_u64() {
    const uint64_t result = rotl64(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl64(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
}

int Rng::below(int n) {
    // rejection sampling keeps the draw exactly uniform
    const uint64_t bound = static_cast<uint64_t>(n);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return static_cast<int>(x % bound);
}

// ---------------------------------------------------------------- gradient check

GradCheckReport finite_diff_check(const std::function<Tensor(Tape&)>& f, const std::vector<Tensor>& params,
                                  double step) {
    if (!(step > 0)) throw std::runtime_error("finite_diff_check: step must be positive");
    GradCheckReport report;
    if (params.empty()) return report;

    for (const auto& p : params) const_cast<Tensor&>(p).zero_grad();
    Tape tape(true);
    Tensor loss = f(tape);
    if (!std::isfinite(loss.item())) throw std::runtime_error("finite_diff_check: non-finite function output");
    tape.backward(loss);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p.grads());

    Tape probe(false);
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& vals = const_cast<Tensor&>(params[pi]).values();
        for (size_t i = 0; i < vals.size(); ++i) {
            const double saved = vals[i];
            vals[i] = saved + step;
            const double fp = f(probe).item();
            vals[i] = saved - step;
            const double fm = f(probe).item();
            vals[i] = saved;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw std::runtime_error("finite_diff_check: non-finite function output");
            const double numeric = (fp - fm) / (2.0 * step);
            const double a = analytic[pi][i];
            // Relative error with an absolute floor: the truncation error of a
            // central difference is O(step^2) in absolute terms, so coordinates
            // with near-zero gradients are scored absolutely.
            const double err = std::abs(a - numeric) / std::max({1e-3, std::abs(a), std::abs(numeric)});
            ++report.n_checked;
            if (err > report.max_rel_err) {
                report.max_rel_err = err;
                report.worst_param = static_cast<int>(pi);
                report.worst_index = static_cast<int>(i);
            }
        }
    }
    return report;
}

} // namespace lesets
