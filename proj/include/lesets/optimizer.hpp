#pragma once

#include "lesets/tensor.hpp"

#include <vector>

namespace lesets {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

/// AdamW with decoupled weight decay:
///   m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
///   p <- p - lr*(mhat/(sqrt(vhat)+eps) + wd*p)
class AdamW {
public:
    AdamW(std::vector<Tensor> params, AdamWConfig config);

    void step();
    void zero_grad();

    double lr() const { return config_.lr; }
    void set_lr(double lr) { config_.lr = lr; }
    long step_count() const { return step_count_; }
    const AdamWConfig& config() const { return config_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> first_moment_;
    std::vector<std::vector<double>> second_moment_;
    AdamWConfig config_;
    long step_count_ = 0;
};

} // namespace lesets
