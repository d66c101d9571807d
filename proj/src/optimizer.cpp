#include "lesets/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace lesets {

AdamW::AdamW(std::vector<Tensor> params, AdamWConfig config) : params_(std::move(params)), config_(config) {
    if (!(config_.lr > 0)) throw std::runtime_error("AdamW: lr must be positive");
    for (const auto& p : params_) {
        if (!p.requires_grad()) throw std::runtime_error("AdamW: parameter without requires_grad");
        first_moment_.emplace_back(p.size(), 0.0);
        second_moment_.emplace_back(p.size(), 0.0);
    }
}

void AdamW::step() {
    ++step_count_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        auto& vals = params_[pi].values();
        const auto& grads = params_[pi].grads();
        auto& m = first_moment_[pi];
        auto& v = second_moment_[pi];
        for (size_t i = 0; i < vals.size(); ++i) {
            const double g = grads[i];
            if (!std::isfinite(g)) throw std::runtime_error("AdamW: non-finite gradient");
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            vals[i] -= config_.lr * (mhat / (std::sqrt(vhat) + config_.eps) + config_.weight_decay * vals[i]);
        }
    }
}

void AdamW::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

} // namespace lesets
