#pragma once

// Dense network machinery for the PPO agent: a tanh multilayer perceptron
// with analytic backpropagation over a flat parameter vector, an Adam
// optimizer, and running mean/variance trackers for normalization.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "mgrid/rng.hpp"

namespace mgrid {

// Fully-connected network, tanh hidden activations, linear output layer.
// Parameters live in one flat vector laid out per layer as W (row-major,
// out x in) followed by b, which keeps the optimizer and gradient checks
// simple.
class Mlp {
public:
    Mlp() = default;

    // final_scale scales the output layer's weight init; 0 gives an exactly
    // zero head so a fresh policy emits zero actions.
    static Mlp make(std::vector<int> sizes, Rng& rng, double final_scale) {
        if (sizes.size() < 2) throw std::invalid_argument("mlp: need at least input and output sizes");
        Mlp net;
        net.sizes_ = std::move(sizes);
        std::size_t total = 0;
        for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
            net.w_off_.push_back(total);
            total += static_cast<std::size_t>(net.sizes_[l + 1]) * net.sizes_[l];
            net.b_off_.push_back(total);
            total += net.sizes_[l + 1];
        }
        net.params_.assign(total, 0.0);
        for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
            const bool last = l + 2 == net.sizes_.size();
            const double scale = (last ? final_scale : 1.0) / std::sqrt(static_cast<double>(net.sizes_[l]));
            double* w = net.params_.data() + net.w_off_[l];
            const std::size_t n = static_cast<std::size_t>(net.sizes_[l + 1]) * net.sizes_[l];
            for (std::size_t i = 0; i < n; ++i) w[i] = scale == 0.0 ? 0.0 : rng.normal(0.0, scale);
        }
        return net;
    }

    int in_dim() const { return sizes_.front(); }
    int out_dim() const { return sizes_.back(); }
    const std::vector<int>& sizes() const { return sizes_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    // act[0] is the input; act[l] for l >= 1 holds layer l's post-tanh output
    // (the final entry is the linear output, no activation).
    struct Cache {
        std::vector<std::vector<double>> act;
    };

    std::vector<double> forward(std::span<const double> x, Cache* cache = nullptr) const {
        if (static_cast<int>(x.size()) != in_dim()) throw std::invalid_argument("mlp: input size mismatch");
        std::vector<double> cur(x.begin(), x.end());
        if (cache) {
            cache->act.clear();
            cache->act.push_back(cur);
        }
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            const int rows = sizes_[l + 1];
            const int cols = sizes_[l];
            const double* w = params_.data() + w_off_[l];
            const double* b = params_.data() + b_off_[l];
            std::vector<double> next(rows);
            for (int r = 0; r < rows; ++r) {
                double acc = b[r];
                const double* wrow = w + static_cast<std::size_t>(r) * cols;
                for (int c = 0; c < cols; ++c) acc += wrow[c] * cur[c];
                next[r] = acc;
            }
            if (l + 2 < sizes_.size())
                for (double& v : next) v = std::tanh(v);
            cur = std::move(next);
            if (cache) cache->act.push_back(cur);
        }
        return cur;
    }

    // Accumulates dL/dparams into `grad` (flat, same layout) given dL/doutput.
    void backward(const Cache& cache, std::span<const double> dout, std::vector<double>& grad) const {
        if (grad.size() != params_.size()) throw std::invalid_argument("mlp: gradient buffer size mismatch");
        std::vector<double> delta(dout.begin(), dout.end());
        for (std::size_t l = sizes_.size() - 1; l-- > 0;) {
            const int rows = sizes_[l + 1];
            const int cols = sizes_[l];
            const double* w = params_.data() + w_off_[l];
            double* gw = grad.data() + w_off_[l];
            double* gb = grad.data() + b_off_[l];
            const std::vector<double>& x = cache.act[l];
            for (int r = 0; r < rows; ++r) {
                gb[r] += delta[r];
                double* gwrow = gw + static_cast<std::size_t>(r) * cols;
                for (int c = 0; c < cols; ++c) gwrow[c] += delta[r] * x[c];
            }
            if (l == 0) break;
            std::vector<double> prev(cols, 0.0);
            for (int r = 0; r < rows; ++r) {
                const double* wrow = w + static_cast<std::size_t>(r) * cols;
                for (int c = 0; c < cols; ++c) prev[c] += wrow[c] * delta[r];
            }
            // through tanh: act[l] holds the post-activation values
            for (int c = 0; c < cols; ++c) prev[c] *= 1.0 - cache.act[l][c] * cache.act[l][c];
            delta = std::move(prev);
        }
    }

private:
    std::vector<int> sizes_;
    std::vector<std::size_t> w_off_, b_off_;
    std::vector<double> params_;
};

// Adam with bias correction over one flat parameter vector.
class Adam {
public:
    Adam() = default;
    explicit Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : m_(n, 0.0), v_(n, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
        if (params.size() != m_.size() || grad.size() != m_.size())
            throw std::invalid_argument("adam: size mismatch");
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
            params[i] -= lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
        }
    }

    long t() const { return t_; }

private:
    std::vector<double> m_, v_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
};

// Per-feature running mean and variance (Welford), mergeable so parallel
// rollout workers can be combined in a fixed order.
class RunningStat {
public:
    RunningStat() = default;
    explicit RunningStat(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

    std::size_t dim() const { return mean_.size(); }
    double count() const { return count_; }
    const std::vector<double>& mean() const { return mean_; }

    void update(std::span<const double> x) {
        if (x.size() != mean_.size()) throw std::invalid_argument("running stat: dim mismatch");
        count_ += 1.0;
        for (std::size_t i = 0; i < mean_.size(); ++i) {
            const double d = x[i] - mean_[i];
            mean_[i] += d / count_;
            m2_[i] += d * (x[i] - mean_[i]);
        }
    }

    void merge(const RunningStat& o) {
        if (o.count_ == 0.0) return;
        if (count_ == 0.0) {
            *this = o;
            return;
        }
        const double n = count_ + o.count_;
        for (std::size_t i = 0; i < mean_.size(); ++i) {
            const double d = o.mean_[i] - mean_[i];
            m2_[i] += o.m2_[i] + d * d * count_ * o.count_ / n;
            mean_[i] += d * o.count_ / n;
        }
        count_ = n;
    }

    double variance(std::size_t i) const { return count_ > 1.0 ? m2_[i] / count_ : 1.0; }

    double normalize_value(std::size_t i, double v, double clip = 10.0) const {
        if (count_ < 2.0) return v;
        const double z = (v - mean_[i]) / std::sqrt(variance(i) + 1e-8);
        return std::clamp(z, -clip, clip);
    }

    void normalize(std::span<const double> in, std::span<double> out) const {
        for (std::size_t i = 0; i < mean_.size(); ++i) out[i] = normalize_value(i, in[i]);
    }

    void set_state(double count, std::vector<double> mean, std::vector<double> m2) {
        count_ = count;
        mean_ = std::move(mean);
        m2_ = std::move(m2);
    }
    const std::vector<double>& m2() const { return m2_; }

private:
    std::vector<double> mean_, m2_;
    double count_ = 0.0;
};

}  // namespace mgrid
