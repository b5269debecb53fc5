#pragma once

#include "schn/grid.hpp"
#include "schn/nn/tape.hpp"

#include <cstdint>
#include <vector>

namespace schn::train {

/// Softmax cross-entropy per node, averaged with normalized quadrature area
/// weights over the sphere, then over the batch. Writes d(loss)/d(logits)
/// into grad when non-null. Throws ConfigError for labels >= num_classes and
/// ShapeError when shapes disagree.
double weighted_cross_entropy(const nn::Tensor& logits, const std::vector<LabelMap>& labels,
                              nn::Tensor* grad = nullptr);

/// Per-node argmax of the logits of one sample.
LabelMap argmax_labels(const nn::Tensor& logits, int sample);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction. Moments are kept per trainable parameter in
/// registration order.
class Adam {
public:
    Adam(nn::ParameterSet& params, AdamConfig cfg);

    void step();
    std::uint64_t steps() const noexcept { return t_; }
    const AdamConfig& config() const noexcept { return cfg_; }

    std::vector<nn::Parameter*>& parameters() noexcept { return params_; }
    std::vector<std::vector<double>>& first_moments() noexcept { return m_; }
    std::vector<std::vector<double>>& second_moments() noexcept { return v_; }
    void set_steps(std::uint64_t t) noexcept { t_ = t; }

private:
    AdamConfig cfg_;
    std::vector<nn::Parameter*> params_;
    std::vector<std::vector<double>> m_, v_;
    std::uint64_t t_ = 0;
};

} // namespace schn::train
