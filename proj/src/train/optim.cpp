#include "schn/train/optim.hpp"

#include "schn/error.hpp"

#include <cmath>
#include <string>

namespace schn::train {

double weighted_cross_entropy(const nn::Tensor& logits, const std::vector<LabelMap>& labels, nn::Tensor* grad)
{
    const int N = logits.n, C = logits.c, side = logits.side();
    if (labels.size() != static_cast<std::size_t>(N)) {
        throw ShapeError("cross entropy: " + std::to_string(labels.size()) + " label maps for a batch of " +
                         std::to_string(N));
    }
    const auto area = shared_grid(logits.B)->normalized_ring_areas();
    if (grad) {
        *grad = nn::Tensor(N, C, logits.B);
    }
    double total = 0.0;
    std::vector<double> prob(static_cast<std::size_t>(C));
    for (int n = 0; n < N; ++n) {
        const LabelMap& y = labels[static_cast<std::size_t>(n)];
        if (y.B() != logits.B || y.num_classes != C) {
            throw ShapeError("cross entropy: label map does not match logits " + logits.shape_string());
        }
        for (int j = 0; j < side; ++j) {
            const double w = area[static_cast<std::size_t>(j)];
            for (int k = 0; k < side; ++k) {
                const std::size_t p = static_cast<std::size_t>(j) * side + k;
                const int label = y.labels[p];
                if (label >= C) {
                    throw ConfigError("cross entropy: label " + std::to_string(label) + " >= num_classes " +
                                      std::to_string(C));
                }
                double top = logits.map(n, 0)[p];
                for (int c = 1; c < C; ++c) {
                    top = std::max(top, logits.map(n, c)[p]);
                }
                double z = 0.0;
                for (int c = 0; c < C; ++c) {
                    prob[std::size_t(c)] = std::exp(logits.map(n, c)[p] - top);
                    z += prob[std::size_t(c)];
                }
                total += w * (std::log(z) + top - logits.map(n, label)[p]);
                if (grad) {
                    for (int c = 0; c < C; ++c) {
                        grad->map(n, c)[p] = w / N * (prob[std::size_t(c)] / z - (c == label ? 1.0 : 0.0));
                    }
                }
            }
        }
    }
    return total / N;
}

LabelMap argmax_labels(const nn::Tensor& logits, int sample)
{
    LabelMap out(shared_grid(logits.B), logits.c);
    for (std::size_t p = 0; p < logits.plane(); ++p) {
        int best = 0;
        for (int c = 1; c < logits.c; ++c) {
            if (logits.map(sample, c)[p] > logits.map(sample, best)[p]) {
                best = c;
            }
        }
        out.labels[p] = static_cast<std::uint16_t>(best);
    }
    return out;
}

Adam::Adam(nn::ParameterSet& params, AdamConfig cfg) : cfg_(cfg), params_(params.trainable())
{
    for (auto* p : params_) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
    }
}

void Adam::step()
{
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto& p = *params_[k];
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = p.grad[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            p.value[i] -= cfg_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.epsilon);
        }
    }
}

} // namespace schn::train
