#pragma once

#include "schn/grid.hpp"

#include <string>
#include <vector>

namespace schn::train {

/// Accumulated confusion statistics for dense labeling. Areas are sums of
/// node quadrature areas; counts are plain node counts.
class EvalReport {
public:
    explicit EvalReport(int num_classes = 0);

    /// Adds one prediction/ground-truth pair. Throws ShapeError when the
    /// grids or class counts disagree and ConfigError for out-of-range labels.
    void accumulate(const LabelMap& pred, const LabelMap& gt);
    void merge(const EvalReport& other);

    int num_classes() const noexcept { return num_classes_; }
    std::size_t samples() const noexcept { return samples_; }

    /// IoU of class c, or -1 when the class is absent from both prediction and truth.
    double class_iou(int c, bool area_weighted = true) const;
    /// Mean over classes with nonzero union.
    double mean_iou(bool area_weighted = true) const;
    double pixel_accuracy(bool area_weighted = true) const;

    /// key=value lines: samples, miou_w, miou_u, acc_w, acc_u, iou_<c>.
    std::string format() const;

private:
    int num_classes_;
    std::size_t samples_ = 0;
    std::vector<double> inter_area_, union_area_;
    std::vector<double> inter_count_, union_count_;
    double correct_area_ = 0.0, total_area_ = 0.0;
    double correct_count_ = 0.0, total_count_ = 0.0;
};

/// Single-pair convenience wrapper.
EvalReport mean_iou(const LabelMap& pred, const LabelMap& gt);

} // namespace schn::train
