#include "schn/train/metrics.hpp"

#include "schn/config.hpp"
#include "schn/error.hpp"

namespace schn::train {

EvalReport::EvalReport(int num_classes)
    : num_classes_(num_classes), inter_area_(std::size_t(std::max(num_classes, 0))),
      union_area_(std::size_t(std::max(num_classes, 0))), inter_count_(std::size_t(std::max(num_classes, 0))),
      union_count_(std::size_t(std::max(num_classes, 0)))
{
}

void EvalReport::accumulate(const LabelMap& pred, const LabelMap& gt)
{
    if (pred.B() != gt.B() || pred.labels.size() != gt.labels.size()) {
        throw ShapeError("mean_iou: prediction and ground truth live on different grids");
    }
    if (pred.num_classes != num_classes_ || gt.num_classes != num_classes_) {
        throw ShapeError("mean_iou: class count mismatch");
    }
    pred.validate();
    gt.validate();
    const auto& grid = *gt.grid;
    const int side = 2 * grid.B();
    for (int j = 0; j < side; ++j) {
        const double a = grid.cell_area(j);
        for (int k = 0; k < side; ++k) {
            const std::size_t p = static_cast<std::size_t>(j) * side + k;
            const std::size_t u = pred.labels[p];
            const std::size_t v = gt.labels[p];
            total_area_ += a;
            total_count_ += 1.0;
            if (u == v) {
                inter_area_[u] += a;
                union_area_[u] += a;
                inter_count_[u] += 1.0;
                union_count_[u] += 1.0;
                correct_area_ += a;
                correct_count_ += 1.0;
            } else {
                union_area_[u] += a;
                union_area_[v] += a;
                union_count_[u] += 1.0;
                union_count_[v] += 1.0;
            }
        }
    }
    ++samples_;
}

void EvalReport::merge(const EvalReport& other)
{
    if (other.num_classes_ != num_classes_) {
        throw ShapeError("EvalReport::merge: class count mismatch");
    }
    for (int c = 0; c < num_classes_; ++c) {
        inter_area_[std::size_t(c)] += other.inter_area_[std::size_t(c)];
        union_area_[std::size_t(c)] += other.union_area_[std::size_t(c)];
        inter_count_[std::size_t(c)] += other.inter_count_[std::size_t(c)];
        union_count_[std::size_t(c)] += other.union_count_[std::size_t(c)];
    }
    correct_area_ += other.correct_area_;
    total_area_ += other.total_area_;
    correct_count_ += other.correct_count_;
    total_count_ += other.total_count_;
    samples_ += other.samples_;
}

double EvalReport::class_iou(int c, bool area_weighted) const
{
    const double u = area_weighted ? union_area_[std::size_t(c)] : union_count_[std::size_t(c)];
    const double i = area_weighted ? inter_area_[std::size_t(c)] : inter_count_[std::size_t(c)];
    return u > 0.0 ? i / u : -1.0;
}

double EvalReport::mean_iou(bool area_weighted) const
{
    double s = 0.0;
    int n = 0;
    for (int c = 0; c < num_classes_; ++c) {
        const double v = class_iou(c, area_weighted);
        if (v >= 0.0) {
            s += v;
            ++n;
        }
    }
    return n ? s / n : 0.0;
}

double EvalReport::pixel_accuracy(bool area_weighted) const
{
    const double t = area_weighted ? total_area_ : total_count_;
    return t > 0.0 ? (area_weighted ? correct_area_ : correct_count_) / t : 0.0;
}

std::string EvalReport::format() const
{
    std::string s = "samples=" + std::to_string(samples_) + "\n";
    s += "miou_w=" + format_double(mean_iou(true)) + "\n";
    s += "miou_u=" + format_double(mean_iou(false)) + "\n";
    s += "acc_w=" + format_double(pixel_accuracy(true)) + "\n";
    s += "acc_u=" + format_double(pixel_accuracy(false)) + "\n";
    for (int c = 0; c < num_classes_; ++c) {
        const double v = class_iou(c, true);
        s += "iou_" + std::to_string(c) + "=" + (v >= 0.0 ? format_double(v) : std::string("nan")) + "\n";
    }
    return s;
}

EvalReport mean_iou(const LabelMap& pred, const LabelMap& gt)
{
    EvalReport r(gt.num_classes);
    r.accumulate(pred, gt);
    return r;
}

} // namespace schn::train
