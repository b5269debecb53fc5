#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace schn::nn {

/// Batch of feature maps on a 2B x 2B lattice: n samples, c channels.
struct Tensor {
    int n = 0;
    int c = 0;
    int B = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int n_, int c_, int B_) : n(n_), c(c_), B(B_), data(size(n_, c_, B_), 0.0) {}

    static std::size_t size(int n, int c, int B)
    {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * 4u * static_cast<std::size_t>(B) *
               static_cast<std::size_t>(B);
    }
    int side() const noexcept { return 2 * B; }
    std::size_t plane() const noexcept { return 4u * static_cast<std::size_t>(B) * static_cast<std::size_t>(B); }
    double* map(int sample, int channel) { return data.data() + (static_cast<std::size_t>(sample) * c + channel) * plane(); }
    const double* map(int sample, int channel) const
    {
        return data.data() + (static_cast<std::size_t>(sample) * c + channel) * plane();
    }
    bool same_shape(const Tensor& o) const noexcept { return n == o.n && c == o.c && B == o.B; }
    std::string shape_string() const;
};

/// Named learnable (or buffer) tensor with a gradient accumulator.
struct Parameter {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;
    /// Buffers (running statistics) are saved with the model but not optimized.
    bool trainable = true;

    std::size_t size() const noexcept { return value.size(); }
};

/// Owns every parameter of a model; addresses are stable for its lifetime.
class ParameterSet {
public:
    /// Throws ConfigError on a duplicate name.
    Parameter& add(const std::string& name, std::vector<std::size_t> shape, bool trainable = true);
    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;
    Parameter& get(const std::string& name);

    std::vector<Parameter*> all();
    std::vector<const Parameter*> all() const;
    std::vector<Parameter*> trainable();
    std::size_t trainable_count() const;
    void zero_grad();

private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

enum class Mode { train, eval };

using VarId = int;

/// The computation record: values produced by primitive operations in
/// execution order, each with an adjoint closure. Single-owner; not shared
/// between threads.
class Tape {
public:
    using Backward = std::function<void(Tape&, VarId self)>;

    explicit Tape(bool record = true) : record_(record) {}

    VarId input(Tensor value, bool needs_grad = false);
    VarId push(Tensor value, Backward backward);

    const Tensor& value(VarId id) const;
    /// Gradient buffer, allocated (zero) on first access.
    Tensor& grad(VarId id);
    bool has_grad(VarId id) const;
    /// False for inputs created without needs_grad; ops skip their adjoints.
    bool requires_grad(VarId id) const;
    bool recording() const noexcept { return record_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Seeds d(loss)/d(out) and replays adjoints in reverse order. Throws
    /// ConfigError if out is not in this record or the seed shape differs,
    /// and when the record was created without recording.
    void backward(VarId out, const Tensor& seed);

private:
    struct Node {
        Tensor value;
        std::unique_ptr<Tensor> grad;
        Backward backward;
        bool requires_grad = true;
    };
    std::vector<Node> nodes_;
    bool record_;
    bool consumed_ = false;
};

} // namespace schn::nn
