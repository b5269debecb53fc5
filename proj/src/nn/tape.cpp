#include "schn/nn/tape.hpp"

#include "schn/error.hpp"

namespace schn::nn {

std::string Tensor::shape_string() const
{
    return "[" + std::to_string(n) + "x" + std::to_string(c) + " @B=" + std::to_string(B) + "]";
}

Parameter& ParameterSet::add(const std::string& name, std::vector<std::size_t> shape, bool trainable)
{
    if (find(name)) {
        throw ConfigError("duplicate parameter name " + name);
    }
    std::size_t n = 1;
    for (auto d : shape) {
        n *= d;
    }
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->shape = std::move(shape);
    p->value.assign(n, 0.0);
    p->grad.assign(n, 0.0);
    p->trainable = trainable;
    params_.push_back(std::move(p));
    return *params_.back();
}

Parameter* ParameterSet::find(const std::string& name)
{
    for (auto& p : params_) {
        if (p->name == name) {
            return p.get();
        }
    }
    return nullptr;
}

const Parameter* ParameterSet::find(const std::string& name) const
{
    for (const auto& p : params_) {
        if (p->name == name) {
            return p.get();
        }
    }
    return nullptr;
}

Parameter& ParameterSet::get(const std::string& name)
{
    if (auto* p = find(name)) {
        return *p;
    }
    throw ConfigError("unknown parameter " + name);
}

std::vector<Parameter*> ParameterSet::all()
{
    std::vector<Parameter*> out;
    for (auto& p : params_) {
        out.push_back(p.get());
    }
    return out;
}

std::vector<const Parameter*> ParameterSet::all() const
{
    std::vector<const Parameter*> out;
    for (const auto& p : params_) {
        out.push_back(p.get());
    }
    return out;
}

std::vector<Parameter*> ParameterSet::trainable()
{
    std::vector<Parameter*> out;
    for (auto& p : params_) {
        if (p->trainable) {
            out.push_back(p.get());
        }
    }
    return out;
}

std::size_t ParameterSet::trainable_count() const
{
    std::size_t n = 0;
    for (const auto& p : params_) {
        if (p->trainable) {
            n += p->size();
        }
    }
    return n;
}

void ParameterSet::zero_grad()
{
    for (auto& p : params_) {
        std::fill(p->grad.begin(), p->grad.end(), 0.0);
    }
}

VarId Tape::input(Tensor value, bool needs_grad)
{
    nodes_.push_back(Node{std::move(value), nullptr, {}, needs_grad});
    return static_cast<VarId>(nodes_.size() - 1);
}

VarId Tape::push(Tensor value, Backward backward)
{
    nodes_.push_back(Node{std::move(value), nullptr, record_ ? std::move(backward) : Backward{}, true});
    return static_cast<VarId>(nodes_.size() - 1);
}

const Tensor& Tape::value(VarId id) const
{
    return nodes_.at(static_cast<std::size_t>(id)).value;
}

Tensor& Tape::grad(VarId id)
{
    Node& node = nodes_.at(static_cast<std::size_t>(id));
    if (!node.grad) {
        node.grad = std::make_unique<Tensor>(node.value.n, node.value.c, node.value.B);
    }
    return *node.grad;
}

bool Tape::has_grad(VarId id) const
{
    return nodes_.at(static_cast<std::size_t>(id)).grad != nullptr;
}

bool Tape::requires_grad(VarId id) const
{
    return nodes_.at(static_cast<std::size_t>(id)).requires_grad;
}

void Tape::backward(VarId out, const Tensor& seed)
{
    if (!record_) {
        throw ConfigError("backward on a record created without recording");
    }
    if (out < 0 || static_cast<std::size_t>(out) >= nodes_.size()) {
        throw ConfigError("backward: variable does not belong to this record");
    }
    if (consumed_) {
        throw ConfigError("backward: record was already replayed");
    }
    if (!seed.same_shape(value(out))) {
        throw ConfigError("backward: seed shape " + seed.shape_string() + " does not match output " +
                          value(out).shape_string());
    }
    Tensor& g = grad(out);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        g.data[i] += seed.data[i];
    }
    for (VarId id = out; id >= 0; --id) {
        Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.backward && node.grad) {
            node.backward(*this, id);
        }
    }
    consumed_ = true;
}

} // namespace schn::nn
