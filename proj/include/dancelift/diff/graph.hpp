#pragma once

#include <functional>
#include <vector>

#include "tensor.hpp"

namespace dancelift::diff {

class Graph;

/// Handle to a node recorded on a Graph.
struct Var {
    Graph* graph = nullptr;
    int id = -1;
};

/// Recording tape for one forward pass. Nodes are appended in evaluation
/// order, so reverse order is a valid topological order for backward().
class Graph {
public:
    using Backward = std::function<void(Graph&, int self)>;

    Var constant(Tensor value) { return push(std::move(value), false, nullptr, {}); }

    Var param(Parameter& p) { return push(p.value, true, &p, {}); }

    /// Appends an op result. `inputs` decides whether a gradient is needed.
    Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
        bool needs = false;
        for (const Var& v : inputs) needs = needs || nodes_[v.id].requires_grad;
        return push(std::move(value), needs, nullptr, needs ? std::move(backward) : Backward{});
    }

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    const Tensor& value(int id) const { return nodes_[id].value; }
    bool requires_grad(int id) const { return nodes_[id].requires_grad; }
    const Shape& shape(Var v) const { return nodes_[v.id].value.shape(); }

    /// Gradient buffer of a node, allocated on first use. Only meaningful
    /// during backward().
    Tensor& grad(int id) {
        Node& n = nodes_[id];
        if (n.grad.shape() != n.value.shape() || n.grad.size() != n.value.size())
            n.grad = Tensor(n.value.shape());
        return n.grad;
    }
    bool has_grad(int id) const { return nodes_[id].grad_live; }

    /// Reverse sweep from a scalar node; parameter gradients accumulate into
    /// Parameter::grad across calls.
    void backward(Var loss) {
        require(value(loss).size() == 1,
                "backward: loss must be a scalar, got shape " + value(loss).shape().str());
        for (Node& n : nodes_) {
            n.grad_live = false;
            n.grad = Tensor();
        }
        if (!nodes_[loss.id].requires_grad) return;
        grad(loss.id)[0] = 1.0;
        nodes_[loss.id].grad_live = true;
        for (int id = loss.id; id >= 0; --id) {
            Node& n = nodes_[id];
            if (!n.grad_live) continue;
            if (n.backward) n.backward(*this, id);
            if (n.param) {
                auto& dst = n.param->grad;
                if (dst.size() != n.value.size()) dst = Tensor(n.value.shape());
                dst.mat() += nodes_[id].grad.mat();
            }
        }
    }

    /// Accumulate into an input's gradient (called from op backward closures).
    Tensor& accumulate(int id) {
        Node& n = nodes_[id];
        Tensor& g = grad(id);
        n.grad_live = true;
        return g;
    }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad{};
        bool requires_grad = false;
        bool grad_live = false;
        Parameter* param = nullptr;
        Backward backward;
    };

    Var push(Tensor value, bool requires_grad, Parameter* p, Backward bw) {
        Node n;
        n.value = std::move(value);
        n.requires_grad = requires_grad;
        n.param = p;
        n.backward = std::move(bw);
        nodes_.push_back(std::move(n));
        return Var{this, static_cast<int>(nodes_.size()) - 1};
    }

    std::vector<Node> nodes_;
};

} // namespace dancelift::diff
