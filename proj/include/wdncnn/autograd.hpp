#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "wdncnn/tensor.hpp"

namespace wdncnn {

struct Parameter;
class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid while the tape that
// produced it is alive.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    // Gradient of the loss w.r.t. this node; populated by Tape::backward for
    // tracked nodes (parameters, inputs, and everything downstream of them).
    const Tensor& grad() const;

    Tape* tape() const { return tape_; }
    int id() const { return id_; }
    bool defined() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    int id_ = -1;
};

// Reverse-mode tape. Nodes are appended in forward order and walked strictly
// in reverse during backward, so gradient accumulation order is fixed and
// repeated runs are bit-identical. One tape carries one forward pass; call
// backward at most once, then discard.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaf that never receives a gradient (targets, noise maps, fixed data).
    Var constant(Tensor value);
    // Leaf whose gradient is wanted but which is not a Parameter.
    Var input(Tensor value);
    // Leaf bound to a Parameter; backward accumulates into p.grad.
    Var param(Parameter& p);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double s);
    // Sum of all entries, returned as a [1] tensor.
    Var sum(Var a);
    Var relu(Var x);
    // 3x3 cross-correlation, stride 1, zero-padded by 1, so spatial size is
    // preserved. input [Cin,H,W], weight [Cout,Cin,3,3], bias [Cout].
    Var conv2d(Var input, Var weight, Var bias, int pad = 1);
    Var concat_channels(const std::vector<Var>& parts);
    std::vector<Var> split_channels(Var x, const std::vector<int>& sizes);
    // (1 / (2KN)) * sum_k mu_k * ||pred_k - target_k||^2 for one sample of a
    // batch of N; summing the per-sample values over a batch yields the full
    // batch loss. Differentiable w.r.t. pred only.
    Var weighted_band_mse(const std::vector<Var>& pred,
                          const std::vector<Tensor>& target,
                          const std::vector<double>& mu, int sample_count);

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse, populating
    // node gradients and accumulating into bound Parameters. The tape is
    // consumed: a second call is rejected.
    void backward(Var loss);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool tracked = false;
        Parameter* bound = nullptr;
        std::function<void(Tape&)> backfn;
    };

    int push(Tensor value, bool tracked, Parameter* bound,
             std::function<void(Tape&)> backfn);
    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Tensor& val(int id) const {
        return nodes_[static_cast<std::size_t>(id)].value;
    }
    bool tracked(int id) const {
        return nodes_[static_cast<std::size_t>(id)].tracked;
    }
    // Adds src into the grad buffer of node id if that node is tracked.
    void add_grad(int id, const Tensor& src);
    void check_mine(Var v, const char* op) const;

    // Deque keeps references to existing nodes stable while new nodes are
    // appended mid-operation.
    std::deque<Node> nodes_;
    bool consumed_ = false;
    // Id of the node whose backfn is currently executing; backfns read their
    // own output gradient through it.
    int cursor_ = -1;

    friend class Var;
};

}  // namespace wdncnn
