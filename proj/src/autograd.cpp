#include "wdncnn/autograd.hpp"

#include <string>
#include <utility>

#include "wdncnn/errors.hpp"
#include "wdncnn/optim.hpp"

namespace wdncnn {

namespace {

// Backward closures are only kept for tracked nodes.
template <typename F>
std::function<void(Tape&)> when(bool tracked, F&& fn) {
    if (!tracked) return nullptr;
    return std::function<void(Tape&)>(std::forward<F>(fn));
}

}  // namespace

const Tensor& Var::value() const { return tape_->val(id_); }

const Tensor& Var::grad() const {
    const auto& n = tape_->nodes_[static_cast<std::size_t>(id_)];
    if (n.grad.numel() == 0)
        throw DomainError("gradient not populated; node is untracked or "
                          "backward has not run");
    return n.grad;
}

int Tape::push(Tensor value, bool is_tracked, Parameter* bound,
               std::function<void(Tape&)> backfn) {
    Node n;
    n.value = std::move(value);
    n.tracked = is_tracked;
    n.bound = bound;
    n.backfn = std::move(backfn);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

void Tape::check_mine(Var v, const char* op) const {
    if (!v.defined() || v.tape() != this)
        throw DomainError(std::string(op) +
                          ": variable does not belong to this tape");
}

void Tape::add_grad(int id, const Tensor& src) {
    Node& n = node(id);
    if (!n.tracked) return;
    for (std::int64_t i = 0; i < src.numel(); ++i) n.grad[i] += src[i];
}

Var Tape::constant(Tensor value) {
    return Var(this, push(std::move(value), false, nullptr, nullptr));
}

Var Tape::input(Tensor value) {
    return Var(this, push(std::move(value), true, nullptr, nullptr));
}

Var Tape::param(Parameter& p) {
    Tensor v = p.value;
    return Var(this, push(std::move(v), true, &p, nullptr));
}

Var Tape::add(Var a, Var b) {
    check_mine(a, "add");
    check_mine(b, "add");
    Tensor out = wdncnn::add(val(a.id()), val(b.id()));
    const bool tr = tracked(a.id()) || tracked(b.id());
    const int ia = a.id(), ib = b.id();
    auto back = [ia, ib](Tape& t) {
        const Tensor& g = t.node(t.cursor_).grad;
        t.add_grad(ia, g);
        t.add_grad(ib, g);
    };
    return Var(this, push(std::move(out), tr, nullptr, when(tr, back)));
}

Var Tape::sub(Var a, Var b) {
    check_mine(a, "sub");
    check_mine(b, "sub");
    Tensor out = wdncnn::sub(val(a.id()), val(b.id()));
    const bool tr = tracked(a.id()) || tracked(b.id());
    const int ia = a.id(), ib = b.id();
    auto back = [ia, ib](Tape& t) {
        const Tensor& g = t.node(t.cursor_).grad;
        t.add_grad(ia, g);
        if (t.tracked(ib)) {
            Tensor neg = wdncnn::scale(g, -1.0);
            t.add_grad(ib, neg);
        }
    };
    return Var(this, push(std::move(out), tr, nullptr, when(tr, back)));
}

Var Tape::mul(Var a, Var b) {
    check_mine(a, "mul");
    check_mine(b, "mul");
    const Tensor& ta = val(a.id());
    const Tensor& tb = val(b.id());
    if (!ta.same_shape(tb))
        throw ShapeError("mul: shape mismatch " + shape_str(ta.shape()) +
                         " vs " + shape_str(tb.shape()));
    Tensor out(ta.shape());
    for (std::int64_t i = 0; i < ta.numel(); ++i) out[i] = ta[i] * tb[i];
    const bool tr = tracked(a.id()) || tracked(b.id());
    const int ia = a.id(), ib = b.id();
    auto back = [ia, ib](Tape& t) {
        const Tensor& g = t.node(t.cursor_).grad;
        if (t.tracked(ia)) {
            Tensor da(g.shape());
            const Tensor& vb = t.val(ib);
            for (std::int64_t i = 0; i < g.numel(); ++i) da[i] = g[i] * vb[i];
            t.add_grad(ia, da);
        }
        if (t.tracked(ib)) {
            Tensor db(g.shape());
            const Tensor& va = t.val(ia);
            for (std::int64_t i = 0; i < g.numel(); ++i) db[i] = g[i] * va[i];
            t.add_grad(ib, db);
        }
    };
    return Var(this, push(std::move(out), tr, nullptr, when(tr, back)));
}

Var Tape::scale(Var a, double s) {
    check_mine(a, "scale");
    Tensor out = wdncnn::scale(val(a.id()), s);
    const bool tr = tracked(a.id());
    const int ia = a.id();
    auto back = [ia, s](Tape& t) {
        Tensor g = wdncnn::scale(t.node(t.cursor_).grad, s);
        t.add_grad(ia, g);
    };
    return Var(this, push(std::move(out), tr, nullptr, when(tr, back)));
}

Var Tape::sum(Var a) {
    check_mine(a, "sum");
    const Tensor& ta = val(a.id());
    double s = 0.0;
    for (std::int64_t i = 0; i < ta.numel(); ++i) s += ta[i];
    Tensor out({1}, {s});
    const bool tr = tracked(a.id());
    const int ia = a.id();
    auto back = [ia](Tape& t) {
        const double g = t.node(t.cursor_).grad[0];
        Tensor da = Tensor::full(t.val(ia).shape(), g);
        t.add_grad(ia, da);
    };
    return Var(this, push(std::move(out), tr, nullptr, when(tr, back)));
}

Var Tape::relu(Var x) {
    check_mine(x, "relu");
    const Tensor& tx = val(x.id());
    Tensor out(tx.shape());
    for (std::int64_t i = 0; i < tx.numel(); ++i)
        out[i] = tx[i] > 0.0 ? tx[i] : 0.0;
    const bool tr = tracked(x.id());
    const int ix = x.id();
    auto back = [ix](Tape& t) {
        const Tensor& g = t.node(t.cursor_).grad;
        const Tensor& vx = t.val(ix);
        Tensor dx(g.shape());
        // Subgradient convention: exactly zero input passes no gradient.
        for (std::int64_t i = 0; i < g.numel(); ++i)
            dx[i] = vx[i] > 0.0 ? g[i] : 0.0;
        t.add_grad(ix, dx);
    };
    return Var(this, push(std::move(out), tr, nullptr, when(tr, back)));
}

Var Tape::conv2d(Var input, Var weight, Var bias, int pad) {
    check_mine(input, "conv2d");
    check_mine(weight, "conv2d");
    check_mine(bias, "conv2d");
    if (pad != 1) throw DomainError("conv2d: only pad=1 is supported");
    const Tensor& in = val(input.id());
    const Tensor& w = val(weight.id());
    const Tensor& b = val(bias.id());
    if (in.rank() != 3)
        throw ShapeError("conv2d: input must be [Cin,H,W], got " +
                         shape_str(in.shape()));
    if (w.rank() != 4 || w.dim(2) != 3 || w.dim(3) != 3)
        throw ShapeError("conv2d: weight must be [Cout,Cin,3,3], got " +
                         shape_str(w.shape()));
    if (w.dim(1) != in.dim(0))
        throw ShapeError("conv2d: weight expects " + std::to_string(w.dim(1)) +
                         " input channels, input has " +
                         std::to_string(in.dim(0)));
    if (b.rank() != 1 || b.dim(0) != w.dim(0))
        throw ShapeError("conv2d: bias must be [Cout] = [" +
                         std::to_string(w.dim(0)) + "], got " +
                         shape_str(b.shape()));

    const int cin = in.dim(0), h = in.dim(1), wd = in.dim(2);
    const int cout = w.dim(0);
    Tensor out({cout, h, wd});
    for (int co = 0; co < cout; ++co) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < wd; ++x) {
                double acc = b[co];
                for (int ci = 0; ci < cin; ++ci) {
                    for (int dy = 0; dy < 3; ++dy) {
                        const int iy = y + dy - 1;
                        if (iy < 0 || iy >= h) continue;
                        for (int dx = 0; dx < 3; ++dx) {
                            const int ix = x + dx - 1;
                            if (ix < 0 || ix >= wd) continue;
                            acc += w[((co * cin + ci) * 3 + dy) * 3 + dx] *
                                   in.at(ci, iy, ix);
                        }
                    }
                }
                out.at(co, y, x) = acc;
            }
        }
    }

    const bool tr =
        tracked(input.id()) || tracked(weight.id()) || tracked(bias.id());
    const int ii = input.id(), iw = weight.id(), ib = bias.id();
    auto back = [ii, iw, ib, cin, cout, h, wd](Tape& t) {
        const Tensor& g = t.node(t.cursor_).grad;
        const Tensor& in = t.val(ii);
        const Tensor& w = t.val(iw);
        const bool want_in = t.tracked(ii);
        const bool want_w = t.tracked(iw);
        const bool want_b = t.tracked(ib);
        Tensor din = want_in ? Tensor(in.shape()) : Tensor();
        Tensor dw = want_w ? Tensor(w.shape()) : Tensor();
        Tensor db = want_b ? Tensor({cout}) : Tensor();
        for (int co = 0; co < cout; ++co) {
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < wd; ++x) {
                    const double gv = g.at(co, y, x);
                    if (want_b) db[co] += gv;
                    if (!want_in && !want_w) continue;
                    for (int ci = 0; ci < cin; ++ci) {
                        for (int dy = 0; dy < 3; ++dy) {
                            const int iy = y + dy - 1;
                            if (iy < 0 || iy >= h) continue;
                            for (int dx = 0; dx < 3; ++dx) {
                                const int ix = x + dx - 1;
                                if (ix < 0 || ix >= wd) continue;
                                const std::int64_t widx =
                                    ((static_cast<std::int64_t>(co) * cin +
                                      ci) *
                                         3 +
                                     dy) *
                                        3 +
                                    dx;
                                if (want_w)
                                    dw[widx] += gv * in.at(ci, iy, ix);
                                if (want_in)
                                    din.at(ci, iy, ix) += gv * w[widx];
                            }
                        }
                    }
                }
            }
        }
        if (want_in) t.add_grad(ii, din);
        if (want_w) t.add_grad(iw, dw);
        if (want_b) t.add_grad(ib, db);
    };
    return Var(this, push(std::move(out), tr, nullptr, when(tr, back)));
}

Var Tape::concat_channels(const std::vector<Var>& parts) {
    if (parts.empty())
        throw ShapeError("concat_channels: at least one part required");
    int ctotal = 0;
    bool tr = false;
    for (const Var& p : parts) {
        check_mine(p, "concat_channels");
        const Tensor& tp = val(p.id());
        if (tp.rank() != 3)
            throw ShapeError("concat_channels: parts must be [C,H,W], got " +
                             shape_str(tp.shape()));
        if (tp.dim(1) != val(parts[0].id()).dim(1) ||
            tp.dim(2) != val(parts[0].id()).dim(2))
            throw ShapeError("concat_channels: spatial mismatch " +
                             shape_str(val(parts[0].id()).shape()) + " vs " +
                             shape_str(tp.shape()));
        ctotal += tp.dim(0);
        tr = tr || tracked(p.id());
    }
    const int h = val(parts[0].id()).dim(1);
    const int w = val(parts[0].id()).dim(2);
    Tensor out({ctotal, h, w});
    std::vector<int> ids;
    std::vector<int> csizes;
    std::int64_t off = 0;
    for (const Var& p : parts) {
        const Tensor& tp = val(p.id());
        for (std::int64_t i = 0; i < tp.numel(); ++i) out[off + i] = tp[i];
        off += tp.numel();
        ids.push_back(p.id());
        csizes.push_back(tp.dim(0));
    }
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    auto back = [ids, csizes, plane](Tape& t) {
        const Tensor& g = t.node(t.cursor_).grad;
        std::int64_t off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const std::int64_t n = csizes[k] * plane;
            if (t.tracked(ids[k])) {
                Tensor dg(t.val(ids[k]).shape());
                for (std::int64_t i = 0; i < n; ++i) dg[i] = g[off + i];
                t.add_grad(ids[k], dg);
            }
            off += n;
        }
    };
    return Var(this, push(std::move(out), tr, nullptr, when(tr, back)));
}

std::vector<Var> Tape::split_channels(Var x, const std::vector<int>& sizes) {
    check_mine(x, "split_channels");
    const Tensor& tx = val(x.id());
    if (tx.rank() != 3)
        throw ShapeError("split_channels: input must be [C,H,W], got " +
                         shape_str(tx.shape()));
    int total = 0;
    for (int s : sizes) {
        if (s <= 0)
            throw ShapeError("split_channels: sizes must be positive");
        total += s;
    }
    if (total != tx.dim(0))
        throw ShapeError("split_channels: sizes sum to " +
                         std::to_string(total) + " but input has " +
                         std::to_string(tx.dim(0)) + " channels");
    const int h = tx.dim(1), w = tx.dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    const bool tr = tracked(x.id());
    const int ix = x.id();
    std::vector<Var> out;
    std::int64_t off = 0;
    for (int s : sizes) {
        const std::int64_t n = s * plane;
        Tensor part({s, h, w});
        for (std::int64_t i = 0; i < n; ++i) part[i] = tx[off + i];
        const std::int64_t part_off = off;
        auto back = [ix, part_off, n](Tape& t) {
            const Tensor& g = t.node(t.cursor_).grad;
            Tensor dg(t.val(ix).shape());
            for (std::int64_t i = 0; i < n; ++i) dg[part_off + i] = g[i];
            t.add_grad(ix, dg);
        };
        out.push_back(Var(
            this, push(std::move(part), tr, nullptr, when(tr, back))));
        off += n;
    }
    return out;
}

Var Tape::weighted_band_mse(const std::vector<Var>& pred,
                            const std::vector<Tensor>& target,
                            const std::vector<double>& mu, int sample_count) {
    const std::size_t k = pred.size();
    if (k == 0 || sample_count == 0)
        throw DomainError("weighted_band_mse: K and N must be positive");
    if (sample_count < 0)
        throw DomainError("weighted_band_mse: negative sample count");
    if (target.size() != k || mu.size() != k)
        throw ShapeError("weighted_band_mse: pred/target/mu length mismatch");
    for (double m : mu)
        if (m < 0.0)
            throw DomainError("weighted_band_mse: band weights must be >= 0");
    bool tr = false;
    std::vector<int> ids;
    for (std::size_t i = 0; i < k; ++i) {
        check_mine(pred[i], "weighted_band_mse");
        if (!val(pred[i].id()).same_shape(target[i]))
            throw ShapeError("weighted_band_mse: band " + std::to_string(i) +
                             " shape mismatch " +
                             shape_str(val(pred[i].id()).shape()) + " vs " +
                             shape_str(target[i].shape()));
        tr = tr || tracked(pred[i].id());
        ids.push_back(pred[i].id());
    }
    const double norm = 1.0 / (2.0 * static_cast<double>(k) * sample_count);
    double loss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const Tensor& p = val(ids[i]);
        const Tensor& tgt = target[i];
        double sq = 0.0;
        for (std::int64_t j = 0; j < p.numel(); ++j) {
            const double d = p[j] - tgt[j];
            sq += d * d;
        }
        loss += mu[i] * sq;
    }
    Tensor out({1}, {loss * norm});
    // Targets are captured by value: the gradient is mu_k/(KN) * (p - t).
    auto targets = target;
    auto mus = mu;
    auto back = [ids, targets, mus, norm](Tape& t) {
        const double g = t.node(t.cursor_).grad[0];
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (!t.tracked(ids[i])) continue;
            const Tensor& p = t.val(ids[i]);
            const Tensor& tgt = targets[i];
            Tensor dp(p.shape());
            const double c = g * 2.0 * norm * mus[i];
            for (std::int64_t j = 0; j < p.numel(); ++j)
                dp[j] = c * (p[j] - tgt[j]);
            t.add_grad(ids[i], dp);
        }
    };
    return Var(this, push(std::move(out), tr, nullptr, when(tr, back)));
}

void Tape::backward(Var loss) {
    check_mine(loss, "backward");
    if (consumed_)
        throw DomainError("backward already ran on this tape; rebuild the "
                          "forward pass first");
    if (val(loss.id()).numel() != 1)
        throw DomainError("backward requires a scalar loss, got shape " +
                          shape_str(val(loss.id()).shape()));
    consumed_ = true;

    for (Node& n : nodes_)
        if (n.tracked) n.grad = Tensor(n.value.shape());
    if (!node(loss.id()).tracked) return;  // loss does not depend on leaves
    node(loss.id()).grad[0] = 1.0;

    for (int id = loss.id(); id >= 0; --id) {
        Node& n = node(id);
        if (!n.tracked || !n.backfn) continue;
        cursor_ = id;
        n.backfn(*this);
    }
    for (Node& n : nodes_) {
        if (!n.bound) continue;
        for (std::int64_t i = 0; i < n.grad.numel(); ++i)
            n.bound->grad[i] += n.grad[i];
    }
}

}  // namespace wdncnn
