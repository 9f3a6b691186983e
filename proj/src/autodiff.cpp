#include "gazelab/autodiff.hpp"

#include <cmath>
#include <string>

#include "gazelab/errors.hpp"
#include "gazelab/kernels.hpp"

namespace gazelab {

Param::Param(Tensor v, bool decays)
    : value(std::move(v)), grad(value.shape()), momentum(value.shape()), decay(decays) {}

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) { return push("constant", std::move(value), {}, nullptr); }

Var Tape::param(Param& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
    Var v = push("param", p.value, {}, nullptr);
    nodes_[v.id()].param = &p;
    nodes_[v.id()].requires_grad = true;
    param_nodes_.emplace(&p, v.id());
    return v;
}

Tensor& Tape::grad(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.grad) n.grad.emplace(n.value.shape());
    return *n.grad;
}

Tensor Tape::grad_of(Var v) const {
    const Node& n = nodes_[v.id()];
    return n.grad ? *n.grad : Tensor(n.value.shape());
}

Var Tape::push(const char* op, Tensor value, std::vector<std::size_t> parents, BackwardFn fn) {
    if (!value.all_finite()) {
        throw NonFiniteValue(std::string("op '") + op + "' produced a non-finite value");
    }
    bool needs_grad = false;
    for (std::size_t p : parents) needs_grad = needs_grad || nodes_[p].requires_grad;
    nodes_.push_back(Node{std::move(value), std::nullopt, std::move(parents), std::move(fn), nullptr, needs_grad});
    return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var root) {
    if (root.tape() != this) throw NonScalarRoot("root belongs to a different tape");
    if (value(root.id()).size() != 1) {
        throw NonScalarRoot("backward needs a scalar root, got shape " +
                            shape_string(value(root.id()).shape()));
    }
    grad(root.id()).fill(1.0);
    const auto& k = kernels::active();
    for (std::size_t i = root.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.grad || !n.requires_grad) continue;
        if (n.backward) n.backward(*this, i);
        if (n.param != nullptr) k.add(n.param->grad.ptr(), n.param->grad.ptr(), n.grad->ptr(), n.grad->size());
    }
}

void Tape::note_kink(double distance) {
    if (distance < min_kink_) min_kink_ = distance;
}

void Tape::note_branch(std::uint64_t token) {
    signature_ = (signature_ ^ token) * 1099511628211ull;
}

namespace ad {

namespace {

const kernels::KernelTable& K() { return kernels::active(); }

Tape& tape_of(Var a) {
    if (!a.valid()) throw ShapeMismatch("use of an unbound Var");
    return *a.tape();
}

Tape& tape_of(Var a, Var b) {
    if (a.tape() != b.tape()) throw ShapeMismatch("operands live on different tapes");
    return tape_of(a);
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeMismatch(std::string(op) + ": " + shape_string(a.shape()) + " vs " +
                            shape_string(b.shape()));
    }
}

void require_rank2(const char* op, const Tensor& a) {
    if (a.rank() != 2) {
        throw ShapeMismatch(std::string(op) + " needs a rank-2 tensor, got " + shape_string(a.shape()));
    }
}

void accumulate(Tensor& slot, const Tensor& delta) { K().add(slot.ptr(), slot.ptr(), delta.ptr(), slot.size()); }

void accumulate_scaled(Tensor& slot, const Tensor& delta, double s) {
    K().axpy(slot.ptr(), delta.ptr(), s, slot.size());
}

}  // namespace

Var matmul(Var a, Var b) {
    Tape& t = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require_rank2("matmul", av);
    require_rank2("matmul", bv);
    if (av.cols() != bv.rows()) {
        throw ShapeMismatch("matmul: " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
    }
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    Tensor out({m, n});
    K().gemm_nn(out.ptr(), av.ptr(), bv.ptr(), m, k, n);
    const std::size_t ia = a.id(), ib = b.id();
    return t.push("matmul", std::move(out), {ia, ib}, [ia, ib, m, k, n](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        if (tp.requires_grad(ia)) {
            Tensor da({m, k});
            K().gemm_nt(da.ptr(), g.ptr(), tp.value(ib).ptr(), m, n, k);
            accumulate(tp.grad(ia), da);
        }
        if (tp.requires_grad(ib)) {
            Tensor db({k, n});
            K().gemm_tn(db.ptr(), tp.value(ia).ptr(), g.ptr(), m, k, n);
            accumulate(tp.grad(ib), db);
        }
    });
}

Var affine(Var x, Var w, Var bias) {
    Tape& t = tape_of(x, w);
    tape_of(x, bias);
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    const Tensor& bv = bias.value();
    require_rank2("affine", xv);
    require_rank2("affine", wv);
    if (xv.cols() != wv.rows() || bv.rank() != 1 || bv.size() != wv.cols()) {
        throw ShapeMismatch("affine: x " + shape_string(xv.shape()) + ", w " + shape_string(wv.shape()) +
                            ", bias " + shape_string(bv.shape()));
    }
    const std::size_t m = xv.rows(), k = xv.cols(), n = wv.cols();
    Tensor out({m, n});
    K().gemm_nn(out.ptr(), xv.ptr(), wv.ptr(), m, k, n);
    for (std::size_t r = 0; r < m; ++r) K().add(out.ptr() + r * n, out.ptr() + r * n, bv.ptr(), n);
    const std::size_t ix = x.id(), iw = w.id(), ib = bias.id();
    return t.push("affine", std::move(out), {ix, iw, ib}, [ix, iw, ib, m, k, n](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        if (tp.requires_grad(ix)) {
            Tensor dx({m, k});
            K().gemm_nt(dx.ptr(), g.ptr(), tp.value(iw).ptr(), m, n, k);
            accumulate(tp.grad(ix), dx);
        }
        Tensor dw({k, n});
        K().gemm_tn(dw.ptr(), tp.value(ix).ptr(), g.ptr(), m, k, n);
        accumulate(tp.grad(iw), dw);
        Tensor& db = tp.grad(ib);
        for (std::size_t r = 0; r < m; ++r) K().add(db.ptr(), db.ptr(), g.ptr() + r * n, n);
    });
}

Var add(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same("add", a.value(), b.value());
    Tensor out(a.shape());
    K().add(out.ptr(), a.value().ptr(), b.value().ptr(), out.size());
    const std::size_t ia = a.id(), ib = b.id();
    return t.push("add", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        accumulate(tp.grad(ia), g);
        accumulate(tp.grad(ib), g);
    });
}

Var sub(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same("sub", a.value(), b.value());
    Tensor out(a.shape());
    K().sub(out.ptr(), a.value().ptr(), b.value().ptr(), out.size());
    const std::size_t ia = a.id(), ib = b.id();
    return t.push("sub", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        accumulate(tp.grad(ia), g);
        accumulate_scaled(tp.grad(ib), g, -1.0);
    });
}

Var mul(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same("mul", a.value(), b.value());
    Tensor out(a.shape());
    K().mul(out.ptr(), a.value().ptr(), b.value().ptr(), out.size());
    const std::size_t ia = a.id(), ib = b.id();
    return t.push("mul", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor tmp(g.shape());
        K().mul(tmp.ptr(), g.ptr(), tp.value(ib).ptr(), g.size());
        accumulate(tp.grad(ia), tmp);
        K().mul(tmp.ptr(), g.ptr(), tp.value(ia).ptr(), g.size());
        accumulate(tp.grad(ib), tmp);
    });
}

Var scale(Var a, double s) {
    Tape& t = tape_of(a);
    Tensor out(a.shape());
    K().scale(out.ptr(), a.value().ptr(), s, out.size());
    const std::size_t ia = a.id();
    return t.push("scale", std::move(out), {ia}, [ia, s](Tape& tp, std::size_t self) {
        accumulate_scaled(tp.grad(ia), tp.grad(self), s);
    });
}

Var relu(Var a) {
    Tape& t = tape_of(a);
    const Tensor& av = a.value();
    Tensor out(av.shape());
    K().relu(out.ptr(), av.ptr(), out.size());
    double nearest = std::numeric_limits<double>::infinity();
    std::uint64_t mask = 0;
    for (double x : av.data()) {
        nearest = std::min(nearest, std::abs(x));
        mask = mask * 31u + (x > 0.0 ? 1u : 0u);
    }
    t.note_kink(nearest);
    t.note_branch(mask);
    const std::size_t ia = a.id();
    return t.push("relu", std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        K().relu_backward(tp.grad(ia).ptr(), g.ptr(), tp.value(ia).ptr(), g.size());
    });
}

Var sin(Var a) {
    Tape& t = tape_of(a);
    Tensor out(a.shape());
    const auto src = a.value().data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sin(src[i]);
    const std::size_t ia = a.id();
    return t.push("sin", std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& x = tp.value(ia);
        Tensor& ga = tp.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * std::cos(x[i]);
    });
}

Var cos(Var a) {
    Tape& t = tape_of(a);
    Tensor out(a.shape());
    const auto src = a.value().data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::cos(src[i]);
    const std::size_t ia = a.id();
    return t.push("cos", std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& x = tp.value(ia);
        Tensor& ga = tp.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i] * std::sin(x[i]);
    });
}

Var concat(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeMismatch("concat of zero tensors");
    Tape& t = tape_of(parts.front());
    const std::size_t rows = parts.front().value().rows();
    std::vector<std::size_t> ids, widths;
    std::size_t total = 0;
    for (const Var& p : parts) {
        tape_of(parts.front(), p);
        require_rank2("concat", p.value());
        if (p.value().rows() != rows) {
            throw ShapeMismatch("concat: " + shape_string(parts.front().shape()) + " vs " +
                                shape_string(p.shape()));
        }
        ids.push_back(p.id());
        widths.push_back(p.value().cols());
        total += p.value().cols();
    }
    Tensor out({rows, total});
    std::size_t offset = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const Tensor& v = parts[i].value();
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(v.ptr() + r * widths[i], widths[i], out.ptr() + r * total + offset);
        }
        offset += widths[i];
    }
    return t.push("concat", std::move(out), ids, [ids, widths, rows, total](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        std::size_t off = 0;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            Tensor& gi = tp.grad(ids[i]);
            for (std::size_t r = 0; r < rows; ++r) {
                K().add(gi.ptr() + r * widths[i], gi.ptr() + r * widths[i], g.ptr() + r * total + off, widths[i]);
            }
            off += widths[i];
        }
    });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
    Tape& t = tape_of(a);
    const Tensor& av = a.value();
    require_rank2("slice_cols", av);
    if (begin >= end || end > av.cols()) {
        throw ShapeMismatch("slice_cols [" + std::to_string(begin) + ", " + std::to_string(end) +
                            ") of " + shape_string(av.shape()));
    }
    const std::size_t rows = av.rows(), cols = av.cols(), w = end - begin;
    Tensor out({rows, w});
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(av.ptr() + r * cols + begin, w, out.ptr() + r * w);
    const std::size_t ia = a.id();
    return t.push("slice_cols", std::move(out), {ia}, [ia, rows, cols, begin, w](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad(ia);
        for (std::size_t r = 0; r < rows; ++r) {
            K().add(ga.ptr() + r * cols + begin, ga.ptr() + r * cols + begin, g.ptr() + r * w, w);
        }
    });
}

Var reduce_sum(Var a) {
    Tape& t = tape_of(a);
    double s = 0.0;
    for (double x : a.value().data()) s += x;
    const std::size_t ia = a.id();
    return t.push("reduce_sum", Tensor::scalar(s), {ia}, [ia](Tape& tp, std::size_t self) {
        const double g = tp.grad(self).item();
        for (double& x : tp.grad(ia).data()) x += g;
    });
}

Var reduce_mean(Var a) {
    Tape& t = tape_of(a);
    const double n = static_cast<double>(a.value().size());
    double s = 0.0;
    for (double x : a.value().data()) s += x;
    const std::size_t ia = a.id();
    return t.push("reduce_mean", Tensor::scalar(s / n), {ia}, [ia, n](Tape& tp, std::size_t self) {
        const double g = tp.grad(self).item() / n;
        for (double& x : tp.grad(ia).data()) x += g;
    });
}

Var maximum(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeMismatch("maximum of zero tensors");
    Tape& t = tape_of(parts.front());
    std::vector<std::size_t> ids;
    for (const Var& p : parts) {
        tape_of(parts.front(), p);
        require_same("maximum", parts.front().value(), p.value());
        ids.push_back(p.id());
    }
    const std::size_t n = parts.front().value().size();
    Tensor out = parts.front().value();
    for (std::size_t i = 1; i < parts.size(); ++i) K().maximum(out.ptr(), out.ptr(), parts[i].value().ptr(), n);

    std::vector<std::uint32_t> winner(n, 0);
    double nearest = std::numeric_limits<double>::infinity();
    std::uint64_t pattern = 0;
    for (std::size_t e = 0; e < n; ++e) {
        std::uint32_t w = 0;
        while (parts[w].value()[e] != out[e]) ++w;
        winner[e] = w;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            // Ties at exactly zero come from relu-clamped inputs, which have a
            // zero derivative on both sides; they are not kinks.
            if (i == w || (out[e] == 0.0 && parts[i].value()[e] == 0.0)) continue;
            nearest = std::min(nearest, out[e] - parts[i].value()[e]);
        }
        pattern = pattern * 31u + w;
    }
    if (parts.size() > 1) {
        t.note_kink(nearest);
        t.note_branch(pattern);
    }
    return t.push("maximum", std::move(out), ids, [ids, winner](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        for (std::size_t e = 0; e < winner.size(); ++e) tp.grad(ids[winner[e]])[e] += g[e];
    });
}

Var mean_of(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeMismatch("mean_of zero tensors");
    Tape& t = tape_of(parts.front());
    std::vector<std::size_t> ids;
    for (const Var& p : parts) {
        tape_of(parts.front(), p);
        require_same("mean_of", parts.front().value(), p.value());
        ids.push_back(p.id());
    }
    const Tensor& x0 = parts.front().value();
    const std::size_t n = x0.size();
    const double count = static_cast<double>(parts.size());
    Tensor spread(x0.shape());
    Tensor diff(x0.shape());
    for (std::size_t i = 1; i < parts.size(); ++i) {
        K().sub(diff.ptr(), parts[i].value().ptr(), x0.ptr(), n);
        K().add(spread.ptr(), spread.ptr(), diff.ptr(), n);
    }
    Tensor out = x0;
    K().axpy(out.ptr(), spread.ptr(), 1.0 / count, n);
    return t.push("mean_of", std::move(out), ids, [ids, count](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        for (std::size_t id : ids) accumulate_scaled(tp.grad(id), g, 1.0 / count);
    });
}

Var sq_l2(Var a) {
    Tape& t = tape_of(a);
    const double s = K().sum_sq(a.value().ptr(), a.value().size());
    const std::size_t ia = a.id();
    return t.push("sq_l2", Tensor::scalar(s), {ia}, [ia](Tape& tp, std::size_t self) {
        accumulate_scaled(tp.grad(ia), tp.value(ia), 2.0 * tp.grad(self).item());
    });
}

Var mse(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same("mse", a.value(), b.value());
    require_rank2("mse", a.value());
    Tensor diff(a.shape());
    K().sub(diff.ptr(), a.value().ptr(), b.value().ptr(), diff.size());
    const double rows = static_cast<double>(a.value().rows());
    const double s = K().sum_sq(diff.ptr(), diff.size()) / rows;
    const std::size_t ia = a.id(), ib = b.id();
    return t.push("mse", Tensor::scalar(s), {ia, ib},
                  [ia, ib, rows, diff = std::move(diff)](Tape& tp, std::size_t self) {
                      const double g = 2.0 * tp.grad(self).item() / rows;
                      accumulate_scaled(tp.grad(ia), diff, g);
                      accumulate_scaled(tp.grad(ib), diff, -g);
                  });
}

namespace {

void require_rows3(const char* op, const Tensor& a, const Tensor& b) {
    require_same(op, a, b);
    if (a.rank() != 2 || a.cols() != 3) {
        throw ShapeMismatch(std::string(op) + " needs [B, 3] tensors, got " + shape_string(a.shape()));
    }
}

}  // namespace

Var cross3(Var a, Var b) {
    Tape& t = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require_rows3("cross3", av, bv);
    const std::size_t rows = av.rows();
    Tensor out({rows, 3});
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = av.ptr() + 3 * r;
        const double* y = bv.ptr() + 3 * r;
        double* o = out.ptr() + 3 * r;
        o[0] = x[1] * y[2] - x[2] * y[1];
        o[1] = x[2] * y[0] - x[0] * y[2];
        o[2] = x[0] * y[1] - x[1] * y[0];
    }
    const std::size_t ia = a.id(), ib = b.id();
    return t.push("cross3", std::move(out), {ia, ib}, [ia, ib, rows](Tape& tp, std::size_t self) {
        // d(a x b) with upstream g: grad_a = b x g, grad_b = g x a.
        const Tensor& g = tp.grad(self);
        const Tensor& av = tp.value(ia);
        const Tensor& bv = tp.value(ib);
        Tensor& ga = tp.grad(ia);
        Tensor& gb = tp.grad(ib);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* x = av.ptr() + 3 * r;
            const double* y = bv.ptr() + 3 * r;
            const double* gr = g.ptr() + 3 * r;
            double* dx = ga.ptr() + 3 * r;
            double* dy = gb.ptr() + 3 * r;
            dx[0] += y[1] * gr[2] - y[2] * gr[1];
            dx[1] += y[2] * gr[0] - y[0] * gr[2];
            dx[2] += y[0] * gr[1] - y[1] * gr[0];
            dy[0] += gr[1] * x[2] - gr[2] * x[1];
            dy[1] += gr[2] * x[0] - gr[0] * x[2];
            dy[2] += gr[0] * x[1] - gr[1] * x[0];
        }
    });
}

Var dot3(Var a, Var b) {
    Tape& t = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require_rows3("dot3", av, bv);
    const std::size_t rows = av.rows();
    Tensor out({rows, 1});
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = av.ptr() + 3 * r;
        const double* y = bv.ptr() + 3 * r;
        out[r] = x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    }
    const std::size_t ia = a.id(), ib = b.id();
    return t.push("dot3", std::move(out), {ia, ib}, [ia, ib, rows](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& av = tp.value(ia);
        const Tensor& bv = tp.value(ib);
        Tensor& ga = tp.grad(ia);
        Tensor& gb = tp.grad(ib);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < 3; ++c) {
                ga[3 * r + c] += g[r] * bv[3 * r + c];
                gb[3 * r + c] += g[r] * av[3 * r + c];
            }
        }
    });
}

}  // namespace ad

}  // namespace gazelab
