#pragma once
// Reverse-mode automatic differentiation over the closed operation set the
// reconstruction model needs: convolution (differentiable in both taps and
// input), kernel synthesis from basis coefficients, the centered FFT pair,
// elementwise/broadcast arithmetic, leaky rectifier, instance normalization,
// average pooling, bilinear upsampling, reductions, and the uniform-window
// structural-similarity loss assembled from these primitives.
//
// Complex gradients use the conjugate (Wirtinger) convention for a real loss:
// the cotangent carried for a complex node is  c = dL/dRe + i dL/dIm,
// which makes the vjp of any C-linear operator its conjugate transpose — in
// particular the vjp of fft2c is exactly ifft2c.
//
// One tape per training step; values are recorded eagerly, backward walks the
// recording order in reverse, and gradients accumulate additively across
// reuse.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "varno/disco.hpp"
#include "varno/errors.hpp"
#include "varno/fft.hpp"
#include "varno/tensor.hpp"

namespace varno {

using TensorV = std::variant<RTensor, CTensor>;

enum class Op : uint8_t {
    leaf,
    add,         // a + b, same type/shape
    sub,         // a - b
    neg,         // -a
    mul,         // elementwise a * b, same type/shape
    mul_b0,      // complex (C,H,W) * complex (H,W) broadcast over coils
    smul,        // real tensor * real scalar variable
    cscale,      // complex tensor * real scalar variable
    scale_const, // tensor * fixed real constant
    add_const,   // real tensor + fixed real constant
    conj_,       // complex conjugate
    r2c,         // real -> complex (zero imaginary part)
    c2ch,        // complex (C,H,W) -> real (2C,H,W), [Re block | Im block]
    ch2c,        // real (2C,H,W) -> complex (C,H,W)
    sq0,         // (1,H,W) -> (H,W)
    unsq0,       // (H,W) -> (1,H,W)
    fft2,        // centered orthonormal FFT over trailing two axes
    ifft2,
    rmul_const,  // multiply by a fixed real (H,W) field, broadcast over leading axis
    abs2,        // complex -> real |z|^2
    sqrtr,       // real sqrt(x + eps)
    divr,        // real a / b elementwise
    bdiv,        // complex (C,H,W) / real (H,W)
    sum0,        // (C,H,W) -> (H,W) sum over axis 0
    sum_all,     // real -> scalar {1}
    mean_all,    // real -> scalar {1}
    leaky,       // leaky rectifier
    inorm,       // instance norm over (C,H,W), no affine
    pool2,       // 2x2 average pooling
    upbil,       // bilinear upsampling, align-corners-false
    cat0,        // concat two (C,H,W) stacks along axis 0
    slice0,      // take one axis-0 slab of a (C,H,W) stack, keeping rank
    box7,        // 7x7 valid-region mean filter on (H,W)
    conv2,       // same-size zero-padded correlation: taps (O,I,S,S) x (I,H,W)
    synth,       // basis coefficients (O,I,L) -> taps (O,I,S,S) via fixed table
};

class Tape {
  public:
    using Id = int32_t;

    struct Node {
        Op op = Op::leaf;
        std::vector<Id> inputs;
        TensorV value;
        TensorV grad;
        bool has_grad = false;
        bool need = false;
        double a0 = 0;   // eps / slope / constant
        int64_t i0 = 0;  // integer attribute (upsample scale, tap size)
        RTensor raux;    // fixed tensor attribute (mask field, basis table)
    };

    Id leaf(RTensor v, bool requires_grad = false) {
        return push(Op::leaf, {}, TensorV(std::move(v)), requires_grad);
    }
    Id leaf(CTensor v, bool requires_grad = false) {
        return push(Op::leaf, {}, TensorV(std::move(v)), requires_grad);
    }

    // ---- value / gradient access -------------------------------------------
    const RTensor& rval(Id id) const { return std::get<RTensor>(node(id).value); }
    const CTensor& cval(Id id) const { return std::get<CTensor>(node(id).value); }
    bool is_real(Id id) const { return std::holds_alternative<RTensor>(node(id).value); }

    RTensor rgrad(Id id) const {
        const Node& n = node(id);
        if (!n.has_grad) return RTensor(std::get<RTensor>(n.value).shape);
        return std::get<RTensor>(n.grad);
    }
    CTensor cgrad(Id id) const {
        const Node& n = node(id);
        if (!n.has_grad) return CTensor(std::get<CTensor>(n.value).shape);
        return std::get<CTensor>(n.grad);
    }

    // ---- arithmetic --------------------------------------------------------
    Id add(Id a, Id b) { return binary_same(Op::add, a, b); }
    Id sub(Id a, Id b) { return binary_same(Op::sub, a, b); }
    Id mul(Id a, Id b) { return binary_same(Op::mul, a, b); }

    Id neg(Id a) {
        TensorV v = node(a).value;
        std::visit([](auto& t) { for (auto& x : t.data) x = -x; }, v);
        return push(Op::neg, {a}, std::move(v));
    }

    Id mul_b0(Id a, Id b) {
        const CTensor& ca = cval(a);
        const CTensor& cb = cval(b);
        if (ca.rank() != 3 || cb.rank() != 2 || ca.dim(1) != cb.dim(0) || ca.dim(2) != cb.dim(1))
            throw InvalidArgument("mul_b0: want (C,H,W) * (H,W)");
        CTensor out(ca.shape);
        const int64_t C = ca.dim(0), HW = cb.numel();
        for (int64_t c = 0; c < C; ++c)
            for (int64_t i = 0; i < HW; ++i)
                out.data[static_cast<size_t>(c * HW + i)] =
                    ca.data[static_cast<size_t>(c * HW + i)] * cb.data[static_cast<size_t>(i)];
        return push(Op::mul_b0, {a, b}, TensorV(std::move(out)));
    }

    Id smul(Id x, Id s) {
        const RTensor& rx = rval(x);
        check_scalar(s, "smul");
        RTensor out = rx;
        const double sv = rval(s).data[0];
        for (auto& v : out.data) v *= sv;
        return push(Op::smul, {x, s}, TensorV(std::move(out)));
    }

    Id cscale(Id x, Id s) {
        const CTensor& cx = cval(x);
        check_scalar(s, "cscale");
        CTensor out = cx;
        const double sv = rval(s).data[0];
        for (auto& v : out.data) v *= sv;
        return push(Op::cscale, {x, s}, TensorV(std::move(out)));
    }

    Id scale_const(Id x, double c) {
        TensorV v = node(x).value;
        std::visit([&](auto& t) { for (auto& e : t.data) e *= c; }, v);
        Id id = push(Op::scale_const, {x}, std::move(v));
        node(id).a0 = c;
        return id;
    }

    Id add_const(Id x, double c) {
        RTensor out = rval(x);
        for (auto& v : out.data) v += c;
        Id id = push(Op::add_const, {x}, TensorV(std::move(out)));
        node(id).a0 = c;
        return id;
    }

    // ---- complex plumbing --------------------------------------------------
    Id conj(Id a) {
        CTensor out = cval(a);
        for (auto& v : out.data) v = std::conj(v);
        return push(Op::conj_, {a}, TensorV(std::move(out)));
    }

    Id r2c(Id a) {
        const RTensor& r = rval(a);
        CTensor out(r.shape);
        for (size_t i = 0; i < r.data.size(); ++i) out.data[i] = cd(r.data[i], 0);
        return push(Op::r2c, {a}, TensorV(std::move(out)));
    }

    Id c2ch(Id a) {
        const CTensor& c = cval(a);
        if (c.rank() != 3) throw InvalidArgument("c2ch: want (C,H,W)");
        const int64_t C = c.dim(0), HW = c.dim(1) * c.dim(2);
        RTensor out({2 * C, c.dim(1), c.dim(2)});
        for (int64_t ch = 0; ch < C; ++ch)
            for (int64_t i = 0; i < HW; ++i) {
                out.data[static_cast<size_t>(ch * HW + i)] =
                    c.data[static_cast<size_t>(ch * HW + i)].real();
                out.data[static_cast<size_t>((C + ch) * HW + i)] =
                    c.data[static_cast<size_t>(ch * HW + i)].imag();
            }
        return push(Op::c2ch, {a}, TensorV(std::move(out)));
    }

    Id ch2c(Id a) {
        const RTensor& r = rval(a);
        if (r.rank() != 3 || r.dim(0) % 2 != 0)
            throw InvalidArgument("ch2c: want (2C,H,W) with even leading extent");
        const int64_t C = r.dim(0) / 2, HW = r.dim(1) * r.dim(2);
        CTensor out({C, r.dim(1), r.dim(2)});
        for (int64_t ch = 0; ch < C; ++ch)
            for (int64_t i = 0; i < HW; ++i)
                out.data[static_cast<size_t>(ch * HW + i)] =
                    cd(r.data[static_cast<size_t>(ch * HW + i)],
                       r.data[static_cast<size_t>((C + ch) * HW + i)]);
        return push(Op::ch2c, {a}, TensorV(std::move(out)));
    }

    Id sq0(Id a) {
        TensorV v = node(a).value;
        std::visit(
            [](auto& t) {
                if (t.rank() != 3 || t.dim(0) != 1) throw InvalidArgument("sq0: want (1,H,W)");
                t.shape = {t.dim(1), t.dim(2)};
            },
            v);
        return push(Op::sq0, {a}, std::move(v));
    }

    Id unsq0(Id a) {
        TensorV v = node(a).value;
        std::visit(
            [](auto& t) {
                if (t.rank() != 2) throw InvalidArgument("unsq0: want (H,W)");
                t.shape = {1, t.dim(0), t.dim(1)};
            },
            v);
        return push(Op::unsq0, {a}, std::move(v));
    }

    Id fft2(Id a) { return push(Op::fft2, {a}, TensorV(varno::fft2c(cval(a)))); }
    Id ifft2(Id a) { return push(Op::ifft2, {a}, TensorV(varno::ifft2c(cval(a)))); }

    Id rmul_const(Id a, RTensor field) {
        if (field.rank() != 2) throw InvalidArgument("rmul_const: field must be (H,W)");
        TensorV v = node(a).value;
        std::visit(
            [&](auto& t) {
                const int64_t HW = field.numel();
                if (t.rank() < 2 || t.dim(t.rank() - 2) != field.dim(0) ||
                    t.dim(t.rank() - 1) != field.dim(1))
                    throw InvalidArgument("rmul_const: trailing shape mismatch");
                const int64_t B = t.numel() / HW;
                for (int64_t b = 0; b < B; ++b)
                    for (int64_t i = 0; i < HW; ++i)
                        t.data[static_cast<size_t>(b * HW + i)] *=
                            field.data[static_cast<size_t>(i)];
            },
            v);
        Id id = push(Op::rmul_const, {a}, std::move(v));
        node(id).raux = std::move(field);
        return id;
    }

    Id abs2(Id a) {
        const CTensor& c = cval(a);
        RTensor out(c.shape);
        for (size_t i = 0; i < c.data.size(); ++i) out.data[i] = std::norm(c.data[i]);
        return push(Op::abs2, {a}, TensorV(std::move(out)));
    }

    Id sqrtr(Id a, double eps = 0.0) {
        const RTensor& r = rval(a);
        RTensor out(r.shape);
        for (size_t i = 0; i < r.data.size(); ++i) out.data[i] = std::sqrt(r.data[i] + eps);
        Id id = push(Op::sqrtr, {a}, TensorV(std::move(out)));
        node(id).a0 = eps;
        return id;
    }

    Id divr(Id a, Id b) {
        const RTensor& ra = rval(a);
        const RTensor& rb = rval(b);
        if (!same_shape(ra, rb)) throw InvalidArgument("divr: shape mismatch");
        RTensor out(ra.shape);
        for (size_t i = 0; i < ra.data.size(); ++i) out.data[i] = ra.data[i] / rb.data[i];
        return push(Op::divr, {a, b}, TensorV(std::move(out)));
    }

    Id bdiv(Id a, Id b) {
        const CTensor& ca = cval(a);
        const RTensor& rb = rval(b);
        if (ca.rank() != 3 || rb.rank() != 2 || ca.dim(1) != rb.dim(0) || ca.dim(2) != rb.dim(1))
            throw InvalidArgument("bdiv: want (C,H,W) / (H,W)");
        CTensor out(ca.shape);
        const int64_t C = ca.dim(0), HW = rb.numel();
        for (int64_t c = 0; c < C; ++c)
            for (int64_t i = 0; i < HW; ++i)
                out.data[static_cast<size_t>(c * HW + i)] =
                    ca.data[static_cast<size_t>(c * HW + i)] / rb.data[static_cast<size_t>(i)];
        return push(Op::bdiv, {a, b}, TensorV(std::move(out)));
    }

    Id sum0(Id a) {
        Id id;
        if (is_real(a)) {
            const RTensor& r = rval(a);
            if (r.rank() != 3) throw InvalidArgument("sum0: want rank 3");
            RTensor out({r.dim(1), r.dim(2)});
            const int64_t C = r.dim(0), HW = out.numel();
            for (int64_t c = 0; c < C; ++c)
                for (int64_t i = 0; i < HW; ++i)
                    out.data[static_cast<size_t>(i)] += r.data[static_cast<size_t>(c * HW + i)];
            id = push(Op::sum0, {a}, TensorV(std::move(out)));
        } else {
            const CTensor& c = cval(a);
            if (c.rank() != 3) throw InvalidArgument("sum0: want rank 3");
            CTensor out({c.dim(1), c.dim(2)});
            const int64_t C = c.dim(0), HW = out.numel();
            for (int64_t ch = 0; ch < C; ++ch)
                for (int64_t i = 0; i < HW; ++i)
                    out.data[static_cast<size_t>(i)] += c.data[static_cast<size_t>(ch * HW + i)];
            id = push(Op::sum0, {a}, TensorV(std::move(out)));
        }
        return id;
    }

    Id sum_all(Id a) {
        const RTensor& r = rval(a);
        RTensor out({1});
        for (double v : r.data) out.data[0] += v;
        return push(Op::sum_all, {a}, TensorV(std::move(out)));
    }

    Id mean_all(Id a) {
        const RTensor& r = rval(a);
        RTensor out({1});
        for (double v : r.data) out.data[0] += v;
        out.data[0] /= static_cast<double>(r.numel());
        return push(Op::mean_all, {a}, TensorV(std::move(out)));
    }

    // ---- neural-network pieces ---------------------------------------------
    Id leaky(Id a, double slope) {
        const RTensor& r = rval(a);
        RTensor out(r.shape);
        for (size_t i = 0; i < r.data.size(); ++i)
            out.data[i] = r.data[i] >= 0 ? r.data[i] : slope * r.data[i];
        Id id = push(Op::leaky, {a}, TensorV(std::move(out)));
        node(id).a0 = slope;
        return id;
    }

    Id instance_norm(Id a, double eps = 1e-5) {
        const RTensor& r = rval(a);
        if (r.rank() != 3) throw InvalidArgument("instance_norm: want (C,H,W)");
        const int64_t C = r.dim(0), HW = r.dim(1) * r.dim(2);
        if (HW < 2) throw InvalidArgument("instance_norm: need at least two spatial samples");
        RTensor out(r.shape), sig({C});
        for (int64_t c = 0; c < C; ++c) {
            const double* src = r.ptr() + c * HW;
            double mu = 0;
            for (int64_t i = 0; i < HW; ++i) mu += src[i];
            mu /= static_cast<double>(HW);
            double var = 0;
            for (int64_t i = 0; i < HW; ++i) var += (src[i] - mu) * (src[i] - mu);
            var /= static_cast<double>(HW);
            const double s = std::sqrt(var + eps);
            sig.data[static_cast<size_t>(c)] = s;
            double* dst = out.ptr() + c * HW;
            for (int64_t i = 0; i < HW; ++i) dst[i] = (src[i] - mu) / s;
        }
        Id id = push(Op::inorm, {a}, TensorV(std::move(out)));
        node(id).a0 = eps;
        node(id).raux = std::move(sig);
        return id;
    }

    Id avgpool2(Id a) {
        const RTensor& r = rval(a);
        if (r.rank() != 3 || r.dim(1) % 2 != 0 || r.dim(2) % 2 != 0)
            throw InvalidArgument("avgpool2: want (C,H,W) with even H, W");
        const int64_t C = r.dim(0), H = r.dim(1), W = r.dim(2);
        RTensor out({C, H / 2, W / 2});
        for (int64_t c = 0; c < C; ++c)
            for (int64_t y = 0; y < H / 2; ++y)
                for (int64_t x = 0; x < W / 2; ++x)
                    out(c, y, x) = 0.25 * (r(c, 2 * y, 2 * x) + r(c, 2 * y, 2 * x + 1) +
                                           r(c, 2 * y + 1, 2 * x) + r(c, 2 * y + 1, 2 * x + 1));
        return push(Op::pool2, {a}, TensorV(std::move(out)));
    }

    Id upsample_bilinear(Id a, int64_t scale) {
        const RTensor& r = rval(a);
        if (r.rank() != 3) throw InvalidArgument("upsample_bilinear: want (C,H,W)");
        if (scale < 1) throw InvalidArgument("upsample_bilinear: scale must be >= 1");
        RTensor out = upbil_forward(r, scale);
        Id id = push(Op::upbil, {a}, TensorV(std::move(out)));
        node(id).i0 = scale;
        return id;
    }

    Id cat0(Id a, Id b) {
        if (is_real(a) != is_real(b)) throw InvalidArgument("cat0: mixed real/complex");
        auto glue = [&](const auto& ra, const auto& rb) {
            if (ra.rank() != 3 || rb.rank() != 3 || ra.dim(1) != rb.dim(1) ||
                ra.dim(2) != rb.dim(2))
                throw InvalidArgument("cat0: want two (C,H,W) stacks on one grid");
            std::decay_t<decltype(ra)> out({ra.dim(0) + rb.dim(0), ra.dim(1), ra.dim(2)});
            std::copy(ra.data.begin(), ra.data.end(), out.data.begin());
            std::copy(rb.data.begin(), rb.data.end(),
                      out.data.begin() + static_cast<int64_t>(ra.data.size()));
            return out;
        };
        if (is_real(a)) return push(Op::cat0, {a, b}, TensorV(glue(rval(a), rval(b))));
        return push(Op::cat0, {a, b}, TensorV(glue(cval(a), cval(b))));
    }

    Id slice0(Id a, int64_t index) {
        auto take = [&](const auto& r) {
            if (r.rank() != 3) throw InvalidArgument("slice0: want (C,H,W)");
            if (index < 0 || index >= r.dim(0)) throw InvalidArgument("slice0: index out of range");
            std::decay_t<decltype(r)> out({int64_t{1}, r.dim(1), r.dim(2)});
            const int64_t HW = r.dim(1) * r.dim(2);
            std::copy(r.data.begin() + index * HW, r.data.begin() + (index + 1) * HW,
                      out.data.begin());
            return out;
        };
        Id id = is_real(a) ? push(Op::slice0, {a}, TensorV(take(rval(a))))
                           : push(Op::slice0, {a}, TensorV(take(cval(a))));
        node(id).i0 = index;
        return id;
    }

    Id box7(Id a) {
        const RTensor& r = rval(a);
        if (r.rank() != 2 || r.dim(0) < 7 || r.dim(1) < 7)
            throw InvalidArgument("box7: want (H,W) with H,W >= 7");
        const int64_t H = r.dim(0), W = r.dim(1);
        RTensor out({H - 6, W - 6});
        for (int64_t y = 0; y + 7 <= H; ++y)
            for (int64_t x = 0; x + 7 <= W; ++x) {
                double s = 0;
                for (int64_t dy = 0; dy < 7; ++dy)
                    for (int64_t dx = 0; dx < 7; ++dx) s += r(y + dy, x + dx);
                out(y, x) = s / 49.0;
            }
        return push(Op::box7, {a}, TensorV(std::move(out)));
    }

    Id conv2(Id taps, Id x) {
        RTensor out = conv2d_taps(rval(taps), rval(x));
        return push(Op::conv2, {taps, x}, TensorV(std::move(out)));
    }

    // theta (O,I,L) -> taps (O,I,S,S), weights = table * theta per (o,i) pair.
    Id synth(Id theta, const BasisTable& table) {
        const RTensor& th = rval(theta);
        if (th.rank() != 3) throw InvalidArgument("synth: want (O,I,L) coefficients");
        const int64_t S = 2 * table.half_width + 1, L = table.values.dim(1);
        if (th.dim(2) != L) throw InvalidArgument("synth: coefficient count mismatch");
        const int64_t O = th.dim(0), I = th.dim(1);
        RTensor out({O, I, S, S});
        for (int64_t oi = 0; oi < O * I; ++oi) {
            const double* coeff = th.ptr() + oi * L;
            double* w = out.ptr() + oi * S * S;
            for (int64_t t = 0; t < S * S; ++t) {
                const double* row = table.values.ptr() + t * L;
                double acc = 0;
                for (int64_t l = 0; l < L; ++l) acc += coeff[l] * row[l];
                w[t] = acc;
            }
        }
        Id id = push(Op::synth, {theta}, TensorV(std::move(out)));
        node(id).raux = table.values;
        node(id).i0 = S;
        return id;
    }

    // ---- backward ----------------------------------------------------------
    void backward(Id loss) {
        Node& ln = node(loss);
        if (!std::holds_alternative<RTensor>(ln.value) ||
            std::get<RTensor>(ln.value).numel() != 1)
            throw InvalidArgument("backward: loss must be a real scalar");
        for (auto& n : nodes_) {
            n.has_grad = false;
            n.grad = TensorV{};
        }
        ensure_grad(loss);
        std::get<RTensor>(ln.grad).data[0] = 1.0;
        for (Id i = loss; i >= 0; --i) {
            Node& n = node(i);
            if (!n.has_grad || !n.need || n.op == Op::leaf) continue;
            propagate(n);
        }
    }

    size_t size() const { return nodes_.size(); }

  private:
    std::vector<Node> nodes_;

    Node& node(Id id) { return nodes_[static_cast<size_t>(id)]; }
    const Node& node(Id id) const { return nodes_[static_cast<size_t>(id)]; }

    Id push(Op op, std::vector<Id> inputs, TensorV value, bool leaf_need = false) {
        Node n;
        n.op = op;
        n.inputs = std::move(inputs);
        n.value = std::move(value);
        n.need = leaf_need;
        for (Id i : n.inputs) n.need = n.need || node(i).need;
        nodes_.push_back(std::move(n));
        if (nodes_.size() > static_cast<size_t>(INT32_MAX))
            throw NumericError("tape overflow");
        return static_cast<Id>(nodes_.size() - 1);
    }

    Id binary_same(Op op, Id a, Id b) {
        if (is_real(a) != is_real(b)) throw InvalidArgument("binary op: mixed real/complex");
        if (is_real(a)) {
            const RTensor& ra = rval(a);
            const RTensor& rb = rval(b);
            if (!same_shape(ra, rb)) throw InvalidArgument("binary op: shape mismatch");
            RTensor out(ra.shape);
            for (size_t i = 0; i < out.data.size(); ++i)
                out.data[i] = op == Op::add   ? ra.data[i] + rb.data[i]
                              : op == Op::sub ? ra.data[i] - rb.data[i]
                                              : ra.data[i] * rb.data[i];
            return push(op, {a, b}, TensorV(std::move(out)));
        }
        const CTensor& ca = cval(a);
        const CTensor& cb = cval(b);
        if (!same_shape(ca, cb)) throw InvalidArgument("binary op: shape mismatch");
        CTensor out(ca.shape);
        for (size_t i = 0; i < out.data.size(); ++i)
            out.data[i] = op == Op::add   ? ca.data[i] + cb.data[i]
                          : op == Op::sub ? ca.data[i] - cb.data[i]
                                          : ca.data[i] * cb.data[i];
        return push(op, {a, b}, TensorV(std::move(out)));
    }

    void check_scalar(Id s, const char* what) const {
        if (!is_real(s) || rval(s).numel() != 1)
            throw InvalidArgument(std::string(what) + ": scale must be a real scalar");
    }

    void ensure_grad(Id id) {
        Node& n = node(id);
        if (n.has_grad) return;
        if (std::holds_alternative<RTensor>(n.value))
            n.grad = TensorV(RTensor(std::get<RTensor>(n.value).shape));
        else
            n.grad = TensorV(CTensor(std::get<CTensor>(n.value).shape));
        n.has_grad = true;
    }

    RTensor& rg(Id id) {
        ensure_grad(id);
        return std::get<RTensor>(node(id).grad);
    }
    CTensor& cg(Id id) {
        ensure_grad(id);
        return std::get<CTensor>(node(id).grad);
    }
    bool wants(Id id) const { return node(id).need; }

    static RTensor upbil_forward(const RTensor& x, int64_t scale) {
        const int64_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
        const int64_t OH = H * scale, OW = W * scale;
        RTensor out({C, OH, OW});
        for (int64_t oy = 0; oy < OH; ++oy) {
            auto [y0, y1, wy] = src_coord(oy, scale, H);
            for (int64_t ox = 0; ox < OW; ++ox) {
                auto [x0, x1, wx] = src_coord(ox, scale, W);
                for (int64_t c = 0; c < C; ++c)
                    out(c, oy, ox) = (1 - wy) * ((1 - wx) * x(c, y0, x0) + wx * x(c, y0, x1)) +
                                     wy * ((1 - wx) * x(c, y1, x0) + wx * x(c, y1, x1));
            }
        }
        return out;
    }

    // align-corners-false source coordinate with edge clamping
    static std::tuple<int64_t, int64_t, double> src_coord(int64_t dst, int64_t scale, int64_t n) {
        double f = (static_cast<double>(dst) + 0.5) / static_cast<double>(scale) - 0.5;
        if (f < 0) f = 0;
        if (f > static_cast<double>(n - 1)) f = static_cast<double>(n - 1);
        const int64_t i0 = static_cast<int64_t>(f);
        const int64_t i1 = std::min(i0 + 1, n - 1);
        return {i0, i1, f - static_cast<double>(i0)};
    }

    void propagate(Node& n) {
        switch (n.op) {
            case Op::leaf:
                break;
            case Op::add: {
                if (std::holds_alternative<RTensor>(n.grad)) {
                    const RTensor& g = std::get<RTensor>(n.grad);
                    for (Id in : n.inputs)
                        if (wants(in)) axpy(rg(in), g, 1.0);
                } else {
                    const CTensor& g = std::get<CTensor>(n.grad);
                    for (Id in : n.inputs)
                        if (wants(in)) axpy(cg(in), g, 1.0);
                }
                break;
            }
            case Op::sub: {
                if (std::holds_alternative<RTensor>(n.grad)) {
                    const RTensor& g = std::get<RTensor>(n.grad);
                    if (wants(n.inputs[0])) axpy(rg(n.inputs[0]), g, 1.0);
                    if (wants(n.inputs[1])) axpy(rg(n.inputs[1]), g, -1.0);
                } else {
                    const CTensor& g = std::get<CTensor>(n.grad);
                    if (wants(n.inputs[0])) axpy(cg(n.inputs[0]), g, 1.0);
                    if (wants(n.inputs[1])) axpy(cg(n.inputs[1]), g, -1.0);
                }
                break;
            }
            case Op::neg: {
                if (std::holds_alternative<RTensor>(n.grad)) {
                    if (wants(n.inputs[0])) axpy(rg(n.inputs[0]), std::get<RTensor>(n.grad), -1.0);
                } else {
                    if (wants(n.inputs[0])) axpy(cg(n.inputs[0]), std::get<CTensor>(n.grad), -1.0);
                }
                break;
            }
            case Op::mul: {
                const Id a = n.inputs[0], b = n.inputs[1];
                if (std::holds_alternative<RTensor>(n.grad)) {
                    const RTensor& g = std::get<RTensor>(n.grad);
                    if (wants(a)) {
                        RTensor& ga = rg(a);
                        const RTensor& vb = rval(b);
                        for (size_t i = 0; i < g.data.size(); ++i)
                            ga.data[i] += g.data[i] * vb.data[i];
                    }
                    if (wants(b)) {
                        RTensor& gb = rg(b);
                        const RTensor& va = rval(a);
                        for (size_t i = 0; i < g.data.size(); ++i)
                            gb.data[i] += g.data[i] * va.data[i];
                    }
                } else {
                    const CTensor& g = std::get<CTensor>(n.grad);
                    if (wants(a)) {
                        CTensor& ga = cg(a);
                        const CTensor& vb = cval(b);
                        for (size_t i = 0; i < g.data.size(); ++i)
                            ga.data[i] += g.data[i] * std::conj(vb.data[i]);
                    }
                    if (wants(b)) {
                        CTensor& gb = cg(b);
                        const CTensor& va = cval(a);
                        for (size_t i = 0; i < g.data.size(); ++i)
                            gb.data[i] += g.data[i] * std::conj(va.data[i]);
                    }
                }
                break;
            }
            case Op::mul_b0: {
                const Id a = n.inputs[0], b = n.inputs[1];
                const CTensor& g = std::get<CTensor>(n.grad);
                const CTensor& va = cval(a);
                const CTensor& vb = cval(b);
                const int64_t C = va.dim(0), HW = vb.numel();
                if (wants(a)) {
                    CTensor& ga = cg(a);
                    for (int64_t c = 0; c < C; ++c)
                        for (int64_t i = 0; i < HW; ++i)
                            ga.data[static_cast<size_t>(c * HW + i)] +=
                                g.data[static_cast<size_t>(c * HW + i)] *
                                std::conj(vb.data[static_cast<size_t>(i)]);
                }
                if (wants(b)) {
                    CTensor& gb = cg(b);
                    for (int64_t c = 0; c < C; ++c)
                        for (int64_t i = 0; i < HW; ++i)
                            gb.data[static_cast<size_t>(i)] +=
                                g.data[static_cast<size_t>(c * HW + i)] *
                                std::conj(va.data[static_cast<size_t>(c * HW + i)]);
                }
                break;
            }
            case Op::smul: {
                const Id x = n.inputs[0], s = n.inputs[1];
                const RTensor& g = std::get<RTensor>(n.grad);
                const double sv = rval(s).data[0];
                if (wants(x)) axpy(rg(x), g, sv);
                if (wants(s)) {
                    const RTensor& vx = rval(x);
                    double acc = 0;
                    for (size_t i = 0; i < g.data.size(); ++i) acc += g.data[i] * vx.data[i];
                    rg(s).data[0] += acc;
                }
                break;
            }
            case Op::cscale: {
                const Id x = n.inputs[0], s = n.inputs[1];
                const CTensor& g = std::get<CTensor>(n.grad);
                const double sv = rval(s).data[0];
                if (wants(x)) axpy(cg(x), g, sv);
                if (wants(s)) {
                    const CTensor& vx = cval(x);
                    double acc = 0;
                    for (size_t i = 0; i < g.data.size(); ++i)
                        acc += (std::conj(g.data[i]) * vx.data[i]).real();
                    rg(s).data[0] += acc;
                }
                break;
            }
            case Op::scale_const: {
                if (!wants(n.inputs[0])) break;
                if (std::holds_alternative<RTensor>(n.grad))
                    axpy(rg(n.inputs[0]), std::get<RTensor>(n.grad), n.a0);
                else
                    axpy(cg(n.inputs[0]), std::get<CTensor>(n.grad), n.a0);
                break;
            }
            case Op::add_const: {
                if (wants(n.inputs[0])) axpy(rg(n.inputs[0]), std::get<RTensor>(n.grad), 1.0);
                break;
            }
            case Op::conj_: {
                if (!wants(n.inputs[0])) break;
                CTensor& ga = cg(n.inputs[0]);
                const CTensor& g = std::get<CTensor>(n.grad);
                for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += std::conj(g.data[i]);
                break;
            }
            case Op::r2c: {
                if (!wants(n.inputs[0])) break;
                RTensor& ga = rg(n.inputs[0]);
                const CTensor& g = std::get<CTensor>(n.grad);
                for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i].real();
                break;
            }
            case Op::c2ch: {
                if (!wants(n.inputs[0])) break;
                CTensor& ga = cg(n.inputs[0]);
                const RTensor& g = std::get<RTensor>(n.grad);
                const int64_t C = ga.dim(0), HW = ga.dim(1) * ga.dim(2);
                for (int64_t c = 0; c < C; ++c)
                    for (int64_t i = 0; i < HW; ++i)
                        ga.data[static_cast<size_t>(c * HW + i)] +=
                            cd(g.data[static_cast<size_t>(c * HW + i)],
                               g.data[static_cast<size_t>((C + c) * HW + i)]);
                break;
            }
            case Op::ch2c: {
                if (!wants(n.inputs[0])) break;
                RTensor& ga = rg(n.inputs[0]);
                const CTensor& g = std::get<CTensor>(n.grad);
                const int64_t C = g.dim(0), HW = g.dim(1) * g.dim(2);
                for (int64_t c = 0; c < C; ++c)
                    for (int64_t i = 0; i < HW; ++i) {
                        ga.data[static_cast<size_t>(c * HW + i)] +=
                            g.data[static_cast<size_t>(c * HW + i)].real();
                        ga.data[static_cast<size_t>((C + c) * HW + i)] +=
                            g.data[static_cast<size_t>(c * HW + i)].imag();
                    }
                break;
            }
            case Op::sq0:
            case Op::unsq0: {
                if (!wants(n.inputs[0])) break;
                if (std::holds_alternative<RTensor>(n.grad)) {
                    RTensor& ga = rg(n.inputs[0]);
                    const RTensor& g = std::get<RTensor>(n.grad);
                    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
                } else {
                    CTensor& ga = cg(n.inputs[0]);
                    const CTensor& g = std::get<CTensor>(n.grad);
                    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
                }
                break;
            }
            case Op::fft2: {
                if (!wants(n.inputs[0])) break;
                axpy(cg(n.inputs[0]), varno::ifft2c(std::get<CTensor>(n.grad)), 1.0);
                break;
            }
            case Op::ifft2: {
                if (!wants(n.inputs[0])) break;
                axpy(cg(n.inputs[0]), varno::fft2c(std::get<CTensor>(n.grad)), 1.0);
                break;
            }
            case Op::rmul_const: {
                if (!wants(n.inputs[0])) break;
                const int64_t HW = n.raux.numel();
                if (std::holds_alternative<RTensor>(n.grad)) {
                    RTensor& ga = rg(n.inputs[0]);
                    const RTensor& g = std::get<RTensor>(n.grad);
                    const int64_t B = g.numel() / HW;
                    for (int64_t b = 0; b < B; ++b)
                        for (int64_t i = 0; i < HW; ++i)
                            ga.data[static_cast<size_t>(b * HW + i)] +=
                                g.data[static_cast<size_t>(b * HW + i)] *
                                n.raux.data[static_cast<size_t>(i)];
                } else {
                    CTensor& ga = cg(n.inputs[0]);
                    const CTensor& g = std::get<CTensor>(n.grad);
                    const int64_t B = g.numel() / HW;
                    for (int64_t b = 0; b < B; ++b)
                        for (int64_t i = 0; i < HW; ++i)
                            ga.data[static_cast<size_t>(b * HW + i)] +=
                                g.data[static_cast<size_t>(b * HW + i)] *
                                n.raux.data[static_cast<size_t>(i)];
                }
                break;
            }
            case Op::abs2: {
                if (!wants(n.inputs[0])) break;
                CTensor& ga = cg(n.inputs[0]);
                const RTensor& g = std::get<RTensor>(n.grad);
                const CTensor& z = cval(n.inputs[0]);
                for (size_t i = 0; i < g.data.size(); ++i)
                    ga.data[i] += 2.0 * g.data[i] * z.data[i];
                break;
            }
            case Op::sqrtr: {
                if (!wants(n.inputs[0])) break;
                RTensor& ga = rg(n.inputs[0]);
                const RTensor& g = std::get<RTensor>(n.grad);
                const RTensor& out = std::get<RTensor>(n.value);
                for (size_t i = 0; i < g.data.size(); ++i)
                    ga.data[i] += g.data[i] * 0.5 / out.data[i];
                break;
            }
            case Op::divr: {
                const Id a = n.inputs[0], b = n.inputs[1];
                const RTensor& g = std::get<RTensor>(n.grad);
                const RTensor& va = rval(a);
                const RTensor& vb = rval(b);
                if (wants(a)) {
                    RTensor& ga = rg(a);
                    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] / vb.data[i];
                }
                if (wants(b)) {
                    RTensor& gb = rg(b);
                    for (size_t i = 0; i < g.data.size(); ++i)
                        gb.data[i] -= g.data[i] * va.data[i] / (vb.data[i] * vb.data[i]);
                }
                break;
            }
            case Op::bdiv: {
                const Id a = n.inputs[0], b = n.inputs[1];
                const CTensor& g = std::get<CTensor>(n.grad);
                const CTensor& va = cval(a);
                const RTensor& vb = rval(b);
                const int64_t C = va.dim(0), HW = vb.numel();
                if (wants(a)) {
                    CTensor& ga = cg(a);
                    for (int64_t c = 0; c < C; ++c)
                        for (int64_t i = 0; i < HW; ++i)
                            ga.data[static_cast<size_t>(c * HW + i)] +=
                                g.data[static_cast<size_t>(c * HW + i)] /
                                vb.data[static_cast<size_t>(i)];
                }
                if (wants(b)) {
                    RTensor& gb = rg(b);
                    for (int64_t c = 0; c < C; ++c)
                        for (int64_t i = 0; i < HW; ++i) {
                            const double d = vb.data[static_cast<size_t>(i)];
                            gb.data[static_cast<size_t>(i)] -=
                                (std::conj(g.data[static_cast<size_t>(c * HW + i)]) *
                                 va.data[static_cast<size_t>(c * HW + i)])
                                    .real() /
                                (d * d);
                        }
                }
                break;
            }
            case Op::sum0: {
                if (!wants(n.inputs[0])) break;
                if (std::holds_alternative<RTensor>(n.grad)) {
                    RTensor& ga = rg(n.inputs[0]);
                    const RTensor& g = std::get<RTensor>(n.grad);
                    const int64_t C = ga.dim(0), HW = g.numel();
                    for (int64_t c = 0; c < C; ++c)
                        for (int64_t i = 0; i < HW; ++i)
                            ga.data[static_cast<size_t>(c * HW + i)] +=
                                g.data[static_cast<size_t>(i)];
                } else {
                    CTensor& ga = cg(n.inputs[0]);
                    const CTensor& g = std::get<CTensor>(n.grad);
                    const int64_t C = ga.dim(0), HW = g.numel();
                    for (int64_t c = 0; c < C; ++c)
                        for (int64_t i = 0; i < HW; ++i)
                            ga.data[static_cast<size_t>(c * HW + i)] +=
                                g.data[static_cast<size_t>(i)];
                }
                break;
            }
            case Op::sum_all:
            case Op::mean_all: {
                if (!wants(n.inputs[0])) break;
                RTensor& ga = rg(n.inputs[0]);
                const double g0 = std::get<RTensor>(n.grad).data[0];
                const double w =
                    n.op == Op::mean_all ? g0 / static_cast<double>(ga.numel()) : g0;
                for (auto& v : ga.data) v += w;
                break;
            }
            case Op::leaky: {
                if (!wants(n.inputs[0])) break;
                RTensor& ga = rg(n.inputs[0]);
                const RTensor& g = std::get<RTensor>(n.grad);
                const RTensor& vx = rval(n.inputs[0]);
                for (size_t i = 0; i < g.data.size(); ++i)
                    ga.data[i] += g.data[i] * (vx.data[i] >= 0 ? 1.0 : n.a0);
                break;
            }
            case Op::inorm: {
                if (!wants(n.inputs[0])) break;
                RTensor& ga = rg(n.inputs[0]);
                const RTensor& g = std::get<RTensor>(n.grad);
                const RTensor& y = std::get<RTensor>(n.value);
                const int64_t C = y.dim(0), HW = y.dim(1) * y.dim(2);
                for (int64_t c = 0; c < C; ++c) {
                    const double* gc = g.ptr() + c * HW;
                    const double* yc = y.ptr() + c * HW;
                    double m1 = 0, m2 = 0;
                    for (int64_t i = 0; i < HW; ++i) {
                        m1 += gc[i];
                        m2 += gc[i] * yc[i];
                    }
                    m1 /= static_cast<double>(HW);
                    m2 /= static_cast<double>(HW);
                    const double inv_s = 1.0 / n.raux.data[static_cast<size_t>(c)];
                    double* dst = ga.ptr() + c * HW;
                    for (int64_t i = 0; i < HW; ++i)
                        dst[i] += (gc[i] - m1 - yc[i] * m2) * inv_s;
                }
                break;
            }
            case Op::pool2: {
                if (!wants(n.inputs[0])) break;
                RTensor& ga = rg(n.inputs[0]);
                const RTensor& g = std::get<RTensor>(n.grad);
                const int64_t C = g.dim(0), OH = g.dim(1), OW = g.dim(2);
                for (int64_t c = 0; c < C; ++c)
                    for (int64_t y = 0; y < OH; ++y)
                        for (int64_t x = 0; x < OW; ++x) {
                            const double v = 0.25 * g(c, y, x);
                            ga(c, 2 * y, 2 * x) += v;
                            ga(c, 2 * y, 2 * x + 1) += v;
                            ga(c, 2 * y + 1, 2 * x) += v;
                            ga(c, 2 * y + 1, 2 * x + 1) += v;
                        }
                break;
            }
            case Op::upbil: {
                if (!wants(n.inputs[0])) break;
                RTensor& ga = rg(n.inputs[0]);
                const RTensor& g = std::get<RTensor>(n.grad);
                const int64_t C = ga.dim(0), H = ga.dim(1), W = ga.dim(2);
                const int64_t OH = g.dim(1), OW = g.dim(2), s = n.i0;
                for (int64_t oy = 0; oy < OH; ++oy) {
                    auto [y0, y1, wy] = src_coord(oy, s, H);
                    for (int64_t ox = 0; ox < OW; ++ox) {
                        auto [x0, x1, wx] = src_coord(ox, s, W);
                        for (int64_t c = 0; c < C; ++c) {
                            const double gv = g(c, oy, ox);
                            ga(c, y0, x0) += (1 - wy) * (1 - wx) * gv;
                            ga(c, y0, x1) += (1 - wy) * wx * gv;
                            ga(c, y1, x0) += wy * (1 - wx) * gv;
                            ga(c, y1, x1) += wy * wx * gv;
                        }
                    }
                }
                break;
            }
            case Op::cat0: {
                const Id a = n.inputs[0], b = n.inputs[1];
                if (std::holds_alternative<RTensor>(n.grad)) {
                    const RTensor& g = std::get<RTensor>(n.grad);
                    const int64_t na = rval(a).numel();
                    if (wants(a)) axpy_range(rg(a), g, 0);
                    if (wants(b)) axpy_range(rg(b), g, na);
                } else {
                    const CTensor& g = std::get<CTensor>(n.grad);
                    const int64_t na = cval(a).numel();
                    if (wants(a)) axpy_range(cg(a), g, 0);
                    if (wants(b)) axpy_range(cg(b), g, na);
                }
                break;
            }
            case Op::slice0: {
                if (!wants(n.inputs[0])) break;
                if (std::holds_alternative<RTensor>(n.grad)) {
                    RTensor& ga = rg(n.inputs[0]);
                    const RTensor& g = std::get<RTensor>(n.grad);
                    const int64_t HW = g.numel();
                    for (int64_t i = 0; i < HW; ++i)
                        ga.data[static_cast<size_t>(n.i0 * HW + i)] += g.data[static_cast<size_t>(i)];
                } else {
                    CTensor& ga = cg(n.inputs[0]);
                    const CTensor& g = std::get<CTensor>(n.grad);
                    const int64_t HW = g.numel();
                    for (int64_t i = 0; i < HW; ++i)
                        ga.data[static_cast<size_t>(n.i0 * HW + i)] += g.data[static_cast<size_t>(i)];
                }
                break;
            }
            case Op::box7: {
                if (!wants(n.inputs[0])) break;
                RTensor& ga = rg(n.inputs[0]);
                const RTensor& g = std::get<RTensor>(n.grad);
                const int64_t OH = g.dim(0), OW = g.dim(1);
                for (int64_t y = 0; y < OH; ++y)
                    for (int64_t x = 0; x < OW; ++x) {
                        const double v = g(y, x) / 49.0;
                        for (int64_t dy = 0; dy < 7; ++dy)
                            for (int64_t dx = 0; dx < 7; ++dx) ga(y + dy, x + dx) += v;
                    }
                break;
            }
            case Op::conv2: {
                const Id taps = n.inputs[0], x = n.inputs[1];
                const RTensor& g = std::get<RTensor>(n.grad);
                const RTensor& vt = rval(taps);
                const RTensor& vx = rval(x);
                const int64_t O = vt.dim(0), I = vt.dim(1), S = vt.dim(2), c = S / 2;
                const int64_t H = vx.dim(1), W = vx.dim(2);
                for (int64_t o = 0; o < O; ++o) {
                    const double* gp = g.ptr() + o * H * W;
                    for (int64_t i = 0; i < I; ++i) {
                        const double* wp = vt.ptr() + (o * I + i) * S * S;
                        const double* ip = vx.ptr() + i * H * W;
                        double* gxp = wants(x) ? rg(x).ptr() + i * H * W : nullptr;
                        double* gwp = wants(taps) ? rg(taps).ptr() + (o * I + i) * S * S : nullptr;
                        for (int64_t dy = -c; dy <= c; ++dy)
                            for (int64_t dx = -c; dx <= c; ++dx) {
                                const int64_t t = (dy + c) * S + (dx + c);
                                const double w = wp[t];
                                const int64_t y0 = std::max<int64_t>(0, -dy);
                                const int64_t y1 = std::min(H, H - dy);
                                const int64_t x0 = std::max<int64_t>(0, -dx);
                                const int64_t x1 = std::min(W, W - dx);
                                double acc = 0;
                                for (int64_t y = y0; y < y1; ++y) {
                                    const double* grow = gp + y * W;
                                    const double* irow = ip + (y + dy) * W + dx;
                                    double* gxrow = gxp ? gxp + (y + dy) * W + dx : nullptr;
                                    for (int64_t xx = x0; xx < x1; ++xx) {
                                        if (gxp) gxrow[xx] += w * grow[xx];
                                        acc += grow[xx] * irow[xx];
                                    }
                                }
                                if (gwp) gwp[t] += acc;
                            }
                    }
                }
                break;
            }
            case Op::synth: {
                if (!wants(n.inputs[0])) break;
                RTensor& gt = rg(n.inputs[0]);
                const RTensor& g = std::get<RTensor>(n.grad);
                const int64_t L = n.raux.dim(1), S = n.i0;
                const int64_t OI = gt.numel() / L;
                for (int64_t oi = 0; oi < OI; ++oi) {
                    const double* gw = g.ptr() + oi * S * S;
                    double* gth = gt.ptr() + oi * L;
                    for (int64_t t = 0; t < S * S; ++t) {
                        const double* row = n.raux.ptr() + t * L;
                        const double gv = gw[t];
                        if (gv == 0.0) continue;
                        for (int64_t l = 0; l < L; ++l) gth[l] += gv * row[l];
                    }
                }
                break;
            }
        }
    }

    template <class T>
    static void axpy(Tensor<T>& y, const Tensor<T>& x, double a) {
        for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += a * x.data[i];
    }

    template <class T>
    static void axpy_range(Tensor<T>& y, const Tensor<T>& x, int64_t offset) {
        for (size_t i = 0; i < y.data.size(); ++i)
            y.data[i] += x.data[i + static_cast<size_t>(offset)];
    }
};

// ---- structural-similarity loss, assembled on the tape ----------------------
//
// Uniform 7x7 window over the valid region, constants C1 = (0.01 dr)^2 and
// C2 = (0.03 dr)^2.  Returns -mean(ssim map): minimizing it maximizes mean
// structural similarity.  x and y are real (H,W) nodes.
inline Tape::Id ssim_loss(Tape& t, Tape::Id x, Tape::Id y, double data_range) {
    if (!(data_range > 0)) throw InvalidArgument("ssim_loss: data range must be positive");
    const double c1 = (0.01 * data_range) * (0.01 * data_range);
    const double c2 = (0.03 * data_range) * (0.03 * data_range);
    Tape::Id mx = t.box7(x), my = t.box7(y);
    Tape::Id mxx = t.mul(mx, mx), myy = t.mul(my, my), mxy = t.mul(mx, my);
    Tape::Id vx = t.sub(t.box7(t.mul(x, x)), mxx);
    Tape::Id vy = t.sub(t.box7(t.mul(y, y)), myy);
    Tape::Id cov = t.sub(t.box7(t.mul(x, y)), mxy);
    Tape::Id num = t.mul(t.add_const(t.scale_const(mxy, 2.0), c1),
                         t.add_const(t.scale_const(cov, 2.0), c2));
    Tape::Id den = t.mul(t.add_const(t.add(mxx, myy), c1), t.add_const(t.add(vx, vy), c2));
    return t.neg(t.mean_all(t.divr(num, den)));
}

// ---- finite-difference gradient checking ------------------------------------

// Max relative elementwise discrepancy with an absolute floor in the
// denominator; exposed so tests can drive it with deliberately wrong inputs.
inline double gradient_max_rel_err(const RTensor& analytic, const RTensor& numeric,
                                   double floor_ = 1e-4) {
    if (!same_shape(analytic, numeric)) throw InvalidArgument("gradient compare: shape mismatch");
    double worst = 0;
    for (size_t i = 0; i < analytic.data.size(); ++i) {
        const double a = analytic.data[i], n = numeric.data[i];
        const double denom = std::max({std::abs(a), std::abs(n), floor_});
        worst = std::max(worst, std::abs(a - n) / denom);
    }
    return worst;
}

struct GradcheckLeaf {
    std::string name;
    RTensor value;
};

struct GradcheckLeafReport {
    std::string name;
    double max_rel_err = 0;
};

struct GradcheckReport {
    std::vector<GradcheckLeafReport> leaves;
    double worst = 0;
    bool pass = false;
};

// Builds the graph twice per probed element (central differences, default
// step 1e-6) and compares against the tape gradient.  The builder receives
// the leaf ids in the order the leaves were supplied.
inline GradcheckReport gradcheck(
    const std::function<Tape::Id(Tape&, const std::vector<Tape::Id>&)>& build,
    std::vector<GradcheckLeaf> leaves, double step = 1e-6, double tol = 1e-4) {
    std::vector<RTensor> analytic;
    {
        Tape t;
        std::vector<Tape::Id> ids;
        ids.reserve(leaves.size());
        for (auto& l : leaves) ids.push_back(t.leaf(l.value, true));
        const Tape::Id loss = build(t, ids);
        t.backward(loss);
        for (Tape::Id id : ids) analytic.push_back(t.rgrad(id));
    }
    auto eval = [&](const std::vector<GradcheckLeaf>& ls) {
        Tape t;
        std::vector<Tape::Id> ids;
        ids.reserve(ls.size());
        for (const auto& l : ls) ids.push_back(t.leaf(l.value, false));
        return t.rval(build(t, ids)).data[0];
    };

    GradcheckReport rep;
    for (size_t li = 0; li < leaves.size(); ++li) {
        RTensor numeric(leaves[li].value.shape);
        for (size_t e = 0; e < numeric.data.size(); ++e) {
            const double keep = leaves[li].value.data[e];
            leaves[li].value.data[e] = keep + step;
            const double fp = eval(leaves);
            leaves[li].value.data[e] = keep - step;
            const double fm = eval(leaves);
            leaves[li].value.data[e] = keep;
            numeric.data[e] = (fp - fm) / (2.0 * step);
        }
        GradcheckLeafReport lr;
        lr.name = leaves[li].name;
        lr.max_rel_err = gradient_max_rel_err(analytic[li], numeric);
        rep.worst = std::max(rep.worst, lr.max_rel_err);
        rep.leaves.push_back(std::move(lr));
    }
    rep.pass = rep.worst < tol;
    return rep;
}

}  // namespace varno
