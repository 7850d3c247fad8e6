#include "alanet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <utility>

#include "alanet/errors.hpp"

namespace alanet {

namespace {

std::int64_t numel(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<std::int64_t>& shape) {
    std::string s = "{";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "}";
}

void check_finite(const char* op, const Tensor& t) {
    for (double v : t.data) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(op) + " produced a non-finite value");
        }
    }
}

TensorPtr node(std::vector<std::int64_t> shape, std::vector<TensorPtr> ins) {
    auto t = std::make_shared<Tensor>();
    t->data.assign(static_cast<std::size_t>(numel(shape)), 0.0);
    t->shape = std::move(shape);
    for (const auto& in : ins) {
        if (in && in->requires_grad) {
            t->requires_grad = true;
            break;
        }
    }
    if (t->requires_grad) {
        for (auto& in : ins) {
            if (in) t->inputs.push_back(std::move(in));
        }
    }
    return t;
}

// Elementwise pairing: identical shapes, single-element broadcast, or a
// channel vector {1,C}/{C} against a {C,H,W} map.
enum class Side { full, single, channel };

struct PairPlan {
    std::vector<std::int64_t> shape;
    Side a = Side::full;
    Side b = Side::full;
    std::int64_t plane = 1;  // H*W of the map operand, for channel mode
};

bool is_channel_vector(const Tensor& v, std::int64_t channels) {
    if (v.shape.size() == 1 && v.shape[0] == channels) return true;
    return v.shape.size() == 2 && v.shape[0] == 1 && v.shape[1] == channels;
}

PairPlan pair_plan(const char* op, const Tensor& a, const Tensor& b) {
    PairPlan p;
    if (same_shape(a, b)) {
        p.shape = a.shape;
        return p;
    }
    if (b.size() == 1) {
        p.shape = a.shape;
        p.b = Side::single;
        return p;
    }
    if (a.size() == 1) {
        p.shape = b.shape;
        p.a = Side::single;
        return p;
    }
    if (b.shape.size() == 3 && is_channel_vector(a, b.shape[0])) {
        p.shape = b.shape;
        p.a = Side::channel;
        p.plane = b.shape[1] * b.shape[2];
        return p;
    }
    if (a.shape.size() == 3 && is_channel_vector(b, a.shape[0])) {
        p.shape = a.shape;
        p.b = Side::channel;
        p.plane = a.shape[1] * a.shape[2];
        return p;
    }
    throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a.shape) +
                         " and " + shape_str(b.shape));
}

inline std::size_t src_index(Side s, std::size_t i, std::int64_t plane) {
    switch (s) {
        case Side::full: return i;
        case Side::single: return 0;
        case Side::channel: return i / static_cast<std::size_t>(plane);
    }
    return i;
}

void require_2d(const char* op, const Tensor& t) {
    if (t.shape.size() != 2) {
        throw DimensionError(std::string(op) + ": expected a 2-D tensor, got " +
                             shape_str(t.shape));
    }
}

void require_3d(const char* op, const Tensor& t) {
    if (t.shape.size() != 3) {
        throw DimensionError(std::string(op) + ": expected a {C,H,W} tensor, got " +
                             shape_str(t.shape));
    }
}

} // namespace

std::int64_t Tensor::size() const { return static_cast<std::int64_t>(data.size()); }

std::int64_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                             shape_str(shape));
    }
    return shape[axis];
}

double Tensor::value() const {
    if (data.size() != 1) {
        throw DimensionError("value() needs a single-element tensor, got " + shape_str(shape));
    }
    return data[0];
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

void Tensor::backward() {
    if (size() != 1) {
        throw DimensionError("backward() starts from a single-element tensor, got " +
                             shape_str(shape));
    }
    ensure_grad();
    grad[0] = 1.0;

    // Post-order DFS; replaying it reversed visits every node before its inputs.
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> visited{this};
    std::vector<std::pair<Tensor*, std::size_t>> stack{{this, 0}};
    while (!stack.empty()) {
        Tensor* t = stack.back().first;
        std::size_t& i = stack.back().second;
        if (i < t->inputs.size()) {
            Tensor* next = t->inputs[i++].get();
            if (next->requires_grad && visited.insert(next).second) {
                stack.emplace_back(next, 0);
            }
        } else {
            order.push_back(t);
            stack.pop_back();
        }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward_fn) (*it)->backward_fn();
    }
}

TensorPtr tensor(std::vector<std::int64_t> shape, std::vector<double> values,
                 bool requires_grad) {
    for (auto d : shape) {
        if (d <= 0) throw DimensionError("non-positive dimension in " + shape_str(shape));
    }
    if (numel(shape) != static_cast<std::int64_t>(values.size())) {
        throw DimensionError("value count " + std::to_string(values.size()) +
                             " does not fill " + shape_str(shape));
    }
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data = std::move(values);
    t->requires_grad = requires_grad;
    check_finite("tensor", *t);
    return t;
}

TensorPtr zeros(std::vector<std::int64_t> shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

TensorPtr full(std::vector<std::int64_t> shape, double fill, bool requires_grad) {
    std::vector<double> v(static_cast<std::size_t>(numel(shape)), fill);
    return tensor(std::move(shape), std::move(v), requires_grad);
}

TensorPtr scalar(double v) { return tensor({1}, {v}); }

TensorPtr randn(std::vector<std::int64_t> shape, Rng& rng, double stddev, bool requires_grad) {
    std::vector<double> v(static_cast<std::size_t>(numel(shape)));
    for (auto& x : v) x = stddev * rng.normal();
    return tensor(std::move(shape), std::move(v), requires_grad);
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

bool all_finite(const Tensor& t) {
    for (double v : t.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

namespace {

template <typename Fwd, typename Bwd>
TensorPtr pairwise(const char* op, const TensorPtr& a, const TensorPtr& b, Fwd fwd, Bwd bwd) {
    PairPlan p = pair_plan(op, *a, *b);
    auto out = node(p.shape, {a, b});
    for (std::size_t i = 0; i < out->data.size(); ++i) {
        out->data[i] = fwd(a->data[src_index(p.a, i, p.plane)],
                           b->data[src_index(p.b, i, p.plane)]);
    }
    check_finite(op, *out);
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, a, b, p, bwd]() {
            if (a->requires_grad) a->ensure_grad();
            if (b->requires_grad) b->ensure_grad();
            for (std::size_t i = 0; i < self->data.size(); ++i) {
                std::size_t ia = src_index(p.a, i, p.plane);
                std::size_t ib = src_index(p.b, i, p.plane);
                auto [da, db] = bwd(a->data[ia], b->data[ib]);
                double g = self->grad[i];
                if (a->requires_grad) a->grad[ia] += da * g;
                if (b->requires_grad) b->grad[ib] += db * g;
            }
        };
    }
    return out;
}

template <typename Fwd, typename Grad>
TensorPtr unary(const char* op, const TensorPtr& a, Fwd fwd, Grad dfn) {
    auto out = node(a->shape, {a});
    for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = fwd(a->data[i]);
    check_finite(op, *out);
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, a, dfn]() {
            a->ensure_grad();
            for (std::size_t i = 0; i < self->data.size(); ++i) {
                a->grad[i] += dfn(a->data[i], self->data[i]) * self->grad[i];
            }
        };
    }
    return out;
}

} // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    return pairwise(
        "add", a, b, [](double x, double y) { return x + y; },
        [](double, double) { return std::pair<double, double>{1.0, 1.0}; });
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    return pairwise(
        "sub", a, b, [](double x, double y) { return x - y; },
        [](double, double) { return std::pair<double, double>{1.0, -1.0}; });
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    return pairwise(
        "mul", a, b, [](double x, double y) { return x * y; },
        [](double x, double y) { return std::pair<double, double>{y, x}; });
}

TensorPtr neg(const TensorPtr& a) {
    return unary(
        "neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

TensorPtr scale(const TensorPtr& a, double factor) {
    return unary(
        "scale", a, [factor](double x) { return factor * x; },
        [factor](double, double) { return factor; });
}

TensorPtr complement(const TensorPtr& a) {
    return unary(
        "complement", a, [](double x) { return 1.0 - x; },
        [](double, double) { return -1.0; });
}

TensorPtr abs_value(const TensorPtr& a) {
    return unary(
        "abs", a, [](double x) { return std::fabs(x); },
        [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

TensorPtr relu(const TensorPtr& a) {
    return unary(
        "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

TensorPtr sigmoid(const TensorPtr& a) {
    return unary(
        "sigmoid", a,
        [](double x) {
            // Split on sign so exp never overflows.
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    require_2d("matmul", *a);
    require_2d("matmul", *b);
    std::int64_t n = a->shape[0], k = a->shape[1], m = b->shape[1];
    if (b->shape[0] != k) {
        throw DimensionError("matmul: inner dimensions " + shape_str(a->shape) + " x " +
                             shape_str(b->shape));
    }
    auto out = node({n, m}, {a, b});
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::int64_t t = 0; t < k; ++t) acc += a->data[i * k + t] * b->data[t * m + j];
            out->data[i * m + j] = acc;
        }
    }
    check_finite("matmul", *out);
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, a, b, n, k, m]() {
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::int64_t i = 0; i < n; ++i)
                    for (std::int64_t t = 0; t < k; ++t) {
                        double acc = 0.0;
                        for (std::int64_t j = 0; j < m; ++j)
                            acc += self->grad[i * m + j] * b->data[t * m + j];
                        a->grad[i * k + t] += acc;
                    }
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::int64_t t = 0; t < k; ++t)
                    for (std::int64_t j = 0; j < m; ++j) {
                        double acc = 0.0;
                        for (std::int64_t i = 0; i < n; ++i)
                            acc += a->data[i * k + t] * self->grad[i * m + j];
                        b->grad[t * m + j] += acc;
                    }
            }
        };
    }
    return out;
}

TensorPtr transpose(const TensorPtr& a) {
    require_2d("transpose", *a);
    std::int64_t r = a->shape[0], c = a->shape[1];
    auto out = node({c, r}, {a});
    for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < c; ++j) out->data[j * r + i] = a->data[i * c + j];
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, a, r, c]() {
            a->ensure_grad();
            for (std::int64_t i = 0; i < r; ++i)
                for (std::int64_t j = 0; j < c; ++j) a->grad[i * c + j] += self->grad[j * r + i];
        };
    }
    return out;
}

TensorPtr concat_cols(const TensorPtr& a, const TensorPtr& b) {
    require_2d("concat_cols", *a);
    require_2d("concat_cols", *b);
    if (a->shape[0] != b->shape[0]) {
        throw DimensionError("concat_cols: row counts differ, " + shape_str(a->shape) +
                             " vs " + shape_str(b->shape));
    }
    std::int64_t r = a->shape[0], ca = a->shape[1], cb = b->shape[1];
    auto out = node({r, ca + cb}, {a, b});
    for (std::int64_t i = 0; i < r; ++i) {
        for (std::int64_t j = 0; j < ca; ++j) out->data[i * (ca + cb) + j] = a->data[i * ca + j];
        for (std::int64_t j = 0; j < cb; ++j)
            out->data[i * (ca + cb) + ca + j] = b->data[i * cb + j];
    }
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, a, b, r, ca, cb]() {
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::int64_t i = 0; i < r; ++i)
                    for (std::int64_t j = 0; j < ca; ++j)
                        a->grad[i * ca + j] += self->grad[i * (ca + cb) + j];
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::int64_t i = 0; i < r; ++i)
                    for (std::int64_t j = 0; j < cb; ++j)
                        b->grad[i * cb + j] += self->grad[i * (ca + cb) + ca + j];
            }
        };
    }
    return out;
}

TensorPtr softmax(const TensorPtr& a, int axis) {
    require_2d("softmax", *a);
    if (axis != 0 && axis != 1) throw DimensionError("softmax: axis must be 0 or 1");
    std::int64_t r = a->shape[0], c = a->shape[1];
    std::int64_t groups = axis == 1 ? r : c;
    std::int64_t span = axis == 1 ? c : r;
    auto at = [axis, c](std::int64_t g, std::int64_t s) {
        return axis == 1 ? g * c + s : s * c + g;
    };
    auto out = node(a->shape, {a});
    for (std::int64_t g = 0; g < groups; ++g) {
        double hi = a->data[at(g, 0)];
        for (std::int64_t s = 1; s < span; ++s) hi = std::max(hi, a->data[at(g, s)]);
        double z = 0.0;
        for (std::int64_t s = 0; s < span; ++s) {
            double e = std::exp(a->data[at(g, s)] - hi);
            out->data[at(g, s)] = e;
            z += e;
        }
        for (std::int64_t s = 0; s < span; ++s) out->data[at(g, s)] /= z;
    }
    check_finite("softmax", *out);
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, a, groups, span, at]() {
            a->ensure_grad();
            for (std::int64_t g = 0; g < groups; ++g) {
                double dot = 0.0;
                for (std::int64_t s = 0; s < span; ++s)
                    dot += self->grad[at(g, s)] * self->data[at(g, s)];
                for (std::int64_t s = 0; s < span; ++s) {
                    std::size_t i = at(g, s);
                    a->grad[i] += self->data[i] * (self->grad[i] - dot);
                }
            }
        };
    }
    return out;
}

TensorPtr linear(const TensorPtr& x, const TensorPtr& weight, const TensorPtr& bias) {
    require_2d("linear", *x);
    require_2d("linear", *weight);
    std::int64_t n = x->shape[0], din = x->shape[1], dout = weight->shape[1];
    if (weight->shape[0] != din) {
        throw DimensionError("linear: input width " + std::to_string(din) +
                             " vs weight " + shape_str(weight->shape));
    }
    if (bias && bias->size() != dout) {
        throw DimensionError("linear: bias length " + std::to_string(bias->size()) +
                             " vs output width " + std::to_string(dout));
    }
    auto out = node({n, dout}, {x, weight, bias});
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < dout; ++j) {
            double acc = bias ? bias->data[static_cast<std::size_t>(j)] : 0.0;
            for (std::int64_t t = 0; t < din; ++t)
                acc += x->data[i * din + t] * weight->data[t * dout + j];
            out->data[i * dout + j] = acc;
        }
    }
    check_finite("linear", *out);
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, x, weight, bias, n, din, dout]() {
            if (x->requires_grad) {
                x->ensure_grad();
                for (std::int64_t i = 0; i < n; ++i)
                    for (std::int64_t t = 0; t < din; ++t) {
                        double acc = 0.0;
                        for (std::int64_t j = 0; j < dout; ++j)
                            acc += self->grad[i * dout + j] * weight->data[t * dout + j];
                        x->grad[i * din + t] += acc;
                    }
            }
            if (weight->requires_grad) {
                weight->ensure_grad();
                for (std::int64_t t = 0; t < din; ++t)
                    for (std::int64_t j = 0; j < dout; ++j) {
                        double acc = 0.0;
                        for (std::int64_t i = 0; i < n; ++i)
                            acc += x->data[i * din + t] * self->grad[i * dout + j];
                        weight->grad[t * dout + j] += acc;
                    }
            }
            if (bias && bias->requires_grad) {
                bias->ensure_grad();
                for (std::int64_t j = 0; j < dout; ++j) {
                    double acc = 0.0;
                    for (std::int64_t i = 0; i < n; ++i) acc += self->grad[i * dout + j];
                    bias->grad[static_cast<std::size_t>(j)] += acc;
                }
            }
        };
    }
    return out;
}

TensorPtr reshape(const TensorPtr& a, std::vector<std::int64_t> shape) {
    if (numel(shape) != a->size()) {
        throw DimensionError("reshape: " + shape_str(a->shape) + " to " + shape_str(shape) +
                             " changes the element count");
    }
    auto out = node(std::move(shape), {a});
    out->data = a->data;
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, a]() {
            a->ensure_grad();
            for (std::size_t i = 0; i < self->data.size(); ++i) a->grad[i] += self->grad[i];
        };
    }
    return out;
}

TensorPtr conv2d(const TensorPtr& x, const TensorPtr& kernel, const TensorPtr& bias,
                 std::int64_t stride) {
    require_3d("conv2d", *x);
    if (kernel->shape.size() != 4) {
        throw DimensionError("conv2d: kernel must be {Cout,Cin,k,k}, got " +
                             shape_str(kernel->shape));
    }
    std::int64_t ci = x->shape[0], h = x->shape[1], w = x->shape[2];
    std::int64_t co = kernel->shape[0], kc = kernel->shape[1];
    std::int64_t kh = kernel->shape[2], kw = kernel->shape[3];
    if (kh != kw) throw KernelError("conv2d: kernel must be square, got " + shape_str(kernel->shape));
    if (kh % 2 == 0) throw KernelError("conv2d: kernel size " + std::to_string(kh) + " is even");
    if (kc != ci) {
        throw DimensionError("conv2d: kernel expects " + std::to_string(kc) +
                             " input channels, tensor has " + std::to_string(ci));
    }
    if (stride < 1) throw ConfigError("conv2d: stride must be positive");
    if (bias && bias->size() != co) {
        throw DimensionError("conv2d: bias length " + std::to_string(bias->size()) +
                             " vs " + std::to_string(co) + " output channels");
    }
    std::int64_t pad = kh / 2;
    std::int64_t ho = (h + 2 * pad - kh) / stride + 1;
    std::int64_t wo = (w + 2 * pad - kw) / stride + 1;

    auto out = node({co, ho, wo}, {x, kernel, bias});
    for (std::int64_t oc = 0; oc < co; ++oc) {
        double b = bias ? bias->data[static_cast<std::size_t>(oc)] : 0.0;
        for (std::int64_t oy = 0; oy < ho; ++oy) {
            for (std::int64_t ox = 0; ox < wo; ++ox) {
                double acc = b;
                for (std::int64_t ic = 0; ic < ci; ++ic) {
                    for (std::int64_t ky = 0; ky < kh; ++ky) {
                        std::int64_t iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= h) continue;
                        for (std::int64_t kx = 0; kx < kw; ++kx) {
                            std::int64_t ix = ox * stride - pad + kx;
                            if (ix < 0 || ix >= w) continue;
                            acc += x->data[(ic * h + iy) * w + ix] *
                                   kernel->data[((oc * ci + ic) * kh + ky) * kw + kx];
                        }
                    }
                }
                out->data[(oc * ho + oy) * wo + ox] = acc;
            }
        }
    }
    check_finite("conv2d", *out);
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, x, kernel, bias, ci, h, w, co, kh, kw, pad, stride, ho, wo]() {
            bool gx = x->requires_grad, gk = kernel->requires_grad;
            bool gb = bias && bias->requires_grad;
            if (gx) x->ensure_grad();
            if (gk) kernel->ensure_grad();
            if (gb) bias->ensure_grad();
            for (std::int64_t oc = 0; oc < co; ++oc) {
                for (std::int64_t oy = 0; oy < ho; ++oy) {
                    for (std::int64_t ox = 0; ox < wo; ++ox) {
                        double g = self->grad[(oc * ho + oy) * wo + ox];
                        if (g == 0.0) continue;
                        if (gb) bias->grad[static_cast<std::size_t>(oc)] += g;
                        for (std::int64_t ic = 0; ic < ci; ++ic) {
                            for (std::int64_t ky = 0; ky < kh; ++ky) {
                                std::int64_t iy = oy * stride - pad + ky;
                                if (iy < 0 || iy >= h) continue;
                                for (std::int64_t kx = 0; kx < kw; ++kx) {
                                    std::int64_t ix = ox * stride - pad + kx;
                                    if (ix < 0 || ix >= w) continue;
                                    std::size_t xi = (ic * h + iy) * w + ix;
                                    std::size_t kidx = ((oc * ci + ic) * kh + ky) * kw + kx;
                                    if (gx) x->grad[xi] += kernel->data[kidx] * g;
                                    if (gk) kernel->grad[kidx] += x->data[xi] * g;
                                }
                            }
                        }
                    }
                }
            }
        };
    }
    return out;
}

TensorPtr pool_spatial_avg(const TensorPtr& x) {
    require_3d("pool_spatial_avg", *x);
    std::int64_t c = x->shape[0], plane = x->shape[1] * x->shape[2];
    auto out = node({1, c}, {x});
    for (std::int64_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::int64_t p = 0; p < plane; ++p) acc += x->data[ch * plane + p];
        out->data[static_cast<std::size_t>(ch)] = acc / static_cast<double>(plane);
    }
    check_finite("pool_spatial_avg", *out);
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, x, c, plane]() {
            x->ensure_grad();
            for (std::int64_t ch = 0; ch < c; ++ch) {
                double g = self->grad[static_cast<std::size_t>(ch)] / static_cast<double>(plane);
                for (std::int64_t p = 0; p < plane; ++p) x->grad[ch * plane + p] += g;
            }
        };
    }
    return out;
}

TensorPtr pool_spatial_max(const TensorPtr& x) {
    require_3d("pool_spatial_max", *x);
    std::int64_t c = x->shape[0], plane = x->shape[1] * x->shape[2];
    auto out = node({1, c}, {x});
    // Ties route the gradient to the first maximum in scan order.
    auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(c));
    for (std::int64_t ch = 0; ch < c; ++ch) {
        std::int64_t best = ch * plane;
        for (std::int64_t p = 1; p < plane; ++p) {
            if (x->data[ch * plane + p] > x->data[best]) best = ch * plane + p;
        }
        (*argmax)[static_cast<std::size_t>(ch)] = best;
        out->data[static_cast<std::size_t>(ch)] = x->data[best];
    }
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, x, c, argmax]() {
            x->ensure_grad();
            for (std::int64_t ch = 0; ch < c; ++ch) {
                x->grad[(*argmax)[static_cast<std::size_t>(ch)]] +=
                    self->grad[static_cast<std::size_t>(ch)];
            }
        };
    }
    return out;
}

TensorPtr pool_channel_avg(const TensorPtr& x) {
    require_3d("pool_channel_avg", *x);
    std::int64_t c = x->shape[0], plane = x->shape[1] * x->shape[2];
    auto out = node({plane, 1}, {x});
    for (std::int64_t p = 0; p < plane; ++p) {
        double acc = 0.0;
        for (std::int64_t ch = 0; ch < c; ++ch) acc += x->data[ch * plane + p];
        out->data[static_cast<std::size_t>(p)] = acc / static_cast<double>(c);
    }
    check_finite("pool_channel_avg", *out);
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, x, c, plane]() {
            x->ensure_grad();
            for (std::int64_t p = 0; p < plane; ++p) {
                double g = self->grad[static_cast<std::size_t>(p)] / static_cast<double>(c);
                for (std::int64_t ch = 0; ch < c; ++ch) x->grad[ch * plane + p] += g;
            }
        };
    }
    return out;
}

TensorPtr slice_channels(const TensorPtr& x, std::int64_t begin, std::int64_t end) {
    require_3d("slice_channels", *x);
    std::int64_t c = x->shape[0], plane = x->shape[1] * x->shape[2];
    if (begin < 0 || end > c || begin >= end) {
        throw DimensionError("slice_channels: range [" + std::to_string(begin) + "," +
                             std::to_string(end) + ") out of " + std::to_string(c));
    }
    std::int64_t n = end - begin;
    auto out = node({n, x->shape[1], x->shape[2]}, {x});
    std::copy(x->data.begin() + begin * plane, x->data.begin() + end * plane, out->data.begin());
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, x, begin, plane, n]() {
            x->ensure_grad();
            for (std::int64_t i = 0; i < n * plane; ++i)
                x->grad[begin * plane + i] += self->grad[static_cast<std::size_t>(i)];
        };
    }
    return out;
}

TensorPtr concat_channels(const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw DimensionError("concat_channels: nothing to concatenate");
    std::int64_t h = parts[0]->dim(1), w = parts[0]->dim(2), c = 0;
    for (const auto& p : parts) {
        require_3d("concat_channels", *p);
        if (p->shape[1] != h || p->shape[2] != w) {
            throw DimensionError("concat_channels: spatial sizes differ");
        }
        c += p->shape[0];
    }
    auto out = node({c, h, w}, parts);
    std::int64_t plane = h * w, offset = 0;
    for (const auto& p : parts) {
        std::copy(p->data.begin(), p->data.end(), out->data.begin() + offset);
        offset += p->size();
    }
    if (out->requires_grad) {
        Tensor* self = out.get();
        auto held = parts;
        out->backward_fn = [self, held, plane]() {
            (void)plane;
            std::int64_t offset = 0;
            for (const auto& p : held) {
                if (p->requires_grad) {
                    p->ensure_grad();
                    for (std::int64_t i = 0; i < p->size(); ++i)
                        p->grad[static_cast<std::size_t>(i)] +=
                            self->grad[static_cast<std::size_t>(offset + i)];
                }
                offset += p->size();
            }
        };
    }
    return out;
}

TensorPtr upsample_nearest2(const TensorPtr& x) {
    require_3d("upsample_nearest2", *x);
    std::int64_t c = x->shape[0], h = x->shape[1], w = x->shape[2];
    auto out = node({c, 2 * h, 2 * w}, {x});
    for (std::int64_t ch = 0; ch < c; ++ch)
        for (std::int64_t y = 0; y < 2 * h; ++y)
            for (std::int64_t v = 0; v < 2 * w; ++v)
                out->data[(ch * 2 * h + y) * 2 * w + v] = x->data[(ch * h + y / 2) * w + v / 2];
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, x, c, h, w]() {
            x->ensure_grad();
            for (std::int64_t ch = 0; ch < c; ++ch)
                for (std::int64_t y = 0; y < 2 * h; ++y)
                    for (std::int64_t v = 0; v < 2 * w; ++v)
                        x->grad[(ch * h + y / 2) * w + v / 2] +=
                            self->grad[(ch * 2 * h + y) * 2 * w + v];
        };
    }
    return out;
}

TensorPtr channel_norm(const TensorPtr& x, const TensorPtr& gain, const TensorPtr& shift,
                       double eps) {
    require_3d("channel_norm", *x);
    std::int64_t c = x->shape[0], plane = x->shape[1] * x->shape[2];
    if (gain->size() != c || shift->size() != c) {
        throw DimensionError("channel_norm: gain/shift must have one value per channel");
    }
    auto out = node(x->shape, {x, gain, shift});
    // Keep the standardized values for the backward pass.
    auto hat = std::make_shared<std::vector<double>>(x->data.size());
    auto inv = std::make_shared<std::vector<double>>(static_cast<std::size_t>(c));
    for (std::int64_t ch = 0; ch < c; ++ch) {
        double mean = 0.0;
        for (std::int64_t p = 0; p < plane; ++p) mean += x->data[ch * plane + p];
        mean /= static_cast<double>(plane);
        double var = 0.0;
        for (std::int64_t p = 0; p < plane; ++p) {
            double d = x->data[ch * plane + p] - mean;
            var += d * d;
        }
        var /= static_cast<double>(plane);
        double is = 1.0 / std::sqrt(var + eps);
        (*inv)[static_cast<std::size_t>(ch)] = is;
        double g = gain->data[static_cast<std::size_t>(ch)];
        double s = shift->data[static_cast<std::size_t>(ch)];
        for (std::int64_t p = 0; p < plane; ++p) {
            double xh = (x->data[ch * plane + p] - mean) * is;
            (*hat)[static_cast<std::size_t>(ch * plane + p)] = xh;
            out->data[ch * plane + p] = g * xh + s;
        }
    }
    check_finite("channel_norm", *out);
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, x, gain, shift, c, plane, hat, inv]() {
            bool wx = x->requires_grad, wg = gain->requires_grad, ws = shift->requires_grad;
            if (wx) x->ensure_grad();
            if (wg) gain->ensure_grad();
            if (ws) shift->ensure_grad();
            for (std::int64_t ch = 0; ch < c; ++ch) {
                double g = gain->data[static_cast<std::size_t>(ch)];
                double is = (*inv)[static_cast<std::size_t>(ch)];
                double sum_g = 0.0, sum_gx = 0.0;
                for (std::int64_t p = 0; p < plane; ++p) {
                    double go = self->grad[ch * plane + p];
                    sum_g += go;
                    sum_gx += go * (*hat)[static_cast<std::size_t>(ch * plane + p)];
                }
                if (wg) gain->grad[static_cast<std::size_t>(ch)] += sum_gx;
                if (ws) shift->grad[static_cast<std::size_t>(ch)] += sum_g;
                if (wx) {
                    double n = static_cast<double>(plane);
                    for (std::int64_t p = 0; p < plane; ++p) {
                        double go = self->grad[ch * plane + p];
                        double xh = (*hat)[static_cast<std::size_t>(ch * plane + p)];
                        x->grad[ch * plane + p] +=
                            g * is * (go - sum_g / n - xh * sum_gx / n);
                    }
                }
            }
        };
    }
    return out;
}

TensorPtr diff_right(const TensorPtr& x) {
    require_3d("diff_right", *x);
    std::int64_t c = x->shape[0], h = x->shape[1], w = x->shape[2];
    auto out = node(x->shape, {x});
    for (std::int64_t ch = 0; ch < c; ++ch)
        for (std::int64_t y = 0; y < h; ++y)
            for (std::int64_t v = 0; v + 1 < w; ++v)
                out->data[(ch * h + y) * w + v] =
                    x->data[(ch * h + y) * w + v + 1] - x->data[(ch * h + y) * w + v];
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, x, c, h, w]() {
            x->ensure_grad();
            for (std::int64_t ch = 0; ch < c; ++ch)
                for (std::int64_t y = 0; y < h; ++y)
                    for (std::int64_t v = 0; v + 1 < w; ++v) {
                        double g = self->grad[(ch * h + y) * w + v];
                        x->grad[(ch * h + y) * w + v + 1] += g;
                        x->grad[(ch * h + y) * w + v] -= g;
                    }
        };
    }
    return out;
}

TensorPtr diff_down(const TensorPtr& x) {
    require_3d("diff_down", *x);
    std::int64_t c = x->shape[0], h = x->shape[1], w = x->shape[2];
    auto out = node(x->shape, {x});
    for (std::int64_t ch = 0; ch < c; ++ch)
        for (std::int64_t y = 0; y + 1 < h; ++y)
            for (std::int64_t v = 0; v < w; ++v)
                out->data[(ch * h + y) * w + v] =
                    x->data[(ch * h + y + 1) * w + v] - x->data[(ch * h + y) * w + v];
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, x, c, h, w]() {
            x->ensure_grad();
            for (std::int64_t ch = 0; ch < c; ++ch)
                for (std::int64_t y = 0; y + 1 < h; ++y)
                    for (std::int64_t v = 0; v < w; ++v) {
                        double g = self->grad[(ch * h + y) * w + v];
                        x->grad[(ch * h + y + 1) * w + v] += g;
                        x->grad[(ch * h + y) * w + v] -= g;
                    }
        };
    }
    return out;
}

TensorPtr sum_all(const TensorPtr& a) {
    auto out = node({1}, {a});
    double acc = 0.0;
    for (double v : a->data) acc += v;
    out->data[0] = acc;
    check_finite("sum_all", *out);
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, a]() {
            a->ensure_grad();
            for (auto& g : a->grad) g += self->grad[0];
        };
    }
    return out;
}

TensorPtr mean_all(const TensorPtr& a) {
    auto out = node({1}, {a});
    double acc = 0.0;
    for (double v : a->data) acc += v;
    double n = static_cast<double>(a->data.size());
    out->data[0] = acc / n;
    check_finite("mean_all", *out);
    if (out->requires_grad) {
        Tensor* self = out.get();
        out->backward_fn = [self, a, n]() {
            a->ensure_grad();
            double g = self->grad[0] / n;
            for (auto& gv : a->grad) gv += g;
        };
    }
    return out;
}

TensorPtr rsqrt(const TensorPtr& a, double eps) {
    for (double v : a->data) {
        if (v + eps <= 0.0) throw NumericError("rsqrt requires positive inputs");
    }
    return unary(
        "rsqrt", a, [eps](double x) { return 1.0 / std::sqrt(x + eps); },
        [](double, double y) { return -0.5 * y * y * y; });
}

TensorPtr rms_norm(const TensorPtr& x, const TensorPtr& gain, double eps) {
    auto inv = rsqrt(mean_all(mul(x, x)), eps);
    return mul(mul(x, inv), gain);
}

TensorPtr clamp01(const TensorPtr& a) {
    auto out = std::make_shared<Tensor>();
    out->shape = a->shape;
    out->data = a->data;
    for (auto& v : out->data) v = std::clamp(v, 0.0, 1.0);
    return out;
}

} // namespace alanet
