#include "sepcount/layers.hpp"

#include <algorithm>
#include <cmath>

namespace sepcount {

namespace {

std::size_t conv_out_len(std::size_t t, std::size_t k, const Conv1dSpec& s) {
    const std::size_t span = s.dilation * (k - 1) + 1;
    if (t + 2 * s.pad < span) {
        throw ShapeError("conv1d: input length " + std::to_string(t) + " with pad " +
                         std::to_string(s.pad) + " admits no window of span " +
                         std::to_string(span));
    }
    return (t + 2 * s.pad - span) / s.stride + 1;
}

}  // namespace

Tensor conv1d_forward(const Tensor& input, const Tensor& kernels, const Conv1dSpec& spec) {
    if (input.rank() != 2) throw ShapeError("conv1d: input must be 2-D, got " + shape_string(input.shape()));
    if (kernels.rank() != 3) throw ShapeError("conv1d: kernels must be 3-D, got " + shape_string(kernels.shape()));
    if (input.dim(0) != kernels.dim(1)) {
        throw ShapeError("conv1d: input channel axis " + std::to_string(input.dim(0)) +
                         " != kernel input axis " + std::to_string(kernels.dim(1)));
    }
    if (spec.stride < 1 || spec.dilation < 1 || kernels.dim(2) < 1) {
        throw ShapeError("conv1d: stride, dilation, kernel width must be >= 1");
    }
    const std::size_t cin = input.dim(0), t = input.dim(1);
    const std::size_t cout = kernels.dim(0), k = kernels.dim(2);
    const std::size_t tout = conv_out_len(t, k, spec);

    Tensor y({cout, tout});
    for (std::size_t o = 0; o < cout; ++o) {
        for (std::size_t i = 0; i < cin; ++i) {
            const double* x = input.data() + i * t;
            const double* w = kernels.data() + (o * cin + i) * k;
            double* out = y.data() + o * tout;
            for (std::size_t j = 0; j < k; ++j) {
                const double wj = w[j];
                if (wj == 0.0) continue;
                const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(j * spec.dilation) -
                                           static_cast<std::ptrdiff_t>(spec.pad);
                for (std::size_t tt = 0; tt < tout; ++tt) {
                    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(tt * spec.stride) + off;
                    if (src >= 0 && src < static_cast<std::ptrdiff_t>(t)) {
                        out[tt] += wj * x[src];
                    }
                }
            }
        }
    }
    return y;
}

void conv1d_backward(const Tensor& input, const Tensor& kernels, const Conv1dSpec& spec,
                     const Tensor& upstream, Tensor& grad_input, Tensor& grad_kernels) {
    const std::size_t cin = input.dim(0), t = input.dim(1);
    const std::size_t cout = kernels.dim(0), k = kernels.dim(2);
    const std::size_t tout = conv_out_len(t, k, spec);
    if (upstream.rank() != 2 || upstream.dim(0) != cout || upstream.dim(1) != tout) {
        throw ShapeError("conv1d backward: upstream shape " + shape_string(upstream.shape()) +
                         " does not match forward output [" + std::to_string(cout) + ", " +
                         std::to_string(tout) + "]");
    }
    if (!grad_input.same_shape(input)) grad_input = zeros_like(input);
    if (!grad_kernels.same_shape(kernels)) grad_kernels = zeros_like(kernels);

    for (std::size_t o = 0; o < cout; ++o) {
        const double* up = upstream.data() + o * tout;
        for (std::size_t i = 0; i < cin; ++i) {
            const double* x = input.data() + i * t;
            const double* w = kernels.data() + (o * cin + i) * k;
            double* gx = grad_input.data() + i * t;
            double* gw = grad_kernels.data() + (o * cin + i) * k;
            for (std::size_t j = 0; j < k; ++j) {
                const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(j * spec.dilation) -
                                           static_cast<std::ptrdiff_t>(spec.pad);
                double acc = 0.0;
                for (std::size_t tt = 0; tt < tout; ++tt) {
                    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(tt * spec.stride) + off;
                    if (src >= 0 && src < static_cast<std::ptrdiff_t>(t)) {
                        acc += up[tt] * x[src];
                        gx[src] += up[tt] * w[j];
                    }
                }
                gw[j] += acc;
            }
        }
    }
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::max(0.0, y[i]);
    return y;
}

Tensor relu_backward(const Tensor& input, const Tensor& upstream) {
    if (!input.same_shape(upstream)) throw ShapeError("relu backward: shape mismatch");
    Tensor g = upstream;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (input[i] <= 0.0) g[i] = 0.0;
    }
    return g;
}

Tensor sigmoid(const Tensor& x) {
    Tensor y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-y[i]));
    return y;
}

Tensor sigmoid_backward(const Tensor& output, const Tensor& upstream) {
    if (!output.same_shape(upstream)) throw ShapeError("sigmoid backward: shape mismatch");
    Tensor g = upstream;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= output[i] * (1.0 - output[i]);
    return g;
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    if (x.rank() != 2 || axis > 1) throw ShapeError("softmax: expects a 2-D tensor and axis 0 or 1");
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    Tensor y = x;
    const std::size_t outer = axis == 1 ? rows : cols;
    const std::size_t inner = axis == 1 ? cols : rows;
    for (std::size_t i = 0; i < outer; ++i) {
        auto idx = [&](std::size_t j) { return axis == 1 ? i * cols + j : j * cols + i; };
        double mx = y[idx(0)];
        for (std::size_t j = 1; j < inner; ++j) mx = std::max(mx, y[idx(j)]);
        double sum = 0.0;
        for (std::size_t j = 0; j < inner; ++j) {
            const double e = std::exp(y[idx(j)] - mx);
            y[idx(j)] = e;
            sum += e;
        }
        for (std::size_t j = 0; j < inner; ++j) y[idx(j)] /= sum;
    }
    return y;
}

Tensor softmax_backward(const Tensor& probs, const Tensor& upstream, std::size_t axis) {
    if (!probs.same_shape(upstream)) throw ShapeError("softmax backward: shape mismatch");
    const std::size_t rows = probs.dim(0), cols = probs.dim(1);
    Tensor g = zeros_like(probs);
    const std::size_t outer = axis == 1 ? rows : cols;
    const std::size_t inner = axis == 1 ? cols : rows;
    for (std::size_t i = 0; i < outer; ++i) {
        auto idx = [&](std::size_t j) { return axis == 1 ? i * cols + j : j * cols + i; };
        double dot = 0.0;
        for (std::size_t j = 0; j < inner; ++j) dot += upstream[idx(j)] * probs[idx(j)];
        for (std::size_t j = 0; j < inner; ++j) {
            g[idx(j)] = probs[idx(j)] * (upstream[idx(j)] - dot);
        }
    }
    return g;
}

Tensor mean(const Tensor& x, std::size_t axis) {
    if (x.rank() != 2 || axis > 1) throw ShapeError("mean: expects a 2-D tensor and axis 0 or 1");
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    if (axis == 1) {
        Tensor y({rows});
        for (std::size_t i = 0; i < rows; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols; ++j) s += x.at(i, j);
            y[i] = s / static_cast<double>(cols);
        }
        return y;
    }
    Tensor y({cols});
    for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows; ++i) s += x.at(i, j);
        y[j] = s / static_cast<double>(rows);
    }
    return y;
}

Tensor mean_backward(const Tensor& x, const Tensor& upstream, std::size_t axis) {
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    const double scale = 1.0 / static_cast<double>(axis == 1 ? cols : rows);
    Tensor g = zeros_like(x);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            g.at(i, j) = upstream[axis == 1 ? i : j] * scale;
        }
    }
    return g;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor y({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        double* yr = y.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            if (av == 0.0) continue;
            const double* br = b.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) yr[j] += av * br[j];
        }
    }
    return y;
}

void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& upstream,
                     Tensor& grad_a, Tensor& grad_b) {
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (upstream.dim(0) != m || upstream.dim(1) != n) {
        throw ShapeError("matmul backward: upstream shape mismatch");
    }
    if (!grad_a.same_shape(a)) grad_a = zeros_like(a);
    if (!grad_b.same_shape(b)) grad_b = zeros_like(b);
    // grad_a = up · bᵀ, grad_b = aᵀ · up
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            const double* ur = upstream.data() + i * n;
            const double* br = b.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) acc += ur[j] * br[j];
            grad_a[i * k + p] += acc;
        }
    }
    for (std::size_t p = 0; p < k; ++p) {
        double* gbr = grad_b.data() + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = a[i * k + p];
            if (av == 0.0) continue;
            const double* ur = upstream.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) gbr[j] += av * ur[j];
        }
    }
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("transpose: expects a 2-D tensor");
    const std::size_t m = a.dim(0), n = a.dim(1);
    Tensor y({n, m});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) y.at(j, i) = a.at(i, j);
    }
    return y;
}

// ---------------------------------------------------------------------------

void PointwiseConv::init(std::size_t out, std::size_t in, Rng& rng) {
    w = Tensor({out, in});
    b = Tensor({out});
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    fill_uniform(w, rng, bound);
    fill_uniform(b, rng, bound);
    gw = zeros_like(w);
    gb = zeros_like(b);
}

void PointwiseConv::init_zero(std::size_t out, std::size_t in) {
    w = Tensor({out, in});
    b = Tensor({out});
    gw = zeros_like(w);
    gb = zeros_like(b);
}

Tensor PointwiseConv::forward(const Tensor& x) const {
    Tensor y = matmul(w, x);
    const std::size_t out = y.dim(0), t = y.dim(1);
    for (std::size_t o = 0; o < out; ++o) {
        double* yr = y.data() + o * t;
        for (std::size_t tt = 0; tt < t; ++tt) yr[tt] += b[o];
    }
    return y;
}

Tensor PointwiseConv::backward(const Tensor& x, const Tensor& upstream) {
    Tensor gx;
    matmul_backward(w, x, upstream, gw, gx);
    const std::size_t out = upstream.dim(0), t = upstream.dim(1);
    for (std::size_t o = 0; o < out; ++o) {
        const double* ur = upstream.data() + o * t;
        double acc = 0.0;
        for (std::size_t tt = 0; tt < t; ++tt) acc += ur[tt];
        gb[o] += acc;
    }
    return gx;
}

void DepthwiseConv::init(std::size_t channels, std::size_t k, std::size_t dil, Rng& rng) {
    if (k % 2 == 0) throw ConfigError("depthwise conv: kernel width must be odd for same padding");
    dilation = dil;
    w = Tensor({channels, k});
    fill_uniform(w, rng, 1.0 / std::sqrt(static_cast<double>(k)));
    gw = zeros_like(w);
}

Tensor DepthwiseConv::forward(const Tensor& x) const {
    if (x.dim(0) != w.dim(0)) {
        throw ShapeError("depthwise conv: channel axis " + std::to_string(x.dim(0)) +
                         " != kernel channels " + std::to_string(w.dim(0)));
    }
    const std::size_t c = x.dim(0), t = x.dim(1), k = w.dim(1);
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>((k - 1) / 2 * dilation);
    Tensor y({c, t});
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double* xr = x.data() + ch * t;
        double* yr = y.data() + ch * t;
        for (std::size_t j = 0; j < k; ++j) {
            const double wj = w.at(ch, j);
            const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(j * dilation) - half;
            for (std::size_t tt = 0; tt < t; ++tt) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(tt) + off;
                if (src >= 0 && src < static_cast<std::ptrdiff_t>(t)) yr[tt] += wj * xr[src];
            }
        }
    }
    return y;
}

Tensor DepthwiseConv::backward(const Tensor& x, const Tensor& upstream) {
    const std::size_t c = x.dim(0), t = x.dim(1), k = w.dim(1);
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>((k - 1) / 2 * dilation);
    Tensor gx = zeros_like(x);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double* xr = x.data() + ch * t;
        const double* ur = upstream.data() + ch * t;
        double* gxr = gx.data() + ch * t;
        for (std::size_t j = 0; j < k; ++j) {
            const double wj = w.at(ch, j);
            const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(j * dilation) - half;
            double acc = 0.0;
            for (std::size_t tt = 0; tt < t; ++tt) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(tt) + off;
                if (src >= 0 && src < static_cast<std::ptrdiff_t>(t)) {
                    acc += ur[tt] * xr[src];
                    gxr[src] += ur[tt] * wj;
                }
            }
            gw.at(ch, j) += acc;
        }
    }
    return gx;
}

void GlobalLayerNorm::init(std::size_t channels) {
    gain = Tensor({channels}, 1.0);
    bias = Tensor({channels}, 0.0);
    ggain = zeros_like(gain);
    gbias = zeros_like(bias);
}

Tensor GlobalLayerNorm::forward(const Tensor& x, Cache& cache) const {
    const std::size_t c = x.dim(0), t = x.dim(1);
    const double n = static_cast<double>(c * t);
    double mu = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mu += x[i];
    mu /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - mu;
        var += d * d;
    }
    var /= n;
    cache.inv_std = 1.0 / std::sqrt(var + eps);
    cache.xhat = Tensor({c, t});
    Tensor y({c, t});
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t tt = 0; tt < t; ++tt) {
            const double xh = (x.at(ch, tt) - mu) * cache.inv_std;
            cache.xhat.at(ch, tt) = xh;
            y.at(ch, tt) = gain[ch] * xh + bias[ch];
        }
    }
    return y;
}

Tensor GlobalLayerNorm::backward(const Cache& cache, const Tensor& upstream) {
    const std::size_t c = upstream.dim(0), t = upstream.dim(1);
    const double n = static_cast<double>(c * t);
    // gxhat = up ⊙ gain (broadcast per channel)
    double sum_g = 0.0, sum_gx = 0.0;
    Tensor gxhat({c, t});
    for (std::size_t ch = 0; ch < c; ++ch) {
        double acc_gain = 0.0, acc_bias = 0.0;
        for (std::size_t tt = 0; tt < t; ++tt) {
            const double u = upstream.at(ch, tt);
            const double xh = cache.xhat.at(ch, tt);
            acc_gain += u * xh;
            acc_bias += u;
            const double gh = u * gain[ch];
            gxhat.at(ch, tt) = gh;
            sum_g += gh;
            sum_gx += gh * xh;
        }
        ggain[ch] += acc_gain;
        gbias[ch] += acc_bias;
    }
    Tensor gx({c, t});
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t tt = 0; tt < t; ++tt) {
            const double xh = cache.xhat.at(ch, tt);
            gx.at(ch, tt) = cache.inv_std * (gxhat.at(ch, tt) - sum_g / n - xh * sum_gx / n);
        }
    }
    return gx;
}

}  // namespace sepcount
