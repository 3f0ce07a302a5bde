#include "synthcxr/nn/layers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace synthcxr::nn {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

// ---------------------------------------------------------------------------
// Conv2d
// ---------------------------------------------------------------------------

Conv2d::Conv2d(std::string name, int in_ch, int out_ch, int ksize, int stride, int padding,
               bool with_bias)
    : weight(name + ".weight", {out_ch, in_ch, ksize, ksize}),
      bias(name + ".bias", {out_ch}),
      has_bias(with_bias),
      in_ch_(in_ch),
      out_ch_(out_ch),
      k_(ksize),
      stride_(stride),
      pad_(padding) {}

void Conv2d::init_he(Rng& rng) {
    const double std = std::sqrt(2.0 / (in_ch_ * k_ * k_));
    for (double& v : weight.value.data) v = rng.normal(0.0, std);
    if (has_bias) bias.value.zero();
}

void Conv2d::collect_params(std::vector<Param*>& out) {
    out.push_back(&weight);
    if (has_bias) out.push_back(&bias);
}

void Conv2d::im2col(const double* img, double* col) const {
    // img: (C, H, W); col: (C*k*k, out_h*out_w) row-major
    const int h = input_.dim(2), w = input_.dim(3);
    const int span = out_h_ * out_w_;
    for (int c = 0; c < in_ch_; ++c) {
        for (int ky = 0; ky < k_; ++ky) {
            for (int kx = 0; kx < k_; ++kx) {
                double* row = col + (static_cast<std::size_t>(c) * k_ * k_ + ky * k_ + kx) * span;
                for (int oy = 0; oy < out_h_; ++oy) {
                    const int iy = oy * stride_ - pad_ + ky;
                    if (iy < 0 || iy >= h) {
                        for (int ox = 0; ox < out_w_; ++ox) row[oy * out_w_ + ox] = 0.0;
                        continue;
                    }
                    for (int ox = 0; ox < out_w_; ++ox) {
                        const int ix = ox * stride_ - pad_ + kx;
                        row[oy * out_w_ + ox] =
                            (ix >= 0 && ix < w)
                                ? img[(static_cast<std::size_t>(c) * h + iy) * w + ix]
                                : 0.0;
                    }
                }
            }
        }
    }
}

void Conv2d::col2im(const double* col, double* img) const {
    const int h = input_.dim(2), w = input_.dim(3);
    const int span = out_h_ * out_w_;
    for (int c = 0; c < in_ch_; ++c) {
        for (int ky = 0; ky < k_; ++ky) {
            for (int kx = 0; kx < k_; ++kx) {
                const double* row =
                    col + (static_cast<std::size_t>(c) * k_ * k_ + ky * k_ + kx) * span;
                for (int oy = 0; oy < out_h_; ++oy) {
                    const int iy = oy * stride_ - pad_ + ky;
                    if (iy < 0 || iy >= h) continue;
                    for (int ox = 0; ox < out_w_; ++ox) {
                        const int ix = ox * stride_ - pad_ + kx;
                        if (ix >= 0 && ix < w) {
                            img[(static_cast<std::size_t>(c) * h + iy) * w + ix] +=
                                row[oy * out_w_ + ox];
                        }
                    }
                }
            }
        }
    }
}

Tensor Conv2d::forward(const Tensor& x, bool /*train*/) {
    if (x.shape.size() != 4 || x.dim(1) != in_ch_) {
        fail("conv '", weight.name, "': bad input shape ", x.shape_str());
    }
    input_ = x;
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    out_h_ = (h + 2 * pad_ - k_) / stride_ + 1;
    out_w_ = (w + 2 * pad_ - k_) / stride_ + 1;
    if (out_h_ < 1 || out_w_ < 1) fail("conv '", weight.name, "': input too small");

    const int kk = in_ch_ * k_ * k_;
    const int span = out_h_ * out_w_;
    Tensor y({n, out_ch_, out_h_, out_w_});
    std::vector<double> col(static_cast<std::size_t>(kk) * span);

    ConstMapRM wmat(weight.value.ptr(), out_ch_, kk);
    for (int i = 0; i < n; ++i) {
        im2col(x.ptr() + static_cast<std::size_t>(i) * in_ch_ * h * w, col.data());
        ConstMapRM cmat(col.data(), kk, span);
        MapRM ymat(y.ptr() + static_cast<std::size_t>(i) * out_ch_ * span, out_ch_, span);
        ymat.noalias() = wmat * cmat;
        if (has_bias) {
            for (int o = 0; o < out_ch_; ++o) ymat.row(o).array() += bias.value.data[o];
        }
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
    const int n = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
    const int kk = in_ch_ * k_ * k_;
    const int span = out_h_ * out_w_;

    Tensor grad_in(input_.shape);
    std::vector<double> col(static_cast<std::size_t>(kk) * span);
    std::vector<double> col_grad(static_cast<std::size_t>(kk) * span);

    ConstMapRM wmat(weight.value.ptr(), out_ch_, kk);
    MapRM wgrad(weight.grad.ptr(), out_ch_, kk);
    for (int i = 0; i < n; ++i) {
        ConstMapRM gmat(grad_out.ptr() + static_cast<std::size_t>(i) * out_ch_ * span, out_ch_,
                        span);
        im2col(input_.ptr() + static_cast<std::size_t>(i) * in_ch_ * h * w, col.data());
        ConstMapRM cmat(col.data(), kk, span);
        wgrad.noalias() += gmat * cmat.transpose();
        if (has_bias) {
            for (int o = 0; o < out_ch_; ++o) bias.grad.data[o] += gmat.row(o).sum();
        }
        MapRM cgrad(col_grad.data(), kk, span);
        cgrad.noalias() = wmat.transpose() * gmat;
        col2im(col_grad.data(), grad_in.ptr() + static_cast<std::size_t>(i) * in_ch_ * h * w);
    }
    return grad_in;
}

// ---------------------------------------------------------------------------
// BatchNorm2d
// ---------------------------------------------------------------------------

BatchNorm2d::BatchNorm2d(std::string name, int channels, double eps, double momentum)
    : gamma(name + ".weight", {channels}),
      beta(name + ".bias", {channels}),
      running_mean(name + ".running_mean", {channels}),
      running_var(name + ".running_var", {channels}),
      channels_(channels),
      eps_(eps),
      momentum_(momentum) {
    std::fill(gamma.value.data.begin(), gamma.value.data.end(), 1.0);
    std::fill(running_var.value.data.begin(), running_var.value.data.end(), 1.0);
}

void BatchNorm2d::collect_params(std::vector<Param*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
}

void BatchNorm2d::collect_buffers(std::vector<Param*>& out) {
    out.push_back(&running_mean);
    out.push_back(&running_var);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool train) {
    if (x.shape.size() != 4 || x.dim(1) != channels_) {
        fail("batchnorm '", gamma.name, "': bad input shape ", x.shape_str());
    }
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const double count = static_cast<double>(n) * plane;
    last_train_ = train;
    inv_std_.assign(channels_, 0.0);

    Tensor y(x.shape);
    xhat_ = Tensor(x.shape);
    for (int c = 0; c < channels_; ++c) {
        double mean, var;
        if (train) {
            double sum = 0.0, sq = 0.0;
            for (int i = 0; i < n; ++i) {
                const double* p = x.ptr() + (static_cast<std::size_t>(i) * channels_ + c) * plane;
                for (std::size_t j = 0; j < plane; ++j) {
                    sum += p[j];
                    sq += p[j] * p[j];
                }
            }
            mean = sum / count;
            var = sq / count - mean * mean;
            if (var < 0.0) var = 0.0;
            const double unbiased = count > 1.0 ? var * count / (count - 1.0) : var;
            running_mean.value.data[c] =
                (1.0 - momentum_) * running_mean.value.data[c] + momentum_ * mean;
            running_var.value.data[c] =
                (1.0 - momentum_) * running_var.value.data[c] + momentum_ * unbiased;
        } else {
            mean = running_mean.value.data[c];
            var = running_var.value.data[c];
        }
        const double inv_std = 1.0 / std::sqrt(var + eps_);
        inv_std_[c] = inv_std;
        const double g = gamma.value.data[c], b = beta.value.data[c];
        for (int i = 0; i < n; ++i) {
            const std::size_t base = (static_cast<std::size_t>(i) * channels_ + c) * plane;
            for (std::size_t j = 0; j < plane; ++j) {
                const double xh = (x.data[base + j] - mean) * inv_std;
                xhat_.data[base + j] = xh;
                y.data[base + j] = g * xh + b;
            }
        }
    }
    return y;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
    const int n = grad_out.dim(0), h = grad_out.dim(2), w = grad_out.dim(3);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const double count = static_cast<double>(n) * plane;

    Tensor grad_in(grad_out.shape);
    for (int c = 0; c < channels_; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::size_t base = (static_cast<std::size_t>(i) * channels_ + c) * plane;
            for (std::size_t j = 0; j < plane; ++j) {
                sum_dy += grad_out.data[base + j];
                sum_dy_xhat += grad_out.data[base + j] * xhat_.data[base + j];
            }
        }
        gamma.grad.data[c] += sum_dy_xhat;
        beta.grad.data[c] += sum_dy;

        const double g = gamma.value.data[c];
        const double inv_std = inv_std_[c];
        for (int i = 0; i < n; ++i) {
            const std::size_t base = (static_cast<std::size_t>(i) * channels_ + c) * plane;
            for (std::size_t j = 0; j < plane; ++j) {
                if (last_train_) {
                    grad_in.data[base + j] =
                        g * inv_std *
                        (grad_out.data[base + j] - sum_dy / count -
                         xhat_.data[base + j] * sum_dy_xhat / count);
                } else {
                    grad_in.data[base + j] = g * inv_std * grad_out.data[base + j];
                }
            }
        }
    }
    return grad_in;
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

Tensor ReLU::forward(const Tensor& x, bool /*train*/) {
    Tensor y = x;
    mask_.assign(x.size(), false);
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y.data[i] > 0.0) {
            mask_[i] = true;
        } else {
            y.data[i] = 0.0;
        }
    }
    return y;
}

Tensor ReLU::backward(const Tensor& grad_out) {
    Tensor grad_in = grad_out;
    for (std::size_t i = 0; i < grad_in.size(); ++i) {
        if (!mask_[i]) grad_in.data[i] = 0.0;
    }
    return grad_in;
}

// ---------------------------------------------------------------------------
// MaxPool2d
// ---------------------------------------------------------------------------

MaxPool2d::MaxPool2d(int ksize, int stride, int padding)
    : k_(ksize), stride_(stride), pad_(padding) {}

Tensor MaxPool2d::forward(const Tensor& x, bool /*train*/) {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int oh = (h + 2 * pad_ - k_) / stride_ + 1;
    const int ow = (w + 2 * pad_ - k_) / stride_ + 1;
    in_shape_ = x.shape;
    Tensor y({n, c, oh, ow});
    argmax_.assign(y.size(), 0);

    std::size_t oi = 0;
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const double* plane = x.ptr() + (static_cast<std::size_t>(i) * c + ch) *
                                                static_cast<std::size_t>(h) * w;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox, ++oi) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t best_idx = 0;
                    for (int ky = 0; ky < k_; ++ky) {
                        const int iy = oy * stride_ - pad_ + ky;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < k_; ++kx) {
                            const int ix = ox * stride_ - pad_ + kx;
                            if (ix < 0 || ix >= w) continue;
                            const std::size_t idx = static_cast<std::size_t>(iy) * w + ix;
                            if (plane[idx] > best) {
                                best = plane[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    y.data[oi] = best;
                    argmax_[oi] = (static_cast<std::size_t>(i) * c + ch) *
                                      static_cast<std::size_t>(h) * w +
                                  best_idx;
                }
            }
        }
    }
    return y;
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
    Tensor grad_in(in_shape_);
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        grad_in.data[argmax_[i]] += grad_out.data[i];
    }
    return grad_in;
}

// ---------------------------------------------------------------------------
// GlobalAvgPool
// ---------------------------------------------------------------------------

Tensor GlobalAvgPool::forward(const Tensor& x, bool /*train*/) {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    in_shape_ = x.shape;
    Tensor y({n, c});
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const double* p = x.ptr() + (static_cast<std::size_t>(i) * c + ch) * plane;
            double sum = 0.0;
            for (std::size_t j = 0; j < plane; ++j) sum += p[j];
            y.data[static_cast<std::size_t>(i) * c + ch] = sum / static_cast<double>(plane);
        }
    }
    return y;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
    return spread(grad_out, in_shape_[2], in_shape_[3]);
}

Tensor GlobalAvgPool::spread(const Tensor& grad_pooled, int h, int w) {
    const int n = grad_pooled.dim(0), c = grad_pooled.dim(1);
    Tensor grad_in({n, c, h, w});
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const double v =
                grad_pooled.data[static_cast<std::size_t>(i) * c + ch] / static_cast<double>(plane);
            double* p = grad_in.ptr() + (static_cast<std::size_t>(i) * c + ch) * plane;
            for (std::size_t j = 0; j < plane; ++j) p[j] = v;
        }
    }
    return grad_in;
}

// ---------------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------------

Linear::Linear(std::string name, int in_features, int out_features)
    : weight(name + ".weight", {out_features, in_features}),
      bias(name + ".bias", {out_features}),
      in_(in_features),
      out_(out_features) {}

void Linear::init_he(Rng& rng) {
    const double std = std::sqrt(2.0 / in_);
    for (double& v : weight.value.data) v = rng.normal(0.0, std);
    bias.value.zero();
}

void Linear::collect_params(std::vector<Param*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
}

Tensor Linear::forward(const Tensor& x, bool /*train*/) {
    if (x.shape.size() != 2 || x.dim(1) != in_) {
        fail("linear '", weight.name, "': bad input shape ", x.shape_str(), ", expected (*,",
             in_, ")");
    }
    input_ = x;
    const int n = x.dim(0);
    Tensor y({n, out_});
    ConstMapRM xm(x.ptr(), n, in_);
    ConstMapRM wm(weight.value.ptr(), out_, in_);
    MapRM ym(y.ptr(), n, out_);
    ym.noalias() = xm * wm.transpose();
    for (int i = 0; i < n; ++i) {
        for (int o = 0; o < out_; ++o) y.data[static_cast<std::size_t>(i) * out_ + o] += bias.value.data[o];
    }
    return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
    const int n = input_.dim(0);
    ConstMapRM gm(grad_out.ptr(), n, out_);
    ConstMapRM xm(input_.ptr(), n, in_);
    ConstMapRM wm(weight.value.ptr(), out_, in_);

    MapRM wg(weight.grad.ptr(), out_, in_);
    wg.noalias() += gm.transpose() * xm;
    for (int o = 0; o < out_; ++o) bias.grad.data[o] += gm.col(o).sum();

    Tensor grad_in({n, in_});
    MapRM gi(grad_in.ptr(), n, in_);
    gi.noalias() = gm * wm;
    return grad_in;
}

// ---------------------------------------------------------------------------
// Softmax / cross entropy
// ---------------------------------------------------------------------------

Tensor softmax(const Tensor& logits) {
    const int n = logits.dim(0), c = logits.dim(1);
    Tensor out(logits.shape);
    for (int i = 0; i < n; ++i) {
        const double* row = logits.ptr() + static_cast<std::size_t>(i) * c;
        double* orow = out.ptr() + static_cast<std::size_t>(i) * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < c; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        for (int j = 0; j < c; ++j) orow[j] /= sum;
    }
    return out;
}

double softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                             Tensor* grad_logits) {
    const int n = logits.dim(0), c = logits.dim(1);
    if (static_cast<int>(labels.size()) != n) fail("label count mismatch in cross entropy");
    Tensor probs = softmax(logits);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double p = probs.data[static_cast<std::size_t>(i) * c + labels[i]];
        loss -= std::log(std::max(p, 1e-300));
    }
    loss /= n;
    if (grad_logits) {
        *grad_logits = probs;
        for (int i = 0; i < n; ++i) {
            grad_logits->data[static_cast<std::size_t>(i) * c + labels[i]] -= 1.0;
        }
        for (double& v : grad_logits->data) v /= n;
    }
    return loss;
}

}  // namespace synthcxr::nn
