#pragma once

#include <memory>
#include <vector>

#include "synthcxr/core/rng.hpp"
#include "synthcxr/nn/tensor.hpp"

namespace synthcxr::nn {

class Layer {
public:
    virtual ~Layer() = default;

    virtual Tensor forward(const Tensor& x, bool train) = 0;

    /// Returns the gradient w.r.t. the layer input and accumulates parameter
    /// gradients. Must be called after a matching forward.
    virtual Tensor backward(const Tensor& grad_out) = 0;

    virtual void collect_params(std::vector<Param*>& out) { (void)out; }

    /// Non-trainable state that still belongs in checkpoints (e.g. batch
    /// norm running statistics).
    virtual void collect_buffers(std::vector<Param*>& out) { (void)out; }
};

class Conv2d : public Layer {
public:
    Conv2d(std::string name, int in_ch, int out_ch, int ksize, int stride, int padding,
           bool with_bias = true);

    void init_he(Rng& rng);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<Param*>& out) override;

    Param weight;  // (out, in, k, k)
    Param bias;    // (out)
    bool has_bias;

private:
    int in_ch_, out_ch_, k_, stride_, pad_;
    Tensor input_;  // cached for backward
    int out_h_ = 0, out_w_ = 0;

    void im2col(const double* img, double* col) const;
    void col2im(const double* col, double* img) const;
};

class BatchNorm2d : public Layer {
public:
    explicit BatchNorm2d(std::string name, int channels, double eps = 1e-5,
                         double momentum = 0.1);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<Param*>& out) override;
    void collect_buffers(std::vector<Param*>& out) override;

    Param gamma, beta;
    Param running_mean, running_var;  // buffers, not trained

private:
    int channels_;
    double eps_, momentum_;
    bool last_train_ = false;
    Tensor xhat_;
    std::vector<double> inv_std_;  // per channel, from the stats used forward
};

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    std::vector<bool> mask_;
};

class MaxPool2d : public Layer {
public:
    MaxPool2d(int ksize, int stride, int padding);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    int k_, stride_, pad_;
    std::vector<int> in_shape_;
    std::vector<std::size_t> argmax_;
};

class GlobalAvgPool : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;

    /// VJP of the pooling alone, usable without a cached forward.
    static Tensor spread(const Tensor& grad_pooled, int h, int w);

private:
    std::vector<int> in_shape_;
};

class Linear : public Layer {
public:
    Linear(std::string name, int in_features, int out_features);

    void init_he(Rng& rng);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<Param*>& out) override;

    Param weight;  // (out, in)
    Param bias;    // (out)

private:
    int in_, out_;
    Tensor input_;
};

/// Mean cross-entropy over softmax logits. Returns the loss and writes the
/// gradient w.r.t. the logits (already divided by the batch size).
double softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                             Tensor* grad_logits);

/// Row-wise softmax of (N, C) logits.
Tensor softmax(const Tensor& logits);

}  // namespace synthcxr::nn
