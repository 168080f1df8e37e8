#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "espa/rng.hpp"

namespace espa::nn {

using Matrix = Eigen::MatrixXd;

// Activations. The *_grad_from_output variants take the activation output,
// which is what the backward passes have cached.
Matrix sigmoid(const Matrix& x);
Matrix tanh_act(const Matrix& x);
Matrix relu(const Matrix& x);
Matrix sigmoid_grad_from_output(const Matrix& y);
Matrix tanh_grad_from_output(const Matrix& y);

/// Mean squared error over all coefficients.
double mse_loss(const Matrix& predicted, const Matrix& target);
Matrix mse_loss_grad(const Matrix& predicted, const Matrix& target);

/// Named view over one parameter tensor and its gradient accumulator.
struct ParamRef {
    std::string name;
    Matrix* value;
    Matrix* grad;
};

void zero_grads(const std::vector<ParamRef>& params);

/// Fully connected layer: y = W x + b, columns are batch samples.
class DenseLayer {
public:
    DenseLayer() = default;
    DenseLayer(int input_size, int output_size, Rng& rng);

    Matrix forward(const Matrix& input);
    Matrix backward(const Matrix& grad_output);
    std::vector<ParamRef> parameters(const std::string& prefix);

    Matrix weight, bias;
    Matrix grad_weight, grad_bias;

private:
    Matrix input_;
};

/**
 * Gated recurrent cell over concatenated [h_prev, x]:
 *   reset     = sigmoid(W_r [h_prev, x] + b_r)
 *   update    = sigmoid(W_u [h_prev, x] + b_u)
 *   candidate = tanh(W_c [reset * h_prev, x] + b_c)
 *   h         = (1 - update) * h_prev + update * candidate
 */
class GruLayer {
public:
    GruLayer() = default;
    GruLayer(int input_size, int hidden_size, Rng& rng);

    int input_size() const { return static_cast<int>(w_reset.cols()) - hidden_size(); }
    int hidden_size() const { return static_cast<int>(w_reset.rows()); }

    /// One step; columns are batch samples.
    Matrix step(const Matrix& x, const Matrix& h_prev) const;

    /// Full sequence from h = 0; caches activations for backward.
    std::vector<Matrix> forward(const std::vector<Matrix>& inputs);

    /// Per-step gradients w.r.t. this layer's hidden outputs; accumulates
    /// parameter gradients and returns per-step input gradients.
    std::vector<Matrix> backward(const std::vector<Matrix>& grad_hidden);

    std::vector<ParamRef> parameters(const std::string& prefix);

    Matrix w_reset, w_update, w_candidate;        // hidden x (hidden + input)
    Matrix b_reset, b_update, b_candidate;        // hidden x 1
    Matrix grad_w_reset, grad_w_update, grad_w_candidate;
    Matrix grad_b_reset, grad_b_update, grad_b_candidate;

private:
    struct StepCache {
        Matrix input, h_prev, reset, update, candidate, reset_h;
    };
    std::vector<StepCache> cache_;
};

/// Spec-level single-step entry point.
Eigen::VectorXd gru_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                                 const GruLayer& params);

/**
 * Runs a stacked GRU over the sequence and returns the final hidden state of
 * the top layer. Inverted dropout is applied between layers while training,
 * so evaluation is the exact identity.
 */
Matrix gru_forward_sequence(const std::vector<Matrix>& inputs, std::vector<GruLayer>& layers,
                            double dropout_p, bool training, Rng& rng);

/**
 * 1-D convolution (cross-correlation) with stride 1 and valid padding.
 * input: channels x length; weight: filters x (channels * width) with
 * position-major blocks; bias: filters x 1.
 */
Matrix conv1d_forward(const Matrix& input, const Matrix& weight, const Matrix& bias);

struct PoolResult {
    Matrix output;
    Eigen::MatrixXi argmax;  // recorded for backprop
};

/// Non-overlapping max pooling along the length axis; odd tail is dropped.
PoolResult maxpool1d(const Matrix& input, int factor);

/// 1-D convolution layer wrapping conv1d_forward with gradient accumulation.
class Conv1dLayer {
public:
    Conv1dLayer() = default;
    Conv1dLayer(int in_channels, int filters, int width, Rng& rng);

    int in_channels() const { return in_channels_; }
    int filters() const { return static_cast<int>(weight.rows()); }
    int width() const { return width_; }

    /// input: channels x length -> filters x (length - width + 1)
    Matrix forward(const Matrix& input);
    Matrix backward(const Matrix& grad_output);
    std::vector<ParamRef> parameters(const std::string& prefix);

    Matrix weight;  // filters x (in_channels * width), position-major blocks
    Matrix bias;    // filters x 1
    Matrix grad_weight, grad_bias;

private:
    Matrix im2col(const Matrix& input) const;
    int in_channels_ = 0, width_ = 0;
    Matrix columns_;
    Eigen::Index input_length_ = 0;
};

/// Max pooling layer keeping the argmax of its last forward for backprop.
class MaxPool1d {
public:
    explicit MaxPool1d(int factor = 2) : factor_(factor) {}

    Matrix forward(const Matrix& input);
    Matrix backward(const Matrix& grad_output) const;  // routes 1.0 to the argmax

private:
    int factor_;
    Eigen::Index input_length_ = 0;
    Eigen::MatrixXi argmax_;
};

/// Inverted dropout: scales kept units by 1/(1-p) at train time.
class Dropout {
public:
    explicit Dropout(double p = 0.0) : p_(p) {}

    Matrix forward(const Matrix& input, bool training, Rng& rng);
    Matrix backward(const Matrix& grad_output) const;
    double p() const { return p_; }

private:
    double p_;
    Matrix mask_;
};

/// Adam with bias correction; moments are kept per parameter tensor.
struct AdamState {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step_count = 0;
    std::vector<Matrix> first_moment, second_moment;

    void init(const std::vector<ParamRef>& params);
};

/// One update step; throws on non-finite gradients.
void adam_step(const std::vector<ParamRef>& params, AdamState& state);

/**
 * Central finite differences on every coordinate (or a seeded random subset
 * of at least `max_coords` for large models) against the analytic gradients
 * produced by `compute_grads`. Returns the maximum relative error.
 */
double grad_check(const std::function<double()>& loss, const std::function<void()>& compute_grads,
                  const std::vector<ParamRef>& params, double eps = 1e-5, int max_coords = 100,
                  Rng* rng = nullptr);

}  // namespace espa::nn
