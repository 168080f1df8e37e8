#include "espa/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace espa::nn {

Matrix sigmoid(const Matrix& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }
Matrix tanh_act(const Matrix& x) { return x.array().tanh().matrix(); }
Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }
Matrix sigmoid_grad_from_output(const Matrix& y) { return (y.array() * (1.0 - y.array())).matrix(); }
Matrix tanh_grad_from_output(const Matrix& y) { return (1.0 - y.array().square()).matrix(); }

double mse_loss(const Matrix& predicted, const Matrix& target) {
    if (predicted.rows() != target.rows() || predicted.cols() != target.cols())
        throw std::invalid_argument("mse_loss: shape mismatch");
    if (predicted.size() == 0) throw std::invalid_argument("mse_loss: empty input");
    return (predicted - target).squaredNorm() / static_cast<double>(predicted.size());
}

Matrix mse_loss_grad(const Matrix& predicted, const Matrix& target) {
    if (predicted.rows() != target.rows() || predicted.cols() != target.cols())
        throw std::invalid_argument("mse_loss: shape mismatch");
    return 2.0 * (predicted - target) / static_cast<double>(predicted.size());
}

void zero_grads(const std::vector<ParamRef>& params) {
    for (const auto& p : params) p.grad->setZero();
}

namespace {

Matrix uniform_init(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-bound, bound);
    return m;
}

Matrix broadcast_add(const Matrix& m, const Matrix& bias) {
    return m.colwise() + Eigen::VectorXd(bias.col(0));
}

}  // namespace

// ---------------------------------------------------------------------------
// DenseLayer

DenseLayer::DenseLayer(int input_size, int output_size, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(input_size));
    weight = uniform_init(output_size, input_size, bound, rng);
    bias = uniform_init(output_size, 1, bound, rng);
    grad_weight = Matrix::Zero(output_size, input_size);
    grad_bias = Matrix::Zero(output_size, 1);
}

Matrix DenseLayer::forward(const Matrix& input) {
    if (input.rows() != weight.cols()) throw std::invalid_argument("dense: input size mismatch");
    input_ = input;
    return broadcast_add(weight * input, bias);
}

Matrix DenseLayer::backward(const Matrix& grad_output) {
    grad_weight += grad_output * input_.transpose();
    grad_bias += grad_output.rowwise().sum();
    return weight.transpose() * grad_output;
}

std::vector<ParamRef> DenseLayer::parameters(const std::string& prefix) {
    return {{prefix + ".weight", &weight, &grad_weight}, {prefix + ".bias", &bias, &grad_bias}};
}

// ---------------------------------------------------------------------------
// GruLayer

GruLayer::GruLayer(int input_size, int hidden_size, Rng& rng) {
    const int cols = hidden_size + input_size;
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    w_reset = uniform_init(hidden_size, cols, bound, rng);
    w_update = uniform_init(hidden_size, cols, bound, rng);
    w_candidate = uniform_init(hidden_size, cols, bound, rng);
    b_reset = uniform_init(hidden_size, 1, bound, rng);
    b_update = uniform_init(hidden_size, 1, bound, rng);
    b_candidate = uniform_init(hidden_size, 1, bound, rng);
    grad_w_reset = Matrix::Zero(hidden_size, cols);
    grad_w_update = Matrix::Zero(hidden_size, cols);
    grad_w_candidate = Matrix::Zero(hidden_size, cols);
    grad_b_reset = Matrix::Zero(hidden_size, 1);
    grad_b_update = Matrix::Zero(hidden_size, 1);
    grad_b_candidate = Matrix::Zero(hidden_size, 1);
}

Matrix GruLayer::step(const Matrix& x, const Matrix& h_prev) const {
    const int hidden = hidden_size();
    if (x.rows() != input_size() || h_prev.rows() != hidden || x.cols() != h_prev.cols())
        throw std::invalid_argument("gru: shape mismatch");

    Matrix concat(hidden + x.rows(), x.cols());
    concat << h_prev, x;
    const Matrix reset = sigmoid(broadcast_add(w_reset * concat, b_reset));
    const Matrix update = sigmoid(broadcast_add(w_update * concat, b_update));
    Matrix gated(hidden + x.rows(), x.cols());
    gated << reset.cwiseProduct(h_prev), x;
    const Matrix candidate = tanh_act(broadcast_add(w_candidate * gated, b_candidate));
    return (1.0 - update.array()).matrix().cwiseProduct(h_prev) + update.cwiseProduct(candidate);
}

std::vector<Matrix> GruLayer::forward(const std::vector<Matrix>& inputs) {
    if (inputs.empty()) throw std::invalid_argument("gru: empty sequence");
    const int hidden = hidden_size();
    const Eigen::Index batch = inputs.front().cols();

    cache_.clear();
    cache_.reserve(inputs.size());
    std::vector<Matrix> hidden_seq;
    hidden_seq.reserve(inputs.size());

    Matrix h = Matrix::Zero(hidden, batch);
    for (const Matrix& x : inputs) {
        StepCache c;
        c.input = x;
        c.h_prev = h;
        Matrix concat(hidden + x.rows(), batch);
        concat << h, x;
        c.reset = sigmoid(broadcast_add(w_reset * concat, b_reset));
        c.update = sigmoid(broadcast_add(w_update * concat, b_update));
        c.reset_h = c.reset.cwiseProduct(h);
        Matrix gated(hidden + x.rows(), batch);
        gated << c.reset_h, x;
        c.candidate = tanh_act(broadcast_add(w_candidate * gated, b_candidate));
        h = (1.0 - c.update.array()).matrix().cwiseProduct(h) + c.update.cwiseProduct(c.candidate);
        hidden_seq.push_back(h);
        cache_.push_back(std::move(c));
    }
    return hidden_seq;
}

std::vector<Matrix> GruLayer::backward(const std::vector<Matrix>& grad_hidden) {
    if (grad_hidden.size() != cache_.size()) throw std::invalid_argument("gru backward: cache mismatch");
    const int hidden = hidden_size();
    const int in = input_size();
    const Eigen::Index batch = cache_.front().input.cols();

    std::vector<Matrix> grad_inputs(cache_.size());
    Matrix dh_next = Matrix::Zero(hidden, batch);

    for (auto t = static_cast<long>(cache_.size()) - 1; t >= 0; --t) {
        const StepCache& c = cache_[t];
        const Matrix dh = grad_hidden[t] + dh_next;

        const Matrix d_update = dh.cwiseProduct(c.candidate - c.h_prev);
        const Matrix d_candidate = dh.cwiseProduct(c.update);
        Matrix dh_prev = dh.cwiseProduct((1.0 - c.update.array()).matrix());

        const Matrix da_c = d_candidate.cwiseProduct(tanh_grad_from_output(c.candidate));
        Matrix gated(hidden + in, batch);
        gated << c.reset_h, c.input;
        grad_w_candidate += da_c * gated.transpose();
        grad_b_candidate += da_c.rowwise().sum();
        const Matrix d_gated = w_candidate.transpose() * da_c;
        const Matrix d_reset_h = d_gated.topRows(hidden);
        Matrix dx = d_gated.bottomRows(in);

        const Matrix d_reset = d_reset_h.cwiseProduct(c.h_prev);
        dh_prev += d_reset_h.cwiseProduct(c.reset);

        const Matrix da_u = d_update.cwiseProduct(sigmoid_grad_from_output(c.update));
        const Matrix da_r = d_reset.cwiseProduct(sigmoid_grad_from_output(c.reset));
        Matrix concat(hidden + in, batch);
        concat << c.h_prev, c.input;
        grad_w_update += da_u * concat.transpose();
        grad_b_update += da_u.rowwise().sum();
        grad_w_reset += da_r * concat.transpose();
        grad_b_reset += da_r.rowwise().sum();

        const Matrix d_concat = w_update.transpose() * da_u + w_reset.transpose() * da_r;
        dh_prev += d_concat.topRows(hidden);
        dx += d_concat.bottomRows(in);

        grad_inputs[t] = std::move(dx);
        dh_next = std::move(dh_prev);
    }
    return grad_inputs;
}

std::vector<ParamRef> GruLayer::parameters(const std::string& prefix) {
    return {{prefix + ".w_reset", &w_reset, &grad_w_reset},
            {prefix + ".w_update", &w_update, &grad_w_update},
            {prefix + ".w_candidate", &w_candidate, &grad_w_candidate},
            {prefix + ".b_reset", &b_reset, &grad_b_reset},
            {prefix + ".b_update", &b_update, &grad_b_update},
            {prefix + ".b_candidate", &b_candidate, &grad_b_candidate}};
}

Eigen::VectorXd gru_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                                 const GruLayer& params) {
    return params.step(x, h_prev).col(0);
}

Matrix gru_forward_sequence(const std::vector<Matrix>& inputs, std::vector<GruLayer>& layers,
                            double dropout_p, bool training, Rng& rng) {
    if (layers.empty()) throw std::invalid_argument("gru_forward_sequence: no layers");
    if (inputs.empty()) throw std::invalid_argument("gru_forward_sequence: empty sequence");
    if (dropout_p < 0.0 || dropout_p >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");

    std::vector<Matrix> seq = inputs;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        seq = layers[l].forward(seq);
        const bool between = l + 1 < layers.size();
        if (between && training && dropout_p > 0.0) {
            Dropout drop(dropout_p);
            for (Matrix& h : seq) h = drop.forward(h, true, rng);
        }
    }
    return seq.back();
}

// ---------------------------------------------------------------------------
// Conv1dLayer

namespace {

Matrix im2col_impl(const Matrix& input, int width) {
    const Eigen::Index channels = input.rows();
    const Eigen::Index out_len = input.cols() - width + 1;
    Matrix col(channels * width, out_len);
    for (int o = 0; o < width; ++o)
        col.middleRows(static_cast<Eigen::Index>(o) * channels, channels) = input.middleCols(o, out_len);
    return col;
}

}  // namespace

Matrix conv1d_forward(const Matrix& input, const Matrix& weight, const Matrix& bias) {
    if (input.rows() == 0 || weight.cols() % input.rows() != 0)
        throw std::invalid_argument("conv1d: weight/input channel mismatch");
    const int width = static_cast<int>(weight.cols() / input.rows());
    if (input.cols() < width) throw std::invalid_argument("conv1d: signal shorter than kernel");
    return broadcast_add(weight * im2col_impl(input, width), bias);
}

PoolResult maxpool1d(const Matrix& input, int factor) {
    if (factor < 1) throw std::invalid_argument("maxpool: factor must be >= 1");
    if (input.cols() < factor) throw std::invalid_argument("maxpool: input shorter than pool window");
    const Eigen::Index out_len = input.cols() / factor;
    PoolResult result;
    result.output.resize(input.rows(), out_len);
    result.argmax.resize(input.rows(), out_len);
    for (Eigen::Index r = 0; r < input.rows(); ++r) {
        for (Eigen::Index m = 0; m < out_len; ++m) {
            Eigen::Index best = m * factor;
            for (int f = 1; f < factor; ++f)
                if (input(r, m * factor + f) > input(r, best)) best = m * factor + f;
            result.output(r, m) = input(r, best);
            result.argmax(r, m) = static_cast<int>(best);
        }
    }
    return result;
}

Conv1dLayer::Conv1dLayer(int in_channels, int filters, int width, Rng& rng)
    : in_channels_(in_channels), width_(width) {
    const int fan_in = in_channels * width;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    weight = uniform_init(filters, fan_in, bound, rng);
    bias = uniform_init(filters, 1, bound, rng);
    grad_weight = Matrix::Zero(filters, fan_in);
    grad_bias = Matrix::Zero(filters, 1);
}

Matrix Conv1dLayer::im2col(const Matrix& input) const { return im2col_impl(input, width_); }

Matrix Conv1dLayer::forward(const Matrix& input) {
    if (input.rows() != in_channels_) throw std::invalid_argument("conv1d: channel mismatch");
    if (input.cols() < width_) throw std::invalid_argument("conv1d: signal shorter than kernel");
    input_length_ = input.cols();
    columns_ = im2col(input);
    return broadcast_add(weight * columns_, bias);
}

Matrix Conv1dLayer::backward(const Matrix& grad_output) {
    grad_weight += grad_output * columns_.transpose();
    grad_bias += grad_output.rowwise().sum();
    const Matrix d_col = weight.transpose() * grad_output;
    Matrix d_input = Matrix::Zero(in_channels_, input_length_);
    const Eigen::Index out_len = input_length_ - width_ + 1;
    for (int o = 0; o < width_; ++o)
        d_input.middleCols(o, out_len) +=
            d_col.middleRows(static_cast<Eigen::Index>(o) * in_channels_, in_channels_);
    return d_input;
}

std::vector<ParamRef> Conv1dLayer::parameters(const std::string& prefix) {
    return {{prefix + ".weight", &weight, &grad_weight}, {prefix + ".bias", &bias, &grad_bias}};
}

// ---------------------------------------------------------------------------
// MaxPool1d

Matrix MaxPool1d::forward(const Matrix& input) {
    input_length_ = input.cols();
    PoolResult result = maxpool1d(input, factor_);
    argmax_ = std::move(result.argmax);
    return std::move(result.output);
}

Matrix MaxPool1d::backward(const Matrix& grad_output) const {
    Matrix d_input = Matrix::Zero(argmax_.rows(), input_length_);
    for (Eigen::Index r = 0; r < grad_output.rows(); ++r)
        for (Eigen::Index m = 0; m < grad_output.cols(); ++m)
            d_input(r, argmax_(r, m)) += grad_output(r, m);
    return d_input;
}

// ---------------------------------------------------------------------------
// Dropout

Matrix Dropout::forward(const Matrix& input, bool training, Rng& rng) {
    if (p_ < 0.0 || p_ >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
    if (!training || p_ == 0.0) {
        mask_ = Matrix::Ones(input.rows(), input.cols());
        return input;
    }
    const double keep_scale = 1.0 / (1.0 - p_);
    mask_.resize(input.rows(), input.cols());
    for (Eigen::Index c = 0; c < input.cols(); ++c)
        for (Eigen::Index r = 0; r < input.rows(); ++r)
            mask_(r, c) = rng.uniform() >= p_ ? keep_scale : 0.0;
    return input.cwiseProduct(mask_);
}

Matrix Dropout::backward(const Matrix& grad_output) const { return grad_output.cwiseProduct(mask_); }

// ---------------------------------------------------------------------------
// Adam

void AdamState::init(const std::vector<ParamRef>& params) {
    first_moment.clear();
    second_moment.clear();
    for (const auto& p : params) {
        first_moment.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
        second_moment.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
    }
    step_count = 0;
}

void adam_step(const std::vector<ParamRef>& params, AdamState& state) {
    if (state.first_moment.size() != params.size()) throw std::invalid_argument("adam: state not initialized");
    for (const auto& p : params)
        if (!p.grad->allFinite()) throw std::runtime_error("diverged: non-finite gradient in " + p.name);

    ++state.step_count;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Matrix& g = *params[i].grad;
        Matrix& m = state.first_moment[i];
        Matrix& v = state.second_moment[i];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
        const Matrix m_hat = m / bc1;
        const Matrix v_hat = v / bc2;
        params[i].value->array() -= state.lr * m_hat.array() / (v_hat.array().sqrt() + state.eps);
    }
}

// ---------------------------------------------------------------------------
// Finite-difference verification

double grad_check(const std::function<double()>& loss, const std::function<void()>& compute_grads,
                  const std::vector<ParamRef>& params, double eps, int max_coords, Rng* rng) {
    compute_grads();

    struct Coord {
        std::size_t param;
        Eigen::Index index;
    };
    std::vector<Coord> coords;
    Eigen::Index total = 0;
    for (const auto& p : params) total += p.value->size();
    if (total <= max_coords) {
        for (std::size_t i = 0; i < params.size(); ++i)
            for (Eigen::Index j = 0; j < params[i].value->size(); ++j) coords.push_back({i, j});
    } else {
        Rng fallback(0x9d2c5680u);
        Rng& r = rng ? *rng : fallback;
        for (int k = 0; k < max_coords; ++k) {
            const auto pick = static_cast<Eigen::Index>(r.below(static_cast<std::uint64_t>(total)));
            Eigen::Index offset = pick;
            for (std::size_t i = 0; i < params.size(); ++i) {
                if (offset < params[i].value->size()) {
                    coords.push_back({i, offset});
                    break;
                }
                offset -= params[i].value->size();
            }
        }
    }

    double max_rel = 0.0;
    for (const Coord& c : coords) {
        double& value = (*params[c.param].value)(c.index);
        const double analytic = (*params[c.param].grad)(c.index);
        const double saved = value;
        value = saved + eps;
        const double loss_plus = loss();
        value = saved - eps;
        const double loss_minus = loss();
        value = saved;
        const double fd = (loss_plus - loss_minus) / (2.0 * eps);
        const double rel = std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-6});
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

}  // namespace espa::nn
