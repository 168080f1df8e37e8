#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "espa/nn.hpp"
#include "espa/timeseries.hpp"

namespace espa {

/// Training and architecture knobs, defaulted to the evaluated configuration.
struct ForecastConfig {
    int seq_len = 24;
    int horizon = 1;
    int epochs = 10;
    int batch_size = 16;
    int hidden = 64;
    int layers = 2;
    double lr = 0.01;
    double dropout = 0.2;
    std::uint64_t seed = 0;
};

/**
 * Affine [0,1] scaler with an exact inverse. Falls back to a pure shift for
 * constant inputs (maps the constant to 0.5) so degenerate series still train.
 */
struct Scaler {
    double offset = 0.0;
    double scale = 1.0;

    static Scaler fit(const Eigen::VectorXd& values);
    double normalize(double x) const { return (x - offset) / scale; }
    double denormalize(double y) const { return y * scale + offset; }
    Eigen::VectorXd normalize(const Eigen::VectorXd& v) const {
        return ((v.array() - offset) / scale).matrix();
    }
};

/// Supervised next-step pairs: inputs column b holds window b (length L).
struct WindowSet {
    nn::Matrix inputs;          // seq_len x count
    Eigen::VectorXd targets;    // count
    Eigen::Index count() const { return targets.size(); }
};

/// Sliding windows with stride 1: pair count = n - seq_len.
WindowSet make_windows(const Eigen::VectorXd& values, int seq_len);

struct TrainLog {
    std::vector<double> epoch_mse;  // training MSE after each epoch, eval mode
    double train_seconds = 0.0;
};

/// Common surface of the window-based neural forecasters.
class Forecaster {
public:
    virtual ~Forecaster() = default;
    virtual std::string kind() const = 0;
    virtual int seq_len() const = 0;
    virtual const Scaler& scaler() const = 0;
    virtual Scaler& scaler() = 0;
    virtual double predict_next_normalized(const Eigen::VectorXd& window) const = 0;
    virtual std::vector<nn::ParamRef> parameters() = 0;
};

/// Stacked GRU with a single-unit dense head.
class GruForecaster final : public Forecaster {
public:
    GruForecaster(const ForecastConfig& cfg);

    std::string kind() const override { return "gru"; }
    int seq_len() const override { return cfg_.seq_len; }
    const Scaler& scaler() const override { return scaler_; }
    Scaler& scaler() override { return scaler_; }
    double predict_next_normalized(const Eigen::VectorXd& window) const override;
    std::vector<nn::ParamRef> parameters() override;

    const ForecastConfig& config() const { return cfg_; }

    /// Batch forward; columns are windows. Training mode caches for backward.
    nn::Matrix forward_batch(const nn::Matrix& windows, bool training);
    void backward_batch(const nn::Matrix& grad_predictions);

private:
    ForecastConfig cfg_;
    std::vector<nn::GruLayer> layers_;
    nn::DenseLayer head_;
    Rng dropout_rng_;
    std::vector<std::vector<nn::Matrix>> dropout_masks_;  // [gap][step]
    std::vector<std::vector<nn::Matrix>> layer_outputs_;  // post-dropout inputs per layer
};

/// Two conv(ReLU, pool 2, dropout) blocks, flatten, dense head.
class CnnForecaster final : public Forecaster {
public:
    CnnForecaster(const ForecastConfig& cfg, int filters = 64, int kernel_width = 3);

    std::string kind() const override { return "cnn"; }
    int seq_len() const override { return cfg_.seq_len; }
    const Scaler& scaler() const override { return scaler_; }
    Scaler& scaler() override { return scaler_; }
    double predict_next_normalized(const Eigen::VectorXd& window) const override;
    std::vector<nn::ParamRef> parameters() override;

    const ForecastConfig& config() const { return cfg_; }
    int filters() const { return filters_; }
    int kernel_width() const { return width_; }
    Eigen::Index flat_dim() const;

    nn::Matrix forward_batch(const nn::Matrix& windows, bool training);
    void backward_batch(const nn::Matrix& grad_predictions);

private:
    double forward_sample(const Eigen::VectorXd& window, bool training);
    void backward_sample(double grad_prediction);

    ForecastConfig cfg_;
    int filters_, width_;
    nn::Conv1dLayer conv1_, conv2_;
    nn::MaxPool1d pool1_{2}, pool2_{2};
    nn::Dropout drop1_, drop2_;
    nn::DenseLayer head_;
    Rng dropout_rng_;
    nn::Matrix relu1_, relu2_;        // cached activations for the current sample
    Eigen::VectorXd flat_;
    nn::Matrix batch_windows_;        // training batch replayed sample-by-sample
    std::vector<double> pending_grads_;
};

/// Trains on the (raw-scale) series; the scaler is fitted on it alone.
std::unique_ptr<GruForecaster> train_gru(const TimeSeries& train, const ForecastConfig& cfg,
                                         TrainLog* log = nullptr);
std::unique_ptr<CnnForecaster> train_cnn(const TimeSeries& train, const ForecastConfig& cfg,
                                         TrainLog* log = nullptr);

/// One epoch of sequential mini-batches; returns eval-mode MSE afterwards.
double train_epoch(Forecaster& model, const WindowSet& windows, nn::AdamState& adam, int batch_size);

/// Eval-mode MSE over a window set.
double evaluate_mse(Forecaster& model, const WindowSet& windows);

/**
 * Iterated single-step forecasting: each prediction is appended to the window
 * for the next step. Works on whatever scale `predict` expects.
 */
Eigen::VectorXd recursive_steps(const std::function<double(const Eigen::VectorXd&)>& predict,
                                Eigen::VectorXd window, int horizon);

/// Recursive multi-step forecast, denormalized to the original scale.
Eigen::VectorXd forecast_recursive(const Forecaster& model, const Eigen::VectorXd& normalized_window,
                                   int horizon);

/**
 * One-step-ahead walk-forward predictions for indices [n_train, n): each
 * prediction sees only earlier actual values. Returns original-scale values.
 */
Eigen::VectorXd walk_forward_predict(const Forecaster& model, const TimeSeries& full,
                                     Eigen::Index n_train);

/// Last-value persistence baseline over the same walk-forward protocol.
Eigen::VectorXd persistence_predict(const TimeSeries& full, Eigen::Index n_train);

}  // namespace espa
