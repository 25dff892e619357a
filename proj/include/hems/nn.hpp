#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hems/core.hpp"

namespace hems {

enum class Activation { Relu, Tanh, Sigmoid, Identity };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// A differentiable map R^in -> R^out with a flat parameter vector.
class Model {
public:
    virtual ~Model() = default;
    virtual int input_size() const = 0;
    virtual int output_size() const = 0;
    virtual std::vector<double> forward(std::span<const double> x) const = 0;
    /// Adds dLoss/dparams for one sample given dLoss/dy; optionally also
    /// returns dLoss/dx (needed for policy gradients through a critic).
    virtual void accumulate_gradient(std::span<const double> x,
                                     std::span<const double> dy, std::span<double> grad,
                                     std::vector<double>* dx = nullptr) const = 0;
    virtual std::vector<double>& params() = 0;
    virtual const std::vector<double>& params() const = 0;
    virtual std::unique_ptr<Model> clone() const = 0;
};

/// Dense feed-forward stack.
class Mlp : public Model {
public:
    struct LayerSpec {
        int width = 0;
        Activation activation = Activation::Relu;
    };

    Mlp(int input, std::vector<LayerSpec> layers, std::uint64_t seed);

    int input_size() const override { return input_; }
    int output_size() const override;
    std::vector<double> forward(std::span<const double> x) const override;
    void accumulate_gradient(std::span<const double> x, std::span<const double> dy,
                             std::span<double> grad,
                             std::vector<double>* dx = nullptr) const override;
    std::vector<double>& params() override { return params_; }
    const std::vector<double>& params() const override { return params_; }
    std::unique_ptr<Model> clone() const override { return std::make_unique<Mlp>(*this); }

    const std::vector<LayerSpec>& layers() const { return layers_; }

private:
    int input_;
    std::vector<LayerSpec> layers_;
    std::vector<double> params_;
};

/// GRU layers unrolled over a fixed window, with a dense readout from the
/// final hidden state. Input is the flattened (window x features) sequence.
class GruStack : public Model {
public:
    GruStack(int features, int window, int num_layers, int hidden, int out,
             std::uint64_t seed);

    int input_size() const override { return features_ * window_; }
    int output_size() const override { return out_; }
    int window() const { return window_; }
    int hidden_size() const { return hidden_; }
    int num_layers() const { return layers_; }
    int features() const { return features_; }
    std::vector<double> forward(std::span<const double> x) const override;
    void accumulate_gradient(std::span<const double> x, std::span<const double> dy,
                             std::span<double> grad,
                             std::vector<double>* dx = nullptr) const override;
    std::vector<double>& params() override { return params_; }
    const std::vector<double>& params() const override { return params_; }
    std::unique_ptr<Model> clone() const override {
        return std::make_unique<GruStack>(*this);
    }

private:
    struct Trace;
    void run(std::span<const double> x, Trace* trace, std::vector<double>& out) const;

    int features_, window_, layers_, hidden_, out_;
    std::vector<double> params_;
};

struct AdamState {
    std::vector<double> m, v;
    long step = 0;
};

/// One Adam update with bias correction. Throws TrainingError on a
/// non-finite gradient.
void adam_step(std::vector<double>& params, std::span<const double> grads,
               AdamState& state, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

/// Per-feature affine standardizer fitted on training data.
struct Standardizer {
    std::vector<double> mean, std;
    void fit(const std::vector<std::vector<double>>& rows);
    std::vector<double> apply(std::span<const double> x) const;
    std::vector<double> invert(std::span<const double> z) const;
};

struct Dataset {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;
};

struct TrainOptions {
    int epochs = 100;
    int batch = 32;
    double lr = 1e-3;
    std::uint64_t seed = 0;
};

/// A model bundled with its input/output standardizers and optimizer state.
struct Network {
    std::unique_ptr<Model> model;
    Standardizer x_norm, y_norm;
    AdamState opt;
    std::uint64_t seed = 0;

    Network() = default;
    Network(const Network& o)
        : model(o.model ? o.model->clone() : nullptr),
          x_norm(o.x_norm), y_norm(o.y_norm), opt(o.opt), seed(o.seed) {}
    Network& operator=(const Network& o) {
        model = o.model ? o.model->clone() : nullptr;
        x_norm = o.x_norm;
        y_norm = o.y_norm;
        opt = o.opt;
        seed = o.seed;
        return *this;
    }
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    /// Standardized prediction in original target units.
    std::vector<double> predict(std::span<const double> x) const;
};

/// Minibatch MSE training with Adam; fits standardizers from the dataset
/// first. Returns per-epoch mean squared error (standardized units).
std::vector<double> train(Network& net, const Dataset& data, const TrainOptions& opts);

/// Max relative error between analytic and central finite-difference
/// gradients of the MSE loss at (x, target).
double grad_check(const Model& model, std::span<const double> x,
                  std::span<const double> target, double eps = 1e-5);

void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace hems
