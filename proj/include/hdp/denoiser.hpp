#pragma once

#include "hdp/diffusion.hpp"
#include "hdp/rng.hpp"
#include "hdp/schedule.hpp"
#include "hdp/structured_prior.hpp"

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace hdp {

/// What the network head predicts. predict_data outputs the clean trajectory
/// estimate and reconstructs the reverse mean through the posterior
/// coefficients; predict_posterior outputs the reverse mean directly.
enum class Parameterization { predict_data, predict_posterior };

enum class CondMode { none, keystates };

Parameterization parameterization_from_string(const std::string& s);
std::string to_string(Parameterization p);

struct LinearLayer {
    Eigen::MatrixXd w;
    Eigen::VectorXd b;
};

/// Fully connected residual network over the flattened trajectory, a
/// sinusoidal embedding of the diffusion step, and an optional conditioning
/// vector. The conditioning channel always exists; unconditioned modes feed
/// zeros, so architectures are identical across ablation variants.
struct DenoiserParams {
    int data_dim = 0;
    int cond_dim = 0;
    int embed_dim = 0;
    int hidden_width = 0;
    int n_blocks = 0;

    LinearLayer input;                 ///< hidden x (data+embed+cond)
    std::vector<LinearLayer> blocks;   ///< hidden x hidden, residual
    LinearLayer output;                ///< data x hidden, zero-initialized

    /// Glorot-uniform hidden layers, zero output layer.
    static DenoiserParams init(int data_dim, int cond_dim, int embed_dim, int hidden_width,
                               int n_blocks, Rng& rng);

    int input_dim() const { return data_dim + embed_dim + cond_dim; }
    bool initialized() const { return data_dim > 0; }
    std::size_t param_count() const;

    Eigen::VectorXd flatten() const;
    void unflatten(const Eigen::VectorXd& flat);
};

/// Sinusoidal features of the (1-based) diffusion step index.
Eigen::VectorXd step_embedding(int step, int width);

/// Batched forward pass; one input per column.
Eigen::MatrixXd net_forward(const DenoiserParams& params, const Eigen::MatrixXd& inputs);

Eigen::VectorXd assemble_input(const DenoiserParams& params, const Eigen::VectorXd& tau_i,
                               int step, const Eigen::VectorXd& cond);

/// Reverse-process mean for one noisy trajectory.
Eigen::VectorXd predict_mean(const DenoiserParams& params, const Eigen::VectorXd& tau_i,
                             int step, const Eigen::VectorXd& cond,
                             const StructuredPrior& prior, const NoiseSchedule& sched,
                             Parameterization parameterization);

/// One training sample: clean stacked trajectory, conditioning vector
/// (possibly empty), and its task-conditioned prior.
struct TrainItem {
    Eigen::VectorXd tau0;
    Eigen::VectorXd cond;
    std::shared_ptr<const StructuredPrior> prior;
};

/// The randomness of one training step, drawn up front so losses and
/// gradients are deterministic functions of (params, items, draws).
struct BatchDraws {
    std::vector<int> steps;
    Eigen::MatrixXd noise;  ///< data_dim x batch
};

BatchDraws draw_batch(int n_items, Eigen::Index dim, const NoiseSchedule& sched, Rng& rng);

struct LossGrad {
    double loss = 0.0;
    DenoiserParams grads;  ///< same shapes as the parameters
};

/// Mahalanobis regression loss toward the true posterior mean, averaged over
/// the batch, with gradients from a full backward pass. Throws
/// DivergenceError if the loss is non-finite.
LossGrad loss_and_grad_fixed(const DenoiserParams& params, const std::vector<TrainItem>& items,
                             const BatchDraws& draws, const NoiseSchedule& sched,
                             Parameterization parameterization);

LossGrad loss_and_grad(const DenoiserParams& params, const std::vector<TrainItem>& items,
                       const NoiseSchedule& sched, Parameterization parameterization, Rng& rng);

struct TrainConfig {
    double learning_rate = 1e-3;
    double momentum = 0.9;
    double clip_norm = 10.0;
    int batch_size = 32;
    int total_steps = 8000;
    int log_every = 100;
    Parameterization parameterization = Parameterization::predict_data;
    CondMode cond_mode = CondMode::none;

    void validate() const;
};

struct TrainResult {
    DenoiserParams params;
    std::vector<std::pair<int, double>> loss_log;  ///< (step, batch loss)
};

/// Supplies the training sample at a dataset index: the provider owns prior
/// construction (typically through a GainCache) and conditioning assembly.
using ItemProvider = std::function<TrainItem(int sample_index)>;

/// SGD with momentum and global-norm gradient clipping. Deterministic for a
/// fixed seed. Throws DivergenceError when the loss exceeds 1000x the initial
/// loss or becomes non-finite.
TrainResult train(int dataset_size, const ItemProvider& provider, DenoiserParams params,
                  const TrainConfig& config, const NoiseSchedule& sched, Rng& rng);

}  // namespace hdp
