#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nids/features.hpp"

namespace nids {

// Fully connected VAE: ReLU hidden layers, linear mean/log-variance heads,
// sigmoid output. The decoder mirrors the encoder hidden widths.
struct VaeArchitecture {
    int input_dim = 69;
    std::vector<int> encoder_hidden = {512, 512, 1024};
    int latent_dim = 100;

    std::vector<int> decoder_hidden() const {
        return std::vector<int>(encoder_hidden.rbegin(), encoder_hidden.rend());
    }

    bool operator==(const VaeArchitecture&) const = default;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double weight_decay = 0.01;  // L2 term added to gradients before the Adam step
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 1024;
    int epochs = 20;
    double kl_weight = 0.01;
    uint64_t seed = 0;
};

struct AnomalyThreshold {
    double tau = 0.0;
    double loss_mean = 0.0;
    double loss_std = 0.0;  // population standard deviation
    double k = 1.0;
};

struct LossParts {
    double total = 0.0;
    double recon = 0.0;
    double kl = 0.0;
};

struct EpochStats {
    double total = 0.0;
    double recon = 0.0;
    double kl = 0.0;
};

// All parameters live in one flat vector (per layer: row-major weight matrix,
// then bias), which keeps the optimizer, serialization and finite-difference
// checks trivial. Layer order: encoder hiddens, mu head, logvar head, decoder
// hiddens, output.
class VaeModel {
public:
    struct LayerSpec {
        size_t w_offset = 0;
        size_t b_offset = 0;
        int in = 0;
        int out = 0;
    };

    explicit VaeModel(VaeArchitecture arch);  // zero-initialized (test hook)
    VaeModel() : VaeModel(VaeArchitecture{}) {}

    const VaeArchitecture& architecture() const { return arch_; }
    const std::vector<LayerSpec>& layers() const { return layers_; }
    size_t encoder_layer_count() const { return arch_.encoder_hidden.size(); }

    Eigen::VectorXd& params() { return params_; }
    const Eigen::VectorXd& params() const { return params_; }
    size_t param_count() const { return static_cast<size_t>(params_.size()); }

    // metadata carried with the artifact
    Normalizer normalizer;
    std::string schema_fingerprint;
    std::optional<AnomalyThreshold> threshold;

    std::string to_json() const;
    static VaeModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static VaeModel load(const std::string& path);

private:
    VaeArchitecture arch_;
    std::vector<LayerSpec> layers_;
    Eigen::VectorXd params_;
};

// Symmetric uniform fan-based initialization, biases zero.
VaeModel init_params(const VaeArchitecture& arch, uint64_t seed);

// Single-sample operations.
std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const VaeModel& model,
                                                   const Eigen::VectorXd& x);
Eigen::VectorXd reparameterize(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar,
                               const Eigen::VectorXd& noise);
Eigen::VectorXd decode(const VaeModel& model, const Eigen::VectorXd& z);

// recon = mean squared error over input dims; kl against the unit Gaussian,
// averaged over latent dims; total = recon + kl_weight * kl.
LossParts vae_loss(const Eigen::VectorXd& x, const Eigen::VectorXd& xhat,
                   const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar, double kl_weight);

// Batch loss with explicit noise (rows = samples), mean over the batch.
LossParts vae_batch_loss(const VaeModel& model, const Eigen::MatrixXd& X,
                         const Eigen::MatrixXd& noise, double kl_weight);

// Same forward pass plus analytic gradients of the mean total loss.
LossParts vae_batch_backward(const VaeModel& model, const Eigen::MatrixXd& X,
                             const Eigen::MatrixXd& noise, double kl_weight,
                             Eigen::VectorXd& grads);

// Minibatch Adam with L2 weight decay folded into the gradients. Returns
// per-epoch mean losses. Throws TrainError when the loss stops being finite.
std::vector<EpochStats> train_vae(VaeModel& model, const Eigen::MatrixXd& samples,
                                  const TrainConfig& config);

// Deterministic anomaly score: decode(encode(x).mu) vs x under per-dim MSE.
double reconstruction_error(const VaeModel& model, std::span<const double> x);

// tau = mean + k * population standard deviation of the given losses.
AnomalyThreshold select_threshold(std::span<const double> train_losses, double k = 1.0);

}  // namespace nids
