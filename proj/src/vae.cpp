#include "nids/vae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "nids/errors.hpp"
#include "nids/rng.hpp"

namespace nids {

namespace {

constexpr const char* kVaeFormat = "vae-model/1";

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using WMap = Eigen::Map<RowMat>;
using WConstMap = Eigen::Map<const RowMat>;
using BMap = Eigen::Map<Eigen::VectorXd>;
using BConstMap = Eigen::Map<const Eigen::VectorXd>;

WConstMap weight(const VaeModel& m, const VaeModel::LayerSpec& l) {
    return WConstMap(m.params().data() + l.w_offset, l.out, l.in);
}

BConstMap bias(const VaeModel& m, const VaeModel::LayerSpec& l) {
    return BConstMap(m.params().data() + l.b_offset, l.out);
}

WMap grad_weight(Eigen::VectorXd& g, const VaeModel::LayerSpec& l) {
    return WMap(g.data() + l.w_offset, l.out, l.in);
}

BMap grad_bias(Eigen::VectorXd& g, const VaeModel::LayerSpec& l) {
    return BMap(g.data() + l.b_offset, l.out);
}

Eigen::MatrixXd affine(const VaeModel& m, const VaeModel::LayerSpec& l,
                       const Eigen::MatrixXd& input) {
    Eigen::MatrixXd out = input * weight(m, l).transpose();
    out.rowwise() += bias(m, l).transpose();
    return out;
}

struct ForwardCache {
    std::vector<Eigen::MatrixXd> enc_pre, enc_act;
    Eigen::MatrixXd mu, logvar, sigma, z;
    std::vector<Eigen::MatrixXd> dec_pre, dec_act;
    Eigen::MatrixXd out_pre, xhat;
};

// Layer indices into VaeModel::layers(): [0,E) encoder, E mu, E+1 logvar,
// [E+2, E+2+Dn) decoder hiddens, last = output.
ForwardCache forward_batch(const VaeModel& m, const Eigen::MatrixXd& X,
                           const Eigen::MatrixXd& noise) {
    const auto& layers = m.layers();
    const size_t E = m.encoder_layer_count();
    ForwardCache c;
    const Eigen::MatrixXd* cur = &X;
    for (size_t i = 0; i < E; ++i) {
        c.enc_pre.push_back(affine(m, layers[i], *cur));
        c.enc_act.push_back(c.enc_pre.back().cwiseMax(0.0));
        cur = &c.enc_act.back();
    }
    c.mu = affine(m, layers[E], *cur);
    c.logvar = affine(m, layers[E + 1], *cur);
    c.sigma = (0.5 * c.logvar).array().exp().matrix();
    c.z = c.mu + c.sigma.cwiseProduct(noise);

    cur = &c.z;
    const size_t dec_begin = E + 2;
    const size_t dec_count = layers.size() - dec_begin - 1;
    for (size_t i = 0; i < dec_count; ++i) {
        c.dec_pre.push_back(affine(m, layers[dec_begin + i], *cur));
        c.dec_act.push_back(c.dec_pre.back().cwiseMax(0.0));
        cur = &c.dec_act.back();
    }
    c.out_pre = affine(m, layers.back(), *cur);
    c.xhat = ((-c.out_pre).array().exp() + 1.0).inverse().matrix();
    return c;
}

LossParts loss_from_cache(const ForwardCache& c, const Eigen::MatrixXd& X, double kl_weight) {
    const double B = static_cast<double>(X.rows());
    const double D = static_cast<double>(X.cols());
    const double K = static_cast<double>(c.mu.cols());
    LossParts parts;
    parts.recon = (c.xhat - X).array().square().sum() / (B * D);
    parts.kl = -0.5 *
               (1.0 + c.logvar.array() - c.mu.array().square() - c.logvar.array().exp())
                   .sum() /
               (B * K);
    parts.total = parts.recon + kl_weight * parts.kl;
    return parts;
}

double population_std(std::span<const double> values, double mean) {
    double acc = 0.0;
    for (double v : values) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / static_cast<double>(values.size()));
}

}  // namespace

VaeModel::VaeModel(VaeArchitecture arch) : arch_(std::move(arch)) {
    if (arch_.input_dim < 1 || arch_.latent_dim < 1 || arch_.encoder_hidden.empty()) {
        throw DataError("VaeModel: invalid architecture");
    }
    for (int h : arch_.encoder_hidden) {
        if (h < 1) throw DataError("VaeModel: hidden width must be positive");
    }

    auto add_layer = [this](int in, int out, size_t& offset) {
        LayerSpec l;
        l.in = in;
        l.out = out;
        l.w_offset = offset;
        offset += static_cast<size_t>(in) * static_cast<size_t>(out);
        l.b_offset = offset;
        offset += static_cast<size_t>(out);
        layers_.push_back(l);
    };

    size_t offset = 0;
    int prev = arch_.input_dim;
    for (int h : arch_.encoder_hidden) {
        add_layer(prev, h, offset);
        prev = h;
    }
    add_layer(prev, arch_.latent_dim, offset);  // mu head
    add_layer(prev, arch_.latent_dim, offset);  // logvar head
    int dprev = arch_.latent_dim;
    for (int h : arch_.decoder_hidden()) {
        add_layer(dprev, h, offset);
        dprev = h;
    }
    add_layer(dprev, arch_.input_dim, offset);  // output
    params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

VaeModel init_params(const VaeArchitecture& arch, uint64_t seed) {
    VaeModel model(arch);
    Rng rng(derive_seed(seed, "vae-init"));
    for (const auto& layer : model.layers()) {
        const double bound =
            std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        double* w = model.params().data() + layer.w_offset;
        const size_t count = static_cast<size_t>(layer.in) * static_cast<size_t>(layer.out);
        for (size_t i = 0; i < count; ++i) {
            w[i] = rng.uniform(-bound, bound);
        }
        // biases stay zero
    }
    return model;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const VaeModel& model,
                                                   const Eigen::VectorXd& x) {
    if (x.size() != model.architecture().input_dim) {
        throw DataError("encode: input dimension mismatch");
    }
    const auto& layers = model.layers();
    const size_t E = model.encoder_layer_count();
    Eigen::MatrixXd cur = x.transpose();
    for (size_t i = 0; i < E; ++i) {
        cur = affine(model, layers[i], cur).cwiseMax(0.0);
    }
    Eigen::VectorXd mu = affine(model, layers[E], cur).row(0).transpose();
    Eigen::VectorXd logvar = affine(model, layers[E + 1], cur).row(0).transpose();
    return {std::move(mu), std::move(logvar)};
}

Eigen::VectorXd reparameterize(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar,
                               const Eigen::VectorXd& noise) {
    if (mu.size() != logvar.size() || mu.size() != noise.size()) {
        throw DataError("reparameterize: dimension mismatch");
    }
    return (mu.array() + (0.5 * logvar.array()).exp() * noise.array()).matrix();
}

Eigen::VectorXd decode(const VaeModel& model, const Eigen::VectorXd& z) {
    if (z.size() != model.architecture().latent_dim) {
        throw DataError("decode: latent dimension mismatch");
    }
    const auto& layers = model.layers();
    const size_t dec_begin = model.encoder_layer_count() + 2;
    Eigen::MatrixXd cur = z.transpose();
    for (size_t i = dec_begin; i + 1 < layers.size(); ++i) {
        cur = affine(model, layers[i], cur).cwiseMax(0.0);
    }
    Eigen::MatrixXd pre = affine(model, layers.back(), cur);
    return ((-pre.row(0).transpose()).array().exp() + 1.0).inverse().matrix();
}

LossParts vae_loss(const Eigen::VectorXd& x, const Eigen::VectorXd& xhat,
                   const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar, double kl_weight) {
    if (x.size() != xhat.size() || mu.size() != logvar.size()) {
        throw DataError("vae_loss: dimension mismatch");
    }
    LossParts parts;
    parts.recon = (xhat - x).squaredNorm() / static_cast<double>(x.size());
    parts.kl = -0.5 *
               (1.0 + logvar.array() - mu.array().square() - logvar.array().exp()).sum() /
               static_cast<double>(mu.size());
    parts.total = parts.recon + kl_weight * parts.kl;
    return parts;
}

LossParts vae_batch_loss(const VaeModel& model, const Eigen::MatrixXd& X,
                         const Eigen::MatrixXd& noise, double kl_weight) {
    if (X.cols() != model.architecture().input_dim ||
        noise.cols() != model.architecture().latent_dim || noise.rows() != X.rows()) {
        throw DataError("vae_batch_loss: dimension mismatch");
    }
    ForwardCache c = forward_batch(model, X, noise);
    return loss_from_cache(c, X, kl_weight);
}

LossParts vae_batch_backward(const VaeModel& model, const Eigen::MatrixXd& X,
                             const Eigen::MatrixXd& noise, double kl_weight,
                             Eigen::VectorXd& grads) {
    if (X.cols() != model.architecture().input_dim ||
        noise.cols() != model.architecture().latent_dim || noise.rows() != X.rows()) {
        throw DataError("vae_batch_backward: dimension mismatch");
    }
    const auto& layers = model.layers();
    const size_t E = model.encoder_layer_count();
    const size_t dec_begin = E + 2;
    const size_t dec_count = layers.size() - dec_begin - 1;

    ForwardCache c = forward_batch(model, X, noise);
    const LossParts parts = loss_from_cache(c, X, kl_weight);

    grads.setZero(static_cast<Eigen::Index>(model.param_count()));
    const double B = static_cast<double>(X.rows());
    const double D = static_cast<double>(X.cols());
    const double K = static_cast<double>(model.architecture().latent_dim);

    // output layer: d total / d xhat through the sigmoid
    Eigen::MatrixXd delta =
        ((2.0 / (B * D)) * (c.xhat - X).array() * c.xhat.array() * (1.0 - c.xhat.array()))
            .matrix();
    {
        const auto& l = layers.back();
        const Eigen::MatrixXd& input = dec_count > 0 ? c.dec_act.back() : c.z;
        grad_weight(grads, l).noalias() = delta.transpose() * input;
        grad_bias(grads, l) = delta.colwise().sum();
        delta = (delta * weight(model, l)).eval();
    }
    for (size_t i = dec_count; i-- > 0;) {
        delta = (delta.array() * (c.dec_pre[i].array() > 0.0).cast<double>()).matrix();
        const auto& l = layers[dec_begin + i];
        const Eigen::MatrixXd& input = i > 0 ? c.dec_act[i - 1] : c.z;
        grad_weight(grads, l).noalias() = delta.transpose() * input;
        grad_bias(grads, l) = delta.colwise().sum();
        delta = (delta * weight(model, l)).eval();
    }

    // delta now holds d total / d z
    Eigen::MatrixXd d_mu = delta + (kl_weight / (B * K)) * c.mu;
    Eigen::MatrixXd d_logvar =
        (delta.array() * noise.array() * 0.5 * c.sigma.array()).matrix() +
        (kl_weight * 0.5 / (B * K)) * (c.logvar.array().exp() - 1.0).matrix();

    const Eigen::MatrixXd& enc_top = c.enc_act.back();
    Eigen::MatrixXd d_enc;
    {
        const auto& lmu = layers[E];
        grad_weight(grads, lmu).noalias() = d_mu.transpose() * enc_top;
        grad_bias(grads, lmu) = d_mu.colwise().sum();
        d_enc = d_mu * weight(model, lmu);

        const auto& llv = layers[E + 1];
        grad_weight(grads, llv).noalias() = d_logvar.transpose() * enc_top;
        grad_bias(grads, llv) = d_logvar.colwise().sum();
        d_enc += d_logvar * weight(model, llv);
    }

    for (size_t i = E; i-- > 0;) {
        d_enc = (d_enc.array() * (c.enc_pre[i].array() > 0.0).cast<double>()).matrix();
        const auto& l = layers[i];
        const Eigen::MatrixXd& input = i > 0 ? c.enc_act[i - 1] : X;
        grad_weight(grads, l).noalias() = d_enc.transpose() * input;
        grad_bias(grads, l) = d_enc.colwise().sum();
        if (i > 0) {
            d_enc = (d_enc * weight(model, l)).eval();
        }
    }
    return parts;
}

std::vector<EpochStats> train_vae(VaeModel& model, const Eigen::MatrixXd& samples,
                                  const TrainConfig& config) {
    if (samples.rows() == 0) {
        throw DataError("train_vae: empty training set");
    }
    if (samples.cols() != model.architecture().input_dim) {
        throw DataError("train_vae: sample dimension mismatch");
    }
    if (config.batch_size < 1 || config.epochs < 0) {
        throw DataError("train_vae: invalid batch size or epoch count");
    }

    Rng shuffle_rng(derive_seed(config.seed, "vae-shuffle"));
    Rng noise_rng(derive_seed(config.seed, "vae-noise"));

    const size_t n = static_cast<size_t>(samples.rows());
    const int latent = model.architecture().latent_dim;
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});

    Eigen::VectorXd grads(model.param_count());
    Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.param_count()));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.param_count()));
    double beta1_t = 1.0;
    double beta2_t = 1.0;

    std::vector<EpochStats> history;
    history.reserve(static_cast<size_t>(config.epochs));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        EpochStats stats;
        for (size_t begin = 0; begin < n; begin += static_cast<size_t>(config.batch_size)) {
            const size_t b = std::min(static_cast<size_t>(config.batch_size), n - begin);
            Eigen::MatrixXd X(b, samples.cols());
            for (size_t r = 0; r < b; ++r) {
                X.row(static_cast<Eigen::Index>(r)) =
                    samples.row(static_cast<Eigen::Index>(order[begin + r]));
            }
            Eigen::MatrixXd noise(b, latent);
            for (size_t r = 0; r < b; ++r) {
                for (int k = 0; k < latent; ++k) {
                    noise(static_cast<Eigen::Index>(r), k) = noise_rng.normal();
                }
            }

            const LossParts parts = vae_batch_backward(model, X, noise, config.kl_weight, grads);
            if (!std::isfinite(parts.total)) {
                throw TrainError("train_vae: non-finite loss at epoch " +
                                 std::to_string(epoch + 1) + " (total=" +
                                 std::to_string(parts.total) + ")");
            }
            const double w = static_cast<double>(b) / static_cast<double>(n);
            stats.total += parts.total * w;
            stats.recon += parts.recon * w;
            stats.kl += parts.kl * w;

            grads += config.weight_decay * model.params();
            beta1_t *= config.beta1;
            beta2_t *= config.beta2;
            m = config.beta1 * m + (1.0 - config.beta1) * grads;
            v.array() = config.beta2 * v.array() + (1.0 - config.beta2) * grads.array().square();
            model.params().array() -=
                config.learning_rate * (m.array() / (1.0 - beta1_t)) /
                ((v.array() / (1.0 - beta2_t)).sqrt() + config.epsilon);
        }
        history.push_back(stats);
    }
    return history;
}

double reconstruction_error(const VaeModel& model, std::span<const double> x) {
    if (x.size() != static_cast<size_t>(model.architecture().input_dim)) {
        throw DataError("reconstruction_error: input dimension mismatch");
    }
    Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
    auto [mu, logvar] = encode(model, xv);
    Eigen::VectorXd xhat = decode(model, mu);  // latent mean, no sampling
    return (xhat - xv).squaredNorm() / static_cast<double>(xv.size());
}

AnomalyThreshold select_threshold(std::span<const double> train_losses, double k) {
    if (train_losses.empty()) {
        throw DataError("select_threshold: empty loss sequence");
    }
    AnomalyThreshold t;
    t.k = k;
    t.loss_mean = std::accumulate(train_losses.begin(), train_losses.end(), 0.0) /
                  static_cast<double>(train_losses.size());
    t.loss_std = population_std(train_losses, t.loss_mean);
    t.tau = t.loss_mean + k * t.loss_std;
    return t;
}

std::string VaeModel::to_json() const {
    nlohmann::json j;
    j["format"] = kVaeFormat;
    j["architecture"] = {{"input_dim", arch_.input_dim},
                         {"encoder_hidden", arch_.encoder_hidden},
                         {"latent_dim", arch_.latent_dim}};
    j["schema_fingerprint"] = schema_fingerprint;
    j["normalizer"] = {{"mins", normalizer.mins()}, {"maxs", normalizer.maxs()}};
    if (threshold) {
        j["threshold"] = {{"tau", threshold->tau},
                          {"loss_mean", threshold->loss_mean},
                          {"loss_std", threshold->loss_std},
                          {"k", threshold->k}};
    }
    std::vector<double> flat(params_.data(), params_.data() + params_.size());
    j["params"] = std::move(flat);
    return j.dump();
}

VaeModel VaeModel::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("vae model: invalid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kVaeFormat) {
            throw DataError("vae model: unsupported format '" +
                            j.at("format").get<std::string>() + "'");
        }
        VaeArchitecture arch;
        arch.input_dim = j.at("architecture").at("input_dim").get<int>();
        arch.encoder_hidden = j.at("architecture").at("encoder_hidden").get<std::vector<int>>();
        arch.latent_dim = j.at("architecture").at("latent_dim").get<int>();
        VaeModel model(arch);
        auto flat = j.at("params").get<std::vector<double>>();
        if (flat.size() != model.param_count()) {
            throw DataError("vae model: parameter count does not match architecture");
        }
        model.params() = Eigen::Map<const Eigen::VectorXd>(
            flat.data(), static_cast<Eigen::Index>(flat.size()));
        model.schema_fingerprint = j.at("schema_fingerprint").get<std::string>();
        model.normalizer = Normalizer(j.at("normalizer").at("mins").get<std::vector<double>>(),
                                      j.at("normalizer").at("maxs").get<std::vector<double>>());
        if (j.contains("threshold")) {
            AnomalyThreshold t;
            t.tau = j.at("threshold").at("tau").get<double>();
            t.loss_mean = j.at("threshold").at("loss_mean").get<double>();
            t.loss_std = j.at("threshold").at("loss_std").get<double>();
            t.k = j.at("threshold").at("k").get<double>();
            model.threshold = t;
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("vae model: malformed document: ") + e.what());
    }
}

void VaeModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write vae model '" + path + "'");
    out << to_json() << "\n";
}

VaeModel VaeModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open vae model '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

}  // namespace nids
