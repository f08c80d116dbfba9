#pragma once

#include "microdim/datamodel.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

// Stacked sigmoid autoencoder n -> h -> d -> h -> n.
// Batches are matrices with one sample per column.

namespace microdim::ae {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct LayerSpec {
    Matrix weights; ///< out_dim x in_dim
    Vector bias;

    std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
    std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }
};

enum class Optimizer { Momentum, Adam };
const char* to_string(Optimizer o);
Optimizer parse_optimizer(const std::string& name);

struct StackedAEConfig {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 100;
    std::size_t bottleneck_dim = 3;
    Optimizer optimizer = Optimizer::Momentum;
    double learning_rate = 0.1; ///< both pretraining stages
    double finetune_learning_rate = 0.001;
    double momentum = 0.9; ///< also Adam's first-moment decay
    double beta2 = 0.999; ///< Adam only
    double epsilon = 1e-8; ///< Adam only
    std::size_t batch_size = 32;
    /// Before each pretraining stage, set the decoder bias to the logit of the mean input.
    bool mean_output_bias = true;
    int epochs_stage1 = 200;
    int epochs_stage2 = 200;
    int epochs_finetune = 400;
    std::uint64_t seed = 0;

    /// Throws unless bottleneck < hidden < input and the schedule is sane.
    void validate() const;
    nlohmann::json to_json() const;
    static StackedAEConfig from_json(const nlohmann::json& j);
};

enum class Stage { Stage1 = 1, Stage2 = 2, Finetune = 3 };
const char* to_string(Stage s);

struct LossRecord {
    int epoch = 0; ///< 1-based within its stage
    Stage stage = Stage::Stage1;
    double loss = 0.0; ///< mean of the minibatch losses seen in the epoch
};

struct TrainedNetwork {
    StackedAEConfig config;
    /// encoder1 (n->h), encoder2 (h->d), decoder2 (d->h), decoder1 (h->n)
    std::array<LayerSpec, 4> layers;
    std::vector<LossRecord> history;

    LayerSpec& encoder1() { return layers[0]; }
    LayerSpec& encoder2() { return layers[1]; }
    LayerSpec& decoder2() { return layers[2]; }
    LayerSpec& decoder1() { return layers[3]; }
    const LayerSpec& encoder1() const { return layers[0]; }
    const LayerSpec& encoder2() const { return layers[1]; }
    const LayerSpec& decoder2() const { return layers[2]; }
    const LayerSpec& decoder1() const { return layers[3]; }
};

/// Glorot-uniform weights, zero biases.
TrainedNetwork init_network(const StackedAEConfig& cfg);

struct ForwardResult {
    Vector latent;
    Vector reconstruction;
};

ForwardResult forward(const TrainedNetwork& net, const Vector& x);
Matrix encode(const TrainedNetwork& net, const Matrix& batch);
Matrix reconstruct(const TrainedNetwork& net, const Matrix& batch);

/// Mean over the batch of 0.5 * ||x - x_hat||^2.
double loss(const TrainedNetwork& net, const Matrix& batch);

struct LayerGradient {
    Matrix weights;
    Vector bias;
};

/// Backprop gradients of `loss` for all four layers, in layer order.
std::array<LayerGradient, 4> gradients(const TrainedNetwork& net, const Matrix& batch);

/// One plain gradient-descent step on the full network.
void gradient_step(TrainedNetwork& net, const Matrix& batch, double lr);

/// Normalized images, one column per image.
Matrix dataset_matrix(const ImageDataset& ds);

using ProgressFn = std::function<void(const LossRecord&)>;

/// Layerwise pretraining of both stages followed by finetuning of the full net.
TrainedNetwork train_stacked(const Matrix& data, StackedAEConfig cfg, const ProgressFn& progress = {});
TrainedNetwork train_stacked(const ImageDataset& ds, StackedAEConfig cfg, const ProgressFn& progress = {});

struct LatentTable {
    RealMatrix latent; ///< one row per image
    std::vector<std::string> feature_names;
    RealMatrix features; ///< one row per image, may have zero columns
};

/// Latent codes joined with the named generator coordinates of `ds`.
LatentTable encode_dataset(const TrainedNetwork& net, const ImageDataset& ds,
                           const std::vector<std::string>& features = {});
/// Latent codes joined with explicitly supplied feature columns.
LatentTable encode_dataset(const TrainedNetwork& net, const ImageDataset& ds, const RealMatrix& features,
                           const std::vector<std::string>& feature_names);

/// CSV `index,z1..zd,<features>`.
void write_latent_csv(const LatentTable& table, const std::filesystem::path& path);
/// CSV `epoch,stage,loss`.
void write_loss_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path);

/// Text header, an `end_header` line, then little-endian float64 blocks (W row-major, then b) per layer.
void save_model(const TrainedNetwork& net, const std::filesystem::path& path);
TrainedNetwork load_model(const std::filesystem::path& path);

} // namespace microdim::ae
