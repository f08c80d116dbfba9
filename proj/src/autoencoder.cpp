#include "microdim/autoencoder.hpp"

#include "microdim/error.hpp"
#include "microdim/io.hpp"
#include "microdim/random.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

namespace microdim::ae {

void StackedAEConfig::validate() const {
    if (!(bottleneck_dim >= 1 && bottleneck_dim < hidden_dim && hidden_dim < input_dim)) {
        throw ValidationError("autoencoder needs 1 <= bottleneck < hidden < input (got " +
                              std::to_string(bottleneck_dim) + ", " + std::to_string(hidden_dim) + ", " +
                              std::to_string(input_dim) + ")");
    }
    if (!(learning_rate > 0.0) || !(finetune_learning_rate > 0.0) || !(momentum >= 0.0 && momentum < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
        !(epsilon > 0.0) || batch_size == 0) {
        throw ValidationError("autoencoder needs lr > 0, momentum and beta2 in [0,1), epsilon > 0, batch_size >= 1");
    }
    if (epochs_stage1 < 0 || epochs_stage2 < 0 || epochs_finetune < 0) {
        throw ValidationError("epoch counts must be non-negative");
    }
}

nlohmann::json StackedAEConfig::to_json() const {
    return {{"input_dim", input_dim},
            {"hidden_dim", hidden_dim},
            {"bottleneck_dim", bottleneck_dim},
            {"learning_rate", learning_rate},
            {"finetune_learning_rate", finetune_learning_rate},
            {"optimizer", to_string(optimizer)},
            {"momentum", momentum},
            {"beta2", beta2},
            {"epsilon", epsilon},
            {"batch_size", batch_size},
            {"mean_output_bias", mean_output_bias},
            {"epochs_stage1", epochs_stage1},
            {"epochs_stage2", epochs_stage2},
            {"epochs_finetune", epochs_finetune},
            {"seed", seed}};
}

StackedAEConfig StackedAEConfig::from_json(const nlohmann::json& j) {
    StackedAEConfig c;
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.bottleneck_dim = j.at("bottleneck_dim").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.finetune_learning_rate = j.at("finetune_learning_rate").get<double>();
    c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    c.momentum = j.at("momentum").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.mean_output_bias = j.at("mean_output_bias").get<bool>();
    c.epochs_stage1 = j.at("epochs_stage1").get<int>();
    c.epochs_stage2 = j.at("epochs_stage2").get<int>();
    c.epochs_finetune = j.at("epochs_finetune").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

const char* to_string(Optimizer o) { return o == Optimizer::Adam ? "adam" : "momentum"; }

Optimizer parse_optimizer(const std::string& name) {
    if (name == "adam") return Optimizer::Adam;
    if (name == "momentum" || name == "sgd") return Optimizer::Momentum;
    throw ValidationError("unknown optimizer '" + name + "' (expected momentum or adam)");
}

const char* to_string(Stage s) {
    switch (s) {
    case Stage::Stage1: return "stage1";
    case Stage::Stage2: return "stage2";
    case Stage::Finetune: return "finetune";
    }
    return "?";
}

namespace {

LayerSpec glorot_layer(std::size_t in, std::size_t out, Rng& rng) {
    LayerSpec l;
    l.weights.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    l.bias = Vector::Zero(static_cast<Eigen::Index>(out));
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    // fill row-major so the stream order matches the file layout
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = rng.uniform(-limit, limit);
    }
    return l;
}

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

Matrix activate(const LayerSpec& l, const Matrix& in) {
    Matrix z = l.weights * in;
    z.colwise() += l.bias;
    return sigmoid(z);
}

using Chain = std::vector<LayerSpec*>;

// acts[0] = input, acts[i + 1] = output of layer i
std::vector<Matrix> forward_chain(const Chain& chain, const Matrix& batch) {
    std::vector<Matrix> acts;
    acts.reserve(chain.size() + 1);
    acts.push_back(batch);
    for (const LayerSpec* l : chain) acts.push_back(activate(*l, acts.back()));
    return acts;
}

double reconstruction_loss(const Matrix& target, const Matrix& out) {
    return 0.5 * (out - target).squaredNorm() / static_cast<double>(target.cols());
}

// Returns the batch loss and fills `grads` (one per layer in `chain`).
double chain_gradients(const Chain& chain, const Matrix& batch, std::vector<LayerGradient>& grads) {
    const auto acts = forward_chain(chain, batch);
    const double n = static_cast<double>(batch.cols());
    grads.resize(chain.size());
    Matrix delta = ((acts.back() - batch).array() * acts.back().array() * (1.0 - acts.back().array())).matrix() / n;
    for (std::size_t i = chain.size(); i-- > 0;) {
        grads[i].weights.noalias() = delta * acts[i].transpose();
        grads[i].bias = delta.rowwise().sum();
        if (i > 0) {
            Matrix back = chain[i]->weights.transpose() * delta;
            delta = (back.array() * acts[i].array() * (1.0 - acts[i].array())).matrix();
        }
    }
    return reconstruction_loss(batch, acts.back());
}

bool all_finite(const std::vector<LayerGradient>& grads) {
    for (const auto& g : grads) {
        if (!g.weights.allFinite() || !g.bias.allFinite()) return false;
    }
    return true;
}

bool all_parameters_finite(const Chain& chain) {
    for (const auto* l : chain) {
        if (!l->weights.allFinite() || !l->bias.allFinite()) return false;
    }
    return true;
}

Chain full_chain(TrainedNetwork& net) { return {&net.layers[0], &net.layers[1], &net.layers[2], &net.layers[3]}; }

void train_chain(const Chain& chain, const Matrix& data, const StackedAEConfig& cfg, double lr, Stage stage,
                 int epochs, Rng& rng, std::vector<LossRecord>& history, const ProgressFn& progress) {
    std::vector<LayerGradient> velocity(chain.size()), second(chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) {
        velocity[i].weights = Matrix::Zero(chain[i]->weights.rows(), chain[i]->weights.cols());
        velocity[i].bias = Vector::Zero(chain[i]->bias.size());
        second[i] = velocity[i];
    }
    const bool adam = cfg.optimizer == Optimizer::Adam;
    long long step = 0;
    const std::size_t count = static_cast<std::size_t>(data.cols());
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<LayerGradient> grads;
    Matrix batch;

    for (int epoch = 1; epoch <= epochs; ++epoch) {
        for (std::size_t i = count; i > 1; --i) {
            std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);
        }
        double total = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < count; start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, count - start);
            batch.resize(data.rows(), static_cast<Eigen::Index>(len));
            for (std::size_t c = 0; c < len; ++c) batch.col(static_cast<Eigen::Index>(c)) = data.col(static_cast<Eigen::Index>(order[start + c]));
            const double l = chain_gradients(chain, batch, grads);
            if (!std::isfinite(l) || !all_finite(grads)) {
                throw NumericalError(std::string("autoencoder training diverged in ") + to_string(stage) +
                                     " epoch " + std::to_string(epoch) + "; lower the learning rate");
            }
            ++step;
            if (adam) {
                const double b1 = cfg.momentum, b2 = cfg.beta2;
                const double lr_t = lr * std::sqrt(1.0 - std::pow(b2, static_cast<double>(step))) /
                                    (1.0 - std::pow(b1, static_cast<double>(step)));
                for (std::size_t i = 0; i < chain.size(); ++i) {
                    velocity[i].weights = b1 * velocity[i].weights + (1.0 - b1) * grads[i].weights;
                    velocity[i].bias = b1 * velocity[i].bias + (1.0 - b1) * grads[i].bias;
                    second[i].weights = b2 * second[i].weights + (1.0 - b2) * grads[i].weights.cwiseAbs2();
                    second[i].bias = b2 * second[i].bias + (1.0 - b2) * grads[i].bias.cwiseAbs2();
                    chain[i]->weights.array() -= lr_t * velocity[i].weights.array() / (second[i].weights.array().sqrt() + cfg.epsilon);
                    chain[i]->bias.array() -= lr_t * velocity[i].bias.array() / (second[i].bias.array().sqrt() + cfg.epsilon);
                }
            } else {
                for (std::size_t i = 0; i < chain.size(); ++i) {
                    velocity[i].weights = cfg.momentum * velocity[i].weights - lr * grads[i].weights;
                    velocity[i].bias = cfg.momentum * velocity[i].bias - lr * grads[i].bias;
                    chain[i]->weights += velocity[i].weights;
                    chain[i]->bias += velocity[i].bias;
                }
            }
            if (!all_parameters_finite(chain)) {
                throw NumericalError(std::string("autoencoder weights overflowed in ") + to_string(stage) + " epoch " +
                                     std::to_string(epoch) + "; lower the learning rate");
            }
            total += l;
            ++batches;
        }
        LossRecord rec{epoch, stage, total / static_cast<double>(batches)};
        history.push_back(rec);
        if (progress) progress(rec);
    }
}

// Output bias that makes an untrained decoder reproduce the mean input.
Vector mean_logit(const Matrix& data) {
    Vector m = data.rowwise().mean();
    return m.unaryExpr([](double v) {
        const double c = std::clamp(v, 1e-3, 1.0 - 1e-3);
        return std::log(c / (1.0 - c));
    });
}

} // namespace

TrainedNetwork init_network(const StackedAEConfig& cfg) {
    cfg.validate();
    TrainedNetwork net;
    net.config = cfg;
    Rng rng(cfg.seed);
    net.layers[0] = glorot_layer(cfg.input_dim, cfg.hidden_dim, rng);
    net.layers[1] = glorot_layer(cfg.hidden_dim, cfg.bottleneck_dim, rng);
    net.layers[2] = glorot_layer(cfg.bottleneck_dim, cfg.hidden_dim, rng);
    net.layers[3] = glorot_layer(cfg.hidden_dim, cfg.input_dim, rng);
    return net;
}

ForwardResult forward(const TrainedNetwork& net, const Vector& x) {
    if (static_cast<std::size_t>(x.size()) != net.encoder1().in_dim()) {
        throw ValidationError("input has " + std::to_string(x.size()) + " entries, network expects " +
                              std::to_string(net.encoder1().in_dim()));
    }
    ForwardResult r;
    const Matrix h = activate(net.encoder1(), x);
    const Matrix z = activate(net.encoder2(), h);
    r.latent = z.col(0);
    r.reconstruction = activate(net.decoder1(), activate(net.decoder2(), z)).col(0);
    return r;
}

Matrix encode(const TrainedNetwork& net, const Matrix& batch) {
    if (static_cast<std::size_t>(batch.rows()) != net.encoder1().in_dim()) {
        throw ValidationError("input dimension does not match network");
    }
    return activate(net.encoder2(), activate(net.encoder1(), batch));
}

Matrix reconstruct(const TrainedNetwork& net, const Matrix& batch) {
    return activate(net.decoder1(), activate(net.decoder2(), encode(net, batch)));
}

double loss(const TrainedNetwork& net, const Matrix& batch) {
    if (batch.cols() == 0) throw ValidationError("loss of an empty batch");
    return reconstruction_loss(batch, reconstruct(net, batch));
}

std::array<LayerGradient, 4> gradients(const TrainedNetwork& net, const Matrix& batch) {
    if (static_cast<std::size_t>(batch.rows()) != net.encoder1().in_dim()) {
        throw ValidationError("input dimension does not match network");
    }
    auto& mut = const_cast<TrainedNetwork&>(net); // chain pointers are only read
    std::vector<LayerGradient> grads;
    chain_gradients(full_chain(mut), batch, grads);
    return {grads[0], grads[1], grads[2], grads[3]};
}

void gradient_step(TrainedNetwork& net, const Matrix& batch, double lr) {
    if (!(lr > 0.0)) throw ValidationError("learning rate must be > 0");
    const auto grads = gradients(net, batch);
    for (const auto& g : grads) {
        if (!g.weights.allFinite() || !g.bias.allFinite()) {
            throw NumericalError("non-finite gradient; lower the learning rate");
        }
    }
    for (std::size_t i = 0; i < 4; ++i) {
        net.layers[i].weights -= lr * grads[i].weights;
        net.layers[i].bias -= lr * grads[i].bias;
    }
}

Matrix dataset_matrix(const ImageDataset& ds) {
    const auto n = static_cast<Eigen::Index>(ds.pixel_count());
    Matrix m(n, static_cast<Eigen::Index>(ds.count()));
    const double scale = 1.0 / static_cast<double>(ds.max_value());
    for (std::size_t i = 0; i < ds.count(); ++i) {
        const auto img = ds.image(i);
        for (Eigen::Index p = 0; p < n; ++p) m(p, static_cast<Eigen::Index>(i)) = img.pixels[static_cast<std::size_t>(p)] * scale;
    }
    return m;
}

TrainedNetwork train_stacked(const Matrix& data, StackedAEConfig cfg, const ProgressFn& progress) {
    cfg.input_dim = static_cast<std::size_t>(data.rows());
    if (data.cols() == 0) throw ValidationError("cannot train on an empty dataset");
    TrainedNetwork net = init_network(cfg);
    // batch order stream is separate from the weight init stream
    Rng rng = Rng::substream(cfg.seed, 1);

    if (cfg.mean_output_bias) net.decoder1().bias = mean_logit(data);
    train_chain({&net.layers[0], &net.layers[3]}, data, cfg, cfg.learning_rate, Stage::Stage1, cfg.epochs_stage1, rng, net.history,
                progress);
    const Matrix codes = activate(net.encoder1(), data);
    if (cfg.mean_output_bias) net.decoder2().bias = mean_logit(codes);
    train_chain({&net.layers[1], &net.layers[2]}, codes, cfg, cfg.learning_rate, Stage::Stage2, cfg.epochs_stage2, rng, net.history,
                progress);
    train_chain(full_chain(net), data, cfg, cfg.finetune_learning_rate, Stage::Finetune, cfg.epochs_finetune, rng, net.history, progress);
    return net;
}

TrainedNetwork train_stacked(const ImageDataset& ds, StackedAEConfig cfg, const ProgressFn& progress) {
    return train_stacked(dataset_matrix(ds), cfg, progress);
}

LatentTable encode_dataset(const TrainedNetwork& net, const ImageDataset& ds, const RealMatrix& features,
                           const std::vector<std::string>& feature_names) {
    if (features.cols != feature_names.size()) {
        throw ValidationError("feature names do not match feature columns");
    }
    if (features.cols > 0 && features.rows != ds.count()) {
        throw ValidationError("feature table has " + std::to_string(features.rows) + " rows, dataset has " +
                              std::to_string(ds.count()) + " images");
    }
    const Matrix z = encode(net, dataset_matrix(ds));
    LatentTable t;
    t.latent = RealMatrix(ds.count(), static_cast<std::size_t>(z.rows()));
    for (std::size_t i = 0; i < ds.count(); ++i) {
        for (std::size_t j = 0; j < t.latent.cols; ++j) t.latent(i, j) = z(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
    }
    t.feature_names = feature_names;
    t.features = features.cols > 0 ? features : RealMatrix(ds.count(), 0);
    return t;
}

LatentTable encode_dataset(const TrainedNetwork& net, const ImageDataset& ds, const std::vector<std::string>& features) {
    RealMatrix cols(ds.count(), features.size());
    for (std::size_t f = 0; f < features.size(); ++f) {
        const auto it = std::find(ds.coord_names.begin(), ds.coord_names.end(), features[f]);
        if (it == ds.coord_names.end() || !ds.has_coords()) {
            throw ValidationError("dataset has no generator coordinate named '" + features[f] + "'");
        }
        const auto c = static_cast<std::size_t>(it - ds.coord_names.begin());
        for (std::size_t i = 0; i < ds.count(); ++i) cols(i, f) = ds.generator_coords(i, c);
    }
    return encode_dataset(net, ds, cols, features);
}

void write_latent_csv(const LatentTable& table, const std::filesystem::path& path) {
    std::vector<std::string> header{"index"};
    for (std::size_t j = 0; j < table.latent.cols; ++j) header.push_back("z" + std::to_string(j + 1));
    header.insert(header.end(), table.feature_names.begin(), table.feature_names.end());
    io::CsvWriter csv(header);
    for (std::size_t i = 0; i < table.latent.rows; ++i) {
        csv.cell(i);
        for (double v : table.latent.row(i)) csv.cell(v);
        for (std::size_t f = 0; f < table.features.cols; ++f) csv.cell(table.features(i, f));
        csv.end_row();
    }
    csv.save(path);
}

void write_loss_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path) {
    io::CsvWriter csv({"epoch", "stage", "loss"});
    for (const auto& r : history) csv.cell(r.epoch).cell(std::string_view(to_string(r.stage))).cell(r.loss).end_row();
    csv.save(path);
}

namespace {

constexpr std::string_view kHeaderEnd = "end_header\n";

void append_le(std::string& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

double read_le(const std::string& in, std::size_t pos) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
    return std::bit_cast<double>(bits);
}

} // namespace

void save_model(const TrainedNetwork& net, const std::filesystem::path& path) {
    nlohmann::json header;
    header["format"] = "microdim-stacked-ae";
    header["activation"] = "sigmoid";
    header["dims"] = {net.config.input_dim, net.config.hidden_dim, net.config.bottleneck_dim,
                      net.config.hidden_dim, net.config.input_dim};
    header["seed"] = net.config.seed;
    header["hyperparameters"] = net.config.to_json();
    header["layer_order"] = {"encoder1", "encoder2", "decoder2", "decoder1"};
    std::string out = header.dump(2) + "\n";
    out += kHeaderEnd;
    for (const auto& l : net.layers) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) append_le(out, l.weights(r, c));
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) append_le(out, l.bias(r));
    }
    io::write_binary_atomic(path, out);
}

TrainedNetwork load_model(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) {
        throw ValidationError("no trained model at " + path.string());
    }
    const std::string bytes = io::read_file(path);
    const auto marker = bytes.find(std::string("\n") + std::string(kHeaderEnd));
    if (marker == std::string::npos) throw ValidationError("model file has no header terminator: " + path.string());
    TrainedNetwork net;
    try {
        const auto header = nlohmann::json::parse(bytes.substr(0, marker));
        net.config = StackedAEConfig::from_json(header.at("hyperparameters"));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed model header in " + path.string() + ": " + e.what());
    }
    net.config.validate();
    const auto& c = net.config;
    const std::array<std::pair<std::size_t, std::size_t>, 4> shapes{
        {{c.hidden_dim, c.input_dim}, {c.bottleneck_dim, c.hidden_dim}, {c.hidden_dim, c.bottleneck_dim}, {c.input_dim, c.hidden_dim}}};
    std::size_t pos = marker + 1 + kHeaderEnd.size();
    std::size_t needed = 0;
    for (const auto& [o, i] : shapes) needed += (o * i + o) * 8;
    if (bytes.size() - pos != needed) {
        throw ValidationError("model file " + path.string() + " has " + std::to_string(bytes.size() - pos) +
                              " weight bytes, expected " + std::to_string(needed));
    }
    for (std::size_t k = 0; k < 4; ++k) {
        auto& l = net.layers[k];
        const auto [o, i] = shapes[k];
        l.weights.resize(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i));
        l.bias.resize(static_cast<Eigen::Index>(o));
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index cc = 0; cc < l.weights.cols(); ++cc, pos += 8) l.weights(r, cc) = read_le(bytes, pos);
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r, pos += 8) l.bias(r) = read_le(bytes, pos);
    }
    return net;
}

} // namespace microdim::ae
