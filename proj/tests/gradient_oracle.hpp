#pragma once
// Independent finite-difference oracle for the autoencoder. The forward pass is
// re-implemented in long double so central differences with a 1e-5 step are not
// swamped by rounding when a gradient entry is tiny.

#include "microdim/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

struct LayerLD {
    std::size_t rows = 0, cols = 0;
    std::vector<long double> w, b;
};

inline std::vector<LayerLD> widen(const microdim::ae::TrainedNetwork& net) {
    std::vector<LayerLD> out;
    for (const auto& l : net.layers) {
        LayerLD x;
        x.rows = static_cast<std::size_t>(l.weights.rows());
        x.cols = static_cast<std::size_t>(l.weights.cols());
        for (std::size_t i = 0; i < x.rows; ++i) {
            for (std::size_t j = 0; j < x.cols; ++j) x.w.push_back(l.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            x.b.push_back(l.bias(static_cast<Eigen::Index>(i)));
        }
        out.push_back(std::move(x));
    }
    return out;
}

// 0.5 * mean over samples of the squared reconstruction error
inline long double loss(const std::vector<LayerLD>& layers, const microdim::ae::Matrix& batch) {
    long double total = 0.0L;
    for (Eigen::Index s = 0; s < batch.cols(); ++s) {
        std::vector<long double> a(static_cast<std::size_t>(batch.rows()));
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = batch(static_cast<Eigen::Index>(i), s);
        for (const auto& l : layers) {
            std::vector<long double> next(l.rows);
            for (std::size_t i = 0; i < l.rows; ++i) {
                long double z = l.b[i];
                for (std::size_t j = 0; j < l.cols; ++j) z += l.w[i * l.cols + j] * a[j];
                next[i] = 1.0L / (1.0L + std::exp(-z));
            }
            a = std::move(next);
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            const long double d = a[i] - batch(static_cast<Eigen::Index>(i), s);
            total += d * d;
        }
    }
    return 0.5L * total / static_cast<long double>(batch.cols());
}

// Max relative error of backprop against central differences over every parameter.
inline double gradient_check_error(const microdim::ae::TrainedNetwork& net, const microdim::ae::Matrix& batch,
                                   long double h = 1e-5L) {
    const auto grads = microdim::ae::gradients(net, batch);
    auto layers = widen(net);
    double worst = 0.0;
    auto compare = [&](long double& param, double analytic) {
        const long double keep = param;
        param = keep + h;
        const long double up = loss(layers, batch);
        param = keep - h;
        const long double down = loss(layers, batch);
        param = keep;
        const double numeric = static_cast<double>((up - down) / (2.0L * h));
        const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
        worst = std::max(worst, std::abs(analytic - numeric) / scale);
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& layer = layers[l];
        for (std::size_t i = 0; i < layer.rows; ++i) {
            for (std::size_t j = 0; j < layer.cols; ++j) {
                compare(layer.w[i * layer.cols + j],
                        grads[l].weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            }
            compare(layer.b[i], grads[l].bias(static_cast<Eigen::Index>(i)));
        }
    }
    return worst;
}

} // namespace oracle
