#include "microdim/autoencoder.hpp"
#include "microdim/error.hpp"
#include "microdim/io.hpp"
#include "microdim/random.hpp"
#include "microdim/synthgen.hpp"

#include "gradient_oracle.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace microdim;
using namespace microdim::ae;

namespace {

StackedAEConfig toy_config() {
    StackedAEConfig c;
    c.input_dim = 6;
    c.hidden_dim = 4;
    c.bottleneck_dim = 2;
    c.seed = 11;
    return c;
}

Matrix random_batch(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform();
    }
    return m;
}

void randomize_biases(TrainedNetwork& net, std::uint64_t seed) {
    Rng rng(seed);
    for (auto& l : net.layers) {
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = rng.uniform(-0.5, 0.5);
    }
}

} // namespace

TEST_CASE("network shapes and forward pass") {
    const auto net = init_network(toy_config());
    CHECK(net.encoder1().weights.rows() == 4);
    CHECK(net.encoder1().weights.cols() == 6);
    CHECK(net.encoder2().out_dim() == 2);
    CHECK(net.decoder2().in_dim() == 2);
    CHECK(net.decoder1().out_dim() == 6);
    const Matrix x = random_batch(6, 3, 1);
    const auto r = forward(net, x.col(0));
    CHECK(r.latent.size() == 2);
    CHECK(r.reconstruction.size() == 6);
    CHECK(encode(net, x).cols() == 3);
    CHECK(reconstruct(net, x).col(0).isApprox(r.reconstruction));
    for (Eigen::Index i = 0; i < 6; ++i) CHECK((r.reconstruction(i) > 0 && r.reconstruction(i) < 1));
    CHECK(loss(net, x) >= 0.0);
    CHECK_THROWS_AS(forward(net, Vector::Zero(5)), ValidationError);
}

TEST_CASE("backprop agrees with finite differences") {
    auto net = init_network(toy_config());
    randomize_biases(net, 3);
    const Matrix batch = random_batch(6, 5, 2);
    CHECK(static_cast<double>(oracle::loss(oracle::widen(net), batch)) == doctest::Approx(loss(net, batch)).epsilon(1e-14));
    CHECK(oracle::gradient_check_error(net, batch) < 1e-5);
    CHECK(oracle::gradient_check_error(net, random_batch(6, 1, 9)) < 1e-5);
    for (std::uint64_t seed = 20; seed < 30; ++seed) {
        auto c = toy_config();
        c.seed = seed;
        auto other = init_network(c);
        randomize_biases(other, seed);
        CHECK(oracle::gradient_check_error(other, random_batch(6, 4, seed)) < 1e-5);
    }
}

TEST_CASE("a small step descends") {
    auto net = init_network(toy_config());
    randomize_biases(net, 4);
    const Matrix x = random_batch(6, 1, 5);
    const double before = loss(net, x);
    gradient_step(net, x, 1e-4);
    CHECK(loss(net, x) < before);
    CHECK_THROWS_AS(gradient_step(net, x, 0.0), ValidationError);
}

TEST_CASE("config validation and json") {
    auto c = toy_config();
    CHECK_NOTHROW(c.validate());
    CHECK(StackedAEConfig::from_json(c.to_json()).to_json() == c.to_json());
    c.bottleneck_dim = 4;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = toy_config();
    c.learning_rate = -1;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    CHECK(parse_optimizer("adam") == Optimizer::Adam);
    CHECK(parse_optimizer("sgd") == Optimizer::Momentum);
    CHECK_THROWS_AS(parse_optimizer("lbfgs"), ValidationError);
}

TEST_CASE("training is deterministic and lowers the loss") {
    synth::CircleSpec spec;
    spec.image_size = 16;
    spec.radius = 3;
    const auto ds = synth::gen_circles(spec, 80, 3);
    StackedAEConfig c;
    c.hidden_dim = 20;
    c.bottleneck_dim = 2;
    c.epochs_stage1 = 15;
    c.epochs_stage2 = 10;
    c.epochs_finetune = 15;
    c.seed = 2;
    const auto a = train_stacked(ds, c);
    const auto b = train_stacked(ds, c);
    REQUIRE(a.history.size() == 40);
    for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].loss == b.history[i].loss);
    CHECK(a.history[14].loss < a.history[0].loss);
    CHECK(a.history.back().stage == Stage::Finetune);
    CHECK(a.history.back().epoch == 15);

    c.optimizer = Optimizer::Adam;
    c.learning_rate = 1e-3;
    c.finetune_learning_rate = 1e-3;
    const auto adam = train_stacked(ds, c);
    CHECK(adam.history[14].loss < adam.history[0].loss);
}

TEST_CASE("diverging training raises a numerical error") {
    const Matrix data = random_batch(8, 20, 1);
    StackedAEConfig c;
    c.hidden_dim = 5;
    c.bottleneck_dim = 2;
    c.optimizer = Optimizer::Adam;
    c.learning_rate = 1e308;
    c.epochs_stage1 = 3;
    c.epochs_stage2 = 0;
    c.epochs_finetune = 0;
    CHECK_THROWS_AS(train_stacked(data, c), NumericalError);
}

TEST_CASE("model files round trip") {
    testutil::TempDir tmp("ae");
    auto net = init_network(toy_config());
    randomize_biases(net, 8);
    net.history = {{1, Stage::Stage1, 3.5}};
    save_model(net, tmp / "m.bin");
    const auto back = load_model(tmp / "m.bin");
    for (std::size_t l = 0; l < 4; ++l) {
        CHECK(back.layers[l].weights == net.layers[l].weights);
        CHECK(back.layers[l].bias == net.layers[l].bias);
    }
    CHECK(back.config.to_json() == net.config.to_json());

    auto bytes = io::read_file(tmp / "m.bin");
    bytes.resize(bytes.size() - 8);
    io::write_binary_atomic(tmp / "short.bin", bytes);
    CHECK_THROWS_AS(load_model(tmp / "short.bin"), ValidationError);
    CHECK_THROWS_AS(load_model(tmp / "missing.bin"), ValidationError);
}

TEST_CASE("latent export") {
    testutil::TempDir tmp("lat");
    synth::CircleSpec spec;
    spec.image_size = 16;
    spec.radius = 3;
    const auto ds = synth::gen_circles(spec, 30, 1);
    StackedAEConfig c;
    c.input_dim = ds.pixel_count();
    c.hidden_dim = 10;
    c.bottleneck_dim = 3;
    const auto net = init_network(c);
    const auto t = encode_dataset(net, ds, {"cy"});
    CHECK(t.latent.rows == 30);
    CHECK(t.latent.cols == 3);
    CHECK(t.features(4, 0) == ds.generator_coords(4, 1));
    CHECK_THROWS_AS(encode_dataset(net, ds, {"radius"}), ValidationError);

    write_latent_csv(t, tmp / "latent.csv");
    const auto csv = io::parse_csv(io::read_file(tmp / "latent.csv"));
    CHECK(csv.header == std::vector<std::string>{"index", "z1", "z2", "z3", "cy"});
    CHECK(csv.rows.size() == 30);

    write_loss_csv({{1, Stage::Stage1, 2.0}, {1, Stage::Finetune, 1.0}}, tmp / "loss.csv");
    const auto l = io::parse_csv(io::read_file(tmp / "loss.csv"));
    CHECK(l.header == std::vector<std::string>{"epoch", "stage", "loss"});
    CHECK(l.rows[1][1] == "finetune");
}
