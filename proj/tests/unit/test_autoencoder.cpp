#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "exmo/autoencoder.hpp"
#include "exmo/data.hpp"
#include "exmo/errors.hpp"
#include "exmo/model_io.hpp"
#include "exmo/synthcam.hpp"
#include "exmo/train.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace exmo;
using testing_support::TempDir;

namespace {

NetworkConfig small_config(int base = 8, int size = 32, std::uint64_t seed = 11) {
  NetworkConfig c;
  c.base_channels = base;
  c.input_size = size;
  c.seed = seed;
  return c;
}

Tensor random_stack(int size, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  Tensor t({kStackFrames, size, size});
  for (auto& v : t.values()) v = d(g);
  return t;
}

FrameSequence moving_clip(double velocity, int size, int frames, std::uint64_t seed) {
  SynthSpec s;
  s.texture = Texture::noise;
  s.velocity = velocity;
  s.size = size;
  s.n_frames = frames;
  s.cell = 8;
  s.seed = seed;
  return generate(s);
}

double stack_loss(const Model& m, const Tensor& stack) {
  const std::vector<Tensor> in{stack}, out{forward(m, stack)};
  return euclidean_loss<float>(std::span<const Tensor>(in), std::span<const Tensor>(out));
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("build") {
  TEST_CASE("base 16 ladder") {
    const auto ladder = encoder_ladder(NetworkConfig{});
    REQUIRE(ladder.size() == 5);
    const int channels[] = {16, 32, 64, 128, 256}, sizes[] = {64, 32, 16, 8, 4};
    for (int k = 0; k < 5; ++k) {
      CHECK(ladder[k].channels == channels[k]);
      CHECK(ladder[k].size == sizes[k]);
    }
  }

  TEST_CASE("layer shapes follow the pyramid") {
    const auto m = build<float>(NetworkConfig{});
    REQUIRE(m.layers.size() == Model::kLayerCount);
    for (int k = 1; k <= 5; ++k) {
      const int in = k == 1 ? 5 : 16 << (k - 2);
      CHECK(m.encoder(k).weights.shape() == Shape{16 << (k - 1), in, 3, 3});
      const int dec_in = k == 5 ? 256 : 2 * (16 << k);
      CHECK(m.decoder(k).weights.shape() == Shape{16 << (k - 1), dec_in, 3, 3});
    }
    CHECK(m.head().weights.shape() == Shape{5, 32, 3, 3});
  }

  TEST_CASE("same seed gives identical weights, different seed does not") {
    CHECK(build<float>(small_config()) == build<float>(small_config()));
    CHECK_FALSE(build<float>(small_config(8, 32, 1)) == build<float>(small_config(8, 32, 2)));
  }

  TEST_CASE("initialisation is fan-in scaled uniform with zero biases") {
    const auto m = build<double>(NetworkConfig{});
    for (const auto& l : m.layers) {
      const double bound = std::sqrt(6.0 / (l.in_channels() * 9));
      double max_abs = 0.0;
      for (double w : l.weights.values()) max_abs = std::max(max_abs, std::abs(w));
      CHECK(max_abs <= bound);
      CHECK(max_abs > 0.8 * bound);
      for (double b : l.bias.values()) CHECK(b == 0.0);
    }
  }

  TEST_CASE("base 1 builds and runs") {
    const auto m = build<float>(small_config(1, 32));
    CHECK(forward(m, random_stack(32, 1)).shape() == Shape{5, 32, 32});
  }

  TEST_CASE("invalid configs are argument errors") {
    CHECK_THROWS_AS(build<float>(small_config(0)), ArgumentError);
    CHECK_THROWS_AS(build<float>(small_config(8, 48)), ArgumentError);
    auto c = small_config();
    c.input_frames = 4;
    CHECK_THROWS_AS(build<float>(c), ArgumentError);
  }
}

TEST_SUITE("forward") {
  TEST_CASE("full-size shapes and output range") {
    NetworkConfig c;
    c.seed = 5;
    const auto m = build<float>(c);
    ForwardTrace<float> trace;
    const auto out = forward(m, random_stack(128, 2), &trace);
    CHECK(out.shape() == Shape{5, 128, 128});
    CHECK(trace.bottleneck.shape() == Shape{256, 4, 4});
    for (int k = 0; k < 5; ++k) CHECK(trace.skip[k].shape() == Shape{16 << k, 128 >> k, 128 >> k});
    for (float v : out.values()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }

  TEST_CASE("decoder mirrors the encoder") {
    const auto m = build<float>(small_config(4, 64));
    ForwardTrace<float> trace;
    forward(m, random_stack(64, 3), &trace);
    REQUIRE(trace.decoder_out.size() == 5);
    // decoder_out is deepest first: stage 5 produces E_5's geometry.
    for (int i = 0; i < 5; ++i) CHECK(trace.decoder_out[i].shape() == trace.skip[4 - i].shape());
  }

  TEST_CASE("wrong input shape is a shape error") {
    const auto m = build<float>(small_config());
    CHECK_THROWS_AS(forward(m, random_stack(64, 1)), ShapeError);
    CHECK_THROWS_AS(forward(m, Tensor({4, 32, 32})), ShapeError);
  }

  TEST_CASE("repeated forward passes are bit-identical") {
    const auto m = build<float>(small_config());
    const auto x = random_stack(32, 4);
    CHECK(forward(m, x) == forward(m, x));
  }
}

TEST_SUITE("backward") {
  TEST_CASE("end-to-end gradient of 20 random weights matches finite differences") {
    auto m = build<double>(small_config(2, 32, 21));
    std::mt19937_64 g(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& l : m.layers)
      for (auto& b : l.bias.values()) b = 0.05 + 0.1 * u(g);
    TensorD x({5, 32, 32}), target({5, 32, 32});
    for (auto& v : x.values()) v = u(g);
    for (auto& v : target.values()) v = u(g);

    auto loss = [&] {
      const TensorD out = forward(m, x);
      double s = 0;
      for (std::size_t i = 0; i < out.size(); ++i) s += (out[i] - target[i]) * (out[i] - target[i]);
      return 0.5 * s;
    };
    ForwardTrace<double> trace;
    const TensorD out = forward(m, x, &trace);
    TensorD grad_out(out.shape());
    for (std::size_t i = 0; i < out.size(); ++i) grad_out[i] = out[i] - target[i];
    const auto grads = backward(m, trace, grad_out);

    oracle::Vec analytic, numeric;
    for (int k = 0; k < 20; ++k) {
      const std::size_t layer = g() % m.layers.size();
      auto& w = m.layers[layer].weights;
      const std::size_t i = g() % w.size();
      const double saved = w[i];
      w[i] = saved + 1e-6;
      const double up = loss();
      w[i] = saved - 1e-6;
      const double down = loss();
      w[i] = saved;
      numeric.push_back((up - down) / 2e-6);
      analytic.push_back(grads[layer].weights[i]);
    }
    CHECK(oracle::max_relative_error(analytic, numeric, 1e-7) < 1e-3);
  }

  TEST_CASE("gradients are finite for finite inputs") {
    const auto m = build<float>(small_config());
    ForwardTrace<float> trace;
    const auto x = random_stack(32, 9);
    const auto out = forward(m, x, &trace);
    for (const auto& g : backward(m, trace, euclidean_loss_gradient(x, out, 1))) {
      CHECK(all_finite<float>(g.weights.values()));
      CHECK(all_finite<float>(g.bias.values()));
    }
  }
}

TEST_SUITE("train") {
  TEST_CASE("zero learning rate keeps weights and loss constant") {
    auto m = build<float>(small_config());
    const auto before = m.layers;
    StackList data;
    for (int i = 0; i < 4; ++i) data.items().push_back({random_stack(32, 100 + i), {"r", i + 1, 1}});
    TrainPlan plan;
    plan.epochs = 3;
    plan.batch_size = 4;
    plan.adam.learning_rate = 0.0;
    const auto r = train(m, data, plan);
    REQUIRE(r.losses.size() == 3);
    CHECK(r.losses[0] == r.losses[1]);
    CHECK(r.losses[1] == r.losses[2]);
    CHECK(m.layers == before);
  }

  TEST_CASE("identical seeds give identical histories and weights") {
    StackDataset data(32);
    data.add(moving_clip(1.0, 32, 12, 3));
    TrainPlan plan;
    plan.epochs = 2;
    plan.batch_size = 3;
    plan.shuffle_seed = 42;
    auto a = build<float>(small_config()), b = build<float>(small_config());
    const auto ra = train(a, data, plan), rb = train(b, data, plan);
    CHECK(ra.losses == rb.losses);
    CHECK(a == b);
    CHECK(a.metadata.loss_history == ra.losses);
    CHECK(a.metadata.epochs_seen == 2);
    CHECK(a.metadata.steps_seen == ra.losses.size());
  }

  TEST_CASE("fewer stacks than the batch size is an argument error") {
    StackList data;
    data.items().push_back({random_stack(32, 1), {"r", 1, 1}});
    auto m = build<float>(small_config());
    TrainPlan plan;
    plan.batch_size = 2;
    CHECK_THROWS_AS(train(m, data, plan), ArgumentError);
  }

  TEST_CASE("non-finite data aborts with the last checkpoint") {
    TempDir dir;
    StackList data;
    for (int i = 0; i < 4; ++i) data.items().push_back({random_stack(32, 200 + i), {"r", i + 1, 1}});
    data.items()[3].data[0] = std::numeric_limits<float>::quiet_NaN();
    auto m = build<float>(small_config());
    TrainPlan plan;
    plan.epochs = 5;
    plan.batch_size = 1;
    plan.checkpoint_every = 1;
    plan.checkpoint_path = dir / "ckpt.exmo";
    try {
      train(m, data, plan);
      FAIL("expected a training error");
    } catch (const TrainingError& e) {
      CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
      if (!e.last_checkpoint().empty()) CHECK(std::filesystem::exists(e.last_checkpoint()));
    }
  }

  TEST_CASE("loss keeps falling in 50-step windows after step 100 and temporal order is learned") {
    // Default plan (batch 8, learning rate 1e-3) on a fixed tiny set.
    StackDataset data(32);
    data.add(moving_clip(1.0, 32, 16, 5));
    data.add(moving_clip(2.0, 32, 16, 6));
    auto m = build<float>(small_config(8, 32, 3));
    TrainPlan plan;
    plan.epochs = 1000;
    plan.max_steps = 400;
    plan.shuffle_seed = 9;
    const auto r = train(m, data, plan);
    REQUIRE(r.losses.size() == 400);
    std::vector<double> means;
    for (std::size_t start = 100; start + 50 <= r.losses.size(); start += 50) {
      means.push_back(std::accumulate(r.losses.begin() + start, r.losses.begin() + start + 50, 0.0) / 50.0);
    }
    for (std::size_t i = 1; i < means.size(); ++i) CHECK(means[i] < means[i - 1]);

    // Shuffling the frame order inside a training stack raises the loss.
    for (std::size_t i : {0u, 5u, 20u}) {
      const Tensor original = data.stack(i).data;
      Tensor permuted(original.shape());
      const int order[] = {3, 0, 4, 1, 2};
      for (int k = 0; k < 5; ++k) {
        std::copy(original.plane(order[k]).begin(), original.plane(order[k]).end(), permuted.plane(k).begin());
      }
      CHECK(stack_loss(m, original) < stack_loss(m, permuted));
    }
  }
}

TEST_SUITE("cross validation") {
  TEST_CASE("10 sequences: each fold tests 2 and trains 8") {
    const auto folds = partition_folds(10, 5, 3);
    REQUIRE(folds.size() == 5);
    std::set<std::size_t> all;
    for (const auto& f : folds) {
      CHECK(f.size() == 2);
      for (auto i : f) CHECK(all.insert(i).second);
    }
    CHECK(all.size() == 10);
    CHECK(*all.rbegin() == 9);
  }

  TEST_CASE("partition is seed-determined") {
    CHECK(partition_folds(23, 5, 8) == partition_folds(23, 5, 8));
    CHECK(partition_folds(23, 5, 8) != partition_folds(23, 5, 9));
  }

  TEST_CASE("uneven sizes still partition") {
    std::size_t total = 0;
    for (const auto& f : partition_folds(13, 5, 1)) {
      CHECK(f.size() >= 2);
      CHECK(f.size() <= 3);
      total += f.size();
    }
    CHECK(total == 13);
  }

  TEST_CASE("too few sequences is an argument error") {
    CHECK_THROWS_AS(partition_folds(4, 5, 0), ArgumentError);
  }

  TEST_CASE("runs five folds and reports per-fold metrics") {
    std::vector<FrameSequence> seqs;
    for (int i = 0; i < 5; ++i) seqs.push_back(moving_clip(1.0 + i % 2, 32, 6, 40 + i));
    TrainPlan plan;
    plan.epochs = 1;
    plan.batch_size = 2;
    plan.max_steps = 2;
    const auto folds = cross_validate(seqs, small_config(2, 32), plan, 5, 1);
    REQUIRE(folds.size() == 5);
    for (const auto& f : folds) {
      CHECK(f.test_indices.size() == 1);
      CHECK(f.train_indices.size() == 4);
      CHECK(f.mean_test_loss > 0.0);
      CHECK(f.mean_test_motion_score > 0.0);
    }
  }
}

TEST_SUITE("model file") {
  Model trained_model() {
    auto m = build<float>(small_config(2, 32, 17));
    m.metadata.epochs_seen = 3;
    m.metadata.steps_seen = 12;
    m.metadata.loss_history = {3.5, 2.25, 1.125};
    return m;
  }

  TEST_CASE("round trip is bit-exact and forward outputs agree") {
    TempDir dir;
    const auto m = trained_model();
    save_model(m, dir / "m.exmo");
    const auto back = load_model(dir / "m.exmo");
    CHECK(back == m);
    const auto x = random_stack(32, 5);
    CHECK(forward(back, x) == forward(m, x));
    CHECK_FALSE(std::filesystem::exists(dir / "m.exmo.tmp"));
  }

  TEST_CASE("serialisation is deterministic") { CHECK(serialize_model(trained_model()) == serialize_model(trained_model())); }

  TEST_CASE("every truncation is a format error") {
    const auto bytes = serialize_model(trained_model());
    for (std::size_t n : {std::size_t{0}, std::size_t{3}, std::size_t{5}, std::size_t{20}, bytes.size() / 2,
                          bytes.size() - 1}) {
      CHECK_THROWS_AS(deserialize_model(std::span(bytes).first(n)), FormatError);
    }
  }

  TEST_CASE("format errors carry the offset") {
    auto bytes = serialize_model(trained_model());
    try {
      deserialize_model(std::span(bytes).first(30));
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(e.offset() <= 30);
      CHECK(e.offset() > 0);
    }
  }

  TEST_CASE("bad magic, version and checksum") {
    auto bytes = serialize_model(trained_model());
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(deserialize_model(bad_magic), FormatError);

    auto bad_version = bytes;
    bad_version[4] = 9;
    CHECK_THROWS_AS(deserialize_model(bad_version), UnsupportedVersionError);

    auto flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x40;
    CHECK_THROWS_AS(deserialize_model(flipped), FormatError);
  }

  TEST_CASE("header layout") {
    const auto bytes = serialize_model(trained_model());
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "EXMO");
    CHECK(bytes[4] == 1);
    CHECK(bytes[5] == 0);
  }

  TEST_CASE("missing file is a format error") {
    TempDir dir;
    CHECK_THROWS_AS(load_model(dir / "nope.exmo"), FormatError);
  }

  TEST_CASE("saved bytes equal the serialised image") {
    TempDir dir;
    const auto m = trained_model();
    save_model(m, dir / "m.exmo");
    CHECK(read_bytes(dir / "m.exmo") == serialize_model(m));
  }
}
