#include <doctest.h>

#include <cmath>
#include <fstream>

#include "exmo/autoencoder.hpp"
#include "exmo/errors.hpp"
#include "exmo/rng.hpp"
#include "exmo/scoring.hpp"
#include "temp_dir.hpp"

using namespace exmo;
using testing_support::TempDir;

namespace {

// Zero weights make every hidden activation zero, so the reconstruction is
// sigmoid(head bias) everywhere.
Model constant_model(int size, double level) {
  NetworkConfig cfg;
  cfg.base_channels = 1;
  cfg.input_size = size;
  Model m = build<float>(cfg);
  for (auto& l : m.layers) {
    for (float& w : l.weights.values()) w = 0.0f;
    for (float& b : l.bias.values()) b = 0.0f;
  }
  for (float& b : m.head().bias.values()) b = static_cast<float>(std::log(level / (1.0 - level)));
  return m;
}

FrameSequence constant_clip(int n, int size, float value) {
  FrameSequence s;
  s.source_id = "flat";
  for (int i = 0; i < n; ++i) s.frames.push_back(Frame::filled(size, size, value));
  s.number_frames();
  return s;
}

FrameSequence random_clip(int n, int size, std::uint64_t seed) {
  Rng rng(seed);
  FrameSequence s;
  s.source_id = "rand";
  for (int i = 0; i < n; ++i) {
    Frame f = Frame::filled(size, size, 0.0f);
    for (float& v : f.pixels) v = static_cast<float>(rng.uniform());
    s.frames.push_back(std::move(f));
  }
  s.number_frames();
  return s;
}

}  // namespace

TEST_SUITE("frame error") {
  TEST_CASE("one pixel off by 0.5 gives 0.25") {
    Frame a = Frame::filled(4, 4, 0.0f), b = a;
    b.at(2, 1) = 0.5f;
    CHECK(frame_error(a, b) == doctest::Approx(0.25));
  }

  TEST_CASE("all-zero against all-one at 128x128") {
    const Frame a = Frame::filled(128, 128, 0.0f), b = Frame::filled(128, 128, 1.0f);
    const double e = frame_error(a, b);
    CHECK(e == 16384.0);
    CHECK(motion_score(e, 128, 128) == 128.0);
  }

  TEST_CASE("e = 128 on 128x128 gives s_m = 1") { CHECK(motion_score(128.0, 128, 128) == 1.0); }

  TEST_CASE("matches a direct double sum and is never negative") {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      Frame a = Frame::filled(9, 13, 0.0f), b = a;
      double expected = 0.0;
      for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        a.pixels[i] = static_cast<float>(rng.uniform());
        b.pixels[i] = static_cast<float>(rng.uniform());
        const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
        expected += d * d;
      }
      CHECK(frame_error(a, b) == doctest::Approx(expected).epsilon(1e-12));
      CHECK(frame_error(a, a) == 0.0);
    }
  }

  TEST_CASE("s_m is linear in e") {
    for (double e : {0.0, 1.0, 7.5, 1234.0}) {
      CHECK(motion_score(2 * e, 64, 32) == doctest::Approx(2 * motion_score(e, 64, 32)));
      CHECK(motion_score(e, 64, 32) == doctest::Approx(e / std::sqrt(64.0 * 32.0)));
    }
  }

  TEST_CASE("mismatched extents are a shape error") {
    CHECK_THROWS_AS(frame_error(Frame::filled(4, 4, 0), Frame::filled(4, 5, 0)), ShapeError);
  }
}

TEST_SUITE("score_video") {
  TEST_CASE("constant reconstruction gives the closed-form score") {
    const Model m = constant_model(32, 0.5);
    const auto series = score_video(m, constant_clip(8, 32, 0.0f));
    REQUIRE(series.entries.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(series.entries[i].frame == static_cast<int>(i) + 1);
      CHECK(series.entries[i].error == doctest::Approx(0.25 * 32 * 32));
      CHECK(series.entries[i].motion == doctest::Approx(0.25 * 32));
    }
    CHECK(series.width == 32);
    CHECK(series.height == 32);
    CHECK(series.video_id == "flat");
  }

  TEST_CASE("one score per input frame for every length") {
    const Model m = constant_model(32, 0.3);
    for (int n : {5, 6, 11}) CHECK(score_video(m, random_clip(n, 32, n)).entries.size() == static_cast<std::size_t>(n));
  }

  TEST_CASE("fewer than five frames is an argument error") {
    const Model m = constant_model(32, 0.5);
    CHECK_THROWS_AS(score_video(m, random_clip(4, 32, 1)), ArgumentError);
  }

  TEST_CASE("frame size must match the model") {
    const Model m = constant_model(32, 0.5);
    CHECK_THROWS_AS(score_video(m, random_clip(6, 64, 1)), ShapeError);
  }

  TEST_CASE("scores of a trained-shape model are deterministic and valid") {
    NetworkConfig cfg;
    cfg.base_channels = 2;
    cfg.input_size = 32;
    cfg.seed = 5;
    const Model m = build<float>(cfg);
    const auto clip = random_clip(9, 32, 3);
    const auto a = score_video(m, clip), b = score_video(m, clip);
    CHECK(a == b);
    CHECK_NOTHROW(a.validate());
    for (const auto& e : a.entries) {
      CHECK(e.error >= 0.0);
      CHECK(e.motion == doctest::Approx(e.error / 32.0));
    }
  }

  TEST_CASE("edge frames use the nearest complete window") {
    NetworkConfig cfg;
    cfg.base_channels = 2;
    cfg.input_size = 32;
    cfg.seed = 9;
    const Model m = build<float>(cfg);
    const auto clip = random_clip(7, 32, 4);
    const auto series = score_video(m, clip);
    const Tensor first = forward(m, FrameStack::from_frames({clip.frames.data(), 5}, {}, 32));
    const Tensor last = forward(m, FrameStack::from_frames({clip.frames.data() + 2, 5}, {}, 32));
    auto err = [&](const Tensor& out, int channel, const Frame& f) {
      double s = 0.0;
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
          const double d = static_cast<double>(f.at(y, x)) - out.at(channel, y, x);
          s += d * d;
        }
      return s;
    };
    CHECK(series.entries[0].error == doctest::Approx(err(first, 0, clip.frames[0])));
    CHECK(series.entries[1].error == doctest::Approx(err(first, 1, clip.frames[1])));
    CHECK(series.entries[5].error == doctest::Approx(err(last, 3, clip.frames[5])));
    CHECK(series.entries[6].error == doctest::Approx(err(last, 4, clip.frames[6])));
  }
}

TEST_SUITE("aggregation") {
  ScoreSeries series_of(std::vector<double> motions) {
    ScoreSeries s{"v", 1, 1, {}};
    int f = 1;
    for (double m : motions) s.entries.push_back({f++, m, m});
    return s;
  }

  TEST_CASE("mean of 1, 2, 3 is 2") { CHECK(aggregate(series_of({1, 2, 3})) == 2.0); }

  TEST_CASE("95th percentile ignores a single outlier in 101 values") {
    std::vector<double> v(100, 0.0);
    v.push_back(100.0);
    CHECK(aggregate(series_of(v), Aggregation::parse("p95")) == 0.0);
    CHECK(aggregate(series_of(v)) == doctest::Approx(100.0 / 101.0));
  }

  TEST_CASE("nearest rank picks an observed value") {
    CHECK(percentile_nearest_rank({5, 1, 4, 2, 3}, 50) == 3);
    CHECK(percentile_nearest_rank({5, 1, 4, 2, 3}, 100) == 5);
    CHECK(percentile_nearest_rank({5, 1, 4, 2, 3}, 1) == 1);
  }

  TEST_CASE("parse accepts the documented spellings") {
    CHECK(Aggregation::parse("mean").kind == Aggregation::Kind::mean);
    CHECK(Aggregation::parse("percentile-90").percentile == 90.0);
    CHECK(Aggregation::parse("p95").name() == Aggregation::parse("percentile-95").name());
    CHECK_THROWS(Aggregation::parse("median"));
  }

  TEST_CASE("empty series cannot be aggregated") { CHECK_THROWS(aggregate(series_of({}))); }
}

TEST_SUITE("score files") {
  TEST_CASE("CSV round-trips exactly") {
    NetworkConfig cfg;
    cfg.base_channels = 1;
    cfg.input_size = 32;
    cfg.seed = 1;
    const auto series = score_video(build<float>(cfg), random_clip(7, 32, 11));
    TempDir dir;
    write_score_csv(series, dir / "rand.csv");
    const auto back = read_score_csv(dir / "rand.csv", "rand", 32, 32);
    CHECK(back == series);
    CHECK(score_csv(series).rfind("frame,e,s_m\n", 0) == 0);
  }

  TEST_CASE("negative scores and unordered frames are rejected") {
    TempDir dir;
    std::ofstream(dir / "neg.csv") << "frame,e,s_m\n1,-128,-1\n";
    std::ofstream(dir / "order.csv") << "frame,e,s_m\n2,128,1\n1,128,1\n";
    CHECK_THROWS_AS(read_score_csv(dir / "neg.csv", "neg"), IngestionError);
    CHECK_THROWS_AS(read_score_csv(dir / "order.csv", "order"), IngestionError);
  }

  TEST_CASE("summary JSON carries mean and p95") {
    ScoreSeries s{"v", 1, 1, {{1, 1, 1}, {2, 3, 3}}};
    const std::string j = score_summary_json(s);
    CHECK(j.find("\"mean_s_m\"") != std::string::npos);
    CHECK(j.find("\"p95_s_m\"") != std::string::npos);
    CHECK(j.find("\"n_frames\": 2") != std::string::npos);
  }
}
