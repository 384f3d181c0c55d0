#include <doctest.h>
#include <png.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "exmo/data.hpp"
#include "exmo/errors.hpp"
#include "exmo/image_io.hpp"
#include "exmo/rng.hpp"
#include "temp_dir.hpp"

using namespace exmo;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

void write_ppm(const fs::path& p, int w, int h, unsigned char r, unsigned char g, unsigned char b) {
  std::string bytes = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  for (int i = 0; i < w * h; ++i) bytes += {static_cast<char>(r), static_cast<char>(g), static_cast<char>(b)};
  write_file(p, bytes);
}

void write_gray_pgm(const fs::path& p, int w, int h, unsigned char v) {
  write_file(p, "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n" + std::string(w * h, static_cast<char>(v)));
}

void write_png_rgb(const fs::path& p, int w, int h, unsigned char r, unsigned char g, unsigned char b) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = w;
  image.height = h;
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf;
  for (int i = 0; i < w * h; ++i) buf.insert(buf.end(), {r, g, b});
  REQUIRE(png_image_write_to_file(&image, p.c_str(), 0, buf.data(), 0, nullptr));
}

FrameSequence numbered_sequence(int n, int size = 8) {
  FrameSequence s;
  s.source_id = "clip";
  for (int i = 0; i < n; ++i) s.frames.push_back(Frame::filled(size, size, static_cast<float>(i) / n));
  s.number_frames();
  return s;
}

Frame ramp(int h, int w) {
  Frame f = Frame::filled(h, w, 0.0f);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) f.at(y, x) = static_cast<float>(x) / (w - 1);
  return f;
}

FrameSequence single(Frame f) {
  FrameSequence s;
  s.source_id = "one";
  s.frames.push_back(std::move(f));
  s.number_frames();
  return s;
}

}  // namespace

TEST_SUITE("load_frames") {
  TEST_CASE("all-255 frame normalises to 1") {
    TempDir dir;
    write_gray_pgm(dir / "f0001.pgm", 6, 4, 255);
    const auto seq = load_frames(dir.path());
    REQUIRE(seq.size() == 1);
    CHECK(seq.width() == 6);
    CHECK(seq.height() == 4);
    for (float v : seq.frames[0].pixels) CHECK(v == 1.0f);
  }

  TEST_CASE("pure red converts to Rec.601 luma") {
    TempDir dir;
    write_ppm(dir / "a.ppm", 3, 2, 255, 0, 0);
    write_png_rgb(dir / "b.png", 3, 2, 255, 0, 0);
    const auto seq = load_frames(dir.path());
    REQUIRE(seq.size() == 2);
    for (const auto& f : seq.frames)
      for (float v : f.pixels) CHECK(v == doctest::Approx(0.299).epsilon(1e-6));
  }

  TEST_CASE("frames are ordered by file name") {
    TempDir dir;
    write_gray_pgm(dir / "frame_10.pgm", 2, 2, 30);
    write_gray_pgm(dir / "frame_02.pgm", 2, 2, 20);
    write_gray_pgm(dir / "frame_01.pgm", 2, 2, 10);
    write_file(dir / "notes.txt", "ignored");
    const auto seq = load_frames(dir.path());
    REQUIRE(seq.size() == 3);
    CHECK(seq.frames[0].pixels[0] == doctest::Approx(10 / 255.0));
    CHECK(seq.frames[1].pixels[0] == doctest::Approx(20 / 255.0));
    CHECK(seq.frames[2].pixels[0] == doctest::Approx(30 / 255.0));
    CHECK(seq.frame_numbers == std::vector<int>{1, 2, 3});
  }

  TEST_CASE("empty directory is an ingestion error") {
    TempDir dir;
    CHECK_THROWS_AS(load_frames(dir.path()), IngestionError);
  }

  TEST_CASE("inconsistent dimensions name the frame") {
    TempDir dir;
    write_gray_pgm(dir / "a.pgm", 4, 4, 0);
    write_gray_pgm(dir / "b.pgm", 5, 4, 0);
    try {
      load_frames(dir.path());
      FAIL("expected an ingestion error");
    } catch (const IngestionError& e) {
      CHECK(std::string(e.what()).find("b.pgm") != std::string::npos);
    }
  }

  TEST_CASE("unreadable frame is an ingestion error naming it") {
    TempDir dir;
    write_gray_pgm(dir / "a.pgm", 4, 4, 0);
    write_file(dir / "b.pgm", "P5\n4 4\n255\nxx");
    try {
      load_frames(dir.path());
      FAIL("expected an ingestion error");
    } catch (const IngestionError& e) {
      CHECK(std::string(e.what()).find("b.pgm") != std::string::npos);
    }
  }

  TEST_CASE("raw planar file with sidecar") {
    TempDir dir;
    std::string bytes;
    for (int t = 0; t < 3; ++t) bytes += std::string(4 * 2, static_cast<char>(t * 100));
    write_file(dir / "clip.raw", bytes);
    write_file(dir / "clip.json", R"({"width": 4, "height": 2, "frames": 3, "fps": 30})");
    const auto seq = load_frames(dir / "clip.raw");
    REQUIRE(seq.size() == 3);
    CHECK(seq.source_id == "clip");
    CHECK(seq.fps == 30.0);
    CHECK(seq.frames[2].pixels[5] == doctest::Approx(200 / 255.0));
  }

  TEST_CASE("truncated raw file is an ingestion error") {
    TempDir dir;
    write_file(dir / "clip.raw", std::string(10, 'a'));
    write_file(dir / "clip.json", R"({"width": 4, "height": 2, "frames": 3})");
    CHECK_THROWS_AS(load_frames(dir / "clip.raw"), IngestionError);
  }

  TEST_CASE("write then load round-trips 8-bit values") {
    TempDir dir;
    auto seq = numbered_sequence(4, 5);
    for (auto& f : seq.frames)
      for (float& v : f.pixels) v = quantize(v) / 255.0f;
    write_frames(seq, dir / "out");
    const auto back = load_frames(dir / "out");
    REQUIRE(back.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(back.frames[i].pixels == seq.frames[i].pixels);
  }
}

TEST_SUITE("resize") {
  TEST_CASE("constant image stays constant") {
    for (float c : {0.0f, 0.37f, 1.0f}) {
      const auto out = resize(single(Frame::filled(50, 70, c)), 128, 128);
      for (float v : out.frames[0].pixels) CHECK(v == c);
    }
  }

  TEST_CASE("256x256 gives 128x128") {
    const auto out = resize(single(Frame::filled(256, 256, 0.5f)), 128, 128);
    CHECK(out.height() == 128);
    CHECK(out.width() == 128);
  }

  TEST_CASE("horizontal ramp stays monotone along rows") {
    for (auto [h, w] : {std::pair{40, 300}, std::pair{375, 1242}, std::pair{128, 17}}) {
      const auto out = resize(single(ramp(h, w)), 128, 128).frames[0];
      for (int y = 0; y < 128; ++y)
        for (int x = 1; x < 128; ++x) CHECK(out.at(y, x) >= out.at(y, x - 1));
    }
  }

  TEST_CASE("outputs are clamped to [0, 1]") {
    const auto out = resize(single(ramp(9, 9)), 31, 33).frames[0];
    for (float v : out.pixels) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }

  TEST_CASE("zero target is an argument error") {
    CHECK_THROWS_AS(resize(single(Frame::filled(4, 4, 0.0f)), 0, 4), ArgumentError);
    CHECK_THROWS_AS(resize(FrameSequence{}, 4, 4), ArgumentError);
  }
}

TEST_SUITE("half_resize_random_crop") {
  TEST_CASE("KITTI-sized frames halve with floor then crop") {
    FrameSequence seq;
    for (int i = 0; i < 2; ++i) seq.frames.push_back(Frame::filled(375, 1242, 0.5f));
    seq.number_frames();
    CHECK(half_resize(seq).width() == 621);
    CHECK(half_resize(seq).height() == 187);
    Rng rng(4);
    CropOffset off;
    const auto out = half_resize_random_crop(seq, rng, 128, &off);
    CHECK(out.width() == 128);
    CHECK(out.height() == 128);
    CHECK(off.y >= 0);
    CHECK(off.y <= 187 - 128);
    CHECK(off.x <= 621 - 128);
  }

  TEST_CASE("256x256 has only the zero offset") {
    Rng rng(1);
    CropOffset off{7, 7};
    half_resize_random_crop(single(Frame::filled(256, 256, 0.2f)), rng, 128, &off);
    CHECK(off == CropOffset{0, 0});
  }

  TEST_CASE("same seed, same offset; every frame shares it") {
    FrameSequence seq;
    for (int i = 0; i < 3; ++i) seq.frames.push_back(ramp(400, 600));
    seq.number_frames();
    CropOffset a, b;
    Rng r1(99), r2(99);
    const auto out_a = half_resize_random_crop(seq, r1, 128, &a);
    const auto out_b = half_resize_random_crop(seq, r2, 128, &b);
    CHECK(a == b);
    CHECK(out_a.frames == out_b.frames);
    CHECK(out_a.frames[0] == out_a.frames[2]);
  }

  TEST_CASE("too small after halving is an argument error") {
    Rng rng(1);
    CHECK_THROWS_AS(half_resize_random_crop(single(Frame::filled(255, 400, 0.0f)), rng, 128), ArgumentError);
  }

  TEST_CASE("per-stack crops draw independent offsets") {
    FrameSequence seq;
    for (int i = 0; i < 12; ++i) seq.frames.push_back(ramp(64, 200));
    seq.number_frames();
    Rng rng(5);
    const auto stacks = window_stacks_random_crop(seq, rng, 1, 32);
    REQUIRE(stacks.size() == 8);
    std::set<float> first_pixels;
    for (const auto& s : stacks) {
      CHECK(s.data.shape() == Shape{5, 32, 32});
      first_pixels.insert(s.data[0]);
    }
    CHECK(first_pixels.size() > 1);
  }
}

TEST_SUITE("temporal_augment") {
  std::vector<std::vector<int>> numbers(const std::vector<FrameSequence>& subs) {
    std::vector<std::vector<int>> out;
    for (const auto& s : subs) out.push_back(s.frame_numbers);
    return out;
  }

  TEST_CASE("8 frames at stride 2") {
    const auto subs = temporal_augment(numbered_sequence(8), {2});
    CHECK(numbers(subs) == std::vector<std::vector<int>>{{1, 3, 5, 7}, {2, 4, 6, 8}});
    CHECK(subs[0].stride == 2);
  }

  TEST_CASE("stride 1 is the original sequence") {
    const auto seq = numbered_sequence(6);
    const auto subs = temporal_augment(seq, {1});
    REQUIRE(subs.size() == 1);
    CHECK(subs[0].frames == seq.frames);
    CHECK(subs[0].frame_numbers == seq.frame_numbers);
  }

  TEST_CASE("9 frames at stride 3") {
    CHECK(numbers(temporal_augment(numbered_sequence(9), {3})) ==
          std::vector<std::vector<int>>{{1, 4, 7}, {2, 5, 8}, {3, 6, 9}});
  }

  TEST_CASE("phases partition the frames for every stride") {
    for (int n : {5, 8, 13, 30}) {
      for (int s : {1, 2, 3}) {
        std::multiset<int> seen;
        for (const auto& sub : temporal_augment(numbered_sequence(n), {s}))
          seen.insert(sub.frame_numbers.begin(), sub.frame_numbers.end());
        CHECK(seen.size() == static_cast<std::size_t>(n));
        for (int i = 1; i <= n; ++i) CHECK(seen.count(i) == 1);
      }
    }
  }

  TEST_CASE("short phases are skipped, not errors") {
    const auto subs = temporal_augment(numbered_sequence(8), {1, 2, 3}, 5);
    REQUIRE(subs.size() == 1);
    CHECK(subs[0].size() == 8);
  }
}

TEST_SUITE("window_stacks") {
  TEST_CASE("exactly 5 frames give one stack") { CHECK(window_stacks(numbered_sequence(5, 16), 1, 16).size() == 1); }

  TEST_CASE("7 frames at step 1 start at 1, 2, 3") {
    const auto stacks = window_stacks(numbered_sequence(7, 16), 1, 16);
    REQUIRE(stacks.size() == 3);
    for (int i = 0; i < 3; ++i) {
      CHECK(stacks[i].origin.first_frame == i + 1);
      CHECK(stacks[i].origin.source_id == "clip");
      CHECK(stacks[i].data.shape() == Shape{5, 16, 16});
      CHECK(stacks[i].data.at(0, 0, 0) == static_cast<float>(i) / 7);
    }
  }

  TEST_CASE("step 2 and stride metadata") {
    const auto subs = temporal_augment(numbered_sequence(20, 16), {2});
    const auto stacks = window_stacks(subs[1], 2, 16);
    REQUIRE(stacks.size() == 3);
    CHECK(stacks[1].origin.first_frame == 6);
    CHECK(stacks[1].origin.stride == 2);
  }

  TEST_CASE("4 frames is an argument error") {
    CHECK_THROWS_AS(window_stacks(numbered_sequence(4, 16), 1, 16), ArgumentError);
  }

  TEST_CASE("wrong frame size is a shape error") {
    CHECK_THROWS_AS(window_stacks(numbered_sequence(6, 20), 1, 16), ShapeError);
  }

  TEST_CASE("every stack satisfies its invariants") {
    FrameSequence seq;
    Rng rng(8);
    for (int i = 0; i < 11; ++i) {
      Frame f = Frame::filled(32, 32, 0.0f);
      for (float& v : f.pixels) v = static_cast<float>(rng.uniform());
      seq.frames.push_back(f);
    }
    seq.number_frames();
    for (const auto& s : window_stacks(seq, 1, 32)) {
      CHECK(s.data.shape() == Shape{5, 32, 32});
      for (float v : s.data.values()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
      }
    }
  }

  TEST_CASE("dataset windows match eager windows") {
    StackDataset ds(16);
    const auto seq = numbered_sequence(9, 16);
    ds.add(seq, 2);
    const auto eager = window_stacks(seq, 2, 16);
    REQUIRE(ds.size() == eager.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      CHECK(ds.stack(i).data == eager[i].data);
      CHECK(ds.stack(i).origin == eager[i].origin);
    }
  }
}

TEST_SUITE("manifest") {
  TEST_CASE("paths resolve against the manifest directory") {
    TempDir dir;
    fs::create_directories(dir / "clips" / "a");
    write_file(dir / "clips" / "m.json",
               R"([{"path": "a", "role": "pretrain", "label": "A"}, {"path": "/abs/b", "role": "test", "label": "B"}])");
    const auto entries = read_manifest(dir / "clips" / "m.json");
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].path == dir / "clips" / "a");
    CHECK(entries[0].role == Role::pretrain);
    CHECK(entries[1].path == fs::path("/abs/b"));
    CHECK(entries[1].label == "B");
  }

  TEST_CASE("unknown role is rejected") {
    TempDir dir;
    write_file(dir / "m.json", R"([{"path": "a", "role": "validate", "label": "A"}])");
    CHECK_THROWS(read_manifest(dir / "m.json"));
  }

  TEST_CASE("pipeline is deterministic for a fixed seed") {
    TempDir dir;
    fs::create_directories(dir / "big");
    for (int i = 0; i < 10; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "f%03d.pgm", i);
      std::string bytes = "P5\n300 280\n255\n";
      for (int p = 0; p < 300 * 280; ++p) bytes += static_cast<char>((p * 7 + i * 13) % 256);
      write_file(dir / "big" / name, bytes);
    }
    write_file(dir / "m.json", R"([{"path": "big", "role": "finetune", "label": "big"}])");
    PrepareOptions opts;
    opts.seed = 3;
    const auto entries = read_manifest(dir / "m.json");
    const auto a = prepare_sequences(entries, Role::finetune, opts);
    const auto b = prepare_sequences(entries, Role::finetune, opts);
    REQUIRE(a.size() == b.size());
    // Stride 1 and both stride-2 phases survive; stride-3 phases are too short.
    CHECK(a.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].frames == b[i].frames);
      CHECK(a[i].width() == 128);
    }
  }
}
