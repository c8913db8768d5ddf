#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "sonobox/geometry.hpp"
#include "sonobox/io/image_io.hpp"
#include "sonobox/io/manifest.hpp"
#include "sonobox/io/wav.hpp"
#include "sonobox/rng.hpp"

using namespace sonobox;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "sonobox_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

sim::WaveformBundle random_bundle(uint64_t seed, size_t frames) {
    Rng rng(seed);
    sim::WaveformBundle b;
    b.sample_rate = 16000.0;
    for (auto& ch : b.channels) {
        ch.resize(frames);
        for (auto& v : ch) v = rng.uniform(-1.0, 1.0);
    }
    return b;
}

}  // namespace

TEST_CASE("wav round trip preserves float-precision samples and rewrites byte-identically") {
    const auto bundle = random_bundle(11, 700);
    const auto p1 = temp_file("a.wav");
    const auto p2 = temp_file("b.wav");
    io::write_wav(p1, bundle);

    const auto back = io::read_wav(p1);
    CHECK(back.sample_rate == 16000.0);
    REQUIRE(back.length() == 700);
    for (int ch = 0; ch < 4; ++ch)
        for (size_t i = 0; i < 700; ++i)
            CHECK(back.channels[ch][i] == static_cast<double>(static_cast<float>(bundle.channels[ch][i])));

    io::write_wav(p2, back);
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("wav file layout: float format tag and frame-interleaved data") {
    sim::WaveformBundle b;
    b.sample_rate = 8000.0;
    for (int ch = 0; ch < 4; ++ch) b.channels[ch] = {ch + 1.0};  // one frame: 1,2,3,4
    const auto p = temp_file("layout.wav");
    io::write_wav(p, b);
    const std::string bytes = slurp(p);

    CHECK(bytes.substr(0, 4) == "RIFF");
    CHECK(bytes.substr(8, 4) == "WAVE");
    CHECK(bytes.substr(12, 4) == "fmt ");
    CHECK(static_cast<uint8_t>(bytes[20]) == 3);  // IEEE float
    CHECK(static_cast<uint8_t>(bytes[22]) == 4);  // channels
    // data payload: 4 floats 1.0f..4.0f, little-endian
    const size_t data = bytes.find("data");
    REQUIRE(data != std::string::npos);
    const char* payload = bytes.data() + data + 8;
    for (int ch = 0; ch < 4; ++ch) {
        float v = 0.0f;
        std::memcpy(&v, payload + 4 * ch, 4);
        CHECK(v == static_cast<float>(ch + 1));
    }
}

TEST_CASE("wav reader rejects malformed files") {
    const auto good = temp_file("good.wav");
    io::write_wav(good, random_bundle(5, 32));
    const std::string bytes = slurp(good);

    SUBCASE("not riff") {
        const auto p = temp_file("bad_magic.wav");
        spit(p, "JUNK" + bytes.substr(4));
        CHECK_THROWS_AS(io::read_wav(p), DataError);
    }
    SUBCASE("truncated") {
        const auto p = temp_file("short.wav");
        spit(p, bytes.substr(0, bytes.size() / 2));
        CHECK_THROWS_AS(io::read_wav(p), DataError);
    }
    SUBCASE("wrong channel count") {
        auto forged = bytes;
        forged[22] = 2;  // fmt channel field
        const auto p = temp_file("stereo.wav");
        spit(p, forged);
        CHECK_THROWS_AS(io::read_wav(p), DataError);
    }
    SUBCASE("ragged bundle refuses to serialize") {
        auto b = random_bundle(5, 32);
        b.channels[2].pop_back();
        CHECK_THROWS_AS(io::write_wav(temp_file("ragged.wav"), b), DataError);
    }
}

TEST_CASE("rgb quantization rounds and clamps") {
    geom::SceneImage s;
    s.res = 1;
    s.rgb = {0.0, 1.0, 0.5};
    s.depth = {1.0};
    const auto img = io::quantize_rgb(s);
    CHECK(img.data[0] == 0);
    CHECK(img.data[1] == 255);
    CHECK(img.data[2] == 128);  // lround(127.5)

    s.rgb = {-0.2, 1.7, 0.25};
    const auto clamped = io::quantize_rgb(s);
    CHECK(clamped.data[0] == 0);
    CHECK(clamped.data[1] == 255);
    CHECK(clamped.data[2] == 64);
    CHECK(io::quantize_depth(s).data[0] == 65535);
}

TEST_CASE("ppm and pgm round trip byte-identically") {
    const auto world = geom::default_world();
    const auto scene = geom::render_scene(world, geom::default_shape(geom::ShapeKind::Block),
                                          {0.05, 0.11, 0.7}, 64);
    const auto rgb = io::quantize_rgb(scene);
    const auto depth = io::quantize_depth(scene);

    const auto ppm1 = temp_file("s1.ppm");
    const auto ppm2 = temp_file("s2.ppm");
    io::write_ppm(ppm1, rgb);
    const auto rgb_back = io::read_ppm(ppm1);
    CHECK(rgb_back.w == 64);
    CHECK(rgb_back.h == 64);
    CHECK(rgb_back.data == rgb.data);
    io::write_ppm(ppm2, rgb_back);
    CHECK(slurp(ppm1) == slurp(ppm2));

    const auto pgm1 = temp_file("s1.pgm");
    const auto pgm2 = temp_file("s2.pgm");
    io::write_pgm(pgm1, depth);
    const auto depth_back = io::read_pgm(pgm1);
    CHECK(depth_back.data == depth.data);
    io::write_pgm(pgm2, depth_back);
    CHECK(slurp(pgm1) == slurp(pgm2));
}

TEST_CASE("pgm samples are stored high byte first") {
    io::Image16 img;
    img.w = 1;
    img.h = 1;
    img.data = {0x1234};
    const auto p = temp_file("endian.pgm");
    io::write_pgm(p, img);
    const std::string bytes = slurp(p);
    REQUIRE(bytes.size() >= 2);
    CHECK(static_cast<uint8_t>(bytes[bytes.size() - 2]) == 0x12);
    CHECK(static_cast<uint8_t>(bytes[bytes.size() - 1]) == 0x34);
}

TEST_CASE("netpbm reader accepts comments and flags damage") {
    io::Image8 img;
    img.w = 2;
    img.h = 1;
    img.data = {10, 20, 30, 40, 50, 60};
    const auto canon = temp_file("canon.ppm");
    io::write_ppm(canon, img);

    SUBCASE("comment lines in the header") {
        const auto p = temp_file("comments.ppm");
        std::string body(reinterpret_cast<const char*>(img.data.data()), img.data.size());
        spit(p, "P6\n# a comment\n2 # trailing\n1\n255\n" + body);
        CHECK(io::read_ppm(p).data == img.data);
    }
    SUBCASE("wrong magic") {
        const auto p = temp_file("magic.ppm");
        spit(p, "P5" + slurp(canon).substr(2));
        CHECK_THROWS_AS(io::read_ppm(p), DataError);
    }
    SUBCASE("truncated pixels") {
        const auto p = temp_file("trunc.ppm");
        const std::string bytes = slurp(canon);
        spit(p, bytes.substr(0, bytes.size() - 2));
        CHECK_THROWS_AS(io::read_ppm(p), DataError);
    }
    SUBCASE("unsupported maxval") {
        const auto p = temp_file("maxval.ppm");
        spit(p, "P6\n2 1\n127\nxxxxxx");
        CHECK_THROWS_AS(io::read_ppm(p), DataError);
    }
}

TEST_CASE("scene to image files and back loses at most half a quantization step") {
    const auto world = geom::default_world();
    const auto scene = geom::render_scene(world, geom::default_shape(geom::ShapeKind::Stick),
                                          {0.04, 0.13, 1.2}, 48);
    const auto rgb = io::quantize_rgb(scene);
    const auto depth = io::quantize_depth(scene);
    const auto back = io::scene_from_images(rgb, depth);

    REQUIRE(back.res == 48);
    for (size_t i = 0; i < scene.rgb.size(); ++i)
        CHECK(std::abs(back.rgb[i] - scene.rgb[i]) <= 0.5 / 255.0 + 1e-12);
    for (size_t i = 0; i < scene.depth.size(); ++i)
        CHECK(std::abs(back.depth[i] - scene.depth[i]) <= 0.5 / 65535.0 + 1e-12);

    // quantizing the reconstruction reproduces the files exactly
    CHECK(io::quantize_rgb(back).data == rgb.data);
    CHECK(io::quantize_depth(back).data == depth.data);

    io::Image16 mismatched = depth;
    mismatched.w = 24;
    mismatched.h = 24;
    mismatched.data.resize(24 * 24);
    CHECK_THROWS_AS(io::scene_from_images(rgb, mismatched), DataError);
}

TEST_CASE("manifest round trips records and bytes") {
    std::vector<io::EpisodeRecord> records;
    io::EpisodeRecord r;
    r.id = 0;
    r.seed = 1234567890123456789ULL;
    r.shape = "block";
    r.final_pose = {0.0512345678901234, -0.11, kPi / 3.0};
    r.impact_count = 5;
    r.wav_path = "wav/ep_00000.wav";
    r.rgb_path = "rgb/ep_00000.ppm";
    r.depth_path = "depth/ep_00000.pgm";
    records.push_back(r);
    r.id = 1;
    r.shape = "stick";
    r.final_pose = {0.0, 0.0, 0.0};
    r.impact_count = 1;
    records.push_back(r);

    const auto p1 = temp_file("m1.jsonl");
    const auto p2 = temp_file("m2.jsonl");
    io::write_manifest(p1, records);
    const auto back = io::read_manifest(p1);
    REQUIRE(back.size() == 2);
    CHECK(back[0].seed == records[0].seed);
    CHECK(back[0].shape == "block");
    CHECK(back[0].final_pose.x == records[0].final_pose.x);
    CHECK(back[0].final_pose.theta == records[0].final_pose.theta);
    CHECK(back[1].impact_count == 1);
    CHECK(back[1].wav_path == "wav/ep_00000.wav");

    io::write_manifest(p2, back);
    const std::string bytes = slurp(p1);
    CHECK(bytes == slurp(p2));
    CHECK(std::count(bytes.begin(), bytes.end(), '\n') == 2);  // one line per record
}

TEST_CASE("manifest reader reports the offending line") {
    const auto p = temp_file("bad.jsonl");
    SUBCASE("syntax error") {
        spit(p, R"({"id": 0, "seed": 1, "shape": "cube")" "\n" "{not json}\n");
        CHECK_THROWS_WITH_AS(io::read_manifest(p), doctest::Contains("line 1"), DataError);
    }
    SUBCASE("missing field") {
        spit(p, R"({"id": 0})" "\n");
        CHECK_THROWS_AS(io::read_manifest(p), DataError);
    }
    SUBCASE("blank lines are skipped") {
        io::EpisodeRecord r;
        r.shape = "cube";
        io::write_manifest(p, {r});
        spit(p, "\n" + slurp(p) + "\n\n");
        CHECK(io::read_manifest(p).size() == 1);
    }
}
