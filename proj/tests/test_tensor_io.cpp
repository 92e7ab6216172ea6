#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>

#include "varno/rng.hpp"
#include "varno/tensor_io.hpp"

using namespace varno;

namespace {
std::filesystem::path tmp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "varno_io_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}
}  // namespace

TEST_CASE("rank-1 real tensor serializes to the frozen 34-byte layout") {
    RTensor t({2}, {1.0, 2.0});
    std::string bytes = serialize_tensor(t);
    // magic(4) + version(1) + dtype(1) + rank u32(4) + extent u64(8) + 2 float64(16)
    REQUIRE(bytes.size() == 34);
    const unsigned char expect[34] = {
        'N',  'O',  'T',  'F',  0x01, 0x00,              // header
        0x01, 0x00, 0x00, 0x00,                          // rank = 1
        0x02, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,  // extent = 2
        0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xf0, 0x3f,  // 1.0
        0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x40,  // 2.0
    };
    REQUIRE(std::memcmp(bytes.data(), expect, 34) == 0);
}

TEST_CASE("complex dtype code is 1 and payload interleaves re,im") {
    CTensor t({1}, {cd(3.0, -4.0)});
    std::string bytes = serialize_tensor(t);
    REQUIRE(bytes.size() == 34);
    REQUIRE(bytes[5] == 1);
    double re, im;
    std::memcpy(&re, bytes.data() + 18, 8);
    std::memcpy(&im, bytes.data() + 26, 8);
    REQUIRE(re == 3.0);
    REQUIRE(im == -4.0);
}

TEST_CASE("random tensors of rank 1-4 round-trip bitwise") {
    Rng rng(7, "io-roundtrip");
    for (int rank = 1; rank <= 4; ++rank) {
        std::vector<int64_t> shape;
        for (int i = 0; i < rank; ++i) shape.push_back(1 + static_cast<int64_t>(rng.below(5)));
        RTensor r(shape);
        for (auto& v : r.data) v = rng.next_gaussian();
        CTensor c(shape);
        for (auto& v : c.data) v = cd(rng.next_gaussian(), rng.next_gaussian());

        auto pr = tmp_path("rt_r" + std::to_string(rank) + ".notf");
        auto pc = tmp_path("rt_c" + std::to_string(rank) + ".notf");
        write_tensor(pr, r);
        write_tensor(pc, c);
        RTensor r2 = read_real_tensor(pr);
        CTensor c2 = read_complex_tensor(pc);
        REQUIRE(r2.shape == r.shape);
        REQUIRE(c2.shape == c.shape);
        REQUIRE(std::memcmp(r2.data.data(), r.data.data(), r.data.size() * sizeof(double)) == 0);
        REQUIRE(std::memcmp(c2.data.data(), c.data.data(), c.data.size() * sizeof(cd)) == 0);
    }
}

TEST_CASE("structural failures raise distinct error kinds") {
    RTensor t({2, 2}, {1, 2, 3, 4});
    std::string good = serialize_tensor(t);

    std::string bad_magic = good;
    bad_magic[0] = 'X';
    REQUIRE_THROWS_AS(deserialize_tensor(bad_magic), BadMagicError);

    std::string bad_version = good;
    bad_version[4] = 9;
    REQUIRE_THROWS_AS(deserialize_tensor(bad_version), BadVersionError);

    std::string truncated = good.substr(0, good.size() - 3);
    REQUIRE_THROWS_AS(deserialize_tensor(truncated), TruncatedError);

    std::string trailing = good + "zz";
    REQUIRE_THROWS_AS(deserialize_tensor(trailing), FormatError);

    REQUIRE_THROWS_AS(read_tensor("/nonexistent/dir/xx.notf"), IoError);
}

TEST_CASE("dtype-checked readers reject the other dtype") {
    auto p = tmp_path("dtype.notf");
    write_tensor(p, RTensor({1}, {0.5}));
    REQUIRE_THROWS_AS(read_complex_tensor(p), FormatError);
    write_tensor(p, CTensor({1}, {cd(0, 1)}));
    REQUIRE_THROWS_AS(read_real_tensor(p), FormatError);
}

TEST_CASE("checkpoint write-read-write is byte identical") {
    Rng rng(11, "ckpt");
    TensorMap m;
    RTensor a({3, 2});
    for (auto& v : a.data) v = rng.next_gaussian();
    CTensor b({2, 2, 2});
    for (auto& v : b.data) v = cd(rng.next_gaussian(), rng.next_gaussian());
    m.emplace("alpha.weight", a);
    m.emplace("beta.bias", b);

    std::string bytes1 = serialize_checkpoint(m);
    TensorMap back = deserialize_checkpoint(bytes1);
    REQUIRE(back.size() == 2);
    std::string bytes2 = serialize_checkpoint(back);
    REQUIRE(bytes1 == bytes2);

    auto p = tmp_path("model.ckpt");
    write_checkpoint(p, m);
    TensorMap file_back = read_checkpoint(p);
    REQUIRE(serialize_checkpoint(file_back) == bytes1);
}

TEST_CASE("checkpoint rejects duplicate names and garbage") {
    TensorMap m;
    m.emplace("w", RTensor({1}, {1.0}));
    std::string rec = serialize_checkpoint(m);
    std::string doubled = rec + rec;
    REQUIRE_THROWS_AS(deserialize_checkpoint(doubled), FormatError);
    std::string cut = rec.substr(0, rec.size() - 1);
    REQUIRE_THROWS_AS(deserialize_checkpoint(cut), TruncatedError);
}
