#pragma once
// Binary tensor serialization.
//
// Layout (all integers little-endian):
//   magic "NOTF" | version u8 (=1) | dtype u8 (0 real64, 1 complex128)
//   rank u32 | extents u64 x rank | payload (row-major float64, complex
//   interleaved re,im)
//
// Checkpoints are concatenated records of [name-length u32 | name bytes |
// embedded tensor]; re-serializing a read checkpoint reproduces the bytes
// because the in-memory container is key-ordered.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "varno/errors.hpp"
#include "varno/tensor.hpp"

namespace varno {

using AnyTensor = std::variant<RTensor, CTensor>;

// Round-trippable decimal rendering of a double for text manifests.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline void put_bytes(std::string& out, const void* p, size_t n) {
    out.append(static_cast<const char*>(p), n);
}
inline void put_u32(std::string& out, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    put_bytes(out, b, 4);
}
inline void put_u64(std::string& out, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    put_bytes(out, b, 8);
}
inline void put_f64(std::string& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

struct Reader {
    const unsigned char* p;
    size_t n, pos = 0;
    Reader(const void* data, size_t size) : p(static_cast<const unsigned char*>(data)), n(size) {}
    void need(size_t k) const {
        if (pos + k > n) throw TruncatedError("tensor file: unexpected end of data");
    }
    void raw(void* dst, size_t k) {
        need(k);
        std::memcpy(dst, p + pos, k);
        pos += k;
    }
    uint8_t u8() {
        need(1);
        return p[pos++];
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[pos + static_cast<size_t>(i)]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[pos + static_cast<size_t>(i)]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    bool done() const { return pos == n; }
};

inline void encode_tensor(std::string& out, const AnyTensor& t) {
    out.append("NOTF", 4);
    out.push_back(char(1));  // version
    out.push_back(std::holds_alternative<RTensor>(t) ? char(0) : char(1));
    std::visit(
        [&](const auto& tt) {
            put_u32(out, static_cast<uint32_t>(tt.rank()));
            for (auto e : tt.shape) put_u64(out, static_cast<uint64_t>(e));
            for (const auto& v : tt.data) {
                if constexpr (std::is_same_v<std::decay_t<decltype(v)>, double>) {
                    put_f64(out, v);
                } else {
                    put_f64(out, v.real());
                    put_f64(out, v.imag());
                }
            }
        },
        t);
}

inline AnyTensor decode_tensor(Reader& r) {
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, "NOTF", 4) != 0) throw BadMagicError("tensor file: bad magic");
    uint8_t version = r.u8();
    if (version != 1) throw BadVersionError("tensor file: unsupported version " + std::to_string(version));
    uint8_t dtype = r.u8();
    if (dtype > 1) throw FormatError("tensor file: unknown dtype code " + std::to_string(dtype));
    uint32_t rank = r.u32();
    if (rank > 16) throw FormatError("tensor file: implausible rank");
    std::vector<int64_t> shape(rank);
    int64_t numel = 1;
    for (uint32_t i = 0; i < rank; ++i) {
        uint64_t e = r.u64();
        if (e == 0 || e > (uint64_t{1} << 40)) throw FormatError("tensor file: bad extent");
        shape[i] = static_cast<int64_t>(e);
        numel *= shape[i];
    }
    if (dtype == 0) {
        RTensor t(shape);
        for (int64_t i = 0; i < numel; ++i) t.data[static_cast<size_t>(i)] = r.f64();
        return t;
    }
    CTensor t(shape);
    for (int64_t i = 0; i < numel; ++i) {
        double re = r.f64();
        double im = r.f64();
        t.data[static_cast<size_t>(i)] = cd(re, im);
    }
    return t;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (f.bad()) throw IoError("read failure: " + path.string());
    return bytes;
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failure: " + path.string());
}

}  // namespace detail

inline std::string serialize_tensor(const AnyTensor& t) {
    std::string out;
    detail::encode_tensor(out, t);
    return out;
}

inline AnyTensor deserialize_tensor(const std::string& bytes) {
    detail::Reader r(bytes.data(), bytes.size());
    AnyTensor t = detail::decode_tensor(r);
    if (!r.done()) throw FormatError("tensor file: trailing bytes");
    return t;
}

inline void write_tensor(const std::filesystem::path& path, const AnyTensor& t) {
    detail::write_file(path, serialize_tensor(t));
}

inline AnyTensor read_tensor(const std::filesystem::path& path) {
    return deserialize_tensor(detail::read_file(path));
}

inline RTensor read_real_tensor(const std::filesystem::path& path) {
    AnyTensor t = read_tensor(path);
    if (!std::holds_alternative<RTensor>(t))
        throw FormatError("expected a real64 tensor in " + path.string());
    return std::get<RTensor>(std::move(t));
}
inline CTensor read_complex_tensor(const std::filesystem::path& path) {
    AnyTensor t = read_tensor(path);
    if (!std::holds_alternative<CTensor>(t))
        throw FormatError("expected a complex128 tensor in " + path.string());
    return std::get<CTensor>(std::move(t));
}

// ---- named tensor collections (checkpoints) ----

using TensorMap = std::map<std::string, AnyTensor>;

inline std::string serialize_checkpoint(const TensorMap& m) {
    std::string out;
    for (const auto& [name, t] : m) {
        detail::put_u32(out, static_cast<uint32_t>(name.size()));
        out.append(name);
        detail::encode_tensor(out, t);
    }
    return out;
}

inline TensorMap deserialize_checkpoint(const std::string& bytes) {
    TensorMap m;
    detail::Reader r(bytes.data(), bytes.size());
    while (!r.done()) {
        uint32_t len = r.u32();
        if (len > (1u << 20)) throw FormatError("checkpoint: implausible name length");
        r.need(len);
        std::string name(reinterpret_cast<const char*>(r.p + r.pos), len);
        r.pos += len;
        AnyTensor t = detail::decode_tensor(r);
        if (!m.emplace(std::move(name), std::move(t)).second)
            throw FormatError("checkpoint: duplicate tensor name");
    }
    return m;
}

inline void write_checkpoint(const std::filesystem::path& path, const TensorMap& m) {
    detail::write_file(path, serialize_checkpoint(m));
}
inline TensorMap read_checkpoint(const std::filesystem::path& path) {
    return deserialize_checkpoint(detail::read_file(path));
}

}  // namespace varno
