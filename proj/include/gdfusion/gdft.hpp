#pragma once
// GDFT binary tensor container: magic "GDFT", u32 version (=1), u32 rank,
// rank x u64 extents, then row-major little-endian f64 payload. Round-trips
// are bit-exact.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "gdfusion/tensor.hpp"

namespace gdfusion::gdft {

inline constexpr std::uint32_t kVersion = 1;

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("gdft: truncated header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw IoError("gdft: truncated stream");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double get_f64(std::istream& is) {
    const std::uint64_t bits = get_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace detail

inline void write(std::ostream& os, const Tensor& t) {
    os.write("GDFT", 4);
    detail::put_u32(os, kVersion);
    detail::put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.dims()) detail::put_u64(os, d);
    for (double v : t.values()) detail::put_f64(os, v);
    if (!os) throw IoError("gdft: write failed");
}

inline Tensor read(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "GDFT", 4) != 0) throw IoError("gdft: bad magic");
    const std::uint32_t version = detail::get_u32(is);
    if (version != kVersion) throw IoError("gdft: unsupported version " + std::to_string(version));
    const std::uint32_t rank = detail::get_u32(is);
    std::vector<std::size_t> dims(rank);
    std::size_t count = rank == 0 ? 0 : 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        dims[i] = static_cast<std::size_t>(detail::get_u64(is));
        count *= dims[i];
    }
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) data[i] = detail::get_f64(is);
    return Tensor(std::move(dims), std::move(data));
}

inline void write_file(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("gdft: cannot open " + path.string() + " for writing");
    write(os, t);
}

inline Tensor read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("gdft: cannot open " + path.string());
    return read(is);
}

// Serialized size in bytes; the memory accounting contract derives from this,
// never from allocator introspection.
inline std::size_t byte_size(const Tensor& t) {
    return 4 + 4 + 4 + 8 * t.rank() + 8 * t.size();
}

}  // namespace gdfusion::gdft
