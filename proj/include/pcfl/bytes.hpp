#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "pcfl/common.hpp"

namespace pcfl {

// Big-endian byte packing for wire formats.

struct ByteWriter {
    std::vector<std::uint8_t> bytes;

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u16be(std::uint16_t v) {
        bytes.push_back(static_cast<std::uint8_t>(v >> 8));
        bytes.push_back(static_cast<std::uint8_t>(v & 0xff));
    }
    void u32be(std::uint32_t v) {
        bytes.push_back(static_cast<std::uint8_t>(v >> 24));
        bytes.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
        bytes.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
        bytes.push_back(static_cast<std::uint8_t>(v & 0xff));
    }
    void f32be(float v) {
        std::uint32_t u;
        std::memcpy(&u, &v, sizeof(u));
        u32be(u);
    }
    void raw(std::span<const std::uint8_t> data) { bytes.insert(bytes.end(), data.begin(), data.end()); }
};

struct ByteReader {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;

    explicit ByteReader(std::span<const std::uint8_t> b) : bytes(b) {}

    std::size_t remaining() const { return bytes.size() - pos; }

    void require(std::size_t n, const char* stage) {
        if (remaining() < n) {
            throw decode_error(std::string("truncated input while reading ") + stage);
        }
    }
    std::uint8_t u8(const char* stage) {
        require(1, stage);
        return bytes[pos++];
    }
    std::uint16_t u16be(const char* stage) {
        require(2, stage);
        std::uint16_t v = static_cast<std::uint16_t>((bytes[pos] << 8) | bytes[pos + 1]);
        pos += 2;
        return v;
    }
    std::uint32_t u32be(const char* stage) {
        require(4, stage);
        std::uint32_t v = (static_cast<std::uint32_t>(bytes[pos]) << 24) |
                          (static_cast<std::uint32_t>(bytes[pos + 1]) << 16) |
                          (static_cast<std::uint32_t>(bytes[pos + 2]) << 8) |
                          static_cast<std::uint32_t>(bytes[pos + 3]);
        pos += 4;
        return v;
    }
    float f32be(const char* stage) {
        std::uint32_t u = u32be(stage);
        float v;
        std::memcpy(&v, &u, sizeof(v));
        return v;
    }
    std::span<const std::uint8_t> raw(std::size_t n, const char* stage) {
        require(n, stage);
        auto out = bytes.subspan(pos, n);
        pos += n;
        return out;
    }
};

}  // namespace pcfl
