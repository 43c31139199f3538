#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fedae/errors.hpp"

namespace fedae {

// All file and wire formats are little-endian regardless of host order.

class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& out) : out_(out) {}

    void magic(const char (&m)[5]) { out_.write(m, 4); }
    void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
    void u16(std::uint16_t v) { put_le(v); }
    void u32(std::uint32_t v) { put_le(v); }
    void u64(std::uint64_t v) { put_le(v); }
    void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }

    void f32_block(std::span<const float> values) {
        if constexpr (std::endian::native == std::endian::little) {
            out_.write(reinterpret_cast<const char*>(values.data()),
                       static_cast<std::streamsize>(values.size() * sizeof(float)));
        } else {
            for (float v : values) f32(v);
        }
    }

    void bytes(std::span<const std::uint8_t> data) {
        out_.write(reinterpret_cast<const char*>(data.data()),
                   static_cast<std::streamsize>(data.size()));
    }

private:
    template <typename T>
    void put_le(T v) {
        char buf[sizeof(T)];
        for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
        out_.write(buf, sizeof(T));
    }

    std::ostream& out_;
};

/// Stream reader that tracks the byte offset so parse errors can point at it.
class BinaryReader {
public:
    explicit BinaryReader(std::istream& in, std::string source = "stream")
        : in_(in), source_(std::move(source)) {}

    std::size_t offset() const { return offset_; }

    void expect_magic(const char (&m)[5]) {
        char buf[4];
        raw(buf, 4, "magic");
        if (std::memcmp(buf, m, 4) != 0) {
            fail("bad magic, expected \"" + std::string(m, 4) + "\"", offset_ - 4);
        }
    }

    std::uint8_t u8() {
        char c;
        raw(&c, 1, "u8");
        return static_cast<std::uint8_t>(c);
    }
    std::uint16_t u16() { return get_le<std::uint16_t>(); }
    std::uint32_t u32() { return get_le<std::uint32_t>(); }
    std::uint64_t u64() { return get_le<std::uint64_t>(); }
    float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }

    /// Big-endian u32 (IDX files only).
    std::uint32_t u32_be() {
        char buf[4];
        raw(buf, 4, "integer");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<std::uint8_t>(buf[i]);
        return v;
    }

    void u8_block(std::span<std::uint8_t> dst) {
        raw(reinterpret_cast<char*>(dst.data()), dst.size(), "u8 block");
    }

    void f32_block(std::span<float> dst) {
        if constexpr (std::endian::native == std::endian::little) {
            raw(reinterpret_cast<char*>(dst.data()), dst.size() * sizeof(float), "f32 block");
        } else {
            for (float& v : dst) v = f32();
        }
    }

    [[noreturn]] void fail(const std::string& what, std::size_t at) const {
        throw ParseError(source_ + ": " + what + " at byte " + std::to_string(at));
    }

private:
    void raw(char* dst, std::size_t n, const char* what) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            fail(std::string("truncated ") + what, offset_);
        }
        offset_ += n;
    }

    template <typename T>
    T get_le() {
        char buf[sizeof(T)];
        raw(buf, sizeof(T), "integer");
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<T>(static_cast<std::uint8_t>(buf[i])) << (8 * i);
        }
        return v;
    }

    std::istream& in_;
    std::string source_;
    std::size_t offset_ = 0;
};

} // namespace fedae
