#pragma once

#include "pda/bytes.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pda {

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Canonical binary encoding. The format is documented bit-exactly in
// docs/encoding.md; every signature and attestation in the system is
// computed over bytes produced here.
class Encoder {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }

    void u32(std::uint32_t v) {
        for (int shift = 24; shift >= 0; shift -= 8)
            buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    }

    void u64(std::uint64_t v) {
        for (int shift = 56; shift >= 0; shift -= 8)
            buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    }

    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

    void f64(double v) {
        if (!std::isfinite(v)) throw std::invalid_argument("canonical f64 must be finite");
        u64(std::bit_cast<std::uint64_t>(v));
    }

    void boolean(bool v) { u8(v ? 1 : 0); }

    // length-prefixed
    void bytes(std::span<const std::uint8_t> v) {
        u32(static_cast<std::uint32_t>(v.size()));
        raw(v);
    }

    void str(std::string_view v) {
        u32(static_cast<std::uint32_t>(v.size()));
        buf_.insert(buf_.end(), v.begin(), v.end());
    }

    // fixed-width, no prefix
    void raw(std::span<const std::uint8_t> v) { buf_.insert(buf_.end(), v.begin(), v.end()); }

    template <std::size_t N>
    void fixed(const std::array<std::uint8_t, N>& v) {
        raw(std::span<const std::uint8_t>(v.data(), N));
    }

    const Bytes& buffer() const { return buf_; }
    Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
};

class Decoder {
public:
    explicit Decoder(std::span<const std::uint8_t> buf) : buf_(buf) {}

    std::uint8_t u8() {
        need(1);
        return buf_[pos_++];
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | buf_[pos_++];
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | buf_[pos_++];
        return v;
    }

    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }

    double f64() {
        double v = std::bit_cast<double>(u64());
        if (!std::isfinite(v)) throw DecodeError("non-finite f64");
        return v;
    }

    bool boolean() {
        std::uint8_t v = u8();
        if (v > 1) throw DecodeError("invalid boolean byte");
        return v == 1;
    }

    Bytes bytes() {
        std::uint32_t n = u32();
        need(n);
        Bytes out(buf_.begin() + pos_, buf_.begin() + pos_ + n);
        pos_ += n;
        return out;
    }

    std::string str() {
        std::uint32_t n = u32();
        need(n);
        std::string out(reinterpret_cast<const char*>(buf_.data() + pos_), n);
        pos_ += n;
        return out;
    }

    template <std::size_t N>
    std::array<std::uint8_t, N> fixed() {
        need(N);
        std::array<std::uint8_t, N> out;
        for (std::size_t i = 0; i < N; ++i) out[i] = buf_[pos_ + i];
        pos_ += N;
        return out;
    }

    std::size_t remaining() const { return buf_.size() - pos_; }
    bool done() const { return pos_ == buf_.size(); }

    void expect_end() const {
        if (!done()) throw DecodeError("trailing bytes after value");
    }

private:
    void need(std::size_t n) const {
        if (buf_.size() - pos_ < n) throw DecodeError("truncated input");
    }

    std::span<const std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

template <typename T>
Bytes canonical_encode(const T& v) {
    Encoder e;
    v.encode_to(e);
    return e.take();
}

template <typename T>
T canonical_decode(std::span<const std::uint8_t> buf) {
    Decoder d(buf);
    T v = T::decode_from(d);
    d.expect_end();
    return v;
}

}  // namespace pda
