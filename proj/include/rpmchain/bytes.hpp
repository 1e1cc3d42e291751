#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rpmchain {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

inline std::string to_string(ByteView b) {
    return {reinterpret_cast<const char*>(b.data()), b.size()};
}

// Canonical little-endian, length-prefixed encoder. Every byte layout that
// gets hashed or signed in this project goes through one of these so the
// encodings stay implementation-independent.
class ByteWriter {
public:
    void u8(uint8_t v) { out_.push_back(v); }

    void u32le(uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void u64le(uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void f64le(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        u64le(bits);
    }

    void raw(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }

    void lp(ByteView b) {
        u32le(static_cast<uint32_t>(b.size()));
        raw(b);
    }

    void lp_str(std::string_view s) { lp(as_bytes(s)); }

    Bytes take() { return std::move(out_); }
    const Bytes& view() const { return out_; }

private:
    Bytes out_;
};

// Strict reader for the ByteWriter layout. Every accessor reports failure
// instead of reading past the end; callers check ok() or the returns.
class ByteReader {
public:
    explicit ByteReader(ByteView in) : in_(in) {}

    bool u8(uint8_t& v) {
        if (pos_ + 1 > in_.size()) return fail();
        v = in_[pos_++];
        return true;
    }

    bool u32le(uint32_t& v) {
        if (pos_ + 4 > in_.size()) return fail();
        v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(in_[pos_++]) << (8 * i);
        return true;
    }

    bool u64le(uint64_t& v) {
        if (pos_ + 8 > in_.size()) return fail();
        v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(in_[pos_++]) << (8 * i);
        return true;
    }

    bool f64le(double& v) {
        uint64_t bits = 0;
        if (!u64le(bits)) return false;
        std::memcpy(&v, &bits, sizeof(v));
        return true;
    }

    bool raw(std::span<uint8_t> out) {
        if (pos_ + out.size() > in_.size()) return fail();
        std::memcpy(out.data(), in_.data() + pos_, out.size());
        pos_ += out.size();
        return true;
    }

    bool lp(Bytes& out) {
        uint32_t n = 0;
        if (!u32le(n)) return false;
        if (pos_ + n > in_.size()) return fail();
        out.assign(in_.begin() + static_cast<ptrdiff_t>(pos_),
                   in_.begin() + static_cast<ptrdiff_t>(pos_ + n));
        pos_ += n;
        return true;
    }

    bool lp_str(std::string& out) {
        Bytes b;
        if (!lp(b)) return false;
        out.assign(b.begin(), b.end());
        return true;
    }

    bool at_end() const { return ok_ && pos_ == in_.size(); }
    bool ok() const { return ok_; }

private:
    bool fail() {
        ok_ = false;
        return false;
    }

    ByteView in_;
    size_t pos_ = 0;
    bool ok_ = true;
};

} // namespace rpmchain
