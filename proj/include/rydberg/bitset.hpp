#pragma once

#include <bit>
#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rydberg {

// Occupation pattern over a fixed number of sites. Bit i is site i.
//
// Canonical order: patterns compare lexicographically by site index, site 0
// first, with 0 < 1. This equals plain string comparison of to_string(), and
// the all-empty pattern is the minimum.
class Bitstring {
public:
    Bitstring() = default;

    explicit Bitstring(int n_bits)
        : n_(n_bits), w_((n_bits + 63) / 64, 0ull) {
        if (n_bits < 0) throw std::invalid_argument("Bitstring: negative size");
    }

    static Bitstring from_string(const std::string& s) {
        Bitstring b(static_cast<int>(s.size()));
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '1') b.set(static_cast<int>(i));
            else if (s[i] != '0') throw std::invalid_argument("Bitstring: bad character in '" + s + "'");
        }
        return b;
    }

    int size() const { return n_; }

    bool test(int i) const { return (w_[i >> 6] >> (i & 63)) & 1ull; }
    void set(int i) { w_[i >> 6] |= (1ull << (i & 63)); }
    void reset(int i) { w_[i >> 6] &= ~(1ull << (i & 63)); }
    void flip(int i) { w_[i >> 6] ^= (1ull << (i & 63)); }

    int count() const {
        int c = 0;
        for (auto w : w_) c += std::popcount(w);
        return c;
    }

    bool intersects(const Bitstring& o) const {
        for (std::size_t k = 0; k < w_.size(); ++k)
            if (w_[k] & o.w_[k]) return true;
        return false;
    }

    int count_and(const Bitstring& o) const {
        int c = 0;
        for (std::size_t k = 0; k < w_.size(); ++k) c += std::popcount(w_[k] & o.w_[k]);
        return c;
    }

    Bitstring operator^(const Bitstring& o) const {
        Bitstring r(*this);
        for (std::size_t k = 0; k < w_.size(); ++k) r.w_[k] ^= o.w_[k];
        return r;
    }

    Bitstring operator&(const Bitstring& o) const {
        Bitstring r(*this);
        for (std::size_t k = 0; k < w_.size(); ++k) r.w_[k] &= o.w_[k];
        return r;
    }

    Bitstring operator|(const Bitstring& o) const {
        Bitstring r(*this);
        for (std::size_t k = 0; k < w_.size(); ++k) r.w_[k] |= o.w_[k];
        return r;
    }

    bool none() const {
        for (auto w : w_) if (w) return false;
        return true;
    }

    bool operator==(const Bitstring& o) const { return n_ == o.n_ && w_ == o.w_; }
    bool operator!=(const Bitstring& o) const { return !(*this == o); }

    // Lexicographic by site index; within a word the low bit is the earlier site.
    bool operator<(const Bitstring& o) const {
        for (std::size_t k = 0; k < w_.size(); ++k) {
            std::uint64_t d = w_[k] ^ o.w_[k];
            if (d) {
                std::uint64_t low = d & (~d + 1);
                return (w_[k] & low) == 0;
            }
        }
        return false;
    }

    std::string to_string() const {
        std::string s(static_cast<std::size_t>(n_), '0');
        for (int i = 0; i < n_; ++i)
            if (test(i)) s[static_cast<std::size_t>(i)] = '1';
        return s;
    }

    std::uint64_t hash() const {
        std::uint64_t h = 0x9e3779b97f4a7c15ull ^ static_cast<std::uint64_t>(n_);
        for (auto w : w_) {
            h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
            h *= 0xff51afd7ed558ccdull;
        }
        return h;
    }

private:
    int n_ = 0;
    std::vector<std::uint64_t> w_;
};

struct BitstringHash {
    std::size_t operator()(const Bitstring& b) const { return static_cast<std::size_t>(b.hash()); }
};

} // namespace rydberg
