#pragma once

// Blockade-constrained Hilbert space: basis states are independent sets of
// the blockade graph, stored in canonical bitstring order (lexicographic by
// site, empty pattern first).

#include <algorithm>
#include <cstdint>
#include <vector>

#include "rydberg/bitset.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/lattice.hpp"

namespace rydberg {

class Basis {
public:
    Basis() = default;
    Basis(int n_sites, std::vector<Bitstring> states)
        : n_sites_(n_sites), states_(std::move(states)) {}

    int n_sites() const { return n_sites_; }
    std::int64_t dim() const { return static_cast<std::int64_t>(states_.size()); }

    const Bitstring& state_of(std::int64_t i) const {
        if (i < 0 || i >= dim()) throw std::out_of_range("Basis::state_of: index out of range");
        return states_[static_cast<std::size_t>(i)];
    }

    std::int64_t index_of(const Bitstring& s) const {
        auto it = std::lower_bound(states_.begin(), states_.end(), s);
        if (it == states_.end() || !(*it == s)) return -1;
        return it - states_.begin();
    }

    const std::vector<Bitstring>& states() const { return states_; }

private:
    int n_sites_ = 0;
    std::vector<Bitstring> states_;
};

namespace detail {

// visit returns false to abort the traversal
template <class Visit>
inline void independent_set_dfs(int n, const std::vector<Bitstring>& nbr_mask, Visit&& visit) {
    Bitstring cur(n), blocked(n);
    // ascending site order, empty branch first, emits canonical order directly
    auto rec = [&](auto&& self, int i) -> bool {
        if (i == n) return visit(cur);
        if (!self(self, i + 1)) return false;
        if (!blocked.test(i)) {
            cur.set(i);
            Bitstring saved = blocked;
            blocked = blocked | nbr_mask[static_cast<std::size_t>(i)];
            bool cont = self(self, i + 1);
            blocked = saved;
            cur.reset(i);
            if (!cont) return false;
        }
        return true;
    };
    rec(rec, 0);
}

} // namespace detail

// All independent sets of the blockade graph at radius rb. Throws
// CapacityError when the dimension exceeds cap.
inline Basis enumerate_basis(const RubyLattice& lat, double rb,
                             std::int64_t cap = 50'000'000) {
    auto g = blockade_graph(lat, rb);
    int n = lat.n_sites();

    std::int64_t count = 0;
    detail::independent_set_dfs(n, g.mask, [&](const Bitstring&) { return ++count <= cap; });
    if (count > cap)
        throw CapacityError("enumerate_basis: dimension exceeds cap " + std::to_string(cap) +
                                " (at least " + std::to_string(count) + " states)",
                            count, cap);

    std::vector<Bitstring> states;
    states.reserve(static_cast<std::size_t>(count));
    detail::independent_set_dfs(n, g.mask, [&](const Bitstring& s) {
        states.push_back(s);
        return true;
    });
    return Basis(n, std::move(states));
}

enum class VertexRule { bulk, strict };

// Indices of basis states that are perfect dimer coverings: every counted
// kagome vertex touched by exactly one excited atom. The bulk rule counts
// only fully coordinated vertices; strict counts them all.
inline std::vector<std::int64_t> dimer_sector(const Basis& b, const RubyLattice& lat,
                                              VertexRule rule = VertexRule::bulk) {
    std::vector<const Bitstring*> stars;
    for (std::size_t v = 0; v < lat.vertices.size(); ++v)
        if (rule == VertexRule::strict || lat.vertices[v].full())
            stars.push_back(&lat.star_mask(static_cast<int>(v)));
    std::vector<std::int64_t> out;
    for (std::int64_t i = 0; i < b.dim(); ++i) {
        const Bitstring& s = b.state_of(i);
        bool ok = true;
        for (const Bitstring* star : stars)
            if (s.count_and(*star) != 1) {
                ok = false;
                break;
            }
        if (ok) out.push_back(i);
    }
    return out;
}

} // namespace rydberg
