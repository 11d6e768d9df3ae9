#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rydberg {

using cplx = std::complex<double>;

// Compressed sparse row, complex entries, columns sorted within each row.
// Assembly is deterministic, so applications sum in a fixed order.
struct SparseOperator {
    std::int64_t dim = 0;
    std::vector<std::int64_t> row_ptr;
    std::vector<std::int32_t> col;
    std::vector<cplx> val;

    std::int64_t nnz() const { return static_cast<std::int64_t>(col.size()); }

    void apply(const cplx* x, cplx* y) const {
        for (std::int64_t r = 0; r < dim; ++r) {
            cplx acc = 0;
            for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
                acc += val[static_cast<std::size_t>(k)] * x[col[static_cast<std::size_t>(k)]];
            y[r] = acc;
        }
    }

    std::vector<cplx> apply(const std::vector<cplx>& x) const {
        if (static_cast<std::int64_t>(x.size()) != dim)
            throw std::invalid_argument("SparseOperator::apply: size mismatch");
        std::vector<cplx> y(x.size());
        apply(x.data(), y.data());
        return y;
    }

    // max |A_ij - conj(A_ji)| over stored entries (and their mirrors)
    double hermiticity_defect() const {
        std::map<std::pair<std::int64_t, std::int64_t>, cplx> entries;
        for (std::int64_t r = 0; r < dim; ++r)
            for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
                entries[{r, col[static_cast<std::size_t>(k)]}] = val[static_cast<std::size_t>(k)];
        double worst = 0;
        for (const auto& [ij, v] : entries) {
            auto it = entries.find({ij.second, ij.first});
            cplx mirror = it == entries.end() ? cplx(0) : it->second;
            worst = std::max(worst, std::abs(v - std::conj(mirror)));
        }
        return worst;
    }
};

// Row-wise builder; emit may be called in any column order within a row.
class SparseBuilder {
public:
    explicit SparseBuilder(std::int64_t dim) : dim_(dim) { a_.row_ptr.assign(1, 0); }

    template <class RowFn>
    static SparseOperator assemble(std::int64_t dim, RowFn&& fn) {
        SparseBuilder b(dim);
        std::vector<std::pair<std::int32_t, cplx>> row;
        for (std::int64_t r = 0; r < dim; ++r) {
            row.clear();
            fn(r, [&](std::int64_t c, cplx v) { row.emplace_back(static_cast<std::int32_t>(c), v); });
            std::sort(row.begin(), row.end(),
                      [](const auto& x, const auto& y) { return x.first < y.first; });
            for (std::size_t k = 0; k < row.size(); ++k) {
                if (k + 1 < row.size() && row[k].first == row[k + 1].first) {
                    row[k + 1].second += row[k].second;
                    continue;
                }
                if (row[k].second != cplx(0)) {
                    b.a_.col.push_back(row[k].first);
                    b.a_.val.push_back(row[k].second);
                }
            }
            b.a_.row_ptr.push_back(b.a_.nnz());
        }
        b.a_.dim = dim;
        return std::move(b.a_);
    }

private:
    std::int64_t dim_;
    SparseOperator a_;
};

// Matrix-free Hermitian operator for iterative solvers.
struct LinearMap {
    std::int64_t dim = 0;
    std::function<void(const cplx*, cplx*)> op;

    void apply(const cplx* x, cplx* y) const { op(x, y); }
};

inline LinearMap as_map(const SparseOperator& a) {
    return {a.dim, [&a](const cplx* x, cplx* y) { a.apply(x, y); }};
}

} // namespace rydberg
