#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include "qib/matrix.hpp"

namespace qib {

// System labels used throughout: the channel input X, its purifying
// reference X', the side information Y, and the channel output X~.
enum class Label { x, x_prime, y, x_tilde };

inline const char* to_string(Label l) {
    switch (l) {
        case Label::x: return "x";
        case Label::x_prime: return "x'";
        case Label::y: return "y";
        case Label::x_tilde: return "x~";
    }
    return "?";
}

struct Subsystem {
    Label label;
    std::size_t dim;
};

// Ordered list of labeled tensor factors. Composite index convention:
// row-major, leftmost label slowest; index = sum(local_index * stride).
class SubsystemDims {
public:
    SubsystemDims() = default;
    SubsystemDims(std::initializer_list<Subsystem> factors) : factors_(factors) { validate(); }
    explicit SubsystemDims(std::vector<Subsystem> factors) : factors_(std::move(factors)) { validate(); }

    static SubsystemDims single(Label l, std::size_t d) { return SubsystemDims{{l, d}}; }

    std::size_t count() const { return factors_.size(); }
    const Subsystem& factor(std::size_t i) const { return factors_.at(i); }
    const std::vector<Subsystem>& factors() const { return factors_; }

    std::size_t total_dim() const {
        std::size_t d = 1;
        for (const auto& f : factors_) d *= f.dim;
        return d;
    }

    bool has(Label l) const {
        return std::any_of(factors_.begin(), factors_.end(), [&](const Subsystem& f) { return f.label == l; });
    }

    std::size_t position_of(Label l) const {
        for (std::size_t i = 0; i < factors_.size(); ++i)
            if (factors_[i].label == l) return i;
        throw std::invalid_argument(std::string("unknown subsystem label ") + to_string(l));
    }

    std::size_t dim_of(Label l) const { return factors_[position_of(l)].dim; }

    // Stride of factor i in the composite index (product of dims to its right).
    std::size_t stride(std::size_t i) const {
        std::size_t s = 1;
        for (std::size_t k = i + 1; k < factors_.size(); ++k) s *= factors_[k].dim;
        return s;
    }

    std::vector<std::size_t> decompose(std::size_t index) const {
        std::vector<std::size_t> local(factors_.size());
        for (std::size_t i = 0; i < factors_.size(); ++i) {
            const std::size_t s = stride(i);
            local[i] = index / s;
            index %= s;
        }
        return local;
    }

    std::size_t compose(const std::vector<std::size_t>& local) const {
        std::size_t index = 0;
        for (std::size_t i = 0; i < factors_.size(); ++i) index += local[i] * stride(i);
        return index;
    }

    // Factors restricted to `keep`, original order preserved.
    SubsystemDims kept(const std::vector<Label>& keep) const {
        std::vector<Subsystem> out;
        for (const auto& f : factors_)
            if (std::find(keep.begin(), keep.end(), f.label) != keep.end()) out.push_back(f);
        return SubsystemDims(out);
    }

    SubsystemDims with_replaced(Label old_label, Label new_label, std::size_t new_dim) const {
        std::vector<Subsystem> out = factors_;
        out[position_of(old_label)] = {new_label, new_dim};
        return SubsystemDims(out);
    }

    SubsystemDims with_inserted_after(Label anchor, Label new_label, std::size_t new_dim) const {
        std::vector<Subsystem> out;
        for (const auto& f : factors_) {
            out.push_back(f);
            if (f.label == anchor) out.push_back({new_label, new_dim});
        }
        return SubsystemDims(out);
    }

    bool consistent_with(const ComplexMatrix& m) const {
        return m.is_square() && m.rows() == total_dim();
    }

private:
    void validate() const {
        for (std::size_t i = 0; i < factors_.size(); ++i) {
            if (factors_[i].dim == 0) throw std::invalid_argument("subsystem dimension must be >= 1");
            for (std::size_t j = i + 1; j < factors_.size(); ++j)
                if (factors_[i].label == factors_[j].label)
                    throw std::invalid_argument("duplicate subsystem label");
        }
    }

    std::vector<Subsystem> factors_;
};

namespace detail {
inline void require_dims(const ComplexMatrix& m, const SubsystemDims& dims, const char* op) {
    if (!dims.consistent_with(m))
        throw std::invalid_argument(std::string(op) + ": subsystem dims inconsistent with matrix");
}
} // namespace detail

// Trace over the complement of `keep`. Kept factors retain their relative order.
inline ComplexMatrix partial_trace(const ComplexMatrix& m, const SubsystemDims& dims,
                                   const std::vector<Label>& keep) {
    detail::require_dims(m, dims, "partial_trace");
    for (Label l : keep) (void)dims.position_of(l); // rejects unknown labels

    const std::size_t n = dims.count();
    std::vector<bool> keep_mask(n, false);
    for (std::size_t i = 0; i < n; ++i)
        keep_mask[i] = std::find_if(keep.begin(), keep.end(),
                                    [&](Label l) { return l == dims.factor(i).label; }) != keep.end();

    const SubsystemDims out_dims = dims.kept(keep);
    ComplexMatrix out(out_dims.total_dim(), out_dims.total_dim());

    const std::size_t dim = dims.total_dim();
    for (std::size_t r = 0; r < dim; ++r) {
        const auto rl = dims.decompose(r);
        for (std::size_t c = 0; c < dim; ++c) {
            const auto cl = dims.decompose(c);
            bool diagonal_on_traced = true;
            for (std::size_t i = 0; i < n; ++i)
                if (!keep_mask[i] && rl[i] != cl[i]) { diagonal_on_traced = false; break; }
            if (!diagonal_on_traced) continue;

            std::vector<std::size_t> ro, co;
            for (std::size_t i = 0; i < n; ++i)
                if (keep_mask[i]) { ro.push_back(rl[i]); co.push_back(cl[i]); }
            out(out_dims.compose(ro), out_dims.compose(co)) += m(r, c);
        }
    }
    return out;
}

// Transpose the indices of one factor, leaving the rest untouched.
inline ComplexMatrix partial_transpose(const ComplexMatrix& m, const SubsystemDims& dims, Label sys) {
    detail::require_dims(m, dims, "partial_transpose");
    const std::size_t pos = dims.position_of(sys);
    const std::size_t dim = dims.total_dim();
    ComplexMatrix out(dim, dim);
    for (std::size_t r = 0; r < dim; ++r) {
        auto rl = dims.decompose(r);
        for (std::size_t c = 0; c < dim; ++c) {
            auto cl = dims.decompose(c);
            std::swap(rl[pos], cl[pos]);
            out(dims.compose(rl), dims.compose(cl)) = m(r, c);
            std::swap(rl[pos], cl[pos]);
        }
    }
    return out;
}

// Extend an operator to a larger labeled space, acting as identity on the
// factors it does not carry. The operator's labels must appear in `target`
// in the same relative order.
inline ComplexMatrix embed_operator(const ComplexMatrix& m, const SubsystemDims& m_dims,
                                    const SubsystemDims& target) {
    detail::require_dims(m, m_dims, "embed_operator");
    std::vector<std::size_t> slot; // position in target of each m factor
    std::size_t cursor = 0;
    for (const auto& f : m_dims.factors()) {
        bool found = false;
        for (std::size_t i = cursor; i < target.count(); ++i) {
            if (target.factor(i).label == f.label) {
                if (target.factor(i).dim != f.dim)
                    throw std::invalid_argument("embed_operator: factor dimension mismatch");
                slot.push_back(i);
                cursor = i + 1;
                found = true;
                break;
            }
        }
        if (!found)
            throw std::invalid_argument("embed_operator: operator labels not ordered within target");
    }

    const std::size_t n = target.count();
    std::vector<bool> is_op_factor(n, false);
    for (std::size_t s : slot) is_op_factor[s] = true;

    const std::size_t dim = target.total_dim();
    ComplexMatrix out(dim, dim);
    for (std::size_t r = 0; r < dim; ++r) {
        const auto rl = target.decompose(r);
        for (std::size_t c = 0; c < dim; ++c) {
            const auto cl = target.decompose(c);
            bool identity_ok = true;
            for (std::size_t i = 0; i < n; ++i)
                if (!is_op_factor[i] && rl[i] != cl[i]) { identity_ok = false; break; }
            if (!identity_ok) continue;

            std::vector<std::size_t> rm(slot.size()), cm(slot.size());
            for (std::size_t k = 0; k < slot.size(); ++k) { rm[k] = rl[slot[k]]; cm[k] = cl[slot[k]]; }
            out(r, c) = m(m_dims.compose(rm), m_dims.compose(cm));
        }
    }
    return out;
}

} // namespace qib
