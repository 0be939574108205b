#pragma once

// Dense eigenvalues for the tiny matrices this library needs (4x4 Jacobians,
// <=6x6 companion matrices): balancing, Householder reduction to upper
// Hessenberg form, then single-shift complex QR with Wilkinson shifts.

#include "magnopol/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <vector>

namespace magnopol {

class ComplexMatrix {
public:
    using value_type = std::complex<double>;

    ComplexMatrix() = default;
    explicit ComplexMatrix(std::size_t n) : n_(n), data_(n * n) {}
    ComplexMatrix(std::initializer_list<std::initializer_list<value_type>> rows)
        : n_(rows.size()), data_(rows.size() * rows.size()) {
        std::size_t i = 0;
        for (const auto& row : rows) {
            if (row.size() != n_) throw domain_error("ComplexMatrix: rows must form a square");
            std::size_t j = 0;
            for (const auto& v : row) (*this)(i, j++) = v;
            ++i;
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    value_type& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    const value_type& operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

    [[nodiscard]] double max_abs() const {
        double m = 0.0;
        for (const auto& v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    ComplexMatrix& operator*=(double s) {
        for (auto& v : data_) v *= s;
        return *this;
    }

    [[nodiscard]] std::string dump() const {
        std::ostringstream os;
        os.precision(17);
        for (std::size_t i = 0; i < n_; ++i) {
            os << "[";
            for (std::size_t j = 0; j < n_; ++j) os << (j ? ", " : "") << (*this)(i, j);
            os << "]\n";
        }
        return os.str();
    }

private:
    std::size_t n_ = 0;
    std::vector<value_type> data_;
};

namespace detail {

// Parlett-Reinsch style diagonal balancing with powers of two (exact scaling).
inline void balance(ComplexMatrix& a) {
    const std::size_t n = a.size();
    constexpr double radix = 2.0;
    bool done = false;
    for (int sweep = 0; !done && sweep < 100; ++sweep) {
        done = true;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0, c = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(a(j, i));
                r += std::abs(a(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double f = 1.0;
            const double s = c + r;
            double g = r / radix;
            while (c < g) {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= radix * radix;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                for (std::size_t j = 0; j < n; ++j) a(i, j) /= f;
                for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
            }
        }
    }
}

inline void to_hessenberg(ComplexMatrix& a) {
    using C = std::complex<double>;
    const std::size_t n = a.size();
    if (n < 3) return;
    std::vector<C> v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double norm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) norm += std::norm(a(i, k));
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        const C x0 = a(k + 1, k);
        const C phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : C(1.0);
        const C alpha = -phase * norm;
        std::fill(v.begin(), v.end(), C{});
        for (std::size_t i = k + 1; i < n; ++i) v[i] = a(i, k);
        v[k + 1] -= alpha;
        double vnorm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) vnorm += std::norm(v[i]);
        if (vnorm == 0.0) continue;
        // A <- (I - 2 v v^H / |v|^2) A (I - 2 v v^H / |v|^2)
        for (std::size_t j = 0; j < n; ++j) {
            C dot{};
            for (std::size_t i = k + 1; i < n; ++i) dot += std::conj(v[i]) * a(i, j);
            dot *= 2.0 / vnorm;
            for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= v[i] * dot;
        }
        for (std::size_t i = 0; i < n; ++i) {
            C dot{};
            for (std::size_t j = k + 1; j < n; ++j) dot += a(i, j) * v[j];
            dot *= 2.0 / vnorm;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= dot * std::conj(v[j]);
        }
        for (std::size_t i = k + 2; i < n; ++i) a(i, k) = C{};
    }
}

// Eigenvalue of the trailing 2x2 block [[a, b], [c, d]] closest to d.
inline std::complex<double> wilkinson_shift(std::complex<double> a, std::complex<double> b,
                                            std::complex<double> c, std::complex<double> d) {
    const auto half_tr = 0.5 * (a + d);
    const auto det = a * d - b * c;
    const auto disc = std::sqrt(half_tr * half_tr - det);
    const auto l1 = half_tr + disc;
    const auto l2 = half_tr - disc;
    return std::abs(l1 - d) < std::abs(l2 - d) ? l1 : l2;
}

} // namespace detail

/// All eigenvalues of a small dense complex matrix. Throws numeric_error
/// (with the matrix dumped into the message) when QR fails to converge.
[[nodiscard]] inline std::vector<std::complex<double>> eigenvalues(ComplexMatrix a) {
    using C = std::complex<double>;
    const std::size_t n = a.size();
    std::vector<C> out;
    out.reserve(n);
    if (n == 0) return out;
    const ComplexMatrix original = a;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag()))
                throw numeric_error("eigenvalues: non-finite matrix entry\n" + original.dump());

    detail::balance(a);
    detail::to_hessenberg(a);

    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr int max_iter_per_value = 60;
    std::vector<C> cs(n), ss(n);

    long hi = static_cast<long>(n) - 1;
    int iter = 0;
    while (hi >= 0) {
        // locate the start of the unreduced block ending at hi
        long l = hi;
        while (l > 0) {
            const double scale = std::abs(a(l, l)) + std::abs(a(l - 1, l - 1));
            const double sub = std::abs(a(l, l - 1));
            if (sub <= eps * (scale > 0.0 ? scale : a.max_abs())) {
                a(l, l - 1) = C{};
                break;
            }
            --l;
        }
        if (l == hi) {
            out.push_back(a(hi, hi));
            --hi;
            iter = 0;
            continue;
        }
        if (++iter > max_iter_per_value)
            throw numeric_error("eigenvalues: QR iteration did not converge\n" + original.dump());

        C mu;
        if (iter % 11 == 10) {
            // exceptional shift
            double ex = std::abs(a(hi, hi - 1));
            if (hi - 2 >= l) ex += std::abs(a(hi - 1, hi - 2));
            mu = a(hi, hi) + ex;
        } else {
            mu = detail::wilkinson_shift(a(hi - 1, hi - 1), a(hi - 1, hi), a(hi, hi - 1), a(hi, hi));
        }

        for (long k = l; k <= hi; ++k) a(k, k) -= mu;
        for (long k = l; k < hi; ++k) {
            const C x = a(k, k);
            const C y = a(k + 1, k);
            const double r = std::hypot(std::abs(x), std::abs(y));
            C c = 1.0, s = 0.0;
            if (r > 0.0) {
                c = x / r;
                s = y / r;
            }
            cs[k] = c;
            ss[k] = s;
            for (long j = k; j <= hi; ++j) {
                const C u = a(k, j);
                const C v = a(k + 1, j);
                a(k, j) = std::conj(c) * u + std::conj(s) * v;
                a(k + 1, j) = -s * u + c * v;
            }
        }
        for (long k = l; k < hi; ++k) {
            const C c = cs[k];
            const C s = ss[k];
            const long row_end = std::min(k + 2, hi);
            for (long i = l; i <= row_end; ++i) {
                const C u = a(i, k);
                const C v = a(i, k + 1);
                a(i, k) = u * c + v * s;
                a(i, k + 1) = -u * std::conj(s) + v * std::conj(c);
            }
        }
        for (long k = l; k <= hi; ++k) a(k, k) += mu;
    }
    return out;
}

} // namespace magnopol
