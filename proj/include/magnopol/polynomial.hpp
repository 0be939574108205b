#pragma once

#include "magnopol/errors.hpp"
#include "magnopol/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <vector>

namespace magnopol {

/// Real polynomial, coefficients in ascending order: c[0] + c[1] x + ...
class Polynomial {
public:
    Polynomial() = default;
    Polynomial(std::initializer_list<double> c) : c_(c) {}
    explicit Polynomial(std::vector<double> c) : c_(std::move(c)) {}

    [[nodiscard]] const std::vector<double>& coefficients() const noexcept { return c_; }
    [[nodiscard]] std::size_t degree() const { return c_.empty() ? 0 : c_.size() - 1; }

    template <typename T>
    [[nodiscard]] T operator()(T x) const {
        T acc{};
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
        return acc;
    }

    [[nodiscard]] Polynomial derivative() const {
        if (c_.size() <= 1) return Polynomial{0.0};
        std::vector<double> d(c_.size() - 1);
        for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = static_cast<double>(i) * c_[i];
        return Polynomial(std::move(d));
    }

    friend Polynomial operator+(const Polynomial& p, const Polynomial& q) {
        std::vector<double> r(std::max(p.c_.size(), q.c_.size()), 0.0);
        for (std::size_t i = 0; i < p.c_.size(); ++i) r[i] += p.c_[i];
        for (std::size_t i = 0; i < q.c_.size(); ++i) r[i] += q.c_[i];
        return Polynomial(std::move(r));
    }

    friend Polynomial operator*(const Polynomial& p, const Polynomial& q) {
        if (p.c_.empty() || q.c_.empty()) return Polynomial{};
        std::vector<double> r(p.c_.size() + q.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < p.c_.size(); ++i)
            for (std::size_t j = 0; j < q.c_.size(); ++j) r[i + j] += p.c_[i] * q.c_[j];
        return Polynomial(std::move(r));
    }

    friend Polynomial operator*(double s, Polynomial p) {
        for (auto& v : p.c_) v *= s;
        return p;
    }

private:
    std::vector<double> c_;
};

/// Complex roots via eigenvalues of the companion matrix, each polished by a
/// few Newton steps on the original polynomial. The variable is first rescaled
/// so the constant and leading coefficients have equal magnitude; leading
/// coefficients that are still negligible are then dropped, so a cubic whose
/// nonlinear terms vanish degrades gracefully to a lower degree.
[[nodiscard]] inline std::vector<std::complex<double>> polynomial_roots(const Polynomial& p) {
    using C = std::complex<double>;
    std::vector<double> c = p.coefficients();
    for (double v : c)
        if (!std::isfinite(v)) throw conditioning_error("polynomial coefficient is not finite");
    while (!c.empty() && c.back() == 0.0) c.pop_back();
    if (c.empty()) throw domain_error("polynomial_roots: zero polynomial");

    // factor out exact zero roots
    std::vector<C> roots;
    std::size_t lead_zero = 0;
    while (lead_zero < c.size() && c[lead_zero] == 0.0) ++lead_zero;
    for (std::size_t i = 0; i < lead_zero; ++i) roots.emplace_back(0.0, 0.0);
    c.erase(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(lead_zero));
    if (c.size() <= 1) return roots;
    const Polynomial q(c);

    // x = s y with |c0| = |cn| s^n
    const double s = std::pow(std::abs(c.front()) / std::abs(c.back()), 1.0 / static_cast<double>(c.size() - 1));
    if (!(s > 0.0) || !std::isfinite(s))
        throw conditioning_error("polynomial coefficient spread exceeds floating-point range");
    double cmax = 0.0, sk = 1.0;
    for (double& v : c) {
        v *= sk;
        sk *= s;
        if (!std::isfinite(v)) throw conditioning_error("polynomial coefficient spread exceeds floating-point range");
        cmax = std::max(cmax, std::abs(v));
    }
    for (double& v : c) v /= cmax;
    while (c.size() > 1 && std::abs(c.back()) <= 1e-14) c.pop_back();
    if (c.size() <= 1) return roots;

    double cmin = std::numeric_limits<double>::infinity();
    for (double v : c)
        if (v != 0.0) cmin = std::min(cmin, std::abs(v));
    if (cmin < std::numeric_limits<double>::min() * 1e16)
        throw conditioning_error("polynomial coefficient spread exceeds floating-point range");

    const std::size_t n = c.size() - 1;
    const double lead = c.back();
    ComplexMatrix companion(n);
    for (std::size_t j = 0; j < n; ++j) companion(0, j) = -c[n - 1 - j] / lead;
    for (std::size_t i = 1; i < n; ++i) companion(i, i - 1) = 1.0;

    const Polynomial dq = q.derivative();
    for (C z : eigenvalues(companion)) {
        z *= s;
        for (int it = 0; it < 4; ++it) {
            const C f = q(z);
            const C df = dq(z);
            if (std::abs(df) == 0.0) break;
            const C next = z - f / df;
            if (!(std::abs(q(next)) < std::abs(f))) break;
            z = next;
        }
        roots.push_back(z);
    }
    return roots;
}

/// Real-root acceptance: |Im z| < 1e-7 |z| + 1e-10.
[[nodiscard]] inline bool is_effectively_real(std::complex<double> z) {
    return std::abs(z.imag()) < 1e-7 * std::abs(z) + 1e-10;
}

[[nodiscard]] inline std::vector<double> real_roots(const Polynomial& p) {
    std::vector<double> out;
    for (auto z : polynomial_roots(p))
        if (is_effectively_real(z)) out.push_back(z.real());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace magnopol
