#pragma once

// Reference computations that share no code with the library.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "rsflow/geometry.hpp"

namespace oracle {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Metric3 = std::function<Mat3(const std::array<double, 3>&)>;

// Fourth-order central difference of a scalar function of one coordinate.
template <class F>
double d5(F&& f, const std::array<double, 3>& p, int axis, double h) {
    auto at = [&](double k) {
        auto q = p;
        q[axis] += k * h;
        return f(q);
    };
    return (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h);
}

inline Mat3 inverse(const Mat3& m) {
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    Mat3 r{};
    r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    return r;
}

using Gamma = std::array<Mat3, 3>;  // Gamma[k][i][j]

inline Gamma christoffel(const Metric3& g, const std::array<double, 3>& p, double h) {
    const Mat3 gi = inverse(g(p));
    std::array<Mat3, 3> dg{};  // dg[l][i][j] = d_l g_ij
    for (int l = 0; l < 3; ++l)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) dg[l][i][j] = d5([&](const auto& q) { return g(q)[i][j]; }, p, l, h);
    Gamma G{};
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int l = 0; l < 3; ++l) s += gi[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                G[k][i][j] = 0.5 * s;
            }
    return G;
}

// Coordinate Ricci tensor R_ij = d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik,
// every derivative taken numerically.
inline Mat3 ricci(const Metric3& g, const std::array<double, 3>& p, double h) {
    const Gamma G = christoffel(g, p, h);
    std::array<Gamma, 3> dG{};  // dG[m] = d_m Gamma
    for (int m = 0; m < 3; ++m) {
        auto shifted = [&](double k) {
            auto q = p;
            q[m] += k * h;
            return christoffel(g, q, h);
        };
        const Gamma a = shifted(-2.0), b = shifted(-1.0), c = shifted(1.0), d = shifted(2.0);
        for (int k = 0; k < 3; ++k)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    dG[m][k][i][j] = (a[k][i][j] - 8.0 * b[k][i][j] + 8.0 * c[k][i][j] - d[k][i][j]) / (12.0 * h);
    }
    Mat3 R{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) {
                s += dG[k][k][i][j] - dG[j][k][i][k];
                for (int l = 0; l < 3; ++l) s += G[k][k][l] * G[l][i][j] - G[k][j][l] * G[l][i][k];
            }
            R[i][j] = s;
        }
    return R;
}

// Smooth closed profile pair on [0, 1]:
//   phi(x) = L (1 + a sin^2(pi x) + b sin^2(2 pi x)),
//   psi(x) = (L / pi) sin(pi x) (1 + c sin^2(pi x) + d sin^2(3 pi x)).
// phi is even and psi odd about both poles, with psi_s = +-1 there.
struct Profile {
    double L = std::numbers::pi;
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

    double phi(double x) const {
        const double s1 = std::sin(std::numbers::pi * x), s2 = std::sin(2.0 * std::numbers::pi * x);
        return L * (1.0 + a * s1 * s1 + b * s2 * s2);
    }
    double psi(double x) const {
        const double s1 = std::sin(std::numbers::pi * x), s3 = std::sin(3.0 * std::numbers::pi * x);
        return L / std::numbers::pi * s1 * (1.0 + c * s1 * s1 + d * s3 * s3);
    }

    rsflow::WarpedMetric sample(std::size_t n) const {
        rsflow::WarpedMetric g;
        g.grid = rsflow::ProfileGrid::uniform(n);
        g.phi.resize(n);
        g.psi.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = g.grid.x()[i];
            g.phi[i] = phi(x);
            g.psi[i] = (i == 0 || i + 1 == n) ? 0.0 : psi(x);
        }
        return g;
    }

    // Full coordinate metric in (x, theta, varphi).
    Metric3 metric() const {
        return [*this](const std::array<double, 3>& q) {
            const double f = phi(q[0]), r = psi(q[0]), st = std::sin(q[1]);
            return Mat3{{{f * f, 0.0, 0.0}, {0.0, r * r, 0.0}, {0.0, 0.0, r * r * st * st}}};
        };
    }

    // Ricci eigenvalues (radial, spherical) at coordinate x.
    std::array<double, 2> ricci_eigenvalues(double x, double h = 1e-3) const {
        const std::array<double, 3> p{x, 1.0, 0.3};
        const Mat3 R = ricci(metric(), p, h);
        const double f = phi(x), r = psi(x);
        return {R[0][0] / (f * f), R[1][1] / (r * r)};
    }
};

inline std::vector<Profile> random_profiles(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto unit = [&] { return std::ldexp(static_cast<double>(rng() >> 11), -53); };
    std::vector<Profile> out(count);
    for (auto& p : out) {
        p.L = 2.0 + 2.0 * unit();
        p.a = 0.4 * unit() - 0.2;
        p.b = 0.4 * unit() - 0.2;
        p.c = 0.6 * unit() - 0.3;
        p.d = 0.3 * unit() - 0.15;
    }
    return out;
}

// Closed-form warped-product eigenvalues, used only to sanity-check the numerical oracle.
inline std::array<double, 2> closed_form_ricci(const Profile& p, double x) {
    auto dx = [](auto&& f, double y, double h) { return (f(y - 2 * h) - 8 * f(y - h) + 8 * f(y + h) - f(y + 2 * h)) / (12 * h); };
    const double h = 1e-3;
    auto phi = [&](double y) { return p.phi(y); };
    auto psi_s = [&](double y) { return dx([&](double z) { return p.psi(z); }, y, h) / p.phi(y); };
    const double r = p.psi(x);
    const double rs = psi_s(x);
    const double rss = dx(psi_s, x, h) / phi(x);
    const double k1 = -rss / r;
    const double k2 = (1.0 - rs * rs) / (r * r);
    return {2.0 * k1, k1 + k2};
}

}  // namespace oracle
