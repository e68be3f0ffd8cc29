#include "rsflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rsflow/errors.hpp"

namespace rsflow {

std::string_view to_string(Topology t) {
    return t == Topology::periodic ? "periodic" : "closed_interval_with_poles";
}

Topology topology_from_string(std::string_view name) {
    if (name == "closed_interval_with_poles" || name == "closed") return Topology::closed_interval_with_poles;
    if (name == "periodic") return Topology::periodic;
    throw InvalidArgument("unknown topology '" + std::string(name) + "'");
}

namespace {

// Fornberg's recursion for finite-difference weights of derivative orders 0..2
// at z, using the nodes xs.  Returns c[node][order].
std::array<std::array<double, 3>, 5> fornberg_weights(double z, const std::array<double, 5>& xs) {
    std::array<std::array<double, 3>, 5> c{};
    double c1 = 1.0;
    double c4 = xs[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i < 5; ++i) {
        const int mn = std::min(i, 2);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = xs[i] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    return c;
}

}  // namespace

ProfileGrid ProfileGrid::uniform(std::size_t n, Topology topology) {
    if (n < 5) throw InvalidArgument("grid needs at least 5 nodes, got " + std::to_string(n));
    std::vector<double> x(n);
    if (topology == Topology::closed_interval_with_poles) {
        for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i) / static_cast<double>(n - 1);
        x[n - 1] = 1.0;
    } else {
        for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i) / static_cast<double>(n);
    }
    auto d = std::make_shared<Data>();
    d->topology = topology;
    d->x = std::move(x);
    d->uniform = true;
    d->h = topology == Topology::periodic ? 1.0 / static_cast<double>(n) : 1.0 / static_cast<double>(n - 1);
    d->min_gap = d->h;
    return ProfileGrid(std::move(d));
}

ProfileGrid ProfileGrid::from_nodes(std::vector<double> x, Topology topology) {
    const std::size_t n = x.size();
    if (n < 5) throw InvalidArgument("grid needs at least 5 nodes, got " + std::to_string(n));
    for (std::size_t i = 1; i < n; ++i)
        if (!(x[i] > x[i - 1])) throw InvalidArgument("grid coordinates must be strictly increasing");
    if (topology == Topology::closed_interval_with_poles) {
        if (x.front() != 0.0 || x.back() != 1.0)
            throw InvalidArgument("closed grid must start at x=0 and end at x=1");
    } else if (x.front() < 0.0 || x.back() >= x.front() + 1.0) {
        throw InvalidArgument("periodic grid must fit inside one period");
    }

    // Detect grids that are uniform to rounding so they take the exact symmetric stencil path.
    const double h = topology == Topology::periodic ? 1.0 / static_cast<double>(n) : 1.0 / static_cast<double>(n - 1);
    bool uniform = true;
    for (std::size_t i = 0; i < n && uniform; ++i) {
        const double expect = topology == Topology::periodic ? x.front() + static_cast<double>(i) * h
                                                             : static_cast<double>(i) * h;
        uniform = std::fabs(x[i] - expect) <= 1e-14;
    }
    if (uniform && topology == Topology::closed_interval_with_poles) return ProfileGrid::uniform(n, topology);
    if (uniform && x.front() == 0.0) return ProfileGrid::uniform(n, topology);

    auto d = std::make_shared<Data>();
    d->topology = topology;
    d->x = std::move(x);
    d->uniform = false;
    d->h = 0.0;

    const auto& xs = d->x;
    auto coord = [&](std::ptrdiff_t j) {
        const auto nn = static_cast<std::ptrdiff_t>(n);
        if (topology == Topology::periodic) {
            if (j < 0) return xs[static_cast<std::size_t>(j + nn)] - 1.0;
            if (j >= nn) return xs[static_cast<std::size_t>(j - nn)] + 1.0;
            return xs[static_cast<std::size_t>(j)];
        }
        if (j < 0) return -xs[static_cast<std::size_t>(-j)];
        if (j > nn - 1) return 2.0 - xs[static_cast<std::size_t>(2 * (nn - 1) - j)];
        return xs[static_cast<std::size_t>(j)];
    };
    d->w1.resize(n);
    d->w2.resize(n);
    double min_gap = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::array<double, 5> pts{};
        for (int k = -2; k <= 2; ++k) pts[static_cast<std::size_t>(k + 2)] = coord(static_cast<std::ptrdiff_t>(i) + k);
        const auto c = fornberg_weights(xs[i], pts);
        for (std::size_t k = 0; k < 5; ++k) {
            d->w1[i][k] = c[k][1];
            d->w2[i][k] = c[k][2];
        }
    }
    for (std::size_t i = 0; i + 1 < n; ++i) min_gap = std::min(min_gap, xs[i + 1] - xs[i]);
    if (topology == Topology::periodic) min_gap = std::min(min_gap, xs.front() + 1.0 - xs.back());
    d->min_gap = min_gap;
    return ProfileGrid(std::move(d));
}

std::size_t ProfileGrid::segment_count() const noexcept {
    return closed() ? size() - 1 : size();
}

double ProfileGrid::segment_length(std::size_t i) const {
    const auto& x = data_->x;
    if (data_->uniform) {
        if (i < segment_count()) return data_->h;
        throw InvalidArgument("segment index out of range");
    }
    if (i + 1 < x.size()) return x[i + 1] - x[i];
    if (!closed() && i + 1 == x.size()) return x.front() + 1.0 - x.back();
    throw InvalidArgument("segment index out of range");
}

bool ProfileGrid::is_reflection_symmetric(double tol) const {
    const auto& x = data_->x;
    const std::size_t n = x.size();
    if (data_->uniform) return true;
    if (closed()) {
        for (std::size_t i = 0; i < n; ++i)
            if (std::fabs(x[i] + x[n - 1 - i] - 1.0) > tol) return false;
        return true;
    }
    // periodic: the sequence of gaps must read the same backwards
    const std::size_t m = segment_count();
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = (2 * m - 1 - i) % m;
        if (std::fabs(segment_length(i) - segment_length(j)) > tol) return false;
    }
    return true;
}

double ProfileGrid::stencil_value(std::span<const double> f, std::ptrdiff_t j, Parity parity) const {
    const auto n = static_cast<std::ptrdiff_t>(f.size());
    if (!closed()) {
        j %= n;
        if (j < 0) j += n;
        return f[static_cast<std::size_t>(j)];
    }
    const double sign = parity == Parity::odd ? -1.0 : 1.0;
    if (j < 0) return sign * f[static_cast<std::size_t>(-j)];
    if (j > n - 1) return sign * f[static_cast<std::size_t>(2 * (n - 1) - j)];
    return f[static_cast<std::size_t>(j)];
}

void ProfileGrid::derivatives(std::span<const double> f, Parity parity, std::vector<double>& d1,
                              std::vector<double>& d2) const {
    const std::size_t n = size();
    if (f.size() != n) throw GridMismatch("profile length does not match grid");
    d1.resize(n);
    d2.resize(n);
    if (data_->uniform) {
        const double h = data_->h;
        const double inv12h = 1.0 / (12.0 * h);
        const double inv12h2 = 1.0 / (12.0 * h * h);
        auto eval = [&](std::size_t i, double fm2, double fm1, double f0, double fp1, double fp2) {
            // grouping keeps mirrored nodes bitwise equal up to sign
            d1[i] = (8.0 * (fp1 - fm1) - (fp2 - fm2)) * inv12h;
            d2[i] = (16.0 * (fp1 + fm1) - (fp2 + fm2) - 30.0 * f0) * inv12h2;
        };
        for (std::size_t i = 0; i < n; ++i) {
            if (i >= 2 && i + 2 < n) {
                eval(i, f[i - 2], f[i - 1], f[i], f[i + 1], f[i + 2]);
            } else {
                const auto ii = static_cast<std::ptrdiff_t>(i);
                eval(i, stencil_value(f, ii - 2, parity), stencil_value(f, ii - 1, parity), f[i],
                     stencil_value(f, ii + 1, parity), stencil_value(f, ii + 2, parity));
            }
        }
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<std::ptrdiff_t>(i);
        double a = 0.0, b = 0.0;
        for (int k = -2; k <= 2; ++k) {
            const double v = stencil_value(f, ii + k, parity);
            a += data_->w1[i][static_cast<std::size_t>(k + 2)] * v;
            b += data_->w2[i][static_cast<std::size_t>(k + 2)] * v;
        }
        d1[i] = a;
        d2[i] = b;
    }
}

std::vector<double> ProfileGrid::first_derivative(std::span<const double> f, Parity parity) const {
    std::vector<double> a, b;
    derivatives(f, parity, a, b);
    return a;
}

std::vector<double> ProfileGrid::second_derivative(std::span<const double> f, Parity parity) const {
    std::vector<double> a, b;
    derivatives(f, parity, a, b);
    return b;
}

bool operator==(const ProfileGrid& a, const ProfileGrid& b) {
    if (a.data_ == b.data_) return true;
    return a.data_->topology == b.data_->topology && a.data_->x == b.data_->x;
}

}  // namespace rsflow
