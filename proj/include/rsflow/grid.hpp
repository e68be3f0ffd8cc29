#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace rsflow {

enum class Topology { closed_interval_with_poles, periodic };

std::string_view to_string(Topology t);
Topology topology_from_string(std::string_view name);

/// Reflection parity of a profile across a pole; selects the ghost values
/// used by the stencils next to x=0 and x=1.
enum class Parity { even, odd };

/// Fixed coordinate grid on [0,1].
///
/// Closed grids run from x=0 to x=1 inclusive.  Periodic grids hold n nodes
/// x_i = i/n (uniform case) and wrap from the last node back to the first.
/// Grids are cheap to copy; the node array and stencil weights are shared.
class ProfileGrid {
public:
    static ProfileGrid uniform(std::size_t n, Topology topology = Topology::closed_interval_with_poles);
    static ProfileGrid from_nodes(std::vector<double> x, Topology topology);

    std::size_t size() const noexcept { return data_->x.size(); }
    const std::vector<double>& x() const noexcept { return data_->x; }
    Topology topology() const noexcept { return data_->topology; }
    bool closed() const noexcept { return data_->topology == Topology::closed_interval_with_poles; }
    bool is_uniform() const noexcept { return data_->uniform; }
    /// Node spacing of a uniform grid (0 for non-uniform grids).
    double spacing() const noexcept { return data_->h; }

    /// Number of quadrature segments: n-1 when closed, n when periodic.
    std::size_t segment_count() const noexcept;
    /// Coordinate length of segment i (between node i and node i+1, wrapping when periodic).
    double segment_length(std::size_t i) const;
    /// Smallest segment length.
    double min_segment() const noexcept { return data_->min_gap; }

    /// True when the node set is mapped onto itself by x -> 1-x (closed) or by
    /// reversal of the node order (periodic).
    bool is_reflection_symmetric(double tol = 1e-12) const;

    /// Fourth-order first and second coordinate derivatives of a nodal profile.
    /// Ghost values beyond a pole are reflected with the given parity.
    void derivatives(std::span<const double> f, Parity parity, std::vector<double>& d1,
                     std::vector<double>& d2) const;
    std::vector<double> first_derivative(std::span<const double> f, Parity parity) const;
    std::vector<double> second_derivative(std::span<const double> f, Parity parity) const;

    friend bool operator==(const ProfileGrid& a, const ProfileGrid& b);

private:
    struct Data {
        Topology topology{};
        std::vector<double> x;
        bool uniform = false;
        double h = 0.0;
        double min_gap = 0.0;
        // per-node five-point weights for offsets -2..2 (non-uniform grids only)
        std::vector<std::array<double, 5>> w1, w2;
    };
    explicit ProfileGrid(std::shared_ptr<const Data> d) : data_(std::move(d)) {}
    double stencil_value(std::span<const double> f, std::ptrdiff_t j, Parity parity) const;

    std::shared_ptr<const Data> data_;
};

}  // namespace rsflow
