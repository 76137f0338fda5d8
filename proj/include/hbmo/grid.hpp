#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hbmo/errors.hpp"
#include "hbmo/parallel.hpp"

namespace hbmo {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Point, Point) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

/// Uniform node lattice. Node (i, j) sits at origin + (i*hx, j*hy); values
/// attached to the grid are stored with i fastest: index = j*nx + i.
struct Grid2D {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double hx = 0.0;
    double hy = 0.0;
    Point origin{};

    std::size_t size() const { return nx * ny; }
    std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
    Point node(std::size_t i, std::size_t j) const {
        return {origin.x + static_cast<double>(i) * hx, origin.y + static_cast<double>(j) * hy};
    }
    Point node(std::size_t k) const { return node(k % nx, k / nx); }
    double length_x() const { return static_cast<double>(nx - 1) * hx; }
    double length_y() const { return static_cast<double>(ny - 1) * hy; }
    double h() const { return std::max(hx, hy); }

    friend bool operator==(const Grid2D&, const Grid2D&) = default;
};

/// Square grid on [0, domain]^2 with n nodes per axis.
inline Grid2D make_grid(std::size_t n, double domain = 1.0) {
    if (n < 3) throw ConfigError("grid.n must be at least 3 (got " + std::to_string(n) + ")");
    if (!(domain > 0.0) || !std::isfinite(domain)) throw ConfigError("domain side length must be positive");
    const double h = domain / static_cast<double>(n - 1);
    return Grid2D{n, n, h, h, {0.0, 0.0}};
}

/// Node-valued samples over a Grid2D.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const Grid2D& grid, double fill = 0.0) : grid_(grid), values_(grid.size(), fill) {}
    ScalarField(const Grid2D& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.size()) throw ConfigError("field size does not match grid");
    }

    template <class Fn>
    static ScalarField sample(const Grid2D& grid, Fn&& fn) {
        ScalarField f(grid);
        for (std::size_t j = 0; j < grid.ny; ++j)
            for (std::size_t i = 0; i < grid.nx; ++i) f(i, j) = fn(grid.node(i, j));
        return f;
    }

    const Grid2D& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return values_[grid_.index(i, j)]; }
    double operator()(std::size_t i, std::size_t j) const { return values_[grid_.index(i, j)]; }
    double& operator[](std::size_t k) { return values_[k]; }
    double operator[](std::size_t k) const { return values_[k]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }
    double min() const { return *std::min_element(values_.begin(), values_.end()); }
    double max() const { return *std::max_element(values_.begin(), values_.end()); }
    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    /// a*x + b*y, nodewise.
    static ScalarField combine(double a, const ScalarField& x, double b, const ScalarField& y) {
        require_same_grid(x, y);
        ScalarField out(x.grid_);
        for (std::size_t k = 0; k < out.size(); ++k) out.values_[k] = a * x.values_[k] + b * y.values_[k];
        return out;
    }

    static void require_same_grid(const ScalarField& a, const ScalarField& b) {
        if (!(a.grid_ == b.grid_)) throw ConfigError("fields live on different grids");
    }

private:
    Grid2D grid_{};
    std::vector<double> values_;
};

/// N-1 scalar channels over one grid, the vector unknown of the N-phase scheme.
class VectorField {
public:
    VectorField() = default;
    VectorField(const Grid2D& grid, std::size_t channels) : grid_(grid), channels_(channels, ScalarField(grid)) {
        if (channels == 0) throw ConfigError("vector field needs at least one channel");
    }
    explicit VectorField(std::vector<ScalarField> channels) : channels_(std::move(channels)) {
        if (channels_.empty()) throw ConfigError("vector field needs at least one channel");
        grid_ = channels_.front().grid();
        for (const auto& c : channels_) ScalarField::require_same_grid(c, channels_.front());
    }

    const Grid2D& grid() const { return grid_; }
    std::size_t channels() const { return channels_.size(); }
    ScalarField& channel(std::size_t c) { return channels_[c]; }
    const ScalarField& channel(std::size_t c) const { return channels_[c]; }

    /// Dot product of the nodal vector with `direction`.
    double project(std::size_t node, std::span<const double> direction) const {
        double s = 0.0;
        for (std::size_t c = 0; c < channels_.size(); ++c) s += channels_[c][node] * direction[c];
        return s;
    }

    static VectorField combine(double a, const VectorField& x, double b, const VectorField& y) {
        if (x.channels() != y.channels()) throw ConfigError("channel count mismatch");
        std::vector<ScalarField> out;
        out.reserve(x.channels());
        for (std::size_t c = 0; c < x.channels(); ++c) out.push_back(ScalarField::combine(a, x.channel(c), b, y.channel(c)));
        return VectorField(std::move(out));
    }

private:
    Grid2D grid_{};
    std::vector<ScalarField> channels_;
};

/// 5-point Laplacian with zero-Neumann walls imposed through mirror ghosts:
/// the ghost beyond a wall equals the interior neighbour, so a wall node sees
/// 2*(f[1]-f[0])/h^2 along the wall-normal axis.
inline ScalarField laplacian_neumann(const ScalarField& f) {
    const Grid2D& g = f.grid();
    const double ix2 = 1.0 / (g.hx * g.hx);
    const double iy2 = 1.0 / (g.hy * g.hy);
    ScalarField out(g);
    const auto in = f.values();
    auto res = out.values();
    const std::size_t nx = g.nx;
    const std::size_t ny = g.ny;
    parallel_for(ny, [&](std::size_t jb, std::size_t je) {
        for (std::size_t j = jb; j < je; ++j) {
            const std::size_t row = j * nx;
            const std::size_t down = (j == 0 ? 1 : j - 1) * nx;
            const std::size_t up = (j + 1 == ny ? ny - 2 : j + 1) * nx;
            for (std::size_t i = 0; i < nx; ++i) {
                const std::size_t il = i == 0 ? 1 : i - 1;
                const std::size_t ir = i + 1 == nx ? nx - 2 : i + 1;
                const double c = in[row + i];
                res[row + i] = (in[row + il] + in[row + ir] - 2.0 * c) * ix2 + (in[down + i] + in[up + i] - 2.0 * c) * iy2;
            }
        }
    }, 16);
    return out;
}

/// Trapezoid quadrature weight of node (i, j): 1 inside, 1/2 on edges, 1/4 at
/// corners, times hx*hy. These are also the weights under which the Neumann
/// Laplacian is symmetric and sums to zero.
inline double quadrature_weight(const Grid2D& g, std::size_t i, std::size_t j) {
    const double wx = (i == 0 || i + 1 == g.nx) ? 0.5 : 1.0;
    const double wy = (j == 0 || j + 1 == g.ny) ? 0.5 : 1.0;
    return wx * wy * g.hx * g.hy;
}

inline double integrate(const ScalarField& f) {
    const Grid2D& g = f.grid();
    double s = 0.0;
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) s += quadrature_weight(g, i, j) * f(i, j);
    return s;
}

/// Plain-text snapshot: header line `nx ny hx hy ox oy`, then one value per
/// line in storage order (i fastest). Values use 17 significant digits so a
/// snapshot reads back bit-identically.
inline void write_field_snapshot(const ScalarField& f, std::ostream& os) {
    const Grid2D& g = f.grid();
    os << std::setprecision(17);
    os << g.nx << ' ' << g.ny << ' ' << g.hx << ' ' << g.hy << ' ' << g.origin.x << ' ' << g.origin.y << '\n';
    for (double v : f.values()) os << v << '\n';
}

inline ScalarField read_field_snapshot(std::istream& is) {
    Grid2D g;
    if (!(is >> g.nx >> g.ny >> g.hx >> g.hy >> g.origin.x >> g.origin.y)) throw ConfigError("malformed field snapshot header");
    if (g.nx < 3 || g.ny < 3 || !(g.hx > 0) || !(g.hy > 0)) throw ConfigError("invalid grid in field snapshot");
    std::vector<double> v(g.size());
    for (auto& x : v)
        if (!(is >> x)) throw ConfigError("field snapshot truncated");
    return ScalarField(g, std::move(v));
}

/// Binary 8-bit PGM; [min, max] maps linearly onto [0, 255], top row = max y.
inline void write_pgm(const ScalarField& f, std::ostream& os) {
    const Grid2D& g = f.grid();
    const double lo = f.min();
    const double hi = f.max();
    const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
    os << "P5\n" << g.nx << ' ' << g.ny << "\n255\n";
    for (std::size_t jj = 0; jj < g.ny; ++jj) {
        const std::size_t j = g.ny - 1 - jj;
        for (std::size_t i = 0; i < g.nx; ++i) {
            const auto byte = static_cast<unsigned char>(std::lround((f(i, j) - lo) * scale));
            os.put(static_cast<char>(byte));
        }
    }
}

} // namespace hbmo
