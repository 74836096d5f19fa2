#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace charstrip {

struct Periodic {
    double period = 0.0;
};

struct Window {
    double t_lo = 0.0;
    double t_hi = 0.0;
    double spin_up = 0.0;
};

using TimeTopology = std::variant<Periodic, Window>;

/// Uniform time grid. Periodic grids hold nt nodes k*T/nt; windows hold nt nodes
/// spanning [t_lo, t_hi] inclusive.
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(TimeTopology topology, int nt);

    int size() const { return nt_; }
    double step() const { return dt_; }
    double time(int k) const { return t0_ + dt_ * k; }
    bool periodic() const { return periodic_; }
    double period() const { return period_; }
    double t_lo() const { return t0_; }
    double t_hi() const { return periodic_ ? t0_ + period_ : t0_ + dt_ * (nt_ - 1); }
    double spin_up() const { return spin_up_; }
    const TimeTopology& topology() const { return topology_; }
    /// True when t lies inside the stored range (always true when periodic).
    bool contains(double t) const;

    /// Linear interpolation position: value = (1-w)*f[k0] + w*f[k1].
    struct Linear {
        int k0, k1;
        double w;
    };
    Linear locate(double t) const;

    /// Four-point cubic Lagrange stencil. Periodic grids wrap; windows use a
    /// one-sided stencil near the ends and clamp outside.
    struct Cubic {
        int k[4];
        double w[4];
    };
    Cubic locate_cubic(double t) const;

    bool operator==(const TimeGrid& o) const;

private:
    TimeTopology topology_ = Periodic{1.0};
    int nt_ = 0;
    bool periodic_ = true;
    double period_ = 0.0;
    double t0_ = 0.0;
    double dt_ = 0.0;
    double spin_up_ = 0.0;
};

double interp_linear(std::span<const double> f, const TimeGrid::Linear& l);
double interp_cubic(std::span<const double> f, const TimeGrid::Cubic& c);

struct Grid {
    int nx = 0;
    TimeGrid time;

    Grid() = default;
    Grid(int nx_, TimeGrid time_) : nx(nx_), time(std::move(time_)) {}
    int nt() const { return time.size(); }
    double dx() const { return 1.0 / nx; }
    double x(int i) const { return static_cast<double>(i) / nx; }
    std::size_t nodes() const { return static_cast<std::size_t>(nx + 1) * nt(); }
    bool operator==(const Grid& o) const { return nx == o.nx && time == o.time; }
};

/// Vector function sampled on a Grid. Layout is component-major, then x, then t,
/// so each (component, column) is a contiguous time series.
class GridField {
public:
    GridField() = default;
    GridField(int n, Grid grid, double fill = 0.0);

    int components() const { return n_; }
    const Grid& grid() const { return grid_; }

    double& operator()(int c, int i, int k) { return data_[index(c, i, k)]; }
    double operator()(int c, int i, int k) const { return data_[index(c, i, k)]; }

    std::span<double> column(int c, int i) {
        return {data_.data() + index(c, i, 0), static_cast<std::size_t>(grid_.nt())};
    }
    std::span<const double> column(int c, int i) const {
        return {data_.data() + index(c, i, 0), static_cast<std::size_t>(grid_.nt())};
    }

    /// Bilinear interpolation in (x, t).
    double at(int c, double x, double t) const;

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double sup_norm() const;
    /// sup |this - other| over all entries.
    double sup_diff(const GridField& other) const;
    bool all_finite() const;

private:
    std::size_t index(int c, int i, int k) const {
        return (static_cast<std::size_t>(c) * (grid_.nx + 1) + i) * grid_.nt() + k;
    }
    int n_ = 0;
    Grid grid_;
    std::vector<double> data_;
};

/// Writes x,t,u_1..u_n rows.
std::string field_to_csv(const GridField& f, const std::vector<std::string>& names = {});

/// Binary checkpoint: "CSGRID01", u32 n, u32 nx, u32 nt, u32 topology (0 periodic,
/// 1 window), three f64 topology parameters, then n*(nx+1)*nt f64 values in the
/// in-memory layout. Everything little-endian.
std::vector<unsigned char> field_to_checkpoint(const GridField& f);
GridField field_from_checkpoint(std::span<const unsigned char> bytes);

/// Write through a temporary file and rename, so readers never see partial output.
void write_file_atomic(const std::string& path, std::span<const unsigned char> bytes);
void write_file_atomic(const std::string& path, const std::string& text);

}  // namespace charstrip
