#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "grid.hpp"
#include "system.hpp"

namespace charstrip {

/// Fixed-step RK4 march of dw/dxi = 1/a_j(xi, w), accumulating by the trapezoid
/// rule Ib = int_x^xi b_jj/a_j and Ia = int_x^xi (d_t a_j)/a_j^2.
class Marcher {
public:
    Marcher(const CoefficientModel& model, int j, double x, double t);

    /// Advance by a signed step h in xi.
    void step(double h);

    double xi() const { return xi_; }
    double omega() const { return om_; }
    double speed() const { return a_; }
    double int_b() const { return ib_; }
    double int_a() const { return ia_; }
    /// log of c^l(xi, x, t).
    double log_c(int l) const { return ib_ - l * ia_; }

private:
    double inv_speed(double xi, double om) const;
    void load_endpoint();

    const CoefficientModel& m_;
    int j_;
    double xi_, om_, a_ = 0.0, fb_ = 0.0, fa_ = 0.0, ib_ = 0.0, ia_ = 0.0;
};

struct TraceOptions {
    int oversample = 4;
    int nx = 64;
};

struct CharacteristicSample {
    double xi;
    double omega;
    double c[3];  // c^0, c^1, c^2 at (xi, x, t)
    double d;     // c^0 / a_j(xi, omega)
    double dt_omega;
};

struct Characteristic {
    int family = 0;
    double x = 0.0, t = 0.0;
    double end = 0.0;
    std::vector<CharacteristicSample> samples;  // samples.front() is the anchor

    double exit_time() const { return samples.back().omega; }
    const CharacteristicSample& exit() const { return samples.back(); }
};

/// Traces family j from (x, t) to `end` (the inflow abscissa when omitted) with step
/// 1/(oversample*nx). Throws StepFailure when the speed leaves its sign class.
Characteristic trace(const CoefficientModel& model, int j, double x, double t, const TraceOptions& opts = {},
                     std::optional<double> end = std::nullopt);

/// d omega_j(xi, x, t) / dt = exp int_xi^x (d_t a_j / a_j^2)(eta, omega_j) d eta.
double dt_omega(const CoefficientModel& model, int j, double xi, double x, double t, const TraceOptions& opts = {});

/// Exit data for every grid node and family, built by composing one-cell maps
/// column by column. `source[j]` is 0 or 1: the end where family j's integral
/// representation starts (its inflow end unless flipped for periodic problems).
class CharacteristicCache {
public:
    CharacteristicCache(const CoefficientModel& model, const Grid& grid, std::vector<int> source, int oversample);

    const Grid& grid() const { return grid_; }
    int oversample() const { return oversample_; }
    int source(int j) const { return source_[j]; }
    int source_col(int j) const { return source_[j] == 0 ? 0 : grid_.nx; }
    int far_col(int j) const { return source_[j] == 0 ? grid_.nx : 0; }

    double exit_time(int j, int i, int k) const { return exit_[j][idx(i, k)]; }
    /// log c^l(source, x_i, t_k) for l = 0, 1, 2.
    double log_c(int l, int j, int i, int k) const;

    /// Composes G(x, t) = int_source^x c^l(xi,x,t) g(xi, omega) / a_j dxi for every
    /// node of family j. g receives (xi, omega).
    std::vector<double> integrate(int j, int level, const std::function<double(double, double)>& g) const;

    /// Marches from node (i, k) to the source, calling visit(col, marcher) at each
    /// grid abscissa including both ends.
    void march_to_source(int j, int i, double t, const std::function<void(int, const Marcher&)>& visit) const;

    const CoefficientModel& model() const { return model_; }

private:
    std::size_t idx(int i, int k) const { return static_cast<std::size_t>(i) * grid_.nt() + k; }
    int col_at(int j, int d) const { return source_[j] == 0 ? d : grid_.nx - d; }

    const CoefficientModel& model_;
    Grid grid_;
    std::vector<int> source_;
    int oversample_;
    std::vector<std::vector<double>> exit_, logc0_, logc1_;
};

}  // namespace charstrip
