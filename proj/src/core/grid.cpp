#include "grid.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "error.hpp"

namespace charstrip {

TimeGrid::TimeGrid(TimeTopology topology, int nt) : topology_(topology), nt_(nt) {
    if (nt < 8) fail(ErrorCode::InvalidArgument, "time grid needs at least 8 nodes");
    if (auto* p = std::get_if<Periodic>(&topology)) {
        if (!(p->period > 0.0)) fail(ErrorCode::InvalidArgument, "period must be positive");
        periodic_ = true;
        period_ = p->period;
        t0_ = 0.0;
        dt_ = period_ / nt;
    } else {
        const auto& w = std::get<Window>(topology);
        if (!(w.t_hi > w.t_lo)) fail(ErrorCode::InvalidArgument, "window needs t_hi > t_lo");
        if (!(w.spin_up >= 0.0) || w.spin_up >= w.t_hi - w.t_lo)
            fail(ErrorCode::InvalidArgument, "spin-up margin must lie in [0, t_hi - t_lo)");
        periodic_ = false;
        period_ = 0.0;
        t0_ = w.t_lo;
        dt_ = (w.t_hi - w.t_lo) / (nt - 1);
        spin_up_ = w.spin_up;
    }
}

bool TimeGrid::contains(double t) const { return periodic_ || (t >= t0_ && t <= t_hi()); }

bool TimeGrid::operator==(const TimeGrid& o) const {
    return nt_ == o.nt_ && periodic_ == o.periodic_ && period_ == o.period_ && t0_ == o.t0_ && dt_ == o.dt_;
}

namespace {

// Fractional node position of t: periodic grids reduce modulo T first.
double position(const TimeGrid& g, double t) {
    if (g.periodic()) {
        double r = std::fmod(t, g.period());
        if (r < 0.0) r += g.period();
        return r / g.step();
    }
    double lo = g.t_lo(), hi = g.t_hi();
    if (t < lo) t = lo;
    if (t > hi) t = hi;
    return (t - lo) / g.step();
}

int wrap(int k, int n) {
    k %= n;
    return k < 0 ? k + n : k;
}

}  // namespace

TimeGrid::Linear TimeGrid::locate(double t) const {
    double s = position(*this, t);
    int k0 = static_cast<int>(std::floor(s));
    if (periodic_) {
        double w = s - k0;
        k0 = wrap(k0, nt_);
        return {k0, wrap(k0 + 1, nt_), w};
    }
    if (k0 > nt_ - 2) k0 = nt_ - 2;
    return {k0, k0 + 1, s - k0};
}

TimeGrid::Cubic TimeGrid::locate_cubic(double t) const {
    double s = position(*this, t);
    int k = static_cast<int>(std::floor(s));
    int base = k - 1;
    if (!periodic_) {
        if (base < 0) base = 0;
        if (base > nt_ - 4) base = nt_ - 4;
    }
    double u = s - base;
    Cubic c{};
    c.w[0] = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    c.w[1] = u * (u - 2.0) * (u - 3.0) / 2.0;
    c.w[2] = -u * (u - 1.0) * (u - 3.0) / 2.0;
    c.w[3] = u * (u - 1.0) * (u - 2.0) / 6.0;
    for (int i = 0; i < 4; ++i) c.k[i] = periodic_ ? wrap(base + i, nt_) : base + i;
    return c;
}

double interp_linear(std::span<const double> f, const TimeGrid::Linear& l) {
    return (1.0 - l.w) * f[l.k0] + l.w * f[l.k1];
}

double interp_cubic(std::span<const double> f, const TimeGrid::Cubic& c) {
    return c.w[0] * f[c.k[0]] + c.w[1] * f[c.k[1]] + c.w[2] * f[c.k[2]] + c.w[3] * f[c.k[3]];
}

GridField::GridField(int n, Grid grid, double fill) : n_(n), grid_(std::move(grid)) {
    if (n < 1) fail(ErrorCode::InvalidArgument, "field needs at least one component");
    if (grid_.nx < 1) fail(ErrorCode::InvalidArgument, "field needs nx >= 1");
    data_.assign(static_cast<std::size_t>(n) * grid_.nodes(), fill);
}

double GridField::at(int c, double x, double t) const {
    const int nx = grid_.nx;
    double sx = x * nx;
    if (sx < 0.0) sx = 0.0;
    if (sx > nx) sx = nx;
    int i0 = static_cast<int>(std::floor(sx));
    if (i0 > nx - 1) i0 = nx - 1;
    double wx = sx - i0;
    auto l = grid_.time.locate(t);
    double v0 = interp_linear(column(c, i0), l);
    if (wx == 0.0) return v0;
    double v1 = interp_linear(column(c, i0 + 1), l);
    return (1.0 - wx) * v0 + wx * v1;
}

double GridField::sup_norm() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
}

double GridField::sup_diff(const GridField& other) const {
    if (other.data_.size() != data_.size()) fail(ErrorCode::VersionMismatch, "fields live on different grids");
    double m = 0.0;
    for (std::size_t i = 0; i < data_.size(); ++i) m = std::max(m, std::fabs(data_[i] - other.data_[i]));
    return m;
}

bool GridField::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string field_to_csv(const GridField& f, const std::vector<std::string>& names) {
    std::string out = "x,t";
    for (int c = 0; c < f.components(); ++c) {
        out += ',';
        out += c < static_cast<int>(names.size()) ? names[c] : "u_" + std::to_string(c + 1);
    }
    out += '\n';
    const Grid& g = f.grid();
    char buf[64];
    for (int i = 0; i <= g.nx; ++i) {
        for (int k = 0; k < g.nt(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g", g.x(i), g.time.time(k));
            out += buf;
            for (int c = 0; c < f.components(); ++c) {
                std::snprintf(buf, sizeof buf, ",%.17g", f(c, i, k));
                out += buf;
            }
            out += '\n';
        }
    }
    return out;
}

namespace {

constexpr char kMagic[8] = {'C', 'S', 'G', 'R', 'I', 'D', '0', '1'};

template <class T>
void put_le(std::vector<unsigned char>& out, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.insert(out.end(), b, b + sizeof(T));
}

template <class T>
T get_le(std::span<const unsigned char> in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) fail(ErrorCode::IoError, "checkpoint truncated");
    unsigned char b[sizeof(T)];
    std::memcpy(b, in.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    pos += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

}  // namespace

std::vector<unsigned char> field_to_checkpoint(const GridField& f) {
    std::vector<unsigned char> out(kMagic, kMagic + 8);
    const Grid& g = f.grid();
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.components()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.nx));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.nt()));
    if (auto* p = std::get_if<Periodic>(&g.time.topology())) {
        put_le<std::uint32_t>(out, 0);
        put_le<double>(out, p->period);
        put_le<double>(out, 0.0);
        put_le<double>(out, 0.0);
    } else {
        const auto& w = std::get<Window>(g.time.topology());
        put_le<std::uint32_t>(out, 1);
        put_le<double>(out, w.t_lo);
        put_le<double>(out, w.t_hi);
        put_le<double>(out, w.spin_up);
    }
    out.reserve(out.size() + f.data().size() * 8);
    for (double v : f.data()) put_le<double>(out, v);
    return out;
}

GridField field_from_checkpoint(std::span<const unsigned char> bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) fail(ErrorCode::IoError, "not a charstrip checkpoint");
    std::size_t pos = 8;
    auto n = get_le<std::uint32_t>(bytes, pos);
    auto nx = get_le<std::uint32_t>(bytes, pos);
    auto nt = get_le<std::uint32_t>(bytes, pos);
    auto topo = get_le<std::uint32_t>(bytes, pos);
    double p0 = get_le<double>(bytes, pos), p1 = get_le<double>(bytes, pos), p2 = get_le<double>(bytes, pos);
    if (topo > 1) fail(ErrorCode::IoError, "checkpoint has an unknown topology tag");
    TimeTopology tt = topo == 0 ? TimeTopology{Periodic{p0}} : TimeTopology{Window{p0, p1, p2}};
    GridField f(static_cast<int>(n), Grid(static_cast<int>(nx), TimeGrid(tt, static_cast<int>(nt))));
    if (bytes.size() - pos != f.data().size() * 8) fail(ErrorCode::IoError, "checkpoint payload size mismatch");
    for (double& v : f.data()) v = get_le<double>(bytes, pos);
    return f;
}

void write_file_atomic(const std::string& path, std::span<const unsigned char> bytes) {
    std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) fail(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
        os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!os) fail(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorCode::IoError, "cannot rename into " + path);
    }
}

void write_file_atomic(const std::string& path, const std::string& text) {
    write_file_atomic(path, std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

}  // namespace charstrip
