#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace plume {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

/// Dense row-major grid; index (ix, iy) maps to iy * nx + ix.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int nx, int ny, T fill = T{}) : nx_(nx), ny_(ny), v_(static_cast<size_t>(nx) * ny, fill) {
        if (nx <= 0 || ny <= 0) throw std::invalid_argument("grid dims must be positive");
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    size_t size() const { return v_.size(); }

    T& at(int ix, int iy) { return v_[static_cast<size_t>(iy) * nx_ + ix]; }
    const T& at(int ix, int iy) const { return v_[static_cast<size_t>(iy) * nx_ + ix]; }

    T* data() { return v_.data(); }
    const T* data() const { return v_.data(); }
    std::vector<T>& raw() { return v_; }
    const std::vector<T>& raw() const { return v_; }

    bool same_shape(const Grid& o) const { return nx_ == o.nx_ && ny_ == o.ny_; }

    bool operator==(const Grid& o) const { return nx_ == o.nx_ && ny_ == o.ny_ && v_ == o.v_; }

private:
    int nx_ = 0;
    int ny_ = 0;
    std::vector<T> v_;
};

using GridF = Grid<float>;
using GridD = Grid<double>;
using GridB = Grid<std::uint8_t>;

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

}  // namespace plume
