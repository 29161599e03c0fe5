#ifndef GPL_LATTICE_HPP
#define GPL_LATTICE_HPP

#include <compare>
#include <cstddef>
#include <cstdlib>
#include <ostream>

namespace gpl {

struct LatticePoint {
    int x = 0;
    int y = 0;

    constexpr LatticePoint() = default;
    constexpr LatticePoint(int x_, int y_) : x(x_), y(y_) {}

    constexpr LatticePoint operator+(LatticePoint o) const { return {x + o.x, y + o.y}; }
    constexpr LatticePoint operator-(LatticePoint o) const { return {x - o.x, y - o.y}; }
    constexpr LatticePoint operator-() const { return {-x, -y}; }
    constexpr LatticePoint operator*(int k) const { return {x * k, y * k}; }
    constexpr bool operator==(const LatticePoint&) const = default;
    constexpr auto operator<=>(const LatticePoint&) const = default;  // lexicographic, for containers
};

inline constexpr LatticePoint e1{1, 0};
inline constexpr LatticePoint e2{0, 1};

// componentwise partial order
constexpr bool leq(LatticePoint a, LatticePoint b) { return a.x <= b.x && a.y <= b.y; }
constexpr bool strictly_less(LatticePoint a, LatticePoint b) { return a.x < b.x && a.y < b.y; }
constexpr int l1_norm(LatticePoint a) { return (a.x < 0 ? -a.x : a.x) + (a.y < 0 ? -a.y : a.y); }

inline std::ostream& operator<<(std::ostream& os, LatticePoint p) {
    return os << '(' << p.x << ',' << p.y << ')';
}

// closed lattice rectangle [lo, hi]
struct Rect {
    LatticePoint lo;
    LatticePoint hi;

    constexpr int width() const { return hi.x - lo.x + 1; }
    constexpr int height() const { return hi.y - lo.y + 1; }
    constexpr bool empty() const { return hi.x < lo.x || hi.y < lo.y; }
    constexpr std::size_t size() const {
        return empty() ? 0 : static_cast<std::size_t>(width()) * static_cast<std::size_t>(height());
    }
    constexpr bool contains(LatticePoint p) const { return leq(lo, p) && leq(p, hi); }
    // row-major index
    constexpr std::size_t index(LatticePoint p) const {
        return static_cast<std::size_t>(p.y - lo.y) * static_cast<std::size_t>(width()) +
               static_cast<std::size_t>(p.x - lo.x);
    }
    constexpr LatticePoint point(std::size_t i) const {
        const auto w = static_cast<std::size_t>(width());
        return {lo.x + static_cast<int>(i % w), lo.y + static_cast<int>(i / w)};
    }
    // on the north or east side of the rectangle
    constexpr bool on_northeast_boundary(LatticePoint p) const {
        return contains(p) && (p.x == hi.x || p.y == hi.y);
    }
    constexpr bool operator==(const Rect&) const = default;
};

}  // namespace gpl

#endif
