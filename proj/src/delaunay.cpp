// Incremental Bowyer-Watson triangulation with triangle adjacency and walking
// point location.  Points are inserted in Hilbert order so walks stay short.

#include "leafmatch/surface_mesh.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <tuple>
#include <utility>

namespace leafmatch {

namespace {

using Vec2 = Eigen::Vector2d;

double orient(const Vec2& a, const Vec2& b, const Vec2& c)
{
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

/// Positive when d lies strictly inside the circumcircle of counter-clockwise (a, b, c).
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d)
{
    const double adx = a.x() - d.x(), ady = a.y() - d.y();
    const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
    const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
    const double alift = adx * adx + ady * ady;
    const double blift = bdx * bdx + bdy * bdy;
    const double clift = cdx * cdx + cdy * cdy;
    return alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) + clift * (adx * bdy - bdx * ady);
}

std::uint64_t hilbert_index(std::uint32_t x, std::uint32_t y, int order)
{
    std::uint64_t d = 0;
    for (std::uint32_t s = 1u << (order - 1); s > 0; s >>= 1) {
        const std::uint32_t rx = (x & s) ? 1u : 0u;
        const std::uint32_t ry = (y & s) ? 1u : 0u;
        d += static_cast<std::uint64_t>(s) * s * ((3u * rx) ^ ry);
        if (ry == 0) {
            if (rx == 1) {
                x = s - 1 - (x & (s - 1)) + (x & ~(s - 1));
                y = s - 1 - (y & (s - 1)) + (y & ~(s - 1));
                x &= (s << 1) - 1;
                y &= (s << 1) - 1;
            }
            std::swap(x, y);
        }
    }
    return d;
}

struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> n;  // n[k] lies across the edge opposite v[k]
    bool alive = true;
};

class Triangulator {
public:
    explicit Triangulator(std::vector<Vec2> pts) : pts_(std::move(pts)) {}

    std::vector<Triangle> run(const std::vector<int>& order, int n_real)
    {
        n_real_ = n_real;
        const int s0 = n_real, s1 = n_real + 1, s2 = n_real + 2;
        tris_.push_back(Tri{{s0, s1, s2}, {-1, -1, -1}, true});
        stamp_.push_back(0);
        for (int idx : order) {
            insert(idx);
        }
        std::vector<Triangle> out;
        for (const auto& t : tris_) {
            if (t.alive && t.v[0] < n_real && t.v[1] < n_real && t.v[2] < n_real) {
                out.push_back({t.v[0], t.v[1], t.v[2]});
            }
        }
        return out;
    }

private:
    bool contains(const Tri& t, const Vec2& p) const
    {
        for (int k = 0; k < 3; ++k) {
            if (orient(pts_[t.v[(k + 1) % 3]], pts_[t.v[(k + 2) % 3]], p) < 0.0) {
                return false;
            }
        }
        return true;
    }

    int locate(const Vec2& p)
    {
        int t = last_;
        if (t < 0 || !tris_[t].alive) {
            t = 0;
            while (!tris_[t].alive) {
                ++t;
            }
        }
        const std::size_t max_steps = tris_.size() + 16;
        for (std::size_t step = 0; step < max_steps; ++step) {
            const Tri& tri = tris_[t];
            int next = -1;
            for (int j = 0; j < 3; ++j) {
                const int k = static_cast<int>((j + step) % 3);
                if (orient(pts_[tri.v[(k + 1) % 3]], pts_[tri.v[(k + 2) % 3]], p) < 0.0) {
                    next = tri.n[k];
                    break;
                }
            }
            if (next < 0) {
                if (contains(tri, p)) {
                    return t;
                }
                break;
            }
            t = next;
        }
        for (std::size_t i = 0; i < tris_.size(); ++i) {
            if (tris_[i].alive && contains(tris_[i], p)) {
                return static_cast<int>(i);
            }
        }
        throw MeshError("point location failed during triangulation");
    }

    bool in_circle(const Tri& t, const Vec2& p) const
    {
        int supers = 0;
        int k_super = 0;
        for (int k = 0; k < 3; ++k) {
            if (t.v[k] >= n_real_) {
                ++supers;
                k_super = k;
            }
        }
        if (supers != 1) {
            return incircle(pts_[t.v[0]], pts_[t.v[1]], pts_[t.v[2]], p) > 0.0;
        }
        // One vertex at (symbolic) infinity: the circle degenerates to the open
        // half-plane on its side of the real edge, plus the open edge itself.
        const Vec2& a = pts_[t.v[(k_super + 1) % 3]];
        const Vec2& b = pts_[t.v[(k_super + 2) % 3]];
        const double side = orient(a, b, p);
        if (side != 0.0) {
            return side > 0.0;
        }
        const double along = (p - a).dot(b - a);
        return along > 0.0 && along < (b - a).squaredNorm();
    }

    int allocate(const Tri& t)
    {
        if (!free_.empty()) {
            const int id = free_.back();
            free_.pop_back();
            tris_[id] = t;
            stamp_[id] = 0;
            return id;
        }
        tris_.push_back(t);
        stamp_.push_back(0);
        return static_cast<int>(tris_.size() - 1);
    }

    void insert(int pi)
    {
        const Vec2& p = pts_[pi];
        const int start = locate(p);
        ++epoch_;
        const int in_cavity = 2 * epoch_;
        const int rejected = 2 * epoch_ + 1;

        cavity_.clear();
        cavity_.push_back(start);
        stamp_[start] = in_cavity;
        for (std::size_t i = 0; i < cavity_.size(); ++i) {
            const Tri& t = tris_[cavity_[i]];
            for (int k = 0; k < 3; ++k) {
                const int nb = t.n[k];
                if (nb < 0 || stamp_[nb] == in_cavity || stamp_[nb] == rejected) {
                    continue;
                }
                if (in_circle(tris_[nb], p)) {
                    stamp_[nb] = in_cavity;
                    cavity_.push_back(nb);
                } else {
                    stamp_[nb] = rejected;
                }
            }
        }

        edges_.clear();
        for (int c : cavity_) {
            const Tri& t = tris_[c];
            for (int k = 0; k < 3; ++k) {
                const int nb = t.n[k];
                if (nb >= 0 && stamp_[nb] == in_cavity) {
                    continue;
                }
                edges_.push_back({t.v[(k + 1) % 3], t.v[(k + 2) % 3], nb});
            }
        }
        for (int c : cavity_) {
            tris_[c].alive = false;
            free_.push_back(c);
        }

        starts_.clear();
        ends_.clear();
        for (const auto& [a, b, outside] : edges_) {
            const int id = allocate(Tri{{a, b, pi}, {-1, -1, outside}, true});
            if (outside >= 0) {
                Tri& o = tris_[outside];
                for (int m = 0; m < 3; ++m) {
                    if (o.v[(m + 1) % 3] == b && o.v[(m + 2) % 3] == a) {
                        o.n[m] = id;
                        break;
                    }
                }
            }
            starts_.emplace_back(a, id);
            ends_.emplace_back(b, id);
        }
        auto find = [](const std::vector<std::pair<int, int>>& table, int vertex) {
            for (const auto& [v, id] : table) {
                if (v == vertex) {
                    return id;
                }
            }
            return -1;
        };
        for (const auto& [v, id] : starts_) {
            Tri& t = tris_[id];
            t.n[0] = find(starts_, t.v[1]);  // edge (b, p) is shared with the triangle starting at b
            t.n[1] = find(ends_, t.v[0]);    // edge (p, a) is shared with the triangle ending at a
        }
        last_ = starts_.empty() ? -1 : starts_.front().second;
    }

    std::vector<Vec2> pts_;
    std::vector<Tri> tris_;
    std::vector<int> stamp_;
    std::vector<int> free_;
    std::vector<int> cavity_;
    struct EdgeRec {
        int a, b, outside;
    };
    std::vector<EdgeRec> edges_;
    std::vector<std::pair<int, int>> starts_, ends_;
    int last_ = -1;
    int epoch_ = 0;
    int n_real_ = 0;
};

}  // namespace

std::vector<Triangle> delaunay_2d(const PointList& points)
{
    const int n = static_cast<int>(points.size());
    if (n < 3) {
        return {};
    }
    Vec2 lo(points[0].x(), points[0].y()), hi = lo;
    for (const auto& p : points) {
        lo = lo.cwiseMin(Vec2(p.x(), p.y()));
        hi = hi.cwiseMax(Vec2(p.x(), p.y()));
    }
    const Vec2 center = 0.5 * (lo + hi);
    const double span = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-9});

    std::vector<Vec2> pts;
    pts.reserve(n + 3);
    for (const auto& p : points) {
        pts.emplace_back(p.x() - center.x(), p.y() - center.y());
    }
    const double big = 100.0 * span;
    pts.emplace_back(-big, -0.87 * big);
    pts.emplace_back(big, -0.91 * big);
    pts.emplace_back(0.03 * big, big);

    // Hilbert order, then drop exact xy duplicates.
    std::vector<std::uint64_t> keys(n);
    const double cells = 65535.0;
    for (int i = 0; i < n; ++i) {
        const auto gx = static_cast<std::uint32_t>((points[i].x() - lo.x()) / span * cells);
        const auto gy = static_cast<std::uint32_t>((points[i].y() - lo.y()) / span * cells);
        keys[i] = hilbert_index(gx, gy, 16);
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::make_tuple(keys[a], pts[a].x(), pts[a].y(), a) < std::make_tuple(keys[b], pts[b].x(), pts[b].y(), b);
    });
    std::vector<int> unique_order;
    unique_order.reserve(n);
    {
        std::vector<int> by_xy(order);
        std::sort(by_xy.begin(), by_xy.end(), [&](int a, int b) {
            return std::make_tuple(pts[a].x(), pts[a].y(), a) < std::make_tuple(pts[b].x(), pts[b].y(), b);
        });
        std::vector<char> duplicate(n, 0);
        for (int i = 1; i < n; ++i) {
            if (pts[by_xy[i]] == pts[by_xy[i - 1]]) {
                duplicate[by_xy[i]] = 1;
            }
        }
        for (int idx : order) {
            if (!duplicate[idx]) {
                unique_order.push_back(idx);
            }
        }
    }

    Triangulator tri(std::move(pts));
    return tri.run(unique_order, n);
}

}  // namespace leafmatch
