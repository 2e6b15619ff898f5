#include "leafmatch/surface_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace leafmatch {

namespace {

std::uint64_t edge_key(int a, int b)
{
    const auto lo = static_cast<std::uint32_t>(std::min(a, b));
    const auto hi = static_cast<std::uint32_t>(std::max(a, b));
    return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

std::uint64_t directed_key(int a, int b)
{
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

/// Fixed-radius neighbour lists in the xy-plane, compressed-row layout.
struct XyNeighbours {
    std::vector<std::size_t> offsets;
    std::vector<int> indices;
};

XyNeighbours xy_neighbours(const PointList& points, double radius)
{
    XyNeighbours out;
    out.offsets.assign(points.size() + 1, 0);
    if (points.empty()) {
        return out;
    }
    const double cell = radius > 0.0 ? radius : 1.0;
    auto cell_of = [&](const Vec3& p) {
        return std::make_pair(static_cast<long long>(std::floor(p.x() / cell)),
                              static_cast<long long>(std::floor(p.y() / cell)));
    };
    std::map<std::pair<long long, long long>, std::vector<int>> grid;
    for (std::size_t i = 0; i < points.size(); ++i) {
        grid[cell_of(points[i])].push_back(static_cast<int>(i));
    }
    const double r2 = radius * radius;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto [cx, cy] = cell_of(points[i]);
        for (long long gx = cx - 1; gx <= cx + 1; ++gx) {
            for (long long gy = cy - 1; gy <= cy + 1; ++gy) {
                auto it = grid.find({gx, gy});
                if (it == grid.end()) {
                    continue;
                }
                for (int j : it->second) {
                    const double dx = points[j].x() - points[i].x();
                    const double dy = points[j].y() - points[i].y();
                    if (dx * dx + dy * dy <= r2) {
                        out.indices.push_back(j);
                    }
                }
            }
        }
        out.offsets[i + 1] = out.indices.size();
    }
    return out;
}

}  // namespace

PointList presmooth_z(const PointList& points, const PresmoothParams& params)
{
    PointList current = points;
    if (params.iterations <= 0 || points.empty()) {
        return current;
    }
    const auto nb = xy_neighbours(points, params.radius);
    std::vector<double> next(points.size());
    for (int it = 0; it < params.iterations; ++it) {
        for (std::size_t i = 0; i < current.size(); ++i) {
            double sum = 0.0;
            for (std::size_t k = nb.offsets[i]; k < nb.offsets[i + 1]; ++k) {
                sum += current[nb.indices[k]].z();
            }
            const auto count = static_cast<double>(nb.offsets[i + 1] - nb.offsets[i]);
            next[i] = (1.0 - params.factor) * current[i].z() + params.factor * (sum / count);
        }
        for (std::size_t i = 0; i < current.size(); ++i) {
            current[i].z() = next[i];
        }
    }
    return current;
}

TriMesh delaunay_2_5d(const PointList& points, double l_max)
{
    if (points.size() < 3) {
        throw MeshError("triangulation needs at least 3 points, got " + std::to_string(points.size()));
    }
    TriMesh mesh;
    mesh.vertices = points;
    const double l2 = l_max * l_max;
    for (const auto& t : delaunay_2d(points)) {
        const Vec3& a = points[t[0]];
        const Vec3& b = points[t[1]];
        const Vec3& c = points[t[2]];
        if ((a - b).squaredNorm() <= l2 && (b - c).squaredNorm() <= l2 && (c - a).squaredNorm() <= l2) {
            mesh.triangles.push_back(t);
        }
    }
    if (mesh.triangles.empty()) {
        throw MeshError("no triangle survived the l_max edge-length filter");
    }
    return mesh;
}

TriMesh postsmooth_mesh(const TriMesh& mesh, const PostsmoothParams& params)
{
    TriMesh out = mesh;
    if (params.iterations <= 0) {
        return out;
    }
    std::vector<std::vector<int>> ring(mesh.vertices.size());
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            ring[t[k]].push_back(t[(k + 1) % 3]);
            ring[t[k]].push_back(t[(k + 2) % 3]);
        }
    }
    for (auto& r : ring) {
        std::sort(r.begin(), r.end());
        r.erase(std::unique(r.begin(), r.end()), r.end());
    }
    PointList next(out.vertices.size());
    for (int it = 0; it < params.iterations; ++it) {
        for (std::size_t i = 0; i < out.vertices.size(); ++i) {
            if (ring[i].empty()) {
                next[i] = out.vertices[i];
                continue;
            }
            Vec3 mean = Vec3::Zero();
            for (int j : ring[i]) {
                mean += out.vertices[j];
            }
            mean /= static_cast<double>(ring[i].size());
            next[i] = (1.0 - params.factor) * out.vertices[i] + params.factor * mean;
        }
        std::swap(out.vertices, next);
    }
    return out;
}

std::vector<int> boundary_degrees(const TriMesh& mesh)
{
    std::unordered_map<std::uint64_t, int> count;
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            ++count[edge_key(t[k], t[(k + 1) % 3])];
        }
    }
    std::vector<int> degree(mesh.vertices.size(), 0);
    for (const auto& [key, c] : count) {
        if (c == 1) {
            ++degree[static_cast<int>(key >> 32)];
            ++degree[static_cast<int>(key & 0xffffffffu)];
        }
    }
    return degree;
}

std::vector<BoundaryLoop> extract_boundary_loops(const TriMesh& mesh)
{
    std::unordered_map<std::uint64_t, int> count;
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            ++count[edge_key(t[k], t[(k + 1) % 3])];
        }
    }
    std::vector<std::pair<int, int>> edges;
    for (const auto& [key, c] : count) {
        if (c == 1) {
            edges.emplace_back(static_cast<int>(key >> 32), static_cast<int>(key & 0xffffffffu));
        }
    }
    std::sort(edges.begin(), edges.end());

    std::map<int, std::vector<std::pair<int, std::size_t>>> adjacency;  // vertex -> (neighbour, edge id)
    for (std::size_t e = 0; e < edges.size(); ++e) {
        adjacency[edges[e].first].emplace_back(edges[e].second, e);
        adjacency[edges[e].second].emplace_back(edges[e].first, e);
    }
    for (auto& [v, list] : adjacency) {
        if (list.size() % 2 != 0) {
            throw ExtractionError(ExtractionError::Kind::OpenChain,
                                  "boundary vertex " + std::to_string(v) + " has odd boundary degree");
        }
        std::sort(list.begin(), list.end());
    }

    std::vector<char> used(edges.size(), 0);
    std::vector<BoundaryLoop> loops;
    for (std::size_t e0 = 0; e0 < edges.size(); ++e0) {
        if (used[e0]) {
            continue;
        }
        used[e0] = 1;
        const int start = edges[e0].first;
        BoundaryLoop loop;
        loop.vertices.push_back(start);
        int cur = edges[e0].second;
        while (cur != start) {
            loop.vertices.push_back(cur);
            int next = -1;
            for (const auto& [nb, e] : adjacency[cur]) {
                if (!used[e]) {
                    used[e] = 1;
                    next = nb;
                    break;
                }
            }
            if (next < 0) {
                throw ExtractionError(ExtractionError::Kind::OpenChain, "boundary chain does not close");
            }
            cur = next;
        }
        loops.push_back(std::move(loop));
    }
    return loops;
}

double loop_extent(const BoundaryLoop& loop, const PointList& vertices)
{
    if (loop.vertices.empty()) {
        return 0.0;
    }
    Vec3 lo = vertices[loop.vertices.front()], hi = lo;
    for (int v : loop.vertices) {
        lo = lo.cwiseMin(vertices[v]);
        hi = hi.cwiseMax(vertices[v]);
    }
    return (hi - lo).norm();
}

std::size_t outer_loop_index(const std::vector<BoundaryLoop>& loops, const PointList& vertices)
{
    std::size_t best = 0;
    double best_extent = -1.0;
    for (std::size_t i = 0; i < loops.size(); ++i) {
        const double extent = loop_extent(loops[i], vertices);
        if (extent > best_extent) {
            best_extent = extent;
            best = i;
        }
    }
    return best;
}

TriMesh fill_holes(const TriMesh& mesh, int max_edges)
{
    TriMesh out = mesh;
    const auto loops = extract_boundary_loops(mesh);
    if (loops.size() < 2) {
        return out;
    }
    std::unordered_set<std::uint64_t> directed;
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            directed.insert(directed_key(t[k], t[(k + 1) % 3]));
        }
    }
    const std::size_t outer = outer_loop_index(loops, mesh.vertices);
    for (std::size_t i = 0; i < loops.size(); ++i) {
        const auto& loop = loops[i];
        if (i == outer || static_cast<int>(loop.vertices.size()) > max_edges) {
            continue;
        }
        Vec3 c = Vec3::Zero();
        for (int v : loop.vertices) {
            c += mesh.vertices[v];
        }
        c /= static_cast<double>(loop.vertices.size());
        const int ci = static_cast<int>(out.vertices.size());
        out.vertices.push_back(c);
        const std::size_t m = loop.vertices.size();
        for (std::size_t k = 0; k < m; ++k) {
            const int u = loop.vertices[k];
            const int w = loop.vertices[(k + 1) % m];
            // Match the orientation of the triangle already owning edge (u, w).
            if (directed.count(directed_key(u, w)) != 0) {
                out.triangles.push_back({w, u, ci});
            } else {
                out.triangles.push_back({u, w, ci});
            }
        }
    }
    return out;
}

double max_edge_length(const TriMesh& mesh)
{
    double best = 0.0;
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            best = std::max(best, (mesh.vertices[t[k]] - mesh.vertices[t[(k + 1) % 3]]).norm());
        }
    }
    return best;
}

void validate(const TriMesh& mesh)
{
    const int n = static_cast<int>(mesh.vertices.size());
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            if (t[k] < 0 || t[k] >= n) {
                throw MeshError("triangle index out of range");
            }
        }
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
            throw MeshError("degenerate triangle with a repeated vertex");
        }
    }
}

}  // namespace leafmatch
