#include "leafmatch/surface_mesh.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>

using namespace leafmatch;

namespace {

/// Regular nx-by-ny vertex grid split into counter-clockwise triangles.
TriMesh grid(int nx, int ny, double spacing = 1.0)
{
    TriMesh m;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            m.vertices.emplace_back(i * spacing, j * spacing, 0.0);
        }
    }
    auto id = [&](int i, int j) { return j * nx + i; };
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    return m;
}

void remove_triangles(TriMesh& m, std::set<std::size_t> which)
{
    std::vector<Triangle> kept;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        if (which.count(t) == 0) {
            kept.push_back(m.triangles[t]);
        }
    }
    m.triangles = kept;
}

/// Triangles of grid cell (i, j) in a grid of width nx.
std::set<std::size_t> cell(int nx, int i, int j)
{
    const auto base = static_cast<std::size_t>(2 * (j * (nx - 1) + i));
    return {base, base + 1};
}

/// Connected components of the boundary-edge graph, via union-find.
int boundary_components(const TriMesh& m)
{
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : m.triangles) {
        for (int k = 0; k < 3; ++k) {
            const int a = t[k];
            const int b = t[(k + 1) % 3];
            ++count[{std::min(a, b), std::max(a, b)}];
        }
    }
    std::vector<int> parent(m.vertices.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    std::set<int> touched;
    for (const auto& [e, c] : count) {
        if (c == 1) {
            parent[find(e.first)] = find(e.second);
            touched.insert(e.first);
            touched.insert(e.second);
        }
    }
    std::set<int> roots;
    for (int v : touched) {
        roots.insert(find(v));
    }
    return static_cast<int>(roots.size());
}

PointList random_disc(int count, double radius, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PointList pts;
    while (static_cast<int>(pts.size()) < count) {
        const double x = u(rng);
        const double y = u(rng);
        if (x * x + y * y <= 1.0) {
            pts.emplace_back(radius * x, radius * y, 0.1 * u(rng));
        }
    }
    return pts;
}

/// Points on the convex hull of the xy-projection, by checking every directed pair
/// for an empty half-plane.
std::size_t hull_size(const PointList& pts)
{
    std::set<std::size_t> on_hull;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (i == j) {
                continue;
            }
            bool all_left = true;
            for (std::size_t k = 0; k < pts.size() && all_left; ++k) {
                if (k != i && k != j && oracle::orient(pts[i].head<2>(), pts[j].head<2>(), pts[k].head<2>()) < 0) {
                    all_left = false;
                }
            }
            if (all_left) {
                on_hull.insert(i);
                on_hull.insert(j);
            }
        }
    }
    return on_hull.size();
}

}  // namespace

TEST(Presmooth, CoplanarUnchanged)
{
    PointList pts;
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            pts.emplace_back(0.5 * i, 0.5 * j, 3.25);
        }
    }
    const auto out = presmooth_z(pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        EXPECT_EQ(out[i], pts[i]);
    }
}

TEST(Presmooth, DistantPointsUnchanged)
{
    const PointList pts{Vec3(0, 0, 1), Vec3(5, 0, -2)};
    const auto out = presmooth_z(pts);
    EXPECT_EQ(out[0], pts[0]);
    EXPECT_EQ(out[1], pts[1]);
}

TEST(Presmooth, SpikeDecaysLikeDirectSimulation)
{
    PointList pts;
    for (int i = 0; i < 15; ++i) {
        for (int j = 0; j < 15; ++j) {
            pts.emplace_back(0.5 * i, 0.5 * j, 0.0);
        }
    }
    const std::size_t spike = 7 * 15 + 7;
    pts[spike].z() = 5.0;

    // Direct simulation of the update rule with an O(n^2) neighbour search.
    std::vector<double> z(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        z[i] = pts[i].z();
    }
    double previous = z[spike];
    for (int it = 1; it <= 8; ++it) {
        std::vector<double> next(z.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double sum = 0.0;
            int count = 0;
            for (std::size_t j = 0; j < pts.size(); ++j) {
                if ((pts[i].head<2>() - pts[j].head<2>()).norm() <= 1.2) {
                    sum += z[j];
                    ++count;
                }
            }
            next[i] = 0.8 * z[i] + 0.2 * sum / count;
        }
        z = next;
        const auto lib = presmooth_z(pts, {1.2, 0.2, it});
        EXPECT_LT(std::abs(lib[spike].z()), previous);
        previous = std::abs(lib[spike].z());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            EXPECT_NEAR(lib[i].z(), z[i], 1e-12);
            EXPECT_EQ(lib[i].x(), pts[i].x());
            EXPECT_EQ(lib[i].y(), pts[i].y());
        }
    }
}

TEST(Delaunay, UnitSquare)
{
    const PointList square{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
    const auto mesh = delaunay_2_5d(square, 2.0);
    ASSERT_EQ(mesh.triangles.size(), 2u);
    std::set<std::pair<int, int>> edges;
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            edges.emplace(std::min(t[k], t[(k + 1) % 3]), std::max(t[k], t[(k + 1) % 3]));
        }
    }
    EXPECT_EQ(edges.size(), 5u);
    EXPECT_THROW(delaunay_2_5d(square, 1.0), MeshError);
}

TEST(Delaunay, TrianglesAreCounterClockwise)
{
    const auto pts = random_disc(150, 5.0, 3);
    for (const auto& t : delaunay_2d(pts)) {
        EXPECT_GT(oracle::orient(pts[t[0]].head<2>(), pts[t[1]].head<2>(), pts[t[2]].head<2>()), 0.0L);
    }
}

TEST(Delaunay, EmptyCircumcircleOnRandomDiscs)
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto pts = random_disc(20 * static_cast<int>(seed), 5.0, seed);
        const auto tris = delaunay_2d(pts);
        // Euler: a triangulation of n points with h on the hull has 2n - 2 - h triangles.
        EXPECT_EQ(tris.size(), 2 * pts.size() - 2 - hull_size(pts)) << "seed " << seed;
        EXPECT_EQ(oracle::circumcircle_violations(pts, tris), 0) << "seed " << seed;
    }
}

TEST(Delaunay, GridWithCocircularQuadsIsValid)
{
    PointList pts;
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            pts.emplace_back(i, j, 0.0);
        }
    }
    const auto tris = delaunay_2d(pts);
    EXPECT_EQ(tris.size(), 2u * 7u * 7u);
    EXPECT_EQ(oracle::circumcircle_violations(pts, tris), 0);
}

TEST(Delaunay, DuplicatesAndCollinearInput)
{
    PointList pts{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 1, 5)};
    const auto tris = delaunay_2d(pts);
    ASSERT_EQ(tris.size(), 1u);
    EXPECT_TRUE(delaunay_2d(PointList{Vec3(0, 0, 0), Vec3(1, 1, 0), Vec3(2, 2, 0)}).empty());
    EXPECT_THROW(delaunay_2_5d(PointList{Vec3(0, 0, 0), Vec3(1, 1, 0), Vec3(2, 2, 0)}, 5.0), MeshError);
}

TEST(Delaunay, PruningRespectsLmaxIn3D)
{
    auto pts = random_disc(200, 4.0, 9);
    for (auto& p : pts) {
        p.z() = 0.3 * std::sin(3.0 * p.x()) * std::cos(2.0 * p.y());
    }
    for (double l_max : {0.6, 1.0, 1.5}) {
        const auto mesh = delaunay_2_5d(pts, l_max);
        EXPECT_LE(max_edge_length(mesh), l_max);
        // Every dropped Delaunay triangle has an edge longer than l_max.
        std::set<Triangle> kept(mesh.triangles.begin(), mesh.triangles.end());
        for (const auto& t : delaunay_2d(pts)) {
            if (kept.count(t) == 0) {
                double longest = 0.0;
                for (int k = 0; k < 3; ++k) {
                    longest = std::max(longest, (pts[t[k]] - pts[t[(k + 1) % 3]]).norm());
                }
                EXPECT_GT(longest, l_max);
            }
        }
    }
}

TEST(Postsmooth, InteriorDriftsLessThanBoundary)
{
    TriMesh m = grid(9, 9, 0.5);
    const auto out = postsmooth_mesh(m);
    EXPECT_EQ(out.triangles, m.triangles);
    const auto degree = boundary_degrees(m);
    double interior = 0.0;
    double boundary = 0.0;
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        const double d = (out.vertices[i] - m.vertices[i]).norm();
        if (degree[i] == 0) {
            interior = std::max(interior, d);
        } else {
            boundary = std::max(boundary, d);
        }
    }
    EXPECT_LT(interior, boundary);
}

TEST(Postsmooth, MatchesDirectUmbrellaUpdate)
{
    TriMesh m = grid(5, 4, 0.7);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 0.1);
    for (auto& v : m.vertices) {
        v += Vec3(n(rng), n(rng), n(rng));
    }
    std::vector<std::set<int>> ring(m.vertices.size());
    for (const auto& t : m.triangles) {
        for (int k = 0; k < 3; ++k) {
            ring[t[k]].insert(t[(k + 1) % 3]);
            ring[t[(k + 1) % 3]].insert(t[k]);
        }
    }
    PointList v = m.vertices;
    for (int it = 0; it < 3; ++it) {
        PointList next = v;
        for (std::size_t i = 0; i < v.size(); ++i) {
            Vec3 mean = Vec3::Zero();
            for (int j : ring[i]) {
                mean += v[j];
            }
            next[i] = 0.8 * v[i] + 0.2 * mean / static_cast<double>(ring[i].size());
        }
        v = next;
    }
    const auto out = postsmooth_mesh(m, {0.2, 3});
    for (std::size_t i = 0; i < v.size(); ++i) {
        EXPECT_LT((out.vertices[i] - v[i]).norm(), 1e-12);
    }
}

TEST(Postsmooth, ZeroIterationsIsIdentity)
{
    const TriMesh m = grid(4, 4);
    const auto out = postsmooth_mesh(m, {0.2, 0});
    EXPECT_EQ(out.triangles, m.triangles);
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        EXPECT_EQ(out.vertices[i], m.vertices[i]);
    }
}

TEST(BoundaryLoops, SingleTriangle)
{
    TriMesh m;
    m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    m.triangles = {{0, 1, 2}};
    const auto loops = extract_boundary_loops(m);
    ASSERT_EQ(loops.size(), 1u);
    EXPECT_EQ(loops[0].vertices.size(), 3u);
    EXPECT_TRUE(loops[0].closed);
}

TEST(BoundaryLoops, GridWithTriangleHole)
{
    TriMesh m = grid(6, 6);
    remove_triangles(m, {2 * (2 * 5 + 2)});
    const auto loops = extract_boundary_loops(m);
    ASSERT_EQ(loops.size(), 2u);
    std::vector<std::size_t> sizes{loops[0].vertices.size(), loops[1].vertices.size()};
    std::sort(sizes.begin(), sizes.end());
    EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 20}));
    EXPECT_EQ(static_cast<int>(loops.size()), boundary_components(m));
}

TEST(BoundaryLoops, EveryBoundaryEdgeInExactlyOneLoop)
{
    TriMesh m = grid(10, 8);
    remove_triangles(m, {10, 11, 40, 41, 43, 70});
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : m.triangles) {
        for (int k = 0; k < 3; ++k) {
            ++count[{std::min(t[k], t[(k + 1) % 3]), std::max(t[k], t[(k + 1) % 3])}];
        }
    }
    std::map<std::pair<int, int>, int> used;
    for (const auto& loop : extract_boundary_loops(m)) {
        for (std::size_t i = 0; i < loop.vertices.size(); ++i) {
            const int a = loop.vertices[i];
            const int b = loop.vertices[(i + 1) % loop.vertices.size()];
            ++used[{std::min(a, b), std::max(a, b)}];
        }
    }
    for (const auto& [e, c] : count) {
        EXPECT_EQ(used[e], c == 1 ? 1 : 0);
    }
}

TEST(BoundaryLoops, NonManifoldFanIsOpenChain)
{
    TriMesh m;
    m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, 1, 0), Vec3(0.5, -1, 0), Vec3(0.5, 0.5, 1)};
    m.triangles = {{0, 1, 2}, {1, 0, 3}, {0, 1, 4}};
    try {
        extract_boundary_loops(m);
        FAIL();
    } catch (const ExtractionError& e) {
        EXPECT_EQ(e.kind(), ExtractionError::Kind::OpenChain);
    }
}

TEST(FillHoles, ClosesSmallHole)
{
    TriMesh m = grid(6, 6);
    remove_triangles(m, {2 * (2 * 5 + 2)});
    const auto filled = fill_holes(m);
    EXPECT_EQ(extract_boundary_loops(filled).size(), 1u);
    EXPECT_EQ(filled.vertices.size(), m.vertices.size() + 1);
    EXPECT_EQ(filled.triangles.size(), m.triangles.size() + 3);
    for (std::size_t i = 0; i < m.triangles.size(); ++i) {
        EXPECT_EQ(filled.triangles[i], m.triangles[i]);
    }
    // The fan keeps the mesh consistently oriented: every interior edge is used
    // once in each direction.
    std::map<std::pair<int, int>, int> directed;
    for (const auto& t : filled.triangles) {
        for (int k = 0; k < 3; ++k) {
            ++directed[{t[k], t[(k + 1) % 3]}];
        }
    }
    for (const auto& [e, c] : directed) {
        EXPECT_EQ(c, 1);
    }
}

TEST(FillHoles, LargeHoleUntouched)
{
    // Removing a 2x2 block of cells leaves an 8-edge hole; a 3x2 block leaves 10
    // and a 4x2 block leaves 12.
    TriMesh m = grid(10, 10);
    std::set<std::size_t> block;
    for (int i = 3; i < 7; ++i) {
        for (int j = 3; j < 5; ++j) {
            const auto c = cell(10, i, j);
            block.insert(c.begin(), c.end());
        }
    }
    remove_triangles(m, block);
    const auto loops = extract_boundary_loops(m);
    ASSERT_EQ(loops.size(), 2u);
    const auto outer = outer_loop_index(loops, m.vertices);
    EXPECT_EQ(loops[1 - outer].vertices.size(), 12u);
    const auto filled = fill_holes(m);
    EXPECT_EQ(filled.triangles.size(), m.triangles.size());
    EXPECT_EQ(filled.vertices.size(), m.vertices.size());
    EXPECT_EQ(extract_boundary_loops(fill_holes(m, 12)).size(), 1u);
}

TEST(FillHoles, SeveralSmallHolesLeaveOneLoop)
{
    TriMesh m = grid(12, 12);
    std::set<std::size_t> holes;
    for (auto [i, j] : {std::pair{2, 2}, std::pair{7, 3}, std::pair{4, 8}}) {
        const auto c = cell(12, i, j);
        holes.insert(c.begin(), c.end());
    }
    holes.insert(2 * (9 * 11 + 8));
    remove_triangles(m, holes);
    EXPECT_EQ(boundary_components(m), 5);
    const auto filled = fill_holes(m);
    EXPECT_EQ(boundary_components(filled), 1);
    EXPECT_EQ(extract_boundary_loops(filled).size(), 1u);
    EXPECT_EQ(filled.vertices.size(), m.vertices.size() + 4);
}

TEST(LoopExtent, OuterLoopIsLargestDiagonal)
{
    PointList v{Vec3(0, 0, 0), Vec3(6, 0, 0), Vec3(6, 8, 0), Vec3(1, 1, 0), Vec3(2, 1, 0), Vec3(1, 2, 0)};
    std::vector<BoundaryLoop> loops{{{3, 4, 5}, true}, {{0, 1, 2}, true}};
    EXPECT_DOUBLE_EQ(loop_extent(loops[1], v), 10.0);
    EXPECT_EQ(outer_loop_index(loops, v), 1u);
}

TEST(Validate, RejectsBadIndices)
{
    TriMesh m = grid(2, 2);
    EXPECT_NO_THROW(validate(m));
    m.triangles.push_back({0, 0, 1});
    EXPECT_THROW(validate(m), MeshError);
    m.triangles.back() = {0, 1, 9};
    EXPECT_THROW(validate(m), MeshError);
}
