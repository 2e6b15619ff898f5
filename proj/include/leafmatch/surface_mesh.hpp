#pragma once

#include "leafmatch/types.hpp"

#include <array>
#include <vector>

namespace leafmatch {

using Triangle = std::array<int, 3>;

/// Triangle mesh in a leaf's local frame.  Triangles are counter-clockwise in the
/// xy-projection when they come out of delaunay_2_5d.
struct TriMesh {
    PointList vertices;
    std::vector<Triangle> triangles;
};

struct PresmoothParams {
    double radius = 1.2;  ///< xy neighbourhood radius, mm
    double factor = 0.2;
    int iterations = 8;
};

struct PostsmoothParams {
    double factor = 0.2;
    int iterations = 20;
};

/// Laplacian smoothing of z only.  Neighbourhoods are fixed xy discs (self included),
/// updates are simultaneous.
PointList presmooth_z(const PointList& points, const PresmoothParams& params = {});

/// 2D Delaunay triangulation of the xy-projection.  Exact xy duplicates are kept as
/// unreferenced vertices.  Every triple is returned; no pruning.
std::vector<Triangle> delaunay_2d(const PointList& points);

/// Delaunay in the xy-plane lifted to 3D, dropping triangles with any 3D edge longer
/// than `l_max`.  Throws MeshError when nothing survives.
TriMesh delaunay_2_5d(const PointList& points, double l_max = 1.0);

/// Umbrella-operator smoothing over one-ring neighbours; connectivity unchanged.
TriMesh postsmooth_mesh(const TriMesh& mesh, const PostsmoothParams& params = {});

/// A closed chain of boundary edges (edges with exactly one incident triangle),
/// following the orientation of the incident triangles.
struct BoundaryLoop {
    std::vector<int> vertices;
    bool closed = true;
};

/// Chains all boundary edges into loops.  Each boundary edge lands in exactly one loop.
/// Throws ExtractionError(OpenChain) when the edges cannot be partitioned into closed loops.
std::vector<BoundaryLoop> extract_boundary_loops(const TriMesh& mesh);

/// Boundary-edge degree per vertex (0 for interior or unreferenced vertices).
std::vector<int> boundary_degrees(const TriMesh& mesh);

/// Bounding-box diagonal of a loop's vertices, mm.
double loop_extent(const BoundaryLoop& loop, const PointList& vertices);

/// Index of the loop with the largest bounding-box diagonal (first on ties).
std::size_t outer_loop_index(const std::vector<BoundaryLoop>& loops, const PointList& vertices);

/// Closes every loop other than the outer one that has at most `max_edges` edges by a
/// fan from a new centroid vertex.
TriMesh fill_holes(const TriMesh& mesh, int max_edges = 10);

double max_edge_length(const TriMesh& mesh);

/// Throws MeshError on out-of-range or repeated indices.
void validate(const TriMesh& mesh);

}  // namespace leafmatch
