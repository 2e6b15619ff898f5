#pragma once

#include "leafmatch/leaf_frame.hpp"
#include "leafmatch/surface_mesh.hpp"

#include <optional>
#include <string>

namespace leafmatch {

/// A leaf boundary resampled to `n` points with equal 3D spacing, clockwise in the
/// local xy-plane, starting at the apex.  Coordinates are in the leaf frame with the
/// apex at the origin and are divided by the outline length, so the closed polygon
/// has perimeter 1.
struct LeafOutline {
    std::string plant_id;
    int time_index = 0;
    int leaf_id = 0;
    PointList points;
    /// Origin is the apex in scan coordinates; axes are the leaf axes.
    LeafFrame frame;
    /// Closed outline length in mm before normalisation.
    double scale = 0.0;
    /// Leaf cluster centroid in scan coordinates, mm.
    Vec3 centroid = Vec3::Zero();

    std::size_t size() const { return points.size(); }
};

/// Picks the loop with the largest bounding-box diagonal.  Throws
/// ExtractionError(SubLoop) if any of its vertices carries more than two boundary
/// edges, i.e. the contour pinches into sub-loops.
BoundaryLoop select_and_clean(const std::vector<BoundaryLoop>& loops, const TriMesh& mesh);

/// Orders the loop clockwise from its max-x vertex (lowest vertex index on ties) and
/// places `n` points along it with equal chord length.  `mesh` must be in the frame's
/// local coordinates.  `centroid` is stored as-is.
LeafOutline orient_and_sample(const BoundaryLoop& loop, const TriMesh& mesh, const LeafFrame& frame, int n = 500,
                              const Vec3& centroid = Vec3::Zero());

/// Equal-chord resampling of a closed polyline starting at its first vertex.
/// Returns n points; throws ExtractionError(UnevenSampling) when no uniform
/// chord length closes the loop (hairpins narrower than the chord).
PointList resample_closed_uniform(const PointList& polyline, int n);

/// Scan-frame coordinates: scale, rotate, then translate to the apex.
PointList outline_to_global(const LeafOutline& outline);

/// Signed area of the xy-projection of a closed polygon (positive = counter-clockwise).
double signed_area_xy(const PointList& polygon);

double closed_length(const PointList& polygon);

/// Checks every LeafOutline invariant at the given tolerance and returns a
/// description of the first violation, if any.
std::optional<std::string> check_outline_invariants(const LeafOutline& outline, double tol = 1e-6);

}  // namespace leafmatch
