#pragma once

#include "leafmatch/scan_io.hpp"
#include "leafmatch/types.hpp"

namespace leafmatch {

/// Right-handed leaf frame.  Axes are unit vectors expressed in the scan frame:
/// x_axis along the blade pointing away from the plant, z_axis the blade normal.
struct LeafFrame {
    Vec3 origin = Vec3::Zero();
    Vec3 x_axis = Vec3::UnitX();
    Vec3 y_axis = Vec3::UnitY();
    Vec3 z_axis = Vec3::UnitZ();
    /// Set when two covariance eigenvalues are within 5% of each other, so the
    /// axis order may be unstable under small perturbations.
    bool near_degenerate = false;

    /// Columns are the local axes.
    Mat3 rotation() const;
};

struct EmergencePoint {
    Vec3 position = Vec3::Zero();
    /// True when no stem points were found and all points were used instead.
    bool fallback = false;
};

/// Height of the lowest slice used for the emergence estimate, in mm.
inline constexpr double kEmergenceSliceHeight = 10.0;

/// Centroid of the lowest 10 mm z-slice of stem points (all points if the scan has no stem).
EmergencePoint estimate_emergence_point(const LabeledScan& scan, const LabelConfig& labels = {});

/// Principal-axis frame of a leaf cluster, origin at the cluster centroid.
/// Throws FrameError for collinear or coincident points.
LeafFrame compute_leaf_frame(const PointList& points, const EmergencePoint& emergence);
inline LeafFrame compute_leaf_frame(const LeafCluster& cluster, const EmergencePoint& emergence)
{
    return compute_leaf_frame(cluster.points, emergence);
}

PointList to_local(const PointList& points, const LeafFrame& frame);
PointList to_global(const PointList& points, const LeafFrame& frame);

Vec3 centroid(const PointList& points);

/// True when the axes are orthonormal and right-handed within `tol`.
bool is_valid_frame(const LeafFrame& frame, double tol = 1e-9);

}  // namespace leafmatch
