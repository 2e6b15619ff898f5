#include "leafmatch/leaf_frame.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>

namespace leafmatch {

Mat3 LeafFrame::rotation() const
{
    Mat3 r;
    r.col(0) = x_axis;
    r.col(1) = y_axis;
    r.col(2) = z_axis;
    return r;
}

Vec3 centroid(const PointList& points)
{
    Vec3 sum = Vec3::Zero();
    for (const auto& p : points) {
        sum += p;
    }
    return points.empty() ? sum : Vec3(sum / static_cast<double>(points.size()));
}

EmergencePoint estimate_emergence_point(const LabeledScan& scan, const LabelConfig& labels)
{
    if (scan.points.empty()) {
        throw DataError("cannot estimate emergence point of an empty scan");
    }
    PointList candidates;
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
        if (labels.is_stem(scan.labels[i])) {
            candidates.push_back(scan.points[i]);
        }
    }
    EmergencePoint result;
    if (candidates.empty()) {
        candidates = scan.points;
        result.fallback = true;
    }
    double z_min = std::numeric_limits<double>::infinity();
    for (const auto& p : candidates) {
        z_min = std::min(z_min, p.z());
    }
    PointList slice;
    for (const auto& p : candidates) {
        if (p.z() <= z_min + kEmergenceSliceHeight) {
            slice.push_back(p);
        }
    }
    result.position = centroid(slice);
    return result;
}

LeafFrame compute_leaf_frame(const PointList& points, const EmergencePoint& emergence)
{
    if (points.size() < 3) {
        throw FrameError("leaf frame needs at least 3 points, got " + std::to_string(points.size()));
    }
    const Vec3 c = centroid(points);
    Mat3 cov = Mat3::Zero();
    for (const auto& p : points) {
        const Vec3 d = p - c;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(points.size());

    // Eigenvalues come back in ascending order.
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    if (eig.info() != Eigen::Success) {
        throw FrameError("leaf covariance eigendecomposition failed");
    }
    const Vec3 lambda = eig.eigenvalues();
    if (!(lambda[2] > 0.0) || lambda[1] <= 1e-12 * lambda[2]) {
        throw FrameError("degenerate leaf cluster (collinear or coincident points)");
    }

    LeafFrame frame;
    frame.origin = c;
    Vec3 x = eig.eigenvectors().col(2).normalized();
    if (x.dot(c - emergence.position) < 0.0) {
        x = -x;
    }
    Vec3 z = eig.eigenvectors().col(0);
    if (z.z() < 0.0) {
        z = -z;
    }
    const Vec3 y = z.cross(x).normalized();
    z = x.cross(y).normalized();
    frame.x_axis = x;
    frame.y_axis = y;
    frame.z_axis = z;
    frame.near_degenerate = lambda[1] > 0.95 * lambda[2] || lambda[0] > 0.95 * lambda[1];
    return frame;
}

PointList to_local(const PointList& points, const LeafFrame& frame)
{
    const Mat3 rt = frame.rotation().transpose();
    PointList out;
    out.reserve(points.size());
    for (const auto& p : points) {
        out.push_back(rt * (p - frame.origin));
    }
    return out;
}

PointList to_global(const PointList& points, const LeafFrame& frame)
{
    const Mat3 r = frame.rotation();
    PointList out;
    out.reserve(points.size());
    for (const auto& p : points) {
        out.push_back(r * p + frame.origin);
    }
    return out;
}

bool is_valid_frame(const LeafFrame& frame, double tol)
{
    const Mat3 r = frame.rotation();
    return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

}  // namespace leafmatch
