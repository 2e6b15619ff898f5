#include "leafmatch/outline_extract.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>

namespace leafmatch {

namespace {

/// Walks forward from a point on a closed polyline and finds the first point at a
/// given chord distance.  Arc positions grow past the loop length when wrapping.
class ChordWalker {
public:
    explicit ChordWalker(const PointList& poly) : poly_(poly), cum_(poly.size() + 1, 0.0)
    {
        const std::size_t m = poly.size();
        for (std::size_t i = 0; i < m; ++i) {
            cum_[i + 1] = cum_[i] + (poly[(i + 1) % m] - poly[i]).norm();
        }
    }

    double length() const { return cum_.back(); }

    struct Position {
        std::size_t segment = 0;  // unwrapped segment counter
        double t = 0.0;
        double arc = 0.0;
        Vec3 point = Vec3::Zero();
    };

    Position start() const { return Position{0, 0.0, 0.0, poly_[0]}; }

    /// First point after `from` at chord distance `delta`; nullopt once the walk
    /// passes `arc_limit`.
    std::optional<Position> next(const Position& from, double delta, double arc_limit) const
    {
        const std::size_t m = poly_.size();
        const double d2 = delta * delta;
        double t_lo = from.t;
        for (std::size_t seg = from.segment;; ++seg) {
            const std::size_t i = seg % m;
            const double seg_start = static_cast<double>(seg / m) * length() + cum_[i];
            if (seg_start > arc_limit) {
                return std::nullopt;
            }
            const Vec3& a = poly_[i];
            const Vec3& b = poly_[(i + 1) % m];
            // The walk is inside the sphere up to here; it leaves on the first segment
            // whose end reaches it.
            if ((b - from.point).squaredNorm() >= d2) {
                const Vec3 d = b - a;
                const double qa = d.squaredNorm();
                const Vec3 ac = a - from.point;
                const double qb = 2.0 * d.dot(ac);
                const double qc = ac.squaredNorm() - d2;
                const double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
                const double t = qa > 0.0 ? std::clamp((-qb + std::sqrt(disc)) / (2.0 * qa), t_lo, 1.0) : 1.0;
                const double seg_len = cum_[i + 1] - cum_[i];
                return Position{seg, t, seg_start + t * seg_len, a + t * d};
            }
            t_lo = 0.0;
        }
    }

    /// Arc position of the n-th equal-chord step from the start (infinity when it
    /// runs far past the loop end).
    double closing_arc(double delta, int n) const
    {
        const double limit = length() * (1.0 + 2.0 / n) + delta;
        Position pos = start();
        for (int k = 0; k < n; ++k) {
            auto next_pos = next(pos, delta, limit);
            if (!next_pos) {
                return std::numeric_limits<double>::infinity();
            }
            pos = *next_pos;
        }
        return pos.arc;
    }

    /// The c-th crossing (1-based) of the sphere of radius `delta` around
    /// `from.point`, searching forward up to `arc_limit`.
    std::optional<Position> crossing(const Position& from, double delta, int c, double arc_limit) const
    {
        const std::size_t m = poly_.size();
        const double d2 = delta * delta;
        double t_lo = from.t;
        int seen = 0;
        for (std::size_t seg = from.segment;; ++seg) {
            const std::size_t i = seg % m;
            const double seg_start = static_cast<double>(seg / m) * length() + cum_[i];
            if (seg_start > arc_limit) {
                return std::nullopt;
            }
            const Vec3& a = poly_[i];
            const Vec3 d = poly_[(i + 1) % m] - a;
            const double qa = d.squaredNorm();
            if (qa > 0.0) {
                const Vec3 ac = a - from.point;
                const double qb = 2.0 * d.dot(ac);
                const double qc = ac.squaredNorm() - d2;
                const double disc = qb * qb - 4.0 * qa * qc;
                if (disc > 0.0) {
                    const double root = std::sqrt(disc);
                    for (double t : {(-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)}) {
                        if (t > t_lo && t <= 1.0 && ++seen == c) {
                            const double seg_len = cum_[i + 1] - cum_[i];
                            return Position{seg, t, seg_start + t * seg_len, a + t * d};
                        }
                    }
                }
            }
            t_lo = 0.0;
        }
    }

    /// A step that takes its `crossing`-th sphere crossing instead of the first.
    struct Branch {
        int step;
        int crossing;
    };

    /// n equal-chord steps from the start.
    std::optional<std::vector<Position>> walk(double delta, int n, const std::vector<Branch>& branches = {}) const
    {
        const double limit = length() * (1.0 + 2.0 / n) + delta;
        std::vector<Position> out;
        out.reserve(n);
        Position pos = start();
        for (int k = 0; k < n; ++k) {
            int c = 1;
            for (const auto& b : branches) {
                if (b.step == k) {
                    c = b.crossing;
                }
            }
            auto next_pos = c == 1 ? next(pos, delta, limit) : crossing(pos, delta, c, limit);
            if (!next_pos) {
                return std::nullopt;
            }
            pos = *next_pos;
            out.push_back(pos);
        }
        return out;
    }

private:
    const PointList& poly_;
    std::vector<double> cum_;
};

double gap_ratio(const PointList& pts)
{
    double gap_min = std::numeric_limits<double>::infinity();
    double gap_max = 0.0;
    const std::size_t n = pts.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double gap = (pts[(k + 1) % n] - pts[k]).norm();
        gap_min = std::min(gap_min, gap);
        gap_max = std::max(gap_max, gap);
    }
    return gap_max / gap_min;
}

/// Closes an equal-chord chain when the forward walk jumps at acute corners.
/// Each jump is a fold in the family of chains; past it the closing chain takes
/// a later sphere crossing at the jumping step.
class FoldSolver {
public:
    FoldSolver(const ChordWalker& walker, int n) : walker_(walker), n_(n) {}

    std::optional<PointList> solve(double lo, double hi) const { return bracketed({}, lo, hi, 0); }

private:
    using Branches = std::vector<ChordWalker::Branch>;

    /// Distance from the last sample back to the start, minus the chord.
    std::optional<double> residual(const Branches& branches, double delta) const
    {
        const auto w = walker_.walk(delta, n_ - 1, branches);
        if (!w) {
            return std::nullopt;
        }
        if (w->back().arc >= walker_.length()) {
            return -delta;
        }
        return (w->back().point - walker_.start().point).norm() - delta;
    }

    std::optional<PointList> bracketed(const Branches& branches, double a, double b, int depth) const
    {
        const auto fa = residual(branches, a);
        const auto fb = residual(branches, b);
        if (!fa || !fb) {
            return std::nullopt;
        }
        if ((*fa > 0.0) != (*fb > 0.0)) {
            const bool a_positive = *fa > 0.0;
            for (int it = 0; it < 200 && std::abs(b - a) > 1e-16 * walker_.length(); ++it) {
                const double mid = 0.5 * (a + b);
                const auto v = residual(branches, mid);
                if (!v) {
                    return std::nullopt;
                }
                ((*v > 0.0) == a_positive ? a : b) = mid;
            }
            for (double delta : {a, b}) {
                if (auto pts = chain(branches, delta)) {
                    return pts;
                }
            }
        }
        if (depth >= 4) {
            return std::nullopt;
        }
        const auto wa = walker_.walk(a, n_ - 1, branches);
        const auto wb = walker_.walk(b, n_ - 1, branches);
        int jump = -1;
        for (std::size_t k = 0; k < wa->size(); ++k) {
            if (std::abs((*wa)[k].arc - (*wb)[k].arc) > 1e-9 * a) {
                jump = static_cast<int>(k);
                break;
            }
        }
        const auto seen = [&](const ChordWalker::Branch& br) { return br.step == jump; };
        if (jump < 0 || std::any_of(branches.begin(), branches.end(), seen)) {
            return std::nullopt;
        }
        for (int c : {2, 3}) {
            Branches next = branches;
            next.push_back({jump, c});
            if (auto pts = scan(next, 0.5 * (a + b), depth + 1)) {
                return pts;
            }
        }
        return std::nullopt;
    }

    /// Grid search around `at` for sign changes of the branched residual, nearest first.
    /// The grid is geometric towards `at`, where folded branches can be very short.
    std::optional<PointList> scan(const Branches& branches, double at, int depth) const
    {
        std::vector<double> grid{at};
        for (int k = 0; k <= 96; ++k) {
            const double offset = 0.5 * std::pow(0.7, k);
            grid.push_back(at * (1.0 - offset));
            grid.push_back(at * (1.0 + offset));
        }
        std::sort(grid.begin(), grid.end());
        const int cells = static_cast<int>(grid.size()) - 1;
        std::vector<std::optional<double>> values;
        for (double delta : grid) {
            values.push_back(residual(branches, delta));
        }
        // Branches end where two crossings merge; the residual is steep there, so a
        // cell with one undefined end is cut back to the end of the branch.
        std::vector<std::pair<double, double>> brackets;
        for (int i = 0; i < cells; ++i) {
            if (values[i] && values[i + 1]) {
                if ((*values[i] > 0.0) != (*values[i + 1] > 0.0)) {
                    brackets.emplace_back(grid[i], grid[i + 1]);
                }
            } else if (values[i] || values[i + 1]) {
                const int in = values[i] ? i : i + 1;
                const double end = branch_end(branches, grid[in], grid[i + i + 1 - in]);
                const auto v = residual(branches, end);
                if (v && (*v > 0.0) != (*values[in] > 0.0)) {
                    brackets.emplace_back(grid[in], end);
                }
            }
        }
        std::sort(brackets.begin(), brackets.end(), [&](const auto& x, const auto& y) {
            return std::abs(x.first - at) < std::abs(y.first - at);
        });
        for (const auto& [lo, hi] : brackets) {
            if (auto pts = bracketed(branches, lo, hi, depth)) {
                return pts;
            }
        }
        return std::nullopt;
    }

    /// Last chord from `inside` towards `outside` for which the branched walk exists.
    double branch_end(const Branches& branches, double inside, double outside) const
    {
        for (int it = 0; it < 100 && std::abs(inside - outside) > 1e-16 * walker_.length(); ++it) {
            const double mid = 0.5 * (inside + outside);
            (residual(branches, mid) ? inside : outside) = mid;
        }
        return inside;
    }

    std::optional<PointList> chain(const Branches& branches, double delta) const
    {
        const auto w = walker_.walk(delta, n_ - 1, branches);
        if (!w || w->back().arc >= walker_.length()) {
            return std::nullopt;
        }
        PointList pts;
        pts.reserve(n_);
        pts.push_back(walker_.start().point);
        for (const auto& p : *w) {
            pts.push_back(p.point);
        }
        if (!(gap_ratio(pts) <= 1.0 + 1e-9)) {
            return std::nullopt;
        }
        return pts;
    }

    const ChordWalker& walker_;
    int n_;
};

}  // namespace

double signed_area_xy(const PointList& polygon)
{
    double area = 0.0;
    const std::size_t m = polygon.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Vec3& a = polygon[i];
        const Vec3& b = polygon[(i + 1) % m];
        area += a.x() * b.y() - b.x() * a.y();
    }
    return 0.5 * area;
}

double closed_length(const PointList& polygon)
{
    double length = 0.0;
    const std::size_t m = polygon.size();
    for (std::size_t i = 0; i < m; ++i) {
        length += (polygon[(i + 1) % m] - polygon[i]).norm();
    }
    return length;
}

BoundaryLoop select_and_clean(const std::vector<BoundaryLoop>& loops, const TriMesh& mesh)
{
    if (loops.empty()) {
        throw ExtractionError(ExtractionError::Kind::OpenChain, "mesh has no boundary loop");
    }
    const BoundaryLoop& outer = loops[outer_loop_index(loops, mesh.vertices)];
    const auto degree = boundary_degrees(mesh);
    for (int v : outer.vertices) {
        if (degree[v] > 2) {
            throw ExtractionError(ExtractionError::Kind::SubLoop,
                                  "outer boundary vertex " + std::to_string(v) + " has " + std::to_string(degree[v])
                                      + " boundary edges");
        }
    }
    return outer;
}

PointList resample_closed_uniform(const PointList& polyline, int n)
{
    if (n < 3) {
        throw ExtractionError(ExtractionError::Kind::UnevenSampling, "need at least 3 samples");
    }
    if (polyline.size() < 3) {
        throw ExtractionError(ExtractionError::Kind::ZeroLength, "loop has fewer than 3 vertices");
    }
    const ChordWalker walker(polyline);
    const double length = walker.length();
    if (!(length > 0.0) || !std::isfinite(length)) {
        throw ExtractionError(ExtractionError::Kind::ZeroLength, "loop has zero length");
    }

    // The closing arc is non-decreasing in the chord length; bisect for the chord that
    // lands the n-th step back on the start.
    double lo = 0.0;
    double hi = length / n;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * length; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (walker.closing_arc(mid, n) < length) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double delta = 0.5 * (lo + hi);

    PointList out;
    out.reserve(n);
    std::string failure;
    auto pos = walker.start();
    out.push_back(pos.point);
    for (int k = 1; k < n && failure.empty(); ++k) {
        auto next_pos = walker.next(pos, delta, length * 2.0);
        if (!next_pos) {
            failure = "equal-chord walk overran the loop";
            break;
        }
        pos = *next_pos;
        out.push_back(pos.point);
    }
    if (failure.empty() && pos.arc >= length) {
        failure = "equal-chord walk wrapped past the start";
    }
    if (failure.empty() && !(gap_ratio(out) <= 1.0 + 1e-9)) {
        std::ostringstream msg;
        msg << "no uniform chord closes the loop (gap ratio " << gap_ratio(out) << ")";
        failure = msg.str();
    }
    if (!failure.empty()) {
        auto solved = FoldSolver(walker, n).solve(lo, hi);
        if (!solved || !(gap_ratio(*solved) <= 1.0 + 1e-9)) {
            throw ExtractionError(ExtractionError::Kind::UnevenSampling, failure);
        }
        out = std::move(*solved);
    }
    return out;
}

LeafOutline orient_and_sample(const BoundaryLoop& loop, const TriMesh& mesh, const LeafFrame& frame, int n,
                              const Vec3& centroid)
{
    if (loop.vertices.size() < 3) {
        throw ExtractionError(ExtractionError::Kind::ZeroLength, "boundary loop has fewer than 3 vertices");
    }
    std::vector<int> order = loop.vertices;
    PointList poly;
    poly.reserve(order.size());
    for (int v : order) {
        poly.push_back(mesh.vertices[v]);
    }
    if (signed_area_xy(poly) > 0.0) {
        std::reverse(order.begin(), order.end());
    }
    std::size_t apex = 0;
    for (std::size_t i = 1; i < order.size(); ++i) {
        const double xi = mesh.vertices[order[i]].x();
        const double xa = mesh.vertices[order[apex]].x();
        if (xi > xa || (xi == xa && order[i] < order[apex])) {
            apex = i;
        }
    }
    std::rotate(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(apex), order.end());
    poly.clear();
    for (int v : order) {
        poly.push_back(mesh.vertices[v]);
    }

    const PointList samples = resample_closed_uniform(poly, n);
    const double length = closed_length(samples);
    const Vec3 apex_local = samples.front();

    LeafOutline outline;
    outline.points.reserve(samples.size());
    for (const auto& p : samples) {
        outline.points.push_back((p - apex_local) / length);
    }
    outline.frame = frame;
    outline.frame.origin = frame.origin + frame.rotation() * apex_local;
    outline.scale = length;
    outline.centroid = centroid;
    return outline;
}

PointList outline_to_global(const LeafOutline& outline)
{
    const Mat3 r = outline.frame.rotation();
    PointList out;
    out.reserve(outline.points.size());
    for (const auto& p : outline.points) {
        out.push_back(r * (outline.scale * p) + outline.frame.origin);
    }
    return out;
}

std::optional<std::string> check_outline_invariants(const LeafOutline& outline, double tol)
{
    const auto& pts = outline.points;
    const std::size_t n = pts.size();
    if (n < 3) {
        return "outline has fewer than 3 points";
    }
    double gap_min = std::numeric_limits<double>::infinity();
    double gap_max = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double gap = (pts[(k + 1) % n] - pts[k]).norm();
        gap_min = std::min(gap_min, gap);
        gap_max = std::max(gap_max, gap);
    }
    if (!(gap_max < gap_min * (1.0 + tol))) {
        return "non-uniform spacing";
    }
    if (std::abs(closed_length(pts) - 1.0) > tol) {
        return "perimeter is not 1";
    }
    if (signed_area_xy(pts) > 0.0) {
        return "outline is counter-clockwise";
    }
    if (pts.front().norm() > tol) {
        return "apex is not at the origin";
    }
    for (const auto& p : pts) {
        if (p.x() > pts.front().x() + tol) {
            return "point 0 is not the maximum along the main axis";
        }
    }
    if (!is_valid_frame(outline.frame)) {
        return "frame is not orthonormal and right-handed";
    }
    return std::nullopt;
}

}  // namespace leafmatch
