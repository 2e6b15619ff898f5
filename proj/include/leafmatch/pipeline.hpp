#pragma once

#include "leafmatch/outline_extract.hpp"
#include "leafmatch/scan_io.hpp"
#include "leafmatch/temporal_match.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace leafmatch {

/// Every tunable of the extraction and matching pipeline.
struct PipelineConfig {
    double l_max = 1.0;  ///< mm
    PresmoothParams presmooth;
    PostsmoothParams postsmooth;
    int max_hole_edges = 10;
    int n_points = 500;
    int dims = 23;
    int bins = 50;
    std::size_t min_cluster = 50;
    LabelConfig labels;
    /// Replaces the per-scan emergence estimate when set.
    std::optional<Vec3> emergence;
    /// Worker threads for per-leaf extraction; 0 picks the hardware concurrency.
    int threads = 1;

    /// Throws DataError when a tunable is out of range.
    void validate() const;
};

/// Why a leaf cluster produced no outline.
enum class Exclusion { Undersized, AxisDegenerate, MeshFailed, OpenBoundary, SubLoop, UnevenSampling };

const char* exclusion_name(Exclusion e);
Exclusion parse_exclusion(const std::string& name);
std::vector<Exclusion> all_exclusions();

struct ExcludedLeaf {
    int leaf_id = 0;
    Exclusion reason = Exclusion::MeshFailed;
    std::string detail;
};

struct ScanExtraction {
    OutlineSet set;
    std::vector<ExcludedLeaf> excluded;
    /// Extracted leaves whose apex looks flipped toward the plant; kept, only reported.
    std::vector<int> misaligned_ids;

    std::size_t attempted() const { return set.outlines.size() + excluded.size(); }
};

/// Runs one cluster through frame, mesh and outline stages.  Throws
/// ExtractionError, FrameError or MeshError on failure.
LeafOutline extract_leaf(const LeafCluster& cluster, const EmergencePoint& emergence, const PipelineConfig& config);

/// True when the apex lies horizontally closer to the emergence point than the
/// opposite end of the outline, i.e. the leaf axis most likely points back toward
/// the stem.
bool likely_axis_misaligned(const LeafOutline& outline, const Vec3& emergence);

/// Extracts every leaf of a scan; failures are recorded, never thrown.
ScanExtraction extract_scan(const LabeledScan& scan, const PipelineConfig& config = {});

/// Outline yield and per-reason exclusion counts over several scans.
struct ExtractionSummary {
    std::size_t scans = 0;
    std::size_t attempted = 0;
    std::size_t extracted = 0;
    std::map<Exclusion, std::size_t> excluded;
    std::size_t misaligned = 0;

    void add(const ScanExtraction& scan);
    /// extracted / attempted, 0 when nothing was attempted.
    double yield() const;
};

}  // namespace leafmatch
