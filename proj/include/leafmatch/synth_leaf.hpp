#pragma once

#include "leafmatch/scan_io.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace leafmatch::synth {

struct SynthConfig {
    std::uint64_t seed = 1;
    int plants = 3;
    int steps = 6;
    int leaves_per_plant = 6;
    double growth = 1.06;            ///< uniform scale factor per step
    double growth_jitter = 0.0;      ///< std-dev of the per-leaf log growth factor per step
    double curvature_growth = 0.02;  ///< relative increase of blade curvature per step
    double noise_mm = 0.3;           ///< amplitude of smooth bending noise
    double rigid_deg = 2.0;          ///< std-dev of per-step attitude perturbation
    double plant_yaw_deg = 0.0;      ///< std-dev of a whole-plant turn about the stem, drawn per scan
    double birth_prob = 0.0;
    double death_prob = 0.0;
    double density = 6.0;  ///< points per mm^2 of blade
    double figure_eight_rate = 0.0;
    double undersized_rate = 0.0;
    double inverted_axis_rate = 0.0;
    std::string plant_prefix = "P";
    int first_plant_index = 0;

    /// Throws DataError when a field is out of range.
    void validate() const;
};

enum class Archetype { Entire, Lobed };
const char* archetype_name(Archetype a);

/// Ground truth for one leaf in one scan.
struct LeafRecord {
    std::string plant_id;
    int time_index = 0;
    int leaf_id = 0;
    Archetype archetype = Archetype::Entire;
    bool figure_eight = false;
    bool undersized = false;
    bool inverted_axis = false;
    std::size_t point_count = 0;
    Vec3 petiole_direction = Vec3::UnitX();  ///< blade base-to-tip direction, unit
    Vec3 blade_base = Vec3::Zero();
};

struct Correspondence {
    std::string plant_id;
    int before_time = 0;
    int after_time = 0;
    std::vector<int> shared_leaf_ids;
};

struct PlantTruth {
    std::string plant_id;
    Vec3 emergence = Vec3::Zero();
};

struct SynthSequence {
    std::vector<LabeledScan> scans;  ///< plant-major, time-minor
    std::vector<Correspondence> correspondences;
    std::vector<LeafRecord> leaves;
    std::vector<PlantTruth> plants;
};

SynthSequence generate_sequence(const SynthConfig& config);

/// Standalone blade sample in its own frame: base at the origin, tip along +x,
/// normal along +z.  Used for shape tests that do not need a whole plant.
struct BladeShape {
    double length = 40.0;
    double half_width = 10.0;     ///< at the widest point, before lobing
    double right_scale = 1.0;     ///< right/left half-width asymmetry
    double profile_power = 2.0;
    double widest_at = 0.45;      ///< fraction of length
    double tip_taper = 0.0;       ///< 0: rounded tip; >= 1: pointed, sharper as it grows
    int lobes = 0;
    double lobe_depth = 0.0;
    double cupping = 0.0;         ///< transverse curvature, per unit length
    double curl = 0.0;            ///< longitudinal curvature, per unit length
};

BladeShape random_blade(std::uint64_t seed, Archetype archetype);

PointList sample_blade(const BladeShape& blade, double density, std::uint64_t seed);

}  // namespace leafmatch::synth
