#include "leafmatch/synth_leaf.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace leafmatch::synth {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b)
{
    // splitmix64 finaliser over the combined value
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double normal(std::mt19937_64& rng, double sigma)
{
    return sigma > 0.0 ? std::normal_distribution<double>(0.0, sigma)(rng) : 0.0;
}

struct Profile {
    const BladeShape& blade;
    double gamma;

    explicit Profile(const BladeShape& b) : blade(b), gamma(std::log(0.5) / std::log(b.widest_at)) {}

    double base(double t) const
    {
        if (t <= 0.0 || t >= 1.0) {
            return 0.0;
        }
        const double s = std::pow(t, gamma);
        const double e = std::pow(std::abs(2.0 * s - 1.0), blade.profile_power);
        const double lobe = 1.0 - blade.lobe_depth * std::pow(std::sin(kPi * blade.lobes * t), 2);
        const double exponent = s > 0.5 && blade.tip_taper > 0.0 ? blade.tip_taper : 1.0 / blade.profile_power;
        return blade.half_width * std::pow(std::max(0.0, 1.0 - e), exponent) * lobe;
    }
    double right(double t) const { return base(t) * blade.right_scale; }
    double left(double t) const { return base(t); }

    double surface_z(double u, double v) const
    {
        return (blade.cupping * v * v + blade.curl * u * u) / blade.length;
    }
};

/// Smooth low-order deformation of the blade normal, mm.
struct Bending {
    double amplitude = 0.0;
    double c1 = 0.0, c2 = 0.0, c3 = 0.0, phase = 0.0;

    double operator()(double u, double v, double length) const
    {
        if (amplitude == 0.0) {
            return 0.0;
        }
        const double su = u / length;
        const double sv = v / length;
        return amplitude * (c1 * std::sin(kPi * su + phase) + 4.0 * c2 * sv + 4.0 * c3 * su * sv) / std::sqrt(3.0);
    }
};

/// Points spaced about `step` apart along the curve t -> (t*L, side(t)).
template <typename Side>
std::vector<Eigen::Vector2d> margin_curve(const BladeShape& blade, Side side, double step)
{
    constexpr int dense = 4000;
    std::vector<Eigen::Vector2d> poly;
    poly.reserve(dense + 1);
    for (int k = 0; k <= dense; ++k) {
        const double t = static_cast<double>(k) / dense;
        poly.emplace_back(t * blade.length, side(t));
    }
    std::vector<Eigen::Vector2d> out;
    double acc = 0.0;
    for (int k = 1; k < dense; ++k) {
        acc += (poly[k] - poly[k - 1]).norm();
        if (acc >= step) {
            out.push_back(poly[k]);
            acc = 0.0;
        }
    }
    return out;
}

struct FigureEight {
    bool enabled = false;
    double u0 = 0.0;
};

/// Blade points in the blade frame (u along the midrib, v across, z normal).
PointList blade_points(const BladeShape& blade, double density, std::uint64_t seed, const Bending& bend,
                       const FigureEight& cut, double sensor_sigma, std::mt19937_64& noise_rng)
{
    const Profile prof(blade);
    const double h = 1.0 / std::sqrt(density);
    std::mt19937_64 rng(seed);
    std::vector<Eigen::Vector2d> uv;

    const auto rows = static_cast<int>(std::ceil(blade.length / h));
    const double w_max = blade.half_width * std::max(1.0, blade.right_scale);
    const auto cols = static_cast<int>(std::ceil(w_max / h)) + 1;
    const double inset = 0.3 * h;
    for (int i = 0; i < rows; ++i) {
        for (int j = -cols; j < cols; ++j) {
            const double u = (i + 0.5) * h + uniform(rng, -0.2, 0.2) * h;
            const double v = (j + 0.5) * h + uniform(rng, -0.2, 0.2) * h;
            const double t = u / blade.length;
            if (t <= 0.0 || t >= 1.0) {
                continue;
            }
            if (v > -prof.left(t) + inset && v < prof.right(t) - inset && u > inset && u < blade.length - inset) {
                uv.emplace_back(u, v);
            }
        }
    }
    const double margin_step = 0.75 * h;
    for (const auto& p : margin_curve(blade, [&](double t) { return prof.right(t); }, margin_step)) {
        uv.push_back(p);
    }
    for (const auto& p : margin_curve(blade, [&](double t) { return -prof.left(t); }, margin_step)) {
        uv.push_back(p);
    }
    uv.emplace_back(0.0, 0.0);
    uv.emplace_back(blade.length, 0.0);

    if (cut.enabled) {
        // Cut a 1.6 mm band across the blade, then bridge it with two triangles that
        // only share the vertex P, leaving a pinched (figure-eight) contour.
        std::erase_if(uv, [&](const Eigen::Vector2d& p) { return std::abs(p.x() - cut.u0) < 0.8; });
        const double t0 = cut.u0 / blade.length;
        const double vc = 0.5 * (prof.right(t0) - prof.left(t0));
        uv.emplace_back(cut.u0, vc);
        uv.emplace_back(cut.u0 + 0.6, vc - 0.25);
        uv.emplace_back(cut.u0 + 0.6, vc + 0.25);
        uv.emplace_back(cut.u0 - 0.6, vc - 0.25);
        uv.emplace_back(cut.u0 - 0.6, vc + 0.25);
    }

    PointList out;
    out.reserve(uv.size());
    for (const auto& p : uv) {
        const double z = prof.surface_z(p.x(), p.y()) + bend(p.x(), p.y(), blade.length) + normal(noise_rng, sensor_sigma);
        out.emplace_back(p.x(), p.y(), z);
    }
    return out;
}

struct LeafState {
    int id = 0;
    Archetype archetype = Archetype::Entire;
    BladeShape blade;
    double attach_height = 0.0;
    double azimuth = 0.0;    // rad
    double elevation = 0.0;  // rad
    double roll = 0.0;       // rad
    double petiole = 0.0;    // mm
    std::uint64_t sample_seed = 0;
};

struct Placement {
    Vec3 base;
    Vec3 du, dv, n;
};

Placement place(const LeafState& leaf, double elevation, double attach_height)
{
    const Vec3 radial(std::cos(leaf.azimuth), std::sin(leaf.azimuth), 0.0);
    Placement p;
    p.base = leaf.petiole * radial + Vec3(0.0, 0.0, attach_height);
    p.du = std::cos(elevation) * radial + std::sin(elevation) * Vec3::UnitZ();
    Vec3 dv(-std::sin(leaf.azimuth), std::cos(leaf.azimuth), 0.0);
    Vec3 n = p.du.cross(dv);
    const Eigen::AngleAxisd roll(leaf.roll, p.du);
    p.dv = roll * dv;
    p.n = roll * n;
    return p;
}

void add_stem_and_ground(LabeledScan& scan, double stem_height, double density, std::mt19937_64& rng)
{
    constexpr double radius = 2.5;
    const auto stem_points = static_cast<int>(0.3 * density * 2.0 * kPi * radius * stem_height);
    for (int k = 0; k < stem_points; ++k) {
        const double a = uniform(rng, 0.0, 2.0 * kPi);
        const double z = uniform(rng, 0.0, stem_height);
        scan.points.emplace_back(radius * std::cos(a), radius * std::sin(a), z);
        scan.labels.push_back(1);
    }
    // Flared collar where the stem meets the soil.
    const auto collar_points = static_cast<int>(0.3 * density * kPi * 25.0);
    for (int k = 0; k < collar_points; ++k) {
        const double a = uniform(rng, 0.0, 2.0 * kPi);
        const double r = 5.0 * std::sqrt(uniform(rng, 0.0, 1.0));
        scan.points.emplace_back(r * std::cos(a), r * std::sin(a), uniform(rng, 0.0, 0.5));
        scan.labels.push_back(1);
    }
    const auto ground_points = static_cast<int>(0.05 * density * kPi * 50.0 * 50.0);
    for (int k = 0; k < ground_points; ++k) {
        const double a = uniform(rng, 0.0, 2.0 * kPi);
        const double r = 50.0 * std::sqrt(uniform(rng, 0.0, 1.0));
        if (r < 5.0) {
            continue;
        }
        scan.points.emplace_back(r * std::cos(a), r * std::sin(a), uniform(rng, -1.5, -0.5));
        scan.labels.push_back(0);
    }
}

}  // namespace

const char* archetype_name(Archetype a)
{
    return a == Archetype::Lobed ? "lobed" : "entire";
}

void SynthConfig::validate() const
{
    auto prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw DataError(std::string(name) + " must lie in [0, 1]");
        }
    };
    prob(birth_prob, "birth_prob");
    prob(death_prob, "death_prob");
    prob(figure_eight_rate, "figure_eight_rate");
    prob(undersized_rate, "undersized_rate");
    prob(inverted_axis_rate, "inverted_axis_rate");
    if (figure_eight_rate + undersized_rate + inverted_axis_rate > 1.0) {
        throw DataError("defect rates sum to more than 1");
    }
    if (!(density > 0.0)) {
        throw DataError("density must be positive");
    }
    if (!(growth > 0.0) || growth_jitter < 0.0) {
        throw DataError("growth must be positive and its jitter non-negative");
    }
    if (plants < 1 || steps < 1 || leaves_per_plant < 0) {
        throw DataError("plants and steps must be at least 1");
    }
    if (noise_mm < 0.0 || rigid_deg < 0.0 || plant_yaw_deg < 0.0) {
        throw DataError("noise amplitudes must be non-negative");
    }
}

BladeShape random_blade(std::uint64_t seed, Archetype archetype)
{
    std::mt19937_64 rng(seed);
    BladeShape b;
    b.length = uniform(rng, 30.0, 55.0);
    b.half_width = b.length * uniform(rng, 0.17, 0.28);
    b.right_scale = uniform(rng, 0.85, 1.15);
    b.profile_power = uniform(rng, 1.6, 3.0);
    b.widest_at = uniform(rng, 0.33, 0.55);
    b.cupping = uniform(rng, 0.3, 1.5);
    b.curl = uniform(rng, -0.3, 0.3);
    if (archetype == Archetype::Lobed) {
        b.lobes = 3 + static_cast<int>(uniform(rng, 0.0, 3.0));
        b.lobe_depth = uniform(rng, 0.15, 0.3);
    }
    b.tip_taper = uniform(rng, 1.0, 1.4);
    return b;
}

PointList sample_blade(const BladeShape& blade, double density, std::uint64_t seed)
{
    std::mt19937_64 noise(seed ^ 0x5bd1e995u);
    return blade_points(blade, density, seed, Bending{}, FigureEight{}, 0.0, noise);
}

SynthSequence generate_sequence(const SynthConfig& config)
{
    config.validate();
    SynthSequence seq;
    for (int pi = 0; pi < config.plants; ++pi) {
        const int plant_number = config.first_plant_index + pi;
        std::string plant_id = config.plant_prefix;
        plant_id += (plant_number < 10 ? "0" : "") + std::to_string(plant_number);
        std::mt19937_64 rng(mix_seed(config.seed, static_cast<std::uint64_t>(plant_number)));
        seq.plants.push_back({plant_id, Vec3::Zero()});

        std::vector<LeafState> leaves;
        int next_id = 2;
        auto new_leaf = [&](double height, int order, bool young) {
            LeafState leaf;
            leaf.id = next_id++;
            leaf.archetype = uniform(rng, 0.0, 1.0) < 0.5 ? Archetype::Lobed : Archetype::Entire;
            leaf.blade = random_blade(mix_seed(rng(), 17), leaf.archetype);
            if (young) {
                const double s = uniform(rng, 22.0, 32.0) / leaf.blade.length;
                leaf.blade.length *= s;
                leaf.blade.half_width *= s;
            }
            leaf.attach_height = height;
            leaf.azimuth = order * 137.5 * kDeg + uniform(rng, -10.0, 10.0) * kDeg;
            leaf.elevation = uniform(rng, 5.0, 30.0) * kDeg;
            leaf.roll = uniform(rng, -10.0, 10.0) * kDeg;
            leaf.petiole = uniform(rng, 8.0, 18.0);
            leaf.sample_seed = rng();
            return leaf;
        };
        int order = 0;
        for (int k = 0; k < config.leaves_per_plant; ++k, ++order) {
            leaves.push_back(new_leaf(20.0 + 14.0 * k + uniform(rng, -3.0, 3.0), order, false));
        }

        for (int t = 0; t < config.steps; ++t) {
            LabeledScan scan;
            scan.plant_id = plant_id;
            scan.time_index = t;
            std::mt19937_64 scan_rng(mix_seed(rng(), static_cast<std::uint64_t>(t)));
            double top = 30.0;
            for (const auto& leaf : leaves) {
                top = std::max(top, leaf.attach_height + 10.0);
            }
            add_stem_and_ground(scan, top, config.density, scan_rng);
            const Mat3 yaw = Eigen::AngleAxisd(normal(scan_rng, config.plant_yaw_deg * kDeg), Vec3::UnitZ()).toRotationMatrix();
            for (auto& p : scan.points) {
                p = yaw * p;
            }

            for (const auto& leaf : leaves) {
                LeafRecord rec;
                rec.plant_id = plant_id;
                rec.time_index = t;
                rec.leaf_id = leaf.id;
                rec.archetype = leaf.archetype;
                const double draw = uniform(scan_rng, 0.0, 1.0);
                rec.figure_eight = draw < config.figure_eight_rate;
                rec.undersized = !rec.figure_eight && draw < config.figure_eight_rate + config.undersized_rate;
                rec.inverted_axis = !rec.figure_eight && !rec.undersized
                    && draw < config.figure_eight_rate + config.undersized_rate + config.inverted_axis_rate;

                Bending bend;
                bend.amplitude = config.noise_mm;
                bend.c1 = normal(scan_rng, 1.0);
                bend.c2 = normal(scan_rng, 1.0);
                bend.c3 = normal(scan_rng, 1.0);
                bend.phase = uniform(scan_rng, 0.0, 2.0 * kPi);
                FigureEight cut;
                cut.enabled = rec.figure_eight;
                cut.u0 = leaf.blade.length * uniform(scan_rng, 0.4, 0.6);

                PointList local = blade_points(leaf.blade, config.density, leaf.sample_seed, bend, cut,
                                               0.05 * config.noise_mm, scan_rng);
                if (rec.undersized) {
                    std::shuffle(local.begin(), local.end(), scan_rng);
                    local.resize(std::min<std::size_t>(local.size(), 20 + scan_rng() % 21));
                }
                const double elevation = rec.inverted_axis ? -65.0 * kDeg : leaf.elevation;
                const double height = rec.inverted_axis ? std::max(leaf.attach_height, 70.0) : leaf.attach_height;
                const Placement pl = place(leaf, elevation, height);
                for (const auto& p : local) {
                    scan.points.push_back(yaw * (pl.base + p.x() * pl.du + p.y() * pl.dv + p.z() * pl.n));
                    scan.labels.push_back(leaf.id);
                }
                rec.point_count = local.size();
                rec.petiole_direction = yaw * pl.du;
                rec.blade_base = yaw * pl.base;
                seq.leaves.push_back(rec);
            }
            seq.scans.push_back(std::move(scan));

            if (t + 1 == config.steps) {
                break;
            }
            // Dynamics to the next step.
            std::vector<LeafState> survivors;
            for (auto leaf : leaves) {
                if (config.death_prob > 0.0 && uniform(rng, 0.0, 1.0) < config.death_prob) {
                    continue;
                }
                const double g = config.growth * std::exp(normal(rng, config.growth_jitter));
                leaf.blade.length *= g;
                leaf.blade.half_width *= g;
                leaf.blade.cupping *= 1.0 + config.curvature_growth;
                leaf.blade.curl *= 1.0 + config.curvature_growth;
                leaf.attach_height *= 1.0 + 0.5 * (config.growth - 1.0);
                leaf.petiole *= config.growth;
                leaf.azimuth += normal(rng, config.rigid_deg * kDeg);
                leaf.elevation = std::clamp(leaf.elevation + normal(rng, config.rigid_deg * kDeg), 0.0, 40.0 * kDeg);
                leaf.roll += normal(rng, config.rigid_deg * kDeg);
                survivors.push_back(leaf);
            }
            leaves = std::move(survivors);
            if (config.birth_prob > 0.0 && uniform(rng, 0.0, 1.0) < config.birth_prob) {
                double top_leaf = 10.0;
                for (const auto& leaf : leaves) {
                    top_leaf = std::max(top_leaf, leaf.attach_height);
                }
                leaves.push_back(new_leaf(top_leaf + 12.0, order++, true));
            }
        }
    }

    // Correspondences from the labels actually present in consecutive scans.
    for (std::size_t k = 0; k + 1 < seq.scans.size(); ++k) {
        const auto& a = seq.scans[k];
        const auto& b = seq.scans[k + 1];
        if (a.plant_id != b.plant_id) {
            continue;
        }
        std::set<int> ia, ib;
        for (int l : a.labels) {
            if (l >= 2) {
                ia.insert(l);
            }
        }
        for (int l : b.labels) {
            if (l >= 2) {
                ib.insert(l);
            }
        }
        Correspondence c{a.plant_id, a.time_index, b.time_index, {}};
        std::set_intersection(ia.begin(), ia.end(), ib.begin(), ib.end(), std::back_inserter(c.shared_leaf_ids));
        seq.correspondences.push_back(std::move(c));
    }
    return seq;
}

}  // namespace leafmatch::synth
