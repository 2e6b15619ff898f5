#include "leafmatch/persistence.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace leafmatch {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v)
{
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json vec3(const Vec3& v)
{
    return json::array({v.x(), v.y(), v.z()});
}

json matrix(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        rows.push_back(vec(m.row(i).transpose()));
    }
    return rows;
}

json points(const PointList& pts)
{
    json out = json::array();
    for (const auto& p : pts) {
        out.push_back(vec3(p));
    }
    return out;
}

const json& field(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) {
        throw SchemaError(std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

template <typename T>
T get(const json& j, const char* key)
{
    try {
        return field(j, key).get<T>();
    } catch (const json::exception&) {
        throw SchemaError(std::string("field '") + key + "' has the wrong type");
    }
}

Eigen::VectorXd read_vec(const json& j, const char* key)
{
    const auto v = get<std::vector<double>>(j, key);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Vec3 read_vec3(const json& j, const char* key)
{
    const auto v = get<std::vector<double>>(j, key);
    if (v.size() != 3) {
        throw SchemaError(std::string("field '") + key + "' must have 3 entries");
    }
    return {v[0], v[1], v[2]};
}

Eigen::MatrixXd read_matrix(const json& j, const char* key, Eigen::Index cols_if_empty = 0)
{
    const auto rows = get<std::vector<std::vector<double>>>(j, key);
    const Eigen::Index cols = rows.empty() ? cols_if_empty : static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != cols) {
            throw SchemaError(std::string("field '") + key + "' is ragged");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
        }
    }
    return m;
}

PointList read_points(const json& j, const char* key)
{
    const auto rows = get<std::vector<std::vector<double>>>(j, key);
    PointList out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        if (r.size() != 3) {
            throw SchemaError(std::string("field '") + key + "' must hold 3-vectors");
        }
        out.emplace_back(r[0], r[1], r[2]);
    }
    return out;
}

json header(const char* schema)
{
    return json{{"schema", schema}, {"version", kFormatVersion}};
}

json parse_document(const std::string& text, const char* schema)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("not a JSON document: ") + e.what());
    }
    const auto found = get<std::string>(j, "schema");
    if (found != schema) {
        throw SchemaError("expected schema '" + std::string(schema) + "', found '" + found + "'");
    }
    const int version = get<int>(j, "version");
    if (version != kFormatVersion) {
        throw SchemaError("unsupported " + found + " version " + std::to_string(version));
    }
    return j;
}

json frame_json(const LeafFrame& f)
{
    return json{{"origin", vec3(f.origin)},
                {"x_axis", vec3(f.x_axis)},
                {"y_axis", vec3(f.y_axis)},
                {"z_axis", vec3(f.z_axis)},
                {"near_degenerate", f.near_degenerate}};
}

LeafFrame read_frame(const json& j)
{
    LeafFrame f;
    f.origin = read_vec3(j, "origin");
    f.x_axis = read_vec3(j, "x_axis");
    f.y_axis = read_vec3(j, "y_axis");
    f.z_axis = read_vec3(j, "z_axis");
    f.near_degenerate = get<bool>(j, "near_degenerate");
    return f;
}

json config_json(const FeatureConfig& c)
{
    return json{{"shape", c.shape}, {"location", c.location}, {"rotation", c.rotation}, {"scale", c.scale}};
}

FeatureConfig read_config(const json& j)
{
    return {get<bool>(j, "shape"), get<bool>(j, "location"), get<bool>(j, "rotation"), get<bool>(j, "scale")};
}

json transform_json(const TransformFeatures& t)
{
    return json{{"location", vec3(t.location)},
                {"x_axis", vec3(t.x_axis)},
                {"y_axis", vec3(t.y_axis)},
                {"z_axis", vec3(t.z_axis)},
                {"scale", t.scale}};
}

TransformFeatures read_transform(const json& j)
{
    TransformFeatures t;
    t.location = read_vec3(j, "location");
    t.x_axis = read_vec3(j, "x_axis");
    t.y_axis = read_vec3(j, "y_axis");
    t.z_axis = read_vec3(j, "z_axis");
    t.scale = get<double>(j, "scale");
    return t;
}

json optional_number(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string outlines_to_json(const ScanExtraction& extraction)
{
    const OutlineSet& set = extraction.set;
    json j = header("leafmatch.outlines");
    j["plant_id"] = set.plant_id;
    j["time_index"] = set.time_index;
    j["emergence"] = vec3(set.emergence);
    j["emergence_fallback"] = set.emergence_fallback;
    json outlines = json::array();
    for (const auto& o : set.outlines) {
        outlines.push_back(json{{"leaf_id", o.leaf_id},
                                {"scale", o.scale},
                                {"centroid", vec3(o.centroid)},
                                {"frame", frame_json(o.frame)},
                                {"points", points(o.points)}});
    }
    j["outlines"] = std::move(outlines);
    json excluded = json::array();
    for (const auto& e : extraction.excluded) {
        excluded.push_back(json{{"leaf_id", e.leaf_id}, {"reason", exclusion_name(e.reason)}, {"detail", e.detail}});
    }
    j["excluded"] = std::move(excluded);
    j["misaligned_leaf_ids"] = extraction.misaligned_ids;
    return j.dump(1) + "\n";
}

ScanExtraction outlines_from_json(const std::string& text)
{
    const json j = parse_document(text, "leafmatch.outlines");
    ScanExtraction x;
    OutlineSet& set = x.set;
    set.plant_id = get<std::string>(j, "plant_id");
    set.time_index = get<int>(j, "time_index");
    set.emergence = read_vec3(j, "emergence");
    set.emergence_fallback = get<bool>(j, "emergence_fallback");
    for (const auto& o : field(j, "outlines")) {
        LeafOutline outline;
        outline.plant_id = set.plant_id;
        outline.time_index = set.time_index;
        outline.leaf_id = get<int>(o, "leaf_id");
        outline.scale = get<double>(o, "scale");
        outline.centroid = read_vec3(o, "centroid");
        outline.frame = read_frame(field(o, "frame"));
        outline.points = read_points(o, "points");
        set.outlines.push_back(std::move(outline));
    }
    for (const auto& e : field(j, "excluded")) {
        x.excluded.push_back({get<int>(e, "leaf_id"), parse_exclusion(get<std::string>(e, "reason")),
                              get<std::string>(e, "detail")});
    }
    x.misaligned_ids = get<std::vector<int>>(j, "misaligned_leaf_ids");
    return x;
}

std::string model_to_json(const ShapeModel& model)
{
    json j = header("leafmatch.shape_model");
    j["n_points"] = model.n_points;
    j["dims"] = model.dims();
    j["scaler_mean"] = vec(model.scaler_mean);
    j["scaler_std"] = vec(model.scaler_std);
    j["pca_mean"] = vec(model.pca_mean);
    j["basis"] = matrix(model.basis);
    j["explained_variances"] = vec(model.explained_variances);
    j["feature_covariance"] = matrix(model.feature_covariance);
    j["manifest"] = json{{"plant_ids", model.plant_ids}, {"outline_count", model.outline_count}};
    j["training_encodings"] = matrix(model.training_encodings);
    json transforms = json::array();
    for (const auto& t : model.training_transforms) {
        transforms.push_back(transform_json(t));
    }
    j["training_transforms"] = std::move(transforms);
    return j.dump(1) + "\n";
}

ShapeModel model_from_json(const std::string& text)
{
    const json j = parse_document(text, "leafmatch.shape_model");
    ShapeModel m;
    m.n_points = get<int>(j, "n_points");
    const int d = get<int>(j, "dims");
    m.scaler_mean = read_vec(j, "scaler_mean");
    m.scaler_std = read_vec(j, "scaler_std");
    m.pca_mean = read_vec(j, "pca_mean");
    m.basis = read_matrix(j, "basis", m.input_dims());
    m.explained_variances = read_vec(j, "explained_variances");
    m.feature_covariance = read_matrix(j, "feature_covariance", d);
    const json& manifest = field(j, "manifest");
    m.plant_ids = get<std::vector<std::string>>(manifest, "plant_ids");
    m.outline_count = get<std::size_t>(manifest, "outline_count");
    m.training_encodings = read_matrix(j, "training_encodings", d);
    for (const auto& t : field(j, "training_transforms")) {
        m.training_transforms.push_back(read_transform(t));
    }
    const auto n3 = static_cast<Eigen::Index>(m.input_dims());
    if (m.dims() != d || m.basis.cols() != n3 || m.scaler_mean.size() != n3 || m.scaler_std.size() != n3
        || m.pca_mean.size() != n3 || m.explained_variances.size() != d || m.feature_covariance.rows() != d
        || m.feature_covariance.cols() != d || m.training_encodings.cols() != d) {
        throw SchemaError("shape model fields have inconsistent sizes");
    }
    return m;
}

std::string match_to_json(const MatchResult& match)
{
    json j = header("leafmatch.match");
    j["plant_id"] = match.plant_id;
    j["before_time"] = match.before_time;
    j["after_time"] = match.after_time;
    j["features"] = config_json(match.config);
    j["shape_dims"] = match.shape_dims;
    j["costs"] = json{{"row_ids", match.costs.row_ids},
                      {"col_ids", match.costs.col_ids},
                      {"values", matrix(match.costs.values)}};
    json pairs = json::array();
    for (const auto& p : match.pairs) {
        pairs.push_back(json{{"row", p.row},
                             {"col", p.col},
                             {"before_leaf", p.before_leaf},
                             {"after_leaf", p.after_leaf},
                             {"cost", p.cost}});
    }
    j["pairs"] = std::move(pairs);
    j["total_cost"] = match.total_cost;
    return j.dump(1) + "\n";
}

MatchResult match_from_json(const std::string& text)
{
    const json j = parse_document(text, "leafmatch.match");
    MatchResult m;
    m.plant_id = get<std::string>(j, "plant_id");
    m.before_time = get<int>(j, "before_time");
    m.after_time = get<int>(j, "after_time");
    m.config = read_config(field(j, "features"));
    m.shape_dims = get<int>(j, "shape_dims");
    const json& costs = field(j, "costs");
    m.costs.row_ids = get<std::vector<int>>(costs, "row_ids");
    m.costs.col_ids = get<std::vector<int>>(costs, "col_ids");
    m.costs.values = read_matrix(costs, "values", static_cast<Eigen::Index>(m.costs.col_ids.size()));
    if (m.costs.values.rows() != static_cast<Eigen::Index>(m.costs.row_ids.size())
        || m.costs.values.cols() != static_cast<Eigen::Index>(m.costs.col_ids.size())) {
        throw SchemaError("cost matrix does not match its id lists");
    }
    for (const auto& p : field(j, "pairs")) {
        m.pairs.push_back({get<int>(p, "row"), get<int>(p, "col"), get<int>(p, "before_leaf"),
                           get<int>(p, "after_leaf"), get<double>(p, "cost")});
    }
    m.total_cost = get<double>(j, "total_cost");
    return m;
}

std::string correspondences_to_json(const std::vector<synth::Correspondence>& table)
{
    json j = header("leafmatch.correspondences");
    json rows = json::array();
    for (const auto& c : table) {
        rows.push_back(json{{"plant_id", c.plant_id},
                            {"before_time", c.before_time},
                            {"after_time", c.after_time},
                            {"shared_leaf_ids", c.shared_leaf_ids}});
    }
    j["pairs"] = std::move(rows);
    return j.dump(1) + "\n";
}

std::vector<synth::Correspondence> correspondences_from_json(const std::string& text)
{
    const json j = parse_document(text, "leafmatch.correspondences");
    std::vector<synth::Correspondence> out;
    for (const auto& c : field(j, "pairs")) {
        out.push_back({get<std::string>(c, "plant_id"), get<int>(c, "before_time"), get<int>(c, "after_time"),
                       get<std::vector<int>>(c, "shared_leaf_ids")});
    }
    return out;
}

std::string report_to_json(const TableReport& report)
{
    json j = header("leafmatch.report");
    j["bins"] = report.bins;
    j["shape_dims"] = report.shape_dims;
    j["plants"] = report.plants;
    json rows = json::array();
    for (const auto& row : report.rows) {
        json r{{"features", config_json(row.config)},
               {"name", row.config.name()},
               {"sensitivity", optional_number(row.sensitivity)},
               {"eta", optional_number(row.eta)},
               {"tp", row.counts.tp},
               {"fn", row.counts.fn},
               {"fp", row.counts.fp},
               {"true_edges", row.true_edges},
               {"false_edges", row.false_edges}};
        if (row.t_test) {
            r["t_test"] = json{{"t", row.t_test->t}, {"p", row.t_test->p}, {"dof", row.t_test->dof}};
        } else {
            r["t_test"] = nullptr;
        }
        json pairs = json::array();
        for (const auto& p : row.pairs) {
            json matched = json::array();
            for (const auto& m : p.match.pairs) {
                matched.push_back(json::array({m.before_leaf, m.after_leaf, m.cost}));
            }
            pairs.push_back(json{{"plant_id", p.plant_id},
                                 {"before_time", p.before_time},
                                 {"after_time", p.after_time},
                                 {"sensitivity", optional_number(p.sensitivity)},
                                 {"tp", p.counts.tp},
                                 {"fn", p.counts.fn},
                                 {"fp", p.counts.fp},
                                 {"matched", std::move(matched)}});
        }
        r["pairs"] = std::move(pairs);
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j.dump(1) + "\n";
}

std::string summary_to_json(const ExtractionSummary& summary)
{
    json j = header("leafmatch.extraction_log");
    j["scans"] = summary.scans;
    j["attempted"] = summary.attempted;
    j["extracted"] = summary.extracted;
    j["yield"] = summary.yield();
    json counts = json::object();
    for (Exclusion e : all_exclusions()) {
        const auto it = summary.excluded.find(e);
        counts[exclusion_name(e)] = it == summary.excluded.end() ? 0 : it->second;
    }
    j["excluded"] = std::move(counts);
    j["flagged"] = json{{"axis_misaligned", summary.misaligned}};
    return j.dump(1) + "\n";
}

std::string cost_matrix_csv(const CostMatrix& costs)
{
    std::ostringstream out;
    out << std::setprecision(17) << "before\\after";
    for (int id : costs.col_ids) {
        out << ',' << id;
    }
    out << '\n';
    for (Eigen::Index i = 0; i < costs.values.rows(); ++i) {
        out << costs.row_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index c = 0; c < costs.values.cols(); ++c) {
            out << ',' << costs.values(i, c);
        }
        out << '\n';
    }
    return out.str();
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw Error("write failed for " + path.string());
    }
}

}  // namespace leafmatch

namespace leafmatch {

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where)
{
    if (!j.is_object()) {
        throw SchemaError(std::string(where) + " must be a JSON object");
    }
    for (const auto& item : j.items()) {
        if (std::find_if(known.begin(), known.end(), [&](const char* k) { return item.key() == k; }) == known.end()) {
            throw SchemaError("unknown key '" + item.key() + "' in " + where);
        }
    }
}

template <typename T>
void maybe(const json& j, const char* key, T& dst)
{
    if (j.contains(key)) {
        dst = get<T>(j, key);
    }
}

json parse_plain(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("not a JSON document: ") + e.what());
    }
}

}  // namespace

std::string synth_truth_to_json(const synth::SynthSequence& sequence)
{
    json j = header("leafmatch.synth_truth");
    json plants = json::array();
    for (const auto& p : sequence.plants) {
        plants.push_back(json{{"plant_id", p.plant_id}, {"emergence", vec3(p.emergence)}});
    }
    j["plants"] = std::move(plants);
    json leaves = json::array();
    for (const auto& l : sequence.leaves) {
        leaves.push_back(json{{"plant_id", l.plant_id},
                              {"time_index", l.time_index},
                              {"leaf_id", l.leaf_id},
                              {"archetype", synth::archetype_name(l.archetype)},
                              {"figure_eight", l.figure_eight},
                              {"undersized", l.undersized},
                              {"inverted_axis", l.inverted_axis},
                              {"point_count", l.point_count},
                              {"petiole_direction", vec3(l.petiole_direction)},
                              {"blade_base", vec3(l.blade_base)}});
    }
    j["leaves"] = std::move(leaves);
    return j.dump(1) + "\n";
}

PipelineConfig pipeline_config_from_json(const std::string& text, const PipelineConfig& base)
{
    const json j = parse_plain(text);
    reject_unknown(j,
                   {"l_max", "presmooth", "postsmooth", "max_hole_edges", "n", "d", "bins", "min_cluster", "labels",
                    "emergence", "threads"},
                   "pipeline config");
    PipelineConfig c = base;
    maybe(j, "l_max", c.l_max);
    if (j.contains("presmooth")) {
        const json& p = j.at("presmooth");
        reject_unknown(p, {"radius", "factor", "iterations"}, "presmooth");
        maybe(p, "radius", c.presmooth.radius);
        maybe(p, "factor", c.presmooth.factor);
        maybe(p, "iterations", c.presmooth.iterations);
    }
    if (j.contains("postsmooth")) {
        const json& p = j.at("postsmooth");
        reject_unknown(p, {"factor", "iterations"}, "postsmooth");
        maybe(p, "factor", c.postsmooth.factor);
        maybe(p, "iterations", c.postsmooth.iterations);
    }
    maybe(j, "max_hole_edges", c.max_hole_edges);
    maybe(j, "n", c.n_points);
    maybe(j, "d", c.dims);
    maybe(j, "bins", c.bins);
    maybe(j, "min_cluster", c.min_cluster);
    maybe(j, "threads", c.threads);
    if (j.contains("labels")) {
        const json& l = j.at("labels");
        reject_unknown(l, {"ground", "stem", "first_leaf", "remap"}, "labels");
        maybe(l, "ground", c.labels.ground_labels);
        maybe(l, "stem", c.labels.stem_labels);
        maybe(l, "first_leaf", c.labels.first_leaf_label);
        if (l.contains("remap")) {
            c.labels.remap.clear();
            for (const auto& [from, to] : get<std::map<std::string, int>>(l, "remap")) {
                try {
                    c.labels.remap[std::stoi(from)] = to;
                } catch (const std::exception&) {
                    throw SchemaError("label remap key '" + from + "' is not an integer");
                }
            }
        }
    }
    if (j.contains("emergence")) {
        if (j.at("emergence").is_null()) {
            c.emergence.reset();
        } else {
            c.emergence = read_vec3(j, "emergence");
        }
    }
    c.validate();
    return c;
}

std::string pipeline_config_to_json(const PipelineConfig& c)
{
    json remap = json::object();
    for (const auto& [from, to] : c.labels.remap) {
        remap[std::to_string(from)] = to;
    }
    json j{{"l_max", c.l_max},
           {"presmooth",
            {{"radius", c.presmooth.radius}, {"factor", c.presmooth.factor}, {"iterations", c.presmooth.iterations}}},
           {"postsmooth", {{"factor", c.postsmooth.factor}, {"iterations", c.postsmooth.iterations}}},
           {"max_hole_edges", c.max_hole_edges},
           {"n", c.n_points},
           {"d", c.dims},
           {"bins", c.bins},
           {"min_cluster", c.min_cluster},
           {"labels",
            {{"ground", c.labels.ground_labels},
             {"stem", c.labels.stem_labels},
             {"first_leaf", c.labels.first_leaf_label},
             {"remap", remap}}},
           {"emergence", c.emergence ? vec3(*c.emergence) : json(nullptr)},
           {"threads", c.threads}};
    return j.dump(1) + "\n";
}

synth::SynthConfig synth_config_from_json(const std::string& text, const synth::SynthConfig& base)
{
    const json j = parse_plain(text);
    reject_unknown(j,
                   {"seed", "plants", "steps", "leaves_per_plant", "growth", "growth_jitter", "curvature_growth", "noise_mm",
                    "rigid_deg", "plant_yaw_deg", "birth_prob", "death_prob", "density", "figure_eight_rate", "undersized_rate",
                    "inverted_axis_rate", "plant_prefix", "first_plant_index"},
                   "synth config");
    synth::SynthConfig c = base;
    maybe(j, "seed", c.seed);
    maybe(j, "plants", c.plants);
    maybe(j, "steps", c.steps);
    maybe(j, "leaves_per_plant", c.leaves_per_plant);
    maybe(j, "growth", c.growth);
    maybe(j, "curvature_growth", c.curvature_growth);
    maybe(j, "growth_jitter", c.growth_jitter);
    maybe(j, "noise_mm", c.noise_mm);
    maybe(j, "rigid_deg", c.rigid_deg);
    maybe(j, "plant_yaw_deg", c.plant_yaw_deg);
    maybe(j, "birth_prob", c.birth_prob);
    maybe(j, "death_prob", c.death_prob);
    maybe(j, "density", c.density);
    maybe(j, "figure_eight_rate", c.figure_eight_rate);
    maybe(j, "undersized_rate", c.undersized_rate);
    maybe(j, "inverted_axis_rate", c.inverted_axis_rate);
    maybe(j, "plant_prefix", c.plant_prefix);
    maybe(j, "first_plant_index", c.first_plant_index);
    c.validate();
    return c;
}

}  // namespace leafmatch
