#include "leafmatch/scan_io.hpp"
#include "leafmatch/synth_leaf.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace leafmatch;
namespace fs = std::filesystem;

namespace {

LabeledScan parse_text(const std::string& text, const LabelConfig& labels = {})
{
    std::istringstream in(text);
    return parse_scan(in, labels);
}

int parse_error_line(const std::string& text)
{
    try {
        parse_text(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return -1;
}

}  // namespace

TEST(ParseScan, TwoPointsKeepOrder)
{
    const auto scan = parse_text("0 0 0 0\n1 2 3 2");
    ASSERT_EQ(scan.points.size(), 2u);
    EXPECT_EQ(scan.labels, (std::vector<int>{0, 2}));
    EXPECT_EQ(scan.points[1], Vec3(1, 2, 3));
}

TEST(ParseScan, MalformedCoordinateNamesLine)
{
    EXPECT_EQ(parse_error_line("1 2 x 3"), 1);
    EXPECT_EQ(parse_error_line("0 0 0 0\n\n1 2 3\n"), 3);
    try {
        parse_text("1 2 x 3");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
    }
}

TEST(ParseScan, NonFiniteAndEmptyRejected)
{
    EXPECT_EQ(parse_error_line("0 0 0 0\nnan 0 0 2\n"), 2);
    EXPECT_EQ(parse_error_line("inf 0 0 2\n"), 1);
    EXPECT_THROW(parse_text(""), ParseError);
    EXPECT_THROW(parse_text("\n  \n"), ParseError);
    EXPECT_EQ(parse_error_line("0 0 0 1.5\n"), 1);
}

TEST(ParseScan, AcceptsIntegralFloatLabelsAndRemap)
{
    LabelConfig labels;
    labels.remap = {{7, 2}};
    const auto scan = parse_text("0 0 0 7.0\n1 1 1 1\n", labels);
    EXPECT_EQ(scan.labels, (std::vector<int>{2, 1}));
}

TEST(ParseScan, FileNameGivesIdentity)
{
    const auto dir = fs::temp_directory_path() / "leafmatch_scan_io";
    fs::create_directories(dir);
    const auto path = dir / "T03_0307_a.txt";
    {
        std::ofstream out(path);
        out << "0 0 0 0\n1 2 3 2\n";
    }
    const auto scan = parse_scan(path);
    EXPECT_EQ(scan.plant_id, "T03");
    EXPECT_EQ(scan.time_index, 307);
    EXPECT_EQ(parse_scan_name("weird.txt").plant_id, "weird");
    EXPECT_EQ(parse_scan_name("weird.txt").time_index, 0);
    EXPECT_THROW(parse_scan(dir / "missing.txt"), ParseError);
}

TEST(WriteScan, RoundTrip)
{
    LabeledScan scan;
    scan.plant_id = "P01";
    scan.time_index = 4;
    scan.points = {Vec3(0.123456789, -1.5, 2e3), Vec3(1, 2, 3)};
    scan.labels = {0, 5};
    const auto path = fs::temp_directory_path() / "leafmatch_scan_io" / scan_file_name("P01", 4);
    fs::create_directories(path.parent_path());
    write_scan(path, scan);
    const auto back = parse_scan(path);
    EXPECT_EQ(back.plant_id, "P01");
    EXPECT_EQ(back.time_index, 4);
    EXPECT_EQ(back.labels, scan.labels);
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
        EXPECT_LT((back.points[i] - scan.points[i]).norm(), 1e-6);
    }
}

TEST(Validate, RejectsInconsistentScan)
{
    LabeledScan scan;
    EXPECT_THROW(validate(scan), DataError);
    scan.points = {Vec3::Zero()};
    scan.labels = {0, 1};
    EXPECT_THROW(validate(scan), DataError);
}

TEST(SplitLeaves, FiltersByMinimumSize)
{
    const auto scan = parse_text("0 0 0 0\n0 0 1 1\n1 0 0 2\n2 0 0 2\n3 0 0 3\n");
    const auto all = split_leaves(scan, {}, 1);
    ASSERT_EQ(all.leaves.size(), 2u);
    EXPECT_EQ(all.leaves[0].leaf_id, 2);
    EXPECT_EQ(all.leaves[0].points.size(), 2u);
    EXPECT_EQ(all.leaves[1].leaf_id, 3);
    EXPECT_EQ(all.leaves[1].points.size(), 1u);

    const auto two = split_leaves(scan, {}, 2);
    ASSERT_EQ(two.leaves.size(), 1u);
    EXPECT_EQ(two.undersized_ids, std::vector<int>{3});
    EXPECT_EQ(two.dropped_points, 3u);

    const auto none = split_leaves(scan);
    EXPECT_TRUE(none.leaves.empty());
    EXPECT_EQ(none.undersized_ids, (std::vector<int>{2, 3}));
}

TEST(SplitLeaves, NoLeafLabels)
{
    const auto scan = parse_text("0 0 0 0\n0 0 1 1\n");
    EXPECT_TRUE(split_leaves(scan, {}, 1).leaves.empty());
}

TEST(SplitLeaves, PartitionProperty)
{
    synth::SynthConfig c;
    c.plants = 1;
    c.steps = 1;
    c.leaves_per_plant = 3;
    c.undersized_rate = 0.0;
    const auto seq = synth::generate_sequence(c);
    const auto& scan = seq.scans.front();
    const auto split = split_leaves(scan);
    std::size_t in_clusters = 0;
    std::set<std::tuple<double, double, double>> seen;
    for (const auto& leaf : split.leaves) {
        in_clusters += leaf.points.size();
        for (const auto& p : leaf.points) {
            EXPECT_TRUE(seen.emplace(p.x(), p.y(), p.z()).second);
        }
    }
    EXPECT_EQ(in_clusters + split.dropped_points, scan.points.size());
}

TEST(SplitLeaves, SyntheticClusterSizesMatchGenerator)
{
    synth::SynthConfig c;
    c.plants = 1;
    c.steps = 1;
    c.leaves_per_plant = 3;
    const auto seq = synth::generate_sequence(c);
    const auto split = split_leaves(seq.scans.front());
    ASSERT_EQ(split.leaves.size(), 3u);
    ASSERT_EQ(seq.leaves.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(split.leaves[i].leaf_id, seq.leaves[i].leaf_id);
        EXPECT_EQ(split.leaves[i].points.size(), seq.leaves[i].point_count);
    }
}

// Requires the external dataset; LEAFMATCH_PHENO4D points at its root directory.
TEST(Pheno4D, LeafLabelCountMatchesLineScan)
{
    const char* root = std::getenv("LEAFMATCH_PHENO4D");
    if (root == nullptr) {
        GTEST_SKIP() << "LEAFMATCH_PHENO4D not set";
    }
    int checked = 0;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.path().extension() != ".txt" || checked >= 5) {
            continue;
        }
        std::ifstream in(entry.path());
        std::set<int> ids;
        double x, y, z, label;
        while (in >> x >> y >> z >> label) {
            if (label >= 2) {
                ids.insert(static_cast<int>(label));
            }
        }
        std::set<int> parsed;
        for (int l : parse_scan(entry.path()).labels) {
            if (l >= 2) {
                parsed.insert(l);
            }
        }
        EXPECT_EQ(parsed, ids) << entry.path();
        ++checked;
    }
}
