#include <gtest/gtest.h>

#include <map>

#include "fgf/graphset.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fgf;

namespace {

const char* header = "id,system,subsystem,component,failure_mode,failure_reason,failure_effect,emergency_measure\n";

std::string record_row(const std::string& id, const std::string& system = "Sys A")
{
    return id + "," + system + ",Sub,Comp,Mode text,Reason text,Effect text,Measure text\n";
}

/// Tab-separated exemplar rows of the published coding table, keyed by id.
std::map<std::string, std::vector<std::string>> published_exemplars()
{
    std::map<std::string, std::vector<std::string>> out;
    std::istringstream in(text::read_file(support::source("paper.md").string()));
    for (std::string line; std::getline(in, line);) {
        if (line.size() > 9 && line[8] == '\t' && std::all_of(line.begin(), line.begin() + 8, ::isdigit)) {
            out[line.substr(0, 8)] = text::split(line, '\t');
        }
    }
    return out;
}

FusedFeatureMatrix features_for(std::span<const FailureRecord> recs, std::size_t d, Rng& rng)
{
    FusedFeatureMatrix f;
    for (const auto& r : recs) f.ids.push_back(r.key());
    f.rows = to_matrix(oracle::random_rows(rng, recs.size(), d));
    return f;
}

} // namespace

TEST(FailureId, CodecExamples)
{
    const auto a = parse_id("11010101");
    EXPECT_EQ(a, (FailureModeId{1, 1, 1, 1, 1}));
    EXPECT_EQ(a.label(), "11");
    const auto b = parse_id("21010601");
    EXPECT_EQ(b.category, 2);
    EXPECT_EQ(b.component, 6);
    EXPECT_EQ(category_name(b.category), "autonomous interaction");
    EXPECT_THROW(parse_id("1101010"), ParseError);
    EXPECT_THROW(parse_id("1101010x"), ParseError);
    EXPECT_THROW(parse_id("99999999"), ParseError);
}

TEST(FailureId, RoundTripsEveryDemoId)
{
    const auto res = ingest_records(support::source("data/demo/records.csv").string(), RecordFormat::csv);
    for (const auto& r : res.records) EXPECT_EQ(parse_id(r.key()), r.id);
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const FailureModeId id{static_cast<int>(1 + rng.index(3)), static_cast<int>(rng.index(10)), static_cast<int>(rng.index(100)),
                               static_cast<int>(rng.index(100)), static_cast<int>(rng.index(100))};
        EXPECT_EQ(parse_id(format_id(id)), id);
    }
}

TEST(FailureId, DemoExemplarsMatchPublishedRows)
{
    const auto published = published_exemplars();
    const auto res = ingest_records(support::source("data/demo/records.csv").string(), RecordFormat::csv);
    for (const std::string id : {"11010101", "21010601"}) {
        ASSERT_TRUE(published.count(id)) << id;
        const auto& row = published.at(id);
        ASSERT_EQ(row.size(), 8u);
        const auto it = std::find_if(res.records.begin(), res.records.end(), [&](const auto& r) { return r.key() == id; });
        ASSERT_NE(it, res.records.end());
        EXPECT_EQ(it->system, row[1]);
        EXPECT_EQ(it->subsystem, row[2]);
        EXPECT_EQ(it->component, row[3]);
        EXPECT_EQ(it->failure_mode, row[4]);
        EXPECT_EQ(it->failure_reason, row[5]);
        EXPECT_EQ(it->failure_effect, row[6]);
        EXPECT_EQ(it->emergency_measure, row[7]);
    }
}

TEST(Csv, Rfc4180)
{
    const auto rows = parse_csv("a,\"b,c\",\"say \"\"hi\"\"\"\r\n\"multi\nline\",,x\n");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"a", "b,c", "say \"hi\""}));
    EXPECT_EQ(rows[1], (std::vector<std::string>{"multi\nline", "", "x"}));
    EXPECT_EQ(csv_escape("plain"), "plain");
    EXPECT_EQ(csv_escape("a,\"b\""), "\"a,\"\"b\"\"\"");
    EXPECT_EQ(parse_csv(csv_escape("x\ny,\"z\"")).front().front(), "x\ny,\"z\"");
}

TEST(Records, StrictAndLenient)
{
    const std::string good = std::string(header) + record_row("11010101") + record_row("11010102") + record_row("12010101", "Sys B");
    EXPECT_EQ(parse_records(good, RecordFormat::csv).records.size(), 3u);

    const std::string bad = good + record_row("99999999") + "11020101,Sys A,Sub,Comp,,Reason,Effect,Measure\n";
    try {
        parse_records(bad, RecordFormat::csv);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("row 5"), std::string::npos) << e.what();
    }
    const auto lenient = parse_records(bad, RecordFormat::csv, false);
    EXPECT_EQ(lenient.records.size(), 3u);
    EXPECT_EQ(lenient.skipped(), 2u);
    EXPECT_NE(lenient.errors[1].find("failure_mode"), std::string::npos);

    EXPECT_THROW(parse_records("id,system\n11010101,x\n", RecordFormat::csv), ParseError);
    EXPECT_THROW(parse_records(std::string(header) + record_row("11010101") + record_row("11010101"), RecordFormat::csv), ValidationError);
    EXPECT_THROW(parse_records(std::string(header) + record_row("11010101") + record_row("11010102", "Other"), RecordFormat::csv),
                 ValidationError);
}

TEST(Records, JsonLinesMatchCsv)
{
    const auto csv = ingest_records(support::source("data/demo/records.csv").string(), RecordFormat::csv);
    std::string jl;
    for (const auto& r : csv.records) {
        nlohmann::ordered_json j{{"id", r.key()},          {"system", r.system},
                                 {"subsystem", r.subsystem}, {"component", r.component},
                                 {"failure_mode", r.failure_mode}, {"failure_reason", r.failure_reason},
                                 {"failure_effect", r.failure_effect}, {"emergency_measure", r.emergency_measure}};
        jl += j.dump() + "\n";
    }
    EXPECT_EQ(parse_records(jl, RecordFormat::jsonl).records, csv.records);
    EXPECT_EQ(parse_records(serialize_records_csv(csv.records), RecordFormat::csv).records, csv.records);
}

TEST(Edges, ParseAndValidate)
{
    EXPECT_EQ(parse_edges("src,dst,weight\n11010101,11010102,0.5\n11010102,11010101,1\n").size(), 2u);
    EXPECT_THROW(parse_edges("11010101,11010102,0\n"), ValidationError);
    EXPECT_THROW(parse_edges("11010101,11010102,1.5\n"), ValidationError);
    EXPECT_THROW(parse_edges("11010101,11010101,0.5\n"), ValidationError);
    EXPECT_THROW(parse_edges("11010101,11010102,0.5\n11010101,11010102,0.7\n"), ValidationError);
    EXPECT_THROW(parse_edges("11010101,11010102\n"), ParseError);
    EXPECT_THROW(parse_edges("1101010,11010102,0.5\n"), ParseError);
}

TEST(Edges, SymmetrizeKeepsLargerWeight)
{
    const std::vector<Edge> e{{"11010101", "11010102", 0.3}, {"11010102", "11010101", 0.8}, {"11010101", "11010201", 0.5}};
    const auto s = symmetrize(e);
    ASSERT_EQ(s.size(), 4u);
    for (const auto& x : s) {
        if (x.src == "11010201" || x.dst == "11010201") EXPECT_EQ(x.weight, 0.5);
        else EXPECT_EQ(x.weight, 0.8);
    }
}

TEST(Assemble, TenRecordsSplitTwoTwoSix)
{
    std::string csv = header;
    for (int i = 1; i <= 10; ++i) csv += record_row("110101" + std::string(i < 10 ? "0" : "") + std::to_string(i));
    const auto recs = parse_records(csv, RecordFormat::csv).records;
    Rng rng(2);
    const auto f = features_for(recs, 4, rng);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto g = assemble(recs, f, {}, SplitSpec{}, seed);
        std::array<int, 3> n{};
        for (const auto& node : g.nodes) ++n[static_cast<int>(node.split)];
        EXPECT_EQ(n, (std::array<int, 3>{2, 2, 6}));
    }
}

TEST(Assemble, StratifiedWithinOnePerClass)
{
    const auto recs = ingest_records(support::source("data/demo/records.csv").string(), RecordFormat::csv).records;
    Rng rng(3);
    const auto f = features_for(recs, 3, rng);
    const SplitSpec spec{};
    const auto g = assemble(recs, f, {}, spec, 9);
    std::map<std::string, std::array<double, 3>> got;
    std::map<std::string, double> size;
    for (const auto& n : g.nodes) {
        got[n.label][static_cast<int>(n.split)] += 1;
        size[n.label] += 1;
    }
    std::array<double, 3> total{};
    for (const auto& [label, c] : got) {
        for (int s = 0; s < 3; ++s) {
            EXPECT_LE(std::abs(c[s] - size[label] * spec.fractions()[s]), 1.0) << label;
            total[s] += c[s];
        }
    }
    for (int s = 0; s < 3; ++s) EXPECT_LE(std::abs(total[s] - g.nodes.size() * spec.fractions()[s]), 1.0);
    EXPECT_EQ(g, assemble(recs, f, {}, spec, 9));
}

TEST(Assemble, DanglingEdgeNamesId)
{
    std::string csv = std::string(header) + record_row("11010101") + record_row("11010102");
    const auto recs = parse_records(csv, RecordFormat::csv).records;
    Rng rng(4);
    const auto f = features_for(recs, 2, rng);
    try {
        assemble(recs, f, std::vector<Edge>{{"11010101", "11019999", 0.5}}, SplitSpec{}, 1);
        FAIL();
    } catch (const AssemblyError& e) {
        EXPECT_NE(std::string(e.what()).find("11019999"), std::string::npos);
    }
}

TEST(Export, ShapeAndRoundTrip)
{
    std::string csv = std::string(header) + record_row("11010101") + record_row("11010102") + record_row("12010101", "Sys B");
    const auto recs = parse_records(csv, RecordFormat::csv).records;
    Rng rng(5);
    const auto f = features_for(recs, 5, rng);
    const std::vector<Edge> edges{{"11010101", "11010102", 0.25}, {"12010101", "11010101", 0.125}};
    for (bool undirected : {false, true}) {
        const auto g = assemble(recs, f, edges, SplitSpec{}, 3, undirected);
        const auto dir = support::scratch("export");
        export_dataset(g, dir, {{"note", "x"}}, 3, SplitSpec{});
        const auto nodes = parse_csv(text::read_file((dir / "nodes.csv").string()));
        ASSERT_EQ(nodes.size(), 4u);
        EXPECT_EQ(nodes.front().size(), 3u + 5);
        EXPECT_EQ(load_export(dir), g);
        EXPECT_EQ(g.edges.size(), undirected ? 4u : 2u);
        const auto meta = nlohmann::json::parse(text::read_file((dir / "meta.json").string()));
        EXPECT_EQ(meta.at("nodes"), 3);
        EXPECT_EQ(meta.at("classes"), 2);
    }
}
