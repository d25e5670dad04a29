#include <gtest/gtest.h>

#include <regex>

#include "fgf/corpus.hpp"
#include "support.hpp"

using namespace fgf;

namespace {

Document doc(std::string id, std::string title, std::string abstract = "")
{
    Document d;
    d.id = std::move(id);
    d.title = std::move(title);
    d.abstract = std::move(abstract);
    return d;
}

} // namespace

TEST(Corpus, ParseFiveLines)
{
    std::string s;
    for (int i = 0; i < 5; ++i) {
        s += R"({"id": "d)" + std::to_string(i) + R"(", "title": "t", "abstract": "a"})" "\n";
    }
    EXPECT_EQ(parse_offline(s).size(), 5u);
    EXPECT_TRUE(parse_offline("").empty());
}

TEST(Corpus, MissingAbstractNamesLine)
{
    const std::string s = R"({"id": "a", "title": "t", "abstract": "x"})"
                          "\n"
                          R"({"id": "b", "title": "t", "abstract": "x"})"
                          "\n"
                          R"({"id": "c", "title": "t"})"
                          "\n";
    try {
        parse_offline(s);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
        EXPECT_EQ(e.code(), ExitCode::data);
    }
}

TEST(Corpus, RoundTripKeepsLabels)
{
    auto docs = parse_offline(text::read_file(support::source("data/synthetic/corpus200.jsonl").string()));
    ASSERT_EQ(docs.size(), 200u);
    EXPECT_EQ(parse_offline(serialize_offline(docs)).size(), 200u);
    EXPECT_EQ(parse_offline(serialize_offline(docs))[17].relevant, docs[17].relevant);
}

TEST(Corpus, LabelFileOverrides)
{
    std::vector<Document> docs{doc("a", "t"), doc("b", "t")};
    apply_labels(docs, "a\t1\n# c\nb,false\n");
    EXPECT_EQ(docs[0].relevant, true);
    EXPECT_EQ(docs[1].relevant, false);
    EXPECT_THROW(apply_labels(docs, "a\tmaybe\n"), ParseError);
}

TEST(Corpus, DedupIdenticalRecords)
{
    const std::vector<Document> docs{doc("a", "Ship", "x"), doc("b", "Ship", "x")};
    EXPECT_EQ(dedup(docs).size(), 1u);
}

TEST(Corpus, DedupAgreesWithNormalizationOracle)
{
    const std::vector<Document> docs{doc("a", "  Ship  Collision", "An  abstract"), doc("b", "ship collision ", "an abstract\n"),
                                     doc("c", "ship collisions", "an abstract")};
    auto norm = [](const Document& d) { return text::casefold(text::collapse_whitespace(d.title)) + "|" + text::casefold(text::collapse_whitespace(d.abstract)); };
    std::set<std::string> uniq;
    for (const auto& d : docs) uniq.insert(norm(d));
    const auto kept = dedup(docs);
    EXPECT_EQ(kept.size(), uniq.size());
    EXPECT_EQ(kept.front().id, "a");
}

TEST(Corpus, PlantedDuplicateRate)
{
    const auto docs = load_offline(support::source("data/synthetic/corpus100_dup.jsonl").string());
    ASSERT_EQ(docs.size(), 100u);
    const auto r = dedup_report(docs);
    EXPECT_EQ(r.kept.size(), 99u);
    EXPECT_DOUBLE_EQ(r.duplication_rate(), 0.01);
}

TEST(Corpus, LiteralCounts)
{
    const std::vector<Document> docs{doc("a", "ship ship collision", "shipping of boats")};
    const std::vector<std::string> pool{"ship", "boat", "ship collision"};
    const auto p = match_counts(docs, pool);
    EXPECT_EQ(p.at(0, 0), 2.0);
    EXPECT_EQ(p.at(1, 0), 0.0);
    EXPECT_EQ(p.at(2, 0), 1.0);
}

TEST(Corpus, WholeWordCountsMatchRegexOracle)
{
    const auto docs = load_offline(support::source("data/synthetic/corpus200.jsonl").string());
    const std::vector<std::string> pool{"ship", "vessel", "self-driving", "container", "fault", "unmanned"};
    const auto p = match_counts(docs, pool);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        // hyphens separate words, so the phrase pattern allows any non-word run between parts
        auto parts = text::words(pool[i]);
        std::string pat = "(^|[^A-Za-z0-9])";
        for (std::size_t k = 0; k < parts.size(); ++k) {
            pat += (k ? "[^A-Za-z0-9]+" : "") + parts[k];
        }
        pat += "(?=$|[^A-Za-z0-9])";
        const std::regex re(pat, std::regex::icase);
        for (std::size_t j = 0; j < docs.size(); ++j) {
            const auto hay = docs[j].title + " " + docs[j].abstract;
            const auto n = std::distance(std::sregex_iterator(hay.begin(), hay.end(), re), std::sregex_iterator());
            ASSERT_EQ(p.at(i, j), static_cast<double>(n)) << pool[i] << " in " << docs[j].id;
        }
    }
}

TEST(Corpus, EmptyPoolRejected)
{
    const std::vector<Document> docs{doc("a", "t")};
    EXPECT_THROW(match_counts(docs, std::vector<std::string>{}), ConfigError);
}
