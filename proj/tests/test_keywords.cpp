#include <gtest/gtest.h>

#include "fgf/keywords.hpp"
#include "fgf/random.hpp"
#include "support.hpp"

using namespace fgf;

TEST(Keywords, GroupExpandsToBaseAndSynonyms)
{
    const std::vector<KeywordGroup> groups{{"ship", {"vessel", "boat", "craft"}}};
    EXPECT_EQ(expand_keywords(groups), (std::vector<std::string>{"ship", "vessel", "boat", "craft"}));
}

TEST(Keywords, GroupWithoutSynonyms)
{
    const std::vector<KeywordGroup> groups{{"x", {}}};
    EXPECT_EQ(expand_keywords(groups), (std::vector<std::string>{"x"}));
}

TEST(Keywords, SharedSynonymBelongsToFirstGroup)
{
    const auto t = KeywordTaxonomy::from_groups({{"ship", {"vessel"}}, {"boat", {"vessel"}}});
    EXPECT_EQ(t.pool(), (std::vector<std::string>{"ship", "vessel", "boat"}));
    EXPECT_EQ(t.group_of("vessel"), 0u);
    EXPECT_EQ(t.group_of("boat"), 1u);
}

TEST(Keywords, PoolMatchesFirstOccurrenceDedupOracle)
{
    Rng rng(4);
    const std::vector<std::string> vocab{"a", "b", "c", "d", "e", "f", "g", "h"};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<KeywordGroup> groups;
        for (std::size_t g = 1 + rng.index(4); g > 0; --g) {
            KeywordGroup kg{vocab[rng.index(vocab.size())], {}};
            for (std::size_t s = rng.index(4); s > 0; --s) {
                kg.synonyms.push_back(vocab[rng.index(vocab.size())]);
            }
            groups.push_back(kg);
        }
        std::vector<std::string> expect;
        for (const auto& g : groups) {
            std::vector<std::string> toks{g.base};
            toks.insert(toks.end(), g.synonyms.begin(), g.synonyms.end());
            for (const auto& t : toks) {
                if (std::find(expect.begin(), expect.end(), t) == expect.end()) {
                    expect.push_back(t);
                }
            }
        }
        EXPECT_EQ(expand_keywords(groups), expect);
    }
}

TEST(Keywords, ParseTableFormat)
{
    const auto t = KeywordTaxonomy::parse("# comment\nShip: Vessel,  boat ,craft\n\nCollision:\n");
    EXPECT_EQ(t.pool(), (std::vector<std::string>{"ship", "vessel", "boat", "craft", "collision"}));
    EXPECT_EQ(t.base_indices(), (std::vector<std::size_t>{0, 4}));
    EXPECT_EQ(KeywordTaxonomy::parse(t.to_text()).pool(), t.pool());
    EXPECT_THROW(KeywordTaxonomy::parse(": x, y"), ConfigError);
    EXPECT_THROW(KeywordTaxonomy::parse(""), ConfigError);
}

TEST(Keywords, ShippedTaxonomyLoads)
{
    const auto t = KeywordTaxonomy::load(support::source("data/taxonomy.txt").string());
    EXPECT_EQ(t.groups().size(), 5u);
    EXPECT_TRUE(t.contains("vessel"));
    EXPECT_TRUE(t.contains("self-driving"));
}

TEST(Keywords, WeightsNormalize)
{
    const auto w = update_weights({{"a", 3}, {"b", 1}});
    EXPECT_DOUBLE_EQ(w.at("a"), 0.75);
    EXPECT_DOUBLE_EQ(w.at("b"), 0.25);
}

TEST(Keywords, AllZeroWeightsAreUniform)
{
    const auto w = update_weights({{"a", 0}, {"b", 0}});
    EXPECT_DOUBLE_EQ(w.at("a"), 0.5);
    EXPECT_DOUBLE_EQ(w.at("b"), 0.5);
    EXPECT_THROW(update_weights({{"a", -1}}), DomainError);
}

TEST(Keywords, TwentyKeywordWeightsMatchSumAndDivide)
{
    Rng rng(9);
    std::map<std::string, double> counts;
    for (int i = 0; i < 20; ++i) {
        counts["k" + std::to_string(i)] = static_cast<double>(rng.index(50));
    }
    double total = 0;
    for (const auto& [k, c] : counts) total += c;
    const auto w = update_weights(counts);
    for (const auto& [k, c] : counts) {
        EXPECT_NEAR(w.at(k), c / total, 1e-12);
    }
    const std::vector<std::string> pool{"k3", "zz", "k1"};
    const auto aligned = w.aligned(pool);
    EXPECT_EQ(aligned[1], 0.0);
    EXPECT_EQ(aligned[0], w.at("k3"));
}
