#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include <xlsql/text.hpp>

using namespace xlsql;
using Tokens = std::vector<std::string>;

TEST(Tokenize, EnglishSentenceSplitsOffTrailingPunctuation)
{
    EXPECT_EQ(tokenize("Count the number of products.", Language::english),
              (Tokens{"count", "the", "number", "of", "products", "."}));
}

TEST(Tokenize, ArabicSentenceSplitsOffTrailingPunctuation)
{
    EXPECT_EQ(tokenize("احسب عدد المنتجات.", Language::arabic), (Tokens{"احسب", "عدد", "المنتجات", "."}));
}

TEST(Tokenize, ArabicQuestionMarkIsItsOwnToken)
{
    EXPECT_EQ(tokenize("كم من المنتجات لكل شركة صناعية؟", Language::arabic),
              (Tokens{"كم", "من", "المنتجات", "لكل", "شركة", "صناعية", "؟"}));
}

TEST(Tokenize, EmptyAndWhitespaceOnly)
{
    EXPECT_TRUE(tokenize("", Language::english).empty());
    EXPECT_TRUE(tokenize(" \t\n ", Language::arabic).empty());
}

TEST(Tokenize, DecimalPointAndThousandsSeparatorStayInNumbers)
{
    EXPECT_EQ(tokenize("price 3.5, or 1,000", Language::english), (Tokens{"price", "3.5", ",", "or", "1,000"}));
    EXPECT_EQ(tokenize("a,b", Language::english), (Tokens{"a", ",", "b"}));
}

TEST(Tokenize, StripsTatweelAndDiacriticsForArabic)
{
    EXPECT_EQ(tokenize("المـــنتجات", Language::arabic), Tokens{"المنتجات"});
    EXPECT_EQ(tokenize("كَتَبَ", Language::arabic), Tokens{"كتب"});
}

TEST(Tokenize, KeepsDiacriticsOutsideArabicMode)
{
    EXPECT_EQ(tokenize("كَتَبَ", Language::english).front(), normalize_text("كَتَبَ", Language::english));
}

TEST(Tokenize, CompatibilityFormsAreNormalized)
{
    // Fullwidth letters and an Arabic presentation form.
    EXPECT_EQ(tokenize("ＡＢＣ", Language::english), Tokens{"abc"});
    EXPECT_EQ(tokenize("ﻻ", Language::arabic), Tokens{"لا"});
}

// Tokens, concatenated, give back the normalized text minus whitespace.
TEST(Tokenize, TokensCoverAllNonWhitespaceContent)
{
    const std::vector<std::string> alphabet{"a", "B", "z", "7", "0", ".", ",", "?", "!", "(", ")", "'", "$", "+",
                                            " ", " ", "\t", "م", "ن", "ت", "ج", "؟", "،", "ـ", "َ"};
    std::mt19937 rng(7);
    for (int round = 0; round < 2000; ++round)
    {
        std::string text;
        const int length = static_cast<int>(rng() % 24);
        for (int i = 0; i < length; ++i)
            text += alphabet[rng() % alphabet.size()];
        for (Language language : {Language::english, Language::arabic})
        {
            std::string joined;
            for (const auto& token : tokenize(text, language))
            {
                ASSERT_FALSE(token.empty());
                ASSERT_EQ(token.find(' '), std::string::npos);
                joined += token;
            }
            std::string expected;
            for (char c : normalize_text(text, language))
                if (c != ' ' && c != '\t')
                    expected += c;
            ASSERT_EQ(joined, expected) << "input: '" << text << "'";
        }
    }
}

TEST(DetectLanguage, ArabicLetterAnywhereMeansArabic)
{
    EXPECT_EQ(detect_language("Count the number of products."), Language::english);
    EXPECT_EQ(detect_language("احسب عدد المنتجات."), Language::arabic);
    EXPECT_EQ(detect_language("list DVD محرك"), Language::arabic);
    EXPECT_EQ(detect_language("؟"), Language::english);
}

TEST(NormalizeKey, CollapsesWhitespaceAndFoldsCase)
{
    EXPECT_EQ(normalize_key("  Store \t  Name "), "store name");
    EXPECT_EQ(normalize_key("المـنتجات"), "المنتجات");
    EXPECT_EQ(normalize_key(""), "");
}

TEST(NameWords, UnderscoresSeparateWords)
{
    EXPECT_EQ(name_words("Store_Name"), (Tokens{"store", "name"}));
    EXPECT_EQ(name_words("singer in concert"), (Tokens{"singer", "in", "concert"}));
    EXPECT_EQ(name_words("*"), Tokens{});
}
