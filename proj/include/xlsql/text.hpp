#ifndef XLSQL_TEXT_HPP_INCLUDED
#define XLSQL_TEXT_HPP_INCLUDED

#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "errors.hpp"

namespace xlsql
{
enum class Language
{
    english,
    arabic,
};

inline std::string_view to_string(Language language) noexcept
{
    return language == Language::arabic ? "arabic" : "english";
}

namespace detail
{
    inline icu::UnicodeString to_unicode(std::string_view text)
    {
        return icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    }

    inline std::string to_utf8(const icu::UnicodeString& text)
    {
        std::string out;
        text.toUTF8String(out);
        return out;
    }

    constexpr bool is_tatweel(UChar32 c) noexcept
    {
        return c == 0x0640;
    }

    // Harakat, Quranic annotation marks and the superscript alef.
    constexpr bool is_arabic_diacritic(UChar32 c) noexcept
    {
        return (c >= 0x0610 && c <= 0x061A) || (c >= 0x064B && c <= 0x065F) || c == 0x0670
               || (c >= 0x06D6 && c <= 0x06DC) || (c >= 0x06DF && c <= 0x06E8) || (c >= 0x06EA && c <= 0x06ED);
    }

    constexpr bool is_arabic_letter(UChar32 c) noexcept
    {
        return (c >= 0x0600 && c <= 0x06FF) || (c >= 0x0750 && c <= 0x077F) || (c >= 0x08A0 && c <= 0x08FF)
               || (c >= 0xFB50 && c <= 0xFDFF) || (c >= 0xFE70 && c <= 0xFEFF);
    }

    inline bool is_separator(UChar32 c) noexcept
    {
        return u_isUWhiteSpace(c) || c == 0x200B || c == 0x200C || c == 0x200D || c == 0xFEFF;
    }

    // Punctuation and symbols each form a token of their own.
    inline bool is_splitting_mark(UChar32 c) noexcept
    {
        if (u_ispunct(c))
            return true;
        switch (u_charType(c))
        {
        case U_MATH_SYMBOL:
        case U_CURRENCY_SYMBOL:
        case U_MODIFIER_SYMBOL:
        case U_OTHER_SYMBOL:
            return true;
        default:
            return false;
        }
    }

    inline icu::UnicodeString normalize_unicode(std::string_view text, Language language)
    {
        UErrorCode status = U_ZERO_ERROR;
        const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
        if (U_FAILURE(status))
            throw Error("ICU NFKC normalizer unavailable");

        icu::UnicodeString normalized = nfkc->normalize(to_unicode(text), status);
        if (U_FAILURE(status))
            throw Error("NFKC normalization failed");

        if (language == Language::arabic)
        {
            icu::UnicodeString stripped;
            for (int32_t i = 0; i < normalized.length();)
            {
                UChar32 c = normalized.char32At(i);
                i += U16_LENGTH(c);
                if (!is_tatweel(c) && !is_arabic_diacritic(c))
                    stripped.append(c);
            }
            normalized = std::move(stripped);
        }
        normalized.foldCase();
        return normalized;
    }
} // namespace detail

/// Arabic if the text contains any Arabic-script letter, English otherwise.
inline Language detect_language(std::string_view text)
{
    const icu::UnicodeString u = detail::to_unicode(text);
    for (int32_t i = 0; i < u.length();)
    {
        UChar32 c = u.char32At(i);
        if (detail::is_arabic_letter(c) && u_isalpha(c))
            return Language::arabic;
        i += U16_LENGTH(c);
    }
    return Language::english;
}

/// NFKC, Arabic tatweel/diacritic stripping (Arabic only), then case folding.
inline std::string normalize_text(std::string_view text, Language language)
{
    return detail::to_utf8(detail::normalize_unicode(text, language));
}

/// Splits a question into word and punctuation tokens after normalization.
///
/// Whitespace separates tokens and is dropped. Every punctuation or symbol
/// character becomes a one-character token, except '.' and ',' sitting
/// between two digits, which stay inside the number.
inline std::vector<std::string> tokenize(std::string_view question, Language language)
{
    const icu::UnicodeString text = detail::normalize_unicode(question, language);

    std::vector<UChar32> points;
    points.reserve(static_cast<std::size_t>(text.length()));
    for (int32_t i = 0; i < text.length();)
    {
        UChar32 c = text.char32At(i);
        points.push_back(c);
        i += U16_LENGTH(c);
    }

    std::vector<std::string> tokens;
    icu::UnicodeString current;
    auto flush = [&] {
        if (!current.isEmpty())
        {
            tokens.push_back(detail::to_utf8(current));
            current.remove();
        }
    };

    for (std::size_t i = 0; i < points.size(); ++i)
    {
        const UChar32 c = points[i];
        if (detail::is_separator(c))
        {
            flush();
            continue;
        }
        if (detail::is_splitting_mark(c))
        {
            const bool numeric_separator = (c == '.' || c == ',') && i > 0 && i + 1 < points.size()
                                           && u_isdigit(points[i - 1]) && u_isdigit(points[i + 1]);
            if (!numeric_separator)
            {
                flush();
                tokens.push_back(detail::to_utf8(icu::UnicodeString(c)));
                continue;
            }
        }
        current.append(c);
    }
    flush();
    return tokens;
}

/// Canonical identity of a piece of text: normalized for its detected
/// language, with whitespace runs collapsed to one space and trimmed.
/// Vector-store keys and string linking both go through this.
inline std::string normalize_key(std::string_view text)
{
    const icu::UnicodeString u = detail::normalize_unicode(text, detect_language(text));
    icu::UnicodeString out;
    bool pending_space = false;
    for (int32_t i = 0; i < u.length();)
    {
        UChar32 c = u.char32At(i);
        i += U16_LENGTH(c);
        if (detail::is_separator(c))
        {
            pending_space = !out.isEmpty();
            continue;
        }
        if (pending_space)
            out.append(static_cast<UChar32>(' '));
        pending_space = false;
        out.append(c);
    }
    return detail::to_utf8(out);
}

/// Word sequence of a schema item name: normalized tokens with '_' treated
/// as a separator so original identifiers split like display names.
inline std::vector<std::string> name_words(std::string_view name)
{
    std::string spaced(name);
    for (char& c : spaced)
        if (c == '_')
            c = ' ';
    auto tokens = tokenize(spaced, detect_language(spaced));
    std::erase_if(tokens, [](const std::string& t) {
        const icu::UnicodeString u = detail::to_unicode(t);
        return u.length() == 1 && detail::is_splitting_mark(u.char32At(0));
    });
    return tokens;
}
} // namespace xlsql

#endif // XLSQL_TEXT_HPP_INCLUDED
