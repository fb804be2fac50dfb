#pragma once

// Raw report text -> normalized text with sentence spans, refang log and an
// offset map back to the input bytes.

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "stixnet/errors.hpp"
#include "stixnet/types.hpp"

namespace stixnet {

enum class DocFormat { PlainText, Html };

struct RawDocument {
  std::string id;
  std::string content;
  DocFormat format = DocFormat::PlainText;
};

struct RefangEdit {
  Span span;  // into NormalizedText::text
  std::string original;
  std::string replacement;

  friend bool operator==(const RefangEdit&, const RefangEdit&) = default;
};

struct NormalizedText {
  std::string text;
  std::vector<Span> sentences;
  // offset_map[i] is the input offset of text[i]; offset_map[text.size()] is
  // the input size. Monotone non-decreasing.
  std::vector<std::size_t> offset_map;
  std::vector<RefangEdit> refang_log;

  std::string_view slice(Span s) const { return std::string_view(text).substr(s.start, s.length()); }
  std::size_t raw_offset(std::size_t i) const { return offset_map.at(i); }
  Span raw_span(Span s) const { return {offset_map.at(s.start), offset_map.at(s.end)}; }

  /// Index of the sentence containing `pos`, or npos.
  std::size_t sentence_of(std::size_t pos) const {
    auto it = std::upper_bound(sentences.begin(), sentences.end(), pos,
                               [](std::size_t p, const Span& s) { return p < s.start; });
    if (it == sentences.begin()) return npos;
    --it;
    return it->contains(pos) ? static_cast<std::size_t>(it - sentences.begin()) : npos;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct TextToken {
  std::string text;
  Span span;

  friend bool operator==(const TextToken&, const TextToken&) = default;
};

inline void validate_utf8(std::string_view bytes) {
  const auto* s = reinterpret_cast<const uint8_t*>(bytes.data());
  const auto length = static_cast<int32_t>(bytes.size());
  int32_t i = 0;
  while (i < length) {
    const int32_t at = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) throw DecodeError("invalid UTF-8 at byte " + std::to_string(at));
  }
}

namespace detail {

// One rewrite stage: out[i] was produced from input offset src[i]; the
// trailing src entry is the input size.
struct Rewrite {
  std::string out;
  std::vector<std::size_t> src;

  void copy(std::string_view in, std::size_t i) {
    out.push_back(in[i]);
    src.push_back(i);
  }
  void emit(std::string_view s, std::size_t at) {
    for (char c : s) {
      out.push_back(c);
      src.push_back(at);
    }
  }
  void close(std::size_t in_size) { src.push_back(in_size); }
};

inline std::vector<std::size_t> compose(const std::vector<std::size_t>& prev,
                                        const std::vector<std::size_t>& stage) {
  std::vector<std::size_t> out(stage.size());
  for (std::size_t i = 0; i < stage.size(); ++i) out[i] = prev[stage[i]];
  return out;
}

// First output offset whose source is >= x.
inline std::size_t forward(const std::vector<std::size_t>& src, std::size_t x) {
  return static_cast<std::size_t>(std::lower_bound(src.begin(), src.end(), x) - src.begin());
}

inline bool is_ascii(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

inline Rewrite nfc(std::string_view in) {
  Rewrite r;
  if (is_ascii(in)) {
    for (std::size_t i = 0; i < in.size(); ++i) r.copy(in, i);
    r.close(in.size());
    return r;
  }
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");

  const auto* s = reinterpret_cast<const uint8_t*>(in.data());
  const auto length = static_cast<int32_t>(in.size());
  // Split into chunks that start at composition boundaries.
  std::vector<int32_t> starts;
  for (int32_t i = 0; i < length;) {
    const int32_t at = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (at == 0 || norm->hasBoundaryBefore(c)) starts.push_back(at);
  }
  starts.push_back(length);
  for (std::size_t k = 0; k + 1 < starts.size(); ++k) {
    const auto b = static_cast<std::size_t>(starts[k]);
    const auto e = static_cast<std::size_t>(starts[k + 1]);
    const std::string_view chunk = in.substr(b, e - b);
    if (is_ascii(chunk)) {
      for (std::size_t i = b; i < e; ++i) r.copy(in, i);
      continue;
    }
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(chunk.data(), static_cast<int32_t>(chunk.size())));
    status = U_ZERO_ERROR;
    icu::UnicodeString n = norm->normalize(u, status);
    if (U_FAILURE(status)) throw Error("NFC normalization failed");
    std::string utf8;
    n.toUTF8String(utf8);
    if (utf8 == chunk) {
      for (std::size_t i = b; i < e; ++i) r.copy(in, i);
    } else {
      r.emit(utf8, b);
    }
  }
  r.close(in.size());
  return r;
}

// CRLF and lone CR become LF.
inline Rewrite fix_line_breaks(std::string_view in) {
  Rewrite r;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == '\r') {
      r.emit("\n", i);
      if (i + 1 < in.size() && in[i + 1] == '\n') ++i;
    } else {
      r.copy(in, i);
    }
  }
  r.close(in.size());
  return r;
}

// "attack-\ners" -> "attackers": letter, '-', newline, lowercase letter.
inline Rewrite dehyphenate(std::string_view in) {
  Rewrite r;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == '-' && i > 0 && text::is_alpha(in[i - 1]) && i + 2 < in.size() &&
        in[i + 1] == '\n' && text::is_lower(in[i + 2])) {
      ++i;  // skip '-' and '\n'
      continue;
    }
    r.copy(in, i);
  }
  r.close(in.size());
  return r;
}

inline Rewrite collapse_newlines(std::string_view in) {
  Rewrite r;
  std::size_t run = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == '\n') {
      if (++run > 2) continue;
    } else {
      run = 0;
    }
    r.copy(in, i);
  }
  r.close(in.size());
  return r;
}

struct RefangRule {
  std::string_view from;
  std::string_view to;
};

// Applied case-insensitively, first match wins at each position.
inline constexpr std::array<RefangRule, 9> kRefangRules = {{
    {"hxxp", "http"},
    {"hXXp", "http"},
    {"[.]", "."},
    {"(.)", "."},
    {"[dot]", "."},
    {"[at]", "@"},
    {"[@]", "@"},
    {"[:]", ":"},
    {"[://]", "://"},
}};

struct RefangPass {
  Rewrite rewrite;
  std::vector<RefangEdit> edits;
};

inline RefangPass refang_once(std::string_view in) {
  RefangPass p;
  for (std::size_t i = 0; i < in.size();) {
    const RefangRule* hit = nullptr;
    for (const auto& rule : kRefangRules) {
      if (text::starts_with_icase(in, i, rule.from)) {
        hit = &rule;
        break;
      }
    }
    if (hit) {
      const std::size_t at = p.rewrite.out.size();
      p.rewrite.emit(hit->to, i);
      p.edits.push_back({{at, p.rewrite.out.size()}, std::string(in.substr(i, hit->from.size())),
                         std::string(hit->to)});
      i += hit->from.size();
    } else {
      p.rewrite.copy(in, i);
      ++i;
    }
  }
  p.rewrite.close(in.size());
  return p;
}

}  // namespace detail

/// Visible text of an HTML document. Tolerates malformed markup.
inline std::string strip_html(const RawDocument& doc) {
  validate_utf8(doc.content);
  const std::string_view in = doc.content;
  static constexpr std::array<std::string_view, 24> kBlock = {
      "p",  "div", "br", "li",      "ul",     "ol",    "tr",      "table", "h1",  "h2",  "h3",   "h4",
      "h5", "h6",  "hr", "section", "article", "header", "footer", "pre",  "blockquote", "td", "th", "title"};
  auto is_block = [](std::string_view name) {
    return std::find(kBlock.begin(), kBlock.end(), name) != kBlock.end();
  };
  auto newline = [](std::string& out) {
    if (!out.empty() && out.back() != '\n') out.push_back('\n');
  };
  auto decode_entity = [](std::string_view ent, std::string& out) -> bool {
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 6> kNamed = {{
        {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "}}};
    for (const auto& [name, value] : kNamed) {
      if (ent == name) {
        out += value;
        return true;
      }
    }
    if (ent.size() >= 2 && ent[0] == '#') {
      uint32_t cp = 0;
      const bool hex = ent[1] == 'x' || ent[1] == 'X';
      const std::string_view digits = ent.substr(hex ? 2 : 1);
      if (digits.empty() || digits.size() > 7) return false;
      for (char c : digits) {
        if (hex ? !text::is_hex(c) : !text::is_digit(c)) return false;
        cp = cp * (hex ? 16 : 10) +
             static_cast<uint32_t>(text::is_digit(c) ? c - '0' : text::ascii_lower(c) - 'a' + 10);
      }
      if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
      char buf[4];
      int32_t n = 0;
      UBool err = false;
      U8_APPEND(reinterpret_cast<uint8_t*>(buf), n, 4, static_cast<UChar32>(cp), err);
      if (err) return false;
      out.append(buf, static_cast<std::size_t>(n));
      return true;
    }
    return false;
  };

  std::string out;
  std::size_t i = 0;
  while (i < in.size()) {
    const char c = in[i];
    if (c == '<') {
      if (in.compare(i, 4, "<!--") == 0) {
        const auto close = in.find("-->", i + 4);
        i = close == std::string_view::npos ? in.size() : close + 3;
        continue;
      }
      const auto close = in.find('>', i + 1);
      if (close == std::string_view::npos) {
        out.push_back(c);  // unclosed '<' is kept as text
        ++i;
        continue;
      }
      std::string_view tag = in.substr(i + 1, close - i - 1);
      const bool closing = !tag.empty() && tag[0] == '/';
      if (closing) tag.remove_prefix(1);
      std::size_t n = 0;
      while (n < tag.size() && (text::is_alnum(tag[n]))) ++n;
      const std::string name = text::lower(tag.substr(0, n));
      i = close + 1;
      if (!closing && (name == "script" || name == "style")) {
        const std::string end_tag = "</" + name;
        std::size_t j = i;
        for (; j < in.size(); ++j) {
          if (text::starts_with_icase(in, j, end_tag)) break;
        }
        if (j >= in.size()) {
          i = in.size();
        } else {
          const auto gt = in.find('>', j);
          i = gt == std::string_view::npos ? in.size() : gt + 1;
        }
        continue;
      }
      if (is_block(name)) {
        if (closing || name == "br" || name == "hr") {
          if (!out.empty()) out.push_back('\n');
        } else {
          newline(out);
        }
      }
      continue;
    }
    if (c == '&') {
      const auto semi = in.find(';', i + 1);
      if (semi != std::string_view::npos && semi - i <= 10 &&
          decode_entity(in.substr(i + 1, semi - i - 1), out)) {
        i = semi + 1;
        continue;
      }
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

/// NFC, line-break repair, de-hyphenation, newline collapse and refanging.
/// Sentences are left empty; see split_sentences.
inline NormalizedText normalize(std::string_view input) {
  validate_utf8(input);
  std::vector<std::size_t> map(input.size() + 1);
  for (std::size_t i = 0; i <= input.size(); ++i) map[i] = i;

  std::string cur(input);
  std::vector<RefangEdit> log;
  auto apply = [&](detail::Rewrite&& r) {
    for (auto& e : log)
      e.span = {detail::forward(r.src, e.span.start), detail::forward(r.src, e.span.end)};
    map = detail::compose(map, r.src);
    cur = std::move(r.out);
  };
  apply(detail::nfc(cur));
  apply(detail::fix_line_breaks(cur));

  // Refanging can expose new edit sites ("[[.]]", "x-\nhxxp"), so the
  // remaining stages run in order until the text stops changing. Every pass
  // that changes anything shrinks the text.
  for (;;) {
    const std::size_t before = cur.size();
    apply(detail::dehyphenate(cur));
    apply(detail::collapse_newlines(cur));
    auto pass = detail::refang_once(cur);
    const bool refanged = !pass.edits.empty();
    std::vector<RefangEdit> fresh = std::move(pass.edits);
    apply(std::move(pass.rewrite));
    log.insert(log.end(), fresh.begin(), fresh.end());
    if (!refanged && cur.size() == before) break;
  }
  std::stable_sort(log.begin(), log.end(),
                   [](const RefangEdit& a, const RefangEdit& b) { return a.span.start < b.span.start; });

  NormalizedText nt;
  nt.text = std::move(cur);
  nt.offset_map = std::move(map);
  nt.refang_log = std::move(log);
  return nt;
}

namespace detail {

inline constexpr std::array<std::string_view, 6> kAbbreviations = {"e.g.", "i.e.", "etc.", "mr.", "no.", "vs."};

inline bool is_abbreviation(std::string_view word) {
  const std::string w = text::lower(word);
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), w) != kAbbreviations.end();
}

// Start of the whitespace-delimited word that ends at `end` (exclusive).
inline std::size_t word_start(std::string_view t, std::size_t end) {
  std::size_t b = end;
  while (b > 0 && !text::is_space(t[b - 1])) --b;
  return b;
}

inline bool ioc_like(std::string_view word) {
  // Internal '.', '/', '@' or ':' between word characters.
  for (std::size_t i = 1; i + 1 < word.size(); ++i) {
    const char c = word[i];
    if ((c == '.' || c == '/' || c == '@' || c == ':') && text::is_alnum(word[i - 1]) &&
        (text::is_alnum(word[i + 1]) || word[i + 1] == '/'))
      return true;
  }
  return false;
}

}  // namespace detail

/// Rule-based sentence segmentation over nt.text.
inline NormalizedText split_sentences(NormalizedText nt) {
  const std::string_view t = nt.text;
  nt.sentences.clear();
  auto in_refang = [&](std::size_t pos) {
    return std::any_of(nt.refang_log.begin(), nt.refang_log.end(),
                       [&](const RefangEdit& e) { return e.span.contains(pos); });
  };
  auto push = [&](std::size_t b, std::size_t e) {
    while (b < e && text::is_space(t[b])) ++b;
    while (e > b && text::is_space(t[e - 1])) --e;
    if (b < e) nt.sentences.push_back({b, e});
  };

  std::size_t start = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const char c = t[i];
    if (c == '\n' && i + 1 < t.size() && t[i + 1] == '\n') {
      push(start, i);
      start = i + 2;
      ++i;
      continue;
    }
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (j < t.size() && (t[j] == '"' || t[j] == '\'' || t[j] == ')')) ++j;
    bool boundary = false;
    if (j >= t.size()) {
      boundary = true;
    } else if (text::is_space(t[j])) {
      std::size_t k = j;
      while (k < t.size() && text::is_space(t[k])) ++k;
      boundary = k >= t.size() || text::is_upper(t[k]) || text::is_digit(t[k]);
    }
    if (!boundary) continue;
    if (c == '.') {
      const std::size_t ws = detail::word_start(t, i + 1);
      const std::string_view word = t.substr(ws, i + 1 - ws);
      if (detail::is_abbreviation(word)) continue;
      if (in_refang(i)) continue;
      if (detail::ioc_like(word.substr(0, word.size() - 1)) && i + 1 < t.size() && !text::is_space(t[i + 1]))
        continue;
    }
    push(start, j);
    start = j;
    i = j - 1;
  }
  push(start, t.size());
  return nt;
}

namespace detail {

inline std::size_t leading_punct(std::string_view w) {
  static constexpr std::array<std::string_view, 8> kLead = {"(", "[", "{", "\"", "'", "<", "\xE2\x80\x9C", "\xE2\x80\x98"};
  for (auto p : kLead)
    if (w.size() > p.size() && w.substr(0, p.size()) == p) return p.size();
  return 0;
}

inline std::size_t trailing_punct(std::string_view w) {
  static constexpr std::array<std::string_view, 14> kTrail = {".", ",", ";", ":", "!", "?", ")", "]", "}",
                                                              "\"", "'", ">", "\xE2\x80\x9D", "\xE2\x80\x99"};
  for (auto p : kTrail)
    if (w.size() > p.size() && w.substr(w.size() - p.size()) == p) return p.size();
  return 0;
}

}  // namespace detail

/// Whitespace split, then leading/trailing punctuation split off as separate
/// tokens. Offsets are relative to `sentence` shifted by `base`.
inline std::vector<TextToken> tokenize(std::string_view sentence, std::size_t base = 0) {
  std::vector<TextToken> tokens;
  std::size_t i = 0;
  while (i < sentence.size()) {
    while (i < sentence.size() && text::is_space(sentence[i])) ++i;
    if (i >= sentence.size()) break;
    std::size_t e = i;
    while (e < sentence.size() && !text::is_space(sentence[e])) ++e;
    const std::size_t word_end = e;

    std::size_t b = i;
    std::vector<TextToken> trailing;
    std::size_t n;
    while ((n = detail::leading_punct(sentence.substr(b, e - b))) > 0) {
      tokens.push_back({std::string(sentence.substr(b, n)), {base + b, base + b + n}});
      b += n;
    }
    for (;;) {
      const std::string_view w = sentence.substr(b, e - b);
      if (detail::is_abbreviation(w)) break;
      n = detail::trailing_punct(w);
      if (n == 0) break;
      trailing.push_back({std::string(sentence.substr(e - n, n)), {base + e - n, base + e}});
      e -= n;
    }
    if (e > b) tokens.push_back({std::string(sentence.substr(b, e - b)), {base + b, base + e}});
    tokens.insert(tokens.end(), trailing.rbegin(), trailing.rend());
    i = word_end;
  }
  return tokens;
}

inline std::vector<TextToken> tokenize(const NormalizedText& nt, Span sentence) {
  return tokenize(nt.slice(sentence), sentence.start);
}

/// Full text preparation: HTML stripping when needed, normalization and
/// sentence segmentation.
inline NormalizedText prepare(const RawDocument& doc) {
  if (doc.format == DocFormat::Html) return split_sentences(normalize(strip_html(doc)));
  return split_sentences(normalize(doc.content));
}

}  // namespace stixnet
