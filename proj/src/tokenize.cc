#include "aeenc/tokenize.h"

#include <cstdint>

namespace aeenc {
namespace {

bool IsSeparator(char32_t cp) {
  if (cp < 0x80) {
    const auto c = static_cast<unsigned char>(cp);
    if (c <= 0x20 || c == 0x7f) return true;
    return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) ||
           (c >= 0x5b && c <= 0x60) || (c >= 0x7b && c <= 0x7e);
  }
  if (cp == 0x85 || cp == 0xa0 || cp == 0x1680 || cp == 0xfeff) return true;
  if (cp >= 0xa1 && cp <= 0xbf && cp != 0xaa && cp != 0xb2 && cp != 0xb3 &&
      cp != 0xb5 && cp != 0xb9 && cp != 0xba && cp != 0xbc && cp != 0xbd &&
      cp != 0xbe) {
    return true;
  }
  if (cp == 0xd7 || cp == 0xf7) return true;
  if (cp >= 0x2000 && cp <= 0x206f) return true;
  if (cp >= 0x3000 && cp <= 0x303f) return true;
  return false;
}

// Decodes one code point starting at text[pos]; advances pos. Invalid
// sequences decode byte-wise as U+FFFD-equivalent word characters.
char32_t NextCodePoint(std::string_view text, std::size_t& pos,
                       std::size_t& length) {
  const auto lead = static_cast<unsigned char>(text[pos]);
  std::size_t need = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    need = 0;
    cp = lead;
  } else if ((lead & 0xe0) == 0xc0) {
    need = 1;
    cp = lead & 0x1f;
  } else if ((lead & 0xf0) == 0xe0) {
    need = 2;
    cp = lead & 0x0f;
  } else if ((lead & 0xf8) == 0xf0) {
    need = 3;
    cp = lead & 0x07;
  } else {
    length = 1;
    ++pos;
    return 0xfffd;
  }
  if (pos + need >= text.size()) {
    length = 1;
    ++pos;
    return 0xfffd;
  }
  for (std::size_t i = 1; i <= need; ++i) {
    const auto c = static_cast<unsigned char>(text[pos + i]);
    if ((c & 0xc0) != 0x80) {
      length = 1;
      ++pos;
      return 0xfffd;
    }
    cp = (cp << 6) | (c & 0x3f);
  }
  length = need + 1;
  pos += length;
  return cp;
}

}  // namespace

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = pos;
    std::size_t length = 0;
    const char32_t cp = NextCodePoint(text, pos, length);
    if (IsSeparator(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (cp < 0x80) {
      char c = static_cast<char>(cp);
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      current.push_back(c);
    } else {
      current.append(text.substr(start, length));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

}  // namespace aeenc
