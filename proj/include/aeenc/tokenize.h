#ifndef AEENC_TOKENIZE_H_
#define AEENC_TOKENIZE_H_

#include <string>
#include <string_view>
#include <vector>

namespace aeenc {

// Lowercases ASCII letters and splits on whitespace and punctuation.
// Recognized separators are ASCII space/punctuation plus the common Unicode
// space and punctuation code points (Latin-1 punctuation, U+2000..U+206F,
// U+3000..U+303F). Other non-ASCII code points are kept verbatim inside
// tokens. Empty tokens are dropped.
std::vector<std::string> Tokenize(std::string_view text);

}  // namespace aeenc

#endif  // AEENC_TOKENIZE_H_
