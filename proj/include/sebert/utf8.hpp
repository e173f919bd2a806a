#pragma once

#include <string>
#include <string_view>

namespace sebert::utf8 {

/// Decodes UTF-8 into code points; throws DataError on malformed input.
std::u32string decode(std::string_view bytes);
std::string encode(std::u32string_view text);
std::string encode(char32_t cp);

}  // namespace sebert::utf8
