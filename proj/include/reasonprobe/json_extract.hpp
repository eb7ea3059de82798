#pragma once

#include <optional>
#include <string_view>

namespace reasonprobe {

/// The first top-level balanced `{...}` region of `text`, honouring JSON
/// string quoting. Empty optional when there is no complete object.
std::optional<std::string_view> outermost_object(std::string_view text);

}  // namespace reasonprobe
