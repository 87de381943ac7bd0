#pragma once

#include <string_view>

namespace sciqa {

/// Contents of a data file compiled into the library, keyed by its path
/// relative to data/ (e.g. "lexicon/verbs.txt"). Throws if unknown.
std::string_view builtin_resource(std::string_view name);

}  // namespace sciqa
