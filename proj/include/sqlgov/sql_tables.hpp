#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sqlgov {

/// Lower-cased names of the tables a query reads (FROM lists and JOIN
/// targets), CTE names excluded, in order of first appearance. Token based,
/// so it also works on SQL that does not parse.
std::vector<std::string> referenced_tables(std::string_view sql);

}  // namespace sqlgov
