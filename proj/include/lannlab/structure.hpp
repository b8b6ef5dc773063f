#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lannlab/activation.hpp"

namespace lannlab {

/// Hidden widths and activation named by strings such as "L3M300_S"
/// (three layers of 300 sigmoid units) or "L3M(32,128,16)_T" (tanh).
/// Suffix letters: T tanh, S sigmoid.
struct NetworkStructure {
    std::vector<int> widths;
    Activation activation;
    friend bool operator==(const NetworkStructure&, const NetworkStructure&) = default;
};

/// Throws ParseError carrying the offending character offset.
NetworkStructure parse_structure(std::string_view text);
std::string to_string(const NetworkStructure& s);

}  // namespace lannlab
