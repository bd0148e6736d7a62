// Polynomial JSON (canonical on-disk form) and the CLI expression parser.

#pragma once

#include "orbitavg/polysymbol.hpp"

#include <json.hpp>

#include <string>

namespace orbitavg {

/// {"n":.., "frame":"xk"|"yeta", "terms":[{"xexp":[..],"kexp":[..],
///  "re":"rational-or-float","im":".."}]}.  Exact coefficients with a
/// sqrt2 component carry additional "re_sqrt2"/"im_sqrt2" fields;
/// coefficients involving pi are emitted as floats.
nlohmann::json symbol_to_json(const PolySymbol& p);
PolySymbol symbol_from_json(const nlohmann::json& j);

std::string symbol_to_json_string(const PolySymbol& p);
PolySymbol symbol_from_json_string(const std::string& s);

PolySymbol load_symbol(const std::string& path);
void save_symbol(const PolySymbol& p, const std::string& path);

/// Parse "3/2*x1^2*k2 - i*x2".  Variables x1..xn,k1..kn (real-canonical)
/// or y1..yn,n1..nn (oscillator).  If n == 0 the dimension is inferred
/// from the highest variable index.
PolySymbol parse_expression(const std::string& text, int n = 0);

}  // namespace orbitavg
