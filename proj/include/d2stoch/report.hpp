#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "d2stoch/lintensor.hpp"

namespace d2stoch::report {

using nlohmann::ordered_json;

// 12 significant digits, locale independent; -0 prints as 0.
std::string fmt12(double x);
// The double that fmt12 prints, so JSON output is canonical.
double canon(double x);

ordered_json complex_json(cplx z);
ordered_json vector_json(const RVector& v);
ordered_json vector_json(const CVector& v);
ordered_json roots_json(const std::vector<cplx>& roots);

// One CSV line; fields containing a comma or quote are quoted.
std::string csv_line(const std::vector<std::string>& fields);

// Serialized JSON with two-space indent and canonical numbers.
std::string dump(const ordered_json& j);

// Writes text to dir/name (creating dir); dir empty writes to stdout.
void emit(const std::string& dir, const std::string& name, const std::string& text);

}  // namespace d2stoch::report
