#include "d2stoch/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace d2stoch::report {

std::string fmt12(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  if (x == 0.0) x = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  std::string s(buf);
  // snprintf follows LC_NUMERIC; force the '.' separator
  for (auto& ch : s)
    if (ch == ',') ch = '.';
  if (s == "-0") s = "0";
  return s;
}

double canon(double x) {
  if (!std::isfinite(x)) return x;
  const double y = std::strtod(fmt12(x).c_str(), nullptr);
  return y == 0.0 ? 0.0 : y;
}

ordered_json complex_json(cplx z) { return ordered_json::array({canon(z.real()), canon(z.imag())}); }

ordered_json vector_json(const RVector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(canon(v(i)));
  return a;
}

ordered_json vector_json(const CVector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(complex_json(v(i)));
  return a;
}

ordered_json roots_json(const std::vector<cplx>& roots) {
  ordered_json a = ordered_json::array();
  for (cplx z : roots) a.push_back(complex_json(z));
  return a;
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n") != std::string::npos) {
      out += '"';
      for (char ch : f) {
        if (ch == '"') out += '"';
        out += ch;
      }
      out += '"';
    } else {
      out += f;
    }
  }
  out += '\n';
  return out;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

void emit(const std::string& dir, const std::string& name, const std::string& text) {
  if (dir.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

}  // namespace d2stoch::report
