#include <algorithm>
#include <numeric>

#include "d2stoch/bethe.hpp"

namespace d2stoch {

namespace {
constexpr cplx I{0.0, 1.0};
}

const std::vector<TableRow>& table1() {
  static const std::vector<TableRow> rows = {
      {{}, 0},
      {{-0.5}, 0},
      {{-0.5 + 0.5 * I}, 0},
      {{-0.5 - 0.5 * I}, 0},
      {{}, 1},
      {{-0.5}, 1},
      {{-0.5 + 0.5 * I}, 1},
      {{-0.5 - 0.5 * I}, 1},
      {{}, 2},
      {{-0.5 + 0.2887 * I, -0.5 - 0.2887 * I}, 0},
      {{-1.0, 0.0}, 0},
  };
  return rows;
}

const std::vector<TableRow>& table2() {
  static const std::vector<TableRow> rows = {
      {{}, 0},
      {{-0.5 - 1.2071 * I}, 0},
      {{-0.5 + 1.2071 * I}, 0},
      {{-0.5 - 0.2071 * I}, 0},
      {{-0.5 + 0.2071 * I}, 0},
      {{-0.5 - 0.8660 * I, -0.5 + 0.8660 * I}, 0},
      {{-0.5 - 0.0841 * I, -0.5 + 0.7021 * I}, 0},
      {{-0.5 + 0.0841 * I, -0.5 - 0.7021 * I}, 0},
      {{-1.1360 + 0.8090 * I, 0.1360 + 0.8090 * I}, 0},
      {{-1.1360 - 0.8090 * I, 0.1360 - 0.8090 * I}, 0},
      {{-1.0, 0.0}, 0},
  };
  return rows;
}

const std::vector<TableRow>& table3(Lane lane, int branch) {
  static const std::vector<TableRow> muPlus = {
      {{}, 0},
      {{-0.5 - 1.3185 * I}, 0},
      {{-0.5 - 0.2299 * I}, 0},
      {{-0.5 - 0.5417 * I}, 0},
      {{0.0257 + 0.8645 * I, 0.0257 - 0.8645 * I}, 0},
      {{0.2945 * I, -0.2945 * I}, 0},
      {{-0.5 + 0.2488 * I, -0.5 + 0.7455 * I}, 0},
      {{0.2548 * I, -0.2548 * I, 1.8004}, 0},
  };
  static const std::vector<TableRow> muMinus = {
      {{}, 0},
      {{-0.5 - 2.4379 * I}, 0},
      {{-0.5 - 0.3337 * I}, 0},
      {{0.8758}, 0},
      {{0.0061 - 0.3777 * I, 0.0061 + 0.3777 * I}, 0},
      {{-0.5 + 0.8437 * I, 0.6777}, 0},
      {{0.8129 + 0.2412 * I, 0.8129 - 0.2412 * I}, 0},
      {{0.6523 + 0.4982 * I, 0.6523 - 0.4982 * I, 0.6926}, 0},
  };
  static const std::vector<TableRow> nuPlus = {
      {{}, 0},
      {{-0.5 - 1.0006 * I}, 0},
      {{-0.5 - 0.3946 * I}, 0},
      {{-0.5 - 0.1510 * I}, 0},
      {{-0.5 - 0.1664 * I, -0.5 + 0.5070 * I}, 0},
      {{0.0002 - 0.3080 * I, 0.0002 + 0.3080 * I}, 0},
      {{0.4431, -0.4576}, 0},
      {{-0.5 + 0.0842 * I, -0.5 + 1.7186 * I, 0.5180}, 0},
  };
  static const std::vector<TableRow> nuMinus = {
      {{}, 0},
      {{1.0494}, 0},
      {{-0.5 + 0.3582 * I}, 0},
      {{0.5734}, 0},
      {{0.1395 + 0.7199 * I, 0.1395 - 0.7199 * I}, 0},
      {{0.4961, -0.5 + 0.9399 * I}, 0},
      {{0.5554 - 0.1324 * I, 0.5554 + 0.1324 * I}, 0},
      {{0.4880 - 0.3351 * I, 0.4880 + 0.3351 * I, 0.4758}, 0},
  };
  if (lane == Lane::Sigma) return branch > 0 ? muPlus : muMinus;
  return branch > 0 ? nuPlus : nuMinus;
}

namespace {

bool close4(cplx a, cplx b, double tol) {
  return std::abs(a.real() - b.real()) <= tol && std::abs(a.imag() - b.imag()) <= tol;
}

bool root_close(const TQCase& c, cplx printed, cplx found, double tol) {
  if (close4(printed, found, tol)) return true;
  if (c.tag == BetheCase::OpenSym && close4(printed, -found - 1.0, tol)) return true;
  return false;
}

}  // namespace

bool row_matches(const TQCase& c, const TableRow& row, const RootSet& rs, double tol) {
  if (row.infCount != rs.infCount || row.finite.size() != rs.finite.size()) return false;
  std::vector<int> perm(rs.finite.size());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ok = true;
    for (std::size_t i = 0; i < perm.size() && ok; ++i)
      ok = root_close(c, row.finite[i], rs.finite[perm[i]], tol);
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

}  // namespace d2stoch
