#include "tvol/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tvol/rng.hpp"

namespace tvol {

void SampledPath::resize(std::size_t cells) {
  n = cells;
  for (auto* v : {&dx1, &dx2, &dd1, &dd2, &db1, &db2, &dj1, &dj2}) v->assign(cells, 0.0);
  jump_counts1.assign(cells, 0);
  jump_counts2.assign(cells, 0);
}

GridMoments::GridMoments(const ModelSpec& model, std::size_t n) : model_(model) {
  if (n == 0) throw std::invalid_argument("grid size n must be >= 1");
  for (auto* v : {&var1_, &var2_, &cov_, &drift1_, &drift2_, &l11_, &l21_, &l22_}) v->resize(n);
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = static_cast<double>(k) / dn;
    const double b = static_cast<double>(k + 1) / dn;
    var1_[k] = integrate_product(model_, ProductKind::Var1, a, b);
    var2_[k] = integrate_product(model_, ProductKind::Var2, a, b);
    cov_[k] = integrate_product(model_, ProductKind::Cov, a, b);
    drift1_[k] = model_.drift1().integrate(a, b);
    drift2_[k] = model_.drift2().integrate(a, b);
    l11_[k] = std::sqrt(var1_[k]);
    if (l11_[k] > 0.0) {
      l21_[k] = cov_[k] / l11_[k];
      l22_[k] = std::sqrt(std::max(0.0, var2_[k] - l21_[k] * l21_[k]));
    } else {
      l21_[k] = 0.0;
      l22_[k] = std::sqrt(var2_[k]);
    }
  }
}

namespace {

double draw_size(Rng& rng, const JumpSizeLaw& law) {
  return std::visit(
      [&](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, GaussianJumps>) {
          return l.mean + l.stddev * rng.normal();
        } else if constexpr (std::is_same_v<T, FixedSignedJumps>) {
          return rng.uniform() < l.up_probability ? l.magnitude : -l.magnitude;
        } else {
          // Inverse CDF with u in (-1/2, 1/2).
          const double u = rng.uniform() - 0.5;
          const double mag = -l.scale * std::log1p(-2.0 * std::abs(u));
          return u < 0.0 ? -mag : mag;
        }
      },
      law);
}

}  // namespace

void simulate_path(const GridMoments& grid, std::uint64_t seed, SimulationResult& out) {
  const ModelSpec& model = grid.model();
  const std::size_t n = grid.n();
  auto& p = out.path;
  p.resize(n);
  p.seed = seed;
  out.truth = {};

  Rng rng(seed);
  const double dn = static_cast<double>(n);
  const double mean1 = model.jumps1().intensity / dn;
  const double mean2 = model.jumps2().intensity / dn;
  const bool common = model.coupling() == JumpCoupling::CommonClock;

  for (std::size_t k = 0; k < n; ++k) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    p.dd1[k] = grid.l11(k) * z1;
    p.dd2[k] = grid.l21(k) * z1 + grid.l22(k) * z2;
    p.db1[k] = grid.drift1(k);
    p.db2[k] = grid.drift2(k);

    std::uint64_t c1 = rng.poisson(mean1);
    std::uint64_t c2 = common ? c1 : rng.poisson(mean2);
    p.jump_counts1[k] = static_cast<std::uint32_t>(c1);
    p.jump_counts2[k] = static_cast<std::uint32_t>(c2);

    double j1 = 0.0, j2 = 0.0;
    if (common) {
      for (std::uint64_t i = 0; i < c1; ++i) {
        const double y1 = draw_size(rng, model.jumps1().size_law);
        const double y2 = draw_size(rng, model.jumps2().size_law);
        j1 += y1;
        j2 += y2;
        out.truth.sum_sq1 += y1 * y1;
        out.truth.sum_sq2 += y2 * y2;
        out.truth.sum_cross += y1 * y2;
      }
    } else {
      for (std::uint64_t i = 0; i < c1; ++i) {
        const double y = draw_size(rng, model.jumps1().size_law);
        j1 += y;
        out.truth.sum_sq1 += y * y;
      }
      for (std::uint64_t i = 0; i < c2; ++i) {
        const double y = draw_size(rng, model.jumps2().size_law);
        j2 += y;
        out.truth.sum_sq2 += y * y;
      }
    }
    p.dj1[k] = j1;
    p.dj2[k] = j2;
    p.dx1[k] = p.dd1[k] + p.db1[k] + p.dj1[k];
    p.dx2[k] = p.dd2[k] + p.db2[k] + p.dj2[k];
  }
}

SimulationResult simulate_path(const ModelSpec& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("simulate_path: n must be >= 1");
  GridMoments grid(model, n);
  SimulationResult out;
  simulate_path(grid, seed, out);
  return out;
}

namespace {

void put(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

void write_path_csv(std::ostream& os, const SampledPath& path) {
  os << "# seed=" << path.seed << " n=" << path.n << "\n";
  os << "k,dx1,dx2,dd1,dd2,db1,db2,dj1,dj2,jc1,jc2\n";
  for (std::size_t k = 0; k < path.n; ++k) {
    os << (k + 1);
    for (double v : {path.dx1[k], path.dx2[k], path.dd1[k], path.dd2[k], path.db1[k], path.db2[k],
                     path.dj1[k], path.dj2[k]}) {
      os << ',';
      put(os, v);
    }
    os << ',' << path.jump_counts1[k] << ',' << path.jump_counts2[k] << '\n';
  }
}

SampledPath read_path_csv(std::istream& is) {
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (header.empty()) {
      header = fields;
      continue;
    }
    if (fields.size() != header.size()) {
      throw std::invalid_argument("path csv line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields");
    }
    std::vector<double> row;
    for (const auto& field : fields) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw std::invalid_argument("path csv line " + std::to_string(line_no) + ": bad number '" +
                                    field + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  auto column = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int ck = column("k"), c1 = column("dx1"), c2 = column("dx2");
  if (ck < 0 || c1 < 0 || c2 < 0) throw std::invalid_argument("path csv needs columns k, dx1, dx2");

  SampledPath path;
  path.resize(rows.size());
  struct Opt {
    const char* name;
    std::vector<double>* dst;
  };
  const Opt optional_cols[] = {{"dd1", &path.dd1}, {"dd2", &path.dd2}, {"db1", &path.db1},
                               {"db2", &path.db2}, {"dj1", &path.dj1}, {"dj2", &path.dj2}};
  const int cj1 = column("jc1"), cj2 = column("jc2");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i][ck] != static_cast<double>(i + 1)) {
      throw std::invalid_argument("path csv: k must run 1..n in order");
    }
    path.dx1[i] = rows[i][c1];
    path.dx2[i] = rows[i][c2];
    for (const auto& o : optional_cols) {
      if (int c = column(o.name); c >= 0) (*o.dst)[i] = rows[i][c];
    }
    if (cj1 >= 0) path.jump_counts1[i] = static_cast<std::uint32_t>(rows[i][cj1]);
    if (cj2 >= 0) path.jump_counts2[i] = static_cast<std::uint32_t>(rows[i][cj2]);
  }
  return path;
}

SampledPath read_path_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("cannot open path file '" + file.string() + "'");
  return read_path_csv(in);
}

}  // namespace tvol
