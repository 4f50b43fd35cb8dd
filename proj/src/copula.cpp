#include "stochdrive/copula.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "stochdrive/errors.hpp"
#include "stochdrive/kv_file.hpp"

namespace stochdrive {

namespace {

constexpr double kUClamp = 1e-12;
constexpr std::string_view kMagic = "stochdrive-copula";
constexpr int kFormatVersion = 1;

double clamp_u(double u) { return std::clamp(u, kUClamp, 1.0 - kUClamp); }

}  // namespace

void CopulaModel::validate() const {
  const auto d = static_cast<Eigen::Index>(dim());
  if (d == 0 || marginals.size() != feature_set(phase).size()) {
    throw FitError("copula dimension does not match the phase feature set");
  }
  if (correlation.rows() != d || correlation.cols() != d) {
    throw FitError("correlation matrix has the wrong shape");
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::abs(correlation(i, i) - 1.0) > 1e-9) {
      throw FitError("correlation diagonal must be 1");
    }
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(correlation(i, j) - correlation(j, i)) > 1e-12) {
        throw FitError("correlation matrix is not symmetric");
      }
    }
  }
  if (Eigen::LLT<Eigen::MatrixXd>(correlation).info() != Eigen::Success) {
    throw FitError("correlation matrix is not positive definite");
  }
  if (!(dof > 2.0)) throw FitError("copula dof must be > 2");
}

Eigen::MatrixXd CopulaModel::implied_kendall_tau() const {
  return correlation.unaryExpr(
      [](double r) { return 2.0 / std::numbers::pi * std::asin(r); });
}

std::vector<double> dof_grid() {
  std::vector<double> g = {2.5};
  for (int v = 3; v <= 30; ++v) g.push_back(v);
  g.push_back(std::numeric_limits<double>::infinity());
  return g;
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw DomainError("kendall tau needs two equal series of length >= 2");
  }
  const std::size_t n = x.size();
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) continue;
      if (dx == 0.0) {
        ++ties_x;
      } else if (dy == 0.0) {
        ++ties_y;
      } else if ((dx > 0.0) == (dy > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double n1 = static_cast<double>(concordant + discordant + ties_x);
  const double n2 = static_cast<double>(concordant + discordant + ties_y);
  if (n1 == 0.0 || n2 == 0.0) return 0.0;
  return static_cast<double>(concordant - discordant) / std::sqrt(n1 * n2);
}

Eigen::MatrixXd nearest_correlation(const Eigen::MatrixXd& m,
                                    double min_eigenvalue) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(min_eigenvalue);
  Eigen::MatrixXd r =
      es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  const Eigen::VectorXd s = r.diagonal().cwiseSqrt().cwiseInverse();
  r = s.asDiagonal() * r * s.asDiagonal();
  r = 0.5 * (r + r.transpose());
  r.diagonal().setOnes();
  return r;
}

double copula_log_likelihood(const Eigen::MatrixXd& u,
                             const Eigen::MatrixXd& correlation, double dof) {
  const auto n = u.rows();
  const auto d = u.cols();
  Eigen::LLT<Eigen::MatrixXd> llt(correlation);
  if (llt.info() != Eigen::Success) {
    throw FitError("correlation matrix is not positive definite");
  }
  const Eigen::MatrixXd L = llt.matrixL();
  const double log_det = 2.0 * L.diagonal().array().log().sum();
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(d, d));

  double total = 0.0;
  Eigen::VectorXd x(d);
  if (std::isinf(dof)) {
    const boost::math::normal_distribution<double> normal;
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) {
        x(c) = boost::math::quantile(normal, clamp_u(u(r, c)));
      }
      total += -0.5 * log_det - 0.5 * (x.dot(inv * x) - x.squaredNorm());
    }
    return total / static_cast<double>(n);
  }
  const boost::math::students_t_distribution<double> t(dof);
  const double dd = static_cast<double>(d);
  const double norm = std::lgamma(0.5 * (dof + dd)) +
                      (dd - 1.0) * std::lgamma(0.5 * dof) -
                      dd * std::lgamma(0.5 * (dof + 1.0)) - 0.5 * log_det;
  for (Eigen::Index r = 0; r < n; ++r) {
    double marg = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) {
      x(c) = boost::math::quantile(t, clamp_u(u(r, c)));
      marg += std::log1p(x(c) * x(c) / dof);
    }
    total += norm - 0.5 * (dof + dd) * std::log1p(x.dot(inv * x) / dof) +
             0.5 * (dof + 1.0) * marg;
  }
  return total / static_cast<double>(n);
}

CopulaModel fit_copula(std::span<const WeightVector> weights,
                       BandwidthRule rule) {
  if (weights.empty()) throw FitError("empty weight cluster");
  const PhaseLabel phase = weights.front().phase();
  const auto features = feature_set(phase);
  const std::size_t dim = features.size();
  const std::size_t needed = std::max<std::size_t>(dim + 1, 5);
  if (weights.size() < needed) {
    throw FitError(fmt::format(
        "{} cluster has {} weight vectors; at least {} are needed",
        to_string(phase), weights.size(), needed));
  }
  for (const auto& w : weights) {
    if (w.phase() != phase || w.weights.size() != dim) {
      throw FitError("weight vectors in a cluster must share a feature set");
    }
  }

  const auto n = static_cast<Eigen::Index>(weights.size());
  const auto d = static_cast<Eigen::Index>(dim);
  std::vector<std::vector<double>> columns(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    for (const auto& w : weights) columns[j].push_back(w.weights.values[j]);
    const auto [lo, hi] =
        std::minmax_element(columns[j].begin(), columns[j].end());
    const double scale = std::max({1.0, std::abs(*lo), std::abs(*hi)});
    if (*hi - *lo <= 1e-12 * scale) {
      throw FitError(fmt::format(
          "degenerate marginal: every {} weight of the {} cluster equals {}",
          to_string(features[j]), to_string(phase), *lo));
    }
  }

  CopulaModel model;
  model.phase = phase;
  Eigen::MatrixXd u(n, d);
  for (std::size_t j = 0; j < dim; ++j) {
    model.marginals.push_back(KdeMarginal::fit(columns[j], rule));
    for (Eigen::Index r = 0; r < n; ++r) {
      u(r, static_cast<Eigen::Index>(j)) = clamp_u(
          model.marginals[j].cdf(columns[j][static_cast<std::size_t>(r)]));
    }
  }

  Eigen::MatrixXd rho = Eigen::MatrixXd::Identity(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double tau = kendall_tau(columns[static_cast<std::size_t>(i)],
                                     columns[static_cast<std::size_t>(j)]);
      rho(i, j) = rho(j, i) = std::sin(0.5 * std::numbers::pi * tau);
    }
  }
  model.correlation = nearest_correlation(rho);

  double best = -std::numeric_limits<double>::infinity();
  for (double nu : dof_grid()) {
    const double ll = copula_log_likelihood(u, model.correlation, nu);
    if (ll > best) {
      best = ll;
      model.dof = nu;
    }
  }
  model.validate();
  return model;
}

WeightVector sample_weight(const CopulaModel& model, std::mt19937_64& rng) {
  const auto d = static_cast<Eigen::Index>(model.dim());
  const Eigen::MatrixXd L =
      Eigen::LLT<Eigen::MatrixXd>(model.correlation).matrixL();
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z(i) = normal(rng);
  const Eigen::VectorXd x = L * z;

  WeightVector w;
  w.weights.phase = model.phase;
  w.weights.values.resize(model.dim());
  if (model.gaussian()) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double u = clamp_u(standard_normal_cdf(x(i)));
      w.weights.values[static_cast<std::size_t>(i)] =
          model.marginals[static_cast<std::size_t>(i)].inverse_cdf(u);
    }
    return w;
  }
  std::chi_squared_distribution<double> chi2(model.dof);
  const double scale = std::sqrt(model.dof / chi2(rng));
  const boost::math::students_t_distribution<double> t(model.dof);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double u = clamp_u(boost::math::cdf(t, x(i) * scale));
    w.weights.values[static_cast<std::size_t>(i)] =
        model.marginals[static_cast<std::size_t>(i)].inverse_cdf(u);
  }
  return w;
}

std::vector<WeightVector> sample_weights(const CopulaModel& model,
                                         std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample count must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<WeightVector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_weight(model, rng));
  return out;
}

std::string format_copula(const CopulaModel& m) {
  std::string out = fmt::format("{} {}\n", kMagic, kFormatVersion);
  out += fmt::format("phase = {}\n", to_string(m.phase));
  out += fmt::format("dim = {}\n", m.dim());
  out += fmt::format("dof = {}\n", m.gaussian() ? std::string("inf")
                                                 : fmt::format("{}", m.dof));
  for (Eigen::Index i = 0; i < m.correlation.rows(); ++i) {
    std::string row;
    for (Eigen::Index j = 0; j < m.correlation.cols(); ++j) {
      if (j > 0) row += ' ';
      row += fmt::format("{}", m.correlation(i, j));
    }
    out += fmt::format("correlation = {}\n", row);
  }
  const auto features = feature_set(m.phase);
  for (std::size_t j = 0; j < m.dim(); ++j) {
    const auto& k = m.marginals[j];
    out += fmt::format("marginal = {} {} {}\n", to_string(features[j]),
                       k.bandwidth(), k.points().size());
    for (double p : k.points()) out += fmt::format("{}\n", p);
  }
  return out;
}

CopulaModel parse_copula(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto fail = [](const std::string& why) {
    return FitError("copula model file: " + why);
  };
  if (!std::getline(in, line) ||
      trim(line) != fmt::format("{} {}", kMagic, kFormatVersion)) {
    throw fail("missing or unsupported version header");
  }
  auto next_kv = [&](std::string_view key) {
    if (!std::getline(in, line)) throw fail(fmt::format("missing '{}'", key));
    const auto eq = line.find('=');
    if (eq == std::string::npos || trim(std::string_view(line).substr(0, eq)) != key) {
      throw fail(fmt::format("expected '{}', got '{}'", key, line));
    }
    return std::string(trim(std::string_view(line).substr(eq + 1)));
  };
  auto numbers = [&](const std::string& s) {
    std::vector<double> v;
    std::istringstream ss(s);
    std::string tok;
    while (ss >> tok) v.push_back(parse_double(tok, "copula"));
    return v;
  };

  CopulaModel m;
  const auto phase = phase_from_string(next_kv("phase"));
  if (!phase) throw fail("unknown phase");
  m.phase = *phase;
  const auto dim = static_cast<std::size_t>(parse_uint(next_kv("dim"), "dim"));
  const auto features = feature_set(m.phase);
  if (dim != features.size()) throw fail("dim does not match phase");
  m.dof = parse_double(next_kv("dof"), "dof");
  const auto d = static_cast<Eigen::Index>(dim);
  m.correlation.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto row = numbers(next_kv("correlation"));
    if (row.size() != dim) throw fail("correlation row has wrong length");
    for (Eigen::Index j = 0; j < d; ++j) {
      m.correlation(i, j) = row[static_cast<std::size_t>(j)];
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    std::istringstream hdr(next_kv("marginal"));
    std::string name, bw, count;
    if (!(hdr >> name >> bw >> count) || name != to_string(features[j])) {
      throw fail("bad marginal header");
    }
    const auto n = parse_uint(count, "marginal");
    std::vector<double> points;
    points.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      if (!std::getline(in, line)) throw fail("truncated marginal points");
      points.push_back(parse_double(line, "marginal"));
    }
    m.marginals.emplace_back(std::move(points), parse_double(bw, "bandwidth"));
  }
  m.validate();
  return m;
}

void save_copula(const std::filesystem::path& path, const CopulaModel& model) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << format_copula(model);
}

CopulaModel load_copula(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FitError(fmt::format("cannot open '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_copula(buf.str());
}

}  // namespace stochdrive
