#include "isacsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "isacsim/steering.hpp"

namespace isacsim {

Precoder Precoder::from_codewords(const std::vector<int>& codes,
                                  const ComplexMatrix& codebook) {
  Precoder p;
  p.f.resize(codebook.rows(), static_cast<Eigen::Index>(codes.size()));
  p.codeword = codes;
  for (size_t u = 0; u < codes.size(); ++u) {
    if (codes[u] < 0 || codes[u] >= codebook.cols()) {
      throw std::out_of_range("Precoder: codeword index outside the codebook");
    }
    p.f.col(static_cast<Eigen::Index>(u)) = codebook.col(codes[u]);
  }
  return p;
}

Precoder Precoder::random(int num_users, const ComplexMatrix& codebook, Rng& rng) {
  std::vector<int> codes(static_cast<size_t>(num_users));
  for (auto& c : codes) {
    c = static_cast<int>(rng.uniform_int(static_cast<uint32_t>(codebook.cols())));
  }
  return from_codewords(codes, codebook);
}

void Precoder::set_column(int user, int code, const ComplexMatrix& codebook) {
  if (user < 0 || user >= num_users()) {
    throw std::out_of_range("Precoder: user index outside the precoder");
  }
  if (code < 0 || code >= codebook.cols()) {
    throw std::out_of_range("Precoder: codeword index outside the codebook");
  }
  f.col(user) = codebook.col(code);
  codeword[static_cast<size_t>(user)] = code;
}

bool Precoder::constant_modulus(double tol) const {
  for (Eigen::Index j = 0; j < f.cols(); ++j) {
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      if (std::abs(std::abs(f(i, j)) - 1.0) > tol) return false;
    }
  }
  return true;
}

double alpha_amplitude(double f_m_hz, double range_m, const ScenarioConfig& cfg) {
  const double range = std::max(range_m, cfg.alpha_range_floor);
  const double db = 5.0 * std::log10(cfg.sigma_rcs) - 10.0 * std::log10(f_m_hz / 1e9) -
                    20.0 * std::log10(range) + 110.0;
  return std::pow(10.0, db / 20.0);
}

RealVector subcarrier_frequencies(const ScenarioConfig& cfg) {
  RealVector f(cfg.m_subcarriers);
  const double mid = (cfg.m_subcarriers - 1) / 2.0;
  for (int m = 0; m < cfg.m_subcarriers; ++m) {
    f[m] = cfg.f_c + (m - mid) * cfg.delta_f;
  }
  return f;
}

ComplexVector sample_alpha(double range_m, const ScenarioConfig& cfg, Rng& rng) {
  const RealVector freqs = subcarrier_frequencies(cfg);
  ComplexVector alpha(cfg.m_subcarriers);
  for (int m = 0; m < cfg.m_subcarriers; ++m) {
    const double amp = alpha_amplitude(freqs[m], range_m, cfg);
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    alpha[m] = amp * cplx(std::cos(phase), std::sin(phase));
  }
  return alpha;
}

RealMatrix sinr_table(const std::vector<ComplexMatrix>& blocks, const ComplexMatrix& f,
                      const ScenarioConfig& cfg) {
  const int m_sc = cfg.m_subcarriers;
  const int u_cnt = static_cast<int>(f.cols());
  if (static_cast<int>(blocks.size()) != m_sc * m_sc) {
    throw std::invalid_argument("sinr_table: expected M*M coupling blocks");
  }

  const double noise = cfg.n_t * u_cnt * m_sc * cfg.sigma_c2 / cfg.p_t;
  RealMatrix table(u_cnt, m_sc);

  // Coupled gains G_{m,k} = H_m[k] * F; row u, column i is the gain from
  // user i's stream on input subcarrier k into user u's output subcarrier m.
  std::vector<ComplexMatrix> g(blocks.size());
  for (size_t i = 0; i < blocks.size(); ++i) g[i] = blocks[i] * f;

  for (int m = 0; m < m_sc; ++m) {
    const ComplexMatrix& g_mm = g[static_cast<size_t>(m) * m_sc + m];
    for (int u = 0; u < u_cnt; ++u) {
      const double signal = std::norm(g_mm(u, u));
      double ici = 0.0;
      for (int k = 0; k < m_sc; ++k) {
        if (k == m) continue;
        ici += g[static_cast<size_t>(m) * m_sc + k].row(u).squaredNorm();
      }
      double iui = 0.0;
      for (int i = 0; i < u_cnt; ++i) {
        if (i != u) iui += std::norm(g_mm(u, i));
      }
      table(u, m) = signal / (ici + iui + noise);
    }
  }
  return table;
}

double spectral_efficiency(const std::vector<RealMatrix>& sinr_per_symbol,
                           const ScenarioConfig& cfg) {
  if (sinr_per_symbol.empty()) {
    throw std::invalid_argument("spectral_efficiency: no symbols");
  }
  const double inv_ln2 = 1.0 / std::log(2.0);
  double acc = 0.0;
  for (const RealMatrix& table : sinr_per_symbol) {
    acc += (table.array() + 1.0).log().sum() * inv_ln2;
  }
  const double l_sym = static_cast<double>(sinr_per_symbol.size());
  return acc / (l_sym * cfg.symbol_period() * cfg.m_subcarriers * cfg.delta_f);
}

FisherGeometry fisher_geometry(const ComplexMatrix& f, double theta,
                               const ScenarioConfig& cfg) {
  const double scale =
      cfg.p_t / (static_cast<double>(cfg.n_t) * f.cols() * cfg.m_subcarriers);

  const ComplexVector a_t = steering_vector(theta, cfg.n_t);
  const ComplexVector da_t = steering_derivative(theta, cfg.n_t);
  const ComplexVector a_r = steering_vector(theta, cfg.n_r);
  const ComplexVector da_r = steering_derivative(theta, cfg.n_r);

  // With A = a_r a_t^H the traces collapse to quadratic forms in F^H a_t and
  // F^H da_t; no N_r x N_t products are needed.
  const ComplexVector w = f.adjoint() * a_t;
  const ComplexVector dw = f.adjoint() * da_t;
  const double q1 = scale * w.squaredNorm();
  const double q2 = scale * dw.squaredNorm();
  const cplx q3 = scale * w.dot(dw);  // a_t^H R da_t
  const cplx c1 = da_r.dot(a_r);      // da_r^H a_r
  const double n_dr = da_r.squaredNorm();

  FisherGeometry geom;
  geom.t_aa = q1;
  geom.t_dd = n_dr * q1 + 2.0 * std::real(std::conj(c1) * q3) + q2;
  geom.t_da = c1 * q1 + q3;
  geom.degenerate = !(geom.t_aa > 1e-300);
  if (geom.degenerate) {
    geom.t_dd = 0.0;
    geom.t_da = cplx(0.0, 0.0);
  }
  return geom;
}

double fisher_subcarrier(const FisherGeometry& geom, cplx alpha_m,
                         const ScenarioConfig& cfg) {
  if (geom.degenerate) return 0.0;
  // Gram determinant; non-negative up to rounding, so clamp the residue.
  const double numer = std::max(geom.t_dd * geom.t_aa - std::norm(geom.t_da), 0.0);
  return 2.0 * std::norm(alpha_m) * numer / (cfg.sigma_z2 * geom.t_aa);
}

double crlb_angle(const ComplexMatrix& f, const TargetState& target,
                  const ScenarioConfig& cfg, bool* degenerate) {
  if (target.alpha.size() != cfg.m_subcarriers) {
    throw std::invalid_argument("crlb_angle: alpha size mismatch");
  }
  const FisherGeometry geom = fisher_geometry(f, target.kin.angle_rad, cfg);
  double info = 0.0;
  for (int m = 0; m < cfg.m_subcarriers; ++m) {
    info += fisher_subcarrier(geom, target.alpha[m], cfg);
  }
  if (degenerate) *degenerate = geom.degenerate || !(info > 0.0);
  if (!(info > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / info;
}

double averaged_crlb(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("averaged_crlb: empty span");
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

std::vector<ComplexMatrix> simulate_echo(const ComplexMatrix& f, const TargetState& target,
                                         const ScenarioConfig& cfg, int num_symbols,
                                         Rng& rng) {
  const int m_sc = cfg.m_subcarriers;
  const int u_cnt = static_cast<int>(f.cols());
  const double amp = std::sqrt(cfg.p_t / (static_cast<double>(cfg.n_t) * u_cnt * m_sc));

  const ComplexVector a_t = steering_vector(target.kin.angle_rad, cfg.n_t);
  const ComplexVector a_r = steering_vector(target.kin.angle_rad, cfg.n_r);

  // QPSK alphabet keeps E[s s^H] = I exactly in distribution.
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const cplx qpsk[4] = {{inv_sqrt2, inv_sqrt2},
                        {inv_sqrt2, -inv_sqrt2},
                        {-inv_sqrt2, inv_sqrt2},
                        {-inv_sqrt2, -inv_sqrt2}};

  std::vector<ComplexMatrix> echo(static_cast<size_t>(num_symbols));
  for (int l = 0; l < num_symbols; ++l) {
    ComplexMatrix y(cfg.n_r, m_sc);
    for (int m = 0; m < m_sc; ++m) {
      ComplexVector s(u_cnt);
      for (int u = 0; u < u_cnt; ++u) s[u] = qpsk[rng.uniform_int(4)];
      const cplx proj = a_t.dot(amp * (f * s));  // a_t^H x_m
      const cplx gain = target.alpha[m] * proj;
      for (int r = 0; r < cfg.n_r; ++r) {
        y(r, m) = gain * a_r[r] + rng.cnormal(cfg.sigma_z2);
      }
    }
    echo[static_cast<size_t>(l)] = std::move(y);
  }
  return echo;
}

ConstraintReport check_constraints(const std::vector<RealMatrix>& sinr_per_symbol,
                                   const Precoder& precoder, const ScenarioConfig& cfg) {
  ConstraintReport report;
  report.constant_modulus = precoder.constant_modulus();
  for (const RealMatrix& table : sinr_per_symbol) {
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      for (Eigen::Index i = 0; i < table.rows(); ++i) {
        ++report.entries;
        report.min_sinr = std::min(report.min_sinr, table(i, j));
        if (table(i, j) < cfg.sinr_threshold) ++report.violations;
      }
    }
  }
  return report;
}

}  // namespace isacsim
