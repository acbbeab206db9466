#include "mmep/channel.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mmep {

CellGains CellGains::uniform_cross_gain(int cells, int users, double cross_gain) {
  CellGains g;
  g.beta = Eigen::MatrixXd::Constant(cells, users, cross_gain);
  g.beta.row(0).setOnes();
  return g;
}

CMatrix build_spatial_corr(Eigen::Index antennas, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("build_spatial_corr: rho must lie in [0, 1)");
  if (antennas <= 0) throw std::invalid_argument("build_spatial_corr: antennas must be positive");
  CMatrix r(antennas, antennas);
  for (Eigen::Index i = 0; i < antennas; ++i)
    for (Eigen::Index j = 0; j < antennas; ++j)
      r(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  return r;
}

CMatrix build_rw(double symbol_energy, const CellGains& gains,
                 const std::vector<std::vector<CMatrix>>& interferer_corr) {
  if (static_cast<Eigen::Index>(interferer_corr.size()) + 1 != gains.cells())
    throw std::invalid_argument("build_rw: need correlation matrices for every interfering cell");
  Eigen::Index m = -1;
  CMatrix acc;
  for (Eigen::Index i = 1; i < gains.cells(); ++i) {
    const auto& cell = interferer_corr[static_cast<std::size_t>(i - 1)];
    if (static_cast<Eigen::Index>(cell.size()) != gains.users())
      throw std::invalid_argument("build_rw: need one correlation matrix per user");
    for (Eigen::Index k = 0; k < gains.users(); ++k) {
      const CMatrix& r = cell[static_cast<std::size_t>(k)];
      if (m < 0) {
        m = r.rows();
        acc = CMatrix::Zero(m, m);
      }
      if (r.rows() != m || r.cols() != m) throw std::invalid_argument("build_rw: inconsistent antenna count");
      acc += gains.beta(i, k) * r;
    }
  }
  if (m < 0) throw std::invalid_argument("build_rw: antenna count unknown without interfering cells");
  return symmetrize(symbol_energy * acc + CMatrix::Identity(m, m));
}

ChannelModel make_channel_model(std::vector<CMatrix> spatial_corr, RVector beta, RVector doppler, CMatrix r_w) {
  ChannelModel model;
  model.K = static_cast<Eigen::Index>(spatial_corr.size());
  if (model.K == 0) throw std::invalid_argument("make_channel_model: no users");
  model.M = spatial_corr.front().rows();
  const Eigen::Index n = model.M * model.K;
  if (beta.size() != model.K || doppler.size() != n)
    throw std::invalid_argument("make_channel_model: dimension mismatch");
  if ((beta.array() < 0.0).any()) throw std::invalid_argument("make_channel_model: negative gain");

  model.spatial_corr = std::move(spatial_corr);
  model.beta = std::move(beta);
  model.doppler = std::move(doppler);
  model.r_w = std::move(r_w);

  model.a.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) model.a(i) = bessel_j0(2.0 * std::numbers::pi * model.doppler(i));
  if ((model.a.array() <= 0.0).any() || (model.a.array() > 1.0).any())
    throw std::invalid_argument("make_channel_model: AR coefficient outside (0, 1]");
  model.q_v = (1.0 - model.a.array().square()).matrix();

  const Eigen::Index M = model.M;
  model.r_h = CMatrix::Zero(n, n);
  model.q = CMatrix::Zero(n, n);
  model.r_h_root_blocks.resize(static_cast<std::size_t>(model.K));
  model.q_root_blocks.resize(static_cast<std::size_t>(model.K));
  for (Eigen::Index k = 0; k < model.K; ++k) {
    const CMatrix& rk = model.spatial_corr[static_cast<std::size_t>(k)];
    if (rk.rows() != M || rk.cols() != M) throw std::invalid_argument("make_channel_model: inconsistent M");
    const CMatrix block = model.beta(k) * rk;
    const CMatrix root = psd_sqrt(block);
    const CMatrix q_block = symmetrize(root * model.q_v.segment(k * M, M).cast<cd>().asDiagonal() * root);
    model.r_h.block(k * M, k * M, M, M) = block;
    model.q.block(k * M, k * M, M, M) = q_block;
    model.r_h_root_blocks[static_cast<std::size_t>(k)] = root;
    model.q_root_blocks[static_cast<std::size_t>(k)] = psd_sqrt(q_block);
  }

  if ((model.a.array() == model.a(0)).all()) {
    const double a0 = model.a(0);
    const CMatrix residual = a0 * a0 * model.r_h + model.q - model.r_h;
    const double scale = std::max(1.0, model.r_h.cwiseAbs().maxCoeff());
    if (residual.cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw std::logic_error("make_channel_model: A R_h A^H + Q != R_h");
  }
  return model;
}

namespace {

ChannelModel build_cell_model(const SystemConfig& cfg, double gain) {
  const CMatrix r = build_spatial_corr(cfg.M, cfg.rho);
  std::vector<CMatrix> corr(static_cast<std::size_t>(cfg.K), r);
  const CellGains gains = CellGains::uniform_cross_gain(cfg.L, cfg.K, cfg.a);
  std::vector<std::vector<CMatrix>> interferers(static_cast<std::size_t>(cfg.L - 1), corr);
  CMatrix r_w = cfg.L > 1 ? build_rw(cfg.symbol_energy(), gains, interferers)
                          : CMatrix::Identity(cfg.M, cfg.M).eval();
  return make_channel_model(std::move(corr), RVector::Constant(cfg.K, gain),
                            RVector::Constant(static_cast<Eigen::Index>(cfg.M) * cfg.K, cfg.f_d), std::move(r_w));
}

}  // namespace

ChannelModel build_model(const SystemConfig& cfg) { return build_cell_model(cfg, 1.0); }

ChannelModel build_interferer_model(const SystemConfig& cfg) {
  ChannelModel m = build_cell_model(cfg, cfg.a);
  m.r_w = CMatrix::Identity(cfg.M, cfg.M);
  return m;
}

ChannelTrace simulate_trace(const ChannelModel& model, int frame_length, Rng& rng) {
  if (frame_length < 1) throw std::invalid_argument("simulate_trace: frame length must be >= 1");
  const Eigen::Index M = model.M;
  auto draw_blocks = [&](const std::vector<CMatrix>& roots) {
    CVector v(model.dim());
    for (Eigen::Index k = 0; k < model.K; ++k)
      v.segment(k * M, M) = roots[static_cast<std::size_t>(k)] * standard_cn(M, rng);
    return v;
  };
  ChannelTrace trace;
  trace.h0 = draw_blocks(model.r_h_root_blocks);
  trace.h.reserve(static_cast<std::size_t>(frame_length));
  CVector prev = trace.h0;
  for (int t = 0; t < frame_length; ++t) {
    CVector next = model.a.cast<cd>().cwiseProduct(prev) + draw_blocks(model.q_root_blocks);
    trace.h.push_back(next);
    prev = std::move(next);
  }
  return trace;
}

void write_trace(std::ostream& out, const ChannelTrace& trace, Eigen::Index M, Eigen::Index K, double f_d,
                 double rho) {
  out << "# M=" << M << " K=" << K << " T=" << trace.length() << " f_d=" << std::setprecision(17) << f_d
      << " rho=" << rho << '\n';
  for (const CVector& h : trace.h) {
    if (h.size() != M * K) throw std::invalid_argument("write_trace: vector length is not M*K");
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      if (i) out << ' ';
      out << h(i).real() << ' ' << h(i).imag();
    }
    out << '\n';
  }
}

ChannelTrace read_trace(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("# ", 0) != 0)
    throw std::runtime_error("read_trace: missing header");
  long long m = -1, k = -1, t = -1;
  std::istringstream hs(header.substr(2));
  std::string field;
  while (hs >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "M") m = std::stoll(value);
    if (key == "K") k = std::stoll(value);
    if (key == "T") t = std::stoll(value);
  }
  if (m <= 0 || k <= 0 || t < 0) throw std::runtime_error("read_trace: header lacks M, K or T");
  ChannelTrace trace;
  for (long long step = 0; step < t; ++step) {
    CVector h(m * k);
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      double re = 0.0, im = 0.0;
      if (!(in >> re >> im)) throw std::runtime_error("read_trace: truncated body");
      h(i) = cd(re, im);
    }
    trace.h.push_back(std::move(h));
  }
  return trace;
}

}  // namespace mmep
