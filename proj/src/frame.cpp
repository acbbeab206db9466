#include "mmep/frame.hpp"

#include "mmep/kron.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mmep {

int Constellation::nearest(cd x) const {
  int best = 0;
  double best_d = std::norm(x - points[0]);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double d = std::norm(x - points[i]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

Constellation make_constellation(int order, double symbol_energy) {
  if (order != 4) throw std::invalid_argument("make_constellation: only QPSK (order 4) is supported");
  if (!(symbol_energy > 0.0)) throw std::invalid_argument("make_constellation: energy must be positive");
  Constellation c;
  c.order = order;
  c.energy = symbol_energy;
  const double amp = std::sqrt(symbol_energy / 2.0);
  for (int idx = 0; idx < 4; ++idx) {
    const double re = (idx & 2) ? -amp : amp;
    const double im = (idx & 1) ? -amp : amp;
    c.points.emplace_back(re, im);
  }
  return c;
}

SymbolMatrix hadamard_pilots(int users, int pilot_length, const Constellation& c) {
  if (users <= 0 || (users & (users - 1)) != 0)
    throw std::invalid_argument("hadamard_pilots: K must be a power of 2");
  if (pilot_length != users && pilot_length != 2 * users)
    throw std::invalid_argument("hadamard_pilots: T_p must be K or 2K");
  Eigen::MatrixXd h = Eigen::MatrixXd::Ones(1, 1);
  while (h.rows() < pilot_length) {
    const Eigen::Index n = h.rows();
    Eigen::MatrixXd next(2 * n, 2 * n);
    next << h, h, h, -h;
    h = std::move(next);
  }
  const cd plus = std::sqrt(c.energy / 2.0) * cd(1.0, 1.0);
  return h.topRows(users).cast<cd>() * plus;
}

SymbolMatrix dft_pilots(int users, int pilot_length, const Constellation& c) {
  if (users <= 0 || pilot_length < users) throw std::invalid_argument("dft_pilots: need 0 < K <= T_p");
  SymbolMatrix p(users, pilot_length);
  const double amp = std::sqrt(c.energy);
  for (int k = 0; k < users; ++k)
    for (int t = 0; t < pilot_length; ++t)
      p(k, t) = std::polar(amp, -2.0 * std::numbers::pi * k * t / pilot_length);
  return p;
}

SymbolMatrix random_data(int users, int length, const Constellation& c, Rng& rng) {
  if (length < 0) throw std::invalid_argument("random_data: negative length");
  std::uniform_int_distribution<int> pick(0, c.order - 1);
  SymbolMatrix s(users, length);
  for (int t = 0; t < length; ++t)
    for (int k = 0; k < users; ++k) s(k, t) = c.point(pick(rng));
  return s;
}

SymbolMatrix make_pilots(PilotDesign design, int users, int pilot_length, const Constellation& c, Rng& rng) {
  switch (design) {
    case PilotDesign::hadamard: return hadamard_pilots(users, pilot_length, c);
    case PilotDesign::dft: return dft_pilots(users, pilot_length, c);
    case PilotDesign::random: return random_data(users, pilot_length, c, rng);
  }
  throw std::invalid_argument("make_pilots: unknown design");
}

SymbolMatrix Frame::symbols() const {
  SymbolMatrix s(users(), length());
  s << pilots, data;
  return s;
}

CVector Frame::symbols_at(Eigen::Index t) const {
  return t < pilot_length() ? CVector(pilots.col(t)) : CVector(data.col(t - pilot_length()));
}

ObservationSet observe(const std::vector<ChannelTrace>& traces, const std::vector<SymbolMatrix>& symbols,
                       const ChannelModel& model, const ObserveOptions& options, Rng& rng) {
  if (traces.empty() || traces.size() != symbols.size())
    throw std::invalid_argument("observe: need one symbol matrix per cell trace");
  const std::size_t length = traces.front().length();
  const Eigen::Index M = model.M;
  const std::size_t cells = options.mode == InterferenceMode::explicit_sum ? traces.size() : 1;
  for (std::size_t i = 0; i < cells; ++i) {
    if (traces[i].length() != length || static_cast<std::size_t>(symbols[i].cols()) != length)
      throw std::invalid_argument("observe: frame length mismatch");
    if (traces[i].h.front().size() != M * symbols[i].rows())
      throw std::invalid_argument("observe: channel dimension does not match M*K");
  }

  CnSampler disturbance;
  if (options.mode == InterferenceMode::gaussian && !options.noiseless) disturbance = CnSampler(model.r_w);

  ObservationSet obs;
  obs.y.reserve(length);
  for (std::size_t t = 0; t < length; ++t) {
    CVector y = CVector::Zero(M);
    for (std::size_t i = 0; i < cells; ++i) y += kron::apply(traces[i].h[t], symbols[i].col(static_cast<Eigen::Index>(t)), M);
    if (!options.noiseless) {
      y += options.mode == InterferenceMode::gaussian ? disturbance.draw(rng) : standard_cn(M, rng);
    }
    obs.y.push_back(std::move(y));
  }
  return obs;
}

}  // namespace mmep
