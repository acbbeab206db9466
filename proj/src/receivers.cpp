#include "mmep/receivers.hpp"

#include "mmep/kron.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mmep {

ReceiverOptions ReceiverOptions::from_config(const SystemConfig& cfg) {
  ReceiverOptions o;
  o.detector = cfg.detector;
  o.max_iterations = cfg.n;
  o.epsilon = cfg.epsilon;
  o.convergence = cfg.convergence;
  o.ks_variant = cfg.ks_variant;
  return o;
}

ReceiverInput::ReceiverInput(const BlockModel& bm, const ObservationSet& obs, SymbolMatrix pilot_block,
                             Constellation c)
    : model(bm), pilots(std::move(pilot_block)), constellation(std::move(c)) {
  if (pilots.rows() != bm.K()) throw std::invalid_argument("ReceiverInput: pilot rows must equal K");
  if (static_cast<Eigen::Index>(obs.length()) < pilots.cols())
    throw std::invalid_argument("ReceiverInput: frame shorter than the pilot block");
  y.reserve(obs.length());
  for (const auto& yt : obs.y) {
    if (yt.size() != bm.M()) throw std::invalid_argument("ReceiverInput: observation length must equal M");
    y.push_back(bm.rotate(yt));
  }
}

namespace {

using Trajectory = std::vector<BlockBelief>;

BlockBelief predict_all(const BlockModel& bm, const BlockBelief& prev) {
  BlockBelief out;
  out.reserve(prev.size());
  for (std::size_t b = 0; b < prev.size(); ++b) out.push_back(predict(prev[b], bm.blocks()[b].transition));
  return out;
}

BlockBelief combine_all(const BlockBelief& forward, const BlockFactor& factor) {
  BlockBelief out;
  out.reserve(forward.size());
  for (std::size_t b = 0; b < forward.size(); ++b) out.push_back(combine_fr(forward[b], factor[b]));
  return out;
}

BlockBelief cavity_all(const BlockBelief& posterior, const BlockFactor& factor) {
  BlockBelief out;
  out.reserve(posterior.size());
  for (std::size_t b = 0; b < posterior.size(); ++b) out.push_back(obs_cavity(posterior[b], factor[b]));
  return out;
}

BlockFactor factor_all(const BlockBelief& posterior, const BlockBelief& cavity) {
  BlockFactor out;
  out.reserve(posterior.size());
  for (std::size_t b = 0; b < posterior.size(); ++b) out.push_back(obs_factor_from(posterior[b], cavity[b]));
  return out;
}

BlockBelief smooth_all(const BlockModel& bm, const BlockBelief& current, const BlockBelief& next) {
  BlockBelief out;
  out.reserve(current.size());
  for (std::size_t b = 0; b < current.size(); ++b)
    out.push_back(smooth_step(current[b], next[b], bm.blocks()[b].transition).posterior);
  return out;
}

BlockBelief match_all(const ReceiverInput& in, const BlockBelief& cavity, const CVector& s, Eigen::Index t) {
  const BlockModel& bm = in.model;
  const CVector& y = in.y[static_cast<std::size_t>(t)];
  BlockBelief out;
  out.reserve(cavity.size());
  for (std::size_t b = 0; b < cavity.size(); ++b)
    out.push_back(moment_match_hard(cavity[b], s, bm.block_obs(y, b), bm.blocks()[b].r_w).posterior);
  return out;
}

Decision detect(const ReceiverInput& in, const ReceiverOptions& opt, const BlockBelief& belief, Eigen::Index t) {
  const BlockModel& bm = in.model;
  const CVector& y = in.y[static_cast<std::size_t>(t)];
  if (opt.detector == Detector::mmse) return detect_mmse(bm.joint_h(belief), y, bm.joint_r_w(), in.constellation);

  if (bm.size() == 1) return detect_ml(belief.front(), y, bm.blocks().front().r_w, in.constellation);
  // Per-block log densities add up when the blocks are independent.
  const Constellation& c = in.constellation;
  std::size_t count = 1;
  for (Eigen::Index k = 0; k < bm.K(); ++k) {
    count *= static_cast<std::size_t>(c.order);
    if (count > kEnumerationGuard) throw EnumerationGuardError("detect_ml: enumeration exceeds the guard of 4096");
  }
  Decision best;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<int> idx;
    CVector s = enumerate_symbols(c, bm.K(), i, &idx);
    double ll = 0.0;
    for (std::size_t b = 0; b < bm.size(); ++b)
      ll += evidence_terms(belief[b], s, bm.block_obs(y, b), bm.blocks()[b].r_w).log_density;
    if (ll > best_ll) {
      best_ll = ll;
      best.symbols = std::move(s);
      best.indices = std::move(idx);
    }
  }
  return best;
}

/// Initial filtering pass. With `known` every symbol is taken from it;
/// otherwise pilots are used for t < T_p and data symbols are detected from
/// the forward belief.
void forward_pass(const ReceiverInput& in, const ReceiverOptions& opt, const SymbolMatrix* known, EpState& st) {
  const Eigen::Index T = in.length();
  const std::size_t n = static_cast<std::size_t>(T);
  st.forward.assign(n, {});
  st.reverse.assign(n, {});
  st.posterior.assign(n, {});
  st.factors.assign(n, {});
  st.symbols.assign(n, {});
  BlockBelief prev = in.model.prior();
  for (Eigen::Index t = 0; t < T; ++t) {
    const std::size_t i = static_cast<std::size_t>(t);
    st.forward[i] = predict_all(in.model, prev);
    const BlockBelief& cavity = st.forward[i];
    if (known)
      st.symbols[i] = known->col(t);
    else if (t < in.pilot_length())
      st.symbols[i] = in.pilots.col(t);
    else
      st.symbols[i] = detect(in, opt, cavity, t).symbols;
    BlockBelief post = match_all(in, cavity, st.symbols[i], t);
    st.factors[i] = factor_all(post, cavity);
    st.reverse[i] = post;
    st.posterior[i] = std::move(post);
    prev = st.posterior[i];
  }
}

double relative_change(const Trajectory& now, const Trajectory& before, ConvergenceMetric metric) {
  auto ratio = [](double num, double den) {
    if (den > 0.0) return num / den;
    return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  };
  double num = 0.0, den = 0.0, worst = 0.0;
  for (std::size_t t = 0; t < now.size(); ++t) {
    double nt = 0.0, dt = 0.0;
    for (std::size_t b = 0; b < now[t].size(); ++b) {
      nt += (now[t][b].mean - before[t][b].mean).squaredNorm();
      dt += before[t][b].mean.squaredNorm();
    }
    num += nt;
    den += dt;
    worst = std::max(worst, ratio(std::sqrt(nt), std::sqrt(dt)));
  }
  return metric == ConvergenceMetric::stacked ? ratio(std::sqrt(num), std::sqrt(den)) : worst;
}

ReceiverOutput make_output(const ReceiverInput& in, const ReceiverOptions& opt, const Trajectory& beliefs) {
  ReceiverOutput out;
  const BlockModel& bm = in.model;
  out.channel_means.reserve(beliefs.size());
  out.cov_traces.reserve(beliefs.size());
  if (opt.keep_covs) out.channel_covs.emplace();
  for (const auto& b : beliefs) {
    out.channel_means.push_back(bm.mean_original(b));
    out.cov_traces.push_back(bm.cov_trace(b));
    if (opt.keep_covs) out.channel_covs->push_back(bm.cov_original(b));
  }
  out.decisions = SymbolMatrix(bm.K(), in.length() - in.pilot_length());
  return out;
}

void record_decisions(const ReceiverInput& in, const std::vector<CVector>& symbols, ReceiverOutput& out) {
  for (Eigen::Index t = in.pilot_length(); t < in.length(); ++t)
    out.decisions.col(t - in.pilot_length()) = symbols[static_cast<std::size_t>(t)];
}

Trajectory rts(const ReceiverInput& in, const Trajectory& filtered) {
  Trajectory smoothed(filtered.size());
  if (filtered.empty()) return smoothed;
  smoothed.back() = filtered.back();
  for (std::size_t t = filtered.size() - 1; t-- > 0;) smoothed[t] = smooth_all(in.model, filtered[t], smoothed[t + 1]);
  return smoothed;
}

}  // namespace

ReceiverOutput run_kf_m(const ReceiverInput& in, const ReceiverOptions& opt) {
  EpState st;
  forward_pass(in, opt, nullptr, st);
  ReceiverOutput out = make_output(in, opt, st.posterior);
  record_decisions(in, st.symbols, out);
  out.iterations_used = 1;
  out.converged = true;
  return out;
}

ReceiverOutput run_ks_m(const ReceiverInput& in, const ReceiverOptions& opt) {
  EpState st;
  forward_pass(in, opt, nullptr, st);
  const Trajectory smoothed = rts(in, st.reverse);

  std::vector<CVector> symbols = st.symbols;
  for (Eigen::Index t = in.pilot_length(); t < in.length(); ++t)
    symbols[static_cast<std::size_t>(t)] = detect(in, opt, smoothed[static_cast<std::size_t>(t)], t).symbols;

  if (opt.ks_variant == KsVariant::refilter) {
    SymbolMatrix known(in.model.K(), in.length());
    for (Eigen::Index t = 0; t < in.length(); ++t) known.col(t) = symbols[static_cast<std::size_t>(t)];
    EpState again;
    forward_pass(in, opt, &known, again);
    ReceiverOutput out = make_output(in, opt, again.posterior);
    record_decisions(in, symbols, out);
    out.iterations_used = 1;
    out.converged = true;
    return out;
  }

  ReceiverOutput out = make_output(in, opt, smoothed);
  record_decisions(in, symbols, out);
  out.iterations_used = 1;
  out.converged = true;
  return out;
}

ReceiverOutput run_ep(const ReceiverInput& in, const ReceiverOptions& opt, EpState* state) {
  if (opt.max_iterations < 1) throw std::invalid_argument("run_ep: need at least one iteration");
  if (!(opt.epsilon > 0.0)) throw std::invalid_argument("run_ep: epsilon must be positive");
  const BlockModel& bm = in.model;
  const Eigen::Index T = in.length();

  EpState st;
  forward_pass(in, opt, nullptr, st);
  Trajectory previous = st.posterior;

  bool converged = false;
  int used = 0;
  std::vector<double> diagnostics;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    st.iteration = it;
    used = it;
    if (it > 1) {
      BlockBelief prev = bm.prior();
      for (Eigen::Index t = 0; t < T; ++t) {
        const std::size_t i = static_cast<std::size_t>(t);
        st.forward[i] = predict_all(bm, prev);
        st.reverse[i] = combine_all(st.forward[i], st.factors[i]);
        prev = st.reverse[i];
      }
    }
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      const std::size_t i = static_cast<std::size_t>(t);
      const BlockBelief smoothed = t == T - 1 ? st.reverse[i] : smooth_all(bm, st.reverse[i], st.posterior[i + 1]);
      const BlockBelief cavity = cavity_all(smoothed, st.factors[i]);
      st.symbols[i] = t < in.pilot_length() ? CVector(in.pilots.col(t)) : detect(in, opt, cavity, t).symbols;
      BlockBelief post = match_all(in, cavity, st.symbols[i], t);
      st.factors[i] = factor_all(post, cavity);
      st.posterior[i] = std::move(post);
    }
    const double change = relative_change(st.posterior, previous, opt.convergence);
    diagnostics.push_back(change);
    previous = st.posterior;
    if (change < opt.epsilon) {
      converged = true;
      break;
    }
  }

  ReceiverOutput out = make_output(in, opt, st.posterior);
  record_decisions(in, st.symbols, out);
  out.iterations_used = used;
  out.converged = converged;
  out.diagnostics = std::move(diagnostics);
  if (state) *state = std::move(st);
  return out;
}

ReceiverOutput run_training(const ReceiverInput& in, const SymbolMatrix& symbols, TrainingMode mode,
                            const ReceiverOptions& opt) {
  if (symbols.rows() != in.model.K() || symbols.cols() != in.length())
    throw std::invalid_argument("run_training: symbol matrix must be K x T");
  EpState st;
  forward_pass(in, opt, &symbols, st);
  ReceiverOutput out =
      make_output(in, opt, mode == TrainingMode::filter ? st.posterior : rts(in, st.reverse));
  out.decisions = SymbolMatrix(in.model.K(), 0);
  out.iterations_used = 1;
  out.converged = true;
  return out;
}

SymbolMatrix run_pcsi(const ObservationSet& obs, const ChannelTrace& truth, const ChannelModel& model,
                      const Constellation& c, Eigen::Index pilot_length) {
  const Eigen::Index T = static_cast<Eigen::Index>(obs.length());
  if (static_cast<Eigen::Index>(truth.length()) != T) throw std::invalid_argument("run_pcsi: trace length mismatch");
  SymbolMatrix out(model.K, T - pilot_length);
  for (Eigen::Index t = pilot_length; t < T; ++t) {
    const std::size_t i = static_cast<std::size_t>(t);
    out.col(t - pilot_length) = detect_mmse(kron::unvec(truth.h[i], model.M), obs.y[i], model.r_w, c).symbols;
  }
  return out;
}

}  // namespace mmep
