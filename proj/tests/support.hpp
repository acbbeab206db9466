#pragma once

#include "mmep/harness.hpp"

namespace support {

/// Small scenario with correlated antennas and visible interference.
inline mmep::SystemConfig tiny_config(int M = 2, int K = 2, int T_p = 2, int T_d = 8) {
  mmep::SystemConfig cfg;
  cfg.L = 3;
  cfg.K = K;
  cfg.M = M;
  cfg.T_p = T_p;
  cfg.T_d = T_d;
  cfg.a = 0.3;
  cfg.rho = 0.4;
  cfg.f_d = 0.05;
  cfg.trials = 4;
  return cfg;
}

inline mmep::SystemConfig with_backend(mmep::SystemConfig cfg, mmep::Backend b) {
  cfg.backend = b;
  return cfg;
}

}  // namespace support
