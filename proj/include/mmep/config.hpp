#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mmep {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PilotDesign { hadamard, dft, random };
enum class InterferenceMode { explicit_sum, gaussian };
enum class Detector { mmse, ml };
enum class Algorithm { kf_m, ks_m, ep, kf_tm, ks_tm, pcsi };
enum class Backend { automatic, dense, modal };
enum class ConvergenceMetric { stacked, per_step_max };
enum class KsVariant { smooth_redetect, refilter };

std::string_view to_string(PilotDesign v);
std::string_view to_string(InterferenceMode v);
std::string_view to_string(Detector v);
std::string_view to_string(Algorithm v);
std::string_view to_string(Backend v);
std::string_view to_string(ConvergenceMetric v);
std::string_view to_string(KsVariant v);

Algorithm parse_algorithm(std::string_view name);
/// Comma separated list, e.g. "kf_m,ep". Returned in canonical order, no duplicates.
std::vector<Algorithm> parse_algorithm_list(std::string_view list);

/// All scenario parameters. Field names match the JSON config keys.
struct SystemConfig {
  int L = 4;
  int K = 4;
  int M = 32;
  int T_p = 4;
  int T_d = 32;
  double E_s_db = 0.0;
  double a = 0.1;
  double rho = 0.0;
  double f_d = 0.01;
  int n = 10;
  double epsilon = 1e-6;
  PilotDesign pilot_design = PilotDesign::hadamard;
  InterferenceMode interference_mode = InterferenceMode::explicit_sum;
  Detector detector = Detector::mmse;
  std::vector<Algorithm> algorithms = {Algorithm::kf_m, Algorithm::ks_m, Algorithm::ep,
                                       Algorithm::kf_tm, Algorithm::ks_tm, Algorithm::pcsi};
  int trials = 50;
  std::uint64_t master_seed = 1;

  // Receiver implementation knobs.
  Backend backend = Backend::automatic;
  ConvergenceMetric convergence = ConvergenceMetric::stacked;
  KsVariant ks_variant = KsVariant::smooth_redetect;

  int frame_length() const { return T_p + T_d; }
  double symbol_energy() const;

  /// Throws ConfigError on the first violated invariant.
  void validate() const;
};

SystemConfig config_from_json_text(std::string_view text);
SystemConfig load_config(const std::filesystem::path& path);
std::string config_to_json_text(const SystemConfig& cfg);

/// Desk-scale defaults: M=32, K=4, L=4, T_p=4, T_d=32, 50 trials.
SystemConfig desk_profile();
/// Full-scale defaults: M=64, K=8, L=4, T_p=8, T_d=64.
SystemConfig full_profile();

}  // namespace mmep
