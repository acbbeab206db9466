#include "mmep/config.hpp"

#include "mmep/numerics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace mmep {

using json = nlohmann::json;

std::string_view to_string(PilotDesign v) {
  switch (v) {
    case PilotDesign::hadamard: return "hadamard";
    case PilotDesign::dft: return "dft";
    case PilotDesign::random: return "random";
  }
  return "?";
}

std::string_view to_string(InterferenceMode v) {
  return v == InterferenceMode::explicit_sum ? "explicit" : "gaussian";
}

std::string_view to_string(Detector v) { return v == Detector::mmse ? "mmse" : "ml"; }

std::string_view to_string(Algorithm v) {
  switch (v) {
    case Algorithm::kf_m: return "kf_m";
    case Algorithm::ks_m: return "ks_m";
    case Algorithm::ep: return "ep";
    case Algorithm::kf_tm: return "kf_tm";
    case Algorithm::ks_tm: return "ks_tm";
    case Algorithm::pcsi: return "pcsi";
  }
  return "?";
}

std::string_view to_string(Backend v) {
  switch (v) {
    case Backend::automatic: return "auto";
    case Backend::dense: return "dense";
    case Backend::modal: return "modal";
  }
  return "?";
}

std::string_view to_string(ConvergenceMetric v) {
  return v == ConvergenceMetric::stacked ? "stacked" : "per_step_max";
}

std::string_view to_string(KsVariant v) {
  return v == KsVariant::smooth_redetect ? "smooth_redetect" : "refilter";
}

namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view key, std::string_view text, const std::array<E, N>& options) {
  for (E e : options)
    if (to_string(e) == text) return e;
  std::ostringstream msg;
  msg << "invalid value '" << text << "' for " << key << " (expected one of:";
  for (E e : options) msg << ' ' << to_string(e);
  msg << ')';
  throw ConfigError(msg.str());
}

constexpr std::array kAllAlgorithms = {Algorithm::kf_m, Algorithm::ks_m, Algorithm::ep,
                                       Algorithm::kf_tm, Algorithm::ks_tm, Algorithm::pcsi};

std::vector<Algorithm> canonical(std::vector<Algorithm> algs) {
  std::sort(algs.begin(), algs.end());
  algs.erase(std::unique(algs.begin(), algs.end()), algs.end());
  return algs;
}

bool is_power_of_two(int x) { return x > 0 && (x & (x - 1)) == 0; }

}  // namespace

Algorithm parse_algorithm(std::string_view name) {
  return parse_enum("algorithms", name, kAllAlgorithms);
}

std::vector<Algorithm> parse_algorithm_list(std::string_view list) {
  std::vector<Algorithm> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = list.find(',', pos);
    std::string_view item = list.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.push_back(parse_algorithm(item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("algorithm list is empty");
  return canonical(std::move(out));
}

double SystemConfig::symbol_energy() const { return std::pow(10.0, E_s_db / 10.0); }

void SystemConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(L >= 1, "L must be >= 1");
  require(K >= 1, "K must be >= 1");
  require(M >= 1, "M must be >= 1");
  require(T_p >= 1, "T_p must be >= 1");
  require(T_d >= 0, "T_d must be >= 0");
  require(n >= 1, "n must be >= 1");
  require(epsilon > 0.0, "epsilon must be > 0");
  require(trials >= 1, "trials must be >= 1");
  require(std::isfinite(E_s_db), "E_s_db must be finite");
  require(rho >= 0.0 && rho < 1.0, "rho must lie in [0, 1)");
  require(a >= 0.0 && a <= 1.0, "a must lie in [0, 1]");
  require(f_d >= 0.0 && bessel_j0(2.0 * std::numbers::pi * f_d) > 0.0,
          "f_d must be >= 0 with J0(2 pi f_d) > 0");
  require(!algorithms.empty(), "algorithms must not be empty");
  if (pilot_design != PilotDesign::random) require(T_p >= K, "T_p must be >= K for orthogonal pilots");
  if (pilot_design == PilotDesign::hadamard) {
    require(is_power_of_two(K), "hadamard pilots need K to be a power of 2 (use pilot_design=dft)");
    require(T_p == K || T_p == 2 * K, "hadamard pilots need T_p in {K, 2K}");
  }
  if (detector == Detector::ml) require(K <= 6, "ml detector needs 4^K <= 4096 (K <= 6)");
}

SystemConfig config_from_json_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  SystemConfig cfg;
  static const std::set<std::string> kKnown = {
      "L", "K", "M", "T_p", "T_d", "E_s_db", "a", "rho", "f_d", "n", "epsilon",
      "pilot_design", "interference_mode", "detector", "algorithms", "trials",
      "master_seed", "backend", "convergence", "ks_variant"};
  for (const auto& [key, _] : j.items())
    if (!kKnown.contains(key)) throw ConfigError("unknown config key '" + key + "'");

  try {
    auto get_int = [&](const char* key, int& dst) {
      if (!j.contains(key)) return;
      if (!j[key].is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
      dst = j[key].get<int>();
    };
    auto get_num = [&](const char* key, double& dst) {
      if (!j.contains(key)) return;
      if (!j[key].is_number()) throw ConfigError(std::string(key) + " must be a number");
      dst = j[key].get<double>();
    };
    auto get_str = [&](const char* key) -> std::string {
      if (!j[key].is_string()) throw ConfigError(std::string(key) + " must be a string");
      return j[key].get<std::string>();
    };
    get_int("L", cfg.L);
    get_int("K", cfg.K);
    get_int("M", cfg.M);
    get_int("T_p", cfg.T_p);
    get_int("T_d", cfg.T_d);
    get_num("E_s_db", cfg.E_s_db);
    get_num("a", cfg.a);
    get_num("rho", cfg.rho);
    get_num("f_d", cfg.f_d);
    get_int("n", cfg.n);
    get_num("epsilon", cfg.epsilon);
    get_int("trials", cfg.trials);
    if (j.contains("master_seed")) {
      if (!j["master_seed"].is_number_integer() || j["master_seed"].get<long long>() < 0)
        throw ConfigError("master_seed must be a non-negative integer");
      cfg.master_seed = j["master_seed"].get<std::uint64_t>();
    }
    if (j.contains("pilot_design"))
      cfg.pilot_design = parse_enum("pilot_design", get_str("pilot_design"),
                                    std::array{PilotDesign::hadamard, PilotDesign::dft, PilotDesign::random});
    if (j.contains("interference_mode"))
      cfg.interference_mode = parse_enum("interference_mode", get_str("interference_mode"),
                                         std::array{InterferenceMode::explicit_sum, InterferenceMode::gaussian});
    if (j.contains("detector"))
      cfg.detector = parse_enum("detector", get_str("detector"), std::array{Detector::mmse, Detector::ml});
    if (j.contains("backend"))
      cfg.backend = parse_enum("backend", get_str("backend"),
                               std::array{Backend::automatic, Backend::dense, Backend::modal});
    if (j.contains("convergence"))
      cfg.convergence = parse_enum("convergence", get_str("convergence"),
                                   std::array{ConvergenceMetric::stacked, ConvergenceMetric::per_step_max});
    if (j.contains("ks_variant"))
      cfg.ks_variant = parse_enum("ks_variant", get_str("ks_variant"),
                                  std::array{KsVariant::smooth_redetect, KsVariant::refilter});
    if (j.contains("algorithms")) {
      const auto& node = j["algorithms"];
      if (node.is_string()) {
        cfg.algorithms = parse_algorithm_list(node.get<std::string>());
      } else if (node.is_array()) {
        std::vector<Algorithm> algs;
        for (const auto& item : node) {
          if (!item.is_string()) throw ConfigError("algorithms entries must be strings");
          algs.push_back(parse_algorithm(item.get<std::string>()));
        }
        if (algs.empty()) throw ConfigError("algorithms must not be empty");
        cfg.algorithms = canonical(std::move(algs));
      } else {
        throw ConfigError("algorithms must be a list or a comma-separated string");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

SystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json_text(buf.str());
}

std::string config_to_json_text(const SystemConfig& cfg) {
  json j;
  j["L"] = cfg.L;
  j["K"] = cfg.K;
  j["M"] = cfg.M;
  j["T_p"] = cfg.T_p;
  j["T_d"] = cfg.T_d;
  j["E_s_db"] = cfg.E_s_db;
  j["a"] = cfg.a;
  j["rho"] = cfg.rho;
  j["f_d"] = cfg.f_d;
  j["n"] = cfg.n;
  j["epsilon"] = cfg.epsilon;
  j["pilot_design"] = to_string(cfg.pilot_design);
  j["interference_mode"] = to_string(cfg.interference_mode);
  j["detector"] = to_string(cfg.detector);
  j["algorithms"] = json::array();
  for (Algorithm a : cfg.algorithms) j["algorithms"].push_back(to_string(a));
  j["trials"] = cfg.trials;
  j["master_seed"] = cfg.master_seed;
  j["backend"] = to_string(cfg.backend);
  j["convergence"] = to_string(cfg.convergence);
  j["ks_variant"] = to_string(cfg.ks_variant);
  return j.dump(2);
}

SystemConfig desk_profile() { return SystemConfig{}; }

SystemConfig full_profile() {
  SystemConfig cfg;
  cfg.K = 8;
  cfg.M = 64;
  cfg.T_p = 8;
  cfg.T_d = 64;
  return cfg;
}

}  // namespace mmep
