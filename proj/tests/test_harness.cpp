#include "mmep/harness.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace mmep;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

ChannelTrace trace_of(std::vector<CVector> h) {
  ChannelTrace t;
  t.h = std::move(h);
  return t;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("seed derivation") {
    CHECK(derive_seed(1, 2, 3, StreamTag::noise) == derive_seed(1, 2, 3, StreamTag::noise));
    std::set<std::uint64_t> seen;
    for (std::uint64_t trial = 0; trial < 20; ++trial)
      for (std::uint64_t cell = 0; cell < 4; ++cell)
        for (StreamTag tag : {StreamTag::channel, StreamTag::symbols, StreamTag::noise})
          seen.insert(derive_seed(7, trial, cell, tag));
    CHECK(seen.size() == 20 * 4 * 3);
    CHECK(derive_seed(1, 0, 0, StreamTag::channel) != derive_seed(2, 0, 0, StreamTag::channel));
    // splitmix64 reference value for input 0
    CHECK(mix64(0) == 0xe220a8397b1dcdafULL);
  }

  TEST_CASE("delta_h examples") {
    Rng rng(1);
    std::vector<CVector> h;
    for (int t = 0; t < 4; ++t) h.push_back(oracle::random_cvector(6, rng));
    const ChannelTrace tr = trace_of(h);
    CHECK(delta_h_db(tr, h) == -300.0);
    std::vector<CVector> zero(4, CVector::Zero(6));
    CHECK(std::abs(delta_h_db(tr, zero)) < 1e-12);
    std::vector<CVector> off;
    for (const auto& x : h) {
      CVector e = oracle::random_cvector(6, rng);
      e *= 0.1 * x.norm() / e.norm();
      off.push_back(x + e);
    }
    CHECK(std::abs(delta_h_db(tr, off) + 20.0) < 1e-10);
    CHECK_THROWS(delta_h_db(tr, std::vector<CVector>(3, CVector::Zero(6))));
  }

  TEST_CASE("delta_h skips zero-norm channels") {
    std::vector<CVector> h{CVector::Zero(2), CVector::Ones(2)};
    const ChannelTrace tr = trace_of(h);
    std::vector<CVector> est{CVector::Ones(2), CVector::Zero(2)};
    CHECK(std::abs(delta_h_ratio(tr, est) - 1.0) < 1e-15);
  }

  TEST_CASE("ser examples") {
    const Constellation c = make_constellation(4, 1.0);
    Rng rng(2);
    const SymbolMatrix truth = mmep::random_data(4, 25, c, rng);
    CHECK(ser(truth, truth) == 0.0);
    CHECK(ser(truth, -truth) == 1.0);
    SymbolMatrix one = truth;
    one(2, 7) = -one(2, 7);
    CHECK(std::abs(ser(truth, one) - 0.01) < 1e-15);
    CHECK(std::isnan(ser(SymbolMatrix(4, 0), SymbolMatrix(4, 0))));
    CHECK_THROWS(ser(truth, SymbolMatrix(4, 24)));
  }

  TEST_CASE("dB conversion and floor") {
    CHECK(ratio_to_db(1.0) == 0.0);
    CHECK(ratio_to_db(0.0) == -300.0);
    CHECK(ratio_to_db(1e-40) == -300.0);
    CHECK(std::abs(ratio_to_db(0.01) + 20.0) < 1e-12);
    CHECK(std::isnan(ratio_to_db(std::nan(""))));
  }

  TEST_CASE("run_trial is deterministic and covers every algorithm") {
    const SystemConfig cfg = support::tiny_config(4, 2, 2, 6);
    const Scenario sc(cfg);
    const TrialResult a = run_trial(sc, 3), b = run_trial(sc, 3);
    REQUIRE(a.results.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(a.results[i].algorithm == cfg.algorithms[i]);
      CHECK(!a.results[i].failed);
      const bool same_dh = (std::isnan(a.results[i].delta_h_ratio) && std::isnan(b.results[i].delta_h_ratio)) ||
                           a.results[i].delta_h_ratio == b.results[i].delta_h_ratio;
      CHECK(same_dh);
    }
    CHECK(std::isnan(a.results[3].ser));   // kf_tm
    CHECK(std::isnan(a.results[5].delta_h_ratio));  // pcsi
  }

  TEST_CASE("smoothing beats filtering in training mode") {
    SystemConfig cfg = support::tiny_config(4, 2, 2, 10);
    cfg.algorithms = {Algorithm::kf_tm, Algorithm::ks_tm};
    const Scenario sc(cfg);
    double kf = 0, ks = 0;
    for (std::size_t trial = 0; trial < 20; ++trial) {
      const TrialResult r = run_trial(sc, trial);
      kf += r.results[0].delta_h_ratio;
      ks += r.results[1].delta_h_ratio;
    }
    CHECK(ks < kf);
  }

  TEST_CASE("PCSI is essentially error-free at high SNR without interference") {
    SystemConfig cfg = support::tiny_config(8, 2, 2, 20);
    cfg.a = 0.0;
    cfg.E_s_db = 30.0;
    cfg.algorithms = {Algorithm::pcsi};
    const Scenario sc(cfg);
    double total = 0;
    for (std::size_t t = 0; t < 5; ++t) total += run_trial(sc, t).results[0].ser;
    CHECK(total / 5 < 0.01);
  }

  TEST_CASE("trial results are independent of the worker count") {
    SystemConfig cfg = support::tiny_config(4, 2, 2, 6);
    cfg.trials = 7;
    const Scenario sc(cfg);
    const auto one = aggregate(cfg, run_trials(sc, 1), "base", 0);
    const auto three = aggregate(cfg, run_trials(sc, 3), "base", 0);
    CHECK(format_csv(one) == format_csv(three));
  }

  TEST_CASE("aggregation averages ratios before converting to dB") {
    SystemConfig cfg;
    cfg.algorithms = {Algorithm::kf_m};
    std::vector<TrialResult> trials(2);
    trials[0].results = {{Algorithm::kf_m, false, "", 1.0, 0.1, 1, true}};
    trials[1].results = {{Algorithm::kf_m, false, "", 0.01, 0.3, 3, true}};
    const auto rows = aggregate(cfg, trials, "M", 8);
    REQUIRE(rows.size() == 1);
    CHECK(std::abs(rows[0].delta_h_db - 10 * std::log10(0.505)) < 1e-12);
    CHECK(std::abs(rows[0].ser - 0.2) < 1e-15);
    CHECK(rows[0].mean_iterations == 2.0);
    CHECK(rows[0].failures == 0);
    CHECK(rows[0].trials == 2);

    trials[1].results[0].failed = true;
    const auto with_failure = aggregate(cfg, trials, "M", 8);
    CHECK(with_failure[0].failures == 1);
    CHECK(with_failure[0].trials == 2);
    CHECK(with_failure[0].delta_h_db == 0.0);
    CHECK(failure_budget_exceeded(with_failure));
  }

  TEST_CASE("failure budget is 20 percent") {
    MetricRow r;
    r.trials = 10;
    r.failures = 2;
    CHECK(!failure_budget_exceeded({r}));
    r.failures = 3;
    CHECK(failure_budget_exceeded({r}));
  }

  TEST_CASE("CSV format") {
    MetricRow r;
    r.sweep_name = "M";
    r.sweep_value = 16;
    r.algorithm = Algorithm::ks_m;
    r.delta_h_db = -12.3456789;
    r.ser = 0.0123456789;
    r.trials = 50;
    r.failures = 1;
    r.master_seed = 42;
    r.mean_iterations = 1;
    const std::string text = format_csv({r});
    CHECK(text == std::string(kCsvHeader) + "\nM,16,ks_m,-12.3457,0.0123457,50,1,42,1\n");
    CHECK(text.find('\r') == std::string::npos);
    const auto parsed = parse_csv(text);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].size() == 9);
    CHECK(parsed[1][2] == "ks_m");
    CHECK(std::stod(parsed[1][3]) == doctest::Approx(-12.3457));
    CHECK_THROWS(format_csv({}));

    MetricRow n = r;
    n.ser = std::nan("");
    CHECK(parse_csv(format_csv({n}))[1][4] == "nan");
  }

  TEST_CASE("write_csv writes the same bytes as format_csv") {
    MetricRow r;
    r.sweep_name = "base";
    const auto path = std::filesystem::temp_directory_path() / "mmep_test_rows.csv";
    write_csv({r}, path);
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == format_csv({r}));
    std::filesystem::remove(path);
    CHECK_THROWS(write_csv({r}, "/nonexistent-dir/x.csv"));
  }

  TEST_CASE("sweep values") {
    const SystemConfig cfg;
    CHECK(apply_sweep_value(cfg, "M", 16).M == 16);
    CHECK(apply_sweep_value(cfg, "a", 0.3).a == 0.3);
    CHECK(apply_sweep_value(cfg, "T_d", 64).T_d == 64);
    CHECK(apply_sweep_value(cfg, "f_d", 0.04).f_d == 0.04);
    CHECK(apply_sweep_value(cfg, "rho", 0.5).rho == 0.5);
    CHECK(apply_sweep_value(cfg, "T_p", 8).T_p == 8);
    CHECK_THROWS_AS(apply_sweep_value(cfg, "M", 16.5), ConfigError);
    CHECK_THROWS_AS(apply_sweep_value(cfg, "rho", 1.0), ConfigError);
    CHECK_THROWS_AS(apply_sweep_value(cfg, "T_p", 3), ConfigError);
    CHECK_THROWS_AS(apply_sweep_value(cfg, "L", 2), ConfigError);
  }

  TEST_CASE("sweep rows") {
    SystemConfig cfg = support::tiny_config(4, 2, 2, 4);
    cfg.trials = 2;
    cfg.algorithms = {Algorithm::kf_m, Algorithm::pcsi};
    const auto rows = run_sweep(cfg, "M", {2, 4}, 1);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].sweep_name == "M");
    CHECK(rows[0].sweep_value == 2);
    CHECK(rows[3].sweep_value == 4);
    CHECK(rows[3].algorithm == Algorithm::pcsi);
    const auto base = run_base(cfg, 1);
    CHECK(base[0].sweep_name == "base");
    CHECK_THROWS_AS(run_sweep(cfg, "M", {}, 1), ConfigError);
  }
}

TEST_SUITE("config") {
  TEST_CASE("defaults are the desk profile") {
    const SystemConfig d = desk_profile();
    CHECK(d.M == 32);
    CHECK(d.K == 4);
    CHECK(d.L == 4);
    CHECK(d.T_p == 4);
    CHECK(d.T_d == 32);
    CHECK(d.trials == 50);
    CHECK(d.n == 10);
    CHECK(d.epsilon == 1e-6);
    CHECK(d.symbol_energy() == 1.0);
    CHECK_NOTHROW(d.validate());
    const SystemConfig p = full_profile();
    CHECK(p.K == 8);
    CHECK(p.T_p == 8);
    CHECK(p.T_d == 64);
    CHECK_NOTHROW(p.validate());
  }

  TEST_CASE("JSON round trip") {
    SystemConfig cfg;
    cfg.M = 16;
    cfg.a = 0.25;
    cfg.algorithms = {Algorithm::ep, Algorithm::pcsi};
    cfg.interference_mode = InterferenceMode::gaussian;
    cfg.master_seed = 99;
    const SystemConfig back = config_from_json_text(config_to_json_text(cfg));
    CHECK(back.M == 16);
    CHECK(back.a == 0.25);
    CHECK(back.algorithms == cfg.algorithms);
    CHECK(back.interference_mode == InterferenceMode::gaussian);
    CHECK(back.master_seed == 99);
  }

  TEST_CASE("JSON validation") {
    CHECK_THROWS_AS(config_from_json_text("{\"bogus\": 1}"), ConfigError);
    CHECK_THROWS_AS(config_from_json_text("{\"M\": 1.5}"), ConfigError);
    CHECK_THROWS_AS(config_from_json_text("{\"rho\": 1.0}"), ConfigError);
    CHECK_THROWS_AS(config_from_json_text("{\"a\": -0.1}"), ConfigError);
    CHECK_THROWS_AS(config_from_json_text("{\"K\": 3}"), ConfigError);
    CHECK_THROWS_AS(config_from_json_text("{\"detector\": \"ml\", \"K\": 8, \"T_p\": 8}"), ConfigError);
    CHECK_THROWS_AS(config_from_json_text("not json"), ConfigError);
    CHECK_THROWS_AS(config_from_json_text("{\"algorithms\": \"kf_m,nope\"}"), ConfigError);
    const SystemConfig dft = config_from_json_text("{\"K\": 3, \"pilot_design\": \"dft\"}");
    CHECK(dft.pilot_design == PilotDesign::dft);
    const SystemConfig s = config_from_json_text("{\"algorithms\": \"ep,kf_m,ep\"}");
    CHECK(s.algorithms == std::vector<Algorithm>{Algorithm::kf_m, Algorithm::ep});
  }

  TEST_CASE("shipped config files load") {
    const std::filesystem::path root = MMEP_SOURCE_DIR;
    const SystemConfig desk = load_config(root / "configs" / "desk.json");
    CHECK(desk.M == 32);
    const SystemConfig full = load_config(root / "configs" / "full.json");
    CHECK(full.K == 8);
    CHECK_THROWS_AS(load_config(root / "configs" / "missing.json"), ConfigError);
  }
}
