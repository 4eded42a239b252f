#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "uavsplit/config.hpp"
#include "uavsplit/experiment.hpp"

using namespace uavsplit;
using doctest::Approx;

TEST_CASE("unit conversions") {
  CHECK(dbm_to_watts(-110) == Approx(1e-14).epsilon(1e-12));
  CHECK(dbm_to_watts(30) == Approx(1.0));
  CHECK(db_to_linear(-60) == Approx(1e-6).epsilon(1e-12));
}

TEST_CASE("parse key = value text") {
  const SimConfig c = parse_config(
      "# link\n"
      "noise_var_dBm = -100   # louder\n"
      "ref_gain_rho_dB=-50\n"
      "\n"
      "p_max = 2e-5\n"
      "raw_bits_S = 25000\n"
      "policy = one-task\n"
      "saa_bound = corrected\n"
      "alloc_rule = pairwise\n"
      "seed = 99\n"
      "p_max = 3e-5\n");
  CHECK(c.system.noise_w == Approx(1e-13).epsilon(1e-12));
  CHECK(c.system.ref_gain == Approx(1e-5).epsilon(1e-12));
  CHECK(c.system.p_max_w == 3e-5);
  CHECK(c.system.raw_bits == 25000);
  CHECK(c.policy == Policy::kOneTask);
  CHECK(c.saa.bound == SaaBound::kCorrected);
  CHECK(c.saa.allocation.rule == AllocationRule::kPairwiseResidual);
  CHECK(c.seed == 99);
}

TEST_CASE("config errors name the line") {
  try {
    parse_config("p_max = 1e-5\nbogus_key = 3\n");
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("p_max 1e-5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("deadline_C = 2.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("p_max = fast\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("channel = rician\n"), std::invalid_argument);
  CHECK_THROWS_AS(load_config("/nonexistent/uavsplit.cfg"), std::runtime_error);
}

TEST_CASE("dump and reload round-trips every key") {
  SimConfig c;
  c.system.p_max_w = 7.25e-6;
  c.system.noise_w = dbm_to_watts(-107.5);
  c.agent.learn_rate = 3e-4;
  c.saa.feasibility_repair = false;
  c.seed = 12345678901234ULL;
  const std::string text = dump_config(c);
  const SimConfig back = parse_config(text);
  CHECK(dump_config(back) == text);
  CHECK(back.system.p_max_w == c.system.p_max_w);
  CHECK(back.system.noise_w == Approx(c.system.noise_w).epsilon(1e-14));
  CHECK(back.seed == c.seed);
  CHECK_FALSE(back.saa.feasibility_repair);
  CHECK(config_keys().size() > 40);
}

TEST_CASE("overrides apply in order") {
  SimConfig c;
  apply_overrides(c, {"p_max=1e-5", "episodes = 3", "p_max=2e-5"});
  CHECK(c.system.p_max_w == 2e-5);
  CHECK(c.episodes == 3);
  CHECK_THROWS_AS(apply_overrides(c, {"p_max"}), std::invalid_argument);
}

TEST_CASE("shipped default config parses and validates") {
  const auto path = std::filesystem::path(__FILE__).parent_path().parent_path() / "configs" / "default.cfg";
  const SimConfig c = load_config(path.string());
  CHECK_NOTHROW(c.validate());
  CHECK(c.system.bandwidth_hz == 2e6);
  CHECK(c.system.slot_s == 0.1);
  CHECK(c.system.distance_m == 100);
  CHECK(c.system.noise_w == Approx(1e-14).epsilon(1e-12));
  CHECK(c.system.ref_gain == Approx(1e-6).epsilon(1e-12));
  CHECK(c.agent.minibatch == 64);
  CHECK(c.agent.buffer_capacity == 1000);
  CHECK(c.agent.target_sync_every == 20);
  CHECK(c.agent.hidden == 32);
}

TEST_CASE("list parsing") {
  CHECK(split_csv_list("5000, 10000,15000") == std::vector<std::string>{"5000", "10000", "15000"});
  CHECK(split_csv_list("") .empty());
  CHECK(parse_policy_list("all").size() == 3);
  CHECK(parse_policy_list("greedy,one-task") == std::vector<Policy>{Policy::kGreedy, Policy::kOneTask});
  CHECK_THROWS(parse_policy_list(""));
}

TEST_CASE("sweep") {
  SimConfig c;
  c.horizon_slots = 60;
  c.episodes = 1;
  c.seed = 4;
  SweepOptions o;
  o.var = "raw_bits_S";
  o.values = {"20000"};
  o.policies = {Policy::kOneTask};
  const auto rows = run_sweep(c, o);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].policy == "one-task");
  CHECK(rows[0].sweep_var == "raw_bits_S");
  CHECK(rows[0].sweep_value == 20000);
  CHECK(rows[0].episodes == 1);
  CHECK(rows[0].seed == 4);

  o.values = {"10000", "30000"};
  o.policies = {Policy::kGreedy, Policy::kOneTask};
  const auto serial = run_sweep(c, o);
  o.threads = 2;
  const auto parallel = run_sweep(c, o);
  REQUIRE(serial.size() == 4);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].policy == parallel[i].policy);
    CHECK(serial[i].sweep_value == parallel[i].sweep_value);
    CHECK(serial[i].energy_mean == parallel[i].energy_mean);
  }
  CHECK(serial[0].policy == "greedy");
  CHECK(serial[1].sweep_value == 10000);
  CHECK(serial[2].sweep_value == 30000);

  o.policies = {Policy::kOpetrl};
  CHECK_THROWS_AS(run_sweep(c, o), std::invalid_argument);
  o.var = "no_such_key";
  o.policies = {Policy::kGreedy};
  CHECK_THROWS_AS(run_sweep(c, o), std::invalid_argument);
}
