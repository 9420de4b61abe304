#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "qefctl/commands.hpp"
#include "qefctl/error.hpp"
#include "qefctl/instance.hpp"
#include "qefctl/random_instance.hpp"
#include "support/testing.hpp"

using namespace qefctl;
using json = nlohmann::json;

namespace {

const char* kCanonical = R"({
  "plant": {"n": 2, "m": 2, "d": 1, "r": 1,
            "Theta": [0, 1, -1, 0], "R": [1, 0, 0, 1], "M": [1, 0, 0, 1],
            "N": [1, 0], "D": [1, 0]},
  "weights": {"S": [1, 0, 0, 1, 0, 0], "K": [0, 0, 1]},
  "theta": 0.5
})";

ErrorCategory category_of(const std::string& text, std::string* msg = nullptr) {
  try {
    parse_instance(text);
  } catch (const Error& e) {
    if (msg) *msg = e.what();
    return e.category();
  }
  FAIL("instance was accepted");
  return ErrorCategory::kIo;
}

std::string mutate(const std::function<void(json&)>& f) {
  json j = json::parse(kCanonical);
  f(j);
  return j.dump();
}

}  // namespace

TEST_CASE("parse the canonical instance") {
  const ProblemInstance inst = parse_instance(kCanonical);
  CHECK(inst.plant.n == 2);
  CHECK(inst.weights.nu() == 3);
  CHECK(inst.theta == 0.5);
  CHECK_FALSE(inst.controller.has_value());
  // Row-major flat layout.
  CHECK(inst.plant.Theta(0, 1) == 1.0);
  CHECK(inst.plant.Theta(1, 0) == -1.0);
  CHECK(inst.weights.S(1, 1) == 1.0);
  CHECK(inst.weights.K(2, 0) == 1.0);
  CHECK(inst.oracle.N == 800);
}

TEST_CASE("optional sections") {
  const ProblemInstance inst = parse_instance(mutate([](json& j) {
    j["controller"] = {{"a", {-2.1, 1.9, -2.3, -1.8}}, {"b", {0.3, 0.2}}, {"c", {0.4, -0.5}}};
    j["quadrature"] = {{"abs_tol", 1e-12}, {"rel_tol", 1e-9}, {"lambda_max", 80.0}};
    j["oracle"] = {{"T", 12.0}, {"N", 300}};
    j["synthesis"] = {{"max_iters", 7}};
  }));
  REQUIRE(inst.controller.has_value());
  CHECK(inst.controller->a(0, 1) == 1.9);
  CHECK(inst.controller->b(1, 0) == 0.2);
  CHECK(inst.quadrature.lambda_max == 80.0);
  CHECK(inst.oracle.T == 12.0);
  CHECK(inst.oracle.N == 300);
  CHECK(inst.synthesis.max_iters == 7);
}

TEST_CASE("schema and model violations are validation errors") {
  std::string msg;
  CHECK(category_of("{not json", &msg) == ErrorCategory::kValidation);
  CHECK(category_of(mutate([](json& j) { j.erase("theta"); }), &msg) == ErrorCategory::kValidation);
  CHECK(msg.find("theta") != std::string::npos);
  CHECK(category_of(mutate([](json& j) { j["plant"]["R"] = {1, 0, 0}; }), &msg) ==
        ErrorCategory::kValidation);
  CHECK(msg.find("R") != std::string::npos);
  CHECK(category_of(mutate([](json& j) { j["plant"]["Theta"] = {0, 1, 1, 0}; }), &msg) ==
        ErrorCategory::kValidation);
  CHECK(msg.find("antisymmetric") != std::string::npos);
  CHECK(category_of(mutate([](json& j) { j["theta"] = -1.0; })) == ErrorCategory::kValidation);
  CHECK(category_of(mutate([](json& j) { j["plant"]["n"] = "two"; })) == ErrorCategory::kValidation);
  CHECK(category_of(mutate([](json& j) { j["weights"]["K"] = {0, 1}; })) == ErrorCategory::kValidation);
}

TEST_CASE("missing file is an io error") {
  try {
    load_instance("/nonexistent/dir/instance.json");
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kIo);
  }
}

TEST_CASE("dump and parse round-trip exactly") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ProblemInstance a = random_instance(seed);
    const std::string text = dump_instance(a);
    const ProblemInstance b = parse_instance(text);
    CHECK(dump_instance(b) == text);
    CHECK((a.plant.Theta - b.plant.Theta).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.controller->a - b.controller->a).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.theta == b.theta);
  }
  const auto path = std::filesystem::temp_directory_path() / "qefctl_instance_roundtrip.json";
  const ProblemInstance a = random_instance(9);
  save_instance(a, path.string());
  CHECK(dump_instance(load_instance(path.string())) == dump_instance(a));
  std::filesystem::remove(path);
}

TEST_CASE("random instances are deterministic in the seed") {
  CHECK(dump_instance(random_instance(4)) == dump_instance(random_instance(4)));
  CHECK(dump_instance(random_instance(4)) != dump_instance(random_instance(5)));
}

TEST_CASE("overrides") {
  ProblemInstance inst = parse_instance(kCanonical);
  Overrides o;
  o.theta = 0.25;
  o.quad_tol = 1e-6;
  o.lambda_max = 30.0;
  o.oracle_T = 5.0;
  o.oracle_N = 100;
  apply_overrides(inst, o);
  CHECK(inst.theta == 0.25);
  CHECK(inst.synthesis.theta == 0.25);
  CHECK(inst.quadrature.rel_tol == 1e-6);
  CHECK(inst.quadrature.abs_tol == doctest::Approx(1e-8));
  CHECK(inst.quadrature.lambda_max == 30.0);
  CHECK(inst.oracle.T == 5.0);
  CHECK(inst.oracle.N == 100);
}

TEST_CASE("evaluate: canonical LQG loop") {
  const EvaluateResult r = evaluate_instance(parse_instance(kCanonical));
  CHECK(r.lqg_controller);
  CHECK(r.ups == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r.ups0 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.admissibility.admissible);
  CHECK(r.theta_limit > 0.5);
}

TEST_CASE("evaluate: inadmissible theta") {
  ProblemInstance inst = parse_instance(kCanonical);
  inst.theta = 50.0;
  try {
    evaluate_instance(inst);
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kInadmissible);
  }
}

TEST_CASE("grad check on the offset controller") {
  ProblemInstance inst = parse_instance(kCanonical);
  inst.controller = qefctl::testing::canonical_offset_controller();
  const GradCheckResult r = grad_check(inst);
  CHECK(r.entries.size() == 8);
  CHECK(r.max_rel_error < 1e-5);
  std::ostringstream csv;
  write_grad_check_csv(csv, r);
  CHECK(csv.str().rfind("block,", 0) == 0);
}

TEST_CASE("formatting and exit codes") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(exit_code(ErrorCategory::kValidation) == 2);
  CHECK(exit_code(ErrorCategory::kInadmissible) == 3);
  CHECK(exit_code(ErrorCategory::kNumerical) == 4);
  CHECK(exit_code(ErrorCategory::kIo) == 5);
}

TEST_CASE("oracle and trace CSV headers") {
  std::ostringstream oc, tc;
  write_oracle_csv(oc, {OracleRow{1.0, 0.5, 0.5, 0.0}});
  CHECK(oc.str() == "T,lnXi_over_T,ups_freq,rel_gap\n1,0.5,0.5,0\n");
  SynthesisReport rep;
  rep.iterates.push_back({0, 0.5, 0.25, 1e-3, 0.0});
  write_trace_csv(tc, rep);
  CHECK(tc.str().rfind("iter,ups,residual,step\n", 0) == 0);
}
