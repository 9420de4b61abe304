#include "qefctl/instance.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qefctl/error.hpp"

namespace qefctl {
namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& what) {
  fail(ErrorCategory::kValidation, "instance schema: " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    schema_error("missing key '" + key + "' in " + where);
  }
  return obj.at(key);
}

double get_number(const json& v, const std::string& name) {
  if (!v.is_number()) schema_error("'" + name + "' must be a number");
  return v.get<double>();
}

int get_dim(const json& v, const std::string& name) {
  if (!v.is_number_integer() || v.get<long long>() < 0 || v.get<long long>() > 100000) {
    schema_error("'" + name + "' must be a non-negative integer");
  }
  return v.get<int>();
}

RMatrix get_matrix(const json& v, int rows, int cols, const std::string& name) {
  if (!v.is_array()) schema_error("'" + name + "' must be a flat numeric array");
  const std::size_t expect = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  if (v.size() != expect) {
    schema_error("'" + name + "' has " + std::to_string(v.size()) +
                 " entries, dimensions require " + std::to_string(rows) + "x" +
                 std::to_string(cols) + " = " + std::to_string(expect));
  }
  RMatrix out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const json& e = v[static_cast<std::size_t>(i) * cols + j];
      if (!e.is_number()) schema_error("'" + name + "' contains a non-numeric entry");
      out(i, j) = e.get<double>();
    }
  }
  return out;
}

json put_matrix(const RMatrix& m) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
  }
  return arr;
}

}  // namespace

ProblemInstance parse_instance(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCategory::kValidation, std::string("instance is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) schema_error("top level must be an object");

  ProblemInstance inst;
  const json& pj = require(root, "plant", "instance");
  PlantSpec& p = inst.plant;
  p.n = get_dim(require(pj, "n", "plant"), "plant.n");
  p.m = get_dim(require(pj, "m", "plant"), "plant.m");
  p.d = get_dim(require(pj, "d", "plant"), "plant.d");
  p.r = get_dim(require(pj, "r", "plant"), "plant.r");
  p.Theta = get_matrix(require(pj, "Theta", "plant"), p.n, p.n, "plant.Theta");
  p.R = get_matrix(require(pj, "R", "plant"), p.n, p.n, "plant.R");
  p.M = get_matrix(require(pj, "M", "plant"), p.m, p.n, "plant.M");
  p.N = get_matrix(require(pj, "N", "plant"), p.d, p.n, "plant.N");
  p.D = get_matrix(require(pj, "D", "plant"), p.r, p.m, "plant.D");
  const DerivedPlant plant = derive_plant(p);

  const json& wj = require(root, "weights", "instance");
  const json& sj = require(wj, "S", "weights");
  if (!sj.is_array() || p.n == 0 || sj.size() % static_cast<std::size_t>(p.n) != 0) {
    schema_error("'weights.S' length must be a multiple of n");
  }
  const int nu = static_cast<int>(sj.size() / static_cast<std::size_t>(p.n));
  inst.weights.S = get_matrix(sj, nu, p.n, "weights.S");
  inst.weights.K = get_matrix(require(wj, "K", "weights"), nu, p.d, "weights.K");
  validate_weights(plant, inst.weights);

  inst.theta = get_number(require(root, "theta", "instance"), "theta");
  if (!(inst.theta >= 0.0) || !std::isfinite(inst.theta)) {
    schema_error("'theta' must be a finite non-negative number");
  }

  if (root.contains("controller") && !root.at("controller").is_null()) {
    const json& cj = root.at("controller");
    ControllerParams k;
    k.a = get_matrix(require(cj, "a", "controller"), p.n, p.n, "controller.a");
    k.b = get_matrix(require(cj, "b", "controller"), p.n, p.r, "controller.b");
    k.c = get_matrix(require(cj, "c", "controller"), p.d, p.n, "controller.c");
    validate_controller(plant, k);
    inst.controller = std::move(k);
  }

  if (root.contains("quadrature")) {
    const json& q = root.at("quadrature");
    if (q.contains("abs_tol")) inst.quadrature.abs_tol = get_number(q.at("abs_tol"), "quadrature.abs_tol");
    if (q.contains("rel_tol")) inst.quadrature.rel_tol = get_number(q.at("rel_tol"), "quadrature.rel_tol");
    if (q.contains("lambda_max")) {
      inst.quadrature.lambda_max = get_number(q.at("lambda_max"), "quadrature.lambda_max");
    }
    if (!(inst.quadrature.abs_tol >= 0.0) || !(inst.quadrature.rel_tol >= 0.0) ||
        !(inst.quadrature.lambda_max >= 0.0) ||
        inst.quadrature.abs_tol + inst.quadrature.rel_tol <= 0.0) {
      schema_error("quadrature tolerances must be non-negative and not both zero");
    }
  }

  if (root.contains("oracle")) {
    const json& o = root.at("oracle");
    if (o.contains("T")) inst.oracle.T = get_number(o.at("T"), "oracle.T");
    if (o.contains("N")) inst.oracle.N = get_dim(o.at("N"), "oracle.N");
    if (inst.oracle.N < 2) schema_error("'oracle.N' must be at least 2");
  }

  SynthesisConfig& s = inst.synthesis;
  if (root.contains("synthesis")) {
    const json& sj2 = root.at("synthesis");
    if (sj2.contains("max_iters")) s.max_iters = get_dim(sj2.at("max_iters"), "synthesis.max_iters");
    if (sj2.contains("grad_tol")) s.grad_tol = get_number(sj2.at("grad_tol"), "synthesis.grad_tol");
    if (sj2.contains("initial_step")) {
      s.initial_step = get_number(sj2.at("initial_step"), "synthesis.initial_step");
    }
    if (sj2.contains("backtrack_factor")) {
      s.backtrack_factor = get_number(sj2.at("backtrack_factor"), "synthesis.backtrack_factor");
    }
    if (sj2.contains("armijo_c")) s.armijo_c = get_number(sj2.at("armijo_c"), "synthesis.armijo_c");
    if (sj2.contains("theta_continuation")) {
      const json& tc = sj2.at("theta_continuation");
      if (!tc.is_array()) schema_error("'synthesis.theta_continuation' must be an array");
      for (const json& t : tc) s.theta_continuation.push_back(get_number(t, "synthesis.theta_continuation"));
    }
    if (!(s.backtrack_factor > 0.0 && s.backtrack_factor < 1.0)) {
      schema_error("'synthesis.backtrack_factor' must lie in (0, 1)");
    }
    if (!(s.armijo_c > 0.0 && s.armijo_c < 1.0)) {
      schema_error("'synthesis.armijo_c' must lie in (0, 1)");
    }
    if (!(s.initial_step > 0.0)) schema_error("'synthesis.initial_step' must be positive");
    for (std::size_t k = 1; k < s.theta_continuation.size(); ++k) {
      if (!(s.theta_continuation[k] > s.theta_continuation[k - 1])) {
        schema_error("'synthesis.theta_continuation' must be ascending");
      }
    }
  }
  s.theta = inst.theta;
  return inst;
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::kIo, "cannot open instance file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorCategory::kIo, "failed to read instance file '" + path + "'");
  return parse_instance(buf.str());
}

std::string dump_instance(const ProblemInstance& inst) {
  const PlantSpec& p = inst.plant;
  json root;
  root["plant"] = {{"n", p.n},
                   {"m", p.m},
                   {"d", p.d},
                   {"r", p.r},
                   {"Theta", put_matrix(p.Theta)},
                   {"R", put_matrix(p.R)},
                   {"M", put_matrix(p.M)},
                   {"N", put_matrix(p.N)},
                   {"D", put_matrix(p.D)}};
  root["weights"] = {{"S", put_matrix(inst.weights.S)}, {"K", put_matrix(inst.weights.K)}};
  root["theta"] = inst.theta;
  if (inst.controller) {
    root["controller"] = {{"a", put_matrix(inst.controller->a)},
                          {"b", put_matrix(inst.controller->b)},
                          {"c", put_matrix(inst.controller->c)}};
  }
  root["quadrature"] = {{"abs_tol", inst.quadrature.abs_tol},
                        {"rel_tol", inst.quadrature.rel_tol},
                        {"lambda_max", inst.quadrature.lambda_max}};
  root["oracle"] = {{"T", inst.oracle.T}, {"N", inst.oracle.N}};
  const SynthesisConfig& s = inst.synthesis;
  root["synthesis"] = {{"max_iters", s.max_iters},
                       {"grad_tol", s.grad_tol},
                       {"initial_step", s.initial_step},
                       {"backtrack_factor", s.backtrack_factor},
                       {"armijo_c", s.armijo_c}};
  if (!s.theta_continuation.empty()) {
    root["synthesis"]["theta_continuation"] = s.theta_continuation;
  }
  // nlohmann prints doubles in shortest round-trip form, so reloading is exact.
  return root.dump(2) + "\n";
}

void save_instance(const ProblemInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCategory::kIo, "cannot write '" + path + "'");
  out << dump_instance(inst);
  if (!out) fail(ErrorCategory::kIo, "failed writing '" + path + "'");
}

}  // namespace qefctl
