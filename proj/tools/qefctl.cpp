#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qefctl/commands.hpp"
#include "qefctl/error.hpp"
#include "qefctl/gramians.hpp"
#include "qefctl/random_instance.hpp"

using namespace qefctl;

namespace {

struct Flags {
  std::string instance;
  std::optional<double> theta;
  std::optional<double> quad_tol;
  std::optional<double> lambda_max;
  std::optional<double> oracle_T;
  std::optional<int> oracle_N;
  std::string csv;  // empty means stdout
  std::string out;
  double tol = 1e-5;
  std::string start = "lqg";
  std::uint64_t seed = 1;
  RandomInstanceConfig random;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("instance", f.instance, "problem instance (JSON)")->required();
  cmd->add_option("--theta", f.theta, "override the instance risk parameter");
  cmd->add_option("--quad-tol", f.quad_tol, "relative quadrature tolerance");
  cmd->add_option("--lambda-max", f.lambda_max, "split point of the frequency half-line");
  cmd->add_option("--oracle-N", f.oracle_N, "oracle grid size");
  cmd->add_option("--oracle-T", f.oracle_T, "largest oracle horizon");
}

ProblemInstance load(const Flags& f) {
  ProblemInstance inst = load_instance(f.instance);
  apply_overrides(inst, {f.theta, f.quad_tol, f.lambda_max, f.oracle_T, f.oracle_N});
  return inst;
}

// Runs body with the CSV stream: a file when --csv is given, else stdout.
template <typename Fn>
void with_csv(const std::string& path, Fn&& body) {
  if (path.empty()) {
    body(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) fail(ErrorCategory::kIo, "cannot write '" + path + "'");
  body(out);
  if (!out) fail(ErrorCategory::kIo, "failed writing '" + path + "'");
}

void print_admissibility(const AdmissibilityReport& a) {
  std::cout << "stable: " << (a.stable ? "yes" : "no") << "\n"
            << "spec_sup: " << format_double(a.spec_sup) << " at lambda "
            << format_double(a.spec_argmax) << "\n"
            << "spec_ok: " << (a.spec_ok ? "yes" : "no") << "\n"
            << "min_psi_rel_sigma: " << format_double(a.min_psi_rel_sigma) << "\n"
            << "psidet_ok: " << (a.psidet_ok ? "yes" : "no") << "\n"
            << "admissible: " << (a.admissible ? "yes" : "no") << "\n";
}

int run_validate(const Flags& f) {
  const ProblemInstance inst = load(f);
  const DerivedPlant p = derive_plant(inst.plant);
  std::cout << "instance ok: n=" << p.n << " m=" << p.m << " d=" << p.d << " r=" << p.r
            << " nu=" << inst.weights.nu() << " theta=" << format_double(inst.theta) << "\n"
            << "residual A Theta + Theta A^T + B J B^T: "
            << format_double(pr_residual_dynamics(p)) << "\n"
            << "residual Theta C^T + B J D^T: " << format_double(pr_residual_measurement(p))
            << "\n";
  if (inst.controller) {
    const ClosedLoop cl = assemble_closed_loop(p, inst.weights, *inst.controller);
    std::cout << "controller: present, spectral abscissa "
              << format_double(spectral_abscissa(cl.calA)) << "\n";
  } else {
    std::cout << "controller: absent\n";
  }
  return 0;
}

int run_evaluate(const Flags& f) {
  const EvaluateResult r = evaluate_instance(load(f));
  std::cout << "controller: " << (r.lqg_controller ? "lqg" : "instance") << "\n"
            << "theta: " << format_double(r.theta) << "\n"
            << "ups: " << format_double(r.ups) << "\n"
            << "ups_error_estimate: " << format_double(r.growth.error_estimate) << "\n"
            << "ups0: " << format_double(r.ups0) << "\n";
  if (r.theta > 0.0) std::cout << "ups_over_theta: " << format_double(r.ups / r.theta) << "\n";
  std::cout << "theta_limit: " << format_double(r.theta_limit) << "\n"
            << "lambda_max: " << format_double(r.growth.lambda_max) << "\n";
  print_admissibility(r.admissibility);
  return 0;
}

int run_grad_check(const Flags& f) {
  const GradCheckResult r = grad_check(load(f));
  with_csv(f.csv, [&](std::ostream& os) { write_grad_check_csv(os, r); });
  std::cerr << "max_rel_error: " << format_double(r.max_rel_error) << "\n";
  if (r.max_rel_error > f.tol) {
    std::cerr << "error[numerical]: derivative mismatch exceeds " << format_double(f.tol) << "\n";
    return exit_code(ErrorCategory::kNumerical);
  }
  return 0;
}

int run_oracle_compare(const Flags& f) {
  const std::vector<OracleRow> rows = oracle_compare(load(f));
  with_csv(f.csv, [&](std::ostream& os) { write_oracle_csv(os, rows); });
  return 0;
}

int run_synthesize(const Flags& f) {
  ProblemInstance inst = load(f);
  const SynthesisReport rep = synthesize_instance(inst, f.start == "instance");
  with_csv(f.csv, [&](std::ostream& os) { write_trace_csv(os, rep); });
  std::cerr << "termination: " << to_string(rep.reason) << "\n"
            << "initial_ups: " << format_double(rep.initial_ups) << "\n"
            << "final_ups: " << format_double(rep.final_ups) << "\n"
            << "final_residual: " << format_double(rep.final_residual) << "\n";
  if (!f.out.empty()) {
    inst.controller = rep.controller;
    save_instance(inst, f.out);
  }
  return rep.reason == TerminationReason::kLineSearchFailed ? exit_code(ErrorCategory::kNumerical)
                                                            : 0;
}

int run_generate(const Flags& f) {
  const ProblemInstance inst = random_instance(f.seed, f.random);
  if (f.out.empty()) {
    std::cout << dump_instance(inst);
  } else {
    save_instance(inst, f.out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-sensitive measurement feedback synthesis for linear quantum plants"};
  app.require_subcommand(1);
  Flags f;

  CLI::App* validate = app.add_subcommand("validate", "load and check an instance");
  add_common(validate, f);

  CLI::App* evaluate = app.add_subcommand("evaluate", "growth rate, LQG cost and admissibility");
  add_common(evaluate, f);

  CLI::App* grad = app.add_subcommand("grad-check", "analytic derivatives vs finite differences");
  add_common(grad, f);
  grad->add_option("--csv", f.csv, "write the table here instead of stdout");
  grad->add_option("--tol", f.tol, "largest accepted relative error")->capture_default_str();

  CLI::App* oracle = app.add_subcommand("oracle-compare", "time-domain oracle vs frequency formula");
  add_common(oracle, f);
  oracle->add_option("--csv", f.csv, "write oracle.csv here instead of stdout");

  CLI::App* synth = app.add_subcommand("synthesize", "gradient descent from the LQG controller");
  add_common(synth, f);
  synth->add_option("--csv", f.csv, "write trace.csv here instead of stdout");
  synth->add_option("-o,--out", f.out, "write the instance with the final controller");
  synth->add_option("--start", f.start, "initial controller")
      ->check(CLI::IsMember({"lqg", "instance"}))
      ->capture_default_str();

  CLI::App* gen = app.add_subcommand("generate", "random admissible instance");
  gen->add_option("--seed", f.seed, "random seed")->capture_default_str();
  gen->add_option("--n", f.random.n, "plant order")->capture_default_str();
  gen->add_option("--m", f.random.m, "field channels")->capture_default_str();
  gen->add_option("--d", f.random.d, "actuator dimension")->capture_default_str();
  gen->add_option("--r", f.random.r, "observation channels")->capture_default_str();
  gen->add_option("--nu", f.random.nu, "penalty dimension")->capture_default_str();
  gen->add_option("-o,--out", f.out, "output path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorCategory::kValidation);
  }

  try {
    if (*validate) return run_validate(f);
    if (*evaluate) return run_evaluate(f);
    if (*grad) return run_grad_check(f);
    if (*oracle) return run_oracle_compare(f);
    if (*synth) return run_synthesize(f);
    if (*gen) return run_generate(f);
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.category()) << "]: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error[numerical]: " << e.what() << "\n";
    return exit_code(ErrorCategory::kNumerical);
  }
  return 0;
}
