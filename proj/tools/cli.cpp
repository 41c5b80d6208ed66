#include "cli.hpp"

#include "sensitest/chain.hpp"
#include "sensitest/dqm.hpp"
#include "sensitest/langlie.hpp"
#include "sensitest/mc.hpp"
#include "sensitest/path_io.hpp"
#include "sensitest/serialize.hpp"
#include "sensitest/service.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

namespace sensitest::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelFlags {
  std::string link = "logit";
  double alpha = 0.0;
  double beta = 1.0;

  void attach(CLI::App* app) {
    app->add_option("--link", link, "Link function")->check(CLI::IsMember({"logit", "probit"}))->capture_default_str();
    app->add_option("--alpha", alpha, "True intercept")->capture_default_str();
    app->add_option("--beta", beta, "True slope")->capture_default_str();
  }
  ModelSpec model() const { return {parse_link(link), Vec2(alpha, beta)}; }
};

struct DesignFlags {
  std::string design = "bruceton";
  double x1 = 0.0, d = 1.0, c = 1.0, target = 0.5, a = 0.0, b = 1.0, eps = 0.1;
  // One entry per subcommand the flags are attached to.
  std::vector<CLI::Option*> o_x1, o_d, o_c, o_target, o_a, o_b, o_eps;

  void attach(CLI::App* app, bool q_names_target) {
    app->add_option("--design", design, "bruceton | reverse-bruceton | robbins-monro | langlie")
        ->check(CLI::IsMember({"bruceton", "reverse-bruceton", "robbins-monro", "langlie"}))
        ->capture_default_str();
    o_x1.push_back(app->add_option("--x1", x1, "First level (Bruceton, Robbins-Monro)"));
    o_d.push_back(app->add_option("--d", d, "Step size (Bruceton)"));
    o_c.push_back(app->add_option("--c", c, "Gain scale, a_i = c / i (Robbins-Monro)"));
    o_target.push_back(app->add_option(q_names_target ? "--target,--q" : "--target", target, "Target quantile (Robbins-Monro)"));
    o_a.push_back(app->add_option("--a", a, "Lower bound (Langlie)"));
    o_b.push_back(app->add_option("--b", b, "Upper bound (Langlie)"));
    o_eps.push_back(app->add_option("--eps", eps, "Perturbation size (Langlie)"));
  }

  DesignRule rule() const {
    auto reject = [&](std::initializer_list<const std::vector<CLI::Option*>*> foreign) {
      for (const auto* opts : foreign) {
        for (const auto* opt : *opts) {
          if (opt->count() > 0) throw UsageError(opt->get_name() + " does not apply to --design " + design);
        }
      }
    };
    DesignRule r;
    if (design == "bruceton" || design == "reverse-bruceton") {
      reject({&o_c, &o_target, &o_a, &o_b, &o_eps});
      r = design == "bruceton" ? DesignRule{Bruceton{x1, d}} : DesignRule{ReverseBruceton{x1, d}};
    } else if (design == "robbins-monro") {
      reject({&o_d, &o_a, &o_b, &o_eps});
      r = RobbinsMonro{x1, c, target};
    } else {
      reject({&o_x1, &o_d, &o_c, &o_target});
      r = MarkovLanglie{a, b, eps};
    }
    validate(r);
    return r;
  }
};

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string(flag) + ": cannot parse '" + item + "'");
    }
  }
  return values;
}

Vec2 parse_pair(const std::string& text, const char* flag) {
  const auto v = parse_list(text, flag);
  if (v.size() != 2) throw UsageError(std::string(flag) + " expects two comma-separated numbers");
  return {v[0], v[1]};
}

std::vector<std::size_t> parse_counts(const std::string& text, const char* flag) {
  std::vector<std::size_t> out;
  for (const double v : parse_list(text, flag)) {
    if (!(v >= 1) || v != std::floor(v)) throw UsageError(std::string(flag) + " expects positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

template <class Writer>
void write_file(const std::string& filename, Writer&& writer) {
  if (filename.empty()) return;
  std::ofstream file(filename);
  if (!file) throw std::runtime_error("cannot open '" + filename + "' for writing");
  writer(file);
  if (!file) throw std::runtime_error("write to '" + filename + "' failed");
}

void emit_json(const json& j, const std::string& filename, std::ostream& out) {
  write_file(filename, [&](std::ostream& f) { f << j.dump(2) << '\n'; });
  out << j.dump(2) << '\n';
}

json estimate_report(const ExperimentPath& path, Link link, double q, double level) {
  const EstimateResult est = fit_mle(path, link);
  json j = to_json(est);
  j["link"] = std::string(to_string(link));
  j["q"] = q;
  j["level"] = level;
  if (est.status == FitStatus::converged) {
    try {
      j["gamma_q"] = quantile_point(est.theta_hat, link, q);
      j["wald"] = to_json(ci_wald(est, link, q, level));
      j["fieller"] = to_json(ci_fieller(est, link, q, level));
    } catch (const SingularError& e) {
      j["interval_error"] = e.what();
    }
  }
  if (!path.warnings.empty()) j["warnings"] = path.warnings;
  return j;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive designs for binary-response sensitivity testing", "sensitest"};
  app.set_config("--config", "", "Read options from a key=value file");
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Simulate one experiment path and write it as CSV");
  DesignFlags sim_design;
  ModelFlags sim_model;
  std::size_t sim_n = 100;
  std::uint64_t sim_seed = 0, sim_stream = 0;
  std::string sim_out;
  sim_design.attach(simulate, true);
  sim_model.attach(simulate);
  simulate->add_option("--n", sim_n, "Number of trials")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--seed", sim_seed, "Master seed")->required();
  simulate->add_option("--stream", sim_stream, "Stream id")->capture_default_str();
  simulate->add_option("--out", sim_out, "Output CSV (stdout when omitted)");

  // estimate
  auto* estimate = app.add_subcommand("estimate", "Fit the MLE to a path file and report quantile intervals");
  std::string est_path, est_link = "logit";
  double est_q = 0.5, est_level = 0.95;
  estimate->add_option("path,--path", est_path, "Path CSV file")->required();
  estimate->add_option("--link", est_link)->check(CLI::IsMember({"logit", "probit"}))->capture_default_str();
  estimate->add_option("--q", est_q, "Quantile to estimate")->capture_default_str();
  estimate->add_option("--level", est_level, "Confidence level")->capture_default_str();

  // verify
  auto* verify = app.add_subcommand("verify", "Numerical verification pipelines");
  verify->require_subcommand(1);
  DesignFlags ver_design;
  ModelFlags ver_model;
  std::string ver_h = "1,1", ver_grid, ver_json, ver_csv, ver_fit_link;
  std::size_t ver_reps = 0, ver_n = 500;
  std::uint64_t ver_seed = 0;
  double ver_q = 0.5, ver_level = 0.95;
  auto* v_sdqm = verify->add_subcommand("sdqm", "Median S-DQM sums along an n grid");
  auto* v_lan = verify->add_subcommand("lan", "Median LAN remainder along an n grid");
  auto* v_norm = verify->add_subcommand("normality", "Monte Carlo normality of the MLE");
  auto* v_cov = verify->add_subcommand("coverage", "Monte Carlo coverage of Wald and Fieller intervals");
  for (auto* sub : {v_sdqm, v_lan, v_norm, v_cov}) {
    ver_design.attach(sub, false);
    ver_model.attach(sub);
    sub->add_option("--seed", ver_seed, "Master seed")->required();
    sub->add_option("--reps", ver_reps, "Replications per point");
    sub->add_option("--out-json", ver_json, "JSON report file");
    sub->add_option("--out-csv", ver_csv, "CSV trend or replication file");
  }
  for (auto* sub : {v_sdqm, v_lan}) {
    sub->set_help_flag("--help", "Print this help message and exit");
    sub->add_option("--h", ver_h, "Local direction h as 'h1,h2'")->capture_default_str();
    sub->add_option("--n-grid", ver_grid, "Comma-separated increasing n values");
  }
  for (auto* sub : {v_norm, v_cov}) {
    sub->add_option("--n", ver_n, "Trials per path")->capture_default_str();
    sub->add_option("--fit-link", ver_fit_link, "Link used for fitting (defaults to --link)");
  }
  v_cov->add_option("--q", ver_q, "Quantile to estimate")->capture_default_str();
  v_cov->add_option("--level", ver_level, "Confidence level")->capture_default_str();

  // chain
  auto* chain = app.add_subcommand("chain", "Markov-chain analyses of the designs");
  chain->require_subcommand(1);
  ModelFlags ch_model;
  std::string ch_json, ch_csv;
  auto* ch_bruceton = chain->add_subcommand("bruceton", "Lattice chain: stationary law, limiting J, Foster drift");
  double ch_d = 1.0, ch_x1 = 0.0;
  int ch_K = 30, ch_xmax = 200;
  bool ch_reverse = false;
  ch_model.attach(ch_bruceton);
  ch_bruceton->add_option("--d", ch_d, "Step size")->capture_default_str();
  ch_bruceton->add_option("--x1", ch_x1, "Lattice origin")->capture_default_str();
  ch_bruceton->add_option("--K", ch_K, "Truncation: states x1 + d {-K..K}")->capture_default_str();
  ch_bruceton->add_option("--x-max", ch_xmax, "Foster scan radius")->capture_default_str();
  ch_bruceton->add_flag("--reverse", ch_reverse, "Reverse Bruceton orientation");
  ch_bruceton->add_option("--out-json", ch_json, "JSON report file");
  ch_bruceton->add_option("--out-csv", ch_csv, "Stationary distribution CSV (x,pi)");

  auto* ch_langlie = chain->add_subcommand("langlie", "Langlie kernel: drift, interval unions, invariant measure");
  double lg_a = 0.0, lg_b = 1.0, lg_eps = 0.1;
  int lg_generations = 6, lg_grid = 1000;
  std::optional<double> lg_m;
  bool lg_skip_invariant = false;
  ch_model.attach(ch_langlie);
  ch_langlie->add_option("--a", lg_a, "Lower bound")->capture_default_str();
  ch_langlie->add_option("--b", lg_b, "Upper bound")->capture_default_str();
  ch_langlie->add_option("--eps", lg_eps, "Perturbation size")->capture_default_str();
  ch_langlie->add_option("--generations", lg_generations, "Interval-union generations to report")->capture_default_str();
  ch_langlie->add_option("--grid-m", lg_grid, "Cells in the discretized kernel")->capture_default_str();
  ch_langlie->add_option("--m", lg_m, "Drift function slope (default 2 m_min)");
  ch_langlie->add_flag("--skip-invariant", lg_skip_invariant, "Skip the invariant-measure solve");
  ch_langlie->add_option("--out-json", ch_json, "JSON report file");
  ch_langlie->add_option("--out-csv", ch_csv, "Invariant measure CSV (cell_midpoint,mass)");

  // bounds
  auto* bounds = app.add_subcommand("bounds", "Suprema of the score-moment functionals of a link");
  std::string bd_link = "logit";
  bounds->add_option("--link", bd_link)->check(CLI::IsMember({"logit", "probit"}))->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  std::string sv_listen, sv_dir;
  serve->add_option("--listen", sv_listen, "host:port (env SENSITEST_LISTEN, default 127.0.0.1:8080)");
  serve->add_option("--data-dir", sv_dir, "Session log directory (env SENSITEST_DATA_DIR, default ./sessions)");

  std::vector<std::string> storage{"sensitest"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) {
      const DesignRule rule = sim_design.rule();
      const ModelSpec model = sim_model.model();
      const auto path = simulate_path(rule, model, sim_n, {sim_seed, sim_stream});
      std::size_t responses = 0;
      for (const auto& t : path.trials) responses += static_cast<std::size_t>(t.y);
      std::ostream& summary = sim_out.empty() ? err : out;
      if (sim_out.empty()) {
        write_path_csv(path, out);
      } else {
        save_path(path, sim_out);
      }
      summary << "n=" << path.size() << " final_level=" << format_double(path.trials.back().x)
              << " next_level=" << format_double(next_level(path)) << " responses=" << responses
              << " non_responses=" << path.size() - responses << '\n';
      for (const auto& w : path.warnings) err << "warning: " << w << '\n';
      return kExitOk;
    }

    if (*estimate) {
      const auto path = load_path(est_path);
      out << estimate_report(path, parse_link(est_link), est_q, est_level).dump(2) << '\n';
      return kExitOk;
    }

    if (*verify) {
      const DesignRule rule = ver_design.rule();
      const ModelSpec model = ver_model.model();
      if (*v_sdqm || *v_lan) {
        const Vec2 h = parse_pair(ver_h, "--h");
        if (*v_sdqm) {
          const auto grid = parse_counts(ver_grid.empty() ? "100,1000,10000" : ver_grid, "--n-grid");
          const auto report = sdqm_trend(rule, model, h, grid, ver_reps ? ver_reps : 50, {ver_seed, 0});
          write_file(ver_csv, [&](std::ostream& f) { write_dqm_csv(report, f); });
          emit_json(to_json(report), ver_json, out);
        } else {
          const auto grid = parse_counts(ver_grid.empty() ? "200,2000" : ver_grid, "--n-grid");
          const auto trend = lan_trend(rule, model, h, grid, ver_reps ? ver_reps : 500, {ver_seed, 0});
          write_file(ver_csv, [&](std::ostream& f) { write_lan_csv(trend, f); });
          emit_json(to_json(trend), ver_json, out);
        }
        return kExitOk;
      }
      McConfig cfg;
      cfg.rule = rule;
      cfg.model = model;
      cfg.n = ver_n;
      cfg.reps = ver_reps ? ver_reps : 2000;
      cfg.master_seed = ver_seed;
      cfg.link_for_fit = ver_fit_link.empty() ? model.link : parse_link(ver_fit_link);
      cfg.q = ver_q;
      cfg.level = ver_level;
      validate_for_report(cfg);
      const auto report = run_mc(cfg);
      json j = to_json(report);
      if (*v_norm) {
        if (report.ks && report.covariance_rel_error) {
          const bool pass = (*report.ks)[0] < 0.05 && (*report.ks)[1] < 0.05 && *report.covariance_rel_error < 0.15;
          j["thresholds"] = {{"ks", 0.05}, {"covariance_rel_error", 0.15}};
          j["result"] = pass ? "PASS" : "FAIL";
        } else {
          // No invertible limit: report the conditioning trajectory only.
          j["result"] = "NOT_APPLICABLE";
        }
      } else {
        const double tol = 0.02;
        const bool pass = std::abs(report.coverage_wald - cfg.level) <= tol &&
                          std::abs(report.coverage_fieller - cfg.level) <= tol;
        j["thresholds"] = {{"coverage_band", tol}};
        j["result"] = pass ? "PASS" : "FAIL";
      }
      write_file(ver_csv, [&](std::ostream& f) { write_replications_csv(report, f); });
      emit_json(j, ver_json, out);
      return kExitOk;
    }

    if (*ch_bruceton) {
      const ModelSpec model = ch_model.model();
      if (!(model.beta() > 0.0)) throw UsageError("chain analysis requires --beta > 0");
      const auto report = analyze_chain(model, ch_d, ch_x1, ch_K, ch_xmax,
                                        ch_reverse ? StepDirection::reverse : StepDirection::standard);
      json j = to_json(report);
      j["design"] = ch_reverse ? "reverse-bruceton" : "bruceton";
      write_file(ch_csv, [&](std::ostream& f) { write_pi_csv(report.chain, report.stationary.pi, f); });
      emit_json(j, ch_json, out);
      return kExitOk;
    }

    if (*ch_langlie) {
      const ModelSpec model = ch_model.model();
      if (!(model.beta() > 0.0)) throw UsageError("chain analysis requires --beta > 0");
      const MarkovLanglie rule{lg_a, lg_b, lg_eps};
      const LanglieKernel kernel = normalized_kernel(rule, model, lg_grid);
      json j{{"design", "langlie"}, {"a", lg_a}, {"b", lg_b}, {"eps", lg_eps}, {"model", to_json(model)}};
      j["normalized"] = {{"eps", kernel.eps}, {"theta", to_json(kernel.model.theta)}};
      j["covers_median"] = covers_median(rule, model);
      j["drift"] = to_json(drift_check(kernel, lg_m));
      json generations = json::array();
      for (int i = 1; i <= std::max(1, lg_generations); ++i) generations.push_back(to_json(interval_union(i, kernel.eps)));
      j["interval_unions"] = generations;
      j["first_single_generation"] = first_single_generation(kernel.eps, std::max(2, lg_generations));
      j["overlap_bound_generation"] = overlap_bound_generation(kernel.eps);
      if (!lg_skip_invariant) {
        const auto measure = invariant_measure(kernel);
        j["invariant_measure"] = to_json(measure);
        write_file(ch_csv, [&](std::ostream& f) { write_invariant_csv(measure, f); });
      }
      emit_json(j, ch_json, out);
      return kExitOk;
    }

    if (*bounds) {
      out << to_json(score_bound_profile(parse_link(bd_link))).dump(2) << '\n';
      return kExitOk;
    }

    if (*serve) {
      ServiceConfig config = service_config_from_env();
      if (!sv_listen.empty()) {
        const auto colon = sv_listen.rfind(':');
        if (colon == std::string::npos) throw UsageError("--listen expects host:port");
        config.host = sv_listen.substr(0, colon);
        config.port = std::stoi(sv_listen.substr(colon + 1));
      }
      if (!sv_dir.empty()) config.data_dir = sv_dir;
      return run_service(config);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: invalid " << e.field << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace sensitest::cli
