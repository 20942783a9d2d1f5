#include "sklab/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "sklab/config.hpp"
#include "sklab/diagnostics.hpp"
#include "sklab/env.hpp"
#include "sklab/output.hpp"
#include "sklab/rate.hpp"

namespace fs = std::filesystem;

namespace sklab {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config;
  std::string preset;
  std::uint64_t seed = 1;
  std::vector<double> eps;
  std::int64_t steps = 1000;
  std::string scheme = "exponential";
  std::int64_t replicas = 1000;
  std::string out;
  int threads = 1;
};

struct Loaded {
  ModelSpec spec;
  std::string source;
  std::string digest;
};

Loaded load_model(const Globals& g) {
  if (!g.config.empty() && !g.preset.empty()) throw UsageError("give either --config or --preset, not both");
  if (!g.config.empty()) {
    std::ifstream in(g.config, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read config '" + g.config + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return {parse_config(os.str(), g.config), g.config, sha256_hex(os.str())};
  }
  if (!g.preset.empty()) {
    const auto& text = preset_text(g.preset);
    return {parse_config(text, "preset:" + g.preset), "preset:" + g.preset, sha256_hex(text)};
  }
  throw UsageError("this subcommand needs --config PATH or --preset NAME");
}

Eigen::MatrixXd parse_matrix_arg(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream rs(text);
  std::string row;
  while (std::getline(rs, row, ';')) {
    std::vector<double> vals;
    std::stringstream cs(row);
    std::string cell;
    while (std::getline(cs, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw UsageError("bad matrix entry '" + cell + "'");
      }
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw UsageError("empty matrix");
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw UsageError("matrix rows differ in length");
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  }
  return M;
}

std::string fixed7(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.7f", v);
  return buf;
}

fs::path output_dir(const Globals& g) {
  if (!g.out.empty()) return g.out;
  if (const char* env = std::getenv("SKLAB_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "sklab_out";
}

std::string join_args(const std::vector<std::string>& args) {
  std::string s;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) s += ' ';
    s += args[i];
  }
  return s;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sklab: second-order Langevin dynamics in random environments", "sklab"};
  app.set_version_flag("--version", SKLAB_VERSION);

  Globals g;
  app.add_option("--config", g.config, "Model description (YAML)");
  app.add_option("--preset", g.preset, "Bundled model: " + [] {
    std::string s;
    for (const auto& n : preset_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }());
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--eps", g.eps, "eps value(s), comma separated")->delimiter(',');
  app.add_option("--steps", g.steps, "Grid steps on [0, 1]")->check(CLI::PositiveNumber);
  app.add_option("--scheme", g.scheme, "euler | exponential");
  app.add_option("--replicas", g.replicas, "Monte Carlo replicas")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory (default $SKLAB_OUT_DIR or ./sklab_out)");
  app.add_option("--threads", g.threads, "Replica worker threads")->check(CLI::PositiveNumber);

  auto sub = [&](const std::string& name, const std::string& help) {
    auto* s = app.add_subcommand(name, help);
    s->fallthrough();
    return s;
  };

  auto* simulate = sub("simulate", "One second-order trajectory with optional diagnostics");
  bool with_diag = false;
  simulate->add_flag("--diagnostics", with_diag, "Record A_eps, H_eps and the remainder terms");

  auto* overdamped = sub("overdamped", "One overdamped trajectory");
  auto* averaged = sub("averaged", "Averaged ODE path phi*");

  auto* sk = sub("sk-compare", "Median sup|X - q| (shared noise) or sup|X - phi*| over eps");
  std::string against = "overdamped";
  sk->add_option("--against", against, "overdamped | averaged");

  auto* ladder = sub("rate-ladder", "Event probability and eps log p over an eps ladder");
  std::string event_kind = "sup-proj", target = "q";
  double level = 1.0;
  std::vector<double> direction;
  std::vector<std::int64_t> rung_replicas, rung_steps;
  ladder->add_option("--event", event_kind, "sup-norm | sup-dist | halfspace | sup-proj");
  ladder->add_option("--level", level, "Event level a");
  ladder->add_option("--direction", direction, "Direction c (default all ones)")->delimiter(',');
  ladder->add_option("--target", target, "q (overdamped) | X (second order)");
  ladder->add_option("--rung-replicas", rung_replicas, "Replicas per eps")->delimiter(',');
  ladder->add_option("--rung-steps", rung_steps, "Grid steps per eps")->delimiter(',');

  auto* tight = sub("tightness", "Norm-tail and windowed-modulus tail estimates");
  std::vector<double> L_list{1.0, 2.0, 3.0}, delta_list{0.01, 0.05, 0.1};
  double ell = 0.5;
  tight->add_option("--L", L_list, "Norm levels")->delimiter(',');
  tight->add_option("--delta", delta_list, "Window lengths")->delimiter(',');
  tight->add_option("--ell", ell, "Modulus level");

  auto* hscale = sub("h-scaling", "Median sup|H_eps| over eps");

  auto* hfun = sub("h-functional", "Principal eigenvalue of Q + diag(g)");
  std::string q_text, g_text;
  std::optional<double> oracle_eps;
  hfun->add_option("--Q", q_text, "Generator rows separated by ';', entries by ','")->required();
  hfun->add_option("--g", g_text, "Comma separated potential")->required();
  hfun->add_option("--oracle-eps", oracle_eps, "Also print the matrix-exponential value at this eps (T = 1)");

  auto* act = sub("action", "Action of a straight or averaged path, with the Legendre table");
  auto* minact = sub("min-action", "Least-action path between two points");
  std::vector<double> from{0.0}, to{1.0};
  int segments = 16;
  std::string path_kind = "straight";
  double beta_box = 16.0;
  for (auto* s : {act, minact}) {
    s->add_option("--from", from, "Start point")->delimiter(',');
    s->add_option("--to", to, "End point")->delimiter(',');
    s->add_option("--segments", segments, "Path segments")->check(CLI::PositiveNumber);
    s->add_option("--beta-box", beta_box, "Legendre search radius");
  }
  act->add_option("--path", path_kind, "straight | averaged");

  auto* envcheck = sub("env-check", "Validate the model and report the environment");

  app.allow_extras();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << SKLAB_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "sklab: " << e.what() << '\n' << "run 'sklab --help' for usage\n";
    return kExitUsage;
  }

  {
    const auto extras = app.remaining();
    const bool any_sub = !app.get_subcommands().empty();
    if (!any_sub) {
      if (!extras.empty()) {
        err << "sklab: unknown subcommand '" << extras.front() << "'\nrun 'sklab --help' for usage\n";
      } else {
        err << "sklab: a subcommand is required\nrun 'sklab --help' for usage\n";
      }
      return kExitUsage;
    }
    if (!extras.empty()) {
      err << "sklab: unexpected argument '" << extras.front() << "'\n";
      return kExitUsage;
    }
  }

  const auto seconds_since = [](std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
  };
  auto first_eps = [&](double fallback) { return g.eps.empty() ? fallback : g.eps.front(); };
  auto eps_list = [&](std::vector<double> fallback) { return g.eps.empty() ? fallback : g.eps; };

  RunManifest manifest;
  manifest.command_line = join_args(args);
  manifest.master_seed = g.seed;
  manifest.n_steps = g.steps;
  manifest.scheme = g.scheme;
  manifest.n_replicas = g.replicas;
  manifest.threads = g.threads;
  manifest.started_at = utc_timestamp();
  const auto t_start = std::chrono::steady_clock::now();
  const bool writes_files = !hfun->parsed() && !envcheck->parsed();
  const fs::path dir = output_dir(g);
  auto write_failure_manifest = [&](const std::string& what) {
    if (!writes_files) return;
    manifest.error = what;
    manifest.finished_at = utc_timestamp();
    manifest.wall_seconds = seconds_since(t_start);
    try {
      write_manifest(dir / "manifest.json", manifest);
    } catch (const std::exception&) {
    }
  };

  try {
    const Scheme scheme_kind = [&] {
      try {
        return parse_scheme(g.scheme);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
    }();
    Experiment ex;
    ex.grid = make_grid(0.0, 1.0, g.steps);
    ex.scheme.scheme = scheme_kind;
    ex.master_seed = g.seed;
    ex.n_replicas = g.replicas;
    ex.threads = g.threads;

    if (hfun->parsed()) {
      const Eigen::MatrixXd Q = parse_matrix_arg(q_text);
      const Eigen::MatrixXd gm = parse_matrix_arg(g_text);
      std::vector<double> gv(gm.data(), gm.data() + gm.size());
      out << fixed7(h_functional(Q, gv)) << '\n';
      if (oracle_eps) {
        for (double v : h_functional_oracle(Q, gv, *oracle_eps, 1.0)) out << fixed7(v) << '\n';
      }
      return kExitOk;
    }

    Loaded loaded = load_model(g);
    manifest.model_name = loaded.spec.name;
    manifest.config_source = loaded.source;
    manifest.config_digest = loaded.digest;

    if (envcheck->parsed()) {
      const auto report = check_model(loaded.spec);
      out << "model: " << loaded.spec.name << "\n";
      out << "d = " << loaded.spec.coefficients.d << ", m = " << loaded.spec.coefficients.m << "\n";
      if (!report.ok()) {
        out << "INVALID\n" << report.summary() << '\n';
        return kExitFailure;
      }
      const auto model = validate_model(loaded.spec);
      out << "valid\n";
      out << "lambda on probe box: [" << format_double(model.probe().lambda_min) << ", "
          << format_double(model.probe().lambda_max) << "]\n";
      const auto& env = model.environment();
      if (is_discrete(env)) {
        const auto pi = stationary_measure(env, 0.0, loaded.spec.x0);
        out << "stationary measure at (0, x0):";
        for (double w : pi.weights) out << ' ' << format_double(w);
        out << '\n';
        const auto bbar = averaged_drift(model, 0.0, loaded.spec.x0);
        out << "averaged drift at (0, x0):";
        for (double b : bbar) out << ' ' << format_double(b);
        out << '\n';
      } else {
        out << "environment: fast diffusion (continuous)\n";
      }
      return kExitOk;
    }

    const ValidatedModel model = validate_model(loaded.spec);
    fs::create_directories(dir);

    if (simulate->parsed()) {
      manifest.subcommand = "simulate";
      const double eps = first_eps(0.1);
      manifest.eps = {eps};
      SchemeConfig cfg = ex.scheme;
      cfg.record_diagnostics = with_diag;
      write_trajectory_csv(dir / "trajectory.csv", simulate_second_order(model, eps, ex.grid, spawn_stream(g.seed, 0), cfg));
      manifest.outputs = {"trajectory.csv"};
    } else if (overdamped->parsed()) {
      manifest.subcommand = "overdamped";
      const double eps = first_eps(0.1);
      manifest.eps = {eps};
      write_overdamped_csv(dir / "overdamped.csv", simulate_overdamped(model, eps, ex.grid, spawn_stream(g.seed, 0)));
      manifest.outputs = {"overdamped.csv"};
    } else if (averaged->parsed()) {
      manifest.subcommand = "averaged";
      write_path_csv(dir / "averaged.csv", solve_averaged_ode(model, ex.grid), "phi");
      manifest.outputs = {"averaged.csv"};
    } else if (sk->parsed()) {
      manifest.subcommand = "sk-compare";
      const auto list = eps_list({0.4, 0.2, 0.1, 0.05});
      manifest.eps = list;
      DistanceStudy study;
      if (against == "overdamped") {
        study = sk_convergence_study(model, list, ex);
      } else if (against == "averaged") {
        study = averaging_study(model, list, ex);
      } else {
        throw UsageError("--against must be overdamped or averaged");
      }
      write_distance_csv(dir / "sk_compare.csv", study);
      manifest.outputs = {"sk_compare.csv"};
      out << "slope " << (study.slope ? format_double(*study.slope) : "undefined") << '\n';
    } else if (ladder->parsed()) {
      manifest.subcommand = "rate-ladder";
      const auto list = eps_list({0.25, 0.1, 0.05});
      manifest.eps = list;
      const EventTarget tgt = target == "X" ? EventTarget::SecondOrder
                              : target == "q" ? EventTarget::Overdamped
                                              : throw UsageError("--target must be q or X");
      const auto& x0 = loaded.spec.x0;
      if (direction.empty()) direction.assign(x0.size(), 1.0);
      PathEvent event;
      if (event_kind == "sup-norm") {
        event = sup_norm_exceeds(level, tgt);
      } else if (event_kind == "sup-dist") {
        if (!rung_steps.empty()) throw UsageError("sup-dist needs one grid; drop --rung-steps");
        event = sup_dist_from_point_exceeds(ex.grid, x0, level, tgt);
      } else if (event_kind == "halfspace") {
        event = endpoint_in_halfspace(direction, level, tgt);
      } else if (event_kind == "sup-proj") {
        event = sup_projection_exceeds(direction, x0, level, tgt);
      } else {
        throw UsageError("unknown event '" + event_kind + "'");
      }
      RateLadder result;
      if (rung_replicas.empty() && rung_steps.empty()) {
        result = rate_ladder(model, event, list, ex);
      } else {
        std::vector<LadderRung> rungs;
        for (std::size_t i = 0; i < list.size(); ++i) {
          auto pick = [&](const std::vector<std::int64_t>& v, std::int64_t fallback) {
            if (v.empty()) return fallback;
            if (v.size() != list.size()) throw UsageError("per-rung lists must match --eps");
            return v[i];
          };
          rungs.push_back({list[i], pick(rung_replicas, g.replicas), pick(rung_steps, g.steps)});
        }
        result = rate_ladder(model, event, rungs, ex);
      }
      write_ladder_csv(dir / "rate_ladder.csv", result);
      manifest.outputs = {"rate_ladder.csv"};
      for (const auto& r : result.rows) {
        out << "eps " << format_double(r.eps) << "  p_hat " << format_double(r.estimate.p_hat) << "  eps_log_p "
            << (r.censored ? std::string("censored") : format_double(r.eps_log_p)) << '\n';
      }
    } else if (tight->parsed()) {
      manifest.subcommand = "tightness";
      const auto list = eps_list({0.4, 0.2, 0.1});
      manifest.eps = list;
      write_tightness_csv(dir / "tightness_norm.csv", dir / "tightness_window.csv",
                          tightness_diagnostics(model, list, L_list, delta_list, ell, ex));
      manifest.outputs = {"tightness_norm.csv", "tightness_window.csv"};
    } else if (hscale->parsed()) {
      manifest.subcommand = "h-scaling";
      const auto list = eps_list({0.4, 0.2, 0.1, 0.05});
      manifest.eps = list;
      const auto study = h_eps_scaling_study(model, list, ex);
      write_distance_csv(dir / "h_scaling.csv", study);
      manifest.outputs = {"h_scaling.csv"};
      out << "slope " << (study.slope ? format_double(*study.slope) : "undefined") << '\n';
    } else if (act->parsed() || minact->parsed()) {
      const RateModel rate(model, beta_box);
      const int d = model.d();
      if (static_cast<int>(from.size()) != d || static_cast<int>(to.size()) != d) {
        throw UsageError("--from and --to need dim entries");
      }
      if (minact->parsed()) {
        manifest.subcommand = "min-action";
        const auto res = minimize_action(rate, from, to, segments);
        manifest.n_steps = segments;
        write_path_csv(dir / "min_action.csv", res.path, "X");
        manifest.outputs = {"min_action.csv"};
        out << "action " << format_double(res.value) << (res.converged ? "" : "  (iteration cap reached)") << '\n';
      } else {
        manifest.subcommand = "action";
        const TimeGrid grid = make_grid(0.0, 1.0, segments);
        manifest.n_steps = segments;
        Path phi(grid, d);
        if (path_kind == "averaged") {
          phi = solve_averaged_ode(model, grid);
        } else if (path_kind == "straight") {
          for (std::int64_t k = 0; k <= segments; ++k) {
            const double s = static_cast<double>(k) / segments;
            for (int i = 0; i < d; ++i) phi(k, i) = (1 - s) * from[i] + s * to[i];
          }
        } else {
          throw UsageError("--path must be straight or averaged");
        }
        std::ofstream csv(dir / "action.csv", std::ios::binary | std::ios::trunc);
        csv << "t";
        for (int i = 0; i < d; ++i) csv << ",x_" << i + 1;
        for (int i = 0; i < d; ++i) csv << ",gamma_" << i + 1;
        csv << ",L\n";
        const double h = grid.dt();
        std::vector<double> mid(d), vel(d);
        for (std::int64_t k = 0; k < segments; ++k) {
          for (int i = 0; i < d; ++i) {
            mid[i] = 0.5 * (phi(k, i) + phi(k + 1, i));
            vel[i] = (phi(k + 1, i) - phi(k, i)) / h;
          }
          double L;
          try {
            L = lagrangian(rate, grid.node(k) + 0.5 * h, mid, vel);
          } catch (const Error& e) {
            if (e.code() != ErrorCode::BoundaryHit) throw;
            L = std::numeric_limits<double>::infinity();
          }
          csv << format_double(grid.node(k) + 0.5 * h);
          for (double v : mid) csv << ',' << format_double(v);
          for (double v : vel) csv << ',' << format_double(v);
          csv << ',' << format_double(L) << '\n';
        }
        manifest.outputs = {"action.csv"};
        out << "action " << format_double(action(rate, phi)) << '\n';
      }
    }
  } catch (const UsageError& e) {
    err << "sklab: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "sklab: invalid model\n" << e.report().summary() << '\n';
    write_failure_manifest(e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "sklab: " << e.what() << '\n';
    write_failure_manifest(e.what());
    return kExitFailure;
  }
  manifest.finished_at = utc_timestamp();
  manifest.wall_seconds = seconds_since(t_start);
  manifest.t0 = 0.0;
  manifest.t_end = 1.0;
  write_manifest(dir / "manifest.json", manifest);
  out << "wrote " << (dir / "manifest.json").string() << '\n';
  return kExitOk;
}

}  // namespace sklab
