#include "sklab/output.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

#include <openssl/evp.h>

#include "json.hpp"

namespace sklab {

namespace {

std::ofstream open_csv(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + file.string() + "'");
  return out;
}

void put_components(std::ofstream& out, const std::string& prefix, int dim) {
  for (int i = 0; i < dim; ++i) out << ',' << prefix << '_' << i + 1;
}

void put_values(std::ofstream& out, const Path& p, std::int64_t k) {
  for (int i = 0; i < p.dim; ++i) out << ',' << format_double(p(k, i));
}

void put_env_header(std::ofstream& out, const EnvPath& env) {
  if (env.discrete()) {
    out << ",env";
  } else {
    put_components(out, "y", env.y.dim);
  }
}

void put_env(std::ofstream& out, const EnvPath& env, std::int64_t k) {
  if (env.discrete()) {
    out << ',' << env.labels[static_cast<std::size_t>(k)];
  } else {
    put_values(out, env.y, k);
  }
}

const char* flag(bool b) { return b ? "1" : "0"; }

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(const std::filesystem::path& file, const TrajectoryBundle& b) {
  auto out = open_csv(file);
  const int d = b.X.dim;
  out << 't';
  put_components(out, "X", d);
  put_components(out, "p", d);
  put_env_header(out, b.env);
  put_components(out, "w", b.w.dim);
  put_components(out, "w_tilde", b.w_tilde.dim);
  const auto* diag = b.diagnostics ? &*b.diagnostics : nullptr;
  if (diag) {
    out << ",A_eps";
    put_components(out, "H", d);
    for (int r = 0; r < 5; ++r) put_components(out, "R" + std::to_string(r + 1), d);
  }
  out << '\n';
  for (std::int64_t k = 0; k < b.grid.n_nodes(); ++k) {
    out << format_double(b.grid.node(k));
    put_values(out, b.X, k);
    put_values(out, b.p, k);
    put_env(out, b.env, k);
    put_values(out, b.w, k);
    put_values(out, b.w_tilde, k);
    if (diag) {
      out << ',' << format_double(diag->A_eps[static_cast<std::size_t>(k)]);
      put_values(out, diag->H_eps, k);
      for (const auto& R : diag->R) put_values(out, R, k);
    }
    out << '\n';
  }
}

void write_overdamped_csv(const std::filesystem::path& file, const OverdampedTrajectory& traj) {
  auto out = open_csv(file);
  out << 't';
  put_components(out, "q", traj.q.dim);
  put_env_header(out, traj.env);
  put_components(out, "w", traj.w.dim);
  out << '\n';
  for (std::int64_t k = 0; k < traj.grid.n_nodes(); ++k) {
    out << format_double(traj.grid.node(k));
    put_values(out, traj.q, k);
    put_env(out, traj.env, k);
    put_values(out, traj.w, k);
    out << '\n';
  }
}

void write_path_csv(const std::filesystem::path& file, const Path& path, const std::string& prefix) {
  auto out = open_csv(file);
  out << 't';
  put_components(out, prefix, path.dim);
  out << '\n';
  for (std::int64_t k = 0; k < path.grid.n_nodes(); ++k) {
    out << format_double(path.grid.node(k));
    put_values(out, path, k);
    out << '\n';
  }
}

void write_ladder_csv(const std::filesystem::path& file, const RateLadder& ladder) {
  auto out = open_csv(file);
  out << "eps,n_steps,n_replicas,n_hits,p_hat,ci_low,ci_high,eps_log_p,eps_log_ci_low,eps_log_ci_high,censored,"
         "master_seed\n";
  for (const auto& r : ladder.rows) {
    const auto& e = r.estimate;
    out << format_double(r.eps) << ',' << r.n_steps << ',' << e.n_replicas << ',' << e.n_hits << ','
        << format_double(e.p_hat) << ',' << format_double(e.ci_low) << ',' << format_double(e.ci_high) << ','
        << format_double(r.eps_log_p) << ',' << format_double(r.eps_log_ci_low) << ','
        << format_double(r.eps_log_ci_high) << ',' << flag(r.censored) << ',' << e.master_seed << '\n';
  }
}

void write_distance_csv(const std::filesystem::path& file, const DistanceStudy& study) {
  auto out = open_csv(file);
  out << "eps,n_replicas,median,upper_quartile,slope\n";
  const std::string slope = study.slope ? format_double(*study.slope) : "nan";
  for (const auto& r : study.rows) {
    out << format_double(r.eps) << ',' << r.n_replicas << ',' << format_double(r.median) << ','
        << format_double(r.upper_quartile) << ',' << slope << '\n';
  }
}

void write_tightness_csv(const std::filesystem::path& norm_file, const std::filesystem::path& window_file,
                         const TightnessTable& table) {
  {
    auto out = open_csv(norm_file);
    out << "eps,L,n_replicas,n_hits,p_hat,ci_low,ci_high,eps_log_p,censored\n";
    for (const auto& r : table.norm_rows) {
      const auto& e = r.estimate;
      out << format_double(r.eps) << ',' << format_double(r.L) << ',' << e.n_replicas << ',' << e.n_hits << ','
          << format_double(e.p_hat) << ',' << format_double(e.ci_low) << ',' << format_double(e.ci_high) << ','
          << format_double(r.eps_log_p) << ',' << flag(r.censored) << '\n';
    }
  }
  auto out = open_csv(window_file);
  out << "eps,delta,n_replicas,union_hits,union_p_hat,union_ci_low,union_ci_high,union_eps_log_p,union_censored,"
         "sup_window_hits,sup_window_p,sup_window_eps_log_p,sup_window_censored\n";
  for (const auto& r : table.window_rows) {
    const auto& e = r.union_estimate;
    out << format_double(r.eps) << ',' << format_double(r.delta) << ',' << e.n_replicas << ',' << e.n_hits << ','
        << format_double(e.p_hat) << ',' << format_double(e.ci_low) << ',' << format_double(e.ci_high) << ','
        << format_double(r.union_eps_log_p) << ',' << flag(r.union_censored) << ',' << r.best_start_hits << ','
        << format_double(r.sup_window_p) << ',' << format_double(r.sup_window_eps_log_p) << ','
        << flag(r.sup_window_censored) << '\n';
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorCode::Io, "sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::filesystem::path& file, const RunManifest& m) {
  nlohmann::json j;
  j["command_line"] = m.command_line;
  j["subcommand"] = m.subcommand;
  j["model"] = m.model_name;
  j["config_source"] = m.config_source;
  j["config_digest"] = m.config_digest;
  j["master_seed"] = m.master_seed;
  j["grid"] = {{"t0", m.t0}, {"t_end", m.t_end}, {"n_steps", m.n_steps}};
  j["scheme"] = m.scheme;
  j["eps"] = m.eps;
  j["n_replicas"] = m.n_replicas;
  j["threads"] = m.threads;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["wall_seconds"] = m.wall_seconds;
  j["outputs"] = m.outputs;
  j["library_version"] = SKLAB_VERSION;
  j["error"] = m.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(m.error);
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + file.string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace sklab
