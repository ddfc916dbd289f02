#include "mpct/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <fstream>
#include <functional>
#include <sstream>

namespace mpct::config {

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& msg, long line = -1) {
  std::string where = line >= 0 ? "line " + std::to_string(line) + ", " : "";
  throw Error(ErrorCode::ConfigError, where + key + ": " + msg, line);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double to_num(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) fail(key, "not a number: '" + t + "'");
  return v;
}

long long to_int(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  long long v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) fail(key, "not an integer: '" + t + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  fail(key, "expected true or false, got '" + t + "'");
}

std::vector<double> to_list(const std::string& key, std::string s) {
  s = trim(s);
  if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_num(key, item));
  if (out.empty()) fail(key, "empty list");
  return out;
}

std::string fmt_list(const double* v, Index n) {
  std::string s;
  for (Index i = 0; i < n; ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s;
}

VectorXd to_vec(const std::string& key, const std::string& s) {
  const std::vector<double> l = to_list(key, s);
  return Eigen::Map<const VectorXd>(l.data(), static_cast<Index>(l.size()));
}

Eigen::Vector2d to_vec2(const std::string& key, const std::string& s) {
  const std::vector<double> l = to_list(key, s);
  if (l.size() != 2) fail(key, "expected 2 entries");
  return {l[0], l[1]};
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define NUM(k, m) Field{k, [](const RunConfig& c) { return fmt(c.m); }, [](RunConfig& c, const std::string& v) { c.m = to_num(k, v); }}
#define INT(k, m)                                                       \
  Field{k, [](const RunConfig& c) { return std::to_string(c.m); },     \
        [](RunConfig& c, const std::string& v) { c.m = static_cast<decltype(c.m)>(to_int(k, v)); }}
#define BOOL(k, m)                                                            \
  Field{k, [](const RunConfig& c) { return std::string(c.m ? "true" : "false"); }, \
        [](RunConfig& c, const std::string& v) { c.m = to_bool(k, v); }}
#define VEC(k, m)                                                              \
  Field{k, [](const RunConfig& c) { return fmt_list(c.m.data(), c.m.size()); }, \
        [](RunConfig& c, const std::string& v) { c.m = to_vec(k, v); }}
#define VEC2(k, m)                                                       \
  Field{k, [](const RunConfig& c) { return fmt_list(c.m.data(), 2); }, \
        [](RunConfig& c, const std::string& v) { c.m = to_vec2(k, v); }}
#define LIST(k, m)                                                                                  \
  Field{k, [](const RunConfig& c) { return fmt_list(c.m.data(), static_cast<Index>(c.m.size())); }, \
        [](RunConfig& c, const std::string& v) { c.m = to_list(k, v); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      NUM("plant.k10", plant.params.k10),
      NUM("plant.k20", plant.params.k20),
      NUM("plant.k30", plant.params.k30),
      NUM("plant.E1", plant.params.E1),
      NUM("plant.E2", plant.params.E2),
      NUM("plant.E3", plant.params.E3),
      NUM("plant.cA0", plant.params.cA0),
      NUM("plant.dH_AB", plant.params.dH_AB),
      NUM("plant.dH_BC", plant.params.dH_BC),
      NUM("plant.dH_AD", plant.params.dH_AD),
      NUM("plant.rho", plant.params.rho),
      NUM("plant.Cp", plant.params.Cp),
      NUM("plant.kw", plant.params.kw),
      NUM("plant.AR", plant.params.AR),
      NUM("plant.VR", plant.params.VR),
      NUM("plant.mK", plant.params.mK),
      NUM("plant.CpK", plant.params.CpK),
      NUM("plant.T_FN", plant.params.T_FN),
      NUM("plant.T_PK", plant.params.T_PK),
      NUM("plant.theta0", plant.singer.theta0),
      NUM("plant.singer_pole", plant.singer.pole),
      NUM("plant.noise_variance", plant.singer.noise_variance),
      NUM("plant.sample_seconds", plant.sample_seconds),
      INT("plant.substeps", plant.substeps),
      VEC2("plant.u_lo", plant.u_lo),
      VEC2("plant.u_hi", plant.u_hi),
      VEC2("plant.nominal_u", plant.nominal.u),
      NUM("plant.theta_max", plant.bounds.theta_max),
      NUM("plant.cB_min", plant.bounds.cB_min),
      NUM("plant.pB_min", plant.bounds.pB_min),
      NUM("plant.rho_theta", plant.weights.rho_theta),
      NUM("plant.rho_c", plant.weights.rho_c),
      NUM("plant.rho_p", plant.weights.rho_p),
      INT("controller.N", controller.horizon),
      NUM("controller.rho", controller.rho),
      NUM("controller.eps_p", controller.admm.eps_p),
      NUM("controller.eps_d", controller.admm.eps_d),
      INT("controller.max_iter", controller.admm.max_iter),
      INT("controller.iter_budget", controller.admm.iter_budget),
      VEC("controller.Q", controller.Q),
      VEC("controller.R", controller.R),
      VEC("controller.T", controller.T),
      VEC("controller.S", controller.S),
      BOOL("controller.weights_in_scaled_units", controller.weights_in_scaled_units),
      VEC("controller.beta", controller.beta),
      NUM("controller.backoff_theta", controller.backoff.theta),
      NUM("controller.backoff_cB", controller.backoff.cB),
      NUM("controller.backoff_pB", controller.backoff.pB),
      BOOL("controller.warm_start", controller.warm_start),
      VEC("observer.Q", controller.observer_q),
      VEC("observer.R", controller.observer_r),
      VEC("scaling.Nx", controller.scaling.Nx),
      VEC("scaling.Nu", controller.scaling.Nu),
      VEC("scaling.Nc", controller.scaling.Nc),
      NUM("validation.eps", plan.eps),
      NUM("validation.delta", plan.delta),
      INT("validation.r", plan.r),
      INT("validation.K", plan.K),
      INT("validation.ns", plan.ns),
      INT("validation.verify", plan.verify),
      BOOL("validation.common_random_numbers", plan.common_random_numbers),
      LIST("grid.backoff_theta", grid_theta),
      LIST("grid.backoff_cB", grid_cB),
      LIST("grid.backoff_pB", grid_pB),
      LIST("grid.beta", grid_beta),
      NUM("scenario.cB_lo", ranges.cB_lo),
      NUM("scenario.cB_hi", ranges.cB_hi),
      NUM("scenario.pB_lo", ranges.pB_lo),
      NUM("scenario.pB_hi", ranges.pB_hi),
      INT("scenario.t_r_lo", ranges.t_r_lo),
      INT("scenario.t_r_hi", ranges.t_r_hi),
      INT("scenario.init_steps", ranges.init_steps),
      INT("scenario.steps", ranges.steps),
      VEC2("simulate.y_r1", simulate.y_r1),
      VEC2("simulate.y_r2", simulate.y_r2),
      INT("simulate.t_r", simulate.t_r),
      BOOL("simulate.noise", simulate.noise),
      Field{"run.seed", [](const RunConfig& c) { return std::to_string(c.seed); },
            [](RunConfig& c, const std::string& v) {
              const std::string t = trim(v);
              std::uint64_t s = 0;
              auto res = std::from_chars(t.data(), t.data() + t.size(), s);
              if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
                fail("run.seed", "not an unsigned integer: '" + t + "'");
              }
              c.seed = s;
            }},
      INT("run.jobs", jobs),
      Field{"run.out", [](const RunConfig& c) { return c.out; },
            [](RunConfig& c, const std::string& v) { c.out = trim(v); }},
  };
  return f;
}

#undef NUM
#undef INT
#undef BOOL
#undef VEC
#undef VEC2
#undef LIST

void require(bool ok, const char* key, const char* msg) {
  if (!ok) fail(key, msg);
}

bool positive(const VectorXd& v) { return v.size() > 0 && (v.array() > 0.0).all() && v.allFinite(); }

}  // namespace

std::vector<campaign::ControllerVariant> RunConfig::grid() const {
  return campaign::controller_grid(grid_theta, grid_cB, grid_pB, grid_beta);
}

RunConfig parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  long line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(s, "expected 'key = value'", line);
    const std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
    const Field* field = nullptr;
    for (const Field& f : fields()) {
      if (f.key == key) field = &f;
    }
    if (!field) fail(key, "unknown key", line);
    try {
      field->set(cfg, value);
    } catch (const Error& e) {
      std::string msg = e.what();
      const std::string prefix = std::string(to_string(ErrorCode::ConfigError)) + ": ";
      if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(line) + ", " + msg, line);
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string serialize(const RunConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

void validate(const RunConfig& c) {
  try {
    c.plant.params.validate();
  } catch (const Error& e) {
    fail("plant", e.what());
  }
  require(c.plant.sample_seconds > 0.0, "plant.sample_seconds", "must be positive");
  require(c.plant.substeps >= 1, "plant.substeps", "must be at least 1");
  require((c.plant.u_lo.array() < c.plant.u_hi.array()).all(), "plant.u_lo", "must lie below plant.u_hi");
  require(c.plant.singer.noise_variance >= 0.0, "plant.noise_variance", "must be nonnegative");
  require(c.controller.horizon >= 1, "controller.N", "must be at least 1");
  require(c.controller.rho > 0.0, "controller.rho", "must be positive");
  require(c.controller.admm.eps_p > 0.0, "controller.eps_p", "must be positive");
  require(c.controller.admm.eps_d > 0.0, "controller.eps_d", "must be positive");
  require(c.controller.admm.max_iter >= 1, "controller.max_iter", "must be at least 1");
  require(c.controller.admm.iter_budget >= 0, "controller.iter_budget", "must be nonnegative");
  require(c.controller.Q.size() == cstr::kStates, "controller.Q", "needs 6 entries");
  require(c.controller.T.size() == cstr::kStates, "controller.T", "needs 6 entries");
  require(c.controller.R.size() == cstr::kInputs, "controller.R", "needs 2 entries");
  require(c.controller.S.size() == cstr::kInputs, "controller.S", "needs 2 entries");
  require(positive(c.controller.beta), "controller.beta", "entries must be positive");
  require(c.controller.observer_q.size() == cstr::kStates + cstr::kOutputs, "observer.Q", "needs 8 entries");
  require(c.controller.observer_r.size() == cstr::kOutputs, "observer.R", "needs 2 entries");
  require(positive(c.controller.scaling.Nx) && c.controller.scaling.Nx.size() == cstr::kStates, "scaling.Nx",
          "needs 6 positive entries");
  require(positive(c.controller.scaling.Nu) && c.controller.scaling.Nu.size() == cstr::kInputs, "scaling.Nu",
          "needs 2 positive entries");
  require(positive(c.controller.scaling.Nc) && c.controller.scaling.Nc.size() == cstr::kOutputs, "scaling.Nc",
          "needs 2 positive entries");
  const auto& b = c.controller.backoff;
  require(b.theta >= 0.0 && b.cB >= 0.0 && b.pB >= 0.0, "controller.backoff_theta", "back-offs must be nonnegative");
  require(c.plan.eps > 0.0 && c.plan.eps < 1.0, "validation.eps", "must lie in (0, 1)");
  require(c.plan.delta > 0.0 && c.plan.delta <= 1.0, "validation.delta", "must lie in (0, 1]");
  require(c.plan.r >= 1, "validation.r", "must be at least 1");
  require(c.plan.K >= 1, "validation.K", "must be at least 1");
  require(c.plan.ns >= 0, "validation.ns", "must be nonnegative");
  require(c.plan.verify >= 0, "validation.verify", "must be nonnegative");
  for (double v : c.grid_theta) require(v >= 0.0, "grid.backoff_theta", "must be nonnegative");
  for (double v : c.grid_cB) require(v >= 0.0, "grid.backoff_cB", "must be nonnegative");
  for (double v : c.grid_pB) require(v >= 0.0, "grid.backoff_pB", "must be nonnegative");
  for (double v : c.grid_beta) require(v > 0.0, "grid.beta", "must be positive");
  require(c.ranges.cB_lo <= c.ranges.cB_hi, "scenario.cB_lo", "must not exceed scenario.cB_hi");
  require(c.ranges.pB_lo <= c.ranges.pB_hi, "scenario.pB_lo", "must not exceed scenario.pB_hi");
  require(c.ranges.t_r_lo <= c.ranges.t_r_hi, "scenario.t_r_lo", "must not exceed scenario.t_r_hi");
  require(c.ranges.init_steps >= 0, "scenario.init_steps", "must be nonnegative");
  require(c.ranges.steps >= 1, "scenario.steps", "must be at least 1");
  require(c.simulate.t_r >= 0, "simulate.t_r", "must be nonnegative");
  require(c.jobs >= 1, "run.jobs", "must be at least 1");
  require(!c.out.empty(), "run.out", "must not be empty");
}

std::string digest(const RunConfig& cfg) {
  // Execution-only keys do not change results and stay out of the digest.
  std::string text;
  for (const Field& f : fields()) {
    if (f.key != "run.jobs" && f.key != "run.out") text += f.key + " = " + f.get(cfg) + "\n";
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> keys() {
  std::vector<std::string> k;
  for (const Field& f : fields()) k.push_back(f.key);
  return k;
}

}  // namespace mpct::config
