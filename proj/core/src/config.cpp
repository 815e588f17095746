#include "regionblend/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace regionblend {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

double to_real(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad real value for " + key + ": " + v);
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    long long r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for " + key + ": " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("config: bad boolean value for " + key + ": " + v);
}

// Shortest representation that parses back to the same double.
std::string fmt_real(double x) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, end);
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: missing '=' at " + path + ":" + std::to_string(lineno));
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

SolverKind parse_solver(const std::string& name) {
  if (name == "ddim") return SolverKind::DDIM;
  if (name == "dpmpp2m") return SolverKind::DPMpp2M;
  throw ConfigError("config: unknown solver: " + name);
}

CopyMaskMode parse_copy_mask(const std::string& name) {
  if (name == "region") return CopyMaskMode::Region;
  if (name == "gap") return CopyMaskMode::Gap;
  throw ConfigError("config: unknown copy_mask mode: " + name);
}

std::string solver_name(SolverKind k) { return k == SolverKind::DDIM ? "ddim" : "dpmpp2m"; }
std::string copy_mask_name(CopyMaskMode m) { return m == CopyMaskMode::Region ? "region" : "gap"; }

void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "seed")
      cfg.seed = uint64_t(to_int(key, value));
    else if (key == "schedule.t_train")
      cfg.t_train = int(to_int(key, value));
    else if (key == "schedule.beta_start")
      cfg.beta_start = to_real(key, value);
    else if (key == "schedule.beta_end")
      cfg.beta_end = to_real(key, value);
    else if (key == "schedule.steps")
      cfg.steps = int(to_int(key, value));
    else if (key == "solver")
      cfg.solver = parse_solver(value);
    else if (key == "blend.alpha")
      cfg.blend.alpha = to_real(key, value);
    else if (key == "blend.beta")
      cfg.blend.beta = to_real(key, value);
    else if (key == "blend.gamma")
      cfg.blend.gamma = to_real(key, value);
    else if (key == "blend.tau_a")
      cfg.blend.tau_a = to_real(key, value);
    else if (key == "blend.tau_b")
      cfg.blend.tau_b = to_real(key, value);
    else if (key == "blend.layers") {
      cfg.blend.layers.clear();
      std::istringstream ls(value);
      std::string item;
      while (std::getline(ls, item, ','))
        if (!trim(item).empty()) cfg.blend.layers.push_back(trim(item));
    } else if (key == "blend.literal_alg2")
      cfg.blend.literal_alg2 = to_bool(key, value);
    else if (key == "copy_mask")
      cfg.blend.copy_mask = parse_copy_mask(value);
    else if (key == "prompt.target")
      cfg.prompt_target = value;
    else if (key == "prompt.null")
      cfg.prompt_null = value;
    else if (key == "denoiser.seed")
      cfg.denoiser_seed = uint64_t(to_int(key, value));
    else if (key == "denoiser.checkpoint")
      cfg.denoiser_checkpoint = value;
    else if (key == "manifest.timing")
      cfg.manifest_timing = to_bool(key, value);
    else
      throw ConfigError("config: unknown key: " + key);
  }
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> e;
  e.emplace_back("seed", std::to_string(cfg.seed));
  e.emplace_back("schedule.t_train", std::to_string(cfg.t_train));
  e.emplace_back("schedule.beta_start", fmt_real(cfg.beta_start));
  e.emplace_back("schedule.beta_end", fmt_real(cfg.beta_end));
  e.emplace_back("schedule.steps", std::to_string(cfg.steps));
  e.emplace_back("solver", solver_name(cfg.solver));
  e.emplace_back("blend.alpha", fmt_real(cfg.blend.alpha));
  e.emplace_back("blend.beta", fmt_real(cfg.blend.beta));
  e.emplace_back("blend.gamma", fmt_real(cfg.blend.gamma));
  e.emplace_back("blend.tau_a", fmt_real(cfg.blend.tau_a));
  e.emplace_back("blend.tau_b", fmt_real(cfg.blend.tau_b));
  std::string layers;
  for (size_t i = 0; i < cfg.blend.layers.size(); ++i)
    layers += (i ? "," : "") + cfg.blend.layers[i];
  e.emplace_back("blend.layers", layers.empty() ? "(all decoder)" : layers);
  e.emplace_back("blend.literal_alg2", cfg.blend.literal_alg2 ? "true" : "false");
  e.emplace_back("copy_mask", copy_mask_name(cfg.blend.copy_mask));
  e.emplace_back("prompt.target", cfg.prompt_target);
  e.emplace_back("prompt.null", cfg.prompt_null);
  e.emplace_back("denoiser.seed", std::to_string(cfg.denoiser_seed));
  e.emplace_back("denoiser.checkpoint", cfg.denoiser_checkpoint);
  e.emplace_back("manifest.timing", cfg.manifest_timing ? "true" : "false");
  return e;
}

}  // namespace regionblend
