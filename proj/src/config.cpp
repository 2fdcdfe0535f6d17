#include "acp_phonon/config.hpp"

#include "acp_phonon/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace acp_phonon {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

using Section = std::map<std::string, std::string>;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"system",
       {"model", "n_atoms", "k_cells", "spacing", "vacancies", "vacancy_count", "vacancy_seed",
        "relax_steps", "relax_step_size"}},
      {"physics", {"kappa", "eps0", "sigma", "charge", "mass"}},
      {"numerics",
       {"grid_spacing", "scf_tol", "eig_tol", "max_scf_iters", "mixing_history", "mixing_beta",
        "kerker_k0", "sternheimer_tol", "sternheimer_max_iters", "sternheimer_precondition",
        "dyson_tol", "dyson_max_iters", "n_cheb", "id_threshold", "srft_oversampling",
        "id_fixed_rank", "acp_max_outer_iters", "acp_outer_tol", "acp_warm_start", "seed"}},
      {"phonon", {"methods", "fd_delta", "dos_sigma", "omega_min", "omega_max", "omega_points",
                  "acoustic_sum_rule"}},
      {"output", {"directory", "checkpoint", "formats"}},
  };
  return keys;
}

class Reader {
 public:
  explicit Reader(std::map<std::string, Section> sections) : s_(std::move(sections)) {}

  bool has(const std::string& sec, const std::string& key) const {
    auto it = s_.find(sec);
    return it != s_.end() && it->second.count(key);
  }
  const std::string& raw(const std::string& sec, const std::string& key) const {
    return s_.at(sec).at(key);
  }

  void get(const std::string& sec, const std::string& key, double& out) const {
    if (!has(sec, key)) return;
    const std::string& v = raw(sec, key);
    double x = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) fail(sec, key, "a number");
    out = x;
  }
  template <class Int>
    requires std::is_integral_v<Int>
  void get(const std::string& sec, const std::string& key, Int& out) const {
    if (!has(sec, key)) return;
    const std::string& v = raw(sec, key);
    Int x{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) fail(sec, key, "an integer");
    out = x;
  }
  void get_bool(const std::string& sec, const std::string& key, bool& out) const {
    if (!has(sec, key)) return;
    const std::string& v = raw(sec, key);
    if (v == "true" || v == "1" || v == "yes") out = true;
    else if (v == "false" || v == "0" || v == "no") out = false;
    else fail(sec, key, "a boolean");
  }

  [[noreturn]] void fail(const std::string& sec, const std::string& key,
                         const std::string& what) const {
    throw ConfigError("[" + sec + "] " + key + " = '" + raw(sec, key) + "' is not " + what);
  }

 private:
  std::map<std::string, Section> s_;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

std::string to_string(Model model) { return model == Model::chain1d ? "chain1d" : "triangular2d"; }

RunConfig parse_config(const std::string& text) {
  std::map<std::string, Section> sections;
  std::istringstream in(text);
  std::string line, current;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      require(line.back() == ']', where + "unterminated section header");
      current = trim(line.substr(1, line.size() - 2));
      require(known_keys().count(current) > 0, where + "unknown section [" + current + "]");
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, where + "expected key = value");
    require(!current.empty(), where + "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require(known_keys().at(current).count(key) > 0,
            where + "unknown key '" + key + "' in [" + current + "]");
    require(!value.empty(), where + "empty value for '" + key + "'");
    require(sections[current].count(key) == 0, where + "duplicate key '" + key + "'");
    sections[current][key] = value;
  }

  const Reader r(std::move(sections));
  RunConfig c;
  if (r.has("system", "model")) {
    const std::string& m = r.raw("system", "model");
    if (m == "chain1d") c.system.model = Model::chain1d;
    else if (m == "triangular2d") c.system.model = Model::triangular2d;
    else r.fail("system", "model", "chain1d or triangular2d");
  }
  const bool one_d = c.system.model == Model::chain1d;

  // Model defaults, overwritten below by whatever the file sets.
  c.system.spacing = one_d ? 2.4 : 1.2;
  c.physics.eps0 = one_d ? 1.0 : 0.05;
  c.physics.sigma = one_d ? 0.3 : 0.24;
  c.numerics.grid_spacing = one_d ? 0.15 : 0.10;
  c.numerics.acp.n_cheb = one_d ? 20 : 30;
  c.numerics.acp.srft_oversampling = one_d ? 8 : 16;
  c.numerics.acp.max_outer_iters = one_d ? 4 : 2;
  c.phonon.dos_sigma = one_d ? 0.01 : 0.08;

  r.get("system", "n_atoms", c.system.n_atoms);
  r.get("system", "k_cells", c.system.k_cells);
  r.get("system", "spacing", c.system.spacing);
  if (r.has("system", "vacancies")) {
    for (const auto& item : split_list(r.raw("system", "vacancies"))) {
      int v = 0;
      auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || p != item.data() + item.size())
        r.fail("system", "vacancies", "a comma separated list of atom indices");
      c.system.vacancies.push_back(v);
    }
  }
  r.get("system", "vacancy_count", c.system.vacancy_count);
  r.get("system", "vacancy_seed", c.system.vacancy_seed);
  r.get("system", "relax_steps", c.system.relax_steps);
  r.get("system", "relax_step_size", c.system.relax_step_size);

  r.get("physics", "kappa", c.physics.kappa);
  r.get("physics", "eps0", c.physics.eps0);
  r.get("physics", "sigma", c.physics.sigma);
  r.get("physics", "charge", c.physics.charge);
  r.get("physics", "mass", c.physics.mass);

  NumericsConfig& n = c.numerics;
  r.get("numerics", "grid_spacing", n.grid_spacing);
  r.get("numerics", "scf_tol", n.scf.scf_tol);
  r.get("numerics", "eig_tol", n.scf.eig_tol);
  r.get("numerics", "max_scf_iters", n.scf.max_scf_iters);
  r.get("numerics", "mixing_history", n.scf.mixing_history);
  r.get("numerics", "mixing_beta", n.scf.mixing_beta);
  r.get("numerics", "kerker_k0", n.scf.kerker_k0);
  r.get("numerics", "sternheimer_tol", n.sternheimer.tol);
  r.get("numerics", "sternheimer_max_iters", n.sternheimer.max_iters);
  r.get_bool("numerics", "sternheimer_precondition", n.sternheimer.precondition);
  r.get("numerics", "dyson_tol", n.dyson_tol);
  r.get("numerics", "dyson_max_iters", n.dyson_max_iters);
  r.get("numerics", "n_cheb", n.acp.n_cheb);
  r.get("numerics", "id_threshold", n.acp.id_threshold);
  r.get("numerics", "srft_oversampling", n.acp.srft_oversampling);
  r.get("numerics", "id_fixed_rank", n.acp.fixed_rank);
  r.get("numerics", "acp_max_outer_iters", n.acp.max_outer_iters);
  r.get("numerics", "acp_outer_tol", n.acp.outer_tol);
  r.get_bool("numerics", "acp_warm_start", n.acp.warm_start);
  r.get("numerics", "seed", n.seed);

  if (r.has("phonon", "methods")) {
    c.phonon.methods.clear();
    for (const auto& m : split_list(r.raw("phonon", "methods"))) {
      try {
        c.phonon.methods.push_back(parse_method(m));
      } catch (const InvalidArgument&) {
        r.fail("phonon", "methods", "a list of fd, dfpt, acp");
      }
    }
  }
  r.get("phonon", "fd_delta", c.phonon.fd_delta);
  r.get("phonon", "dos_sigma", c.phonon.dos_sigma);
  r.get("phonon", "omega_min", c.phonon.omega_min);
  r.get("phonon", "omega_max", c.phonon.omega_max);
  r.get("phonon", "omega_points", c.phonon.omega_points);
  r.get_bool("phonon", "acoustic_sum_rule", c.phonon.acoustic_sum_rule);

  if (r.has("output", "directory")) c.output.directory = r.raw("output", "directory");
  r.get_bool("output", "checkpoint", c.output.checkpoint);
  if (r.has("output", "formats")) {
    c.output.formats = split_list(r.raw("output", "formats"));
    for (const auto& f : c.output.formats)
      if (f != "csv" && f != "json") r.fail("output", "formats", "a list of csv, json");
  }

  // Range checks.
  require(!one_d || c.system.n_atoms >= 2, "[system] n_atoms must be >= 2");
  require(one_d || c.system.k_cells >= 1, "[system] k_cells must be >= 1");
  require(c.system.spacing > 0.0, "[system] spacing must be positive");
  require(c.system.vacancy_count >= 0, "[system] vacancy_count must be >= 0");
  require(c.system.vacancies.empty() || c.system.vacancy_count == 0,
          "[system] give either vacancies or vacancy_count, not both");
  require(c.system.relax_steps >= 0, "[system] relax_steps must be >= 0");
  require(c.system.relax_step_size > 0.0, "[system] relax_step_size must be positive");
  require(c.physics.kappa > 0.0, "[physics] kappa must be positive");
  require(c.physics.eps0 > 0.0, "[physics] eps0 must be positive");
  require(c.physics.sigma > 0.0, "[physics] sigma must be positive");
  require(c.physics.charge >= 1, "[physics] charge must be >= 1");
  require(c.physics.mass > 0.0, "[physics] mass must be positive");
  require(n.grid_spacing > 0.0, "[numerics] grid_spacing must be positive");
  require(n.dyson_tol > 0.0 && n.dyson_max_iters >= 1, "[numerics] bad Dyson settings");
  require(!c.phonon.methods.empty(), "[phonon] methods must not be empty");
  require(c.phonon.fd_delta > 0.0, "[phonon] fd_delta must be positive");
  require(c.phonon.dos_sigma > 0.0, "[phonon] dos_sigma must be positive");
  require(c.phonon.omega_points >= 2, "[phonon] omega_points must be >= 2");
  try {
    n.scf.validate();
    n.sternheimer.validate();
    c.acp_options().validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("[numerics] ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

YukawaKernel RunConfig::kernel() const { return YukawaKernel{physics.kappa, physics.eps0}; }

AtomicConfiguration RunConfig::configuration_of_size(int n_atoms) const {
  AtomicConfiguration c;
  if (system.model == Model::chain1d) {
    c = chain_1d(n_atoms, system.spacing, physics.sigma);
  } else {
    const int k = static_cast<int>(std::lround(std::sqrt(n_atoms / 2.0)));
    if (2 * k * k != n_atoms)
      throw ConfigError("triangular2d sizes must be 2 k^2 atoms, got " + std::to_string(n_atoms));
    c = triangular_2d(k, system.spacing, physics.sigma);
  }
  c.charges.assign(c.n_atoms(), physics.charge);
  c.masses.setConstant(physics.mass);

  if (!system.vacancies.empty()) {
    c = remove_atoms(c, system.vacancies);
  } else if (system.vacancy_count > 0) {
    const auto v = random_vacancies(c.n_atoms(), system.vacancy_count, system.vacancy_seed);
    c = remove_atoms(c, v);
  }
  return c;
}

AtomicConfiguration RunConfig::configuration() const {
  const int n = system.model == Model::chain1d ? system.n_atoms
                                               : 2 * system.k_cells * system.k_cells;
  return configuration_of_size(n);
}

PlaneWaveGrid RunConfig::grid(const AtomicConfiguration& config) const {
  return grid_for_cell(config.cell, numerics.grid_spacing);
}

DysonOptions RunConfig::dyson_options() const {
  DysonOptions d;
  d.tol = numerics.dyson_tol;
  d.max_iters = numerics.dyson_max_iters;
  d.sternheimer = numerics.sternheimer;
  return d;
}

AcpOptions RunConfig::acp_options() const {
  AcpOptions a = numerics.acp;
  a.sternheimer = numerics.sternheimer;
  a.seed = numerics.seed;
  return a;
}

FdOptions RunConfig::fd_options() const {
  FdOptions f;
  f.delta = phonon.fd_delta;
  f.scf = numerics.scf;
  return f;
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  auto num = [](double x) { return format_number(x); };
  o << "[system]\n"
    << "model = " << to_string(system.model) << "\n"
    << "n_atoms = " << system.n_atoms << "\n"
    << "k_cells = " << system.k_cells << "\n"
    << "spacing = " << num(system.spacing) << "\n";
  if (!system.vacancies.empty()) {
    o << "vacancies = ";
    for (std::size_t i = 0; i < system.vacancies.size(); ++i)
      o << (i ? "," : "") << system.vacancies[i];
    o << "\n";
  }
  o << "vacancy_count = " << system.vacancy_count << "\n"
    << "vacancy_seed = " << system.vacancy_seed << "\n"
    << "relax_steps = " << system.relax_steps << "\n"
    << "relax_step_size = " << num(system.relax_step_size) << "\n\n"
    << "[physics]\n"
    << "kappa = " << num(physics.kappa) << "\n"
    << "eps0 = " << num(physics.eps0) << "\n"
    << "sigma = " << num(physics.sigma) << "\n"
    << "charge = " << physics.charge << "\n"
    << "mass = " << num(physics.mass) << "\n\n"
    << "[numerics]\n"
    << "grid_spacing = " << num(numerics.grid_spacing) << "\n"
    << "scf_tol = " << num(numerics.scf.scf_tol) << "\n"
    << "eig_tol = " << num(numerics.scf.eig_tol) << "\n"
    << "max_scf_iters = " << numerics.scf.max_scf_iters << "\n"
    << "mixing_history = " << numerics.scf.mixing_history << "\n"
    << "mixing_beta = " << num(numerics.scf.mixing_beta) << "\n"
    << "kerker_k0 = " << num(numerics.scf.kerker_k0) << "\n"
    << "sternheimer_tol = " << num(numerics.sternheimer.tol) << "\n"
    << "sternheimer_max_iters = " << numerics.sternheimer.max_iters << "\n"
    << "sternheimer_precondition = " << (numerics.sternheimer.precondition ? "true" : "false")
    << "\n"
    << "dyson_tol = " << num(numerics.dyson_tol) << "\n"
    << "dyson_max_iters = " << numerics.dyson_max_iters << "\n"
    << "n_cheb = " << numerics.acp.n_cheb << "\n"
    << "id_threshold = " << num(numerics.acp.id_threshold) << "\n"
    << "srft_oversampling = " << numerics.acp.srft_oversampling << "\n"
    << "id_fixed_rank = " << numerics.acp.fixed_rank << "\n"
    << "acp_max_outer_iters = " << numerics.acp.max_outer_iters << "\n"
    << "acp_outer_tol = " << num(numerics.acp.outer_tol) << "\n"
    << "acp_warm_start = " << (numerics.acp.warm_start ? "true" : "false") << "\n"
    << "seed = " << numerics.seed << "\n\n"
    << "[phonon]\n"
    << "methods = ";
  for (std::size_t i = 0; i < phonon.methods.size(); ++i)
    o << (i ? "," : "") << to_string(phonon.methods[i]);
  o << "\n"
    << "fd_delta = " << num(phonon.fd_delta) << "\n"
    << "dos_sigma = " << num(phonon.dos_sigma) << "\n"
    << "omega_min = " << num(phonon.omega_min) << "\n"
    << "omega_max = " << num(phonon.omega_max) << "\n"
    << "omega_points = " << phonon.omega_points << "\n"
    << "acoustic_sum_rule = " << (phonon.acoustic_sum_rule ? "true" : "false") << "\n\n"
    << "[output]\n"
    << "directory = " << output.directory.string() << "\n"
    << "checkpoint = " << (output.checkpoint ? "true" : "false") << "\n"
    << "formats = ";
  for (std::size_t i = 0; i < output.formats.size(); ++i)
    o << (i ? "," : "") << output.formats[i];
  o << "\n";
  return o.str();
}

}  // namespace acp_phonon
