#include "rbeki/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rbeki::experiments {

dsrbf::Kernel ExperimentConfig::kernel_kind() const {
  if (kernel == "gaussian") return dsrbf::Kernel::Gaussian;
  if (kernel == "mq") return dsrbf::Kernel::MQ;
  if (kernel == "imq") return dsrbf::Kernel::IMQ;
  throw std::invalid_argument("config: unknown kernel " + kernel);
}

void ExperimentConfig::validate() const {
  if (problem != "example1" && problem != "example1-alpha" && problem != "example2")
    throw std::invalid_argument("config: unknown problem " + problem);
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("config: alpha in (0,1)");
  if (coarse_n < 3 || fine_n < 3) throw std::invalid_argument("config: grids need >= 3 nodes");
  if (fine_n - 1 != 2 * (coarse_n - 1))
    throw std::invalid_argument("config: fine grid must refine the coarse grid 2x");
  for (double d : noise_levels)
    if (!(d > 0.0)) throw std::invalid_argument("config: noise levels must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("config: rho in (0,1)");
  if (!(tau * rho >= 1.0 - 1e-12)) throw std::invalid_argument("config: need tau >= 1/rho");
  if (n_ensemble < 2) throw std::invalid_argument("config: n_ensemble >= 2");
  if (n_train < 1 || n_train_times < 1)
    throw std::invalid_argument("config: training sizes must be positive");
  if (noise_level_mode != "truth" && noise_level_mode != "sqrt-m")
    throw std::invalid_argument("config: noise_level_mode is truth or sqrt-m");
  kernel_kind();
}

ExperimentConfig ExperimentConfig::defaults_for(const std::string& problem) {
  ExperimentConfig c;
  c.problem = problem;
  if (problem == "example1-alpha") {
    c.sensors_per_axis = 5;
    c.n_train = 200;
    c.pod_p = 10;
    c.q_fixed = 10;
    c.noise_levels = {0.05};
    c.truth = {0.25, 0.75, 0.8};
  } else if (problem == "example2") {
    c.sensors_per_axis = 7;
    c.n_train = 500;
    c.n_ensemble = 200;
    c.pod_p = 10;
    c.q_fixed = 10;
    c.truth = {};  // drawn from the KL prior, seeded
  }
  return c;
}

namespace {

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
  return values;
}

std::string format_list(const std::vector<double>& values) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
  return out.str();
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);

  // first pass: pick up the problem so defaults come from the right row
  std::string problem = "example1";
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    if (key == "problem") {
      std::string v = line.substr(eq + 1);
      v.erase(0, v.find_first_not_of(" \t"));
      v.erase(v.find_last_not_of(" \t\r") + 1);
      problem = v;
    }
  }
  ExperimentConfig c = defaults_for(problem);

  in.clear();
  in.seekg(0);
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: malformed line " + std::to_string(lineno));
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    value.erase(value.find_last_not_of(" \t\r") + 1);

    if (key == "problem") c.problem = value;
    else if (key == "coarse_n") c.coarse_n = std::stoi(value);
    else if (key == "fine_n") c.fine_n = std::stoi(value);
    else if (key == "coarse_steps") c.coarse_steps = std::stoi(value);
    else if (key == "fine_steps") c.fine_steps = std::stoi(value);
    else if (key == "alpha") c.alpha = std::stod(value);
    else if (key == "sensors_per_axis") c.sensors_per_axis = std::stoi(value);
    else if (key == "sensor_times") c.sensor_times = parse_list(value);
    else if (key == "noise_levels") c.noise_levels = parse_list(value);
    else if (key == "pod_energy") c.pod_energy = std::stod(value);
    else if (key == "pod_p") c.pod_p = std::stoi(value);
    else if (key == "q_fixed") c.q_fixed = std::stoi(value);
    else if (key == "q_energy") c.q_energy = std::stod(value);
    else if (key == "n_train") c.n_train = std::stoi(value);
    else if (key == "n_train_times") c.n_train_times = std::stoi(value);
    else if (key == "kernel") c.kernel = value;
    else if (key == "n_rv") c.n_rv = std::stoi(value);
    else if (key == "n_obs") c.n_obs = std::stoi(value);
    else if (key == "n_ensemble") c.n_ensemble = std::stoi(value);
    else if (key == "rho") c.rho = std::stod(value);
    else if (key == "tau") c.tau = std::stod(value);
    else if (key == "max_iters") c.max_iters = std::stoi(value);
    else if (key == "direct_eki") c.direct_eki = value == "1" || value == "true";
    else if (key == "noise_level_mode") c.noise_level_mode = value;
    else if (key == "truth") c.truth = parse_list(value);
    else if (key == "kl_sigma2") c.kl_sigma2 = std::stod(value);
    else if (key == "kl_length") c.kl_length = std::stod(value);
    else if (key == "kl_dim") c.kl_dim = std::stoi(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "out_dir") c.out_dir = value;
    else throw std::runtime_error("config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out.precision(17);
  out << "problem = " << problem << "\n"
      << "coarse_n = " << coarse_n << "\n"
      << "fine_n = " << fine_n << "\n"
      << "coarse_steps = " << coarse_steps << "\n"
      << "fine_steps = " << fine_steps << "\n"
      << "alpha = " << alpha << "\n"
      << "sensors_per_axis = " << sensors_per_axis << "\n"
      << "sensor_times = " << format_list(sensor_times) << "\n"
      << "noise_levels = " << format_list(noise_levels) << "\n"
      << "pod_energy = " << pod_energy << "\n"
      << "pod_p = " << pod_p << "\n"
      << "q_fixed = " << q_fixed << "\n"
      << "q_energy = " << q_energy << "\n"
      << "n_train = " << n_train << "\n"
      << "n_train_times = " << n_train_times << "\n"
      << "kernel = " << kernel << "\n"
      << "n_rv = " << n_rv << "\n"
      << "n_obs = " << n_obs << "\n"
      << "n_ensemble = " << n_ensemble << "\n"
      << "rho = " << rho << "\n"
      << "tau = " << tau << "\n"
      << "max_iters = " << max_iters << "\n"
      << "direct_eki = " << (direct_eki ? 1 : 0) << "\n"
      << "noise_level_mode = " << noise_level_mode << "\n";
  if (!truth.empty()) out << "truth = " << format_list(truth) << "\n";
  out << "kl_sigma2 = " << kl_sigma2 << "\n"
      << "kl_length = " << kl_length << "\n"
      << "kl_dim = " << kl_dim << "\n"
      << "seed = " << seed << "\n"
      << "out_dir = " << out_dir << "\n";
}

}  // namespace rbeki::experiments
