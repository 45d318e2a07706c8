#include "gact/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gact {

namespace {

int find_label(const std::vector<ActivityLabel>& labels, ActivityLabel a) {
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == a) return static_cast<int>(i);
  return -1;
}

const std::vector<RoleLabel>& all_roles() {
  static const std::vector<RoleLabel> v = {
      RoleLabel::FFA_ROLE, RoleLabel::APPROACHER, RoleLabel::WAITER,
      RoleLabel::MOVER};
  return v;
}

}  // namespace

int RoleDynamics::label_index(RoleLabel role, ActivityLabel a) const {
  return find_label(role_allowed_labels(role), a);
}

RoleDynamics uniform_role_dynamics(RoleLabel role, double duration_rate) {
  const auto& labels = role_allowed_labels(role);
  const int n = static_cast<int>(labels.size());
  RoleDynamics d;
  d.initial = Eigen::VectorXd::Constant(n, 1.0 / n);
  d.transition = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  d.duration_rate = duration_rate;
  return d;
}

ModelConfig::ModelConfig() {
  for (RoleLabel r : all_roles()) roles[r] = uniform_role_dynamics(r, 7.0);
}

double ModelConfig::role_log_prob(ActivityLabel parent, RoleLabel r) const {
  const auto& support = activity_role_support(parent);
  for (RoleLabel s : support)
    if (s == r) return -std::log(static_cast<double>(support.size()));
  return -std::numeric_limits<double>::infinity();
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw std::runtime_error("config: " + msg);
  };
  require(sigma.at(ActivityLabel::STAND) < sigma.at(ActivityLabel::WALK) &&
              sigma.at(ActivityLabel::WALK) < sigma.at(ActivityLabel::RUN),
          "sigma must be ordered STAND < WALK < RUN");
  for (const auto& [a, v] : sigma) require(v > 0, "sigma." + to_string(a) + " must be positive");
  for (const auto& [a, v] : rho) require(v > 0, "rho." + to_string(a) + " must be positive");
  for (const auto& [a, v] : alpha) require(v > 0, "alpha." + to_string(a) + " must be positive");
  require(lambda > 0, "lambda must be positive");
  require(length_scale > 0, "length_scale must be positive");
  require(noise > 0, "noise must be positive");
  require(sampler.detector_bias >= 0 && sampler.detector_bias <= 1,
          "sampler.detector_bias must be in [0,1]");
  require(detector.p_stay > 1.0 / 3.0 && detector.p_stay < 1.0,
          "detector.p_stay must be in (1/3, 1)");
  require(detector.eps > 0, "detector.eps must be positive");
  require(detector.min_pts >= 1, "detector.min_pts must be >= 1");
  for (const auto& [r, dyn] : roles) {
    const int n = static_cast<int>(role_allowed_labels(r).size());
    require(dyn.initial.size() == n && dyn.transition.rows() == n &&
                dyn.transition.cols() == n,
            "role." + to_string(r) + " dimension mismatch");
    require(dyn.duration_rate >= 1.0,
            "role." + to_string(r) + ".duration_rate must be >= 1");
    require((dyn.initial.array() >= 0).all(), "role." + to_string(r) + " negative initial mass");
    require(std::abs(dyn.initial.sum() - 1.0) < 1e-12,
            "role." + to_string(r) + " initial must sum to 1");
    for (int i = 0; i < n; ++i) {
      require((dyn.transition.row(i).array() >= 0).all(),
              "role." + to_string(r) + " negative transition mass");
      require(std::abs(dyn.transition.row(i).sum() - 1.0) < 1e-12,
              "role." + to_string(r) + " transition row must sum to 1");
    }
  }
}

namespace {

struct KeyValue {
  std::map<std::string, double> values;

  bool take(const std::string& key, double* out) {
    auto it = values.find(key);
    if (it == values.end()) return false;
    *out = it->second;
    values.erase(it);
    return true;
  }
};

void apply_scalar(KeyValue& kv, const std::string& key, double* slot) {
  double v;
  if (kv.take(key, &v)) *slot = v;
}

void apply_int(KeyValue& kv, const std::string& key, int* slot) {
  double v;
  if (kv.take(key, &v)) *slot = static_cast<int>(std::llround(v));
}

}  // namespace

ModelConfig parse_config(const std::string& text) {
  KeyValue kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r");
      auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    try {
      size_t pos = 0;
      double v = std::stod(val, &pos);
      if (pos != val.size()) throw std::invalid_argument(val);
      kv.values[key] = v;
    } catch (const std::exception&) {
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": bad numeric value '" + val + "'");
    }
  }

  ModelConfig cfg;
  bool rho_explicit = false;
  for (ActivityLabel a : physical_labels()) {
    apply_scalar(kv, "sigma." + to_string(a), &cfg.sigma[a]);
    double v;
    if (kv.take("rho." + to_string(a), &v)) {
      cfg.rho[a] = v;
      rho_explicit = true;
    }
  }
  if (!rho_explicit)
    for (ActivityLabel a : physical_labels()) cfg.rho[a] = 0.3 * cfg.sigma[a];
  for (ActivityLabel a : intentional_labels())
    apply_scalar(kv, "alpha." + to_string(a), &cfg.alpha[a]);
  apply_scalar(kv, "lambda", &cfg.lambda);
  apply_scalar(kv, "length_scale", &cfg.length_scale);
  apply_scalar(kv, "noise", &cfg.noise);
  apply_scalar(kv, "temporal_exponent", &cfg.temporal_exponent);
  apply_int(kv, "sampler.iterations", &cfg.sampler.iterations);
  apply_int(kv, "sampler.chains", &cfg.sampler.chains);
  double seed;
  if (kv.take("sampler.seed", &seed))
    cfg.sampler.seed = static_cast<std::uint64_t>(seed);
  apply_scalar(kv, "sampler.detector_bias", &cfg.sampler.detector_bias);
  apply_int(kv, "sampler.max_depth", &cfg.sampler.max_depth);
  apply_scalar(kv, "detector.eps", &cfg.detector.eps);
  apply_int(kv, "detector.min_pts", &cfg.detector.min_pts);
  apply_scalar(kv, "detector.w_pos", &cfg.detector.w_pos);
  apply_scalar(kv, "detector.w_vel", &cfg.detector.w_vel);
  apply_int(kv, "detector.smooth_window", &cfg.detector.smooth_window);
  apply_scalar(kv, "detector.p_stay", &cfg.detector.p_stay);
  apply_scalar(kv, "detector.gamma_shape", &cfg.detector.gamma_shape);
  for (ActivityLabel a : physical_labels())
    apply_scalar(kv, "detector.gamma_rate." + to_string(a),
                 &cfg.detector.gamma_rate[a]);
  for (RoleLabel r : {RoleLabel::FFA_ROLE, RoleLabel::APPROACHER,
                      RoleLabel::WAITER, RoleLabel::MOVER}) {
    RoleDynamics& dyn = cfg.roles[r];
    const auto& labels = role_allowed_labels(r);
    apply_scalar(kv, "role." + to_string(r) + ".duration_rate",
                 &dyn.duration_rate);
    for (size_t i = 0; i < labels.size(); ++i) {
      apply_scalar(kv, "role." + to_string(r) + ".initial." +
                           to_string(labels[i]),
                   &dyn.initial(static_cast<int>(i)));
      for (size_t j = 0; j < labels.size(); ++j)
        apply_scalar(kv, "role." + to_string(r) + ".transition." +
                             to_string(labels[i]) + "." + to_string(labels[j]),
                     &dyn.transition(static_cast<int>(i), static_cast<int>(j)));
    }
  }
  if (!kv.values.empty())
    throw std::runtime_error("config: unknown key '" +
                             kv.values.begin()->first + "'");
  cfg.validate();
  return cfg;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ModelConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  for (ActivityLabel a : physical_labels())
    os << "sigma." << to_string(a) << " = " << cfg.sigma.at(a) << "\n";
  for (ActivityLabel a : physical_labels())
    os << "rho." << to_string(a) << " = " << cfg.rho.at(a) << "\n";
  for (ActivityLabel a : intentional_labels())
    os << "alpha." << to_string(a) << " = " << cfg.alpha.at(a) << "\n";
  os << "lambda = " << cfg.lambda << "\n";
  os << "length_scale = " << cfg.length_scale << "\n";
  os << "noise = " << cfg.noise << "\n";
  os << "temporal_exponent = " << cfg.temporal_exponent << "\n";
  os << "sampler.iterations = " << cfg.sampler.iterations << "\n";
  os << "sampler.chains = " << cfg.sampler.chains << "\n";
  os << "sampler.seed = " << cfg.sampler.seed << "\n";
  os << "sampler.detector_bias = " << cfg.sampler.detector_bias << "\n";
  os << "sampler.max_depth = " << cfg.sampler.max_depth << "\n";
  os << "detector.eps = " << cfg.detector.eps << "\n";
  os << "detector.min_pts = " << cfg.detector.min_pts << "\n";
  os << "detector.w_pos = " << cfg.detector.w_pos << "\n";
  os << "detector.w_vel = " << cfg.detector.w_vel << "\n";
  os << "detector.smooth_window = " << cfg.detector.smooth_window << "\n";
  os << "detector.p_stay = " << cfg.detector.p_stay << "\n";
  os << "detector.gamma_shape = " << cfg.detector.gamma_shape << "\n";
  for (ActivityLabel a : physical_labels())
    os << "detector.gamma_rate." << to_string(a) << " = "
       << cfg.detector.gamma_rate.at(a) << "\n";
  for (const auto& [r, dyn] : cfg.roles) {
    const auto& labels = role_allowed_labels(r);
    os << "role." << to_string(r) << ".duration_rate = " << dyn.duration_rate
       << "\n";
    for (size_t i = 0; i < labels.size(); ++i) {
      os << "role." << to_string(r) << ".initial." << to_string(labels[i])
         << " = " << dyn.initial(static_cast<int>(i)) << "\n";
      for (size_t j = 0; j < labels.size(); ++j)
        os << "role." << to_string(r) << ".transition." << to_string(labels[i])
           << "." << to_string(labels[j]) << " = "
           << dyn.transition(static_cast<int>(i), static_cast<int>(j)) << "\n";
    }
  }
  return os.str();
}

}  // namespace gact
