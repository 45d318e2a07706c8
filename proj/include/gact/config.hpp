#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gact/types.hpp"

namespace gact {

// Markov chain a role runs over its allowed labels, plus the expected
// segment length (frames) of the geometric duration law.
struct RoleDynamics {
  // Indexed consistently with role_allowed_labels(role).
  Eigen::VectorXd initial;
  Eigen::MatrixXd transition;  // row-stochastic
  double duration_rate = 7.0;  // expected segment length, frames

  int label_index(RoleLabel role, ActivityLabel a) const;
};

struct SamplerConfig {
  int iterations = 50000;
  int chains = 1;
  std::uint64_t seed = 1;
  double detector_bias = 0.5;
  int max_depth = 4;  // recursion cap for the forward sampler
};

struct DetectorConfig {
  double eps = 1.0;  // 2 * sigma_WALK by default
  int min_pts = 1;
  double w_pos = 1.0;
  double w_vel = 2.0;
  int smooth_window = 5;
  double p_stay = 0.9;
  double gamma_shape = 4.0;
  // Gamma rates mode-matched to the configured per-label speeds.
  std::map<ActivityLabel, double> gamma_rate = {
      {ActivityLabel::STAND, 60.0},
      {ActivityLabel::WALK, 6.0},
      {ActivityLabel::RUN, 2.0}};
  double speed_floor = 1e-6;
};

struct ModelConfig {
  std::map<ActivityLabel, double> sigma = {{ActivityLabel::STAND, 0.05},
                                           {ActivityLabel::WALK, 0.5},
                                           {ActivityLabel::RUN, 1.5}};
  // Individual deviation scale; defaults to 0.3 * sigma.
  std::map<ActivityLabel, double> rho = {{ActivityLabel::STAND, 0.015},
                                         {ActivityLabel::WALK, 0.15},
                                         {ActivityLabel::RUN, 0.45}};
  double lambda = 100.0;       // endpoint prior variance, units^2
  double length_scale = 5.0;   // SE kernel length scale, frames
  double noise = 0.01;         // observation noise sd, units; keeps the
                               // scene covariance away from the SE kernel's
                               // numerically singular smooth directions
  double temporal_exponent = 0.5;  // edge weight = sigma * duration^exponent
  std::map<ActivityLabel, double> alpha = {{ActivityLabel::FFA, 1.0},
                                           {ActivityLabel::MEET, 1.0},
                                           {ActivityLabel::MOVE_TO, 1.0}};
  std::map<RoleLabel, RoleDynamics> roles;
  SamplerConfig sampler;
  DetectorConfig detector;

  ModelConfig();

  const RoleDynamics& dynamics(RoleLabel r) const { return roles.at(r); }

  // log p(r | a): uniform over activity_role_support(a), -inf otherwise.
  double role_log_prob(ActivityLabel parent, RoleLabel r) const;

  // Throws std::runtime_error on violated invariants (sigma ordering,
  // non-stochastic rows, non-positive scales).
  void validate() const;
};

// Uniform dynamics over the role's allowed labels.
RoleDynamics uniform_role_dynamics(RoleLabel role, double duration_rate);

// Flat "key = value" config file with dotted keys. Unknown keys are an
// error; missing keys keep defaults.
ModelConfig load_config(const std::string& path);
ModelConfig parse_config(const std::string& text);
std::string serialize_config(const ModelConfig& config);

}  // namespace gact
