#pragma once

#include <string>

#include "sklab/config.hpp"
#include "sklab/model.hpp"

namespace testing {

inline sklab::ValidatedModel model_from(const std::string& yaml) {
  return sklab::validate_model(sklab::parse_config(yaml, "<test>"));
}

inline sklab::ValidatedModel preset(const std::string& name) { return sklab::validate_model(sklab::load_preset(name)); }

/// One-dimensional constant-drift model with optional Markov environment.
inline std::string scalar_yaml(double b, double lambda, double sigma, double x1 = 0.0) {
  return "name: scalar\ndim: 1\nx1: [" + std::to_string(x1) + "]\ndrift:\n  family: constant\n  offsets: [[" +
         std::to_string(b) + "]]\nfriction:\n  lambda0: " + std::to_string(lambda) +
         "\nsigma: " + std::to_string(sigma) + "\n";
}

}  // namespace testing
