#pragma once

#include <string>
#include <vector>

#include "tautline/data.hpp"
#include "tautline/error.hpp"
#include "tautline/expfam.hpp"
#include "tautline/loss.hpp"
#include "tautline/quantile.hpp"
#include "tautline/taut_string.hpp"

namespace tautline {

enum class ModelKind { mean, quantile, poisson, bernoulli, huber };

struct ModelSpec {
  ModelKind kind = ModelKind::mean;
  double beta = 0.5;
  // pseudo-Huber scale
  double delta = 1.0;
};

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::mean:
      return "mean";
    case ModelKind::quantile:
      return "quantile";
    case ModelKind::poisson:
      return "poisson";
    case ModelKind::bernoulli:
      return "bernoulli";
    case ModelKind::huber:
      return "huber";
  }
  return "mean";
}

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "mean") return ModelKind::mean;
  if (s == "quantile") return ModelKind::quantile;
  if (s == "poisson") return ModelKind::poisson;
  if (s == "bernoulli" || s == "binary") return ModelKind::bernoulli;
  if (s == "huber" || s == "pseudo-huber") return ModelKind::huber;
  throw InvalidParameter("unknown method '" + s + "' (expected mean, quantile, poisson, bernoulli or huber)");
}

inline Family family_of(ModelKind k) { return k == ModelKind::poisson ? Family::poisson : Family::bernoulli; }

/// Fit on the scale the certificates use: data scale for mean and
/// quantile, natural parameters for the exponential families.
inline Fit fit_model(const ModelSpec& spec, const DataSet& data, const LambdaVector& lambda) {
  switch (spec.kind) {
    case ModelKind::mean:
      return fit_taut(QuadraticLoss({data.y().begin(), data.y().end()}), lambda, data);
    case ModelKind::huber:
      return fit_taut(PseudoHuberLoss({data.y().begin(), data.y().end()}, spec.delta), lambda, data);
    case ModelKind::quantile:
      return fit_quantile(data, spec.beta, lambda).fit;
    case ModelKind::poisson:
    case ModelKind::bernoulli:
      return fit_expfam(data, lambda, family_of(spec.kind)).fit;
  }
  throw InvalidParameter("unknown model");
}

/// Values on the response scale: b'(theta) for the exponential families.
inline std::vector<double> response_scale(const ModelSpec& spec, std::span<const double> values) {
  if (spec.kind == ModelKind::poisson || spec.kind == ModelKind::bernoulli) {
    return mean_scale(values, family_of(spec.kind));
  }
  return {values.begin(), values.end()};
}

/// Calls f with the observation-level loss whose derivatives the
/// certificates and the multiresolution check inspect.
template <class F>
decltype(auto) with_check_model(const ModelSpec& spec, std::span<const double> y, F&& f) {
  std::vector<double> v(y.begin(), y.end());
  switch (spec.kind) {
    case ModelKind::mean:
      return f(QuadraticLoss(std::move(v)));
    case ModelKind::huber:
      return f(PseudoHuberLoss(std::move(v), spec.delta));
    case ModelKind::quantile:
      return f(CheckLoss(std::move(v), spec.beta));
    case ModelKind::poisson:
    case ModelKind::bernoulli:
      break;
  }
  return f(ExpFamLoss(std::move(v), family_of(spec.kind)));
}

}  // namespace tautline
