#include "nol/learner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "nol/errors.hpp"

namespace nol {

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::ng: return "ng";
    case LearnerKind::nag: return "nag";
    case LearnerKind::snag: return "snag";
    case LearnerKind::adagrad: return "adagrad";
    case LearnerKind::sgd: return "sgd";
  }
  return "?";
}

LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "ng") return LearnerKind::ng;
  if (name == "nag") return LearnerKind::nag;
  if (name == "snag") return LearnerKind::snag;
  if (name == "adagrad") return LearnerKind::adagrad;
  if (name == "sgd") return LearnerKind::sgd;
  throw std::invalid_argument("unknown learner '" + std::string(name) + "'");
}

std::string_view to_string(EtaDecay decay) {
  return decay == EtaDecay::none ? "none" : "inverse_sqrt_t";
}

EtaDecay parse_eta_decay(std::string_view name) {
  if (name == "none") return EtaDecay::none;
  if (name == "inverse_sqrt_t") return EtaDecay::inverse_sqrt_t;
  throw std::invalid_argument("unknown eta decay '" + std::string(name) + "'");
}

void LearnerConfig::validate() const {
  if (!std::isfinite(eta) || eta < 0.0) throw std::invalid_argument("eta must be finite and >= 0");
  if (clip_to_c && !(*clip_to_c > 0.0 && std::isfinite(*clip_to_c)))
    throw std::invalid_argument("clip bound must be strictly positive");
  if (eta_decay != EtaDecay::none && kind != LearnerKind::ng && kind != LearnerKind::sgd)
    throw std::invalid_argument("eta decay applies to ng and sgd only");
}

std::size_t LearnerState::nonzero_weights() const {
  return static_cast<std::size_t>(
      std::count_if(weights.begin(), weights.end(), [](double w) { return w != 0.0; }));
}

Learner::Learner(LearnerConfig config, Loss loss) : config_(config), loss_(loss) {
  config_.validate();
}

void Learner::ensure_capacity(std::size_t dimension) {
  if (dimension <= state_.weights.size()) return;
  const std::size_t grown = std::max(dimension, 2 * state_.weights.size());
  state_.weights.resize(grown, 0.0);
  state_.scale.resize(grown, 0.0);
  state_.grad_sq.resize(grown, 0.0);
  state_.sigma.resize(grown, 0.0);
}

double Learner::clip(double prediction) const {
  if (!config_.clip_to_c) return prediction;
  return std::clamp(prediction, -*config_.clip_to_c, *config_.clip_to_c);
}

double Learner::predict(const SparseExample& example) const {
  return clip(nol::predict(state_.weights, example));
}

void Learner::restore(LearnerState state) {
  const std::size_t n = state.weights.size();
  if (state.scale.size() != n || state.grad_sq.size() != n || state.sigma.size() != n)
    throw std::invalid_argument("learner state vectors differ in length");
  state_ = std::move(state);
}

Observation Learner::observe(const SparseExample& example) {
  LearnerState& st = state_;
  const auto features = example.features();
  st.examples += 1;
  const double t = static_cast<double>(st.examples);

  if (features.empty()) {
    const LossEval e = loss_.eval(clip(0.0), example.label());
    return {clip(0.0), e.value, e.derivative};
  }
  ensure_capacity(example.dimension());

  const LearnerKind kind = config_.kind;
  const bool normalized =
      kind == LearnerKind::ng || kind == LearnerKind::nag || kind == LearnerKind::snag;

  // Scale pass: squash weights of coordinates whose scale grew.
  if (kind == LearnerKind::ng || kind == LearnerKind::nag) {
    for (const Feature& f : features) {
      const double a = std::abs(f.value);
      double& s = st.scale[f.index];
      if (a > s) {
        double& w = st.weights[f.index];
        w = kind == LearnerKind::ng ? w * (s * s) / (a * a) : w * s / a;
        s = a;
      }
    }
  } else if (kind == LearnerKind::snag) {
    for (const Feature& f : features) {
      st.scale[f.index] += f.value * f.value;
      const double sigma = std::sqrt(st.scale[f.index] / t);
      double& prev = st.sigma[f.index];
      if (sigma > prev) st.weights[f.index] = st.weights[f.index] * prev / sigma;
      prev = sigma;
    }
  }

  const double prediction = clip(nol::predict(st.weights, example));

  if (normalized) {
    double increment = 0.0;
    for (const Feature& f : features) {
      const double unit = kind == LearnerKind::snag ? st.sigma[f.index] : st.scale[f.index];
      increment += (f.value * f.value) / (unit * unit);
    }
    st.normalizer += increment;
    if (!std::isfinite(st.normalizer)) throw NumericFault("non-finite normalizer");
  }

  const LossEval e = loss_.eval(prediction, example.label());
  if (!std::isfinite(e.value) || !std::isfinite(e.derivative))
    throw NumericFault("non-finite loss at prediction " + std::to_string(prediction));

  if (normalized && st.normalizer == 0.0) return {prediction, e.value, e.derivative};

  const bool decay = config_.eta_decay == EtaDecay::inverse_sqrt_t;
  const double eta_t = decay ? config_.eta / std::sqrt(t) : config_.eta;
  const double rate_ng = eta_t * (t / st.normalizer);
  const double rate_nag = config_.eta * std::sqrt(t / st.normalizer);

  for (const Feature& f : features) {
    const std::size_t i = f.index;
    const double g = e.derivative * f.value;
    double& w = st.weights[i];
    switch (kind) {
      case LearnerKind::ng:
        w -= rate_ng * g / (st.scale[i] * st.scale[i]);
        break;
      case LearnerKind::nag:
      case LearnerKind::snag: {
        st.grad_sq[i] += g * g;
        if (st.grad_sq[i] == 0.0) continue;
        const double unit = kind == LearnerKind::snag ? st.sigma[i] : st.scale[i];
        w -= rate_nag * g / (unit * std::sqrt(st.grad_sq[i]));
        break;
      }
      case LearnerKind::adagrad:
        st.grad_sq[i] += g * g;
        if (st.grad_sq[i] == 0.0) continue;
        w -= config_.eta * g / std::sqrt(st.grad_sq[i]);
        break;
      case LearnerKind::sgd:
        w -= eta_t * g;
        break;
    }
    if (!std::isfinite(w) || !std::isfinite(st.grad_sq[i]))
      throw NumericFault("non-finite update at coordinate " + std::to_string(i), i);
  }
  return {prediction, e.value, e.derivative};
}

StateSummary RunResult::summary() const {
  return {final_state.nonzero_weights(), final_state.normalizer, final_state.examples};
}

RunResult run_stream(Learner& learner, std::span<const SparseExample> stream) {
  RunResult result;
  result.predictions.reserve(stream.size());
  result.losses.reserve(stream.size());
  double total = 0.0;
  for (std::size_t k = 0; k < stream.size(); ++k) {
    Observation obs;
    try {
      obs = learner.observe(stream[k]);
    } catch (const NumericFault& e) {
      throw NumericFault("example " + std::to_string(k) + ": " + e.what(), e.coordinate());
    } catch (const InvalidLabel& e) {
      throw InvalidLabel("example " + std::to_string(k) + ": " + e.what());
    }
    result.predictions.push_back(obs.prediction);
    result.losses.push_back(obs.loss);
    total += obs.loss;
  }
  result.average_loss = stream.empty() ? 0.0 : total / static_cast<double>(stream.size());
  result.final_state = learner.state();
  return result;
}

RunResult run_stream(const LearnerConfig& config, Loss loss,
                     std::span<const SparseExample> stream) {
  if (stream.empty()) throw DataError("stream must contain at least one example");
  Learner learner(config, loss);
  return run_stream(learner, stream);
}

}  // namespace nol
