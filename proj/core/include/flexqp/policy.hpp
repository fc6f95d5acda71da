#pragma once

#include "flexqp/state.hpp"

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace flexqp {

// ---------------------------------------------------------------------------
// Network weights

enum class Activation { Sigmoid, Identity };
enum class Arch { Mlp, Lstm };

/// Input preprocessing, applied per feature:
///   Log:       u -> log10(max(u, 0) + 1e-12)          (norms, u >= 0)
///   SignedLog: u -> sign(u) * log10(1 + |u| / 1e-6)   (signed per-constraint values)
enum class InputTransform { Identity, Log, SignedLog };

double apply_transform(InputTransform t, double u);

/// Affine layer y = act(W x + b), W stored row-major (rows = outputs).
struct DenseLayer {
  int rows = 0;
  int cols = 0;
  std::vector<double> w;
  std::vector<double> b;
  Activation activation = Activation::Sigmoid;
};

/// Standard LSTM cell, gate order (input, forget, cell, output). Gates use
/// the logistic sigmoid, the cell candidate and the output squashing use tanh.
struct LstmCell {
  int input_size = 0;
  int hidden_size = 0;
  std::vector<double> w_ih;  // (4H) x input, row-major
  std::vector<double> w_hh;  // (4H) x H, row-major
  std::vector<double> b_ih;  // 4H
  std::vector<double> b_hh;  // 4H
};

struct LstmHidden {
  Vec h, c;
};

struct PolicyHead {
  Arch arch = Arch::Mlp;
  std::optional<LstmCell> lstm;
  std::vector<DenseLayer> layers;
  std::vector<InputTransform> input_transforms;

  int input_dim() const;
  int output_dim() const;
  /// Throws LoadError on inconsistent shapes or a wrong signature.
  void validate(const std::string& head_name, int expected_in, int expected_out) const;
};

/// Weights of the three feedback heads. Signatures are fixed:
/// pi_I 10 -> 3 (log mu_I, log sigma_s, log rho_I), pi_E 6 -> 2
/// (log mu_E, log rho_E), pi_alpha 9 -> 1 (pre-sigmoid alpha).
struct PolicyWeights {
  PolicyHead pi_I, pi_E, pi_alpha;
  std::optional<double> kl_divergence;
  int version = 1;

  void validate() const;
};

PolicyWeights load_weights(const std::string& path);
PolicyWeights parse_weights(const std::string& json_text);
std::string dump_weights(const PolicyWeights& weights);

/// Sigmoid hidden layers etc., exactly as stored.
Vec forward_mlp(const std::vector<DenseLayer>& layers, const Vec& input);
Vec lstm_step(const LstmCell& cell, const Vec& input, LstmHidden& hidden);

/// Raw head outputs (before exp/clamp or the alpha sigmoid) for one feature
/// row. Input transforms are applied here. For LSTM heads `hidden` carries
/// the recurrent state; pass a zero state for a fresh sequence.
Vec head_forward(const PolicyHead& head, const Vec& raw_features, LstmHidden* hidden = nullptr);

LstmHidden zero_hidden(const PolicyHead& head);

/// Default MLP weights (all zero) with the documented input transforms;
/// useful as a starting point and in tests.
PolicyWeights zero_weights(Arch arch);

struct GoldenVector {
  std::string head;  // "pi_I", "pi_E" or "pi_alpha"
  Vec inputs;        // raw features
  Vec expected_outputs;
};

std::vector<GoldenVector> load_golden(const std::string& path);

// ---------------------------------------------------------------------------
// Parameter policies

struct AdaptiveConfig {
  double tau = 2.0;
  double ratio_trigger = 10.0;
  int adapt_every = 25;
  bool adapt_mu = true;
  /// Doubling stops at mu_growth_limit times the initial mu. Constraints that
  /// cannot be satisfied keep |y| = mu, so unlimited doubling would walk mu
  /// up to the global clamp and stall convergence on infeasible problems.
  double mu_growth_limit = 2.0;
  ScalarParams initial{};

  void validate() const;
};

class PolicySession;

/// Maps residual feedback to the parameters for the next iteration.
/// A ParamPolicy is immutable and shareable; per-solve mutable state lives
/// in the session returned by start().
class ParamPolicy {
 public:
  static ParamPolicy fixed(const ScalarParams& params);
  static ParamPolicy fixed(const SolverParams& params);
  static ParamPolicy adaptive(const AdaptiveConfig& cfg = {});
  static ParamPolicy learned(std::shared_ptr<const PolicyWeights> weights, double sigma_x = 1e-6);

  std::unique_ptr<PolicySession> start(const QpProblem& prob) const;

  std::string describe() const;

  struct Fixed {
    std::variant<ScalarParams, SolverParams> params;
  };
  struct Adaptive {
    AdaptiveConfig cfg;
  };
  struct Learned {
    std::shared_ptr<const PolicyWeights> weights;
    double sigma_x = 1e-6;
  };
  using Variant = std::variant<Fixed, Adaptive, Learned>;

  const Variant& variant() const { return variant_; }

 private:
  explicit ParamPolicy(Variant v) : variant_(std::move(v)) {}
  Variant variant_;
};

class PolicySession {
 public:
  virtual ~PolicySession() = default;
  /// Parameters before any feedback is available.
  virtual SolverParams initial() = 0;
  /// Parameters for the step that follows iteration state.k. `current` are
  /// the parameters the previous step actually ran with.
  virtual SolverParams next(const ResidualBundle& bundle, const SolverState& state,
                            const SolverParams& current) = 0;
};

/// Per-constraint feature rows of the inequality head (m x 10).
Mat inequality_features(const ResidualBundle& bundle, const SolverState& state);
/// Per-constraint feature rows of the equality head (p x 6).
Mat equality_features(const ResidualBundle& bundle, const SolverState& state);

/// Learned-policy parameters from raw features (exp, clamp, alpha sigmoid).
/// Throws PolicyError naming the head on a non-finite network output.
SolverParams learned_params(const PolicyWeights& weights, const Mat& ineq_features,
                            const Mat& eq_features, const std::vector<double>& norms,
                            double sigma_x, std::vector<LstmHidden>* ineq_hidden = nullptr,
                            std::vector<LstmHidden>* eq_hidden = nullptr,
                            LstmHidden* alpha_hidden = nullptr);

}  // namespace flexqp
