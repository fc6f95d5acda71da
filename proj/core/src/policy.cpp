#include "flexqp/policy.hpp"

#include "flexqp/error.hpp"
#include "flexqp/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace flexqp {

using json = nlohmann::json;

namespace {

constexpr int kIneqInputs = 10, kIneqOutputs = 3;
constexpr int kEqInputs = 6, kEqOutputs = 2;
constexpr int kAlphaInputs = 9, kAlphaOutputs = 1;
constexpr double kAlphaMargin = 2e-6;

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

std::vector<InputTransform> default_transforms(int head) {
  using T = InputTransform;
  switch (head) {
    case 0:
      return {T::SignedLog, T::SignedLog, T::SignedLog, T::SignedLog, T::Log,
              T::SignedLog, T::SignedLog, T::SignedLog, T::SignedLog, T::SignedLog};
    case 1:
      return {T::SignedLog, T::SignedLog, T::Log, T::SignedLog, T::SignedLog, T::SignedLog};
    default:
      return std::vector<T>(kAlphaInputs, T::Log);
  }
}

const char* transform_name(InputTransform t) {
  switch (t) {
    case InputTransform::Identity: return "identity";
    case InputTransform::Log: return "log";
    case InputTransform::SignedLog: return "signed_log";
  }
  return "?";
}

InputTransform parse_transform(const std::string& s) {
  if (s == "identity") return InputTransform::Identity;
  if (s == "log") return InputTransform::Log;
  if (s == "signed_log") return InputTransform::SignedLog;
  throw LoadError("unknown input transform '" + s + "'");
}

}  // namespace

double apply_transform(InputTransform t, double u) {
  switch (t) {
    case InputTransform::Identity: return u;
    // Norm inputs are nonnegative; clamping keeps the map total for stray negatives.
    case InputTransform::Log: return std::log10(std::max(u, 0.0) + 1e-12);
    case InputTransform::SignedLog: {
      const double mag = std::log10(1.0 + std::abs(u) / 1e-6);
      return u < 0.0 ? -mag : mag;
    }
  }
  return u;
}

// ---------------------------------------------------------------------------
// Forward passes

Vec forward_mlp(const std::vector<DenseLayer>& layers, const Vec& input) {
  Vec x = input;
  for (const DenseLayer& layer : layers) {
    if (x.size() != layer.cols) throw ArgumentError("MLP input has the wrong size");
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> W(
        layer.w.data(), layer.rows, layer.cols);
    Eigen::Map<const Vec> b(layer.b.data(), layer.rows);
    Vec y = W * x + b;
    if (layer.activation == Activation::Sigmoid) y = y.unaryExpr([](double u) { return sigmoid(u); });
    x = std::move(y);
  }
  return x;
}

Vec lstm_step(const LstmCell& cell, const Vec& input, LstmHidden& hidden) {
  const int H = cell.hidden_size;
  if (input.size() != cell.input_size) throw ArgumentError("LSTM input has the wrong size");
  if (hidden.h.size() != H || hidden.c.size() != H) throw ArgumentError("LSTM hidden state has the wrong size");
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> W_ih(cell.w_ih.data(), 4 * H, cell.input_size);
  Eigen::Map<const RowMat> W_hh(cell.w_hh.data(), 4 * H, H);
  Eigen::Map<const Vec> b_ih(cell.b_ih.data(), 4 * H);
  Eigen::Map<const Vec> b_hh(cell.b_hh.data(), 4 * H);
  const Vec gates = W_ih * input + b_ih + W_hh * hidden.h + b_hh;
  Vec c(H), h(H);
  for (int j = 0; j < H; ++j) {
    const double i_gate = sigmoid(gates[j]);
    const double f_gate = sigmoid(gates[H + j]);
    const double g_cand = std::tanh(gates[2 * H + j]);
    const double o_gate = sigmoid(gates[3 * H + j]);
    c[j] = f_gate * hidden.c[j] + i_gate * g_cand;
    h[j] = o_gate * std::tanh(c[j]);
  }
  hidden.h = h;
  hidden.c = c;
  return h;
}

int PolicyHead::input_dim() const {
  if (arch == Arch::Lstm && lstm) return lstm->input_size;
  return layers.empty() ? 0 : layers.front().cols;
}

int PolicyHead::output_dim() const { return layers.empty() ? 0 : layers.back().rows; }

void PolicyHead::validate(const std::string& name, int expected_in, int expected_out) const {
  auto fail = [&](const std::string& msg) { throw LoadError(name + ": " + msg); };
  if (layers.empty()) fail("no dense layers");
  int width = 0;
  if (arch == Arch::Lstm) {
    if (!lstm) fail("LSTM head without an lstm block");
    const LstmCell& c = *lstm;
    const auto H = static_cast<std::size_t>(c.hidden_size);
    if (c.input_size <= 0 || c.hidden_size <= 0) fail("LSTM sizes must be positive");
    if (c.w_ih.size() != 4 * H * c.input_size || c.w_hh.size() != 4 * H * H || c.b_ih.size() != 4 * H ||
        c.b_hh.size() != 4 * H)
      fail("LSTM tensor shapes do not match input_size/hidden_size");
    width = c.hidden_size;
  } else {
    width = layers.front().cols;
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const DenseLayer& l = layers[k];
    if (l.cols != width) fail("layer " + std::to_string(k) + " expects " + std::to_string(l.cols) +
                              " inputs but receives " + std::to_string(width));
    if (l.rows <= 0 || l.w.size() != static_cast<std::size_t>(l.rows) * l.cols ||
        l.b.size() != static_cast<std::size_t>(l.rows))
      fail("layer " + std::to_string(k) + " has inconsistent w/b sizes");
    width = l.rows;
  }
  if (input_dim() != expected_in)
    fail("signature mismatch: " + std::to_string(input_dim()) + " inputs, expected " +
         std::to_string(expected_in));
  if (output_dim() != expected_out)
    fail("signature mismatch: " + std::to_string(output_dim()) + " outputs, expected " +
         std::to_string(expected_out));
  if (static_cast<int>(input_transforms.size()) != expected_in) fail("input_transforms has the wrong length");
}

void PolicyWeights::validate() const {
  pi_I.validate("pi_I", kIneqInputs, kIneqOutputs);
  pi_E.validate("pi_E", kEqInputs, kEqOutputs);
  pi_alpha.validate("pi_alpha", kAlphaInputs, kAlphaOutputs);
}

LstmHidden zero_hidden(const PolicyHead& head) {
  const int H = head.lstm ? head.lstm->hidden_size : 0;
  return {Vec::Zero(H), Vec::Zero(H)};
}

Vec head_forward(const PolicyHead& head, const Vec& raw, LstmHidden* hidden) {
  if (raw.size() != head.input_dim()) throw ArgumentError("feature row has the wrong size");
  Vec x(raw.size());
  for (int i = 0; i < raw.size(); ++i) x[i] = apply_transform(head.input_transforms[i], raw[i]);
  if (head.arch == Arch::Lstm) {
    LstmHidden local = zero_hidden(head);
    LstmHidden& state = hidden ? *hidden : local;
    if (state.h.size() == 0) state = zero_hidden(head);
    x = lstm_step(*head.lstm, x, state);
  }
  return forward_mlp(head.layers, x);
}

// ---------------------------------------------------------------------------
// Weight files

namespace {

json layer_to_json(const DenseLayer& l) {
  return {{"rows", l.rows},
          {"cols", l.cols},
          {"w", l.w},
          {"b", l.b},
          {"activation", l.activation == Activation::Sigmoid ? "sigmoid" : "identity"}};
}

PolicyHead head_from_json(const json& j, const std::string& name) {
  PolicyHead head;
  const std::string arch = j.at("arch").get<std::string>();
  if (arch == "mlp" || arch == "MLP")
    head.arch = Arch::Mlp;
  else if (arch == "lstm" || arch == "LSTM")
    head.arch = Arch::Lstm;
  else
    throw LoadError(name + ": unknown architecture tag '" + arch + "'");
  const json& layers = j.at("layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const json& lj = layers[k];
    DenseLayer l;
    l.rows = lj.at("rows").get<int>();
    l.cols = lj.at("cols").get<int>();
    l.w = lj.at("w").get<std::vector<double>>();
    l.b = lj.at("b").get<std::vector<double>>();
    const bool last = k + 1 == layers.size();
    const std::string act = lj.value("activation", last ? "identity" : "sigmoid");
    if (act == "sigmoid")
      l.activation = Activation::Sigmoid;
    else if (act == "identity")
      l.activation = Activation::Identity;
    else
      throw LoadError(name + ": unknown activation '" + act + "'");
    head.layers.push_back(std::move(l));
  }
  if (head.arch == Arch::Lstm) {
    const json& c = j.at("lstm");
    LstmCell cell;
    cell.input_size = c.at("input_size").get<int>();
    cell.hidden_size = c.at("hidden_size").get<int>();
    cell.w_ih = c.at("w_ih").get<std::vector<double>>();
    cell.w_hh = c.at("w_hh").get<std::vector<double>>();
    cell.b_ih = c.at("b_ih").get<std::vector<double>>();
    cell.b_hh = c.at("b_hh").get<std::vector<double>>();
    head.lstm = std::move(cell);
  }
  return head;
}

json head_to_json(const PolicyHead& head) {
  json j;
  j["arch"] = head.arch == Arch::Mlp ? "mlp" : "lstm";
  j["layers"] = json::array();
  for (const DenseLayer& l : head.layers) j["layers"].push_back(layer_to_json(l));
  if (head.lstm) {
    const LstmCell& c = *head.lstm;
    j["lstm"] = {{"input_size", c.input_size}, {"hidden_size", c.hidden_size}, {"w_ih", c.w_ih},
                 {"w_hh", c.w_hh},             {"b_ih", c.b_ih},               {"b_hh", c.b_hh}};
  }
  return j;
}

}  // namespace

PolicyWeights parse_weights(const std::string& text) {
  PolicyWeights w;
  try {
    const json j = json::parse(text);
    w.pi_I = head_from_json(j.at("pi_I"), "pi_I");
    w.pi_E = head_from_json(j.at("pi_E"), "pi_E");
    w.pi_alpha = head_from_json(j.at("pi_alpha"), "pi_alpha");
    w.version = j.value("version", 1);
    if (j.contains("kl_divergence") && !j["kl_divergence"].is_null())
      w.kl_divergence = j["kl_divergence"].get<double>();
    PolicyHead* heads[3] = {&w.pi_I, &w.pi_E, &w.pi_alpha};
    const char* names[3] = {"pi_I", "pi_E", "pi_alpha"};
    for (int h = 0; h < 3; ++h) {
      if (j.contains("input_transforms") && j["input_transforms"].contains(names[h])) {
        for (const auto& t : j["input_transforms"][names[h]])
          heads[h]->input_transforms.push_back(parse_transform(t.get<std::string>()));
      } else {
        heads[h]->input_transforms = default_transforms(h);
      }
    }
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed weight file: ") + e.what());
  }
  w.validate();
  return w;
}

PolicyWeights load_weights(const std::string& path) { return parse_weights(read_file(path)); }

std::string dump_weights(const PolicyWeights& w) {
  json j;
  j["version"] = w.version;
  j["pi_I"] = head_to_json(w.pi_I);
  j["pi_E"] = head_to_json(w.pi_E);
  j["pi_alpha"] = head_to_json(w.pi_alpha);
  json transforms;
  const PolicyHead* heads[3] = {&w.pi_I, &w.pi_E, &w.pi_alpha};
  const char* names[3] = {"pi_I", "pi_E", "pi_alpha"};
  for (int h = 0; h < 3; ++h) {
    json arr = json::array();
    for (InputTransform t : heads[h]->input_transforms) arr.push_back(transform_name(t));
    transforms[names[h]] = arr;
  }
  j["input_transforms"] = transforms;
  if (w.kl_divergence) j["kl_divergence"] = *w.kl_divergence;
  return j.dump();
}

namespace {

PolicyHead zero_head(Arch arch, int in, int out, int head_index) {
  constexpr int kWidth = 32;
  PolicyHead head;
  head.arch = arch;
  head.input_transforms = default_transforms(head_index);
  auto layer = [](int rows, int cols, Activation act) {
    DenseLayer l;
    l.rows = rows;
    l.cols = cols;
    l.w.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    l.b.assign(rows, 0.0);
    l.activation = act;
    return l;
  };
  int width = in;
  if (arch == Arch::Lstm) {
    LstmCell c;
    c.input_size = in;
    c.hidden_size = kWidth;
    c.w_ih.assign(4 * kWidth * in, 0.0);
    c.w_hh.assign(4 * kWidth * kWidth, 0.0);
    c.b_ih.assign(4 * kWidth, 0.0);
    c.b_hh.assign(4 * kWidth, 0.0);
    head.lstm = std::move(c);
    width = kWidth;
  }
  head.layers.push_back(layer(kWidth, width, Activation::Sigmoid));
  head.layers.push_back(layer(kWidth, kWidth, Activation::Sigmoid));
  head.layers.push_back(layer(out, kWidth, Activation::Identity));
  return head;
}

}  // namespace

PolicyWeights zero_weights(Arch arch) {
  PolicyWeights w;
  w.pi_I = zero_head(arch, kIneqInputs, kIneqOutputs, 0);
  w.pi_E = zero_head(arch, kEqInputs, kEqOutputs, 1);
  w.pi_alpha = zero_head(arch, kAlphaInputs, kAlphaOutputs, 2);
  return w;
}

std::vector<GoldenVector> load_golden(const std::string& path) {
  std::vector<GoldenVector> out;
  try {
    const json j = json::parse(read_file(path));
    for (const json& e : j) {
      GoldenVector g;
      g.head = e.at("head").get<std::string>();
      const auto in = e.at("inputs").get<std::vector<double>>();
      const auto exp = e.at("expected_outputs").get<std::vector<double>>();
      g.inputs = Eigen::Map<const Vec>(in.data(), static_cast<Eigen::Index>(in.size()));
      g.expected_outputs = Eigen::Map<const Vec>(exp.data(), static_cast<Eigen::Index>(exp.size()));
      out.push_back(std::move(g));
    }
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed golden-vector file: ") + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Features

Mat inequality_features(const ResidualBundle& r, const SolverState& st) {
  const int m = static_cast<int>(st.s.size());
  const double dual = inf_norm(r.zeta_dual);
  Mat f(m, kIneqInputs);
  for (int i = 0; i < m; ++i)
    f.row(i) << st.s[i], st.z_I[i], st.w_s[i], st.y_I[i], dual, r.zeta_I[i], r.admm_dual.s[i],
        r.admm_dual.I[i], r.admm_primal.s[i], r.admm_primal.I[i];
  return f;
}

Mat equality_features(const ResidualBundle& r, const SolverState& st) {
  const int p = static_cast<int>(st.z_E.size());
  const double dual = inf_norm(r.zeta_dual);
  Mat f(p, kEqInputs);
  for (int j = 0; j < p; ++j)
    f.row(j) << st.z_E[j], st.y_E[j], dual, r.zeta_E[j], r.admm_dual.E[j], r.admm_primal.E[j];
  return f;
}

SolverParams learned_params(const PolicyWeights& w, const Mat& fI, const Mat& fE,
                            const std::vector<double>& norms, double sigma_x,
                            std::vector<LstmHidden>* hI, std::vector<LstmHidden>* hE, LstmHidden* hA) {
  const int m = static_cast<int>(fI.rows()), p = static_cast<int>(fE.rows());
  auto finite_or_throw = [](const Vec& out, const char* head) {
    if (!out.allFinite()) throw PolicyError(std::string(head) + " produced a non-finite output");
  };
  auto pexp = [](double u) { return std::clamp(std::exp(u), kParamMin, kParamMax); };

  SolverParams params;
  params.sigma_x = sigma_x;
  params.mu_I.resize(m);
  params.sigma_s.resize(m);
  params.rho_I.resize(m);
  for (int i = 0; i < m; ++i) {
    LstmHidden* h = hI ? &(*hI)[i] : nullptr;
    const Vec out = head_forward(w.pi_I, fI.row(i).transpose(), h);
    finite_or_throw(out, "pi_I");
    params.mu_I[i] = pexp(out[0]);
    params.sigma_s[i] = pexp(out[1]);
    params.rho_I[i] = pexp(out[2]);
  }
  params.mu_E.resize(p);
  params.rho_E.resize(p);
  for (int j = 0; j < p; ++j) {
    LstmHidden* h = hE ? &(*hE)[j] : nullptr;
    const Vec out = head_forward(w.pi_E, fE.row(j).transpose(), h);
    finite_or_throw(out, "pi_E");
    params.mu_E[j] = pexp(out[0]);
    params.rho_E[j] = pexp(out[1]);
  }
  const Vec a_in = Eigen::Map<const Vec>(norms.data(), static_cast<Eigen::Index>(norms.size()));
  const Vec a_out = head_forward(w.pi_alpha, a_in, hA);
  finite_or_throw(a_out, "pi_alpha");
  params.alpha = std::clamp(2.0 * sigmoid(a_out[0]), kAlphaMargin, 2.0 - kAlphaMargin);
  return params;
}

// ---------------------------------------------------------------------------
// Policies

void AdaptiveConfig::validate() const {
  if (!(tau > 1.0)) throw ParameterError("adaptive tau must exceed 1");
  if (!(ratio_trigger > 1.0)) throw ParameterError("adaptive ratio_trigger must exceed 1");
  if (adapt_every < 1) throw ParameterError("adaptive adapt_every must be at least 1");
  if (!(mu_growth_limit >= 1.0)) throw ParameterError("adaptive mu_growth_limit must be at least 1");
}

ParamPolicy ParamPolicy::fixed(const ScalarParams& params) { return ParamPolicy(Fixed{params}); }

ParamPolicy ParamPolicy::fixed(const SolverParams& params) { return ParamPolicy(Fixed{params}); }

ParamPolicy ParamPolicy::adaptive(const AdaptiveConfig& cfg) {
  cfg.validate();
  return ParamPolicy(Adaptive{cfg});
}

ParamPolicy ParamPolicy::learned(std::shared_ptr<const PolicyWeights> weights, double sigma_x) {
  if (!weights) throw ArgumentError("learned policy needs weights");
  weights->validate();
  return ParamPolicy(Learned{std::move(weights), sigma_x});
}

std::string ParamPolicy::describe() const {
  if (std::holds_alternative<Fixed>(variant_)) return "fixed";
  if (std::holds_alternative<Adaptive>(variant_)) return "adaptive";
  return "learned";
}

namespace {

class FixedSession final : public PolicySession {
 public:
  explicit FixedSession(SolverParams p) : params_(std::move(p)) {}
  SolverParams initial() override { return params_; }
  SolverParams next(const ResidualBundle&, const SolverState&, const SolverParams&) override {
    return params_;
  }

 private:
  SolverParams params_;
};

class AdaptiveSession final : public PolicySession {
 public:
  AdaptiveSession(const AdaptiveConfig& cfg, int m, int p)
      : cfg_(cfg), desired_(SolverParams::broadcast(m, p, cfg.initial)) {}

  SolverParams initial() override { return desired_; }

  SolverParams next(const ResidualBundle& r, const SolverState& st, const SolverParams&) override {
    if (st.k == 0 || st.k % cfg_.adapt_every != 0) return desired_;
    const double primal = std::max(inf_norm(r.zeta_I), inf_norm(r.zeta_E));
    const double dual = inf_norm(r.zeta_dual);
    double factor = 1.0;
    if (primal > cfg_.ratio_trigger * dual && primal > 0.0)
      factor = cfg_.tau;
    else if (dual > cfg_.ratio_trigger * primal && dual > 0.0)
      factor = 1.0 / cfg_.tau;
    desired_.sigma_s *= factor;
    desired_.rho_I *= factor;
    desired_.rho_E *= factor;
    if (cfg_.adapt_mu) {
      const double cap_I = cfg_.mu_growth_limit * cfg_.initial.mu_I;
      const double cap_E = cfg_.mu_growth_limit * cfg_.initial.mu_E;
      for (int i = 0; i < desired_.mu_I.size(); ++i)
        if (std::abs(st.y_I[i]) >= 0.99 * desired_.mu_I[i])
          desired_.mu_I[i] = std::min(2.0 * desired_.mu_I[i], cap_I);
      for (int j = 0; j < desired_.mu_E.size(); ++j)
        if (std::abs(st.y_E[j]) >= 0.99 * desired_.mu_E[j])
          desired_.mu_E[j] = std::min(2.0 * desired_.mu_E[j], cap_E);
    }
    desired_ = desired_.clamped();
    return desired_;
  }

 private:
  AdaptiveConfig cfg_;
  SolverParams desired_;
};

class LearnedSession final : public PolicySession {
 public:
  LearnedSession(std::shared_ptr<const PolicyWeights> w, double sigma_x, int m, int p)
      : w_(std::move(w)), sigma_x_(sigma_x), m_(m), p_(p) {
    hI_.assign(m, zero_hidden(w_->pi_I));
    hE_.assign(p, zero_hidden(w_->pi_E));
    hA_ = zero_hidden(w_->pi_alpha);
  }

  SolverParams initial() override {
    ScalarParams s;
    s.sigma_x = sigma_x_;
    return SolverParams::broadcast(m_, p_, s);
  }

  SolverParams next(const ResidualBundle& r, const SolverState& st, const SolverParams&) override {
    return learned_params(*w_, inequality_features(r, st), equality_features(r, st), r.policy_norms(),
                          sigma_x_, &hI_, &hE_, &hA_);
  }

 private:
  std::shared_ptr<const PolicyWeights> w_;
  double sigma_x_;
  int m_, p_;
  std::vector<LstmHidden> hI_, hE_;
  LstmHidden hA_;
};

}  // namespace

std::unique_ptr<PolicySession> ParamPolicy::start(const QpProblem& prob) const {
  const int m = prob.m(), p = prob.p();
  if (const auto* f = std::get_if<Fixed>(&variant_)) {
    SolverParams params = std::holds_alternative<ScalarParams>(f->params)
                              ? SolverParams::broadcast(m, p, std::get<ScalarParams>(f->params))
                              : std::get<SolverParams>(f->params);
    params.validate(m, p);
    return std::make_unique<FixedSession>(std::move(params));
  }
  if (const auto* a = std::get_if<Adaptive>(&variant_)) return std::make_unique<AdaptiveSession>(a->cfg, m, p);
  const auto& l = std::get<Learned>(variant_);
  return std::make_unique<LearnedSession>(l.weights, l.sigma_x, m, p);
}

}  // namespace flexqp
