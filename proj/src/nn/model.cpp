#include "floodcast/nn/model.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "floodcast/errors.hpp"
#include "floodcast/floodgen/csv.hpp"

namespace floodcast {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Hybrid: return "hybrid";
    case Variant::FastGrnnOnly: return "fastgrnn-only";
    case Variant::FcnOnly: return "fcn-only";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "hybrid") return Variant::Hybrid;
  if (name == "fastgrnn-only") return Variant::FastGrnnOnly;
  if (name == "fcn-only") return Variant::FcnOnly;
  throw ConfigError("unknown variant '" + name + "' (expected hybrid, fastgrnn-only or fcn-only)");
}

std::size_t ModelConfig::head_inputs() const {
  std::size_t f = 0;
  if (uses_fastgrnn()) f += hidden_size;
  if (uses_fcn() && !conv_channels.empty()) f += conv_channels.back();
  return f;
}

void ModelConfig::validate() const {
  if (num_variables == 0 || window == 0) throw ConfigError("sample shape must be positive");
  if (uses_fastgrnn() && hidden_size == 0) throw ConfigError("hidden_size must be positive");
  if (uses_fcn()) {
    if (conv_channels.empty()) throw ConfigError("conv_channels must list at least one block");
    if (conv_channels.size() != kernel_sizes.size()) {
      throw ConfigError("conv_channels and kernel_sizes must have the same length");
    }
    for (auto c : conv_channels)
      if (c == 0) throw ConfigError("conv channel counts must be positive");
    for (auto k : kernel_sizes)
      if (k == 0 || k % 2 == 0) throw ConfigError("kernel sizes must be odd and positive, got " + std::to_string(k));
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
  if (num_classes != 2) throw ConfigError("num_classes must be 2 for the binary overflow task");
  if (!(loss_weight > 0.0) || !std::isfinite(loss_weight)) throw ConfigError("loss_weight must be positive");
  sparsity.validate();
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) || !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(optimizer.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (patience == 0) throw ConfigError("patience must be at least 1");
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
}

namespace {

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string trimmed(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  const std::string v = trimmed(text);
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  return out;
}

double parse_f64(const std::string& key, const std::string& text) {
  const std::string v = trimmed(text);
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_u64(key, item));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list");
  return out;
}

}  // namespace

bool apply_model_key(ModelConfig& c, const std::string& key, const std::string& value) {
  if (key == "variant") c.variant = parse_variant(trimmed(value));
  else if (key == "num_variables") c.num_variables = parse_u64(key, value);
  else if (key == "window") c.window = parse_u64(key, value);
  else if (key == "hidden_size") c.hidden_size = parse_u64(key, value);
  else if (key == "conv_channels") c.conv_channels = parse_sizes(key, value);
  else if (key == "kernel_sizes") c.kernel_sizes = parse_sizes(key, value);
  else if (key == "dropout_rate") c.dropout_rate = parse_f64(key, value);
  else if (key == "num_classes") c.num_classes = parse_u64(key, value);
  else if (key == "loss_weight") c.loss_weight = parse_f64(key, value);
  else if (key == "sparsity_w") c.sparsity.s_w = parse_f64(key, value);
  else if (key == "sparsity_u") c.sparsity.s_u = parse_f64(key, value);
  else if (key == "learning_rate") c.optimizer.learning_rate = parse_f64(key, value);
  else if (key == "adam_beta1") c.optimizer.beta1 = parse_f64(key, value);
  else if (key == "adam_beta2") c.optimizer.beta2 = parse_f64(key, value);
  else if (key == "adam_epsilon") c.optimizer.epsilon = parse_f64(key, value);
  else if (key == "patience") c.patience = parse_u64(key, value);
  else if (key == "max_epochs") c.max_epochs = parse_u64(key, value);
  else if (key == "batch_size") c.batch_size = parse_u64(key, value);
  else if (key == "seed") c.seed = parse_u64(key, value);
  else return false;
  return true;
}

std::vector<std::string> model_config_keys() {
  return {"variant",      "num_variables", "window",       "hidden_size",  "conv_channels",
          "kernel_sizes", "dropout_rate",  "num_classes",  "loss_weight",  "sparsity_w",
          "sparsity_u",   "learning_rate", "adam_beta1",   "adam_beta2",   "adam_epsilon",
          "patience",     "max_epochs",    "batch_size",   "seed"};
}

std::string ModelConfig::to_text() const {
  std::string s;
  auto put = [&](const char* k, const std::string& v) { s += std::string(k) + "=" + v + "\n"; };
  put("variant", variant_name(variant));
  put("num_variables", std::to_string(num_variables));
  put("window", std::to_string(window));
  put("hidden_size", std::to_string(hidden_size));
  put("conv_channels", join_sizes(conv_channels));
  put("kernel_sizes", join_sizes(kernel_sizes));
  put("dropout_rate", format_double(dropout_rate));
  put("num_classes", std::to_string(num_classes));
  put("loss_weight", format_double(loss_weight));
  put("sparsity_w", format_double(sparsity.s_w));
  put("sparsity_u", format_double(sparsity.s_u));
  put("learning_rate", format_double(optimizer.learning_rate));
  put("adam_beta1", format_double(optimizer.beta1));
  put("adam_beta2", format_double(optimizer.beta2));
  put("adam_epsilon", format_double(optimizer.epsilon));
  put("patience", std::to_string(patience));
  put("max_epochs", std::to_string(max_epochs));
  put("batch_size", std::to_string(batch_size));
  put("seed", std::to_string(seed));
  return s;
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig c;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (trimmed(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("model config line without '=': " + line);
    const std::string key = trimmed(line.substr(0, eq));
    if (!apply_model_key(c, key, line.substr(eq + 1))) throw ConfigError("unknown model config key '" + key + "'");
  }
  return c;
}

bool operator==(const ModelConfig& a, const ModelConfig& b) { return a.to_text() == b.to_text(); }

InputScaler InputScaler::identity(std::size_t variables) {
  return {Tensor(Shape{variables}, 0.0), Tensor(Shape{variables}, 1.0)};
}

InputScaler InputScaler::fit(const Dataset& data) {
  if (data.empty()) throw ConfigError("cannot fit an input scaler on an empty dataset");
  const std::size_t V = data.front().features.dim(0), T = data.front().features.dim(1);
  std::vector<double> sum(V, 0.0), sq(V, 0.0);
  for (const auto& s : data)
    for (std::size_t v = 0; v < V; ++v)
      for (std::size_t t = 0; t < T; ++t) sum[v] += s.features.at(v, t);
  const double n = static_cast<double>(data.size() * T);
  InputScaler sc = identity(V);
  for (std::size_t v = 0; v < V; ++v) sc.shift[v] = sum[v] / n;
  // Second pass around the mean for a stable variance.
  for (const auto& s : data)
    for (std::size_t v = 0; v < V; ++v)
      for (std::size_t t = 0; t < T; ++t) {
        const double d = s.features.at(v, t) - sc.shift[v];
        sq[v] += d * d;
      }
  for (std::size_t v = 0; v < V; ++v) {
    const double sd = std::sqrt(sq[v] / n);
    sc.scale[v] = sd > 1e-12 * std::max(1.0, std::abs(sc.shift[v])) ? sd : 1.0;
  }
  return sc;
}

bool InputScaler::is_identity() const {
  for (double v : shift.data())
    if (v != 0.0) return false;
  for (double v : scale.data())
    if (v != 1.0) return false;
  return true;
}

ModelParams init_model(const ModelConfig& cfg, RngState& rng) {
  cfg.validate();
  ModelParams p;
  RngState grnn_rng = rng.split(11), fcn_rng = rng.split(12), head_rng = rng.split(13);
  rng.next_u64();
  // The recurrent branch reads the dimension-shuffled sample: `window` features
  // per step over `num_variables` steps.
  if (cfg.uses_fastgrnn()) p.fastgrnn = init_fastgrnn(cfg.window, cfg.hidden_size, grnn_rng);
  if (cfg.uses_fcn()) {
    std::size_t in = cfg.num_variables;
    for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
      p.fcn.push_back(init_conv_block(in, cfg.conv_channels[i], cfg.kernel_sizes[i], fcn_rng));
      in = cfg.conv_channels[i];
    }
  }
  const std::size_t F = cfg.head_inputs();
  p.head_w = Tensor(Shape{cfg.num_classes, F}, 0.0);
  const double s = 1.0 / std::sqrt(static_cast<double>(F));
  for (auto& v : p.head_w.storage()) v = head_rng.normal(0.0, s);
  p.head_b = Tensor(Shape{cfg.num_classes}, 0.0);
  p.scaler = InputScaler::identity(cfg.num_variables);
  return p;
}

void check_params(const ModelConfig& cfg, const ModelParams& p) {
  auto fail = [](const std::string& what, const Shape& expected, const Shape& found) {
    throw DimensionError(what + ": expected " + shape_string(expected) + ", found " + shape_string(found));
  };
  if (cfg.uses_fastgrnn() != p.fastgrnn.has_value()) throw DimensionError("FastGRNN branch presence disagrees with variant");
  if (p.fastgrnn) {
    p.fastgrnn->validate();
    const Shape w{cfg.hidden_size, cfg.window};
    if (p.fastgrnn->W.shape() != w) fail("fastgrnn.W", w, p.fastgrnn->W.shape());
  }
  const std::size_t blocks = cfg.uses_fcn() ? cfg.conv_channels.size() : 0;
  if (p.fcn.size() != blocks) throw DimensionError("expected " + std::to_string(blocks) + " conv blocks, found " +
                                                   std::to_string(p.fcn.size()));
  std::size_t in = cfg.num_variables;
  for (std::size_t i = 0; i < blocks; ++i) {
    p.fcn[i].validate();
    const Shape k{cfg.conv_channels[i], in, cfg.kernel_sizes[i]};
    if (p.fcn[i].kernels.shape() != k) fail("fcn." + std::to_string(i) + ".kernels", k, p.fcn[i].kernels.shape());
    in = cfg.conv_channels[i];
  }
  const Shape hw{cfg.num_classes, cfg.head_inputs()};
  if (p.head_w.shape() != hw) fail("head.W", hw, p.head_w.shape());
  if (p.head_b.shape() != Shape{cfg.num_classes}) fail("head.b", Shape{cfg.num_classes}, p.head_b.shape());
  const Shape v{cfg.num_variables};
  if (p.scaler.shift.shape() != v) fail("scaler.shift", v, p.scaler.shift.shape());
  if (p.scaler.scale.shape() != v) fail("scaler.scale", v, p.scaler.scale.shape());
}

namespace {

template <class P, class T>
std::vector<T*> collect(P& p) {
  std::vector<T*> out;
  if (p.fastgrnn) {
    auto& g = *p.fastgrnn;
    for (T* t : {&g.W, &g.U, &g.b_z, &g.b_h, &g.zeta_raw, &g.nu_raw}) out.push_back(t);
  }
  for (auto& b : p.fcn)
    for (T* t : {&b.kernels, &b.bias, &b.bn_gamma, &b.bn_beta}) out.push_back(t);
  out.push_back(&p.head_w);
  out.push_back(&p.head_b);
  return out;
}

}  // namespace

std::vector<Tensor*> parameter_tensors(ModelParams& p) { return collect<ModelParams, Tensor>(p); }

std::vector<const Tensor*> parameter_tensors(const ModelParams& p) {
  return collect<const ModelParams, const Tensor>(p);
}

std::vector<std::string> parameter_names(const ModelParams& p) {
  std::vector<std::string> out;
  if (p.fastgrnn)
    for (const char* n : {"W", "U", "b_z", "b_h", "zeta_raw", "nu_raw"}) out.push_back(std::string("fastgrnn.") + n);
  for (std::size_t i = 0; i < p.fcn.size(); ++i)
    for (const char* n : {"kernels", "bias", "bn_gamma", "bn_beta"})
      out.push_back("fcn." + std::to_string(i) + "." + n);
  out.push_back("head.W");
  out.push_back("head.b");
  return out;
}

std::size_t parameter_count(const ModelParams& p) {
  std::size_t n = 0;
  for (const Tensor* t : parameter_tensors(p)) n += t->numel();
  return n;
}

ModelVars vars_from_flat(const ModelParams& layout, std::span<const Var> flat) {
  const std::size_t expected = (layout.fastgrnn ? 6 : 0) + 4 * layout.fcn.size() + 2;
  if (flat.size() != expected) {
    throw ContractError("expected " + std::to_string(expected) + " parameter vars, got " + std::to_string(flat.size()));
  }
  ModelVars v;
  std::size_t i = 0;
  if (layout.fastgrnn) {
    v.fastgrnn = FastGrnnVars{flat[0], flat[1], flat[2], flat[3], flat[4], flat[5]};
    i = 6;
  }
  for (std::size_t b = 0; b < layout.fcn.size(); ++b, i += 4) {
    v.fcn.push_back(ConvBlockVars{flat[i], flat[i + 1], flat[i + 2], flat[i + 3]});
  }
  v.head_w = flat[i];
  v.head_b = flat[i + 1];
  return v;
}

ModelVars bind_parameters(Tape& tape, const ModelParams& params, bool trainable) {
  const auto tensors = parameter_tensors(params);
  const auto names = parameter_names(params);
  std::vector<Var> flat;
  flat.reserve(tensors.size());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    flat.push_back(trainable ? tape.leaf(*tensors[i], names[i]) : tape.constant(*tensors[i], names[i]));
  }
  return vars_from_flat(params, flat);
}

std::vector<Var> flat_vars(const ModelVars& v) {
  std::vector<Var> out;
  if (v.fastgrnn) {
    const auto& g = *v.fastgrnn;
    for (const Var& x : {g.W, g.U, g.b_z, g.b_h, g.zeta_raw, g.nu_raw}) out.push_back(x);
  }
  for (const auto& b : v.fcn)
    for (const Var& x : {b.kernels, b.bias, b.bn_gamma, b.bn_beta}) out.push_back(x);
  out.push_back(v.head_w);
  out.push_back(v.head_b);
  return out;
}

Var forward(const ModelVars& vars, ModelParams& params, const ModelConfig& cfg, Var batch, Mode mode,
            RngState& rng) {
  const Shape& s = batch.shape();
  if (s.size() != 3 || s[1] != cfg.num_variables || s[2] != cfg.window) {
    throw DimensionError("forward: batch must be B x " + std::to_string(cfg.num_variables) + " x " +
                         std::to_string(cfg.window) + ", got " + shape_string(s));
  }
  if (vars.fastgrnn.has_value() != cfg.uses_fastgrnn() || vars.fcn.size() != params.fcn.size()) {
    throw DimensionError("forward: parameters do not match the configured variant");
  }
  Var x = params.scaler.is_identity() ? batch : standardize(batch, params.scaler.shift, params.scaler.scale);
  Tape& tape = batch.tape();
  const std::size_t B = s[0];

  Var features;
  if (cfg.uses_fastgrnn()) {
    Var h0 = tape.constant(Tensor(Shape{B, cfg.hidden_size}, 0.0), "h0");
    Var h = run_sequence(*vars.fastgrnn, dimension_shuffle(x), h0);
    features = dropout(h, cfg.dropout_rate, mode, rng);
  }
  if (cfg.uses_fcn()) {
    std::vector<BatchNormState*> states;
    for (auto& b : params.fcn) states.push_back(&b.bn);
    Var f = fcn_branch(vars.fcn, states, x, cfg.dropout_rate, mode, rng);
    features = features.valid() ? concat_cols(features, f) : f;
  }
  Var logits = add_row_bias(matmul(features, transpose(vars.head_w)), vars.head_b);
  return softmax_rows(logits);
}

Tensor predict_proba(const ModelParams& params, const ModelConfig& cfg, const Tensor& batch) {
  ModelParams local = params;
  Tape tape;
  ModelVars vars = bind_parameters(tape, local, false);
  RngState unused(0);
  Var out = forward(vars, local, cfg, tape.constant(batch, "batch"), Mode::Infer, unused);
  return out.value();
}

std::vector<double> predict_scores(const ModelParams& params, const ModelConfig& cfg, const Dataset& data,
                                   std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<double> scores;
  scores.reserve(data.size());
  ModelParams local = params;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(data.size(), start + batch_size); ++i) idx.push_back(i);
    Tape tape;
    ModelVars vars = bind_parameters(tape, local, false);
    RngState unused(0);
    Var out = forward(vars, local, cfg, tape.constant(stack_batch(data, idx), "batch"), Mode::Infer, unused);
    const Tensor& P = out.value();
    for (std::size_t b = 0; b < idx.size(); ++b) scores.push_back(P.at(b, 1));
  }
  return scores;
}

Tensor stack_batch(const Dataset& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ContractError("stack_batch: empty selection");
  const Shape& s = data.at(indices[0]).features.shape();
  if (s.size() != 2) throw DimensionError("samples must be V x T matrices");
  const std::size_t per = s[0] * s[1];
  Tensor out(Shape{indices.size(), s[0], s[1]}, 0.0);
  auto d = out.data();
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& f = data.at(indices[b]).features;
    if (f.shape() != s) throw DimensionError("samples have mixed shapes: " + shape_string(f.shape()) + " vs " +
                                             shape_string(s));
    std::copy(f.data().begin(), f.data().end(), d.begin() + static_cast<std::ptrdiff_t>(b * per));
  }
  return out;
}

std::vector<int> batch_labels(const Dataset& data, std::span<const std::size_t> indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(data.at(i).label);
  return out;
}

}  // namespace floodcast
