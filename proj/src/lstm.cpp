#include "botgraph/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "botgraph/errors.hpp"
#include "botgraph/rng.hpp"
#include "botgraph/util.hpp"

namespace botgraph {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// y += M x
void matvec_add(const Mat& m, const double* x, double* y) {
  for (int r = 0; r < m.rows; ++r) {
    const double* row = m.a.data() + static_cast<size_t>(r) * m.cols;
    double acc = 0.0;
    for (int c = 0; c < m.cols; ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

// y += M^T x
void matvec_t_add(const Mat& m, const double* x, double* y) {
  for (int r = 0; r < m.rows; ++r) {
    const double* row = m.a.data() + static_cast<size_t>(r) * m.cols;
    const double xr = x[r];
    for (int c = 0; c < m.cols; ++c) y[c] += row[c] * xr;
  }
}

// M += a (outer) b
void outer_add(Mat& m, const double* a, const double* b) {
  for (int r = 0; r < m.rows; ++r) {
    double* row = m.a.data() + static_cast<size_t>(r) * m.cols;
    const double ar = a[r];
    for (int c = 0; c < m.cols; ++c) row[c] += ar * b[c];
  }
}

}  // namespace

LstmParams LstmParams::zeros(int input_dim, int hidden_dim) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.wi = Mat(hidden_dim, input_dim);
  p.wf = Mat(hidden_dim, input_dim);
  p.wo = Mat(hidden_dim, input_dim);
  p.wc = Mat(hidden_dim, input_dim);
  p.ui = Mat(hidden_dim, hidden_dim);
  p.uf = Mat(hidden_dim, hidden_dim);
  p.uo = Mat(hidden_dim, hidden_dim);
  p.uc = Mat(hidden_dim, hidden_dim);
  p.bi.assign(hidden_dim, 0.0);
  p.bf.assign(hidden_dim, 0.0);
  p.bo.assign(hidden_dim, 0.0);
  p.bc.assign(hidden_dim, 0.0);
  p.w_out.assign(hidden_dim, 0.0);
  p.b_out = 0.0;
  return p;
}

std::vector<TensorRef> LstmParams::tensors() {
  return {
      {"wi", wi.a.data(), wi.a.size()},     {"wf", wf.a.data(), wf.a.size()},
      {"wo", wo.a.data(), wo.a.size()},     {"wc", wc.a.data(), wc.a.size()},
      {"ui", ui.a.data(), ui.a.size()},     {"uf", uf.a.data(), uf.a.size()},
      {"uo", uo.a.data(), uo.a.size()},     {"uc", uc.a.data(), uc.a.size()},
      {"bi", bi.data(), bi.size()},         {"bf", bf.data(), bf.size()},
      {"bo", bo.data(), bo.size()},         {"bc", bc.data(), bc.size()},
      {"w_out", w_out.data(), w_out.size()}, {"b_out", &b_out, 1},
  };
}

LstmParams init_params(uint64_t seed, int input_dim, int hidden_dim) {
  if (input_dim < 1 || hidden_dim < 1)
    throw ConfigError("model dimensions must be positive");
  LstmParams p = LstmParams::zeros(input_dim, hidden_dim);
  DetRng rng(seed);

  const double w_bound = std::sqrt(1.0 / input_dim);
  const double u_bound = std::sqrt(1.0 / hidden_dim);
  for (Mat* m : {&p.wi, &p.wf, &p.wo, &p.wc})
    for (double& v : m->a) v = rng.uniform(-w_bound, w_bound);
  for (Mat* m : {&p.ui, &p.uf, &p.uo, &p.uc})
    for (double& v : m->a) v = rng.uniform(-u_bound, u_bound);
  for (double& v : p.w_out) v = rng.uniform(-u_bound, u_bound);

  // Forget-gate bias 1 so early training does not wipe the cell state.
  std::fill(p.bf.begin(), p.bf.end(), 1.0);
  return p;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (!(rmsprop_decay > 0.0) || !(rmsprop_decay < 1.0))
    throw ConfigError("rmsprop_decay must lie in (0,1)");
  if (!(rmsprop_epsilon > 0.0)) throw ConfigError("rmsprop_epsilon must be positive");
  if (!(malicious_weight > 0.0)) throw ConfigError("malicious_weight must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
}

Prediction forward(const LstmParams& p, std::span<const FeatureVector> rows) {
  ForwardCache cache;
  return forward(p, rows, cache);
}

Prediction forward(const LstmParams& p, std::span<const FeatureVector> rows,
                   ForwardCache& cache) {
  const int H = p.hidden_dim;
  const int T = static_cast<int>(rows.size());
  if (p.input_dim > kFeatureCount)
    throw ConfigError("model input_dim exceeds the feature vector width");
  for (const auto& row : rows)
    for (int c = 0; c < p.input_dim; ++c)
      if (!std::isfinite(row[c])) throw InputError("non-finite value in model input");

  cache.steps = T;
  auto prep = [&](std::vector<std::vector<double>>& v) {
    v.resize(T);
    for (auto& step : v) step.assign(H, 0.0);
  };
  prep(cache.i);
  prep(cache.f);
  prep(cache.o);
  prep(cache.g);
  prep(cache.c);
  prep(cache.tanh_c);
  prep(cache.h);

  std::vector<double> zi(H), zf(H), zo(H), zg(H);
  const std::vector<double> zero_h(H, 0.0);

  for (int t = 0; t < T; ++t) {
    const double* x = rows[t].data();
    const double* h_prev = t > 0 ? cache.h[t - 1].data() : zero_h.data();
    const double* c_prev = t > 0 ? cache.c[t - 1].data() : zero_h.data();

    std::copy(p.bi.begin(), p.bi.end(), zi.begin());
    std::copy(p.bf.begin(), p.bf.end(), zf.begin());
    std::copy(p.bo.begin(), p.bo.end(), zo.begin());
    std::copy(p.bc.begin(), p.bc.end(), zg.begin());
    matvec_add(p.wi, x, zi.data());
    matvec_add(p.wf, x, zf.data());
    matvec_add(p.wo, x, zo.data());
    matvec_add(p.wc, x, zg.data());
    matvec_add(p.ui, h_prev, zi.data());
    matvec_add(p.uf, h_prev, zf.data());
    matvec_add(p.uo, h_prev, zo.data());
    matvec_add(p.uc, h_prev, zg.data());

    for (int j = 0; j < H; ++j) {
      const double ig = sigmoid(zi[j]);
      const double fg = sigmoid(zf[j]);
      const double og = sigmoid(zo[j]);
      const double cand = std::tanh(zg[j]);
      const double cc = fg * c_prev[j] + ig * cand;
      const double tc = std::tanh(cc);
      cache.i[t][j] = ig;
      cache.f[t][j] = fg;
      cache.o[t][j] = og;
      cache.g[t][j] = cand;
      cache.c[t][j] = cc;
      cache.tanh_c[t][j] = tc;
      cache.h[t][j] = og * tc;
    }
  }

  double z = p.b_out;
  if (T > 0)
    for (int j = 0; j < H; ++j) z += p.w_out[j] * cache.h[T - 1][j];
  cache.score = sigmoid(z);
  return Prediction{cache.score};
}

double weighted_mse(std::span<const double> scores, std::span<const uint8_t> labels,
                    double malicious_weight) {
  if (scores.size() != labels.size())
    throw ConfigError("scores/labels length mismatch");
  if (scores.empty()) return 0.0;
  double sum = 0.0;
  for (size_t k = 0; k < scores.size(); ++k) {
    const double y = labels[k] ? 1.0 : 0.0;
    const double w = labels[k] ? malicious_weight : 1.0;
    const double d = scores[k] - y;
    sum += w * d * d;
  }
  return sum / static_cast<double>(scores.size());
}

void backward(const LstmParams& p, std::span<const FeatureVector> rows,
              const ForwardCache& cache, double dscore, LstmParams& grad) {
  const int H = p.hidden_dim;
  const int T = cache.steps;
  if (T == 0) return;

  // Output head: score = sigmoid(w_out . h_T + b_out).
  const double dz = dscore * cache.score * (1.0 - cache.score);
  std::vector<double> dh(H), dc(H, 0.0);
  for (int j = 0; j < H; ++j) {
    grad.w_out[j] += dz * cache.h[T - 1][j];
    dh[j] = dz * p.w_out[j];
  }
  grad.b_out += dz;

  std::vector<double> da_i(H), da_f(H), da_o(H), da_g(H), dh_prev(H);
  const std::vector<double> zero_h(H, 0.0);

  for (int t = T - 1; t >= 0; --t) {
    const double* h_prev = t > 0 ? cache.h[t - 1].data() : zero_h.data();
    const double* c_prev = t > 0 ? cache.c[t - 1].data() : zero_h.data();
    const double* x = rows[t].data();

    for (int j = 0; j < H; ++j) {
      const double ig = cache.i[t][j], fg = cache.f[t][j], og = cache.o[t][j];
      const double cand = cache.g[t][j], tc = cache.tanh_c[t][j];

      const double dct = dh[j] * og * (1.0 - tc * tc) + dc[j];
      da_o[j] = dh[j] * tc * og * (1.0 - og);
      da_f[j] = dct * c_prev[j] * fg * (1.0 - fg);
      da_i[j] = dct * cand * ig * (1.0 - ig);
      da_g[j] = dct * ig * (1.0 - cand * cand);
      dc[j] = dct * fg;

      grad.bi[j] += da_i[j];
      grad.bf[j] += da_f[j];
      grad.bo[j] += da_o[j];
      grad.bc[j] += da_g[j];
    }

    outer_add(grad.wi, da_i.data(), x);
    outer_add(grad.wf, da_f.data(), x);
    outer_add(grad.wo, da_o.data(), x);
    outer_add(grad.wc, da_g.data(), x);
    outer_add(grad.ui, da_i.data(), h_prev);
    outer_add(grad.uf, da_f.data(), h_prev);
    outer_add(grad.uo, da_o.data(), h_prev);
    outer_add(grad.uc, da_g.data(), h_prev);

    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    matvec_t_add(p.ui, da_i.data(), dh_prev.data());
    matvec_t_add(p.uf, da_f.data(), dh_prev.data());
    matvec_t_add(p.uo, da_o.data(), dh_prev.data());
    matvec_t_add(p.uc, da_g.data(), dh_prev.data());
    dh.swap(dh_prev);
  }
}

TrainResult train(const std::vector<WindowSample>& samples, const TrainConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw ConfigError("no training samples");
  const int input_dim = kFeatureCount;
  for (const auto& s : samples)
    if (s.rows.empty()) throw ConfigError("training sample with no rows");

  bool any_pos = false, any_neg = false;
  for (const auto& s : samples) (s.label ? any_pos : any_neg) = true;
  if (!any_pos || !any_neg)
    throw ConfigError("training requires both classes; got a single-class sample set");

  const size_t n = samples.size();
  LstmParams params = init_params(cfg.seed, input_dim, 64);
  LstmParams grad = LstmParams::zeros(input_dim, params.hidden_dim);
  LstmParams vsq = LstmParams::zeros(input_dim, params.hidden_dim);

  DetRng order_rng(cfg.seed ^ 0x8badf00ddeadbeefull);
  std::vector<size_t> order(n);
  for (size_t k = 0; k < n; ++k) order[k] = k;

  auto p_tensors = params.tensors();
  auto g_tensors = grad.tensors();
  auto v_tensors = vsq.tensors();

  TrainResult result;
  result.loss_history.reserve(static_cast<size_t>(cfg.epochs));
  ForwardCache cache;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss_sum = 0.0;

    for (size_t batch_start = 0; batch_start < n;
         batch_start += static_cast<size_t>(cfg.batch_size)) {
      const size_t batch_end = std::min(n, batch_start + static_cast<size_t>(cfg.batch_size));
      const double inv_b = 1.0 / static_cast<double>(batch_end - batch_start);

      for (auto& t : g_tensors) std::fill(t.data, t.data + t.size, 0.0);

      for (size_t k = batch_start; k < batch_end; ++k) {
        const WindowSample& s = samples[order[k]];
        Prediction pred = forward(params, s.rows, cache);
        const double y = s.label ? 1.0 : 0.0;
        const double w = s.label ? cfg.malicious_weight : 1.0;
        const double diff = pred.score - y;
        epoch_loss_sum += w * diff * diff;
        backward(params, s.rows, cache, 2.0 * w * diff * inv_b, grad);
      }

      for (size_t ti = 0; ti < p_tensors.size(); ++ti) {
        double* pv = p_tensors[ti].data;
        double* gv = g_tensors[ti].data;
        double* vv = v_tensors[ti].data;
        for (size_t e = 0; e < p_tensors[ti].size; ++e) {
          vv[e] = cfg.rmsprop_decay * vv[e] + (1.0 - cfg.rmsprop_decay) * gv[e] * gv[e];
          pv[e] -= cfg.learning_rate * gv[e] / (std::sqrt(vv[e]) + cfg.rmsprop_epsilon);
        }
      }
    }

    const double epoch_loss = epoch_loss_sum / static_cast<double>(n);
    if (!std::isfinite(epoch_loss))
      throw NumericError(strfmt("training diverged at epoch %d (non-finite loss)", epoch + 1));
    result.loss_history.push_back(epoch_loss);
  }

  result.params = std::move(params);
  return result;
}

GradCheckReport gradient_check(const LstmParams& params, const WindowSample& sample,
                               double malicious_weight, double h) {
  if (!(h > 0.0)) throw ConfigError("finite-difference step must be positive");

  LstmParams work = params;
  LstmParams grad = LstmParams::zeros(params.input_dim, params.hidden_dim);

  const double y = sample.label ? 1.0 : 0.0;
  const double w = sample.label ? malicious_weight : 1.0;

  auto loss_at = [&](LstmParams& p) {
    const double s = forward(p, sample.rows).score;
    return w * (s - y) * (s - y);
  };

  {
    ForwardCache cache;
    Prediction pred = forward(work, sample.rows, cache);
    backward(work, sample.rows, cache, 2.0 * w * (pred.score - y), grad);
  }

  GradCheckReport report;
  auto w_tensors = work.tensors();
  auto g_tensors = grad.tensors();
  for (size_t ti = 0; ti < w_tensors.size(); ++ti) {
    double tensor_max = 0.0;
    for (size_t e = 0; e < w_tensors[ti].size; ++e) {
      double& v = w_tensors[ti].data[e];
      const double saved = v;
      v = saved + h;
      const double lp = loss_at(work);
      v = saved - h;
      const double lm = loss_at(work);
      v = saved;

      const double numeric = (lp - lm) / (2.0 * h);
      const double analytic = g_tensors[ti].data[e];
      const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
      tensor_max = std::max(tensor_max, std::fabs(analytic - numeric) / denom);
    }
    report.per_tensor.push_back({w_tensors[ti].name, tensor_max});
    report.max_rel_error = std::max(report.max_rel_error, tensor_max);
  }
  return report;
}

namespace {

using nlohmann::json;

json tensor_to_json(const double* data, size_t size) {
  json arr = json::array();
  for (size_t i = 0; i < size; ++i) arr.push_back(data[i]);
  return arr;
}

void tensor_from_json(const json& arr, double* data, size_t size, const char* name) {
  if (!arr.is_array() || arr.size() != size)
    throw InputError(strfmt("model tensor '%s' has wrong shape", name));
  for (size_t i = 0; i < size; ++i) {
    if (!arr[i].is_number())
      throw InputError(strfmt("model tensor '%s' holds a non-numeric value", name));
    data[i] = arr[i].get<double>();
    if (!std::isfinite(data[i]))
      throw InputError(strfmt("model tensor '%s' holds a non-finite value", name));
  }
}

}  // namespace

void save_model(const LstmParams& params, const TrainConfig& cfg,
                const PipelineMeta& meta, const std::string& path) {
  LstmParams copy = params;  // tensors() is non-const
  for (const auto& t : copy.tensors())
    for (size_t e = 0; e < t.size; ++e)
      if (!std::isfinite(t.data[e]))
        throw NumericError(strfmt("refusing to save non-finite tensor '%s'", t.name));

  json j;
  j["format"] = "botgraph-model";
  j["version"] = 1;
  j["input_dim"] = params.input_dim;
  j["hidden_dim"] = params.hidden_dim;
  json order = json::array();
  for (const char* name : kFeatureNames) order.push_back(name);
  j["feature_order"] = order;
  j["train_config"] = {
      {"epochs", cfg.epochs},
      {"learning_rate", cfg.learning_rate},
      {"rmsprop_decay", cfg.rmsprop_decay},
      {"rmsprop_epsilon", cfg.rmsprop_epsilon},
      {"malicious_weight", cfg.malicious_weight},
      {"batch_size", cfg.batch_size},
      {"seed", cfg.seed},
  };
  j["pipeline"] = {
      {"window_s", meta.window.window_s},
      {"step_s", meta.window.step_s},
      {"graph_mode", graph_mode_name(meta.mode)},
      {"epsilon", meta.conv.epsilon},
      {"max_iters", meta.conv.max_iters},
      {"damping", meta.conv.damping},
      {"slice_len", meta.slice_len},
      {"slice_overlap", meta.slice_overlap},
  };
  json tensors;
  for (const auto& t : copy.tensors()) tensors[t.name] = tensor_to_json(t.data, t.size);
  j["tensors"] = std::move(tensors);

  std::ofstream out(path);
  if (!out) throw InputError("cannot open for writing: " + path);
  out << j.dump(1) << "\n";
  if (!out) throw InputError("write failed: " + path);
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError(strfmt("%s: not a valid model file (%s)", path.c_str(), e.what()));
  }

  try {
    if (j.value("format", "") != "botgraph-model")
      throw InputError(path + ": not a botgraph model file");
    if (j.value("version", 0) != 1)
      throw InputError(strfmt("%s: unsupported model version %d", path.c_str(),
                              j.value("version", 0)));

    const int input_dim = j.at("input_dim").get<int>();
    const int hidden_dim = j.at("hidden_dim").get<int>();
    if (input_dim < 1 || hidden_dim < 1)
      throw InputError(path + ": invalid model dimensions");
    if (input_dim == kFeatureCount && j.contains("feature_order")) {
      const auto& order = j.at("feature_order");
      for (int k = 0; k < kFeatureCount; ++k)
        if (order.at(k).get<std::string>() != kFeatureNames[k])
          throw InputError(path + ": feature order does not match this build");
    }

    LoadedModel m;
    m.params = LstmParams::zeros(input_dim, hidden_dim);
    const auto& tensors = j.at("tensors");
    for (const auto& t : m.params.tensors())
      tensor_from_json(tensors.at(t.name), t.data, t.size, t.name);

    const auto& tc = j.at("train_config");
    m.train_config.epochs = tc.value("epochs", 200);
    m.train_config.learning_rate = tc.value("learning_rate", 1e-3);
    m.train_config.rmsprop_decay = tc.value("rmsprop_decay", 0.9);
    m.train_config.rmsprop_epsilon = tc.value("rmsprop_epsilon", 1e-8);
    m.train_config.malicious_weight = tc.value("malicious_weight", 6.0);
    m.train_config.batch_size = tc.value("batch_size", 32);
    m.train_config.seed = tc.value("seed", uint64_t{0});

    const auto& pl = j.at("pipeline");
    m.pipeline.window.window_s = pl.value("window_s", 300.0);
    m.pipeline.window.step_s = pl.value("step_s", 150.0);
    m.pipeline.mode = parse_graph_mode(pl.value("graph_mode", "weighted"));
    m.pipeline.conv.epsilon = pl.value("epsilon", 1e-6);
    m.pipeline.conv.max_iters = pl.value("max_iters", 10000);
    m.pipeline.conv.damping = pl.value("damping", 0.85);
    m.pipeline.slice_len = pl.value("slice_len", 5);
    m.pipeline.slice_overlap = pl.value("slice_overlap", 2);
    return m;
  } catch (const json::exception& e) {
    throw InputError(strfmt("%s: malformed model file (%s)", path.c_str(), e.what()));
  }
}

}  // namespace botgraph
