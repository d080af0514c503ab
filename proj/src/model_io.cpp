#include "blendfit/model_io.hpp"

#include "blendfit/error.hpp"
#include "blendfit/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>

namespace blendfit::model_io {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void schema(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::SchemaViolation, path + ": " + what);
}

// ---- writers ---------------------------------------------------------------

// JSON has no inf/nan; those are spelled as strings.
Json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

Json vec(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

Json vec(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

Json mat(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec(Eigen::VectorXd(m.row(r).transpose())));
  return rows;
}

template <class T>
Json opt(const std::optional<T>& v) {
  return v ? num(*v) : Json(nullptr);
}

Json test_result(const std::optional<stats::TestResult>& r) {
  if (!r) return nullptr;
  return Json{{"statistic", num(r->statistic)}, {"p_value", opt(r->p_value)}};
}

std::string_view method_name(features::SelectionMethod m) {
  return m == features::SelectionMethod::Correlation ? "correlation" : "f_regression";
}

Json selector_json(const features::FeatureSelector& s) {
  return Json{{"method", method_name(s.method)}, {"indices", s.indices}, {"scores", vec(s.scores)}};
}

Json step_json(const transforms::TransformStep& step) {
  Json j{{"kind", transforms::kind_name(step)}};
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, transforms::PcdProject>) {
          j["center"] = vec(s.center);
          j["components"] = mat(s.components);
          j["eigenvalues"] = vec(s.eigenvalues);
        } else if constexpr (std::is_same_v<T, transforms::Displacement>) {
          j["neutral"] = vec(s.neutral);
        } else if constexpr (std::is_same_v<T, transforms::AspectRatio>) {
          j["point_count"] = s.point_count;
          Json pairs = Json::array();
          for (const auto& [a, b] : s.pairs) pairs.push_back(Json::array({a, b}));
          j["pairs"] = std::move(pairs);
          j["neutral_distances"] = vec(s.neutral_distances);
        } else if constexpr (std::is_same_v<T, transforms::Log1p>) {
          j["dim"] = s.dim;
        } else if constexpr (std::is_same_v<T, transforms::ExpScale>) {
          j["dim"] = s.dim;
          j["rate"] = num(s.rate);
        } else {
          j["mean"] = vec(s.mean);
          j["scale"] = vec(s.scale);
        }
      },
      step);
  return j;
}

Json chain_json(const transforms::TransformChain& c) {
  Json steps = Json::array();
  for (const auto& s : c.steps()) steps.push_back(step_json(s));
  return Json{{"input_dim", c.input_dim()}, {"steps", std::move(steps)}};
}

Json report_json(const regress::FitReport& r) {
  return Json{{"n_samples", r.n_samples},
              {"r2", num(r.r2)},
              {"mse", num(r.mse)},
              {"durbin_watson", opt(r.durbin_watson)},
              {"breusch_pagan", test_result(r.breusch_pagan)},
              {"f_statistic", num(r.f_statistic)},
              {"pearson_resid_truth", opt(r.pearson_resid_truth)},
              {"xi", opt(r.xi)},
              {"shapiro_wilk", test_result(r.shapiro_wilk)},
              {"model_bytes", r.model_bytes}};
}

Json regressor_params(const regress::RegressorModel& m) {
  return Json{{"family", regress::family_name(m.spec.family)},
              {"degree", m.spec.degree},
              {"components", m.spec.components},
              {"input_dim", m.input_dim},
              {"weights", vec(m.weights)},
              {"bias", num(m.bias)},
              {"rates", vec(m.rates)},
              {"link_offset", num(m.link_offset)}};
}

Json regressor_json(const regress::RegressorModel& m) {
  Json j = regressor_params(m);
  j["report"] = report_json(m.report);
  return j;
}

Json correction_json(const regress::CorrectionParams& p) {
  return Json{{"eta", num(p.eta)},
              {"gamma", num(p.gamma)},
              {"k", num(p.k)},
              {"beta_0", num(p.beta_0)},
              {"lambda_beta", num(p.lambda_beta)},
              {"g", Json{{"knots", vec(p.g.knots)}, {"values", vec(p.g.values)}}}};
}

Json smoother_json(const smooth::SmootherConfig& s) {
  return Json{{"kind", smooth::kind_name(s.kind)},
              {"window", s.window},
              {"alpha", num(s.alpha)},
              {"cutoff_hz", num(s.cutoff_hz)},
              {"frame_interval_ms", num(s.frame_interval_ms)},
              {"process_noise", num(s.process_noise)},
              {"measurement_noise", num(s.measurement_noise)}};
}

Json basis_json(const geometry::AffineBasis& b) {
  return Json{{"anchor_nose", b.anchor_nose},
              {"anchor_eye_left", b.anchor_eye_left},
              {"anchor_eye_right", b.anchor_eye_right},
              {"target_interocular", num(b.target_interocular)}};
}

Json channel_json(const pipeline::ChannelModel& ch, std::size_t index) {
  Json j{{"name", name_of(blendshape_at(index))}, {"enabled", ch.enabled}};
  j["selector"] = ch.selector ? selector_json(*ch.selector) : Json(nullptr);
  j["chain"] = ch.chain ? chain_json(*ch.chain) : Json(nullptr);
  j["regressor"] = ch.regressor ? regressor_json(*ch.regressor) : Json(nullptr);
  j["correction"] = correction_json(ch.correction);
  j["smoother"] = smoother_json(ch.smoother);
  j["selection_agreement"] = opt(ch.selection_agreement);
  j["note"] = ch.note;
  return j;
}

Json model_json(const pipeline::PipelineModel& m) {
  Json channels = Json::array();
  for (std::size_t c = 0; c < kBlendshapeCount; ++c) channels.push_back(channel_json(m.channels[c], c));
  return Json{{"format", kFormatName},
              {"format_version", m.format_version},
              {"point_count", m.point_count},
              {"basis", basis_json(m.basis)},
              {"channels", std::move(channels)}};
}

std::string dump(const Json& j) { return j.dump(1); }

// ---- readers ---------------------------------------------------------------

const Json& field(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) schema(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) schema(path + "." + key, "missing");
  return *it;
}

double as_double(const Json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  schema(path, "expected a number");
}

std::size_t as_size(const Json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return j.get<std::size_t>();
  schema(path, "expected a non-negative integer");
}

bool as_bool(const Json& j, const std::string& path) {
  if (!j.is_boolean()) schema(path, "expected true or false");
  return j.get<bool>();
}

const std::string& as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) schema(path, "expected a string");
  return j.get_ref<const std::string&>();
}

const Json& as_array(const Json& j, const std::string& path) {
  if (!j.is_array()) schema(path, "expected an array");
  return j;
}

double get_double(const Json& j, const char* key, const std::string& path) {
  return as_double(field(j, key, path), path + "." + key);
}
std::size_t get_size(const Json& j, const char* key, const std::string& path) {
  return as_size(field(j, key, path), path + "." + key);
}

std::optional<double> get_opt_double(const Json& j, const char* key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (v.is_null()) return std::nullopt;
  return as_double(v, path + "." + key);
}

std::vector<double> get_list(const Json& j, const char* key, const std::string& path) {
  const std::string p = path + "." + key;
  const auto& a = as_array(field(j, key, path), p);
  std::vector<double> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_double(a[i], p + "[" + std::to_string(i) + "]"));
  return out;
}

Eigen::VectorXd get_vec(const Json& j, const char* key, const std::string& path) {
  const auto v = get_list(j, key, path);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::size_t> get_indices(const Json& j, const char* key, const std::string& path) {
  const std::string p = path + "." + key;
  const auto& a = as_array(field(j, key, path), p);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_size(a[i], p + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> as_pairs(const Json& a, const std::string& p) {
  as_array(a, p);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string pi = p + "[" + std::to_string(i) + "]";
    if (!a[i].is_array() || a[i].size() != 2) schema(pi, "expected a pair");
    out.emplace_back(as_size(a[i][0], pi), as_size(a[i][1], pi));
  }
  return out;
}

Eigen::MatrixXd get_mat(const Json& j, const char* key, const std::string& path) {
  const std::string p = path + "." + key;
  const auto& rows = as_array(field(j, key, path), p);
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  const auto cols = as_array(rows[0], p + "[0]").size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string pr = p + "[" + std::to_string(r) + "]";
    const auto& row = as_array(rows[r], pr);
    if (row.size() != cols) schema(pr, "ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = as_double(row[c], pr);
    }
  }
  return m;
}

std::optional<stats::TestResult> get_test(const Json& j, const char* key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (v.is_null()) return std::nullopt;
  const std::string p = path + "." + key;
  return stats::TestResult{get_double(v, "statistic", p), get_opt_double(v, "p_value", p)};
}

features::FeatureSelector read_selector(const Json& j, BlendshapeName name, const std::string& p) {
  features::FeatureSelector s;
  s.blendshape = name;
  const auto& method = as_string(field(j, "method", p), p + ".method");
  if (method == "correlation") {
    s.method = features::SelectionMethod::Correlation;
  } else if (method == "f_regression") {
    s.method = features::SelectionMethod::FRegression;
  } else {
    schema(p + ".method", "unknown selection method '" + method + "'");
  }
  s.indices = get_indices(j, "indices", p);
  s.scores = get_list(j, "scores", p);
  return s;
}

transforms::TransformStep read_step(const Json& j, const std::string& p) {
  const auto& kind = as_string(field(j, "kind", p), p + ".kind");
  if (kind == "pcd_project") {
    return transforms::PcdProject{get_vec(j, "center", p), get_mat(j, "components", p),
                                  get_vec(j, "eigenvalues", p)};
  }
  if (kind == "displacement") return transforms::Displacement{get_vec(j, "neutral", p)};
  if (kind == "aspect_ratio") {
    return transforms::AspectRatio{get_size(j, "point_count", p),
                                   as_pairs(field(j, "pairs", p), p + ".pairs"),
                                   get_list(j, "neutral_distances", p)};
  }
  if (kind == "log1p") return transforms::Log1p{get_size(j, "dim", p)};
  if (kind == "exp_scale") return transforms::ExpScale{get_size(j, "dim", p), get_double(j, "rate", p)};
  if (kind == "standardize") return transforms::Standardize{get_vec(j, "mean", p), get_vec(j, "scale", p)};
  schema(p + ".kind", "unknown transform '" + kind + "'");
}

transforms::TransformChain read_chain(const Json& j, const std::string& p) {
  const auto& arr = as_array(field(j, "steps", p), p + ".steps");
  std::vector<transforms::TransformStep> steps;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string ps = p + ".steps[" + std::to_string(i) + "]";
    auto step = read_step(arr[i], ps);
    transforms::validate(step);
    steps.push_back(std::move(step));
  }
  return transforms::TransformChain(std::move(steps), get_size(j, "input_dim", p));
}

regress::FitReport read_report(const Json& j, const std::string& p) {
  regress::FitReport r;
  r.n_samples = get_size(j, "n_samples", p);
  r.r2 = get_double(j, "r2", p);
  r.mse = get_double(j, "mse", p);
  r.durbin_watson = get_opt_double(j, "durbin_watson", p);
  r.breusch_pagan = get_test(j, "breusch_pagan", p);
  r.f_statistic = get_double(j, "f_statistic", p);
  r.pearson_resid_truth = get_opt_double(j, "pearson_resid_truth", p);
  r.xi = get_opt_double(j, "xi", p);
  r.shapiro_wilk = get_test(j, "shapiro_wilk", p);
  r.model_bytes = get_size(j, "model_bytes", p);
  return r;
}

regress::RegressorModel read_regressor(const Json& j, const std::string& p) {
  regress::RegressorModel m;
  const auto& fam = as_string(field(j, "family", p), p + ".family");
  const auto family = regress::parse_family(fam);
  if (!family) schema(p + ".family", "unknown family '" + fam + "'");
  m.spec.family = *family;
  m.spec.degree = get_size(j, "degree", p);
  m.spec.components = get_size(j, "components", p);
  m.input_dim = get_size(j, "input_dim", p);
  m.weights = get_vec(j, "weights", p);
  m.bias = get_double(j, "bias", p);
  m.rates = get_vec(j, "rates", p);
  m.link_offset = get_double(j, "link_offset", p);
  m.report = read_report(field(j, "report", p), p + ".report");
  return m;
}

regress::CorrectionParams read_correction(const Json& j, const std::string& p) {
  regress::CorrectionParams c;
  c.eta = get_double(j, "eta", p);
  c.gamma = get_double(j, "gamma", p);
  c.k = get_double(j, "k", p);
  c.beta_0 = get_double(j, "beta_0", p);
  c.lambda_beta = get_double(j, "lambda_beta", p);
  const auto& g = field(j, "g", p);
  c.g.knots = get_list(g, "knots", p + ".g");
  c.g.values = get_list(g, "values", p + ".g");
  return c;
}

smooth::SmootherConfig read_smoother(const Json& j, const std::string& p) {
  smooth::SmootherConfig s;
  const auto& kind = as_string(field(j, "kind", p), p + ".kind");
  const auto k = smooth::parse_kind(kind);
  if (!k) schema(p + ".kind", "unknown smoother '" + kind + "'");
  s.kind = *k;
  s.window = get_size(j, "window", p);
  s.alpha = get_double(j, "alpha", p);
  s.cutoff_hz = get_double(j, "cutoff_hz", p);
  s.frame_interval_ms = get_double(j, "frame_interval_ms", p);
  s.process_noise = get_double(j, "process_noise", p);
  s.measurement_noise = get_double(j, "measurement_noise", p);
  return s;
}

geometry::AffineBasis read_basis(const Json& j, const std::string& p) {
  geometry::AffineBasis b;
  b.anchor_nose = get_size(j, "anchor_nose", p);
  b.anchor_eye_left = get_size(j, "anchor_eye_left", p);
  b.anchor_eye_right = get_size(j, "anchor_eye_right", p);
  b.target_interocular = get_double(j, "target_interocular", p);
  return b;
}

pipeline::ChannelModel read_channel(const Json& j, std::size_t index) {
  const auto name = blendshape_at(index);
  const std::string p = "channels[" + std::to_string(index) + "]";
  const auto& stored = as_string(field(j, "name", p), p + ".name");
  if (stored != name_of(name)) {
    schema(p + ".name", "expected " + std::string(name_of(name)) + ", found " + stored);
  }
  pipeline::ChannelModel ch;
  ch.enabled = as_bool(field(j, "enabled", p), p + ".enabled");
  if (const auto& s = field(j, "selector", p); !s.is_null()) ch.selector = read_selector(s, name, p + ".selector");
  if (const auto& c = field(j, "chain", p); !c.is_null()) ch.chain = read_chain(c, p + ".chain");
  if (const auto& r = field(j, "regressor", p); !r.is_null()) ch.regressor = read_regressor(r, p + ".regressor");
  ch.correction = read_correction(field(j, "correction", p), p + ".correction");
  ch.smoother = read_smoother(field(j, "smoother", p), p + ".smoother");
  ch.selection_agreement = get_opt_double(j, "selection_agreement", p);
  ch.note = as_string(field(j, "note", p), p + ".note");
  return ch;
}

pipeline::PipelineModel read_model(const Json& j) {
  const auto& format = field(j, "format", "$");
  if (!format.is_string() || format.get_ref<const std::string&>() != kFormatName) {
    schema("$.format", "not a blendfit model");
  }
  const auto& version = field(j, "format_version", "$");
  if (!version.is_number_integer() || version.get<std::int64_t>() != pipeline::kFormatVersion) {
    throw Error(ErrorCode::VersionMismatch,
                "unsupported model format_version " + version.dump() + ", expected " +
                    std::to_string(pipeline::kFormatVersion));
  }
  pipeline::PipelineModel m;
  m.format_version = pipeline::kFormatVersion;
  m.point_count = get_size(j, "point_count", "$");
  m.basis = read_basis(field(j, "basis", "$"), "$.basis");
  const auto& channels = as_array(field(j, "channels", "$"), "$.channels");
  if (channels.size() != kBlendshapeCount) {
    schema("$.channels", "expected 52 entries, found " + std::to_string(channels.size()));
  }
  for (std::size_t c = 0; c < kBlendshapeCount; ++c) m.channels[c] = read_channel(channels[c], c);
  return m;
}

Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("not valid JSON: ") + e.what());
  }
}

}  // namespace

std::string to_text(const pipeline::PipelineModel& model) {
  model.validate();
  return dump(model_json(model)) + "\n";
}

pipeline::PipelineModel from_text(const std::string& text) {
  auto model = read_model(parse(text));
  try {
    model.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::VersionMismatch || e.code() == ErrorCode::SchemaViolation) throw;
    throw Error(ErrorCode::SchemaViolation, std::string("model does not validate: ") + e.what());
  }
  return model;
}

void save_model(const pipeline::PipelineModel& model, std::ostream& out) {
  out << to_text(model);
  out.flush();
  if (!out) throw Error(ErrorCode::SinkFailure, "failed writing model");
}

pipeline::PipelineModel load_model(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "failed reading model");
  return from_text(text);
}

std::size_t serialized_size(const regress::RegressorModel& model) {
  return dump(regressor_params(model)).size();
}

std::array<std::size_t, kBlendshapeCount> channel_sizes(const pipeline::PipelineModel& model) {
  std::array<std::size_t, kBlendshapeCount> out{};
  for (std::size_t c = 0; c < kBlendshapeCount; ++c) out[c] = dump(channel_json(model.channels[c], c)).size();
  return out;
}

// ---- training configuration -------------------------------------------------

namespace {

pipeline::ChainStepSpec read_chain_spec(const Json& j, const std::string& p) {
  using Kind = pipeline::ChainStepSpec::Kind;
  pipeline::ChainStepSpec s;
  const Json* obj = nullptr;
  std::string kind;
  if (j.is_string()) {
    kind = j.get<std::string>();
  } else {
    obj = &j;
    kind = as_string(field(j, "kind", p), p + ".kind");
  }
  if (kind == "displacement") {
    s.kind = Kind::Displacement;
  } else if (kind == "pcd" || kind == "pcd_project") {
    s.kind = Kind::Pcd;
    if (obj && obj->contains("components")) s.components = get_size(*obj, "components", p);
  } else if (kind == "standardize") {
    s.kind = Kind::Standardize;
  } else if (kind == "log1p") {
    s.kind = Kind::Log1p;
  } else if (kind == "exp_scale") {
    s.kind = Kind::ExpScale;
    if (obj && obj->contains("rate")) s.rate = get_double(*obj, "rate", p);
  } else if (kind == "aspect_ratio") {
    s.kind = Kind::AspectRatio;
    if (!obj) schema(p, "aspect_ratio needs pairs");
    s.pairs = as_pairs(field(*obj, "pairs", p), p + ".pairs");
  } else {
    schema(p, "unknown chain step '" + kind + "'");
  }
  return s;
}

regress::CorrectionParams read_correction_config(const Json& j, const std::string& p) {
  const auto preset_of = [&](const std::string& name, const std::string& where) {
    auto c = regress::correction_preset(name);
    if (!c) schema(where, "unknown correction preset '" + name + "'");
    return *c;
  };
  if (j.is_string()) return preset_of(j.get<std::string>(), p);
  if (!j.is_object()) schema(p, "expected a preset name or an object");
  auto c = j.contains("preset") ? preset_of(as_string(j["preset"], p + ".preset"), p + ".preset")
                                : regress::neutral_correction();
  if (j.contains("eta")) c.eta = get_double(j, "eta", p);
  if (j.contains("gamma")) c.gamma = get_double(j, "gamma", p);
  if (j.contains("k")) c.k = get_double(j, "k", p);
  if (j.contains("beta_0")) c.beta_0 = get_double(j, "beta_0", p);
  if (j.contains("lambda_beta")) c.lambda_beta = get_double(j, "lambda_beta", p);
  if (j.contains("g")) {
    c.g.knots = get_list(j["g"], "knots", p + ".g");
    c.g.values = get_list(j["g"], "values", p + ".g");
  }
  return c;
}

smooth::SmootherConfig read_smoother_config(const Json& j, smooth::SmootherConfig s, const std::string& p) {
  const auto kind_of = [&](const std::string& name, const std::string& where) {
    const auto k = smooth::parse_kind(name);
    if (!k) schema(where, "unknown smoother '" + name + "'");
    return *k;
  };
  if (j.is_string()) {
    s.kind = kind_of(j.get<std::string>(), p);
    return s;
  }
  if (!j.is_object()) schema(p, "expected a smoother name or an object");
  if (j.contains("kind")) s.kind = kind_of(as_string(j["kind"], p + ".kind"), p + ".kind");
  if (j.contains("window")) s.window = get_size(j, "window", p);
  if (j.contains("alpha")) s.alpha = get_double(j, "alpha", p);
  if (j.contains("cutoff_hz")) s.cutoff_hz = get_double(j, "cutoff_hz", p);
  if (j.contains("frame_interval_ms")) s.frame_interval_ms = get_double(j, "frame_interval_ms", p);
  if (j.contains("process_noise")) s.process_noise = get_double(j, "process_noise", p);
  if (j.contains("measurement_noise")) s.measurement_noise = get_double(j, "measurement_noise", p);
  return s;
}

void apply_channel_config(const Json& j, pipeline::ChannelTrainConfig& c, const std::string& p) {
  if (!j.is_object()) schema(p, "expected an object");
  for (const auto& [key, _] : j.items()) {
    static const char* known[] = {"enabled", "percentile", "family", "degree", "components",
                                  "chain", "correction", "smoother"};
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      schema(p + "." + key, "unknown setting");
    }
  }
  if (j.contains("enabled")) c.enabled = as_bool(j["enabled"], p + ".enabled");
  if (j.contains("percentile")) c.percentile = get_double(j, "percentile", p);
  if (j.contains("family")) {
    const auto& name = as_string(j["family"], p + ".family");
    const auto f = regress::parse_family(name);
    if (!f) schema(p + ".family", "unknown family '" + name + "'");
    c.family.family = *f;
  }
  if (j.contains("degree")) c.family.degree = get_size(j, "degree", p);
  if (j.contains("components")) c.family.components = get_size(j, "components", p);
  if (j.contains("chain")) {
    const auto& arr = as_array(j["chain"], p + ".chain");
    c.chain.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      c.chain.push_back(read_chain_spec(arr[i], p + ".chain[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("correction")) c.correction = read_correction_config(j["correction"], p + ".correction");
  if (j.contains("smoother")) c.smoother = read_smoother_config(j["smoother"], c.smoother, p + ".smoother");
}

}  // namespace

pipeline::TrainConfig parse_train_config(const std::string& text) {
  const Json j = parse(text);
  if (!j.is_object()) schema("$", "expected an object");
  auto config = pipeline::TrainConfig::defaults();
  if (j.contains("basis")) {
    const auto& b = j["basis"];
    auto& basis = config.basis;
    if (b.contains("anchor_nose")) basis.anchor_nose = get_size(b, "anchor_nose", "$.basis");
    if (b.contains("anchor_eye_left")) basis.anchor_eye_left = get_size(b, "anchor_eye_left", "$.basis");
    if (b.contains("anchor_eye_right")) basis.anchor_eye_right = get_size(b, "anchor_eye_right", "$.basis");
    if (b.contains("target_interocular")) {
      basis.target_interocular = get_double(b, "target_interocular", "$.basis");
    }
  }
  if (j.contains("min_samples")) config.min_samples = get_size(j, "min_samples", "$");
  if (j.contains("residual_transform")) {
    const auto& r = j["residual_transform"];
    const std::string p = "$.residual_transform";
    auto& t = config.fit_options.residual_transform;
    const auto& kind = as_string(field(r, "kind", p), p + ".kind");
    if (kind == "identity") {
      t.kind = transforms::ResidualTransform::Kind::Identity;
    } else if (kind == "log") {
      t.kind = transforms::ResidualTransform::Kind::Log;
    } else if (kind == "box_cox") {
      t.kind = transforms::ResidualTransform::Kind::BoxCox;
    } else {
      schema(p + ".kind", "unknown residual transform '" + kind + "'");
    }
    if (r.contains("lambda")) t.lambda = get_double(r, "lambda", p);
    if (r.contains("offset")) t.offset = get_double(r, "offset", p);
  }
  if (j.contains("defaults")) {
    for (std::size_t c = 0; c < kBlendshapeCount; ++c) {
      const bool was_enabled = config.channels[c].enabled;
      apply_channel_config(j["defaults"], config.channels[c], "$.defaults");
      // Defaults can switch channels off but never on; TongueOut stays off
      // unless named explicitly.
      if (!was_enabled) config.channels[c].enabled = false;
    }
  }
  if (j.contains("enabled")) {
    const auto& arr = as_array(j["enabled"], "$.enabled");
    for (auto& c : config.channels) c.enabled = false;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "$.enabled[" + std::to_string(i) + "]";
      const auto& name = as_string(arr[i], p);
      const auto bs = parse_blendshape(name);
      if (!bs) schema(p, "unknown blendshape '" + name + "'");
      config[*bs].enabled = true;
    }
  }
  if (j.contains("channels")) {
    const auto& ch = j["channels"];
    if (!ch.is_object()) schema("$.channels", "expected an object keyed by blendshape name");
    for (const auto& [name, value] : ch.items()) {
      const auto bs = parse_blendshape(name);
      if (!bs) schema("$.channels." + name, "unknown blendshape");
      apply_channel_config(value, config[*bs], "$.channels." + name);
    }
  }
  return config;
}

pipeline::TrainConfig load_train_config(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "failed reading training config");
  return parse_train_config(text);
}

}  // namespace blendfit::model_io
