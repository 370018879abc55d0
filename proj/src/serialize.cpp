#include "gmrs/serialize.hpp"

#include <set>
#include <sstream>

namespace gmrs {

namespace {

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorCode::validation, what);
}

void reject_unknown(const Json& j, std::initializer_list<const char*> keys,
                    const std::string& where) {
  if (!j.is_object()) bad(where + " must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) bad("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    bad(std::string("bad value for '") + key + "'");
  }
}

Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::optional<double> read_optional_number(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_number()) bad(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

Json to_json_mat(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vec(m.row(i).transpose())));
  return rows;
}

Mat mat_from_json(const Json& j) {
  if (!j.is_array()) bad("matrix must be an array of rows");
  if (j.empty()) return Mat(0, 0);
  const Vec first = vec_from_json(j.front());
  Mat m(static_cast<Eigen::Index>(j.size()), first.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vec row = vec_from_json(j[i]);
    if (row.size() != first.size()) bad("matrix rows differ in length");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

}  // namespace

Json to_json(const Vec& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vec vec_from_json(const Json& j) {
  if (!j.is_array()) bad("vector must be an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) bad("vector must be an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

// ---------------------------------------------------------------------------

Json to_json(const Dataset& data) {
  Json j;
  j["samples"] = Json::array();
  for (const auto& x : data.samples()) j["samples"].push_back(to_json(x));
  if (data.mode() == Mode::blackbox) {
    j["measures"] = data.measures();
  } else {
    j["preferences"] = data.preferences();
    j["mapping"] = Json::array();
    for (const auto& p : data.mapping()) j["mapping"].push_back({p.left, p.right});
  }
  return j;
}

Dataset dataset_from_json(const Json& j, Mode mode, const Vec& unit_scale) {
  reject_unknown(j, {"samples", "measures", "preferences", "mapping"}, "dataset");
  Dataset data(mode, unit_scale);
  if (!j.contains("samples") || !j["samples"].is_array()) bad("dataset needs samples");
  const Json& samples = j["samples"];
  try {
    if (mode == Mode::blackbox) {
      if (j.contains("preferences") || j.contains("mapping")) {
        bad("black-box datasets carry measures only");
      }
      const auto y = j.value("measures", std::vector<double>{});
      if (y.size() != samples.size()) bad("one measure per sample is required");
      for (std::size_t i = 0; i < y.size(); ++i) data.add_measured(vec_from_json(samples[i]), y[i]);
    } else {
      if (j.contains("measures")) bad("preference datasets carry no measures");
      for (const auto& x : samples) data.add_sample(vec_from_json(x));
      const auto b = j.value("preferences", std::vector<int>{});
      const auto m = j.value("mapping", std::vector<std::array<std::size_t, 2>>{});
      if (b.size() != m.size()) bad("one index pair per preference is required");
      for (std::size_t h = 0; h < b.size(); ++h) data.add_preference(m[h][0], m[h][1], b[h]);
    }
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("malformed dataset: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::validation) throw;
    bad(std::string("invalid dataset: ") + e.what());
  }
  return data;
}

// ---------------------------------------------------------------------------

Json to_json(const ConstraintSet& cs) {
  if (cs.has_nonlinear_constraints()) {
    throw Error(ErrorCode::invalid_argument,
                "nonlinear constraints cannot be serialized");
  }
  Json j{{"lower", to_json(cs.lower())}, {"upper", to_json(cs.upper())}};
  if (const auto& c = cs.linear_ineq()) {
    j["linear_ineq"] = {{"A", to_json_mat(c->first)}, {"b", to_json(c->second)}};
  }
  if (const auto& c = cs.linear_eq()) {
    j["linear_eq"] = {{"A", to_json_mat(c->first)}, {"b", to_json(c->second)}};
  }
  return j;
}

ConstraintSet constraint_set_from_json(const Json& j) {
  reject_unknown(j, {"lower", "upper", "linear_ineq", "linear_eq"}, "bounds");
  if (!j.contains("lower") || !j.contains("upper")) bad("bounds need lower and upper");
  try {
    ConstraintSet cs(vec_from_json(j["lower"]), vec_from_json(j["upper"]));
    if (j.contains("linear_ineq")) {
      cs.with_linear_ineq(mat_from_json(j["linear_ineq"].at("A")),
                          vec_from_json(j["linear_ineq"].at("b")));
    }
    if (j.contains("linear_eq")) {
      cs.with_linear_eq(mat_from_json(j["linear_eq"].at("A")),
                        vec_from_json(j["linear_eq"].at("b")));
    }
    return cs;
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("malformed constraints: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::validation) throw;
    bad(e.what());
  }
}

// ---------------------------------------------------------------------------

Json to_json(const GmrsConfig& cfg) {
  Json j;
  j["mode"] = to_string(cfg.mode);
  j["surrogate"] = to_string(cfg.surrogate);
  j["explore"] = {{"variant", to_string(cfg.explore)}};
  j["n_init"] = cfg.n_init;
  j["n_max"] = cfg.n_max;
  j["seed"] = cfg.seed;
  j["acquisition"] = to_string(cfg.acquisition);
  j["alpha"] = cfg.alpha;
  j["rbf"] = {{"family", to_string(cfg.rbf.family)},
              {"shape", cfg.rbf.shape},
              {"sigma", cfg.rbf.sigma},
              {"lambda", cfg.rbf.lambda},
              {"shape_grid", cfg.rbf.shape_grid}};
  j["gp"] = {{"signal_var", cfg.gp.signal_var},
             {"lengthscale", cfg.gp.lengthscale},
             {"noise", optional_number(cfg.gp.noise)},
             {"lengthscale_grid", cfg.gp.lengthscale_grid},
             {"recalibrate_every", cfg.recalibrate_every}};
  j["acq"] = {{"delta_cycle", cfg.delta_cycle},
              {"naug", cfg.naug},
              {"xaug_strategy", to_string(cfg.xaug_strategy)}};
  j["inner"] = {{"random_per_dim", cfg.inner.random_per_dim},
                {"starts", cfg.inner.starts},
                {"initial_step", cfg.inner.initial_step},
                {"contraction", cfg.inner.contraction},
                {"min_step", cfg.inner.min_step},
                {"max_evaluations", cfg.inner.max_evaluations}};
  return j;
}

GmrsConfig config_from_json(const Json& j) {
  reject_unknown(j,
                 {"mode", "surrogate", "explore", "n_init", "n_max", "seed",
                  "recalibrate_every", "acquisition", "alpha", "rbf", "gp", "acq",
                  "inner"},
                 "config");
  GmrsConfig cfg;
  auto parse_enum_in = [](const Json& obj, const char* key, auto parser, auto& out) {
    if (!obj.contains(key)) return;
    if (!obj[key].is_string()) bad(std::string("'") + key + "' must be a string");
    try {
      out = parser(obj[key].get<std::string>());
    } catch (const Error& e) {
      bad(e.what());
    }
  };
  auto parse_enum = [&](const char* key, auto parser, auto& out) {
    parse_enum_in(j, key, parser, out);
  };
  parse_enum("mode", parse_mode, cfg.mode);
  parse_enum("surrogate", parse_surrogate_kind, cfg.surrogate);
  if (j.contains("explore") && j["explore"].is_object()) {
    const Json& e = j["explore"];
    reject_unknown(e, {"variant"}, "explore");
    if (e.contains("variant")) {
      parse_enum_in(e, "variant", parse_explore_variant, cfg.explore);
    }
  } else {
    parse_enum("explore", parse_explore_variant, cfg.explore);
  }
  parse_enum("acquisition", parse_acquisition_kind, cfg.acquisition);
  read(j, "n_init", cfg.n_init);
  read(j, "n_max", cfg.n_max);
  read(j, "seed", cfg.seed);
  read(j, "recalibrate_every", cfg.recalibrate_every);
  read(j, "alpha", cfg.alpha);

  if (j.contains("rbf")) {
    const Json& r = j["rbf"];
    reject_unknown(r, {"family", "shape", "sigma", "lambda", "shape_grid"}, "rbf");
    if (r.contains("family")) {
      try {
        cfg.rbf.family = parse_radial_family(r["family"].get<std::string>());
      } catch (const std::exception& e) {
        bad(e.what());
      }
    }
    read(r, "shape", cfg.rbf.shape);
    read(r, "sigma", cfg.rbf.sigma);
    read(r, "lambda", cfg.rbf.lambda);
    read(r, "shape_grid", cfg.rbf.shape_grid);
  }
  if (j.contains("gp")) {
    const Json& g = j["gp"];
    reject_unknown(g,
                   {"signal_var", "lengthscale", "noise", "lengthscale_grid",
                    "recalibrate_every"},
                   "gp");
    read(g, "recalibrate_every", cfg.recalibrate_every);
    read(g, "signal_var", cfg.gp.signal_var);
    read(g, "lengthscale", cfg.gp.lengthscale);
    cfg.gp.noise = read_optional_number(g, "noise");
    read(g, "lengthscale_grid", cfg.gp.lengthscale_grid);
  }
  if (j.contains("acq")) {
    const Json& a = j["acq"];
    reject_unknown(a, {"delta_cycle", "naug", "xaug_strategy"}, "acq");
    read(a, "delta_cycle", cfg.delta_cycle);
    read(a, "naug", cfg.naug);
    if (a.contains("xaug_strategy")) {
      try {
        cfg.xaug_strategy = parse_augment_strategy(a["xaug_strategy"].get<std::string>());
      } catch (const std::exception& e) {
        bad(e.what());
      }
    }
  }
  if (j.contains("inner")) {
    const Json& s = j["inner"];
    reject_unknown(s,
                   {"random_per_dim", "starts", "initial_step", "contraction",
                    "min_step", "max_evaluations"},
                   "inner");
    read(s, "random_per_dim", cfg.inner.random_per_dim);
    read(s, "starts", cfg.inner.starts);
    read(s, "initial_step", cfg.inner.initial_step);
    read(s, "contraction", cfg.inner.contraction);
    read(s, "min_step", cfg.inner.min_step);
    read(s, "max_evaluations", cfg.inner.max_evaluations);
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------

Json to_json(const PendingQuery& q) {
  Json j{{"phase", to_string(q.phase)},
         {"candidate", to_json(q.candidate)},
         {"incumbent", q.incumbent},
         {"delta", optional_number(q.delta)},
         {"token", q.token}};
  j["index"] = q.index ? Json(*q.index) : Json(nullptr);
  return j;
}

PendingQuery pending_query_from_json(const Json& j) {
  PendingQuery q;
  q.phase = parse_phase(j.at("phase").get<std::string>());
  q.candidate = vec_from_json(j.at("candidate"));
  q.incumbent = j.at("incumbent").get<std::size_t>();
  if (j.contains("index") && !j["index"].is_null()) q.index = j["index"].get<std::size_t>();
  q.delta = read_optional_number(j, "delta");
  q.token = j.at("token").get<std::uint64_t>();
  return q;
}

Json to_json(const StepRecord& r) {
  return Json{{"phase", to_string(r.phase)},
              {"iter", r.iter},
              {"x", to_json(r.x)},
              {"incumbent", to_json(r.incumbent)},
              {"delta", optional_number(r.delta)},
              {"improved", r.improved},
              {"value", r.value},
              {"f_true", optional_number(r.f_true)},
              {"best_f_true", optional_number(r.best_f_true)}};
}

StepRecord step_record_from_json(const Json& j) {
  StepRecord r;
  r.phase = parse_phase(j.at("phase").get<std::string>());
  r.iter = j.at("iter").get<std::size_t>();
  r.x = vec_from_json(j.at("x"));
  r.incumbent = vec_from_json(j.at("incumbent"));
  r.delta = read_optional_number(j, "delta");
  r.improved = j.at("improved").get<bool>();
  r.value = j.at("value").get<double>();
  r.f_true = read_optional_number(j, "f_true");
  r.best_f_true = read_optional_number(j, "best_f_true");
  return r;
}

Json to_json(const SessionState& s) {
  std::ostringstream rng;
  rng << s.rng;
  Json j;
  j["dataset"] = to_json(s.dataset);
  j["best"] = s.best;
  j["y_best"] = optional_number(s.y_best);
  j["cycle"] = {{"values", s.cycle.values()}, {"index", s.cycle.index()}};
  j["last_improved"] = s.last_improved;
  j["iteration"] = s.iteration;
  j["phase"] = to_string(s.phase);
  j["init_cursor"] = s.init_cursor;
  j["hyper"] = {{"rbf_shape", s.hyper.rbf_shape},
                {"gp_lengthscale", s.hyper.gp_lengthscale}};
  j["rng"] = rng.str();
  j["next_token"] = s.next_token;
  j["pending"] = s.pending ? to_json(*s.pending) : Json(nullptr);
  j["history"] = Json::array();
  for (const auto& r : s.history) j["history"].push_back(to_json(r));
  return j;
}

SessionState session_state_from_json(const Json& j, Mode mode, const Vec& unit_scale) {
  try {
    SessionState s(dataset_from_json(j.at("dataset"), mode, unit_scale));
    s.best = j.at("best").get<std::size_t>();
    if (s.best >= s.dataset.size()) bad("best index out of range");
    s.y_best = read_optional_number(j, "y_best");
    s.cycle = DeltaCycle(j.at("cycle").at("values").get<std::vector<double>>(),
                         j.at("cycle").at("index").get<std::size_t>());
    s.last_improved = j.at("last_improved").get<bool>();
    s.iteration = j.at("iteration").get<std::size_t>();
    s.phase = parse_phase(j.at("phase").get<std::string>());
    s.init_cursor = j.at("init_cursor").get<std::size_t>();
    s.hyper.rbf_shape = j.at("hyper").at("rbf_shape").get<double>();
    s.hyper.gp_lengthscale = j.at("hyper").at("gp_lengthscale").get<double>();
    std::istringstream rng(j.at("rng").get<std::string>());
    rng >> s.rng;
    if (!rng) bad("malformed random generator state");
    s.next_token = j.at("next_token").get<std::uint64_t>();
    if (!j.at("pending").is_null()) s.pending = pending_query_from_json(j["pending"]);
    for (const auto& r : j.at("history")) s.history.push_back(step_record_from_json(r));
    return s;
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("malformed session state: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::validation) throw;
    bad(std::string("invalid session state: ") + e.what());
  }
}

}  // namespace gmrs
