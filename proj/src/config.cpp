#include "pfimex/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace pfimex {

namespace {

using json = nlohmann::json;

std::string join_lines(const std::vector<std::string>& errors) {
  std::string out = "invalid config:";
  for (const auto& e : errors) out += "\n  " + e;
  return out;
}

class Parser {
 public:
  std::vector<std::string> errors;

  void error(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  bool check_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      error(path, "expected an object");
      return false;
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items()) {
      if (!ok.count(key)) error(path + "." + key, "unknown key");
    }
    return true;
  }

  double number(const json& j, const std::string& path, double lo = -INFINITY, double hi = INFINITY) {
    if (!j.is_number()) {
      error(path, "expected a number");
      return 0.0;
    }
    const double v = j.get<double>();
    if (!std::isfinite(v) || v < lo || v > hi) {
      std::ostringstream os;
      os << "value " << v << " out of range [" << lo << ", " << hi << "]";
      error(path, os.str());
    }
    return v;
  }

  double positive(const json& j, const std::string& path) {
    const double v = number(j, path);
    if (j.is_number() && !(v > 0.0)) error(path, "must be positive");
    return v;
  }

  long integer(const json& j, const std::string& path, long lo, long hi) {
    if (!j.is_number_integer()) {
      error(path, "expected an integer");
      return lo;
    }
    const long v = j.get<long>();
    if (v < lo || v > hi) error(path, "value " + std::to_string(v) + " out of range");
    return v;
  }

  std::uint64_t seed(const json& j, const std::string& path) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
      error(path, "expected a nonnegative integer");
      return 0;
    }
    return j.get<std::uint64_t>();
  }

  bool boolean(const json& j, const std::string& path) {
    if (!j.is_boolean()) {
      error(path, "expected true or false");
      return false;
    }
    return j.get<bool>();
  }

  std::string string(const json& j, const std::string& path) {
    if (!j.is_string()) {
      error(path, "expected a string");
      return {};
    }
    return j.get<std::string>();
  }

  // Plain array, or {"logspace": {from, to, count}} / {"linspace": {...}}.
  std::vector<double> number_list(const json& j, const std::string& path) {
    std::vector<double> out;
    if (j.is_array()) {
      for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
      if (out.empty()) error(path, "list is empty");
      return out;
    }
    if (j.is_object() && j.size() == 1 && (j.contains("logspace") || j.contains("linspace"))) {
      const bool log = j.contains("logspace");
      const std::string p = path + (log ? ".logspace" : ".linspace");
      const json& r = log ? j["logspace"] : j["linspace"];
      if (!check_object(r, p, {"from", "to", "count"})) return out;
      if (!r.contains("from") || !r.contains("to") || !r.contains("count")) {
        error(p, "requires from, to and count");
        return out;
      }
      const double a = log ? positive(r["from"], p + ".from") : number(r["from"], p + ".from");
      const double b = log ? positive(r["to"], p + ".to") : number(r["to"], p + ".to");
      const long n = integer(r["count"], p + ".count", 1, 100000);
      if (!errors.empty() && (a <= 0 || b <= 0) && log) return out;
      for (long i = 0; i < n; ++i) {
        const double s = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        out.push_back(log ? std::exp(std::log(a) + s * (std::log(b) - std::log(a))) : a + s * (b - a));
      }
      return out;
    }
    error(path, "expected a list of numbers or a logspace/linspace object");
    return out;
  }

  SchemeConfig scheme(const json& j, const std::string& path) {
    if (j.is_string()) {
      const std::string s = j.get<std::string>();
      if (s == "imex1") return SchemeConfig::imex1();
      if (s == "imex2") return SchemeConfig::imex2();
      error(path, "unknown scheme '" + s + "' (expected imex1, imex2, {be: {j}} or {cn: {j}})");
      return {};
    }
    if (!j.is_object() || j.size() != 1 || !(j.contains("be") || j.contains("cn"))) {
      error(path, "expected imex1, imex2, {be: {j}} or {cn: {j}}");
      return {};
    }
    const bool be = j.contains("be");
    const std::string p = path + (be ? ".be" : ".cn");
    const json& b = be ? j["be"] : j["cn"];
    SchemeConfig s = be ? SchemeConfig::be(1) : SchemeConfig::cn(1);
    if (!check_object(b, p, {"j", "initial_iterate"})) return s;
    if (b.contains("j")) {
      s.iterations = static_cast<int>(integer(b["j"], p + ".j", 1, 1000));
    } else {
      error(p + ".j", "missing required key");
    }
    if (b.contains("initial_iterate")) {
      const std::string v = string(b["initial_iterate"], p + ".initial_iterate");
      if (v == "previous") {
        s.initial_iterate = InitialIterate::Previous;
      } else if (v == "extrapolated") {
        s.initial_iterate = InitialIterate::Extrapolated;
      } else {
        error(p + ".initial_iterate", "expected previous or extrapolated");
      }
    }
    return s;
  }

  SplitConfig split(const json& j, const std::string& path) {
    SplitConfig s;
    if (!check_object(j, path, {"m0", "m1", "m2", "explicit_baseline"})) return s;
    if (j.contains("m0")) s.m0 = number(j["m0"], path + ".m0", 0.0);
    if (j.contains("m1")) s.m1 = number(j["m1"], path + ".m1", 0.0);
    if (j.contains("explicit_baseline")) s.explicit_baseline = boolean(j["explicit_baseline"], path + ".explicit_baseline");
    if (!j.contains("m2")) {
      error(path + ".m2", "missing required key");
      return s;
    }
    const json& m = j["m2"];
    const std::string p = path + ".m2";
    if (!check_object(m, p, {"static", "dynamic_alpha"})) return s;
    if (m.contains("static") && m.contains("dynamic_alpha")) {
      error(p, "conflict: give either static or dynamic_alpha, not both");
    } else if (m.contains("static")) {
      s.m2_rule = StaticM2{number(m["static"], p + ".static", 0.0)};
    } else if (m.contains("dynamic_alpha")) {
      s.m2_rule = DynamicM2{positive(m["dynamic_alpha"], p + ".dynamic_alpha")};
    } else {
      error(p, "requires static or dynamic_alpha");
    }
    if (const auto* st = std::get_if<StaticM2>(&s.m2_rule); st && st->value <= 0.0 && !s.explicit_baseline &&
                                                                 m.contains("static")) {
      error(p + ".static", "must be positive unless explicit_baseline is set");
    }
    return s;
  }

  InitialCondition initial(const json& j, const std::string& path, std::uint64_t default_seed) {
    if (!j.is_object() || j.size() != 1) {
      error(path, "expected exactly one of cosine, random, snapshot, manufactured");
      return CosineIC{};
    }
    const auto& [kind, body] = *j.items().begin();
    const std::string p = path + "." + kind;
    if (kind == "cosine") {
      CosineIC c;
      if (!check_object(body, p, {"mean", "amp", "wavenumber"})) return c;
      if (body.contains("mean")) c.mean = number(body["mean"], p + ".mean");
      if (body.contains("amp")) c.amp = number(body["amp"], p + ".amp");
      if (body.contains("wavenumber")) c.wavenumber = number(body["wavenumber"], p + ".wavenumber");
      return c;
    }
    if (kind == "random") {
      RandomIC r;
      r.seed = default_seed;
      if (!check_object(body, p, {"mean", "eta", "seed"})) return r;
      if (body.contains("mean")) r.mean = number(body["mean"], p + ".mean");
      if (body.contains("eta")) r.eta = number(body["eta"], p + ".eta", 0.0);
      if (body.contains("seed")) r.seed = seed(body["seed"], p + ".seed");
      return r;
    }
    if (kind == "snapshot") {
      SnapshotIC s;
      if (!check_object(body, p, {"path"})) return s;
      if (body.contains("path")) {
        s.path = string(body["path"], p + ".path");
      } else {
        error(p + ".path", "missing required key");
      }
      return s;
    }
    if (kind == "manufactured") {
      ManufacturedIC m;
      if (!check_object(body, p, {"t0"})) return m;
      if (body.contains("t0")) m.t0 = number(body["t0"], p + ".t0");
      return m;
    }
    error(p, "unknown initial condition kind");
    return CosineIC{};
  }

  ExperimentSpec spec(const json& j) {
    ExperimentSpec s;
    if (!check_object(j, "$", {"experiment", "model", "grid", "initial", "prepare", "scheme", "schemes", "split",
                               "t0", "t_end", "h", "h_list", "reference", "fit", "m2_list", "alpha_list",
                               "instability_factor", "map", "snapshot_times", "sample_every", "energy_tol", "seed",
                               "threads", "out_dir"})) {
      return s;
    }

    if (!j.contains("experiment")) {
      error("$.experiment", "missing required key");
    } else {
      const std::string e = string(j["experiment"], "$.experiment");
      if (e == "converge") {
        s.kind = ExperimentKind::Converge;
      } else if (e == "m2sweep") {
        s.kind = ExperimentKind::M2Sweep;
      } else if (e == "stabmap") {
        s.kind = ExperimentKind::StabilityMap;
      } else if (e == "simulate") {
        s.kind = ExperimentKind::Simulate;
      } else {
        error("$.experiment", "unknown experiment '" + e + "'");
      }
    }

    if (j.contains("seed")) s.seed = seed(j["seed"], "$.seed");
    if (j.contains("threads")) s.threads = static_cast<int>(integer(j["threads"], "$.threads", 0, 4096));
    if (j.contains("out_dir")) s.out_dir = string(j["out_dir"], "$.out_dir");

    if (!j.contains("model")) {
      error("$.model", "missing required key");
    } else if (check_object(j["model"], "$.model", {"preset", "eps", "omega"})) {
      const json& m = j["model"];
      if (m.contains("preset")) {
        s.model.preset = string(m["preset"], "$.model.preset");
        static const std::set<std::string> known{"classic_ch", "thin_film", "chvm", "forced_thin_film"};
        if (m["preset"].is_string() && !known.count(s.model.preset)) {
          error("$.model.preset", "unknown preset '" + s.model.preset + "'");
        }
      } else {
        error("$.model.preset", "missing required key");
      }
      if (m.contains("eps")) s.model.eps = number(m["eps"], "$.model.eps", 0.0);
      if (m.contains("omega")) s.model.omega = number(m["omega"], "$.model.omega", 0.0, 1.0);
    }

    if (!j.contains("grid")) {
      error("$.grid", "missing required key");
    } else if (check_object(j["grid"], "$.grid", {"n", "length", "length_pi", "dealias"})) {
      const json& g = j["grid"];
      if (!g.contains("n") || !g["n"].is_array() || g["n"].empty() || g["n"].size() > 3) {
        error("$.grid.n", "expected a list of 1 to 3 mode counts");
      } else {
        s.grid.n.clear();
        for (std::size_t i = 0; i < g["n"].size(); ++i) {
          const long v = integer(g["n"][i], "$.grid.n[" + std::to_string(i) + "]", 2, 1 << 16);
          if (v > 0 && (v & (v - 1)) != 0) error("$.grid.n[" + std::to_string(i) + "]", "must be a power of two");
          s.grid.n.push_back(static_cast<std::size_t>(v));
        }
      }
      if (g.contains("length") == g.contains("length_pi")) {
        error("$.grid", "give exactly one of length and length_pi");
      } else {
        const bool pi = g.contains("length_pi");
        const std::string p = pi ? "$.grid.length_pi" : "$.grid.length";
        const json& l = pi ? g["length_pi"] : g["length"];
        if (!l.is_array() || l.size() != s.grid.n.size()) {
          error(p, "expected one length per axis");
        } else {
          s.grid.length.clear();
          for (std::size_t i = 0; i < l.size(); ++i) {
            const double v = positive(l[i], p + "[" + std::to_string(i) + "]");
            s.grid.length.push_back(pi ? v * std::numbers::pi : v);
          }
        }
      }
      if (g.contains("dealias")) s.grid.dealias = boolean(g["dealias"], "$.grid.dealias");
    }

    if (!j.contains("initial")) {
      error("$.initial", "missing required key");
    } else {
      s.initial = initial(j["initial"], "$.initial", s.seed);
    }

    if (j.contains("prepare") && check_object(j["prepare"], "$.prepare", {"t_end", "h", "cache"})) {
      const json& p = j["prepare"];
      Preparation prep;
      if (p.contains("t_end")) prep.t_end = positive(p["t_end"], "$.prepare.t_end");
      if (p.contains("h")) prep.h = positive(p["h"], "$.prepare.h");
      if (p.contains("cache")) prep.cache = string(p["cache"], "$.prepare.cache");
      s.prepare = prep;
    }

    if (j.contains("scheme") && j.contains("schemes")) {
      error("$", "give either scheme or schemes, not both");
    } else if (j.contains("scheme")) {
      s.schemes = {scheme(j["scheme"], "$.scheme")};
    } else if (j.contains("schemes")) {
      if (!j["schemes"].is_array() || j["schemes"].empty()) {
        error("$.schemes", "expected a nonempty list");
      } else {
        s.schemes.clear();
        for (std::size_t i = 0; i < j["schemes"].size(); ++i) {
          s.schemes.push_back(scheme(j["schemes"][i], "$.schemes[" + std::to_string(i) + "]"));
        }
      }
    } else {
      error("$.scheme", "missing required key");
    }

    if (!j.contains("split")) {
      error("$.split", "missing required key");
    } else {
      s.split = split(j["split"], "$.split");
    }

    if (j.contains("t0")) s.t0 = number(j["t0"], "$.t0");
    if (j.contains("t_end")) s.t_end = number(j["t_end"], "$.t_end");
    if (j.contains("h")) s.h = positive(j["h"], "$.h");
    if (j.contains("h_list")) {
      s.h_list = number_list(j["h_list"], "$.h_list");
      for (std::size_t i = 0; i < s.h_list.size(); ++i) {
        if (!(s.h_list[i] > 0.0)) error("$.h_list[" + std::to_string(i) + "]", "must be positive");
      }
    }
    if (j.contains("reference") && check_object(j["reference"], "$.reference", {"kind", "h_fine", "scheme"})) {
      const json& r = j["reference"];
      if (!r.contains("kind")) {
        error("$.reference.kind", "missing required key");
      } else {
        const std::string k = string(r["kind"], "$.reference.kind");
        if (k == "manufactured") {
          s.reference.kind = ReferenceKind::Manufactured;
        } else if (k == "richardson") {
          s.reference.kind = ReferenceKind::Richardson;
        } else {
          error("$.reference.kind", "expected manufactured or richardson");
        }
      }
      if (r.contains("h_fine")) s.reference.h_fine = positive(r["h_fine"], "$.reference.h_fine");
      if (r.contains("scheme")) s.reference.scheme = scheme(r["scheme"], "$.reference.scheme");
    }
    if (j.contains("fit") && check_object(j["fit"], "$.fit", {"h_min", "h_max"})) {
      if (j["fit"].contains("h_min")) s.fit_h_min = number(j["fit"]["h_min"], "$.fit.h_min", 0.0);
      if (j["fit"].contains("h_max")) s.fit_h_max = positive(j["fit"]["h_max"], "$.fit.h_max");
    }
    if (j.contains("m2_list") && j.contains("alpha_list")) error("$", "give either m2_list or alpha_list, not both");
    if (j.contains("m2_list")) s.m2_list = number_list(j["m2_list"], "$.m2_list");
    if (j.contains("alpha_list")) s.alpha_list = number_list(j["alpha_list"], "$.alpha_list");
    if (j.contains("instability_factor")) {
      s.instability_factor = number(j["instability_factor"], "$.instability_factor", 1.0);
    }
    if (j.contains("map") && check_object(j["map"], "$.map", {"axis", "params", "steps"})) {
      const json& m = j["map"];
      if (m.contains("axis")) {
        const std::string a = string(m["axis"], "$.map.axis");
        if (a == "m1") {
          s.map_axis = MapAxis::M1;
        } else if (a == "alpha") {
          s.map_axis = MapAxis::Alpha;
        } else {
          error("$.map.axis", "expected m1 or alpha");
        }
      }
      if (m.contains("params")) {
        s.param_list = number_list(m["params"], "$.map.params");
      } else {
        error("$.map.params", "missing required key");
      }
      if (m.contains("steps")) s.steps = integer(m["steps"], "$.map.steps", 1, 100'000'000);
    }
    if (j.contains("snapshot_times")) s.snapshot_times = number_list(j["snapshot_times"], "$.snapshot_times");
    if (j.contains("sample_every")) s.sample_every = integer(j["sample_every"], "$.sample_every", 1, 1'000'000'000);
    if (j.contains("energy_tol")) s.energy_tol = number(j["energy_tol"], "$.energy_tol", 0.0);

    if (s.t_end < s.t0) error("$.t_end", "must not precede t0");
    switch (s.kind) {
      case ExperimentKind::Converge:
        if (s.h_list.empty()) error("$.h_list", "required for converge");
        break;
      case ExperimentKind::M2Sweep:
        if (s.m2_list.empty() && s.alpha_list.empty()) error("$.m2_list", "m2sweep requires m2_list or alpha_list");
        break;
      case ExperimentKind::StabilityMap:
        if (s.h_list.empty()) error("$.h_list", "required for stabmap");
        if (!j.contains("map")) error("$.map", "required for stabmap");
        break;
      case ExperimentKind::Simulate:
        break;
    }
    if (s.reference.kind == ReferenceKind::Manufactured && s.model.preset != "forced_thin_film" &&
        (s.kind == ExperimentKind::Converge || s.kind == ExperimentKind::M2Sweep)) {
      error("$.reference.kind", "manufactured reference requires model.preset forced_thin_film");
    }
    return s;
  }
};

nlohmann::ordered_json ic_to_json(const InitialCondition& ic) {
  nlohmann::ordered_json j;
  if (const auto* c = std::get_if<CosineIC>(&ic)) {
    j["cosine"] = {{"mean", c->mean}, {"amp", c->amp}, {"wavenumber", c->wavenumber}};
  } else if (const auto* r = std::get_if<RandomIC>(&ic)) {
    j["random"] = {{"mean", r->mean}, {"eta", r->eta}, {"seed", r->seed}};
  } else if (const auto* s = std::get_if<SnapshotIC>(&ic)) {
    j["snapshot"] = {{"path", s->path}};
  } else {
    j["manufactured"] = {{"t0", std::get<ManufacturedIC>(ic).t0}};
  }
  return j;
}

}  // namespace

ConfigParseError::ConfigParseError(std::vector<std::string> errors)
    : ConfigError(join_lines(errors)), errors_(std::move(errors)) {}

ExperimentSpec parse_config(const nlohmann::json& j) {
  Parser p;
  ExperimentSpec s = p.spec(j);
  if (!p.errors.empty()) throw ConfigParseError(std::move(p.errors));
  return s;
}

ExperimentSpec parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigParseError({std::string("$: not valid JSON: ") + e.what()});
  }
  return parse_config(j);
}

ExperimentSpec parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError({"cannot read config file '" + path + "'"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

nlohmann::ordered_json scheme_to_json(const SchemeConfig& s) {
  switch (s.kind) {
    case SchemeKind::Imex1: return "imex1";
    case SchemeKind::Imex2: return "imex2";
    default: break;
  }
  nlohmann::ordered_json body;
  body["j"] = s.iterations;
  body["initial_iterate"] = s.initial_iterate == InitialIterate::Previous ? "previous" : "extrapolated";
  nlohmann::ordered_json j;
  j[s.kind == SchemeKind::BackwardEuler ? "be" : "cn"] = body;
  return j;
}

nlohmann::ordered_json config_to_json(const ExperimentSpec& s) {
  nlohmann::ordered_json j;
  j["experiment"] = to_string(s.kind);
  j["model"] = {{"preset", s.model.preset}, {"eps", s.model.eps}, {"omega", s.model.omega}};
  j["grid"] = {{"n", s.grid.n}, {"length", s.grid.length}, {"dealias", s.grid.dealias}};
  j["initial"] = ic_to_json(s.initial);
  if (s.prepare) j["prepare"] = {{"t_end", s.prepare->t_end}, {"h", s.prepare->h}, {"cache", s.prepare->cache}};
  nlohmann::ordered_json schemes = nlohmann::ordered_json::array();
  for (const auto& sc : s.schemes) schemes.push_back(scheme_to_json(sc));
  j["schemes"] = schemes;

  nlohmann::ordered_json split;
  split["m0"] = s.split.m0;
  split["m1"] = s.split.m1;
  if (const auto* st = std::get_if<StaticM2>(&s.split.m2_rule)) {
    split["m2"] = {{"static", st->value}};
  } else {
    split["m2"] = {{"dynamic_alpha", std::get<DynamicM2>(s.split.m2_rule).alpha}};
  }
  split["explicit_baseline"] = s.split.explicit_baseline;
  j["split"] = split;

  j["t0"] = s.t0;
  j["t_end"] = s.t_end;
  j["h"] = s.h;
  if (!s.h_list.empty()) j["h_list"] = s.h_list;
  nlohmann::ordered_json ref;
  ref["kind"] = s.reference.kind == ReferenceKind::Manufactured ? "manufactured" : "richardson";
  ref["h_fine"] = s.reference.h_fine;
  if (s.reference.scheme) ref["scheme"] = scheme_to_json(*s.reference.scheme);
  j["reference"] = ref;
  if (s.fit_h_min || s.fit_h_max) {
    nlohmann::ordered_json fit = nlohmann::ordered_json::object();
    if (s.fit_h_min) fit["h_min"] = *s.fit_h_min;
    if (s.fit_h_max) fit["h_max"] = *s.fit_h_max;
    j["fit"] = fit;
  }
  if (!s.m2_list.empty()) j["m2_list"] = s.m2_list;
  if (!s.alpha_list.empty()) j["alpha_list"] = s.alpha_list;
  j["instability_factor"] = s.instability_factor;
  if (!s.param_list.empty()) {
    j["map"] = {{"axis", s.map_axis == MapAxis::M1 ? "m1" : "alpha"}, {"params", s.param_list}, {"steps", s.steps}};
  }
  if (!s.snapshot_times.empty()) j["snapshot_times"] = s.snapshot_times;
  j["sample_every"] = s.sample_every;
  j["energy_tol"] = s.energy_tol;
  j["seed"] = s.seed;
  j["threads"] = s.threads;
  j["out_dir"] = s.out_dir;
  return j;
}

}  // namespace pfimex
