// rwd: command-line driver for rewriting models and the systems they project to.
//
// Exit codes: 0 ok, 1 invalid input, 2 a verification failed, 3 a safety limit was hit.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "rwd/checks.hpp"
#include "rwd/rwd.hpp"

using namespace rwd;
using Json = nlohmann::ordered_json;

namespace {

enum Exit { ok = 0, invalid = 1, unverified = 2, limited = 3 };

struct Limits {
  std::size_t steps = 100'000;
  std::size_t nodes = 1'000'000;
};

Limits read_limits() {
  Limits out;
  const char* env = std::getenv("RWD_LIMITS");
  if (!env) return out;
  std::stringstream ss(env);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    std::size_t value = 0;
    try {
      if (eq == std::string::npos) throw std::invalid_argument("missing '='");
      std::size_t used = 0;
      value = std::stoull(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw Error(ErrorCode::parse_error, "RWD_LIMITS: cannot read '" + item + "', expected key=number");
    }
    auto key = item.substr(0, eq);
    if (key == "steps") out.steps = value;
    else if (key == "nodes") out.nodes = value;
    else throw Error(ErrorCode::parse_error, "RWD_LIMITS: unknown key '" + key + "' (known: steps, nodes)");
  }
  return out;
}

struct Options {
  std::string format;
  std::optional<std::size_t> steps;
  std::uint64_t seed = gen::default_seed;
  std::string carrier;
  std::string output;
  Limits limits;
};

void require_steps(std::size_t n, const Limits& lim) {
  if (n > lim.steps)
    throw Error(ErrorCode::limit_exceeded, std::to_string(n) + " steps requested, limit is " +
                                               std::to_string(lim.steps) + " (raise with RWD_LIMITS=steps=N)");
}

void require_nodes(std::size_t n, const Limits& lim, const char* what) {
  if (n > lim.nodes)
    throw Error(ErrorCode::limit_exceeded, std::string(what) + " has " + std::to_string(n) + " nodes, limit is " +
                                               std::to_string(lim.nodes) + " (raise with RWD_LIMITS=nodes=N)");
}

std::string printed(const Term& t, const Limits& lim) {
  require_nodes(static_cast<std::size_t>(std::min<std::uint64_t>(t.tree_size(), SIZE_MAX)), lim, "printed term");
  return print_term(t);
}

// ---------------------------------------------------------------------------
// Output

class Sink {
 public:
  Sink(std::string format, std::ostream& os) : format_(std::move(format)), os_(os) {}

  void record(const Json& r) {
    if (format_ == "csv") {
      if (!header_) {
        std::string h;
        for (const auto& [k, v] : r.items()) h += (h.empty() ? "" : ",") + k;
        os_ << h << '\n';
        header_ = true;
      }
      std::string line;
      bool first = true;
      for (const auto& [k, v] : r.items()) {
        if (!first) line += ',';
        first = false;
        line += csv_field(v);
      }
      os_ << line << '\n';
    } else if (format_ == "pretty") {
      for (const auto& [k, v] : r.items()) {
        if (v.is_string() && v.get<std::string>().find('\n') != std::string::npos) {
          os_ << k << ":\n" << v.get<std::string>();
        } else {
          os_ << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
        }
      }
      if (r.size() <= 4) os_ << '\n';
    } else {
      os_ << r.dump() << '\n';
    }
  }

 private:
  static std::string csv_field(const Json& v) {
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }

  std::string format_;
  std::ostream& os_;
  bool header_ = false;
};

Json value_json(const Rational& q, const Limits&) { return to_string(q); }
Json value_json(double x, const Limits&) { return x; }
Json value_json(const FloatVec& x, const Limits&) { return x.v; }
Json value_json(const Term& t, const Limits& lim) { return printed(t, lim); }

template <class C>
Json values_json(const std::vector<C>& xs, const Limits& lim) {
  Json out = Json::array();
  for (const auto& x : xs) out.push_back(value_json(x, lim));
  return out;
}

// Distance used when comparing two outputs; exact carriers report 0 or a positive gap.
double distance(const Rational& a, const Rational& b) { return to_double(abs(a - b)); }
double distance(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(a)); }
double distance(const FloatVec& a, const FloatVec& b) {
  if (a.v.size() != b.v.size()) return INFINITY;
  double d = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) d = std::max(d, distance(a.v[i], b.v[i]));
  return d;
}
double distance(const Term& a, const Term& b) { return a == b ? 0.0 : 1.0; }

template <class C>
constexpr double tolerance() {
  if constexpr (std::is_same_v<C, double> || std::is_same_v<C, FloatVec>) return 1e-9;
  return 0.0;
}

template <class C>
double max_distance(const std::vector<C>& a, const std::vector<C>& b) {
  if (a.size() != b.size()) return INFINITY;
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, distance(a[i], b[i]));
  return d;
}

// ---------------------------------------------------------------------------
// Inputs

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::parse_error, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ModelFile load(const std::string& path, const Options& opt) {
  auto r = parse_model(read_file(path));
  for (const auto& d : r.diagnostics) std::cerr << path << ":" << d.to_string() << '\n';
  if (!r.ok()) throw Error(ErrorCode::parse_error, path + " is not a valid model file");
  if (!opt.carrier.empty()) {
    auto k = parse_carrier(opt.carrier);
    if (!k) throw Error(ErrorCode::carrier_mismatch, "unknown carrier '" + opt.carrier + "'");
    if (*k == CarrierKind::vector && r.file.vector_dim == 0)
      throw Error(ErrorCode::carrier_mismatch, "--carrier vector needs a file that declares carrier vector(n)");
    r.file.carrier = *k;
  }
  return r.file;
}

const ModelSpec& require_model(const ModelFile& f, ModelSpec& spec) {
  spec = f.model_spec();
  if (!spec.rule) throw Error(ErrorCode::inexpressible, "the file declares no rewriting model");
  return spec;
}

const SystemBlock& require_system(const ModelFile& f) {
  if (!f.system) throw Error(ErrorCode::inexpressible, "the file declares no system block");
  return *f.system;
}

template <class C>
SigmaAlgebra<C> make_algebra(const ModelSpec& spec) {
  if constexpr (std::is_same_v<C, Term>) return term_algebra(spec.signature);
  else if constexpr (std::is_same_v<C, FloatVec>) return instantiate_vector_algebra(spec.signature, spec.algebra);
  else return instantiate_algebra<C>(spec.signature, spec.algebra);
}

template <class C>
State<C> convert_state(const std::vector<Rational>& xs) {
  State<C> out;
  for (const auto& x : xs) {
    if constexpr (std::is_same_v<C, Rational>) out.push_back(x);
    else out.push_back(to_double(x));
  }
  return out;
}

// Calls f.template operator()<C>() for the file's carrier.
template <class F>
int on_model_carrier(CarrierKind k, F&& f) {
  switch (k) {
    case CarrierKind::rational: return f.template operator()<Rational>();
    case CarrierKind::real: return f.template operator()<double>();
    case CarrierKind::vector: return f.template operator()<FloatVec>();
    case CarrierKind::term: return f.template operator()<Term>();
  }
  return invalid;
}

// Systems only run on scalar carriers.
template <class F>
int on_system_carrier(CarrierKind k, F&& f) {
  switch (k) {
    case CarrierKind::rational: return f.template operator()<Rational>();
    case CarrierKind::real: return f.template operator()<double>();
    default:
      throw Error(ErrorCode::carrier_mismatch,
                  std::string("systems run on the rational or float carrier, not ") + to_string(k));
  }
}

/// Last numeric column of a CSV file, or the "value"/"output" field of JSON lines.
std::vector<double> read_sequence(const std::string& path) {
  std::vector<double> out;
  std::stringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    if (line[0] == '{') {
      auto j = Json::parse(line, nullptr, false);
      const Json* v = nullptr;
      if (!j.is_discarded()) v = j.contains("value") ? &j["value"] : j.contains("output") ? &j["output"] : nullptr;
      if (!v || !(v->is_number() || v->is_string()))
        throw Error(ErrorCode::parse_error, path + ":" + std::to_string(lineno) + ": no numeric value field");
      if (v->is_number()) {
        out.push_back(v->get<double>());
      } else {
        auto q = parse_rational(v->get<std::string>());
        if (!q) throw Error(ErrorCode::parse_error, path + ":" + std::to_string(lineno) + ": not a number");
        out.push_back(to_double(*q));
      }
      continue;
    }
    auto cell = line.substr(line.rfind(',') == std::string::npos ? 0 : line.rfind(',') + 1);
    cell.erase(0, cell.find_first_not_of(" \t"));
    cell.erase(cell.find_last_not_of(" \t") + 1);
    char* end = nullptr;
    double x = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size()) {
      if (out.empty()) continue;  // header
      throw Error(ErrorCode::parse_error, path + ":" + std::to_string(lineno) + ": '" + cell + "' is not a number");
    }
    out.push_back(x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

struct TraceArgs {
  std::string file;
  bool terms = false;
  bool hidden = false;
};

int cmd_trace(const TraceArgs& a, const Options& opt, Sink& sink) {
  auto f = load(a.file, opt);
  const std::size_t n = opt.steps.value_or(10);
  require_steps(n, opt.limits);
  if (f.has_model()) {
    ModelSpec spec;
    require_model(f, spec);
    return on_model_carrier(f.carrier, [&]<class C>() {
      CachedCatamorphism<C> cata(extend_with_identity(make_algebra<C>(spec)));
      RewriteStream stream(*spec.rule, spec.initial);
      for (std::size_t k = 0; k <= n; ++k) {
        if (k > 0) {
          try {
            stream.advance();
          } catch (const Error& e) {
            if (e.code() != ErrorCode::no_match) throw;
            throw Error(ErrorCode::no_match, "the rule stops applying after " + std::to_string(k - 1) + " steps");
          }
        }
        Json r;
        r["step"] = k;
        if (a.terms) r["term"] = printed(stream.current(), opt.limits);
        r["value"] = value_json(cata(stream.current()), opt.limits);
        require_nodes(cata.nodes(), opt.limits, "the shared term graph");
        sink.record(r);
      }
      return int(ok);
    });
  }
  const auto& sys = require_system(f);
  return on_system_carrier(f.carrier, [&]<class C>() {
    auto t = trajectory(instantiate_system<C>(sys.spec), convert_state<C>(sys.state), n, a.hidden);
    for (std::size_t k = 0; k <= n; ++k) {
      Json r;
      r["step"] = k;
      r["output"] = value_json(t.outputs[k], opt.limits);
      if (a.hidden) r["hidden"] = values_json(t.hidden[k], opt.limits);
      sink.record(r);
    }
    return int(ok);
  });
}

struct EvalArgs {
  std::string file;
  std::string term;
};

int cmd_eval(const EvalArgs& a, const Options& opt, Sink& sink) {
  auto f = load(a.file, opt);
  auto spec = f.model_spec();
  Term t = a.term.empty() ? spec.initial : parse_term(a.term, spec.signature.with_identity(), spec.variables);
  if (a.term.empty() && !f.initial) throw Error(ErrorCode::unbound_variable, "no --term given and no initial term");
  return on_model_carrier(f.carrier, [&]<class C>() {
    CachedCatamorphism<C> cata(extend_with_identity(make_algebra<C>(spec)));
    Json r;
    r["term"] = printed(t, opt.limits);
    r["value"] = value_json(cata(t), opt.limits);
    sink.record(r);
    return int(ok);
  });
}

struct RewriteArgs {
  std::string file;
  std::string term;
  std::string position;
};

int cmd_rewrite(const RewriteArgs& a, const Options& opt, Sink& sink) {
  auto f = load(a.file, opt);
  ModelSpec spec;
  require_model(f, spec);
  RewriteRule rule = *spec.rule;
  if (!a.position.empty()) rule.position = parse_position(a.position);
  Term t = a.term.empty() ? spec.initial : parse_term(a.term, spec.signature.with_identity(), spec.variables);
  const std::size_t n = opt.steps.value_or(1);
  require_steps(n, opt.limits);
  RewriteStream stream(rule, t);
  for (std::size_t k = 0; k <= n; ++k) {
    if (k > 0) stream.advance();
    Json r;
    r["step"] = k;
    r["term"] = printed(stream.current(), opt.limits);
    sink.record(r);
  }
  return ok;
}

struct ProjectArgs {
  std::string file;
};

int cmd_project(const ProjectArgs& a, const Options& opt, Sink& sink) {
  auto f = load(a.file, opt);
  ModelSpec spec;
  require_model(f, spec);
  const std::size_t n = opt.steps.value_or(20);
  require_steps(n, opt.limits);
  return on_model_carrier(f.carrier, [&]<class C>() {
    RewritingModel<C> m(*spec.rule, make_algebra<C>(spec), spec.initial);
    auto p = project(m);
    auto want = model_outputs(m, n);
    double diff = max_distance(want, p.outputs(n));

    Json r;
    r["dim"] = p.system.dim;
    r["x0"] = values_json(p.x0, opt.limits);
    r["position"] = spec.rule->position.to_string();
    if constexpr (std::is_same_v<C, Rational> || std::is_same_v<C, double>) {
      auto sym = project_symbolic<C>(spec);
      auto sym_out = trajectory(instantiate_system<C>(sym.system), sym.x0, n).outputs;
      diff = std::max(diff, max_distance(want, sym_out));
      std::vector<Rational> x0;
      for (const auto& x : sym.x0) x0.push_back(detail::literal_of(x));
      std::string text = print_model(system_file(sym.system, x0, f.carrier));
      r["context"] = sym.system.context ? print_expr(*sym.system.context) : "identity";
      if (!opt.output.empty()) {
        std::ofstream(opt.output) << text;
        r["system_file"] = opt.output;
      } else {
        r["system"] = text;
      }
    } else {
      r["context"] = spec.rule->position.is_root() ? "identity" : "evaluation of t0 around position " +
                                                                      spec.rule->position.to_string();
    }
    r["steps"] = n;
    r["compared"] = want.size();
    r["max_abs_diff"] = diff;
    const bool agree = diff <= tolerance<C>();
    r["agree"] = agree;
    sink.record(r);
    return int(agree ? ok : unverified);
  });
}

struct EmbedArgs {
  std::string file;
  std::optional<std::size_t> verify;
  bool roundtrip = false;
};

int cmd_embed(const EmbedArgs& a, const Options& opt, Sink& sink) {
  auto f = load(a.file, opt);
  const auto& sys = require_system(f);
  const std::size_t n = a.verify.value_or(opt.steps.value_or(30));
  require_steps(n, opt.limits);
  auto spec = embed(sys.spec, sys.state);
  return on_system_carrier(f.carrier, [&]<class C>() {
    Json r;
    r["dim"] = sys.spec.dim;
    bool good = true;
    auto direct = trajectory(instantiate_system<C>(sys.spec), convert_state<C>(sys.state), n).outputs;
    if (a.verify) {
      auto via_model = model_outputs(instantiate_model<C>(spec), n);
      const bool agree = max_distance(direct, via_model) <= tolerance<C>();
      r["verified"] = agree ? Json(n) : Json(false);
      good = good && agree;
    }
    if (a.roundtrip) {
      auto back = project_symbolic<C>(spec);
      auto again = trajectory(instantiate_system<C>(back.system), back.x0, n).outputs;
      const bool agree = max_distance(direct, again) <= tolerance<C>();
      r["roundtrip"] = agree;
      r["roundtrip_dim"] = back.system.dim;
      good = good && agree;
    }
    std::string text = print_model(model_file(spec, f.carrier));
    if (!opt.output.empty()) {
      std::ofstream(opt.output) << text;
      r["model_file"] = opt.output;
    } else {
      r["model"] = text;
    }
    sink.record(r);
    return int(good ? ok : unverified);
  });
}

struct ReduceArgs {
  std::string file;
  double threshold = default_singularity_threshold;
};

int cmd_reduce(const ReduceArgs& a, const Options& opt, Sink& sink) {
  auto f = load(a.file, opt);
  const auto& sys = require_system(f);
  if (!sys.spec.linear) throw Error(ErrorCode::inexpressible, "reduce needs a linear system (matrix and functional)");
  const std::size_t n = opt.steps.value_or(50);
  require_steps(n, opt.limits);
  const auto& lin = *sys.spec.linear;
  const std::size_t d = sys.spec.dim;
  auto red = reduce_linear(to_eigen(lin.a), to_eigen_row(lin.b), a.threshold);
  Json r;
  r["reducible"] = red.has_value();
  r["depth"] = d;
  if (!red) {
    r["reason"] = "phi is numerically singular: its smallest singular value is below the threshold times its largest";
    sink.record(r);
    return ok;
  }
  r["coefficients"] = red->recurrence.coefficients;
  r["condition"] = red->condition;
  if (!sys.state.empty() && n + 1 > d) {
    auto truth = trajectory(instantiate_system<double>(sys.spec), convert_state<double>(sys.state), n).outputs;
    auto pred = predict(red->recurrence, std::span<const double>(truth.data(), d), n + 1 - d);
    double scale = 1.0, err = 0.0;
    for (double y : truth) scale = std::max(scale, std::abs(y));
    for (std::size_t k = d; k <= n; ++k) err = std::max(err, std::abs(pred[k - d] - truth[k]));
    r["residual"] = err / scale;
  }
  sink.record(r);
  return ok;
}

struct FitArgs {
  std::string file;
  std::optional<std::size_t> depth;
  std::size_t max_depth = 8;
  double max_residual = 1e-6;
  bool constant = false;
  std::size_t predict = 0;
};

int cmd_fit(const FitArgs& a, const Options& opt, Sink& sink) {
  auto seq = read_sequence(a.file);
  require_steps(seq.size() + a.predict, opt.limits);
  std::optional<RecurrenceFit> fit;
  std::size_t depth = 0;
  if (a.depth) {
    depth = *a.depth;
    fit = fit_linear_recurrence(seq, depth, a.constant);
  } else {
    // Smallest depth whose residual is within bounds, else the best one tried.
    for (std::size_t d = 1; d <= a.max_depth && seq.size() >= 2 * d + 1; ++d) {
      auto cand = fit_linear_recurrence(seq, d, a.constant);
      if (!fit || cand.residual < fit->residual) {
        fit = cand;
        depth = d;
      }
      if (cand.residual <= a.max_residual) {
        fit = cand;
        depth = d;
        break;
      }
    }
    if (!fit) throw Error(ErrorCode::sequence_too_short, "need at least 3 values to fit depth 1");
  }
  Json r;
  r["depth"] = depth;
  r["coefficients"] = fit->recurrence.coefficients;
  if (fit->recurrence.constant) r["constant"] = *fit->recurrence.constant;
  r["residual"] = fit->residual;
  r["condition"] = std::isfinite(fit->condition) ? Json(fit->condition) : Json(nullptr);
  r["rank"] = fit->rank;
  r["rank_deficient"] = fit->rank_deficient;
  if (a.predict) r["prediction"] = predict(fit->recurrence, seq, a.predict);
  const bool good = fit->residual <= a.max_residual;
  r["within_bound"] = good;
  sink.record(r);
  return good ? ok : unverified;
}

struct CheckArgs {
  std::vector<std::string> suites;
  std::optional<std::size_t> cases;
  bool parallel = false;
  bool mutant = false;
};

int cmd_check(const CheckArgs& a, const Options& opt, Sink& sink) {
  std::vector<const checks::Suite*> chosen;
  if (a.suites.empty()) {
    for (const auto& s : checks::suites()) chosen.push_back(&s);
  } else {
    for (const auto& name : a.suites) {
      const auto* s = checks::find_suite(name);
      if (!s) {
        std::string known;
        for (const auto& k : checks::suites()) known += (known.empty() ? "" : ", ") + k.name;
        throw Error(ErrorCode::unknown_symbol, "no suite named '" + name + "' (known: " + known + ")");
      }
      chosen.push_back(s);
    }
  }
  checks::CheckConfig cfg;
  cfg.seed = opt.seed;
  cfg.cases = a.cases;
  cfg.inject_mutant = a.mutant;

  std::vector<checks::SuiteResult> results;
  if (a.parallel) {
    std::vector<std::future<checks::SuiteResult>> jobs;
    for (const auto* s : chosen) jobs.push_back(std::async(std::launch::async, [s, cfg] { return checks::run_suite(*s, cfg); }));
    for (auto& j : jobs) results.push_back(j.get());
  } else {
    for (const auto* s : chosen) results.push_back(checks::run_suite(*s, cfg));
  }

  bool all = true;
  for (const auto& res : results) {
    all = all && res.ok();
    if (opt.format == "pretty") {
      std::cout << res.name << ": " << res.passed << "/" << res.cases << " passed\n";
      for (const auto& [law, count] : res.laws) std::cout << "  " << law << ": " << count << " cases\n";
      if (res.counterexample) std::cout << "  counterexample: " << *res.counterexample << '\n';
      continue;
    }
    Json r;
    r["suite"] = res.name;
    r["cases"] = res.cases;
    r["passed"] = res.passed;
    r["ok"] = res.ok();
    r["counterexample"] = res.counterexample ? Json(*res.counterexample) : Json(nullptr);
    sink.record(r);
  }
  return all ? ok : unverified;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rewriting models, their projected dynamical systems and linear recurrences."};
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--format", opt.format, "Output format: jsonl, csv or pretty (check defaults to pretty)")
      ->check(CLI::IsMember({"jsonl", "csv", "pretty"}));
  app.add_option("--steps", opt.steps, "Number of steps");
  app.add_option("--seed", opt.seed, "Seed for generated check cases");
  app.add_option("--carrier", opt.carrier, "Override the file's carrier")
      ->check(CLI::IsMember({"rational", "float", "vector", "term"}));
  app.add_option("--output", opt.output, "Write records (or the produced file for project/embed) here");

  TraceArgs trace;
  auto* c_trace = app.add_subcommand("trace", "Stream cata(R^k(t0)) for a model, or the outputs of a system");
  c_trace->add_option("file", trace.file, "Model or system file")->required();
  c_trace->add_flag("--terms", trace.terms, "Include the rewritten term in each record");
  c_trace->add_flag("--hidden", trace.hidden, "Include the hidden state (systems)");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Evaluate the initial term, or --term, in the file's algebra");
  c_eval->add_option("file", eval.file)->required();
  c_eval->add_option("--term", eval.term, "Ground term to evaluate");

  RewriteArgs rewrite;
  auto* c_rewrite = app.add_subcommand("rewrite", "Apply the rule repeatedly and print the terms");
  c_rewrite->add_option("file", rewrite.file)->required();
  c_rewrite->add_option("--term", rewrite.term, "Start from this term instead of the initial one");
  c_rewrite->add_option("--position", rewrite.position, "Rewrite at this position (e, 1, 2.1, ...)");

  ProjectArgs proj;
  auto* c_project = app.add_subcommand("project", "Project a model to a cartesian system and verify it");
  c_project->add_option("file", proj.file)->required();

  EmbedArgs emb;
  auto* c_embed = app.add_subcommand("embed", "Embed a system as a rewriting model");
  c_embed->add_option("file", emb.file)->required();
  c_embed->add_option("--verify", emb.verify, "Compare model and system outputs for this many steps");
  c_embed->add_flag("--roundtrip", emb.roundtrip, "Project the embedding back and compare");

  ReduceArgs red;
  auto* c_reduce = app.add_subcommand("reduce", "Reduce a linear system to a linear recurrence");
  c_reduce->add_option("file", red.file)->required();
  c_reduce->add_option("--threshold", red.threshold, "Relative singular value below which phi counts as singular");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit a linear recurrence to a sequence (CSV or JSON lines)");
  c_fit->add_option("file", fit.file)->required();
  c_fit->add_option("--depth", fit.depth, "Recurrence depth; searched from 1 when absent");
  c_fit->add_option("--max-depth", fit.max_depth, "Largest depth tried by the search");
  c_fit->add_option("--max-residual", fit.max_residual, "Fail (exit 2) above this residual");
  c_fit->add_flag("--constant", fit.constant, "Fit a constant term as well");
  c_fit->add_option("--predict", fit.predict, "Continue the sequence by this many values");

  CheckArgs chk;
  auto* c_check = app.add_subcommand("check", "Run the randomized property suites");
  c_check->add_option("--suite", chk.suites, "Suite to run (repeatable); all when absent")->delimiter(',');
  c_check->add_option("--cases", chk.cases, "Cases per suite");
  c_check->add_flag("--parallel", chk.parallel, "Run suites concurrently; output keeps suite order");
  c_check->add_flag("--inject-mutant", chk.mutant, "Corrupt the reindex map so that its suite fails");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : invalid;
  }

  try {
    opt.limits = read_limits();
    if (opt.format.empty()) opt.format = c_check->parsed() ? "pretty" : "jsonl";
    std::ofstream file;
    const bool records_to_file = !opt.output.empty() && !c_project->parsed() && !c_embed->parsed();
    if (records_to_file) {
      file.open(opt.output);
      if (!file) throw Error(ErrorCode::parse_error, "cannot write '" + opt.output + "'");
    }
    Sink sink(opt.format, records_to_file ? static_cast<std::ostream&>(file) : std::cout);
    if (c_trace->parsed()) return cmd_trace(trace, opt, sink);
    if (c_eval->parsed()) return cmd_eval(eval, opt, sink);
    if (c_rewrite->parsed()) return cmd_rewrite(rewrite, opt, sink);
    if (c_project->parsed()) return cmd_project(proj, opt, sink);
    if (c_embed->parsed()) return cmd_embed(emb, opt, sink);
    if (c_reduce->parsed()) return cmd_reduce(red, opt, sink);
    if (c_fit->parsed()) return cmd_fit(fit, opt, sink);
    if (c_check->parsed()) return cmd_check(chk, opt, sink);
  } catch (const Error& e) {
    std::cerr << "rwd: " << e.what() << '\n';
    return e.code() == ErrorCode::limit_exceeded ? limited : invalid;
  } catch (const std::exception& e) {
    std::cerr << "rwd: " << e.what() << '\n';
    return invalid;
  }
  return invalid;
}
