#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tautline/tautline.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace tautline;

enum ExitCode { ok = 0, data_error = 2, model_error = 3, certificate_error = 4 };

struct CertificateFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- CSV ----------------------------------------------------------------

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  [[nodiscard]] std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  [[nodiscard]] const std::vector<double>* find(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return &columns[c];
    }
    return nullptr;
  }
  [[nodiscard]] const std::vector<double>& column(const std::string& name) const {
    if (const auto* c = find(name)) return *c;
    throw InvalidData(source + ": missing column '" + name + "'");
  }
};

double parse_number(std::string cell, const std::string& where) {
  if (!cell.empty() && cell.front() == '+') cell.erase(0, 1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw InvalidData(where + ": cannot parse '" + cell + "' as a finite number");
  }
  return v;
}

Table read_csv(const std::string& path) {
  std::ifstream file;
  std::istream* in = &std::cin;
  if (path != "-") {
    file.open(path);
    if (!file) throw InvalidData("cannot open '" + path + "'");
    in = &file;
  }
  Table t;
  t.source = path == "-" ? "<stdin>" : path;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(*in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      if (!cells.empty() && cells.front().rfind("\xEF\xBB\xBF", 0) == 0) cells.front().erase(0, 3);
      for (const auto& c : cells) {
        if (c.empty()) throw InvalidData(t.source + ": line 1: empty column name in header");
      }
      t.header = cells;
      t.columns.resize(cells.size());
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw InvalidData(t.source + ": line " + std::to_string(line_no) + ": expected " +
                        std::to_string(t.header.size()) + " fields, found " + std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      t.columns[c].push_back(
          parse_number(cells[c], t.source + ": line " + std::to_string(line_no) + ", column '" + t.header[c] + "'"));
    }
  }
  if (t.header.empty()) throw InvalidData(t.source + ": empty file (a header row is required)");
  if (t.rows() == 0) throw InvalidData(t.source + ": no data rows");
  return t;
}

DataSet load_data(const std::string& path) {
  const Table t = read_csv(path);
  std::vector<double> y = t.column("y");
  if (const auto* x = t.find("x")) {
    try {
      return DataSet::from_xy(*x, std::move(y));
    } catch (const InvalidData& e) {
      throw InvalidData(t.source + ": " + e.what());
    }
  }
  return DataSet::from_y(std::move(y));
}

LambdaVector load_lambda(const std::string& path, std::size_t points) {
  const Table t = read_csv(path);
  return LambdaVector(points, t.column("lambda"));
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path == "-" || path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw InvalidData("cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void write_json(const json& j, const std::string& path) {
  Output out(path);
  out.stream() << j.dump(2) << '\n';
}

// ---- shared pieces ------------------------------------------------------

struct ModelArgs {
  std::string method = "mean";
  double beta = 0.5;
  double delta = 1.0;

  [[nodiscard]] ModelSpec spec() const {
    ModelSpec s;
    s.kind = parse_model_kind(method);
    s.beta = beta;
    s.delta = delta;
    if (s.kind == ModelKind::quantile && !(beta > 0.0 && beta < 1.0)) {
      throw InvalidParameter("--beta must lie in (0, 1)");
    }
    if (s.kind == ModelKind::huber && !(delta > 0.0)) throw InvalidParameter("--delta must be > 0");
    return s;
  }
};

void add_model_options(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("--method", m.method, "mean, quantile, poisson, bernoulli or huber")->capture_default_str();
  cmd->add_option("--beta", m.beta, "quantile level")->capture_default_str();
  cmd->add_option("--delta", m.delta, "pseudo-Huber scale")->capture_default_str();
}

struct SqueezeArgs {
  std::string intervals = "dyadic";
  std::string sigma = "mad";
  double gamma = 0.9;
  std::size_t max_iter = 10000;

  [[nodiscard]] SqueezeOptions options() const {
    SqueezeOptions o;
    o.intervals = parse_interval_kind(intervals);
    o.sigma = parse_sigma_method(sigma);
    o.gamma = gamma;
    o.max_iter = max_iter;
    o.keep_lambdas = false;
    return o;
  }
};

void add_squeeze_options(CLI::App* cmd, SqueezeArgs& s) {
  cmd->add_option("--intervals", s.intervals, "interval family for the multiresolution check: dyadic or all")
      ->capture_default_str();
  cmd->add_option("--sigma", s.sigma, "noise estimator for the Gaussian bounds: mad or rice")->capture_default_str();
  cmd->add_option("--gamma", s.gamma, "squeeze factor in (0, 1)")->capture_default_str();
  cmd->add_option("--max-iter", s.max_iter, "squeeze iteration cap")->capture_default_str();
}

bool is_expfam(const ModelSpec& s) { return s.kind == ModelKind::poisson || s.kind == ModelKind::bernoulli; }

template <ConvexLoss M>
Certificate optimality_certificate(const M& model, const LambdaVector& lambda, std::span<const double> f) {
  if constexpr (M::differentiable) {
    return check_lemma22(model, lambda, f);
  } else {
    return check_lemma21(model, lambda, f);
  }
}

std::vector<double> per_block(const DataSet& data, std::span<const double> f) {
  std::vector<double> v(data.blocks());
  for (std::size_t b = 0; b < v.size(); ++b) v[b] = f[data.offsets()[b]];
  return v;
}

// Runs `check(model, f)` on the block-level problem, pooling tied observations.
template <class F>
Certificate on_blocks(const ModelSpec& spec, const DataSet& data, std::span<const double> f, F&& check) {
  return with_check_model(spec, data.y(), [&](auto model) -> Certificate {
    if (!data.has_ties()) return check(model, f);
    using Base = decltype(model);
    const BlockedLoss<Base> blocked(std::move(model), {data.offsets().begin(), data.offsets().end()});
    const auto fb = per_block(data, f);
    return check(blocked, std::span<const double>(fb));
  });
}

json certificate_json(const Certificate& c) {
  json j;
  j["condition"] = c.condition;
  j["pass"] = c.pass;
  j["worst_violation"] = c.worst_violation;
  j["tolerance"] = c.tolerance;
  j["at_j"] = c.j;
  j["at_k"] = c.k;
  return j;
}

// Fitted values on the natural scale from the response-scale column.
std::vector<double> to_fit_scale(const ModelSpec& spec, std::vector<double> v) {
  if (!is_expfam(spec)) return v;
  for (auto& z : v) z = natural_parameter(family_of(spec.kind), z);
  return v;
}

struct LambdaArgs {
  double value = 0.0;
  std::string file;
  CLI::Option* value_opt = nullptr;
  CLI::Option* file_opt = nullptr;

  [[nodiscard]] bool given() const { return value_opt->count() > 0 || file_opt->count() > 0; }
  [[nodiscard]] LambdaVector make(std::size_t points) const {
    if (file_opt->count() > 0) return load_lambda(file, points);
    if (!(value > 0.0) || !std::isfinite(value)) throw InvalidParameter("--lambda must be finite and > 0");
    return LambdaVector::constant(points, value);
  }
};

void add_lambda_options(CLI::App* cmd, LambdaArgs& l) {
  l.value_opt = cmd->add_option("--lambda", l.value, "constant penalty on every gap");
  l.file_opt = cmd->add_option("--lambda-file", l.file, "CSV with a 'lambda' column, one row per gap");
  l.value_opt->excludes(l.file_opt);
}

void write_lambda_csv(const std::string& path, const LambdaVector& lambda) {
  Output out(path);
  auto& os = out.stream();
  os << "gap,lambda\n" << std::setprecision(17);
  for (std::size_t k = 1; k < lambda.points(); ++k) os << k << ',' << lambda.gap(k) << '\n';
}

// ---- fit ------------------------------------------------------------------

struct FitArgs {
  std::string input;
  ModelArgs model;
  LambdaArgs lambda;
  SqueezeArgs squeeze;
  bool adaptive = false;
  std::string output = "-";
  std::string summary;
  std::string lambda_out;
};

int cmd_fit(const FitArgs& a) {
  const ModelSpec spec = a.model.spec();
  if (a.adaptive && a.lambda.given()) throw InvalidParameter("--adaptive cannot be combined with --lambda or --lambda-file");
  const DataSet data = load_data(a.input);

  json summary;
  summary["command"] = "fit";
  summary["method"] = to_string(spec.kind);
  if (spec.kind == ModelKind::quantile) summary["beta"] = spec.beta;
  if (spec.kind == ModelKind::huber) summary["delta"] = spec.delta;
  summary["n"] = data.size();
  summary["design_points"] = data.blocks();

  Fit fit;
  LambdaVector lambda;
  json squeeze_json;
  if (a.lambda.given()) {
    lambda = a.lambda.make(data.blocks());
    fit = fit_model(spec, data, lambda);
    json l;
    l["mode"] = a.lambda.file_opt->count() > 0 ? "file" : "constant";
    if (a.lambda.value_opt->count() > 0) l["value"] = a.lambda.value;
    l["min"] = lambda.gaps().empty() ? 0.0 : *std::min_element(lambda.gaps().begin(), lambda.gaps().end());
    l["max"] = lambda.max();
    summary["lambda"] = l;
  } else {
    const auto opt = a.squeeze.options();
    auto res = local_squeeze(data, spec, opt);
    fit = std::move(res.fit);
    lambda = res.lambda;
    json l;
    l["mode"] = "adaptive";
    l["intervals"] = a.squeeze.intervals;
    l["gamma"] = opt.gamma;
    l["bound"] = to_string(res.bounds.kind);
    if (res.bounds.kind == BoundKind::gaussian_universal || res.bounds.kind == BoundKind::gaussian_scale) {
      l["sigma"] = res.bounds.sigma;
    }
    l["min"] = lambda.gaps().empty() ? 0.0 : *std::min_element(lambda.gaps().begin(), lambda.gaps().end());
    l["max"] = lambda.max();
    summary["lambda"] = l;
    squeeze_json["iterations"] = res.trace.iterations();
    squeeze_json["multiresolution_violations"] = res.trace.violations.back();
  }

  const Certificate cert = on_blocks(spec, data, fit.values, [&](const auto& model, std::span<const double> f) {
    return optimality_certificate(model, lambda, f);
  });

  const auto response = response_scale(spec, fit.values);
  {
    Output out(a.output);
    auto& os = out.stream();
    const auto x = data.expand(data.x());
    const auto ids = fit.segment_ids();
    os << "x,y,fitted,segment_id\n" << std::setprecision(17);
    for (std::size_t i = 0; i < data.size(); ++i) {
      os << x[i] << ',' << data.y()[i] << ',' << response[i] << ',' << ids[i] << '\n';
    }
  }
  if (!a.lambda_out.empty()) write_lambda_csv(a.lambda_out, lambda);

  summary["objective"] = fit.objective;
  summary["segments"] = fit.segments.size();
  summary["extrema"] = count_extrema(fit.values);
  summary["extrema_interior"] = count_extrema(fit.values, 1e-9, ExtremaConvention::interior);
  summary["certificate"] = certificate_json(cert);
  if (!squeeze_json.is_null()) summary["squeeze"] = squeeze_json;
  if (!a.summary.empty()) {
    write_json(summary, a.summary);
  } else if (a.output != "-") {
    std::cout << summary.dump(2) << '\n';
  }
  if (!cert.pass) {
    throw CertificateFailure("optimality certificate failed (" + cert.condition + "): worst violation " +
                             std::to_string(cert.worst_violation) + " at j=" + std::to_string(cert.j) +
                             ", k=" + std::to_string(cert.k));
  }
  return ok;
}

// ---- verify ---------------------------------------------------------------

struct VerifyArgs {
  std::string input;
  std::string fit;
  ModelArgs model;
  LambdaArgs lambda;
  SqueezeArgs squeeze;
  double c_o = 8.0;
  std::size_t show = 5;
  std::string output = "-";
};

int cmd_verify(const VerifyArgs& a) {
  const ModelSpec spec = a.model.spec();
  if (!a.lambda.given()) throw InvalidParameter("verify needs --lambda or --lambda-file");
  const DataSet data = load_data(a.input);
  const Table ft = read_csv(a.fit);
  const auto& fitted = ft.column("fitted");
  if (fitted.size() != data.size()) {
    throw InvalidData(ft.source + ": " + std::to_string(fitted.size()) + " fitted values for " +
                      std::to_string(data.size()) + " observations");
  }
  if (const auto* fy = ft.find("y")) {
    for (std::size_t i = 0; i < fy->size(); ++i) {
      if ((*fy)[i] != data.y()[i]) throw InvalidData(ft.source + ": y differs from the data at row " + std::to_string(i + 1));
    }
  }
  const auto f = to_fit_scale(spec, fitted);
  for (std::size_t b = 0; b < data.blocks(); ++b) {
    const auto r = data.block(b);
    for (std::size_t i = r.begin + 1; i < r.end; ++i) {
      if (f[i] != f[r.begin]) throw InvalidData(ft.source + ": tied design points carry different fitted values");
    }
  }
  const LambdaVector lambda = a.lambda.make(data.blocks());

  json report;
  report["command"] = "verify";
  report["method"] = to_string(spec.kind);
  report["n"] = data.size();
  const auto directional = on_blocks(spec, data, f, [&](const auto& m, std::span<const double> v) {
    return check_lemma21(m, lambda, v);
  });
  report["directional"] = certificate_json(directional);
  bool pass = directional.pass;
  const bool differentiable = spec.kind != ModelKind::quantile;
  if (differentiable) {
    const auto cumulative = on_blocks(spec, data, f, [&](const auto& m, std::span<const double> v) {
      if constexpr (std::decay_t<decltype(m)>::differentiable) return check_lemma22(m, lambda, v);
      return Certificate{};
    });
    const auto tube = on_blocks(spec, data, f, [&](const auto& m, std::span<const double> v) {
      if constexpr (std::decay_t<decltype(m)>::differentiable) return check_tube(m, lambda, v);
      return Certificate{};
    });
    report["cumulative"] = certificate_json(cumulative);
    report["tube"] = certificate_json(tube);
    pass = pass && cumulative.pass && tube.pass;
  } else {
    report["cumulative"] = nullptr;
    report["tube"] = nullptr;
  }

  const auto opt = a.squeeze.options();
  const BoundSpec bounds = default_bounds(spec, data.y(), opt);
  const IntervalFamily family(opt.intervals, data.size());
  with_check_model(spec, data.y(), [&](const auto& model) {
    const auto v = check_multiresolution(model, f, family, bounds);
    json mr;
    mr["bound"] = to_string(bounds.kind);
    mr["intervals"] = a.squeeze.intervals;
    mr["violations"] = v.size();
    json worst = json::array();
    std::vector<Violation> sorted = v;
    std::sort(sorted.begin(), sorted.end(), [](const Violation& p, const Violation& q) {
      return std::abs(p.sum - p.bound) > std::abs(q.sum - q.bound);
    });
    for (std::size_t i = 0; i < std::min(a.show, sorted.size()); ++i) {
      json w;
      w["j"] = sorted[i].interval.begin + 1;
      w["k"] = sorted[i].interval.end;
      w["sum"] = sorted[i].sum;
      w["bound"] = sorted[i].bound;
      w["side"] = sorted[i].above ? "upper" : "lower";
      worst.push_back(w);
    }
    mr["worst"] = worst;
    report["multiresolution"] = mr;
    json e;
    e["c_o"] = a.c_o;
    e["ratio"] = check_eq11(model, f, a.c_o);
    report["multiscale_ratio"] = e;
    return 0;
  });
  report["pass"] = pass;
  write_json(report, a.output);
  if (!pass) throw CertificateFailure("fit is not optimal for the given penalty");
  return ok;
}

// ---- tube -----------------------------------------------------------------

struct TubeArgs {
  std::string input;
  std::string fit;
  ModelArgs model;
  LambdaArgs lambda;
  SqueezeArgs squeeze;
  bool adaptive = false;
  std::string output = "-";
};

int cmd_tube(const TubeArgs& a) {
  const ModelSpec spec = a.model.spec();
  if (a.adaptive == a.lambda.given()) throw InvalidParameter("tube needs exactly one of --lambda, --lambda-file or --adaptive");
  const DataSet data = load_data(a.input);
  LambdaVector lambda;
  std::vector<double> f;
  if (a.adaptive) {
    auto res = local_squeeze(data, spec, a.squeeze.options());
    lambda = res.lambda;
    f = std::move(res.fit.values);
  } else {
    lambda = a.lambda.make(data.blocks());
    f = fit_model(spec, data, lambda).values;
  }
  if (!a.fit.empty()) {
    const Table ft = read_csv(a.fit);
    f = to_fit_scale(spec, ft.column("fitted"));
    if (f.size() != data.size()) throw InvalidData(ft.source + ": fitted column length differs from the data");
  }
  Output out(a.output);
  auto& os = out.stream();
  os << "k,cumsum,upper,lower\n" << std::setprecision(17);
  with_check_model(spec, data.y(), [&](const auto& model) {
    long double s = 0.0L;
    for (std::size_t b = 0; b < data.blocks(); ++b) {
      const auto r = data.block(b);
      for (std::size_t i = r.begin; i < r.end; ++i) s += model.derivative(i, f[i], Side::right);
      const double l = lambda.gap(b + 1);
      os << (b + 1) << ',' << static_cast<double>(s) << ',' << l << ',' << (l == 0.0 ? 0.0 : -l) << '\n';
    }
    return 0;
  });
  return ok;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::vector<std::string> signals{"blocks", "bumps", "heavisine"};
  std::string testbed = "gaussian";
  std::vector<std::string> methods;
  std::vector<std::size_t> sizes{2048};
  std::size_t reps = 20;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  SqueezeArgs squeeze;
  std::string csv;
};

std::vector<std::string> default_methods(Testbed tb) {
  switch (tb) {
    case Testbed::gaussian:
      return {"mean", "quantile:0.5", "quantile:0.1", "quantile:0.9"};
    case Testbed::cauchy:
      return {"quantile:0.5", "quantile:0.1", "quantile:0.9"};
    case Testbed::binary:
      return {"bernoulli"};
    case Testbed::poisson:
      return {"poisson"};
  }
  return {"mean"};
}

std::string fmt(double v, int digits) {
  if (!std::isfinite(v)) return "NA";
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

int cmd_simulate(const SimulateArgs& a) {
  SimulationSpec spec;
  spec.signals.clear();
  for (const auto& s : a.signals) spec.signals.push_back(parse_signal(s));
  spec.testbed = parse_testbed(a.testbed);
  spec.methods.clear();
  for (const auto& m : a.methods.empty() ? default_methods(spec.testbed) : a.methods) {
    spec.methods.push_back(parse_method_label(m));
  }
  spec.sizes = a.sizes;
  spec.replicates = a.reps;
  spec.seed = a.seed;
  spec.threads = a.threads;
  spec.squeeze = a.squeeze.options();
  const auto cells = run_simulation(spec);

  std::printf("%-10s %7s %-14s %5s %7s %7s %7s %5s\n", "signal", "n", "method", "reps", "failed", "median", "mad",
              "true");
  for (const auto& c : cells) {
    std::printf("%-10s %7zu %-14s %5zu %7zu %7s %7s %5s\n", to_string(c.signal).c_str(), c.n,
                method_label(c.method).c_str(), c.counts.size() + c.failures, c.failures, fmt(c.median(), 1).c_str(),
                fmt(c.mad(), 2).c_str(), c.true_count ? std::to_string(*c.true_count).c_str() : "inf");
  }
  for (const auto& c : cells) {
    if (c.failures > 0) {
      std::fprintf(stderr, "%s/%s: %zu failed fits, first: %s\n", to_string(c.signal).c_str(),
                   method_label(c.method).c_str(), c.failures, c.first_error.c_str());
    }
  }
  if (!a.csv.empty()) {
    Output out(a.csv);
    auto& os = out.stream();
    os << "signal,testbed,n,method,reps,failed,median,mad,true\n" << std::setprecision(17);
    for (const auto& c : cells) {
      os << to_string(c.signal) << ',' << a.testbed << ',' << c.n << ',' << method_label(c.method) << ','
         << c.counts.size() + c.failures << ',' << c.failures << ',' << fmt(c.median(), 1) << ','
         << (c.true_count ? fmt(c.mad(), 4) : "NA") << ',' << (c.true_count ? std::to_string(*c.true_count) : "inf")
         << '\n';
    }
  }
  return ok;
}

// ---- signal ---------------------------------------------------------------

struct SignalArgs {
  std::string name;
  std::size_t n = 2048;
  std::string testbed = "gaussian";
  std::uint64_t seed = 1;
  std::string output = "-";
};

int cmd_signal(const SignalArgs& a) {
  const auto f = dj_signal(parse_signal(a.name), a.n);
  const auto y = a.testbed == "none" ? f : gen_noise(parse_testbed(a.testbed), f, a.seed);
  Output out(a.output);
  write_signal_csv(out.stream(), f, y);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Taut string smoothing: penalized fits, certificates and simulations"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file; command line flags take precedence");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit a taut string model to a CSV with columns y and optionally x");
  fit_cmd->add_option("input", fit.input, "input CSV ('-' for stdin)")->required();
  add_model_options(fit_cmd, fit.model);
  add_lambda_options(fit_cmd, fit.lambda);
  fit_cmd->add_flag("--adaptive", fit.adaptive, "choose local penalties by multiresolution squeezing (default)");
  add_squeeze_options(fit_cmd, fit.squeeze);
  fit_cmd->add_option("-o,--output", fit.output, "fit CSV (x,y,fitted,segment_id)")->capture_default_str();
  fit_cmd->add_option("--summary", fit.summary, "summary JSON path ('-' for stdout)");
  fit_cmd->add_option("--lambda-out", fit.lambda_out, "write the penalties used as CSV (gap,lambda)");

  VerifyArgs ver;
  auto* ver_cmd = app.add_subcommand("verify", "check a fit against the optimality and multiresolution conditions");
  ver_cmd->add_option("input", ver.input, "data CSV")->required();
  ver_cmd->add_option("--fit", ver.fit, "fit CSV with a 'fitted' column")->required();
  add_model_options(ver_cmd, ver.model);
  add_lambda_options(ver_cmd, ver.lambda);
  add_squeeze_options(ver_cmd, ver.squeeze);
  ver_cmd->add_option("--c-o", ver.c_o, "constant of the multiscale ratio")->capture_default_str();
  ver_cmd->add_option("--show", ver.show, "number of worst intervals to list")->capture_default_str();
  ver_cmd->add_option("-o,--output", ver.output, "report JSON")->capture_default_str();

  TubeArgs tube;
  auto* tube_cmd = app.add_subcommand("tube", "cumulative derivative sums of a fit against the penalty tube");
  tube_cmd->add_option("input", tube.input, "data CSV")->required();
  add_model_options(tube_cmd, tube.model);
  add_lambda_options(tube_cmd, tube.lambda);
  tube_cmd->add_flag("--adaptive", tube.adaptive, "use squeezed penalties");
  add_squeeze_options(tube_cmd, tube.squeeze);
  tube_cmd->add_option("--fit", tube.fit, "use this fit CSV instead of solving");
  tube_cmd->add_option("-o,--output", tube.output, "CSV (k,cumsum,upper,lower)")->capture_default_str();

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "median extremum counts of squeezed fits on noisy test signals");
  sim_cmd->add_option("--signals", sim.signals, "blocks, bumps, heavisine, doppler")->delimiter(',')->capture_default_str();
  sim_cmd->add_option("--testbed", sim.testbed, "gaussian, cauchy, binary or poisson")->capture_default_str();
  sim_cmd->add_option("--methods", sim.methods, "mean, quantile:<beta>, poisson, bernoulli, huber:<delta>")
      ->delimiter(',');
  sim_cmd->add_option("--n", sim.sizes, "sample sizes")->delimiter(',')->capture_default_str();
  sim_cmd->add_option("--reps", sim.reps, "replicates per cell")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "study seed")->capture_default_str();
  sim_cmd->add_option("--threads", sim.threads, "worker threads (default TAUTLINE_THREADS or all cores)");
  add_squeeze_options(sim_cmd, sim.squeeze);
  sim_cmd->add_option("--csv", sim.csv, "also write the table as CSV");

  SignalArgs sig;
  auto* sig_cmd = app.add_subcommand("signal", "sample a test signal with noise as CSV (index,x,f_true,y)");
  sig_cmd->add_option("name", sig.name, "blocks, bumps, heavisine or doppler")->required();
  sig_cmd->add_option("--n", sig.n, "sample size")->capture_default_str();
  sig_cmd->add_option("--testbed", sig.testbed, "gaussian, cauchy, binary, poisson or none")->capture_default_str();
  sig_cmd->add_option("--seed", sig.seed, "noise seed")->capture_default_str();
  sig_cmd->add_option("-o,--output", sig.output, "output CSV")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : data_error;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit);
    if (ver_cmd->parsed()) return cmd_verify(ver);
    if (tube_cmd->parsed()) return cmd_tube(tube);
    if (sim_cmd->parsed()) return cmd_simulate(sim);
    if (sig_cmd->parsed()) return cmd_signal(sig);
  } catch (const CertificateFailure& e) {
    std::cerr << "certificate failure: " << e.what() << '\n';
    return certificate_error;
  } catch (const InvalidData& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return data_error;
  } catch (const InvalidParameter& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return data_error;
  } catch (const SizeLimitExceeded& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return data_error;
  } catch (const NonCoerciveData& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return model_error;
  } catch (const CoercivityError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return model_error;
  } catch (const DegenerateRange& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return model_error;
  } catch (const NonTermination& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return model_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return ok;
}
