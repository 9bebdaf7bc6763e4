#include "bernlab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "bernlab/bernstein.hpp"
#include "bernlab/calculus.hpp"
#include "bernlab/kernels.hpp"
#include "bernlab/models.hpp"
#include "bernlab/numerics.hpp"

namespace bernlab::cli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string strf(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// Serialized numbers use the shortest round-trip-exact form so identical runs
// produce identical bytes.
std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == std::floor(v) && std::fabs(v) < 9.007199254740992e15) {
    char ibuf[32];
    std::snprintf(ibuf, sizeof ibuf, "%.0f", v);
    return ibuf;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lg", &back);
  if (back == v) {
    for (int prec = 1; prec <= 16; ++prec) {
      char s[40];
      std::snprintf(s, sizeof s, "%.*g", prec, v);
      std::sscanf(s, "%lg", &back);
      if (back == v) return s;
    }
  }
  return buf;
}

[[noreturn]] void config_error(int line, const std::string& what) {
  throw PreconditionError(strf("config:%d: ", line) + what);
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> parts;
  std::istringstream is(s);
  std::string w;
  while (is >> w) parts.push_back(w);
  return parts;
}

// ---------------------------------------------------------------------------
// Catalogs (kept sorted; list-models / list-experiments print them verbatim).

struct CatalogEntry {
  const char* name;
  const char* blurb;
};

constexpr CatalogEntry kModels[] = {
    {"circle", "periodic grid on [0, 2pi); closed-form spectrum when the potential is off"},
    {"dirichlet", "clamped interval with an optional confining potential"},
    {"divergence", "variable-coefficient flux form on a clamped interval"},
    {"oscillator", "quadratic well in its eigenbasis (coefficient space, ladder gradient)"},
};

constexpr CatalogEntry kExperiments[] = {
    {"bernstein", "extremal band gradient constants versus band size"},
    {"equivalence", "ratio of sweep suprema for two multiplier profiles"},
    {"holomorphic", "complex-time semigroup norms along a sector ray"},
    {"kernel-audit", "heat-kernel composition, envelope, gradient-mass, and volume audits"},
    {"lplq", "mixed-norm extremal growth exponents versus band size"},
    {"multiplier-uniformity", "uniform boundedness of psi(hL) across an h sweep"},
    {"regularity", "sqrt(t)-weighted heat-gradient norms across a t sweep"},
    {"reverse", "reverse band constants on spectral tail bands"},
    {"semiclassical", "forward multiplier sweep with first-order factors"},
    {"semiclassical-reverse", "reverse multiplier sweep with spectral witnesses"},
};

bool known_experiment(const std::string& name) {
  for (const auto& e : kExperiments)
    if (name == e.name) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Config parsing and validation.

double parse_exponent(int line, const std::string& v) {
  if (v == "inf") return kInf;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (!end || *end != '\0' || !(x >= 1.0))
    config_error(line, "exponent must be a number >= 1 or 'inf', got '" + v + "'");
  return x;
}

double parse_double(int line, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (!end || *end != '\0' || !std::isfinite(x))
    config_error(line, "expected a finite number, got '" + v + "'");
  return x;
}

long parse_int(int line, const std::string& v) {
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (!end || *end != '\0')
    config_error(line, "expected an integer, got '" + v + "'");
  return x;
}

std::uint64_t parse_u64(int line, const std::string& v) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (!end || *end != '\0')
    config_error(line, "expected an unsigned integer, got '" + v + "'");
  return x;
}

// "lo .. hi" dyadic exponent range
void parse_range(int line, const std::string& v, int& lo, int& hi) {
  const std::size_t dots = v.find("..");
  if (dots == std::string::npos)
    config_error(line, "expected a dyadic range 'lo .. hi', got '" + v + "'");
  lo = static_cast<int>(parse_int(line, trim(v.substr(0, dots))));
  hi = static_cast<int>(parse_int(line, trim(v.substr(dots + 2))));
  if (lo > hi) config_error(line, strf("empty range: %d .. %d", lo, hi));
  if (hi - lo > 64) config_error(line, "range spans more than 64 octaves");
}

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

ParsedConfig parse_config_text(const std::string& text) {
  ParsedConfig out;
  out.text = text;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::string s = raw;
    const std::size_t hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3)
        config_error(line, "malformed section header '" + trim(raw) + "'");
      section = trim(s.substr(1, s.size() - 2));
      if (section != "model" && section != "experiment")
        config_error(line, "unknown section [" + section + "] (expected [model] or [experiment])");
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      config_error(line, "expected 'key = value', got '" + s + "'");
    ConfigEntry e;
    e.line = line;
    e.section = section;
    e.key = trim(s.substr(0, eq));
    e.value = trim(s.substr(eq + 1));
    if (e.section.empty())
      config_error(line, "key '" + e.key + "' appears before any [section] header");
    if (e.key.empty()) config_error(line, "empty key");
    if (e.value.empty()) config_error(line, "empty value for key '" + e.key + "'");
    out.entries.push_back(std::move(e));
  }
  return out;
}

ExperimentConfig validate_config(const ParsedConfig& parsed) {
  ExperimentConfig cfg;

  // Pass 1: the two `kind` keys decide which other keys are legal.
  int model_line = 0, exp_line = 0;
  for (const auto& e : parsed.entries) {
    if (e.key != "kind") continue;
    if (e.section == "model") {
      if (model_line) config_error(e.line, "duplicate model kind");
      cfg.model = e.value;
      model_line = e.line;
    } else {
      if (exp_line) config_error(e.line, "duplicate experiment kind");
      cfg.experiment = e.value;
      exp_line = e.line;
    }
  }
  if (cfg.model.empty())
    throw PreconditionError("config: missing 'kind' under [model]");
  if (cfg.experiment.empty())
    throw PreconditionError("config: missing 'kind' under [experiment]");
  {
    bool ok = false;
    for (const auto& m : kModels) ok = ok || cfg.model == m.name;
    if (!ok) config_error(model_line, "unknown model '" + cfg.model + "'");
    if (!known_experiment(cfg.experiment))
      config_error(exp_line, "unknown experiment '" + cfg.experiment + "'");
  }

  const bool grid_model = cfg.model != "oscillator";
  const bool interval = cfg.model == "dirichlet" || cfg.model == "divergence";
  std::set<std::string> model_keys = {"kind", "modes"};
  if (grid_model) {
    model_keys.insert("n");
    model_keys.insert("potential");
  }
  if (interval) {
    model_keys.insert("x0");
    model_keys.insert("x1");
  }
  if (cfg.model == "divergence") model_keys.insert("coefficient");

  const std::string& ex = cfg.experiment;
  std::set<std::string> exp_keys = {"kind", "seed"};
  auto add = [&](std::initializer_list<const char*> ks) {
    for (const char* k : ks) exp_keys.insert(k);
  };
  const bool profiled = ex == "semiclassical" || ex == "semiclassical-reverse" ||
                        ex == "multiplier-uniformity" || ex == "equivalence";
  if (profiled) add({"profile", "center", "radius", "beta"});
  if (ex == "equivalence") add({"profile2"});
  if (ex == "bernstein") add({"N", "p"});
  if (ex == "reverse") add({"N", "q", "K"});
  if (ex == "lplq") add({"N", "p", "q"});
  if (ex == "semiclassical") add({"h", "p"});
  if (ex == "semiclassical-reverse") add({"h", "q", "trials"});
  if (ex == "multiplier-uniformity") add({"h", "p"});
  if (ex == "equivalence") add({"h", "p"});
  if (ex == "regularity") add({"t", "p"});
  if (ex == "holomorphic") add({"t", "q", "theta"});
  if (ex == "kernel-audit") add({"t", "c", "c0"});

  std::set<std::string> required;
  for (const char* k : {"N", "h", "t"})
    if (exp_keys.count(k)) required.insert(k);
  if (exp_keys.count("p") && ex != "equivalence") required.insert("p");
  if (exp_keys.count("q")) required.insert("q");

  // Pass 2: typed assignment with line-precise rejection.
  std::set<std::string> seen;
  for (const auto& e : parsed.entries) {
    const auto& legal = e.section == "model" ? model_keys : exp_keys;
    if (!legal.count(e.key))
      config_error(e.line, "unknown key '" + e.key + "' in [" + e.section +
                               "] for " + (e.section == "model" ? cfg.model : ex));
    if (!seen.insert(e.section + "." + e.key).second)
      config_error(e.line, "duplicate key '" + e.key + "'");
    if (e.key == "kind") continue;
    const int ln = e.line;
    const std::string& v = e.value;
    if (e.section == "model") {
      if (e.key == "n") {
        cfg.n = static_cast<int>(parse_int(ln, v));
        if (cfg.n < 8 || cfg.n > 65536) config_error(ln, "n out of range [8, 65536]");
      } else if (e.key == "modes") {
        cfg.modes = static_cast<int>(parse_int(ln, v));
        if (cfg.modes < 1 || cfg.modes > 65536) config_error(ln, "modes out of range [1, 65536]");
      } else if (e.key == "x0") {
        cfg.x0 = parse_double(ln, v);
      } else if (e.key == "x1") {
        cfg.x1 = parse_double(ln, v);
      } else if (e.key == "potential") {
        if (v != "none" && v != "quadratic" && v != "cosine" && v != "linear")
          config_error(ln, "unknown potential '" + v + "' (none|quadratic|cosine|linear)");
        cfg.potential = v;
      } else if (e.key == "coefficient") {
        if (v != "one" && v != "sine")
          config_error(ln, "unknown coefficient '" + v + "' (one|sine)");
        cfg.coefficient = v;
      }
      continue;
    }
    if (e.key == "N") {
      for (const auto& w : split_ws(v)) {
        const long b = parse_int(ln, w);
        if (b < 1 || b > 65536) config_error(ln, "band size out of range [1, 65536]");
        cfg.bands.push_back(static_cast<int>(b));
      }
      if (cfg.bands.empty()) config_error(ln, "empty N list");
    } else if (e.key == "p") {
      cfg.p = parse_exponent(ln, v);
    } else if (e.key == "q") {
      cfg.q = parse_exponent(ln, v);
    } else if (e.key == "h") {
      parse_range(ln, v, cfg.h_lo, cfg.h_hi);
      cfg.has_h = true;
    } else if (e.key == "t") {
      parse_range(ln, v, cfg.t_lo, cfg.t_hi);
      cfg.has_t = true;
    } else if (e.key == "c") {
      cfg.c = parse_double(ln, v);
      if (cfg.c <= 0.0) config_error(ln, "c must be positive");
    } else if (e.key == "c0") {
      cfg.c0 = parse_double(ln, v);
      if (cfg.c0 <= 0.0) config_error(ln, "c0 must be positive");
    } else if (e.key == "K") {
      cfg.tail_factor = static_cast<int>(parse_int(ln, v));
      if (cfg.tail_factor < 2 || cfg.tail_factor > 64)
        config_error(ln, "K out of range [2, 64]");
    } else if (e.key == "theta") {
      cfg.theta = parse_double(ln, v);
      if (!(std::fabs(cfg.theta) < 0.5))
        config_error(ln, "theta (in units of pi) must satisfy |theta| < 0.5");
    } else if (e.key == "trials") {
      cfg.trials = static_cast<int>(parse_int(ln, v));
      if (cfg.trials < 0 || cfg.trials > 100000) config_error(ln, "trials out of range");
    } else if (e.key == "profile" || e.key == "profile2") {
      if (v != "bump" && v != "smooth_cutoff" && v != "tail_step" && v != "power_decay")
        config_error(ln, "unknown profile '" + v +
                             "' (bump|smooth_cutoff|tail_step|power_decay)");
      (e.key == "profile" ? cfg.profile : cfg.profile2) = v;
    } else if (e.key == "center") {
      cfg.center = parse_double(ln, v);
    } else if (e.key == "radius") {
      cfg.radius = parse_double(ln, v);
    } else if (e.key == "beta") {
      cfg.beta = parse_double(ln, v);
    } else if (e.key == "seed") {
      cfg.seed = parse_u64(ln, v);
    }
  }

  for (const auto& k : required)
    if (!seen.count("experiment." + k))
      config_error(exp_line, "experiment '" + ex + "' requires key '" + k + "'");
  if (interval) {
    if (!(cfg.x0 < cfg.x1))
      config_error(model_line, "interval models need x0 < x1");
  }
  if (cfg.model == "oscillator" && cfg.modes == 0) cfg.modes = 48;
  return cfg;
}

// ---------------------------------------------------------------------------
// Experiment execution.

namespace {

using bernstein::OptimizerConfig;
using bernstein::RatioReport;
using calculus::MultiplierSpec;
using models::ModelOperator;
using numerics::EigenSystem;

std::function<double(double)> potential_fn(const std::string& name) {
  if (name == "quadratic") return [](double x) { return x * x; };
  if (name == "cosine") return [](double x) { return 1.25 + std::cos(x); };
  if (name == "linear") return [](double x) { return 1.0 + x; };
  return {};
}

ModelOperator build_model(const ExperimentConfig& cfg, std::string& tag) {
  if (cfg.model == "circle") {
    tag = strf("circle(n=%d%s)", cfg.n,
               cfg.potential == "none" ? "" : (", potential=" + cfg.potential).c_str());
    return models::make_circle(cfg.n, potential_fn(cfg.potential));
  }
  if (cfg.model == "dirichlet") {
    tag = strf("dirichlet([%g,%g], n=%d, potential=%s)", cfg.x0, cfg.x1, cfg.n,
               cfg.potential.c_str());
    return models::make_dirichlet(cfg.x0, cfg.x1, cfg.n, potential_fn(cfg.potential));
  }
  if (cfg.model == "divergence") {
    tag = strf("divergence([%g,%g], n=%d, coefficient=%s, potential=%s)", cfg.x0,
               cfg.x1, cfg.n, cfg.coefficient.c_str(), cfg.potential.c_str());
    const bool sine = cfg.coefficient == "sine";
    auto flux = [sine](double x) {
      return sine ? 2.0 + std::sin(2.0 * M_PI * x) : 1.0;
    };
    return models::make_divergence(cfg.x0, cfg.x1, cfg.n, flux,
                                   potential_fn(cfg.potential));
  }
  tag = strf("oscillator(modes=%d)", cfg.modes);
  return models::make_oscillator(cfg.modes);
}

MultiplierSpec build_profile(const ExperimentConfig& cfg, const std::string& name) {
  if (name == "bump") return MultiplierSpec::bump(cfg.center, cfg.radius);
  if (name == "smooth_cutoff") return MultiplierSpec::smooth_cutoff();
  if (name == "tail_step") return MultiplierSpec::tail_step();
  return MultiplierSpec::power_decay(cfg.beta);
}

Vec dyadic(int lo, int hi) {
  Vec v;
  for (int e = lo; e <= hi; ++e) v.push_back(std::ldexp(1.0, e));
  return v;
}

double median(Vec v) {
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2]
                      : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

std::string witness_hash(const Vec& coeffs) {
  return strf("fnv1a:%016llx",
              static_cast<unsigned long long>(
                  fnv1a(coeffs.data(), coeffs.size() * sizeof(double))));
}

std::string exponent_str(double p) { return std::isinf(p) ? "inf" : num(p); }

// CSV assembly: `# schema=1` first, provenance comments, then the header row.
class Csv {
 public:
  Csv(const ExperimentConfig& cfg, const std::string& model_tag,
      const std::vector<std::string>& columns) {
    os_ << "# schema=1\n";
    os_ << "# tool=" << kToolName << " " << kToolVersion << "\n";
    os_ << "# config=fnv1a:" << strf("%016llx", static_cast<unsigned long long>(cfg.config_hash))
        << " seed=" << cfg.seed << "\n";
    os_ << "# experiment=" << cfg.experiment << " model=" << model_tag << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
      os_ << (i ? "," : "") << columns[i];
    os_ << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      os_ << (i ? "," : "") << cells[i];
    os_ << "\n";
    ++rows_;
  }
  int rows() const { return rows_; }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
  int rows_ = 0;
};

// Minimal self-contained chart: one polyline over a log2 x-axis.
std::string make_svg(const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const Vec& xs, const Vec& ys) {
  if (xs.size() < 2) return "";
  const double W = 640, H = 400, L = 70, R = 20, T = 36, B = 46;
  auto log2v = [](double v) { return std::log2(v); };
  double xlo = log2v(xs.front()), xhi = log2v(xs.front());
  double ylo = ys.front(), yhi = ys.front();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xlo = std::min(xlo, log2v(xs[i]));
    xhi = std::max(xhi, log2v(xs[i]));
    ylo = std::min(ylo, ys[i]);
    yhi = std::max(yhi, ys[i]);
  }
  if (xhi - xlo < 1e-12) xhi = xlo + 1.0;
  if (yhi - ylo < 1e-12 * std::max(1.0, std::fabs(yhi))) {
    ylo -= 1.0;
    yhi += 1.0;
  }
  const double pad = 0.05 * (yhi - ylo);
  ylo -= pad;
  yhi += pad;
  auto X = [&](double x) { return L + (log2v(x) - xlo) / (xhi - xlo) * (W - L - R); };
  auto Y = [&](double y) { return H - B - (y - ylo) / (yhi - ylo) * (H - T - B); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
        "viewBox=\"0 0 640 400\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
  os << strf("<text x=\"%.2f\" y=\"22\" font-family=\"sans-serif\" font-size=\"14\">%s</text>\n",
             L, title.c_str());
  os << strf("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
             L, H - B, W - R, H - B);
  os << strf("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
             L, T, L, H - B);
  os << strf("<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"12\">%s (log2 scale: %.3g .. %.3g)</text>\n",
             L, H - 12.0, xlabel.c_str(), xs.front(), xs.back());
  os << strf("<text x=\"8\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"12\">%s</text>\n",
             T - 8.0, ylabel.c_str());
  os << strf("<text x=\"8\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"11\">%.4g</text>\n",
             Y(yhi - pad) + 4.0, yhi - pad);
  os << strf("<text x=\"8\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"11\">%.4g</text>\n",
             Y(ylo + pad) + 4.0, ylo + pad);
  os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i)
    os << strf("%.2f,%.2f ", X(xs[i]), Y(ys[i]));
  os << "\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    os << strf("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"#1f77b4\"/>\n",
               X(xs[i]), Y(ys[i]));
  os << "</svg>\n";
  return os.str();
}

void check(RunRecord& rec, const std::string& name, bool pass,
           const std::string& detail) {
  rec.checks.push_back({name, pass, detail});
}

void tail_check(RunRecord& rec, const std::string& label, const Vec& vals) {
  const double med = median(vals);
  check(rec, label + " sweep stays bounded", vals.back() < 2.0 * med,
        strf("last value %s vs median %s", num(vals.back()).c_str(),
             num(med).c_str()));
}

// --------------------------------------------------------------------------

void run_bernstein(const ExperimentConfig& cfg, const ModelOperator& M,
                   RunRecord& rec) {
  const int top = *std::max_element(cfg.bands.begin(), cfg.bands.end());
  const EigenSystem E = M.eigensystem(top);
  OptimizerConfig oc;
  oc.seed = cfg.seed;
  Csv csv(cfg, rec.model_tag,
          {"N", "lambda_N", "ratio_lower", "ratio_upper", "witness_hash"});
  Vec xs, ys;
  double worst_p2 = 0.0, max_ratio = 0.0;
  bool cert_ok = true, finite = true;
  for (const int N : cfg.bands) {
    const RatioReport rep = bernstein::max_bernstein_ratio(M, E, N, cfg.p, oc);
    csv.row({num(N), num(rep.lambda_top), num(rep.achieved), num(rep.upper),
             witness_hash(rep.coeffs)});
    xs.push_back(N);
    ys.push_back(rep.achieved);
    finite = finite && std::isfinite(rep.achieved);
    max_ratio = std::max(max_ratio, rep.achieved);
    if (cfg.p == 2.0) worst_p2 = std::max(worst_p2, std::fabs(rep.achieved - 1.0));
    if (rep.upper > 0.0) cert_ok = cert_ok && rep.achieved <= rep.upper * (1.0 + 1e-9);
  }
  rec.csv = csv.str();
  rec.rows = csv.rows();
  rec.svg = make_svg("band gradient constant: " + rec.model_tag,
                     "band size N", "ratio", xs, ys);
  check(rec, "band constants finite", finite, strf("max %s", num(max_ratio).c_str()));
  check(rec, "certificate dominates witness", cert_ok, "upper >= achieved on every band");
  if (cfg.p == 2.0)
    check(rec, "square-mean constant equals 1", worst_p2 <= 1e-9,
          strf("worst |ratio-1| = %s", num(worst_p2).c_str()));
}

void run_reverse(const ExperimentConfig& cfg, const ModelOperator& M,
                 RunRecord& rec) {
  const int top = *std::max_element(cfg.bands.begin(), cfg.bands.end());
  const EigenSystem E =
      M.eigensystem(std::min(cfg.tail_factor * top + 1, M.dof()));
  OptimizerConfig oc;
  oc.seed = cfg.seed;
  Csv csv(cfg, rec.model_tag,
          {"N", "tail_hi", "lambda_lo", "ratio", "witness_hash"});
  Vec xs, ys;
  bool finite = true;
  double worst_q2 = 0.0, lo = kInf, hi = 0.0;
  for (const int N : cfg.bands) {
    const int tail_hi = std::min(cfg.tail_factor * N, E.modes() - 1);
    if (tail_hi <= N)
      throw PreconditionError(strf("reverse: tail band [%d, %d] is empty at the "
                                   "resolved mode count %d", N, tail_hi, E.modes()));
    const RatioReport rep = bernstein::max_reverse_ratio(M, E, N, tail_hi, cfg.q, oc);
    csv.row({num(N), num(tail_hi), num(E.lambda(N)), num(rep.achieved),
             witness_hash(rep.coeffs)});
    xs.push_back(N);
    ys.push_back(rep.achieved);
    finite = finite && std::isfinite(rep.achieved);
    lo = std::min(lo, rep.achieved);
    hi = std::max(hi, rep.achieved);
    if (cfg.q == 2.0) worst_q2 = std::max(worst_q2, std::fabs(rep.achieved - 1.0));
  }
  rec.csv = csv.str();
  rec.rows = csv.rows();
  rec.svg = make_svg("reverse band constant: " + rec.model_tag,
                     "tail bottom mode N", "ratio", xs, ys);
  check(rec, "reverse constants finite", finite,
        strf("range [%s, %s]", num(lo).c_str(), num(hi).c_str()));
  if (cfg.bands.size() > 1)
    check(rec, "constants uniform across bands", hi < 2.0 * lo,
          strf("spread %.3fx", hi / lo));
  if (cfg.q == 2.0)
    check(rec, "square-mean tail constant equals 1", worst_q2 <= 1e-9,
          strf("worst |ratio-1| = %s", num(worst_q2).c_str()));
}

void run_lplq(const ExperimentConfig& cfg, const ModelOperator& M,
              RunRecord& rec) {
  const int top = *std::max_element(cfg.bands.begin(), cfg.bands.end());
  const EigenSystem E = M.eigensystem(top);
  OptimizerConfig oc;
  oc.seed = cfg.seed;
  const double ip = std::isinf(cfg.p) ? 0.0 : 1.0 / cfg.p;
  const double iq = std::isinf(cfg.q) ? 0.0 : 1.0 / cfg.q;
  const double e = 1.0 + std::fabs(ip - iq);
  Csv csv(cfg, rec.model_tag,
          {"N", "lambda_N", "normalized_ratio", "raw_max", "witness_hash"});
  Vec lams, raws, xs, ys;
  bool finite = true;
  for (const int N : cfg.bands) {
    const RatioReport rep = bernstein::max_lp_lq_ratio(M, E, N, cfg.p, cfg.q, oc);
    const double raw = rep.achieved * std::pow(rep.lambda_top, e);
    csv.row({num(N), num(rep.lambda_top), num(rep.achieved), num(raw),
             witness_hash(rep.coeffs)});
    lams.push_back(rep.lambda_top);
    raws.push_back(raw);
    xs.push_back(N);
    ys.push_back(rep.achieved);
    finite = finite && std::isfinite(rep.achieved);
  }
  rec.csv = csv.str();
  rec.rows = csv.rows();
  rec.svg = make_svg(strf("mixed-norm (%s,%s) constant: %s",
                          exponent_str(cfg.p).c_str(), exponent_str(cfg.q).c_str(),
                          rec.model_tag.c_str()),
                     "band size N", "normalized ratio", xs, ys);
  check(rec, "normalized ratios finite", finite, "");
  if (cfg.bands.size() >= 3) {
    const auto fit = bernstein::fit_slope(lams, raws);
    check(rec, strf("growth exponent near %.3g", e),
          std::fabs(fit.slope - e) <= 0.2,
          strf("fitted slope %.4f (target %.3g, max log deviation %.2g)",
               fit.slope, e, fit.residual));
  }
}

void run_semiclassical(const ExperimentConfig& cfg, const ModelOperator& M,
                       RunRecord& rec) {
  const EigenSystem E = M.eigensystem(cfg.modes > 0 ? cfg.modes : -1);
  const MultiplierSpec psi = build_profile(cfg, cfg.profile);
  const Vec hs = dyadic(cfg.h_lo, cfg.h_hi);
  const auto pts = bernstein::semiclassical_scan(M, E, psi, hs, cfg.p);
  Csv csv(cfg, rec.model_tag, {"h", "grad_norm", "pot_norm", "value"});
  Vec xs, ys;
  double sup = 0.0;
  for (const auto& pt : pts) {
    csv.row({num(pt.param), num(pt.grad_norm), num(pt.pot_norm), num(pt.value)});
    xs.push_back(pt.param);
    ys.push_back(pt.value);
    sup = std::max(sup, pt.value);
  }
  rec.csv = csv.str();
  rec.rows = csv.rows();
  rec.svg = make_svg("forward sweep (" + psi.name() + "): " + rec.model_tag, "h",
                     "sqrt(h) * first-order norm", xs, ys);
  check(rec, "sweep supremum finite", std::isfinite(sup) && sup >= 0.0,
        strf("sup %s", num(sup).c_str()));
  tail_check(rec, psi.name(), ys);
}

void run_semiclassical_reverse(const ExperimentConfig& cfg,
                               const ModelOperator& M, RunRecord& rec) {
  const EigenSystem E = M.eigensystem(cfg.modes > 0 ? cfg.modes : -1);
  const MultiplierSpec psi = build_profile(cfg, cfg.profile);
  const Vec hs = dyadic(cfg.h_lo, cfg.h_hi);
  const auto pts = bernstein::semiclassical_reverse_scan(M, E, psi, hs, cfg.q,
                                                         cfg.trials, cfg.seed);
  Csv csv(cfg, rec.model_tag, {"h", "operator_value", "random_max"});
  Vec xs, ys;
  bool witness_ok = true;
  double sup = 0.0;
  for (const auto& pt : pts) {
    csv.row({num(pt.h), num(pt.operator_value), num(pt.random_max)});
    xs.push_back(pt.h);
    ys.push_back(pt.operator_value);
    sup = std::max(sup, pt.operator_value);
    witness_ok = witness_ok &&
                 pt.random_max <= pt.operator_value * (1.0 + 1e-9) + 1e-12;
  }
  rec.csv = csv.str();
  rec.rows = csv.rows();
  rec.svg = make_svg("reverse sweep (" + psi.name() + "): " + rec.model_tag, "h",
                     "operator value / sqrt(h)", xs, ys);
  check(rec, "sweep supremum finite", std::isfinite(sup), strf("sup %s", num(sup).c_str()));
  check(rec, "random witnesses below the operator value", witness_ok, "");
  tail_check(rec, psi.name(), ys);
}

void run_regularity(const ExperimentConfig& cfg, const ModelOperator& M,
                    RunRecord& rec) {
  const EigenSystem E = M.eigensystem(cfg.modes > 0 ? cfg.modes : -1);
  const Vec ts = dyadic(cfg.t_lo, cfg.t_hi);
  const auto pts = bernstein::regularity_scan(M, E, ts, cfg.p);
  Csv csv(cfg, rec.model_tag, {"t", "grad_norm", "pot_norm", "value"});
  Vec xs, ys;
  double sup = 0.0, worst_cap = 0.0;
  for (const auto& pt : pts) {
    csv.row({num(pt.param), num(pt.grad_norm), num(pt.pot_norm), num(pt.value)});
    xs.push_back(pt.param);
    ys.push_back(pt.value);
    sup = std::max(sup, pt.value);
    worst_cap = std::max(worst_cap, pt.value);
  }
  rec.csv = csv.str();
  rec.rows = csv.rows();
  rec.svg = make_svg("heat-gradient regularity: " + rec.model_tag, "t",
                     "sqrt(t) * first-order norm", xs, ys);
  check(rec, "sweep supremum finite", std::isfinite(sup), strf("sup %s", num(sup).c_str()));
  if (cfg.p == 2.0)
    check(rec, "square-mean values below (2e)^{-1/2}",
          worst_cap <= 1.0 / std::sqrt(2.0 * M_E) + 1e-10,
          strf("max %s vs %s", num(worst_cap).c_str(),
               num(1.0 / std::sqrt(2.0 * M_E)).c_str()));
}

void run_uniformity(const ExperimentConfig& cfg, const ModelOperator& M,
                    RunRecord& rec) {
  const EigenSystem E = M.eigensystem(cfg.modes > 0 ? cfg.modes : -1);
  const MultiplierSpec psi = build_profile(cfg, cfg.profile);
  const Vec hs = dyadic(cfg.h_lo, cfg.h_hi);
  const auto rep = calculus::uniformity_scan(M, E, psi, hs, cfg.p);
  Csv csv(cfg, rec.model_tag, {"h", "norm_lower", "norm_upper", "exact"});
  Vec xs, ys;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const auto& nb = rep.per_h[i];
    csv.row({num(hs[i]), num(nb.lower), num(nb.upper), nb.exact ? "1" : "0"});
    xs.push_back(hs[i]);
    ys.push_back(nb.value());
  }
  rec.csv = csv.str();
  rec.rows = csv.rows();
  rec.svg = make_svg("multiplier uniformity (" + psi.name() + "): " + rec.model_tag,
                     "h", "operator norm", xs, ys);
  check(rec, "sweep supremum finite", std::isfinite(rep.sup),
        strf("sup %s at h=%s", num(rep.sup).c_str(), num(rep.argmax_h).c_str()));
  if (cfg.p == 2.0) {
    double prof_max = 0.0;
    const double x_hi = std::ldexp(1.0, cfg.h_hi) * E.lambda_sq.back();
    for (int i = 0; i <= 4096; ++i)
      prof_max = std::max(prof_max, std::fabs(psi(x_hi * i / 4096.0)));
    check(rec, "square-mean sup bounded by the profile maximum",
          rep.sup <= prof_max + 1e-12,
          strf("sup %s vs max|psi| %s", num(rep.sup).c_str(), num(prof_max).c_str()));
  }
}

void run_holomorphic(const ExperimentConfig& cfg, const ModelOperator& M,
                     RunRecord& rec) {
  const EigenSystem E = M.eigensystem(cfg.modes > 0 ? cfg.modes : -1);
  const Vec ts = dyadic(cfg.t_lo, cfg.t_hi);
  const double theta = cfg.theta * M_PI;
  const auto scan = calculus::holomorphic_ray_scan(M, E, theta, cfg.q, ts);
  Csv csv(cfg, rec.model_tag, {"t", "norm_lower", "norm_upper", "exact"});
  Vec xs, ys;
  double worst2 = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& nb = scan.per_t[i];
    csv.row({num(ts[i]), num(nb.lower), num(nb.upper), nb.exact ? "1" : "0"});
    xs.push_back(ts[i]);
    ys.push_back(nb.value());
    worst2 = std::max(worst2, nb.lower);
  }
  rec.csv = csv.str();
  rec.rows = csv.rows();
  rec.svg = make_svg(strf("sector ray norms (theta=%g pi): %s", cfg.theta,
                          rec.model_tag.c_str()),
                     "t", "semigroup norm", xs, ys);
  check(rec, "sector constant finite", std::isfinite(scan.fitted_c),
        strf("fitted constant %s", num(scan.fitted_c).c_str()));
  if (cfg.q == 2.0)
    check(rec, "square-mean ray norms at most 1", worst2 <= 1.0 + 1e-12,
          strf("max %s", num(worst2).c_str()));
}

void run_kernel_audit(const ExperimentConfig& cfg, const ModelOperator& M,
                      RunRecord& rec) {
  const EigenSystem E = M.eigensystem(cfg.modes > 0 ? cfg.modes : -1);
  const bool osc = M.coefficient_space();
  const Vec* ox = osc ? &M.grid.x : nullptr;
  const Vec ts = dyadic(cfg.t_lo, cfg.t_hi);
  std::vector<std::string> cols = {"t",          "ck_defect", "envelope_C",
                                   "grad_mass",  "mass_ratio", "diag_sup"};
  if (osc) cols.push_back("mehler_rel");
  Csv csv(cfg, rec.model_tag, cols);
  Vec xs, envs;
  std::vector<kernels::KernelTable> tables;
  double worst_ck = 0.0, grig_lo = kInf, grig_hi = 0.0, worst_mehler = 0.0;
  for (const double t : ts) {
    // The composition check runs on the eigenfunction-series table, where the
    // semigroup identity is exact by orthonormality.  Envelope and on-diagonal
    // audits on the oscillator use the closed-form table instead: a truncated
    // series carries e^{-2Kt} ripples that e^{+c d^2/t} would amplify into
    // pure artifact at small t.
    auto Kt = kernels::heat_kernel_table(M, E, t, ox);
    const auto K2t = kernels::heat_kernel_table(M, E, 2.0 * t, ox);
    const double ck = kernels::chapman_kolmogorov_defect(Kt, Kt, K2t);
    auto audit = osc ? kernels::mehler_table(M.grid.x, M.grid.w, t) : std::move(Kt);
    const double env = kernels::gaussian_bound_fit(audit, cfg.c).C;
    const auto G = osc ? kernels::mehler_gradient_table(M.grid.x, M.grid.w, t)
                       : kernels::heat_gradient_table(M, E, t, ox);
    const double grig =
        kernels::grigoryan_integral(G, static_cast<int>(G.y.size()) / 2, cfg.c0)
            .ratio;
    const double mass = kernels::gaussian_mass_check(M, t, 1.0).max_ratio;
    const double diag = audit.max_on_diagonal();
    std::vector<std::string> row = {num(t),    num(ck),   num(env),
                                    num(grig), num(mass), num(diag)};
    if (osc) {
      double dmax = 0.0, emax = 0.0;
      for (std::size_t i = 0; i < audit.k.a.size(); ++i) {
        dmax = std::max(dmax, std::fabs(Kt.k.a[i] - audit.k.a[i]));
        emax = std::max(emax, std::fabs(audit.k.a[i]));
      }
      const double rel = dmax / emax;
      row.push_back(num(rel));
      // compare the series against the closed form only where the mode
      // cutoff has resolved this t
      if (2.0 * t * E.modes() >= 23.0) worst_mehler = std::max(worst_mehler, rel);
    }
    csv.row(row);
    xs.push_back(t);
    envs.push_back(env);
    tables.push_back(std::move(audit));
    worst_ck = std::max(worst_ck, ck);
    grig_lo = std::min(grig_lo, grig);
    grig_hi = std::max(grig_hi, grig);
  }
  rec.csv = csv.str();
  rec.rows = csv.rows();
  rec.svg = make_svg("Gaussian envelope constant: " + rec.model_tag, "t",
                     strf("smallest C at exponent %g", cfg.c), xs, envs);
  check(rec, "composition defect at most 1e-9", worst_ck <= 1e-9,
        strf("max defect %s", num(worst_ck).c_str()));
  double env_lo = kInf, env_hi = 0.0;
  for (const double v : envs) {
    env_lo = std::min(env_lo, v);
    env_hi = std::max(env_hi, v);
  }
  check(rec, "envelope constant uniform within 2x", env_hi < 2.0 * env_lo,
        strf("spread %.3fx over t", env_hi / env_lo));
  check(rec, "gradient-mass ratio uniform within 2x", grig_hi < 2.0 * grig_lo,
        strf("spread %.3fx over t", grig_hi / grig_lo));
  if (tables.size() >= 4) {
    const auto fit = kernels::on_diagonal_fit(tables);
    check(rec, "on-diagonal dimension near 1", std::fabs(fit.m - 1.0) <= 0.05,
          strf("fitted m = %.4f", fit.m));
  }
  if (osc)
    check(rec, "eigenfunction series matches the closed form when resolved",
          worst_mehler <= 1e-8,
          strf("max relative gap %s on resolved rows", num(worst_mehler).c_str()));
}

void run_equivalence(const ExperimentConfig& cfg, const ModelOperator& M,
                     RunRecord& rec) {
  const EigenSystem E = M.eigensystem(cfg.modes > 0 ? cfg.modes : -1);
  const MultiplierSpec psi1 = build_profile(cfg, cfg.profile);
  const MultiplierSpec psi2 = build_profile(cfg, cfg.profile2);
  const Vec hs = dyadic(cfg.h_lo, cfg.h_hi);
  const auto audit = bernstein::psi_equivalence_audit(M, E, psi1, psi2, hs, cfg.p);
  Csv csv(cfg, rec.model_tag, {"sup_1", "sup_2", "ratio_12", "ratio_21"});
  csv.row({num(audit.sup_1), num(audit.sup_2), num(audit.ratio_12),
           num(audit.ratio_21)});
  rec.csv = csv.str();
  rec.rows = csv.rows();
  check(rec, "sweep suprema comparable in both directions",
        std::isfinite(audit.ratio_12) && std::isfinite(audit.ratio_21) &&
            audit.ratio_12 > 0.0 && audit.ratio_21 > 0.0,
        strf("%s: %s, %s: %s, ratio %s / %s", psi1.name().c_str(),
             num(audit.sup_1).c_str(), psi2.name().c_str(),
             num(audit.sup_2).c_str(), num(audit.ratio_12).c_str(),
             num(audit.ratio_21).c_str()));
}

}  // namespace

RunRecord run_experiment(const ExperimentConfig& cfg) {
  RunRecord rec;
  rec.experiment = cfg.experiment;
  rec.config_hash = cfg.config_hash;
  rec.seed = cfg.seed;
  const ModelOperator M = build_model(cfg, rec.model_tag);
  if (cfg.experiment == "bernstein")
    run_bernstein(cfg, M, rec);
  else if (cfg.experiment == "reverse")
    run_reverse(cfg, M, rec);
  else if (cfg.experiment == "lplq")
    run_lplq(cfg, M, rec);
  else if (cfg.experiment == "semiclassical")
    run_semiclassical(cfg, M, rec);
  else if (cfg.experiment == "semiclassical-reverse")
    run_semiclassical_reverse(cfg, M, rec);
  else if (cfg.experiment == "regularity")
    run_regularity(cfg, M, rec);
  else if (cfg.experiment == "multiplier-uniformity")
    run_uniformity(cfg, M, rec);
  else if (cfg.experiment == "holomorphic")
    run_holomorphic(cfg, M, rec);
  else if (cfg.experiment == "kernel-audit")
    run_kernel_audit(cfg, M, rec);
  else
    run_equivalence(cfg, M, rec);
  return rec;
}

// ---------------------------------------------------------------------------
// Command-line driver.

namespace {

void print_catalog(std::ostream& out, const CatalogEntry* first,
                   const CatalogEntry* last) {
  std::size_t width = 0;
  for (const auto* e = first; e != last; ++e)
    width = std::max(width, std::strlen(e->name));
  for (const auto* e = first; e != last; ++e) {
    out << e->name;
    for (std::size_t i = std::strlen(e->name); i < width + 2; ++i) out << ' ';
    out << e->blurb << "\n";
  }
}

int selftest(std::ostream& out) {
  using bernstein::RatioReport;
  {  // square-mean band constant is exactly 1 at the top mode
    const auto M = models::make_circle(64);
    const auto E = M.eigensystem(9);
    Vec e9(9, 0.0);
    e9.back() = 1.0;
    const double r = bernstein::bernstein_ratio(M, E, e9, 2.0);
    if (std::fabs(r - 1.0) > 1e-12)
      throw AccuracyError(strf("selftest: band ratio at the top mode = %.15f", r));
    out << "ok: square-mean band ratio at the top mode = 1\n";
  }
  {  // reverse square-mean constant on a tail band
    const auto M = models::make_circle(128);
    const auto E = M.eigensystem(33);
    OptimizerConfig oc;
    oc.restarts = 4;
    oc.iterations = 100;
    const RatioReport rep = bernstein::max_reverse_ratio(M, E, 7, 32, 2.0, oc);
    if (std::fabs(rep.achieved - 1.0) > 1e-10)
      throw AccuracyError(strf("selftest: reverse constant = %.12f", rep.achieved));
    out << "ok: reverse square-mean tail constant = 1\n";
  }
  {  // closed-form oscillator kernel against a converged eigenfunction sum
    const auto M = models::make_oscillator(40);
    const auto E = M.eigensystem();
    const auto K = kernels::heat_kernel_table(M, E, 0.5, &M.grid.x);
    const auto X = kernels::mehler_table(M.grid.x, M.grid.w, 0.5);
    double dmax = 0.0, emax = 0.0;
    for (std::size_t i = 0; i < K.k.a.size(); ++i) {
      dmax = std::max(dmax, std::fabs(K.k.a[i] - X.k.a[i]));
      emax = std::max(emax, std::fabs(X.k.a[i]));
    }
    if (dmax > 1e-10 * emax)
      throw AccuracyError(strf("selftest: kernel tables differ by %.3e", dmax / emax));
    out << "ok: oscillator kernel matches its eigenfunction series\n";
  }
  {  // multiplier sweep at the square-mean exponent is exactly the symbol sup
    const auto M = models::make_circle(64);
    const auto E = M.eigensystem();
    const auto rep = calculus::uniformity_scan(
        M, E, calculus::MultiplierSpec::smooth_cutoff(), dyadic(-4, 2), 2.0);
    if (std::fabs(rep.sup - 1.0) > 1e-12)
      throw AccuracyError(strf("selftest: uniformity sup = %.15f", rep.sup));
    out << "ok: square-mean multiplier sweep sup = 1\n";
  }
  out << "selftest passed\n";
  return 0;
}

std::string render_summary(const RunRecord& rec, const std::string& csv_path,
                           const std::string& svg_path) {
  std::ostringstream os;
  os << kToolName << " " << kToolVersion << "\n";
  os << "experiment: " << rec.experiment << "\n";
  os << "model:      " << rec.model_tag << "\n";
  os << strf("config:     fnv1a:%016llx  seed: %llu  threads: %d\n",
             static_cast<unsigned long long>(rec.config_hash),
             static_cast<unsigned long long>(rec.seed), sweep_threads());
  os << "artifacts:  " << csv_path << " (" << rec.rows << " rows)";
  if (!svg_path.empty()) os << ", " << svg_path;
  os << "\n";
  os << strf("wall:       %.2f s (informational; excluded from the determinism "
             "contract)\n", rec.wall_seconds);
  os << "checks:\n";
  for (const auto& c : rec.checks) {
    os << "  [" << (c.pass ? "PASS" : "FLAG") << "] " << c.name;
    if (!c.detail.empty()) os << ": " << c.detail;
    os << "\n";
  }
  os << "result: " << (rec.flagged() ? "FLAG" : "PASS") << "\n";
  return os.str();
}

int run_subcommand(const std::string& config_path, const std::string& out_dir,
                   bool svg_on, bool strict, int threads, bool seed_set,
                   std::uint64_t seed_override, std::ostream& out,
                   std::ostream& err) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    err << "error: cannot open config '" << config_path << "'\n";
    return 2;
  }
  std::ostringstream buf;
  buf << in.rdbuf();

  ExperimentConfig cfg;
  try {
    cfg = validate_config(parse_config_text(buf.str()));
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  cfg.out_dir = out_dir;
  cfg.svg = svg_on;
  cfg.strict = strict;
  cfg.threads = threads;
  if (seed_set) cfg.seed = seed_override;
  cfg.config_hash = fnv1a(buf.str().data(), buf.str().size());
  cfg.config_hash = fnv1a(&cfg.seed, sizeof cfg.seed, cfg.config_hash);
  set_sweep_threads(resolve_threads(cfg.threads));

  RunRecord rec;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    rec = run_experiment(cfg);
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const UnsupportedError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  namespace fs = std::filesystem;
  const std::string base = cfg.experiment + "-" + cfg.model;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) {
    err << "error: cannot create output directory '" << cfg.out_dir << "'\n";
    return 2;
  }
  auto write_file = [&](const std::string& name, const std::string& body) {
    const std::string path = (fs::path(cfg.out_dir) / name).string();
    std::ofstream f(path, std::ios::binary);
    f << body;
    return path;
  };
  const std::string csv_path = write_file(base + ".csv", rec.csv);
  std::string svg_path;
  if (cfg.svg && !rec.svg.empty()) svg_path = write_file(base + ".svg", rec.svg);
  const std::string summary = render_summary(rec, csv_path, svg_path);
  write_file(base + "-summary.txt", summary);
  out << summary;
  if (rec.flagged() && cfg.strict) return 4;
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{std::string(kToolName) +
               " - discrete Bernstein / heat-multiplier laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", svg_mode = "on";
  std::uint64_t seed_override = 0;
  bool strict = false;
  int threads = 0;
  auto* run = app.add_subcommand("run", "run one experiment from a config file");
  run->add_option("config", config_path, "config file path")->required();
  run->add_option("--out", out_dir, "output directory (default .)");
  auto* seed_opt = run->add_option("--seed", seed_override,
                                   "override the experiment seed");
  run->add_option("--threads", threads,
                  "sweep thread budget (0 = auto via BERNSTEIN_LAB_THREADS)")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--svg", svg_mode, "write SVG charts (on|off)")
      ->check(CLI::IsMember({"on", "off"}));
  run->add_flag("--strict", strict, "exit 4 when any check is FLAGged");
  auto* lm = app.add_subcommand("list-models", "print the model catalog");
  auto* le = app.add_subcommand("list-experiments", "print the experiment catalog");
  auto* st = app.add_subcommand("selftest", "run fast built-in sanity checks");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (lm->parsed()) {
      print_catalog(out, std::begin(kModels), std::end(kModels));
      return 0;
    }
    if (le->parsed()) {
      print_catalog(out, std::begin(kExperiments), std::end(kExperiments));
      return 0;
    }
    if (st->parsed()) return selftest(out);
    return run_subcommand(config_path, out_dir, svg_mode == "on", strict,
                          threads, !seed_opt->empty(), seed_override, out, err);
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace bernlab::cli
