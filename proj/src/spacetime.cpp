#include "bellbench/spacetime.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "bellbench/error.hpp"

namespace bell {
namespace {

bool parse_number(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool valid_name(const std::string& s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) return false;
  for (char ch : s) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_') return false;
  }
  return true;
}

std::string fmt(double v, int prec = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

}  // namespace

void SpacetimeEvent::validate() const {
  if (!std::isfinite(position_m) || !std::isfinite(t_start_ns) || !std::isfinite(t_end_ns)) {
    throw InvalidParameter("event " + label + ": non-finite value");
  }
  if (t_start_ns > t_end_ns) throw InvalidParameter("event " + label + ": start after end");
  if (!(uncertainty_ns >= 0.0)) throw InvalidParameter("event " + label + ": negative uncertainty");
}

Margin light_cone_margin(const SpacetimeEvent& cause, const SpacetimeEvent& effect, double c) {
  return {std::abs(effect.position_m - cause.position_m) / c - (effect.t_end_ns - cause.t_start_ns),
          std::hypot(cause.uncertainty_ns, effect.uncertainty_ns)};
}

LinearForm LinearForm::parse(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> tokens;
  for (std::string t; in >> t;) tokens.push_back(t);
  if (tokens.empty()) throw InvalidParameter("empty expression");

  LinearForm f;
  double sign = 1.0;
  bool expect_term = true;
  for (std::string tok : tokens) {
    if (!expect_term) {
      if (tok == "+") sign = 1.0;
      else if (tok == "-") sign = -1.0;
      else throw InvalidParameter("expected + or - in '" + text + "', got '" + tok + "'");
      expect_term = true;
      continue;
    }
    if (tok == "-" || tok == "+") {
      if (tok == "-") sign = -sign;
      continue;
    }
    if (tok[0] == '-' && tok.size() > 1 && !std::isdigit(static_cast<unsigned char>(tok[1])) && tok[1] != '.') {
      sign = -sign;
      tok.erase(0, 1);
    }
    double v = 0.0;
    if (parse_number(tok, v)) {
      f.constant += sign * v;
    } else if (valid_name(tok)) {
      f.terms[tok] += sign;
    } else {
      throw InvalidParameter("bad term '" + tok + "' in '" + text + "'");
    }
    sign = 1.0;
    expect_term = false;
  }
  if (expect_term) throw InvalidParameter("dangling operator in '" + text + "'");
  return f;
}

LinearForm& LinearForm::operator+=(const LinearForm& o) {
  constant += o.constant;
  for (const auto& [k, v] : o.terms) terms[k] += v;
  return *this;
}

LinearForm LinearForm::operator-() const {
  LinearForm f;
  f.constant = -constant;
  for (const auto& [k, v] : terms) f.terms[k] = -v;
  return f;
}

double LinearForm::value(const std::map<std::string, BudgetItem>& items) const {
  double v = constant;
  for (const auto& [name, coef] : terms) {
    auto it = items.find(name);
    if (it == items.end()) throw InvalidParameter("unknown budget item '" + name + "'");
    v += coef * it->second.value_ns;
  }
  return v;
}

double LinearForm::sd(const std::map<std::string, BudgetItem>& items) const {
  double s2 = 0.0;
  for (const auto& [name, coef] : terms) {
    auto it = items.find(name);
    if (it == items.end()) throw InvalidParameter("unknown budget item '" + name + "'");
    const double t = coef * it->second.sd_ns;
    s2 += t * t;
  }
  return std::sqrt(s2);
}

SpacetimeConfig SpacetimeConfig::from_config(const Config& cfg) {
  SpacetimeConfig sc;
  sc.speed_of_light = cfg.get_double("speed_of_light", kSpeedOfLight);
  sc.k = cfg.get_double("audit.k", 3.0);

  for (const std::string& key : cfg.keys_with_prefix("item.")) {
    BudgetItem item;
    item.name = key.substr(5);
    if (!valid_name(item.name)) throw InvalidParameter("bad item name '" + item.name + "'");
    std::istringstream in(cfg.raw(key));
    std::string v, sd, flag;
    in >> v >> sd >> flag;
    if (!parse_number(v, item.value_ns) || !parse_number(sd, item.sd_ns)) {
      throw InvalidParameter(key + ": expected '<value_ns> <sd_ns> [estimated]'");
    }
    if (!flag.empty()) {
      if (flag != "estimated") throw InvalidParameter(key + ": unknown flag '" + flag + "'");
      item.estimated = true;
    }
    std::string extra;
    if (in >> extra) throw InvalidParameter(key + ": trailing text");
    sc.items[item.name] = item;
  }

  for (const std::string& key : cfg.keys_with_prefix("event.")) {
    const std::string rest = key.substr(6);
    const auto dot = rest.rfind('.');
    if (dot == std::string::npos) throw InvalidParameter("bad event key '" + key + "'");
    const std::string label = rest.substr(0, dot);
    const std::string field = rest.substr(dot + 1);
    EventSpec& ev = sc.events[label];
    ev.label = label;
    if (field == "position") ev.position_m = cfg.get_double(key);
    else if (field == "start") ev.start = LinearForm::parse(cfg.raw(key));
    else if (field == "end") ev.end = LinearForm::parse(cfg.raw(key));
    else throw InvalidParameter("unknown event field '" + key + "'");
  }
  sc.validate();
  return sc;
}

void SpacetimeConfig::validate() const {
  if (!(speed_of_light > 0.0) || !std::isfinite(speed_of_light)) throw InvalidParameter("speed_of_light must be > 0");
  if (!(k >= 0.0) || !std::isfinite(k)) throw InvalidParameter("audit.k must be >= 0");
  for (const auto& [name, item] : items) {
    if (!std::isfinite(item.value_ns) || !(item.sd_ns >= 0.0) || !std::isfinite(item.sd_ns)) {
      throw InvalidParameter("item." + name + ": invalid value or sd");
    }
  }
  for (const char* label : {"E", "a", "b", "A", "B"}) {
    if (!has_event(label)) throw InvalidParameter(std::string("missing required event '") + label + "'");
  }
  for (const auto& [label, ev] : events) event(label).validate();
}

SpacetimeEvent SpacetimeConfig::event(const std::string& label) const {
  auto it = events.find(label);
  if (it == events.end()) throw InvalidParameter("missing event '" + label + "'");
  const EventSpec& s = it->second;
  SpacetimeEvent e;
  e.label = label;
  e.position_m = s.position_m;
  e.t_start_ns = s.start.value(items);
  e.t_end_ns = s.end.value(items);
  e.uncertainty_ns = std::max(s.start.sd(items), s.end.sd(items));
  return e;
}

Margin SpacetimeConfig::margin(const std::string& cause, const std::string& effect) const {
  const EventSpec& c = events.at(cause);
  const EventSpec& e = events.at(effect);
  LinearForm dt = e.end;
  dt += -c.start;
  return {std::abs(e.position_m - c.position_m) / speed_of_light - dt.value(items), dt.sd(items)};
}

void SpacetimeConfig::shift_times(double dt_ns) {
  for (auto& [label, ev] : events) {
    ev.start.constant += dt_ns;
    ev.end.constant += dt_ns;
  }
}

void SpacetimeConfig::scale_uncertainties(double factor) {
  for (auto& [name, item] : items) item.sd_ns *= factor;
}

const SeparationCheck& AuditReport::separation(const std::string& name) const {
  for (const auto& s : separations) {
    if (s.name == name) return s;
  }
  throw InvalidParameter("no separation named '" + name + "'");
}

AuditReport verify_config(const SpacetimeConfig& cfg) {
  cfg.validate();
  AuditReport rep;
  rep.k = cfg.k;
  const std::pair<const char*, const char*> pairs[] = {{"a", "B"}, {"b", "A"}, {"E", "a"}, {"E", "b"}};
  for (const auto& [cause, effect] : pairs) {
    SeparationCheck s;
    s.cause = cause;
    s.effect = effect;
    s.name = std::string(cause) + "->" + effect;
    s.margin = cfg.margin(cause, effect);
    s.positive = s.margin.value_ns > 0.0;
    s.significant = s.margin.value_ns >= cfg.k * s.margin.sd_ns;
    if (!s.positive) {
      rep.flags.push_back(s.name + ": margin " + fmt(s.margin.value_ns) + " ns is not positive");
    } else if (!s.significant) {
      rep.flags.push_back(s.name + ": margin " + fmt(s.margin.value_ns) + " ns is below " + fmt(cfg.k, 1) +
                          " sd (" + fmt(s.margin.sd_ns) + " ns)");
    }
    rep.separations.push_back(s);
  }
  for (const char* w : {"A", "B"}) {
    const std::string photons = std::string("photons_") + w;
    if (!cfg.has_event(photons)) continue;
    const SpacetimeEvent win = cfg.event(w);
    const SpacetimeEvent ph = cfg.event(photons);
    ClosureCheck c;
    c.window = w;
    c.photons = photons;
    c.slack_start_ns = ph.t_start_ns - win.t_start_ns;
    c.slack_end_ns = win.t_end_ns - ph.t_end_ns;
    c.inside = c.slack_start_ns >= 0.0 && c.slack_end_ns >= 0.0;
    if (!c.inside) rep.flags.push_back(photons + " extends outside window " + w);
    rep.closures.push_back(c);
  }
  return rep;
}

nlohmann::json AuditReport::to_json() const {
  nlohmann::json j;
  j["k"] = k;
  j["passed"] = passed();
  j["separations"] = nlohmann::json::array();
  for (const auto& s : separations) {
    j["separations"].push_back({{"name", s.name},
                                {"cause", s.cause},
                                {"effect", s.effect},
                                {"margin_ns", s.margin.value_ns},
                                {"sd_ns", s.margin.sd_ns},
                                {"positive", s.positive},
                                {"significant", s.significant}});
  }
  j["closures"] = nlohmann::json::array();
  for (const auto& c : closures) {
    j["closures"].push_back({{"window", c.window},
                             {"photons", c.photons},
                             {"slack_start_ns", c.slack_start_ns},
                             {"slack_end_ns", c.slack_end_ns},
                             {"inside", c.inside}});
  }
  j["flags"] = flags;
  return j;
}

std::string AuditReport::to_text() const {
  std::ostringstream out;
  out << "space-time audit (k = " << fmt(k, 1) << ")\n";
  for (const auto& s : separations) {
    out << "  " << s.cause << " vs " << s.effect << ": margin " << fmt(s.margin.value_ns) << " ns ("
        << fmt(s.margin.sd_ns) << ")" << (s.positive ? (s.significant ? "" : "  [< k sd]") : "  [NOT SPACE-LIKE]")
        << "\n";
  }
  for (const auto& c : closures) {
    out << "  " << c.photons << " inside " << c.window << ": " << (c.inside ? "yes" : "NO") << " (slack "
        << fmt(c.slack_start_ns) << " / " << fmt(c.slack_end_ns) << " ns)\n";
  }
  out << (passed() ? "PASS" : "FAIL") << "\n";
  for (const auto& f : flags) out << "  ! " << f << "\n";
  return out.str();
}

}  // namespace bell
