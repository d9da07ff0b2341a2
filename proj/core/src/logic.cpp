#include "vfocus/logic.hpp"

#include <algorithm>
#include <cstdint>
#include <tuple>

#include <json.hpp>

#include "vfocus/errors.hpp"

namespace vfocus {

namespace {

bool child_less_or(const LogicExpr& a, const LogicExpr& b) {
  const auto ka = std::make_tuple(a.min_region(), a.literal_count());
  const auto kb = std::make_tuple(b.min_region(), b.literal_count());
  if (ka != kb) return ka < kb;
  return render(a) < render(b);
}

bool child_less_and(const LogicExpr& a, const LogicExpr& b) {
  const bool la = a.op() == LogicExpr::Op::Literal;
  const bool lb = b.op() == LogicExpr::Op::Literal;
  if (la != lb) return la;
  if (la) return a.region() < b.region();
  return child_less_or(a, b);
}

void canonicalize(std::vector<LogicExpr>& children, bool is_and) {
  if (is_and)
    std::sort(children.begin(), children.end(), child_less_and);
  else
    std::sort(children.begin(), children.end(), child_less_or);
  children.erase(std::unique(children.begin(), children.end()), children.end());
}

bool eval_mask(const LogicExpr& e, std::uint64_t mask) {
  switch (e.op()) {
    case LogicExpr::Op::True: return true;
    case LogicExpr::Op::Literal: return (mask >> (e.region() - 1)) & 1u;
    case LogicExpr::Op::And:
      return std::all_of(e.children().begin(), e.children().end(),
                         [mask](const LogicExpr& c) { return eval_mask(c, mask); });
    case LogicExpr::Op::Or:
      return std::any_of(e.children().begin(), e.children().end(),
                         [mask](const LogicExpr& c) { return eval_mask(c, mask); });
  }
  return false;
}

LogicExpr conjunction_of(const StateVector& state) {
  std::vector<LogicExpr> literals;
  for (std::size_t r : state.regions()) literals.push_back(LogicExpr::literal(r));
  return LogicExpr::conjunction(std::move(literals));
}

LogicExpr translate_rec(std::vector<StateVector> states) {
  if (states.size() == 1) return conjunction_of(states.front());

  const std::size_t m = states.front().size();
  std::size_t shared = 0;
  std::size_t best = 0;
  for (std::size_t r = 1; r <= m; ++r) {
    std::size_t count = 0;
    for (const auto& s : states) count += s.preserved(r);
    if (count > best) {
      best = count;
      shared = r;
    }
  }

  std::vector<StateVector> with;
  std::vector<StateVector> without;
  for (auto& s : states) {
    if (s.preserved(shared)) {
      s.set(shared, false);
      with.push_back(std::move(s));
    } else {
      without.push_back(std::move(s));
    }
  }

  std::vector<LogicExpr> branches;
  branches.push_back(
      LogicExpr::conjunction({LogicExpr::literal(shared), translate_rec(std::move(with))}));
  if (!without.empty()) branches.push_back(translate_rec(std::move(without)));
  return LogicExpr::disjunction(std::move(branches));
}

void render_into(const LogicExpr& e, std::string& out, bool nested) {
  switch (e.op()) {
    case LogicExpr::Op::True: out += "TRUE"; return;
    case LogicExpr::Op::Literal:
      out += 'I';
      out += std::to_string(e.region());
      return;
    case LogicExpr::Op::And:
    case LogicExpr::Op::Or: {
      const char* sep = e.op() == LogicExpr::Op::And ? " & " : " | ";
      if (nested) out += '(';
      for (std::size_t i = 0; i < e.children().size(); ++i) {
        if (i) out += sep;
        render_into(e.children()[i], out, true);
      }
      if (nested) out += ')';
      return;
    }
  }
}

nlohmann::json to_json_value(const LogicExpr& e) {
  switch (e.op()) {
    case LogicExpr::Op::True: return {{"op", "true"}};
    case LogicExpr::Op::Literal: return {{"op", "lit"}, {"region", e.region()}};
    case LogicExpr::Op::And:
    case LogicExpr::Op::Or: {
      nlohmann::json children = nlohmann::json::array();
      for (const auto& c : e.children()) children.push_back(to_json_value(c));
      return {{"op", e.op() == LogicExpr::Op::And ? "and" : "or"}, {"children", children}};
    }
  }
  return {};
}

LogicExpr from_json_value(const nlohmann::json& j) {
  const std::string op = j.at("op").get<std::string>();
  if (op == "true") return LogicExpr::truth();
  if (op == "lit") return LogicExpr::literal(j.at("region").get<std::size_t>());
  if (op == "and" || op == "or") {
    std::vector<LogicExpr> children;
    for (const auto& c : j.at("children")) children.push_back(from_json_value(c));
    if (children.empty()) throw InvalidInput("'" + op + "' node without children");
    return op == "and" ? LogicExpr::conjunction(std::move(children))
                       : LogicExpr::disjunction(std::move(children));
  }
  throw InvalidInput("unknown expression op '" + op + "'");
}

}  // namespace

LogicExpr LogicExpr::literal(std::size_t region) {
  if (region == 0) throw InvalidInput("region literals are 1-based");
  LogicExpr e;
  e.op_ = Op::Literal;
  e.region_ = region;
  return e;
}

LogicExpr LogicExpr::conjunction(std::vector<LogicExpr> children) {
  std::vector<LogicExpr> flat;
  for (auto& c : children) {
    if (c.op_ == Op::True) continue;
    if (c.op_ == Op::And) {
      for (auto& g : c.children_) flat.push_back(std::move(g));
    } else {
      flat.push_back(std::move(c));
    }
  }
  canonicalize(flat, true);
  if (flat.empty()) return truth();
  if (flat.size() == 1) return std::move(flat.front());
  LogicExpr e;
  e.op_ = Op::And;
  e.children_ = std::move(flat);
  return e;
}

LogicExpr LogicExpr::disjunction(std::vector<LogicExpr> children) {
  if (children.empty()) throw InvalidInput("empty disjunction has no value");
  std::vector<LogicExpr> flat;
  for (auto& c : children) {
    if (c.op_ == Op::True) return truth();
    if (c.op_ == Op::Or) {
      for (auto& g : c.children_) flat.push_back(std::move(g));
    } else {
      flat.push_back(std::move(c));
    }
  }
  canonicalize(flat, false);
  if (flat.size() == 1) return std::move(flat.front());
  LogicExpr e;
  e.op_ = Op::Or;
  e.children_ = std::move(flat);
  return e;
}

std::size_t LogicExpr::literal_count() const noexcept {
  if (op_ == Op::Literal) return 1;
  std::size_t n = 0;
  for (const auto& c : children_) n += c.literal_count();
  return n;
}

std::size_t LogicExpr::min_region() const noexcept {
  if (op_ == Op::Literal) return region_;
  std::size_t best = 0;
  for (const auto& c : children_) {
    const std::size_t r = c.min_region();
    if (r != 0 && (best == 0 || r < best)) best = r;
  }
  return best;
}

std::size_t LogicExpr::max_region() const noexcept {
  if (op_ == Op::Literal) return region_;
  std::size_t best = 0;
  for (const auto& c : children_) best = std::max(best, c.max_region());
  return best;
}

LogicExpr translate(std::span<const StateVector> states) {
  if (states.empty()) throw InvalidInput("cannot translate an empty state set");
  const std::size_t m = states.front().size();
  std::vector<StateVector> unique;
  for (const auto& s : states) {
    if (s.size() != m) throw InvalidInput("states of different lengths");
    if (std::find(unique.begin(), unique.end(), s) == unique.end()) unique.push_back(s);
  }
  return translate_rec(std::move(unique));
}

bool eval(const LogicExpr& expr, const StateVector& state) {
  if (expr.max_region() > state.size())
    throw InvalidInput("literal I" + std::to_string(expr.max_region()) + " outside a state of " +
                       std::to_string(state.size()) + " regions");
  switch (expr.op()) {
    case LogicExpr::Op::True: return true;
    case LogicExpr::Op::Literal: return state.preserved(expr.region());
    case LogicExpr::Op::And:
      return std::all_of(expr.children().begin(), expr.children().end(),
                         [&](const LogicExpr& c) { return eval(c, state); });
    case LogicExpr::Op::Or:
      return std::any_of(expr.children().begin(), expr.children().end(),
                         [&](const LogicExpr& c) { return eval(c, state); });
  }
  return false;
}

bool equivalent(const LogicExpr& a, const LogicExpr& b, std::size_t region_count) {
  if (region_count > kMaxEquivalenceRegions)
    throw InvalidInput("truth-table comparison limited to " +
                       std::to_string(kMaxEquivalenceRegions) + " regions");
  if (a.max_region() > region_count || b.max_region() > region_count)
    throw InvalidInput("expression references a region beyond " + std::to_string(region_count));
  const std::uint64_t states = std::uint64_t{1} << region_count;
  for (std::uint64_t mask = 0; mask < states; ++mask)
    if (eval_mask(a, mask) != eval_mask(b, mask)) return false;
  return true;
}

std::string render(const LogicExpr& expr) {
  std::string out;
  render_into(expr, out, false);
  return out;
}

std::string to_json(const LogicExpr& expr) { return to_json_value(expr).dump(); }

LogicExpr logic_from_json(std::string_view text) {
  try {
    return from_json_value(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("bad expression JSON: ") + e.what());
  }
}

}  // namespace vfocus
