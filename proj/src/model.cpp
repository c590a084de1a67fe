#include "copoprice/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace copoprice {

using nlohmann::json;

void Instance::validate() const {
  if (T < 1) throw std::invalid_argument("instance: T must be >= 1");
  if (evs.empty()) throw std::invalid_argument("instance: evs must be non-empty");
  if (evses.empty()) throw std::invalid_argument("instance: evses must be non-empty");
  if (static_cast<int>(grid_price.size()) != T)
    throw std::invalid_argument("instance: grid_price must have length T");
  for (int t = 0; t < T; ++t)
    if (!(grid_price[t] >= 0.0) || !std::isfinite(grid_price[t]))
      throw std::invalid_argument("instance: grid_price[" + std::to_string(t) + "] must be >= 0");
  for (size_t j = 0; j < evses.size(); ++j) {
    if (static_cast<int>(evses[j].capacity.size()) != T)
      throw std::invalid_argument("instance: evses[" + std::to_string(j) + "].capacity must have length T");
    for (int t = 0; t < T; ++t)
      if (!(evses[j].capacity[t] >= 0.0) || !std::isfinite(evses[j].capacity[t]))
        throw std::invalid_argument("instance: evses[" + std::to_string(j) + "].capacity[" +
                                    std::to_string(t) + "] must be >= 0");
  }
  for (size_t i = 0; i < evs.size(); ++i) {
    const EvRequest& ev = evs[i];
    const std::string who = "instance: evs[" + std::to_string(i) + "].";
    if (!(ev.v >= 0.0) || !std::isfinite(ev.v)) throw std::invalid_argument(who + "v must be >= 0");
    if (!(ev.e > 0.0) || !std::isfinite(ev.e)) throw std::invalid_argument(who + "e must be > 0");
    if (ev.t_minus < 1) throw std::invalid_argument(who + "t_minus must be >= 1");
    if (ev.t_plus < ev.t_minus) throw std::invalid_argument(who + "t_plus must be >= t_minus");
    if (ev.t_plus > T) throw std::invalid_argument(who + "t_plus must be <= T");
  }
}

int availability(const Instance& inst, int i, int t) {
  if (i < 1 || i > inst.num_evs()) throw std::out_of_range("availability: ev index out of range");
  if (t < 1 || t > inst.T) throw std::out_of_range("availability: slot index out of range");
  const EvRequest& ev = inst.evs[i - 1];
  return (ev.t_minus <= t && t <= ev.t_plus) ? 1 : 0;
}

VarIndex VarIndex::make(int I, int J, int T) {
  VarIndex idx;
  idx.I = I;
  idx.J = J;
  idx.T = T;
  idx.x0 = 0;
  idx.p0 = idx.x0 + I * J;
  idx.phi0 = idx.p0 + J * T;
  idx.psi0 = idx.phi0 + I * J;
  idx.zeta0 = idx.psi0 + J * T;
  idx.xi0 = idx.zeta0 + J * T;
  idx.N = idx.xi0 + I;
  return idx;
}

StandardForm build_standard_form(const Instance& inst) {
  inst.validate();
  const int I = inst.num_evs(), J = inst.num_evses(), T = inst.T;
  StandardForm sf;
  sf.index = VarIndex::make(I, J, T);
  const VarIndex& ix = sf.index;
  sf.constraints.reserve(I * J + 2 * J * T + I);

  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) {
      Constraint c;
      c.family = ConFamily::Energy;
      c.i = i;
      c.j = j;
      c.h.emplace_back(ix.x(i, j), -inst.evs[i].e);
      for (int t = 0; t < T; ++t)
        if (availability(inst, i + 1, t + 1)) c.h.emplace_back(ix.p(j, t), 1.0);
      c.h.emplace_back(ix.phi(i, j), -1.0);
      c.rhs = 0.0;
      sf.constraints.push_back(std::move(c));
    }

  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t) {
      Constraint c;
      c.family = ConFamily::Occupancy;
      c.j = j;
      c.t = t;
      for (int i = 0; i < I; ++i)
        if (availability(inst, i + 1, t + 1)) c.h.emplace_back(ix.x(i, j), 1.0);
      c.h.emplace_back(ix.psi(j, t), 1.0);
      c.rhs = 1.0;
      sf.constraints.push_back(std::move(c));
    }

  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t) {
      Constraint c;
      c.family = ConFamily::Capacity;
      c.j = j;
      c.t = t;
      c.h.emplace_back(ix.p(j, t), 1.0);
      c.h.emplace_back(ix.zeta(j, t), 1.0);
      c.rhs = inst.evses[j].capacity[t];
      sf.constraints.push_back(std::move(c));
    }

  for (int i = 0; i < I; ++i) {
    Constraint c;
    c.family = ConFamily::Uniqueness;
    c.i = i;
    for (int j = 0; j < J; ++j) c.h.emplace_back(ix.x(i, j), 1.0);
    c.h.emplace_back(ix.xi(i), 1.0);
    c.rhs = 1.0;
    sf.constraints.push_back(std::move(c));
  }
  return sf;
}

namespace {

// splitmix64: portable, deterministic across platforms.
std::uint64_t next_u64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double next_unit(std::uint64_t& s) { return (next_u64(s) >> 11) * 0x1.0p-53; }

double next_in(std::uint64_t& s, double lo, double hi) {
  return lo + (hi - lo) * next_unit(s);
}

int next_int(std::uint64_t& s, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(next_u64(s) % static_cast<std::uint64_t>(hi - lo + 1));
}

}  // namespace

Instance random_instance(std::uint64_t seed, int I, int J, int T, const GenRanges& r) {
  if (I < 1 || J < 1 || T < 1) throw std::invalid_argument("random_instance: I, J, T must be >= 1");
  if (r.v_min > r.v_max || r.v_min < 0.0)
    throw std::invalid_argument("random_instance: invalid v range");
  if (r.e_min > r.e_max || r.e_min <= 0.0)
    throw std::invalid_argument("random_instance: invalid e range");
  if (r.min_window < 1 || r.min_window > T)
    throw std::invalid_argument("random_instance: invalid window range");
  if (r.capacity < 0.0) throw std::invalid_argument("random_instance: invalid capacity");

  std::uint64_t s = seed * 0x9e3779b97f4a7c15ULL + 0x853c49e6748fea9bULL;
  Instance inst;
  inst.T = T;
  inst.grid_price.resize(T);
  for (int t = 0; t < T; ++t) inst.grid_price[t] = 0.1 * (t + 1);
  inst.evses.resize(J);
  for (int j = 0; j < J; ++j) inst.evses[j].capacity.assign(T, r.capacity);
  inst.evs.resize(I);
  for (int i = 0; i < I; ++i) {
    EvRequest ev;
    ev.v = next_in(s, r.v_min, r.v_max);
    ev.e = next_in(s, r.e_min, r.e_max);
    ev.t_minus = next_int(s, 1, T - r.min_window + 1);
    ev.t_plus = next_int(s, ev.t_minus + r.min_window - 1, T);
    inst.evs[i] = ev;
  }
  inst.validate();
  return inst;
}

namespace {

const json& need(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key))
    throw std::runtime_error("instance: missing field \"" + where + key + "\"");
  return obj.at(key);
}

double need_num(const json& obj, const char* key, const std::string& where) {
  const json& v = need(obj, key, where);
  if (!v.is_number())
    throw std::runtime_error("instance: field \"" + where + key + "\" must be a number");
  return v.get<double>();
}

}  // namespace

Instance load_instance(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("instance: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw std::runtime_error("instance: top level must be an object");

  Instance inst;
  const json& jt = need(doc, "T", "");
  if (!jt.is_number_integer()) throw std::runtime_error("instance: field \"T\" must be an integer");
  inst.T = jt.get<int>();

  const json& gp = need(doc, "grid_price", "");
  if (!gp.is_array()) throw std::runtime_error("instance: field \"grid_price\" must be an array");
  for (const auto& v : gp) {
    if (!v.is_number()) throw std::runtime_error("instance: grid_price entries must be numbers");
    inst.grid_price.push_back(v.get<double>());
  }

  const json& jevses = need(doc, "evses", "");
  if (!jevses.is_array()) throw std::runtime_error("instance: field \"evses\" must be an array");
  for (size_t j = 0; j < jevses.size(); ++j) {
    const std::string where = "evses[" + std::to_string(j) + "].";
    const json& cap = need(jevses[j], "capacity", where);
    if (!cap.is_array())
      throw std::runtime_error("instance: field \"" + where + "capacity\" must be an array");
    Evse e;
    for (const auto& v : cap) {
      if (!v.is_number())
        throw std::runtime_error("instance: " + where + "capacity entries must be numbers");
      e.capacity.push_back(v.get<double>());
    }
    inst.evses.push_back(std::move(e));
  }

  const json& jevs = need(doc, "evs", "");
  if (!jevs.is_array()) throw std::runtime_error("instance: field \"evs\" must be an array");
  for (size_t i = 0; i < jevs.size(); ++i) {
    const std::string where = "evs[" + std::to_string(i) + "].";
    EvRequest ev;
    ev.v = need_num(jevs[i], "v", where);
    ev.e = need_num(jevs[i], "e", where);
    const json& tm = need(jevs[i], "t_minus", where);
    const json& tp = need(jevs[i], "t_plus", where);
    if (!tm.is_number_integer())
      throw std::runtime_error("instance: field \"" + where + "t_minus\" must be an integer");
    if (!tp.is_number_integer())
      throw std::runtime_error("instance: field \"" + where + "t_plus\" must be an integer");
    ev.t_minus = tm.get<int>();
    ev.t_plus = tp.get<int>();
    inst.evs.push_back(ev);
  }

  try {
    inst.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(e.what());
  }
  return inst;
}

std::string save_instance(const Instance& inst) {
  json doc;
  doc["T"] = inst.T;
  doc["grid_price"] = inst.grid_price;
  doc["evses"] = json::array();
  for (const auto& e : inst.evses) doc["evses"].push_back({{"capacity", e.capacity}});
  doc["evs"] = json::array();
  for (const auto& ev : inst.evs)
    doc["evs"].push_back({{"v", ev.v}, {"e", ev.e}, {"t_minus", ev.t_minus}, {"t_plus", ev.t_plus}});
  return doc.dump(2) + "\n";
}

Instance load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("instance: cannot open \"" + path + "\"");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_instance(ss.str());
}

}  // namespace copoprice
