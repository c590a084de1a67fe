#include "copoprice/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

namespace copoprice {

namespace {

using nlohmann::json;

std::map<std::string, std::string> parse_kv(const std::string& spec) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("expected key=value, got \"" + item + "\"");
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return kv;
}

Instance instance_from_gen(const std::string& spec) {
  auto kv = parse_kv(spec);
  auto geti = [&](const char* k) -> long {
    if (!kv.count(k)) throw std::runtime_error(std::string("--gen needs ") + k);
    return std::stol(kv[k]);
  };
  GenRanges r;
  if (kv.count("vmin")) r.v_min = std::stod(kv["vmin"]);
  if (kv.count("vmax")) r.v_max = std::stod(kv["vmax"]);
  if (kv.count("emin")) r.e_min = std::stod(kv["emin"]);
  if (kv.count("emax")) r.e_max = std::stod(kv["emax"]);
  if (kv.count("C")) r.capacity = std::stod(kv["C"]);
  if (kv.count("minwin")) r.min_window = static_cast<int>(std::stol(kv["minwin"]));
  return random_instance(static_cast<std::uint64_t>(geti("seed")),
                         static_cast<int>(geti("I")), static_cast<int>(geti("J")),
                         static_cast<int>(geti("T")), r);
}

void apply_tolerances(RunConfig& cfg) {
  if (cfg.tol_spec.empty()) return;
  auto kv = parse_kv(cfg.tol_spec);
  for (const auto& [k, v] : kv) {
    if (k == "gap") cfg.cop.gap_tol = std::stod(v);
    else if (k == "cop") cfg.cop.cop_tol = std::stod(v);
    else if (k == "budget") cfg.cop.budget = std::stol(v);
    else if (k == "cpiters") cfg.cop.max_iters = static_cast<int>(std::stol(v));
    else if (k == "lp") cfg.cop.lp_tol = std::stod(v);
    else if (k == "sdpeps") cfg.sdp.eps_abs = cfg.sdp.eps_rel = std::stod(v);
    else if (k == "sdpiters") cfg.sdp.max_iters = static_cast<int>(std::stol(v));
    else if (k == "nodes") cfg.bnb.node_limit = std::stol(v);
    else throw std::runtime_error("unknown tolerance key \"" + k + "\"");
  }
}

int thread_cap(size_t jobs) {
  unsigned cap = std::thread::hardware_concurrency();
  if (cap == 0) cap = 1;
  if (const char* env = std::getenv("COPOPRICE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) cap = static_cast<unsigned>(v);
  }
  return static_cast<int>(std::min<size_t>(cap, jobs));
}

void run_jobs(std::vector<std::function<void()>> jobs) {
  const int cap = thread_cap(jobs.size());
  if (cap <= 1) {
    for (auto& j : jobs) j();
    return;
  }
  std::exception_ptr err;
  for (size_t base = 0; base < jobs.size(); base += cap) {
    std::vector<std::thread> pool;
    for (size_t k = base; k < std::min(jobs.size(), base + cap); ++k)
      pool.emplace_back([&, k] {
        try {
          jobs[k]();
        } catch (...) {
          if (!err) err = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace

Instance instance_from_config(const RunConfig& cfg) {
  if (!cfg.instance_path.empty() && !cfg.gen_spec.empty())
    throw std::runtime_error("pass either --instance or --gen, not both");
  if (!cfg.instance_path.empty()) return load_instance_file(cfg.instance_path);
  if (!cfg.gen_spec.empty()) return instance_from_gen(cfg.gen_spec);
  throw std::runtime_error("an instance is required: --instance PATH or --gen SPEC");
}

Pipeline::Pipeline(Instance inst, RunConfig cfg)
    : inst_(std::move(inst)), cfg_(std::move(cfg)) {}

const Assignment& Pipeline::assignment() {
  if (!assignment_) assignment_ = std::make_unique<Assignment>(solve_milp(inst_, cfg_.bnb));
  return *assignment_;
}

const CopSolveResult& Pipeline::full_cutting_plane() {
  if (!full_cp_) {
    const Assignment& a = assignment();
    StandardForm sf = build_standard_form(inst_);
    CopData cd = build_cop_data(sf, inst_);
    std::vector<double> z = lifted_z_star(cd, inst_, a);
    full_cp_ = std::make_unique<CopSolveResult>(
        solve_cop_cutting_plane(cd, inst_, z, a.objective, cfg_.cop));
  }
  return *full_cp_;
}

const CopSolveResult& Pipeline::reduced_cutting_plane() {
  if (!red_cp_)
    red_cp_ = std::make_unique<CopSolveResult>(
        solve_cop_reduced(inst_, assignment(), cfg_.cop));
  return *red_cp_;
}

const CopSolveResult& Pipeline::reduced_sdp() {
  if (!red_sdp_) {
    const Assignment& a = assignment();
    CopData cd = build_reduced_cop_data(inst_, a);
    std::vector<double> z = lifted_z_star(cd, inst_, a);
    red_sdp_ = std::make_unique<CopSolveResult>(
        solve_cop_sdp_inner(cd, inst_, z, a.objective, cfg_.sdp));
  }
  return *red_sdp_;
}

const DualSolution& Pipeline::crp_duals() {
  if (!crp_) {
    LpRelaxation rel = solve_lp_relaxation(inst_);
    if (rel.status != LpStatus::Optimal)
      throw std::runtime_error("crp: relaxation solve failed");
    crp_ = std::make_unique<DualSolution>(
        duals_from_relaxation(inst_, rel.mu_occupancy, rel.mu_capacity));
    crp_->objective = rel.objective;
  }
  return *crp_;
}

const DualSolution* Pipeline::duals_for(Mechanism mech) {
  switch (mech) {
    case Mechanism::TOU: return nullptr;
    case Mechanism::CMP: return &full_cutting_plane().duals;
    case Mechanism::CMP_R: return &reduced_cutting_plane().duals;
    case Mechanism::CMP_RS: return &reduced_sdp().duals;
    case Mechanism::CRP: return &crp_duals();
  }
  return nullptr;
}

void Pipeline::prepare(const std::vector<Mechanism>& mechs) {
  assignment();  // every source needs it; solve before fanning out
  std::vector<std::function<void()>> jobs;
  for (Mechanism m : mechs) {
    switch (m) {
      case Mechanism::CMP: jobs.push_back([this] { full_cutting_plane(); }); break;
      case Mechanism::CMP_R: jobs.push_back([this] { reduced_cutting_plane(); }); break;
      case Mechanism::CMP_RS: jobs.push_back([this] { reduced_sdp(); }); break;
      case Mechanism::CRP: jobs.push_back([this] { crp_duals(); }); break;
      case Mechanism::TOU: break;
    }
  }
  run_jobs(std::move(jobs));
}

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write \"" + path + "\"");
  out << content;
}

json matrix_json(const Matrix& m, bool as_int = false) {
  json rows = json::array();
  for (int r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols; ++c) {
      if (as_int)
        row.push_back(static_cast<int>(m(r, c) > 0.5 ? 1 : 0));
      else
        row.push_back(m(r, c));
    }
    rows.push_back(row);
  }
  return rows;
}

std::string assignment_json(const Assignment& a) {
  json doc;
  doc["x"] = matrix_json(a.x, true);
  doc["p"] = matrix_json(a.p);
  doc["objective"] = a.objective;
  doc["slacks"] = {{"phi", matrix_json(a.phi)},
                   {"psi", matrix_json(a.psi)},
                   {"zeta", matrix_json(a.zeta)},
                   {"xi", a.xi}};
  return doc.dump(2) + "\n";
}

std::string prices_csv(const std::vector<PriceRow>& rows) {
  std::ostringstream out;
  out << "user,mechanism,ls_e,ls_i,congestion,total,status\n";
  char buf[256];
  for (const PriceRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%.4f,%.4f,%.4f,%.4f,%s\n", r.user + 1,
                  mechanism_name(r.mechanism), r.ls_e, r.ls_i, r.congestion, r.total,
                  r.certified ? "certified" : "uncertified");
    out << buf;
  }
  return out.str();
}

std::vector<Mechanism> parse_mechanisms(const std::string& list) {
  std::vector<Mechanism> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(mechanism_from_name(item));
  if (out.empty()) throw std::runtime_error("no mechanisms given");
  return out;
}

void check_solver_choice(const RunConfig& cfg) {
  if (cfg.solver.empty()) return;
  if (cfg.solver != "cutting-plane" && cfg.solver != "sdp-inner")
    throw std::runtime_error("unknown --solver \"" + cfg.solver + "\"");
  for (Mechanism m : cfg.mechanisms) {
    const bool wants_sdp = m == Mechanism::CMP_RS;
    const bool is_cop = m == Mechanism::CMP || m == Mechanism::CMP_R || wants_sdp;
    if (!is_cop) continue;
    if (wants_sdp && cfg.solver != "sdp-inner")
      throw std::runtime_error("cmp-rs requires --solver sdp-inner");
    if (!wants_sdp && cfg.solver != "cutting-plane")
      throw std::runtime_error(std::string(mechanism_name(m)) +
                               " requires --solver cutting-plane");
  }
}

int cmd_solve(Pipeline& pipe, const RunConfig& cfg) {
  const Assignment& a = pipe.assignment();
  write_file(cfg.out_dir + "/assignment.json", assignment_json(a));
  std::printf("objective %.6f\n", a.objective);
  std::printf("served:");
  for (int i = 0; i < pipe.instance().num_evs(); ++i)
    if (a.assigned_evse(i) >= 0) std::printf(" %d->j%d", i + 1, a.assigned_evse(i) + 1);
  std::printf("\n");
  return 0;
}

int cmd_price(Pipeline& pipe, const RunConfig& cfg) {
  pipe.prepare(cfg.mechanisms);
  for (Mechanism m : cfg.mechanisms) {
    const auto rows =
        price_at_optimum(pipe.instance(), pipe.assignment(), pipe.duals_for(m), m);
    const std::string path =
        cfg.out_dir + "/prices_" + mechanism_name(m) + ".csv";
    write_file(path, prices_csv(rows));
    std::printf("wrote %s\n", path.c_str());
  }
  return 0;
}

int cmd_verify(Pipeline& pipe, const RunConfig& cfg) {
  pipe.prepare(cfg.mechanisms);
  const Instance& inst = pipe.instance();
  const Assignment& a = pipe.assignment();

  VerificationReport rep;
  rep.milp_objective = a.objective;
  rep.lemma2_ok = check_power_complementarity(inst, a);
  rep.notes = standard_report_notes(inst);
  for (Mechanism m : cfg.mechanisms)
    rep.mechanisms.push_back(
        verify_mechanism(inst, a, pipe.duals_for(m), m, cfg.cop.gap_tol));

  write_file(cfg.out_dir + "/verify_report.json", rep.to_json());
  write_file(cfg.out_dir + "/verify_report.csv", rep.to_csv());

  std::printf("power complementarity: %s\n", rep.lemma2_ok ? "ok" : "FAIL");
  for (const auto& m : rep.mechanisms) {
    std::printf("%-6s adequacy=%s net=%.6f matching=%.2f ir=%s",
                mechanism_name(m.mechanism), m.revenue.adequate ? "ok" : "FAIL",
                m.revenue.net_profit, m.matching, m.ir_status.c_str());
    if (m.has_duals) std::printf(" gap=%.3g cert=%s", m.gap, m.cert_status.c_str());
    std::printf("\n");
    if (m.ir_status == "inconclusive")
      std::printf("  warning: duality gap above gate; rationality checks inconclusive\n");
  }
  return rep.hard_pass() ? 0 : 3;
}

int cmd_compare(Pipeline& pipe, const RunConfig& cfg) {
  if (cfg.mechanisms.size() < 2)
    throw std::runtime_error("compare needs at least two mechanisms");
  pipe.prepare(cfg.mechanisms);
  const Instance& inst = pipe.instance();
  const Assignment& a = pipe.assignment();

  std::ostringstream pay;
  pay << "user";
  for (Mechanism m : cfg.mechanisms) pay << "," << mechanism_name(m);
  pay << "\n";
  std::vector<std::vector<PriceRow>> rows;
  for (Mechanism m : cfg.mechanisms)
    rows.push_back(price_at_optimum(inst, a, pipe.duals_for(m), m));
  char buf[64];
  for (int i = 0; i < inst.num_evs(); ++i) {
    if (a.assigned_evse(i) < 0) continue;  // unserved users pay nothing
    pay << (i + 1);
    for (size_t k = 0; k < cfg.mechanisms.size(); ++k) {
      std::snprintf(buf, sizeof(buf), ",%.4f", rows[k][i].total);
      pay << buf;
    }
    pay << "\n";
  }
  write_file(cfg.out_dir + "/compare_payments.csv", pay.str());

  std::ostringstream match;
  match << "user,central";
  for (Mechanism m : cfg.mechanisms) match << "," << mechanism_name(m);
  match << "\n";
  std::vector<std::vector<BestResponse>> brs;
  for (Mechanism m : cfg.mechanisms)
    brs.push_back(best_responses(inst, a, pipe.duals_for(m), m));
  auto opt_name = [](int j) {
    return j < 0 ? std::string("none") : "j" + std::to_string(j + 1);
  };
  for (int i = 0; i < inst.num_evs(); ++i) {
    match << (i + 1) << "," << opt_name(a.assigned_evse(i));
    for (size_t k = 0; k < cfg.mechanisms.size(); ++k)
      match << "," << opt_name(brs[k][i].chosen);
    match << "\n";
  }
  match << "matching,";
  for (size_t k = 0; k < cfg.mechanisms.size(); ++k) {
    int hit = 0;
    for (const auto& br : brs[k]) hit += br.matches_central ? 1 : 0;
    std::snprintf(buf, sizeof(buf), ",%.4f",
                  static_cast<double>(hit) / inst.num_evs());
    match << buf;
  }
  match << "\n";
  write_file(cfg.out_dir + "/compare_matching.csv", match.str());
  std::printf("wrote %s and %s\n", (cfg.out_dir + "/compare_payments.csv").c_str(),
              (cfg.out_dir + "/compare_matching.csv").c_str());
  return 0;
}

int cmd_gen(const RunConfig& cfg) {
  if (cfg.gen_spec.empty()) throw std::runtime_error("gen requires --gen SPEC");
  Instance inst = instance_from_gen(cfg.gen_spec);
  const std::string path = cfg.out_dir + "/instance.json";
  write_file(path, save_instance(inst));
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"copositive-duality pricing pipeline for EV charging access"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string mech_list;
  auto add_common = [&](CLI::App* cmd, bool needs_mech) {
    cmd->add_option("--instance", cfg.instance_path, "instance JSON path");
    cmd->add_option("--gen", cfg.gen_spec, "generator spec seed=..,I=..,J=..,T=..");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--tol", cfg.tol_spec, "tolerance overrides key=value,...");
    cmd->add_option("--solver", cfg.solver, "cutting-plane | sdp-inner");
    if (needs_mech)
      cmd->add_option("--mechanism,--mechanisms", mech_list,
                      "comma-separated mechanisms (cmp,cmp-r,cmp-rs,tou,crp)");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve the welfare model");
  add_common(solve, false);
  CLI::App* price = app.add_subcommand("price", "emit per-user payment tables");
  add_common(price, true);
  CLI::App* verify = app.add_subcommand("verify", "run the mechanism checks");
  add_common(verify, true);
  CLI::App* compare = app.add_subcommand("compare", "side-by-side mechanism tables");
  add_common(compare, true);
  CLI::App* gen = app.add_subcommand("gen", "write a generated instance");
  add_common(gen, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    apply_tolerances(cfg);
    if (!mech_list.empty()) cfg.mechanisms = parse_mechanisms(mech_list);
    check_solver_choice(cfg);
    if (gen->parsed()) return cmd_gen(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    Instance inst = instance_from_config(cfg);
    Pipeline pipe(std::move(inst), cfg);
    if (solve->parsed()) return cmd_solve(pipe, cfg);
    if (price->parsed()) {
      if (cfg.mechanisms.empty()) throw std::runtime_error("price needs --mechanism");
      return cmd_price(pipe, cfg);
    }
    if (verify->parsed()) {
      if (cfg.mechanisms.empty()) throw std::runtime_error("verify needs --mechanism");
      return cmd_verify(pipe, cfg);
    }
    if (compare->parsed()) return cmd_compare(pipe, cfg);
    return 1;
  } catch (const NodeLimitError& e) {
    std::fprintf(stderr, "error: %s (incumbent %.6f, bound %.6f)\n", e.what(),
                 e.incumbent, e.bound);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::logic_error& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 2;
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    const bool io = what.find("instance") != std::string::npos ||
                    what.find("--") != std::string::npos ||
                    what.find("cannot") != std::string::npos ||
                    what.find("mechanism") != std::string::npos ||
                    what.find("need") != std::string::npos;
    std::fprintf(stderr, "error: %s\n", what.c_str());
    return io ? 1 : 2;
  }
}

}  // namespace copoprice
