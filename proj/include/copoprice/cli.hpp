#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "copoprice/cop.hpp"
#include "copoprice/sdp.hpp"
#include "copoprice/verify.hpp"

namespace copoprice {

struct RunConfig {
  std::string instance_path;
  std::string gen_spec;  // seed=..,I=..,J=..,T=..[,vmin=..,...]
  std::vector<Mechanism> mechanisms;
  std::string solver;  // "", "cutting-plane" or "sdp-inner"
  std::string out_dir = ".";
  std::string tol_spec;  // key=value list of tolerance overrides
  BnbOptions bnb;
  CopOptions cop;
  SdpOptions sdp;
};

Instance instance_from_config(const RunConfig& cfg);

// Lazy per-run cache of the solve chain: one MILP solve, one dual solve
// per source. Heavy sources requested together are computed concurrently,
// capped by COPOPRICE_THREADS.
class Pipeline {
 public:
  Pipeline(Instance inst, RunConfig cfg);

  const Instance& instance() const { return inst_; }
  const Assignment& assignment();
  const CopSolveResult& full_cutting_plane();
  const CopSolveResult& reduced_cutting_plane();
  const CopSolveResult& reduced_sdp();
  const DualSolution& crp_duals();

  // Dual solution feeding a mechanism's prices; null for TOU.
  const DualSolution* duals_for(Mechanism mech);
  // Solve every source the listed mechanisms need, fanning out.
  void prepare(const std::vector<Mechanism>& mechs);

 private:
  Instance inst_;
  RunConfig cfg_;
  std::unique_ptr<Assignment> assignment_;
  std::unique_ptr<CopSolveResult> full_cp_, red_cp_, red_sdp_;
  std::unique_ptr<DualSolution> crp_;
};

int run_cli(int argc, const char* const* argv);

}  // namespace copoprice
