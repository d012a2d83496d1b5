#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mfplan/bass.hpp"
#include "mfplan/drift.hpp"
#include "mfplan/incentive.hpp"
#include "mfplan/schrodinger.hpp"
#include "mfplan/simulate.hpp"
#include "mfplan/verify.hpp"

namespace mfp {

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial artifact.
void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer);
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// `i,j,x0,x1,pi,log_zeta` over the support of pi.
void write_coupling_csv(std::ostream& os, const Coupling& c);

std::string bridge_report_json(const Coupling& c);

/// `t,x0,x,beta` on a (t, x) lattice for each listed initial node.
void write_drift_csv(std::ostream& os, const DriftField& field, const std::vector<double>& times,
                     const std::vector<double>& xs, const std::vector<double>& x0s);

/// Long format `path,k,t,x` for the first max_paths paths; every step when
/// paths are stored, the recorded steps otherwise.
void write_paths_csv(std::ostream& os, const PathEnsemble& ens, std::size_t max_paths);

/// `t,quantile_level,value` at the recorded steps.
void write_flow_csv(std::ostream& os, const PathEnsemble& ens, const std::vector<double>& levels);

/// `t,mean,second_moment` at every step.
void write_moments_csv(std::ostream& os, const PathEnsemble& ens);

/// `path,xi,stoch_int,quad_term,mf_term`.
void write_xi_csv(std::ostream& os, const IncentiveValues& v);

/// Reads the long `path,k,t,x` format back into an ensemble with stored
/// paths. Paths must cover the same steps 0..n.
PathEnsemble read_paths_csv(const std::string& path);

std::string report_json(const VerificationReport& r);

struct BassReport {
  double c = 0.0;
  double w1_terminal = 0.0;
  double ks_terminal = 0.0;
  double mean_terminal = 0.0;
  double mean_terminal_se = 0.0;
  double max_abs_error = 0.0;  // max_p |X_1 - T(B_1)|
  double frac_error_above = 0.0;  // share of paths with |X_1 - T(B_1)| >= 0.05
  std::string scheme;
};

BassReport bass_report(const BassModel& model, const BassEnsemble& be, BassScheme scheme);
std::string bass_report_json(const BassReport& r);

struct ObjectiveSummary {
  double j = 0.0;
  double se = 0.0;
  double xi_tail_999 = 0.0;
  std::vector<GapEntry> gaps;
};

std::string objective_json(const ObjectiveSummary& s);

}  // namespace mfp
