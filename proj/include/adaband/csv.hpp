#ifndef ADABAND_CSV_HPP
#define ADABAND_CSV_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace adaband {

// One output record.  The schema is frozen: experiment,n,model,metric,value,
// se,reps,seed — ten significant digits, LF endings, byte-identical for
// identical config and seed.
struct ResultRow {
  std::string experiment;
  long long n = 0;
  std::string model;
  std::string metric;
  double value = 0.0;
  double se = 0.0;
  long long reps = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string fmt10(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace detail

inline void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "experiment,n,model,metric,value,se,reps,seed\n";
  for (const ResultRow& r : rows) {
    if (!std::isfinite(r.value) || !std::isfinite(r.se) || r.se < 0.0)
      throw std::runtime_error("refusing to write non-finite or negative-SE row for metric '" +
                               r.metric + "'");
    out << r.experiment << ',' << r.n << ',' << r.model << ',' << r.metric << ','
        << detail::fmt10(r.value) << ',' << detail::fmt10(r.se) << ',' << r.reps << ',' << r.seed
        << '\n';
  }
}

inline void write_csv_file(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF on every platform
  if (!out) throw std::runtime_error(path + ": cannot open output file");
  write_csv(out, rows);
  if (!out) throw std::runtime_error(path + ": write failed");
}

inline std::string csv_to_string(const std::vector<ResultRow>& rows) {
  std::ostringstream ss;
  write_csv(ss, rows);
  return ss.str();
}

}  // namespace adaband

#endif
