#pragma once

#include "locpoly/study.hpp"
#include "locpoly/uib_scan.hpp"

#include <iosfwd>
#include <span>
#include <string>

namespace locpoly {

//! Shortest round-trip decimal representation; identical bytes for identical
//! doubles.
std::string format_number(double v);

//! Columns: n,h,target,centering,sup_dev,rate_stat,skipped_points,seed,replicate
void write_rate_csv(std::ostream& out, std::span<const RateReport> reports);

//! Columns: n,target,count,mean,min,p10,median,p90,p99,max
void write_summary_csv(std::ostream& out, std::span<const StudySummaryRow> rows);

//! Columns: key,value (run metadata and per-replicate failures).
void write_meta_csv(std::ostream& out, const StudyResult& result);

//! rate_stat against log2 h, one polyline per (n, target); replicates are
//! collapsed to their median at each h. Path/polyline/text elements only.
void write_rate_svg(std::ostream& out, std::span<const RateReport> reports, const std::string& title);

} // namespace locpoly
