#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sabre/errors.hpp"

namespace sabre {

// One row per (client, local cycle). Rows are ordered by
// (joint_tick, client, cycle).
struct RunRecordRow {
  long joint_tick = 0;
  int client = 0;
  long cycle = 0;  // local clock
  Eigen::VectorXd theta_bar;
  Eigen::VectorXd sigma_bar_diag;
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd sigma_hat_diag;
  double sq_err = 0.0;  // ||theta_bar - theta_star||^2
  std::vector<int> accepted;     // confidence set I
  std::vector<int> excluded;     // received but rejected
  std::vector<int> overwritten;  // coordinates the overwrite rule fired on
  int floor_events = 0;
  int degraded_attack = 0;
  int terminated = 0;

  double sigma_bar_trace() const { return sigma_bar_diag.sum(); }
  double sigma_hat_trace() const { return sigma_hat_diag.sum(); }
};

struct RunRecord {
  int dim = 0;
  std::vector<RunRecordRow> rows;
};

namespace detail {

// 17 significant digits round-trips any double exactly.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string join_ids(const std::vector<int>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(ids[i]);
  }
  return s;
}

inline std::vector<int> split_ids(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ';'))
    if (!tok.empty()) out.push_back(std::stoi(tok));
  return out;
}

}  // namespace detail

inline std::string run_record_header(int dim) {
  std::string h = "joint_tick,client,cycle";
  auto cols = [&](const std::string& name) {
    for (int k = 0; k < dim; ++k) h += "," + name + "_" + std::to_string(k);
  };
  cols("theta_bar");
  cols("sigma_bar_diag");
  h += ",sigma_bar_trace";
  cols("theta_hat");
  cols("sigma_hat_diag");
  h += ",sigma_hat_trace,sq_err,accepted,excluded,overwritten,"
       "floor_events,degraded_attack,terminated";
  return h;
}

inline std::string to_csv_line(const RunRecordRow& r) {
  std::string line = std::to_string(r.joint_tick) + "," +
                     std::to_string(r.client) + "," + std::to_string(r.cycle);
  auto vec = [&](const Eigen::VectorXd& v) {
    for (int k = 0; k < v.size(); ++k) line += "," + detail::fmt_double(v(k));
  };
  vec(r.theta_bar);
  vec(r.sigma_bar_diag);
  line += "," + detail::fmt_double(r.sigma_bar_trace());
  vec(r.theta_hat);
  vec(r.sigma_hat_diag);
  line += "," + detail::fmt_double(r.sigma_hat_trace());
  line += "," + detail::fmt_double(r.sq_err);
  line += "," + detail::join_ids(r.accepted);
  line += "," + detail::join_ids(r.excluded);
  line += "," + detail::join_ids(r.overwritten);
  line += "," + std::to_string(r.floor_events);
  line += "," + std::to_string(r.degraded_attack);
  line += "," + std::to_string(r.terminated);
  return line;
}

inline void write_run_record(const RunRecord& rec, std::ostream& os) {
  os << run_record_header(rec.dim) << "\n";
  for (const auto& r : rec.rows) os << to_csv_line(r) << "\n";
}

inline void write_run_record(const RunRecord& rec, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  write_run_record(rec, f);
  if (!f) throw IoError("write failed: " + path);
}

inline RunRecord read_run_record(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw IoError("empty run record");
  // recover the dimension from the header: count theta_bar_* columns
  int dim = 0;
  {
    std::stringstream ss(header);
    std::string col;
    while (std::getline(ss, col, ','))
      if (col.rfind("theta_bar_", 0) == 0) ++dim;
  }
  if (dim == 0) throw IoError("run record header has no theta_bar columns");

  RunRecord rec;
  rec.dim = dim;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    auto next = [&]() {
      if (!std::getline(ss, tok, ',')) throw IoError("truncated record row");
      return tok;
    };
    RunRecordRow r;
    r.joint_tick = std::stol(next());
    r.client = std::stoi(next());
    r.cycle = std::stol(next());
    auto vec = [&](Eigen::VectorXd& v) {
      v.resize(dim);
      for (int k = 0; k < dim; ++k) v(k) = std::stod(next());
    };
    vec(r.theta_bar);
    vec(r.sigma_bar_diag);
    next();  // sigma_bar_trace, derived
    vec(r.theta_hat);
    vec(r.sigma_hat_diag);
    next();  // sigma_hat_trace, derived
    r.sq_err = std::stod(next());
    r.accepted = detail::split_ids(next());
    r.excluded = detail::split_ids(next());
    r.overwritten = detail::split_ids(next());
    r.floor_events = std::stoi(next());
    r.degraded_attack = std::stoi(next());
    r.terminated = std::stoi(next());
    rec.rows.push_back(std::move(r));
  }
  return rec;
}

inline RunRecord read_run_record(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  return read_run_record(f);
}

}  // namespace sabre
