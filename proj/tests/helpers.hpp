#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "fidcurve/rng.hpp"

namespace testutil {

// Composite Simpson rule with n (even) intervals.
template <typename F>
double simpson(F&& f, double a, double b, int n) {
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

template <typename F>
double central_diff(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Fourth-order central difference, error O(h^4).
template <typename F>
double central_diff4(F&& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12.0 * h);
}

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

// Two-sample Kolmogorov-Smirnov statistic.
inline double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::runtime_error("two_sample_ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  d = std::max(d, std::abs(i / na - j / nb));
  return d;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "fidcurve-XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
    path = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'')
      q += "'\\''";
    else
      q += c;
  }
  q += "'";
  return q;
}

// Runs the command-line binary named by the FIDCURVE_CLI environment variable.
inline CliResult run_cli(const std::vector<std::string>& args,
                         const std::filesystem::path& scratch) {
  const char* exe = std::getenv("FIDCURVE_CLI");
  if (!exe) throw std::runtime_error("FIDCURVE_CLI environment variable not set");
  std::string cmd = shell_quote(exe);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  const auto outp = scratch / "cli_stdout.txt";
  const auto errp = scratch / "cli_stderr.txt";
  cmd += " > " + shell_quote(outp.string()) + " 2> " + shell_quote(errp.string());
  const int status = std::system(cmd.c_str());
  CliResult r;
  if (status == -1)
    r.exit_code = -1;
  else if (WIFEXITED(status))
    r.exit_code = WEXITSTATUS(status);
  else
    r.exit_code = 128;
  r.out = read_file(outp);
  r.err = read_file(errp);
  return r;
}

// Parses one numeric column (0-based) out of a CSV with a header line.
inline std::vector<double> csv_column(const std::string& text, std::size_t col) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      continue;
    }
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::size_t k = 0;
    while (std::getline(ls, cell, ',')) {
      if (k == col) {
        out.push_back(std::strtod(cell.c_str(), nullptr));
        break;
      }
      ++k;
    }
  }
  return out;
}

inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Random expression over variable "t", total on the whole real line: every
// log / sqrt / division argument is bounded away from its domain edge by
// construction, so finite-difference probes never leave the domain.
inline std::string gen_expr(fidcurve::Rng& rng, int depth) {
  auto u = [&] { return fidcurve::uniform01(rng); };
  auto coef = [&](double lo, double hi) { return fmt_num(lo + (hi - lo) * u()); };
  if (depth <= 0) {
    return u() < 0.6 ? std::string("t") : fmt_num(-2.0 + 4.0 * u());
  }
  const double r = u();
  const std::string a = gen_expr(rng, depth - 1);
  if (r < 0.12) return "(" + a + ") + (" + gen_expr(rng, depth - 1) + ")";
  if (r < 0.24) return "(" + a + ") - (" + gen_expr(rng, depth - 1) + ")";
  if (r < 0.36) return "(" + a + ")*(" + gen_expr(rng, depth - 1) + ")";
  if (r < 0.44)
    return "(" + a + ")/((" + gen_expr(rng, depth - 1) + ")^2 + " + coef(0.5, 2.5) + ")";
  if (r < 0.52) {
    const int p = 2 + static_cast<int>(u() * 3.0);
    return "(" + a + ")^" + std::to_string(p);
  }
  if (r < 0.62) return "sin(" + a + ")";
  if (r < 0.72) return "cos(" + a + ")";
  if (r < 0.80) return "exp(sin(" + a + ")*" + coef(0.2, 1.5) + ")";
  if (r < 0.87) return "log((" + a + ")^2 + " + coef(0.5, 2.5) + ")";
  if (r < 0.94) return "sqrt((" + a + ")^2 + " + coef(0.5, 2.5) + ")";
  return "abs(" + a + ")";
}

}  // namespace testutil
