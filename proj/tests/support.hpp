#pragma once

// Shared test helpers: exact rationals, brute-force oracles, fixture paths.

#include <array>
#include <cstdint>
#include <cstdio>
#include <sys/wait.h>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "lazyelicit/frontier.hpp"

namespace lazyelicit::test {

class Fraction {
 public:
  Fraction(std::int64_t num = 0, std::int64_t den = 1) : num_(num), den_(den) { normalize(); }

  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Fraction operator+(Fraction a, Fraction b) { return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_}; }
  friend Fraction operator*(Fraction a, Fraction b) { return {a.num_ * b.num_, a.den_ * b.den_}; }
  friend bool operator==(Fraction a, Fraction b) { return a.num_ == b.num_ && a.den_ == b.den_; }

 private:
  void normalize() {
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    const auto g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  std::int64_t num_;
  std::int64_t den_;
};

/// Pairwise definition: a plan survives iff no other plan strictly dominates
/// it and no equal plan has a smaller id.
inline std::set<PlanId> brute_force_frontier(const std::vector<std::vector<double>>& rows) {
  std::set<PlanId> out;
  for (std::size_t b = 0; b < rows.size(); ++b) {
    bool removed = false;
    for (std::size_t a = 0; a < rows.size() && !removed; ++a) {
      if (a == b) continue;
      bool ge = true, gt = false;
      for (std::size_t i = 0; i < rows[b].size(); ++i) {
        if (rows[a][i] < rows[b][i]) ge = false;
        if (rows[a][i] > rows[b][i]) gt = true;
      }
      if (ge && (gt || a < b)) removed = true;
    }
    if (!removed) out.insert(b);
  }
  return out;
}

/// Spearman's rho from the textbook formula with independently computed
/// descending midranks (O(m^2) counting).
inline double spearman_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double greater = 0, equal = 0;
      for (double u : v) {
        if (u > v[i]) ++greater;
        if (u == v[i]) ++equal;
      }
      r[i] = greater + (equal + 1) / 2.0;
    }
    return r;
  };
  const auto a = ranks(x), b = ranks(y);
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  const double m = static_cast<double>(a.size());
  return 1.0 - 6.0 * s / (m * m * m - m);
}

inline std::string fixture(const std::string& name) { return std::string(LAZYELICIT_FIXTURES) + "/" + name; }

struct CommandResult {
  int exit_code = -1;
  std::string out;
};

/// Runs a shell command, capturing stdout; stderr is discarded.
inline CommandResult run(const std::string& command) {
  CommandResult r;
  FILE* pipe = popen((command + " 2>/dev/null").c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace lazyelicit::test
