#pragma once

// Independent reference computations used as test oracles. They share no
// code with the library beyond the state accessors.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include "fairrec/model.hpp"

namespace fairrec::testing {

inline std::vector<std::int64_t> recount_followers(const PlatformState& s) {
  std::vector<std::int64_t> out(s.creators(), 0);
  for (UserId u = 0; u < s.users(); ++u) {
    for (Rank r = 1; r <= s.creators(); ++r) out[r - 1] += s.follows(u, r);
  }
  return out;
}

// Creator i (1-based) is fair iff it sits within the first i positions of the
// descending order when all tied creators are placed ahead of it.
inline std::vector<bool> brute_force_fairness(const std::vector<std::int64_t>& a) {
  const std::size_t n = a.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<bool> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Put i last among everything that ties with it.
    std::vector<std::size_t> sorted = order;
    std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t x, std::size_t y) {
      if (a[x] != a[y]) return a[x] > a[y];
      return x != i && y == i;
    });
    const auto pos = static_cast<std::size_t>(std::find(sorted.begin(), sorted.end(), i) - sorted.begin());
    out[i] = pos + 1 <= i + 1;
  }
  return out;
}

// Probability of S = X_1 - X_2 > 0 after one ordered comparison of creator 1
// against creator 2 with k users per group, by summing over every sequence of
// individual follow outcomes. Group A sees (1, 2), group B sees (2, 1).
inline double exact_pairwise_win_probability(double p, int k) {
  // Distribution of one A-user's contribution (x1 - x2) and one B-user's.
  // A: t=1 rec 1 from empty -> follow w.p. p. t=2 rec 2: worse than 1 if
  //    followed (w.p. 1-p), otherwise better than nothing (w.p. p).
  // B: t=1 rec 2 from empty -> follow w.p. p. t=2 rec 1: better than 2 or
  //    than nothing, followed w.p. p either way.
  std::vector<double> user_a(3, 0.0), user_b(3, 0.0);  // index = diff + 1
  for (int f1 = 0; f1 < 2; ++f1) {
    for (int f2 = 0; f2 < 2; ++f2) {
      const double q1 = f1 ? p : 1 - p;
      const double p2 = f1 ? 1 - p : p;
      const double q2 = f2 ? p2 : 1 - p2;
      user_a[f1 - f2 + 1] += q1 * q2;
      const double r1 = f1 ? p : 1 - p;   // B follows 2 at t=1
      const double r2 = f2 ? p : 1 - p;   // B follows 1 at t=2
      user_b[f2 - f1 + 1] += r1 * r2;
    }
  }
  // Convolve k A-users and k B-users.
  std::vector<double> dist{1.0};  // offset = number of users so far
  auto convolve = [&](const std::vector<double>& step) {
    std::vector<double> next(dist.size() + 2, 0.0);
    for (std::size_t i = 0; i < dist.size(); ++i) {
      for (std::size_t j = 0; j < 3; ++j) next[i + j] += dist[i] * step[j];
    }
    dist = std::move(next);
  };
  for (int i = 0; i < k; ++i) convolve(user_a);
  for (int i = 0; i < k; ++i) convolve(user_b);
  const int offset = 2 * k;
  double win = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (static_cast<int>(i) - offset > 0) win += dist[i];
  }
  return win;
}

}  // namespace fairrec::testing
