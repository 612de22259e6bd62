#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "riskgraph/data_model.hpp"
#include "riskgraph/random.hpp"
#include "riskgraph/tensor.hpp"

namespace rgtest {

using namespace riskgraph;

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("riskgraph-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline PostRecord make_post(const std::string& user, int index, std::int64_t timestamp,
                            int total_tokens = 10) {
  PostRecord p;
  p.post_id = user + "-p" + std::to_string(index);
  p.user_id = user;
  p.timestamp = timestamp;
  p.hour = static_cast<int>((timestamp / 3600) % 24);
  p.total_tokens = total_tokens;
  p.text_embedding = pseudo_embed(p.post_id, kTextWidth);
  return p;
}

inline UserRecord make_user(const std::string& id, int posts = 1, int label = 0) {
  UserRecord u;
  u.user_id = id;
  u.label = label;
  for (int i = 0; i < posts; ++i) u.posts.push_back(make_post(id, i, 1'600'000'000 + 3600 * i));
  return u;
}

// Users u0..u{n-1}, alternating labels, every user in `split`.
inline CohortDataset tiny_cohort(int n, Split split = Split::train) {
  CohortDataset d;
  for (int i = 0; i < n; ++i) {
    auto u = make_user("u" + std::to_string(i), 1 + i % 3, i % 2);
    d.split[u.user_id] = split;
    d.users.push_back(std::move(u));
  }
  return d;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = rng.uniform(-scale, scale);
  return m;
}

inline Vector random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  Vector v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

// Finite-difference agreement: absolute 1e-6 or relative 1e-4.
inline bool grad_close(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  return diff <= 1e-6 || diff <= 1e-4 * std::max(std::abs(analytic), std::abs(numeric));
}

}  // namespace rgtest
