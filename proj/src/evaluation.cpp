#include "laps/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "laps/errors.hpp"

namespace laps {

namespace {

constexpr double kMergeEps = 1e-6;

}  // namespace

std::vector<double> extract_boundaries(std::span<const Primitive> primitives, const BoundaryOptions& opts) {
  std::vector<double> times;
  times.reserve(primitives.size() * 2);
  for (const auto& p : primitives) {
    if (opts.include_endpoints || p.start_frame != 0) times.push_back(p.start_s);
    if (opts.include_endpoints || !p.truncated) times.push_back(p.end_s);
  }
  std::sort(times.begin(), times.end());
  std::vector<double> out;
  for (double t : times) {
    if (out.empty() || t - out.back() > kMergeEps) out.push_back(t);
  }
  return out;
}

F1Result boundary_f1(std::span<const double> pred, std::span<const double> gt, double tol) {
  if (!(tol > 0.0)) throw DataError("boundary_f1: tolerance must be positive");
  if (!std::is_sorted(pred.begin(), pred.end())) throw DataError("boundary_f1: predicted boundaries not sorted");
  if (!std::is_sorted(gt.begin(), gt.end())) throw DataError("boundary_f1: ground-truth boundaries not sorted");
  F1Result r;
  r.tolerance_s = tol;
  std::size_t i = 0, j = 0;
  while (i < pred.size() && j < gt.size()) {
    if (std::abs(pred[i] - gt[j]) <= tol) {
      ++r.tp;
      ++i;
      ++j;
    } else if (pred[i] < gt[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  r.fp = pred.size() - r.tp;
  r.fn = gt.size() - r.tp;
  r.precision = pred.empty() ? 0.0 : static_cast<double>(r.tp) / pred.size();
  r.recall = gt.empty() ? 0.0 : static_cast<double>(r.tp) / gt.size();
  r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

}  // namespace laps
