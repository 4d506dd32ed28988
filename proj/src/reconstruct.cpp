#include "filmetric/reconstruct.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>

#include "filmetric/error.hpp"
#include "filmetric/parallel.hpp"

namespace filmetric {

namespace {

constexpr double kDistanceScale = 1099511627776.0;  // 2^40

bool candidate_before(const Candidate& a, const Candidate& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.thickness_nm < b.thickness_nm;
}

// Per-pixel data for one solve: which pixels carry a data term, and their
// candidate lists.
struct Level {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> valid;
  CandidateSet cands;

  std::size_t size() const { return valid.size(); }
};

// Gaussian smoothing of the valid pixels only (normalized convolution), in
// [0, 1] colour units. Pixels with no valid support keep their own colour.
std::vector<RgbF> smooth_valid(const Interferogram& img, const std::vector<std::uint8_t>& valid,
                               double sigma) {
  const int w = img.width(), h = img.height();
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));

  const std::size_t n = img.pixel_count();
  const auto data = img.data();
  // Channels 0..2 hold weighted colour, channel 3 the weight.
  std::vector<std::array<double, 4>> src(n), tmp(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double m = valid[p] ? 1.0 : 0.0;
    src[p] = {m * data[3 * p] / 255.0, m * data[3 * p + 1] / 255.0, m * data[3 * p + 2] / 255.0, m};
  }
  auto pass = [&](const std::vector<std::array<double, 4>>& in,
                  std::vector<std::array<double, 4>>& out, bool horizontal) {
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        std::array<double, 4> acc{};
        for (int i = -radius; i <= radius; ++i) {
          const int rr = horizontal ? r : r + i, cc = horizontal ? c + i : c;
          if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
          const auto& v = in[static_cast<std::size_t>(rr) * w + cc];
          for (int k = 0; k < 4; ++k) acc[k] += kernel[i + radius] * v[k];
        }
        out[static_cast<std::size_t>(r) * w + c] = acc;
      }
  };
  pass(src, tmp, true);
  pass(tmp, src, false);

  std::vector<RgbF> out(n);
  for (std::size_t p = 0; p < n; ++p) {
    if (src[p][3] > 1e-12)
      out[p] = {src[p][0] / src[p][3], src[p][1] / src[p][3], src[p][2] / src[p][3]};
    else
      out[p] = {data[3 * p] / 255.0, data[3 * p + 1] / 255.0, data[3 * p + 2] / 255.0};
  }
  return out;
}

CandidateSet color_grid_candidates(std::span<const RgbF> colors, int width, int height,
                                   const Colormap& colormap, int max_count, int threads) {
  std::vector<std::vector<Candidate>> lists(colors.size());
  parallel_for(colors.size(), threads,
               [&](std::size_t p) { lists[p] = color_candidates(colors[p], colormap, max_count); });
  std::vector<std::uint32_t> offsets(colors.size() + 1, 0);
  std::vector<Candidate> entries;
  for (std::size_t p = 0; p < lists.size(); ++p) {
    entries.insert(entries.end(), lists[p].begin(), lists[p].end());
    offsets[p + 1] = static_cast<std::uint32_t>(entries.size());
  }
  return CandidateSet(width, height, std::move(offsets), std::move(entries));
}

std::size_t nearest_candidate(std::span<const Candidate> cands, double target) {
  std::size_t best = 0;
  double best_gap = std::abs(cands[0].thickness_nm - target);
  for (std::size_t k = 1; k < cands.size(); ++k) {
    const double gap = std::abs(cands[k].thickness_nm - target);
    if (gap < best_gap || (gap == best_gap && cands[k].thickness_nm < cands[best].thickness_nm)) {
      best = k;
      best_gap = gap;
    }
  }
  return best;
}

class IcmSolver {
 public:
  IcmSolver(const Level& level, double weight) : lv_(level), w_(weight) { build_order(); }

  // Sets labels from target thicknesses (nearest candidate); masked pixels
  // take the target itself.
  void init_from(std::span<const double> target) {
    h_.assign(lv_.size(), 0.0);
    label_.assign(lv_.size(), -1);
    for (std::size_t p = 0; p < lv_.size(); ++p) {
      if (lv_.valid[p]) {
        label_[p] = static_cast<int>(nearest_candidate(lv_.cands.at(p), target[p]));
        h_[p] = lv_.cands.at(p)[label_[p]].thickness_nm;
      } else {
        h_[p] = target[p];
      }
    }
  }

  // Best candidate everywhere; masked pixels copy the nearest valid pixel
  // (multi-source BFS in raster seed order).
  void init_best() {
    h_.assign(lv_.size(), 0.0);
    label_.assign(lv_.size(), -1);
    std::vector<std::uint8_t> seen(lv_.size(), 0);
    std::deque<std::size_t> queue;
    for (std::size_t p = 0; p < lv_.size(); ++p)
      if (lv_.valid[p]) {
        label_[p] = 0;
        h_[p] = lv_.cands.at(p)[0].thickness_nm;
        seen[p] = 1;
        queue.push_back(p);
      }
    if (queue.empty()) throw ConfigError("reconstruction needs at least one valid pixel");
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      for_each_neighbor(p, [&](std::size_t q) {
        if (!seen[q]) {
          seen[q] = 1;
          h_[q] = h_[p];
          queue.push_back(q);
        }
      });
    }
  }

  double energy() const {
    double data = 0.0, smooth = 0.0;
    for (int r = 0; r < lv_.height; ++r)
      for (int c = 0; c < lv_.width; ++c) {
        const std::size_t p = static_cast<std::size_t>(r) * lv_.width + c;
        if (lv_.valid[p]) data += lv_.cands.at(p)[label_[p]].distance;
        if (c + 1 < lv_.width) smooth += std::abs(h_[p] - h_[p + 1]);
        if (r + 1 < lv_.height) smooth += std::abs(h_[p] - h_[p + lv_.width]);
      }
    return data + w_ * smooth;
  }

  // Runs raster-order sweeps; returns {sweeps, converged}.
  std::pair<int, bool> run(int max_iters, std::vector<double>* trace) {
    double e_prev = energy();
    if (trace) trace->push_back(e_prev);
    for (int it = 1; it <= max_iters; ++it) {
      const std::size_t changes = sweep();
      const double e = energy();
      if (trace) trace->push_back(e);
      if (e > e_prev + 1e-9 * (1.0 + std::abs(e_prev)))
        throw NumericalError("ICM energy increased from " + std::to_string(e_prev) + " to " +
                             std::to_string(e));
      e_prev = e;
      if (changes == 0) return {it, true};
    }
    return {max_iters, false};
  }

  std::span<const double> thickness() const { return h_; }

 private:
  template <class F>
  void for_each_neighbor(std::size_t p, F&& f) const {
    const int r = static_cast<int>(p / lv_.width), c = static_cast<int>(p % lv_.width);
    if (r > 0) f(p - lv_.width);
    if (c > 0) f(p - 1);
    if (c + 1 < lv_.width) f(p + 1);
    if (r + 1 < lv_.height) f(p + lv_.width);
  }

  // One sweep: exact DP along every row, then every column, each chain
  // optimized with its off-chain neighbours held fixed; masked pixels stay
  // put inside a chain and move to their neighbours' lower median afterwards.
  // A chain is skipped when nothing on it or on the adjacent parallel chains
  // changed since it was last solved: re-solving could not improve it.
  std::size_t sweep() {
    if (row_solved_.empty()) {
      row_solved_.assign(lv_.height, -1);
      col_solved_.assign(lv_.width, -1);
      row_touched_.assign(lv_.height, 0);
      col_touched_.assign(lv_.width, 0);
    }
    std::size_t changes = 0;
    auto stale = [](const std::vector<long>& touched, long solved, int i) {
      const int n = static_cast<int>(touched.size());
      for (int k = std::max(i - 1, 0); k <= std::min(i + 1, n - 1); ++k)
        if (touched[k] > solved) return true;
      return false;
    };
    for (int r = 0; r < lv_.height; ++r) {
      if (!stale(row_touched_, row_solved_[r], r)) continue;
      row_solved_[r] = ++clock_;
      changes += solve_chain(static_cast<std::size_t>(r) * lv_.width, 1, lv_.width);
    }
    for (int c = 0; c < lv_.width; ++c) {
      if (!stale(col_touched_, col_solved_[c], c)) continue;
      col_solved_[c] = ++clock_;
      changes += solve_chain(static_cast<std::size_t>(c), lv_.width, lv_.height);
    }
    ++clock_;
    double nb[4];
    for (std::size_t p = 0; p < lv_.size(); ++p) {
      if (lv_.valid[p]) continue;
      int n = 0;
      for_each_neighbor(p, [&](std::size_t q) { nb[n++] = h_[q]; });
      if (n == 0) continue;
      std::sort(nb, nb + n);
      const double m = nb[(n - 1) / 2];  // lower median minimizes sum |h - nb|
      if (m != h_[p]) {
        h_[p] = m;
        touch(p);
        ++changes;
      }
    }
    return changes;
  }

  void touch(std::size_t p) {
    row_touched_[p / lv_.width] = clock_;
    col_touched_[p % lv_.width] = clock_;
  }

  // Chain of `len` pixels starting at `start` with index step `stride`.
  std::size_t solve_chain(std::size_t start, std::size_t stride, int len) {
    const bool row = stride == 1;
    std::size_t changes = 0;
    int i = 0;
    while (i < len) {
      // Maximal run of valid pixels; masked pixels are fixed and split runs.
      if (!lv_.valid[start + i * stride]) {
        ++i;
        continue;
      }
      int j = i;
      while (j + 1 < len && lv_.valid[start + (j + 1) * stride]) ++j;
      changes += solve_run(start, stride, i, j, row, len);
      i = j + 1;
    }
    return changes;
  }

  std::size_t solve_run(std::size_t start, std::size_t stride, int first, int last, bool row,
                        int len) {
    const int n = last - first + 1;
    auto pix = [&](int i) { return start + static_cast<std::size_t>(i) * stride; };
    cost_.clear();
    back_.clear();
    offs_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i)
      offs_[i + 1] = offs_[i] + static_cast<std::uint32_t>(lv_.cands.at(pix(first + i)).size());
    cost_.resize(offs_[n]);
    back_.resize(offs_[n]);

    for (int i = 0; i < n; ++i) {
      const std::size_t p = pix(first + i);
      const auto cands = lv_.cands.at(p);
      // Fixed neighbours: across the chain, plus chain ends touching masked pixels.
      double fixed[4];
      int nf = 0;
      const int r = static_cast<int>(p / lv_.width), c = static_cast<int>(p % lv_.width);
      if (row) {
        if (r > 0) fixed[nf++] = h_[p - lv_.width];
        if (r + 1 < lv_.height) fixed[nf++] = h_[p + lv_.width];
      } else {
        if (c > 0) fixed[nf++] = h_[p - 1];
        if (c + 1 < lv_.width) fixed[nf++] = h_[p + 1];
      }
      if (i == 0 && first > 0) fixed[nf++] = h_[pix(first - 1)];
      if (i == n - 1 && last + 1 < len) fixed[nf++] = h_[pix(last + 1)];
      if (i > 0) min_convolve(pix(first + i - 1), offs_[i - 1], p);
      for (std::size_t k = 0; k < cands.size(); ++k) {
        double pair = 0.0;
        for (int f = 0; f < nf; ++f) pair += std::abs(cands[k].thickness_nm - fixed[f]);
        double best = cands[k].distance + w_ * pair;
        int arg = -1;
        if (i > 0) {
          best += conv_[k];
          arg = conv_arg_[k];
        }
        cost_[offs_[i] + k] = best;
        back_[offs_[i] + k] = arg;
      }
    }

    // Keep the current labeling unless the optimum is strictly better.
    int arg = 0;
    for (std::uint32_t k = 1; k < offs_[n] - offs_[n - 1]; ++k)
      if (cost_[offs_[n - 1] + k] < cost_[offs_[n - 1] + arg]) arg = static_cast<int>(k);
    const double current = run_cost(start, stride, first, last, row, len);
    if (!(cost_[offs_[n - 1] + arg] < current - 1e-12 * (1.0 + std::abs(current)))) return 0;
    std::size_t changes = 0;
    for (int i = n - 1; i >= 0; --i) {
      const std::size_t p = pix(first + i);
      if (label_[p] != arg) {
        label_[p] = arg;
        h_[p] = lv_.cands.at(p)[arg].thickness_nm;
        touch(p);
        ++changes;
      }
      arg = back_[offs_[i] + arg];
    }
    return changes;
  }

  // conv_[k] = min_j cost_[base + j] + w |t_k - t_j| over the candidates of
  // pixel q (index j) against those of pixel p (index k). Two passes over
  // both lists in thickness order.
  void min_convolve(std::size_t q, std::uint32_t base, std::size_t p) {
    const auto src = lv_.cands.at(q);
    const auto dst = lv_.cands.at(p);
    const auto so = order(q), dp = order(p);
    conv_.assign(dst.size(), 0.0);
    conv_arg_.assign(dst.size(), -1);
    std::size_t j = 0;
    double best = 0.0;
    int arg = -1;
    for (std::size_t a = 0; a < dp.size(); ++a) {
      const int k = dp[a];
      const double x = dst[k].thickness_nm;
      for (; j < so.size() && src[so[j]].thickness_nm <= x; ++j) {
        const double v = cost_[base + so[j]] - w_ * src[so[j]].thickness_nm;
        if (arg < 0 || v < best) {
          best = v;
          arg = so[j];
        }
      }
      conv_arg_[k] = arg;
      if (arg >= 0) conv_[k] = best + w_ * x;
    }
    j = so.size();
    arg = -1;
    for (std::size_t a = dp.size(); a-- > 0;) {
      const int k = dp[a];
      const double x = dst[k].thickness_nm;
      for (; j > 0 && src[so[j - 1]].thickness_nm >= x; --j) {
        const double v = cost_[base + so[j - 1]] + w_ * src[so[j - 1]].thickness_nm;
        if (arg < 0 || v < best) {
          best = v;
          arg = so[j - 1];
        }
      }
      if (arg >= 0 && (conv_arg_[k] < 0 || best - w_ * x < conv_[k])) {
        conv_[k] = best - w_ * x;
        conv_arg_[k] = arg;
      }
    }
  }

  // Candidate indices of pixel p sorted by thickness.
  std::span<const int> order(std::size_t p) const {
    return {order_.data() + order_offs_[p], order_offs_[p + 1] - order_offs_[p]};
  }

  void build_order() {
    order_offs_.assign(lv_.size() + 1, 0);
    for (std::size_t p = 0; p < lv_.size(); ++p)
      order_offs_[p + 1] = order_offs_[p] + static_cast<std::uint32_t>(lv_.cands.at(p).size());
    order_.resize(order_offs_.back());
    for (std::size_t p = 0; p < lv_.size(); ++p) {
      const auto cands = lv_.cands.at(p);
      int* o = order_.data() + order_offs_[p];
      for (std::size_t k = 0; k < cands.size(); ++k) o[k] = static_cast<int>(k);
      std::sort(o, o + cands.size(), [&](int a, int b) {
        return cands[a].thickness_nm < cands[b].thickness_nm;
      });
    }
  }

  // Cost of the current labels on a run, matching the DP objective.
  double run_cost(std::size_t start, std::size_t stride, int first, int last, bool row,
                  int len) const {
    auto pix = [&](int i) { return start + static_cast<std::size_t>(i) * stride; };
    double total = 0.0;
    for (int i = first; i <= last; ++i) {
      const std::size_t p = pix(i);
      const double h = h_[p];
      total += lv_.cands.at(p)[label_[p]].distance;
      double pair = 0.0;
      const int r = static_cast<int>(p / lv_.width), c = static_cast<int>(p % lv_.width);
      if (row) {
        if (r > 0) pair += std::abs(h - h_[p - lv_.width]);
        if (r + 1 < lv_.height) pair += std::abs(h - h_[p + lv_.width]);
      } else {
        if (c > 0) pair += std::abs(h - h_[p - 1]);
        if (c + 1 < lv_.width) pair += std::abs(h - h_[p + 1]);
      }
      if (i == first && first > 0) pair += std::abs(h - h_[pix(first - 1)]);
      if (i == last && last + 1 < len) pair += std::abs(h - h_[pix(last + 1)]);
      if (i > first) pair += std::abs(h - h_[pix(i - 1)]);
      total += w_ * pair;
    }
    return total;
  }

  const Level& lv_;
  double w_;
  std::vector<double> h_;
  std::vector<int> label_;
  std::vector<double> cost_;
  std::vector<int> back_;
  std::vector<std::uint32_t> offs_;
  std::vector<double> conv_;
  std::vector<int> conv_arg_;
  std::vector<int> order_;
  std::vector<std::uint32_t> order_offs_;
  // Change bookkeeping: a logical clock, when each chain was last solved,
  // and the latest change time on each row and column.
  long clock_ = 0;
  std::vector<long> row_solved_, col_solved_, row_touched_, col_touched_;
};

ThicknessField to_field(int width, int height, std::span<const double> h) {
  return ThicknessField(width, height, std::vector<double>(h.begin(), h.end()));
}

double valid_mean(const ThicknessField& f, const ValidityMask* mask) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!mask || mask->valid(i)) {
      sum += f[i];
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace

CandidateSet::CandidateSet(int width, int height, std::vector<std::uint32_t> offsets,
                           std::vector<Candidate> entries)
    : width_(width), height_(height), offsets_(std::move(offsets)), entries_(std::move(entries)) {
  if (offsets_.size() != static_cast<std::size_t>(width) * height + 1)
    throw ConfigError("candidate offsets do not match image size");
}

std::vector<Candidate> color_candidates(const RgbF& color, const Colormap& colormap,
                                        int max_count) {
  if (max_count < 1) throw ConfigError("candidate count K must be >= 1");
  const std::size_t n = colormap.size();
  thread_local std::vector<double> d;
  thread_local std::vector<Candidate> minima;
  d.resize(n);
  const double* lut = colormap.rgb().data()->data();
  const double c0 = color[0], c1 = color[1], c2 = color[2];
  for (std::size_t i = 0; i < n; ++i) {
    const double dr = c0 - lut[3 * i];
    const double dg = c1 - lut[3 * i + 1];
    const double db = c2 - lut[3 * i + 2];
    // Resolve distances on a 2^-40 grid so copies of one colour that differ
    // only by rounding tie exactly and fall to the lowest thickness.
    d[i] = std::nearbyint((dr * dr + dg * dg + db * db) * kDistanceScale) / kDistanceScale;
  }

  // Local minima as plateau runs; a run represents itself by its left end.
  minima.clear();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && d[i - 1] <= d[i]) continue;  // not the left end of a descent
    std::size_t j = i;
    while (j + 1 < n && d[j + 1] == d[i]) ++j;
    if (j + 1 == n || d[j + 1] > d[i]) minima.push_back({colormap.grid().at(i), d[i]});
    i = j;
  }
  const std::size_t keep = std::min(minima.size(), static_cast<std::size_t>(max_count));
  std::partial_sort(minima.begin(), minima.begin() + static_cast<std::ptrdiff_t>(keep),
                    minima.end(), candidate_before);
  return {minima.begin(), minima.begin() + static_cast<std::ptrdiff_t>(keep)};
}

CandidateSet candidates(const Interferogram& img, const Colormap& colormap, int max_count,
                        int threads) {
  if (max_count < 1) throw ConfigError("candidate count K must be >= 1");
  const std::size_t n = img.pixel_count();
  const auto data = img.data();

  // Identical colours share one scan.
  std::unordered_map<std::uint32_t, std::uint32_t> slot_of;
  std::vector<std::uint32_t> keys;
  std::vector<std::uint32_t> pixel_slot(n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::uint32_t key = (std::uint32_t(data[3 * p]) << 16) |
                              (std::uint32_t(data[3 * p + 1]) << 8) | data[3 * p + 2];
    auto [it, inserted] = slot_of.try_emplace(key, static_cast<std::uint32_t>(keys.size()));
    if (inserted) keys.push_back(key);
    pixel_slot[p] = it->second;
  }

  std::vector<std::vector<Candidate>> per_color(keys.size());
  parallel_for(keys.size(), threads, [&](std::size_t k) {
    const std::uint32_t key = keys[k];
    const RgbF color{((key >> 16) & 0xff) / 255.0, ((key >> 8) & 0xff) / 255.0,
                     (key & 0xff) / 255.0};
    per_color[k] = color_candidates(color, colormap, max_count);
  });

  std::vector<std::uint32_t> offsets(n + 1, 0);
  std::vector<Candidate> entries;
  entries.reserve(n * static_cast<std::size_t>(max_count));
  for (std::size_t p = 0; p < n; ++p) {
    const auto& list = per_color[pixel_slot[p]];
    entries.insert(entries.end(), list.begin(), list.end());
    offsets[p + 1] = static_cast<std::uint32_t>(entries.size());
  }
  return CandidateSet(img.width(), img.height(), std::move(offsets), std::move(entries));
}

ThicknessField reconstruct_naive(const Interferogram& img, const Colormap& colormap,
                                 int threads) {
  const CandidateSet cs = candidates(img, colormap, 1, threads);
  ThicknessField out(img.width(), img.height());
  for (std::size_t p = 0; p < cs.pixel_count(); ++p) out[p] = cs.at(p)[0].thickness_nm;
  return out;
}

void ReconstructConfig::validate() const {
  if (candidates < 1) throw ConfigError("candidate count K must be >= 1");
  if (!(smoothness_weight >= 0.0)) throw ConfigError("smoothness weight must be >= 0");
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (multiscale_levels < 1 || multiscale_levels > 6)
    throw ConfigError("multiscale_levels must be in [1, 6]");
  if (!(scale_sigma > 0.0) || scale_sigma > 10.0) throw ConfigError("scale_sigma must be in (0, 10]");
}

ReconstructResult reconstruct_regularized(const Interferogram& img, const Colormap& colormap,
                                          const ReconstructConfig& cfg, const ValidityMask* mask,
                                          const ThicknessField* warm_start) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int width = img.width(), height = img.height();
  if (mask && (mask->width() != width || mask->height() != height))
    throw ConfigError("validity mask does not match image size");
  if (warm_start && (warm_start->width() != width || warm_start->height() != height))
    throw ConfigError("warm start does not match image size");

  Level base;
  base.width = width;
  base.height = height;
  base.valid.resize(img.pixel_count());
  for (std::size_t p = 0; p < img.pixel_count(); ++p) base.valid[p] = mask ? mask->valid(p) : 1;
  base.cands = candidates(img, colormap, cfg.candidates, cfg.threads);

  ReconstructResult result;
  bool have = false;
  // Every start is refined on the unsmoothed data; lowest energy wins, and
  // earlier starts win ties.
  auto consider = [&](IcmSolver& solver) {
    std::vector<double> trace;
    const auto [sweeps, converged] = solver.run(cfg.max_iters, &trace);
    result.iterations += sweeps;
    const double e = solver.energy();
    if (!have || e < result.energy) {
      have = true;
      result.energy = e;
      result.converged = converged;
      result.energy_trace = std::move(trace);
      result.field = to_field(width, height, solver.thickness());
    }
  };

  {
    IcmSolver solver(base, cfg.smoothness_weight);
    solver.init_best();
    consider(solver);
  }
  if (cfg.multiscale_levels > 1) {
    // Scale space on the full grid: level l sees the image smoothed with
    // sigma = scale_sigma * 2^(l-1). Coarsest first; each finer level starts
    // from the coarser solution, and the raw data refines last.
    std::vector<double> carried;
    for (int l = cfg.multiscale_levels - 1; l >= 1; --l) {
      Level lv;
      lv.width = width;
      lv.height = height;
      lv.valid = base.valid;
      const double sigma = cfg.scale_sigma * static_cast<double>(1 << (l - 1));
      lv.cands = color_grid_candidates(smooth_valid(img, base.valid, sigma), width, height,
                                       colormap, cfg.candidates, cfg.threads);
      IcmSolver pre(lv, cfg.smoothness_weight);
      if (carried.empty())
        pre.init_best();
      else
        pre.init_from(carried);
      result.iterations += pre.run(cfg.max_iters, nullptr).first;
      carried.assign(pre.thickness().begin(), pre.thickness().end());
    }
    IcmSolver solver(base, cfg.smoothness_weight);
    solver.init_from(carried);
    consider(solver);
  }
  if (warm_start) {
    IcmSolver solver(base, cfg.smoothness_weight);
    solver.init_from(warm_start->values());
    consider(solver);
  }

  result.mean_nm = valid_mean(result.field, mask);
  result.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

double labeling_energy(const ThicknessField& h, const Interferogram& img, const Colormap& colormap,
                       double w, const ValidityMask* mask) {
  if (h.width() != img.width() || h.height() != img.height())
    throw ConfigError("solution does not match image size");
  double data = 0.0, smooth = 0.0;
  for (int r = 0; r < h.height(); ++r)
    for (int c = 0; c < h.width(); ++c) {
      if (!mask || mask->valid(r, c)) {
        const RgbF m = colormap.lookup(h.at(r, c));
        const Rgb8 px = img.pixel(r, c);
        for (int k = 0; k < 3; ++k) {
          const double diff = px[k] / 255.0 - m[k];
          data += diff * diff;
        }
      }
      if (c + 1 < h.width()) smooth += std::abs(h.at(r, c) - h.at(r, c + 1));
      if (r + 1 < h.height()) smooth += std::abs(h.at(r, c) - h.at(r + 1, c));
    }
  return data + w * smooth;
}

std::vector<std::pair<int, double>> mean_thickness_series(std::span<const Interferogram> frames,
                                                          const Colormap& colormap,
                                                          const ReconstructConfig& cfg,
                                                          std::vector<ReconstructResult>* results,
                                                          std::span<const ValidityMask> masks) {
  if (frames.empty()) throw ConfigError("mean thickness series needs at least one frame");
  if (!masks.empty() && masks.size() != frames.size())
    throw ConfigError("need one mask per frame");
  std::vector<std::pair<int, double>> series;
  std::optional<ThicknessField> previous;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (previous && (frames[i].width() != previous->width() ||
                     frames[i].height() != previous->height()))
      previous.reset();
    ReconstructResult r = reconstruct_regularized(frames[i], colormap, cfg,
                                                  masks.empty() ? nullptr : &masks[i],
                                                  previous ? &*previous : nullptr);
    series.emplace_back(static_cast<int>(i), r.mean_nm);
    previous = r.field;
    if (results) results->push_back(std::move(r));
  }
  return series;
}

}  // namespace filmetric
