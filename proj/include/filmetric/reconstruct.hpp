#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "filmetric/image.hpp"
#include "filmetric/optics.hpp"

namespace filmetric {

/// A thickness hypothesis for one pixel: a local minimum of the colour
/// distance d(h) = |pixel/255 - colormap(h)|^2 along the colormap grid.
struct Candidate {
  double thickness_nm;
  double distance;
};

/// Per-pixel candidate lists, each sorted by distance (ties: lower thickness
/// first) and holding between 1 and K entries.
class CandidateSet {
 public:
  CandidateSet() = default;
  CandidateSet(int width, int height, std::vector<std::uint32_t> offsets,
               std::vector<Candidate> entries);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }

  std::span<const Candidate> at(std::size_t pixel) const {
    return {entries_.data() + offsets_[pixel], offsets_[pixel + 1] - offsets_[pixel]};
  }
  std::span<const Candidate> at(int row, int col) const {
    return at(static_cast<std::size_t>(row) * width_ + col);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint32_t> offsets_;
  std::vector<Candidate> entries_;
};

/// Candidates for one colour (channels already in [0, 1]).
std::vector<Candidate> color_candidates(const RgbF& color, const Colormap& colormap, int max_count);

CandidateSet candidates(const Interferogram& img, const Colormap& colormap, int max_count,
                        int threads = 1);

/// Per-pixel global colour match. Ambiguous under phase periodicity.
ThicknessField reconstruct_naive(const Interferogram& img, const Colormap& colormap,
                                 int threads = 1);

struct ReconstructConfig {
  int candidates = 32;               // K
  double smoothness_weight = 1e-4;   // per nm of |h_p - h_q|, in colour-distance units
  int max_iters = 100;               // sweeps per start
  int multiscale_levels = 2;         // 1 = raw data only
  double scale_sigma = 1.0;          // px, smoothing of level 1; doubles per level
  int threads = 1;                   // candidate extraction only

  void validate() const;
};

struct ReconstructResult {
  ThicknessField field;
  double energy = 0.0;
  int iterations = 0;       // sweeps summed over all starts
  bool converged = false;   // winning start stopped before max_iters
  double mean_nm = 0.0;     // over valid pixels
  double elapsed_ms = 0.0;
  std::vector<double> energy_trace;  // winning start, one entry per sweep plus the initial
};

/// Minimizes sum_p d_p(h_p) + w * sum_{p~q} |h_p - h_q| over one candidate
/// per pixel (4-neighbourhood). Each sweep solves every row and then every
/// column exactly by dynamic programming with the other neighbours fixed, so
/// the energy never increases.
/// Starts: best candidate per pixel; a coarse-to-fine pass over Gaussian-
/// smoothed copies of the image (multiscale_levels > 1); `warm_start`. Each
/// is refined on the original data and the lowest energy wins.
/// Masked-out pixels carry no data term and take the lower median of their
/// neighbours.
ReconstructResult reconstruct_regularized(const Interferogram& img, const Colormap& colormap,
                                          const ReconstructConfig& cfg,
                                          const ValidityMask* mask = nullptr,
                                          const ThicknessField* warm_start = nullptr);

/// Energy of an arbitrary thickness field, data terms evaluated through
/// colormap lookup.
double labeling_energy(const ThicknessField& solution, const Interferogram& img,
                       const Colormap& colormap, double smoothness_weight,
                       const ValidityMask* mask = nullptr);

/// (frame index, mean thickness over valid pixels). Each frame warm-starts
/// from the previous frame's solution. `masks` is empty or one per frame.
std::vector<std::pair<int, double>> mean_thickness_series(
    std::span<const Interferogram> frames, const Colormap& colormap, const ReconstructConfig& cfg,
    std::vector<ReconstructResult>* results = nullptr, std::span<const ValidityMask> masks = {});

}  // namespace filmetric
