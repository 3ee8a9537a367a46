#include "tap/geometry.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace tap {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::ok: return "ok";
    case Errc::contract: return "contract violation";
    case Errc::range: return "out of range";
    case Errc::overflow: return "overflow";
    case Errc::scene_generation: return "scene generation failed";
    case Errc::session: return "session error";
    case Errc::protocol: return "protocol error";
    case Errc::invalid_action: return "invalid action";
    case Errc::unreachable: return "endpoint unreachable";
    case Errc::diverged: return "replay diverged";
    case Errc::io: return "i/o error";
    case Errc::parse: return "parse error";
    case Errc::internal: return "internal error";
  }
  return "unknown";
}

StateIndex::StateIndex(int s) : s_(s) {
  if (s < 0 || s >= kCount) {
    throw Error(Errc::contract, "packing state index out of [0,5]: " + std::to_string(s));
  }
}

Dims3 orient_dims(const Dims3& d, StateIndex s) {
  switch (s.value()) {
    case 0: return {d.x, d.y, d.z};
    case 1: return {d.y, d.x, d.z};
    case 2: return {d.y, d.z, d.x};
    case 3: return {d.z, d.y, d.x};
    case 4: return {d.x, d.z, d.y};
    default: return {d.z, d.x, d.y};
  }
}

Dims3 quantize_dims(const Dims3& d, int unit) {
  if (unit < 1) throw Error(Errc::contract, "quantization unit must be >= 1");
  auto up = [unit](int v) { return ((v + unit - 1) / unit) * unit; };
  return {up(d.x), up(d.y), up(d.z)};
}

HeightMap::HeightMap(ContainerSpec spec) : HeightMap(spec, {}) {}

HeightMap::HeightMap(ContainerSpec spec, std::vector<int> cells) : spec_(spec), cells_(std::move(cells)) {
  if (!spec_.valid()) throw Error(Errc::contract, "container extents must be >= 1");
  const auto n = static_cast<std::size_t>(spec_.width) * spec_.depth;
  if (cells_.empty()) cells_.assign(n, 0);
  if (cells_.size() != n) throw Error(Errc::contract, "height map cell count does not match extents");
  for (int h : cells_) {
    if (h < 0 || h > spec_.height) throw Error(Errc::contract, "height map cell outside [0, height]");
  }
}

void HeightMap::set(int x, int y, int h) {
  if (x < 0 || y < 0 || x >= spec_.width || y >= spec_.depth) throw Error(Errc::range, "cell out of bounds");
  if (h < 0 || h > spec_.height) throw Error(Errc::overflow, "cell height outside [0, height]");
  cells_[index(x, y)] = h;
}

bool HeightMap::contains(const Footprint& f) const noexcept {
  return f.w >= 1 && f.d >= 1 && f.x0 >= 0 && f.y0 >= 0 && f.x0 + f.w <= spec_.width &&
         f.y0 + f.d <= spec_.depth;
}

int HeightMap::max_under(const Footprint& f) const {
  if (!contains(f)) throw Error(Errc::range, "footprint outside height map");
  int best = 0;
  for (int y = f.y0; y < f.y0 + f.d; ++y) {
    const auto row = cells_.begin() + static_cast<std::ptrdiff_t>(index(f.x0, y));
    best = std::max(best, *std::max_element(row, row + f.w));
  }
  return best;
}

void HeightMap::raise(const Footprint& f, int new_top) {
  if (!contains(f)) throw Error(Errc::range, "footprint outside height map");
  if (new_top > spec_.height) {
    throw Error(Errc::overflow, "new top " + std::to_string(new_top) + " exceeds container height " +
                                    std::to_string(spec_.height));
  }
  if (new_top < max_under(f)) throw Error(Errc::contract, "raise would lower the surface");
  for (int y = f.y0; y < f.y0 + f.d; ++y) {
    const auto row = cells_.begin() + static_cast<std::ptrdiff_t>(index(f.x0, y));
    std::fill(row, row + f.w, new_top);
  }
}

std::int64_t HeightMap::integral() const noexcept {
  return std::accumulate(cells_.begin(), cells_.end(), std::int64_t{0});
}

int max_under_footprint(const HeightMap& hm, const Footprint& f) { return hm.max_under(f); }

HeightMap raise_footprint(HeightMap hm, const Footprint& f, int new_top) {
  hm.raise(f, new_top);
  return hm;
}

namespace {
int floor_log2(int v) {
  int k = 0;
  while ((2 << k) <= v) ++k;
  return k;
}
}  // namespace

RangeMax2D::RangeMax2D(const HeightMap& hm)
    : width_(hm.width()),
      depth_(hm.depth()),
      levels_x_(floor_log2(hm.width()) + 1),
      levels_y_(floor_log2(hm.depth()) + 1) {
  log2_.assign(static_cast<std::size_t>(std::max(width_, depth_)) + 1, 0);
  for (std::size_t i = 2; i < log2_.size(); ++i) log2_[i] = log2_[i / 2] + 1;

  const auto n = static_cast<std::size_t>(width_) * depth_;
  table_.resize(static_cast<std::size_t>(levels_x_) * levels_y_);
  auto& base = table_[level_index(0, 0)];
  base.assign(hm.cells().begin(), hm.cells().end());

  // Level (kx, 0) from (kx-1, 0); then (kx, ky) from (kx, ky-1).
  for (int kx = 0; kx < levels_x_; ++kx) {
    if (kx > 0) {
      const auto& prev = table_[level_index(kx - 1, 0)];
      auto& cur = table_[level_index(kx, 0)];
      cur.assign(n, 0);
      const int half = 1 << (kx - 1);
      for (int y = 0; y < depth_; ++y) {
        for (int x = 0; x + (1 << kx) <= width_; ++x) {
          const auto i = static_cast<std::size_t>(y) * width_ + x;
          cur[i] = std::max(prev[i], prev[i + half]);
        }
      }
    }
    for (int ky = 1; ky < levels_y_; ++ky) {
      const auto& prev = table_[level_index(kx, ky - 1)];
      auto& cur = table_[level_index(kx, ky)];
      cur.assign(n, 0);
      const auto half = static_cast<std::size_t>(1 << (ky - 1)) * width_;
      for (int y = 0; y + (1 << ky) <= depth_; ++y) {
        for (int x = 0; x + (1 << kx) <= width_; ++x) {
          const auto i = static_cast<std::size_t>(y) * width_ + x;
          cur[i] = std::max(prev[i], prev[i + half]);
        }
      }
    }
  }
}

int RangeMax2D::query(const Footprint& f) const {
  if (f.w < 1 || f.d < 1 || f.x0 < 0 || f.y0 < 0 || f.x0 + f.w > width_ || f.y0 + f.d > depth_) {
    throw Error(Errc::range, "footprint outside height map");
  }
  const int kx = log2_[f.w];
  const int ky = log2_[f.d];
  const auto& t = table_[level_index(kx, ky)];
  const int x1 = f.x0 + f.w - (1 << kx);
  const int y1 = f.y0 + f.d - (1 << ky);
  auto at = [&](int x, int y) { return t[static_cast<std::size_t>(y) * width_ + x]; };
  return std::max(std::max(at(f.x0, f.y0), at(x1, f.y0)), std::max(at(f.x0, y1), at(x1, y1)));
}

}  // namespace tap
