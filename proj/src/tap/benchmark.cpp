#include "tap/benchmark.hpp"

#include <algorithm>
#include <optional>
#include <random>
#include <string>
#include <tuple>

namespace tap {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) noexcept {
  std::uint64_t x = base ^ (tag * 0xd1b54a32d192ed03ULL);
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<Dims3> gen_rand(int count, DimsRange range, int unit, std::uint64_t seed) {
  if (unit < 1) throw Error(Errc::contract, "unit must be >= 1");
  const int lo = (range.lo + unit - 1) / unit;
  const int hi = range.hi / unit;
  if (range.lo < 1 || lo > hi) throw Error(Errc::contract, "dims range holds no multiple of the unit");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(lo, hi);
  std::vector<Dims3> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    const int x = pick(rng) * unit;
    const int y = pick(rng) * unit;
    const int z = pick(rng) * unit;
    out.push_back({x, y, z});
  }
  return out;
}

std::vector<Dims3> gen_fix(int count, int catalogue_size, DimsRange range, std::uint64_t catalogue_seed,
                           std::uint64_t seed) {
  if (catalogue_size < 1) throw Error(Errc::contract, "catalogue needs at least one box");
  const auto catalogue = gen_rand(catalogue_size, range, 1, catalogue_seed);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, catalogue.size() - 1);
  std::vector<Dims3> out;
  for (int i = 0; i < count; ++i) out.push_back(catalogue[pick(rng)]);
  return out;
}

namespace {

struct Piece {
  std::array<int, 3> corner;
  std::array<int, 3> size;
  std::int64_t volume() const { return static_cast<std::int64_t>(size[0]) * size[1] * size[2]; }
};

std::optional<std::vector<Piece>> try_split(int count, ContainerSpec spec, int unit, std::mt19937_64& rng) {
  const int min_edge = 2 * unit;
  std::vector<Piece> pieces{{{0, 0, 0}, {spec.width, spec.depth, spec.height}}};
  auto cuttable = [&](const Piece& p) { return *std::max_element(p.size.begin(), p.size.end()) >= 2 * min_edge; };

  while (static_cast<int>(pieces.size()) < count) {
    std::vector<double> weights;
    for (const auto& p : pieces) weights.push_back(cuttable(p) ? static_cast<double>(p.volume()) : 0.0);
    if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; })) return std::nullopt;
    std::discrete_distribution<std::size_t> choose(weights.begin(), weights.end());
    const std::size_t chosen = choose(rng);
    const Piece p = pieces[chosen];

    const int longest = *std::max_element(p.size.begin(), p.size.end());
    std::vector<int> axes;
    for (int a = 0; a < 3; ++a) {
      if (p.size[a] == longest) axes.push_back(a);
    }
    const int axis = axes[std::uniform_int_distribution<std::size_t>(0, axes.size() - 1)(rng)];
    // Cut offsets in whole units, keeping both halves >= min_edge.
    const int lo = (min_edge + unit - 1) / unit;
    const int hi = (p.size[axis] - min_edge) / unit;
    if (lo > hi) return std::nullopt;
    const int cut = std::uniform_int_distribution<int>(lo, hi)(rng) * unit;

    Piece a = p;
    Piece b = p;
    a.size[axis] = cut;
    b.corner[axis] += cut;
    b.size[axis] = p.size[axis] - cut;
    pieces[chosen] = a;
    pieces.push_back(b);
  }
  return pieces;
}

}  // namespace

PpsgInstance gen_ppsg(int count, ContainerSpec spec, std::uint64_t seed, int unit) {
  if (count < 1) throw Error(Errc::contract, "PPSG needs at least one box");
  if (!spec.valid() || unit < 1) throw Error(Errc::contract, "invalid PPSG container or unit");
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    auto pieces = try_split(count, spec, unit, rng);
    if (!pieces) continue;

    std::vector<std::size_t> order(pieces->size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    PpsgInstance inst;
    inst.spec = spec;
    std::vector<int> box_of_piece(pieces->size());
    for (std::size_t b = 0; b < order.size(); ++b) {
      const Piece& p = (*pieces)[order[b]];
      inst.boxes.push_back({p.size[0], p.size[1], p.size[2]});
      box_of_piece[order[b]] = static_cast<int>(b);
    }
    for (std::size_t i = 0; i < pieces->size(); ++i) {
      inst.solution.push_back({box_of_piece[i], (*pieces)[i].corner});
    }
    std::sort(inst.solution.begin(), inst.solution.end(), [](const PpsgPlacement& a, const PpsgPlacement& b) {
      return std::tuple(a.corner[2], a.corner[1], a.corner[0]) < std::tuple(b.corner[2], b.corner[1], b.corner[0]);
    });
    return inst;
  }
  throw Error(Errc::scene_generation,
              "could not split the container into " + std::to_string(count) + " pieces after 100 attempts");
}

}  // namespace tap
