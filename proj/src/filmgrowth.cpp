#include "jjfab/filmgrowth.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <numeric>
#include <random>

#include "jjfab/errors.hpp"
#include "jjfab/parallel.hpp"

namespace jjfab::filmgrowth {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Solid-on-solid lattice: every landing particle adds one to a column height.
class Lattice {
 public:
  Lattice(int nx, int ny, std::vector<int> heights, const GrowthConfig& cfg)
      : nx_(nx),
        ny_(ny),
        h_(std::move(heights)),
        impure_(h_.size(), 0),
        cfg_(cfg),
        tan_(std::tan(cfg.incidence_angle_deg * kDeg)),
        rng_(cfg.rng_seed) {
    top_ = h_.empty() ? 0 : *std::max_element(h_.begin(), h_.end());
    blocks_per_row_ = (nx_ + kBlock - 1) / kBlock;
    block_max_.assign(static_cast<std::size_t>(blocks_per_row_) * static_cast<std::size_t>(ny_), 0);
    for (int y = 0; y < ny_; ++y)
      for (int x = 0; x < nx_; ++x) {
        int& bm = block_max_[block(x, y)];
        bm = std::max(bm, h_[idx(x, y)]);
      }
  }

  /// Treat x as open: columns [0, wall_width) are resist whose top continues
  /// to the left at the height of column 0, and paths leaving the right edge
  /// are redrawn. Adatoms do not cross the resist edge.
  void open_boundary(int wall_width) {
    open_x_ = true;
    film_start_ = wall_width;
    refresh_edge_min();
    film_top_ = 0;
    for (int y = 0; y < ny_; ++y)
      for (int x = film_start_; x < nx_; ++x) film_top_ = std::max(film_top_, h_[idx(x, y)]);
  }

  void deposit(std::int64_t count) {
    std::uniform_int_distribution<int> uy(0, ny_ - 1);
    const bool slanted = cfg_.mode == GrowthMode::ballistic_shadowed && tan_ > 0.0;
    for (std::int64_t k = 0; k < count;) {
      const int y = ny_ > 1 ? uy(rng_) : 0;
      int col;
      if (!slanted) {
        const double x0 = std::uniform_real_distribution<double>(0.0, nx_)(rng_);
        col = std::min(static_cast<int>(x0), nx_ - 1);
      } else if (!open_x_) {
        const double x0 = std::uniform_real_distribution<double>(0.0, nx_)(rng_);
        col = intercept(x0, static_cast<double>(top_) + 1.0, y);
      } else {
        col = open_intercept(y);
      }
      if (col < 0) continue;
      land(idx(col, y));
      ++k;
    }
  }

  SurfaceRecord release(std::int64_t deposited) && {
    SurfaceRecord s;
    s.nx = nx_;
    s.ny = ny_;
    s.heights = std::move(h_);
    s.impurity = std::move(impure_);
    s.deposited = deposited;
    s.config_echo = cfg_;
    return s;
  }

  const std::vector<int>& heights() const { return h_; }

 private:
  std::size_t idx(int x, int y) const {
    return static_cast<std::size_t>(x) + static_cast<std::size_t>(nx_) * static_cast<std::size_t>(y);
  }

  // Follow the slanted path from just above the highest column. A path that
  // dips below a column top while crossing it lands on that column; a path
  // that meets a column's side face sticks to the face and is assigned to
  // the column it was crossing. Columns behind a tall one stay shadowed.
  // Whole blocks are skipped while the path stays above their tallest column.
  int intercept(double x0, double z0, int y) const {
    const double inv_tan = 1.0 / tan_;
    double z = z0;
    int col = std::min(static_cast<int>(x0), nx_ - 1);
    // Path position measured from the left face of `col`.
    double frac = x0 - std::floor(x0);
    for (;;) {
      if (col % kBlock == 0 && frac == 0.0) {
        const int end = std::min(col + kBlock, nx_);
        const double z_end = z - static_cast<double>(end - col) * inv_tan;
        if (end == nx_ && open_x_) return -1;
        const int after = end == nx_ ? 0 : end;
        if (z_end > static_cast<double>(block_max_[block(col, y)]) &&
            z_end > static_cast<double>(h_[idx(after, y)])) {
          z = z_end;
          col = after;
          continue;
        }
      }
      const double z_exit = z - (1.0 - frac) * inv_tan;
      if (z_exit <= static_cast<double>(h_[idx(col, y)])) return col;
      if (col + 1 == nx_ && open_x_) return -1;
      const int next = col + 1 == nx_ ? 0 : col + 1;
      if (z_exit <= static_cast<double>(h_[idx(next, y)])) return col;
      z = z_exit;
      frac = 0.0;
      col = next;
    }
  }

  // Paths start on the plane just above the highest column. Only the band of
  // start points whose paths can land in the lattice is drawn; the rest
  // would leave through the right edge or land on resist left of x = 0.
  int open_intercept(int y) {
    const double start_z = static_cast<double>(top_) + 1.0;
    const double lo = -(start_z - static_cast<double>(edge_min_)) * tan_;
    const double hi = static_cast<double>(nx_) - (start_z - static_cast<double>(film_top_)) * tan_;
    const double x0 = std::uniform_real_distribution<double>(lo, std::max(hi, 0.0))(rng_);
    if (x0 >= 0.0) return intercept(x0, start_z, y);
    const double z_at_edge = start_z + x0 / tan_;
    if (z_at_edge <= static_cast<double>(h_[idx(0, y)])) return -1;
    return intercept(0.0, z_at_edge, y);
  }

  void refresh_edge_min() {
    edge_min_ = h_[idx(0, 0)];
    for (int y = 1; y < ny_; ++y) edge_min_ = std::min(edge_min_, h_[idx(0, y)]);
  }

  std::size_t block(int x, int y) const {
    return static_cast<std::size_t>(x / kBlock) +
           static_cast<std::size_t>(blocks_per_row_) * static_cast<std::size_t>(y);
  }

  void land(std::size_t site) {
    if (cfg_.contamination_per_site > 0.0 && !impure_[site] &&
        std::generate_canonical<double, 53>(rng_) < cfg_.contamination_per_site) {
      impure_[site] = 1;
    }
    for (int step = 0; step < cfg_.diffusion_steps_per_particle && !impure_[site]; ++step) {
      const auto next = downhill_neighbor(site);
      if (next == site) break;
      site = next;
    }
    const int h = ++h_[site];
    top_ = std::max(top_, h);
    const int x = static_cast<int>(site % static_cast<std::size_t>(nx_));
    const int y = static_cast<int>(site / static_cast<std::size_t>(nx_));
    if (x >= film_start_) film_top_ = std::max(film_top_, h);
    if (open_x_ && x == 0 && h - 1 == edge_min_) refresh_edge_min();
    int& bm = block_max_[block(x, y)];
    bm = std::max(bm, h);
  }

  // Lowest clean neighbor that sits strictly below the adatom's current
  // resting height; returns `site` when no hop lowers it.
  std::size_t downhill_neighbor(std::size_t site) {
    const int x = static_cast<int>(site % static_cast<std::size_t>(nx_));
    const int y = static_cast<int>(site / static_cast<std::size_t>(nx_));
    std::size_t cand[4];
    int n = 0;
    if (!open_x_) {
      cand[n++] = idx(x == 0 ? nx_ - 1 : x - 1, y);
      cand[n++] = idx(x + 1 == nx_ ? 0 : x + 1, y);
    } else {
      if (x > 0 && x != film_start_) cand[n++] = idx(x - 1, y);
      if (x + 1 < nx_ && x + 1 != film_start_) cand[n++] = idx(x + 1, y);
    }
    if (ny_ > 1) {
      cand[n++] = idx(x, y == 0 ? ny_ - 1 : y - 1);
      cand[n++] = idx(x, y + 1 == ny_ ? 0 : y + 1);
    }
    // The adatom rests at h_[site]; a hop must land strictly lower.
    int best_h = h_[site];
    std::size_t best[4];
    int nbest = 0;
    for (int i = 0; i < n; ++i) {
      if (impure_[cand[i]]) continue;
      const int hn = h_[cand[i]];
      if (hn < best_h) {
        best_h = hn;
        nbest = 0;
      }
      if (hn == best_h && hn < h_[site]) best[nbest++] = cand[i];
    }
    if (nbest == 0) return site;
    if (nbest == 1) return best[0];
    return best[std::uniform_int_distribution<int>(0, nbest - 1)(rng_)];
  }

  bool open_x_ = false;
  int film_start_ = 0;
  int edge_min_ = 0;
  int film_top_ = 0;
  int nx_;
  int ny_;
  std::vector<int> h_;
  std::vector<std::uint8_t> impure_;
  GrowthConfig cfg_;
  double tan_;
  int top_ = 0;
  static constexpr int kBlock = 16;
  int blocks_per_row_ = 0;
  std::vector<int> block_max_;
  std::mt19937_64 rng_;
};

std::int64_t particle_count(const GrowthConfig& cfg, std::int64_t sites) {
  return std::llround(cfg.target_mean_height_ml * static_cast<double>(sites));
}

}  // namespace

void GrowthConfig::validate() const {
  if (lattice_width_sites < 16) throw ConfigError("lattice_width_sites must be >= 16");
  if (lattice_depth_sites < 1) throw ConfigError("lattice_depth_sites must be >= 1");
  if (!(target_mean_height_ml >= 0.0)) throw ConfigError("target_mean_height_ml must be >= 0");
  if (!(incidence_angle_deg >= 0.0 && incidence_angle_deg < 90.0))
    throw ConfigError("incidence_angle_deg must be in [0, 90)");
  if (diffusion_steps_per_particle < 0) throw ConfigError("diffusion_steps_per_particle must be >= 0");
  if (!(contamination_per_site >= 0.0 && contamination_per_site <= 1.0))
    throw ConfigError("contamination_per_site must be in [0, 1]");
}

double SurfaceRecord::mean_height() const {
  if (heights.empty()) return 0.0;
  const double sum = std::accumulate(heights.begin(), heights.end(), 0.0);
  return sum / static_cast<double>(heights.size());
}

SurfaceRecord grow_surface(const GrowthConfig& cfg) {
  cfg.validate();
  const int nx = cfg.lattice_width_sites;
  const int ny = cfg.lattice_depth_sites;
  const auto sites = static_cast<std::int64_t>(nx) * ny;
  Lattice lattice(nx, ny, std::vector<int>(static_cast<std::size_t>(sites), 0), cfg);
  const auto count = particle_count(cfg, sites);
  lattice.deposit(count);
  return std::move(lattice).release(count);
}

double rms_roughness(const SurfaceRecord& surface, double monolayer_nm) {
  if (surface.heights.empty()) throw DomainError("rms of an empty surface");
  const double mean = surface.mean_height();
  double ss = 0.0;
  for (int h : surface.heights) {
    const double d = h - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(surface.heights.size())) * monolayer_nm;
}

double line_edge_roughness(const GrowthConfig& cfg, double edge_mask_height_ml, double monolayer_nm) {
  cfg.validate();
  if (!(edge_mask_height_ml > 0.0) || !std::isfinite(edge_mask_height_ml))
    throw ConfigError("edge mask height must be a positive finite number of monolayers");
  if (edge_mask_height_ml <= cfg.target_mean_height_ml) {
    throw ConfigError(fmt::format("edge mask of {} ML is overtopped by a {} ML film",
                                  edge_mask_height_ml, cfg.target_mean_height_ml));
  }
  if (cfg.target_mean_height_ml == 0.0) return 0.0;

  constexpr int kWallWidth = 8;
  constexpr int kMargin = 48;
  const double tan_a = std::tan(cfg.incidence_angle_deg * kDeg);
  const int shadow =
      static_cast<int>(std::ceil(edge_mask_height_ml * tan_a));
  const int nx = kWallWidth + shadow + kMargin;
  const int ny = cfg.lattice_width_sites;
  const int wall = static_cast<int>(std::lround(edge_mask_height_ml));
  if (wall < 1) throw ConfigError("edge mask height rounds to zero monolayers");

  std::vector<int> initial(static_cast<std::size_t>(nx) * ny, 0);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < kWallWidth; ++x) initial[static_cast<std::size_t>(x + nx * y)] = wall;

  GrowthConfig c = cfg;
  c.lattice_width_sites = nx;
  c.lattice_depth_sites = ny;
  Lattice lattice(nx, ny, std::move(initial), c);
  lattice.open_boundary(kWallWidth);
  lattice.deposit(particle_count(cfg, static_cast<std::int64_t>(nx) * ny));
  const auto& h = lattice.heights();

  // Edge: first site past the wall where the film reaches half its target.
  const double threshold = 0.5 * cfg.target_mean_height_ml;
  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(ny));
  for (int y = 0; y < ny; ++y) {
    int x = kWallWidth;
    while (x < nx && static_cast<double>(h[static_cast<std::size_t>(x + nx * y)]) < threshold) ++x;
    edges.push_back(static_cast<double>(x));
  }
  const double mean = std::accumulate(edges.begin(), edges.end(), 0.0) / edges.size();
  double ss = 0.0;
  for (double e : edges) ss += (e - mean) * (e - mean);
  return std::sqrt(ss / edges.size()) * monolayer_nm;
}

Mobility rate_to_mobility(double rate_nm_per_s, double chamber_contamination_const,
                          double diffusion_const) {
  if (!(rate_nm_per_s > 0.0) || !std::isfinite(rate_nm_per_s))
    throw DomainError("deposition rate must be a positive finite number");
  if (!(chamber_contamination_const >= 0.0) || !(diffusion_const >= 0.0))
    throw DomainError("mobility constants must be >= 0");
  return Mobility{
      .diffusion_steps_per_particle = static_cast<int>(std::lround(diffusion_const / rate_nm_per_s)),
      .contamination_per_site = std::min(1.0, chamber_contamination_const / rate_nm_per_s),
  };
}

GrowthConfig growth_config_for(const ElectrodeProcess& process, const EnsembleSettings& settings,
                               std::uint64_t seed) {
  const Mobility m =
      rate_to_mobility(process.rate_nm_per_s, settings.contamination_const, settings.diffusion_const);
  GrowthConfig cfg;
  cfg.lattice_width_sites = settings.rms_width_sites;
  cfg.lattice_depth_sites = 1;
  cfg.target_mean_height_ml = process.thickness_nm / settings.monolayer_nm;
  cfg.incidence_angle_deg = process.angle_deg;
  cfg.diffusion_steps_per_particle = m.diffusion_steps_per_particle;
  cfg.contamination_per_site = m.contamination_per_site;
  cfg.rng_seed = seed;
  cfg.mode = GrowthMode::ballistic_shadowed;
  return cfg;
}

RoughnessReport ensemble_roughness(const ElectrodeProcess& process, const EnsembleSettings& settings) {
  if (settings.seeds < 1) throw ConfigError("ensemble needs at least one seed");
  if (!(process.thickness_nm >= 0.0)) throw DomainError("electrode thickness must be >= 0");
  const auto n = static_cast<std::size_t>(settings.seeds);
  std::vector<double> rms(n), ler(n);
  parallel_for(n, [&](std::size_t i) {
    const std::uint64_t seed = settings.base_seed + 7919u * i;
    GrowthConfig cfg = growth_config_for(process, settings, seed);
    rms[i] = rms_roughness(grow_surface(cfg), settings.monolayer_nm);
    cfg.lattice_width_sites = settings.ler_length_sites;
    const double wall = settings.edge_mask_height_ml > 0.0
                            ? settings.edge_mask_height_ml
                            : cfg.target_mean_height_ml + kAutoWallClearanceMl;
    ler[i] = line_edge_roughness(cfg, wall, settings.monolayer_nm);
  });
  const double inv = 1.0 / static_cast<double>(n);
  return RoughnessReport{
      .rms_nm = std::accumulate(rms.begin(), rms.end(), 0.0) * inv,
      .ler_nm = std::accumulate(ler.begin(), ler.end(), 0.0) * inv,
      .monolayer_nm = settings.monolayer_nm,
  };
}

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of an empty set");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace jjfab::filmgrowth
