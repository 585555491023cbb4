#include "seerdrive/render/render.hpp"

#include <cstdint>
#include <fstream>

#include <json.hpp>

#include "seerdrive/core/errors.hpp"
#include "seerdrive/model/encoders.hpp"
#include "seerdrive/model/iterate.hpp"
#include "seerdrive/scenario/rasterize.hpp"

namespace seerdrive::render {

namespace {

constexpr int kScale = 4;  // pixels per grid cell
constexpr int kGap = 2;

struct Rgb {
  uint8_t r, g, b;
};

const Rgb kClassColors[4] = {{40, 40, 40}, {200, 200, 200}, {220, 60, 60}, {60, 120, 220}};
const Rgb kGtColor{0, 200, 0};
const Rgb kFinalColor{255, 160, 0};
const Rgb kModeColor{120, 140, 200};
const Rgb kGapColor{0, 0, 0};

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), pix_(static_cast<size_t>(w) * h, Rgb{0, 0, 0}) {}
  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    pix_[static_cast<size_t>(y) * w_ + x] = c;
  }
  int width() const { return w_; }
  int height() const { return h_; }

  // 24-bit bottom-up BMP
  void write_bmp(const std::string& path) const {
    const int row_bytes = ((w_ * 3 + 3) / 4) * 4;
    const uint32_t data_size = static_cast<uint32_t>(row_bytes) * static_cast<uint32_t>(h_);
    const uint32_t file_size = 54 + data_size;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image: " + path);
    auto u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
    auto u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    out.put('B');
    out.put('M');
    u32(file_size);
    u32(0);
    u32(54);
    u32(40);
    u32(static_cast<uint32_t>(w_));
    u32(static_cast<uint32_t>(h_));
    u16(1);
    u16(24);
    u32(0);
    u32(data_size);
    u32(2835);
    u32(2835);
    u32(0);
    u32(0);
    std::vector<char> row(static_cast<size_t>(row_bytes), 0);
    for (int y = h_ - 1; y >= 0; --y) {
      for (int x = 0; x < w_; ++x) {
        const Rgb& c = pix_[static_cast<size_t>(y) * w_ + x];
        row[static_cast<size_t>(x) * 3] = static_cast<char>(c.b);
        row[static_cast<size_t>(x) * 3 + 1] = static_cast<char>(c.g);
        row[static_cast<size_t>(x) * 3 + 2] = static_cast<char>(c.r);
      }
      out.write(row.data(), row_bytes);
    }
  }

 private:
  int w_, h_;
  std::vector<Rgb> pix_;
};

void blit_grid(Canvas& canvas, int x0, const std::vector<uint8_t>& labels, int grid) {
  for (int r = 0; r < grid; ++r) {
    for (int c = 0; c < grid; ++c) {
      const Rgb color = kClassColors[labels[static_cast<size_t>(r * grid + c)] & 3];
      for (int dy = 0; dy < kScale; ++dy) {
        for (int dx = 0; dx < kScale; ++dx) {
          // image y grows downward; world row 0 (y = -extent/2) at the bottom
          canvas.set(x0 + c * kScale + dx, (grid - 1 - r) * kScale + dy, color);
        }
      }
    }
  }
}

void draw_traj(Canvas& canvas, int x0, const std::vector<geom::Vec2>& traj, double extent,
               int grid, Rgb color) {
  const int side = grid * kScale;
  auto to_px = [&](geom::Vec2 p) {
    const double u = (p.x + extent / 2) / extent * side;
    const double v = side - (p.y + extent / 2) / extent * side;
    return std::pair<int, int>{static_cast<int>(u), static_cast<int>(v)};
  };
  geom::Vec2 prev{0, 0};
  for (const auto& p : traj) {
    const geom::Vec2 d = p - prev;
    const double len = d.norm();
    const int steps = std::max(1, static_cast<int>(len * kScale * 2));
    for (int i = 0; i <= steps; ++i) {
      const auto [px, py] = to_px(prev + d * (static_cast<double>(i) / steps));
      canvas.set(px, py, color);
      canvas.set(px + 1, py, color);
      canvas.set(px, py + 1, color);
    }
    prev = p;
  }
}

}  // namespace

void RenderSpec::validate() const {
  if (!(panel_current || panel_future || panel_traj || panel_modes)) {
    throw ConfigError("render: at least one panel required");
  }
  if (out_path.empty()) throw ConfigError("render: output path required");
}

void render_scenario(const model::Model& m, const scenario::Scenario& s, const RenderSpec& spec) {
  spec.validate();
  const auto& cfg = m.config();
  const scenario::GridSpec gspec{cfg.grid_size, cfg.cell_meters};
  const auto curr = scenario::rasterize(s, 0.0, gspec);
  const eval::ScenarioResult result = eval::evaluate_scenario(m, s);

  // winner-mode predicted future map labels
  std::vector<uint8_t> future_labels;
  {
    ParamStore& ps = const_cast<model::Model&>(m).params();
    Graph g(&ps);
    Tensor onehot = model::grid_one_hot(curr);
    Var grid = g.input(Tensor({1, cfg.grid_size, cfg.grid_size, cfg.classes},
                              std::vector<double>(onehot.data(), onehot.data() + onehot.numel())));
    Tensor ego_raw = model::ego_encoder_input(m.anchor_set(), s.ego_status);
    Var ego_in = g.input(Tensor({1, ego_raw.dim(0), ego_raw.dim(1)},
                                std::vector<double>(ego_raw.data(), ego_raw.data() + ego_raw.numel())));
    Var bev = model::encode_bev_tokens(g, m, grid);
    Var ego0 = model::encode_ego(g, m, ego_in);
    auto trace = model::run_iterations(g, m, bev, ego0, cfg.iterations, model::MapDecode::All);
    const Tensor& logits = g.val(trace.steps.back().plan.mode_logits);
    int64_t best = 0;
    for (int64_t mo = 1; mo < cfg.modes; ++mo) {
      if (logits[mo] > logits[best]) best = mo;
    }
    const Tensor& fmap = g.val(trace.steps.back().future_map_logits);
    const int64_t cells = static_cast<int64_t>(cfg.grid_size) * cfg.grid_size;
    future_labels.resize(static_cast<size_t>(cells));
    for (int64_t ci = 0; ci < cells; ++ci) {
      const double* row = fmap.data() + (best * cells + ci) * cfg.classes;
      int argmax = 0;
      for (int c = 1; c < cfg.classes; ++c) {
        if (row[c] > row[argmax]) argmax = c;
      }
      future_labels[static_cast<size_t>(ci)] = static_cast<uint8_t>(argmax);
    }
  }

  // all-mode final trajectories (for the modes panel and the sidecar)
  std::vector<std::vector<geom::Vec2>> mode_trajs;
  {
    ParamStore& ps = const_cast<model::Model&>(m).params();
    Graph g(&ps);
    Tensor onehot = model::grid_one_hot(curr);
    Var grid = g.input(Tensor({1, cfg.grid_size, cfg.grid_size, cfg.classes},
                              std::vector<double>(onehot.data(), onehot.data() + onehot.numel())));
    Tensor ego_raw = model::ego_encoder_input(m.anchor_set(), s.ego_status);
    Var ego_in = g.input(Tensor({1, ego_raw.dim(0), ego_raw.dim(1)},
                                std::vector<double>(ego_raw.data(), ego_raw.data() + ego_raw.numel())));
    Var bev = model::encode_bev_tokens(g, m, grid);
    Var ego0 = model::encode_ego(g, m, ego_in);
    auto trace = model::run_iterations(g, m, bev, ego0, cfg.iterations, model::MapDecode::None);
    const Tensor& traj = g.val(trace.steps.back().plan.traj_final);
    for (int64_t mo = 0; mo < cfg.modes; ++mo) {
      std::vector<geom::Vec2> t;
      for (int k = 0; k < cfg.horizon; ++k) {
        t.push_back({traj[(mo * cfg.horizon + k) * 2], traj[(mo * cfg.horizon + k) * 2 + 1]});
      }
      mode_trajs.push_back(std::move(t));
    }
  }

  const int side = cfg.grid_size * kScale;
  int n_panels = 0;
  n_panels += spec.panel_current ? 1 : 0;
  n_panels += spec.panel_future ? 1 : 0;
  n_panels += spec.panel_traj ? 1 : 0;
  n_panels += spec.panel_modes ? 1 : 0;
  Canvas canvas(n_panels * side + (n_panels - 1) * kGap, side);

  const std::vector<geom::Vec2> gt(s.ego_future.begin(), s.ego_future.end());
  const double extent = cfg.grid_size * cfg.cell_meters;
  int x0 = 0;
  if (spec.panel_current) {
    blit_grid(canvas, x0, curr.labels, cfg.grid_size);
    x0 += side + kGap;
  }
  if (spec.panel_future) {
    blit_grid(canvas, x0, future_labels, cfg.grid_size);
    x0 += side + kGap;
  }
  if (spec.panel_traj) {
    blit_grid(canvas, x0, curr.labels, cfg.grid_size);
    const int px = x0;
    draw_traj(canvas, px, gt, extent, cfg.grid_size, kGtColor);
    draw_traj(canvas, px, result.best_traj, extent, cfg.grid_size, kFinalColor);
    x0 += side + kGap;
  }
  if (spec.panel_modes) {
    blit_grid(canvas, x0, curr.labels, cfg.grid_size);
    for (const auto& t : mode_trajs) draw_traj(canvas, x0, t, extent, cfg.grid_size, kModeColor);
    draw_traj(canvas, x0, result.best_traj, extent, cfg.grid_size, kFinalColor);
    x0 += side + kGap;
  }
  canvas.write_bmp(spec.out_path);

  // numeric sidecar
  nlohmann::ordered_json j;
  j["seed"] = s.seed;
  nlohmann::ordered_json panels = nlohmann::ordered_json::array();
  auto traj_json = [](const std::vector<geom::Vec2>& t) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& p : t) arr.push_back({p.x, p.y});
    return arr;
  };
  if (spec.panel_current) {
    panels.push_back("current_map");
    j["current_map"] = std::vector<int>(curr.labels.begin(), curr.labels.end());
  }
  if (spec.panel_future) {
    panels.push_back("future_map");
    j["future_map"] = std::vector<int>(future_labels.begin(), future_labels.end());
  }
  if (spec.panel_traj) {
    panels.push_back("trajectory");
    j["gt"] = traj_json(gt);
    j["final"] = traj_json(result.best_traj);
  }
  if (spec.panel_modes) {
    panels.push_back("modes");
    nlohmann::ordered_json modes = nlohmann::ordered_json::array();
    for (const auto& t : mode_trajs) modes.push_back(traj_json(t));
    j["modes"] = modes;
  }
  j["panels"] = panels;
  std::ofstream side_out(spec.out_path + ".json");
  if (!side_out) throw IoError("cannot write sidecar for " + spec.out_path);
  side_out << j.dump(2) << "\n";
}

}  // namespace seerdrive::render
