#include "seerdrive/scenario/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "seerdrive/core/errors.hpp"
#include "seerdrive/core/serialize.hpp"

namespace seerdrive::scenario {

namespace fs = std::filesystem;

namespace {

constexpr uint32_t kRecordMagic = 0x53445343;  // "SDSC"
constexpr uint32_t kRecordVersion = 1;
constexpr int kManifestVersion = 1;

enum class Dtype : uint8_t { F32 = 0, I32 = 1, I64 = 2 };

struct NamedArray {
  Dtype dtype = Dtype::F32;
  std::vector<int64_t> dims;
  std::vector<double> f;
  std::vector<int32_t> i32v;
  std::vector<int64_t> i64v;
};

void write_array(io::Writer& w, const std::string& name, const NamedArray& a) {
  w.str(name);
  w.u8(static_cast<uint8_t>(a.dtype));
  w.u8(static_cast<uint8_t>(a.dims.size()));
  for (int64_t d : a.dims) w.u32(static_cast<uint32_t>(d));
  const int64_t n = numel_of(a.dims);
  switch (a.dtype) {
    case Dtype::F32: w.f32_array(a.f.data(), n); break;
    case Dtype::I32: w.i32_array(a.i32v.data(), n); break;
    case Dtype::I64:
      for (int64_t k = 0; k < n; ++k) w.i64(a.i64v[static_cast<size_t>(k)]);
      break;
  }
}

std::map<std::string, NamedArray> read_arrays(io::Reader& r) {
  const uint32_t n_arrays = r.u32();
  std::map<std::string, NamedArray> out;
  for (uint32_t i = 0; i < n_arrays; ++i) {
    const std::string name = r.str();
    NamedArray a;
    a.dtype = static_cast<Dtype>(r.u8());
    const int nd = r.u8();
    a.dims.resize(static_cast<size_t>(nd));
    for (int d = 0; d < nd; ++d) a.dims[static_cast<size_t>(d)] = r.u32();
    const int64_t n = numel_of(a.dims);
    switch (a.dtype) {
      case Dtype::F32: a.f = r.f32_array(n); break;
      case Dtype::I32: a.i32v = r.i32_array(n); break;
      case Dtype::I64:
        a.i64v.resize(static_cast<size_t>(n));
        for (int64_t k = 0; k < n; ++k) a.i64v[static_cast<size_t>(k)] = r.i64();
        break;
      default: throw VersionError("unknown dtype in " + r.path());
    }
    out[name] = std::move(a);
  }
  return out;
}

NamedArray f32_of(std::vector<int64_t> dims, std::vector<double> data) {
  NamedArray a;
  a.dtype = Dtype::F32;
  a.dims = std::move(dims);
  a.f = std::move(data);
  return a;
}

const NamedArray& need(const std::map<std::string, NamedArray>& m, const std::string& key,
                       const std::string& path) {
  auto it = m.find(key);
  if (it == m.end()) throw TruncatedError(path + " (missing array '" + key + "')");
  return it->second;
}

std::vector<double> flatten_points(const std::vector<geom::Polyline>& lines,
                                   std::vector<int32_t>& offsets) {
  std::vector<double> xy;
  offsets.clear();
  offsets.push_back(0);
  for (const auto& line : lines) {
    for (const auto& p : line) {
      xy.push_back(p.x);
      xy.push_back(p.y);
    }
    offsets.push_back(static_cast<int32_t>(xy.size() / 2));
  }
  return xy;
}

std::vector<geom::Polyline> unflatten_points(const std::vector<double>& xy,
                                             const std::vector<int32_t>& offsets) {
  std::vector<geom::Polyline> lines;
  for (size_t i = 0; i + 1 < offsets.size(); ++i) {
    geom::Polyline line;
    for (int32_t k = offsets[i]; k < offsets[i + 1]; ++k) {
      line.push_back({xy[static_cast<size_t>(2 * k)], xy[static_cast<size_t>(2 * k + 1)]});
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

void write_record(const Scenario& s, const std::string& path) {
  io::Writer w(path);
  w.u32(kRecordMagic);
  w.u32(kRecordVersion);

  std::vector<std::pair<std::string, NamedArray>> arrays;
  {
    NamedArray a;
    a.dtype = Dtype::I64;
    a.dims = {1};
    a.i64v = {s.seed};
    arrays.emplace_back("seed", std::move(a));
  }
  {
    NamedArray a;
    a.dtype = Dtype::I32;
    a.dims = {1};
    a.i32v = {s.template_id};
    arrays.emplace_back("template", std::move(a));
  }
  {
    std::vector<int32_t> offs;
    auto xy = flatten_points(
        std::vector<geom::Polyline>(s.map.drivable.begin(), s.map.drivable.end()), offs);
    const int64_t n_points = static_cast<int64_t>(xy.size() / 2);
    arrays.emplace_back("drivable_xy", f32_of({n_points, 2}, std::move(xy)));
    NamedArray a;
    a.dtype = Dtype::I32;
    a.dims = {static_cast<int64_t>(offs.size())};
    a.i32v = std::move(offs);
    arrays.emplace_back("drivable_offsets", std::move(a));
  }
  {
    std::vector<int32_t> offs;
    auto xy = flatten_points(s.map.centerlines, offs);
    const int64_t n_points = static_cast<int64_t>(xy.size() / 2);
    arrays.emplace_back("centerline_xy", f32_of({n_points, 2}, std::move(xy)));
    NamedArray a;
    a.dtype = Dtype::I32;
    a.dims = {static_cast<int64_t>(offs.size())};
    a.i32v = std::move(offs);
    arrays.emplace_back("centerline_offsets", std::move(a));
  }
  {
    NamedArray a;
    a.dtype = Dtype::I32;
    a.dims = {1};
    a.i32v = {s.map.route_index};
    arrays.emplace_back("route_index", std::move(a));
  }
  {
    const int64_t n_agents = static_cast<int64_t>(s.agents.size());
    std::vector<double> pos, head, boxes;
    for (const auto& ag : s.agents) {
      for (const auto& p : ag.positions) {
        pos.push_back(p.x);
        pos.push_back(p.y);
      }
      head.insert(head.end(), ag.headings.begin(), ag.headings.end());
      boxes.push_back(ag.length);
      boxes.push_back(ag.width);
    }
    arrays.emplace_back("agent_positions", f32_of({n_agents, kTrackSteps, 2}, std::move(pos)));
    arrays.emplace_back("agent_headings", f32_of({n_agents, kTrackSteps}, std::move(head)));
    arrays.emplace_back("agent_boxes", f32_of({n_agents, 2}, std::move(boxes)));
  }
  arrays.emplace_back("ego_velocity",
                      f32_of({2}, {s.ego_status.velocity.x, s.ego_status.velocity.y}));
  arrays.emplace_back("ego_acceleration",
                      f32_of({2}, {s.ego_status.acceleration.x, s.ego_status.acceleration.y}));
  arrays.emplace_back("ego_command", f32_of({3}, {s.ego_status.command[0], s.ego_status.command[1],
                                                  s.ego_status.command[2]}));
  {
    std::vector<double> fut;
    for (const auto& p : s.ego_future) {
      fut.push_back(p.x);
      fut.push_back(p.y);
    }
    arrays.emplace_back("ego_future", f32_of({kHorizonSteps, 2}, std::move(fut)));
  }
  arrays.emplace_back("ego_box", f32_of({2}, {s.ego_length, s.ego_width}));

  w.u32(static_cast<uint32_t>(arrays.size()));
  for (const auto& [name, a] : arrays) write_array(w, name, a);
}

Scenario read_record(const std::string& path) {
  io::Reader r(path);
  if (r.u32() != kRecordMagic) throw VersionError(path + " (bad magic)");
  const uint32_t version = r.u32();
  if (version != kRecordVersion) {
    throw VersionError(path + " (record version " + std::to_string(version) + ")");
  }
  auto arrays = read_arrays(r);

  Scenario s;
  s.seed = need(arrays, "seed", path).i64v.at(0);
  s.template_id = need(arrays, "template", path).i32v.at(0);
  {
    const auto& xy = need(arrays, "drivable_xy", path);
    const auto& offs = need(arrays, "drivable_offsets", path);
    auto lines = unflatten_points(xy.f, offs.i32v);
    s.map.drivable.assign(lines.begin(), lines.end());
  }
  {
    const auto& xy = need(arrays, "centerline_xy", path);
    const auto& offs = need(arrays, "centerline_offsets", path);
    s.map.centerlines = unflatten_points(xy.f, offs.i32v);
  }
  s.map.route_index = need(arrays, "route_index", path).i32v.at(0);
  {
    const auto& pos = need(arrays, "agent_positions", path);
    const auto& head = need(arrays, "agent_headings", path);
    const auto& boxes = need(arrays, "agent_boxes", path);
    const int64_t n_agents = pos.dims.at(0);
    for (int64_t i = 0; i < n_agents; ++i) {
      AgentTrack a;
      for (int k = 0; k < kTrackSteps; ++k) {
        a.positions.push_back({pos.f[static_cast<size_t>((i * kTrackSteps + k) * 2)],
                               pos.f[static_cast<size_t>((i * kTrackSteps + k) * 2 + 1)]});
        a.headings.push_back(head.f[static_cast<size_t>(i * kTrackSteps + k)]);
      }
      a.length = boxes.f[static_cast<size_t>(i * 2)];
      a.width = boxes.f[static_cast<size_t>(i * 2 + 1)];
      s.agents.push_back(std::move(a));
    }
  }
  {
    const auto& v = need(arrays, "ego_velocity", path).f;
    s.ego_status.velocity = {v[0], v[1]};
    const auto& acc = need(arrays, "ego_acceleration", path).f;
    s.ego_status.acceleration = {acc[0], acc[1]};
    const auto& cmd = need(arrays, "ego_command", path).f;
    s.ego_status.command = {cmd[0], cmd[1], cmd[2]};
  }
  {
    const auto& fut = need(arrays, "ego_future", path).f;
    for (int k = 0; k < kHorizonSteps; ++k) {
      s.ego_future[static_cast<size_t>(k)] = {fut[static_cast<size_t>(2 * k)],
                                              fut[static_cast<size_t>(2 * k + 1)]};
    }
    const auto& box = need(arrays, "ego_box", path).f;
    s.ego_length = box[0];
    s.ego_width = box[1];
  }
  return s;
}

Manifest write_dataset(const std::vector<Scenario>& scenarios, const std::string& dir,
                       uint64_t config_hash, bool text_dump_records) {
  fs::create_directories(dir);
  Manifest m;
  m.count = static_cast<int64_t>(scenarios.size());
  m.config_hash = io::hex64(config_hash);
  for (size_t i = 0; i < scenarios.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scenario_%06zu.bin", i);
    const std::string path = dir + "/" + name;
    write_record(scenarios[i], path);
    m.files.emplace_back(name);
    m.seeds.push_back(scenarios[i].seed);
    m.checksums.push_back(io::crc32_of_file(path));
    if (text_dump_records) {
      std::ofstream txt(path.substr(0, path.size() - 4) + ".txt");
      txt << text_dump(scenarios[i]);
    }
  }

  nlohmann::ordered_json j;
  j["format_version"] = kManifestVersion;
  j["count"] = m.count;
  j["config_hash"] = m.config_hash;
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (size_t i = 0; i < m.files.size(); ++i) {
    records.push_back({{"file", m.files[i]}, {"seed", m.seeds[i]}, {"crc32", m.checksums[i]}});
  }
  j["records"] = records;
  std::ofstream out(dir + "/manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir);
  out << j.dump(2) << "\n";
  return m;
}

Manifest read_manifest(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw IoError("no manifest.json in " + dir);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad manifest in " + dir + ": " + e.what());
  }
  Manifest m;
  m.format_version = j.at("format_version").get<int>();
  if (m.format_version != kManifestVersion) {
    throw VersionError(dir + " (manifest version " + std::to_string(m.format_version) + ")");
  }
  m.count = j.at("count").get<int64_t>();
  m.config_hash = j.at("config_hash").get<std::string>();
  for (const auto& rec : j.at("records")) {
    m.files.push_back(rec.at("file").get<std::string>());
    m.seeds.push_back(rec.at("seed").get<int64_t>());
    m.checksums.push_back(rec.at("crc32").get<uint32_t>());
  }
  if (static_cast<int64_t>(m.files.size()) != m.count) {
    throw TruncatedError(dir + " (manifest count mismatch)");
  }
  return m;
}

std::vector<Scenario> read_dataset(const std::string& dir) {
  const Manifest m = read_manifest(dir);
  std::vector<Scenario> out;
  out.reserve(static_cast<size_t>(m.count));
  for (size_t i = 0; i < m.files.size(); ++i) {
    const std::string path = dir + "/" + m.files[i];
    if (!fs::exists(path)) throw TruncatedError(path + " (missing record)");
    if (io::crc32_of_file(path) != m.checksums[i]) throw ChecksumError(path);
    out.push_back(read_record(path));
  }
  return out;
}

std::string text_dump(const Scenario& s) {
  std::ostringstream os;
  os << "scenario seed=" << s.seed << " template=" << template_name(static_cast<Template>(s.template_id))
     << "\n";
  os << "ego_status v=(" << s.ego_status.velocity.x << "," << s.ego_status.velocity.y << ") a=("
     << s.ego_status.acceleration.x << "," << s.ego_status.acceleration.y << ") command=["
     << s.ego_status.command[0] << "," << s.ego_status.command[1] << "," << s.ego_status.command[2]
     << "]\n";
  os << "ego_box " << s.ego_length << "x" << s.ego_width << "\n";
  os << "ego_future";
  for (const auto& p : s.ego_future) os << " (" << p.x << "," << p.y << ")";
  os << "\n";
  os << "map drivable_polygons=" << s.map.drivable.size()
     << " centerlines=" << s.map.centerlines.size() << " route_index=" << s.map.route_index << "\n";
  for (size_t i = 0; i < s.agents.size(); ++i) {
    const auto& a = s.agents[i];
    os << "agent " << i << " box=" << a.length << "x" << a.width << " track";
    for (const auto& p : a.positions) os << " (" << p.x << "," << p.y << ")";
    os << "\n";
  }
  return os.str();
}

}  // namespace seerdrive::scenario
