#include "pheno/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "pheno/errors.hpp"

namespace pheno {

namespace {

using json = nlohmann::ordered_json;

constexpr char kMagic[8] = {'P', 'H', 'E', 'N', 'O', 'C', 'K', 'P'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw DataError("checkpoint truncated");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

json shape_json(const NetworkShape& s) {
  return {{"input_rows", s.input_rows}, {"input_cols", s.input_cols}, {"conv1_channels", s.conv1_channels},
          {"conv2_channels", s.conv2_channels}, {"hidden", s.hidden}, {"classes", s.classes}};
}

NetworkShape shape_from(const json& j) {
  NetworkShape s;
  s.input_rows = j.at("input_rows").get<int>();
  s.input_cols = j.at("input_cols").get<int>();
  s.conv1_channels = j.at("conv1_channels").get<int>();
  s.conv2_channels = j.at("conv2_channels").get<int>();
  s.hidden = j.at("hidden").get<int>();
  s.classes = j.at("classes").get<int>();
  return s;
}

json network_entry(const std::string& role, const TrainedModel& m) {
  return {{"role", role},
          {"labels", m.labels()},
          {"shape", shape_json(m.network().shape())},
          {"parameter_count", m.network().parameter_count()},
          {"best_epoch", m.best_epoch},
          {"best_val_accuracy", m.best_val_accuracy}};
}

void write_file(const std::filesystem::path& path, const json& header,
                const std::vector<const TrainedModel*>& nets) {
  const std::string text = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  for (const auto* m : nets) {
    for (double p : m->network().parameters()) put<double>(out, p);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write checkpoint " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing checkpoint " + path.string());
}

json base_header(const std::string& kind, const CheckpointMeta& meta) {
  json h;
  h["format"] = "pheno-checkpoint";
  h["version"] = kCheckpointVersion;
  h["kind"] = kind;
  h["scheme"] = meta.scheme;
  h["subset"] = meta.subset;
  h["seed"] = meta.seed;
  h["hyperparams"] = meta.hyper;
  return h;
}

TrainedModel read_network(const json& entry, const std::string& blob, std::size_t& pos) {
  const auto shape = shape_from(entry.at("shape"));
  validate(shape);
  auto labels = entry.at("labels").get<std::vector<int>>();
  if (labels.size() != static_cast<std::size_t>(shape.classes)) throw DataError("checkpoint label count mismatch");
  auto net = ConvNet::zeros(shape);
  if (entry.at("parameter_count").get<std::size_t>() != net.parameter_count()) {
    throw DataError("checkpoint parameter count does not match architecture");
  }
  for (double& p : net.parameters()) p = get<double>(blob, pos);
  TrainedModel m(std::move(net), std::move(labels));
  m.best_epoch = entry.value("best_epoch", 0);
  m.best_val_accuracy = entry.value("best_val_accuracy", 0.0);
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model, const CheckpointMeta& meta) {
  auto h = base_header("flat", meta);
  h["networks"] = json::array({network_entry("flat", model)});
  write_file(path, h, {&model});
}

void save_checkpoint(const std::filesystem::path& path, const HierarchicalModel& model, const CheckpointMeta& meta) {
  auto h = base_header("hierarchical", meta);
  h["groups"] = model.groups;
  auto nets = json::array({network_entry("stage1", model.stage1)});
  std::vector<const TrainedModel*> ptrs{&model.stage1};
  for (std::size_t g = 0; g < model.stage2.size(); ++g) {
    if (!model.stage2[g]) continue;
    nets.push_back(network_entry("stage2:" + std::to_string(g + 1), *model.stage2[g]));
    ptrs.push_back(&*model.stage2[g]);
  }
  h["networks"] = nets;
  write_file(path, h, ptrs);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  const std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (blob.size() < sizeof(kMagic) || std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DataError(path.string() + " is not a checkpoint file");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = get<std::uint32_t>(blob, pos);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = get<std::uint64_t>(blob, pos);
  if (pos + header_len > blob.size()) throw DataError("checkpoint truncated");
  json h;
  try {
    h = json::parse(blob.substr(pos, header_len));
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  pos += header_len;

  LoadedCheckpoint out;
  try {
    out.kind = h.at("kind").get<std::string>();
    out.meta.scheme = h.at("scheme").get<std::string>();
    out.meta.subset = h.at("subset").get<std::string>();
    out.meta.seed = h.at("seed").get<std::uint64_t>();
    from_json(h.at("hyperparams"), out.meta.hyper);
    const auto& nets = h.at("networks");
    if (out.kind == "flat") {
      if (nets.size() != 1) throw DataError("flat checkpoint must hold one network");
      out.model = std::make_unique<TrainedModel>(read_network(nets[0], blob, pos));
    } else if (out.kind == "hierarchical") {
      auto model = std::make_unique<HierarchicalModel>();
      model->groups = h.at("groups").get<std::vector<std::vector<int>>>();
      model->stage1 = read_network(nets.at(0), blob, pos);
      std::size_t next = 1;
      for (std::size_t g = 0; g < model->groups.size(); ++g) {
        if (model->groups[g].size() < 2) {
          model->stage2.emplace_back(std::nullopt);
          continue;
        }
        if (nets.at(next).at("role").get<std::string>() != "stage2:" + std::to_string(g + 1)) {
          throw DataError("checkpoint stage-2 networks out of order");
        }
        model->stage2.emplace_back(read_network(nets.at(next++), blob, pos));
      }
      out.model = std::move(model);
    } else {
      throw DataError("unknown checkpoint kind '" + out.kind + "'");
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  if (pos != blob.size()) throw DataError("checkpoint has trailing bytes");
  return out;
}

}  // namespace pheno
