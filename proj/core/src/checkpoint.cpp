#include "degen/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "degen/errors.hpp"

namespace degen {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

namespace {

constexpr char kMagic[4] = {'D', 'G', 'C', 'K'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::ifstream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw IoError("truncated checkpoint '" + path + "'");
  }
  return v;
}

}  // namespace

const PolicyParams& Checkpoint::network(const std::string& name) const {
  for (const auto& [n, p] : networks) {
    if (n == name) return p;
  }
  throw IoError("checkpoint has no network named '" + name + "'");
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["config"] = ckpt.config_json;
  header["networks"] = nlohmann::json::array();
  for (const auto& [name, p] : ckpt.networks) {
    if (p.values.size() != param_count(p.shape)) {
      throw ShapeError("network '" + name + "' does not match its shape");
    }
    header["networks"].push_back({{"name", name},
                                  {"input_dim", p.shape.input_dim},
                                  {"embed_dim", p.shape.embed_dim},
                                  {"hidden_dim", p.shape.hidden_dim},
                                  {"heads", p.shape.heads},
                                  {"size", p.values.size()}});
  }
  const std::string text = header.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    out.write(kMagic, sizeof kMagic);
    put(out, kCheckpointVersion);
    put(out, ckpt.config_hash);
    put(out, ckpt.update);
    put(out, static_cast<std::uint64_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [_, p] : ckpt.networks) {
      out.write(reinterpret_cast<const char*>(p.values.data()),
                static_cast<std::streamsize>(p.values.size() * sizeof(double)));
    }
    if (!out) throw IoError("failed writing checkpoint '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw IoError("cannot move checkpoint into place at '" + path + "'");
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  char magic[4];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw IoError("'" + path + "' is not a checkpoint");
  }
  const auto version = take<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config_hash = take<std::uint64_t>(in, path);
  ckpt.update = take<std::int64_t>(in, path);
  const auto header_len = take<std::uint64_t>(in, path);
  if (header_len > (1ULL << 30)) throw IoError("corrupt checkpoint header length");
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) {
    throw IoError("truncated checkpoint '" + path + "'");
  }
  try {
    const auto header = nlohmann::json::parse(text);
    ckpt.config_json = header.at("config").get<std::string>();
    for (const auto& n : header.at("networks")) {
      PolicyParams p;
      p.shape.input_dim = n.at("input_dim").get<int>();
      p.shape.embed_dim = n.at("embed_dim").get<int>();
      p.shape.hidden_dim = n.at("hidden_dim").get<int>();
      p.shape.heads = n.at("heads").get<std::vector<int>>();
      const auto size = n.at("size").get<std::size_t>();
      if (size != param_count(p.shape)) throw IoError("network size disagrees with its shape");
      p.values.resize(size);
      ckpt.networks.emplace_back(n.at("name").get<std::string>(), std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("corrupt checkpoint header: ") + e.what());
  } catch (const ShapeError& e) {
    throw IoError(std::string("corrupt checkpoint header: ") + e.what());
  }
  for (auto& [_, p] : ckpt.networks) {
    if (!in.read(reinterpret_cast<char*>(p.values.data()),
                 static_cast<std::streamsize>(p.values.size() * sizeof(double)))) {
      throw IoError("truncated checkpoint '" + path + "'");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in checkpoint");
  return ckpt;
}

}  // namespace degen
