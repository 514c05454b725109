#include "resprect/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "resprect/errors.hpp"

namespace resprect {

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char bytes[4] = {
      static_cast<unsigned char>(v & 0xff),
      static_cast<unsigned char>((v >> 8) & 0xff),
      static_cast<unsigned char>((v >> 16) & 0xff),
      static_cast<unsigned char>((v >> 24) & 0xff),
  };
  os.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t read_u32(std::istream& is, const char* what) {
  unsigned char bytes[4];
  is.read(reinterpret_cast<char*>(bytes), 4);
  if (!is) throw CheckpointError(std::string("checkpoint truncated reading ") + what);
  return static_cast<std::uint32_t>(bytes[0]) |
         (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is, const char* what) {
  const std::uint32_t n = read_u32(is, what);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw CheckpointError(std::string("checkpoint truncated reading ") + what);
  return s;
}

// Little-endian float I/O; byte-swapping is a no-op on every target this
// builds for, but write through memcpy to stay strict-aliasing clean.
void write_floats(std::ostream& os, const std::vector<float>& data) {
  static_assert(sizeof(float) == 4);
  os.write(reinterpret_cast<const char*>(data.data()),
           static_cast<std::streamsize>(data.size() * 4));
}

void read_floats(std::istream& is, std::vector<float>& data, const char* what) {
  is.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * 4));
  if (!is) throw CheckpointError(std::string("checkpoint truncated reading ") + what);
}

/// Collects "<prefix>/<param>" tensors into a ParamSet with a reconstructed
/// architecture tag.
ParamSet paramset_from(const Checkpoint& ckpt, const std::string& prefix) {
  ParamSet p;
  for (const NamedTensor& t : ckpt.tensors) {
    if (t.name.rfind(prefix + "/", 0) == 0) {
      p.entries.push_back({t.name.substr(prefix.size() + 1), t.value});
    }
  }
  if (p.entries.empty()) {
    throw CheckpointError("checkpoint has no tensors for '" + prefix + "'");
  }
  p.arch_tag = mlp_arch_tag(mlp_dims(p));  // also validates the layout
  return p;
}

void append_paramset(Checkpoint& ckpt, const std::string& prefix, const ParamSet& p) {
  for (const NamedTensor& t : p.entries) {
    ckpt.tensors.push_back({prefix + "/" + t.name, t.value});
  }
}

std::string base_metadata(const SacConfig& cfg, float log_alpha) {
  std::ostringstream os;
  os << "residual = " << (cfg.residual ? 1 : 0) << "\n"
     << "obs_dim = " << cfg.obs_dim << "\n"
     << "action_dim = " << cfg.action_dim << "\n"
     << "hidden = " << cfg.hidden << "\n"
     << "residual_scale = " << cfg.residual_scale << "\n"
     << "log_alpha = " << log_alpha << "\n";
  return os.str();
}

std::uint64_t meta_u64(const std::string& metadata, const std::string& key) {
  const std::string v = metadata_get(metadata, key);
  if (v.empty()) throw CheckpointError("checkpoint metadata missing '" + key + "'");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw CheckpointError("checkpoint metadata '" + key + "' is not a number: " + v);
  }
}

float meta_float(const std::string& metadata, const std::string& key) {
  const std::string v = metadata_get(metadata, key);
  if (v.empty()) throw CheckpointError("checkpoint metadata missing '" + key + "'");
  try {
    return std::stof(v);
  } catch (const std::exception&) {
    throw CheckpointError("checkpoint metadata '" + key + "' is not a number: " + v);
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot open '" + path + "' for writing");
  os.write(kCheckpointMagic, 8);
  write_u32(os, ckpt.version);
  write_string(os, ckpt.metadata);
  write_u32(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const NamedTensor& t : ckpt.tensors) {
    write_string(os, t.name);
    write_u32(os, static_cast<std::uint32_t>(t.value.dims.size()));
    for (std::size_t d : t.value.dims) write_u32(os, static_cast<std::uint32_t>(d));
    write_floats(os, t.value.data);
  }
  os.flush();
  if (!os) throw CheckpointError("write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint '" + path + "'");

  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw CheckpointError("'" + path + "' is not a checkpoint (bad magic)");
  }
  Checkpoint ckpt;
  ckpt.version = read_u32(is, "version");
  if (ckpt.version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(ckpt.version) + " in '" + path + "'");
  }
  ckpt.metadata = read_string(is, "metadata");
  const std::uint32_t count = read_u32(is, "tensor count");
  ckpt.tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = read_string(is, "tensor name");
    const std::uint32_t rank = read_u32(is, "tensor rank");
    std::vector<std::size_t> dims(rank);
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      dims[d] = read_u32(is, "tensor dims");
      numel *= dims[d];
    }
    t.value = Tensor(dims);
    if (t.value.data.size() != numel) {
      throw CheckpointError("inconsistent tensor header in '" + path + "'");
    }
    read_floats(is, t.value.data, t.name.c_str());
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

std::string metadata_get(const std::string& metadata, const std::string& key) {
  std::istringstream is(metadata);
  std::string line;
  while (std::getline(is, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string k = line.substr(0, eq);
    std::string v = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
      const std::size_t a = s.find_first_not_of(" \t\r");
      const std::size_t b = s.find_last_not_of(" \t\r");
      s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
    };
    trim(k);
    trim(v);
    if (k == key) return v;
  }
  return "";
}

void save_agent_checkpoint(const AgentBundle& agent, const std::string& path,
                           const std::string& extra_metadata) {
  Checkpoint ckpt;
  ckpt.metadata = base_metadata(agent.cfg, agent.log_alpha) + extra_metadata;
  append_paramset(ckpt, "actor", agent.actor);
  append_paramset(ckpt, "critic1", agent.critic1);
  append_paramset(ckpt, "critic2", agent.critic2);
  save_checkpoint(ckpt, path);
}

void save_policy_checkpoint(const PretrainedPolicy& policy, const std::string& path,
                            const std::string& extra_metadata) {
  Checkpoint ckpt;
  ckpt.metadata =
      base_metadata(policy.cfg, std::log(policy.cfg.init_entropy_coef)) +
      extra_metadata;
  append_paramset(ckpt, "actor", policy.actor);
  append_paramset(ckpt, "critic1", policy.critic1);
  append_paramset(ckpt, "critic2", policy.critic2);
  save_checkpoint(ckpt, path);
}

void save_residual_checkpoint(const ResidualAgent& agent, const std::string& path,
                              const std::string& extra_metadata) {
  Checkpoint ckpt;
  ckpt.metadata =
      base_metadata(agent.inner.cfg, agent.inner.log_alpha) + extra_metadata;
  append_paramset(ckpt, "actor", agent.inner.actor);
  append_paramset(ckpt, "critic1", agent.inner.critic1);
  append_paramset(ckpt, "critic2", agent.inner.critic2);
  append_paramset(ckpt, "base/actor", agent.base.actor);
  append_paramset(ckpt, "base/critic1", agent.base.critic1);
  append_paramset(ckpt, "base/critic2", agent.base.critic2);
  save_checkpoint(ckpt, path);
}

LoadedPolicy load_policy_checkpoint(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);

  LoadedPolicy p;
  p.residual = meta_u64(ckpt.metadata, "residual") != 0;
  p.cfg.obs_dim = meta_u64(ckpt.metadata, "obs_dim");
  p.cfg.action_dim = meta_u64(ckpt.metadata, "action_dim");
  p.cfg.hidden = meta_u64(ckpt.metadata, "hidden");
  p.cfg.residual = p.residual;
  p.cfg.residual_scale = meta_float(ckpt.metadata, "residual_scale");
  p.actor = paramset_from(ckpt, "actor");
  p.critic1 = paramset_from(ckpt, "critic1");
  p.critic2 = paramset_from(ckpt, "critic2");

  // Cross-check the declared dims against the stored actor shape.
  const MlpDims dims = mlp_dims(p.actor);
  if (dims.in != p.cfg.actor_input_dim() || dims.out != 2 * p.cfg.action_dim ||
      dims.hidden != p.cfg.hidden) {
    throw CheckpointError("'" + path + "': actor tensors (" + p.actor.arch_tag +
                          ") do not match the declared dims");
  }

  if (p.residual) {
    p.base.cfg = p.cfg;
    p.base.cfg.residual = false;
    p.base.cfg.residual_scale = 1.0f;
    p.base.actor = paramset_from(ckpt, "base/actor");
    p.base.critic1 = paramset_from(ckpt, "base/critic1");
    p.base.critic2 = paramset_from(ckpt, "base/critic2");
  }
  return p;
}

PretrainedPolicy load_pretrained(const std::string& path) {
  const LoadedPolicy p = load_policy_checkpoint(path);
  if (p.residual) {
    throw CheckpointError("'" + path +
                          "' holds a residual policy, not a base policy");
  }
  PretrainedPolicy base;
  base.cfg = p.cfg;
  base.actor = p.actor;
  base.critic1 = p.critic1;
  base.critic2 = p.critic2;
  return base;
}

}  // namespace resprect
