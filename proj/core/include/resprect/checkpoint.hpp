#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "resprect/mlp.hpp"
#include "resprect/residual.hpp"
#include "resprect/sac.hpp"

namespace resprect {

/// On-disk policy container.  Binary layout, all integers little-endian:
///   8-byte magic "RSPRECT1"
///   u32 format version
///   u32 metadata length + UTF-8 metadata ("key = value" lines)
///   u32 tensor count, then per tensor:
///     u32 name length + name bytes
///     u32 rank, u32 dims[rank]
///     raw 32-bit floats
inline constexpr char kCheckpointMagic[8] = {'R', 'S', 'P', 'R', 'E', 'C', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::string metadata;
  std::vector<NamedTensor> tensors;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

/// Throws CheckpointError on bad magic, version mismatch or truncation.
Checkpoint load_checkpoint(const std::string& path);

/// Value of `key = value` within a metadata block; empty string if absent.
std::string metadata_get(const std::string& metadata, const std::string& key);

/// Saves the learnable networks of a plain agent (actor, critic1, critic2)
/// plus enough metadata to rebuild them.  `extra_metadata` appends caller
/// lines (mode, step, config hash, ...).
void save_agent_checkpoint(const AgentBundle& agent, const std::string& path,
                           const std::string& extra_metadata = "");

/// Saves a frozen policy (e.g. a meta-pretrained one) in the same layout as
/// a plain agent checkpoint.
void save_policy_checkpoint(const PretrainedPolicy& policy, const std::string& path,
                            const std::string& extra_metadata = "");

/// Saves a residual learner together with its frozen base policy (tensor
/// names prefixed "base/").
void save_residual_checkpoint(const ResidualAgent& agent, const std::string& path,
                              const std::string& extra_metadata = "");

/// A checkpoint lifted back into typed form.  For a residual policy, `actor`
/// is the correction network and `base` the frozen policy it rides on.
struct LoadedPolicy {
  bool residual = false;
  SacConfig cfg;
  ParamSet actor, critic1, critic2;
  PretrainedPolicy base;  // populated when residual
};

LoadedPolicy load_policy_checkpoint(const std::string& path);

/// Loads a non-residual checkpoint as a frozen base policy; throws
/// CheckpointError for residual checkpoints.
PretrainedPolicy load_pretrained(const std::string& path);

}  // namespace resprect
