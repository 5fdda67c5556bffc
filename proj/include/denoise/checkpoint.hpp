#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "denoise/model.hpp"
#include "denoise/scorer.hpp"

namespace denoise {

/// Text checkpoint, format version 1:
///
///   denoise-checkpoint 1
///   tau_exp <hexfloat>
///   normalizer variance|stddev
///   head_inputs standardized|raw
///   matrix <name> <rows> <cols>
///   <cols hexfloats per line, one line per row>
///   ...
///   end
///
/// Matrix names: encoder.<l>, decoder.{structure_conv,structure_out,
/// attribute_conv,attribute_out}, and when a head is stored
/// head.{w1,b1,w2,b2,mu,sigma2}. Hexfloats make the round trip bit-exact.
struct Checkpoint {
  ModelParams model;
  std::optional<ScoreHead> head;
  double tau_exp = 1.0;
};

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ckpt, std::ostream& os);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(std::istream& is);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace denoise
