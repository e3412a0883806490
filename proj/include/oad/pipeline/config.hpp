#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oad/pipeline/synth.hpp"

namespace oad {

enum class OcclusionMode { kZero, kNoise };
std::string to_string(OcclusionMode m);
OcclusionMode parse_occlusion_mode(const std::string& name);

/// Joints hidden over frames [frame_begin, frame_end).
struct OcclusionSpec {
  std::vector<std::size_t> joints;
  std::size_t frame_begin = 0;
  std::size_t frame_end = 0;
  OcclusionMode mode = OcclusionMode::kZero;

  bool empty() const { return joints.empty() || frame_end <= frame_begin; }
  bool covers(std::size_t frame, std::size_t joint) const;
  std::size_t frame_count() const { return empty() ? 0 : frame_end - frame_begin; }
};

/// One sequence to process: a seeded synthetic scene or a scene on disk
/// (a directory written by `oadctl synth`, or a bare HM3D sequence file).
struct PipelineInput {
  std::string name;
  std::optional<SceneKind> kind;
  std::uint64_t scene_seed = 0;
  std::filesystem::path path;

  bool synthetic() const { return kind.has_value(); }
};

struct PipelineConfig {
  std::uint64_t seed = 0;

  std::filesystem::path skeleton;  // empty: built-in humanoid
  std::filesystem::path model;     // VQ model directory
  std::filesystem::path corpus;    // caption corpus, JSON lines
  std::filesystem::path exemplars;

  int window = 32;
  int stride = 32;
  int codebook_size = 64;
  int hidden = 32;
  int latent_dim = 16;
  int train_steps = 400;
  int batch_size = 16;
  double learning_rate = 1e-3;
  int train_walk = 8;
  int train_stumble = 8;
  int train_stride = 4;

  double smoothing = 0.1;
  int max_caption_words = 12;
  std::string normal_caption = "a person walks forward steadily";
  std::string abnormal_caption = "a person staggers and falls down";

  std::size_t frames = 98;
  double fps = 30.0;
  double predictor_step = 0.03;

  std::vector<PipelineInput> inputs;
  OcclusionSpec occlusion;

  std::string classifier = "mock";  // or "environment"
  std::vector<std::string> keywords;

  SkeletonTemplate load_skeleton() const;
  SynthOptions synth_options() const;
};

/// Flat `key=value` lines; `#` starts a comment. Later keys override.
std::map<std::string, std::string> parse_key_values(std::istream& in);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

struct ConfigCheck {
  /// Require the model directory and corpus to exist. Off when they are
  /// about to be trained.
  bool artifacts = true;
};

/// Builds and validates a config. Relative paths resolve against base_dir.
/// Throws kConfig on unknown keys, malformed values, a missing seed, a
/// window below 8, or referenced paths that do not exist.
PipelineConfig config_from_values(const std::map<std::string, std::string>& values,
                                  const std::filesystem::path& base_dir = {}, const ConfigCheck& check = {});
PipelineConfig load_config(const std::filesystem::path& path,
                           const std::map<std::string, std::string>& overrides = {}, const ConfigCheck& check = {});

/// "walk:1-50,stumble:7" style list of seeded synthetic inputs.
std::vector<PipelineInput> parse_synthetic_inputs(const std::string& text);

}  // namespace oad
