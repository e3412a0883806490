#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oad/evalmetrics/classification.hpp"
#include "oad/m2t/detection.hpp"
#include "oad/m2t/text_model.hpp"
#include "oad/motionfeat/features.hpp"
#include "oad/pipeline/config.hpp"
#include "oad/vqcodec/vqvae.hpp"

namespace oad {

/// Heatmap frames produced on demand, so a sequence never has to be held
/// in memory at once.
struct HeatmapSequence {
  std::size_t frames = 0;
  std::function<Heatmap3D(std::size_t)> frame;

  static HeatmapSequence of(const SyntheticScene& scene);
  static HeatmapSequence of(std::vector<Heatmap3D> frames);
};

/// Per-channel z-scoring of feature frames ahead of the VQ encoder.
struct FeatureNormalizer {
  Vector mean;
  Vector scale;

  static FeatureNormalizer fit(const std::vector<MotionSequence>& sequences);
  Matrix apply(const Matrix& frames) const;
  nlohmann::json to_json() const;
  static FeatureNormalizer from_json(const nlohmann::json& j);
};

/// Everything recovered from heatmaps before tokenization.
struct RecoveredMotion {
  std::vector<JointPositions> detected;  // soft-argmax, gaps filled
  std::size_t filled = 0;                // joint-frames interpolated
  std::vector<PoseParams> poses;
  GlobalTrajectory trajectory;
  std::vector<JointPositions> joints;    // FK on the predicted root path
  MotionSequence features;
  std::string heatmap_digest;
};

/// Soft-argmax per joint (occluded or degenerate volumes interpolated),
/// root-relative swing-twist IK with zero twist, constant-velocity
/// trajectory prediction, FK along the predicted path, then features.
RecoveredMotion recover_motion(const SkeletonTemplate& skeleton, const HeatmapSequence& heatmaps,
                               const PipelineConfig& config);

/// Model state a run needs besides the config.
struct PipelineArtifacts {
  VqModel model;
  FeatureNormalizer normalizer;
  BigramModel captioner;
  std::vector<Exemplar> exemplars;
};

/// Loads the model directory (VQ files plus normalizer.json), the caption
/// corpus and exemplars. Throws kConfig when the model or corpus is missing.
PipelineArtifacts load_artifacts(const PipelineConfig& config);
FeatureNormalizer load_normalizer(const std::filesystem::path& model_dir);

/// Tokens of each stride-spaced window of a normalized feature sequence.
TokenSequence tokenize_motion(const VqModel& model, const FeatureNormalizer& normalizer, const MotionSequence& m,
                              int stride);

/// Front-end output of one seeded training scene.
struct TrainingClip {
  MotionSequence features;
  long onset_frame = -1;
};

/// config.train_walk walk scenes then config.train_stumble stumbles, seeded
/// from the config seed and recovered from unoccluded heatmaps.
std::vector<TrainingClip> training_clips(const PipelineConfig& config);

struct TrainingSummary {
  std::size_t scenes = 0;
  std::size_t windows = 0;
  double initial_reconstruction = 0.0;
  double final_reconstruction = 0.0;
  double final_perplexity = 0.0;
  std::size_t corpus_pairs = 0;
};

/// Fits the normalizer, trains the VQ model on train_stride-spaced windows
/// and writes both to config.model.
TrainingSummary train_vq_artifacts(const PipelineConfig& config, const std::vector<TrainingClip>& clips);

/// Caption pairs for every training window: its tokens and the normal
/// caption, or the abnormal one once the window midpoint reaches a stumble
/// onset.
std::vector<CaptionPair> caption_corpus(const PipelineConfig& config, const VqModel& model,
                                        const FeatureNormalizer& normalizer, const std::vector<TrainingClip>& clips);

/// Both training stages; writes config.model and config.corpus.
TrainingSummary train_artifacts(const PipelineConfig& config);

struct RunReport {
  std::vector<nlohmann::json> sequences;
  std::optional<ClassificationReport> aggregate;
  std::size_t failed = 0;

  nlohmann::json to_json() const;
  std::string dump() const;
};

/// Processes every input in order; a failing sequence is recorded with its
/// stage and error and does not stop the batch.
RunReport run_pipeline(const PipelineConfig& config, const PipelineArtifacts& artifacts, CompletionClient& client);

/// Loads artifacts (kConfig before any processing when they are missing)
/// and uses the configured classifier.
RunReport run_pipeline(const PipelineConfig& config);

std::unique_ptr<CompletionClient> make_client(const PipelineConfig& config);

// Scene directory: scene.json (metadata and ground truth), heatmaps.hm3d.
void save_scene(const SyntheticScene& scene, const std::filesystem::path& dir);
struct StoredScene {
  nlohmann::json meta;
  std::vector<Heatmap3D> heatmaps;
};
StoredScene load_scene(const std::filesystem::path& path);

std::vector<JointPositions> joints_from_json(const nlohmann::json& j);
nlohmann::json joints_to_json(const std::vector<JointPositions>& joints);

}  // namespace oad
