#include "oad/pipeline/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "oad/core/checksum.hpp"
#include "oad/core/error.hpp"
#include "oad/core/rng.hpp"
#include "oad/pipeline/occlusion.hpp"
#include "oad/trajectory/predictor.hpp"

namespace oad {
namespace {

const std::vector<std::string> kLabels{"normal", "abnormal"};

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(bool(in), ErrorCode::kIo, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(bool(out), ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void hash_heatmap(std::uint64_t& state, const Heatmap3D& h) {
  const auto& v = h.values();
  state = fnv1a64(std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float)), state);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << v;
  return s.str();
}

std::string digest(const std::vector<JointPositions>& frames) {
  Checksum c;
  for (const auto& f : frames) c.add(f);
  return c.hex();
}

std::string digest(const std::vector<PoseParams>& poses) {
  Checksum c;
  for (const auto& p : poses)
    for (const Rotation& r : p.rotations) c.add(r.w()).add(r.x()).add(r.y()).add(r.z());
  return c.hex();
}

std::string digest(const GlobalTrajectory& g) {
  Checksum c;
  c.add(g.translations);
  for (const Rotation& r : g.rotations) c.add(r.w()).add(r.x()).add(r.y()).add(r.z());
  return c.hex();
}

std::string digest(const TokenSequence& tokens) {
  Checksum c;
  for (int t : tokens) c.add(std::int64_t(t));
  return c.hex();
}

nlohmann::json rotation_json(const Rotation& r) { return {r.w(), r.x(), r.y(), r.z()}; }

}  // namespace

HeatmapSequence HeatmapSequence::of(const SyntheticScene& scene) {
  return {scene.frame_count(), [&scene](std::size_t t) { return scene.heatmap(t); }};
}

HeatmapSequence HeatmapSequence::of(std::vector<Heatmap3D> frames) {
  auto shared = std::make_shared<std::vector<Heatmap3D>>(std::move(frames));
  return {shared->size(), [shared](std::size_t t) { return shared->at(t); }};
}

FeatureNormalizer FeatureNormalizer::fit(const std::vector<MotionSequence>& sequences) {
  require(!sequences.empty(), ErrorCode::kInsufficientData, "no feature sequences to normalize");
  const Eigen::Index dp = sequences.front().frames.cols();
  Vector sum = Vector::Zero(dp), sq = Vector::Zero(dp);
  double n = 0.0;
  for (const MotionSequence& m : sequences) {
    require(m.frames.cols() == dp, ErrorCode::kDimension, "feature widths differ");
    sum += m.frames.colwise().sum().transpose();
    sq += m.frames.array().square().matrix().colwise().sum().transpose();
    n += double(m.frames.rows());
  }
  require(n > 1.0, ErrorCode::kInsufficientData, "too few feature frames to normalize");
  FeatureNormalizer f;
  f.mean = sum / n;
  const Vector var = (sq / n - f.mean.cwiseProduct(f.mean)).cwiseMax(0.0);
  // Constant channels (the root of a root-relative layout) keep unit scale.
  f.scale = var.cwiseSqrt().unaryExpr([](double s) { return s > 1e-9 ? s : 1.0; });
  return f;
}

Matrix FeatureNormalizer::apply(const Matrix& frames) const {
  require(frames.cols() == mean.size(), ErrorCode::kDimension,
          "feature width " + std::to_string(frames.cols()) + " does not match normalizer width " +
              std::to_string(mean.size()));
  return (frames.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

nlohmann::json FeatureNormalizer::to_json() const {
  return {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
          {"scale", std::vector<double>(scale.data(), scale.data() + scale.size())}};
}

FeatureNormalizer FeatureNormalizer::from_json(const nlohmann::json& j) {
  const auto m = j.at("mean").get<std::vector<double>>();
  const auto s = j.at("scale").get<std::vector<double>>();
  require(m.size() == s.size() && !m.empty(), ErrorCode::kParse, "normalizer mean and scale differ in length");
  FeatureNormalizer f;
  f.mean = Eigen::Map<const Vector>(m.data(), Eigen::Index(m.size()));
  f.scale = Eigen::Map<const Vector>(s.data(), Eigen::Index(s.size()));
  require((f.scale.array() > 0.0).all(), ErrorCode::kParse, "normalizer scales must be positive");
  return f;
}

RecoveredMotion recover_motion(const SkeletonTemplate& skeleton, const HeatmapSequence& heatmaps,
                               const PipelineConfig& config) {
  const std::size_t T = heatmaps.frames;
  require(T >= 3, ErrorCode::kInsufficientData, "need at least 3 heatmap frames");
  const std::size_t J = skeleton.joint_count();
  RecoveredMotion r;

  std::vector<JointPositions> raw(T, JointPositions(J, Vec3::Zero()));
  std::vector<std::vector<bool>> valid(T, std::vector<bool>(J, true));
  std::uint64_t state = 0xcbf29ce484222325ULL;
  for (std::size_t t = 0; t < T; ++t) {
    Heatmap3D h = heatmaps.frame(t);
    require(h.joint_count() == J, ErrorCode::kDimension,
            "heatmaps carry " + std::to_string(h.joint_count()) + " joints, skeleton has " + std::to_string(J));
    if (t == 0) check_occlusion(config.occlusion, T, J);
    occlude_frame(h, t, config.occlusion, config.seed);
    hash_heatmap(state, h);
    for (std::size_t j = 0; j < J; ++j) {
      if (config.occlusion.covers(t, j)) {
        valid[t][j] = false;
        continue;
      }
      try {
        raw[t][j] = soft_argmax_joint(h, j);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateHeatmap) throw;
        valid[t][j] = false;
      }
    }
  }
  r.heatmap_digest = hex64(state);
  for (const auto& row : valid)
    for (bool v : row) r.filled += v ? 0 : 1;
  r.detected = interpolate_missing(raw, valid);

  const TwistAngles no_twist{std::vector<double>(J - 1, 0.0)};
  r.poses.reserve(T);
  for (const JointPositions& p : r.detected) {
    JointPositions rel = p;
    for (Vec3& v : rel) v -= p[0];
    r.poses.push_back(swing_twist_ik(skeleton, rel, no_twist));
  }

  EgoInitialState initial;
  initial.translation = r.detected[0][0] - Vec3(0.0, 0.0, config.predictor_step);
  const ConstantVelocityPredictor predictor(config.predictor_step, initial);
  r.trajectory = ego_to_global(predict_trajectory(r.poses, predictor));

  r.joints.reserve(T);
  for (std::size_t t = 0; t < T; ++t)
    r.joints.push_back(
        forward_kinematics(skeleton, r.poses[t], r.trajectory.translations[t], r.trajectory.rotations[t]));
  r.features = extract_features(r.joints, r.trajectory, config.fps);
  return r;
}

TokenSequence tokenize_motion(const VqModel& model, const FeatureNormalizer& normalizer, const MotionSequence& m,
                              int stride) {
  const int w = model.config.window;
  require(m.frames.rows() >= w, ErrorCode::kInsufficientData,
          "sequence has " + std::to_string(m.frames.rows()) + " feature frames, window needs " + std::to_string(w));
  const Matrix z = normalizer.apply(m.frames);
  TokenSequence out;
  for (Eigen::Index start = 0; start + w <= z.rows(); start += stride) {
    const TokenSequence part = model.tokenize(z.middleRows(start, w));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

FeatureNormalizer load_normalizer(const std::filesystem::path& model_dir) {
  return FeatureNormalizer::from_json(read_json(model_dir / "normalizer.json"));
}

PipelineArtifacts load_artifacts(const PipelineConfig& config) {
  require(!config.model.empty() && std::filesystem::exists(config.model / "codebook.vqcb"), ErrorCode::kConfig,
          "codebook not found under " + config.model.string());
  require(!config.corpus.empty() && std::filesystem::exists(config.corpus), ErrorCode::kConfig,
          "caption corpus not found: " + config.corpus.string());
  VqModel model = load_vq_model(config.model);
  require(model.config.window == config.window, ErrorCode::kConfig,
          "model window " + std::to_string(model.config.window) + " differs from vq.window");
  FeatureNormalizer normalizer = load_normalizer(config.model);
  require(normalizer.mean.size() == model.config.input_dim, ErrorCode::kConfig,
          "normalizer width does not match the model input");
  const std::vector<CaptionPair> corpus = load_corpus(config.corpus);
  BigramModel captioner = train_bigram_baseline(corpus, config.smoothing);
  std::vector<Exemplar> exemplars;
  if (!config.exemplars.empty()) exemplars = load_exemplars(config.exemplars);
  return {std::move(model), std::move(normalizer), std::move(captioner), std::move(exemplars)};
}

std::vector<TrainingClip> training_clips(const PipelineConfig& config) {
  require(config.train_walk + config.train_stumble > 0, ErrorCode::kConfig, "no training scenes requested");
  PipelineConfig clean = config;
  clean.occlusion = {};
  const SkeletonTemplate skeleton = config.load_skeleton();
  const SynthOptions options = config.synth_options();
  std::vector<TrainingClip> clips;
  Rng seeds = Rng::substream(config.seed, "training");
  for (int i = 0; i < config.train_walk + config.train_stumble; ++i) {
    const SceneKind kind = i < config.train_walk ? SceneKind::kWalk : SceneKind::kStumble;
    const SyntheticScene scene = synth_generate(skeleton, kind, seeds.next_u64(), options);
    clips.push_back({recover_motion(skeleton, HeatmapSequence::of(scene), clean).features, scene.onset_frame});
  }
  return clips;
}

namespace {

struct WindowSet {
  std::vector<Matrix> windows;
  std::vector<std::pair<std::size_t, Eigen::Index>> origin;  // clip, start row
};

WindowSet training_windows(const PipelineConfig& config, const FeatureNormalizer& normalizer,
                           const std::vector<TrainingClip>& clips) {
  WindowSet w;
  for (std::size_t c = 0; c < clips.size(); ++c) {
    const Matrix z = normalizer.apply(clips[c].features.frames);
    for (Eigen::Index s = 0; s + config.window <= z.rows(); s += config.train_stride) {
      w.windows.push_back(z.middleRows(s, config.window));
      w.origin.emplace_back(c, s);
    }
  }
  return w;
}

}  // namespace

TrainingSummary train_vq_artifacts(const PipelineConfig& config, const std::vector<TrainingClip>& clips) {
  require(!config.model.empty(), ErrorCode::kConfig, "paths.model must be set for training");
  std::vector<MotionSequence> all;
  for (const TrainingClip& c : clips) all.push_back(c.features);
  const FeatureNormalizer normalizer = FeatureNormalizer::fit(all);
  const WindowSet set = training_windows(config, normalizer, clips);

  VqConfig vq;
  vq.input_dim = int(normalizer.mean.size());
  vq.hidden = config.hidden;
  vq.latent_dim = config.latent_dim;
  vq.codebook_size = config.codebook_size;
  vq.window = config.window;
  vq.learning_rate = config.learning_rate;
  VqModel model = make_vq_model(vq, set.windows, config.seed);
  OptimizerState state = OptimizerState::for_model(model);
  TrainOptions train;
  train.steps = config.train_steps;
  train.batch_size = config.batch_size;
  train.seed = config.seed;
  const std::vector<StepReport> steps = train_vq(model, state, set.windows, train);

  TrainingSummary summary;
  summary.scenes = clips.size();
  summary.windows = set.windows.size();
  if (!steps.empty()) {
    summary.initial_reconstruction = steps.front().loss.reconstruction;
    summary.final_reconstruction = steps.back().loss.reconstruction;
    summary.final_perplexity = steps.back().perplexity;
  }
  std::filesystem::create_directories(config.model);
  save_vq_model(model, config.model);
  write_json(normalizer.to_json(), config.model / "normalizer.json");
  return summary;
}

std::vector<CaptionPair> caption_corpus(const PipelineConfig& config, const VqModel& model,
                                        const FeatureNormalizer& normalizer, const std::vector<TrainingClip>& clips) {
  const WindowSet set = training_windows(config, normalizer, clips);
  std::vector<CaptionPair> corpus;
  for (std::size_t i = 0; i < set.windows.size(); ++i) {
    const auto [c, start] = set.origin[i];
    const long onset = clips[c].onset_frame;
    // Feature row r describes frame r + 1.
    const bool abnormal = onset >= 0 && long(start) + 1 + config.window / 2 >= onset;
    corpus.push_back({model.tokenize(set.windows[i]), abnormal ? config.abnormal_caption : config.normal_caption});
  }
  return corpus;
}

TrainingSummary train_artifacts(const PipelineConfig& config) {
  require(!config.model.empty() && !config.corpus.empty(), ErrorCode::kConfig,
          "paths.model and paths.corpus must be set for training");
  const std::vector<TrainingClip> clips = training_clips(config);
  TrainingSummary summary = train_vq_artifacts(config, clips);
  const VqModel model = load_vq_model(config.model);
  const FeatureNormalizer normalizer = load_normalizer(config.model);
  const std::vector<CaptionPair> corpus = caption_corpus(config, model, normalizer, clips);
  summary.corpus_pairs = corpus.size();
  if (config.corpus.has_parent_path()) std::filesystem::create_directories(config.corpus.parent_path());
  save_corpus(corpus, config.corpus);
  return summary;
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json j;
  j["sequences"] = sequences;
  j["failed"] = failed;
  j["aggregate"] = aggregate ? aggregate->to_json() : nlohmann::json();
  return j;
}

std::string RunReport::dump() const { return to_json().dump(2) + "\n"; }

std::unique_ptr<CompletionClient> make_client(const PipelineConfig& config) {
  if (config.classifier == "environment") return client_from_environment(config.keywords);
  return std::make_unique<MockCompletionClient>(config.keywords);
}

RunReport run_pipeline(const PipelineConfig& config, const PipelineArtifacts& artifacts, CompletionClient& client) {
  const SkeletonTemplate skeleton = config.load_skeleton();
  const SynthOptions options = config.synth_options();
  RunReport report;
  std::vector<std::string> truth, predicted;

  for (const PipelineInput& input : config.inputs) {
    nlohmann::json entry;
    entry["name"] = input.name;
    std::string stage = "load";
    try {
      std::optional<SyntheticScene> scene;
      HeatmapSequence heatmaps;
      nlohmann::json label;
      if (input.synthetic()) {
        scene = synth_generate(skeleton, *input.kind, input.scene_seed, options);
        heatmaps = HeatmapSequence::of(*scene);
        label = scene->label();
      } else {
        StoredScene stored = load_scene(input.path);
        if (stored.meta.contains("label")) label = stored.meta.at("label");
        heatmaps = HeatmapSequence::of(std::move(stored.heatmaps));
      }
      entry["label"] = label;

      stage = "recover";
      const RecoveredMotion motion = recover_motion(skeleton, heatmaps, config);
      stage = "tokenize";
      const TokenSequence tokens = tokenize_motion(artifacts.model, artifacts.normalizer, motion.features,
                                                   config.stride);
      stage = "caption";
      const Vocabulary& vocab = artifacts.captioner.vocabulary();
      const std::string caption =
          vocab.decode(greedy_decode(artifacts.captioner, tokens, config.max_caption_words + 1));
      stage = "classify";
      const DetectionVerdict verdict = classify(caption, client, artifacts.exemplars, config.keywords);

      entry["status"] = "ok";
      entry["frames"] = heatmaps.frames;
      entry["interpolated"] = motion.filled;
      entry["checksums"] = {{"heatmaps", motion.heatmap_digest},
                            {"joints_detected", digest(motion.detected)},
                            {"poses", digest(motion.poses)},
                            {"trajectory", digest(motion.trajectory)},
                            {"joints", digest(motion.joints)},
                            {"features", Checksum().add(motion.features.frames).hex()},
                            {"tokens", digest(tokens)}};
      entry["tokens"] = tokens;
      entry["caption"] = caption;
      entry["verdict"] = to_string(verdict.label);
      entry["source"] = verdict.source;
      entry["degraded"] = verdict.degraded;
      if (label.is_string()) {
        truth.push_back(label.get<std::string>());
        predicted.push_back(to_string(verdict.label));
      }
    } catch (const Error& e) {
      entry["status"] = "failed";
      entry["stage"] = stage;
      entry["error"] = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
      ++report.failed;
    } catch (const std::exception& e) {
      entry["status"] = "failed";
      entry["stage"] = stage;
      entry["error"] = {{"code", "internal"}, {"message", e.what()}};
      ++report.failed;
    }
    report.sequences.push_back(std::move(entry));
  }
  if (!truth.empty()) report.aggregate = classification_report(truth, predicted, kLabels);
  return report;
}

RunReport run_pipeline(const PipelineConfig& config) {
  const PipelineArtifacts artifacts = load_artifacts(config);
  const auto client = make_client(config);
  return run_pipeline(config, artifacts, *client);
}

std::vector<JointPositions> joints_from_json(const nlohmann::json& j) {
  std::vector<JointPositions> out;
  for (const auto& frame : j) {
    JointPositions p;
    for (const auto& v : frame) p.emplace_back(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());
    out.push_back(std::move(p));
  }
  return out;
}

nlohmann::json joints_to_json(const std::vector<JointPositions>& joints) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& frame : joints) {
    nlohmann::json f = nlohmann::json::array();
    for (const Vec3& v : frame) f.push_back({v.x(), v.y(), v.z()});
    j.push_back(std::move(f));
  }
  return j;
}

void save_scene(const SyntheticScene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json meta;
  meta["kind"] = to_string(scene.kind);
  meta["seed"] = scene.seed;
  meta["label"] = scene.label();
  meta["fps"] = scene.fps;
  meta["frames"] = scene.frame_count();
  meta["onset_frame"] = scene.onset_frame;
  meta["joints"] = joints_to_json(scene.joints);
  meta["detections"] = joints_to_json(scene.detections);
  nlohmann::json traj = nlohmann::json::array(), poses = nlohmann::json::array(), twists = nlohmann::json::array();
  for (std::size_t t = 0; t < scene.frame_count(); ++t) {
    const Vec3& p = scene.trajectory.translations[t];
    traj.push_back({{"t", {p.x(), p.y(), p.z()}}, {"q", rotation_json(scene.trajectory.rotations[t])}});
    nlohmann::json rs = nlohmann::json::array();
    for (const Rotation& r : scene.poses[t].rotations) rs.push_back(rotation_json(r));
    poses.push_back(std::move(rs));
    twists.push_back(scene.twists[t].angles);
  }
  meta["trajectory"] = std::move(traj);
  meta["poses"] = std::move(poses);
  meta["twists"] = std::move(twists);
  write_json(meta, dir / "scene.json");
  save_heatmaps(scene.heatmaps(), dir / "heatmaps.hm3d");
}

StoredScene load_scene(const std::filesystem::path& path) {
  StoredScene s;
  if (std::filesystem::is_directory(path)) {
    if (std::filesystem::exists(path / "scene.json")) s.meta = read_json(path / "scene.json");
    s.heatmaps = load_heatmaps(path / "heatmaps.hm3d");
  } else {
    s.heatmaps = load_heatmaps(path);
  }
  return s;
}

}  // namespace oad
