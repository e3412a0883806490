// oadctl: command-line front end for the occlusion-aware detection pipeline.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "oad/core/error.hpp"
#include "oad/evalmetrics/alignment.hpp"
#include "oad/evalmetrics/classification.hpp"
#include "oad/pipeline/occlusion.hpp"
#include "oad/pipeline/pipeline.hpp"

using namespace oad;
using nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string format = "json";
};

struct OcclusionFlags {
  std::string joints, frames, mode;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--occlude-joints", joints, "Joints to hide: list of ids or ranges, or 'all'");
    cmd->add_option("--occlude-frames", frames, "Inclusive frame range to hide, e.g. 20-39");
    cmd->add_option("--occlude-mode", mode, "zero or noise")->check(CLI::IsMember({"zero", "noise"}));
  }
  void apply(std::map<std::string, std::string>& values) const {
    if (!joints.empty()) values["occlusion.joints"] = joints;
    if (!frames.empty()) values["occlusion.frames"] = frames;
    if (!mode.empty()) values["occlusion.mode"] = mode;
  }
};

Globals g;

/// Commands that draw random numbers insist on an explicit seed; the rest
/// fall back to 0, which they never consume.
PipelineConfig make_config(bool needs_seed, bool artifacts, std::map<std::string, std::string> extra = {}) {
  std::map<std::string, std::string> values;
  std::filesystem::path base;
  if (!g.config.empty()) {
    values = read_key_values(g.config);
    base = std::filesystem::path(g.config).parent_path();
  }
  if (g.seed) values["seed"] = std::to_string(*g.seed);
  if (!needs_seed && !values.count("seed")) values["seed"] = "0";
  for (auto& [k, v] : extra) values[k] = v;
  return config_from_values(values, base, {artifacts});
}

void emit(const std::string& text) {
  if (g.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(g.output);
  require(bool(out), ErrorCode::kIo, "cannot write " + g.output);
  out << text;
}

void emit(const json& j, const std::string& text = {}) {
  emit(g.format == "text" && !text.empty() ? text : j.dump(2) + "\n");
}

std::string require_output(const std::string& what) {
  require(!g.output.empty(), ErrorCode::kConfig, what + " needs --output");
  return g.output;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(bool(in), ErrorCode::kIo, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, path + ": " + e.what());
  }
}

/// Joint frames from a pose result, a scene.json or a bare array.
std::vector<JointPositions> read_joints(const std::string& path) {
  std::filesystem::path p(path);
  if (std::filesystem::is_directory(p)) p /= "scene.json";
  const json j = read_json_file(p.string());
  return joints_from_json(j.is_object() ? j.at("joints") : j);
}

/// One label per line, or a JSON array.
std::vector<std::string> read_labels(const std::string& path) {
  std::ifstream in(path);
  require(bool(in), ErrorCode::kIo, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') return json::parse(text).get<std::vector<std::string>>();
  std::vector<std::string> out;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

RecoveredMotion recover(const PipelineConfig& c, const std::string& input) {
  return recover_motion(c.load_skeleton(), HeatmapSequence::of(load_scene(input).heatmaps), c);
}

json pose_json(const RecoveredMotion& m) {
  json poses = json::array();
  for (const PoseParams& p : m.poses) {
    json frame = json::array();
    for (const Rotation& r : p.rotations) frame.push_back({r.w(), r.x(), r.y(), r.z()});
    poses.push_back(std::move(frame));
  }
  return {{"frames", m.detected.size()},
          {"interpolated", m.filled},
          {"joints", joints_to_json(m.detected)},
          {"poses", std::move(poses)}};
}

std::string caption_for(const BigramModel& model, const TokenSequence& tokens, int max_words) {
  return model.vocabulary().decode(greedy_decode(model, tokens, max_words + 1));
}

std::string run_text(const RunReport& r) {
  std::ostringstream s;
  for (const json& e : r.sequences) {
    s << e.at("name").get<std::string>() << "  ";
    if (e.at("status") == "ok")
      s << e.at("verdict").get<std::string>() << "  \"" << e.at("caption").get<std::string>() << "\"\n";
    else
      s << "FAILED at " << e.at("stage").get<std::string>() << ": " << e.at("error").at("message").get<std::string>()
        << "\n";
  }
  if (r.aggregate) s << "\n" << r.aggregate->to_text();
  s << "failed: " << r.failed << "\n";
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Occlusion-aware abnormal motion detection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.add_option("--config", g.config, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for every random stream");
  app.add_option("--output,-o", g.output, "Output file or directory");
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "text"}));

  int exit_status = 0;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene directory");
  std::string kind;
  std::optional<std::size_t> frames;
  std::optional<std::uint64_t> scene_seed;
  std::optional<double> speed, amplitude;
  synth->add_option("--kind", kind, "walk, oscillate or stumble")->required();
  synth->add_option("--frames", frames, "Frame count");
  synth->add_option("--scene-seed", scene_seed, "Scene seed (defaults to --seed)");
  synth->add_option("--speed", speed, "Walk speed, m/frame");
  synth->add_option("--amplitude", amplitude, "Oscillation amplitude, rad");
  synth->callback([&] {
    const PipelineConfig c = make_config(!scene_seed, false);
    SynthOptions o = c.synth_options();
    if (frames) o.frames = *frames;
    o.speed = speed;
    o.amplitude = amplitude;
    const SyntheticScene s = synth_generate(c.load_skeleton(), parse_scene_kind(kind), scene_seed.value_or(c.seed), o);
    const std::string dir = require_output("synth");
    save_scene(s, dir);
    g.output.clear();
    emit(json{{"path", dir}, {"kind", kind}, {"seed", s.seed}, {"frames", s.frame_count()}, {"label", s.label()},
              {"onset_frame", s.onset_frame}});
  });

  // occlude
  auto* occ = app.add_subcommand("occlude", "Hide joints in a heatmap sequence");
  std::string input;
  OcclusionFlags occlusion;
  occ->add_option("--input,-i", input, "Scene directory or HM3D file")->required();
  occlusion.add_to(occ);
  occ->callback([&] {
    std::map<std::string, std::string> extra;
    occlusion.apply(extra);
    const PipelineConfig c = make_config(true, false, extra);
    std::vector<Heatmap3D> h = load_scene(input).heatmaps;
    occlude(h, c.occlusion, c.seed);
    save_heatmaps(h, require_output("occlude"));
    g.output.clear();
    emit(json{{"frames", h.size()}, {"occluded_frames", c.occlusion.frame_count()},
              {"joints", c.occlusion.joints}, {"mode", to_string(c.occlusion.mode)}});
  });

  // pose, traj, features share the heatmap front end.
  auto* pose = app.add_subcommand("pose", "Heatmaps to joints to root-relative IK poses");
  auto* traj = app.add_subcommand("traj", "Predicted global root trajectory (JSON lines)");
  auto* feats = app.add_subcommand("features", "Motion feature sequence");
  OcclusionFlags front_occlusion;
  for (auto* cmd : {pose, traj, feats}) {
    cmd->add_option("--input,-i", input, "Scene directory or HM3D file")->required();
    front_occlusion.add_to(cmd);
  }
  auto front_config = [&] {
    std::map<std::string, std::string> extra;
    front_occlusion.apply(extra);
    return make_config(false, false, extra);
  };
  pose->callback([&] { emit(pose_json(recover(front_config(), input))); });
  traj->callback([&] {
    std::ostringstream s;
    write_trajectory(s, recover(front_config(), input).trajectory);
    emit(s.str());
  });
  feats->callback([&] {
    std::ostringstream s;
    write_motion(s, recover(front_config(), input).features);
    emit(s.str());
  });

  // train-vq
  auto* train_vq_cmd = app.add_subcommand("train-vq", "Train the VQ model on seeded synthetic scenes");
  train_vq_cmd->callback([&] {
    const PipelineConfig c = make_config(true, false);
    const TrainingSummary s = train_vq_artifacts(c, training_clips(c));
    emit(json{{"model", c.model.string()}, {"scenes", s.scenes}, {"windows", s.windows},
              {"initial_reconstruction", s.initial_reconstruction}, {"final_reconstruction", s.final_reconstruction},
              {"final_perplexity", s.final_perplexity}});
  });

  // tokenize
  auto* tok = app.add_subcommand("tokenize", "Motion tokens of a scene or feature file");
  std::string features_path;
  auto* tok_in = tok->add_option("--input,-i", input, "Scene directory or HM3D file");
  tok->add_option("--features", features_path, "Feature file from `features`")->excludes(tok_in);
  tok->callback([&] {
    const PipelineConfig c = make_config(false, false);
    require(!input.empty() || !features_path.empty(), ErrorCode::kConfig, "tokenize needs --input or --features");
    const VqModel model = load_vq_model(c.model);
    const MotionSequence m = features_path.empty() ? recover(c, input).features : load_motion(features_path);
    const TokenSequence t = tokenize_motion(model, load_normalizer(c.model), m, c.stride);
    emit(json(t).dump() + "\n");
  });

  // train-m2t
  auto* train_m2t = app.add_subcommand("train-m2t", "Build the caption corpus with a trained VQ model");
  std::string bigram_out;
  train_m2t->add_option("--bigram", bigram_out, "Also write the fitted bigram model here");
  train_m2t->callback([&] {
    const PipelineConfig c = make_config(true, false);
    require(!c.corpus.empty(), ErrorCode::kConfig, "paths.corpus is not set");
    const VqModel model = load_vq_model(c.model);
    const auto corpus = caption_corpus(c, model, load_normalizer(c.model), training_clips(c));
    if (c.corpus.has_parent_path()) std::filesystem::create_directories(c.corpus.parent_path());
    save_corpus(corpus, c.corpus);
    const BigramModel bigram = train_bigram_baseline(corpus, c.smoothing);
    if (!bigram_out.empty()) bigram.save(bigram_out);
    emit(json{{"corpus", c.corpus.string()}, {"pairs", corpus.size()},
              {"vocabulary", bigram.vocabulary().words()}});
  });

  // caption
  auto* cap = app.add_subcommand("caption", "Greedy caption for a token sequence");
  std::string tokens_path;
  auto* cap_tokens = cap->add_option("--tokens", tokens_path, "Token file");
  cap->add_option("--input,-i", input, "Scene directory or HM3D file")->excludes(cap_tokens);
  cap->callback([&] {
    const PipelineConfig c = make_config(false, false);
    require(!tokens_path.empty() || !input.empty(), ErrorCode::kConfig, "caption needs --tokens or --input");
    require(!c.corpus.empty(), ErrorCode::kConfig, "paths.corpus is not set");
    const BigramModel bigram = train_bigram_baseline(load_corpus(c.corpus), c.smoothing);
    TokenSequence t;
    if (!tokens_path.empty()) {
      t = load_tokens(tokens_path);
    } else {
      const VqModel model = load_vq_model(c.model);
      t = tokenize_motion(model, load_normalizer(c.model), recover(c, input).features, c.stride);
    }
    const std::string text = caption_for(bigram, t, c.max_caption_words);
    emit(json{{"caption", text}, {"bucket", bigram.bucket_for(t)}}, text + "\n");
  });

  // detect
  auto* det = app.add_subcommand("detect", "Classify a caption as normal or abnormal");
  std::string caption;
  det->add_option("--caption", caption, "Motion caption")->required();
  det->callback([&] {
    const PipelineConfig c = make_config(false, false);
    const auto client = make_client(c);
    std::vector<Exemplar> ex;
    if (!c.exemplars.empty()) ex = load_exemplars(c.exemplars);
    const DetectionVerdict v = classify(caption, *client, ex, c.keywords);
    emit(json{{"verdict", to_string(v.label)}, {"source", v.source}, {"degraded", v.degraded},
              {"rationale", v.rationale}},
         to_string(v.label) + "\n");
  });

  // eval-pose
  auto* evp = app.add_subcommand("eval-pose", "MPJPE between joint files, mm");
  std::string pred_path, gt_path, mode = "root_aligned";
  evp->add_option("--pred", pred_path, "Predicted joints: pose output, scene or JSON array")->required();
  evp->add_option("--gt", gt_path, "Ground-truth joints, same formats")->required();
  evp->add_option("--mode", mode, "raw, root_aligned or pa")->check(CLI::IsMember({"raw", "root_aligned", "pa"}));
  evp->callback([&] {
    const double e = mpjpe(read_joints(pred_path), read_joints(gt_path), parse_mpjpe_mode(mode));
    std::ostringstream text;
    text << "MPJPE (" << mode << "): " << e << " mm\n";
    emit(json{{"mode", mode}, {"mpjpe_mm", e}}, text.str());
  });

  // eval-cls
  auto* evc = app.add_subcommand("eval-cls", "Classification report for label files");
  std::string truth_path, labels;
  evc->add_option("--truth", truth_path, "True labels, one per line or JSON array")->required();
  evc->add_option("--pred", pred_path, "Predicted labels, same format")->required();
  evc->add_option("--labels", labels, "Comma-separated class order (default: sorted labels seen)");
  evc->callback([&] {
    const auto truth = read_labels(truth_path), pred = read_labels(pred_path);
    std::vector<std::string> order;
    if (!labels.empty()) {
      std::stringstream s(labels);
      for (std::string l; std::getline(s, l, ',');)
        if (!l.empty()) order.push_back(l);
    } else {
      std::set<std::string> seen(truth.begin(), truth.end());
      seen.insert(pred.begin(), pred.end());
      order.assign(seen.begin(), seen.end());
    }
    const ClassificationReport r = classification_report(truth, pred, order);
    emit(r.to_json(), r.to_text());
  });

  // run
  auto* run = app.add_subcommand("run", "Full pipeline over the configured inputs");
  bool train_first = false;
  run->add_flag("--train", train_first, "Train the model and corpus before running");
  run->callback([&] {
    require(!g.config.empty(), ErrorCode::kConfig, "run needs --config");
    if (train_first) train_artifacts(make_config(true, false));
    const RunReport r = run_pipeline(make_config(true, true));
    emit(g.format == "text" ? run_text(r) : r.dump());
    if (r.failed > 0) exit_status = 1;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "oadctl: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "oadctl: " << e.what() << "\n";
    return 2;
  }
  return exit_status;
}
