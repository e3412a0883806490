#include "oad/pipeline/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "oad/core/error.hpp"
#include "oad/m2t/detection.hpp"

namespace oad {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  require(ec == std::errc() && ptr == end, ErrorCode::kConfig, key + ": not a number: '" + text + "'");
  return value;
}

/// "a-b" inclusive or a single value.
std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string& key, const std::string& text) {
  const auto dash = text.find('-');
  if (dash == std::string::npos) {
    const auto v = parse_number<std::uint64_t>(key, text);
    return {v, v};
  }
  const auto a = parse_number<std::uint64_t>(key, trim(text.substr(0, dash)));
  const auto b = parse_number<std::uint64_t>(key, trim(text.substr(dash + 1)));
  require(a <= b, ErrorCode::kConfig, key + ": empty range '" + text + "'");
  return {a, b};
}

}  // namespace

std::string to_string(OcclusionMode m) { return m == OcclusionMode::kZero ? "zero" : "noise"; }

OcclusionMode parse_occlusion_mode(const std::string& name) {
  if (name == "zero") return OcclusionMode::kZero;
  if (name == "noise") return OcclusionMode::kNoise;
  fail(ErrorCode::kConfig, "unknown occlusion mode '" + name + "'");
}

bool OcclusionSpec::covers(std::size_t frame, std::size_t joint) const {
  if (frame < frame_begin || frame >= frame_end) return false;
  return std::find(joints.begin(), joints.end(), joint) != joints.end();
}

SkeletonTemplate PipelineConfig::load_skeleton() const {
  return skeleton.empty() ? humanoid_template(false) : oad::load_skeleton(skeleton);
}

SynthOptions PipelineConfig::synth_options() const {
  SynthOptions o;
  o.frames = frames;
  o.fps = fps;
  o.min_frames = std::size_t(window) + 2;
  return o;
}

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos && eq > 0, ErrorCode::kConfig,
            "line " + std::to_string(number) + ": expected key=value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(bool(in), ErrorCode::kConfig, "cannot open config " + path.string());
  return parse_key_values(in);
}

std::vector<PipelineInput> parse_synthetic_inputs(const std::string& text) {
  std::vector<PipelineInput> out;
  for (const std::string& item : split(text, ',')) {
    const auto colon = item.find(':');
    require(colon != std::string::npos, ErrorCode::kConfig, "input.synthetic: expected kind:seeds, got '" + item + "'");
    SceneKind kind;
    try {
      kind = parse_scene_kind(trim(item.substr(0, colon)));
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, std::string("input.synthetic: ") + e.what());
    }
    const auto [a, b] = parse_range("input.synthetic", trim(item.substr(colon + 1)));
    for (std::uint64_t s = a; s <= b; ++s) {
      PipelineInput in;
      in.kind = kind;
      in.scene_seed = s;
      in.name = to_string(kind) + "-" + std::to_string(s);
      out.push_back(in);
    }
  }
  return out;
}

PipelineConfig config_from_values(const std::map<std::string, std::string>& values,
                                  const std::filesystem::path& base_dir, const ConfigCheck& check) {
  PipelineConfig c;
  bool seeded = false;
  std::string files;
  auto path_of = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };

  using Setter = std::function<void(const std::string& key, const std::string& v)>;
  auto integer = [](int& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_number<int>(k, v); };
  };
  auto real = [](double& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_number<double>(k, v); };
  };
  const std::map<std::string, Setter> setters{
      {"seed",
       [&](const std::string& k, const std::string& v) {
         c.seed = parse_number<std::uint64_t>(k, v);
         seeded = true;
       }},
      {"paths.skeleton", [&](const std::string&, const std::string& v) { c.skeleton = path_of(v); }},
      {"paths.model", [&](const std::string&, const std::string& v) { c.model = path_of(v); }},
      {"paths.corpus", [&](const std::string&, const std::string& v) { c.corpus = path_of(v); }},
      {"paths.exemplars", [&](const std::string&, const std::string& v) { c.exemplars = path_of(v); }},
      {"vq.window", integer(c.window)},
      {"vq.stride", integer(c.stride)},
      {"vq.codebook_size", integer(c.codebook_size)},
      {"vq.hidden", integer(c.hidden)},
      {"vq.latent_dim", integer(c.latent_dim)},
      {"vq.steps", integer(c.train_steps)},
      {"vq.batch_size", integer(c.batch_size)},
      {"vq.learning_rate", real(c.learning_rate)},
      {"train.walk", integer(c.train_walk)},
      {"train.stumble", integer(c.train_stumble)},
      {"train.stride", integer(c.train_stride)},
      {"m2t.smoothing", real(c.smoothing)},
      {"m2t.max_words", integer(c.max_caption_words)},
      {"m2t.normal_caption", [&](const std::string&, const std::string& v) { c.normal_caption = v; }},
      {"m2t.abnormal_caption", [&](const std::string&, const std::string& v) { c.abnormal_caption = v; }},
      {"scene.frames",
       [&](const std::string& k, const std::string& v) { c.frames = parse_number<std::size_t>(k, v); }},
      {"scene.fps", real(c.fps)},
      {"trajectory.step", real(c.predictor_step)},
      {"input.synthetic",
       [&](const std::string&, const std::string& v) {
         auto more = parse_synthetic_inputs(v);
         c.inputs.insert(c.inputs.end(), more.begin(), more.end());
       }},
      {"input.files", [&](const std::string&, const std::string& v) { files = v; }},
      {"occlusion.joints",
       [&](const std::string& k, const std::string& v) {
         c.occlusion.joints.clear();
         if (v == "all") {
           for (std::size_t j = 0; j < std::size_t(humanoid::kCount); ++j) c.occlusion.joints.push_back(j);
           return;
         }
         for (const auto& item : split(v, ',')) {
           const auto [a, b] = parse_range(k, item);
           for (auto j = a; j <= b; ++j) c.occlusion.joints.push_back(std::size_t(j));
         }
       }},
      {"occlusion.frames",
       [&](const std::string& k, const std::string& v) {
         const auto [a, b] = parse_range(k, v);
         c.occlusion.frame_begin = std::size_t(a);
         c.occlusion.frame_end = std::size_t(b) + 1;
       }},
      {"occlusion.mode", [&](const std::string&, const std::string& v) { c.occlusion.mode = parse_occlusion_mode(v); }},
      {"detect.classifier", [&](const std::string&, const std::string& v) { c.classifier = v; }},
      {"detect.keywords", [&](const std::string&, const std::string& v) { c.keywords = split(v, ','); }},
  };

  for (const auto& [key, value] : values) {
    const auto it = setters.find(key);
    require(it != setters.end(), ErrorCode::kConfig, "unknown config key '" + key + "'");
    it->second(key, value);
  }
  for (const std::string& f : split(files, ',')) {
    PipelineInput in;
    in.path = path_of(f);
    in.name = in.path.filename().string();
    c.inputs.push_back(in);
  }

  require(seeded, ErrorCode::kConfig, "config must set an explicit seed");
  require(c.window >= 8, ErrorCode::kConfig, "vq.window must be at least 8");
  require(c.window % 4 == 0, ErrorCode::kConfig, "vq.window must be a multiple of 4");
  require(c.stride > 0 && c.train_stride > 0, ErrorCode::kConfig, "strides must be positive");
  require(c.codebook_size >= 2, ErrorCode::kConfig, "vq.codebook_size must be at least 2");
  require(c.hidden > 0 && c.latent_dim > 0, ErrorCode::kConfig, "vq sizes must be positive");
  require(c.train_steps >= 0 && c.batch_size > 0, ErrorCode::kConfig, "vq training sizes out of range");
  require(c.learning_rate >= 0.0, ErrorCode::kConfig, "vq.learning_rate must be nonnegative");
  require(c.train_walk >= 0 && c.train_stumble >= 0, ErrorCode::kConfig, "training scene counts out of range");
  require(c.smoothing > 0.0, ErrorCode::kConfig, "m2t.smoothing must be positive");
  require(c.max_caption_words > 0, ErrorCode::kConfig, "m2t.max_words must be positive");
  require(c.fps > 0.0, ErrorCode::kConfig, "scene.fps must be positive");
  require(c.frames >= std::size_t(c.window) + 2, ErrorCode::kConfig,
          "scene.frames must be at least vq.window + 2");
  require(c.classifier == "mock" || c.classifier == "environment", ErrorCode::kConfig,
          "detect.classifier must be mock or environment");
  if (c.keywords.empty()) c.keywords = default_abnormal_keywords();

  auto must_exist = [](const std::filesystem::path& p, const std::string& what) {
    require(std::filesystem::exists(p), ErrorCode::kConfig, what + " not found: " + p.string());
  };
  if (!c.skeleton.empty()) must_exist(c.skeleton, "skeleton");
  if (!c.exemplars.empty()) must_exist(c.exemplars, "exemplars");
  if (check.artifacts) {
    require(!c.model.empty(), ErrorCode::kConfig, "paths.model is not set");
    require(!c.corpus.empty(), ErrorCode::kConfig, "paths.corpus is not set");
    must_exist(c.model / "codebook.vqcb", "codebook");
    must_exist(c.model / "encoder.tnet", "encoder");
    must_exist(c.model / "decoder.tnet", "decoder");
    must_exist(c.corpus, "corpus");
  }
  for (const PipelineInput& in : c.inputs)
    if (!in.synthetic()) must_exist(in.path, "input");
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path, const std::map<std::string, std::string>& overrides,
                           const ConfigCheck& check) {
  auto values = read_key_values(path);
  for (const auto& [k, v] : overrides) values[k] = v;
  return config_from_values(values, path.parent_path(), check);
}

}  // namespace oad
