#include "degen/config.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "degen/degen_teacher.hpp"
#include "degen/errors.hpp"

namespace degen {

using nlohmann::json;

Method method_from_string(std::string_view name) {
  if (name == "DR") return Method::DR;
  if (name == "PLR") return Method::PLR;
  if (name == "ACCEL") return Method::ACCEL;
  if (name == "InitialGen") return Method::InitialGen;
  if (name == "DEGen") return Method::DEGen;
  if (name == "SFL") return Method::SFL;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::DR: return "DR";
    case Method::PLR: return "PLR";
    case Method::ACCEL: return "ACCEL";
    case Method::InitialGen: return "InitialGen";
    case Method::DEGen: return "DEGen";
    case Method::SFL: return "SFL";
  }
  return "?";
}

TeacherConfig::TeacherConfig() {
  gamma = 0.998;
  clip_range = 0.2;
  learning_rate = 1e-3;
  entropy_coef = 5e-2;
}

namespace {

// Reads keys from one JSON object and rejects any it did not consume.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }
  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError("unknown config key '" + prefix() + key + "'");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + prefix() + key + "' has the wrong type");
    }
  }

  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    return std::optional<Section>(std::in_place, *it, prefix() + key);
  }

 private:
  std::string prefix() const { return path_.empty() ? "" : path_ + "."; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_agent(Section& s, AgentConfig& a) {
  s.get("gamma", a.gamma);
  s.get("gae_lambda", a.gae_lambda);
  s.get("epochs", a.epochs);
  s.get("minibatches", a.minibatches);
  s.get("clip_range", a.clip_range);
  s.get("learning_rate", a.learning_rate);
  s.get("anneal_lr", a.anneal_lr);
  s.get("adam_eps", a.adam_eps);
  s.get("max_grad_norm", a.max_grad_norm);
  s.get("value_clipping", a.value_clipping);
  s.get("value_coef", a.value_coef);
  s.get("entropy_coef", a.entropy_coef);
  s.get("embed_dim", a.embed_dim);
  s.get("hidden_dim", a.hidden_dim);
}

json agent_json(const AgentConfig& a) {
  return json{{"gamma", a.gamma},           {"gae_lambda", a.gae_lambda},
              {"epochs", a.epochs},         {"minibatches", a.minibatches},
              {"clip_range", a.clip_range}, {"learning_rate", a.learning_rate},
              {"anneal_lr", a.anneal_lr},   {"adam_eps", a.adam_eps},
              {"max_grad_norm", a.max_grad_norm}, {"value_clipping", a.value_clipping},
              {"value_coef", a.value_coef}, {"entropy_coef", a.entropy_coef},
              {"embed_dim", a.embed_dim},   {"hidden_dim", a.hidden_dim}};
}

void validate_agent(const AgentConfig& a, const std::string& name) {
  auto bad = [&](const std::string& what) { throw ConfigError(name + "." + what); };
  if (!(a.gamma > 0.0 && a.gamma <= 1.0)) bad("gamma must be in (0, 1]");
  if (!(a.gae_lambda >= 0.0 && a.gae_lambda <= 1.0)) bad("gae_lambda must be in [0, 1]");
  if (a.epochs < 1 || a.minibatches < 1) bad("epochs and minibatches must be >= 1");
  if (!(a.clip_range > 0.0 && a.clip_range < 1.0)) bad("clip_range must be in (0, 1)");
  if (!(a.learning_rate > 0.0) || !(a.adam_eps > 0.0)) bad("learning_rate and adam_eps must be > 0");
  if (!(a.max_grad_norm > 0.0)) bad("max_grad_norm must be > 0");
  if (a.value_coef < 0.0 || a.entropy_coef < 0.0) bad("coefficients must be >= 0");
  if (a.embed_dim < 1 || a.hidden_dim < 1) bad("embed_dim and hidden_dim must be >= 1");
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  {
    Section root(doc, "");
    std::string method = std::string(to_string(cfg.method));
    std::string metric = std::string(to_string(cfg.metric));
    root.get("method", method);
    root.get("metric", metric);
    cfg.method = method_from_string(method);
    try {
      cfg.metric = metric_from_string(metric);
    } catch (const Error&) {
      throw ConfigError("unknown metric '" + metric + "'");
    }
    root.get("seed", cfg.seed);
    root.get("num_updates", cfg.num_updates);
    root.get("num_envs", cfg.num_envs);
    root.get("num_steps", cfg.num_steps);
    root.get("threads", cfg.threads);
    root.get("train_on_new_levels", cfg.train_on_new_levels);

    if (auto env = root.child("env")) {
      std::string family = std::string(to_string(cfg.levelgen.family));
      env->get("family", family);
      cfg.levelgen.family = family_from_string(family);
      env->get("size", cfg.levelgen.size);
      env->get("t_max", cfg.levelgen.t_max);
      env->finish();
    }
    if (auto g = root.child("levelgen")) {
      g->get("min_walls", cfg.levelgen.min_walls);
      g->get("max_walls", cfg.levelgen.max_walls);
      g->get("include_key_door", cfg.levelgen.include_key_door);
      g->get("sokoban_walls", cfg.levelgen.sokoban_walls);
      g->get("min_boxes", cfg.levelgen.min_boxes);
      g->get("max_boxes", cfg.levelgen.max_boxes);
      g->finish();
    }
    if (auto s = root.child("student")) {
      read_agent(*s, cfg.student);
      s->finish();
    }
    if (auto t = root.child("teacher")) {
      read_agent(*t, cfg.teacher);
      t->get("kl_coef", cfg.teacher.kl_coef);
      t->get("p_g", cfg.teacher.p_g);
      t->get("initial_gen_steps", cfg.teacher.initial_gen_steps);
      t->finish();
    }
    if (auto p = root.child("plr")) {
      p->get("replay_rate", cfg.plr.replay_rate);
      p->get("capacity", cfg.plr.capacity);
      p->get("temperature", cfg.plr.temperature);
      p->get("staleness_coef", cfg.plr.staleness_coef);
      p->finish();
    }
    if (auto a = root.child("accel")) {
      a->get("num_edits", cfg.accel_edits);
      a->finish();
    }
    if (auto s = root.child("sfl")) {
      s->get("batch_size", cfg.sfl.batch_size);
      s->get("rollout_length", cfg.sfl.rollout_length);
      s->get("update_period", cfg.sfl.update_period);
      s->get("buffer_size", cfg.sfl.buffer_size);
      s->get("sample_ratio", cfg.sfl.sample_ratio);
      s->get("episodes_per_level", cfg.sfl.episodes_per_level);
      s->finish();
    }
    if (auto s = root.child("scoring")) {
      s->get("rollouts", cfg.score_rollouts);
      s->finish();
    }
    if (auto e = root.child("eval")) {
      e->get("manifest", cfg.eval.manifest);
      e->get("interval", cfg.eval.interval);
      e->get("episodes", cfg.eval.episodes);
      e->get("greedy", cfg.eval.greedy);
      e->finish();
    }
    if (auto l = root.child("logging")) {
      l->get("wall_clock", cfg.logging.wall_clock);
      l->get("episode_log", cfg.logging.episode_log);
      l->get("checkpoint_interval", cfg.logging.checkpoint_interval);
      l->finish();
    }
    root.finish();
  }
  if (!cfg.eval.manifest.empty()) {
    std::filesystem::path p(cfg.eval.manifest);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    cfg.eval.manifest = std::filesystem::absolute(p).lexically_normal().string();
  }
  validate_run_config(cfg);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_run_config(ss.str(), dir.empty() ? "." : dir.string());
}

void validate_run_config(const RunConfig& cfg) {
  if (cfg.num_updates < 1 || cfg.num_envs < 1 || cfg.num_steps < 1) {
    throw ConfigError("num_updates, num_envs and num_steps must be >= 1");
  }
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  if (cfg.metric == Metric::Learnability) {
    throw ConfigError("metric must be one of PVL, MaxMC, MNA");
  }
  validate_gen_config(cfg.levelgen);
  validate_agent(cfg.student, "student");
  validate_agent(cfg.teacher, "teacher");
  if (cfg.teacher.kl_coef < 0.0) throw ConfigError("teacher.kl_coef must be >= 0");
  if (!(cfg.teacher.p_g > 0.0 && cfg.teacher.p_g < 1.0 / 3.0)) {
    throw ConfigError("teacher.p_g must be in (0, 1/3)");
  }
  if (cfg.teacher.initial_gen_steps < 1) throw ConfigError("teacher.initial_gen_steps must be >= 1");
  validate_plr_config(cfg.plr);
  validate_sfl_config(cfg.sfl);
  if (cfg.accel_edits < 0) throw ConfigError("accel.num_edits must be >= 0");
  if (cfg.score_rollouts < 0) throw ConfigError("scoring.rollouts must be >= 0");
  if ((cfg.method == Method::PLR || cfg.method == Method::ACCEL) && cfg.plr.replay_rate == 0.0 &&
      !cfg.train_on_new_levels) {
    throw ConfigError("replay_rate 0 without train_on_new_levels never updates the student");
  }
  if (cfg.eval.interval < 1 || cfg.eval.episodes < 1) {
    throw ConfigError("eval.interval and eval.episodes must be >= 1");
  }
  if (cfg.logging.checkpoint_interval < 0) throw ConfigError("logging.checkpoint_interval must be >= 0");
  if (cfg.method == Method::DEGen && cfg.levelgen.family == Family::KeyMinigrid &&
      !cfg.levelgen.include_key_door) {
    throw ConfigError("DEGen on key_minigrid always offers key and door objects");
  }
}

std::string run_config_json(const RunConfig& cfg) {
  json j;
  j["method"] = std::string(to_string(cfg.method));
  j["metric"] = std::string(to_string(cfg.metric));
  j["seed"] = cfg.seed;
  j["num_updates"] = cfg.num_updates;
  j["num_envs"] = cfg.num_envs;
  j["num_steps"] = cfg.num_steps;
  j["threads"] = cfg.threads;
  j["train_on_new_levels"] = cfg.train_on_new_levels;
  j["env"] = {{"family", std::string(to_string(cfg.levelgen.family))},
              {"size", cfg.levelgen.size},
              {"t_max", cfg.levelgen.t_max}};
  j["levelgen"] = {{"min_walls", cfg.levelgen.min_walls},
                   {"max_walls", cfg.levelgen.max_walls},
                   {"include_key_door", cfg.levelgen.include_key_door},
                   {"sokoban_walls", cfg.levelgen.sokoban_walls},
                   {"min_boxes", cfg.levelgen.min_boxes},
                   {"max_boxes", cfg.levelgen.max_boxes}};
  j["student"] = agent_json(cfg.student);
  j["teacher"] = agent_json(cfg.teacher);
  j["teacher"]["kl_coef"] = cfg.teacher.kl_coef;
  j["teacher"]["p_g"] = cfg.teacher.p_g;
  j["teacher"]["initial_gen_steps"] = cfg.teacher.initial_gen_steps;
  j["plr"] = {{"replay_rate", cfg.plr.replay_rate},
              {"capacity", cfg.plr.capacity},
              {"temperature", cfg.plr.temperature},
              {"staleness_coef", cfg.plr.staleness_coef}};
  j["accel"] = {{"num_edits", cfg.accel_edits}};
  j["sfl"] = {{"batch_size", cfg.sfl.batch_size},
              {"rollout_length", cfg.sfl.rollout_length},
              {"update_period", cfg.sfl.update_period},
              {"buffer_size", cfg.sfl.buffer_size},
              {"sample_ratio", cfg.sfl.sample_ratio},
              {"episodes_per_level", cfg.sfl.episodes_per_level}};
  j["scoring"] = {{"rollouts", cfg.score_rollouts}};
  j["eval"] = {{"manifest", cfg.eval.manifest},
               {"interval", cfg.eval.interval},
               {"episodes", cfg.eval.episodes},
               {"greedy", cfg.eval.greedy}};
  j["logging"] = {{"wall_clock", cfg.logging.wall_clock},
                  {"episode_log", cfg.logging.episode_log},
                  {"checkpoint_interval", cfg.logging.checkpoint_interval}};
  return j.dump(2);
}

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : run_config_json(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

PPOConfig base_ppo(const AgentConfig& a) {
  PPOConfig p;
  p.gamma = a.gamma;
  p.gae_lambda = a.gae_lambda;
  p.epochs = a.epochs;
  p.minibatches = a.minibatches;
  p.learning_rate = a.learning_rate;
  p.anneal_lr = a.anneal_lr;
  p.adam_eps = a.adam_eps;
  p.max_grad_norm = a.max_grad_norm;
  p.loss.clip_range = a.clip_range;
  p.loss.value_clip_range = a.clip_range;
  p.loss.clip_value = a.value_clipping;
  p.loss.value_coef = a.value_coef;
  return p;
}

}  // namespace

PPOConfig student_ppo(const AgentConfig& a) {
  PPOConfig p = base_ppo(a);
  p.loss.entropy_coef = {a.entropy_coef};
  return p;
}

PPOConfig teacher_ppo(const TeacherConfig& t) {
  PPOConfig p = base_ppo(t);
  const auto prior = kl_prior(t.p_g);
  p.loss.entropy_coef = {t.entropy_coef, 0.0};
  p.loss.kl_coef = {0.0, t.kl_coef};
  p.loss.kl_prior = {{}, std::vector<double>(prior.begin(), prior.end())};
  return p;
}

}  // namespace degen
