#include "degen/orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <numeric>

#include "degen/checkpoint.hpp"
#include "degen/degen_teacher.hpp"
#include "degen/errors.hpp"
#include "degen/features.hpp"
#include "degen/gridworld.hpp"
#include "degen/ppo.hpp"
#include "degen/replay.hpp"

namespace degen {

namespace {

// RNG stream labels.
enum : std::uint64_t {
  kStreamInit = 1,
  kStreamMain,
  kStreamRollout,
  kStreamShuffle,
  kStreamEval,
  kStreamLevel,
  kStreamSfl,
  kStreamTeacherShuffle,
};

std::string hex_hash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

/// Student policy stepping one environment; shared by training and evaluation.
struct StudentStepper {
  const PolicyParams& params;
  std::vector<std::uint8_t> mask;
  std::vector<double> features;
  std::span<const StudentAction> actions;

  StudentStepper(const PolicyParams& p, Family family)
      : params(p), mask(student_mask(family)), actions(student_actions(family)) {
    if (static_cast<int>(actions.size()) != p.shape.heads.at(0)) {
      throw ShapeError("student network action count does not match the level family");
    }
  }

  ActResult act_on(const EnvState& env, Memory& mem, Rng& rng, bool greedy) {
    encode_student(observe(env), features);
    return act(params, features, mem, mask, rng, greedy);
  }

  double bootstrap(const EnvState& env, const Memory& mem) {
    Memory copy = mem;
    encode_student(observe(env), features);
    return forward_step(params, features, copy).value;
  }
};

Trajectory run_episode(StudentStepper& stepper, const Level& level, Rng& rng, bool greedy) {
  EnvState env = reset(level, std::nullopt, rng.next());
  Memory mem = Memory::zeros(stepper.params.shape.hidden_dim);
  Trajectory traj;
  while (!env.done) {
    const ActResult a = stepper.act_on(env, mem, rng, greedy);
    const StepResult r = step(env, stepper.actions[static_cast<std::size_t>(a.actions[0])]);
    traj.rewards.push_back(r.reward);
    traj.values.push_back(a.value);
  }
  traj.values.push_back(0.0);
  traj.solved = env.solved;
  return traj;
}

struct StudentRollout {
  Sequence seq;
  std::vector<Trajectory> episodes;  // completed episodes, then the cut-off one if any
  int completed = 0;
  int successes = 0;
  double completed_return = 0.0;
};

/// `steps` student steps on one level with automatic resets to the same start.
StudentRollout rollout_fixed(const PolicyParams& student, const Level& level, int steps, Rng& rng) {
  StudentStepper stepper(student, level.family);
  StudentRollout out;
  EnvState env = reset(level, std::nullopt, rng.next());
  const AgentState start = env.agent;
  Memory mem = Memory::zeros(student.shape.hidden_dim);
  bool fresh = true;
  Trajectory cur;
  for (int s = 0; s < steps; ++s) {
    const ActResult a = stepper.act_on(env, mem, rng, false);
    out.seq.push(stepper.features, a.actions, stepper.mask, fresh, a.log_prob, a.value);
    fresh = false;
    const StepResult r = step(env, stepper.actions[static_cast<std::size_t>(a.actions[0])]);
    out.seq.rewards.back() = r.reward;
    cur.rewards.push_back(r.reward);
    cur.values.push_back(a.value);
    if (r.done) {
      out.seq.dones.back() = 1;
      cur.values.push_back(0.0);
      cur.solved = env.solved;
      ++out.completed;
      out.successes += env.solved ? 1 : 0;
      out.completed_return += cur.episode_return();
      out.episodes.push_back(std::move(cur));
      cur = Trajectory{};
      env = reset(level, start);
      mem = Memory::zeros(student.shape.hidden_dim);
      fresh = true;
    }
  }
  if (!cur.rewards.empty()) {
    const double v = stepper.bootstrap(env, mem);
    out.seq.bootstrap_value = v;
    cur.values.push_back(v);
    out.episodes.push_back(std::move(cur));
  }
  return out;
}

struct DegenLog {
  std::uint64_t level_hash = 0;
  int student_steps = 0;
  int teacher_steps = 0;
  bool solved = false;
  bool finished = false;
  double score = 0.0;
  double reward_sum = 0.0;
};

struct DegenRollout {
  Sequence student;
  Sequence teacher;
  std::vector<DegenLog> logs;
  int completed = 0;
  int successes = 0;
  double completed_return = 0.0;
};

DegenRollout rollout_degen(const PolicyParams& student, const PolicyParams& teacher,
                           const RunConfig& cfg, Rng& rng) {
  const Family family = cfg.levelgen.family;
  const int size = cfg.levelgen.size;
  const int t_max = cfg.levelgen.t_max;
  const ScoreParams sp{cfg.student.gamma, cfg.student.gae_lambda};
  StudentStepper stepper(student, family);
  std::vector<double> tfeat;
  DegenRollout out;

  GenerationState gs = GenerationState::fresh(family, size, t_max, rng);
  Memory smem = Memory::zeros(student.shape.hidden_dim);
  Memory tmem = Memory::zeros(teacher.shape.hidden_dim);
  bool s_fresh = true, t_fresh = true;
  int t_begin = 0;  // first teacher step of the current episode
  Trajectory cur;

  auto finish = [&](bool terminal) {
    if (terminal) {
      cur.values.push_back(0.0);
    } else {
      const double v = stepper.bootstrap(gs.env(), smem);
      out.student.bootstrap_value = v;
      cur.values.push_back(v);
    }
    cur.solved = gs.env().solved;
    const auto g = per_step_scores(cur, cfg.metric, sp, cur.solved, cur.episode_return());
    const auto r = assign_dense_rewards(g, gs.burst_log());
    DegenLog log;
    log.level_hash = level_hash(gs.finalize());
    log.student_steps = cur.length();
    log.teacher_steps = gs.teacher_steps();
    log.solved = cur.solved;
    log.finished = terminal;
    log.score = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      out.teacher.rewards[static_cast<std::size_t>(t_begin) + i] = r[i];
      log.reward_sum += r[i];
    }
    out.teacher.dones[static_cast<std::size_t>(t_begin) + r.size() - 1] = 1;
    out.logs.push_back(log);
    if (terminal) {
      ++out.completed;
      out.successes += cur.solved ? 1 : 0;
      out.completed_return += cur.episode_return();
    }
  };

  for (int s = 0; s < cfg.num_steps; ++s) {
    while (gs.needs_generation()) {
      const auto mask = teacher_mask_bytes(gs.legal_mask());
      encode_teacher(gs.teacher_observation(), tfeat);
      const ActResult a = act(teacher, tfeat, tmem, mask, rng);
      out.teacher.push(tfeat, a.actions, mask, t_fresh, a.log_prob, a.value);
      t_fresh = false;
      gs.apply_teacher({a.actions[0], a.actions[1]});
    }
    const ActResult a = stepper.act_on(gs.env(), smem, rng, false);
    out.student.push(stepper.features, a.actions, stepper.mask, s_fresh, a.log_prob, a.value);
    s_fresh = false;
    const StepResult r = gs.apply_student(stepper.actions[static_cast<std::size_t>(a.actions[0])]);
    out.student.rewards.back() = r.reward;
    cur.rewards.push_back(r.reward);
    cur.values.push_back(a.value);
    if (r.done) {
      out.student.dones.back() = 1;
      finish(true);
      gs = GenerationState::fresh(family, size, t_max, rng);
      smem = Memory::zeros(student.shape.hidden_dim);
      tmem = Memory::zeros(teacher.shape.hidden_dim);
      s_fresh = t_fresh = true;
      t_begin = out.teacher.length;
      cur = Trajectory{};
    }
  }
  if (!cur.rewards.empty()) finish(false);
  return out;
}

struct InitialGenRollout {
  Sequence teacher;
  Level level;
  StudentRollout student;
  double score = 0.0;
};

InitialGenRollout rollout_initial_gen(const PolicyParams& student, const PolicyParams& teacher,
                                      const RunConfig& cfg, Rng& rng) {
  InitialGenRollout out;
  InitialGenState ig(cfg.levelgen.family, cfg.levelgen.size, cfg.levelgen.t_max,
                     cfg.teacher.initial_gen_steps);
  Memory mem = Memory::zeros(teacher.shape.hidden_dim);
  std::vector<double> feat;
  bool fresh = true;
  while (!ig.done()) {
    const auto mask = initial_gen_mask_bytes(ig.legal_mask());
    encode_initial_gen(ig.observation(), feat);
    const ActResult a = act(teacher, feat, mem, mask, rng);
    out.teacher.push(feat, a.actions, mask, fresh, a.log_prob, a.value);
    fresh = false;
    ig.apply({a.actions[0], a.actions[1]});
  }
  out.level = ig.finalize(rng);
  out.student = rollout_fixed(student, out.level, cfg.num_steps, rng);
  return out;
}

LevelScoreContext context_for(const std::vector<Trajectory>& episodes, int cap, bool history) {
  std::vector<Trajectory> use = episodes;
  if (cap > 0 && static_cast<int>(use.size()) > cap) use.resize(static_cast<std::size_t>(cap));
  return LevelScoreContext::from_rollouts(std::move(use), history);
}

class Trainer {
 public:
  Trainer(const RunConfig& cfg, std::string out_dir,
          const std::function<void(const TrainProgress&)>& progress)
      : cfg_(cfg),
        out_dir_(std::move(out_dir)),
        progress_(progress),
        score_params_{cfg.student.gamma, cfg.student.gae_lambda},
        student_ppo_(student_ppo(cfg.student)),
        teacher_ppo_(teacher_ppo(cfg.teacher)),
        main_rng_(derive_seed(cfg.seed, kStreamMain)),
        started_(std::chrono::steady_clock::now()) {
    validate_run_config(cfg_);
    const Family family = cfg_.levelgen.family;
    student_ = PolicyParams::init(
        student_shape(family, cfg_.student.embed_dim, cfg_.student.hidden_dim),
        derive_seed(cfg_.seed, kStreamInit, 0));
    student_opt_ = Adam(student_.values.size());
    if (cfg_.method == Method::DEGen || cfg_.method == Method::InitialGen) {
      const NetworkShape shape =
          cfg_.method == Method::DEGen
              ? teacher_shape(cfg_.teacher.embed_dim, cfg_.teacher.hidden_dim)
              : initial_gen_shape(cfg_.levelgen.size, cfg_.teacher.embed_dim,
                                  cfg_.teacher.hidden_dim);
      teacher_ = PolicyParams::init(shape, derive_seed(cfg_.seed, kStreamInit, 1));
      teacher_opt_ = Adam(teacher_->values.size());
    }
    if (cfg_.method == Method::PLR || cfg_.method == Method::ACCEL) plr_.emplace(cfg_.plr);
    if (cfg_.method == Method::SFL) sfl_.emplace(cfg_.sfl);

    if (!cfg_.eval.manifest.empty()) {
      eval_levels_ = load_eval_manifest(cfg_.eval.manifest);
      for (const auto& e : eval_levels_) {
        if (e.level.family != family) {
          throw ConfigError("eval level '" + e.name + "' is " +
                            std::string(to_string(e.level.family)) + ", training family is " +
                            std::string(to_string(family)));
        }
      }
    }

    std::filesystem::create_directories(out_dir_);
    metrics_.open(path("metrics.csv"), std::ios::trunc);
    stats_.open(path("train_stats.csv"), std::ios::trunc);
    if (!metrics_ || !stats_) throw IoError("cannot write into '" + out_dir_ + "'");
    metrics_ << kMetricsHeader << '\n';
    stats_ << "update,episodes,mean_return,solve_rate,policy_loss,value_loss,entropy,approx_kl,"
              "clip_fraction,grad_norm,teacher_policy_loss,teacher_value_loss,teacher_entropy,"
              "teacher_kl,mean_teacher_reward\n";
    if (cfg_.logging.episode_log) {
      episodes_.open(path("episodes.jsonl"), std::ios::trunc);
      if (!episodes_) throw IoError("cannot write into '" + out_dir_ + "'");
    }
    write_manifest(false);
  }

  TrainResult run() {
    maybe_eval(true);
    while (updates_ < cfg_.num_updates) {
      switch (cfg_.method) {
        case Method::DR: iterate_dr(); break;
        case Method::PLR:
        case Method::ACCEL: iterate_replay(); break;
        case Method::SFL: iterate_sfl(); break;
        case Method::DEGen: iterate_degen(); break;
        case Method::InitialGen: iterate_initial_gen(); break;
      }
      ++iterations_;
    }
    if (plr_) write_text(path("buffer.jsonl"), plr_->snapshot_jsonl(updates_));
    save(path("checkpoint.bin"));
    write_manifest(true);
    return {student_, teacher_, updates_, iterations_};
  }

 private:
  std::string path(const std::string& name) const {
    return (std::filesystem::path(out_dir_) / name).string();
  }

  static void write_text(const std::string& p, const std::string& text) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + p + "'");
    out << text;
  }

  void write_manifest(bool complete) {
    nlohmann::json j;
    j["config"] = nlohmann::json::parse(run_config_json(cfg_));
    j["config_hash"] = hex_hash(config_hash(cfg_));
    j["method"] = std::string(to_string(cfg_.method));
    j["metric"] = std::string(to_string(cfg_.metric));
    j["seed"] = cfg_.seed;
    j["student_params"] = student_.values.size();
    if (teacher_) j["teacher_params"] = teacher_->values.size();
    j["complete"] = complete;
    j["updates"] = updates_;
    j["iterations"] = iterations_;
    j["files"] = {{"metrics", "metrics.csv"},
                  {"train_stats", "train_stats.csv"},
                  {"checkpoint", "checkpoint.bin"}};
    if (cfg_.logging.episode_log) j["files"]["episodes"] = "episodes.jsonl";
    if (plr_) j["files"]["buffer"] = "buffer.jsonl";
    write_text(path("manifest.json"), j.dump(2) + "\n");
  }

  void save(const std::string& p) const {
    Checkpoint ck;
    ck.config_hash = config_hash(cfg_);
    ck.update = updates_;
    ck.config_json = run_config_json(cfg_);
    ck.networks.emplace_back("student", student_);
    if (teacher_) ck.networks.emplace_back("teacher", *teacher_);
    save_checkpoint(p, ck);
  }

  Rng env_rng(int env) const {
    return Rng(derive_seed(cfg_.seed, kStreamRollout, static_cast<std::uint64_t>(iterations_),
                           static_cast<std::uint64_t>(env)));
  }

  Level fresh_level(int env) const {
    GenConfig g = cfg_.levelgen;
    return random_level(g, derive_seed(cfg_.seed, kStreamLevel,
                                       static_cast<std::uint64_t>(iterations_),
                                       static_cast<std::uint64_t>(env)));
  }

  std::vector<StudentRollout> rollout_levels(const std::vector<Level>& levels, int steps) {
    std::vector<StudentRollout> out(levels.size());
    parallel_for(static_cast<int>(levels.size()), cfg_.threads, [&](int e) {
      Rng rng = env_rng(e);
      out[static_cast<std::size_t>(e)] =
          rollout_fixed(student_, levels[static_cast<std::size_t>(e)], steps, rng);
    });
    return out;
  }

  struct Stats {
    int episodes = 0;
    int successes = 0;
    double returns = 0.0;
    UpdateReport student;
    std::optional<UpdateReport> teacher;
    double teacher_reward = 0.0;
  };

  void train_student(std::vector<Sequence>& seqs, Stats& st) {
    for (auto& s : seqs) compute_gae(s, cfg_.student.gamma, cfg_.student.gae_lambda);
    const double lr = learning_rate_at(student_ppo_, updates_, cfg_.num_updates);
    try {
      st.student = ppo_update(student_, student_opt_, seqs, student_ppo_, lr,
                              derive_seed(cfg_.seed, kStreamShuffle,
                                          static_cast<std::uint64_t>(updates_)),
                              cfg_.threads);
    } catch (const NonFiniteLoss&) {
      metrics_ << updates_ << ",0," << to_string(cfg_.method) << ',' << to_string(cfg_.metric)
               << ',' << cfg_.seed << ",__nonfinite__,nan,nan\n";
      metrics_.flush();
      throw;
    }
  }

  void train_teacher(std::vector<Sequence>& seqs, Stats& st) {
    double reward = 0.0;
    int n = 0;
    for (auto& s : seqs) {
      compute_gae(s, cfg_.teacher.gamma, cfg_.teacher.gae_lambda);
      for (double r : s.rewards) reward += r;
      n += s.length;
    }
    st.teacher_reward = n > 0 ? reward / n : 0.0;
    const double lr = learning_rate_at(teacher_ppo_, updates_, cfg_.num_updates);
    st.teacher = ppo_update(*teacher_, teacher_opt_, seqs, teacher_ppo_, lr,
                            derive_seed(cfg_.seed, kStreamTeacherShuffle,
                                        static_cast<std::uint64_t>(updates_)),
                            cfg_.threads);
  }

  // Called once per student update, after the parameters changed.
  void finish_update(const Stats& st) {
    ++updates_;
    const double mean_ret = st.episodes > 0 ? st.returns / st.episodes : 0.0;
    const double solve = st.episodes > 0 ? static_cast<double>(st.successes) / st.episodes : 0.0;
    const auto& l = st.student.loss;
    stats_ << updates_ << ',' << st.episodes << ',' << fmt(mean_ret) << ',' << fmt(solve) << ','
           << fmt(l.policy) << ',' << fmt(l.value) << ',' << fmt(l.entropy) << ','
           << fmt(l.approx_kl) << ',' << fmt(l.clip_fraction) << ',' << fmt(st.student.grad_norm);
    if (st.teacher) {
      const auto& t = st.teacher->loss;
      stats_ << ',' << fmt(t.policy) << ',' << fmt(t.value) << ',' << fmt(t.entropy) << ','
             << fmt(t.kl) << ',' << fmt(st.teacher_reward);
    } else {
      stats_ << ",,,,,";
    }
    stats_ << '\n';
    TrainProgress p;
    p.update = updates_;
    p.mean_train_return = mean_ret;
    p.train_solve_rate = solve;
    p.eval = maybe_eval(false);
    if (cfg_.logging.checkpoint_interval > 0 && updates_ % cfg_.logging.checkpoint_interval == 0 &&
        updates_ < cfg_.num_updates) {
      save(path("checkpoint_" + std::to_string(updates_) + ".bin"));
    }
    if (progress_) progress_(p);
  }

  std::optional<EvalResult> maybe_eval(bool initial) {
    if (eval_levels_.empty()) return std::nullopt;
    if (!initial && updates_ % cfg_.eval.interval != 0 && updates_ != cfg_.num_updates) {
      return std::nullopt;
    }
    EvalResult r = evaluate(student_, eval_levels_, cfg_.eval.episodes, cfg_.eval.greedy,
                            derive_seed(cfg_.seed, kStreamEval,
                                        static_cast<std::uint64_t>(updates_)),
                            cfg_.threads);
    double wall = 0.0;
    if (cfg_.logging.wall_clock) {
      wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    }
    auto row = [&](const std::string& name, double solve, double ret) {
      metrics_ << updates_ << ',' << (cfg_.logging.wall_clock ? fmt(wall) : std::string("0"))
               << ',' << to_string(cfg_.method) << ',' << to_string(cfg_.metric) << ','
               << cfg_.seed << ',' << name << ',' << fmt(solve) << ',' << fmt(ret) << '\n';
    };
    for (const auto& l : r.levels) row(l.name, l.solve_rate, l.mean_return);
    row("__mean__", r.mean_solve_rate, r.mean_return);
    metrics_.flush();
    return r;
  }

  void log_rollout(int env, const char* source, const Level& level, const StudentRollout& r,
                   bool trained, std::optional<double> score = std::nullopt,
                   std::uint64_t parent = 0) {
    if (!episodes_.is_open()) return;
    nlohmann::json j{{"iteration", iterations_}, {"update", updates_},
                     {"env", env},               {"source", source},
                     {"level", hex_hash(level_hash(level))},
                     {"episodes", r.completed},  {"successes", r.successes},
                     {"trained", trained}};
    if (score) j["score"] = *score;
    if (parent != 0) j["parent"] = hex_hash(parent);
    episodes_ << j.dump() << '\n';
  }

  static void tally(const StudentRollout& r, Stats& st) {
    st.episodes += r.completed;
    st.successes += r.successes;
    st.returns += r.completed_return;
  }

  void iterate_dr() {
    std::vector<Level> levels;
    for (int e = 0; e < cfg_.num_envs; ++e) levels.push_back(fresh_level(e));
    auto rollouts = rollout_levels(levels, cfg_.num_steps);
    Stats st;
    std::vector<Sequence> seqs;
    for (std::size_t e = 0; e < rollouts.size(); ++e) {
      tally(rollouts[e], st);
      log_rollout(static_cast<int>(e), "random", levels[e], rollouts[e], true);
      seqs.push_back(std::move(rollouts[e].seq));
    }
    train_student(seqs, st);
    finish_update(st);
  }

  // Scores every distinct level of a rollout batch and writes it to the buffer.
  std::vector<double> score_into_buffer(const std::vector<Level>& levels,
                                        const std::vector<StudentRollout>& rollouts) {
    std::map<std::uint64_t, std::vector<std::size_t>> groups;
    std::vector<std::uint64_t> order;
    for (std::size_t e = 0; e < levels.size(); ++e) {
      const auto h = level_hash(levels[e]);
      if (!groups.contains(h)) order.push_back(h);
      groups[h].push_back(e);
    }
    std::vector<double> scores(levels.size(), 0.0);
    for (const auto h : order) {
      const auto& members = groups[h];
      std::vector<Trajectory> eps;
      bool solved = false;
      for (const auto e : members) {
        for (const auto& t : rollouts[e].episodes) eps.push_back(t);
        solved = solved || rollouts[e].successes > 0;
      }
      const BufferEntry* prior = plr_->find(h);
      const bool history = prior != nullptr && prior->ever_solved;
      const double s =
          score_level(context_for(eps, cfg_.score_rollouts, history), cfg_.metric, score_params_);
      plr_->insert_or_update(levels[members.front()], s, updates_, solved);
      for (const auto e : members) scores[e] = s;
    }
    return scores;
  }

  void iterate_replay() {
    const bool accel = cfg_.method == Method::ACCEL;
    std::vector<Level> levels;
    std::vector<std::uint64_t> parents;
    const char* source = "random";
    bool train = false;
    if (accel && mutate_next_) {
      mutate_next_ = false;
      source = "mutation";
      for (int e = 0; e < cfg_.num_envs; ++e) {
        auto prop = plr_->accel_propose(main_rng_, updates_, cfg_.accel_edits);
        levels.push_back(std::move(prop.level));
        parents.push_back(prop.parent_hash);
      }
      train = cfg_.train_on_new_levels;
    } else if (plr_->decide_replay(main_rng_) == ReplayDecision::Replay) {
      source = "replay";
      for (int e = 0; e < cfg_.num_envs; ++e) {
        levels.push_back(plr_->entries()[plr_->sample_index(main_rng_, updates_)].level);
      }
      train = true;
      mutate_next_ = accel;
    } else {
      for (int e = 0; e < cfg_.num_envs; ++e) levels.push_back(fresh_level(e));
      train = cfg_.train_on_new_levels;
    }

    auto rollouts = rollout_levels(levels, cfg_.num_steps);
    const auto scores = score_into_buffer(levels, rollouts);
    for (std::size_t e = 0; e < levels.size(); ++e) {
      log_rollout(static_cast<int>(e), source, levels[e], rollouts[e], train, scores[e],
                  parents.empty() ? 0 : parents[e]);
    }
    if (!train) return;
    Stats st;
    std::vector<Sequence> seqs;
    for (auto& r : rollouts) {
      tally(r, st);
      seqs.push_back(std::move(r.seq));
    }
    train_student(seqs, st);
    finish_update(st);
  }

  void refresh_sfl() {
    const int n = cfg_.sfl.batch_size;
    std::vector<SFLCandidate> cands(static_cast<std::size_t>(n));
    parallel_for(n, cfg_.threads, [&](int i) {
      const auto iu = static_cast<std::uint64_t>(i);
      const Level level = random_level(
          cfg_.levelgen, derive_seed(cfg_.seed, kStreamSfl, static_cast<std::uint64_t>(updates_), iu));
      Rng rng(derive_seed(cfg_.seed, kStreamSfl, static_cast<std::uint64_t>(updates_), iu + (1ULL << 40)));
      StudentStepper stepper(student_, level.family);
      int episodes = 0, solved = 0, budget = cfg_.sfl.rollout_length;
      while (episodes < cfg_.sfl.episodes_per_level && budget > 0) {
        const Trajectory t = run_episode(stepper, level, rng, false);
        budget -= t.length();
        ++episodes;
        solved += t.solved ? 1 : 0;
      }
      cands[static_cast<std::size_t>(i)] = {level, static_cast<double>(solved) / episodes};
    });
    sfl_->refresh(cands);
    sfl_refreshed_at_ = updates_;
  }

  void iterate_sfl() {
    if (sfl_refreshed_at_ < 0 || updates_ - sfl_refreshed_at_ >= cfg_.sfl.update_period) {
      refresh_sfl();
    }
    std::vector<Level> levels;
    std::vector<const char*> sources;
    for (int e = 0; e < cfg_.num_envs; ++e) {
      if (sfl_->use_buffer(main_rng_)) {
        levels.push_back(sfl_->sample(main_rng_));
        sources.push_back("sfl_buffer");
      } else {
        levels.push_back(fresh_level(e));
        sources.push_back("random");
      }
    }
    auto rollouts = rollout_levels(levels, cfg_.num_steps);
    Stats st;
    std::vector<Sequence> seqs;
    for (std::size_t e = 0; e < rollouts.size(); ++e) {
      tally(rollouts[e], st);
      log_rollout(static_cast<int>(e), sources[e], levels[e], rollouts[e], true);
      seqs.push_back(std::move(rollouts[e].seq));
    }
    train_student(seqs, st);
    finish_update(st);
  }

  void iterate_degen() {
    std::vector<DegenRollout> rollouts(static_cast<std::size_t>(cfg_.num_envs));
    parallel_for(cfg_.num_envs, cfg_.threads, [&](int e) {
      Rng rng = env_rng(e);
      rollouts[static_cast<std::size_t>(e)] = rollout_degen(student_, *teacher_, cfg_, rng);
    });
    Stats st;
    std::vector<Sequence> sseqs, tseqs;
    for (std::size_t e = 0; e < rollouts.size(); ++e) {
      auto& r = rollouts[e];
      st.episodes += r.completed;
      st.successes += r.successes;
      st.returns += r.completed_return;
      if (episodes_.is_open()) {
        for (const auto& log : r.logs) {
          nlohmann::json j{{"iteration", iterations_},   {"update", updates_},
                           {"env", e},                   {"source", "degen"},
                           {"level", hex_hash(log.level_hash)},
                           {"student_steps", log.student_steps},
                           {"teacher_steps", log.teacher_steps},
                           {"solved", log.solved},       {"finished", log.finished},
                           {"score", log.score},         {"teacher_reward_sum", log.reward_sum},
                           {"trained", true}};
          episodes_ << j.dump() << '\n';
        }
      }
      sseqs.push_back(std::move(r.student));
      tseqs.push_back(std::move(r.teacher));
    }
    train_teacher(tseqs, st);
    train_student(sseqs, st);
    finish_update(st);
  }

  void iterate_initial_gen() {
    std::vector<InitialGenRollout> rollouts(static_cast<std::size_t>(cfg_.num_envs));
    parallel_for(cfg_.num_envs, cfg_.threads, [&](int e) {
      Rng rng = env_rng(e);
      auto& r = rollouts[static_cast<std::size_t>(e)];
      r = rollout_initial_gen(student_, *teacher_, cfg_, rng);
      r.score = score_level(context_for(r.student.episodes, cfg_.score_rollouts, false),
                            cfg_.metric, score_params_);
      const auto rewards = initial_gen_rewards(r.teacher.length, r.score);
      r.teacher.rewards = rewards;
      r.teacher.dones.back() = 1;
    });
    Stats st;
    std::vector<Sequence> sseqs, tseqs;
    for (std::size_t e = 0; e < rollouts.size(); ++e) {
      auto& r = rollouts[e];
      tally(r.student, st);
      log_rollout(static_cast<int>(e), "initial_gen", r.level, r.student, true, r.score);
      sseqs.push_back(std::move(r.student.seq));
      tseqs.push_back(std::move(r.teacher));
    }
    train_teacher(tseqs, st);
    train_student(sseqs, st);
    finish_update(st);
  }

  const RunConfig cfg_;
  const std::string out_dir_;
  std::function<void(const TrainProgress&)> progress_;
  ScoreParams score_params_;
  PPOConfig student_ppo_;
  PPOConfig teacher_ppo_;
  Rng main_rng_;
  std::chrono::steady_clock::time_point started_;

  PolicyParams student_;
  Adam student_opt_;
  std::optional<PolicyParams> teacher_;
  Adam teacher_opt_;
  std::optional<PLRBuffer> plr_;
  std::optional<SFLBuffer> sfl_;
  bool mutate_next_ = false;
  int sfl_refreshed_at_ = -1;
  std::vector<EvalEntry> eval_levels_;

  int updates_ = 0;
  int iterations_ = 0;
  std::ofstream metrics_;
  std::ofstream stats_;
  std::ofstream episodes_;
};

}  // namespace

EvalResult evaluate(const PolicyParams& student, const std::vector<EvalEntry>& levels,
                    int episodes, bool greedy, std::uint64_t seed, int threads) {
  if (episodes < 1) throw UsageError("episodes per level must be >= 1");
  const int n_levels = static_cast<int>(levels.size());
  std::vector<Trajectory> results(static_cast<std::size_t>(n_levels * episodes));
  parallel_for(n_levels * episodes, threads, [&](int i) {
    const int l = i / episodes, ep = i % episodes;
    const auto& level = levels[static_cast<std::size_t>(l)].level;
    StudentStepper stepper(student, level.family);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(ep)));
    results[static_cast<std::size_t>(i)] = run_episode(stepper, level, rng, greedy);
  });
  EvalResult out;
  for (int l = 0; l < n_levels; ++l) {
    EvalLevelResult r;
    r.name = levels[static_cast<std::size_t>(l)].name;
    for (int ep = 0; ep < episodes; ++ep) {
      const auto& t = results[static_cast<std::size_t>(l * episodes + ep)];
      r.solve_rate += t.solved ? 1.0 : 0.0;
      r.mean_return += t.episode_return();
    }
    r.solve_rate /= episodes;
    r.mean_return /= episodes;
    out.mean_solve_rate += r.solve_rate;
    out.mean_return += r.mean_return;
    out.levels.push_back(std::move(r));
  }
  if (n_levels > 0) {
    out.mean_solve_rate /= n_levels;
    out.mean_return /= n_levels;
  }
  return out;
}

std::string eval_result_json(const EvalResult& result) {
  nlohmann::json j;
  j["levels"] = nlohmann::json::array();
  for (const auto& l : result.levels) {
    j["levels"].push_back(
        {{"name", l.name}, {"solve_rate", l.solve_rate}, {"mean_return", l.mean_return}});
  }
  j["mean"] = {{"solve_rate", result.mean_solve_rate}, {"mean_return", result.mean_return}};
  return j.dump(2);
}

std::vector<Trajectory> rollout_episodes(const PolicyParams& student, const Level& level,
                                         int episodes, std::uint64_t seed, bool greedy) {
  if (episodes < 1) throw UsageError("rollouts must be >= 1");
  StudentStepper stepper(student, level.family);
  std::vector<Trajectory> out;
  for (int ep = 0; ep < episodes; ++ep) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(ep)));
    out.push_back(run_episode(stepper, level, rng, greedy));
  }
  return out;
}

TrainResult train(const RunConfig& cfg, const std::string& out_dir,
                  const std::function<void(const TrainProgress&)>& progress) {
  Trainer trainer(cfg, out_dir, progress);
  return trainer.run();
}

}  // namespace degen
