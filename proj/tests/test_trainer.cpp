#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "morl/trainer/trainer.hpp"
#include "oracles.hpp"

using namespace morl;
using namespace morl::trainer;

namespace {

TrainerSetup small_setup(std::uint64_t seed = 3, Mode mode = Mode::kMorl) {
  TrainerSetup s;
  s.seed = seed;
  s.env.num_envs = 8;
  s.train.horizon = 12;
  s.train.total_epochs = 6;
  s.train.mode = mode;
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("morl_trainer_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

double total_loss(const UpdateStats& s, const TrainConfig& c) {
  return s.policy_loss + c.value_coef * s.value_loss - c.entropy_coef * s.entropy +
         c.denoise_coef * s.denoise_loss + c.force_denoise_coef * s.denoise_force_loss;
}

}  // namespace

TEST(Gae, MatchesDoubleSumOracle) {
  Rng rng(1);
  for (int batch = 0; batch < 50; ++batch) {
    const std::size_t n = 1 + rng() % 6;
    const std::size_t horizon = 1 + rng() % 12;
    const double gamma = uniform(rng, 0.8, 0.999);
    const double lambda = uniform(rng, 0.0, 1.0);
    std::vector<double> r(n * horizon), v(n * horizon), last(n);
    std::vector<std::uint8_t> d(n * horizon);
    for (std::size_t k = 0; k < r.size(); ++k) {
      r[k] = uniform(rng, -2, 2);
      v[k] = uniform(rng, -5, 5);
      d[k] = uniform(rng, 0, 1) < 0.15 ? 1 : 0;
    }
    for (auto& x : last) x = uniform(rng, -5, 5);
    const auto got = compute_gae(r, v, d, last, n, gamma, lambda);
    const auto want = oracle::gae_double_sum(r, v, d, last, n, gamma, lambda);
    for (std::size_t k = 0; k < r.size(); ++k) {
      ASSERT_NEAR(got.advantages[k], want[k], 1e-12) << "batch " << batch;
      ASSERT_NEAR(got.returns[k], want[k] + v[k], 1e-12);
    }
  }
}

TEST(Gae, TelescopesWithUnitDiscount) {
  const std::vector<double> r{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> v{0.5, -1.0, 2.0, 0.0};
  const std::vector<std::uint8_t> d{0, 0, 0, 0};
  const std::vector<double> last{0.0};
  const auto g = compute_gae(r, v, d, last, 1, 1.0, 1.0);
  EXPECT_NEAR(g.advantages[0], 10.0 - 0.5, 1e-12);
  EXPECT_NEAR(g.advantages[1], 9.0 + 1.0, 1e-12);
  EXPECT_NEAR(g.advantages[3], 4.0, 1e-12);
}

TEST(Gae, SingleStepEpisode) {
  const std::vector<double> r{1.5, 0.7};
  const std::vector<double> v{0.2, 0.4};
  const std::vector<double> last{3.0, 3.0};
  const std::vector<std::uint8_t> done{1, 0};
  const auto g = compute_gae(r, v, done, last, 2, 0.9, 0.95);
  EXPECT_NEAR(g.advantages[0], 1.5 - 0.2, 1e-15);
  EXPECT_NEAR(g.advantages[1], 0.7 + 0.9 * 3.0 - 0.4, 1e-15);
}

TEST(Gae, RejectsInconsistentShapes) {
  const std::vector<double> r(6), v(5), last(2);
  const std::vector<std::uint8_t> d(6);
  EXPECT_THROW(compute_gae(r, v, d, last, 2, 0.9, 0.9), ConfigError);
}

TEST(Surrogate, ClipExamples) {
  EXPECT_DOUBLE_EQ(clipped_surrogate(1.5, 1.0, 0.2), 1.2);
  EXPECT_DOUBLE_EQ(clipped_surrogate(1.0, -0.7, 0.2), -0.7);
  EXPECT_DOUBLE_EQ(clipped_surrogate(0.5, -1.0, 0.2), -0.8);
  EXPECT_DOUBLE_EQ(clipped_surrogate(0.5, 1.0, 0.2), 0.5);
  EXPECT_EQ(clipped_surrogate_grad(1.5, 1.0, 0.2), 0.0);
  EXPECT_EQ(clipped_surrogate_grad(1.1, 1.0, 0.2), 1.0);
}

TEST(Surrogate, NormalizedAdvantagesHaveZeroMeanUnitStd) {
  Rng rng(2);
  std::vector<double> a(500);
  for (auto& x : a) x = uniform(rng, -3, 8);
  const auto n = normalize_advantages(a);
  double m = 0, sq = 0;
  for (double x : n) m += x;
  m /= 500;
  for (double x : n) sq += (x - m) * (x - m);
  EXPECT_NEAR(m, 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt(sq / 500), 1.0, 1e-6);
}

TEST(Denoise, Examples) {
  Rng rng(3);
  Matrix target = Matrix::Random(8, 5);
  const auto exact = denoise_loss(target, target, 1.0, 1.0);
  EXPECT_EQ(exact.reconstruction, 0.0);
  EXPECT_EQ(exact.force, 0.0);
  const Matrix pred = Matrix::Random(8, 5);
  const auto plain = denoise_loss(pred, target, 1.0, 0.0);
  const Matrix diff = pred - target;
  EXPECT_NEAR(plain.reconstruction, diff.squaredNorm() / 5.0, 1e-14);
  EXPECT_TRUE(plain.grad.isApprox(2.0 / 5.0 * diff));
  const auto zero = denoise_loss(Matrix::Zero(8, 5), target, 1.0, 1.0);
  EXPECT_NEAR(zero.reconstruction, target.squaredNorm() / 5.0, 1e-14);
  EXPECT_NEAR(zero.force, target.middleRows(obs::PrivilegedObservation::kForceOffset, 3).squaredNorm() / 5.0, 1e-14);
}

class TrainerFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    setup_ = small_setup();
    env_ = std::make_unique<env::PlanarEnv>(setup_.env, setup_.reward, setup_.regularization,
                                            preference_mode(setup_.train.mode));
    env_->set_phase(0.6);
    env_->reset(9);
    agent_ = Agent(setup_.train.arch, setup_.env.history_length);
    Rng init(4);
    agent_.initialize(init, 0.5);
    Rng policy(5);
    batch_ = collect_rollout(agent_, *env_, setup_.train, policy, scaling_for(setup_.env));
    // Perturb so that old and new log-probs differ slightly but stay unclipped.
    for (auto& x : agent_.head.log_std().values) x += 0.01;
  }

  TrainerSetup setup_;
  std::unique_ptr<env::PlanarEnv> env_;
  Agent agent_;
  RolloutBatch batch_;
};

TEST_F(TrainerFixture, BatchShapeAndScalarization) {
  EXPECT_EQ(batch_.size(), 8u * 12u);
  EXPECT_EQ(batch_.obs.cols(), 96);
  for (std::size_t k = 0; k < batch_.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    const rewards::RewardVector r{batch_.reward_vectors(0, col), batch_.reward_vectors(1, col),
                                  batch_.reward_vectors(2, col)};
    ASSERT_EQ(batch_.scalar_rewards[k], rewards::scalarize(r, batch_.preferences[k]));
    ASSERT_EQ(batch_.obs(0, col), batch_.preferences[k].w_c);
    ASSERT_EQ(batch_.obs(1, col), batch_.preferences[k].w_f);
    ASSERT_EQ(batch_.obs(2, col), batch_.preferences[k].w_r);
  }
}

TEST_F(TrainerFixture, FullLossGradientMatchesFiniteDifferences) {
  const auto adv = normalize_advantages(batch_.advantages);
  std::vector<Eigen::Index> idx(40);
  for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = static_cast<Eigen::Index>(2 * j + 1);
  auto params = agent_.params();
  numkit::zero_grads(params);
  accumulate_gradients(agent_, batch_, adv, idx, setup_.train);
  auto loss = [&] {
    Agent copy = agent_;
    return total_loss(accumulate_gradients(copy, batch_, adv, idx, setup_.train), setup_.train);
  };
  Rng pick(6);
  int checked = 0;
  for (auto* p : params) {
    for (int rep = 0; rep < 12; ++rep) {
      const std::size_t i = pick() % p->size();
      const double numeric = oracle::central_difference(&p->values[i], loss);
      const double rel = oracle::relative_error(p->grad[i], numeric, 1e-6);
      EXPECT_LT(rel, 1e-4) << p->name << "[" << i << "] analytic " << p->grad[i] << " numeric " << numeric;
      ++checked;
    }
  }
  EXPECT_GE(checked, 100);
}

TEST_F(TrainerFixture, ZeroAdvantagesLeaveOnlyEntropyOnActor) {
  const std::vector<double> adv(batch_.size(), 0.0);
  std::vector<Eigen::Index> idx(batch_.size());
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  auto params = agent_.params();
  numkit::zero_grads(params);
  ObjectiveMask mask;
  mask.critic = false;
  mask.denoise = false;
  const auto s = accumulate_gradients(agent_, batch_, adv, idx, setup_.train, mask);
  EXPECT_EQ(s.policy_loss, 0.0);
  for (auto* p : agent_.actor.params()) {
    for (double g : p->grad) ASSERT_EQ(g, 0.0);
  }
  const Vector eg = agent_.head.entropy_grad_log_std();
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(agent_.head.log_std().grad[i], -setup_.train.entropy_coef * eg[static_cast<Eigen::Index>(i)]);
  }
}

TEST_F(TrainerFixture, EncoderLearnsFromActorAndDenoising) {
  const auto adv = normalize_advantages(batch_.advantages);
  std::vector<Eigen::Index> idx(batch_.size());
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  auto params = agent_.params();
  auto encoder_grads = [&](ObjectiveMask m) {
    numkit::zero_grads(params);
    accumulate_gradients(agent_, batch_, adv, idx, setup_.train, m);
    std::vector<double> g;
    for (auto* p : agent_.encoder.params()) g.insert(g.end(), p->grad.begin(), p->grad.end());
    return g;
  };
  const auto actor_only = encoder_grads({true, false, false, false});
  const auto denoise_only = encoder_grads({false, false, false, true});
  const auto both = encoder_grads({true, false, false, true});
  auto norm = [](const std::vector<double>& g) {
    double s = 0;
    for (double x : g) s += x * x;
    return std::sqrt(s);
  };
  EXPECT_GT(norm(actor_only), 0.0);
  EXPECT_GT(norm(denoise_only), 0.0);
  for (std::size_t i = 0; i < both.size(); ++i) ASSERT_NEAR(both[i], actor_only[i] + denoise_only[i], 1e-12);
}

TEST(Rollout, SorlUsesUnitPreference) {
  auto s = small_setup(3, Mode::kSorl);
  Trainer t(s);
  Rng rng(1);
  const auto b = collect_rollout(t.agent(), t.env(), s.train, rng, t.scaling());
  for (const auto& w : b.preferences) ASSERT_EQ(w, (rewards::PreferenceVector{1.0, 1.0, 1.0}));
}

TEST(Rollout, DeterministicCollectionRepeats) {
  auto s = small_setup();
  Trainer a(s), b(s);
  Rng ra(1), rb(1);
  const auto x = collect_rollout(a.agent(), a.env(), s.train, ra, a.scaling(), true);
  const auto y = collect_rollout(b.agent(), b.env(), s.train, rb, b.scaling(), true);
  EXPECT_EQ(x.obs, y.obs);
  EXPECT_EQ(x.actions, y.actions);
  EXPECT_EQ(x.scalar_rewards, y.scalar_rewards);
}

TEST(Rollout, DefaultBatchSize) {
  TrainerSetup s;
  Trainer t(s);
  Rng rng(1);
  EXPECT_EQ(collect_rollout(t.agent(), t.env(), s.train, rng, t.scaling()).size(), 1536u);
}

TEST(Ablation, ModesShareEverythingButPreferences) {
  Trainer morl(small_setup(11, Mode::kMorl));
  Trainer sorl(small_setup(11, Mode::kSorl));
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(morl.env().body(i), sorl.env().body(i));
    EXPECT_EQ(morl.env().command(i), sorl.env().command(i));
    EXPECT_EQ(morl.env().scheduled_wrench(i), sorl.env().scheduled_wrench(i));
    EXPECT_NE(morl.env().preference(i), sorl.env().preference(i));
  }
  for (auto* p : morl.agent().params()) {
    const auto* q = [&] {
      for (auto* r : sorl.agent().params()) {
        if (r->name == p->name) return r;
      }
      return static_cast<numkit::ParamTensor*>(nullptr);
    }();
    ASSERT_NE(q, nullptr);
    EXPECT_EQ(p->values, q->values);
  }
}

TEST(Training, MetricsFileHasOneRowPerEpoch) {
  const auto dir = temp_dir("rows");
  Trainer t(small_setup());
  const auto result = run_training(t, {dir, {}});
  EXPECT_EQ(result.metrics.size(), 6u);
  std::ifstream in(dir / "metrics.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, EpochMetrics::csv_header());
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 6);
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoints" / "epoch_6.ckpt"));
  EXPECT_EQ(result.final_checkpoint, dir / "checkpoints" / "epoch_6.ckpt");
}

TEST(Training, SameSeedIsBitwiseReproducible) {
  const auto a = temp_dir("repro_a");
  const auto b = temp_dir("repro_b");
  {
    Trainer t(small_setup(21));
    run_training(t, {a, {}});
  }
  {
    Trainer t(small_setup(21));
    run_training(t, {b, {}});
  }
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
  EXPECT_EQ(slurp(a / "checkpoints" / "epoch_6.ckpt"), slurp(b / "checkpoints" / "epoch_6.ckpt"));
  const auto c = temp_dir("repro_c");
  Trainer t(small_setup(22));
  run_training(t, {c, {}});
  EXPECT_NE(slurp(a / "metrics.csv"), slurp(c / "metrics.csv"));
}

TEST(Training, ResumeReproducesNextEpochBitwise) {
  Trainer full(small_setup(5));
  std::vector<std::string> rows;
  for (int e = 0; e < 5; ++e) rows.push_back(full.train_epoch().csv_row());

  Trainer first(small_setup(5));
  for (int e = 0; e < 3; ++e) first.train_epoch();
  const auto bytes = first.make_checkpoint(true).serialize();
  Trainer resumed(small_setup(5));
  resumed.restore(numkit::Checkpoint::deserialize(bytes));
  EXPECT_EQ(resumed.epoch(), 3u);
  EXPECT_EQ(resumed.train_epoch().csv_row(), rows[3]);
  EXPECT_EQ(resumed.train_epoch().csv_row(), rows[4]);
}

TEST(Training, ResumedRunAppendsToMetrics) {
  const auto dir = temp_dir("append");
  auto s = small_setup(8);
  s.train.checkpoint_interval = 3;
  {
    Trainer t(s);
    t.train_epoch();
    t.train_epoch();
    t.train_epoch();
    // Simulate an interrupted run: rows for three epochs plus the checkpoint.
    std::ofstream csv(dir / "metrics.csv");
    csv << EpochMetrics::csv_header() << "\nx\nx\nx\n";
    std::filesystem::create_directories(dir / "checkpoints");
    t.make_checkpoint(true).save(dir / "checkpoints" / "epoch_3.ckpt");
  }
  Trainer t(s);
  t.restore(numkit::Checkpoint::load(dir / "checkpoints" / "epoch_3.ckpt"));
  run_training(t, {dir, {}});
  std::ifstream in(dir / "metrics.csv");
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 6);
}

TEST(Training, NonFiniteParametersAbortWithLastGood) {
  const auto dir = temp_dir("nan");
  Trainer t(small_setup());
  t.agent().actor.weight(0).values[0] = std::nan("");
  EXPECT_THROW(run_training(t, {dir, {}}), TrainingError);
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoints" / "last_good.ckpt"));
}

TEST(Training, LayoutMismatchIsRejected) {
  Trainer t(small_setup());
  auto manifest = t.manifest();
  EXPECT_NO_THROW(Trainer::check_layout(manifest, t.setup().env.history_length));
  EXPECT_THROW(Trainer::check_layout(manifest, 4), CheckpointError);
  manifest["observation_layout"]["actor"][0]["dim"] = 2;
  EXPECT_THROW(Trainer::check_layout(manifest, t.setup().env.history_length), CheckpointError);
}

TEST(Training, ManifestDescribesRun) {
  Trainer t(small_setup(4, Mode::kSorl), nlohmann::json{{"a", 1}});
  const auto m = t.manifest();
  EXPECT_EQ(m.at("epoch"), 0);
  EXPECT_EQ(m.at("seed"), 4);
  EXPECT_EQ(m.at("mode"), "sorl");
  EXPECT_EQ(m.at("config_hash"), config_hash(nlohmann::json{{"a", 1}}));
  EXPECT_EQ(m.at("parameter_counts").at("total"), t.agent().parameter_count());
}

TEST(Config, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.gamma = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.ppo_clip = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(mode_from_string("multi"), ConfigError);
  EXPECT_EQ(mode_from_string("sorl"), Mode::kSorl);
}
