// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <set>
#include <string>

#include "support.hpp"
#include "tuneclip/config.hpp"

namespace tuneclip {
namespace {

TEST(ParseConfig, AssignsKeysAndIgnoresComments) {
  const RunConfig cfg = parse_config(
      "# a comment\n"
      "n = 512   # trailing\n"
      "\n"
      "  tau=0.05\n"
      "arm = gcl_with_osr\n"
      "seed = 9\r\n");
  EXPECT_EQ(cfg.dataset.n, 512u);
  EXPECT_EQ(cfg.model.tau, 0.05);
  EXPECT_EQ(cfg.loss.tau, 0.05);
  EXPECT_EQ(cfg.arm, Arm::gcl_with_osr);
  EXPECT_EQ(cfg.seed, 9u);
}

TEST(ParseConfig, LayersOnBase) {
  RunConfig base;
  base.batch = 7;
  const RunConfig cfg = parse_config("lr = 0.5\n", base);
  EXPECT_EQ(cfg.batch, 7u);
  EXPECT_EQ(cfg.schedule.lr_base, 0.5);
}

TEST(ParseConfig, ErrorsCarryLineNumbers) {
  for (const auto& [text, line] : {std::pair<std::string, std::string>{"n = 4\nbogus = 1\n", "line 2"},
                                   {"\n\nn 4\n", "line 3"},
                                   {"batch = -1\n", "line 1"},
                                   {"tau = 0.1x\n", "line 1"}}) {
    try {
      parse_config(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::config);
      EXPECT_NE(std::string(e.what()).find(line), std::string::npos) << e.what();
    }
  }
}

TEST(ParseConfig, BooleanForms) {
  for (const char* yes : {"true", "1", "yes", "on"}) {
    EXPECT_TRUE(parse_config(std::string("oracle = false\nforce = ") + yes).force);
  }
  for (const char* no : {"false", "0", "no", "off"}) {
    EXPECT_FALSE(parse_config(std::string("oracle = ") + no).oracle);
  }
  EXPECT_ERROR_KIND(parse_config("oracle = maybe"), ErrorKind::config);
}

TEST(ParseConfig, Lists) {
  const RunConfig cfg = parse_config(
      "margins = 0.1, 0.3\n"
      "seeds = 4,5,6\n"
      "arms = tuneclip , osr_only\n"
      "osr_epochs_list = 1,3\n");
  EXPECT_EQ(cfg.margins, (std::vector<double>{0.1, 0.3}));
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{4, 5, 6}));
  EXPECT_EQ(cfg.arms, (std::vector<Arm>{Arm::tuneclip, Arm::osr_only}));
  EXPECT_EQ(cfg.osr_epochs_list, (std::vector<std::size_t>{1, 3}));
  EXPECT_ERROR_KIND(parse_config("seeds = 1,,2"), ErrorKind::config);
  EXPECT_ERROR_KIND(parse_config("arms = tuneclip,sgd"), ErrorKind::config);
}

TEST(ParseConfig, EmptyOptionalResets) {
  const RunConfig cfg = parse_config("seed = 3\nseed =\ndataset_path = x.bin\ndataset_path =\n");
  EXPECT_FALSE(cfg.seed.has_value());
  EXPECT_FALSE(cfg.dataset_path.has_value());
}

TEST(FormatConfig, RoundTrips) {
  RunConfig cfg;
  EXPECT_EQ(format_config(parse_config(format_config(cfg))), format_config(cfg));
  cfg = parse_config("seed = 11\ntrain_seed = 2\nmargin = 0.123456789012345\nmargins = 0.3,0.7\ninit_checkpoint = a b.fcck");
  const RunConfig back = parse_config(format_config(cfg));
  EXPECT_EQ(back.loss.margin, cfg.loss.margin);
  EXPECT_EQ(back.seed, cfg.seed);
  EXPECT_EQ(back.train_seed, cfg.train_seed);
  EXPECT_EQ(back.margins, cfg.margins);
  EXPECT_EQ(back.init_checkpoint, cfg.init_checkpoint);
  EXPECT_EQ(format_config(back), format_config(cfg));
}

TEST(FormatConfig, ShortestReals) {
  const RunConfig cfg;
  EXPECT_EQ(get_config_value(cfg, "noise_sigma"), "0.1");
  EXPECT_EQ(get_config_value(cfg, "lr"), "1e-05");
  EXPECT_EQ(get_config_value(cfg, "margins"), "0.01,0.05,0.1,0.2,0.4");
  EXPECT_EQ(get_config_value(cfg, "seed"), "");
}

TEST(ConfigKeys, UniqueAndDocumented) {
  std::set<std::string> names;
  for (const ConfigKey& k : config_keys()) {
    EXPECT_TRUE(names.insert(k.name).second) << k.name;
    EXPECT_GT(std::string(k.help).size(), 0u) << k.name;
    RunConfig cfg;
    EXPECT_NO_THROW(get_config_value(cfg, k.name));
  }
  EXPECT_ERROR_KIND(get_config_value(RunConfig{}, "nope"), ErrorKind::config);
}

TEST(LoadConfig, ReadsFileAndReportsMissing) {
  test::TempDir dir;
  const auto path = dir / "run.cfg";
  std::ofstream(path) << "batch = 33\n";
  EXPECT_EQ(load_config(path).batch, 33u);
  EXPECT_ERROR_KIND(load_config(dir / "absent.cfg"), ErrorKind::io);
}

TEST(Validate, DefaultsAreValid) { EXPECT_NO_THROW(RunConfig{}.validate()); }

TEST(Validate, RejectsBadValues) {
  for (const char* text : {"test_fraction = 1", "test_fraction = 0", "batch = 0", "beta1 = 1", "beta2 = -0.1",
                           "weight_decay = -1", "fn_top_k = 0", "margins = -0.1", "osr_epochs_list = 2,1",
                           "osr_epochs_list = 0", "osr_scaling_c = 0", "tau = 0", "pretrain_lr = 0",
                           "arm = osr_only\nloss = mbcl"}) {
    SCOPED_TRACE(text);
    EXPECT_ERROR_KIND(parse_config(text).validate(), ErrorKind::config);
  }
}

TEST(SeedPlan, DerivesStageSeeds) {
  const SeedPlan p = seed_plan(parse_config("seed = 10"));
  EXPECT_EQ(p.data, 10u);
  EXPECT_EQ(p.split, 110u);
  EXPECT_EQ(p.model, 210u);
  EXPECT_EQ(p.pretrain, 310u);
  EXPECT_EQ(p.train, 410u);
  EXPECT_EQ(p.osr, 510u);
}

TEST(SeedPlan, StageOverridesWin) {
  const SeedPlan p = seed_plan(parse_config("seed = 10\nmodel_seed = 3"));
  EXPECT_EQ(p.model, 3u);
  EXPECT_EQ(p.pretrain, 103u);
  EXPECT_EQ(p.data, 10u);
  const SeedPlan q = seed_plan(parse_config("data_seed = 1\nmodel_seed = 2\ntrain_seed = 3"));
  EXPECT_EQ(q.osr, 103u);
}

TEST(SeedPlan, MissingSeedIsConfigError) {
  EXPECT_ERROR_KIND(seed_plan(RunConfig{}), ErrorKind::config);
  EXPECT_ERROR_KIND(seed_plan(parse_config("data_seed = 1\nmodel_seed = 2")), ErrorKind::config);
}

TEST(WithSeed, ClearsStageSeeds) {
  const RunConfig cfg = with_seed(parse_config("seed = 1\nmodel_seed = 5"), 8);
  EXPECT_EQ(cfg.seed, 8u);
  EXPECT_FALSE(cfg.model_seed.has_value());
}

TEST(ConfigHash, CoversDataAndLayoutOnly) {
  const RunConfig base = parse_config("seed = 1");
  const std::uint32_t h = config_hash(base);
  EXPECT_EQ(h, config_hash(parse_config("seed = 1")));
  for (const char* changed : {"n = 100", "k_concepts = 3", "noise_sigma = 0.2", "hidden = 8", "embed = 4",
                              "tau = 0.1", "test_fraction = 0.5", "seed = 2", "dataset_path = d.bin"}) {
    EXPECT_NE(config_hash(parse_config(changed, base)), h) << changed;
  }
  for (const char* same : {"lr = 1", "margin = 0.3", "arm = openclip_mbcl", "train_seed = 6", "model_seed = 6",
                           "batch = 3", "oracle = false"}) {
    EXPECT_EQ(config_hash(parse_config(same, base)), h) << same;
  }
  EXPECT_ERROR_KIND(config_hash(RunConfig{}), ErrorKind::config);
}

TEST(Arms, NamesAndStages) {
  for (Arm a : {Arm::tuneclip, Arm::fastclip_zero_init, Arm::openclip_mbcl, Arm::osr_only, Arm::gcl_with_osr}) {
    EXPECT_EQ(parse_arm(to_string(a)), a);
  }
  EXPECT_ERROR_KIND(parse_arm("TuneCLIP"), ErrorKind::config);
  EXPECT_TRUE(arm_runs_osr(Arm::tuneclip));
  EXPECT_TRUE(arm_runs_osr(Arm::gcl_with_osr));
  EXPECT_TRUE(arm_runs_osr(Arm::osr_only));
  EXPECT_FALSE(arm_runs_osr(Arm::fastclip_zero_init));
  EXPECT_FALSE(arm_runs_osr(Arm::openclip_mbcl));
  EXPECT_FALSE(arm_runs_finetune(Arm::osr_only));
  EXPECT_TRUE(arm_runs_finetune(Arm::openclip_mbcl));
  EXPECT_EQ(arm_loss(Arm::tuneclip, LossVariant::gcl), LossVariant::hgcl);
  EXPECT_EQ(arm_loss(Arm::gcl_with_osr, LossVariant::hgcl), LossVariant::gcl);
  EXPECT_EQ(arm_loss(Arm::fastclip_zero_init, LossVariant::hgcl), LossVariant::gcl);
  EXPECT_EQ(arm_loss(Arm::openclip_mbcl, LossVariant::gcl), LossVariant::mbcl);
  EXPECT_EQ(arm_loss(Arm::osr_only, LossVariant::gcl), LossVariant::gcl);
}

}  // namespace
}  // namespace tuneclip
