#include <gtest/gtest.h>

#include <set>

#include "chaneff/codec.hpp"
#include "chaneff/error.hpp"
#include "chaneff/experiment.hpp"
#include "temp_dir.hpp"

using namespace chaneff;
using namespace chaneff::experiment;
using stimulus::ChannelId;

namespace {
const stimulus::RenderConfig kSmall{48, 2, true};
}

TEST(Grid, InclusiveEndpoints) {
  EXPECT_EQ(grid_t(0, 5), 0.0);
  EXPECT_EQ(grid_t(4, 5), 1.0);
  EXPECT_EQ(grid_t(2, 5), 0.5);
}

TEST(SweepPlanTest, ItemsAndIds) {
  const auto plan = plan_single_sweep(ChannelId::Tilt, 10, stimulus::default_params());
  ASSERT_EQ(plan.items.size(), 10u);
  EXPECT_EQ(plan.items.front().params.line()->tilt_deg, 0.0);
  EXPECT_EQ(plan.items.back().params.line()->tilt_deg, 90.0);
  std::set<std::string> ids;
  for (const auto& it : plan.items) {
    ids.insert(it.stimulus_id);
    EXPECT_EQ(it.stimulus_id.size(), 64u);
    EXPECT_EQ(it.params.line()->length_pct, 0.5);  // controls held
  }
  EXPECT_EQ(ids.size(), 10u);
  EXPECT_EQ(plan, plan_single_sweep(ChannelId::Tilt, 10, stimulus::default_params()));
  EXPECT_THROW(plan_single_sweep(ChannelId::Tilt, 1, stimulus::default_params()), DomainError);
}

TEST(SweepPlanTest, IdDependsOnRenderConfig) {
  const auto p = stimulus::default_params();
  EXPECT_NE(stimulus_id(p, {}), stimulus_id(p, kSmall));
  EXPECT_EQ(stimulus_id(p, {}),
            codec::sha256_hex(stimulus::canonical_string(p) + "|" +
                              stimulus::canonical_string(stimulus::RenderConfig{})));
}

TEST(Factorial, CountsAndControls) {
  for (std::size_t s = 2; s <= 5; ++s) {
    const auto plan = plan_factorial(ChannelId::Length, s);
    EXPECT_EQ(plan.cell_count(), s * s * s * s);
    EXPECT_EQ(plan.stimulus_count(), s * s * s * s * s);
  }
  const auto plan = plan_factorial(ChannelId::Tilt, 3);
  EXPECT_EQ(plan.control_channels,
            (std::array<ChannelId, 4>{ChannelId::Length, ChannelId::Luminance,
                                      ChannelId::Saturation, ChannelId::Curvature}));
  EXPECT_EQ(plan.cell_digits(0), (std::array<std::size_t, 4>{0, 0, 0, 0}));
  EXPECT_EQ(plan.cell_digits(1), (std::array<std::size_t, 4>{0, 0, 0, 1}));
  EXPECT_EQ(plan.cell_digits(80), (std::array<std::size_t, 4>{2, 2, 2, 2}));
  EXPECT_THROW(plan.cell_digits(81), DomainError);

  const auto controls = plan.cell_controls(1 * 27 + 2);
  EXPECT_EQ(controls.line()->length_pct, 0.5);
  EXPECT_EQ(controls.line()->curvature_deg, 180.0);
  EXPECT_EQ(controls.luminance_pct, 0.0);

  const auto cell = plan.cell(5);
  EXPECT_EQ(cell.varied, ChannelId::Tilt);
  EXPECT_EQ(cell.items.size(), 3u);
}

TEST(Factorial, AreaIsNotSupported) {
  EXPECT_THROW(plan_factorial(ChannelId::Area, 3), DomainError);
  for (ChannelId c : stimulus::kAllChannels) {
    if (c == ChannelId::Area) continue;
    for (ChannelId k : plan_factorial(c, 2).control_channels) {
      EXPECT_NE(k, ChannelId::Area);
      EXPECT_NE(k, c);
    }
  }
}

TEST(ManifestFormat, RoundTrip) {
  Manifest m;
  m.render = kSmall;
  m.plan = {PlanKind::Sweep, ChannelId::Length, 2, stimulus::default_params()};
  const auto plan = plan_single_sweep(ChannelId::Length, 2, stimulus::default_params(), kSmall);
  for (const auto& it : plan.items) {
    m.records.push_back({it.stimulus_id, ChannelId::Length, it.t, it.params,
                         "images/" + it.stimulus_id + ".png", std::nullopt, it.index, "ab"});
  }
  const std::string text = serialize_manifest(m);
  EXPECT_EQ(parse_manifest(text), m);
  EXPECT_TRUE(text.starts_with("{\"schema\":\"chaneff.manifest\",\"version\":1,\"render\":"));
  EXPECT_TRUE(text.substr(text.find('\n') + 1).starts_with("{\"id\":\"" + m.records[0].id +
                                                            "\",\"channel\":\"length\",\"t\":0.0,"));
}

TEST(ManifestFormat, Errors) {
  auto expect_msg = [](std::string_view text, std::string_view needle) {
    try {
      parse_manifest(text);
      ADD_FAILURE() << "no error for " << text;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_msg("", "missing header");
  expect_msg("{\"id\":\"x\"}\n", "missing header");
  expect_msg("{\"schema\":\"chaneff.manifest\",\"version\":7}\n", "unsupported manifest version 7");

  Manifest m;
  m.plan.steps = 2;
  const std::string header = serialize_manifest(m);
  expect_msg(header + "{\"id\":1}\n", "malformed record at line 2");
  const auto p = stimulus::default_params();
  ManifestRecord r{"abc", ChannelId::Length, 0.0, p, "images/abc.png", std::nullopt, 0, "00"};
  m.records = {r, r};
  expect_msg(serialize_manifest(m), "duplicate id at line 3");
}

TEST(Materialize, WritesImagesAndIsIdempotent) {
  TempDir dir;
  const auto plan = plan_single_sweep(ChannelId::Curvature, 6, stimulus::default_params(), kSmall);
  const auto first = materialize(plan, dir.path(), {2});
  EXPECT_EQ(first.rendered, 6u);
  EXPECT_EQ(first.reused, 0u);
  for (const auto& r : first.manifest.records) {
    const auto bytes = codec::read_file(dir.path() / r.path);
    EXPECT_EQ(codec::sha256_hex(bytes), r.png_sha256);
  }
  const std::string text = codec::read_text_file(first.manifest_path);

  const auto second = materialize(plan, dir.path());
  EXPECT_EQ(second.rendered, 0u);
  EXPECT_EQ(second.reused, 6u);
  EXPECT_EQ(codec::read_text_file(second.manifest_path), text);

  // A tampered image is re-rendered.
  codec::write_file_atomic(dir.path() / first.manifest.records[2].path, std::string("junk"));
  const auto third = materialize(plan, dir.path());
  EXPECT_EQ(third.rendered, 1u);
  EXPECT_EQ(codec::read_text_file(third.manifest_path), text);

  const auto loaded = load_manifest(first.manifest_path);
  ASSERT_TRUE(std::holds_alternative<SweepPlan>(loaded.plan));
  EXPECT_EQ(std::get<SweepPlan>(loaded.plan), plan);
}

TEST(Materialize, FactorialManifestRebuildsPlan) {
  TempDir dir;
  const auto plan = plan_factorial(ChannelId::Saturation, 2, kSmall);
  const auto res = materialize(plan, dir.path());
  EXPECT_EQ(res.manifest.records.size(), 32u);
  EXPECT_EQ(res.manifest.records[31].cell, 15u);
  const auto loaded = load_manifest(res.manifest_path);
  ASSERT_TRUE(std::holds_alternative<FactorialPlan>(loaded.plan));
  EXPECT_EQ(std::get<FactorialPlan>(loaded.plan), plan);
}

TEST(Materialize, LoadRejectsRecordsThatDisagreeWithPlan) {
  TempDir dir;
  const auto plan = plan_single_sweep(ChannelId::Length, 3, stimulus::default_params(), kSmall);
  auto res = materialize(plan, dir.path());
  res.manifest.records[1].t = 0.25;
  write_manifest(res.manifest, res.manifest_path);
  EXPECT_THROW(load_manifest(res.manifest_path), ParseError);
}
