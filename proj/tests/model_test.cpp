#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "refnav/model/config.hpp"
#include "refnav/model/fast_search.hpp"
#include "refnav/model/losses.hpp"
#include "refnav/model/navpoint.hpp"
#include "refnav/model/train.hpp"
#include "support.hpp"
#include "toy_episode.hpp"

using namespace refnav;
using namespace refnav::model;
using refnav::toy::tiny_config;
using refnav::toy::toy_model;
using refnav::toy::triangle_world;

namespace {

double total(const Var& v) {
  const auto& d = v.value().data;
  return std::accumulate(d.begin(), d.end(), 0.0);
}

Var random_matrix(Tape& t, std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor2 m(r, c);
  for (double& x : m.data) x = u(rng);
  return t.constant(m);
}

void zero(NavPointModel& m, const std::string& name) {
  auto& v = m.params().get(name).value;
  std::fill(v.data.begin(), v.data.end(), 0.0);
}

// Chain a-b-c-d, 2 m apart, target 1 m beyond a.
World chain_world(const std::string& start) {
  std::vector<Viewpoint> vps;
  const char* ids[] = {"a", "b", "c", "d"};
  for (int i = 0; i < 4; ++i) vps.push_back({ids[i], {2.0 * i, 0, 1.5}});
  std::vector<Edge> edges;
  for (int i = 0; i < 3; ++i) edges.push_back(refnav::testing::edge(vps, ids[i], ids[i + 1]));
  Environment env("chain4", vps, edges, {refnav::testing::object("t", "lamp", {-1, 0, 1.5}, 0.2)}, 1);
  Task task{"chain_t0", {"find", "the", "lamp"}, start, 0, 0, "t", {"a", "b"}};
  return {std::move(env), {task}};
}

}  // namespace

TEST(Config, ParseAndRoundTrip) {
  const auto c = parse_config_text("# smoke\nlr = 0.2\nmargin=0.5  # wider\n\npointer_epochs = 3\nlan_only = true\n");
  EXPECT_EQ(c.lr, 0.2);
  EXPECT_EQ(c.margin, 0.5);
  EXPECT_EQ(c.pointer_epochs, 3);
  EXPECT_TRUE(c.lan_only);
  EXPECT_EQ(c.nav_epochs, ModelConfig{}.nav_epochs);
  EXPECT_ANY_THROW(parse_config_text("learning_rate = 1\n"));
  EXPECT_ANY_THROW(parse_config_text("lr = fast\n"));
  EXPECT_EQ(config_from_json(config_to_json(c)), c);
  const ModelConfig d;
  EXPECT_EQ(d.lambda1, 0.5);
  EXPECT_EQ(d.lambda2, 1.0);
  EXPECT_EQ(d.lambda3, 1.0);
  EXPECT_EQ(d.lambda4, 1.0);
  EXPECT_EQ(d.margin, 0.1);
  EXPECT_EQ(d.clip_norm, 5.0);
  const auto p = ModelConfig::paper_preset();
  EXPECT_EQ(p.d_text, 512u);
  EXPECT_EQ(p.d_hidden, 512u);
  EXPECT_EQ(p.d_fused(), 4736u);
}

TEST(Vocabulary, ReservedIndices) {
  EXPECT_THROW(Vocabulary({"lamp", "chair", "lamp"}), std::invalid_argument);
  Vocabulary v({"lamp", "chair"});
  EXPECT_EQ(v.index("<nope>"), Vocabulary::kUnk);
  EXPECT_NE(v.index("lamp"), Vocabulary::kNull);
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.encode({"chair", "zzz"}), (std::vector<std::size_t>{v.index("chair"), 0}));
}

TEST(Navigator, InstructionEncoderShapes) {
  const auto w = triangle_world();
  auto m = toy_model(w);
  Tape t;
  EXPECT_EQ(m->encode_instruction(t, {"lamp"}).rows(), 1u);
  EXPECT_EQ(m->encode_instruction(t, {"lamp"}).cols(), m->config().d_text);
  // unidirectional: the first row only sees the first token
  const auto a = m->encode_instruction(t, {"go", "to"}).value();
  const auto b = m->encode_instruction(t, {"go", "lamp", "brass"}).value();
  for (std::size_t j = 0; j < a.cols; ++j) EXPECT_EQ(a(0, j), b(0, j));
  EXPECT_NE(a(1, 0), b(1, 0));
  EXPECT_EQ(m->encode_instruction(t, {"go", "to"}).value(), a);
}

TEST(Navigator, CoGroundingAttentions) {
  const auto w = triangle_world();
  auto m = toy_model(w);
  const auto& c = m->config();
  Tape t;
  Var X = m->encode_instruction(t, w.tasks[0].instruction);
  Var V = random_matrix(t, 3, c.d_fused(), 4);
  Var h = random_matrix(t, c.d_hidden, 1, 5);
  auto cg = m->co_ground(X, V, h);
  EXPECT_EQ(cg.alpha.rows(), 5u);
  EXPECT_EQ(cg.beta.rows(), 3u);
  EXPECT_EQ(cg.x_hat.rows(), c.d_text);
  EXPECT_EQ(cg.v_hat.rows(), c.d_fused());
  EXPECT_NEAR(total(cg.alpha), 1.0, 1e-9);
  EXPECT_NEAR(total(cg.beta), 1.0, 1e-9);
  EXPECT_THROW(m->co_ground(X, random_matrix(t, 3, 2, 1), h), nn::ShapeError);

  // single candidate: beta = [1], v_hat = V
  Var V1 = random_matrix(t, 1, c.d_fused(), 6);
  auto one = m->co_ground(X, V1, h);
  EXPECT_NEAR(one.beta.item(), 1.0, 1e-15);
  for (std::size_t i = 0; i < c.d_fused(); ++i) EXPECT_NEAR(one.v_hat.value()[i], V1.value()[i], 1e-15);

  // W_x = 0: uniform text attention, x_hat is the column mean of X
  zero(*m, "nav.W_x");
  Tape t2;
  X = m->encode_instruction(t2, w.tasks[0].instruction);
  auto u = m->co_ground(X, t2.constant(V.value()), t2.constant(h.value()));
  for (double a : u.alpha.value().data) EXPECT_NEAR(a, 0.2, 1e-15);
  for (std::size_t j = 0; j < c.d_text; ++j) {
    double mean = 0;
    for (std::size_t r = 0; r < 5; ++r) mean += X.value()(r, j) / 5.0;
    EXPECT_NEAR(u.x_hat.value()[j], mean, 1e-15);
  }
}

TEST(Navigator, ContextLogitsProgress) {
  const auto w = triangle_world();
  auto m = toy_model(w);
  const auto& c = m->config();
  Tape t;
  Var X = m->encode_instruction(t, w.tasks[0].instruction);
  Var row = random_matrix(t, 1, c.d_fused(), 8);
  std::vector<Var> rows{nn::transpose(row), random_matrix(t, c.d_fused(), 1, 9), nn::transpose(row)};
  Var V = nn::stack_rows(rows);
  auto ctx = m->initial_context(t);
  auto cg = m->co_ground(X, V, ctx.h);
  auto next = m->context_update(ctx, cg.x_hat, cg.v_hat, m->action_embedding(t, 0));
  for (double x : next.h.value().data) EXPECT_LE(std::abs(x), 1.0);
  Var l = m->action_logits(next.h, cg.x_hat, V);
  ASSERT_EQ(l.rows(), 3u);
  EXPECT_EQ(l.value()[0], l.value()[2]);
  EXPECT_NE(l.value()[0], l.value()[1]);
  const Var pm = m->progress_monitor(next.h, cg.x_hat);
  EXPECT_GT(pm.item(), 0.0);
  EXPECT_LT(pm.item(), 1.0);
  zero(*m, "nav.W_a");
  Tape t2;
  const auto l0 = m->action_logits(t2.constant(next.h.value()), t2.constant(cg.x_hat.value()), t2.constant(V.value()));
  for (double x : l0.value().data) EXPECT_EQ(x, 0.0);
}

TEST(Losses, ProgressTarget) {
  EXPECT_EQ(progress_target(4.0, 4.0), 0.0);
  EXPECT_EQ(progress_target(4.0, 0.0), 1.0);
  EXPECT_EQ(progress_target(4.0, 2.0), 0.5);
  EXPECT_EQ(progress_target(4.0, 9.0), 0.0);
  EXPECT_EQ(progress_target(0.0, 0.0), 1.0);
}

TEST(Losses, NavExamples) {
  Tape t;
  std::vector<NavStep> perfect{{t.constant(Tensor2::column({800, 0, 0})), 0, t.constant(Tensor2::column({0.5})), 0.5}};
  EXPECT_NEAR(loss_nav(perfect, 0.5).item(), 0.0, 1e-12);
  std::vector<NavStep> uniform;
  for (int s = 0; s < 2; ++s)
    uniform.push_back({t.constant(Tensor2::column({0.3, 0.3, 0.3, 0.3})), static_cast<std::size_t>(s),
                       t.constant(Tensor2::column({0.25 * s})), 0.25 * s});
  EXPECT_NEAR(loss_nav(uniform, 0.5).item(), 0.5 * 2 * std::log(4.0), 1e-12);
  EXPECT_NEAR(0.5 * 2 * std::log(4.0), 1.3863, 1e-4);
  // progress term only: (1 - 0.5) * 0.2^2
  std::vector<NavStep> off{{t.constant(Tensor2::column({800, 0})), 0, t.constant(Tensor2::column({0.3})), 0.5}};
  EXPECT_NEAR(loss_nav(off, 0.5).item(), 0.5 * 0.04, 1e-12);
}

TEST(Losses, ExpAndTotal) {
  Tape t;
  auto s = [&](double v) { return t.constant(Tensor2::column({v})); };
  std::vector<PointerTriplet> clear{{s(2.0), s(1.0), s(0.5)}};
  EXPECT_EQ(loss_exp(t, clear, 1, 1, 0.1).item(), 0.0);
  std::vector<PointerTriplet> equal{{s(1.0), s(1.0), s(1.0)}};
  EXPECT_NEAR(loss_exp(t, equal, 1, 1, 0.1).item(), 0.2, 1e-15);
  std::vector<PointerTriplet> one_sided{{s(1.0), std::nullopt, s(1.05)}};
  EXPECT_NEAR(loss_exp(t, one_sided, 1, 1, 0.1).item(), 0.15, 1e-15);
  std::vector<PointerTriplet> two{{s(1.0), s(1.0), s(1.0)}, {s(1.0), s(1.0), s(1.0)}};
  EXPECT_NEAR(loss_exp(t, two, 1, 1, 0.1).item(), 0.4, 1e-15);

  EXPECT_EQ(loss_total(s(0), s(0), 1.0).item(), 0.0);
  EXPECT_EQ(loss_total(s(1.5), s(7), 0.0).item(), 1.5);
  EXPECT_EQ(loss_total(s(1.5), s(2), 1.0).item(), 3.5);
}

TEST(Pointer, QueryNormalisation) {
  const auto w = triangle_world();
  auto m = toy_model(w);
  Tape t;
  auto q = m->pointer_encode(t, w.tasks[0].instruction);
  EXPECT_NEAR(total(q.weights), 1.0, 1e-12);
  for (const auto& a : q.attention) EXPECT_NEAR(total(a), 1.0, 1e-12);
  auto single = m->pointer_encode(t, {"lamp"});
  for (const auto& p : single.phrase) EXPECT_EQ(p.value(), single.words[0].value());
  EXPECT_NEAR(total(single.weights), 1.0, 1e-12);
}

TEST(Pointer, ScoresDependOnFeaturesNotIdsOrOrder) {
  const auto w = refnav::testing::synth_world(21, 20, 40);
  auto m = std::make_unique<NavPointModel>(tiny_config(), Vocabulary::from_worlds({w}));
  m->params().init_xavier(2);
  SceneCache scene(w.env, m->config());
  Tape t;
  auto q = m->pointer_encode(t, w.tasks[0].instruction);
  int views = 0;
  for (const auto& vp : w.env.viewpoints()) {
    for (int k = 1; k <= 36; ++k) {
      const auto& objs = scene.objects(vp.id, k);
      if (objs.size() < 2) continue;
      ++views;
      std::vector<double> scores;
      for (const auto& o : objs) scores.push_back(m->pointer_score(q, o).total.item());
      // reversed candidate order gives the same per-object scores
      for (std::size_t i = objs.size(); i-- > 0;) EXPECT_EQ(m->pointer_score(q, objs[i]).total.item(), scores[i]);
      // relabelled ids leave scores alone
      for (std::size_t i = 0; i < objs.size(); ++i) {
        ObjectCandidate renamed = objs[i];
        renamed.object = "renamed_" + std::to_string(objs.size() - i);
        EXPECT_EQ(m->pointer_score(q, renamed).total.item(), scores[i]);
      }
      // S = sum_m w_m S_m
      const auto sc = m->pointer_score(q, objs[0]);
      double mix = 0;
      for (int mo = 0; mo < 3; ++mo) mix += q.weights.value()[mo] * sc.module[mo].item();
      EXPECT_NEAR(sc.total.item(), mix, 1e-12);
      ObjectCandidate twin = objs[0];
      twin.object = "twin";
      EXPECT_EQ(m->pointer_score(q, twin).total.item(), sc.total.item());
    }
  }
  EXPECT_GT(views, 5);
}

TEST(Pointer, CandidateFeatures) {
  const auto w = refnav::testing::synth_world(21, 20, 40);
  const auto cfg = tiny_config();
  std::size_t with_rel = 0, without = 0;
  for (const auto& vp : w.env.viewpoints()) {
    for (const auto& v : all_views(vp.id)) {
      const auto vis = visible_objects(w.env, v);
      const auto cands = build_object_candidates(w.env, vis, cfg);
      ASSERT_EQ(cands.size(), vis.size());
      for (std::size_t i = 0; i < cands.size(); ++i) {
        EXPECT_EQ(cands[i].object, vis[i].object);
        EXPECT_EQ(cands[i].cells.rows, static_cast<std::size_t>(cfg.grid * cfg.grid));
        EXPECT_EQ(cands[i].cells.cols, cfg.d_obj);
        EXPECT_EQ(cands[i].location.rows, kLocationDim);
        EXPECT_LE(cands[i].relations.size(), kMaxNeighbors);
        EXPECT_EQ(cands[i].relations.size(), std::min(kMaxNeighbors, vis.size() - 1));
        (cands[i].relations.empty() ? without : with_rel)++;
      }
    }
  }
  EXPECT_GT(with_rel, 0u);
  EXPECT_GT(without, 0u);
}

TEST(Interaction, PaddingAndConstantWidth) {
  const auto w = triangle_world();
  auto m = toy_model(w);
  SceneCache scene(w.env, m->config());
  const auto& c = m->config();
  Tape t;
  const Tensor2 base(c.d_visual_base, 1, 0.25);
  Var empty = m->interaction_fuse(t, base, {});
  ASSERT_EQ(empty.rows(), c.d_fused());
  for (std::size_t i = 0; i < c.d_visual_base; ++i) EXPECT_EQ(empty.value()[i], 0.25);
  for (std::size_t i = c.d_visual_base + c.d_label; i < c.d_fused(); ++i) EXPECT_EQ(empty.value()[i], 0.0);
  // label part equals the bi-LSTM over three NULL labels: same for any empty view
  EXPECT_EQ(m->interaction_fuse(t, Tensor2(c.d_visual_base, 1), {}).value().data[c.d_visual_base],
            empty.value()[c.d_visual_base]);

  // b sees t and u together in the view facing +x
  const auto& objs = scene.objects("b", ViewState{"b", 3, 1}.index());
  ASSERT_EQ(objs.size(), 2u);
  std::vector<const ObjectCandidate*> two{&objs[0], &objs[1]};
  Var fused = m->interaction_fuse(t, base, two);
  EXPECT_EQ(fused.rows(), c.d_fused());
  for (std::size_t i = 0; i < c.d_obj; ++i)
    EXPECT_NEAR(fused.value()[c.d_visual_base + c.d_label + i], (objs[0].visual[i] + objs[1].visual[i]) / 3.0, 1e-15);
  std::vector<const ObjectCandidate*> three{&objs[0], &objs[1], &objs[0]};
  EXPECT_EQ(m->interaction_fuse(t, base, three).rows(), c.d_fused());
  std::vector<const ObjectCandidate*> four{&objs[0], &objs[1], &objs[0], &objs[1]};
  EXPECT_THROW(m->interaction_fuse(t, base, four), std::invalid_argument);
}

TEST(Interaction, LanOnlyZeroesVisualInput) {
  const auto w = triangle_world();
  auto cfg = tiny_config();
  cfg.lan_only = true;
  SceneCache scene(w.env, cfg);
  for (int k = 1; k <= 36; ++k) {
    for (double x : scene.view_feature("b", k).data) EXPECT_EQ(x, 0.0);
    for (const auto& o : scene.objects("b", k)) {
      for (double x : o.cells.data) EXPECT_EQ(x, 0.0);
      for (double x : o.location.data) EXPECT_EQ(x, 0.0);
    }
  }
}

// Two steps, three candidates per step, four objects in the world.
TEST(GradientCheck, LossTotalOnToyEpisode) {
  const auto w = triangle_world();
  auto m = toy_model(w);
  SceneCache scene(w.env, m->config());
  {
    Tape t;
    PointerRanker ranker(*m, w.tasks[0].instruction);
    for (const char* vp : {"a", "b"}) EXPECT_EQ(gather_candidates(scene, ranker, vp, 0).targets.size(), 3u);
    EXPECT_EQ(shortest_path(w.env, "a", "b").viewpoints.size(), 2u);
    EXPECT_EQ(w.env.objects().size(), 4u);
  }
  refnav::toy::ToyLoss parts;
  {
    Tape t;
    refnav::toy::toy_loss(t, *m, scene, w, &parts);
  }
  EXPECT_GT(parts.exp, 0.0);
  EXPECT_GT(parts.nav, 0.0);
  EXPECT_NEAR(parts.total, parts.nav + parts.exp, 1e-12);
  const auto r = nn::grad_check(m->params(), [&](Tape& t) { return refnav::toy::toy_loss(t, *m, scene, w); });
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_param << "[" << r.worst_index << "]";
  EXPECT_EQ(r.checked, m->params().scalar_count());
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  const auto w = triangle_world();
  auto m = toy_model(w, 9);
  const auto dir = std::filesystem::temp_directory_path() / "refnav_ckpt_test";
  std::filesystem::create_directories(dir);
  m->save(dir / "m.json");
  const auto back = NavPointModel::load(dir / "m.json");
  EXPECT_EQ(back.config(), m->config());
  EXPECT_EQ(back.vocab(), m->vocab());
  for (const auto& p : m->params().params()) EXPECT_EQ(back.params().get(p->name).value, p->value) << p->name;
  back.save(dir / "again.json");
  EXPECT_EQ(read_text_file(dir / "m.json"), read_text_file(dir / "again.json"));
  std::filesystem::remove_all(dir);
}

TEST(FastSearch, EqualLogitsExpandInIdOrder) {
  // all logits 0: frontier ties go to the smaller id, stop before move
  const auto w = chain_world("d");
  auto m = toy_model(w);
  zero(*m, "nav.W_a");
  SceneCache scene(w.env, m->config());
  const auto plan = plan_fast_search(*m, scene, w.tasks[0], 40);
  EXPECT_EQ(plan.expanded, (std::vector<std::string>{"d", "c", "b", "a"}));
  EXPECT_EQ(plan.final_viewpoint, "a");
  ASSERT_GE(plan.actions.size(), 4u);
  EXPECT_EQ(plan.actions[0], Action{Move{"c"}});
  EXPECT_EQ(plan.actions[2], Action{Move{"a"}});
  EXPECT_EQ(plan.actions[3], Action{Stop{}});
  const auto tr = fast_search(*m, w.env, w.tasks[0], 40);
  EXPECT_EQ(tr.path, (std::vector<std::string>{"d", "c", "b", "a"}));
  EXPECT_EQ(fast_search(*m, w.env, w.tasks[0], 40), tr);
}

TEST(FastSearch, ImmediateStopAndBudget) {
  {
    // starting at the smallest id the stop entry wins the first pop
    const auto w = chain_world("a");
    auto m = toy_model(w);
    zero(*m, "nav.W_a");
    const auto tr = fast_search(*m, w.env, w.tasks[0], 40);
    EXPECT_EQ(tr.path, std::vector<std::string>{"a"});
  }
  {
    const auto w = chain_world("d");
    auto m = toy_model(w);
    zero(*m, "nav.W_a");
    SceneCache scene(w.env, m->config());
    const auto plan = plan_fast_search(*m, scene, w.tasks[0], 1);
    EXPECT_EQ(plan.expanded, (std::vector<std::string>{"d", "c"}));
    EXPECT_EQ(plan.final_viewpoint, "c");
    const auto tr = fast_search(*m, w.env, w.tasks[0], 1);
    EXPECT_EQ(tr.steps, 1);
  }
  // random weights: always terminates inside the budget
  const auto sw = refnav::testing::synth_world(4);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto m = toy_model(sw, seed);
    for (const auto& task : sw.tasks) {
      const auto tr = fast_search(*m, sw.env, task, 6);
      EXPECT_LE(tr.steps, 6);
      EXPECT_EQ(tr.path.front(), task.start_viewpoint);
    }
  }
}

TEST(Training, DeterministicAndDecreasing) {
  const auto w = triangle_world();
  auto cfg = tiny_config();
  cfg.pointer_epochs = 3;
  cfg.nav_epochs = 4;
  cfg.lr = 0.1;
  auto run = [&] {
    NavPointModel m(cfg, Vocabulary::from_worlds({w}));
    m.params().init_xavier(cfg.seed);
    auto rep = train(m, {w});
    return std::pair{rep, m.to_json().dump()};
  };
  const auto [r1, m1] = run();
  const auto [r2, m2] = run();
  EXPECT_EQ(m1, m2);
  ASSERT_EQ(r1.curve.size(), 7u);
  for (std::size_t i = 0; i < r1.curve.size(); ++i) EXPECT_EQ(r1.curve[i].loss, r2.curve[i].loss);
  EXPECT_EQ(r1.curve[0].phase, 1);
  EXPECT_EQ(r1.curve[3].phase, 2);
  EXPECT_LT(r1.curve[6].loss, r1.curve[3].loss);
  const auto csv = loss_curve_csv(r1);
  EXPECT_EQ(csv.substr(0, 16), "phase,epoch,loss");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 8);
}

TEST(Training, NonFiniteLossAborts) {
  const auto w = triangle_world();
  auto cfg = tiny_config();
  cfg.pointer_epochs = 1;
  cfg.nav_epochs = 0;
  NavPointModel m(cfg, Vocabulary::from_worlds({w}));
  m.params().init_xavier(1);
  m.params().get("ptr.modw.b").value[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(train(m, {w}), TrainingError);
}
