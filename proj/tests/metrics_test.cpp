#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "refnav/metrics.hpp"
#include "refnav/scene.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace refnav;
using namespace refnav::oracle;

namespace {

TaskResult result(bool succ, double p, double l) {
  TaskResult r;
  r.nav_success = r.oracle_success = succ;
  r.path_length = p;
  r.shortest_length = l;
  r.spl_term = succ ? l / std::max(l, p) : 0.0;
  return r;
}

}  // namespace

TEST(MetricOracles, ThousandRandomFixtures) {
  const auto worlds = fixture_worlds();
  const auto fixtures = make_fixtures(worlds, 1000, 77);
  std::map<const Environment*, std::vector<std::vector<double>>> apsp;
  for (const auto& w : worlds) apsp[&w.env] = floyd(w.env);

  int nav = 0, orc = 0, rev = 0, boxes = 0;
  std::vector<TaskResult> results;
  for (const auto& f : fixtures) {
    const auto& env = f.world->env;
    const auto& task = *f.task;
    const auto r = evaluate(env, task, f.traj);

    const bool want_nav = oracle_visible(env, f.traj.path.back(), task.target_object);
    bool want_oracle = false;
    for (const auto& vp : f.traj.path) want_oracle = want_oracle || oracle_visible(env, vp, task.target_object);
    const double p = oracle_path_length(env, f.traj.path);
    double l = std::numeric_limits<double>::infinity();
    const auto& d = apsp[&env];
    for (const auto& g : task.goal_viewpoints)
      l = std::min(l, d[env.viewpoint_index(task.start_viewpoint)][env.viewpoint_index(g)]);
    const double want_spl = want_nav ? (std::max(l, p) > 0 ? l / std::max(l, p) : 1.0) : 0.0;

    bool want_rev = false;
    const auto& vp = f.traj.path.back();
    if (f.traj.detection && distance(env.viewpoint(vp).position, env.object(task.target_object).box.center) <= 3.0) {
      if (auto* c = std::get_if<CandidateChoice>(&*f.traj.detection)) {
        want_rev = c->object == task.target_object;
      } else {
        const auto& b = std::get<BBoxOutput>(*f.traj.detection);
        ++boxes;
        for (const auto& pr : visible_objects(env, ViewState::from_index(vp, b.view))) {
          if (pr.object == task.target_object) want_rev = oracle_iou(b.bbox, pr.bbox) >= 0.5;
        }
      }
    }

    EXPECT_EQ(r.nav_success, want_nav) << task.id;
    EXPECT_EQ(r.oracle_success, want_oracle) << task.id;
    EXPECT_EQ(r.reverie_success, want_rev) << task.id;
    EXPECT_NEAR(r.path_length, p, 1e-9);
    EXPECT_NEAR(r.shortest_length, l, 1e-9);
    EXPECT_NEAR(r.spl_term, want_spl, 1e-9);
    EXPECT_LE(r.spl_term, r.nav_success ? 1.0 : 0.0);
    if (r.nav_success) {
      EXPECT_TRUE(r.oracle_success);
    }
    if (r.reverie_success) {
      EXPECT_TRUE(f.traj.detection);
      EXPECT_LE(distance(env.viewpoint(vp).position, env.object(task.target_object).box.center), 3.0);
    }
    nav += r.nav_success;
    orc += r.oracle_success;
    rev += r.reverie_success;
    results.push_back(r);
  }
  // the fixtures must exercise both outcomes of every flag
  EXPECT_GT(nav, 50);
  EXPECT_LT(nav, 950);
  EXPECT_GT(orc, nav);
  EXPECT_GT(rev, 50);
  EXPECT_GT(boxes, 50);

  double sum = 0;
  for (const auto& r : results) sum += r.spl_term;
  EXPECT_NEAR(spl(results), sum / static_cast<double>(results.size()), 1e-12);
  const auto rep = aggregate(results);
  EXPECT_LE(rep.summary.success, rep.summary.oracle_success);
  EXPECT_LE(rep.summary.spl, rep.summary.success);
  EXPECT_NEAR(rep.summary.success, 100.0 * nav / 1000.0, 1e-12);
  EXPECT_NEAR(rep.summary.oracle_success, 100.0 * orc / 1000.0, 1e-12);
  EXPECT_NEAR(rep.summary.reverie_success, 100.0 * rev / 1000.0, 1e-12);
}

TEST(MetricOracles, IouArithmetic) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 100);
  for (int i = 0; i < 1000; ++i) {
    BBox2D a{u(rng), u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng), u(rng)};
    if (i % 3 == 0) b = {a.x + 0.1 * u(rng), a.y, a.w, a.h};
    EXPECT_NEAR(iou(a, b), oracle_iou(a, b), 1e-12);
  }
}

TEST(MetricOracles, SplArithmetic) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.1, 20);
  std::vector<TaskResult> rs;
  double sum = 0;
  for (int i = 0; i < 1000; ++i) {
    const double p = u(rng), l = u(rng);
    const bool s = rng() % 2;
    rs.push_back(result(s, p, l));
    sum += s ? l / std::max(l, p) : 0.0;
  }
  EXPECT_NEAR(spl(rs), sum / 1000.0, 1e-12);
}

TEST(Spl, Examples) {
  EXPECT_DOUBLE_EQ(spl({result(true, 4.0, 2.0)}), 0.5);
  EXPECT_EQ(spl({result(false, 2.0, 2.0)}), 0.0);
  EXPECT_EQ(spl({result(true, 3.0, 3.0), result(true, 1.0, 1.0)}), 1.0);
  EXPECT_THROW(spl({}), std::invalid_argument);
}

TEST(Aggregate, Examples) {
  auto all = aggregate({result(true, 1, 1), result(true, 2, 2)});
  EXPECT_EQ(all.summary.success, 100.0);
  EXPECT_EQ(all.summary.spl, 100.0);
  EXPECT_EQ(all.summary.reverie_success, 0.0);
  EXPECT_EQ(all.summary.length, 1.5);
  auto mix = aggregate({result(true, 1, 1), result(false, 2, 2)});
  EXPECT_EQ(mix.summary.success, 50.0);
  EXPECT_EQ(mix.summary.n, 2u);
  EXPECT_THROW(aggregate({}), std::invalid_argument);
}

TEST(PathLength, Examples) {
  const auto env = refnav::testing::chain_env({refnav::testing::object("o", "cup", {0, 1, 1})});
  Trajectory t;
  t.path = {"a"};
  EXPECT_EQ(path_length(env, t), 0.0);
  t.path = {"a", "b", "c"};
  EXPECT_DOUBLE_EQ(path_length(env, t), 2.0);
  t.path = {"a", "c"};
  EXPECT_THROW(path_length(env, t), ValidationError);

  // irrational coordinates: sqrt(2) + sqrt(5)
  std::vector<Viewpoint> vps{{"a", {0, 0, 0}}, {"b", {1, 1, 0}}, {"c", {2, 3, 0}}};
  const Environment irr("irr", vps, {refnav::testing::edge(vps, "a", "b"), refnav::testing::edge(vps, "b", "c")}, {}, 0);
  t.path = {"a", "b", "c", "b"};
  EXPECT_NEAR(path_length(irr, t), 1.4142135623730951 + 2 * 2.2360679774997898, 1e-9);
}

TEST(NavSuccess, CorridorCases) {
  const auto w = refnav::testing::corridor_world();
  const auto& task = w.tasks[0];
  Trajectory t;
  t.task_id = task.id;
  t.path = {"p0", "p1", "p2", "p3", "p4"};
  EXPECT_TRUE(nav_success(w.env, task, t));
  t.path = {"p0", "p1", "p2"};  // 5 m away
  EXPECT_FALSE(nav_success(w.env, task, t));
  EXPECT_FALSE(oracle_success(w.env, task, t));
  t.path = {"p0", "p1", "p2", "p3", "p4", "p3", "p2"};
  EXPECT_FALSE(nav_success(w.env, task, t));
  EXPECT_TRUE(oracle_success(w.env, task, t));
}

TEST(NavSuccess, OccludedWithinRangeFails) {
  // target 2.5 m ahead hidden behind a large nearer cabinet in every view
  std::vector<Viewpoint> vps{{"a", {0, 0, 1.5}}, {"b", {0, -3, 1.5}}};
  auto make = [&](bool occluder) {
    std::vector<ObjectAnnotation> objs{refnav::testing::object("cup", "cup", {0, 2.5, 1.5}, 0.1)};
    if (occluder) objs.push_back(refnav::testing::object("cab", "cabinet", {0, 1.2, 1.5}, 0.5));
    return Environment("occ", vps, {refnav::testing::edge(vps, "a", "b")}, objs, 0);
  };
  Task task{"occ_t", {"cup"}, "b", 0, 0, "cup", {"a"}};
  Trajectory t{"occ_t", {"b", "a"}, {}, std::nullopt, 1};
  const auto hidden = make(true), open = make(false);
  EXPECT_LE(distance(hidden.viewpoint("a").position, hidden.object("cup").box.center), 3.0);
  EXPECT_FALSE(oracle_visible(hidden, "a", "cup"));
  EXPECT_FALSE(nav_success(hidden, task, t));
  EXPECT_TRUE(oracle_visible(open, "a", "cup"));
  EXPECT_TRUE(nav_success(open, task, t));
  // far viewpoint 5.5 m away
  t.path = {"b"};
  EXPECT_FALSE(nav_success(open, task, t));
}

TEST(ReverieSuccess, Examples) {
  const auto w = refnav::testing::corridor_world();
  const auto& task = w.tasks[0];
  Trajectory t;
  t.task_id = task.id;
  t.path = {"p0", "p1", "p2", "p3", "p4"};
  t.detection = CandidateChoice{"t"};
  EXPECT_TRUE(reverie_success(w.env, task, t));
  t.detection = CandidateChoice{"u"};
  EXPECT_FALSE(reverie_success(w.env, task, t));
  t.detection.reset();
  EXPECT_FALSE(reverie_success(w.env, task, t));

  // facing +x from p4 is heading bin 3, level
  const ViewState v{"p4", 3, 1};
  BBox2D gt;
  for (const auto& p : visible_objects(w.env, v)) {
    if (p.object == "t") gt = p.bbox;
  }
  ASSERT_GT(gt.area(), 0.0);
  t.detection = BBoxOutput{v.index(), gt};
  EXPECT_TRUE(reverie_success(w.env, task, t));
  // square box shifted by half its side: 25/175
  BBox2D sq{gt.x, gt.y, gt.w, gt.w};
  ASSERT_LE(sq.bottom(), 480.0);
  t.detection = BBoxOutput{v.index(), {sq.x + sq.w / 2, sq.y + sq.h / 2, sq.w, sq.h}};
  EXPECT_NEAR(iou(sq, std::get<BBoxOutput>(*t.detection).bbox), 25.0 / 175.0, 1e-12);
  EXPECT_FALSE(reverie_success(w.env, task, t));
  // right box, wrong view
  t.detection = BBoxOutput{ViewState{"p4", 9, 1}.index(), gt};
  EXPECT_FALSE(reverie_success(w.env, task, t));
  // correct id but detected from 5 m away
  t.path = {"p0", "p1", "p2"};
  t.detection = CandidateChoice{"t"};
  EXPECT_FALSE(reverie_success(w.env, task, t));
}

TEST(Evaluate, RejectsForeignTrajectories) {
  const auto w = refnav::testing::corridor_world();
  Trajectory t{"other", {"p0"}, {}, std::nullopt, 0};
  EXPECT_THROW(evaluate(w.env, w.tasks[0], t), ValidationError);
  t = {"corridor_t0", {"p1"}, {}, std::nullopt, 0};
  EXPECT_THROW(evaluate(w.env, w.tasks[0], t), ValidationError);
  EXPECT_THROW(score({w}, {Trajectory{"nope", {"p0"}, {}, std::nullopt, 0}}), ValidationError);
}

TEST(Render, TableAndCsvAgree) {
  MetricsSummary s{3, 66.666666, 100, 50.5, 7.25, 33.333333};
  const auto csv = render_csv({{"Agent", s}});
  const auto table = render_table({{"Agent", s}});
  for (const char* cell : {"66.67", "100.00", "50.50", "7.25", "33.33"}) {
    EXPECT_NE(csv.find(cell), std::string::npos) << cell;
    EXPECT_NE(table.find(cell), std::string::npos) << cell;
  }
  for (const char* col : {"Succ.", "OSucc.", "SPL", "Length", "REVERIE"}) EXPECT_NE(table.find(col), std::string::npos);
}
