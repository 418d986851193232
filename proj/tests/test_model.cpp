#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dpaa/model.hpp"
#include "support/oracles.hpp"

using namespace dpaa;

TEST_SUITE_BEGIN("model");

TEST_CASE("init_embeddings is deterministic and Gaussian-scaled") {
  const auto a = init_embeddings(3, 4, 8, 1);
  const auto b = init_embeddings(3, 4, 8, 1);
  CHECK(testing::same_matrix(a.values, b.values));
  const auto c = init_embeddings(3, 4, 8, 2);
  CHECK_FALSE(testing::same_matrix(a.values, c.values));

  // chi distribution: row norms of a d=256 table concentrate near 0.1*16
  const auto big = init_embeddings(40, 40, 256, 3);
  double mean_norm = 0.0;
  for (Index v = 0; v < big.values.rows(); ++v) mean_norm += big.values.row(v).norm();
  mean_norm /= static_cast<double>(big.values.rows());
  CHECK(mean_norm > 1.6 * 0.9);
  CHECK(mean_norm < 1.6 * 1.1);

  const auto no_users = init_embeddings(0, 5, 4, 1);
  CHECK(no_users.values.rows() == 5);
}

TEST_CASE("lightgcn propagation on hand-checked graphs") {
  SUBCASE("single edge copies the neighbor") {
    const auto g = build_graph({{0, 0}}, 1, 1);
    auto table = init_embeddings(1, 1, 3, 5);
    const auto stack = propagate_lightgcn(g, table, 1);
    CHECK((stack.layers[1].row(0) - table.values.row(1)).norm() == doctest::Approx(0.0));
    CHECK((stack.layers[1].row(1) - table.values.row(0)).norm() == doctest::Approx(0.0));
  }
  SUBCASE("two-user star divides by sqrt(2)") {
    const auto g = build_graph({{0, 0}, {1, 0}}, 2, 1);
    auto table = init_embeddings(2, 1, 3, 6);
    const auto stack = propagate_lightgcn(g, table, 1);
    const Eigen::RowVectorXd expected =
        (table.values.row(0) + table.values.row(1)) / std::sqrt(2.0);
    CHECK((stack.layers[1].row(2) - expected).norm() < 1e-14);
  }
  SUBCASE("isolated nodes stay zero at higher layers") {
    const auto g = build_graph({{0, 0}}, 2, 2);  // user 1 and item 1 isolated
    auto table = init_embeddings(2, 2, 3, 7);
    const auto stack = propagate_lightgcn(g, table, 2);
    CHECK(stack.layers[1].row(1).norm() == 0.0);
    CHECK(stack.layers[2].row(3).norm() == 0.0);
  }
}

TEST_CASE("dpaa propagation matches the dense scalar oracle") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = testing::random_connected_graph(3, 3, 0.5, rng);
    EmbeddingTable table{testing::random_table(6, 2, rng), 3, 3};
    for (const int gamma : {0, 1}) {
      const auto plan = WeightPlan::make(1e-3, 1.5, gamma, 0.3, 2);
      const auto cache = testing::random_cache(g, 2, gamma, rng);
      const double beta = rng.uniform();
      const auto stack = propagate_dpaa(g, table, plan, cache, beta);
      const auto expected = testing::dense_dpaa_forward(g, table.values, plan, cache, beta);
      REQUIRE(stack.layers.size() == expected.size());
      for (std::size_t l = 0; l < expected.size(); ++l) {
        CHECK((stack.layers[l] - expected[l]).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
}

TEST_CASE("dpaa with neutral parameters degenerates to lightgcn") {
  Rng rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    const Index users = 2 + rng.bounded(5);
    const Index items = 2 + rng.bounded(5);
    const auto g = testing::random_connected_graph(users, items, 0.4, rng);
    EmbeddingTable table{testing::random_table(users + items, 3, rng), users, items};
    const auto plan = WeightPlan::make(0.0, 0.0, 1, 0.0, 2);
    const auto cache = testing::constant_cache(g, 2, 1, 1.0f);
    const auto dpaa_stack = propagate_dpaa(g, table, plan, cache, 1.0);
    const auto light_stack = propagate_lightgcn(g, table, 2);
    for (std::size_t l = 0; l < dpaa_stack.layers.size(); ++l) {
      CHECK((dpaa_stack.layers[l] - light_stack.layers[l]).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("single weighted message") {
  const auto g = build_graph({{0, 0}}, 1, 1);
  EmbeddingTable table{Matrix(2, 2), 1, 1};
  table.values << 1.0, 2.0, -0.5, 0.25;
  const auto plan = WeightPlan::make(0.0, 0.0, 1, 0.0, 1);
  auto cache = testing::constant_cache(g, 1, 1, 0.5f);
  const auto stack = propagate_dpaa(g, table, plan, cache, 1.0);
  CHECK(stack.layers[1](0, 0) == doctest::Approx(0.5 * -0.5));
  CHECK(stack.layers[1](0, 1) == doctest::Approx(0.5 * 0.25));
}

TEST_CASE("gamma=1 makes IIW perturbations above layer 0 inert") {
  Rng rng(37);
  const auto g = testing::random_connected_graph(4, 4, 0.5, rng);
  EmbeddingTable table{testing::random_table(8, 3, rng), 4, 4};
  const auto plan = WeightPlan::make(1e-2, 2.0, 1, 0.2, 3);

  // caches stored for all layers; only layer 0 should matter under gamma=1
  auto cache_a = testing::constant_cache(g, 3, 0, 0.7f);
  auto cache_b = testing::constant_cache(g, 3, 0, 0.7f);
  for (Index e = 0; e < g.edge_count(); ++e) {
    cache_b.set(1, e, 1.9f);
    cache_b.set(2, e, 0.1f);
  }
  const auto stack_a = propagate_dpaa(g, table, plan, cache_a, 0.8);
  const auto stack_b = propagate_dpaa(g, table, plan, cache_b, 0.8);
  for (std::size_t l = 0; l < stack_a.layers.size(); ++l) {
    CHECK((stack_a.layers[l] - stack_b.layers[l]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("permutation equivariance of the forward pass") {
  Rng rng(41);
  const Index users = 4, items = 5;
  const auto g = testing::random_connected_graph(users, items, 0.4, rng);
  EmbeddingTable table{testing::random_table(users + items, 3, rng), users, items};
  const auto plan = WeightPlan::make(1e-3, 1.0, 1, 0.2, 2);
  const auto cache = testing::random_cache(g, 2, 1, rng);
  const auto base = propagate_dpaa(g, table, plan, cache, 0.6);

  // relabel users by reversal, items by rotation
  std::vector<Index> user_map(users), item_map(items);
  for (Index u = 0; u < users; ++u) user_map[static_cast<std::size_t>(u)] = users - 1 - u;
  for (Index i = 0; i < items; ++i) item_map[static_cast<std::size_t>(i)] = (i + 2) % items;

  std::vector<Interaction> remapped;
  for (Index e = 0; e < g.edge_count(); ++e) {
    remapped.push_back({user_map[static_cast<std::size_t>(g.edge_user(e))],
                        item_map[static_cast<std::size_t>(g.edge_item(e))]});
  }
  const auto g2 = build_graph(remapped, users, items);
  EmbeddingTable table2{Matrix(users + items, 3), users, items};
  for (Index u = 0; u < users; ++u) {
    table2.values.row(user_map[static_cast<std::size_t>(u)]) = table.values.row(u);
  }
  for (Index i = 0; i < items; ++i) {
    table2.values.row(users + item_map[static_cast<std::size_t>(i)]) =
        table.values.row(users + i);
  }
  auto cache2 = testing::constant_cache(g2, 2, 1, 1.0f);
  for (Index e = 0; e < g.edge_count(); ++e) {
    const Index e2 = g2.edge_index(user_map[static_cast<std::size_t>(g.edge_user(e))],
                                   item_map[static_cast<std::size_t>(g.edge_item(e))]);
    cache2.set(0, e2, cache.value(0, e));
  }
  const auto permuted = propagate_dpaa(g2, table2, plan, cache2, 0.6);
  for (std::size_t l = 0; l < base.layers.size(); ++l) {
    for (Index u = 0; u < users; ++u) {
      const Index pu = user_map[static_cast<std::size_t>(u)];
      CHECK((base.layers[l].row(u) - permuted.layers[l].row(pu)).norm() < 1e-12);
    }
    for (Index i = 0; i < items; ++i) {
      const Index pi = item_map[static_cast<std::size_t>(i)];
      CHECK((base.layers[l].row(users + i) - permuted.layers[l].row(users + pi)).norm() <
            1e-12);
    }
  }
}

TEST_CASE("pretrained-only propagation is a fixed linear map") {
  Rng rng(43);
  const auto g = testing::random_connected_graph(4, 4, 0.5, rng);
  const auto plan = WeightPlan::make(0.0, 1.0, 0, 0.3, 2);
  const auto cache = testing::random_cache(g, 2, 0, rng);

  EmbeddingTable a{testing::random_table(8, 3, rng), 4, 4};
  EmbeddingTable b{testing::random_table(8, 3, rng), 4, 4};
  const double alpha = 0.7;

  // with beta=1 the weights ignore the table entirely, so homogeneity and
  // additivity of the full stack hold
  const auto frozen = freeze_dpaa_weights(g, a, plan, cache, 1.0);
  const auto frozen_b = freeze_dpaa_weights(g, b, plan, cache, 1.0);
  for (Index l = 0; l < frozen.num_layers; ++l) {
    for (Index e = 0; e < g.edge_count(); ++e) {
      CHECK(frozen.edge_weights[static_cast<std::size_t>(l)][static_cast<std::size_t>(e)] ==
            frozen_b.edge_weights[static_cast<std::size_t>(l)][static_cast<std::size_t>(e)]);
    }
  }

  EmbeddingTable sum{a.values + alpha * b.values, 4, 4};
  const auto stack_sum = propagate_dpaa(g, sum, plan, cache, 1.0);
  const auto stack_a = propagate_dpaa(g, a, plan, cache, 1.0);
  const auto stack_b = propagate_dpaa(g, b, plan, cache, 1.0);
  for (std::size_t l = 0; l < stack_sum.layers.size(); ++l) {
    const Matrix expected = stack_a.layers[l] + alpha * stack_b.layers[l];
    CHECK((stack_sum.layers[l] - expected).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("missing cache layers under gamma=0 is a configuration error") {
  Rng rng(47);
  const auto g = testing::random_connected_graph(3, 3, 0.5, rng);
  EmbeddingTable table{testing::random_table(6, 2, rng), 3, 3};
  const auto plan = WeightPlan::make(0.0, 0.0, 0, 0.0, 2);
  const auto cache = testing::constant_cache(g, 2, 1, 1.0f);  // layer 0 only
  CHECK_THROWS_AS(propagate_dpaa(g, table, plan, cache, 1.0), std::runtime_error);
}

TEST_CASE("readout and score") {
  SUBCASE("degenerate single-layer stack is the identity") {
    LayerStack stack;
    stack.num_users = 1;
    stack.num_items = 1;
    stack.layers.push_back(Matrix::Random(2, 3));
    const auto out = readout(stack);
    CHECK((out.values - stack.layers[0]).norm() == 0.0);
  }
  SUBCASE("mean of x and 3x is 2x") {
    LayerStack stack;
    stack.num_users = 1;
    stack.num_items = 1;
    Matrix x = Matrix::Random(2, 3);
    stack.layers = {x, 3.0 * x};
    const auto out = readout(stack);
    CHECK((out.values - 2.0 * x).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("random stack matches the scalar-loop oracle") {
    Rng rng(53);
    LayerStack stack;
    stack.num_users = 2;
    stack.num_items = 3;
    for (int l = 0; l < 3; ++l) stack.layers.push_back(testing::random_table(5, 4, rng));
    const auto out = readout(stack);
    const auto expected = testing::dense_readout(stack.layers);
    CHECK((out.values - expected).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("scores") {
    FinalEmbeddings fe;
    fe.num_users = 1;
    fe.num_items = 2;
    fe.values = Matrix(3, 2);
    fe.values << 1.0, 0.0, 1.0, 0.0, 0.0, 1.0;
    CHECK(score(fe, 0, 0) == doctest::Approx(1.0));
    CHECK(score(fe, 0, 1) == doctest::Approx(0.0));

    Rng rng(59);
    fe.values = testing::random_table(3, 2, rng);
    double expected = 0.0;
    for (Index k = 0; k < 2; ++k) expected += fe.values(0, k) * fe.values(1, k);
    CHECK(score(fe, 0, 0) == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("checkpoint round-trip preserves header and f32 table") {
  namespace fs = std::filesystem;
  Rng rng(61);
  Checkpoint ckpt;
  ckpt.table = EmbeddingTable{testing::random_table(5, 3, rng), 2, 3};
  ckpt.config.dim = 3;
  ckpt.config.num_layers = 2;
  ckpt.config.mode = PropagationMode::dpaa;
  ckpt.config.plan = WeightPlan::make(1e-3, 2.0, 1, 0.4, 2);
  ckpt.beta_t = 0.75;

  const auto path = (fs::temp_directory_path() / "dpaa_ckpt_test.bin").string();
  ckpt.save(path);
  const auto loaded = Checkpoint::load(path);
  CHECK(loaded.table.num_users == 2);
  CHECK(loaded.table.num_items == 3);
  CHECK(loaded.config.num_layers == 2);
  CHECK(loaded.config.mode == PropagationMode::dpaa);
  CHECK(loaded.config.plan.layer_emphasis == 2.0);
  CHECK(loaded.config.plan.residual_strength == 0.4);
  CHECK(loaded.beta_t == 0.75);
  for (Index v = 0; v < 5; ++v) {
    for (Index k = 0; k < 3; ++k) {
      CHECK(loaded.table.values(v, k) ==
            static_cast<double>(static_cast<float>(ckpt.table.values(v, k))));
    }
  }
  fs::remove(path);
}

TEST_SUITE_END();
