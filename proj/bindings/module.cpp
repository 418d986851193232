// Python bindings for the core operations: graph construction, the Zipfian
// click generator, DPAA weighting, propagation, training and evaluation.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dpaa/datagen.hpp"
#include "dpaa/eval.hpp"
#include "dpaa/experiment.hpp"
#include "dpaa/train.hpp"

namespace py = pybind11;
using namespace dpaa;

namespace {

std::vector<Interaction> to_interactions(const std::vector<std::pair<Index, Index>>& pairs) {
  std::vector<Interaction> xs;
  xs.reserve(pairs.size());
  for (const auto& [u, i] : pairs) xs.push_back({u, i});
  return xs;
}

std::vector<std::pair<Index, Index>> to_pairs(const std::vector<Interaction>& xs) {
  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(xs.size());
  for (const auto& x : xs) pairs.emplace_back(x.user, x.item);
  return pairs;
}

PropagationMode parse_mode(const std::string& mode) {
  if (mode == "dpaa") return PropagationMode::dpaa;
  if (mode == "lightgcn") return PropagationMode::lightgcn;
  throw std::invalid_argument("mode must be 'dpaa' or 'lightgcn'");
}

ModelConfig make_model_config(Index dim, Index num_layers, const std::string& mode,
                              double C, double eta, int gamma, double delta) {
  ModelConfig config;
  config.dim = dim;
  config.num_layers = num_layers;
  config.mode = parse_mode(mode);
  config.plan = WeightPlan::make(C, eta, gamma, delta, num_layers);
  return config;
}

TrainConfig make_train_config(double lr, Index batch, Index epochs, Index patience,
                              double rho, Index k, std::uint64_t seed) {
  TrainConfig tc;
  tc.learning_rate = lr;
  tc.batch_size = batch;
  tc.max_epochs = epochs;
  tc.patience = patience;
  tc.reg_coefficient = rho;
  tc.eval_k = k;
  tc.seed = seed;
  return tc;
}

py::dict report_to_dict(const EvalReport& report) {
  py::dict out;
  out["k"] = report.k;
  const GroupMetrics* groups[3] = {&report.all, &report.popular, &report.niche};
  const char* names[3] = {"all", "popular", "niche"};
  for (int g = 0; g < 3; ++g) {
    py::dict m;
    m["recall"] = groups[g]->recall;
    m["ndcg"] = groups[g]->ndcg;
    m["hr"] = groups[g]->hr;
    m["num_users"] = groups[g]->num_users;
    out[names[g]] = m;
  }
  return out;
}

Dataset make_dataset(const std::vector<std::pair<Index, Index>>& train,
                     const std::vector<std::pair<Index, Index>>& validation,
                     const std::vector<std::pair<Index, Index>>& test) {
  Dataset d;
  d.train = to_interactions(train);
  d.validation = to_interactions(validation);
  d.test = to_interactions(test);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Popularity-debiased message passing for graph collaborative filtering";

  py::class_<InteractionGraph>(m, "InteractionGraph")
      .def_property_readonly("num_users", &InteractionGraph::num_users)
      .def_property_readonly("num_items", &InteractionGraph::num_items)
      .def_property_readonly("edge_count", &InteractionGraph::edge_count)
      .def("degree_user", &InteractionGraph::degree_user, py::arg("user"))
      .def("degree_item", &InteractionGraph::degree_item, py::arg("item"))
      .def("items_of",
           [](const InteractionGraph& g, Index u) {
             const auto span = g.items_of(u);
             return std::vector<Index>(span.begin(), span.end());
           },
           py::arg("user"))
      .def("users_of",
           [](const InteractionGraph& g, Index i) {
             const auto span = g.users_of(i);
             return std::vector<Index>(span.begin(), span.end());
           },
           py::arg("item"))
      .def("has_edge", &InteractionGraph::has_edge, py::arg("user"), py::arg("item"))
      .def("edge_index", &InteractionGraph::edge_index, py::arg("user"), py::arg("item"));

  m.def(
      "build_graph",
      [](const std::vector<std::pair<Index, Index>>& interactions, Index num_users,
         Index num_items) {
        return build_graph(to_interactions(interactions), num_users, num_items);
      },
      py::arg("interactions"), py::arg("num_users"), py::arg("num_items"));

  py::class_<PopularitySplit>(m, "PopularitySplit")
      .def_readonly("popular", &PopularitySplit::popular)
      .def_readonly("niche", &PopularitySplit::niche)
      .def_readonly("coverage", &PopularitySplit::coverage)
      .def("is_popular", &PopularitySplit::is_popular, py::arg("item"));

  m.def(
      "popularity_split",
      [](const InteractionGraph& graph, const std::vector<std::pair<Index, Index>>& train,
         double threshold) {
        return popularity_split(graph, to_interactions(train), threshold);
      },
      py::arg("graph"), py::arg("train"), py::arg("threshold") = 0.8);

  m.def(
      "zipf_probabilities",
      [](Index num_items, double severity) {
        return zipf_probabilities(num_items, severity).probabilities;
      },
      py::arg("num_items"), py::arg("severity"));

  m.def(
      "split_pool",
      [](const std::vector<std::pair<Index, Index>>& pool, double validation_fraction,
         double test_fraction, double pool_fraction, std::uint64_t seed) {
        SplitSpec spec{validation_fraction, test_fraction, pool_fraction, seed};
        const auto s = split_pool(to_interactions(pool), spec);
        return py::make_tuple(to_pairs(s.validation), to_pairs(s.test), to_pairs(s.pool));
      },
      py::arg("pool"), py::arg("validation_fraction") = 0.1, py::arg("test_fraction") = 0.2,
      py::arg("pool_fraction") = 0.7, py::arg("seed") = 0);

  m.def(
      "generate_biased_training",
      [](const std::vector<std::pair<Index, Index>>& pool, double severity,
         std::uint64_t seed, Index interactions_per_user) {
        return to_pairs(
            generate_biased_training(to_interactions(pool), severity, seed,
                                     interactions_per_user));
      },
      py::arg("pool"), py::arg("severity"), py::arg("seed"),
      py::arg("interactions_per_user") = 0);

  m.def("inverse_interaction_weight", &inverse_interaction_weight, py::arg("e_u"),
        py::arg("e_i"));
  m.def("stability_beta", &stability_beta, py::arg("delta_t"), py::arg("C"));
  m.def("blend_iiw", &blend_iiw, py::arg("r_pretrained"), py::arg("r_current"),
        py::arg("beta_t"));
  m.def("layer_weights", &layer_weights, py::arg("num_layers"), py::arg("eta"));
  m.def("embedding_delta", &embedding_delta, py::arg("prev_layer0"), py::arg("curr_layer0"));
  m.def("lemma1_reduction", &lemma1_reduction, py::arg("d_p"), py::arg("d_q"),
        py::arg("norm_p"), py::arg("norm_q"), py::arg("rbar_p"), py::arg("rbar_q"));

  m.def(
      "init_embeddings",
      [](Index num_users, Index num_items, Index dim, std::uint64_t seed) {
        return init_embeddings(num_users, num_items, dim, seed).values;
      },
      py::arg("num_users"), py::arg("num_items"), py::arg("dim"), py::arg("seed") = 1);

  m.def(
      "propagate_lightgcn",
      [](const InteractionGraph& graph, const Matrix& table, Index num_layers) {
        EmbeddingTable t{table, graph.num_users(), graph.num_items()};
        return propagate_lightgcn(graph, t, num_layers).layers;
      },
      py::arg("graph"), py::arg("table"), py::arg("num_layers"));

  m.def(
      "propagate_dpaa",
      [](const InteractionGraph& graph, const Matrix& table,
         const std::vector<std::vector<float>>& cache_layers, double C, double eta,
         int gamma, double delta, Index num_layers, double beta_t) {
        EmbeddingTable t{table, graph.num_users(), graph.num_items()};
        std::vector<Index> layer_ids;
        for (Index l = 0; l < static_cast<Index>(cache_layers.size()); ++l) {
          layer_ids.push_back(l);
        }
        PretrainedIIWCache cache(graph.edge_count(), layer_ids);
        for (std::size_t l = 0; l < cache_layers.size(); ++l) {
          if (static_cast<Index>(cache_layers[l].size()) != graph.edge_count()) {
            throw std::invalid_argument("cache layer size must equal edge_count");
          }
          for (Index e = 0; e < graph.edge_count(); ++e) {
            cache.set(static_cast<Index>(l), e, cache_layers[l][static_cast<std::size_t>(e)]);
          }
        }
        const auto plan = WeightPlan::make(C, eta, gamma, delta, num_layers);
        return propagate_dpaa(graph, t, plan, cache, beta_t).layers;
      },
      py::arg("graph"), py::arg("table"), py::arg("cache_layers"), py::arg("C"),
      py::arg("eta"), py::arg("gamma"), py::arg("delta"), py::arg("num_layers"),
      py::arg("beta_t"));

  m.def(
      "readout",
      [](const std::vector<Matrix>& layers, Index num_users, Index num_items) {
        LayerStack stack;
        stack.layers = layers;
        stack.num_users = num_users;
        stack.num_items = num_items;
        return readout(stack).values;
      },
      py::arg("layers"), py::arg("num_users"), py::arg("num_items"));

  m.def(
      "score",
      [](const Matrix& final_values, Index num_users, Index user, Index item) {
        return final_values.row(user).dot(final_values.row(num_users + item));
      },
      py::arg("final"), py::arg("num_users"), py::arg("user"), py::arg("item"));

  m.def(
      "pretrain_base",
      [](const std::vector<std::pair<Index, Index>>& train,
         const std::vector<std::pair<Index, Index>>& validation, Index num_users,
         Index num_items, Index dim, Index num_layers, int gamma, double lr, Index batch,
         Index epochs, Index patience, double rho, Index k, std::uint64_t seed) {
        Dataset dataset = make_dataset(train, validation, validation);
        const auto graph = build_graph(dataset.train, num_users, num_items);
        const auto config =
            make_model_config(dim, num_layers, "dpaa", 0.0, 0.0, gamma, 0.0);
        const auto tc = make_train_config(lr, batch, epochs, patience, rho, k, seed);
        auto [ckpt, cache] = pretrain_base(graph, dataset, config, tc);
        std::vector<std::vector<float>> cache_layers;
        for (const Index l : cache.layers()) {
          std::vector<float> values(static_cast<std::size_t>(cache.edge_count()));
          for (Index e = 0; e < cache.edge_count(); ++e) {
            values[static_cast<std::size_t>(e)] = cache.value(l, e);
          }
          cache_layers.push_back(std::move(values));
        }
        return py::make_tuple(ckpt.table.values, cache_layers);
      },
      py::arg("train"), py::arg("validation"), py::arg("num_users"), py::arg("num_items"),
      py::arg("dim") = 64, py::arg("num_layers") = 2, py::arg("gamma") = 1,
      py::arg("lr") = 1e-3, py::arg("batch") = 2048, py::arg("epochs") = 1000,
      py::arg("patience") = 50, py::arg("rho") = 1e-4, py::arg("k") = 20,
      py::arg("seed") = 1);

  m.def(
      "fit",
      [](const std::vector<std::pair<Index, Index>>& train,
         const std::vector<std::pair<Index, Index>>& validation,
         const std::vector<std::pair<Index, Index>>& test, Index num_users, Index num_items,
         const std::string& mode, const std::vector<std::vector<float>>& cache_layers,
         Index dim, Index num_layers, double C, double eta, int gamma, double delta,
         double lr, Index batch, Index epochs, Index patience, double rho, Index k,
         std::uint64_t seed) {
        Dataset dataset = make_dataset(train, validation, test);
        const auto graph = build_graph(dataset.train, num_users, num_items);
        const auto config = make_model_config(dim, num_layers, mode, C, eta, gamma, delta);
        const auto tc = make_train_config(lr, batch, epochs, patience, rho, k, seed);

        PretrainedIIWCache cache;
        if (config.mode == PropagationMode::dpaa) {
          std::vector<Index> layer_ids;
          for (Index l = 0; l < static_cast<Index>(cache_layers.size()); ++l) {
            layer_ids.push_back(l);
          }
          cache = PretrainedIIWCache(graph.edge_count(), layer_ids);
          for (std::size_t l = 0; l < cache_layers.size(); ++l) {
            for (Index e = 0; e < graph.edge_count(); ++e) {
              cache.set(static_cast<Index>(l), e,
                        cache_layers[l][static_cast<std::size_t>(e)]);
            }
          }
        }
        const auto result =
            fit(graph, dataset, config, tc,
                config.mode == PropagationMode::dpaa ? &cache : nullptr);

        py::list log;
        for (const auto& row : result.log) {
          py::dict r;
          r["epoch"] = row.epoch;
          r["loss"] = row.loss;
          r["delta_t"] = row.delta_t;
          r["beta_t"] = row.beta_t;
          r["val_recall"] = row.val_recall;
          log.append(r);
        }
        py::dict out;
        out["table"] = result.best.table.values;
        out["beta_t"] = result.best.beta_t;
        out["best_epoch"] = result.best_epoch;
        out["best_val_recall"] = result.best_val_recall;
        out["log"] = log;
        return out;
      },
      py::arg("train"), py::arg("validation"), py::arg("test"), py::arg("num_users"),
      py::arg("num_items"), py::arg("mode") = "dpaa",
      py::arg("cache_layers") = std::vector<std::vector<float>>{}, py::arg("dim") = 64,
      py::arg("num_layers") = 2, py::arg("C") = 1e-4, py::arg("eta") = 2.0,
      py::arg("gamma") = 1, py::arg("delta") = 0.2, py::arg("lr") = 1e-3,
      py::arg("batch") = 2048, py::arg("epochs") = 1000, py::arg("patience") = 50,
      py::arg("rho") = 1e-4, py::arg("k") = 20, py::arg("seed") = 1);

  m.def(
      "evaluate",
      [](const Matrix& final_values, const std::vector<std::pair<Index, Index>>& train,
         const std::vector<std::pair<Index, Index>>& test, Index num_users, Index num_items,
         Index k, double popular_threshold,
         const std::optional<std::vector<Index>>& restriction) {
        const auto train_xs = to_interactions(train);
        const auto graph = build_graph(train_xs, num_users, num_items);
        const auto task = make_ranking_task(graph, to_interactions(test), restriction);
        const auto split = popularity_split(graph, train_xs, popular_threshold);
        FinalEmbeddings fe{final_values, num_users, num_items};
        return report_to_dict(evaluate(fe, task, split, k));
      },
      py::arg("final"), py::arg("train"), py::arg("test"), py::arg("num_users"),
      py::arg("num_items"), py::arg("k") = 20, py::arg("popular_threshold") = 0.8,
      py::arg("restriction") = std::nullopt);

  m.def(
      "rank_topk",
      [](const Matrix& final_values, const std::vector<std::pair<Index, Index>>& train,
         Index num_users, Index num_items, Index user, Index k,
         const std::optional<std::vector<Index>>& restriction) {
        const auto graph = build_graph(to_interactions(train), num_users, num_items);
        const auto task = make_ranking_task(graph, {}, restriction);
        FinalEmbeddings fe{final_values, num_users, num_items};
        return rank_topk(fe, task, user, k);
      },
      py::arg("final"), py::arg("train"), py::arg("num_users"), py::arg("num_items"),
      py::arg("user"), py::arg("k"), py::arg("restriction") = std::nullopt);
}
