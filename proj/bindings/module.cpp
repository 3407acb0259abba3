#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "coldrec/cmf.hpp"
#include "coldrec/eval.hpp"
#include "coldrec/metrics.hpp"
#include "coldrec/offsets.hpp"
#include "coldrec/pca.hpp"
#include "coldrec/pipeline.hpp"
#include "coldrec/serialize.hpp"
#include "coldrec/split.hpp"

namespace py = pybind11;
using namespace coldrec;

namespace {

RatingsMatrix make_ratings(int n_users, int n_items,
                           const std::vector<std::tuple<int, int, double>>& triplets) {
  std::vector<Rating> entries;
  entries.reserve(triplets.size());
  for (const auto& [u, i, v] : triplets) entries.push_back({u, i, v});
  return RatingsMatrix(n_users, n_items, std::move(entries));
}

SideInfoMatrix make_side_info(Matrix values, const std::vector<std::string>& kinds,
                              const std::vector<bool>& present) {
  SideInfoMatrix info;
  if (!present.empty() && present.size() != static_cast<std::size_t>(values.rows()))
    throw DataError("row_present length must match rows");
  info.row_present.assign(static_cast<std::size_t>(values.rows()), 1);
  for (std::size_t r = 0; r < present.size(); ++r) info.row_present[r] = present[r] ? 1 : 0;
  info.values = std::move(values);
  for (const std::string& k : kinds) {
    if (k == "binary") info.column_kinds.push_back(ColumnKind::Binary);
    else if (k == "continuous") info.column_kinds.push_back(ColumnKind::Continuous);
    else throw DataError("column kind must be 'binary' or 'continuous'");
  }
  info.validate();
  return info;
}

}  // namespace

PYBIND11_MODULE(_coldrec, m) {
  m.doc() = "Collective matrix factorization and offsets models with cold-start prediction";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<RatingsMatrix>(m, "RatingsMatrix")
      .def(py::init(&make_ratings), py::arg("n_users"), py::arg("n_items"),
           py::arg("triplets"))
      .def_property_readonly("n_users", &RatingsMatrix::n_users)
      .def_property_readonly("n_items", &RatingsMatrix::n_items)
      .def_property_readonly("n_entries", &RatingsMatrix::n_entries)
      .def("triplets", [](const RatingsMatrix& r) {
        std::vector<std::tuple<int, int, double>> out;
        out.reserve(r.n_entries());
        for (const Rating& e : r.entries()) out.emplace_back(e.user, e.item, e.value);
        return out;
      });

  py::class_<SideInfoMatrix>(m, "SideInfoMatrix")
      .def(py::init(&make_side_info), py::arg("values"), py::arg("column_kinds"),
           py::arg("row_present") = std::vector<bool>{})
      .def_readonly("values", &SideInfoMatrix::values)
      .def_property_readonly("n_rows", &SideInfoMatrix::n_rows)
      .def_property_readonly("n_cols", &SideInfoMatrix::n_cols);

  py::class_<FactorPartition>(m, "FactorPartition")
      .def(py::init([](int k_attr, int k_shared, int k_main) {
             return FactorPartition{k_attr, k_shared, k_main};
           }),
           py::arg("k_attr") = 0, py::arg("k_shared") = 0, py::arg("k_main") = 0)
      .def_readwrite("k_attr", &FactorPartition::k_attr)
      .def_readwrite("k_shared", &FactorPartition::k_shared)
      .def_readwrite("k_main", &FactorPartition::k_main)
      .def_property_readonly("k_total", &FactorPartition::k_total);

  py::class_<Regularization>(m, "Regularization")
      .def(py::init([](double base) {
             Regularization r;
             r.base = base;
             return r;
           }),
           py::arg("base") = 1e-4)
      .def_readwrite("base", &Regularization::base)
      .def_readwrite("user_factors", &Regularization::user_factors)
      .def_readwrite("item_factors", &Regularization::item_factors)
      .def_readwrite("user_attr_factors", &Regularization::user_attr_factors)
      .def_readwrite("item_attr_factors", &Regularization::item_attr_factors)
      .def_readwrite("user_bias", &Regularization::user_bias)
      .def_readwrite("item_bias", &Regularization::item_bias);

  py::class_<CmfHyperparams>(m, "CmfHyperparams")
      .def(py::init([](double lam, double w_x, double w_u, double w_i, FactorPartition part) {
             CmfHyperparams h;
             h.reg.base = lam;
             h.w_ratings = w_x;
             h.w_user_info = w_u;
             h.w_item_info = w_i;
             h.partition = part;
             return h;
           }),
           py::arg("lambda_") = 1e-4, py::arg("w_ratings") = 1.0, py::arg("w_user_info") = 1.0,
           py::arg("w_item_info") = 1.0, py::arg("partition") = FactorPartition{0, 10, 0})
      .def_readwrite("reg", &CmfHyperparams::reg)
      .def_readwrite("w_ratings", &CmfHyperparams::w_ratings)
      .def_readwrite("w_user_info", &CmfHyperparams::w_user_info)
      .def_readwrite("w_item_info", &CmfHyperparams::w_item_info)
      .def_readwrite("partition", &CmfHyperparams::partition);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init([](int memory_pairs, int max_iterations, double gradient_tolerance,
                       double relative_objective_tolerance) {
             return SolverConfig{memory_pairs, max_iterations, gradient_tolerance,
                                 relative_objective_tolerance};
           }),
           py::arg("memory_pairs") = 10, py::arg("max_iterations") = 800,
           py::arg("gradient_tolerance") = 1e-5,
           py::arg("relative_objective_tolerance") = 1e-9)
      .def_readwrite("memory_pairs", &SolverConfig::memory_pairs)
      .def_readwrite("max_iterations", &SolverConfig::max_iterations)
      .def_readwrite("gradient_tolerance", &SolverConfig::gradient_tolerance)
      .def_readwrite("relative_objective_tolerance", &SolverConfig::relative_objective_tolerance);

  py::class_<CmfModel>(m, "CmfModel")
      .def_readonly("user_factors", &CmfModel::user_factors)
      .def_readonly("item_factors", &CmfModel::item_factors)
      .def_readonly("user_attr_factors", &CmfModel::user_attr_factors)
      .def_readonly("item_attr_factors", &CmfModel::item_attr_factors)
      .def_readonly("user_bias", &CmfModel::user_bias)
      .def_readonly("item_bias", &CmfModel::item_bias)
      .def_readonly("global_mean", &CmfModel::global_mean)
      .def_readonly("partition", &CmfModel::partition)
      .def("predict", &cmf_predict_warm, py::arg("user"), py::arg("item"))
      .def("cold_start_user_factors",
           [](const CmfModel& model, const Vector& attrs, std::optional<double> lam) {
             return cold_start_user_factors(attrs, model, lam);
           },
           py::arg("user_attrs"), py::arg("lambda_") = std::nullopt)
      .def("cold_start_item_factors",
           [](const CmfModel& model, const Vector& attrs, std::optional<double> lam) {
             return cold_start_item_factors(attrs, model, lam);
           },
           py::arg("item_attrs"), py::arg("lambda_") = std::nullopt)
      .def("fold_in_user",
           [](const CmfModel& model, const Vector& attrs) { return fold_in_user(model, attrs); },
           py::arg("user_attrs"))
      .def("fold_in_item",
           [](const CmfModel& model, const Vector& attrs) { return fold_in_item(model, attrs); },
           py::arg("item_attrs"));

  py::class_<OffsetsModel>(m, "OffsetsModel")
      .def_readonly("user_offsets", &OffsetsModel::user_offsets)
      .def_readonly("item_offsets", &OffsetsModel::item_offsets)
      .def_readonly("user_attr_map", &OffsetsModel::user_attr_map)
      .def_readonly("item_attr_map", &OffsetsModel::item_attr_map)
      .def_readonly("user_bias", &OffsetsModel::user_bias)
      .def_readonly("item_bias", &OffsetsModel::item_bias)
      .def_readonly("global_mean", &OffsetsModel::global_mean)
      .def("user_vector",
           [](const OffsetsModel& model, const Vector& attrs) {
             return offsets_user_vector(attrs, model);
           },
           py::arg("user_attrs"))
      .def("predict_new_user",
           [](const OffsetsModel& model, const Vector& attrs,
              std::optional<std::vector<int>> items) {
             return offsets_predict_new_user(attrs, model, items ? &*items : nullptr);
           },
           py::arg("user_attrs"), py::arg("item_subset") = std::nullopt)
      .def("predict",
           [](const OffsetsModel& model, int user, int item) {
             return offsets_predict(model, EntityRef::known(user), EntityRef::known(item));
           },
           py::arg("user"), py::arg("item"))
      .def("predict_cold",
           [](const OffsetsModel& model, std::optional<Vector> user_attrs,
              std::optional<Vector> item_attrs) {
             const EntityRef u = user_attrs ? EntityRef::from_attrs(*user_attrs)
                                            : EntityRef::cold();
             const EntityRef i = item_attrs ? EntityRef::from_attrs(*item_attrs)
                                            : EntityRef::cold();
             return offsets_predict(model, u, i);
           },
           py::arg("user_attrs") = std::nullopt, py::arg("item_attrs") = std::nullopt);

  m.def("als_fit",
        [](const RatingsMatrix& x, const SideInfoMatrix* u, const SideInfoMatrix* i,
           const CmfHyperparams& hyper, int sweeps, std::uint64_t seed) {
          CmfFitResult fit = als_fit(x, u, i, hyper, sweeps, seed);
          return py::make_tuple(std::move(fit.model), fit.objective_trace);
        },
        py::arg("ratings"), py::arg("user_info") = nullptr, py::arg("item_info") = nullptr,
        py::arg("hyper") = CmfHyperparams{}, py::arg("sweeps") = 30, py::arg("seed") = 0);

  m.def("lbfgs_fit",
        [](const RatingsMatrix& x, const SideInfoMatrix* u, const SideInfoMatrix* i,
           const CmfHyperparams& hyper, const SolverConfig& solver, std::uint64_t seed) {
          CmfFitResult fit = lbfgs_fit(x, u, i, hyper, solver, seed);
          return py::make_tuple(std::move(fit.model), fit.objective_trace);
        },
        py::arg("ratings"), py::arg("user_info") = nullptr, py::arg("item_info") = nullptr,
        py::arg("hyper") = CmfHyperparams{}, py::arg("solver") = SolverConfig{},
        py::arg("seed") = 0);

  m.def("offsets_fit",
        [](const RatingsMatrix& x, const SideInfoMatrix* u, const SideInfoMatrix* i,
           double lambda, const SolverConfig& solver, std::uint64_t seed, int k) {
          OffsetsPenalty penalty;
          penalty.lambda = lambda;
          OffsetsFitResult fit = offsets_fit(x, u, i, penalty, solver, seed, k);
          return py::make_tuple(std::move(fit.model), fit.objective_trace);
        },
        py::arg("ratings"), py::arg("user_info") = nullptr, py::arg("item_info") = nullptr,
        py::arg("lambda_") = 1e-4, py::arg("solver") = SolverConfig{}, py::arg("seed") = 0,
        py::arg("k") = 10);

  m.def("offsets_two_stage_fit",
        [](const RatingsMatrix& x, const SideInfoMatrix* u, const SideInfoMatrix* i,
           double lambda, const SolverConfig& solver, std::uint64_t seed, int k) {
          OffsetsPenalty penalty;
          penalty.lambda = lambda;
          OffsetsFitResult fit = offsets_two_stage_fit(x, u, i, penalty, solver, seed, k);
          return py::make_tuple(std::move(fit.model), fit.objective_trace);
        },
        py::arg("ratings"), py::arg("user_info") = nullptr, py::arg("item_info") = nullptr,
        py::arg("lambda_") = 1e-4, py::arg("solver") = SolverConfig{}, py::arg("seed") = 0,
        py::arg("k") = 10);

  m.def("lbfgs_minimize",
        [](const std::function<std::pair<double, Vector>(const Vector&)>& objective, Vector x0,
           const SolverConfig& config) {
          const Objective wrapped = [&](const Vector& x) {
            auto [value, gradient] = objective(x);
            return ObjectiveEvaluation{value, std::move(gradient)};
          };
          SolverResult result = lbfgs_minimize(wrapped, std::move(x0), config);
          return py::make_tuple(result.x, result.value, result.trace,
                                to_string(result.reason));
        },
        py::arg("objective"), py::arg("x0"), py::arg("config") = SolverConfig{});

  m.def("finite_difference_gradient",
        [](const std::function<double(const Vector&)>& f, const Vector& x, double step) {
          return finite_difference_gradient(f, x, step);
        },
        py::arg("value_fn"), py::arg("x"), py::arg("step") = 1e-6);

  m.def("sigmoid_transform", [](double x, const std::string& kind) {
    return sigmoid_transform(x, kind == "binary" ? ColumnKind::Binary
                                                 : ColumnKind::Continuous);
  });

  m.def("rmse", &rmse, py::arg("predictions"), py::arg("actuals"));
  m.def("dcg_at_k", &dcg_at_k, py::arg("ranked_ratings"), py::arg("k"));
  m.def("ndcg_at_k",
        [](const std::vector<double>& scores, const std::vector<double>& ratings, int k) {
          return ndcg_at_k(scores, ratings, k);
        },
        py::arg("predicted_scores"), py::arg("actual_ratings"), py::arg("k"));

  m.def("pca_reduce",
        [](const SideInfoMatrix& input, int n_components) {
          PcaResult r = pca_reduce(input, n_components);
          return py::make_tuple(r.reduced.values, r.transform.column_means,
                                r.transform.basis, r.transform.explained_variance);
        },
        py::arg("side_info"), py::arg("n_components"));

  m.def("save_model",
        [](const CmfModel& model, const std::string& path) {
          save_model_file(AnyModel(model), path);
        },
        py::arg("model"), py::arg("path"));
  m.def("save_model",
        [](const OffsetsModel& model, const std::string& path) {
          save_model_file(AnyModel(model), path);
        },
        py::arg("model"), py::arg("path"));
  m.def("load_model", [](const std::string& path) -> py::object {
    AnyModel any = load_model_file(path);
    if (CmfModel* cmf = std::get_if<CmfModel>(&any)) return py::cast(std::move(*cmf));
    return py::cast(std::move(std::get<OffsetsModel>(any)));
  });

  m.attr("__version__") = "0.1.0";
}
