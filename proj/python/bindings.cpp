#include "spcr/dimension.hpp"
#include "spcr/error.hpp"
#include "spcr/io.hpp"
#include "spcr/pcr.hpp"
#include "spcr/ranking.hpp"
#include "spcr/simgen.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace spcr;

namespace {

Scheme parse_scheme(const std::string& s) {
  if (s == "b1") return Scheme::B1;
  if (s == "b2") return Scheme::B2;
  if (s == "bair") return Scheme::Bair;
  if (s == "natural") return Scheme::Natural;
  fail(ErrorKind::InvalidArgument, "scheme must be b1, b2, bair or natural");
}

Method method_or_throw(const std::string& tag) {
  if (auto m = parse_method(tag)) return *m;
  fail(ErrorKind::InvalidArgument, "unknown method '" + tag + "'");
}

DimensionOptions selector(std::uint64_t seed, int restarts, int max_iter) {
  DimensionOptions d;
  d.kurtosis.seed = seed;
  d.kurtosis.n_restarts = restarts;
  d.kurtosis.max_iter = max_iter;
  return d;
}

}  // namespace

PYBIND11_MODULE(_spcr, m) {
  m.doc() = "Supervised principal-component regression with kurtosis-based dimension selection";

  // Messages start with the error kind, e.g. "NoAssociation: ...".
  py::register_exception<Error>(m, "SpcrError", PyExc_ValueError);

  py::class_<RankingResult>(m, "Ranking")
      .def_property_readonly("scheme", [](const RankingResult& r) { return std::string(to_string(r.scheme)); })
      .def_readonly("scores", &RankingResult::scores)
      .def_readonly("order", &RankingResult::order);

  m.def(
      "rank",
      [](const Matrix& x, const Matrix& y, const std::string& scheme) {
        return rank_with_scheme(center_columns(x), center_columns(y), parse_scheme(scheme));
      },
      py::arg("x"), py::arg("y"), py::arg("scheme") = "b1",
      "Rank the columns of x by their association with y. Order is 0-based.");

  m.def(
      "tau_prerank",
      [](const Matrix& x, const Matrix& y, Index n_blocks, Index block_size, Index keep, const std::string& scheme) {
        TauRankConfig cfg{n_blocks, block_size, keep, parse_scheme(scheme), std::nullopt};
        return tau_prerank(center_columns(x), center_columns(y), cfg).subset.indices;
      },
      py::arg("x"), py::arg("y"), py::arg("n_blocks") = 5, py::arg("block_size") = 5000, py::arg("keep") = 200,
      py::arg("scheme") = "b1", "Column indices kept by the block-wise preliminary ranking.");

  py::class_<DimensionSelection>(m, "DimensionSelection")
      .def_readonly("chosen_h", &DimensionSelection::chosen_h)
      .def_readonly("argmax_k", &DimensionSelection::argmax_k)
      .def_readonly("k_max", &DimensionSelection::k_max)
      .def_readonly("scores", &DimensionSelection::scores)
      .def_readonly("beta_hats", &DimensionSelection::beta_hats)
      .def_readonly("converged", &DimensionSelection::converged);

  m.def(
      "select_dimension",
      [](const Matrix& x_m, std::uint64_t seed, int restarts, int max_iter) {
        return select_dimension(center_columns(x_m), selector(seed, restarts, max_iter));
      },
      py::arg("x_m"), py::arg("seed") = 0, py::arg("restarts") = 10, py::arg("max_iter") = 200);

  m.def("ub_k", py::overload_cast<int>(&ub_k), py::arg("k"));

  m.def(
      "kurtosis_max",
      [](const Matrix& data, std::uint64_t seed) {
        KurtosisOptions ko;
        ko.seed = seed;
        const KurtosisResult r = maximize_kurtosis(data, ko);
        return py::make_tuple(r.beta_hat, r.alpha, r.converged);
      },
      py::arg("data"), py::arg("seed") = 0, "(beta_hat, alpha, converged) for sphered data.");

  py::class_<PcrModel>(m, "Model")
      .def_readonly("m", &PcrModel::m)
      .def_readonly("h", &PcrModel::h)
      .def_readonly("selected", &PcrModel::selected_indices)
      .def_readonly("loadings", &PcrModel::loadings)
      .def_readonly("coefficients", &PcrModel::coefficients)
      .def("predict", [](const PcrModel& model, const Matrix& z) { return predict(model, z); }, py::arg("z"))
      .def("to_json", [](const PcrModel& model) {
        std::vector<std::string> x_names;
        for (Index j = 0; j < model.n_predictors(); ++j) x_names.push_back("x" + std::to_string(j + 1));
        std::vector<std::string> y_names;
        for (Index j = 0; j < model.n_responses(); ++j) y_names.push_back("y" + std::to_string(j + 1));
        return serialize_model(ModelFile{model, x_names, y_names, "", 0});
      });

  m.def("model_from_json", [](const std::string& text) { return deserialize_model(text).model; }, py::arg("text"));

  m.def(
      "fit",
      [](const Matrix& x, const Matrix& y, Index m_, const std::string& method, std::optional<Index> h,
         std::uint64_t seed) {
        const Method meth = method_or_throw(method);
        const CenteredMatrix xc = center_columns(x);
        const RankingResult r = method_ranking(meth, xc, center_columns(y));
        ComponentPolicy policy = meth == Method::BhptPc1 ? ComponentPolicy::exactly(1)
                                 : h                     ? ComponentPolicy::exactly(*h)
                                                         : ComponentPolicy::automatic(selector(seed, 10, 200));
        return fit(xc, y, r, m_, policy).model;
      },
      py::arg("x"), py::arg("y"), py::arg("m"), py::arg("method") = "knb1-pcH", py::arg("h") = py::none(),
      py::arg("seed") = 0);

  m.def(
      "sweep",
      [](const Matrix& x, const Matrix& y, const std::vector<std::string>& methods, Index m_min, Index m_max,
         std::uint64_t seed) {
        SweepOptions so;
        for (const auto& tag : methods) so.methods.push_back(method_or_throw(tag));
        so.m_min = m_min;
        so.m_max = m_max;
        so.seed = seed;
        const SweepResult r = sweep(center_columns(x), y, so);
        py::list rows;
        for (const SweepRow& row : r.rows)
          rows.append(py::dict(py::arg("method") = std::string(to_string(row.method)), py::arg("m") = row.m,
                               py::arg("h") = row.chosen_h, py::arg("lse") = row.lse));
        return rows;
      },
      py::arg("x"), py::arg("y"), py::arg("methods"), py::arg("m_min"), py::arg("m_max"), py::arg("seed") = 0,
      "In-sample LSE for every (method, m); returns a list of dicts.");

  m.def("lse", &lse, py::arg("y_hat"), py::arg("y"));

  m.def(
      "simulate_example",
      [](const std::string& id, std::uint64_t seed) {
        if (id != "5.1.1" && id != "5.1.2") fail(ErrorKind::InvalidArgument, "example must be 5.1.1 or 5.1.2");
        const SimulatedDataset ds = id == "5.1.1" ? example_5_1_1(seed) : example_5_1_2(seed);
        return py::make_tuple(ds.x_raw, ds.y_raw);
      },
      py::arg("example"), py::arg("seed") = 0, "(x, y) for one replicate of a simulated example.");
}
