#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "autm/checkpoint.hpp"
#include "autm/dataset.hpp"
#include "autm/error.hpp"
#include "autm/flow.hpp"
#include "autm/gradcheck.hpp"
#include "autm/invbench.hpp"
#include "autm/map.hpp"
#include "autm/training.hpp"
#include "autm/universality.hpp"
#include "autm/version.hpp"

namespace py = pybind11;
using namespace autm;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<double> to_numpy(const Matrix& m) {
  py::array_t<double> out({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

py::array_t<double> to_numpy(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

std::span<const double> to_span(const Array& a) {
  if (a.ndim() != 1) throw DimensionError("expected a 1-D array");
  return {a.data(), static_cast<std::size_t>(a.size())};
}

template <class T>
T from_name(const py::object& o, T (*parse)(std::string_view)) {
  if (py::isinstance<py::str>(o)) return parse(o.cast<std::string>());
  return o.cast<T>();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "AUTM monotone maps, flows and experiments";
  m.attr("__version__") = AUTM_VERSION;

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", numerical.ptr());
  py::register_exception<BatchError>(m, "BatchError", numerical.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", error.ptr());

  py::enum_<Family>(m, "Family")
      .value("Quadratic", Family::Quadratic)
      .value("Cubic", Family::Cubic)
      .value("SigmoidAffine", Family::SigmoidAffine)
      .value("Custom", Family::Custom);
  py::enum_<Scheme>(m, "Scheme").value("RK4", Scheme::RK4).value("Euler", Scheme::Euler);
  py::enum_<Direction>(m, "Direction").value("Forward", Direction::Forward).value("Reverse", Direction::Reverse);
  py::enum_<RefineMethod>(m, "RefineMethod")
      .value("Bisection", RefineMethod::Bisection)
      .value("FixedPoint", RefineMethod::FixedPoint)
      .value("ReverseIntegrationOnly", RefineMethod::ReverseIntegrationOnly);
  py::enum_<LayerKind>(m, "LayerKind")
      .value("Coupling", LayerKind::Coupling)
      .value("Autoregressive", LayerKind::Autoregressive);
  py::enum_<Activation>(m, "Activation").value("Tanh", Activation::Tanh).value("ReLU", Activation::ReLU);
  py::enum_<DensityPath>(m, "DensityPath")
      .value("Refined", DensityPath::Refined)
      .value("ReverseIntegration", DensityPath::ReverseIntegration);
  py::enum_<KernelKind>(m, "KernelKind")
      .value("Constant", KernelKind::Constant)
      .value("GaussianNormalized", KernelKind::GaussianNormalized);
  py::enum_<Toy>(m, "Toy")
      .value("TwoMoons", Toy::TwoMoons)
      .value("Rings", Toy::Rings)
      .value("Checkerboard", Toy::Checkerboard)
      .value("TwoGaussians", Toy::TwoGaussians);

  // Scalar maps.
  py::class_<Integrand>(m, "Integrand")
      .def(py::init([](const py::object& family, double a, double b, double c) {
             return Integrand(from_name<Family>(family, parse_family), {a, b, c});
           }),
           py::arg("family"), py::arg("a") = 0.0, py::arg("b") = 0.0, py::arg("c") = 0.0)
      .def_static("quadratic", &Integrand::quadratic, py::arg("a"), py::arg("b"), py::arg("c"))
      .def_static("cubic", &Integrand::cubic, py::arg("a"), py::arg("b"), py::arg("c"))
      .def_static("sigmoid_affine", &Integrand::sigmoid_affine, py::arg("a"), py::arg("b"), py::arg("c"))
      .def_property_readonly("family", &Integrand::family)
      .def_property_readonly("coeffs", [](const Integrand& g) {
        return py::make_tuple(g.coeffs().a, g.coeffs().b, g.coeffs().c);
      })
      .def("value", &eval_integrand, py::arg("v"), py::arg("t") = 0.0)
      .def("dv", &eval_integrand_dv, py::arg("v"), py::arg("t") = 0.0)
      .def("__repr__", [](const Integrand& g) {
        return "Integrand(" + std::string(to_string(g.family())) + ", " + std::to_string(g.coeffs().a) + ", " +
               std::to_string(g.coeffs().b) + ", " + std::to_string(g.coeffs().c) + ")";
      });

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init([](int steps, const py::object& scheme, Direction direction, double guard) {
             SolverConfig c;
             c.steps = steps;
             c.scheme = from_name<Scheme>(scheme, parse_scheme);
             c.direction = direction;
             c.guard = guard;
             c.validate();
             return c;
           }),
           py::arg("steps") = 16, py::arg("scheme") = Scheme::RK4, py::arg("direction") = Direction::Forward,
           py::arg("guard") = 1e6)
      .def_readwrite("steps", &SolverConfig::steps)
      .def_readwrite("scheme", &SolverConfig::scheme)
      .def_readwrite("direction", &SolverConfig::direction)
      .def_readwrite("guard", &SolverConfig::guard)
      .def("reversed", &SolverConfig::reversed);

  py::class_<RefineConfig>(m, "RefineConfig")
      .def(py::init<>())
      .def_readwrite("method", &RefineConfig::method)
      .def_readwrite("tolerance", &RefineConfig::tolerance)
      .def_readwrite("max_iterations", &RefineConfig::max_iterations)
      .def_readwrite("bracket_half_width", &RefineConfig::bracket_half_width)
      .def_readwrite("damping", &RefineConfig::damping)
      .def_readwrite("slope_scaled", &RefineConfig::slope_scaled)
      .def_readwrite("fallback_to_bisection", &RefineConfig::fallback_to_bisection);

  py::class_<MapResult>(m, "MapResult")
      .def_readonly("y", &MapResult::y)
      .def_readonly("log_deriv", &MapResult::log_deriv)
      .def_readonly("trajectory", &MapResult::trajectory);
  py::class_<InverseResult>(m, "InverseResult")
      .def_readonly("x", &InverseResult::x)
      .def_readonly("reverse_log_deriv", &InverseResult::reverse_log_deriv)
      .def_readonly("residual", &InverseResult::residual)
      .def_readonly("iterations", &InverseResult::iterations)
      .def_readonly("converged", &InverseResult::converged);
  py::class_<Sensitivity>(m, "Sensitivity")
      .def_readonly("dx", &Sensitivity::dx)
      .def_readonly("dparams", &Sensitivity::dparams);

  m.def("forward", &forward, py::arg("g"), py::arg("cfg") = SolverConfig{}, py::arg("x"),
        py::arg("keep_trajectory") = false);
  m.def(
      "inverse",
      [](const Integrand& g, const SolverConfig& cfg, double y, const std::optional<RefineConfig>& rc) {
        return inverse(g, cfg, y, rc.value_or(default_inverse_refine()));
      },
      py::arg("g"), py::arg("cfg") = SolverConfig{}.reversed(), py::arg("y"), py::arg("refine") = std::nullopt);
  m.def("derivative", &derivative, py::arg("g"), py::arg("cfg") = SolverConfig{}, py::arg("x"));
  m.def("forward_vjp", &forward_vjp, py::arg("g"), py::arg("cfg"), py::arg("x"), py::arg("cot_y"),
        py::arg("cot_logdet"));
  m.def("resolution_gap", &resolution_gap, py::arg("g"), py::arg("cfg"), py::arg("x"));

  // Flows.
  py::class_<Architecture>(m, "Architecture")
      .def(py::init([](const py::object& kind, int layers, const py::object& family, std::vector<int> hidden,
                       const py::object& activation, int steps, const py::object& scheme, int split, bool permutations,
                       double c_bound) {
             Architecture a;
             a.kind = from_name<LayerKind>(kind, parse_layer_kind);
             a.autm_layers = layers;
             a.family = from_name<Family>(family, parse_family);
             a.hidden = std::move(hidden);
             a.activation = from_name<Activation>(activation, parse_activation);
             a.solver.steps = steps;
             a.solver.scheme = from_name<Scheme>(scheme, parse_scheme);
             a.split = split;
             a.permutations = permutations;
             a.c_bound = c_bound;
             return a;
           }),
           py::arg("kind") = LayerKind::Coupling, py::arg("layers") = 4, py::arg("family") = Family::Quadratic,
           py::arg("hidden") = std::vector<int>{32, 32}, py::arg("activation") = Activation::Tanh,
           py::arg("steps") = 16, py::arg("scheme") = Scheme::RK4, py::arg("split") = 0,
           py::arg("permutations") = true, py::arg("c_bound") = 0.1)
      .def_readwrite("kind", &Architecture::kind)
      .def_readwrite("autm_layers", &Architecture::autm_layers)
      .def_readwrite("family", &Architecture::family)
      .def_readwrite("hidden", &Architecture::hidden)
      .def_readwrite("c_bound", &Architecture::c_bound)
      .def_readwrite("permutations", &Architecture::permutations);

  py::class_<FlowModel>(m, "FlowModel")
      .def_readonly("dim", &FlowModel::dim)
      .def_property_readonly("num_layers", [](const FlowModel& f) { return f.layers.size(); })
      .def_property_readonly("num_params", &FlowModel::num_params)
      .def("validate", &FlowModel::validate)
      .def("get_params", [](const FlowModel& f) { return to_numpy(get_params(f)); })
      .def("set_params", [](FlowModel& f, const Array& p) { set_params(f, to_span(p)); })
      .def("copy", [](const FlowModel& f) { return f; });

  m.def("build_flow", &build_flow, py::arg("dim"), py::arg("arch") = Architecture{}, py::arg("seed") = 0);
  m.def(
      "flow_forward",
      [](const FlowModel& f, const Array& x) {
        const LayerOutput out = flow_forward(f, to_span(x));
        return py::make_tuple(to_numpy(out.values), out.logdet);
      },
      py::arg("model"), py::arg("x"), "(y, logdet) for one point");
  m.def(
      "flow_inverse",
      [](const FlowModel& f, const Array& y) {
        const FlowInverse inv = flow_inverse(f, to_span(y));
        return py::make_tuple(to_numpy(inv.x), inv.converged);
      },
      py::arg("model"), py::arg("y"), "(x, converged) for one point");
  m.def(
      "log_density",
      [](const FlowModel& f, const Array& y, DensityPath path) -> py::object {
        if (y.ndim() == 1) return py::float_(log_density(f, to_span(y), path));
        const Matrix pts = to_matrix(y);
        std::vector<double> out(pts.rows);
        for (std::size_t i = 0; i < pts.rows; ++i) out[i] = log_density(f, pts.row(i), path);
        return to_numpy(out);
      },
      py::arg("model"), py::arg("y"), py::arg("path") = DensityPath::Refined,
      "log p(y) for one point (1-D array) or one per row (2-D array)");
  m.def(
      "sample", [](const FlowModel& f, std::size_t n, std::uint64_t seed) { return to_numpy(sample(f, n, seed)); },
      py::arg("model"), py::arg("n"), py::arg("seed") = 0);
  m.def(
      "base_draws", [](int dim, std::size_t n, std::uint64_t seed) { return to_numpy(base_draws(dim, n, seed)); },
      py::arg("dim"), py::arg("n"), py::arg("seed") = 0);
  m.def("checkpoint_to_json", &checkpoint_to_json, py::arg("model"));
  m.def("checkpoint_from_json", &checkpoint_from_json, py::arg("text"));
  m.def("save_checkpoint", &save_checkpoint, py::arg("model"), py::arg("path"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  // Data and training.
  py::class_<SplitFractions>(m, "SplitFractions")
      .def(py::init([](double train, double val, double test) { return SplitFractions{train, val, test}; }),
           py::arg("train") = 0.8, py::arg("val") = 0.1, py::arg("test") = 0.1)
      .def_readwrite("train", &SplitFractions::train)
      .def_readwrite("val", &SplitFractions::val)
      .def_readwrite("test", &SplitFractions::test);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("name", &Dataset::name)
      .def_property_readonly("train", [](const Dataset& d) { return to_numpy(d.train); })
      .def_property_readonly("val", [](const Dataset& d) { return to_numpy(d.val); })
      .def_property_readonly("test", [](const Dataset& d) { return to_numpy(d.test); })
      .def_readonly("mean", &Dataset::mean)
      .def_readonly("std", &Dataset::std)
      .def_property_readonly("dim", &Dataset::dim);

  m.def(
      "toy2d_rows",
      [](const py::object& toy, std::size_t n, std::uint64_t seed) {
        return to_numpy(toy2d_rows(from_name<Toy>(toy, parse_toy), n, seed));
      },
      py::arg("toy"), py::arg("n"), py::arg("seed") = 0);
  m.def(
      "toy2d",
      [](const py::object& toy, std::size_t n, std::uint64_t seed, const SplitFractions& f) {
        return toy2d(from_name<Toy>(toy, parse_toy), n, seed, f);
      },
      py::arg("toy"), py::arg("n"), py::arg("seed") = 0, py::arg("fractions") = SplitFractions{});
  m.def("load_csv", &load_csv, py::arg("path"), py::arg("fractions") = SplitFractions{}, py::arg("seed") = 0);
  m.def(
      "parse_csv",
      [](const std::string& text, const SplitFractions& f, std::uint64_t seed) { return parse_csv(text, f, seed); },
      py::arg("text"), py::arg("fractions") = SplitFractions{}, py::arg("seed") = 0);

  m.def(
      "nll", [](const FlowModel& f, const Array& data) { return nll(f, to_matrix(data)); }, py::arg("model"),
      py::arg("data"));
  m.def(
      "nll_and_grad",
      [](const FlowModel& f, const Array& data) {
        const NllGrad r = nll_and_grad(f, to_matrix(data));
        return py::make_tuple(r.loss, to_numpy(r.grad));
      },
      py::arg("model"), py::arg("data"), "(loss, gradient) with the gradient ordered like FlowModel.get_params()");

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init([](int epochs, std::size_t batch_size, double lr, double lr_decay, int decay_every,
                       std::uint64_t seed, int patience) {
             TrainConfig c;
             c.epochs = epochs;
             c.batch_size = batch_size;
             c.learning_rate = lr;
             c.lr_decay = lr_decay;
             c.decay_every = decay_every;
             c.seed = seed;
             c.patience = patience;
             c.validate();
             return c;
           }),
           py::arg("epochs") = 100, py::arg("batch_size") = 256, py::arg("lr") = 1e-2, py::arg("lr_decay") = 1.0,
           py::arg("decay_every") = 0, py::arg("seed") = 0, py::arg("patience") = 20);

  py::class_<EpochRecord>(m, "EpochRecord")
      .def_readonly("epoch", &EpochRecord::epoch)
      .def_readonly("train_nll", &EpochRecord::train_nll)
      .def_readonly("val_nll", &EpochRecord::val_nll)
      .def_readonly("learning_rate", &EpochRecord::learning_rate);
  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("history", &TrainResult::history)
      .def_readonly("best_epoch", &TrainResult::best_epoch)
      .def_readonly("best_val", &TrainResult::best_val)
      .def_readonly("initial_val", &TrainResult::initial_val)
      .def_readonly("early_stopped", &TrainResult::early_stopped)
      .def_readonly("error", &TrainResult::error);

  m.def(
      "train",
      [](FlowModel& f, const Dataset& d, const TrainConfig& cfg, const EpochCallback& cb) {
        py::gil_scoped_release release;
        EpochCallback locked;
        if (cb)
          locked = [&cb](const EpochRecord& r) {
            py::gil_scoped_acquire acquire;
            cb(r);
          };
        return train(f, d, cfg, locked);
      },
      py::arg("model"), py::arg("data"), py::arg("cfg") = TrainConfig{}, py::arg("on_epoch") = EpochCallback{},
      "Trains in place and returns the history; the model ends at its best validation parameters.");

  // Universality.
  py::class_<MonotoneTarget>(m, "MonotoneTarget")
      .def_static("affine", &MonotoneTarget::affine, py::arg("alpha"), py::arg("beta"))
      .def_static("softplus_shift", &MonotoneTarget::softplus_shift)
      .def_static("arctan_blend", &MonotoneTarget::arctan_blend)
      .def_static("custom", &MonotoneTarget::custom, py::arg("phi"), py::arg("lipschitz"),
                  py::arg("description") = "custom")
      .def("__call__", &MonotoneTarget::operator())
      .def_readonly("lipschitz", &MonotoneTarget::lipschitz)
      .def_readonly("description", &MonotoneTarget::description);

  py::class_<PicardConfig>(m, "PicardConfig")
      .def(py::init([](int iterations, int quadrature_nodes, int inner_nodes, double inner_ratio) {
             PicardConfig c{iterations, quadrature_nodes, inner_nodes, inner_ratio};
             c.validate();
             return c;
           }),
           py::arg("iterations") = 3, py::arg("quadrature_nodes") = 257, py::arg("inner_nodes") = 65,
           py::arg("inner_ratio") = 1.5);

  m.def(
      "qs_eval",
      [](const MonotoneTarget& t, double s, const py::object& kernel, double x, const PicardConfig& cfg) {
        return qs_eval(t, s, from_name<KernelKind>(kernel, parse_kernel), x, cfg);
      },
      py::arg("target"), py::arg("s"), py::arg("kernel") = KernelKind::Constant, py::arg("x"),
      py::arg("cfg") = PicardConfig{});

  py::class_<StudyRow>(m, "StudyRow")
      .def_readonly("s", &StudyRow::s)
      .def_readonly("inv_s", &StudyRow::inv_s)
      .def_readonly("sup_error", &StudyRow::sup_error)
      .def_readonly("log_error", &StudyRow::log_error);
  py::class_<StudyResult>(m, "StudyResult")
      .def_readonly("rows", &StudyResult::rows)
      .def_readonly("slope", &StudyResult::slope)
      .def_readonly("intercept", &StudyResult::intercept)
      .def_readonly("non_monotone", &StudyResult::non_monotone)
      .def_readonly("notes", &StudyResult::notes);

  m.def(
      "convergence_study",
      [](const MonotoneTarget& t, double lo, double hi, int grid, const std::vector<double>& s_list,
         const py::object& kernel, const PicardConfig& cfg) {
        return convergence_study(t, lo, hi, grid, s_list, from_name<KernelKind>(kernel, parse_kernel), cfg);
      },
      py::arg("target"), py::arg("lo") = -1.0, py::arg("hi") = 1.0, py::arg("grid") = 41,
      py::arg("s_list") = std::vector<double>{0.5, 1.0 / 3.0, 0.25, 0.2}, py::arg("kernel") = KernelKind::Constant,
      py::arg("cfg") = PicardConfig{});

  // Inversion benchmark and gradient checks.
  py::class_<BenchConfig>(m, "BenchConfig")
      .def(py::init([](std::tuple<double, double, double> coeffs, std::vector<double> tolerances, std::size_t n_inputs,
                       std::uint64_t seed, double damping, int steps) {
             BenchConfig c;
             c.coeffs = {std::get<0>(coeffs), std::get<1>(coeffs), std::get<2>(coeffs)};
             c.tolerances = std::move(tolerances);
             c.n_inputs = n_inputs;
             c.seed = seed;
             c.damping = damping;
             c.solver.steps = steps;
             c.validate();
             return c;
           }),
           py::arg("coeffs") = std::make_tuple(0.5, 0.1, 0.2),
           py::arg("tolerances") = std::vector<double>{1e-3, 1e-4, 1e-5, 1e-6}, py::arg("n_inputs") = 1000,
           py::arg("seed") = 0, py::arg("damping") = 0.5, py::arg("steps") = 16);

  py::class_<BenchRow>(m, "BenchRow")
      .def_readonly("tolerance", &BenchRow::tolerance)
      .def_readonly("method", &BenchRow::method)
      .def_readonly("mean_steps", &BenchRow::mean_steps)
      .def_readonly("mean_expansions", &BenchRow::mean_expansions)
      .def_readonly("max_steps", &BenchRow::max_steps)
      .def_readonly("failures", &BenchRow::failures)
      .def_readonly("fallbacks", &BenchRow::fallbacks);
  py::class_<BenchReport>(m, "BenchReport")
      .def_readonly("rows", &BenchReport::rows)
      .def("ratio", &BenchReport::ratio, py::arg("tolerance"))
      .def("bisection_growth_per_decade", &BenchReport::bisection_growth_per_decade)
      .def("summary", [](const BenchReport& r) { return bench_summary(r); });
  m.def("run_bench", &run_bench, py::arg("cfg") = BenchConfig{});

  py::class_<GradcheckReport>(m, "GradcheckReport")
      .def_readonly("suite", &GradcheckReport::suite)
      .def_readonly("cases", &GradcheckReport::cases)
      .def_readonly("entries", &GradcheckReport::entries)
      .def_readonly("max_rel_error", &GradcheckReport::max_rel_error)
      .def_readonly("redrawn", &GradcheckReport::redrawn);
  m.def("gradcheck_all", &gradcheck_all, py::arg("seed") = 0);
}
