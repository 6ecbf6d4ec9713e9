#include "cutmpc/cli.hpp"
#include "cutmpc/controller.hpp"
#include "cutmpc/mpc.hpp"
#include "cutmpc/train.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace cutmpc;

namespace {

/// Loaded model plus its normalization statistics.
struct PyModel {
  net::NetworkParams params;
  data::NormStats stats;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "simulated food-cutting stack: contact plant, admittance controller, "
            "learned block dynamics and shooting MPC";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DataError>(m, "DataError");
  py::register_exception<NumericFault>(m, "NumericFault");

  // --- plant
  py::class_<sim::PlantConfig>(m, "PlantConfig")
      .def(py::init<>())
      .def_readwrite("dt", &sim::PlantConfig::dt)
      .def_readwrite("actuator_tau", &sim::PlantConfig::actuator_tau)
      .def_readwrite("v_ref", &sim::PlantConfig::v_ref)
      .def_readwrite("table_z", &sim::PlantConfig::table_z)
      .def_readwrite("rng_seed", &sim::PlantConfig::rng_seed);

  py::class_<sim::MaterialSpec>(m, "MaterialSpec")
      .def_readonly("name", &sim::MaterialSpec::name)
      .def_readonly("height", &sim::MaterialSpec::height)
      .def_readonly("friction_coeff", &sim::MaterialSpec::friction_coeff)
      .def_readonly("adhesion", &sim::MaterialSpec::adhesion)
      .def_readonly("press_cut_floor", &sim::MaterialSpec::press_cut_floor)
      .def_readonly("force_noise_std", &sim::MaterialSpec::force_noise_std);

  m.def("material_labels", [] { return sim::material_labels(); });
  m.def("make_material", &sim::make_material, py::arg("label"));

  py::class_<sim::Plant>(m, "Plant")
      .def(py::init<const sim::MaterialSpec&, const sim::PlantConfig&>())
      .def("step", &sim::Plant::step, py::arg("u"))
      .def("cut_complete", &sim::Plant::cut_complete, py::arg("tol") = 1e-3)
      .def_property_readonly("position", [](const sim::Plant& p) { return p.state().p; })
      .def_property_readonly("velocity", [](const sim::Plant& p) { return p.state().v; })
      .def_property_readonly("cut_front",
                             [](const sim::Plant& p) { return p.state().cut_front; })
      .def_property_readonly("in_contact",
                             [](const sim::Plant& p) { return p.state().in_contact; });

  // --- controller
  m.def("quintic_descent",
        [](double t, double duration, double z0, double z1) {
          const auto r = ctl::quintic_descent(t, duration, z0, z1);
          return std::make_pair(r.pos, r.vel);
        },
        py::arg("t"), py::arg("duration"), py::arg("z0"), py::arg("z1"));
  m.def("triangular_saw",
        [](double t, double center, double range, double period) {
          const auto r = ctl::triangular_saw(t, center, range, period);
          return std::make_pair(r.pos, r.vel);
        },
        py::arg("t"), py::arg("center"), py::arg("range"), py::arg("period"));
  m.def("control_law",
        [](const Vec2& F_s, const Vec2& F_r, const Vec2& ka) {
          ctl::Gains g;
          g.ka = ka;
          return ctl::control_law(F_s, F_r, g);
        },
        py::arg("F_s"), py::arg("F_r"), py::arg("ka"));
  m.def("reference_force",
        [](const Vec2& p, const Vec2& p_d, const Vec2& pdot_d, const Vec2& F_d, const Vec2& kp,
           const Vec2& ka) {
          ctl::Gains g;
          g.kp = kp;
          g.ka = ka;
          return ctl::reference_force(p, p_d, pdot_d, F_d, g);
        },
        py::arg("p"), py::arg("p_d"), py::arg("pdot_d"), py::arg("F_d"), py::arg("kp"),
        py::arg("ka"));

  // --- model
  py::class_<PyModel>(m, "Model")
      .def_property_readonly("stage",
                             [](const PyModel& m_) { return net::stage_name(m_.params.stage); })
      .def_property_readonly("param_count",
                             [](const PyModel& m_) { return net::param_count(m_.params); })
      .def_property_readonly("block_size", [](const PyModel& m_) { return m_.params.dims.M; })
      .def("forward",
           [](const PyModel& m_, const Eigen::MatrixXd& x, const Eigen::MatrixXd& v,
              const Eigen::VectorXd& h1, const Eigen::VectorXd& h2) {
             net::LatentState h(m_.params.dims);
             h.h1 = h1;
             h.h2 = h2;
             auto r = net::forward_block(m_.params, x, v, h);
             return py::make_tuple(r.pred, r.latent.h1, r.latent.h2);
           },
           "one normalized block through the dynamics network", py::arg("x"), py::arg("v"),
           py::arg("h1"), py::arg("h2"))
      .def("rollout",
           [](const PyModel& m_, const Eigen::MatrixXd& x,
              const std::vector<Eigen::MatrixXd>& future_v, const Eigen::VectorXd& h1,
              const Eigen::VectorXd& h2) {
             net::LatentState h(m_.params.dims);
             h.h1 = h1;
             h.h2 = h2;
             return net::rollout(m_.params, x, future_v, h);
           },
           py::arg("x"), py::arg("future_v"), py::arg("h1"), py::arg("h2"));

  m.def("load_model", [](const std::string& path) {
    auto [params, stats] = net::load_model(path);
    return PyModel{std::move(params), std::move(stats)};
  });

  // --- pipeline
  py::class_<cli::RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("seed", &cli::RunConfig::seed)
      .def("override", &cli::apply_override, py::arg("assignment"),
           "apply one section.key=value override")
      .def("serialize", [](const cli::RunConfig& c) { return cli::serialize_config(c); });

  m.def("load_config", &cli::load_config, py::arg("path"));
  m.def("collect", &cli::cmd_collect, py::arg("config"), py::arg("out_dir"));
  m.def("train", &cli::cmd_train, py::arg("config"), py::arg("out_dir"), py::arg("stage") = 0);
  m.def("run", &cli::cmd_run, py::arg("config"), py::arg("out_dir"), py::arg("material"));
  m.def("evaluate", &cli::cmd_eval, py::arg("config"), py::arg("out_dir"));
}
