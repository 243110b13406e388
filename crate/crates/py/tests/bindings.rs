use pyo3::ffi::c_str;
use pyo3::prelude::*;

use qpwalk_py::qpwalk_py;

#[test]
fn module_runs_inside_an_embedded_interpreter() {
    pyo3::append_to_inittab!(qpwalk_py);
    Python::initialize();
    Python::attach(|py| {
        py.run(
            c_str!(
                r#"
import qpwalk_py as qp
env = qp.Environment.constant(1 / 3)
assert abs(qp.hit_prob(env, 1, a=0, b=20) * (2**20 - 1) - 1) < 1e-12
per = qp.Environment.periodic([0.7, 0.45])
st = qp.exit_solve(per, -4, 4, 0)
assert abs(st["p_exit_right"] - qp.hit_prob(per, 0, a=-4, b=4)) < 1e-12
sites, masses = qp.evolve_exact(per, 0, 30)
assert abs(sum(masses) - 1) < 1e-12
assert qp.simulate(per, 0, 30, 50, seed=4) == qp.simulate(per, 0, 30, 50, seed=4)
assert qp.check_criterion("c1", qp.Environment.trap(0), 32)["holds"]
try:
    qp.Environment.periodic([0.0, 0.5])
    raise SystemExit("expected an error")
except qp.QpwalkError:
    pass
"#
            ),
            None,
            None,
        )
        .unwrap();
    });
}
