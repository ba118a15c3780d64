use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) {
    Python::initialize();
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(gasched::gasched)(py);
        let globals = PyDict::new(py);
        globals.set_item("gasched", module).unwrap();
        let code = std::ffi::CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

const CHAIN: &str = r#"
spec = '''{"jobs": [
  {"name": "c", "deps": ["b"], "machine_type": "linux", "run_time": 2},
  {"name": "b", "deps": ["a"], "machine_type": "linux", "run_time": 2},
  {"name": "a", "machine_type": "linux", "run_time": 2}],
 "machine_types": [{"name": "linux", "max_count": 2}]}'''
b = gasched.Build.from_json(spec)
"#;

#[test]
fn build_repair_and_simulate() {
    run(&format!(
        "{CHAIN}
assert len(b) == 3
assert b.job_names == ['c', 'b', 'a']
assert gasched.repair(b, ['c', 'b', 'a']) == ['a', 'b', 'c']
assert gasched.is_deadlock_free(b, ['c', 'b', 'a'])
s = gasched.simulate(b, ['a', 'b', 'c'], {{'linux': 1}})
assert s.makespan == 6.0, s.makespan
assert s.allocation == {{'linux': 1}}
assert [a[0] for a in s.assignments] == ['a', 'b', 'c']
"
    ));
}

#[test]
fn evolve_and_errors() {
    run(&format!(
        "{CHAIN}
r = gasched.evolve(b, seed=3, generations=20, w_mc=1.0)
assert r.makespan == 6.0
assert r.allocation == {{'linux': 1}}
assert r.baseline_makespan == 6.0
assert r.trace[0][0] == 0
try:
    gasched.evolve(b, scaling='cubic')
    raise AssertionError('accepted bad scaling')
except gasched.InvalidInputError:
    pass
try:
    gasched.simulate(b, ['a'])
    raise AssertionError('accepted partial list')
except gasched.ContractError:
    pass
bad = spec.replace('\"deps\": [\"a\"]', '\"deps\": [\"c\"]')
assert any('cycle' in i for i in gasched.validate(bad))
try:
    gasched.Build.from_json(bad)
    raise AssertionError('accepted cycle')
except ValueError:
    pass
assert gasched.fitness([10.0, 20.0, 40.0], [1, 1, 1], 1.0, 0.0, 'literal') == [400.0, 800.0, 1600.0]
"
    ));
}

#[test]
fn synthetic_and_estimates() {
    run(
        "
b = gasched.Build.synthetic(20, seed=4)
assert len(b) == 20
again = gasched.Build.from_json(b.to_json())
assert again.to_json() == b.to_json()
est = gasched.estimate(b)
assert len(est) == 20 and all(30 <= v <= 600 for v in est.values())
",
    );
}
