//! Exercises the bindings through an embedded interpreter, so they are
//! covered by `cargo test` without building a wheel.

use pyo3::prelude::*;
use pyo3::types::{PyDict, PyModule};

fn with_module(code: &std::ffi::CStr) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "scriptdet").unwrap();
        scriptdet::register(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("scriptdet", m).unwrap();
        if let Err(e) = py.run(code, Some(&globals), None) {
            e.print(py);
            panic!("python code failed");
        }
    });
}

#[test]
fn geometry_and_nms() {
    with_module(
        cr#"
a = scriptdet.Quad.rect(0, 0, 1, 1)
b = scriptdet.Quad([0.5, 0.5, 1.5, 0.5, 1.5, 1.5, 0.5, 1.5])
assert abs(scriptdet.quad_iou(a, b) - 1 / 7) < 1e-12
assert scriptdet.Quad([1, 0, 1, 1, 0, 1, 0, 0]) == a
r = scriptdet.min_area_rect(scriptdet.Quad([1, 0, 2, 1, 1, 2, 0, 1]))
assert abs(r.area() - 2.0) < 1e-12 and not r.clamped
q = [scriptdet.Quad.rect(x, 0, x + 10, 10) for x in (5, 2.5, 0)]
assert scriptdet.nms(q, [0.7, 0.8, 0.9], 0.5, 0.0) == [2, 0]
"#,
    );
}

#[test]
fn metrics_and_classifier() {
    with_module(
        cr#"
assert abs(scriptdet.ap_11point([True, False, True], 2) - 28 / 33) < 1e-15
assert abs(scriptdet.mean_ap({"chinese": 28.53, "hindi": 35.16, "korean": 5.21}) - 22.97) <= 0.005
name, sim = scriptdet.classify_region([1, 0, 1], {"b": [1, 0, 0], "a": [0, 0, 1]})
assert name == "a" and abs(sim - 2 ** -0.5) < 1e-15
"#,
    );
}

#[test]
fn errors_become_value_errors() {
    with_module(
        cr#"
for call in (
    lambda: scriptdet.Quad([0, 0, 1, 1, 2, 2, 3, 3]),
    lambda: scriptdet.nms([scriptdet.Quad.rect(0, 0, 1, 1)], [0.5, 0.6]),
    lambda: scriptdet.classify_region([1, 0], {"a": [1, 0, 0]}),
    lambda: scriptdet.rank_score(0.5, 0.1, "sum"),
    lambda: scriptdet.parse_gt_line("1,2,3"),
):
    try:
        call()
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")
"#,
    );
}
