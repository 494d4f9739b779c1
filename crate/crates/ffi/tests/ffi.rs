//! Exercises the C entry points from Rust: status codes, handle lifecycle,
//! option validation and the JSON round trip.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use baryloc_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(baryloc_last_error()) }
        .to_string_lossy()
        .into_owned()
}

/// Unit right triangle of anchors plus one unknown at (0.25, 0.25) known
/// only through its ranges.
fn triangle_json() -> CString {
    let d14 = 0.125f64.sqrt();
    let d24 = 0.625f64.sqrt();
    CString::new(format!(
        r#"{{
  "dimension": 2,
  "nodes": [
    {{"id": 1, "anchor": true, "range": 2.0, "coords": [0.0, 0.0]}},
    {{"id": 2, "anchor": true, "range": 2.0, "coords": [1.0, 0.0]}},
    {{"id": 3, "anchor": true, "range": 2.0, "coords": [0.0, 1.0]}},
    {{"id": 4, "anchor": false, "range": 2.0}}
  ],
  "edges": [
    {{"i": 1, "j": 2, "distance": 1.0}},
    {{"i": 1, "j": 3, "distance": 1.0}},
    {{"i": 2, "j": 3, "distance": {}}},
    {{"i": 1, "j": 4, "distance": {d14}}},
    {{"i": 2, "j": 4, "distance": {d24}}},
    {{"i": 3, "j": 4, "distance": {d24}}}
  ]
}}"#,
        2.0f64.sqrt(),
    ))
    .unwrap()
}

#[test]
fn parse_localize_and_read_back() {
    let json = triangle_json();
    let mut net: *mut BarylocNetwork = ptr::null_mut();
    assert_eq!(
        baryloc_network_from_json(json.as_ptr(), &mut net),
        BarylocStatus::Ok
    );
    assert!(!net.is_null());

    let mut dim = 0u32;
    let mut nodes = 0u64;
    let mut anchors = 0u64;
    assert_eq!(baryloc_network_dimension(net, &mut dim), BarylocStatus::Ok);
    assert_eq!(baryloc_network_node_count(net, &mut nodes), BarylocStatus::Ok);
    assert_eq!(
        baryloc_network_anchor_count(net, &mut anchors),
        BarylocStatus::Ok
    );
    assert_eq!((dim, nodes, anchors), (2, 4, 3));

    let mut res: *mut BarylocResult = ptr::null_mut();
    assert_eq!(
        baryloc_localize(net, ptr::null(), &mut res),
        BarylocStatus::Ok
    );

    let mut status = BarylocSolveStatus::Diverged;
    assert_eq!(
        baryloc_result_solve_status(res, &mut status),
        BarylocStatus::Ok
    );
    assert_eq!(status, BarylocSolveStatus::Solved);

    let mut count = 0u64;
    assert_eq!(
        baryloc_result_position_count(res, &mut count),
        BarylocStatus::Ok
    );
    assert_eq!(count, 1);

    let mut id = 0u32;
    let mut coords = [0.0f64; 2];
    assert_eq!(
        baryloc_result_position(res, 0, &mut id, coords.as_mut_ptr(), 2),
        BarylocStatus::Ok
    );
    assert_eq!(id, 4);
    assert!((coords[0] - 0.25).abs() <= 1e-9 && (coords[1] - 0.25).abs() <= 1e-9);

    // short buffers and bad indices are rejected, not written past
    assert_eq!(
        baryloc_result_position(res, 0, &mut id, coords.as_mut_ptr(), 1),
        BarylocStatus::InvalidArgument
    );
    assert_eq!(
        baryloc_result_position(res, 5, &mut id, coords.as_mut_ptr(), 2),
        BarylocStatus::InvalidArgument
    );
    assert!(last_error().contains("out of range"));

    let mut rcond = 0.0f64;
    assert_eq!(baryloc_result_rcond(res, &mut rcond), BarylocStatus::Ok);
    assert!(rcond > 1e-12);

    let mut pruned = u64::MAX;
    assert_eq!(
        baryloc_result_pruned_count(res, &mut pruned),
        BarylocStatus::Ok
    );
    assert_eq!(pruned, 0);

    let mut json_out: *mut c_char = ptr::null_mut();
    assert_eq!(baryloc_result_to_json(res, &mut json_out), BarylocStatus::Ok);
    let text = unsafe { CStr::from_ptr(json_out) }.to_str().unwrap();
    let value: serde_json::Value = serde_json::from_str(text).unwrap();
    assert_eq!(value["status"], "solved");
    assert_eq!(value["dimension"], 2);
    baryloc_string_free(json_out);

    baryloc_result_free(res);
    baryloc_network_free(net);
}

#[test]
fn null_and_malformed_inputs_are_rejected() {
    let mut net: *mut BarylocNetwork = ptr::null_mut();
    assert_eq!(
        baryloc_network_from_json(ptr::null(), &mut net),
        BarylocStatus::NullArgument
    );
    assert!(last_error().contains("null"));

    let json = triangle_json();
    assert_eq!(
        baryloc_network_from_json(json.as_ptr(), ptr::null_mut()),
        BarylocStatus::NullArgument
    );

    let bad = CString::new("{ not a document").unwrap();
    assert_eq!(
        baryloc_network_from_json(bad.as_ptr(), &mut net),
        BarylocStatus::ParseError
    );
    assert!(!last_error().is_empty());

    // semantically invalid: the anchor has no coordinates
    let invalid = CString::new(
        r#"{"dimension": 2, "nodes": [{"id": 1, "anchor": true, "range": 1.0}], "edges": []}"#,
    )
    .unwrap();
    assert_eq!(
        baryloc_network_from_json(invalid.as_ptr(), &mut net),
        BarylocStatus::InvalidArgument
    );

    let missing = CString::new("/definitely/not/here.json").unwrap();
    assert_eq!(
        baryloc_network_load(missing.as_ptr(), &mut net),
        BarylocStatus::IoError
    );

    let mut res: *mut BarylocResult = ptr::null_mut();
    assert_eq!(
        baryloc_localize(ptr::null(), ptr::null(), &mut res),
        BarylocStatus::NullArgument
    );

    // frees tolerate null
    baryloc_network_free(ptr::null_mut());
    baryloc_result_free(ptr::null_mut());
    baryloc_string_free(ptr::null_mut());
}

#[test]
fn option_validation() {
    let mut opts = BarylocOptions {
        subset_cap: 123,
        solver: 99,
        max_iters: 0,
        tol: f64::NAN,
        diagnostic_paths: 0,
        path_mode: 0,
    };
    assert_eq!(baryloc_options_default(&mut opts), BarylocStatus::Ok);
    assert_eq!(opts.subset_cap, 0);
    assert_eq!(opts.solver, BARYLOC_SOLVER_DIRECT);
    assert!(opts.max_iters > 0 && opts.tol > 0.0);

    let json = triangle_json();
    let mut net: *mut BarylocNetwork = ptr::null_mut();
    assert_eq!(
        baryloc_network_from_json(json.as_ptr(), &mut net),
        BarylocStatus::Ok
    );
    let mut res: *mut BarylocResult = ptr::null_mut();

    let mut bad = opts;
    bad.solver = 99;
    assert_eq!(
        baryloc_localize(net, &bad, &mut res),
        BarylocStatus::InvalidArgument
    );
    assert!(last_error().contains("solver"));

    let mut bad = opts;
    bad.solver = BARYLOC_SOLVER_ITERATIVE;
    bad.tol = f64::NAN;
    assert_eq!(
        baryloc_localize(net, &bad, &mut res),
        BarylocStatus::InvalidArgument
    );

    let mut bad = opts;
    bad.path_mode = 7;
    assert_eq!(
        baryloc_localize(net, &bad, &mut res),
        BarylocStatus::InvalidArgument
    );

    // a valid iterative run with the diagnostic enabled
    let mut good = opts;
    good.solver = BARYLOC_SOLVER_ITERATIVE;
    good.diagnostic_paths = 3;
    assert_eq!(baryloc_localize(net, &good, &mut res), BarylocStatus::Ok);
    let mut iterations = 0u64;
    assert_eq!(
        baryloc_result_iterations(res, &mut iterations),
        BarylocStatus::Ok
    );
    assert!(iterations > 0);
    let mut json_out: *mut c_char = ptr::null_mut();
    assert_eq!(baryloc_result_to_json(res, &mut json_out), BarylocStatus::Ok);
    let text = unsafe { CStr::from_ptr(json_out) }.to_str().unwrap();
    assert!(text.contains("diagnostics"));
    baryloc_string_free(json_out);
    baryloc_result_free(res);
    baryloc_network_free(net);
}

#[test]
fn singular_solves_return_ok_with_status() {
    // exact unit lattice: structured geometry leaves the system singular
    let net_rs = baryloc::generate::gen_lattice(2, 4, 1.0, 1.5).unwrap();
    let marked = baryloc::generate::select_anchors(
        &net_rs,
        4,
        baryloc::generate::AnchorPolicy::UniformRandom,
        baryloc::generate::derive_seed(0, &[2]),
    )
    .unwrap();
    let doc = baryloc::document::NetworkDocument::from_network(&marked);
    let json = CString::new(doc.to_json().unwrap()).unwrap();

    let mut net: *mut BarylocNetwork = ptr::null_mut();
    assert_eq!(
        baryloc_network_from_json(json.as_ptr(), &mut net),
        BarylocStatus::Ok
    );
    let mut res: *mut BarylocResult = ptr::null_mut();
    assert_eq!(
        baryloc_localize(net, ptr::null(), &mut res),
        BarylocStatus::Ok
    );
    let mut status = BarylocSolveStatus::Solved;
    assert_eq!(
        baryloc_result_solve_status(res, &mut status),
        BarylocStatus::Ok
    );
    assert_eq!(status, BarylocSolveStatus::Singular);
    let mut count = u64::MAX;
    assert_eq!(
        baryloc_result_position_count(res, &mut count),
        BarylocStatus::Ok
    );
    assert_eq!(count, 0);
    baryloc_result_free(res);
    baryloc_network_free(net);
}

#[test]
fn header_is_generated() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("baryloc.h");
    let text = std::fs::read_to_string(header).expect("build script wrote the header");
    for symbol in [
        "baryloc_network_from_json",
        "baryloc_localize",
        "baryloc_result_position",
        "baryloc_last_error",
        "BarylocStatus",
        "BarylocOptions",
    ] {
        assert!(text.contains(symbol), "header is missing {symbol}");
    }
}
