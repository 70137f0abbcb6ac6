//! Frontend robustness and round-trip properties.

use gmc_core::frontend::{format_diagnostics, parse, print_model};
use proptest::prelude::*;

/// Token soup that looks vaguely like model source, to push the parser
/// through its recovery paths.
fn source_soup() -> impl Strategy<Value = String> {
    let word = prop::sample::select(vec![
        "array", "task", "repeat", "body", "in", "out", "from", "tiler", "origin", "paving",
        "fitting", "pattern", "host", "device", "memory", "kind", "maxwg", "allocate", "on",
        "connect", "->", "[", "]", "{", "}", ":", ",", "u8", "i32", "f32", "x", "y_in", "0", "1",
        "-3", "288", "//", "\n", "$",
    ]);
    prop::collection::vec(word, 0..200).prop_map(|words| words.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// parse never panics or hangs on arbitrary bytes; failures carry spans
    /// inside the input.
    #[test]
    fn parse_never_panics_on_arbitrary_bytes(bytes in prop::collection::vec(any::<u8>(), 0..4096)) {
        let source = String::from_utf8_lossy(&bytes).into_owned();
        if let Err(diags) = parse("fuzz.gm", &source) {
            prop_assert!(!diags.is_empty());
            let line_count = source.lines().count().max(1) as u32;
            for d in &diags {
                prop_assert!(d.span.line >= 1 && d.span.line <= line_count + 1);
                prop_assert!(d.span.col >= 1);
            }
            // Rendering diagnostics must not panic either.
            let _ = format_diagnostics(&diags, &source);
        }
    }

    #[test]
    fn parse_never_panics_on_token_soup(source in source_soup()) {
        if let Err(diags) = parse("soup.gm", &source) {
            prop_assert!(!diags.is_empty());
            let _ = format_diagnostics(&diags, &source);
        }
    }

    /// Models that parse successfully are deterministic: parsing twice gives
    /// the same IR.
    #[test]
    fn parse_is_deterministic(source in source_soup()) {
        let a = parse("a.gm", &source);
        let b = parse("a.gm", &source);
        match (a, b) {
            (Ok(ma), Ok(mb)) => prop_assert_eq!(ma, mb),
            (Err(da), Err(db)) => prop_assert_eq!(da, db),
            _ => prop_assert!(false, "parse nondeterminism"),
        }
    }
}

/// Shipped corpus round-trip: parse, pretty-print, re-parse, same IR.
#[test]
fn corpus_roundtrips_through_printer() {
    let dir = format!("{}/../../models", env!("CARGO_MANIFEST_DIR"));
    let mut checked = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "gm") {
            continue;
        }
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        let source = std::fs::read_to_string(&path).unwrap();
        let model = parse(&name, &source).unwrap_or_else(|d| panic!("{name}: {d:?}"));
        let printed = print_model(&model);
        let reparsed = parse(&name, &printed)
            .unwrap_or_else(|d| panic!("{name} reparse: {d:?}\n--- printed ---\n{printed}"));
        assert_eq!(model, reparsed, "{name} did not round-trip");
        checked += 1;
    }
    assert!(checked >= 2, "expected at least the two shipped models");
}

/// Generated models also round-trip (wider tiler variety than the corpus).
#[test]
fn generated_models_roundtrip() {
    use gmc_core::modelgen::{random_model, GenConfig};
    for seed in 0..40 {
        let model = random_model(seed, &GenConfig::default());
        let printed = print_model(&model);
        let reparsed = parse(&format!("fuzz{seed}.gm"), &printed)
            .unwrap_or_else(|d| panic!("seed {seed}: {d:?}\n{printed}"));
        assert_eq!(model, reparsed, "seed {seed} did not round-trip");
    }
}

/// The fuzz contract holds up to the documented 1 MiB bound: parsing is
/// linear, never aborts, and still reports located diagnostics.
#[test]
fn parse_handles_one_mebibyte_of_noise() {
    let mut state = 0x51C4u64;
    let mut bytes = Vec::with_capacity(1 << 20);
    while bytes.len() < (1 << 20) {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        bytes.push((state >> 33) as u8);
    }
    let source = String::from_utf8_lossy(&bytes).into_owned();
    let started = std::time::Instant::now();
    let result = parse("noise.gm", &source);
    assert!(started.elapsed().as_secs() < 10, "parse must stay linear");
    let diags = result.unwrap_err();
    assert!(!diags.is_empty());
}

#[test]
fn empty_file_reports_expected_declaration_at_origin() {
    let diags = parse("empty.gm", "").unwrap_err();
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].code, "E0002");
    assert!(diags[0].message.contains("expected model declaration"));
    assert_eq!((diags[0].span.line, diags[0].span.col), (1, 1));
}

#[test]
fn unresolved_array_reference_is_spanned() {
    let source = "\
array frame : u8[8,8]
task t repeat [1,1] body passthrough {
  in a from frmae tiler { origin [0,0] paving [[8,0],[0,8]] fitting [[1,0],[0,1]] pattern [8,8] }
  out b from frame tiler { origin [0,0] paving [[8,0],[0,8]] fitting [[1,0],[0,1]] pattern [8,8] }
}
host cpu { memory ram }
allocate t on cpu
allocate frame on ram
";
    let diags = parse("typo.gm", source).unwrap_err();
    let unresolved: Vec<_> = diags.iter().filter(|d| d.code == "E0004").collect();
    assert_eq!(unresolved.len(), 1);
    assert!(unresolved[0].message.contains("frmae"));
    assert_eq!(unresolved[0].span.line, 3);
    assert_eq!(unresolved[0].span.len, 5);
}

#[test]
fn duplicate_identifier_is_reported() {
    let source = "\
array a : u8[4]
array a : u8[4]
host cpu { memory ram }
allocate a on ram
";
    let diags = parse("dup.gm", source).unwrap_err();
    assert!(diags.iter().any(|d| d.code == "E0003"));
}

#[test]
fn model_name_comes_from_file_stem() {
    let source = "\
array a : u8[4]
array b : u8[4]
task t repeat [1] body passthrough {
  in x from a tiler { origin [0] paving [[0]] fitting [[1]] pattern [4] }
  out y from b tiler { origin [0] paving [[0]] fitting [[1]] pattern [4] }
}
host cpu { memory ram }
allocate t on cpu
allocate a on ram
allocate b on ram
";
    let model = parse("path/to/mymodel.gm", source).unwrap();
    assert_eq!(model.name, "mymodel");
}
