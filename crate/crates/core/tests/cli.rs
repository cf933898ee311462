use clap::Parser;
use overtopos::cli::{run_on_text, Args, Outcome};

fn run(argv: &[&str], text: &str) -> Outcome {
    let args = Args::parse_from(["overtopos"].iter().chain(argv).chain(&["input.ot"]));
    run_on_text(&args, text)
}

fn objects() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../workspaces/objects.ot")).unwrap()
}

const ARROW: &str = "format-version: 1

category Arrow:
  objects: a, b
  arrows:
    f: a -> b
";

#[test]
fn malformed_input_reports_line_and_column() {
    let out = run(&["validate"], "format-version: 1\ncategory C:\n  objects: x\n  arrows:\n    f: x -> y\n");
    assert_eq!(out.code, 2);
    assert!(out.text.contains("line 5"), "{}", out.text);
    let out = run(&["validate"], "format-version: 1\nbasis B: Missing\n  x: 1_x\n");
    assert_eq!(out.code, 2);
    assert!(out.text.contains("line 2, column"), "{}", out.text);
    assert!(out.report.contains("\"input-error\""));
    let out = run(&["validate"], "category C:\n  objects: x\n");
    assert_eq!(out.code, 2);
}

#[test]
fn failed_checks_name_the_invariant_and_a_witness() {
    let text = format!("{ARROW}\nbasis B: Arrow\n  b: 1_b\n");
    let out = run(&["validate"], &text);
    assert_eq!(out.code, 1);
    assert!(out.text.contains("violated basis axioms"), "{}", out.text);

    let text = format!(
        "{ARROW}\nbasis Covers: Arrow\n  a: 1_a\n  b: 1_b\n  b: f\n\npresheaf P: Arrow\n  basis: Covers\n  carriers:\n    a: 2\n    b: 1\n  restrictions:\n    f: 0\n"
    );
    let out = run(&["sheaf"], &text);
    assert_eq!(out.code, 1);
    assert!(out.text.contains("violated sheaf condition"), "{}", out.text);
    assert!(out.report.contains("\"invariant\": \"sheaf condition\""));
}

#[test]
fn witness_lists_are_truncated() {
    let text = format!(
        "{ARROW}\nbasis Covers: Arrow\n  a: 1_a\n  b: 1_b\n  b: f\n\npresheaf P: Arrow\n  basis: Covers\n  carriers:\n    a: 3\n    b: 1\n  restrictions:\n    f: 0\n"
    );
    let out = run(&["sheaf", "--witness-limit", "1"], &text);
    assert_eq!(out.code, 1);
    assert!(out.text.contains("more"), "{}", out.text);
    assert!(out.report.contains("\"omitted\""));
}

#[test]
fn repeated_runs_are_identical() {
    let text = objects();
    for cmd in ["antecedent", "points", "tm", "descent"] {
        assert_eq!(run(&[cmd], &text), run(&[cmd], &text), "{cmd}");
    }
}

#[test]
fn emitted_point_structure_satisfies_the_emitted_theory() {
    let out = run(&["tm", "--hom", "g"], &objects());
    assert_eq!(out.code, 0, "{}", out.text);
    let check = run(&["validate"], &out.text);
    assert_eq!(check.code, 0, "{}", check.text);
    assert!(check.text.contains("structure S_g"), "{}", check.text);
}

#[test]
fn strict_mode_turns_warnings_into_failures() {
    let text = objects();
    for cmd in ["validate", "antecedent", "points", "correspondence", "limits"] {
        let relaxed = run(&[cmd], &text);
        let strict = run(&[cmd, "--strict"], &text);
        let warned = relaxed.text.contains("warning:");
        assert_eq!(strict.code, if warned { 1 } else { relaxed.code }, "{cmd}");
    }
}
