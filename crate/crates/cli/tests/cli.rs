use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gj_cli::{
    cmd_bench, cmd_join, cmd_stats, BenchOptions, JoinOptions, Mode, Source, GFJS_DIR, RESULT_FILE,
};
use gj_core::fixtures::{self, Instance};

fn gj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gj"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(inst: &Instance, dir: &Path) -> PathBuf {
    inst.write_to(dir).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn materialize_chain3() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(&fixtures::chain3(), &dir.path().join("in"));
    let out = dir.path().join("out");
    let o = gj(&[
        "join",
        path(&q),
        "--mode",
        "materialize",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join(RESULT_FILE)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "A,B,C,D");
    assert_eq!(lines.len(), 15);
}

#[test]
fn stored_summary_expands_to_the_materialized_file() {
    let dir = tempfile::tempdir().unwrap();
    for (name, inst) in [
        ("chain3", fixtures::chain3()),
        ("triangle", fixtures::triangle()),
    ] {
        let inst = inst.with_projection(&["C", "A"]);
        let q = write(&inst, &dir.path().join(name));
        let flat = dir.path().join(format!("{name}-flat"));
        let stored = dir.path().join(format!("{name}-stored"));
        cmd_join(&q, &JoinOptions::new(Mode::Materialize).out(&flat)).unwrap();
        cmd_join(&q, &JoinOptions::new(Mode::Store).out(&stored)).unwrap();
        let r = cmd_join(&q, &JoinOptions::new(Mode::LoadDesummarize).out(&stored)).unwrap();
        let a = fs::read(flat.join(RESULT_FILE)).unwrap();
        let b = fs::read(stored.join(RESULT_FILE)).unwrap();
        assert_eq!(a, b, "{name}");
        assert!(String::from_utf8(a).unwrap().starts_with("C,A\n"));
        assert!(r.phase("load").is_some() && r.phase("desummarize").is_some());
    }
}

#[test]
fn triangle_takes_the_junction_tree_path() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(&fixtures::triangle(), dir.path());
    let r = cmd_join(&q, &JoinOptions::new(Mode::Summarize)).unwrap();
    let plan = r.plan.as_ref().unwrap();
    assert_eq!(plan.structure, "junction-tree");
    assert_eq!(plan.rho_exact, "3/2");
    assert!((plan.rho - 1.5).abs() < 1e-12);
    for phase in [
        "learn",
        "plan",
        "potential_join",
        "generator_build",
        "gfjs_generate",
    ] {
        assert!(r.phase(phase).is_some(), "{phase}");
    }
}

#[test]
fn bench_baselines_agree_on_chain3() {
    let mut opts = BenchOptions::new(Source::Fixture("chain3".into()));
    opts.baselines = vec![gj_cli::Baseline::Brute, gj_cli::Baseline::Hash];
    let r = cmd_bench(&opts).unwrap();
    assert_eq!(r.join_size, 14);
    assert!(r.agree);
    assert_eq!(r.methods.len(), 5);
    assert!(r.methods.iter().all(|m| m.rows == 14));
    assert_eq!(r.method("hash join").unwrap().uir, Some(1));
}

#[test]
fn empty_join_stores_only_the_manifest() {
    let work = tempfile::tempdir().unwrap();
    let mut opts = BenchOptions::new(Source::Fixture("empty".into()));
    opts.baselines = vec![gj_cli::Baseline::Brute, gj_cli::Baseline::Hash];
    opts.workdir = Some(work.path().to_owned());
    let r = cmd_bench(&opts).unwrap();
    assert_eq!(r.join_size, 0);
    assert!(r.methods.iter().all(|m| m.rows == 0));
    let files: Vec<String> = fs::read_dir(work.path().join("run0/gj").join(GFJS_DIR))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(files, ["manifest.txt"]);
}

#[test]
fn stats_bounds() {
    let dir = tempfile::tempdir().unwrap();

    // Triangle with every table of size n: bound n^1.5.
    let q = write(&fixtures::triangle(), &dir.path().join("tri"));
    let r = cmd_stats(&q, true, false).unwrap();
    let p = r.plan.unwrap();
    let n = p.largest_table as f64;
    assert!((p.agm_bound - n.powf(1.5)).abs() < 1e-6 * n.powf(1.5));

    // Chain of three: |T1| * |T3|.
    let inst = fixtures::chain3();
    let sizes = inst.table_sizes().unwrap();
    let q = write(&inst, &dir.path().join("chain"));
    let r = cmd_stats(&q, true, true).unwrap();
    let p = r.plan.clone().unwrap();
    assert_eq!(p.rho_exact, "2");
    assert!((p.agm_bound - (sizes[0] * sizes[2]) as f64).abs() < 1e-6);
    assert_eq!(r.join_size, Some(14));
    assert!(r.details.iter().any(|l| l == "edge cover: T1=1 T2=0 T3=1"));

    // One table: bound is its size.
    let rows = vec![
        vec!["1".to_owned(), "x".to_owned()],
        vec!["2".to_owned(), "y".to_owned()],
    ];
    let single = Instance::new(&[("S", &["K", "V"], rows)]).unwrap();
    let q = write(&single, &dir.path().join("single"));
    let p = cmd_stats(&q, true, false).unwrap().plan.unwrap();
    assert_eq!(p.rho_exact, "1");
    assert!((p.agm_bound - 2.0).abs() < 1e-9);
}

#[test]
fn report_file_is_key_value() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(&fixtures::chain3(), &dir.path().join("in"));
    let report = dir.path().join("report.txt");
    let o = gj(&["join", path(&q), "--report", path(&report)]);
    assert!(o.status.success());
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.lines().any(|l| l == "join_size: 14"));
    assert!(text.lines().any(|l| l == "rho: 2"));
    let learn = text
        .lines()
        .find_map(|l| l.strip_prefix("learn_ms: "))
        .unwrap();
    assert_eq!(learn.split('.').nth(1).unwrap().len(), 3);
}

#[test]
fn cache_is_hit_on_the_second_run() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(&fixtures::chain3(), &dir.path().join("in"));
    let mut opts = JoinOptions::new(Mode::Summarize);
    opts.cache = Some(dir.path().join("cache"));
    assert_eq!(cmd_join(&q, &opts).unwrap().cache_hits, Some(0));
    let again = cmd_join(&q, &opts).unwrap();
    assert_eq!(again.cache_hits, Some(3));
    assert_eq!(again.join_size, Some(14));
}

#[test]
fn coalesce_merges_leaf_runs() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(&fixtures::chain3(), &dir.path().join("in"));
    let plain = cmd_join(&q, &JoinOptions::new(Mode::Summarize)).unwrap();
    let mut opts = JoinOptions::new(Mode::Store).out(dir.path().join("out"));
    opts.coalesce = true;
    let merged = cmd_join(&q, &opts).unwrap();
    assert_eq!(plain.runs_per_group, [2, 3, 5, 5]);
    assert_eq!(merged.runs_per_group, [2, 2, 5, 1]);
    let d = fs::read_to_string(dir.path().join("out").join(GFJS_DIR).join("col_3.csv")).unwrap();
    assert_eq!(d, "d1,14\n");
}

#[test]
fn no_header_names_columns_by_position() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("r.csv"), "1,a\n2,b\n2,c\n").unwrap();
    fs::write(dir.path().join("s.csv"), "2,x\n2,y\n").unwrap();
    fs::write(
        dir.path().join("q.txt"),
        "table R r.csv col0=K col1=V\ntable S s.csv col0=K col1=W\nproject K V W\n",
    )
    .unwrap();
    let mut opts = JoinOptions::new(Mode::Summarize);
    opts.header = false;
    let r = cmd_join(&dir.path().join("q.txt"), &opts).unwrap();
    assert_eq!(r.join_size, Some(4));
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let q = write(&fixtures::chain3(), &d.join("ok"));

    assert_eq!(code(&gj(&["join", path(&q)])), 0);
    assert_eq!(code(&gj(&["join", path(&q), "--bogus"])), 2);
    assert_eq!(code(&gj(&["join", path(&q), "--mode", "store"])), 2);
    assert_eq!(code(&gj(&["join", path(&d.join("missing.txt"))])), 3);

    fs::write(d.join("bad.txt"), "tabel T1 t1.csv A=A\n").unwrap();
    assert_eq!(code(&gj(&["join", path(&d.join("bad.txt"))])), 4);

    fs::write(d.join("l.csv"), "x\n1\n").unwrap();
    fs::write(d.join("r.csv"), "y\n2\n").unwrap();
    fs::write(
        d.join("apart.txt"),
        "table L l.csv x=X\ntable R r.csv y=Y\nproject X Y\n",
    )
    .unwrap();
    assert_eq!(code(&gj(&["join", path(&d.join("apart.txt"))])), 5);

    let out = d.join("out");
    assert_eq!(
        code(&gj(&[
            "join",
            path(&q),
            "--mode",
            "store",
            "--out",
            path(&out)
        ])),
        0
    );
    fs::write(out.join(GFJS_DIR).join("col_0.csv"), "a1,8\na2,5\n").unwrap();
    let o = gj(&[
        "join",
        path(&q),
        "--mode",
        "load-desummarize",
        "--out",
        path(&out),
    ]);
    assert_eq!(code(&o), 8, "{}", String::from_utf8_lossy(&o.stderr));
}
