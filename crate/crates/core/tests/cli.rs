//! End-to-end checks of the `pnet` binary: the golden path from a synthetic
//! cohort to ranked samples and graph files, the prep/label plumbing, the
//! config-file/flag equivalence and the exit-code contract (0 success,
//! 1 usage, 2 reported errors).

use std::path::Path;
use std::process::{Command, Output};

fn pnet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pnet"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn pnet_ok(dir: &Path, args: &[&str]) -> String {
    let out = pnet(dir, args);
    assert!(
        out.status.success(),
        "pnet {:?} exited with {:?}: {}",
        args,
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

fn lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.trim().is_empty()).collect()
}

#[test]
fn golden_path_from_synthetic_cohort_to_graph_export() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    pnet_ok(
        d,
        &[
            "synth", "--samples", "20", "--features", "120", "--informative", "24", "--effect",
            "2.0", "--seed", "5", "--output", "expr.tsv", "--labels-out", "labels.tsv",
        ],
    );
    assert_eq!(lines(&read(d, "labels.tsv")).len(), 20);

    // prep keeps its filters composable: variance filter here, gene list later
    pnet_ok(
        d,
        &[
            "prep", "--input", "expr.tsv", "--min-mean", "4.0", "--min-sd", "0.05", "--output",
            "prepped.tsv",
        ],
    );

    pnet_ok(
        d,
        &[
            "select", "--input", "prepped.tsv", "--labels", "labels.tsv", "--method", "welch",
            "--top-k", "15", "--output", "genes.txt", "--stats-out", "stats.tsv",
        ],
    );
    let genes = read(d, "genes.txt");
    assert_eq!(lines(&genes).len(), 15, "asked for the top 15 features");
    let stats = read(d, "stats.tsv");
    assert!(stats.starts_with("feature_id\t"), "stats table has a header");
    assert_eq!(lines(&stats).len(), 121, "one row per feature plus header");

    // the selected list feeds straight back into prep
    pnet_ok(
        d,
        &[
            "prep", "--input", "prepped.tsv", "--gene-list", "genes.txt", "--output",
            "reduced.tsv",
        ],
    );
    let reduced = read(d, "reduced.tsv");
    assert_eq!(lines(&reduced).len(), 16, "15 features plus the header row");

    pnet_ok(
        d,
        &[
            "similarity", "--input", "reduced.tsv", "--measure", "pearson", "--output", "w.tsv",
        ],
    );
    pnet_ok(
        d,
        &[
            "kernel", "--input", "w.tsv", "--kernel", "rwk", "--kernel-p", "3", "--output",
            "k.tsv",
        ],
    );
    let kernel = read(d, "k.tsv");
    assert_eq!(lines(&kernel).len(), 21, "20 samples plus the header row");

    // the one-shot command: selection, graph, threshold and scores together
    pnet_ok(
        d,
        &[
            "rank", "--input", "expr.tsv", "--labels", "labels.tsv", "--top-k", "15",
            "--kernel-p", "3", "--seed", "3", "--output", "scores.tsv", "--report",
            "report.json", "--kernel-out", "kfilt.tsv",
        ],
    );

    let scores = read(d, "scores.tsv");
    let rows = lines(&scores);
    assert_eq!(rows.len(), 20);
    let parsed: Vec<f64> = rows
        .iter()
        .map(|l| l.split('\t').nth(1).unwrap().parse().unwrap())
        .collect();
    for pair in parsed.windows(2) {
        assert!(pair[0] >= pair[1], "scores are written best first");
    }

    let report: serde_json::Value = serde_json::from_str(&read(d, "report.json")).unwrap();
    let q = report["quantile"].as_f64().unwrap();
    assert!((0.0..=0.99).contains(&q));
    assert!((0.0..=1.0).contains(&report["loo_auc"].as_f64().unwrap()));
    assert_eq!(report["selected_features"].as_array().unwrap().len(), 15);
    assert_eq!(report["ranking"].as_array().unwrap().len(), 20);
    assert_eq!(report["config"]["kernel"].as_str().unwrap(), "rwk(p=3, a=2, negatives=clip)");

    pnet_ok(
        d,
        &[
            "export-graph", "--kernel", "kfilt.tsv", "--labels", "labels.tsv", "--scores",
            "scores.tsv", "--dot", "g.dot", "--graphml", "g.graphml",
        ],
    );
    let dot = read(d, "g.dot");
    assert!(dot.starts_with("graph cohort {"));
    assert!(dot.contains(" -- "), "edges survived the filter");
    assert!(dot.contains("shape=box"), "positives are drawn as boxes");
    let graphml = read(d, "g.graphml");
    assert!(graphml.contains("<graphml"));
    assert!(graphml.contains("<node id="));
    assert!(graphml.contains("<edge "));

    // ranking is a pure function of its inputs
    pnet_ok(
        d,
        &[
            "rank", "--input", "expr.tsv", "--labels", "labels.tsv", "--top-k", "15",
            "--kernel-p", "3", "--seed", "3", "--output", "scores2.tsv",
        ],
    );
    assert_eq!(read(d, "scores.tsv"), read(d, "scores2.tsv"));
}

#[test]
fn prep_derives_labels_from_survival_times() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    // g_low has mean 2 and gets cut by --min-mean; g_flat survives on mean
    // but dies on --min-sd
    std::fs::write(
        d.join("expr.tsv"),
        "probe\ts1\ts2\ts3\ts4\n\
         g_hi\t8.0\t9.0\t10.0\t11.0\n\
         g_low\t2.0\t2.0\t2.0\t2.0\n\
         g_flat\t7.0\t7.0\t7.0\t7.0\n",
    )
    .unwrap();
    std::fs::write(d.join("survival.tsv"), "s1\t10\ns2\t17.5\ns3\t20\ns4\t5\n").unwrap();

    pnet_ok(
        d,
        &[
            "prep", "--input", "expr.tsv", "--min-mean", "6.0", "--min-sd", "0.5", "--survival",
            "survival.tsv", "--cutoff", "17.5", "--labels-out", "labels.tsv", "--output",
            "out.tsv",
        ],
    );

    // survival strictly below the cutoff marks the sample positive
    assert_eq!(read(d, "labels.tsv"), "s1\t1\ns2\t0\ns3\t0\ns4\t1\n");

    let out = read(d, "out.tsv");
    assert!(out.contains("g_hi"));
    assert!(!out.contains("g_low"), "low-mean feature filtered");
    assert!(!out.contains("g_flat"), "flat feature filtered");
}

#[test]
fn kernel_convergence_table_prints_to_stdout() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    pnet_ok(
        d,
        &[
            "synth", "--samples", "12", "--features", "60", "--informative", "12", "--effect",
            "1.5", "--seed", "2", "--output", "expr.tsv", "--labels-out", "labels.tsv",
        ],
    );
    pnet_ok(d, &["similarity", "--input", "expr.tsv", "--output", "w.tsv"]);

    let stdout = pnet_ok(
        d,
        &[
            "kernel", "--input", "w.tsv", "--convergence", "1,2,8,20", "--output", "k.tsv",
        ],
    );
    let rows = lines(&stdout);
    assert_eq!(rows[0], "p\tcorrelation_with_limit");
    assert_eq!(rows.len(), 5, "header plus one row per requested step count");
    for row in &rows[1..] {
        let corr: f64 = row.split('\t').nth(1).unwrap().parse().unwrap();
        assert!((-1.0..=1.0).contains(&corr));
    }

    // the diagnostic is tied to the random walk kernel
    let out = pnet(
        d,
        &[
            "kernel", "--input", "w.tsv", "--kernel", "gaussian", "--convergence", "1,2",
            "--output", "k2.tsv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_and_flags_produce_the_same_run() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    pnet_ok(
        d,
        &[
            "synth", "--samples", "16", "--features", "80", "--informative", "16", "--effect",
            "2.0", "--seed", "7", "--output", "expr.tsv", "--labels-out", "labels.tsv",
        ],
    );

    std::fs::write(
        d.join("run.conf"),
        "# pipeline settings\n\
         featsel = welch\n\
         top_k = 10\n\
         kernel = rwk\n\
         kernel_p = 3\n\
         score = av\n\
         seed = 3\n",
    )
    .unwrap();

    pnet_ok(
        d,
        &[
            "rank", "--input", "expr.tsv", "--labels", "labels.tsv", "--config", "run.conf",
            "--output", "from_config.tsv",
        ],
    );
    pnet_ok(
        d,
        &[
            "rank", "--input", "expr.tsv", "--labels", "labels.tsv", "--featsel", "welch",
            "--top-k", "10", "--kernel", "rwk", "--kernel-p", "3", "--score", "av", "--seed",
            "3", "--output", "from_flags.tsv",
        ],
    );
    assert_eq!(read(d, "from_config.tsv"), read(d, "from_flags.tsv"));

    // flags override the file
    pnet_ok(
        d,
        &[
            "rank", "--input", "expr.tsv", "--labels", "labels.tsv", "--config", "run.conf",
            "--score", "nn", "--output", "overridden.tsv",
        ],
    );
    assert_ne!(read(d, "from_config.tsv"), read(d, "overridden.tsv"));

    // unknown keys warn but do not fail
    std::fs::write(d.join("odd.conf"), "top_k = 10\nseed = 3\nbanana = 4\n").unwrap();
    let out = pnet(
        d,
        &[
            "rank", "--input", "expr.tsv", "--labels", "labels.tsv", "--config", "odd.conf",
            "--output", "odd.tsv",
        ],
    );
    assert!(out.status.success());
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("banana"),
        "the unused key is called out"
    );

    // duplicate keys are a hard error, with the line number
    std::fs::write(d.join("dup.conf"), "top_k = 10\ntop_k = 20\n").unwrap();
    let out = pnet(
        d,
        &[
            "rank", "--input", "expr.tsv", "--labels", "labels.tsv", "--config", "dup.conf",
            "--output", "dup.tsv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn eval_commands_write_reports_and_accuracies() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    pnet_ok(
        d,
        &[
            "synth", "--samples", "18", "--features", "60", "--informative", "12", "--effect",
            "2.0", "--seed", "11", "--output", "expr.tsv", "--labels-out", "labels.tsv",
        ],
    );

    pnet_ok(
        d,
        &[
            "eval-mccv", "--input", "expr.tsv", "--labels", "labels.tsv", "--rounds", "4",
            "--train-size", "12", "--top-k", "10", "--kernel-p", "3", "--seed", "3",
            "--output", "mccv.json", "--accuracies-out", "acc.tsv",
        ],
    );
    let report: serde_json::Value = serde_json::from_str(&read(d, "mccv.json")).unwrap();
    assert_eq!(report["method"], "mccv");
    assert_eq!(report["rounds"].as_array().unwrap().len(), 4);
    assert_eq!(report["summary"]["rounds_completed"], 4);
    let acc = read(d, "acc.tsv");
    let rows = lines(&acc);
    assert_eq!(rows[0], "round\taccuracy");
    assert_eq!(rows.len(), 5);

    pnet_ok(
        d,
        &[
            "eval-cv", "--input", "expr.tsv", "--labels", "labels.tsv", "--rounds", "2",
            "--folds", "3", "--top-k", "10", "--kernel-p", "3", "--seed", "3", "--output",
            "cv.json",
        ],
    );
    let report: serde_json::Value = serde_json::from_str(&read(d, "cv.json")).unwrap();
    assert_eq!(report["method"], "kfold");
    // every sample is tested once per round, so patients show two tests each
    for patient in report["patients"].as_array().unwrap() {
        assert_eq!(patient["times_tested"], 2);
    }

    // folds = samples is leave-one-out
    pnet_ok(
        d,
        &[
            "eval-cv", "--input", "expr.tsv", "--labels", "labels.tsv", "--rounds", "1",
            "--folds", "18", "--top-k", "10", "--kernel-p", "3", "--seed", "3", "--output",
            "loo.json",
        ],
    );
    let report: serde_json::Value = serde_json::from_str(&read(d, "loo.json")).unwrap();
    assert_eq!(report["rounds"][0]["folds"].as_array().unwrap().len(), 18);
}

#[test]
fn exit_codes_follow_the_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    assert!(pnet(d, &["--help"]).status.success());
    assert!(pnet(d, &["--version"]).status.success());
    assert!(pnet(d, &["rank", "--help"]).status.success());

    // usage mistakes are clap's: exit 1
    assert_eq!(pnet(d, &["no-such-command"]).status.code(), Some(1));
    assert_eq!(pnet(d, &["rank"]).status.code(), Some(1), "missing required flags");
    assert_eq!(
        pnet(d, &["synth", "--samples", "not-a-number", "--output", "x", "--labels-out", "y"])
            .status
            .code(),
        Some(1)
    );

    // anything the tool itself reports: exit 2
    let out = pnet(
        d,
        &["rank", "--input", "missing.tsv", "--labels", "missing.tsv", "--output", "s.tsv"],
    );
    assert_eq!(out.status.code(), Some(2));

    pnet_ok(
        d,
        &[
            "synth", "--samples", "8", "--features", "20", "--informative", "4", "--effect",
            "1.0", "--seed", "1", "--output", "expr.tsv", "--labels-out", "labels.tsv",
        ],
    );
    let out = pnet(
        d,
        &[
            "rank", "--input", "expr.tsv", "--labels", "labels.tsv", "--kernel", "bogus",
            "--output", "s.tsv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    // labels that do not cover the cohort
    std::fs::write(d.join("short.tsv"), "S1\t1\nS2\t0\n").unwrap();
    let out = pnet(
        d,
        &["rank", "--input", "expr.tsv", "--labels", "short.tsv", "--output", "s.tsv"],
    );
    assert_eq!(out.status.code(), Some(2));
}
