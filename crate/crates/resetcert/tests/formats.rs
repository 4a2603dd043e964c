use resetcert::config::ProblemConfig;
use resetcert::format::*;
use resetcert::sdp::{solve, verify_certificate, ClarabelBackend, Verdict};
use resetcert_core::lmi::{assemble_conditions, LmiProblem};
use resetcert_core::sim::{simulate_reset_system, ResettingLaw};

fn example2() -> (ProblemConfig, LmiProblem) {
    let cfg = ProblemConfig::unstable_base_example(0.05, 0.5);
    let p = assemble_conditions(&cfg.sampled().unwrap(), &cfg.query().unwrap(), &cfg.formulation()).unwrap();
    (cfg, p)
}

fn record(cfg: &ProblemConfig) -> QueryRecord {
    QueryRecord::new(&cfg.query().unwrap(), cfg.analysis.formulation)
}

#[test]
fn certificate_round_trip_reproduces_margins() {
    let (cfg, p) = example2();
    let cert = solve(&p, &ClarabelBackend, &cfg.solver);
    assert_eq!(cert.verdict, Verdict::Feasible);
    let file = CertificateFile::new(&cert, &p, record(&cfg));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    file.save(&path).unwrap();

    let loaded = CertificateFile::load(&path).unwrap();
    assert_eq!(loaded, file);
    let vars = loaded.decision_variables(&p).unwrap();
    assert_eq!(vars.values(), cert.variables.as_ref().unwrap().values());
    let again = verify_certificate(&p, &vars).unwrap();
    assert!(again.passes());
    for (a, b) in again.blocks.iter().zip(&loaded.residuals) {
        assert_eq!(a.label.to_string(), b.label);
        assert_eq!(a.margin, b.margin);
    }

    // a single flipped entry breaks the certificate
    let mut corrupted = loaded.clone();
    let p_rows = corrupted.variables.as_mut().unwrap().get_mut("P").unwrap();
    p_rows[0][0] = -p_rows[0][0] - 1.0;
    let bad = corrupted.decision_variables(&p).unwrap();
    assert!(!verify_certificate(&p, &bad).unwrap().passes());

    let mut missing = loaded.clone();
    missing.variables.as_mut().unwrap().remove("S");
    assert!(missing.decision_variables(&p).is_err());

    let mut resized = loaded;
    resized.variables.as_mut().unwrap().get_mut("R").unwrap().pop();
    assert!(resized.decision_variables(&p).is_err());
}

#[test]
fn schema_version_is_checked() {
    let (cfg, p) = example2();
    let cert = solve(&p, &ClarabelBackend, &cfg.solver);
    let mut v = serde_json::to_value(CertificateFile::new(&cert, &p, record(&cfg))).unwrap();
    v["schema_version"] = 99.into();
    assert!(CertificateFile::from_json(&v.to_string()).is_err());
}

#[test]
fn problem_dump_lists_every_block_and_variable() {
    let (cfg, p) = example2();
    let dump = ProblemFile::new(&p, record(&cfg));
    assert_eq!(dump.blocks.len(), p.blocks.len());
    assert_eq!(dump.num_scalars, p.layout.len());
    let total: usize = dump.variables.iter().map(|v| v.len).sum();
    assert_eq!(total, p.layout.len());
    assert_eq!(dump.blocks[0].label, "cond1");
    for (b, orig) in dump.blocks.iter().zip(&p.blocks) {
        assert_eq!(b.dim, orig.block.dim);
        assert!(b.coefficients.iter().all(|c| c.entries.iter().all(|&(r, col, _)| r <= col && col < b.dim)));
    }
    let text = serde_json::to_string(&dump).unwrap();
    let back: ProblemFile = serde_json::from_str(&text).unwrap();
    assert_eq!(back, dump);
}

#[test]
fn csv_starts_with_config_and_header() {
    let cfg = ProblemConfig::integrator_example();
    let mut buf = Vec::new();
    let header = ["M", "T_m"].map(String::from);
    write_csv(&mut buf, &cfg.to_json(), &header, &[vec!["1".into(), "0.94".into()]]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let first = lines.next().unwrap();
    let json = first.strip_prefix("# config: ").unwrap();
    assert_eq!(ProblemConfig::from_json(json).unwrap(), cfg);
    assert_eq!(lines.next(), Some("M,T_m"));
    assert_eq!(lines.next(), Some("1,0.94"));
}

#[test]
fn trajectory_rows_mark_resets_with_both_states() {
    let cfg = ProblemConfig::unstable_base_example(0.05, 0.5);
    let traj = simulate_reset_system(
        &cfg.closed_loop().unwrap(),
        &ResettingLaw::Periodic { period: 0.5 },
        &cfg.initial_condition().unwrap(),
        2.0,
        0.005,
    )
    .unwrap();
    let (header, rows) = trajectory_rows(&traj);
    assert_eq!(header, ["t", "x1", "x2", "x3", "x4", "reset"]);
    assert_eq!(rows.len(), traj.times.len() + traj.resets.len());
    let flagged: Vec<&Vec<String>> = rows.iter().filter(|r| r[5] == "1").collect();
    assert_eq!(flagged.len(), traj.resets.len());
    for r in flagged {
        // the reset integrator is zero right after a reset
        assert_eq!(r[4].parse::<f64>().unwrap(), 0.0);
    }
}
