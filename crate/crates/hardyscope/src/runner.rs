//! Job execution: dispatches a validated config to the computation
//! modules, writes CSV and JSON artifacts, and returns a manifest that
//! hash-covers every emitted file. Exit-status semantics live in the
//! check list: a run is good when no error occurred and every check
//! passed.

use crate::classify::{classify_domain, verdict_from, ClassifySettings};
use crate::config::{JobConfig, TaskKind};
use crate::domain::DomainSpec;
use crate::error::Result;
use crate::expr::Expr;
use crate::flowcheck::santalo_compare;
use crate::hardy::{
    croke_bound, hardy_1d, hardy_report, interior_grid, test_suite, weight_field,
    DirectionQuadrature,
};
use crate::spectrum::{assemble_pencil, lowest_eigenvalues, truncation_study};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Clone, Debug, serde::Serialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub task: String,
    pub seed: u64,
    /// Wall-clock duration; the one volatile field, excluded from
    /// determinism comparisons.
    pub wall_ms: u128,
    pub artifacts: Vec<ArtifactEntry>,
    pub checks: Vec<CheckEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct ReportBundle {
    pub manifest: Manifest,
    pub out_dir: PathBuf,
    pub ok: bool,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

struct Emitter {
    out_dir: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl Emitter {
    fn write(&mut self, name: &str, content: &[u8]) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir)?;
        std::fs::write(self.out_dir.join(name), content)?;
        self.entries.push(ArtifactEntry {
            name: name.to_string(),
            bytes: content.len() as u64,
            sha256: sha256_hex(content),
        });
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

/// No JSON nulls anywhere: serde turns non-finite floats into null, so a
/// clean tree certifies every number made it through finite.
fn json_is_clean(v: &Value) -> bool {
    match v {
        Value::Null => false,
        Value::Array(a) => a.iter().all(json_is_clean),
        Value::Object(o) => o.values().all(json_is_clean),
        _ => true,
    }
}

fn fnum(x: f64) -> String {
    format!("{x:.17e}")
}

struct TaskOutput {
    checks: Vec<CheckEntry>,
}

fn check(checks: &mut Vec<CheckEntry>, name: &str, pass: bool, detail: String) {
    checks.push(CheckEntry { name: name.to_string(), pass, detail });
}

fn quadrature(cfg: &JobConfig, dom: &DomainSpec) -> Result<DirectionQuadrature> {
    match cfg.params.t_max {
        Some(t) => DirectionQuadrature::new(cfg.n_dirs(), t),
        None => DirectionQuadrature::for_domain(dom, cfg.n_dirs()),
    }
}

fn run_weight(cfg: &JobConfig, em: &mut Emitter) -> Result<TaskOutput> {
    let model = cfg.build_model()?;
    let dom = cfg.build_domain(&model)?;
    let bb = dom.bounding_box();
    let h = cfg.params.h.unwrap_or(bb.diagonal() / 64.0);
    let quad = quadrature(cfg, &dom)?;
    let gamma_only = cfg.params.gamma_only.unwrap_or(false);
    let field = weight_field(&dom, h, &quad, gamma_only)?;

    let mut csv = String::from("x,y,d,m,flags\n");
    let mut min_ratio = f64::INFINITY;
    let mut n_finite = 0usize;
    for node in &field.nodes {
        let mut flags = Vec::new();
        if node.frac_capped > 0.0 {
            flags.push("capped");
        }
        if node.frac_infinite > 0.0 {
            flags.push("infinite");
        }
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fnum(node.p.x),
            fnum(node.p.y),
            fnum(node.d),
            fnum(node.m),
            flags.join("|")
        ));
        if node.m.is_finite() {
            n_finite += 1;
            if node.d > 0.0 {
                min_ratio = min_ratio.min(node.m / node.d);
            }
        }
    }
    em.write("weight.csv", csv.as_bytes())?;

    let mut summary = Map::new();
    summary.insert("n_nodes".into(), json!(field.nodes.len()));
    summary.insert("n_finite".into(), json!(n_finite));
    summary.insert("h".into(), json!(h));
    summary.insert("n_dirs".into(), json!(field.quad.n_dirs));
    summary.insert("t_max".into(), json!(field.quad.t_max.min(f64::MAX)));
    summary.insert("gamma_restricted".into(), json!(field.gamma_restricted));
    if min_ratio.is_finite() {
        summary.insert("min_m_over_d".into(), json!(min_ratio));
    }
    let summary = Value::Object(summary);
    em.write_json("weight.json", &summary)?;

    let mut checks = Vec::new();
    let ge = field
        .nodes
        .iter()
        .filter(|n| n.m.is_finite())
        .all(|n| n.m + 1e-9 >= n.d);
    check(
        &mut checks,
        "weight_dominates_distance",
        ge,
        format!("min m/d = {min_ratio:.6}"),
    );
    check(
        &mut checks,
        "summary_serializes_clean",
        json_is_clean(&summary),
        "weight.json has no nulls".into(),
    );
    if dom.has_compact_closure() && !gamma_only {
        check(
            &mut checks,
            "all_rays_hit",
            n_finite == field.nodes.len(),
            format!("{n_finite} of {} nodes finite", field.nodes.len()),
        );
    }
    Ok(TaskOutput { checks })
}

fn run_hardy(cfg: &JobConfig, em: &mut Emitter) -> Result<TaskOutput> {
    let model = cfg.build_model()?;
    let dom = cfg.build_domain(&model)?;
    let bb = dom.bounding_box();
    let h = cfg.params.h.unwrap_or(bb.diagonal() / 48.0);
    let quad = quadrature(cfg, &dom)?;
    let field = weight_field(&dom, h, &quad, dom.has_gamma())?;
    let count = cfg.params.count.unwrap_or(20);
    let suite = test_suite(&dom, count, cfg.seed());

    let mut rows = Vec::new();
    let mut csv = String::from("label,energy,rhs,ratio,violated\n");
    let mut n_violated = 0usize;
    let mut n_failed = 0usize;
    for f in &suite {
        match hardy_report(&dom, f, &field) {
            Ok(rep) => {
                if rep.violated {
                    n_violated += 1;
                }
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    rep.label,
                    fnum(rep.energy),
                    fnum(rep.rhs),
                    fnum(rep.ratio),
                    rep.violated
                ));
                rows.push(json!({
                    "label": rep.label,
                    "energy": rep.energy,
                    "energy_err": rep.energy_err,
                    "rhs": rep.rhs,
                    "ratio": rep.ratio,
                    "quad_error_budget": rep.quad_error_budget,
                    "violated": rep.violated,
                }));
            }
            Err(_) => n_failed += 1,
        }
    }
    em.write("hardy.csv", csv.as_bytes())?;
    let payload = json!({
        "n_functions": suite.len(),
        "n_violated": n_violated,
        "n_failed": n_failed,
        "h": h,
        "reports": rows,
    });
    em.write_json("hardy.json", &payload)?;

    let mut checks = Vec::new();
    check(
        &mut checks,
        "no_violations",
        n_violated == 0,
        format!("{n_violated} of {} violated", suite.len()),
    );
    check(
        &mut checks,
        "all_reports_computed",
        n_failed == 0,
        format!("{n_failed} reports failed"),
    );
    check(
        &mut checks,
        "report_serializes_clean",
        json_is_clean(&payload),
        "hardy.json has no nulls".into(),
    );
    Ok(TaskOutput { checks })
}

fn run_classify(cfg: &JobConfig, em: &mut Emitter) -> Result<TaskOutput> {
    let model = cfg.build_model()?;
    let dom = cfg.build_domain(&model)?;
    let mut settings = ClassifySettings::for_domain(&dom);
    settings.seed = cfg.seed();
    if let Some(eps) = &cfg.params.epsilons {
        settings.epsilons = eps.clone();
    }
    if let Some(n) = cfg.params.n_samples {
        settings.n_samples = n;
    }
    if let Some(h) = cfg.params.h {
        settings.field_h = h;
    }
    if let Some(n) = cfg.params.n_dirs {
        settings.n_dirs = n;
    }
    let cert = classify_domain(&dom, &settings)?;
    let payload = serde_json::to_value(&cert)?;
    em.write_json("certificate.json", &payload)?;

    let mut checks = Vec::new();
    check(
        &mut checks,
        "certificate_serializes_clean",
        json_is_clean(&payload),
        "certificate.json has no nulls".into(),
    );
    let rederived = verdict_from(
        dom.has_compact_closure(),
        cert.qb.verdict,
        cert.bdr.as_ref().map(|b| b.verdict),
    );
    check(
        &mut checks,
        "verdict_consistent",
        rederived == cert.verdict,
        format!("verdict {:?}", cert.verdict),
    );
    Ok(TaskOutput { checks })
}

fn run_spectrum(cfg: &JobConfig, em: &mut Emitter) -> Result<TaskOutput> {
    let model = cfg.build_model()?;
    let dom = cfg.build_domain(&model)?;
    let bb = dom.bounding_box();
    let min_side = (bb.hi.x - bb.lo.x).min(bb.hi.y - bb.lo.y);
    let h = cfg.params.h.unwrap_or(min_side / 64.0);
    let k = cfg.params.k.unwrap_or(3);
    let tol = cfg.params.tol.unwrap_or(1e-8);
    let mut checks = Vec::new();

    if let Some(levels) = &cfg.params.cut_levels {
        let study = truncation_study(&dom, levels, h, k)?;
        em.write("truncation.csv", study.to_csv().as_bytes())?;
        let rows: Vec<Value> = study
            .rows
            .iter()
            .map(|r| {
                json!({
                    "cut": r.cut,
                    "n_nodes": r.n_nodes,
                    "values": r.values,
                    "diffs": r.diffs.clone().unwrap_or_default(),
                    "residuals": r.residuals,
                })
            })
            .collect();
        let payload = json!({
            "h": h,
            "k": study.k,
            "rows": rows,
            "skipped": study.skipped,
            "monotone_ok": study.monotone_ok,
            "cauchy_ok": study.cauchy_ok.map(Value::Bool).unwrap_or(Value::String("undetermined".into())),
        });
        em.write_json("spectrum.json", &payload)?;
        check(
            &mut checks,
            "levels_nonincreasing",
            study.monotone_ok,
            "eigenvalues shrink as the cut deepens".into(),
        );
        check(
            &mut checks,
            "levels_cauchy",
            study.cauchy_ok != Some(false),
            format!("{:?}", study.cauchy_ok),
        );
        check(
            &mut checks,
            "report_serializes_clean",
            json_is_clean(&payload),
            "spectrum.json has no nulls".into(),
        );
        return Ok(TaskOutput { checks });
    }

    let (grid, pencil) = assemble_pencil(&dom, h)?;
    let eig = lowest_eigenvalues(&pencil, k, tol)?;
    let mut csv = String::from("index,lambda,residual\n");
    for (i, (val, res)) in eig.values.iter().zip(&eig.residual_norms).enumerate() {
        csv.push_str(&format!("{},{},{}\n", i + 1, fnum(*val), fnum(*res)));
    }
    em.write("eigen.csv", csv.as_bytes())?;
    let payload = json!({
        "h": h,
        "n_nodes": grid.len(),
        "values": eig.values,
        "residuals": eig.residual_norms,
    });
    em.write_json("spectrum.json", &payload)?;

    let ascending =
        eig.values.windows(2).all(|w| w[0] <= w[1] + 1e-12) && eig.values[0] > 0.0;
    check(
        &mut checks,
        "positive_ascending",
        ascending,
        format!("lambda_1 = {:.6}", eig.values[0]),
    );
    let res_ok = eig.residual_norms.iter().all(|r| *r <= tol * 10.0);
    check(
        &mut checks,
        "residuals_small",
        res_ok,
        format!("max residual {:.3e}", eig.residual_norms.iter().cloned().fold(0.0, f64::max)),
    );
    check(
        &mut checks,
        "report_serializes_clean",
        json_is_clean(&payload),
        "spectrum.json has no nulls".into(),
    );
    Ok(TaskOutput { checks })
}

fn run_croke(cfg: &JobConfig, em: &mut Emitter) -> Result<TaskOutput> {
    let model = cfg.build_model()?;
    let dom = cfg.build_domain(&model)?;
    let quad = quadrature(cfg, &dom)?;
    let points = interior_grid(&dom, 12);
    let rep = croke_bound(&dom, &quad, &points)?;

    let mut payload = Map::new();
    payload.insert("bound".into(), json!(rep.bound));
    payload.insert("at".into(), json!([rep.at.x, rep.at.y]));
    payload.insert("n_points".into(), json!(rep.n_points));
    payload.insert("n_infinite".into(), json!(rep.n_infinite));
    payload.insert("n_capped".into(), json!(rep.n_capped));

    let mut checks = Vec::new();
    check(
        &mut checks,
        "positive_bound",
        rep.bound > 0.0,
        format!("bound = {:.6}", rep.bound),
    );
    check(
        &mut checks,
        "chords_resolved",
        rep.n_infinite == 0,
        format!("{} escaping chords", rep.n_infinite),
    );

    // A grid spacing in the config requests the eigenvalue cross-check.
    if let Some(h) = cfg.params.h {
        let (_, pencil) = assemble_pencil(&dom, h)?;
        let eig = lowest_eigenvalues(&pencil, 1, cfg.params.tol.unwrap_or(1e-8))?;
        let lambda1 = eig.values[0];
        payload.insert("lambda_1".into(), json!(lambda1));
        payload.insert("grid_h".into(), json!(h));
        check(
            &mut checks,
            "bound_below_lambda_1",
            rep.bound <= lambda1 * (1.0 + 1e-6),
            format!("bound {:.6} vs lambda_1 {:.6}", rep.bound, lambda1),
        );
    }
    let payload = Value::Object(payload);
    em.write_json("croke.json", &payload)?;
    check(
        &mut checks,
        "report_serializes_clean",
        json_is_clean(&payload),
        "croke.json has no nulls".into(),
    );
    Ok(TaskOutput { checks })
}

fn run_santalo(cfg: &JobConfig, em: &mut Emitter) -> Result<TaskOutput> {
    let model = cfg.build_model()?;
    let dom = cfg.build_domain(&model)?;
    let n = cfg.params.n_samples.unwrap_or(200_000);
    let rep = match &cfg.params.integrand {
        Some(src) => {
            let expr = Expr::parse(src, &["x", "y"])?;
            santalo_compare(&dom, move |p, _| expr.eval(&[p.x, p.y]), n, cfg.seed())?
        }
        None => santalo_compare(&dom, |_, _| 1.0, n, cfg.seed())?,
    };
    let payload = serde_json::to_value(&rep)?;
    em.write_json("santalo.json", &payload)?;

    let mut checks = Vec::new();
    check(
        &mut checks,
        "sides_agree_3sigma",
        rep.agrees,
        format!("gap {:.3} sigma", rep.sigma_gap),
    );
    check(
        &mut checks,
        "no_critical_hits",
        rep.critical_hits == 0,
        format!("{} critical hits", rep.critical_hits),
    );
    check(
        &mut checks,
        "stderr_positive",
        rep.stderr_lhs > 0.0 && rep.stderr_rhs > 0.0,
        format!("stderr {:.3e} / {:.3e}", rep.stderr_lhs, rep.stderr_rhs),
    );
    check(
        &mut checks,
        "report_serializes_clean",
        json_is_clean(&payload),
        "santalo.json has no nulls".into(),
    );
    Ok(TaskOutput { checks })
}

fn run_hardy1d(cfg: &JobConfig, em: &mut Emitter) -> Result<TaskOutput> {
    use rand::{Rng, SeedableRng};
    let mut cases = Vec::new();

    // Parabolic bump on the unit interval; the weighted integral has the
    // closed form 7/48 and the derivative energy is 1/3.
    let parabola = hardy_1d(
        &|x| x * (1.0 - x),
        Some(&|x| 1.0 - 2.0 * x),
        0.0,
        1.0,
        100_000,
    )?;
    let oracle_weighted = 7.0 / 48.0;
    cases.push(json!({
        "name": "parabolic_bump",
        "energy": parabola.energy,
        "weighted": parabola.weighted,
        "ratio": parabola.ratio,
        "oracle_weighted": oracle_weighted,
    }));

    // Exponential tail on the half-axis; the ratio is exactly 2.
    let tail = hardy_1d(
        &|x| x * (-x).exp(),
        Some(&|x| (1.0 - x) * (-x).exp()),
        0.0,
        f64::INFINITY,
        100_000,
    )?;
    cases.push(json!({
        "name": "exponential_tail",
        "energy": tail.energy,
        "weighted": tail.weighted,
        "ratio": tail.ratio,
        "oracle_ratio": 2.0,
    }));

    // Random polynomial bumps vanishing at both endpoints.
    let count = cfg.params.count.unwrap_or(100);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed());
    let mut min_ratio = f64::INFINITY;
    let mut bump_rows = Vec::new();
    for i in 0..count {
        let mut terms = Vec::new();
        for _ in 0..3 {
            let c: f64 = rng.gen_range(0.2..1.0);
            let p: i32 = rng.gen_range(1..=3);
            let q: i32 = rng.gen_range(1..=3);
            terms.push((c, p, q));
        }
        let f = {
            let terms = terms.clone();
            move |x: f64| -> f64 {
                terms
                    .iter()
                    .map(|(c, p, q)| c * x.powi(*p) * (1.0 - x).powi(*q))
                    .sum()
            }
        };
        let rep = hardy_1d(&f, None, 0.0, 1.0, 2048)?;
        min_ratio = min_ratio.min(rep.ratio);
        bump_rows.push(json!({"index": i, "ratio": rep.ratio}));
    }

    let payload = json!({
        "cases": cases,
        "n_bumps": count,
        "min_bump_ratio": min_ratio,
        "bumps": bump_rows,
    });
    em.write_json("hardy1d.json", &payload)?;

    let mut checks = Vec::new();
    check(
        &mut checks,
        "parabola_weighted_exact",
        (parabola.weighted - oracle_weighted).abs() < 1e-6,
        format!("weighted {} vs 7/48", parabola.weighted),
    );
    check(
        &mut checks,
        "tail_ratio_exact",
        (tail.ratio - 2.0).abs() < 1e-6,
        format!("ratio {}", tail.ratio),
    );
    check(
        &mut checks,
        "bump_ratios_at_least_one",
        min_ratio >= 1.0 - 1e-9,
        format!("min ratio {min_ratio}"),
    );
    check(
        &mut checks,
        "report_serializes_clean",
        json_is_clean(&payload),
        "hardy1d.json has no nulls".into(),
    );
    Ok(TaskOutput { checks })
}

/// Runs one job: dispatch, artifact emission, manifest. Computation
/// errors are captured into the manifest rather than propagated, so the
/// caller still gets the bundle (and a nonzero status via `ok`).
pub fn run_job(cfg: &JobConfig, config_bytes: &[u8], out_dir: &Path) -> Result<ReportBundle> {
    let start = Instant::now();
    let mut em = Emitter { out_dir: out_dir.to_path_buf(), entries: Vec::new() };
    let result = match cfg.task {
        TaskKind::Weight => run_weight(cfg, &mut em),
        TaskKind::Hardy => run_hardy(cfg, &mut em),
        TaskKind::Classify => run_classify(cfg, &mut em),
        TaskKind::Spectrum => run_spectrum(cfg, &mut em),
        TaskKind::Croke => run_croke(cfg, &mut em),
        TaskKind::Santalo => run_santalo(cfg, &mut em),
        TaskKind::Hardy1d => run_hardy1d(cfg, &mut em),
    };
    let (checks, error) = match result {
        Ok(out) => (out.checks, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let ok = error.is_none() && checks.iter().all(|c| c.pass);
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_hex(config_bytes),
        task: cfg.task.name().to_string(),
        seed: cfg.seed(),
        wall_ms: start.elapsed().as_millis(),
        artifacts: em.entries.clone(),
        checks,
        error,
    };
    let manifest_text = format!("{}\n", serde_json::to_string_pretty(&manifest)?);
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("manifest.json"), manifest_text)?;
    Ok(ReportBundle { manifest, out_dir: out_dir.to_path_buf(), ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn run_str(json: &str, dir: &Path) -> ReportBundle {
        let cfg = parse_config(json).unwrap();
        run_job(&cfg, json.as_bytes(), dir).unwrap()
    }

    #[test]
    fn weight_task_emits_field_and_passes() {
        let tmp = tempfile::tempdir().unwrap();
        let bundle = run_str(
            r#"{"domain": {"shape": "unit_disk"}, "task": "weight",
                "params": {"h": 0.2, "n_dirs": 64}}"#,
            tmp.path(),
        );
        assert!(bundle.ok, "{:?}", bundle.manifest.checks);
        let names: Vec<&str> =
            bundle.manifest.artifacts.iter().map(|a| a.name.as_str()).collect();
        assert!(names.contains(&"weight.csv"));
        assert!(names.contains(&"weight.json"));
        let csv = std::fs::read_to_string(tmp.path().join("weight.csv")).unwrap();
        assert!(csv.starts_with("x,y,d,m,flags\n"));
        // Center node weight equals the radius.
        let center = csv
            .lines()
            .find(|l| l.starts_with("0.0") || l.starts_with("-0.0"))
            .and_then(|l| {
                let f: Vec<&str> = l.split(',').collect();
                let x: f64 = f[0].parse().ok()?;
                let y: f64 = f[1].parse().ok()?;
                let m: f64 = f[3].parse().ok()?;
                ((x.abs() < 1e-12) && (y.abs() < 1e-12)).then_some(m)
            });
        if let Some(m) = center {
            assert!((m - 1.0).abs() < 1e-3, "m(0,0) = {m}");
        }
    }

    #[test]
    fn manifest_hashes_cover_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let bundle = run_str(
            r#"{"domain": {"shape": "unit_square"}, "task": "weight",
                "params": {"h": 0.25, "n_dirs": 32}}"#,
            tmp.path(),
        );
        for a in &bundle.manifest.artifacts {
            let bytes = std::fs::read(tmp.path().join(&a.name)).unwrap();
            assert_eq!(bytes.len() as u64, a.bytes);
            assert_eq!(sha256_hex(&bytes), a.sha256, "hash mismatch for {}", a.name);
        }
        assert!(tmp.path().join("manifest.json").exists());
    }

    #[test]
    fn hardy1d_task_reproduces_oracles() {
        let tmp = tempfile::tempdir().unwrap();
        let bundle = run_str(r#"{"task": "hardy1d", "params": {"count": 10}}"#, tmp.path());
        assert!(bundle.ok, "{:?}", bundle.manifest.checks);
    }

    #[test]
    fn spectrum_task_on_square_matches_oracle() {
        let tmp = tempfile::tempdir().unwrap();
        let bundle = run_str(
            r#"{"domain": {"shape": "unit_square"}, "task": "spectrum",
                "params": {"h": 0.0625, "k": 2}}"#,
            tmp.path(),
        );
        assert!(bundle.ok, "{:?}", bundle.manifest.checks);
        let payload: Value = serde_json::from_str(
            &std::fs::read_to_string(tmp.path().join("spectrum.json")).unwrap(),
        )
        .unwrap();
        let l1 = payload["values"][0].as_f64().unwrap();
        // Coarse grid, generous window around 2 pi^2.
        assert!((l1 - 19.739).abs() < 0.3, "lambda_1 = {l1}");
    }

    #[test]
    fn croke_task_with_cross_check() {
        let tmp = tempfile::tempdir().unwrap();
        let bundle = run_str(
            r#"{"domain": {"shape": "unit_square"}, "task": "croke",
                "params": {"h": 0.0625, "n_dirs": 256}}"#,
            tmp.path(),
        );
        assert!(bundle.ok, "{:?}", bundle.manifest.checks);
        assert!(bundle.manifest.checks.iter().any(|c| c.name == "bound_below_lambda_1"));
    }

    #[test]
    fn santalo_task_with_expression_integrand() {
        let tmp = tempfile::tempdir().unwrap();
        let bundle = run_str(
            r#"{"domain": {"shape": "unit_disk"}, "task": "santalo",
                "params": {"n_samples": 20000, "integrand": "1 - x^2 - y^2"}}"#,
            tmp.path(),
        );
        assert!(bundle.ok, "{:?}", bundle.manifest.checks);
    }

    #[test]
    fn failed_computation_lands_in_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        // Santalo needs a compact domain; the half-plane is not.
        let bundle = run_str(
            r#"{"domain": {"shape": "half_plane"}, "task": "santalo",
                "params": {"n_samples": 1000}}"#,
            tmp.path(),
        );
        assert!(!bundle.ok);
        assert!(bundle.manifest.error.is_some());
        assert!(tmp.path().join("manifest.json").exists());
    }

    #[test]
    fn same_seed_runs_are_byte_identical() {
        let json = r#"{"domain": {"shape": "unit_disk"}, "task": "weight",
                       "params": {"h": 0.25, "n_dirs": 32, "seed": 5}}"#;
        let t1 = tempfile::tempdir().unwrap();
        let t2 = tempfile::tempdir().unwrap();
        let b1 = run_str(json, t1.path());
        let b2 = run_str(json, t2.path());
        for (a1, a2) in b1.manifest.artifacts.iter().zip(&b2.manifest.artifacts) {
            assert_eq!(a1.name, a2.name);
            assert_eq!(a1.sha256, a2.sha256, "artifact {} differs", a1.name);
        }
    }
}
