//! The five subcommands. Each writes its outputs and a `<name>_report.json`
//! into the configured directory and returns the report.

use std::fmt::Write as _;
use std::fs;

use anyhow::Context;
use chipnet::charts::{
    chart_identity_error, chart_sequence, proj_disjointness_check, tetra_invariance_check, union_identity_error,
    write_words_csv,
};
use chipnet::chipper::{genealogy, rate_policy, regularity_violations};
use chipnet::dimension::{
    box_count, box_dim_fit, irreducibility_probe, proximality_check, s0_estimate, IrreducibilityBranch,
    SyntheticWords,
};
use chipnet::polytope::{edge_net, obj, validate};
use chipnet::{chip_sequence, make_seed, ChipRates, ChipSequence, Error, MatrixWord, VertexId, WordSpace};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::report::{report_name, sha256_file, Recorder, RunReport};

/// Bracket of the pressure-root bisection.
const ROOT_BRACKET: (f64, f64) = (0.0, 3.0);
/// Tolerance of the λ series behind each chart.
const CHART_TOL: f64 = 1e-13;
/// Largest accepted chart-composition error.
const IDENTITY_TOL: f64 = 1e-9;
/// Largest accepted `|λ_vu + λ_uv - 1|`.
const LAMBDA_SUM_TOL: f64 = 1e-10;

fn sequence(cfg: &RunConfig) -> anyhow::Result<ChipSequence> {
    let seed = make_seed(cfg.seed_shape);
    Ok(chip_sequence(&seed, &cfg.rate_policy()?, cfg.depth, cfg.rng_seed)?)
}

fn generation_summary(seq: &ChipSequence) -> Vec<Value> {
    seq.polys()
        .iter()
        .enumerate()
        .map(|(n, p)| {
            json!({
                "generation": n,
                "vertices": p.vertex_count(),
                "edges": p.edge_count(),
                "faces": p.face_count(),
            })
        })
        .collect()
}

/// One OBJ per generation plus every rate used, keyed by vertex code.
pub fn chip(cfg: &RunConfig) -> anyhow::Result<RunReport> {
    let mut rec = Recorder::new("chip", cfg)?;
    rec.stage("chip");
    let seq = sequence(cfg)?;

    rec.stage("write");
    for (n, p) in seq.polys().iter().enumerate() {
        rec.write(&format!("poly_{n}.obj"), |buf| Ok(obj::write_polyhedron(buf, p)?))?;
    }
    let generations: Vec<Value> = (0..seq.rate_generations())
        .map(|g| {
            let p = seq.poly(g);
            let rates = seq.rates(g);
            let edges: Vec<(u32, u32, f64)> = (0..p.vertex_count() as u32)
                .flat_map(|v| p.neighbours(v).iter().enumerate().map(move |(m, &u)| (v, u, m)))
                .map(|(v, u, m)| (v, u, rates.get(v, m)))
                .collect();
            json!({ "generation": g, "vertices": p.vertex_count(), "edges": edges })
        })
        .collect();
    rec.write_json(
        "rates_manifest.json",
        &json!({
            "policy": seq.policy(),
            "rng_seed": seq.seed(),
            "margin": seq.policy().margin(),
            "generations": generations,
        }),
    )?;
    rec.finish(json!({ "generations": generation_summary(&seq) }))
}

/// Edge nets of every generation and the words of a fixed depth.
pub fn export(cfg: &RunConfig) -> anyhow::Result<RunReport> {
    let mut rec = Recorder::new("export", cfg)?;
    rec.stage("chip");
    let seq = sequence(cfg)?;

    rec.stage("write");
    let mut lengths = Vec::new();
    for (n, p) in seq.polys().iter().enumerate() {
        let net = edge_net(p);
        lengths.push(json!({ "generation": n, "segments": net.len(), "length": net.total_length() }));
        rec.write(&format!("net_{n}.obj"), |buf| Ok(obj::write_edge_net(buf, &net)?))?;
    }
    let ws = WordSpace::new(&seq, cfg.sigma);
    let words: Vec<MatrixWord> = ws.words(cfg.export_word_depth, None).collect::<chipnet::Result<_>>()?;
    rec.write("words.csv", |buf| Ok(write_words_csv(buf, &words)?))?;
    rec.finish(json!({ "nets": lengths, "words": words.len() }))
}

/// Whether `[lo, hi]` meets `[1, 2]`.
fn meets_unit_range(lo: f64, hi: f64) -> bool {
    lo <= 2.0 && hi >= 1.0
}

/// Box-count and pressure estimates, or the synthetic oracle run.
pub fn dim(cfg: &RunConfig) -> anyhow::Result<RunReport> {
    let mut rec = Recorder::new("dim", cfg)?;
    if let Some(c) = cfg.synthetic_c {
        rec.stage("pressure");
        let src = SyntheticWords { c, branching: 3, roots: 1 };
        let est = s0_estimate(&cfg.pressure_depths, ROOT_BRACKET, cfg.tol, &src)?;
        let want = 3f64.ln() / (1.0 / c).ln();
        let gap = (est.value - want).abs();
        rec.check(
            "synthetic oracle",
            gap <= cfg.tol,
            format!("root {:.9} vs log 3 / log(1/c) = {want:.9}, gap {gap:.1e} (tol {:.1e})", est.value, cfg.tol),
        );
        rec.write_text("pressure.csv", &pressure_csv(&est.levels))?;
        return rec.finish(json!({ "pressure": est, "closed_form": want }));
    }

    rec.stage("chip");
    let seq = sequence(cfg)?;

    rec.stage("box count");
    let net = edge_net(seq.last());
    let diameter = net.diameter();
    let scales: Vec<f64> = cfg.scales.iter().map(|&k| diameter * 2f64.powi(-k)).collect();
    let series = box_count(&net, &scales)?;
    let fit = box_dim_fit(&series, (scales[scales.len() - 1], scales[0]))?;
    let mut csv = String::from("k,delta,count\n");
    for (k, (delta, count)) in cfg.scales.iter().zip(&series.points) {
        writeln!(csv, "{k},{delta:e},{count}").expect("string write");
    }
    rec.write_text("boxcount.csv", &csv)?;
    rec.check(
        "box slope in [1, 2]",
        meets_unit_range(fit.lo, fit.hi),
        format!("slope {:.4} with bracket [{:.4}, {:.4}] at generation {}", fit.value, fit.lo, fit.hi, cfg.depth),
    );

    rec.stage("pressure");
    let ws = WordSpace::new(&seq, cfg.sigma);
    let est = s0_estimate(&cfg.pressure_depths, ROOT_BRACKET, cfg.tol, &ws)?;
    rec.write_text("pressure.csv", &pressure_csv(&est.levels))?;
    rec.check(
        "pressure root in [1, 2]",
        meets_unit_range(est.value - cfg.tol, est.value + cfg.tol),
        format!("root {:.4} at depth {}, spread [{:.4}, {:.4}]", est.value, max_depth(cfg), est.lo, est.hi),
    );
    let gap = (fit.value - est.value).abs();
    rec.finish(json!({ "box_count": fit, "counts": series, "pressure": est, "method_gap": gap }))
}

fn max_depth(cfg: &RunConfig) -> usize {
    cfg.pressure_depths.iter().copied().max().unwrap_or(0)
}

fn pressure_csv(levels: &[(f64, f64)]) -> String {
    let mut out = String::from("depth,root\n");
    for (n, s) in levels {
        writeln!(out, "{n},{s:.12}").expect("string write");
    }
    out
}

/// Runs every invariant suite at the configured run and spectral rates.
pub fn verify(cfg: &RunConfig) -> anyhow::Result<RunReport> {
    let mut rec = Recorder::new("verify", cfg)?;
    rec.stage("chip");
    let seq = sequence(cfg)?;
    let margin = seq.policy().margin();

    rec.stage("regularity");
    regularity(&mut rec, cfg, &seq, margin)?;

    rec.stage("polyhedra");
    let mut failures = Vec::new();
    for (n, p) in seq.polys().iter().enumerate() {
        let euler = p.vertex_count() as i64 - p.edge_count() as i64 + p.face_count() as i64;
        if euler != 2 {
            failures.push(format!("generation {n}: V - E + F = {euler}"));
        }
        for c in validate(p).failures() {
            failures.push(format!("generation {n}: {} ({})", c.name, c.detail));
        }
    }
    let detail = match failures.first() {
        None => format!("{} generations valid", seq.polys().len()),
        Some(f) => format!("{} failures, first: {f}", failures.len()),
    };
    rec.check("euler and convexity", failures.is_empty(), detail);
    sibling_involution(&mut rec, &seq)?;

    rec.stage("charts");
    charts(&mut rec, &seq, cfg, margin)?;

    rec.stage("words");
    let ws = WordSpace::new(&seq, cfg.sigma);
    words(&mut rec, &ws, cfg.word_depth, margin)?;
    disjointness(&mut rec, &ws, cfg.disjoint_depth)?;

    rec.stage("spectral");
    let spectral = spectral(&mut rec, &cfg.spectral_p)?;
    rec.finish(json!({ "margin": margin, "generations": generation_summary(&seq), "spectral": spectral }))
}

fn regularity(rec: &mut Recorder, cfg: &RunConfig, seq: &ChipSequence, margin: f64) -> anyhow::Result<()> {
    let mut found: Vec<String> = (0..seq.rate_generations())
        .flat_map(|g| regularity_violations(seq.poly(g), seq.rates(g), margin, 3))
        .collect();
    let mut detail = format!("{} generations of rates regular with margin {margin:.6}", seq.rate_generations());
    if let Some(x) = cfg.inject_rate {
        let p0 = seq.poly(0);
        let mut values = rate_policy(seq.policy(), p0, seq.seed())?.values().to_vec();
        values[0] = x;
        let rates = ChipRates::from_values(p0, values)?;
        found.extend(regularity_violations(p0, &rates, margin, 3));
        detail.push_str(&format!("; injected rate {x} on the first generation-0 edge"));
    }
    let ok = found.is_empty();
    if let Some(first) = found.first() {
        detail = Error::NotRegular(format!("{first} ({} violations listed)", found.len())).to_string();
    }
    rec.check("regularity", ok, detail);
    Ok(())
}

fn sibling_involution(rec: &mut Recorder, seq: &ChipSequence) -> anyhow::Result<()> {
    let mut checked = 0usize;
    let mut broken = Vec::new();
    for g in 1..seq.polys().len() {
        let (mothers, children) = (seq.poly(g - 1), seq.poly(g));
        for code in 0..children.vertex_count() as u64 {
            let child = VertexId::new(g as u32, code);
            let sib = genealogy(mothers, child)?.sibling;
            let back = genealogy(mothers, sib)?.sibling;
            let adjacent = children.slot_of(code as u32, sib.code as u32).is_some();
            if back != child || !adjacent {
                broken.push(child);
            }
            checked += 1;
        }
    }
    let detail = match broken.first() {
        None => format!("{checked} vertices"),
        Some(v) => format!("{} of {checked} vertices fail, first {v}", broken.len()),
    };
    rec.check("sibling involution", broken.is_empty(), detail);
    Ok(())
}

fn charts(rec: &mut Recorder, seq: &ChipSequence, cfg: &RunConfig, margin: f64) -> anyhow::Result<()> {
    let charts = chart_sequence(seq, cfg.sigma, CHART_TOL)?;
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for n in 0..seq.depth() {
        for child in 0..seq.poly(n + 1).vertex_count() as u32 {
            worst = worst.max(chart_identity_error(seq, &charts[n], &charts[n + 1], child)?);
            count += 1;
        }
    }
    let tiling = charts.iter().map(|c| union_identity_error(seq, c)).fold(0.0, f64::max);
    rec.check(
        "chart identity",
        worst <= IDENTITY_TOL && tiling <= IDENTITY_TOL,
        format!("{count} child charts, composition error {worst:.1e}, edge tiling error {tiling:.1e} (limit {IDENTITY_TOL:.0e})"),
    );

    // λ_vu + λ_uv = 1 on every edge, with margin < p_vu < λ_vu < 1 - margin.
    let mut sum_err = 0.0f64;
    let mut outside = 0usize;
    let mut edges = 0usize;
    for (n, chart) in charts.iter().enumerate() {
        let p = seq.poly(n);
        let rates = (n < seq.rate_generations()).then(|| seq.rates(n));
        for v in 0..p.vertex_count() as u32 {
            let lam = chart.lambda(v);
            for (l, &u) in chart.sigma(p, v).iter().enumerate() {
                let back = chart.sigma(p, u).iter().position(|&w| w == v).context("asymmetric adjacency")?;
                sum_err = sum_err.max((lam[l] + chart.lambda(u)[back] - 1.0).abs());
                let rate = match rates {
                    Some(r) => r.edge(p, v, u)?,
                    None => margin,
                };
                if !(lam[l] > margin && lam[l] < 1.0 - margin && rate < lam[l]) {
                    outside += 1;
                }
                edges += 1;
            }
        }
    }
    rec.check(
        "lambda sums",
        sum_err <= LAMBDA_SUM_TOL && outside == 0,
        format!("{edges} ordered edges, worst |λ_vu + λ_uv - 1| = {sum_err:.1e}, {outside} outside (p_vu, 1 - margin)"),
    );
    Ok(())
}

fn words(rec: &mut Recorder, ws: &WordSpace, depth: usize, margin: f64) -> anyhow::Result<()> {
    let (mut count, mut loose, mut escaped, mut negative) = (0usize, 0usize, 0usize, 0usize);
    for d in 0..=depth {
        for w in ws.words(d, None) {
            let w = w?;
            if w.c_norm1() > (1.0 - margin).powi(d as i32) * (1.0 + 1e-12) {
                loose += 1;
            }
            if !tetra_invariance_check(&w) {
                escaped += 1;
            }
            if w.b.try_inverse().is_none_or(|inv| inv.iter().any(|&x| x < -1e-12)) {
                negative += 1;
            }
            count += 1;
        }
    }
    rec.check(
        "C norm bound",
        loose == 0,
        format!("{count} words to depth {depth}, {loose} with ‖C‖₁ > (1 - margin)^depth"),
    );
    rec.check(
        "tetrahedron invariance",
        escaped + negative == 0,
        format!("{count} words, {escaped} map W outside itself, {negative} without a nonnegative B inverse"),
    );
    Ok(())
}

fn disjointness(rec: &mut Recorder, ws: &WordSpace, depth: usize) -> anyhow::Result<()> {
    let (mut pairs, mut overlaps) = (0usize, 0usize);
    let mut first = None;
    for root in 0..ws.root_count() {
        let mut words = Vec::new();
        for d in 1..=depth {
            for idx in 0..3usize.pow(d as u32) {
                let letters: Vec<u8> = (0..d).rev().map(|k| ((idx / 3usize.pow(k as u32)) % 3) as u8).collect();
                let w = ws.word(root, &letters)?;
                words.push((letters, w));
            }
        }
        for i in 0..words.len() {
            for j in i + 1..words.len() {
                let (a, b) = (&words[i].0, &words[j].0);
                if a.starts_with(b) || b.starts_with(a) {
                    continue;
                }
                pairs += 1;
                if !proj_disjointness_check(&words[i].1, &words[j].1) {
                    overlaps += 1;
                    first.get_or_insert_with(|| format!("root {root} {a:?} vs {b:?}"));
                }
            }
        }
    }
    let mut detail = format!("{pairs} same-root pairs to depth {depth}, {overlaps} overlapping");
    if let Some(f) = first {
        detail.push_str(&format!(", first {f}"));
    }
    rec.check("projection disjointness", overlaps == 0, detail);
    Ok(())
}

fn spectral(rec: &mut Recorder, rates: &[f64]) -> anyhow::Result<Vec<Value>> {
    let mut out = Vec::new();
    for &p in rates {
        let prox = proximality_check(p)?;
        let irr = irreducibility_probe(p)?;
        let mut detail = format!(
            "closed-form deviation {:.1e}, top eigenvalue simple {}, branch {:?}",
            prox.closed_form_deviation,
            prox.c1_top_simple.unwrap_or(true),
            irr.branch
        );
        if irr.branch == IrreducibilityBranch::PlaneMaps {
            detail.push_str(&format!(
                "; determinant-zero branch, normals determinant {:.1e}",
                irr.normals_determinant.unwrap_or(f64::NAN)
            ));
            if let Some(d) = &irr.d_maps {
                detail.push_str(&format!(
                    "; D-map checks {} (intertwining {:.1e}, eigenline angle {:.3})",
                    if d.passed { "passed" } else { "failed" },
                    d.intertwining_error,
                    d.eigenline_min_angle
                ));
            }
        }
        if !irr.note.is_empty() {
            detail.push_str(&format!("; {}", irr.note));
        }
        rec.check(&format!("spectral p={p}"), prox.passed && irr.passed, detail);
        out.push(json!({ "proximality": prox, "irreducibility": irr }));
    }
    Ok(out)
}

/// Re-hashes every report in the output directory and the files it lists.
/// `None` when the directory holds no reports.
pub fn summary(cfg: &RunConfig) -> anyhow::Result<Option<RunReport>> {
    if !cfg.out.is_dir() {
        return Ok(None);
    }
    let mut names: Vec<String> = fs::read_dir(&cfg.out)
        .with_context(|| format!("reading {}", cfg.out.display()))?
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with("_report.json") && *n != report_name("summary"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Ok(None);
    }
    let mut rec = Recorder::new("summary", cfg)?;
    rec.stage("check");
    let mut rows = Vec::new();
    for name in names {
        let path = cfg.out.join(&name);
        let report: RunReport = match fs::read_to_string(&path)
            .map_err(anyhow::Error::from)
            .and_then(|t| Ok(serde_json::from_str(&t)?))
        {
            Ok(r) => r,
            Err(e) => {
                rec.check(&name, false, format!("unreadable report: {e}"));
                continue;
            }
        };
        let mut problems = Vec::new();
        if report.compute_hash() != report.report_hash {
            problems.push("report hash mismatch".to_string());
        }
        for f in &report.files {
            match sha256_file(&cfg.out.join(&f.path)) {
                Ok((bytes, hash)) if bytes == f.bytes && hash == f.sha256 => {}
                Ok(_) => problems.push(format!("{} changed", f.path)),
                Err(_) => problems.push(format!("{} missing", f.path)),
            }
        }
        let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        let detail = if problems.is_empty() {
            format!("{} files intact, {} checks, {} failed", report.files.len(), report.checks.len(), failed.len())
        } else {
            problems.join("; ")
        };
        rec.check(&name, problems.is_empty(), detail);
        rows.push(json!({
            "report": name,
            "command": report.command,
            "config_hash": report.config_hash,
            "report_hash": report.report_hash,
            "checks_passed": report.passed(),
            "failed_checks": failed,
        }));
    }
    Ok(Some(rec.finish(json!({ "reports": rows }))?))
}
