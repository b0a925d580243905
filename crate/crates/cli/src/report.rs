use std::collections::BTreeMap;

use ipm_core::equilibria::{
    all_equilibria, boundary_equilibrium_check, cubic_coefficients, eliminated_sextic, sextic_coefficients, Equilibrium,
    EquilibriumKind,
};
use ipm_core::linalg::{char_poly, eigenvalues};
use ipm_core::stability::{classify_e0, classify_e1, classify_e3, classify_estar, thresholds, Verdict};
use ipm_core::{jacobian, ModelParams};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub r0: f64,
    pub r1: f64,
    pub implication: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRecord {
    pub coefficients: [f64; 3],
    pub roots: Vec<[f64; 2]>,
    pub has_positive_root: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SexticRecord {
    pub printed: [f64; 6],
    pub eliminated: [f64; 6],
    /// `|f(A*)| / max|a_k|` for each coexistence state, printed then eliminated coefficients.
    pub relative_residuals: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicRecord {
    pub c: [f64; 3],
    pub printed: [f64; 3],
    pub f: [f64; 3],
    pub numeric: [f64; 3],
    pub conditions: [bool; 4],
    pub max_rel_deviation: f64,
    pub max_rel_deviation_printed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarticRecord {
    pub y: [f64; 4],
    pub printed: [f64; 4],
    pub numeric: [f64; 4],
    pub psi: f64,
    pub psi_scale: f64,
    pub conditions: [bool; 4],
    pub max_rel_deviation: f64,
    pub max_rel_deviation_printed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub kind: String,
    pub state: [f64; 4],
    pub residual: f64,
    pub below_capacity: Option<bool>,
    pub awareness_threshold: Option<bool>,
    pub verdict: Option<String>,
    pub witness: Option<[f64; 2]>,
    pub eigenvalues: Vec<[f64; 2]>,
    pub cubic: Option<CubicRecord>,
    pub quartic: Option<QuarticRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub params: BTreeMap<String, f64>,
    pub boundary_check: BoundaryRecord,
    pub cubic_coefficients: Option<[f64; 3]>,
    pub sextic: Option<SexticRecord>,
    pub thresholds: Option<ThresholdRecord>,
    pub equilibria: Vec<EquilibriumRecord>,
    /// One entry per cross-check; failures start with `FAILED`.
    pub consistency: Vec<String>,
}

impl Report {
    pub fn has_failures(&self) -> bool {
        self.consistency.iter().any(|c| c.starts_with("FAILED"))
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn base_record(eq: &Equilibrium) -> EquilibriumRecord {
    EquilibriumRecord {
        kind: eq.kind.label().to_string(),
        state: eq.state.to_array(),
        residual: eq.residual_norm,
        below_capacity: eq.existence.below_capacity,
        awareness_threshold: eq.existence.awareness_threshold,
        verdict: None,
        witness: None,
        eigenvalues: Vec::new(),
        cubic: None,
        quartic: None,
    }
}

/// Equilibria listing; with `stability` also verdicts, coefficients and cross-checks.
pub fn build_report(p: &ModelParams, stability: bool) -> ipm_core::Result<Report> {
    let params = ModelParams::NAMES.iter().map(|k| (k.to_string(), p.get(k).unwrap_or(f64::NAN))).collect();
    let b = boundary_equilibrium_check(p);
    let boundary_check = BoundaryRecord {
        coefficients: b.coefficients,
        roots: b.roots.iter().copied().map(pair).collect(),
        has_positive_root: b.has_positive_root,
    };
    let cubic = cubic_coefficients(p).ok().map(|c| [c.a1, c.a2, c.a3]);
    let eqs = all_equilibria(p)?;
    let coexist: Vec<&Equilibrium> = eqs.iter().filter(|e| e.kind == EquilibriumKind::Coexistence).collect();
    let mut consistency = Vec::new();
    let sextic = match (sextic_coefficients(p), eliminated_sextic(p)) {
        (Ok(pr), Ok(el)) => {
            let relative_residuals = coexist
                .iter()
                .map(|e| [pr.eval(e.state.aw).abs() / pr.max_magnitude(), el.eval(e.state.aw).abs() / el.max_magnitude()])
                .collect::<Vec<_>>();
            for (e, r) in coexist.iter().zip(&relative_residuals) {
                let status = if r[1] <= 1e-6 { "ok" } else { "FAILED" };
                consistency.push(format!(
                    "{status}: eliminated sextic at A* = {:.6e} has relative residual {:.3e} (printed coefficients: {:.3e})",
                    e.state.aw, r[1], r[0]
                ));
            }
            Some(SexticRecord { printed: pr.a, eliminated: el.a, relative_residuals })
        }
        _ => None,
    };
    let mut equilibria = Vec::new();
    let mut thresholds_rec = None;
    for eq in &eqs {
        let mut rec = base_record(eq);
        if stability {
            classify_into(p, eq, &mut rec, &mut consistency)?;
        }
        equilibria.push(rec);
    }
    if stability {
        let t = thresholds(p);
        let implication = if t.r0 < 1.0 && t.r1 < 1.0 {
            "R0 < 1 and R1 < 1: the pest-free state is locally asymptotically stable"
        } else {
            "R0 >= 1 or R1 >= 1: the pest-free state is not locally asymptotically stable"
        };
        thresholds_rec = Some(ThresholdRecord { r0: t.r0, r1: t.r1, implication: implication.into() });
    }
    Ok(Report { params, boundary_check, cubic_coefficients: cubic, sextic, thresholds: thresholds_rec, equilibria, consistency })
}

fn classify_into(
    p: &ModelParams,
    eq: &Equilibrium,
    rec: &mut EquilibriumRecord,
    consistency: &mut Vec<String>,
) -> ipm_core::Result<()> {
    let label = eq.kind.label();
    let outcome: ipm_core::Result<(Verdict, Option<Complex64>, Vec<Complex64>)> = match eq.kind {
        EquilibriumKind::Axial => classify_e0(p).map(|c| (c.verdict, c.witness, c.eigenvalues)),
        EquilibriumKind::PestFree => classify_e1(p).map(|c| (c.verdict, c.witness, c.eigenvalues)),
        EquilibriumKind::HealthyPestFree => classify_e3(p, eq).map(|r| {
            let j = jacobian(p, &eq.state).expect("jacobian evaluated during classification");
            let full = char_poly(&j);
            let f = r.terms.f22;
            let q1 = full[0] + f;
            let q2 = full[1] + f * q1;
            let numeric = [q1, q2, full[2] + f * q2];
            let c = [r.c1, r.c2, r.c3];
            rec.cubic = Some(CubicRecord {
                c,
                printed: r.printed,
                f: [r.terms.f11, r.terms.f22, r.terms.f33],
                numeric,
                conditions: [
                    r.conditions.f22_negative,
                    r.conditions.c1_positive,
                    r.conditions.c3_positive,
                    r.conditions.hurwitz_positive,
                ],
                max_rel_deviation: max_rel(&c, &numeric),
                max_rel_deviation_printed: max_rel(&r.printed, &numeric),
            });
            (r.verdict, None, r.eigenvalues)
        }),
        EquilibriumKind::Coexistence => classify_estar(p, eq).map(|r| {
            let j = jacobian(p, &eq.state).expect("jacobian evaluated during classification");
            let numeric = char_poly(&j);
            let y = r.coefficients.to_array();
            let printed = r.printed.to_array();
            rec.quartic = Some(QuarticRecord {
                y,
                printed,
                numeric,
                psi: r.psi,
                psi_scale: r.psi_scale,
                conditions: [
                    r.conditions.y1_positive,
                    r.conditions.y4_positive,
                    r.conditions.second_positive,
                    r.conditions.psi_positive,
                ],
                max_rel_deviation: max_rel(&y, &numeric),
                max_rel_deviation_printed: max_rel(&printed, &numeric),
            });
            (r.verdict, None, r.eigenvalues)
        }),
    };
    match outcome {
        Ok((verdict, witness, eigs)) => {
            rec.verdict = Some(verdict.label().to_string());
            rec.witness = witness.map(pair);
            rec.eigenvalues = eigs.into_iter().map(pair).collect();
            consistency.push(format!("ok: {label} closed-form verdict agrees with eigenvalues"));
            if let Some(c) = &rec.cubic {
                consistency.push(format!(
                    "{}: {label} cubic coefficients vs characteristic polynomial, max relative deviation {:.3e} (printed forms: {:.3e})",
                    if c.max_rel_deviation <= 1e-6 { "ok" } else { "FAILED" },
                    c.max_rel_deviation,
                    c.max_rel_deviation_printed
                ));
            }
            if let Some(q) = &rec.quartic {
                consistency.push(format!(
                    "{}: {label} quartic coefficients vs characteristic polynomial, max relative deviation {:.3e} (printed forms: {:.3e})",
                    if q.max_rel_deviation <= 1e-6 { "ok" } else { "FAILED" },
                    q.max_rel_deviation,
                    q.max_rel_deviation_printed
                ));
            }
        }
        Err(ipm_core::Error::Consistency(msg)) => {
            let j = jacobian(p, &eq.state)?;
            rec.eigenvalues = eigenvalues(&j)?.into_iter().map(pair).collect();
            consistency.push(format!("FAILED: {msg}"));
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

fn fmt_state(s: &[f64; 4]) -> String {
    format!("X = {:.10e}, S = {:.10e}, I = {:.10e}, A = {:.10e}", s[0], s[1], s[2], s[3])
}

fn fmt_flag(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "holds",
        Some(false) => "fails",
        None => "n/a",
    }
}

/// Human-readable rendering.
pub fn render_text(r: &Report) -> String {
    let mut s = String::new();
    s.push_str("parameters\n");
    for (k, v) in &r.params {
        s.push_str(&format!("  {k} = {v}\n"));
    }
    if let Some(t) = &r.thresholds {
        s.push_str(&format!("\nthresholds\n  R0 = {:.10}\n  R1 = {:.10}\n  {}\n", t.r0, t.r1, t.implication));
    }
    let b = &r.boundary_check;
    s.push_str(&format!(
        "\nboundary state with I = 0, S > 0\n  quadratic {:.6e} A^2 + {:.6e} A + {:.6e}\n  roots {:?}\n  positive root: {}\n",
        b.coefficients[0], b.coefficients[1], b.coefficients[2], b.roots, b.has_positive_root
    ));
    if let Some(c) = r.cubic_coefficients {
        s.push_str(&format!("\ncubic for the healthy-pest-free crop level: a1 = {:.10e}, a2 = {:.10e}, a3 = {:.10e}\n", c[0], c[1], c[2]));
    }
    if let Some(x) = &r.sextic {
        s.push_str("\nsextic in A*\n");
        for k in 0..6 {
            s.push_str(&format!("  a{}: printed {:.10e}  eliminated {:.10e}\n", k + 1, x.printed[k], x.eliminated[k]));
        }
    }
    s.push_str("\nequilibria\n");
    for e in &r.equilibria {
        s.push_str(&format!("  {}: {}\n    residual {:.3e}\n", e.kind, fmt_state(&e.state), e.residual));
        if e.below_capacity.is_some() {
            s.push_str(&format!("    K - X > 0: {}\n", fmt_flag(e.below_capacity)));
        }
        if e.awareness_threshold.is_some() {
            s.push_str(&format!("    A > (alpha omega + r sigma)/(alpha eta): {}\n", fmt_flag(e.awareness_threshold)));
        }
        if let Some(v) = &e.verdict {
            s.push_str(&format!("    verdict: {v}\n"));
        }
        if let Some(w) = e.witness {
            s.push_str(&format!("    witness eigenvalue: {:.10e}\n", w[0]));
        }
        if !e.eigenvalues.is_empty() {
            let eig: Vec<String> = e.eigenvalues.iter().map(|z| format!("{:.6e}{:+.6e}i", z[0], z[1])).collect();
            s.push_str(&format!("    eigenvalues: {}\n", eig.join(", ")));
        }
        if let Some(c) = &e.cubic {
            s.push_str(&format!("    F11, F22, F33 = {:.6e}, {:.6e}, {:.6e}\n", c.f[0], c.f[1], c.f[2]));
            s.push_str(&format!("    C1..C3 = {:.10e}, {:.10e}, {:.10e}\n", c.c[0], c.c[1], c.c[2]));
            s.push_str(&format!("    printed C1..C3 = {:.10e}, {:.10e}, {:.10e}\n", c.printed[0], c.printed[1], c.printed[2]));
            s.push_str(&format!(
                "    conditions F22<0 {} C1>0 {} C3>0 {} C1C2-C3>0 {}\n",
                c.conditions[0], c.conditions[1], c.conditions[2], c.conditions[3]
            ));
        }
        if let Some(q) = &e.quartic {
            s.push_str(&format!("    y1..y4 = {:.10e}, {:.10e}, {:.10e}, {:.10e}\n", q.y[0], q.y[1], q.y[2], q.y[3]));
            s.push_str(&format!(
                "    printed y1..y4 = {:.10e}, {:.10e}, {:.10e}, {:.10e}\n",
                q.printed[0], q.printed[1], q.printed[2], q.printed[3]
            ));
            s.push_str(&format!("    Psi = {:.6e} (scale {:.6e})\n", q.psi, q.psi_scale));
            s.push_str(&format!(
                "    conditions y1>0 {} y4>0 {} y1y2-y3>0 {} Psi>0 {}\n",
                q.conditions[0], q.conditions[1], q.conditions[2], q.conditions[3]
            ));
        }
    }
    s.push_str("\nconsistency checks\n");
    for c in &r.consistency {
        s.push_str(&format!("  {c}\n"));
    }
    s
}
