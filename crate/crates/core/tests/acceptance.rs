//! Acceptance criteria 1–9. Prints one PASS/FAIL line per criterion and fails if any fails:
//! `cargo test -p splicelab --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use splicelab::config::RunConfig;
use splicelab::cutoff::{length_function, profile_dr_dr, BaseCutoff, GluingProfileParams};
use splicelab::harness::{run_check, CheckId, CheckResult, CheckSpec};
use splicelab::splicing::SplicingFamily;

/// `e^{−8}`, the cross-term factor `e^{2δ(−d+l)}` at `δ = 0.5, l = 4, d = 12`.
const E_MINUS_8: f64 = 3.3546262790251185e-4;
/// `L₁(e⁴) = e²·16`.
const L1_AT_E4: f64 = 118.22489758289039;
/// `|dR/dr|` at `r = 1/4`, `r0 = 1`: `16·e⁴`.
const DRDR_AT_QUARTER: f64 = 873.5704005303077;

struct Verdict {
    ok: bool,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self { ok: true, notes: Vec::new() }
    }

    fn require(&mut self, cond: bool, what: impl Into<String>) {
        if !cond {
            self.ok = false;
            self.notes.push(what.into());
        }
    }

    /// Every row with `quantity` passes, and there is at least one.
    fn rows(&mut self, rows: &[CheckResult], quantity: &str) {
        let sel: Vec<&CheckResult> = rows.iter().filter(|r| r.quantity == quantity).collect();
        self.require(!sel.is_empty(), format!("no '{quantity}' rows"));
        for r in sel.iter().filter(|r| !r.pass) {
            self.require(
                false,
                format!(
                    "{} {} R={} seed={:?}: measured {:e} vs {:e}",
                    r.check_id, r.quantity, r.point.r, r.point.seed, r.measured, r.bound
                ),
            );
        }
    }

    fn all_rows(&mut self, rows: &[CheckResult]) {
        self.require(!rows.is_empty(), "no rows");
        for r in rows.iter().filter(|r| !r.pass) {
            self.require(
                false,
                format!("{} {}: measured {:e} vs {:e} ({})", r.check_id, r.quantity, r.measured, r.bound, r.formula),
            );
        }
    }

    fn within(&mut self, elapsed: Duration, limit: Duration, what: &str) {
        self.require(elapsed <= limit, format!("{what} took {elapsed:?}, limit {limit:?}"));
    }
}

fn check(id: CheckId, cfg: &RunConfig) -> (Vec<CheckResult>, Duration) {
    let t = Instant::now();
    let rows = run_check(&CheckSpec::new(id), cfg).unwrap_or_else(|e| panic!("{id}: {e}"));
    (rows, t.elapsed())
}

fn criterion_1(cfg: &RunConfig) -> Verdict {
    let mut v = Verdict::new();
    let t0 = Instant::now();
    let (l, d) = (cfg.splice.l, cfg.splice.d);
    let fam = SplicingFamily::new(BaseCutoff::new(cfg.cutoff.order).unwrap(), cfg.cutoff_params().unwrap()).unwrap();
    let n = 20_001;
    let span = d + l + 5.0;
    let mut seen = [false; 5];
    for i in 0..n {
        let t = -span + 2.0 * span * i as f64 / (n - 1) as f64;
        let det = fam.det(t);
        v.require((1.0 - 1e-12..=2.0 + 1e-12).contains(&det), format!("D({t}) = {det}"));
        let region = if t <= -d - l {
            0
        } else if t < -d + l {
            1
        } else if t <= d - l {
            2
        } else if t < d + l {
            3
        } else {
            4
        };
        seen[region] = true;
        if t > -d + l && t < d - l {
            v.require((det - 2.0).abs() <= 1e-12, format!("D({t}) = {det} on the middle region"));
        }
        if t <= -d - l || t >= d + l {
            v.require((det - 1.0).abs() <= 1e-12, format!("D({t}) = {det} on an outer region"));
        }
    }
    v.require(seen.iter().all(|&s| s), "samples do not cover all five regions");
    let (rows, _) = check(CheckId::DetBounds, cfg);
    v.all_rows(&rows);
    v.within(t0.elapsed(), Duration::from_secs(1), "determinant sampling");
    v
}

fn criterion_2(cfg: &RunConfig) -> Verdict {
    let mut v = Verdict::new();
    let (rows, el) = check(CheckId::Roundtrip, cfg);
    v.require(rows.len() == 20, format!("{} pairs, expected 20", rows.len()));
    v.require(rows.iter().all(|r| r.measured <= 1e-10), "round-trip error above 1e-10");
    v.all_rows(&rows);
    v.within(el, Duration::from_secs(10), "round trip");
    v
}

fn criterion_3(cfg: &RunConfig) -> Verdict {
    let mut v = Verdict::new();
    let (rows, el) = check(CheckId::PipelineAgreement, cfg);
    let hs: Vec<f64> = rows.iter().filter(|r| r.quantity == "residual").map(|r| r.bound).collect();
    v.require(hs.len() == 30, format!("{} residual rows, expected 3 grids x 10 seeds", hs.len()));
    let orders: Vec<&CheckResult> = rows.iter().filter(|r| r.quantity == "order").collect();
    v.require(orders.len() == 10, "expected one order per seed");
    v.require(orders.iter().all(|r| (r.measured - 4.0).abs() <= 0.5), "order outside 4 +- 0.5");
    v.all_rows(&rows);
    v.within(el, Duration::from_secs(120), "pipeline agreement");
    v
}

fn criterion_4(cfg: &RunConfig) -> Verdict {
    let mut v = Verdict::new();
    v.require((cfg.weight.delta, cfg.splice.l, cfg.splice.d, cfg.splice.r) == (0.5, 4.0, 12.0, 20.0), "not the reference point");
    for k in [1, 2] {
        let mut c = cfg.clone();
        c.weight.k = k;
        c.weight.p = 3.0;
        let (rows, _) = check(CheckId::CrossTermDecay, &c);
        let bounds: Vec<&CheckResult> = rows.iter().filter(|r| r.quantity == "cross_term").collect();
        v.require(bounds.len() == 10, format!("k = {k}: {} seeds, expected 10", bounds.len()));
        v.rows(&rows, "cross_term");
        v.rows(&rows, "scaled_cross_term");
        // the bound factor at d = 12 is the frozen e^{−8}
        let at_12: Vec<&CheckResult> =
            rows.iter().filter(|r| r.quantity == "scaled_cross_term" && (r.point.d - 12.0).abs() < 1e-9).collect();
        v.require(
            at_12.len() == 1 && (at_12[0].bound - E_MINUS_8).abs() <= 1e-15,
            format!("k = {k}: d = 12 bound is not e^-8"),
        );
        v.rows(&rows, "decay_rate");
        let rate = rows.iter().find(|r| r.quantity == "decay_rate").map(|r| r.measured).unwrap_or(f64::NAN);
        v.require((rate - 1.0).abs() <= 0.05, format!("k = {k}: fitted rate {rate}, expected 2 delta = 1 within 5%"));
    }
    v
}

fn criterion_5(cfg: &RunConfig) -> Verdict {
    let mut v = Verdict::new();
    let (rows, _) = check(CheckId::DwOpnormLimit, cfg);
    let ops: Vec<&CheckResult> = rows.iter().filter(|r| r.quantity == "op_norm").collect();
    v.require(ops.len() >= 4, "R-sweep has fewer than four points");
    v.require(
        ops.iter().all(|r| (r.point.l / r.point.r.sqrt() - ops[0].point.l / ops[0].point.r.sqrt()).abs() < 1e-9),
        "l is not proportional to R^(1/2)",
    );
    v.rows(&rows, "op_norm_step");
    let an: Vec<&CheckResult> = rows.iter().filter(|r| r.quantity == "g2_sup").collect();
    v.require(
        an.first().is_some_and(|r| (r.point.r / 1e6 - 1.0).abs() < 1e-9)
            && an.last().is_some_and(|r| (r.point.r / 1e9 - 1.0).abs() < 1e-9),
        "analytic sweep does not span [1e6, 1e9]",
    );
    v.require(
        an.iter().all(|r| (r.point.l - length_function(r.point.r, 1).unwrap()).abs() <= 1e-9 * r.point.l),
        "analytic sweep is not on l = L(R)",
    );
    v.rows(&rows, "g2_sup_scaled_spread");
    v.require((length_function(std::f64::consts::E.powi(4), 1).unwrap() - L1_AT_E4).abs() < 1e-10, "L1(e^4) oracle");
    v
}

fn criterion_6(cfg: &RunConfig) -> Verdict {
    let mut v = Verdict::new();
    let (fd, _) = check(CheckId::FdDr, cfg);
    v.rows(&fd, "psi_order");
    v.require(
        fd.iter().filter(|r| r.quantity == "psi_order").all(|r| (r.measured - 2.0).abs() <= 0.2),
        "Richardson slope outside 2 +- 0.2",
    );
    let (an, _) = check(CheckId::DrRate, cfg);
    v.rows(&an, "scaled_spread");
    v.rows(&an, "profile_log_exponent");
    v.rows(&an, "power_exponent");
    let rs: Vec<f64> = an.iter().filter(|r| r.quantity == "g2_prime_sup").map(|r| r.point.r).collect();
    v.require(rs.last().unwrap_or(&0.0) / rs.first().unwrap_or(&1.0) >= 10.0, "rate sweep spans less than a decade");
    let drdr = profile_dr_dr(&GluingProfileParams { r0: 1.0, r: 0.25 }).unwrap();
    v.require((drdr.abs() - DRDR_AT_QUARTER).abs() < 1e-9, format!("|dR/dr|(1/4) = {drdr}"));
    v
}

fn criterion_7(cfg: &RunConfig) -> Verdict {
    let mut v = Verdict::new();
    let (rows, _) = check(CheckId::DthetaRate, cfg);
    v.require(rows.iter().filter(|r| r.quantity == "dtheta_plus").count() == 10, "expected 10 seeds");
    v.rows(&rows, "dtheta_plus");
    v.rows(&rows, "constant_spread");
    v.require(
        rows.iter().any(|r| r.quantity == "s_independent" && r.measured == 0.0),
        "s-independent input does not give exactly 0",
    );
    v
}

fn criterion_8(cfg: &RunConfig) -> Verdict {
    let mut v = Verdict::new();
    let (jensen, _) = check(CheckId::Jensen, cfg);
    v.require(jensen.iter().filter(|r| r.quantity == "gap").count() == 100, "expected 100 seeded families");
    v.all_rows(&jensen);
    let (tau, _) = check(CheckId::TauNormBound, cfg);
    let rs: Vec<f64> = tau.iter().filter(|r| r.quantity == "op_norm").map(|r| r.point.r).collect();
    v.require(rs == [1.0, 2.0, 4.0, 8.0], format!("translation lengths {rs:?}"));
    v.rows(&tau, "op_norm");
    v.rows(&tau, "saturation");
    let (h, _) = check(CheckId::HContinuity, cfg);
    v.require(h.iter().filter(|r| r.quantity == "op_norm_difference").count() == 20, "expected 20 pairs");
    v.all_rows(&h);
    let (fd, _) = check(CheckId::FdDr, cfg);
    v.rows(&fd, "translation_order");
    v
}

fn criterion_9(cfg: &RunConfig) -> Verdict {
    let mut v = Verdict::new();
    let (rows, _) = check(CheckId::C1AtInfinity, cfg);
    v.require(rows.iter().filter(|r| r.quantity == "op_norm").count() == 9, "expected n = 4..12");
    for q in ["op_norm", "op_norm_step", "dr_log_step", "op_norm_ratio", "dr_ratio"] {
        v.rows(&rows, q);
    }
    let (ext, _) = check(CheckId::DerivativeExtension, cfg);
    v.all_rows(&ext);
    v
}

#[test]
fn acceptance() {
    let cfg = RunConfig::default();
    let criteria: [(&str, fn(&RunConfig) -> Verdict); 9] = [
        ("determinant bounds", criterion_1),
        ("gluing round trip", criterion_2),
        ("pipeline identity", criterion_3),
        ("cross-term decay", criterion_4),
        ("operator-norm convergence", criterion_5),
        ("d_R rate", criterion_6),
        ("d_theta decay", criterion_7),
        ("translation and Jensen suite", criterion_8),
        ("C1 at infinity", criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let verdict = f(&cfg);
        println!("{} criterion {}: {name}", if verdict.ok { "PASS" } else { "FAIL" }, i + 1);
        for note in verdict.notes.iter().take(5) {
            println!("    {note}");
        }
        if !verdict.ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
