//! Implementations of the individual checks.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fields::{jensen_family, s_independent_pair, seeded_pair};
use super::fit::{fit_with_min, RateModel};
use super::{CheckId, CheckResult, ParamPoint, RowKind};
use crate::config::RunConfig;
use crate::cutoff::{
    asymptotic_params, length_function, profile_dr_dr, profile_r, BaseCutoff, CutoffParams, GluingProfileParams,
    Regime, Side,
};
use crate::error::{Result, SpliceError};
use crate::filled::{
    coupling, d_r_psi, d_theta_psi, d_w_psi, d_xy_psi, error_family, error_term, psi_l_conjugated, psi_l_direct,
    Coupling, ErrorFrame, ErrorKind, FilledSectionInput, ReferencePair,
};
use crate::grid::{d_t, translate, CylinderGrid, DiscreteMap};
use crate::splicing::{GluingParam, MapPair, Region, SplicingFamily};
use crate::weighted::{jensen_gap, op_norm_lower, probe_fields, NormSpec, OperatorProbe, ProbeDesign, WeightSpec, WeightedField};

/// Pinned `pipeline_agreement` constant: the default configuration shows
/// `max residual/h_t⁴ ≈ 4.7e-4` over ten seeds at `h_t ∈ {0.1, 0.05, 0.025}`.
pub(crate) const PIPELINE_CONSTANT: f64 = 1e-3;

/// Width-to-length ratio `l = R/5` used when following `R → ∞` along the profile.
const PROFILE_WIDTH_RATIO: f64 = 0.2;

/// Envelope tolerance of `∼` claims: `max/min ≤ 1 + tol`.
const ENVELOPE_TOL: f64 = 1.0;

/// Samples used for sup norms of coupling coefficients.
const SUP_SAMPLES: usize = 4000;

pub(super) fn run(id: CheckId, cfg: &RunConfig, values: Option<&[f64]>) -> Result<Vec<CheckResult>> {
    let ctx = Ctx::new(cfg)?;
    if cfg.regime == Regime::Asymptotic && id.mode() == super::CheckMode::Grid {
        return Err(SpliceError::Infeasible(format!(
            "{id} needs natural-coordinate grids, which the asymptotic regime does not admit"
        )));
    }
    match id {
        CheckId::DetBounds => det_bounds(&ctx),
        CheckId::Roundtrip => roundtrip(&ctx),
        CheckId::PipelineAgreement => pipeline_agreement(&ctx, values),
        CheckId::Jensen => jensen(&ctx),
        CheckId::TauNormBound => translation_norm(&ctx, values, CheckId::TauNormBound),
        CheckId::DOpnormDecay => translation_norm(&ctx, values, CheckId::DOpnormDecay),
        CheckId::HContinuity => h_continuity(&ctx),
        CheckId::EDecay => e_decay(&ctx, values),
        CheckId::CrossTermDecay => cross_term_decay(&ctx, values),
        CheckId::DwOpnormLimit => dw_opnorm_limit(&ctx, values),
        CheckId::DrRate => dr_rate(&ctx, values),
        CheckId::DthetaRate => dtheta_rate(&ctx),
        CheckId::FdDr => fd_dr(&ctx),
        CheckId::FdDtheta => fd_dtheta(&ctx),
        CheckId::FdDw => fd_dw(&ctx),
        CheckId::PolarAssembly => polar_assembly(&ctx, values),
        CheckId::C1AtInfinity => c1_at_infinity(&ctx, values),
        CheckId::DerivativeExtension => derivative_extension(&ctx, values),
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    cutoff: BaseCutoff,
    params: CutoffParams,
    w: WeightSpec,
    h: f64,
    n_s: usize,
    n_comp: usize,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            cutoff: BaseCutoff::new(cfg.cutoff.order)?,
            params: cfg.cutoff_params()?,
            w: cfg.weight,
            h: cfg.grid.h_t,
            n_s: cfg.grid.n_s,
            n_comp: cfg.grid.n_components,
        })
    }

    fn family(&self) -> Result<SplicingFamily> {
        SplicingFamily::new(self.cutoff.clone(), self.params)
    }

    fn family_with(&self, l: f64, d: f64) -> Result<SplicingFamily> {
        SplicingFamily::new(
            self.cutoff.clone(),
            CutoffParams::new(l, d, self.cfg.cutoff.l0, self.cfg.cutoff.d0)?,
        )
    }

    /// `l ∝ R^{1/2}` through the configured `(l, R)`, with the configured ratio `d/l`.
    fn scaled_family(&self, r: f64) -> Result<SplicingFamily> {
        let l = self.params.l * (r / self.cfg.splice.r).sqrt();
        self.family_with(l, self.params.d / self.params.l * l)
    }

    /// `l = R/5`, `d = 3l` along the gluing profile.
    fn profile_family(&self, r: f64) -> Result<SplicingFamily> {
        let l = PROFILE_WIDTH_RATIO * r;
        self.family_with(l, 3.0 * l)
    }

    fn point(&self) -> ParamPoint {
        self.cfg.point()
    }

    fn point_for(&self, r: f64, fam: &SplicingFamily) -> ParamPoint {
        self.point().at(r, fam.params.l, fam.params.d)
    }

    fn seeds(&self, n: usize) -> Vec<u64> {
        (0..n as u64).map(|i| self.cfg.seed.wrapping_add(i)).collect()
    }

    fn snap(&self, x: f64) -> f64 {
        (x / self.h).round() * self.h
    }

    fn gluing(&self) -> GluingParam {
        GluingParam::new(self.snap(self.cfg.splice.r), self.cfg.splice.theta)
    }

    fn norm(&self, k: usize) -> NormSpec {
        self.w.norm(k)
    }

    /// `C_− = [−reach, 0]` and `C_+ = [0, reach]` on the lattice `h·ℤ`.
    fn half_grids(&self, h: f64, reach: f64) -> Result<(CylinderGrid, CylinderGrid)> {
        let n = (reach / h).ceil() as i64;
        Ok((
            CylinderGrid::on_lattice(h, -n, 0, self.n_s)?,
            CylinderGrid::on_lattice(h, 0, n, self.n_s)?,
        ))
    }

    fn pair(&self, grids: &(CylinderGrid, CylinderGrid), seed: u64) -> Result<MapPair> {
        seeded_pair(&grids.0, &grids.1, self.n_comp, &self.cfg.field, seed)
    }

    fn design(&self, centers: &[f64], width: f64, random: usize, seed: u64) -> ProbeDesign {
        ProbeDesign {
            centers: centers.to_vec(),
            width,
            modes: self.cfg.probes.modes,
            random,
            seed,
        }
    }

    fn probes(&self, grid: &CylinderGrid, delta: f64, centers: &[f64], width: f64) -> Result<OperatorProbe<DiscreteMap>> {
        let seed = self.cfg.seed;
        Ok(OperatorProbe {
            fields: probe_fields(grid, self.n_comp, delta, &self.design(centers, width, self.cfg.probes.random, seed))?,
            seed,
        })
    }

    /// Probes supported on one component, plus random pairs touching both.
    #[allow(clippy::too_many_arguments)]
    fn pair_probes(
        &self,
        gm: &CylinderGrid,
        gp: &CylinderGrid,
        delta: f64,
        cm: &[f64],
        cp: &[f64],
        width: f64,
    ) -> Result<OperatorProbe<MapPair>> {
        let seed = self.cfg.seed;
        let random = self.cfg.probes.random;
        let (zm, zp) = (DiscreteMap::zeros(gm, self.n_comp), DiscreteMap::zeros(gp, self.n_comp));
        let mut fields = Vec::new();
        for f in probe_fields(gm, self.n_comp, delta, &self.design(cm, width, 0, seed))? {
            fields.push(MapPair::new(f, zp.clone())?);
        }
        for f in probe_fields(gp, self.n_comp, delta, &self.design(cp, width, 0, seed))? {
            fields.push(MapPair::new(zm.clone(), f)?);
        }
        let rm = probe_fields(gm, self.n_comp, delta, &self.design(cm, width, random, seed ^ 0x9e37))?;
        let rp = probe_fields(gp, self.n_comp, delta, &self.design(cp, width, random, seed ^ 0x79b9))?;
        let skip_m = rm.len() - random;
        let skip_p = rp.len() - random;
        for (a, b) in rm.into_iter().skip(skip_m).zip(rp.into_iter().skip(skip_p)) {
            fields.push(MapPair::new(a, b)?);
        }
        Ok(OperatorProbe { fields, seed })
    }
}

fn row(
    id: CheckId,
    point: ParamPoint,
    quantity: &str,
    kind: RowKind,
    measured: f64,
    bound: f64,
    tolerance: f64,
    formula: impl Into<String>,
) -> CheckResult {
    CheckResult::new(id, point, quantity, kind, measured, bound, tolerance, formula)
}

/// `Decrease` rows for consecutive members of a sequence.
fn decrease_rows(id: CheckId, quantity: &str, seq: &[(ParamPoint, f64)], formula: &str) -> Vec<CheckResult> {
    seq.windows(2)
        .map(|w| row(id, w[1].0, quantity, RowKind::Decrease, w[1].1, w[0].1, 0.0, formula))
        .collect()
}

/// `max/min` of positive values, judged against the envelope factor `1 + tol`.
fn envelope_row(id: CheckId, point: ParamPoint, quantity: &str, values: &[f64], what: &str) -> CheckResult {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if min > 0.0 { max / min } else { f64::INFINITY };
    row(
        id,
        point,
        quantity,
        RowKind::Bound,
        spread,
        1.0,
        ENVELOPE_TOL,
        format!("max/min of {what} <= 1 + tolerance"),
    )
}

fn rel_diff(a: &MapPair, b: &MapPair) -> Result<f64> {
    let scale = b.max_abs();
    let diff = a.sub(b)?.max_abs();
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

fn sup_sampled(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    (0..=SUP_SAMPLES)
        .map(|i| f(lo + (hi - lo) * i as f64 / SUP_SAMPLES as f64).abs())
        .fold(0.0, f64::max)
}

/// `sup |g|` of a coupling coefficient (`deriv = 0`) or of its derivative (`deriv = 1`).
fn coupling_sup(fam: &SplicingFamily, which: Coupling, deriv: usize) -> f64 {
    let (lo, hi) = crate::filled::coupling_support(fam, which);
    sup_sampled(|x| coupling(fam, which, x, deriv), lo, hi)
}

/// `‖β_+′‖_{C^{k−1}} = max_{1 ≤ j ≤ k} sup |β_+^{(j)}|`.
fn beta_prime_c_norm(fam: &SplicingFamily, k: usize) -> Result<f64> {
    let mut m: f64 = 0.0;
    for j in 1..=k {
        m = m.max(fam.cutoff.sup_norm(j)? / fam.params.l.powi(j as i32));
    }
    Ok(m)
}

/// `‖β_−/D‖_{C^{k−1}}` over both transition regions; derivatives of order two and higher
/// by repeated central differences.
fn beta_over_det_c_norm(fam: &SplicingFamily, k: usize) -> f64 {
    let (l, d) = (fam.params.l, fam.params.d);
    let (lo, hi) = (-d - 1.5 * l, d + 1.5 * l);
    let q = |x: f64| fam.beta(Side::Minus, x, 0) / fam.det(x);
    let dq = |x: f64| {
        let (bm, bp) = (fam.beta(Side::Minus, x, 0), fam.beta(Side::Plus, x, 0));
        let det = bm * bm + bp * bp;
        let ddet = 2.0 * (bm * fam.beta(Side::Minus, x, 1) + bp * fam.beta(Side::Plus, x, 1));
        fam.beta(Side::Minus, x, 1) / det - bm * ddet / (det * det)
    };
    let mut norm = sup_sampled(q, lo, hi);
    if k >= 2 {
        norm = norm.max(sup_sampled(dq, lo, hi));
    }
    if k >= 3 {
        let n = 8 * SUP_SAMPLES;
        let step = (hi - lo) / n as f64;
        let mut vals: Vec<f64> = (0..=n).map(|i| dq(lo + i as f64 * step)).collect();
        for _ in 2..k {
            vals = vals.windows(3).map(|w| (w[2] - w[0]) / (2.0 * step)).collect();
            norm = norm.max(vals.iter().fold(0.0, |a, v| a.max(v.abs())));
        }
    }
    norm
}

/// `‖β_−/D‖_{C^{k−1}}·(e^{2δ(−d+l)}‖β_+′‖_{C^{k−1}} + ‖β_−′‖_{C⁰})`.
fn dw_literal_bound(fam: &SplicingFamily, delta: f64, k: usize) -> Result<f64> {
    let (l, d) = (fam.params.l, fam.params.d);
    Ok(beta_over_det_c_norm(fam, k)
        * ((2.0 * delta * (l - d)).exp() * beta_prime_c_norm(fam, k)? + fam.cutoff.sup_norm(1)? / l))
}

const DW_FORMULA: &str = "|beta_-/D|_{C^{k-1}} (e^{2 delta (l-d)} |beta_+'|_{C^{k-1}} + |beta_-'|_{C^0})";

fn det_bounds(ctx: &Ctx) -> Result<Vec<CheckResult>> {
    let id = CheckId::DetBounds;
    let fam = ctx.family()?;
    let span = fam.half_length() + 5.0;
    const N: usize = 20_001;
    let (mut min_d, mut max_d, mut dev) = (f64::INFINITY, f64::NEG_INFINITY, 0.0_f64);
    for i in 0..N {
        let t = -span + 2.0 * span * i as f64 / (N - 1) as f64;
        let det = fam.det(t);
        min_d = min_d.min(det);
        max_d = max_d.max(det);
        dev = dev.max(match fam.region(t) {
            Region::M2 => (det - 2.0).abs(),
            Region::M1 | Region::M3 => (det - 1.0).abs(),
            Region::SpliceMinus | Region::SplicePlus => 0.0,
        });
    }
    let p = ctx.point();
    Ok(vec![
        row(id, p, "min_D", RowKind::AtLeast, min_d, 1.0, 1e-12, "min D >= 1"),
        row(id, p, "max_D", RowKind::Bound, max_d, 2.0, 1e-12, "max D <= 2"),
        row(
            id,
            p,
            "region_deviation",
            RowKind::Identity,
            dev,
            0.0,
            1e-12,
            "D = 1 on M1 and M3, D = 2 on M2",
        ),
    ])
}

fn roundtrip(ctx: &Ctx) -> Result<Vec<CheckResult>> {
    let id = CheckId::Roundtrip;
    let fam = ctx.family()?;
    let a = ctx.gluing();
    let grids = ctx.half_grids(ctx.h, 2.0 * a.r + ctx.cfg.grid.margin)?;
    let mut rows = Vec::new();
    for seed in ctx.seeds(2 * ctx.cfg.n_seeds) {
        let u = ctx.pair(&grids, seed)?;
        let back = fam.total_unglue(&fam.total_glue(&u, a)?, a, &u)?;
        let err = back.sub(&u)?.max_abs();
        let p = ctx.point_for(a.r, &fam).with_seed(seed);
        rows.push(row(id, p, "sup_error", RowKind::Identity, err, 0.0, 1e-10, "unglue(glue(u)) = u"));
    }
    Ok(rows)
}

fn pipeline_agreement(ctx: &Ctx, values: Option<&[f64]>) -> Result<Vec<CheckResult>> {
    let id = CheckId::PipelineAgreement;
    let fam = ctx.family()?;
    let hs: Vec<f64> = values.map(<[f64]>::to_vec).unwrap_or_else(|| vec![2.0 * ctx.h, ctx.h, 0.5 * ctx.h]);
    let mut rows = Vec::new();
    for seed in ctx.seeds(ctx.cfg.n_seeds) {
        let mut pts = Vec::new();
        for &h in &hs {
            let a = GluingParam::new(ctx.cfg.splice.r, ctx.cfg.splice.theta).snapped(h);
            let grids = ctx.half_grids(h, 2.0 * a.r + ctx.cfg.grid.margin)?;
            let u = ctx.pair(&grids, seed)?;
            let conj = psi_l_conjugated(&fam, &u, a)?;
            let direct = psi_l_direct(&fam, &u, a)?;
            let res = conj.sub(&direct)?.max_abs();
            pts.push((h, res));
            let p = ctx.point_for(a.r, &fam).with_seed(seed);
            rows.push(row(
                id,
                p,
                "residual",
                RowKind::Bound,
                res,
                PIPELINE_CONSTANT * h.powi(4),
                0.0,
                format!("sup |conjugated - direct| <= {PIPELINE_CONSTANT} h_t^4"),
            ));
        }
        if pts.len() >= 2 {
            let slope = fit_with_min(&pts, RateModel::Power, 2).map(|f| f.rate).unwrap_or(f64::NAN);
            rows.push(row(
                id,
                ctx.point().with_seed(seed),
                "order",
                RowKind::Identity,
                slope,
                4.0,
                0.5,
                "convergence order of the residual in h_t = 4",
            ));
        }
    }
    Ok(rows)
}

fn jensen(ctx: &Ctx) -> Result<Vec<CheckResult>> {
    let id = CheckId::Jensen;
    let grid = CylinderGrid::with_spacing(-6.0, 6.0, 0.1, ctx.n_s)?;
    let p_exp = ctx.w.p;
    let mut rows = Vec::new();
    for seed in ctx.seeds(10 * ctx.cfg.n_seeds) {
        let slices = jensen_family(&grid, ctx.n_comp, 17, seed, false);
        let (lhs, rhs) = jensen_gap(&slices, p_exp)?;
        rows.push(row(
            id,
            ctx.point().with_seed(seed),
            "gap",
            RowKind::Bound,
            lhs,
            rhs,
            1e-12,
            "int |int F dtau|^p <= int int |F|^p dtau",
        ));
    }
    let slices = jensen_family(&grid, ctx.n_comp, 17, ctx.cfg.seed, true);
    let (lhs, rhs) = jensen_gap(&slices, p_exp)?;
    rows.push(row(
        id,
        ctx.point().with_seed(ctx.cfg.seed),
        "equality",
        RowKind::Identity,
        (lhs - rhs).abs() / rhs,
        0.0,
        1e-12,
        "equality for F independent of tau",
    ));
    Ok(rows)
}

/// `τ_R ξ = ξ(· + R)` on `C_+`: `L_0 → L_0` for `tau_norm_bound`, `L_1 → L_0` for `D_opnorm_decay`.
fn translation_norm(ctx: &Ctx, values: Option<&[f64]>, id: CheckId) -> Result<Vec<CheckResult>> {
    let defaults: &[f64] = if id == CheckId::TauNormBound {
        &[1.0, 2.0, 4.0, 8.0]
    } else {
        &[1.0, 2.0, 4.0, 8.0, 16.0]
    };
    let dom_k = if id == CheckId::TauNormBound { 0 } else { 1 };
    let rs = values.unwrap_or(defaults);
    let delta = ctx.w.delta;
    let mut rows = Vec::new();
    let mut seq = Vec::new();
    for &r_raw in rs {
        let r = ctx.snap(r_raw);
        if !(r > 0.0) {
            rows.push(CheckResult::infeasible(id, ctx.point(), "translation length must be positive"));
            continue;
        }
        let point = ctx.point().at(r, ctx.params.l, ctx.params.d);
        let reach = r + 30.0;
        let n = (reach / ctx.h).ceil() as i64;
        let nr = (r / ctx.h).round() as i64;
        let dom = CylinderGrid::on_lattice(ctx.h, 0, n, ctx.n_s)?;
        let out = CylinderGrid::on_lattice(ctx.h, 0, n - nr, ctx.n_s)?;
        let op = |xi: &DiscreteMap| translate(xi, r, 0.0)?.restrict(&out);
        let beyond = [r + 2.0, r + 5.0, r + 10.0];
        let mut centers = vec![1.0, 0.5 * r];
        centers.extend(beyond);
        let bound = (-delta * r).exp();
        let on = op_norm_lower(op, &ctx.norm(dom_k), &ctx.norm(0), &ctx.probes(&dom, delta, &centers, 1.0)?)?;
        let formula = if dom_k == 0 {
            "|tau_R|_{L^p_delta -> L^p_delta} <= e^{-delta R}"
        } else {
            "|tau_R|_{L^p_{1,delta} -> L^p_delta} <= e^{-delta R}"
        };
        rows.push(row(id, point, "op_norm", RowKind::Bound, on, bound, 1e-12, formula));
        if id == CheckId::TauNormBound {
            let probe = OperatorProbe {
                fields: probe_fields(&dom, ctx.n_comp, delta, &ctx.design(&[r + 10.0], 1.0, 0, ctx.cfg.seed))?,
                seed: ctx.cfg.seed,
            };
            let sat = op_norm_lower(op, &ctx.norm(0), &ctx.norm(0), &probe)? / bound;
            rows.push(row(
                id,
                point,
                "saturation",
                RowKind::AtLeast,
                sat,
                0.5,
                0.0,
                "probe centred beyond R reaches half the bound",
            ));
        }
        seq.push((point, on));
    }
    if id == CheckId::DOpnormDecay {
        rows.extend(decrease_rows(id, "op_norm_step", &seq, "operator norm strictly decreasing in R"));
    }
    Ok(rows)
}

fn h_continuity(ctx: &Ctx) -> Result<Vec<CheckResult>> {
    let id = CheckId::HContinuity;
    let fam = ctx.family()?;
    let (l, d, delta) = (fam.params.l, fam.params.d, ctx.w.delta);
    let r_lo = ctx.snap(ctx.cfg.splice.r);
    let r_hi = r_lo + 10.0;
    let reach_in = r_hi + 1.0 + d + l + ctx.cfg.grid.margin;
    let (dom, _) = ctx.half_grids(ctx.h, reach_in)?;
    let out = CylinderGrid::on_lattice(ctx.h, 0, ((r_hi + 2.0) / ctx.h).ceil() as i64, ctx.n_s)?;
    let c0 = beta_prime_c_norm(&fam, 2)?;
    let (a, b) = (-d - l, -d + l);
    let h_op = |xi: &DiscreteMap, r: f64| -> Result<DiscreteMap> {
        let profile: Vec<f64> = out.t_values().iter().map(|&t| fam.beta(Side::Plus, t - r, 1)).collect();
        let mut res = DiscreteMap::zeros(&out, xi.n_components());
        translate(xi, -2.0 * r, 0.0)?.window(&out)?.accumulate_into(&profile, &mut res)?;
        Ok(res)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let mut rows = Vec::new();
    for _ in 0..2 * ctx.cfg.n_seeds {
        let r1 = ctx.snap(rng.gen_range(r_lo..r_hi));
        let mut dr = ctx.snap(rng.gen_range(-1.0..1.0));
        if dr == 0.0 {
            dr = ctx.h;
        }
        let r2 = r1 + dr;
        let centers = [-r1 - d, -r2 - d, -r1 - d - 0.5 * l, -r1 - d + 0.5 * l];
        let probes = ctx.probes(&dom, delta, &centers, 0.5 * l)?;
        let on = op_norm_lower(
            |xi: &DiscreteMap| h_op(xi, r1)?.sub(&h_op(xi, r2)?),
            &ctx.norm(1),
            &ctx.norm(0),
            &probes,
        )?;
        let modulus = c0
            * ((r1 - r2).abs() * (2.0 * delta * (a.abs() + b.abs())).exp()
                + ((2.0 * delta * r1).exp() - (2.0 * delta * r2).exp()).abs() / delta * (-delta * r1).exp());
        rows.push(row(
            id,
            ctx.point().at(r1, l, d),
            "op_norm_difference",
            RowKind::Bound,
            on,
            modulus,
            1e-12,
            format!(
                "|H(R1) - H(R2)| <= C0 (|dR| e^{{2 delta (|A|+|B|)}} + |e^{{2 delta R1}} - e^{{2 delta R2}}|/delta e^{{-delta R1}}), dR = {dr:.6}"
            ),
        ));
    }
    Ok(rows)
}

fn e_decay(ctx: &Ctx, values: Option<&[f64]>) -> Result<Vec<CheckResult>> {
    let id = CheckId::EDecay;
    let rs: Vec<f64> = values
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| vec![20.0, 40.0, 80.0, 160.0])
        .into_iter()
        .map(|r| ctx.snap(r))
        .collect();
    let r_max = rs.iter().cloned().fold(0.0, f64::max);
    let grids = ctx.half_grids(ctx.h, 2.0 * r_max + ctx.cfg.grid.margin)?;
    let (k, theta) = (ctx.w.k, ctx.cfg.splice.theta);
    let mut rows = Vec::new();
    let mut feasible = Vec::new();
    for &r in &rs {
        match ctx.scaled_family(r) {
            Ok(fam) if fam.half_length() < r && r > 1.0 => feasible.push((r, fam)),
            Ok(fam) => rows.push(CheckResult::infeasible(id, ctx.point_for(r, &fam), "need d + l < R")),
            Err(e) => rows.push(CheckResult::infeasible(id, ctx.point().at(r, f64::NAN, f64::NAN), &e.to_string())),
        }
    }
    let mut ratios = Vec::new();
    for seed in ctx.seeds(ctx.cfg.n_seeds) {
        let u = ctx.pair(&grids, seed)?;
        let nu = u.weighted_norm(&ctx.norm(k))?;
        let mut per = Vec::new();
        for (r, fam) in &feasible {
            let e = error_term(fam, &u, GluingParam::new(*r, theta))?;
            per.push(e.weighted_norm(&ctx.norm(k - 1))? / nu);
        }
        ratios.push((seed, per));
    }
    let big_l: Vec<f64> = feasible.iter().map(|(r, _)| length_function(*r, 1)).collect::<Result<_>>()?;
    let constants: Vec<f64> = ratios
        .iter()
        .map(|(_, per)| per.iter().zip(&big_l).map(|(q, l)| q * l).fold(0.0, f64::max))
        .collect();
    let c_fit = constants.iter().cloned().fold(0.0, f64::max);
    for (seed, per) in &ratios {
        let mut seq = Vec::new();
        for (((r, fam), q), big) in feasible.iter().zip(per).zip(&big_l) {
            let p = ctx.point_for(*r, fam).with_seed(*seed);
            rows.push(
                row(
                    id,
                    p,
                    "ratio",
                    RowKind::Bound,
                    *q,
                    c_fit / big,
                    1e-12,
                    "|E(u)|_{k-1,p,delta} / |u|_{k,p,delta} <= C / L(R), C fitted over seeds",
                )
                .with_fitted(c_fit),
            );
            seq.push((p, *q));
        }
        rows.extend(decrease_rows(id, "ratio_step", &seq, "ratio strictly decreasing in R"));
    }
    if !constants.is_empty() {
        rows.push(envelope_row(id, ctx.point(), "constant_spread", &constants, "per-seed constants C"));
    }
    Ok(rows)
}

/// `X = τ_{−R}β_+′τ_{−2R}u_−` on `C_+`.
fn cross_term(fam: &SplicingFamily, u_minus: &DiscreteMap, r: f64, theta: f64, out: &CylinderGrid) -> Result<DiscreteMap> {
    let profile: Vec<f64> = out.t_values().iter().map(|&t| fam.beta(Side::Plus, t - r, 1)).collect();
    let mut x = DiscreteMap::zeros(out, u_minus.n_components());
    translate(u_minus, -2.0 * r, -2.0 * theta)?
        .window(out)?
        .accumulate_into(&profile, &mut x)?;
    Ok(x)
}

fn cross_term_decay(ctx: &Ctx, values: Option<&[f64]>) -> Result<Vec<CheckResult>> {
    let id = CheckId::CrossTermDecay;
    let (l, delta, k, theta) = (ctx.params.l, ctx.w.delta, ctx.w.k, ctx.cfg.splice.theta);
    let margin = ctx.cfg.grid.margin;
    let mut rows = Vec::new();

    // bound at the configured point
    let fam = ctx.family()?;
    let a = ctx.gluing();
    let d = fam.params.d;
    let b_norm = beta_prime_c_norm(&fam, k)?;
    let factor = (2.0 * delta * (l - d)).exp();
    let grids = ctx.half_grids(ctx.h, a.r + d + l + margin)?;
    let out = CylinderGrid::on_lattice(ctx.h, 0, (a.r / ctx.h).round() as i64, ctx.n_s)?;
    for seed in ctx.seeds(ctx.cfg.n_seeds) {
        let u = ctx.pair(&grids, seed)?;
        let x = cross_term(&fam, &u.minus, a.r, theta, &out)?;
        let measured = x.weighted_norm(&ctx.norm(k - 1))?;
        let bound = factor * b_norm * u.minus.weighted_norm(&ctx.norm(k - 1))?;
        rows.push(row(
            id,
            ctx.point_for(a.r, &fam).with_seed(seed),
            "cross_term",
            RowKind::Bound,
            measured,
            bound,
            0.01,
            "|X|_{k-1,p,delta} <= e^{2 delta (l-d)} |beta_+'|_{C^{k-1}} |u_-|_{k-1,p,delta}",
        ));
    }

    // controlled sweep: R = R_c − d keeps the sampled window of u_− fixed
    let ds: Vec<f64> = values
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| [1.0, 7.0 / 6.0, 8.0 / 6.0, 9.0 / 6.0, 10.0 / 6.0].iter().map(|f| f * d).collect())
        .into_iter()
        .map(|v| ctx.snap(v))
        .collect();
    let d_max = ds.iter().cloned().fold(0.0, f64::max);
    let r_c = ctx.snap(2.0 * d_max + 2.0 * l);
    let grids = ctx.half_grids(ctx.h, r_c + l + margin)?;
    let u = ctx.pair(&grids, ctx.cfg.seed)?;
    let nu = u.minus.weighted_norm(&ctx.norm(k - 1))?;
    let mut pts = Vec::new();
    for &dv in &ds {
        let r = r_c - dv;
        let fam = match ctx.family_with(l, dv) {
            Ok(f) => f,
            Err(e) => {
                rows.push(CheckResult::infeasible(id, ctx.point().at(r, l, dv), &e.to_string()));
                continue;
            }
        };
        let out = CylinderGrid::on_lattice(ctx.h, 0, (r / ctx.h).round() as i64, ctx.n_s)?;
        let x = cross_term(&fam, &u.minus, r, theta, &out)?;
        let scaled = x.weighted_norm(&ctx.norm(k - 1))? / (b_norm * nu);
        rows.push(row(
            id,
            ctx.point_for(r, &fam).with_seed(ctx.cfg.seed),
            "scaled_cross_term",
            RowKind::Bound,
            scaled,
            (2.0 * delta * (l - dv)).exp(),
            0.01,
            "|X|/(|beta_+'|_{C^{k-1}} |u_-|_{k-1,p,delta}) <= e^{2 delta (l-d)}",
        ));
        pts.push((dv, scaled));
    }
    if pts.len() >= 2 {
        let rate = fit_with_min(&pts, RateModel::Exp, 2).map(|f| -f.rate).unwrap_or(f64::NAN);
        rows.push(row(
            id,
            ctx.point().with_seed(ctx.cfg.seed),
            "decay_rate",
            RowKind::Identity,
            rate,
            2.0 * delta,
            0.05 * 2.0 * delta,
            "fitted decay rate in d = 2 delta (within 5%)",
        ));
    }
    Ok(rows)
}

fn dw_opnorm_limit(ctx: &Ctx, values: Option<&[f64]>) -> Result<Vec<CheckResult>> {
    let id = CheckId::DwOpnormLimit;
    let (delta, k, theta) = (ctx.w.delta, ctx.w.k, ctx.cfg.splice.theta);
    let mut rows = Vec::new();
    if ctx.cfg.regime == Regime::Free {
        let rs: Vec<f64> = values
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![20.0, 40.0, 80.0, 160.0])
            .into_iter()
            .map(|r| ctx.snap(r))
            .collect();
        let mut seq = Vec::new();
        for &r in &rs {
            let fam = match ctx.scaled_family(r) {
                Ok(f) if f.half_length() < r => f,
                Ok(f) => {
                    rows.push(CheckResult::infeasible(id, ctx.point_for(r, &f), "need d + l < R"));
                    continue;
                }
                Err(e) => {
                    rows.push(CheckResult::infeasible(id, ctx.point().at(r, f64::NAN, f64::NAN), &e.to_string()));
                    continue;
                }
            };
            let (l, d) = (fam.params.l, fam.params.d);
            let grids = ctx.half_grids(ctx.h, r + d + l + ctx.cfg.grid.margin)?;
            let offs = [-0.5 * l, 0.0, 0.5 * l];
            let cm: Vec<f64> = offs.iter().map(|o| -r - d + o).collect();
            let cp: Vec<f64> = offs.iter().map(|o| r + d + o).collect();
            let probes = ctx.pair_probes(&grids.0, &grids.1, delta, &cm, &cp, 0.5 * l)?;
            let a = GluingParam::new(r, theta);
            let on = op_norm_lower(|xi: &MapPair| error_term(&fam, xi, a), &ctx.norm(k), &ctx.norm(k - 1), &probes)?;
            let p = ctx.point_for(r, &fam);
            rows.push(row(
                id,
                p,
                "op_norm",
                RowKind::Bound,
                on,
                dw_literal_bound(&fam, delta, k)?,
                0.01,
                format!("|D_W Psi - d_t| <= {DW_FORMULA}"),
            ));
            seq.push((p, on));
        }
        rows.extend(decrease_rows(id, "op_norm_step", &seq, "operator norm strictly decreasing in R (l ~ R^{1/2})"));
    }
    // closed form along the asymptotic binding, no grid
    let rs_an = super::spaced(1e6, 1e9, 7, true)?;
    let mut scaled = Vec::new();
    for &r in &rs_an {
        let params = asymptotic_params(r, ctx.cfg.cutoff.l0, ctx.cfg.cutoff.d0)?;
        let fam = SplicingFamily::new(ctx.cutoff.clone(), params)?;
        let g2 = coupling_sup(&fam, Coupling::G2, 0);
        scaled.push(g2 * length_function(r, 1)?);
        rows.push(row(
            id,
            ctx.point_for(r, &fam),
            "g2_sup",
            RowKind::Bound,
            g2,
            dw_literal_bound(&fam, delta, 1)?,
            1e-12,
            format!("sup |beta_- beta_-'/D| <= {DW_FORMULA} at k = 1"),
        ));
    }
    rows.push(envelope_row(
        id,
        ctx.point(),
        "g2_sup_scaled_spread",
        &scaled,
        "sup |beta_- beta_-'/D| L(R) over R in [1e6, 1e9]",
    ));
    Ok(rows)
}

fn dr_rate(ctx: &Ctx, values: Option<&[f64]>) -> Result<Vec<CheckResult>> {
    let id = CheckId::DrRate;
    let rs: Vec<f64> = match values {
        Some(v) => v.to_vec(),
        None => super::spaced(1e6, 1e9, 7, true)?,
    };
    let mut rows = Vec::new();
    let mut samples = Vec::new();
    for &r in &rs {
        match asymptotic_params(r, ctx.cfg.cutoff.l0, ctx.cfg.cutoff.d0)
            .and_then(|p| SplicingFamily::new(ctx.cutoff.clone(), p))
        {
            Ok(fam) => {
                let big_l = length_function(r, 1)?;
                samples.push((r, fam.clone(), coupling_sup(&fam, Coupling::G2, 1), big_l));
            }
            Err(e) => rows.push(CheckResult::infeasible(id, ctx.point().at(r, f64::NAN, f64::NAN), &e.to_string())),
        }
    }
    let scaled: Vec<f64> = samples.iter().map(|(_, _, g, big_l)| g * big_l * big_l).collect();
    let c_fit = scaled.iter().cloned().fold(0.0, f64::max);
    for (r, fam, g, big_l) in &samples {
        rows.push(
            row(
                id,
                ctx.point_for(*r, fam),
                "g2_prime_sup",
                RowKind::Bound,
                *g,
                c_fit / (big_l * big_l),
                1e-12,
                "sup |(beta_- beta_-'/D)'| <= C / L(R)^2",
            )
            .with_fitted(c_fit),
        );
    }
    if samples.is_empty() {
        return Ok(rows);
    }
    rows.push(envelope_row(id, ctx.point(), "scaled_spread", &scaled, "sup |(beta_- beta_-'/D)'| L(R)^2"));
    let power: Vec<(f64, f64)> = samples.iter().map(|(r, _, g, _)| (*r, g * r.ln().powi(4))).collect();
    let profile: Vec<(f64, f64)> = samples.iter().map(|(r, _, g, _)| (*r, g * r * r.ln().powi(2))).collect();
    let power_rate = fit_with_min(&power, RateModel::Power, 2).map(|f| f.rate).unwrap_or(f64::NAN);
    let profile_rate = fit_with_min(&profile, RateModel::Log, 2).map(|f| f.rate).unwrap_or(f64::NAN);
    rows.push(row(
        id,
        ctx.point(),
        "power_exponent",
        RowKind::Identity,
        power_rate,
        -1.0,
        0.1,
        "sup |(beta_- beta_-'/D)'| (ln R)^4 ~ R^{-1}",
    ));
    rows.push(row(
        id,
        ctx.point(),
        "profile_log_exponent",
        RowKind::Identity,
        profile_rate,
        -2.0,
        0.1,
        "sup |(beta_- beta_-'/D)'| R (ln R)^2 ~ (ln R)^{-2}",
    ));
    Ok(rows)
}

fn dtheta_rate(ctx: &Ctx) -> Result<Vec<CheckResult>> {
    let id = CheckId::DthetaRate;
    let fam = ctx.family()?;
    let a = ctx.gluing();
    let (l, d, delta, k) = (fam.params.l, fam.params.d, ctx.w.delta, ctx.w.k);
    let grids = ctx.half_grids(ctx.h, 2.0 * a.r + ctx.cfg.grid.margin)?;
    let factor = (delta * (2.0 * l - 2.0 * d)).exp();
    let mut meas = Vec::new();
    for seed in ctx.seeds(ctx.cfg.n_seeds) {
        let u = ctx.pair(&grids, seed)?;
        let input = FilledSectionInput { pair: u.clone(), a, spec: ctx.w };
        let dth = d_theta_psi(&fam, &input)?;
        let m = dth.plus.weighted_norm(&ctx.norm(k - 1))?;
        let base = factor * u.minus.weighted_norm(&ctx.norm(k))?;
        meas.push((seed, m, base));
    }
    let constants: Vec<f64> = meas.iter().map(|(_, m, b)| m / b).collect();
    let c_fit = constants.iter().cloned().fold(0.0, f64::max);
    let mut rows: Vec<CheckResult> = meas
        .iter()
        .map(|(seed, m, base)| {
            row(
                id,
                ctx.point_for(a.r, &fam).with_seed(*seed),
                "dtheta_plus",
                RowKind::Bound,
                *m,
                c_fit * base,
                1e-12,
                "|d_theta Psi_+|_{k-1,p,delta} <= C e^{delta(2l-2d)} |u_-|_{k,p,delta}, C fitted over seeds",
            )
            .with_fitted(c_fit)
        })
        .collect();
    rows.push(envelope_row(id, ctx.point(), "constant_spread", &constants, "per-seed constants C"));
    let u0 = s_independent_pair(&grids.0, &grids.1, ctx.n_comp, &ctx.cfg.field, ctx.cfg.seed)?;
    let dth0 = d_theta_psi(&fam, &FilledSectionInput { pair: u0, a, spec: ctx.w })?;
    rows.push(row(
        id,
        ctx.point_for(a.r, &fam).with_seed(ctx.cfg.seed),
        "s_independent",
        RowKind::Identity,
        dth0.max_abs(),
        0.0,
        0.0,
        "d_theta Psi = 0 exactly for s-independent input",
    ));
    Ok(rows)
}

/// Richardson order of a family of finite-difference errors.
fn order_row(id: CheckId, point: ParamPoint, quantity: &str, errs: &[(f64, f64)], formula: &str) -> CheckResult {
    let order = fit_with_min(errs, RateModel::Power, 2).map(|f| f.rate).unwrap_or(f64::NAN);
    row(id, point, quantity, RowKind::Identity, order, 2.0, 0.2, formula)
}

fn fd_dr(ctx: &Ctx) -> Result<Vec<CheckResult>> {
    let id = CheckId::FdDr;
    let fam = ctx.family()?;
    let a = ctx.gluing();
    let steps = [8.0 * ctx.h, 4.0 * ctx.h, 2.0 * ctx.h];
    let reach = 2.0 * (a.r + steps[0]) + ctx.cfg.grid.margin;
    let grids = ctx.half_grids(ctx.h, reach)?;
    let n_out = ((reach - a.r - steps[0]) / ctx.h).floor() as i64;
    let out = CylinderGrid::on_lattice(ctx.h, 0, n_out, ctx.n_s)?;
    let mut rows = Vec::new();
    for seed in ctx.seeds(ctx.cfg.n_seeds) {
        let u = ctx.pair(&grids, seed)?;
        let exact = d_r_psi(&fam, &FilledSectionInput { pair: u.clone(), a, spec: ctx.w })?;
        let exact_tr = translate(&d_t(&u.plus), a.r, 0.0)?.restrict(&out)?;
        let mut errs = Vec::new();
        let mut errs_tr = Vec::new();
        for &hr in &steps {
            let up = psi_l_direct(&fam, &u, GluingParam::new(a.r + hr, a.theta))?;
            let dn = psi_l_direct(&fam, &u, GluingParam::new(a.r - hr, a.theta))?;
            let fd = up.combine(0.5 / hr, &dn, -0.5 / hr)?;
            errs.push((hr, rel_diff(&fd, &exact)?));
            let tp = translate(&u.plus, a.r + hr, 0.0)?.restrict(&out)?;
            let tm = translate(&u.plus, a.r - hr, 0.0)?.restrict(&out)?;
            let fd_tr = tp.lin_comb(0.5 / hr, &tm, -0.5 / hr)?;
            errs_tr.push((hr, fd_tr.sub(&exact_tr)?.max_abs() / exact_tr.max_abs()));
        }
        let p = ctx.point_for(a.r, &fam).with_seed(seed);
        rows.push(order_row(id, p, "psi_order", &errs, "centred differences of Psi in R converge to d_R Psi at order 2"));
        rows.push(order_row(
            id,
            p,
            "translation_order",
            &errs_tr,
            "centred differences of tau_R u converge to tau_R d_t u at order 2",
        ));
    }
    Ok(rows)
}

fn fd_dtheta(ctx: &Ctx) -> Result<Vec<CheckResult>> {
    let id = CheckId::FdDtheta;
    let fam = ctx.family()?;
    let a = ctx.gluing();
    let grids = ctx.half_grids(ctx.h, 2.0 * a.r + ctx.cfg.grid.margin)?;
    let mut rows = Vec::new();
    for seed in ctx.seeds(ctx.cfg.n_seeds) {
        let u = ctx.pair(&grids, seed)?;
        let exact = d_theta_psi(&fam, &FilledSectionInput { pair: u.clone(), a, spec: ctx.w })?;
        let mut errs = Vec::new();
        for &ht in &[0.05, 0.025, 0.0125] {
            let up = psi_l_direct(&fam, &u, GluingParam::new(a.r, a.theta + ht))?;
            let dn = psi_l_direct(&fam, &u, GluingParam::new(a.r, a.theta - ht))?;
            errs.push((ht, rel_diff(&up.combine(0.5 / ht, &dn, -0.5 / ht)?, &exact)?));
        }
        rows.push(order_row(
            id,
            ctx.point_for(a.r, &fam).with_seed(seed),
            "psi_order",
            &errs,
            "centred differences of Psi in theta converge to d_theta Psi at order 2",
        ));
    }
    Ok(rows)
}

fn fd_dw(ctx: &Ctx) -> Result<Vec<CheckResult>> {
    let id = CheckId::FdDw;
    let fam = ctx.family()?;
    let a = ctx.gluing();
    let grids = ctx.half_grids(ctx.h, 2.0 * a.r + ctx.cfg.grid.margin)?;
    const STEP: f64 = 1e-4;
    let mut rows = Vec::new();
    for seed in ctx.seeds(ctx.cfg.n_seeds) {
        let u = ctx.pair(&grids, seed)?;
        let xi = ctx.pair(&grids, seed.wrapping_add(1 << 20))?;
        let input = FilledSectionInput { pair: u.clone(), a, spec: ctx.w };
        let exact = d_w_psi(&fam, &input, &xi)?;
        let up = psi_l_direct(&fam, &u.combine(1.0, &xi, STEP)?, a)?;
        let base = psi_l_direct(&fam, &u, a)?;
        let fd = up.combine(1.0 / STEP, &base, -1.0 / STEP)?;
        rows.push(row(
            id,
            ctx.point_for(a.r, &fam).with_seed(seed),
            "relative_error",
            RowKind::Bound,
            rel_diff(&fd, &exact)?,
            1e-9,
            0.0,
            "difference quotient of Psi in direction xi equals D_W Psi(xi)",
        ));
    }
    Ok(rows)
}

fn profile_radii(values: Option<&[f64]>) -> Vec<f64> {
    values
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| (4..=12).map(|n| 1.0 / n as f64).collect())
}

fn polar_assembly(ctx: &Ctx, values: Option<&[f64]>) -> Result<Vec<CheckResult>> {
    let id = CheckId::PolarAssembly;
    let r0 = ctx.cfg.profile.r0;
    let delta = ctx.w.delta;
    let mut rows = Vec::new();
    if ctx.cfg.regime == Regime::Free {
        let fam = ctx.family()?;
        let radii: Vec<f64> = values.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.25, 0.2, 1.0 / 6.0]);
        for &r in &radii {
            let prof = GluingProfileParams { r0, r };
            let big_r = match profile_r(&prof) {
                Ok(v) if fam.half_length() < v => v,
                Ok(v) => {
                    rows.push(CheckResult::infeasible(id, ctx.point_for(v, &fam), "need d + l < R(r)"));
                    continue;
                }
                Err(e) => {
                    rows.push(CheckResult::infeasible(id, ctx.point(), &e.to_string()));
                    continue;
                }
            };
            let grids = ctx.half_grids(ctx.h, 2.0 * big_r + ctx.cfg.grid.margin)?;
            let u = ctx.pair(&grids, ctx.cfg.seed)?;
            let scale = profile_dr_dr(&prof)?;
            let inv = 1.0 / r;
            let eval = |theta: f64| -> Result<(MapPair, MapPair, MapPair)> {
                let a = GluingParam::new(big_r, theta);
                let dr = error_family(&fam, &u, a, ErrorKind::DR)?.combine(scale, &u.zeros_like(), 0.0)?;
                let dth = error_family(&fam, &u, a, ErrorKind::DTheta)?.combine(inv, &u.zeros_like(), 0.0)?;
                Ok((dr, dth, u.zeros_like()))
            };
            let p = ctx.point_for(big_r, &fam).with_seed(ctx.cfg.seed);
            let (dr0, dth0, _) = eval(0.0)?;
            let (dx0, dy0) = d_xy_psi(&fam, &u, &prof, 0.0)?;
            rows.push(row(id, p, "theta0_x", RowKind::Identity, rel_diff(&dx0, &dr0)?, 0.0, 1e-12, "d_x Psi = R'(r) d_R Psi at theta = 0"));
            rows.push(row(id, p, "theta0_y", RowKind::Identity, rel_diff(&dy0, &dth0)?, 0.0, 1e-12, "d_y Psi = (1/r) d_theta Psi at theta = 0"));
            let (_, dth_q, _) = eval(FRAC_PI_2)?;
            let (dx_q, _) = d_xy_psi(&fam, &u, &prof, FRAC_PI_2)?;
            let neg = dth_q.combine(-1.0, &dth_q, 0.0)?;
            rows.push(row(
                id,
                p,
                "theta_quarter_x",
                RowKind::Identity,
                rel_diff(&dx_q, &neg)?,
                0.0,
                1e-12,
                "d_x Psi = -(1/r) d_theta Psi at theta = pi/2",
            ));
            let theta = 0.7;
            let (dr_g, dth_g, _) = eval(theta)?;
            let (dx_g, dy_g) = d_xy_psi(&fam, &u, &prof, theta)?;
            rows.push(row(
                id,
                p,
                "rotation",
                RowKind::Identity,
                rotation_defect(&dx_g, &dy_g, &dr_g, &dth_g),
                0.0,
                1e-12,
                "|d_x Psi|^2 + |d_y Psi|^2 = |R' d_R Psi|^2 + |(1/r) d_theta Psi|^2 pointwise",
            ));
        }
        let (dx, dy) = d_xy_psi(&fam, &ctx.pair(&ctx.half_grids(ctx.h, 40.0)?, ctx.cfg.seed)?, &GluingProfileParams { r0, r: 0.0 }, 0.3)?;
        rows.push(row(
            id,
            ctx.point().at(f64::INFINITY, fam.params.l, fam.params.d),
            "origin",
            RowKind::Identity,
            dx.max_abs() + dy.max_abs(),
            0.0,
            0.0,
            "d_x Psi = d_y Psi = 0 at r = 0",
        ));
    }
    for &r in &profile_radii(values) {
        let big_r = profile_r(&GluingProfileParams { r0, r })?;
        let params = asymptotic_params(big_r, ctx.cfg.cutoff.l0, ctx.cfg.cutoff.d0)?;
        let log_ratio = big_r.ln().ln() - delta * params.d + big_r.ln();
        rows.push(row(
            id,
            ctx.point().at(big_r, params.l, params.d),
            "damping",
            RowKind::Bound,
            log_ratio.exp(),
            1e-6,
            0.0,
            "ln R e^{-delta d} / (1/R) << 1 along l = L(R), d = 3l",
        ));
    }
    Ok(rows)
}

fn rotation_defect(dx: &MapPair, dy: &MapPair, a: &MapPair, b: &MapPair) -> f64 {
    // normalize first: far out on the profile the fields are small enough for squares to go subnormal
    let unit = [dx, dy, a, b].iter().map(|m| m.max_abs()).fold(0.0, f64::max);
    let unit = if unit > 0.0 { unit } else { 1.0 };
    let sq = |m: &MapPair| -> Vec<f64> {
        m.minus
            .samples()
            .iter()
            .chain(m.plus.samples())
            .map(|z| (z / unit).norm_sqr())
            .collect()
    };
    let (x, y, p, q) = (sq(dx), sq(dy), sq(a), sq(b));
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..x.len() {
        let rhs = p[i] + q[i];
        worst = worst.max((x[i] + y[i] - rhs).abs());
        scale = scale.max(rhs);
    }
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// Gluing lengths `R(r)` for the profile radii, with the families `l = R/5`, `d = 3l`.
fn profile_points(ctx: &Ctx, id: CheckId, values: Option<&[f64]>, rows: &mut Vec<CheckResult>) -> Vec<(f64, f64, SplicingFamily)> {
    let r0 = ctx.cfg.profile.r0;
    let mut out = Vec::new();
    for r in profile_radii(values) {
        let big_r = match profile_r(&GluingProfileParams { r0, r }) {
            Ok(v) if v > 0.0 && v.is_finite() => v,
            Ok(_) | Err(_) => {
                rows.push(CheckResult::infeasible(id, ctx.point(), &format!("radius {r} outside (0, r0)")));
                continue;
            }
        };
        match ctx.profile_family(big_r) {
            Ok(fam) => out.push((r, big_r, fam)),
            Err(e) => rows.push(CheckResult::infeasible(id, ctx.point().at(big_r, f64::NAN, f64::NAN), &e.to_string())),
        }
    }
    out
}

fn final_ratio_row(id: CheckId, quantity: &str, first: (ParamPoint, f64), last: (ParamPoint, f64), log: bool, what: &str) -> CheckResult {
    let ratio = if log { (last.1 - first.1).exp() } else { last.1 / first.1 };
    row(id, last.0, quantity, RowKind::Bound, ratio, 1e-3, 0.0, format!("{what} at the last radius / at the first <= 1e-3"))
}

fn c1_at_infinity(ctx: &Ctx, values: Option<&[f64]>) -> Result<Vec<CheckResult>> {
    let id = CheckId::C1AtInfinity;
    let (delta, k, p, theta) = (ctx.w.delta, ctx.w.k, ctx.w.p, ctx.cfg.splice.theta);
    let mut rows = Vec::new();
    let points = profile_points(ctx, id, values, &mut rows);
    let reference = ReferencePair { gamma: ctx.cfg.field.decay };
    let log_u = reference.log_norm_pair(delta, k, p);
    let (mut ops, mut drs, mut dths) = (Vec::new(), Vec::new(), Vec::new());
    for (r, big_r, fam) in &points {
        let (l, d) = (fam.params.l, fam.params.d);
        let pt = ctx.point_for(*big_r, fam);
        let frame = ErrorFrame::new(fam, delta, theta, l / 20.0, ctx.n_s, 2.0 * l)?;
        let g = frame.grid();
        let offs = [-0.5 * l, 0.0, 0.5 * l];
        let cm: Vec<f64> = offs.iter().map(|o| -d + o).collect();
        let cp: Vec<f64> = offs.iter().map(|o| d + o).collect();
        let probes = ctx.pair_probes(g, g, 0.0, &cm, &cp, 0.5 * l)?;
        let on = op_norm_lower(
            |v: &MapPair| frame.apply(v),
            &NormSpec::new(0.0, k, p)?,
            &NormSpec::new(0.0, k - 1, p)?,
            &probes,
        )?;
        rows.push(row(
            id,
            pt,
            "op_norm",
            RowKind::Bound,
            on,
            dw_literal_bound(fam, delta, k)?,
            0.01,
            format!("|E^R|_op <= {DW_FORMULA}, l = R/5"),
        ));
        ops.push((pt, on));
        let dr = reference.log_norm_error(fam, delta, *big_r, theta, k - 1, p, ErrorKind::DR)?
            + profile_dr_dr(&GluingProfileParams { r0: ctx.cfg.profile.r0, r: *r })?.abs().ln()
            - log_u;
        let dth = reference.log_norm_error(fam, delta, *big_r, theta, k - 1, p, ErrorKind::DTheta)? - r.ln() - log_u;
        drs.push((pt, dr));
        dths.push((pt, dth));
    }
    rows.extend(decrease_rows(id, "op_norm_step", &ops, "operator norm strictly decreasing along the profile"));
    rows.extend(decrease_rows(id, "dr_log_step", &drs, "ln(|d_r Psi| / |u|) strictly decreasing along the profile"));
    rows.extend(decrease_rows(
        id,
        "dtheta_log_step",
        &dths,
        "ln(|(1/r) d_theta Psi| / |u|) strictly decreasing along the profile",
    ));
    if ops.len() >= 2 {
        rows.push(final_ratio_row(id, "op_norm_ratio", ops[0], ops[ops.len() - 1], false, "operator norm"));
        rows.push(final_ratio_row(id, "dr_ratio", drs[0], drs[drs.len() - 1], true, "|d_r Psi| / |u|"));
        rows.push(final_ratio_row(id, "dtheta_ratio", dths[0], dths[dths.len() - 1], true, "|(1/r) d_theta Psi| / |u|"));
    }
    Ok(rows)
}

fn derivative_extension(ctx: &Ctx, values: Option<&[f64]>) -> Result<Vec<CheckResult>> {
    let id = CheckId::DerivativeExtension;
    let (delta, k, p, theta) = (ctx.w.delta, ctx.w.k, ctx.w.p, ctx.cfg.splice.theta);
    let mut rows = Vec::new();
    let points = profile_points(ctx, id, values, &mut rows);
    let reference = ReferencePair { gamma: ctx.cfg.field.decay };
    let log_u = reference.log_norm_pair(delta, k, p);
    let mut qs = Vec::new();
    for (r, big_r, fam) in &points {
        let log_e = reference.log_norm_error(fam, delta, *big_r, theta, k - 1, p, ErrorKind::Value)?;
        qs.push((ctx.point_for(*big_r, fam), log_e - r.ln() - log_u));
    }
    rows.extend(decrease_rows(
        id,
        "quotient_log_step",
        &qs,
        "ln(|Psi(r) - Psi(0)| / (r |u|)) strictly decreasing as r -> 0",
    ));
    if qs.len() >= 2 {
        rows.push(final_ratio_row(id, "quotient_ratio", qs[0], qs[qs.len() - 1], true, "difference quotient"));
    }
    Ok(rows)
}
