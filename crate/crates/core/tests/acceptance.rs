//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers. Tolerances are pinned here, not configurable.

use mfpack_core::construction::{frequency_exponent, ConstructionParams, SelectedFamily};
use mfpack_core::dyadic::{interval_of, DyadicWord};
use mfpack_core::localdim::{
    compare_bounds, exponent_trace, partner_replacement_family, t_estimate, SearchBudget,
    TParams, TraceTarget,
};
use mfpack_core::measure::{MeasureModel, WeightTable};
use mfpack_core::packing::{
    balls_disjoint, greedy_prepacking_estimate, prepacking_sup_exact, Ball,
};
use mfpack_core::spectrum::{
    check_psi_legendre_identity, estimate_tau, LegendreOutcome, OlsenOutcome, Provenance,
    ScalingCurve,
};
use mfpack_core::util::neumaier_sum;
use std::sync::Arc;
use std::time::Instant;

fn desk_family() -> Arc<SelectedFamily> {
    Arc::new(SelectedFamily::new(ConstructionParams::desk_preset()).unwrap())
}

fn desk_model() -> MeasureModel {
    MeasureModel::Selective(desk_family())
}

fn desk_g(x: f64) -> f64 {
    let p = ConstructionParams::desk_preset();
    frequency_exponent(x, p.p0, p.p1)
}

/// The probability-tree models the criteria quantify over.
fn tree_models() -> Vec<MeasureModel> {
    vec![
        MeasureModel::Uniform,
        MeasureModel::cascade(0.25, 0.75).unwrap(),
        MeasureModel::cascade(0.42, 0.58).unwrap(),
        desk_model(),
    ]
}

fn q_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut qs = Vec::new();
    let mut q = lo;
    while q <= hi + 1e-9 {
        qs.push(q);
        q += step;
    }
    qs
}

#[test]
fn c01_mass_conservation_and_additivity() {
    let start = Instant::now();
    let mut worst_total = 0.0f64;
    let mut worst_node = 0.0f64;
    for model in tree_models() {
        let mut prev: Option<Vec<f64>> = None;
        for n in 0..=16usize {
            let values: Vec<f64> =
                model.log2_masses_at(n).unwrap().iter().map(|l| l.exp2()).collect();
            let total = neumaier_sum(&values);
            worst_total = worst_total.max((total - 1.0).abs());
            if let Some(parents) = prev {
                for (i, &p) in parents.iter().enumerate() {
                    let defect = (values[2 * i] + values[2 * i + 1] - p).abs();
                    worst_node = worst_node.max(defect);
                }
            }
            prev = Some(values);
        }
        assert!(worst_total <= 1e-12, "{}: total defect {worst_total}", model.name());
        assert!(worst_node <= 1e-14, "{}: additivity defect {worst_node}", model.name());
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "runtime {elapsed:?}");
    println!(
        "criterion 01 PASS: total-mass defect {worst_total:.2e}, node additivity defect \
         {worst_node:.2e}, {elapsed:?}"
    );
}

#[test]
fn c02_mass_exponent_identity_on_selected_words() {
    let start = Instant::now();
    let fam = desk_family();
    let model = MeasureModel::Selective(fam.clone());
    let p = ConstructionParams::desk_preset();
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for k in 0..=6 {
        for node in fam.generation(k).unwrap() {
            let n = node.word.order();
            let ratio = node.word.zero_count() as f64 / n as f64;
            let got = model.mass(&node.word).unwrap().log2;
            let expect = -(n as f64) * frequency_exponent(ratio, p.p0, p.p1);
            worst = worst.max((got - expect).abs() / expect.abs());
            count += 1;
        }
    }
    assert!(worst <= 1e-12, "relative log-space error {worst}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "runtime {elapsed:?}");
    println!(
        "criterion 02 PASS: mass = length^g(N0/n) on {count} selected words, worst relative \
         log error {worst:.2e}, {elapsed:?}"
    );
}

#[test]
fn c03_mass_envelope() {
    let start = Instant::now();
    let model = desk_model();
    for n in 0..=14usize {
        assert!(model.mass_envelope_check(n).unwrap(), "envelope fails at order {n}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "runtime {elapsed:?}");
    println!("criterion 03 PASS: p0^n <= mass <= p1^n for n <= 14, {elapsed:?}");
}

#[test]
fn c04_normalization_anchor() {
    let mut worst = 0.0f64;
    for model in tree_models() {
        let est = estimate_tau(&model, &[1.0], (8, 16)).unwrap();
        worst = worst.max(est.fits[0].slope.abs());
    }
    // an explicit table model joins at its own depth
    let masses: Vec<f64> = (0..1024u64).map(|i| (i % 7 + 1) as f64).collect();
    let table = WeightTable::new(10, masses, true).unwrap();
    let model = MeasureModel::Explicit(Arc::new(table));
    let est = estimate_tau(&model, &[1.0], (4, 10)).unwrap();
    worst = worst.max(est.fits[0].slope.abs());
    assert!(worst <= 1e-9, "tau(1) defect {worst}");
    println!("criterion 04 PASS: |tau(1)| <= {worst:.2e} across five models");
}

#[test]
fn c05_cascade_oracle() {
    let start = Instant::now();
    let (p0, p1) = (0.25, 0.75f64);
    let model = MeasureModel::cascade(p0, p1).unwrap();
    let qs = q_grid(0.0, 10.0, 0.25);
    let est = estimate_tau(&model, &qs, (8, 16)).unwrap();
    let mut worst = 0.0f64;
    for f in &est.fits {
        let closed = {
            let a = f.q * p0.log2();
            let b = f.q * p1.log2();
            let m = a.max(b);
            m + ((a - m).exp2() + (b - m).exp2()).log2()
        };
        worst = worst.max((f.slope - closed).abs());
    }
    assert!(worst <= 0.02, "cascade oracle defect {worst}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "runtime {elapsed:?}");
    println!(
        "criterion 05 PASS: tau within {worst:.2e} of log2(p0^q + p1^q) on q in [0,10], \
         {elapsed:?}"
    );
}

#[test]
fn c06_upper_scaling_shadow() {
    let model = desk_model();
    let p1 = ConstructionParams::desk_preset().p1;
    let qs = q_grid(1.0, 10.0, 0.25);
    let est = estimate_tau(&model, &qs, (8, 16)).unwrap();
    let mut worst_margin = f64::NEG_INFINITY;
    for f in &est.fits {
        let bound = 1.0 + f.q * p1.log2() + 0.05;
        worst_margin = worst_margin.max(f.slope - bound);
        assert!(f.slope <= bound, "q = {}: tau {} above 1 + q log2(p1) + 0.05", f.q, f.slope);
    }
    println!(
        "criterion 06 PASS: tau(q) <= 1 + q log2(p1) + 0.05 on q in [1,10], worst margin \
         {worst_margin:.3}"
    );
}

#[test]
fn c07_lower_scaling_floor() {
    // The floor shadows a lower bound proved for the selective measure via
    // its Lebesgue-like behavior off the construction; the uniform model is
    // the degenerate equality case and near-symmetric cascades inherit the
    // slack. Strongly skewed cascades genuinely dip below the floor (see
    // the companion counterexample test), so they are out of scope here.
    let floor_models = vec![
        MeasureModel::Uniform,
        MeasureModel::cascade(0.42, 0.58).unwrap(),
        desk_model(),
    ];
    let qs = q_grid(0.0, 0.9, 0.1);
    let mut worst = f64::INFINITY;
    for model in floor_models {
        let est = estimate_tau(&model, &qs, (8, 16)).unwrap();
        for f in &est.fits {
            let floor = 1.0 - f.q - 0.05;
            worst = worst.min(f.slope - floor);
            assert!(
                f.slope >= floor,
                "{} at q = {}: tau {} under 1 - q - 0.05",
                model.name(),
                f.q,
                f.slope
            );
        }
    }
    println!(
        "criterion 07 PASS: tau(q) >= 1 - q - 0.05 on q in [0,1), smallest margin {worst:.2e}"
    );
}

/// A floor stated for every full-support model would be false: the skewed
/// cascade pinned by criterion 5 dips 1.6e-5 under it near q = 1/2, because
/// the concavity of x^q makes the uniform split maximize partition sums for
/// q in [0,1]. Keep the counterexample measured and visible.
#[test]
fn c07_floor_counterexample_is_real() {
    let model = MeasureModel::cascade(0.25, 0.75).unwrap();
    let est = estimate_tau(&model, &[0.5], (8, 16)).unwrap();
    let margin = est.fits[0].slope - (1.0 - 0.5 - 0.05);
    assert!(
        margin < 0.0 && margin > -1e-4,
        "expected a tiny breach at q = 0.5, measured margin {margin:.3e}"
    );
    println!(
        "criterion 07 note: cascade(0.25,0.75) breaches the floor at q = 0.5 by \
         {:.2e}, as the concavity bound predicts",
        -margin
    );
}

#[test]
fn c08_psi_legendre_identity_suite() {
    let start = Instant::now();
    // five synthetic convex non-increasing curves with B(1) = 0 and s < 0;
    // one linear (unattained-minimum surrogate), one with a flat tail, one
    // kinked, one multi-kink with a flat tail, one smooth
    let curves: Vec<ScalingCurve> = vec![
        ScalingCurve::uniform(q_grid(0.0, 8.0, 0.25)).unwrap(),
        ScalingCurve::new(
            vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            vec![2.0, 0.0, -1.2, -2.0, -2.0, -2.0, -2.0],
            Provenance::Synthetic,
        )
        .unwrap(),
        ScalingCurve::new(
            vec![0.0, 0.5, 1.0, 2.0, 4.0],
            vec![2.0, 1.0, 0.0, -0.8, -2.4],
            Provenance::Synthetic,
        )
        .unwrap(),
        ScalingCurve::new(
            vec![0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0],
            vec![3.0, 1.5, 0.0, -1.5, -2.3, -2.55, -2.55],
            Provenance::Synthetic,
        )
        .unwrap(),
        ScalingCurve::cascade(0.3, 0.7, q_grid(0.0, 12.0, 0.25)).unwrap(),
    ];
    let mut worst = 0.0f64;
    let mut checks = 0usize;
    for (i, curve) in curves.iter().enumerate() {
        for eta in [0.5, 1.0, 2.0, 3.0] {
            let c = check_psi_legendre_identity(curve, eta).unwrap();
            worst = worst.max(c.residual);
            checks += 1;
            assert!(
                c.residual <= 1e-6,
                "curve {i} eta {eta}: lhs {} rhs {} residual {}",
                c.lhs,
                c.rhs,
                c.residual
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:?}");
    println!(
        "criterion 08 PASS: identity residual <= {worst:.2e} across {checks} curve/eta \
         pairs, {elapsed:?}"
    );
}

#[test]
fn c09_finite_scale_exponent_window() {
    let start = Instant::now();
    let model = desk_model();
    let (lo, hi) = (desk_g(0.30) - 0.05, desk_g(0.448) + 0.05);
    let orders: Vec<usize> = (0..=14).map(|k| 12 + 6 * k).collect();
    for lineage in [0usize, 1] {
        let t = exponent_trace(&model, &TraceTarget::SelectedPath { lineage }, &orders).unwrap();
        for (n, e) in &t.samples {
            assert!(*e >= lo && *e <= hi, "lineage {lineage} order {n}: exponent {e}");
        }
    }
    // off-construction point, lazily evaluated to order 2000
    let t = exponent_trace(&model, &TraceTarget::Point { x: 0.7 }, &[500, 1000, 2000]).unwrap();
    let (_, deep) = *t.samples.last().unwrap();
    assert!((deep - 1.0).abs() <= 0.05, "deep exponent {deep}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "runtime {elapsed:?}");
    println!(
        "criterion 09 PASS: path exponents inside [{lo:.4}, {hi:.4}] at generation orders; \
         off-construction exponent {deep:.5} at order 2000, {elapsed:?}"
    );
}

#[test]
fn c10_ceiling_and_dominance() {
    let budget = SearchBudget::default();
    // (model, alpha, eta, p, depth)
    let instances: Vec<(MeasureModel, f64, f64, u64, usize)> = vec![
        (MeasureModel::Uniform, 1.0, 1.05, 4, 16),
        (desk_model(), desk_g(0.448), desk_g(0.448) + 0.05, 256, 30),
        (desk_model(), desk_g(0.448), 1.02, 1 << 14, 36),
    ];
    let mut rows = Vec::new();
    for (model, alpha, eta, p, depth) in instances {
        let t = t_estimate(&model, alpha, eta, p, depth, &budget).unwrap();
        let value = t.value.expect("nonempty sample");
        assert!(value <= eta + 0.05, "{}: {} above eta + 0.05", model.name(), value);
        assert!(t.ceiling_ok);
        for inst in &t.instances {
            assert!(
                inst.value <= inst.base_sup + 1e-12,
                "{}: instance value {} above base sup {}",
                model.name(),
                inst.value,
                inst.base_sup
            );
        }
        rows.push(format!("{} eta={eta:.3}: value {value:.4}", model.name()));
    }
    println!("criterion 10 PASS: ceiling and base dominance hold ({})", rows.join("; "));
}

#[test]
fn c11_partner_witness() {
    let fam = desk_family();
    let model = MeasureModel::Selective(fam.clone());
    let gen = fam.generation(3).unwrap();
    let m: Vec<f64> = gen.iter().map(|n| interval_of(&n.word).midpoint_f64()).collect();
    let radius = (-(31.0f64)).exp2();
    let balls: Vec<Ball> = m.iter().map(|&x| Ball::new(x, radius)).collect();
    let base =
        mfpack_core::packing::CenteredPacking::new(balls, radius, |x| m.contains(&x)).unwrap();
    let (family, value) = partner_replacement_family(&model, &base, 44).unwrap();
    assert!(family.is_valid(&m, base.epsilon), "two-part validity");
    assert_eq!(family.parts.len(), 2);
    let g1 = desk_g(0.36);
    assert!(value <= g1 + 0.05, "witness value {value} above g(gamma1) + 0.05");
    // the witness in fact sits strictly under g(gamma1), so T/alpha < 1
    // across the whole admissible alpha window
    assert!(value < g1, "witness value {value} vs g(gamma1) {g1}");
    let g2 = desk_g(0.448);
    for alpha in [g1 + 1e-6, 0.5 * (g1 + g2), g2] {
        assert!(value / alpha < 1.0, "alpha {alpha}: T/alpha {}", value / alpha);
    }
    println!(
        "criterion 11 PASS: partner witness is (P_2)-valid with sup-ratio {value:.4} < \
         g(gamma1) = {g1:.4}; T/alpha < 1 on (g(gamma1), g(gamma2)]"
    );
}

#[test]
fn c12_bound_comparison_improves() {
    let model = desk_model();
    let alpha = 0.9944; // inside (g(gamma1), g(gamma2)]
    assert!(alpha > desk_g(0.36) && alpha <= desk_g(0.448));
    let qs = q_grid(0.0, 32.0, 0.25);
    let est = estimate_tau(&model, &qs, (8, 16)).unwrap();
    let cmp = compare_bounds(&model, alpha, &est.curve, &TParams::default()).unwrap();
    assert_eq!(cmp.improvement, Some(true), "{cmp:?}");
    assert_eq!(cmp.infima_agree, Some(true));
    let olsen = match &cmp.olsen {
        OlsenOutcome::Applicable { outcome: LegendreOutcome::Attained { value, argmin_q, .. } } => {
            assert!(*argmin_q >= 1.0, "argmin at q = {argmin_q}");
            *value
        }
        other => panic!("q >= 0 bound not attained: {other:?}"),
    };
    let new = cmp.new_bound.unwrap();
    assert!(new < olsen);
    println!(
        "criterion 12 PASS: new bound {new:.4} < q>=0 bound {olsen:.4} at alpha = {alpha} \
         (T/alpha = {:.4}, argmin at q >= 1)",
        cmp.t_over_alpha.unwrap()
    );
}

#[test]
fn c13_packing_oracle_sandwich() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(0);
    let models =
        [MeasureModel::Uniform, MeasureModel::cascade(0.3, 0.7).unwrap(), desk_model()];

    // independent second enumeration: depth-first, one ball per point,
    // canonical left-to-right summation
    fn weight(model: &MeasureModel, b: &Ball, q: f64, t: f64, depth: usize) -> f64 {
        let enc = model.ball_mass_bounds(b.center, b.radius, depth).unwrap();
        let mass = 0.5 * (enc.lower + enc.upper);
        let d = 2.0 * b.radius;
        if mass == 0.0 {
            return if q < 0.0 {
                f64::INFINITY
            } else if q == 0.0 {
                (t * d.log2()).exp2()
            } else {
                0.0
            };
        }
        (q * mass.log2() + t * d.log2()).exp2()
    }
    fn enumerate(
        model: &MeasureModel,
        pts: &[f64],
        radii: &[f64],
        eps: f64,
        q: f64,
        t: f64,
        depth: usize,
        i: usize,
        current: &mut Vec<Ball>,
        best: &mut f64,
    ) {
        if i == pts.len() {
            let mut fam = current.clone();
            fam.sort_by(|a, b| {
                a.center
                    .partial_cmp(&b.center)
                    .unwrap()
                    .then(a.radius.partial_cmp(&b.radius).unwrap())
            });
            let ws: Vec<f64> = fam.iter().map(|b| weight(model, b, q, t, depth)).collect();
            let v = neumaier_sum(&ws);
            if v > *best {
                *best = v;
            }
            return;
        }
        enumerate(model, pts, radii, eps, q, t, depth, i + 1, current, best);
        for &r in radii {
            if r > eps {
                continue;
            }
            let b = Ball::new(pts[i], r);
            if current.iter().all(|c| balls_disjoint(c, &b)) {
                current.push(b);
                enumerate(model, pts, radii, eps, q, t, depth, i + 1, current, best);
                current.pop();
            }
        }
    }

    let trials = 120usize;
    for trial in 0..trials {
        let model = &models[trial % models.len()];
        let npts = rng.gen_range(1..=8);
        let points: Vec<f64> =
            (0..npts).map(|_| rng.gen_range(0..8192) as f64 / 8192.0).collect();
        let radii: Vec<f64> =
            (0..rng.gen_range(1..=4)).map(|_| 2f64.powi(-rng.gen_range(4..11))).collect();
        let q = rng.gen_range(-1.0..3.0);
        let t = rng.gen_range(-0.5..2.0);
        let eps = 0.125;
        let exact = prepacking_sup_exact(model, &points, eps, q, t, &radii, 16).unwrap();
        let greedy = greedy_prepacking_estimate(model, &points, eps, q, t, &radii, 16).unwrap();
        assert!(
            greedy.value <= exact.value + 1e-12,
            "trial {trial}: greedy above exact"
        );
        let mut brute = 0.0;
        enumerate(model, &points, &radii, eps, q, t, 16, 0, &mut Vec::new(), &mut brute);
        assert_eq!(
            exact.value.to_bits(),
            brute.to_bits(),
            "trial {trial}: exact {} vs enumeration {brute}",
            exact.value
        );
    }
    println!(
        "criterion 13 PASS: greedy <= exact and exact matches the independent enumeration \
         bit for bit on {trials} instances"
    );
}
