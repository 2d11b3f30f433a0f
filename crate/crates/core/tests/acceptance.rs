//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::Instant;

use qds::adversaries::{optimal_repudiation_marginal, ActiveResponsePolicy, RepudiationMarginals};
use qds::bounds::{compute_bounds, default_params, derived_rates, BoundsReport};
use qds::montecarlo::{
    exact_forge_passive, exact_honest_abort, exact_honest_abort_either, exact_split_decision,
    hoeffding_bound, run_experiment, run_experiment_with_workers, trial_rng, Estimate, Scenario,
};
use qds::optics::{beam_splitter, helstrom_error, multiport, multiport_by_splitters, ComplexAmplitude};
use qds::protocol::ProtocolParams;
use rand::Rng;

const K: f64 = 4.0;

/// Collects named sub-checks for one criterion.
#[derive(Default)]
struct Checks {
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if !ok {
            self.failed.push(what.clone());
        }
        self.notes.push(what);
    }
}

type Criterion = fn(&mut Checks) -> qds::Result<()>;

fn pow10(log10: f64) -> f64 {
    10f64.powf(log10)
}

fn bounds(p: &ProtocolParams) -> qds::Result<BoundsReport> {
    compute_bounds(p)
}

fn reference_rates(c: &mut Checks) -> qds::Result<()> {
    let r = derived_rates(0.2)?;
    c.check((r.p_usd - 0.077).abs() <= 0.001, format!("p_usd={:.6}", r.p_usd));
    c.check((r.p_min_prime - 0.27).abs() <= 0.005, format!("p'_min={:.6}", r.p_min_prime));
    Ok(())
}

fn headline_bounds(c: &mut Checks) -> qds::Result<()> {
    let b = bounds(&default_params(0.2, 1_000_000)?)?;
    let rep = pow10(b.log10_repudiation_ub);
    c.check((1e-6..=2e-6).contains(&rep), format!("repudiation={rep:.4e}"));
    c.check(
        (-19.0..=-17.0).contains(&b.log10_forge_active_ub),
        format!("log10 active forging={:.4}", b.log10_forge_active_ub),
    );
    c.check(
        b.log10_honest_abort_ub <= -50.0,
        format!("log10 honest abort={:.4}", b.log10_honest_abort_ub),
    );
    Ok(())
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn multiport_properties(c: &mut Checks) -> qds::Result<()> {
    let mut rng = trial_rng(2024, 0);
    let amp = |rng: &mut rand_chacha::ChaCha8Rng| {
        ComplexAmplitude::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))
    };
    let (mut energy, mut compose, mut nulls, mut symmetric) = (0, 0, 0, 0);
    for i in 0..1000 {
        let b = amp(&mut rng)?;
        // every fourth pair is identical so the zero-null direction is exercised
        let c_in = if i % 4 == 0 { b } else { amp(&mut rng)? };

        let (o1, o2) = beam_splitter(b, c_in);
        let m = multiport(b, c_in);
        let input = b.mean_photons() + c_in.mean_photons();
        if rel_close(o1.mean_photons() + o2.mean_photons(), input) && rel_close(m.total_photons(), input) {
            energy += 1;
        }

        let s = multiport_by_splitters(b, c_in);
        let same = |x: ComplexAmplitude, y: ComplexAmplitude| rel_close(x.re(), y.re()) && rel_close(x.im(), y.im());
        if same(s.b_signal, m.b_signal) && same(s.c_signal, m.c_signal) && same(s.b_null, m.b_null) && same(s.c_null, m.c_null) {
            compose += 1;
        }

        let null_zero = m.b_null.norm() <= 1e-12 * (b.norm() + c_in.norm()).max(1.0);
        if null_zero == (b == c_in) {
            nulls += 1;
        }
        if m.b_signal == m.c_signal {
            symmetric += 1;
        }
    }
    c.check(energy == 1000, format!("energy conserved {energy}/1000"));
    c.check(compose == 1000, format!("splitter composition {compose}/1000"));
    c.check(nulls == 1000, format!("null iff equal {nulls}/1000"));
    c.check(symmetric == 1000, format!("identical signals {symmetric}/1000"));
    Ok(())
}

fn agree(c: &mut Checks, label: &str, e: &Estimate, exact: f64) {
    c.check(
        e.agrees_with(exact, K),
        format!("{label} {:.5} vs exact {exact:.5} (4σ={:.5})", e.rate, K * e.sigma_at(exact)),
    );
}

fn below(c: &mut Checks, label: &str, e: &Estimate, bound: f64) {
    c.check(
        e.respects_bound(bound, K),
        format!("{label} {:.5} ≤ bound {:.5}", e.rate, bound.min(1.0)),
    );
}

fn honest_oracle(c: &mut Checks) -> qds::Result<()> {
    let p = default_params(0.5, 500)?;
    let r = run_experiment(&Scenario::Honest, &p, 100_000, 11)?;
    agree(c, "abort (either)", &r.honest_abort, exact_honest_abort_either(&p)?);
    let bob = Estimate::new(r.counts.bob_abort, r.counts.trials)?;
    agree(c, "abort (Bob)", &bob, exact_honest_abort(&p)?);
    let t = r.counts;
    c.check(
        t.bob_mismatches + t.charlie_mismatches == 0,
        format!("mismatches={}", t.bob_mismatches + t.charlie_mismatches),
    );
    c.check(
        t.bob_null_clicks + t.charlie_null_clicks == 0,
        format!("null clicks={}", t.bob_null_clicks + t.charlie_null_clicks),
    );
    Ok(())
}

fn repudiation(c: &mut Checks) -> qds::Result<()> {
    let p = default_params(0.5, 200)?;
    let p_bar = optimal_repudiation_marginal(&p);
    let m = RepudiationMarginals::with_mismatch(&p, p_bar)?;
    let r = run_experiment(&Scenario::RepudiateAbstract(m), &p, 1_000_000, 5)?;
    agree(c, "P(BA∧CR)", &r.split_decision, exact_split_decision(&p, p_bar)?);
    below(c, "P(BA∧CR)", &r.split_decision, pow10(bounds(&p)?.log10_repudiation_ub));
    Ok(())
}

fn passive_forging(c: &mut Checks) -> qds::Result<()> {
    let p = default_params(0.5, 100)?;
    let r = run_experiment(&Scenario::ForgePassive, &p, 1_000, 3)?;
    let elements = r.counts.trials * p.length as u64;
    let guess = Estimate::new(r.counts.guess_errors, elements)?;
    agree(c, "guess error", &guess, helstrom_error(0.5)?);
    c.check((helstrom_error(0.5)? - 0.10247).abs() < 5e-6, "p_min(0.5)=0.10247");

    let mut tuned = p;
    tuned.s_v = 0.038;
    let exact = exact_forge_passive(&tuned)?;
    c.check((1e-3..=1e-1).contains(&exact), format!("oracle in observable range ({exact:.5})"));
    let r = run_experiment(&Scenario::ForgePassive, &tuned, 100_000, 4)?;
    agree(c, "forge", &r.forge, exact);
    below(c, "forge", &r.forge, pow10(bounds(&tuned)?.log10_forge_passive_ub));
    Ok(())
}

fn active_forging(c: &mut Checks) -> qds::Result<()> {
    let alpha: f64 = 0.5;
    let p = default_params(alpha, 200)?;
    c.check(p.r == 0.0, "r=0");
    let policy = ActiveResponsePolicy::new(1.0, true)?;
    let r = run_experiment(&Scenario::ForgeActive(policy), &p, 20_000, 8)?;
    let elements = r.counts.trials * p.length as u64;
    let clicks = Estimate::new(r.counts.charlie_null_clicks, elements)?;
    let expected = helstrom_error(1.5f64.sqrt() * alpha)? * -(-alpha * alpha).exp_m1();
    agree(c, "null-click rate", &clicks, expected);
    below(c, "forge", &r.forge, pow10(bounds(&p)?.log10_forge_active_ub));
    Ok(())
}

fn hoeffding(c: &mut Checks) -> qds::Result<()> {
    let (length, reps, t) = (100usize, 100_000u64, 0.1);
    let deviations = (0..reps)
        .filter(|&i| {
            let mut rng = trial_rng(77, i);
            let ones = (0..length).filter(|_| rng.random::<bool>()).count();
            // |ones/L − ½| ≥ t, kept in integers so the boundary counts
            ones.abs_diff(length / 2) >= 10
        })
        .count();
    let freq = deviations as f64 / reps as f64;
    let bound = hoeffding_bound(t, length);
    c.check((bound - (-2f64).exp()).abs() < 1e-15, "bound = e^-2");
    c.check(freq <= bound, format!("two-sided deviation frequency {freq:.5} ≤ {bound:.5}"));
    Ok(())
}

fn determinism(c: &mut Checks) -> qds::Result<()> {
    let p = default_params(0.5, 200)?;
    let scenarios = [
        Scenario::Honest,
        Scenario::RepudiateAbstract(RepudiationMarginals::optimal(&p)?),
        Scenario::ForgePassive,
        Scenario::ForgeActive(ActiveResponsePolicy::new(1.0, true)?),
    ];
    for s in scenarios {
        let runs = [1, 2, 8]
            .map(|w| run_experiment_with_workers(&s, &p, 20_000, 99, w));
        let [a, b, d] = runs;
        let (a, b, d) = (a?, b?, d?);
        c.check(a == b && b == d, format!("{} identical for 1/2/8 workers", s.name()));
    }
    Ok(())
}

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("reference rates at alpha=0.2", reference_rates),
        ("headline bounds at L=1e6", headline_bounds),
        ("multiport properties", multiport_properties),
        ("honest-run oracle equivalence", honest_oracle),
        ("repudiation at the optimal marginal", repudiation),
        ("passive forging", passive_forging),
        ("active forging signature", active_forging),
        ("Hoeffding sanity", hoeffding),
        ("determinism across worker counts", determinism),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut checks = Checks::default();
        if let Err(e) = run(&mut checks) {
            checks.failed.push(format!("error: {e}"));
            checks.notes.push(format!("error: {e}"));
        }
        let ok = checks.failed.is_empty();
        failures += usize::from(!ok);
        println!(
            "criterion {}: {} {name} ({:.1}s) [{}]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            checks.notes.join("; ")
        );
        for f in &checks.failed {
            println!("    failed: {f}");
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 9 acceptance criteria passed");
}
