//! The `verify` command: self-checking property suites.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prodent::bowen::{bowen_entropy_estimate, OrbitContext, PackingMode};
use prodent::covers::{
    ball_cover, is_admissible, iterate_cover, join, lebesgue_number, min_subcover_cardinality,
    refines, Cover, GridDynamics,
};
use prodent::measures::{
    bernoulli_measure, build_fine_partition, ks_rate, misiurewicz_bound_check, partition_entropy,
    scaled_measure, FiniteMeasure, FinitePartition, MeasureFixture,
};
use prodent::spaces::{sample_grid, SampledSpace};
use prodent::systems::{
    check_measurability, entropy_prediction, parse_system, rank_stabilization_index, SystemSpec,
};

use crate::error::{CliError, Result};
use crate::report::{Check, Report, Summary};

pub const SUITES: [&str; 6] = [
    "covers",
    "bowen",
    "measures",
    "systems",
    "variational",
    "all",
];

/// Fixtures shipped with the binary, used when no directory is given.
const BUILTIN_FIXTURES: [(&str, &str); 6] = [
    (
        "cover_arcs4.json",
        include_str!("../../../fixtures/cover_arcs4.json"),
    ),
    (
        "cover_arcs8.json",
        include_str!("../../../fixtures/cover_arcs8.json"),
    ),
    (
        "cover_uneven.json",
        include_str!("../../../fixtures/cover_uneven.json"),
    ),
    (
        "measure_three_cells.json",
        include_str!("../../../fixtures/measure_three_cells.json"),
    ),
    (
        "measure_uniform_atoms.json",
        include_str!("../../../fixtures/measure_uniform_atoms.json"),
    ),
    (
        "measure_skewed.json",
        include_str!("../../../fixtures/measure_skewed.json"),
    ),
];

enum Fixture {
    Cover(Cover),
    Measure(FinitePartition, FiniteMeasure),
}

struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.0.push(Check::new(name, passed, detail));
    }

    /// Records an error from a check body as a failure of that check.
    fn run(&mut self, name: &str, body: impl FnOnce() -> prodent::Result<(bool, String)>) {
        match body() {
            Ok((passed, detail)) => self.push(name, passed, detail),
            Err(e) => self.push(name, false, e.to_string()),
        }
    }
}

/// Runs one suite (or `all`). The report passes iff every check passes.
pub fn run_verify(suite: &str, seed: u64, fixtures: Option<&Path>) -> Result<Report> {
    if !SUITES.contains(&suite) {
        return Err(CliError::usage(
            "suite",
            format!(
                "unknown suite `{suite}`; expected one of {}",
                SUITES.join(", ")
            ),
        ));
    }
    let mut checks = Checks(Vec::new());
    let loaded = load_fixtures(fixtures, &mut checks)?;
    let wants = |s: &str| suite == "all" || suite == s;
    if wants("covers") {
        covers_suite(seed, &loaded, &mut checks);
    }
    if wants("bowen") {
        bowen_suite(seed, &mut checks);
    }
    if wants("measures") {
        measures_suite(&loaded, &mut checks);
    }
    if wants("systems") {
        systems_suite(&mut checks);
    }
    if wants("variational") {
        variational_suite(&mut checks);
    }
    Ok(Report {
        rows: Vec::new(),
        summary: Summary {
            estimator: format!("verify:{suite}"),
            checks: checks.0,
            ..Summary::default()
        },
    })
}

fn load_fixtures(dir: Option<&Path>, checks: &mut Checks) -> Result<Vec<(String, Fixture)>> {
    let mut texts: Vec<(String, String)> = match dir {
        None => BUILTIN_FIXTURES
            .iter()
            .map(|(n, t)| (n.to_string(), t.to_string()))
            .collect(),
        Some(dir) => {
            let mut v = Vec::new();
            for entry in std::fs::read_dir(dir)? {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "json") {
                    let name = path.file_name().unwrap().to_string_lossy().into_owned();
                    v.push((name, std::fs::read_to_string(&path)?));
                }
            }
            v
        }
    };
    texts.sort();
    let mut out = Vec::new();
    for (name, text) in texts {
        let check = format!("fixture:{name}");
        let parsed = if name.starts_with("cover") {
            serde_json::from_str::<Cover>(&text)
                .map(Fixture::Cover)
                .map_err(|e| e.to_string())
        } else if name.starts_with("measure") {
            serde_json::from_str::<MeasureFixture>(&text)
                .map_err(|e| e.to_string())
                .and_then(|f| f.load().map_err(|e| e.to_string()))
                .map(|(p, m)| Fixture::Measure(p, m))
        } else {
            Err("file name must start with `cover` or `measure`".into())
        };
        match parsed {
            Ok(f) => {
                checks.push(check, true, "loaded");
                out.push((name, f));
            }
            Err(e) => checks.push(check, false, e),
        }
    }
    Ok(out)
}

fn circle_space(points: usize) -> prodent::Result<SampledSpace> {
    sample_grid(&SystemSpec::circle_map(1), 1.0 / points as f64)
}

fn random_cover(rng: &mut ChaCha8Rng, ground: usize) -> Cover {
    let k = rng.gen_range(2..=6);
    let mut members: Vec<Vec<usize>> = (0..k)
        .map(|_| (0..ground).filter(|_| rng.gen_bool(0.35)).collect())
        .collect();
    // make sure every element is covered
    for x in 0..ground {
        if !members.iter().any(|m| m.contains(&x)) {
            let j = rng.gen_range(0..k);
            members[j].push(x);
        }
    }
    members.retain(|m| !m.is_empty());
    Cover::new(ground, &members).expect("covers every element")
}

fn exact_n(a: &Cover) -> prodent::Result<usize> {
    let b = min_subcover_cardinality(a, None)?;
    b.value().ok_or_else(|| {
        prodent::Error::Validation(format!("inexact bound [{}, {}]", b.lower, b.upper))
    })
}

fn covers_suite(seed: u64, fixtures: &[(String, Fixture)], checks: &mut Checks) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    checks.run("covers:subadditivity", || {
        for trial in 0..100 {
            let ground = rng.gen_range(4..=12);
            let a = random_cover(&mut rng, ground);
            let b = random_cover(&mut rng, ground);
            let (na, nb, nab) = (exact_n(&a)?, exact_n(&b)?, exact_n(&join(&a, &b)?)?);
            if nab > na * nb {
                return Ok((false, format!("pair {trial}: {nab} > {na}·{nb}")));
            }
        }
        Ok((true, "100 seeded pairs".into()))
    });
    checks.run("covers:join_refines_factors", || {
        for _ in 0..50 {
            let ground = rng.gen_range(4..=12);
            let a = random_cover(&mut rng, ground);
            let b = random_cover(&mut rng, ground);
            let ab = join(&a, &b)?;
            if !(refines(&ab, &a) && refines(&ab, &b)) {
                return Ok((false, "A∨B does not refine a factor".into()));
            }
        }
        Ok((true, "50 seeded pairs".into()))
    });
    checks.run("covers:iterated_system_law", || {
        let spec = SystemSpec::full_shift(2).with_truncation(10);
        let space = sample_grid(&spec, 0.5)?;
        let t = GridDynamics::new(&space, &spec)?;
        let a = Cover::from_labels(FinitePartition::cylinders(&space, 1)?.labels())?;
        for (k, n) in [(2, 3), (3, 2), (2, 4)] {
            let lhs = iterate_cover(&iterate_cover(&a, &t, k)?, &t.power(k), n)?;
            let rhs = iterate_cover(&a, &t, k * n)?;
            if !lhs.same_members(&rhs) {
                return Ok((false, format!("k={k}, n={n}")));
            }
        }
        Ok((true, "(A^k)_{T^k}^n = A^{kn} on the 2-shift".into()))
    });
    checks.run("covers:ball_refinement_chain", || {
        let space = circle_space(64)?;
        let metric = space.metric().clone();
        for eps in [0.05, 0.1, 0.2, 0.3] {
            let fine = ball_cover(&space, &metric, eps / 2.0)?;
            let coarse = ball_cover(&space, &metric, eps)?;
            if !refines(&fine, &coarse) {
                return Ok((false, format!("eps={eps}")));
            }
        }
        Ok((true, "balls(ε/2) refines balls(ε)".into()))
    });
    for (name, f) in fixtures {
        let Fixture::Cover(a) = f else { continue };
        checks.run(&format!("covers:lebesgue:{name}"), || {
            let space = circle_space(a.ground_size())?;
            let metric = space.metric().clone();
            let lambda = lebesgue_number(a, &space, &metric)?;
            let ok = refines(&ball_cover(&space, &metric, lambda)?, a);
            let admissible = is_admissible(a, space.core())?;
            Ok((ok && admissible, format!("lebesgue number {lambda}")))
        });
    }
}

fn bowen_suite(seed: u64, checks: &mut Checks) {
    checks.run("bowen:full_shift_closed_form", || {
        let eps = 0.4;
        let spec = SystemSpec::full_shift(2).resolved_for(eps, 6)?;
        let space = sample_grid(&spec, eps / 4.0)?;
        let ctx = OrbitContext::new(&space, &spec, 6)?;
        let k = prodent::spaces::WeightRule::Harmonic.depth(eps, prodent::spaces::Mode::Separation);
        for n in 1..=6 {
            let got = ctx.max_separated(n, eps, PackingMode::Greedy)?.count;
            let want = 1usize << (n + k - 1);
            if got != want {
                return Ok((false, format!("n={n}: {got} != {want}")));
            }
        }
        Ok((true, format!("s(n, 0.4) = 2^(n+{})", k - 1)))
    });
    checks.run("bowen:sandwich_random_systems", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ties = 0;
        for trial in 0..50 {
            let spec = random_finite_system(&mut rng, 12);
            let space = sample_grid(&spec, 1.0)?;
            let ctx = OrbitContext::new(&space, &spec, 3)?;
            for eps in [0.15, 0.3, 0.5] {
                for n in 1..=3 {
                    let r = ctx.sandwich_check(n, eps)?;
                    if r.tie {
                        ties += 1;
                        continue;
                    }
                    if !(r.exact && r.holds()) {
                        return Ok((false, format!("system {trial}, n={n}, eps={eps}: {r:?}")));
                    }
                }
            }
        }
        Ok((true, format!("50 systems, {ties} tied cases skipped")))
    });
    checks.run("bowen:monotone", || {
        let spec = SystemSpec::circle_map(2);
        let space = sample_grid(&spec, 1.0 / 256.0)?;
        let est = bowen_entropy_estimate(&space, &spec, &[0.05, 0.1, 0.2], &[1, 2, 3, 4, 5, 6])?;
        Ok((
            est.monotone_in_n && est.monotone_in_eps,
            format!("rate {:.4}", est.rate),
        ))
    });
}

/// `size` points in the unit square with a random self-map; distances are
/// Euclidean rescaled to diameter at most 1.
fn random_finite_system(rng: &mut ChaCha8Rng, size: usize) -> SystemSpec {
    let pts: Vec<(f64, f64)> = (0..size)
        .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();
    let distances = pts
        .iter()
        .map(|a| {
            pts.iter()
                .map(|b| ((a.0 - b.0).hypot(a.1 - b.1) / std::f64::consts::SQRT_2).min(1.0))
                .collect()
        })
        .collect();
    let mut map: Vec<usize> = (0..size).map(|_| rng.gen_range(0..size)).collect();
    if rng.gen_bool(0.5) {
        map = (0..size).collect();
        map.shuffle(rng);
    }
    SystemSpec::Finite { distances, map }
}

fn atomized(p: &FinitePartition, mu: &FiniteMeasure) -> prodent::Result<FiniteMeasure> {
    let weights = mu.cell_weights(p)?;
    let cells = p.cells();
    let mut atoms = vec![0.0; p.ground_size()];
    for (c, w) in cells.iter().zip(weights) {
        for &x in c {
            atoms[x] = w / c.len() as f64;
        }
    }
    FiniteMeasure::atoms(atoms)
}

fn measures_suite(fixtures: &[(String, Fixture)], checks: &mut Checks) {
    for (name, f) in fixtures {
        let Fixture::Measure(p, mu) = f else { continue };
        checks.run(&format!("measures:scaling:{name}"), || {
            let mu = atomized(p, mu)?;
            let g = p.ground_size();
            let rotate = GridDynamics::from_map((0..g).map(|x| (x + 1) % g).collect())?;
            let base = ks_rate(&mu, p, &rotate, 2)?.rate;
            let mut worst: f64 = 0.0;
            for alpha in [0.0, 0.25, 0.5, 1.0] {
                let scaled = ks_rate(&scaled_measure(&mu, alpha)?, p, &rotate, 2)?.rate;
                worst = worst.max((scaled - alpha * base).abs());
            }
            Ok((
                worst <= 1e-6,
                format!("rate {base:.6}, max deviation {worst:e}"),
            ))
        });
    }
    checks.run("measures:entropy_subadditive", || {
        let spec = SystemSpec::full_shift(2).with_truncation(8);
        let space = sample_grid(&spec, 0.5)?;
        let t = GridDynamics::new(&space, &spec)?;
        let mu = bernoulli_measure(&space, 0.3)?;
        let c = FinitePartition::cylinders(&space, 2)?;
        let d = prodent::measures::refine_partition(&c, &t, 2)?;
        let joint = prodent::measures::refine_partition(&c, &t, 3)?;
        let (hc, hd, hj) = (
            partition_entropy(&mu, &c)?,
            partition_entropy(&mu, &d)?,
            partition_entropy(&mu, &joint)?,
        );
        Ok((
            hj <= hc + hd + 1e-12,
            format!("{hj:.6} ≤ {hc:.6} + {hd:.6}"),
        ))
    });
    checks.run("measures:misiurewicz", || {
        let spec = SystemSpec::circle_map(2);
        let space = sample_grid(&spec, 1.0 / 512.0)?;
        let metric = space.metric().clone();
        let t = GridDynamics::new(&space, &spec)?;
        let ctx = OrbitContext::new(&space, &spec, 8)?;
        let mut instances = 0;
        for eps in [0.1, 0.2] {
            let c = build_fine_partition(&space, &metric, eps / 2.0)?;
            for n in [4, 8] {
                let e = ctx.max_separated(n, eps, PackingMode::Greedy)?.selected;
                for q in 1..=n.min(3) {
                    let r = misiurewicz_bound_check(&e, &c, q, n, eps, &space, &metric, &t)?;
                    if !r.holds {
                        return Ok((false, format!("eps={eps}, n={n}, q={q}: {r:?}")));
                    }
                    instances += 1;
                }
            }
        }
        Ok((true, format!("{instances} instances")))
    });
}

fn systems_suite(checks: &mut Checks) {
    checks.run("systems:rank_stabilization", || {
        let id: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| (i == j) as u8 as f64).collect())
            .collect();
        let proj = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
        let mut ok = rank_stabilization_index(&id)?.index == 0
            && rank_stabilization_index(&proj)?.index == 1;
        for d in 1..=8 {
            let jordan: Vec<Vec<f64>> = (0..d)
                .map(|i| (0..d).map(|j| (j == i + 1) as u8 as f64).collect())
                .collect();
            ok &= rank_stabilization_index(&jordan)?.index == d;
        }
        Ok((ok, "identity, projection, nilpotent blocks 1..=8".into()))
    });
    checks.run("systems:measurability", || {
        for spec in [
            SystemSpec::full_shift(2),
            SystemSpec::full_shift(3),
            SystemSpec::full_shift(2).power(2),
        ] {
            if let Some(n) = check_measurability(&spec, 6)? {
                return Ok((false, format!("{} fails at n={n}", spec.label())));
            }
        }
        Ok((true, "shifts and their iterates at L = 6".into()))
    });
    checks.run("systems:parse_roundtrip", || {
        for text in [
            "full_shift:m=2",
            "torus:matrix=[[2,1],[1,1]]",
            "full_shift:m=2*full_shift:m=3",
            "(full_shift:m=2)^2",
            "linear:matrix=[[2]],metric=arctan,core=10",
        ] {
            let spec = parse_system(text)?;
            if parse_system(&spec.label())? != spec {
                return Ok((false, text.to_string()));
            }
        }
        Ok((true, "5 specs".into()))
    });
    checks.run("systems:toral_prediction", || {
        let cat = entropy_prediction(&SystemSpec::torus(vec![vec![2, 1], vec![1, 1]]))?.value;
        let want = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        let diag = SystemSpec::torus(vec![vec![2, 0], vec![0, 3]]);
        let sum = entropy_prediction(&diag)?.value;
        Ok((
            (cat - want).abs() < 1e-12 && (sum - 6f64.ln()).abs() < 1e-12,
            format!("cat map {cat:.6}"),
        ))
    });
}

fn variational_suite(checks: &mut Checks) {
    checks.run("variational:bernoulli_sweep", || {
        let eps = 0.4;
        let n_max = 10;
        let spec = SystemSpec::full_shift(2).resolved_for(eps, n_max)?;
        let space = sample_grid(&spec, eps / 4.0)?;
        let bowen =
            bowen_entropy_estimate(&space, &spec, &[eps], &(1..=n_max).collect::<Vec<_>>())?.rate;
        let t = GridDynamics::new(&space, &spec)?;
        let c = FinitePartition::cylinders(&space, 1)?;
        let mut best = (0.0, 0.0);
        for i in 1..=9 {
            let p = i as f64 / 10.0;
            let h = ks_rate(&bernoulli_measure(&space, p)?, &c, &t, 8)?.rate;
            if h > bowen * 1.03 {
                return Ok((false, format!("p={p}: {h} > {bowen}")));
            }
            if h > best.1 {
                best = (p, h);
            }
        }
        let ln2 = 2f64.ln();
        Ok((
            (best.0 - 0.5f64).abs() < 1e-9 && (best.1 - ln2).abs() <= 0.02 * ln2,
            format!("max {:.6} at p={}, bowen {bowen:.6}", best.1, best.0),
        ))
    });
}
