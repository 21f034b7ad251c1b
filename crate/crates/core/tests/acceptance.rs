//! Acceptance suite. Runs every criterion sequentially (timing-sensitive
//! checks share the process with nothing else) and prints one pass/fail
//! line per criterion.

use std::time::{Duration, Instant};

use corefine::axioms::{check_interface_axioms, ALL_INTERFACES};
use corefine::cli::log2_floor;
use corefine::coalgebra::{parse_coalgebra, partition_to_text, root_blocks, Encoding};
use corefine::generator::{generate, GenConfig};
use corefine::oracle::naive_refine;
use corefine::refiner::{canonical_partition, refine, Refiner};
use corefine::Interface;

const SHAPES: &str = include_str!("data/shapes.coalg");
const NESTED_SETS: &str = include_str!("data/nested_sets.coalg");

/// The random-instance families cross-checked against the oracle.
const FAMILIES: [&str; 7] = [
    "P({a,b} x X)",
    "D(X)",
    "R(X)",
    "B(X)",
    "{acc,rej} x X^2",
    "P({a} x D(X))",
    "{0,1} x P(P(X))",
];

fn family_config(functor: &str, seed: u64) -> GenConfig {
    GenConfig {
        functor: functor.into(),
        states: 2 + (seed as usize % 63),
        density: 3,
        weight_range: 5,
        seed,
    }
}

struct Suite {
    /// (description, total states, observed max splitter entries) collected
    /// from every engine run in criteria 1-3, re-checked by criterion 5.
    counter_observations: Vec<(String, usize, u32)>,
}

type CriterionResult = Result<String, String>;

impl Suite {
    fn observe(&mut self, what: &str, enc: &Encoding, max_entries: u32) {
        self.counter_observations
            .push((what.to_string(), enc.n_states(), max_entries));
    }

    /// Criterion 1: the six-state worked example. A step-instrumented run
    /// reaches the expected coarse partition of the declared states, the
    /// splitter pair ({c1} inside {c1,c2}) is what separates t1 from t2
    /// (via their successor intermediates), and the full run ends in six
    /// singleton blocks in under a millisecond.
    fn criterion_1(&mut self) -> CriterionResult {
        let enc = parse_coalgebra(SHAPES).map_err(|e| e.to_string())?;
        // Declared ids follow declaration order; each state's set
        // intermediate follows in walk order.
        let (t1, t2, s1, c1, c2, c3) = (0u32, 1, 2, 3, 4, 5);
        let (it1, it2) = (6u32, 7);
        let (is1, ic3) = (8u32, 11);
        let ic1 = 9u32;

        let mut r = Refiner::new(&enc).map_err(|e| e.to_string())?;
        fn force(r: &mut Refiner, s: u32) -> Result<(), String> {
            let block = r.partition().block_of(s);
            let q = r.partition().qblock_of_block(block);
            let choice = r.force_splitter(block, q).map_err(|e| e.to_string())?;
            r.split(&choice).map_err(|e| e.to_string())
        }
        let roots = |r: &Refiner| root_blocks(&enc, &r.current_blocks());

        // After initialization the declared states group by shape alone.
        let expect0: Vec<Vec<String>> = vec![
            vec!["c1".into(), "c2".into(), "c3".into()],
            vec!["s1".into()],
            vec!["t1".into(), "t2".into()],
        ];
        if roots(&r) != expect0 {
            return Err(format!("unexpected initial grouping: {:?}", roots(&r)));
        }

        // Propagate the intermediate-sort type information to the roots.
        force(&mut r, s1)?;
        force(&mut r, is1)?;
        if r.partition().block_of(is1) != r.partition().block_of(ic3) {
            return Err("empty-set intermediates should share a block".into());
        }
        let expect_coarse: Vec<Vec<String>> = vec![
            vec!["c1".into(), "c2".into()],
            vec!["c3".into()],
            vec!["s1".into()],
            vec!["t1".into(), "t2".into()],
        ];
        if roots(&r) != expect_coarse {
            return Err(format!(
                "type propagation missed the expected coarse partition: {:?}",
                roots(&r)
            ));
        }

        // Separate c1 from c2 and detach the remaining spectator blocks so
        // that {c1,c2} becomes exactly one compound block.
        force(&mut r, ic1)?;
        force(&mut r, t1)?;
        force(&mut r, it1)?;
        force(&mut r, c3)?;
        let expect_fine: Vec<Vec<String>> = vec![
            vec!["c1".into()],
            vec!["c2".into()],
            vec!["c3".into()],
            vec!["s1".into()],
            vec!["t1".into(), "t2".into()],
        ];
        if roots(&r) != expect_fine {
            return Err(format!(
                "unexpected partition before the key split: {:?}",
                roots(&r)
            ));
        }
        let c_block = r.partition().block_of(c1);
        let compound = r.partition().qblock_of_block(c_block);
        let covered: usize = r
            .compounds()
            .members(compound)
            .iter()
            .map(|b| r.partition().size(*b))
            .sum();
        if covered != 2 || r.partition().block_of(c2) == c_block {
            return Err("expected the compound block {c1,c2} with c1, c2 apart".into());
        }

        // The split by S = {c1} inside C = {c1,c2} distinguishes the
        // successor intermediates of t1 and t2 ...
        if r.partition().block_of(it1) != r.partition().block_of(it2) {
            return Err("intermediates separated too early".into());
        }
        let choice = r
            .force_splitter(c_block, compound)
            .map_err(|e| e.to_string())?;
        if (choice.subblock_size, choice.compound_size) != (1, 2) {
            return Err("wrong splitter sizes".into());
        }
        r.split(&choice).map_err(|e| e.to_string())?;
        if r.partition().block_of(it1) == r.partition().block_of(it2) {
            return Err("S={c1} in C={c1,c2} failed to split the t-intermediates".into());
        }
        if r.partition().block_of(t1) != r.partition().block_of(t2) {
            return Err("t1 and t2 separated before their successors' block split".into());
        }

        // ... and the induced split by the block just created separates t1
        // from t2 themselves.
        force(&mut r, it2)?;
        if r.partition().block_of(t1) == r.partition().block_of(t2) {
            return Err("splitting by the t2-intermediate did not separate t1 from t2".into());
        }

        // Finish the run and cross-check the final partition.
        r.run().map_err(|e| e.to_string())?;
        let final_roots = roots(&r);
        if final_roots.len() != 6 || final_roots.iter().any(|b| b.len() != 1) {
            return Err(format!("expected six singletons, got {final_roots:?}"));
        }
        if canonical_partition(&r.current_blocks()) != canonical_partition(&naive_refine(&enc)) {
            return Err("scripted run disagrees with the oracle".into());
        }

        // Plain end-to-end run: exact partition in under a millisecond.
        let outcome = refine(&enc).map_err(|e| e.to_string())?; // warm-up
        let started = Instant::now();
        let outcome2 = refine(&enc).map_err(|e| e.to_string())?;
        let elapsed = started.elapsed();
        if canonical_partition(&outcome.partition) != canonical_partition(&outcome2.partition) {
            return Err("repeated runs disagree".into());
        }
        if root_blocks(&enc, &outcome2.partition) != final_roots {
            return Err("full run disagrees with the scripted run".into());
        }
        if elapsed >= Duration::from_millis(1) {
            return Err(format!("run took {elapsed:?}, expected < 1 ms"));
        }
        self.observe(
            "six-state example",
            &enc,
            outcome2.stats.max_splitter_entries,
        );
        Ok(format!(
            "six singletons via S={{c1}}, C={{c1,c2}} in {elapsed:?}"
        ))
    }

    /// Criterion 2: the 14-state nested-powerset system distinguishes a1
    /// from b1, and the oracle agrees exactly.
    fn criterion_2(&mut self) -> CriterionResult {
        let enc = parse_coalgebra(NESTED_SETS).map_err(|e| e.to_string())?;
        let outcome = refine(&enc).map_err(|e| e.to_string())?;
        let fast = canonical_partition(&outcome.partition);
        let slow = canonical_partition(&naive_refine(&enc));
        if fast != slow {
            return Err("engine and oracle disagree".into());
        }
        let blocks = root_blocks(&enc, &outcome.partition);
        let block_of = |name: &str| blocks.iter().position(|b| b.iter().any(|n| n == name));
        if block_of("a1") == block_of("b1") {
            return Err("a1 and b1 ended up identified".into());
        }
        self.observe(
            "nested powerset counterexample",
            &enc,
            outcome.stats.max_splitter_entries,
        );
        Ok(format!(
            "a1 and b1 separated; {} declared-state blocks, oracle agrees",
            blocks.len()
        ))
    }

    /// Criterion 3: engine = oracle on 100 seeded random instances of every
    /// family, as set-of-sets equality over all states, within 60 s.
    fn criterion_3(&mut self) -> CriterionResult {
        let started = Instant::now();
        let mut instances = 0usize;
        for functor in FAMILIES {
            for seed in 0..100u64 {
                let cfg = family_config(functor, seed);
                let text = generate(&cfg).map_err(|e| e.to_string())?;
                let enc =
                    parse_coalgebra(&text).map_err(|e| format!("{functor} seed {seed}: {e}"))?;
                let outcome = refine(&enc).map_err(|e| format!("{functor} seed {seed}: {e}"))?;
                let fast = canonical_partition(&outcome.partition);
                let slow = canonical_partition(&naive_refine(&enc));
                if fast != slow {
                    return Err(format!(
                        "{functor} seed {seed}: engine and oracle disagree\n{text}"
                    ));
                }
                self.observe(
                    &format!("{functor} seed {seed}"),
                    &enc,
                    outcome.stats.max_splitter_entries,
                );
                instances += 1;
            }
        }
        let elapsed = started.elapsed();
        if elapsed >= Duration::from_secs(60) {
            return Err(format!("fuzzing took {elapsed:?}, expected < 60 s"));
        }
        Ok(format!("{instances} instances agree in {elapsed:?}"))
    }

    /// Criterion 4: both interface contracts verified brute-force for every
    /// registered interface at carriers up to 8; exhaustive for powerset and
    /// polynomial, at least 10^4 sampled terms for the weighted ones.
    fn criterion_4(&mut self) -> CriterionResult {
        let mut total_checks = 0u64;
        for iface in ALL_INTERFACES {
            let mut sampled_terms = 0u64;
            for carrier in 0..=8usize {
                let report = check_interface_axioms(iface, carrier, 1300);
                if let Some(cx) = report.counterexample {
                    return Err(format!("{} at carrier {carrier}: {cx}", iface.name()));
                }
                total_checks += report.checks;
                if !matches!(iface, Interface::Powerset | Interface::Polynomial) {
                    sampled_terms += report.terms_checked;
                }
            }
            if !matches!(iface, Interface::Powerset | Interface::Polynomial)
                && sampled_terms < 10_000
            {
                return Err(format!(
                    "{}: only {sampled_terms} sampled terms, wanted >= 10^4",
                    iface.name()
                ));
            }
        }
        Ok(format!("{total_checks} checks across 5 interfaces"))
    }

    /// Criterion 5: the per-state splitter-entry counter stays within
    /// floor(log2 n) on every criterion 1-3 run and on a random labelled
    /// transition system with 10^5 declared states.
    fn criterion_5(&mut self) -> CriterionResult {
        for (what, n, max_entries) in &self.counter_observations {
            if *max_entries > log2_floor(*n) {
                return Err(format!(
                    "{what}: counter {max_entries} exceeds floor(log2 {n})"
                ));
            }
        }
        let observed = self.counter_observations.len();

        let cfg = GenConfig {
            functor: "P({a,b} x X)".into(),
            states: 100_000,
            density: 5,
            weight_range: 5,
            seed: 11,
        };
        let text = generate(&cfg).map_err(|e| e.to_string())?;
        let enc = parse_coalgebra(&text).map_err(|e| e.to_string())?;
        let outcome = refine(&enc).map_err(|e| e.to_string())?;
        let bound = log2_floor(enc.n_states());
        if outcome.stats.max_splitter_entries > bound {
            return Err(format!(
                "10^5-state system: counter {} exceeds floor(log2 {}) = {bound}",
                outcome.stats.max_splitter_entries,
                enc.n_states()
            ));
        }
        Ok(format!(
            "{observed} collected runs and a {}-state system within the bound (max {} <= {bound})",
            enc.n_states(),
            outcome.stats.max_splitter_entries
        ))
    }

    /// Criterion 6: on 100 random complete automata the engine's partition
    /// equals an independent pair-marking (table-filling) minimizer.
    fn criterion_6(&mut self) -> CriterionResult {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for case in 0..100 {
            let n = rng.random_range(2..=40usize);
            let k = rng.random_range(1..=4usize);
            let acc: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            let delta: Vec<Vec<usize>> = (0..n)
                .map(|_| (0..k).map(|_| rng.random_range(0..n)).collect())
                .collect();

            let mut text = format!("functor {{acc,rej}} x X^{k}\n");
            for p in 0..n {
                let succ: Vec<String> = delta[p].iter().map(|q| format!("s{q}")).collect();
                text.push_str(&format!(
                    "state s{p} = ({}, [{}])\n",
                    if acc[p] { "acc" } else { "rej" },
                    succ.join(",")
                ));
            }
            let enc = parse_coalgebra(&text).map_err(|e| e.to_string())?;
            let outcome = refine(&enc).map_err(|e| e.to_string())?;
            let got = canonical_partition(&outcome.partition);
            let want = canonical_partition(
                &table_filling(&acc, &delta)
                    .into_iter()
                    .map(|b| b.into_iter().map(|x| x as u32).collect())
                    .collect::<Vec<Vec<u32>>>(),
            );
            if got != want {
                return Err(format!(
                    "case {case} (n={n}, k={k}): engine {got:?} != table filling {want:?}"
                ));
            }
        }
        Ok("100 automata match the pair-marking minimizer".into())
    }

    /// Criterion 7: engine = oracle on 100 random rational-weighted systems.
    fn criterion_7(&mut self) -> CriterionResult {
        for seed in 0..100u64 {
            let cfg = GenConfig {
                functor: "R(X)".into(),
                states: 2 + (seed as usize * 7) % 49,
                density: 4,
                weight_range: 6,
                seed: seed.wrapping_mul(0x9e37),
            };
            let text = generate(&cfg).map_err(|e| e.to_string())?;
            let enc = parse_coalgebra(&text).map_err(|e| e.to_string())?;
            let outcome = refine(&enc).map_err(|e| e.to_string())?;
            if canonical_partition(&outcome.partition) != canonical_partition(&naive_refine(&enc)) {
                return Err(format!(
                    "seed {seed}: lumping disagrees with the oracle\n{text}"
                ));
            }
        }
        Ok("100 weighted systems lump identically under both algorithms".into())
    }

    /// Criterion 8: log-linear scaling envelope on a doubling ladder of
    /// labelled transition systems, and the largest instance within 10 s.
    fn criterion_8(&mut self) -> CriterionResult {
        let mut times: Vec<(usize, Duration)> = Vec::new();
        for exp in 10..=17u32 {
            let states = 1usize << exp;
            let cfg = GenConfig {
                functor: "P({a,b} x X)".into(),
                states,
                density: 5,
                weight_range: 5,
                seed: 1000 + exp as u64,
            };
            let text = generate(&cfg).map_err(|e| e.to_string())?;
            let enc = parse_coalgebra(&text).map_err(|e| e.to_string())?;
            let started = Instant::now();
            let outcome = refine(&enc).map_err(|e| e.to_string())?;
            let elapsed = started.elapsed();
            let bound = log2_floor(enc.n_states());
            if outcome.stats.max_splitter_entries > bound {
                return Err(format!(
                    "n=2^{exp}: counter {} exceeds {bound}",
                    outcome.stats.max_splitter_entries
                ));
            }
            times.push((states, elapsed));
        }
        let last = times.last().unwrap();
        if last.1 >= Duration::from_secs(10) {
            return Err(format!("n=2^17 took {:?}, expected < 10 s", last.1));
        }
        let ratios: Vec<f64> = times
            .windows(2)
            .map(|w| w[1].1.as_secs_f64() / w[0].1.as_secs_f64().max(1e-9))
            .collect();
        let avg = ratios.iter().sum::<f64>() / ratios.len() as f64;
        if avg > 3.0 {
            return Err(format!(
                "doubling ratios averaged {avg:.2} > 3.0 ({ratios:?}, times {times:?})"
            ));
        }
        Ok(format!("2^17 in {:?}, doubling ratio avg {avg:.2}", last.1))
    }

    /// Criterion 9: identical inputs produce byte-identical partition text
    /// across three repeated runs, in process for every criterion 1-3 input
    /// and through the installed binary for a representative sample.
    fn criterion_9(&mut self) -> CriterionResult {
        let render = |text: &str| -> Result<String, String> {
            let enc = parse_coalgebra(text).map_err(|e| e.to_string())?;
            let outcome = refine(&enc).map_err(|e| e.to_string())?;
            Ok(partition_to_text(&enc, &outcome.partition))
        };

        let mut inputs: Vec<(String, String)> = vec![
            ("six-state example".into(), SHAPES.to_string()),
            ("nested powerset".into(), NESTED_SETS.to_string()),
        ];
        for functor in FAMILIES {
            for seed in 0..100u64 {
                let cfg = family_config(functor, seed);
                inputs.push((
                    format!("{functor} seed {seed}"),
                    generate(&cfg).map_err(|e| e.to_string())?,
                ));
            }
        }
        for (what, text) in &inputs {
            let first = render(text)?;
            for _ in 0..2 {
                if render(text)? != first {
                    return Err(format!("{what}: in-process runs differ"));
                }
            }
        }

        // Full-binary determinism on a representative sample.
        let exe = env!("CARGO_BIN_EXE_corefine");
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut spawned = 0usize;
        for (i, (what, text)) in inputs.iter().enumerate().filter(|(i, _)| i % 100 == 0) {
            let path = dir.path().join(format!("in{i}.coalg"));
            std::fs::write(&path, text).map_err(|e| e.to_string())?;
            let mut outputs = Vec::new();
            for _ in 0..3 {
                let out = std::process::Command::new(exe)
                    .arg("minimize")
                    .arg(&path)
                    .output()
                    .map_err(|e| e.to_string())?;
                if !out.status.success() {
                    return Err(format!("{what}: binary run failed"));
                }
                outputs.push(out.stdout);
            }
            if outputs[1] != outputs[0] || outputs[2] != outputs[0] {
                return Err(format!("{what}: binary runs differ"));
            }
            spawned += 1;
        }
        Ok(format!(
            "{} inputs stable in process, {spawned} stable through the binary",
            inputs.len()
        ))
    }
}

/// Independent pair-marking minimizer for complete automata: mark pairs with
/// different acceptance, then propagate backwards along the transition
/// table until stable; unmarked pairs are equivalent.
fn table_filling(acc: &[bool], delta: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = acc.len();
    let k = delta.first().map(|r| r.len()).unwrap_or(0);
    let mut marked = vec![false; n * n];
    for p in 0..n {
        for q in 0..n {
            if acc[p] != acc[q] {
                marked[p * n + q] = true;
            }
        }
    }
    loop {
        let mut changed = false;
        for p in 0..n {
            for q in 0..n {
                if !marked[p * n + q] {
                    for a in 0..k {
                        if marked[delta[p][a] * n + delta[q][a]] {
                            marked[p * n + q] = true;
                            changed = true;
                            break;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut class = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for p in 0..n {
        if class[p] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        class[p] = id;
        blocks.push(vec![p]);
        for q in p + 1..n {
            if class[q] == usize::MAX && !marked[p * n + q] {
                class[q] = id;
                blocks[id].push(q);
            }
        }
    }
    blocks
}

type Criterion = fn(&mut Suite) -> CriterionResult;

fn main() {
    let mut suite = Suite {
        counter_observations: Vec::new(),
    };
    let criteria: Vec<(&str, Criterion)> = vec![
        ("criterion 1: six-state worked example", Suite::criterion_1),
        (
            "criterion 2: nested-powerset counterexample",
            Suite::criterion_2,
        ),
        (
            "criterion 3: oracle-equivalence fuzzing",
            Suite::criterion_3,
        ),
        (
            "criterion 4: interface axiom brute force",
            Suite::criterion_4,
        ),
        ("criterion 5: splitter-entry bound", Suite::criterion_5),
        (
            "criterion 6: automata minimization vs table filling",
            Suite::criterion_6,
        ),
        ("criterion 7: weighted-system lumping", Suite::criterion_7),
        (
            "criterion 8: performance scaling envelope",
            Suite::criterion_8,
        ),
        (
            "criterion 9: byte-identical determinism",
            Suite::criterion_9,
        ),
    ];

    let mut failures = 0usize;
    for (name, body) in criteria {
        let started = Instant::now();
        match body(&mut suite) {
            Ok(detail) => {
                println!("[PASS] {name} — {detail} ({:.2?})", started.elapsed());
            }
            Err(reason) => {
                println!("[FAIL] {name} — {reason}");
                failures += 1;
            }
        }
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
