use rand::Rng as _;
use serde::Serialize;

use latsec::channel::{self, expected_power, ChannelConfig, DitherMode, Link};
use latsec::dof;
use latsec::entropy::{self, CountJoint, DiscreteDistribution, HalfBits, JointDistribution, Measure};
use latsec::extractor::{self, ExtractorSpec};
use latsec::hash::{self, BitLabeling, EncoderKit, HashFamily};
use latsec::lattice::{self, LatticeVector, LayeredCodebook, NestedLatticePair, Sign};
use latsec::leakage::{self, SelectionOptions, TrendSpec};
use latsec::seed::{derive_u64, rng_for};

use crate::output::{emit, render, write_bytes};
use crate::{
    AmplifyArgs, Cli, Command, EntropyCheckArgs, Failure, HashBenchArgs, KeygenArgs, LatticeVerifyArgs,
    LeakageTrendArgs, LinkArgs, RateArgs, SdofArgs, SimulateArgs,
};

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::EntropyCheck(a) => entropy_check(cli, a),
        Command::LatticeVerify(a) => lattice_verify(cli, a),
        Command::HashBench(a) => hash_bench(cli, a),
        Command::Amplify(a) => amplify(cli, a),
        Command::Keygen(a) => keygen(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::LeakageTrend(a) => leakage_trend(cli, a),
        Command::Sdof(a) => sdof(cli, a),
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Writes the table, then turns any collected violations into exit 1.
fn finish<T: Serialize>(cli: &Cli, rows: &[T], violations: Vec<String>) -> Result<(), Failure> {
    emit(rows, cli.format, cli.out.as_deref())?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(violations))
    }
}

/// `lo:hi` (inclusive) or a single value.
fn parse_range(text: &str) -> Result<Vec<usize>, Failure> {
    let bad = || usage(format!("bad range {text:?}, expected lo:hi"));
    let (lo, hi) = match text.split_once(':') {
        Some((lo, hi)) => (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?),
        None => {
            let v = text.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo == 0 || hi < lo {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

fn decimals(text: &str) -> usize {
    text.split_once('.').map_or(0, |(_, frac)| frac.len())
}

/// `start:end:step`; points are rounded to the decimals written in the
/// bounds and step so that `1.1` comes out as `1.1`.
fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let [start, end, step] = parts[..] else {
        return Err(usage(format!("bad grid {text:?}, expected start:end:step")));
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| usage(format!("bad number {s:?} in grid")));
    let points = dof::grid(num(start)?, num(end)?, num(step)?)?;
    let places = decimals(start).max(decimals(end)).max(decimals(step)).min(12);
    let scale = 10f64.powi(places as i32);
    Ok(points.into_iter().map(|v| (v * scale).round() / scale).collect())
}

fn options(rate: &RateArgs, cap: u128) -> SelectionOptions {
    SelectionOptions {
        family_cap: rate.family_cap,
        family_samples: rate.family_samples,
        max_trials: rate.max_trials,
        cap,
    }
}

// ---------------------------------------------------------------------------
// entropy-check
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct EntropyRow {
    check: String,
    s: Option<f64>,
    cases: u64,
    violations: u64,
    /// Smallest slack seen; negative means a violation.
    worst_margin: f64,
}

struct Tally {
    row: EntropyRow,
    tolerance: f64,
}

impl Tally {
    fn new(check: &str, s: Option<f64>, tolerance: f64) -> Self {
        Tally {
            row: EntropyRow {
                check: check.to_string(),
                s,
                cases: 0,
                violations: 0,
                worst_margin: f64::INFINITY,
            },
            tolerance,
        }
    }

    fn record(&mut self, margin: f64, ok: bool) {
        self.row.cases += 1;
        if !ok || margin < -self.tolerance {
            self.row.violations += 1;
        }
        self.row.worst_margin = self.row.worst_margin.min(margin);
    }
}

fn random_joint(seed: u64, index: usize, max_support: usize) -> Result<JointDistribution<usize, usize>, Failure> {
    let mut rng = rng_for(seed, &["entropy-check", "joint", &index.to_string()]);
    let nx = rng.gen_range(1..=max_support);
    let nt = rng.gen_range(1..=max_support);
    // Sparse, skewed tables reach the corners of the simplex more often.
    let mut weights: Vec<f64> = (0..nx * nt)
        .map(|_| if rng.gen_bool(0.25) { 0.0 } else { rng.gen::<f64>().powi(3) })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        weights[0] = 1.0;
    }
    let total: f64 = weights.iter().sum();
    let probs = weights.iter().map(|w| w / total).collect();
    Ok(JointDistribution::new((0..nx).collect(), (0..nt).collect(), probs)?)
}

fn entropy_check(cli: &Cli, a: &EntropyCheckArgs) -> Result<(), Failure> {
    if a.max_support == 0 || a.s.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(usage("need max-support ≥ 1 and positive s values"));
    }
    let measures = [Measure::Renyi2, Measure::Min];
    let mut lemma1 = Tally::new("shannon", None, 1e-9);
    let mut guessing = Tally::new("guessing", None, 1e-12);
    let mut random: Vec<Tally> = Vec::new();
    for &s in &a.s {
        random.push(Tally::new("renyi2", Some(s), 1e-12));
        random.push(Tally::new("min", Some(s), 1e-12));
    }
    for i in 0..a.trials {
        let j = random_joint(cli.seed, i, a.max_support)?;
        let card = (j.t_cardinality() as f64).log2();
        let prior = entropy::shannon_of(&j.marginal_x_probs());
        lemma1.record(entropy::conditional_shannon(&j) - (prior - card), true);
        let (lhs, rhs) = entropy::posterior_guessing_bound(&j);
        guessing.record(rhs - lhs, true);
        for (k, &s) in a.s.iter().enumerate() {
            for (l, &measure) in measures.iter().enumerate() {
                let mass = entropy::side_info_violation_mass(&j, measure, s)?;
                let bound = entropy::side_info_bound(measure, s)?;
                random[2 * k + l].record(bound - mass, true);
            }
        }
    }

    let mut grid: Vec<Tally> = Vec::new();
    if a.grid_denominator > 0 {
        let halves: Vec<HalfBits> = a.s.iter().map(|&s| HalfBits::from_f64(s)).collect::<Result<_, _>>()?;
        for &s in &a.s {
            grid.push(Tally::new("grid-renyi2", Some(s), 0.0));
            grid.push(Tally::new("grid-min", Some(s), 0.0));
        }
        let mut failure = None;
        for nx in 1..=a.grid_support {
            for nt in 1..=a.grid_support {
                entropy::for_each_composition(a.grid_denominator, nx * nt, |counts| {
                    if failure.is_some() {
                        return;
                    }
                    let result = (|| -> latsec::Result<()> {
                        let joint = CountJoint::new(nx, nt, counts.to_vec())?;
                        for (k, &h) in halves.iter().enumerate() {
                            for (l, &measure) in measures.iter().enumerate() {
                                let mass = joint.violation_mass(measure, h)?;
                                let ok = entropy::exact_within_bound(mass, measure, h)?;
                                let margin = entropy::side_info_bound(measure, h.value())? - mass.as_f64();
                                grid[2 * k + l].record(margin, ok);
                            }
                        }
                        Ok(())
                    })();
                    if let Err(e) = result {
                        failure = Some(e);
                    }
                });
            }
        }
        if let Some(e) = failure {
            return Err(e.into());
        }
    }

    let rows: Vec<EntropyRow> = [lemma1, guessing]
        .into_iter()
        .chain(random)
        .chain(grid)
        .map(|t| t.row)
        .collect();
    let violations = rows
        .iter()
        .filter(|r| r.violations > 0)
        .map(|r| format!("{} (s = {:?}): {} of {} cases", r.check, r.s, r.violations, r.cases))
        .collect();
    finish(cli, &rows, violations)
}

// ---------------------------------------------------------------------------
// lattice-verify
// ---------------------------------------------------------------------------

fn lattice_verify(cli: &Cli, a: &LatticeVerifyArgs) -> Result<(), Failure> {
    let c = a.c.unwrap_or(a.m as f64);
    let pair = NestedLatticePair::new(a.n, c, a.m)?;
    let dither = |label: &str| -> LatticeVector {
        if a.random_dither {
            let mut rng = rng_for(cli.seed, &["lattice-verify", label]);
            LatticeVector((0..a.n).map(|_| (rng.gen::<f64>() - 0.5) * c).collect())
        } else {
            LatticeVector::zeros(a.n)
        }
    };
    let (d1, d2) = (dither("dither-1"), dither("dither-2"));
    let mut rows = Vec::new();
    for measure in [Measure::Shannon, Measure::Renyi2, Measure::Min] {
        for sign in [Sign::Plus, Sign::Minus] {
            rows.push(lattice::verify_corollary1(&pair, &d1, &d2, sign, a.s, measure, cli.cap)?);
        }
    }
    let violations = rows
        .iter()
        .filter(|r| !r.passed)
        .map(|r| {
            format!(
                "{:?} {}: gap {:.6} bits, violation mass {:?} vs bound {:?}",
                r.measure, r.sign, r.shannon_gap, r.violation_mass, r.mass_bound
            )
        })
        .collect();
    finish(cli, &rows, violations)
}

// ---------------------------------------------------------------------------
// hash-bench
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct HashBenchRow {
    method: &'static str,
    q: u32,
    r: usize,
    n: usize,
    /// Matrices enumerated or drawn.
    matrices: u64,
    full_rank_fraction: f64,
    /// `1 − q^{r−N}`.
    lower_bound: f64,
    /// `Π_{i<r} (1 − q^{i−N})`.
    expected: f64,
    sigma: Option<f64>,
    passed: bool,
}

fn hash_bench(cli: &Cli, a: &HashBenchArgs) -> Result<(), Failure> {
    if a.q < 2 {
        return Err(usage("q must be at least 2"));
    }
    let mut rows = Vec::new();
    for r in 1..=a.rmax {
        for n in 1..=a.nmax {
            let (full, total) = hash::full_rank_count_exhaustive(r, n, a.q, cli.cap)?;
            let fraction = full as f64 / total as f64;
            let expected = hash::full_rank_probability(r, n, a.q);
            // full / total ≥ 1 − q^{r−N}  ⇔  full·q^N ≥ total·(q^N − q^r), in integers.
            let q = a.q as u128;
            let above_bound = r > n || full as u128 * q.pow(n as u32) >= total as u128 * (q.pow(n as u32) - q.pow(r as u32));
            rows.push(HashBenchRow {
                method: "exhaustive",
                q: a.q,
                r,
                n,
                matrices: total,
                full_rank_fraction: fraction,
                lower_bound: hash::full_rank_lower_bound(r, n, a.q),
                expected,
                sigma: None,
                passed: above_bound && (fraction - expected).abs() <= 1e-12,
            });
        }
    }
    if a.mc_draws > 0 {
        let seed = derive_u64(cli.seed, &["hash-bench", "monte-carlo"]);
        let fraction = hash::full_rank_fraction_sampled(a.mc_r, a.mc_n, a.q, a.mc_draws, seed)?;
        let expected = hash::full_rank_probability(a.mc_r, a.mc_n, a.q);
        let sigma = (expected * (1.0 - expected) / a.mc_draws as f64).sqrt();
        rows.push(HashBenchRow {
            method: "monte-carlo",
            q: a.q,
            r: a.mc_r,
            n: a.mc_n,
            matrices: a.mc_draws as u64,
            full_rank_fraction: fraction,
            lower_bound: hash::full_rank_lower_bound(a.mc_r, a.mc_n, a.q),
            expected,
            sigma: Some(sigma),
            passed: (fraction - expected).abs() <= 3.0 * sigma,
        });
    }
    let violations = rows
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{} r={} N={}: fraction {} vs expected {}", r.method, r.r, r.n, r.full_rank_fraction, r.expected))
        .collect();
    finish(cli, &rows, violations)
}

// ---------------------------------------------------------------------------
// amplify
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct AmplifyRow {
    source: String,
    n: usize,
    r: usize,
    /// Collision entropy `H₂(A)`.
    h2: f64,
    /// `H(G(A) | G)` over every binary `r×N` matrix.
    hashed_entropy: f64,
    bound: f64,
    passed: bool,
}

fn amplify(cli: &Cli, a: &AmplifyArgs) -> Result<(), Failure> {
    if a.n == 0 || a.n > 16 || a.rmax == 0 {
        return Err(usage("need 1 ≤ n ≤ 16 and rmax ≥ 1"));
    }
    let symbols = 1usize << a.n;
    let mut sources: Vec<(String, DiscreteDistribution<u64>)> = Vec::new();
    for c in 1..=a.n {
        let flat = DiscreteDistribution::uniform((0..1u64 << c).collect())?;
        sources.push((format!("flat-{c}"), flat));
    }
    for k in 0..a.random_sources {
        let mut rng = rng_for(cli.seed, &["amplify", "source", &k.to_string()]);
        let weights: Vec<f64> = (0..symbols).map(|_| rng.gen::<f64>().powi(4)).collect();
        let total: f64 = weights.iter().sum();
        let probs = weights.iter().map(|w| w / total).collect();
        sources.push((format!("random-{k}"), DiscreteDistribution::new((0..symbols as u64).collect(), probs)?));
    }
    let mut rows = Vec::new();
    for (name, source) in &sources {
        for r in 1..=a.rmax {
            let h = hash::exact_hashed_entropy(source, a.n, r, &HashFamily::Exhaustive, cli.cap)?;
            rows.push(AmplifyRow {
                source: name.clone(),
                n: a.n,
                r,
                h2: source.entropy(Measure::Renyi2),
                hashed_entropy: h.average,
                bound: h.bound,
                passed: h.bound_holds(),
            });
        }
    }
    let violations = rows
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{} r={}: {} < {}", r.source, r.r, r.hashed_entropy, r.bound))
        .collect();
    finish(cli, &rows, violations)
}

// ---------------------------------------------------------------------------
// Channel plumbing shared by keygen and simulate
// ---------------------------------------------------------------------------

/// Channel configuration for `book`; without an explicit budget both nodes
/// get exactly the expected power of uniformly dithered transmission.
fn channel_config(link: &LinkArgs, book: &LayeredCodebook, cap: u128) -> Result<ChannelConfig, Failure> {
    let power = match link.power {
        Some(p) => p,
        None => expected_power(book, book.size() as u64, DitherMode::Uniform, cap)?,
    };
    Ok(ChannelConfig::new(
        link.sqrt_ab * link.sqrt_ab,
        1.0,
        link.sign.into(),
        link.sigma1 * link.sigma1,
        link.sigma2 * link.sigma2,
        power,
        power,
    )?)
}

// ---------------------------------------------------------------------------
// keygen
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct KeygenRow {
    n_bar: usize,
    input_bits: usize,
    seed_bits: usize,
    key_bits: usize,
    runs: usize,
    agreement_rate: f64,
    /// `H(K₁ | V, t₁⊕t₂, d, T)`, exact over every seed.
    key_entropy: f64,
    /// Min-entropy left after at most one bit per channel use is revealed.
    min_entropy: f64,
    eps_sec: f64,
    passed: bool,
    key_rate: f64,
}

fn keygen(cli: &Cli, a: &KeygenArgs) -> Result<(), Failure> {
    let l = &a.link;
    let book = LayeredCodebook::stacked(l.layers, a.n, l.m, l.scale)?;
    let n0 = book.label_bits();
    let spec = ExtractorSpec::new(n0, a.seed_bits, a.r, a.seed_rate)?;
    let labeling = BitLabeling::new(book.clone());
    let kit = EncoderKit::identity(n0)?;
    let cfg = channel_config(l, &book, cli.cap)?;
    let link = Link {
        cfg: &cfg,
        book: &book,
        labeling: &labeling,
        kit: &kit,
        dither: DitherMode::Uniform,
    };
    link.check_power(cli.cap)?;
    let mut transcripts = Vec::with_capacity(a.runs);
    for i in 0..a.runs {
        let run_seed = derive_u64(cli.seed, &["keygen", "run", &i.to_string()]);
        transcripts.push(extractor::run_key_protocol(&link, &spec, l.decode.into(), run_seed, cli.cap)?);
    }
    let key_entropy = extractor::key_entropy_given_view(&book, &spec, cfg.sign, cli.cap)?;
    let n_bar = book.total_dim();
    let min_entropy = n0 as f64 - n_bar as f64;
    let eps_sec = spec.security_slack(min_entropy);
    let passed = key_entropy >= a.r as f64 - eps_sec - 1e-12;
    let agreements = transcripts.iter().filter(|t| t.agreement).count();
    let row = KeygenRow {
        n_bar,
        input_bits: n0,
        seed_bits: a.seed_bits,
        key_bits: a.r,
        runs: a.runs,
        agreement_rate: agreements as f64 / a.runs.max(1) as f64,
        key_entropy,
        min_entropy,
        eps_sec,
        passed,
        key_rate: if transcripts.is_empty() {
            0.0
        } else {
            extractor::key_rate(&transcripts, key_entropy)?
        },
    };
    if let Some(path) = &a.transcripts {
        write_bytes(&render(&transcripts, crate::Format::Json)?, Some(path))?;
    }
    let violations = if passed {
        Vec::new()
    } else {
        vec![format!("key entropy {key_entropy} below r − ε_sec = {}", a.r as f64 - eps_sec)]
    };
    finish(cli, &[row], violations)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct SimulateRow {
    #[serde(rename = "N_bar")]
    n_bar: usize,
    r0: usize,
    leakage_bits: f64,
    decode_error_rate: f64,
    power_1: f64,
    power_2: f64,
    seed: u64,
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<(), Failure> {
    let l = &a.link;
    let sign: Sign = l.sign.into();
    let mut rows = Vec::new();
    for n_bar in parse_range(&a.nbar)? {
        if n_bar % l.layers != 0 {
            return Err(usage(format!("N̄ = {n_bar} is not a multiple of {} layers", l.layers)));
        }
        let book = LayeredCodebook::stacked(l.layers, n_bar / l.layers, l.m, l.scale)?;
        let r0 = hash::secret_rate_select(n_bar, book.average_rate(), a.rate.eps, a.rate.delta).min(book.label_bits());
        let row_seed = derive_u64(cli.seed, &["simulate", &n_bar.to_string()]);
        let selection = leakage::select_encoder(&book, r0, sign, derive_u64(row_seed, &["encoder"]), &options(&a.rate, cli.cap))?;
        let labeling = BitLabeling::new(book.clone());
        let cfg = channel_config(l, &book, cli.cap)?;
        let link = Link {
            cfg: &cfg,
            book: &book,
            labeling: &labeling,
            kit: &selection.kit,
            dither: DitherMode::Uniform,
        };
        let (summary, _) = channel::simulate(&link, a.trials, l.decode.into(), derive_u64(row_seed, &["trials"]), cli.cap)?;
        rows.push(SimulateRow {
            n_bar,
            r0,
            leakage_bits: selection.leakage,
            decode_error_rate: summary.error_rate,
            power_1: summary.power1,
            power_2: summary.power2,
            seed: row_seed,
        });
    }
    let violations = rows
        .iter()
        .filter(|r| r.leakage_bits > r.n_bar as f64 + 1e-9)
        .map(|r| format!("N̄ = {}: leakage {} exceeds N̄ bits", r.n_bar, r.leakage_bits))
        .collect();
    finish(cli, &rows, violations)
}

// ---------------------------------------------------------------------------
// leakage-trend
// ---------------------------------------------------------------------------

fn leakage_trend(cli: &Cli, a: &LeakageTrendArgs) -> Result<(), Failure> {
    let spec = TrendSpec {
        layers: a.layers,
        m: a.m,
        n_bars: parse_range(&a.nbar)?,
        epsilon: a.rate.eps,
        delta: a.rate.delta,
        sign: a.sign.into(),
        seed: cli.seed,
        options: options(&a.rate, cli.cap),
    };
    let rows = leakage::leakage_trend(&spec)?;
    let slope = leakage::log_slope(&rows);
    match slope {
        Some(s) => eprintln!("log2 leakage slope per N̄: {s:.6}"),
        None => eprintln!("log2 leakage slope per N̄: undefined"),
    }
    let decreasing = rows.windows(2).all(|w| w[1].leakage_bits < w[0].leakage_bits);
    if !decreasing {
        eprintln!("note: leakage column is not strictly decreasing");
    }
    let mut violations: Vec<String> = rows
        .iter()
        .filter(|r| r.leakage_bits > 2.0 * r.family_average + 1e-12)
        .map(|r| format!("N̄ = {}: leakage {} above twice the family average", r.n_bar, r.leakage_bits))
        .collect();
    if a.require_decreasing && !(decreasing && slope.is_some_and(|s| s < 0.0)) {
        violations.push(format!("leakage not strictly decreasing with negative slope (slope {slope:?})"));
    }
    finish(cli, &rows, violations)
}

// ---------------------------------------------------------------------------
// sdof
// ---------------------------------------------------------------------------

fn sdof(cli: &Cli, a: &SdofArgs) -> Result<(), Failure> {
    let grid = parse_grid(&a.grid)?;
    let rows = dof::sdof_landscape(&grid, a.qmax)?;
    finish(cli, &rows, Vec::new())
}
