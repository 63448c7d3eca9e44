//! Subcommand handlers.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

use alginfo::bits::Bits;
use alginfo::bounds::{
    cover_upper_bound, mixture_identity_discrete, mixture_identity_space, standard_catalog,
    standard_families, standard_machine, transfer_lower_bound, DisjointOpenFamily, MeasureCatalog,
    ParamTransition,
};
use alginfo::cantor::{transition_conservation_gap, CantorMeasure, Transition};
use alginfo::discrete::{conservation_gap, discrete_info, Channel, SemiMeasure};
use alginfo::fixtures;
use alginfo::machine::MachineSpec;
use alginfo::oracle::{InfoValue, LogValue, Oracle};
use alginfo::space::{
    convolve, dual_measure, rat, space_info, DyadicBasis, GridSpec, Interval, MeasureKind,
    RegionSet, SpaceMeasure,
};
use alginfo::suites::{self, FrozenBaselines, SuiteContext};

use crate::report::{fmt_f64, write_report, Provenance, Report};
use crate::{
    AverageCmd, CantorInfoCmd, ChannelGapCmd, Command, Common, ComplexityCmd, ConvolveCmd,
    CoverCmd, DiscreteInfoCmd, EnumerateCmd, FreezeCmd, MixtureCmd, QuantumCmd, SpaceInfoCmd,
    TransferCmd, TransitionGapCmd,
};

pub trait HasCommon {
    fn common(&self) -> &Common;
    fn common_mut(&mut self) -> &mut Common;
}

macro_rules! has_common {
    ($($t:ty),*) => {
        $(impl HasCommon for $t {
            fn common(&self) -> &Common { &self.common }
            fn common_mut(&mut self) -> &mut Common { &mut self.common }
        })*
    };
}

has_common!(
    EnumerateCmd,
    ComplexityCmd,
    DiscreteInfoCmd,
    ChannelGapCmd,
    CantorInfoCmd,
    TransitionGapCmd,
    SpaceInfoCmd,
    ConvolveCmd,
    TransferCmd,
    CoverCmd,
    MixtureCmd,
    AverageCmd,
    QuantumCmd,
    FreezeCmd
);

/// Replays a sidecar config when `--config` is given; an explicit
/// `--out` on the command line still wins.
fn with_replay<T: HasCommon + DeserializeOwned>(mut cmd: T) -> Result<T> {
    let cli_out = cmd.common().out.clone();
    if let Some(path) = cmd.common().config.clone() {
        let raw = fs::read_to_string(&path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&raw).with_context(|| "parsing config JSON")?;
        let effective = value.get("config").cloned().unwrap_or(value);
        cmd = serde_json::from_value(effective)
            .with_context(|| "config does not match this subcommand's schema")?;
        if cli_out.is_some() {
            cmd.common_mut().out = cli_out;
        }
    }
    if cmd.common().threads > 0 {
        // deterministic reductions make the pool size cosmetic
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cmd.common().threads)
            .build_global();
    }
    Ok(cmd)
}

fn load_machine(spec: &str) -> Result<MachineSpec> {
    match spec {
        "m0" => Ok(fixtures::m0()),
        "m1" => Ok(fixtures::m1()),
        "m2" => Ok(fixtures::m2()),
        "m2cat" => Ok(standard_machine()),
        path => {
            let raw = fs::read_to_string(path)
                .with_context(|| format!("reading machine document {path}"))?;
            Ok(MachineSpec::load(&raw)?)
        }
    }
}

fn oracle_for(common: &Common, ambient: Bits) -> Result<Oracle> {
    let machine = load_machine(&common.machine)?;
    Ok(Oracle::with_ambient_aux(
        machine,
        common.max_len,
        common.budget,
        ambient,
    )?)
}

fn context_for(common: &Common) -> Result<SuiteContext> {
    let basis = DyadicBasis::default();
    Ok(SuiteContext {
        oracle: oracle_for(common, Bits::empty())?,
        catalog: standard_catalog(),
        basis: basis.clone(),
        families: standard_families(&basis),
    })
}

/// Frozen comparisons only apply on the configuration they were
/// certified under.
fn frozen_for(common: &Common) -> Option<FrozenBaselines> {
    let frozen = fixtures::frozen_baselines()?;
    if common.machine == "m2cat"
        && common.max_len == frozen.max_len
        && common.budget == frozen.budget
    {
        Some(frozen)
    } else {
        eprintln!("note: frozen baselines apply to m2cat at the certified bounds; checks skipped");
        None
    }
}

fn prov(common: &Common, machine_name: &str) -> Provenance {
    Provenance {
        machine: machine_name.to_string(),
        max_len: common.max_len,
        budget: common.budget,
        depth: common.depth,
        seed: common.seed,
    }
}

fn finish<T: Serialize + HasCommon>(
    cmd: &T,
    machine_name: &str,
    report: Report,
    started: Instant,
    ok: bool,
) -> Result<bool> {
    let common = cmd.common();
    let path = write_report(
        &common.out_dir(),
        &report,
        &prov(common, machine_name),
        cmd,
        started.elapsed().as_millis(),
    )?;
    println!("wrote {}", path.display());
    Ok(ok)
}

fn info_cells(v: &InfoValue) -> (String, String, String) {
    let status = match v.value {
        LogValue::Finite(_) => {
            if v.is_partial() {
                "partial"
            } else {
                "ok"
            }
        }
        LogValue::NegInf => "neg-inf",
        LogValue::Unresolved => "unresolved",
    };
    let value = match v.value {
        LogValue::Finite(x) => fmt_f64(x),
        LogValue::NegInf => "-inf".to_string(),
        LogValue::Unresolved => String::new(),
    };
    (status.to_string(), value, fmt_f64(v.resolved_mass))
}

pub fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::MachineEnumerate(c) => machine_enumerate(with_replay(c)?),
        Command::Complexity(c) => complexity(with_replay(c)?),
        Command::DiscreteInfo(c) => discrete_info_cmd(with_replay(c)?),
        Command::ChannelGap(c) => channel_gap(with_replay(c)?),
        Command::CantorInfo(c) => cantor_info(with_replay(c)?),
        Command::TransitionGap(c) => transition_gap(with_replay(c)?),
        Command::SpaceInfo(c) => space_info_cmd(with_replay(c)?),
        Command::Convolve(c) => convolve_cmd(with_replay(c)?),
        Command::Transfer(c) => transfer_cmd(with_replay(c)?),
        Command::Cover(c) => cover_cmd(with_replay(c)?),
        Command::Mixture(c) => mixture_cmd(with_replay(c)?),
        Command::Average(c) => average_cmd(with_replay(c)?),
        Command::Quantum(c) => quantum_cmd(with_replay(c)?),
        Command::Freeze(c) => freeze_cmd(with_replay(c)?),
    }
}

fn machine_enumerate(cmd: EnumerateCmd) -> Result<bool> {
    let started = Instant::now();
    let machine = load_machine(&cmd.common.machine)?;
    let aux: Bits = cmd.aux.parse().map_err(|e| anyhow!("bad aux: {e}"))?;
    let found = machine.enumerate(cmd.common.max_len, cmd.common.budget, &aux)?;
    let kraft = machine.kraft_sum(cmd.common.max_len, cmd.common.budget, &aux)?;
    let mut report = Report::new(
        "machine-enumerate",
        vec!["program", "output", "aux_bits_read"],
    );
    for h in &found {
        report.push(vec![
            h.program.to_string(),
            h.output.to_string(),
            h.aux_bits_read.to_string(),
        ]);
    }
    println!("{} halting programs, Kraft sum {kraft}", found.len());
    finish(&cmd, &machine.name, report, started, true)
}

fn complexity(cmd: ComplexityCmd) -> Result<bool> {
    let started = Instant::now();
    let oracle = oracle_for(&cmd.common, Bits::empty())?;
    let aux: Bits = cmd.aux.parse().map_err(|e| anyhow!("bad aux: {e}"))?;
    let queries: Vec<Bits> = if let Some(n) = cmd.strings.strip_prefix("all-up-to:") {
        let n: usize = n.parse().context("bad all-up-to bound")?;
        Bits::all_up_to_length(n)
    } else {
        cmd.strings
            .split(',')
            .map(|s| s.trim().parse().map_err(|e| anyhow!("bad string: {e}")))
            .collect::<Result<_>>()?
    };
    let mut report = Report::new("complexity", vec!["x", "k", "m"]);
    for x in &queries {
        let k = oracle
            .complexity(x, &aux)
            .map(|k| k.to_string())
            .unwrap_or_default();
        let m = oracle.alg_prob(x, &aux).to_string();
        report.push(vec![x.to_string(), k, m]);
    }
    let name = oracle.machine_name().to_string();
    finish(&cmd, &name, report, started, true)
}

fn discrete_info_cmd(cmd: DiscreteInfoCmd) -> Result<bool> {
    let started = Instant::now();
    let oracle = oracle_for(&cmd.common, Bits::empty())?;
    let load = |path: &PathBuf| -> Result<SemiMeasure> {
        let raw = fs::read_to_string(path)
            .with_context(|| format!("reading measure {}", path.display()))?;
        Ok(serde_json::from_str(&raw)?)
    };
    let p = load(&cmd.p)?;
    let q = match &cmd.q {
        Some(path) => load(path)?,
        None => p.clone(),
    };
    let value = discrete_info(&p, &q, &oracle);
    let (status, val, mass) = info_cells(&value);
    let mut report = Report::new(
        "discrete-info",
        vec!["p", "q", "status", "value", "resolved_mass"],
    );
    report.push(vec![
        cmd.p.display().to_string(),
        cmd.q
            .as_ref()
            .map(|q| q.display().to_string())
            .unwrap_or_else(|| cmd.p.display().to_string()),
        status,
        val,
        mass,
    ]);
    let name = oracle.machine_name().to_string();
    finish(&cmd, &name, report, started, true)
}

fn gap_row(fixture: &str, case: usize, g: &alginfo::oracle::GapReport) -> Vec<String> {
    vec![
        fixture.to_string(),
        case.to_string(),
        g.before.value.as_f64().map(fmt_f64).unwrap_or_default(),
        g.after.value.as_f64().map(fmt_f64).unwrap_or_default(),
        g.gap.map(fmt_f64).unwrap_or_default(),
    ]
}

fn channel_gap(cmd: ChannelGapCmd) -> Result<bool> {
    let started = Instant::now();
    let oracle = oracle_for(&cmd.common, Bits::empty())?;
    let mut report = Report::new(
        "channel-gap",
        vec!["fixture", "case", "before", "after", "gap"],
    );
    let mut ok = true;
    match cmd.fixture.as_str() {
        "identity" => {
            let p = SemiMeasure::uniform_over_length(2);
            let q = SemiMeasure::point_mass(&"1".parse().unwrap());
            let f = Channel::identity_on(p.iter().map(|(x, _)| x));
            let g = conservation_gap(&f, &p, &q, &oracle)?;
            ok = g.gap == Some(0.0);
            report.push(gap_row("identity", 0, &g));
        }
        "uniform-spread" => {
            let x: Bits = "01".parse().unwrap();
            let p = SemiMeasure::point_mass(&x);
            let f = Channel::uniform_spread([x].iter());
            let g = conservation_gap(&f, &p, &p, &oracle)?;
            ok = g.gap.map(|v| v > 0.0).unwrap_or(false);
            report.push(gap_row("uniform-spread", 0, &g));
        }
        "bit-flip" => {
            let p = SemiMeasure::uniform_over_length(2);
            let q = SemiMeasure::point_mass(&"10".parse().unwrap());
            let f = Channel::bit_flip(p.iter().map(|(x, _)| x));
            let g = conservation_gap(&f, &p, &q, &oracle)?;
            report.push(gap_row("bit-flip", 0, &g));
        }
        "random-suite" => {
            let cases = suites::channel_gap_suite(&oracle);
            let min = cases.iter().map(|c| c.gap).fold(f64::INFINITY, f64::min);
            for c in &cases {
                report.push(vec![
                    "random".to_string(),
                    c.id.to_string(),
                    fmt_f64(c.before),
                    fmt_f64(c.after),
                    fmt_f64(c.gap),
                ]);
            }
            if let Some(frozen) = frozen_for(&cmd.common) {
                ok = min >= frozen.channel_min_gap - 1e-9;
                println!("min gap {min}, frozen baseline {}", frozen.channel_min_gap);
            }
        }
        other => bail!("unknown fixture \"{other}\""),
    }
    let name = oracle.machine_name().to_string();
    finish(&cmd, &name, report, started, ok)
}

fn cantor_info(cmd: CantorInfoCmd) -> Result<bool> {
    let started = Instant::now();
    let ctx = context_for(&cmd.common)?;
    let (p, q): (CantorMeasure, CantorMeasure) = match cmd.pair.as_str() {
        "point" => (
            CantorMeasure::point_on_extended(&"10".parse().unwrap()),
            CantorMeasure::point_on_extended(&"10".parse().unwrap()),
        ),
        "cylinder" => (
            CantorMeasure::cylinder_uniform(&"10".parse().unwrap()),
            CantorMeasure::cylinder_uniform(&"10".parse().unwrap()),
        ),
        "uniform" => (CantorMeasure::uniform(), CantorMeasure::uniform()),
        other => match other.strip_prefix("catalog:") {
            Some(names) => {
                let mut parts = names.splitn(2, ',');
                let first = parts.next().unwrap();
                let second = parts.next().unwrap_or(first);
                let get = |n: &str| -> Result<CantorMeasure> {
                    let m = ctx
                        .catalog
                        .get(n)?
                        .space()
                        .ok_or_else(|| anyhow!("{n} is not a space measure"))?
                        .clone();
                    Ok(dual_measure(&m, cmd.common.depth, &ctx.basis))
                };
                (get(first)?, get(second)?)
            }
            None => bail!("unknown pair \"{other}\""),
        },
    };
    let mut report = Report::new(
        "cantor-info",
        vec!["p", "q", "cell_depth", "status", "value", "resolved_mass"],
    );
    let mut ok = true;
    let mut prev = f64::NEG_INFINITY;
    for d in 1..=cmd.common.depth {
        let v = alginfo::cantor::depth_info(&p, &q, d, &ctx.oracle)?;
        let (status, val, mass) = info_cells(&v);
        if let Some(x) = v.finite() {
            ok &= x >= prev - 1e-9;
            prev = x;
        }
        report.push(vec![
            p.name.clone(),
            q.name.clone(),
            d.to_string(),
            status,
            val,
            mass,
        ]);
    }
    let name = ctx.oracle.machine_name().to_string();
    finish(&cmd, &name, report, started, ok)
}

fn transition_gap(cmd: TransitionGapCmd) -> Result<bool> {
    let started = Instant::now();
    let ctx = context_for(&cmd.common)?;
    let oracle = &ctx.oracle;
    let mut report = Report::new(
        "transition-gap",
        vec!["fixture", "case", "before", "after", "gap"],
    );
    let mut ok = true;
    let depth = cmd.common.depth.min(6);
    let p = CantorMeasure::cylinder_uniform(&"10".parse().unwrap());
    let q = CantorMeasure::uniform();
    match cmd.fixture.as_str() {
        "identity" => {
            let g = transition_conservation_gap(&Transition::identity(), &p, &q, depth, oracle)?;
            ok = g.gap == Some(0.0);
            report.push(gap_row("identity", 0, &g));
        }
        "constant" => {
            let r = CantorMeasure::cylinder_uniform(&"0".parse().unwrap());
            let g =
                transition_conservation_gap(&Transition::constant(r), &p, &q, depth, oracle)?;
            report.push(gap_row("constant", 0, &g));
        }
        "prepend" => {
            let g =
                transition_conservation_gap(&Transition::bit_prepend(), &p, &q, depth, oracle)?;
            report.push(gap_row("prepend", 0, &g));
        }
        "random-suite" => {
            let cases = suites::transition_gap_suite(oracle);
            let min = cases.iter().map(|c| c.gap).fold(f64::INFINITY, f64::min);
            for c in &cases {
                report.push(vec![
                    "random".to_string(),
                    c.id.to_string(),
                    fmt_f64(c.before),
                    fmt_f64(c.after),
                    fmt_f64(c.gap),
                ]);
            }
            if let Some(frozen) = frozen_for(&cmd.common) {
                ok = min >= frozen.transition_min_gap - 1e-9;
                println!("min gap {min}, frozen baseline {}", frozen.transition_min_gap);
            }
        }
        other => bail!("unknown fixture \"{other}\""),
    }
    let name = oracle.machine_name().to_string();
    finish(&cmd, &name, report, started, ok)
}

fn space_info_cmd(cmd: SpaceInfoCmd) -> Result<bool> {
    let started = Instant::now();
    let ctx = context_for(&cmd.common)?;
    let mut report = Report::new(
        "space-info",
        vec!["p", "q", "status", "value", "resolved_mass"],
    );
    let pairs: Vec<(String, String)> = match (&cmd.p, &cmd.q) {
        (Some(p), q) => vec![(p.clone(), q.clone().unwrap_or_else(|| p.clone()))],
        (None, _) => (1..=8)
            .map(|n| (format!("gauss-n{n}"), format!("gauss-n{n}")))
            .collect(),
    };
    for (pn, qn) in &pairs {
        let p = ctx
            .catalog
            .get(pn)?
            .space()
            .ok_or_else(|| anyhow!("{pn} is not a space measure"))?;
        let q = ctx
            .catalog
            .get(qn)?
            .space()
            .ok_or_else(|| anyhow!("{qn} is not a space measure"))?;
        let v = space_info(p, q, cmd.common.depth, &ctx.basis, &ctx.oracle)?;
        let (status, val, mass) = info_cells(&v);
        report.push(vec![pn.clone(), qn.clone(), status, val, mass]);
    }
    let name = ctx.oracle.machine_name().to_string();
    finish(&cmd, &name, report, started, true)
}

fn parse_measure(spec: &str, catalog: &MeasureCatalog) -> Result<SpaceMeasure> {
    if let Some(name) = spec.strip_prefix("catalog:") {
        return Ok(catalog
            .get(name)?
            .space()
            .ok_or_else(|| anyhow!("{name} is not a space measure"))?
            .clone());
    }
    let parse_rat = |s: &str| -> Result<alginfo::space::Rat> {
        s.trim()
            .parse()
            .map_err(|e| anyhow!("bad rational \"{s}\": {e}"))
    };
    if let Some(args) = spec.strip_prefix("gaussian:") {
        let mut it = args.splitn(2, ',');
        let mean = parse_rat(it.next().unwrap_or_default())?;
        let var = parse_rat(it.next().ok_or_else(|| anyhow!("gaussian needs mean,var"))?)?;
        return Ok(SpaceMeasure::gaussian(spec, mean, var));
    }
    if let Some(args) = spec.strip_prefix("uniform:") {
        let mut it = args.splitn(2, ',');
        let a = parse_rat(it.next().unwrap_or_default())?;
        let b = parse_rat(it.next().ok_or_else(|| anyhow!("uniform needs a,b"))?)?;
        return Ok(SpaceMeasure::uniform(spec, a, b));
    }
    bail!("cannot parse measure spec \"{spec}\"");
}

fn convolve_cmd(cmd: ConvolveCmd) -> Result<bool> {
    let started = Instant::now();
    let catalog = standard_catalog();
    let p = parse_measure(&cmd.p, &catalog)?;
    let kernel = parse_measure(&cmd.kernel, &catalog)?;
    let grid = GridSpec {
        step: cmd.step,
        half_width: cmd.half_width,
        closed_form: !cmd.grid,
    };
    let out = convolve(&p, &kernel, grid)?;
    let (lo, hi) = out.support_hint();
    let mut report = Report::new("convolve", vec!["x", "density"]);
    let n = ((hi - lo) / cmd.step).ceil() as usize + 1;
    for i in 0..n {
        let x = lo + i as f64 * cmd.step;
        report.push(vec![
            fmt_f64(x),
            fmt_f64(out.density(x).unwrap_or(0.0)),
        ]);
    }
    let mass = out.total_mass();
    let mut ok = (mass - p.total_mass() * kernel.total_mass()).abs() <= 1e-6;
    // when both inputs are Gaussian the closed form scores the grid
    if cmd.grid {
        if let (
            MeasureKind::Gaussian { mean: m1, var: v1 },
            MeasureKind::Gaussian { mean: m2, var: v2 },
        ) = (&p.kind, &kernel.kind)
        {
            let exact = SpaceMeasure::gaussian("exact", m1 + m2, v1 + v2);
            let l1: f64 = (0..n)
                .map(|i| {
                    let x = lo + i as f64 * cmd.step;
                    (out.density(x).unwrap_or(0.0) - exact.density(x).unwrap())
                        .abs()
                        * cmd.step
                })
                .sum();
            println!("L1 distance to closed form: {l1}");
            ok &= l1 <= 1e-3;
        }
    }
    println!("total mass {mass}");
    finish(&cmd, "-", report, started, ok)
}

fn parse_family(spec: &str, ctx: &SuiteContext) -> Result<DisjointOpenFamily> {
    match spec {
        "halves" => Ok(ctx.families[0].clone()),
        "quarters" => Ok(ctx.families[1].clone()),
        "eighths" => Ok(ctx.families[2].clone()),
        "unit" => Ok(DisjointOpenFamily::new(
            "unit",
            Bits::from_lengthlex_index(5).unwrap(),
            vec![RegionSet::from_interval(Interval::open(rat(0, 1), rat(1, 1)))],
            vec![(1, 1)],
            &ctx.basis,
        )?),
        other => match other.strip_prefix("dyadic:") {
            Some(level) => {
                let level: u32 = level.parse().context("bad dyadic level")?;
                Ok(DisjointOpenFamily::dyadic_level(
                    &format!("dyadic-{level}"),
                    Bits::from_lengthlex_index(9).unwrap(),
                    level,
                    &ctx.basis,
                )?)
            }
            None => bail!("unknown family \"{other}\""),
        },
    }
}

fn transfer_cmd(cmd: TransferCmd) -> Result<bool> {
    let started = Instant::now();
    let ctx = context_for(&cmd.common)?;
    let family = parse_family(&cmd.family, &ctx)?;
    let qn = cmd.q.clone().unwrap_or_else(|| cmd.p.clone());
    let p = ctx
        .catalog
        .get(&cmd.p)?
        .space()
        .ok_or_else(|| anyhow!("{} is not a space measure", cmd.p))?;
    let q = ctx
        .catalog
        .get(&qn)?
        .space()
        .ok_or_else(|| anyhow!("{qn} is not a space measure"))?;
    let t = transfer_lower_bound(&family, p, q, &ctx.oracle)?;
    let space = space_info(p, q, cmd.common.depth, &ctx.basis, &ctx.oracle)?;
    let bound = t.bound.value.as_f64().unwrap_or(f64::NEG_INFINITY);
    let observed = space.value.as_f64().unwrap_or(f64::NEG_INFINITY);
    let slack = bound - observed;
    let mut report = Report::new(
        "transfer",
        vec!["family", "p", "q", "bound", "space_info", "slack"],
    );
    report.push(vec![
        family.name.clone(),
        cmd.p.clone(),
        qn,
        fmt_f64(bound),
        fmt_f64(observed),
        fmt_f64(slack),
    ]);
    let ok = match frozen_for(&cmd.common) {
        Some(frozen) => slack <= frozen.transfer_slack_max + 1e-9,
        None => true,
    };
    let name = ctx.oracle.machine_name().to_string();
    finish(&cmd, &name, report, started, ok)
}

fn cover_cmd(cmd: CoverCmd) -> Result<bool> {
    let started = Instant::now();
    let ctx = context_for(&cmd.common)?;
    let mut report = Report::new(
        "cover",
        vec!["m", "r", "p", "q", "bound", "observed", "slack"],
    );
    let cases: Vec<(String, String, String, String)> = match (&cmd.m, &cmd.p) {
        (Some(m), Some(p)) => {
            let r = cmd.r.clone().unwrap_or_else(|| m.clone());
            let q = cmd.q.clone().unwrap_or_else(|| p.clone());
            vec![(m.clone(), r, p.clone(), q)]
        }
        _ => (1..=8)
            .map(|n| {
                let g = format!("gauss-n{n}");
                (g.clone(), g.clone(), g.clone(), g)
            })
            .collect(),
    };
    let mut worst_slack = f64::NEG_INFINITY;
    for (m, r, pn, qn) in &cases {
        let p = ctx
            .catalog
            .get(pn)?
            .space()
            .ok_or_else(|| anyhow!("{pn} is not a space measure"))?
            .clone();
        let q = ctx
            .catalog
            .get(qn)?
            .space()
            .ok_or_else(|| anyhow!("{qn} is not a space measure"))?
            .clone();
        let cb = cover_upper_bound(
            m,
            r,
            &p,
            &q,
            cmd.common.depth,
            &ctx.catalog,
            &ctx.basis,
            &ctx.oracle,
        )?;
        let bound = cb.bound.as_f64().unwrap_or(f64::INFINITY);
        let observed = cb.observed.value.as_f64().unwrap_or(f64::NEG_INFINITY);
        let slack = observed - bound;
        worst_slack = worst_slack.max(slack);
        report.push(vec![
            m.clone(),
            r.clone(),
            pn.clone(),
            qn.clone(),
            fmt_f64(bound),
            fmt_f64(observed),
            fmt_f64(slack),
        ]);
    }
    let ok = match frozen_for(&cmd.common) {
        Some(frozen) => worst_slack <= frozen.cover_slack_max + 1e-9,
        None => true,
    };
    let name = ctx.oracle.machine_name().to_string();
    finish(&cmd, &name, report, started, ok)
}

fn mixture_cmd(cmd: MixtureCmd) -> Result<bool> {
    let started = Instant::now();
    let ctx = context_for(&cmd.common)?;
    let mut report = Report::new(
        "mixture",
        vec![
            "kind",
            "case",
            "mixture_pow2",
            "expectation_pow2",
            "rel_err",
            "pass",
        ],
    );
    let mut ok = true;
    let mut push = |kind: &str, case: usize, r: &alginfo::bounds::MixtureIdentityReport| {
        report.push(vec![
            kind.to_string(),
            case.to_string(),
            fmt_f64(r.mixture_pow2),
            fmt_f64(r.expectation_pow2),
            fmt_f64(r.rel_err),
            r.within_tolerance.to_string(),
        ]);
    };
    if cmd.kind == "discrete" || cmd.kind == "both" {
        for (case, (weights, parts)) in suites::random_discrete_mixtures(cmd.count, cmd.common.seed)
            .iter()
            .enumerate()
        {
            let r = mixture_identity_discrete(weights, parts, &ctx.oracle, None)?;
            ok &= r.within_tolerance;
            push("discrete", case, &r);
        }
    }
    if cmd.kind == "space" || cmd.kind == "both" {
        let space_count = cmd.count.min(5);
        for (case, (weights, parts)) in
            suites::random_space_mixtures(&ctx, space_count, cmd.common.seed)
                .iter()
                .enumerate()
        {
            let r = mixture_identity_space(
                weights,
                parts,
                cmd.common.depth,
                &ctx.basis,
                &ctx.oracle,
                None,
            )?;
            ok &= r.within_tolerance;
            push("space", case, &r);
        }
    }
    if !["discrete", "space", "both"].contains(&cmd.kind.as_str()) {
        bail!("unknown mixture kind \"{}\"", cmd.kind);
    }
    let name = ctx.oracle.machine_name().to_string();
    finish(&cmd, &name, report, started, ok)
}

fn average_cmd(cmd: AverageCmd) -> Result<bool> {
    let started = Instant::now();
    let ctx = context_for(&cmd.common)?;
    let gamma = ParamTransition::gaussian_rows();
    let m = SpaceMeasure::uniform("params", rat(0, 1), rat(1, 1));
    let seed = if cmd.common.seed == 0 {
        suites::AVERAGED_SUITE_SEED
    } else {
        cmd.common.seed
    };
    let r = alginfo::bounds::averaged_transition_expectation(
        &gamma,
        &m,
        cmd.samples,
        seed,
        cmd.common.depth,
        &ctx.basis,
        &ctx.oracle,
    )?;
    let mut report = Report::new(
        "average",
        vec![
            "transition",
            "params",
            "samples",
            "mc_mean",
            "mc_std_err",
            "averaged_pow2",
            "dominated",
        ],
    );
    report.push(vec![
        gamma.name.clone(),
        m.name.clone(),
        r.samples.to_string(),
        fmt_f64(r.mc_mean),
        fmt_f64(r.mc_std_err),
        fmt_f64(r.averaged_pow2),
        r.dominated.to_string(),
    ]);
    let name = ctx.oracle.machine_name().to_string();
    finish(&cmd, &name, report, started, r.dominated)
}

fn quantum_cmd(cmd: QuantumCmd) -> Result<bool> {
    use alginfo::quantum::{measurement_info_experiment, Povm};
    let started = Instant::now();
    let povm = match cmd.povm.as_str() {
        "basis1q" => Povm::basis(1),
        "basis2q" => Povm::basis(2),
        "basis3q" => Povm::basis(3),
        "trivial1q" => Povm::trivial(1),
        "trivial2q" => Povm::trivial(2),
        path => {
            let raw = fs::read_to_string(path)
                .with_context(|| format!("reading POVM document {path}"))?;
            Povm::load(&raw)?
        }
    };
    let validation = povm.validate()?;
    // complexities are taken relative to the measurement's encoding
    let oracle = oracle_for(&cmd.common, povm.canonical_encoding())?;
    let seed = if cmd.common.seed == 0 {
        suites::QUANTUM_SUITE_SEED
    } else {
        cmd.common.seed
    };
    let exp = measurement_info_experiment(&povm, cmd.samples, seed, &oracle)?;
    let mut report = Report::new("quantum", vec!["kind", "label", "pow2_ii", "std_err"]);
    report.push(vec![
        "haar-mean".to_string(),
        String::new(),
        fmt_f64(exp.haar_mean_pow2),
        fmt_f64(exp.haar_std_err),
    ]);
    report.push(vec![
        "haar-max".to_string(),
        String::new(),
        fmt_f64(exp.haar_max_pow2),
        String::new(),
    ]);
    let mut adversarial_max = 0.0f64;
    for (label, v) in &exp.adversarial {
        adversarial_max = adversarial_max.max(*v);
        report.push(vec![
            "adversarial".to_string(),
            label.clone(),
            fmt_f64(*v),
            String::new(),
        ]);
    }
    println!(
        "povm {} (completeness residual {:.2e}): haar mean {}, adversarial max {}",
        povm.name, validation.completeness_residual, exp.haar_mean_pow2, adversarial_max
    );
    let mut ok = adversarial_max > exp.haar_mean_pow2;
    if cmd.povm == "basis2q" && cmd.samples == suites::QUANTUM_SUITE_SAMPLES {
        if let Some(frozen) = frozen_for(&cmd.common) {
            if seed == suites::QUANTUM_SUITE_SEED {
                ok &= (exp.haar_mean_pow2 - frozen.quantum_haar_mean).abs()
                    <= 3.0 * frozen.quantum_haar_std_err + 1e-9;
            }
        }
    }
    let name = oracle.machine_name().to_string();
    finish(&cmd, &name, report, started, ok)
}

fn freeze_cmd(cmd: FreezeCmd) -> Result<bool> {
    let started = Instant::now();
    if cmd.common.machine != "m2cat" {
        bail!("baselines are certified on the standard machine; run with --machine m2cat");
    }
    let ctx = context_for(&cmd.common)?;
    let frozen = FrozenBaselines::compute(&ctx);
    let out_dir = cmd.common.out_dir();
    fs::create_dir_all(&out_dir)?;
    let path = out_dir.join("frozen.json");
    fs::write(&path, frozen.to_json())?;
    println!("wrote {}", path.display());
    println!(
        "channel min gap {}, transition min gap {}, convolution min gap {}",
        frozen.channel_min_gap, frozen.transition_min_gap, frozen.convolution_min_gap
    );
    println!(
        "transfer slack max {}, cover slack max {}",
        frozen.transfer_slack_max, frozen.cover_slack_max
    );
    let mut report = Report::new("freeze", vec!["key", "value"]);
    let value = serde_json::to_value(&frozen)?;
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            report.push(vec![k, v.to_string()]);
        }
    }
    let name = ctx.oracle.machine_name().to_string();
    finish(&cmd, &name, report, started, true)
}
