//! Command-line front end. Check-style subcommands write JSON lines;
//! `covernum` prints plain numbers.
//!
//! Exit status: 0 on success, 1 when a verification fails, 2 on usage or
//! input errors.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::conditions::{
    level_size_check, to_normal_form, validate_condition, Coord, CoordId, CoordTriple, NormedTree, ProductCondition,
};
use crate::corpus;
use crate::covernum::{cover_number_bounds, cover_number_exact_guarded, greedy_cover_guarded, Exact};
use crate::error::Error;
use crate::extraction::{avoid_slalom, check_decides, densify_decide, extract_slalom, FiniteName};
use crate::game::{play, Bookkeeping, Minimal, Spendthrift, Thinning, Widening};
use crate::nat::BoundFn;
use crate::norms::{cd_complete_check_guarded, norm_table, NormSpec};
use crate::reductions::{
    allfunctions_system, allfunctions_system_literal, block_coding_system, check_condition_c_guarded, transfer_family,
    ConditionC, TransferSystem,
};
use crate::report::Report;
use crate::scales::{
    gen_blass_family, gen_square_pair, progressivity_profile, separation_profile, validate_triple, ScaleSeq, Triple,
    BLASS_DEMO_BASE,
};
use crate::slaloms::{covers_guarded, SlalomFamily, DEFAULT_GUARD};

#[derive(Parser, Debug)]
#[command(
    name = "slalom",
    version,
    about = "Finite slalom covering, normed trees and slalom extraction"
)]
pub struct Cli {
    /// Seed for randomized instances.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Upper limit on brute-force search spaces.
    #[arg(long, global = true, default_value_t = DEFAULT_GUARD)]
    pub guard: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate a scale and print its growth profile.
    Scale(ScaleArgs),
    /// Validate or generate triples on a scale.
    Triple(TripleArgs),
    /// Bounds and exact values of covering numbers.
    Covernum(CovernumArgs),
    /// Build transfer systems and check the preimage condition.
    Reduce(ReduceArgs),
    /// Norm tables and completeness checks.
    Norm(NormArgs),
    /// Validate, normalize or list levels of a condition.
    Condition(ConditionArgs),
    /// Play the fusion game.
    Game(GameArgs),
    /// Extract a slalom from a condition and a name.
    Extract(ExtractArgs),
    /// Run the whole pipeline on generated instances.
    Demo(DemoArgs),
}

#[derive(Args, Debug)]
pub struct ScaleSource {
    /// Built-in scale: T1, T2, SQ or BLASS.
    #[arg(long)]
    pub scale: Option<String>,
    /// Scale JSON file (`{"lo": [..], "hi": [..]}`).
    #[arg(long)]
    pub scale_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScaleArgs {
    #[command(flatten)]
    pub source: ScaleSource,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Generator {
    Blass,
    Square,
}

#[derive(Args, Debug)]
pub struct TripleArgs {
    #[command(flatten)]
    pub source: ScaleSource,
    #[arg(long, value_delimiter = ',')]
    pub f: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    pub g: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    pub h: Vec<u64>,
    /// Generate instead of reading `--f/--g/--h`.
    #[arg(long, value_enum)]
    pub generate: Option<Generator>,
    /// Branch of the generator tree, as 0/1 digits.
    #[arg(long, value_delimiter = ',')]
    pub path: Vec<u8>,
    /// Logarithm base for the tree generator.
    #[arg(long, default_value_t = BLASS_DEMO_BASE)]
    pub log_base: f64,
}

#[derive(Args, Debug)]
pub struct CovernumArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub f: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub g: Vec<u64>,
    /// Compute the exact value.
    #[arg(long)]
    pub exact: bool,
    /// Print the size of a greedy cover.
    #[arg(long)]
    pub greedy: bool,
    /// Largest family size the exact search tries.
    #[arg(long, default_value_t = 64)]
    pub budget: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SystemKind {
    Allfn,
    AllfnLiteral,
    Blocks,
    File,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    #[arg(long, value_enum)]
    pub system: SystemKind,
    #[arg(long, default_value_t = 1)]
    pub n: u64,
    /// Number of blocks for the all-functions systems.
    #[arg(long, default_value_t = 1)]
    pub blocks: usize,
    #[arg(long, value_delimiter = ',')]
    pub f: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    pub g: Vec<u64>,
    /// Block starts for the block coding system.
    #[arg(long, value_delimiter = ',')]
    pub cuts: Vec<usize>,
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Check the preimage condition.
    #[arg(long)]
    pub check_c: bool,
    /// A covering family (JSON list of slaloms) to push forward.
    #[arg(long)]
    pub family: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct NormArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub g: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub h: Vec<u64>,
    /// Print `‖f(k)‖_k` per level.
    #[arg(long, value_delimiter = ',')]
    pub f: Vec<u64>,
    /// Check `(c, d)`-completeness, given as `c,d`.
    #[arg(long, value_delimiter = ',')]
    pub complete: Vec<u64>,
    /// Ground set size for the completeness check.
    #[arg(long, default_value_t = 8)]
    pub size: u64,
    #[arg(long, default_value_t = 0)]
    pub level: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ConditionAction {
    Validate,
    Normalize,
    ShowLevels,
}

#[derive(Args, Debug)]
pub struct ConditionArgs {
    #[arg(value_enum)]
    pub action: ConditionAction,
    /// Condition JSON file, `-` for stdin.
    #[arg(long)]
    pub file: PathBuf,
    #[command(flatten)]
    pub source: ScaleSource,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GameAction {
    Play,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AccountantKind {
    Bookkeeping,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SpendthriftKind {
    Minimal,
    Thinning,
    Widening,
}

#[derive(Args, Debug)]
pub struct GameArgs {
    #[arg(value_enum)]
    pub action: GameAction,
    /// Starting condition; a random comb when omitted.
    #[arg(long)]
    pub file: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub rounds: usize,
    #[arg(long, value_enum, default_value = "bookkeeping")]
    pub accountant: AccountantKind,
    #[arg(long, value_enum, default_value = "minimal")]
    pub spendthrift: SpendthriftKind,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[arg(long)]
    pub condition: PathBuf,
    #[arg(long)]
    pub name: PathBuf,
    /// Parameters `{"f": [..], "g": [..], "h": [..]}` bounding the name.
    #[arg(long)]
    pub xi: PathBuf,
    /// Coordinates whose splits are read fiberwise.
    #[arg(long = "A", value_delimiter = ',')]
    pub a: Vec<String>,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    #[arg(long, default_value = "T2")]
    pub scale: String,
    #[arg(long, default_value_t = 10)]
    pub instances: usize,
}

enum Failure {
    Usage(String),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command,
/// writing output to `out` and diagnostics to `err`. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(Failure::Verification) => 1,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> CliResult {
    match &cli.command {
        Command::Scale(a) => cmd_scale(a, out),
        Command::Triple(a) => cmd_triple(a, out),
        Command::Covernum(a) => cmd_covernum(a, cli.guard, out),
        Command::Reduce(a) => cmd_reduce(a, cli.guard, out),
        Command::Norm(a) => cmd_norm(a, cli.guard, out),
        Command::Condition(a) => cmd_condition(a, out),
        Command::Game(a) => cmd_game(a, cli.seed, out),
        Command::Extract(a) => cmd_extract(a, out),
        Command::Demo(a) => cmd_demo(a, cli.seed, out),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> std::result::Result<T, Failure> {
    let text = if path == Path::new("-") {
        std::io::read_to_string(std::io::stdin())?
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_scale(s: &ScaleSource) -> std::result::Result<Option<ScaleSeq>, Failure> {
    match (&s.scale, &s.scale_file) {
        (Some(_), Some(_)) => Err(Failure::Usage("give --scale or --scale-file, not both".into())),
        (Some(name), None) => ScaleSeq::preset(name)
            .map(Some)
            .ok_or_else(|| Failure::Usage(format!("unknown scale {name}; known: {}", ScaleSeq::PRESETS.join(", ")))),
        (None, Some(p)) => Ok(Some(read_json(p)?)),
        (None, None) => Ok(None),
    }
}

fn finish(report: &Report, out: &mut dyn Write) -> CliResult {
    report.write_to(out)?;
    if report.all_pass() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn cmd_scale(a: &ScaleArgs, out: &mut dyn Write) -> CliResult {
    let scale = load_scale(&a.source)?.ok_or_else(|| Failure::Usage("a scale is required".into()))?;
    let mut r = Report::new();
    r.push(
        "scale",
        true,
        json!({"window": scale.window(), "lo": scale.lo_fn(), "hi": scale.hi_fn(), "growth": scale.growth_profile()}),
    );
    finish(&r, out)
}

fn cmd_triple(a: &TripleArgs, out: &mut dyn Write) -> CliResult {
    let scale = load_scale(&a.source)?.ok_or_else(|| Failure::Usage("a scale is required".into()))?;
    let mut r = Report::new();
    let triples: Vec<crate::Result<Triple>> = match a.generate {
        Some(Generator::Blass) => {
            let path: Vec<bool> = if a.path.is_empty() {
                vec![false; scale.window()]
            } else {
                a.path.iter().map(|&d| d != 0).collect()
            };
            vec![gen_blass_family(&scale, &path, a.log_base)]
        }
        Some(Generator::Square) => match gen_square_pair(&scale) {
            Ok((x, y)) => vec![Ok(x), Ok(y)],
            Err(e) => vec![Err(e)],
        },
        None => {
            let b = |v: &[u64]| BoundFn::from_u64s(v);
            vec![b(&a.f).and_then(|f| validate_triple(f, b(&a.g)?, b(&a.h)?, scale.clone()))]
        }
    };
    for t in &triples {
        match t {
            Ok(t) => r.push(
                "triple",
                true,
                json!({"f": t.f, "g": t.g, "h": t.h, "progressivity": progressivity_profile(t)}),
            ),
            Err(e) => r.push("triple", false, json!(e.to_string())),
        }
    }
    if let [Ok(x), Ok(y)] = &triples[..] {
        r.record("separation", &separation_profile(x, y));
    }
    finish(&r, out)
}

fn cmd_covernum(a: &CovernumArgs, guard: u64, out: &mut dyn Write) -> CliResult {
    let f = BoundFn::from_u64s(&a.f)?;
    let g = BoundFn::from_u64s(&a.g)?;
    if a.exact {
        match cover_number_exact_guarded(&f, &g, a.budget, guard)? {
            Exact::Found { size, .. } => writeln!(out, "{size}")?,
            Exact::ExceedsBudget { budget } => {
                writeln!(out, "> {budget}")?;
                return Err(Failure::Verification);
            }
        }
    } else if a.greedy {
        writeln!(out, "{}", greedy_cover_guarded(&f, &g, guard)?.len())?;
    } else {
        let b = cover_number_bounds(&f, &g)?;
        writeln!(out, "lower {}", b.lower)?;
        writeln!(out, "upper {}", b.upper)?;
    }
    Ok(())
}

fn cmd_reduce(a: &ReduceArgs, guard: u64, out: &mut dyn Write) -> CliResult {
    let t: TransferSystem = match a.system {
        SystemKind::Allfn => allfunctions_system(a.n, a.blocks)?,
        SystemKind::AllfnLiteral => allfunctions_system_literal(a.n, a.blocks)?,
        SystemKind::Blocks => block_coding_system(&BoundFn::from_u64s(&a.f)?, &BoundFn::from_u64s(&a.g)?, &a.cuts)?,
        SystemKind::File => read_json(
            a.file
                .as_deref()
                .ok_or_else(|| Failure::Usage("--file is required".into()))?,
        )?,
    };
    let mut r = Report::new();
    r.push(
        "system",
        true,
        json!({"f": t.f(), "g": t.g(), "f_prime": t.f_prime(), "g_prime": t.g_prime(), "blocks": t.blocks()}),
    );
    if a.check_c {
        match check_condition_c_guarded(&t, guard)? {
            ConditionC::Holds => r.push("condition-c", true, serde_json::Value::Null),
            ConditionC::Fails {
                block,
                choice,
                preimage,
            } => r.push(
                "condition-c",
                false,
                json!({"block": block, "choice": choice, "preimage": preimage}),
            ),
        }
    }
    if let Some(p) = &a.family {
        let fam: SlalomFamily = read_json(p)?;
        r.record("pushforward", &transfer_family(&t, &fam).map(|f| f.len()));
    }
    finish(&r, out)
}

fn cmd_norm(a: &NormArgs, guard: u64, out: &mut dyn Write) -> CliResult {
    let spec = NormSpec::new(a.g.clone(), a.h.clone())?;
    let mut r = Report::new();
    if !a.f.is_empty() {
        let table = norm_table(&spec, &BoundFn::from_u64s(&a.f)?)?;
        r.push("norm-table", true, json!(table));
    }
    if !a.complete.is_empty() {
        let [c, d] = a.complete[..] else {
            return Err(Failure::Usage("--complete takes c,d".into()));
        };
        if a.level >= spec.window() {
            return Err(Failure::Usage(format!("level {} outside the window", a.level)));
        }
        let res = cd_complete_check_guarded(|n| spec.norm(a.level, n), a.size, c, d, guard)?;
        match res {
            None => r.push("cd-complete", true, json!({"c": c, "d": d, "size": a.size})),
            Some(cx) => r.push("cd-complete", false, serde_json::to_value(cx).map_err(Error::from)?),
        }
    }
    finish(&r, out)
}

fn cmd_condition(a: &ConditionArgs, out: &mut dyn Write) -> CliResult {
    let p: ProductCondition = read_json(&a.file)?;
    let scale = load_scale(&a.source)?;
    let mut r = Report::new();
    match a.action {
        ConditionAction::Validate => {
            r.record("valid", &validate_condition(&p));
            // normal form is a shape, not a validity requirement
            r.push(
                "shape",
                true,
                json!({"normal_form": p.is_normal_form(), "depth": p.depth(), "coords": p.coords().len()}),
            );
            if let Some(s) = &scale {
                r.record("level-size", &level_size_check(&p, s));
            }
        }
        ConditionAction::Normalize => {
            let q = to_normal_form(&p)?;
            serde_json::to_writer(&mut *out, &q).map_err(Error::from)?;
            writeln!(out)?;
            return Ok(());
        }
        ConditionAction::ShowLevels => {
            for k in 0..=p.depth() {
                let view = p.level(k)?;
                serde_json::to_writer(&mut *out, &view).map_err(Error::from)?;
                writeln!(out)?;
            }
            serde_json::to_writer(&mut *out, &json!({"splits": p.splits()})).map_err(Error::from)?;
            writeln!(out)?;
            return Ok(());
        }
    }
    finish(&r, out)
}

fn cmd_game(a: &GameArgs, seed: u64, out: &mut dyn Write) -> CliResult {
    let p = match &a.file {
        Some(f) => to_normal_form(&read_json(f)?)?,
        None => corpus::random_comb_condition(&mut corpus::rng(seed), 3, 5)?,
    };
    let GameAction::Play = a.action;
    let AccountantKind::Bookkeeping = a.accountant;
    let spend: Box<dyn Spendthrift> = match a.spendthrift {
        SpendthriftKind::Minimal => Box::new(Minimal),
        SpendthriftKind::Thinning => Box::new(Thinning {
            sets: corpus::upper_half_sets(&p),
        }),
        SpendthriftKind::Widening => {
            let first = p
                .coords()
                .values()
                .next()
                .ok_or_else(|| Failure::Usage("empty condition".into()))?;
            let t = first.tree.triple().clone();
            let tree = NormedTree::from_nodes(p.depth(), t, (0..=p.depth()).map(|k| vec![0; k]))?;
            Box::new(Widening {
                template: Coord { tree, zeta: first.zeta },
            })
        }
    };
    let res = play(&p, &mut Bookkeeping, spend.as_ref(), a.rounds)?;
    serde_json::to_writer(&mut *out, &json!({"start": p, "transcript": res})).map_err(Error::from)?;
    writeln!(out)?;
    let mut r = Report::new();
    match &res.fused {
        Some(q) => r.record("fused-valid", &validate_condition(q)),
        None => r.push(
            "fused-valid",
            false,
            serde_json::to_value(&res.outcome).map_err(Error::from)?,
        ),
    }
    finish(&r, out)
}

fn cmd_extract(a: &ExtractArgs, out: &mut dyn Write) -> CliResult {
    let p: ProductCondition = read_json(&a.condition)?;
    let name: FiniteName = read_json(&a.name)?;
    let xi: CoordTriple = read_json(&a.xi)?;
    let set: BTreeSet<CoordId> = a.a.iter().map(CoordId::new).collect();
    let mut r = Report::new();
    r.record("extract", &extract_slalom(&p, &name, &set, &xi));
    finish(&r, out)
}

fn cmd_demo(a: &DemoArgs, seed: u64, out: &mut dyn Write) -> CliResult {
    let scale = ScaleSeq::preset(&a.scale).ok_or_else(|| Failure::Usage(format!("unknown scale {}", a.scale)))?;
    let mut r = Report::new();
    r.push("scale", true, json!({"name": a.scale, "window": scale.window()}));

    // the parameter generators run on their own scales
    let blass = ScaleSeq::preset("BLASS").expect("preset");
    let w = blass.window();
    let left = gen_blass_family(&blass, &vec![false; w], BLASS_DEMO_BASE);
    let right = gen_blass_family(&blass, &vec![true; w], BLASS_DEMO_BASE);
    r.record(
        "tree-family",
        &left
            .as_ref()
            .map(|_| ())
            .and(right.as_ref().map(|_| ()))
            .map_err(Clone::clone),
    );
    if let (Ok(x), Ok(y)) = (&left, &right) {
        r.record("tree-family-separation", &separation_profile(x, y));
    }
    let sq = ScaleSeq::preset("SQ").expect("preset");
    r.record("square-pair", &gen_square_pair(&sq).map(|_| ()));

    let mut rng = corpus::rng(seed);
    for i in 0..a.instances {
        let inst = match corpus::random_extraction_instance(&mut rng, &scale, 4) {
            Ok(x) => x,
            Err(e) => {
                r.push(format!("instance-{i}"), false, json!(e.to_string()));
                continue;
            }
        };
        r.record(format!("instance-{i}-preconditions"), &inst.check(&scale));
        let dense = densify_decide(&inst.condition, &inst.name);
        r.record(
            format!("instance-{i}-densify"),
            &dense
                .as_ref()
                .map(|q| check_decides(q, &inst.name).is_ok())
                .map_err(Clone::clone),
        );
        let ex = extract_slalom(&inst.condition, &inst.name, &inst.a, &inst.xi);
        r.record(
            format!("instance-{i}-extract"),
            &ex.map(|e| {
                json!({
                    "branches": e.branches_checked,
                    "cases": e.levels.iter().map(|l| l.case).collect::<Vec<_>>(),
                    "widths": e.levels.iter().map(|l| l.width()).collect::<Vec<_>>(),
                })
            }),
        );
        if let Some(d) = &inst.designated {
            let avoided = corpus::adversarial_slaloms(&mut rng, &inst.condition, d, 3).and_then(|bs| {
                bs.iter()
                    .map(|b| avoid_slalom(&inst.condition, d, b).map(|(_, k)| k))
                    .collect::<crate::Result<Vec<_>>>()
            });
            r.record(format!("instance-{i}-avoid"), &avoided);
        }
    }
    r.record("coverage-sanity", &{
        let f = BoundFn::from_u64s(&[3, 3]).expect("bound");
        let g = BoundFn::from_u64s(&[2, 2]).expect("bound");
        crate::covernum::grid_family(&f, &g)
            .and_then(|fam| covers_guarded(&fam, &g, &f, DEFAULT_GUARD))
            .map(|c| c.is_cover())
    });
    finish(&r, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("slalom").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap() + &String::from_utf8(err).unwrap())
    }

    #[test]
    fn covernum_exact() {
        assert_eq!(
            run_str(&["covernum", "--f", "3,3", "--g", "2,2", "--exact"]),
            (0, "3\n".into())
        );
    }

    #[test]
    fn reduce_allfn_passes() {
        let (code, text) = run_str(&["reduce", "--system", "allfn", "--n", "2", "--blocks", "2", "--check-c"]);
        assert_eq!(code, 0, "{text}");
        assert!(text.contains(r#""check":"condition-c","pass":true"#));
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_str(&["frobnicate"]).0, 2);
        assert_eq!(run_str(&["demo", "--scale", "nope"]).0, 2);
    }

    #[test]
    fn demo_is_deterministic() {
        let a = run_str(&["demo", "--scale", "T2", "--instances", "3", "--seed", "5"]);
        let b = run_str(&["demo", "--scale", "T2", "--instances", "3", "--seed", "5"]);
        assert_eq!(a.0, 0, "{}", a.1);
        assert_eq!(a, b);
    }
}
