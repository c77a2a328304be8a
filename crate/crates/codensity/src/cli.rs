//! Command-line entry points.

use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use codensity_core::fiber::{FiberElement, FiberKind, Relation};
use codensity_core::fixpoint::is_bisimulation;
use codensity_core::game::{extract_strategies, verify_invariant, Player};
use codensity_core::instances::{
    build_desharnais_game, build_prob_game, hausdorff_codensity, hausdorff_distance,
    translate_strategy_desharnais_to_fkp, translate_strategy_fkp_to_desharnais, Instance,
};
use codensity_core::rational;
use serde_json::{json, Value};

use crate::error::{AppError, Result};
use crate::export::arena_dot;
use crate::format::{fixture_document, parse_document, parse_pair, parse_state_set, Document};
use crate::report::{normalize, pair_game, solve, NumberFormat, SolveOptions};
use crate::session::{MoveError, SessionRecord};

#[derive(Parser, Debug)]
#[command(name = "codensity", version, about = "Codensity bisimilarities and their games on finite systems")]
pub struct Cli {
    /// Tolerance of the metric iteration, e.g. `1e-6` or `1/1000`.
    #[arg(long, global = true)]
    eps: Option<String>,
    /// Iteration cap for metric solving, step cap for plays.
    #[arg(long, global = true)]
    cap: Option<usize>,
    /// Seed for simulated plays.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the game arena as Graphviz DOT.
    #[arg(long, global = true, value_name = "FILE")]
    emit_dot: Option<PathBuf>,
    /// Write the report as JSON.
    #[arg(long, global = true, value_name = "FILE")]
    emit_json: Option<PathBuf>,
    /// Number rendering: `rational` or `decimal`.
    #[arg(long, global = true, default_value = "rational")]
    format: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the fixed point and the winning region.
    Solve {
        /// System file, or the name of a built-in example.
        system: String,
        #[arg(long)]
        instance: String,
    },
    /// Play against the engine on the terminal.
    Play {
        system: String,
        #[arg(long)]
        instance: String,
        /// `(x,y)` for pair games, `(x,y,ε)` for the metric game, a
        /// topology for the topology game.
        #[arg(long)]
        start: String,
        /// The side you play.
        #[arg(long, default_value = "duplicator")]
        side: String,
    },
    /// Translate a Duplicator strategy between the two probabilistic games.
    Translate {
        system: String,
        #[arg(long, value_enum)]
        from: GameFamily,
        #[arg(long)]
        start: String,
        /// Random Spoiler plays used to verify the translated strategy.
        #[arg(long, default_value_t = 500)]
        plays: usize,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    #[command(subcommand)]
    Check(Check),
    /// Serve the JSON API and, optionally, the web client.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        #[arg(long = "static", value_name = "DIR")]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum Check {
    /// Whether a relation is a bisimulation, i.e. below its transform.
    Bisimulation {
        system: String,
        #[arg(long)]
        instance: String,
        /// Pairs such as `(p,p),(q,q)`.
        #[arg(long)]
        relation: String,
    },
    /// Whether a set of pair positions is a Duplicator invariant.
    Invariant {
        system: String,
        #[arg(long)]
        instance: String,
        #[arg(long)]
        relation: String,
    },
    /// Hausdorff distance of two subsets, directly and as a codensity value.
    Hausdorff {
        system: String,
        #[arg(long)]
        s: String,
        #[arg(long)]
        t: String,
    },
    /// Compare the three transfer fixed points on a Kripke frame.
    Transfer { system: String },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GameFamily {
    Desharnais,
    Fkp,
}

struct Io<'a> {
    input: &'a mut dyn BufRead,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

fn load(system: &str) -> Result<Document> {
    let path = Path::new(system);
    if path.exists() {
        let text = fs::read_to_string(path)?;
        return Ok(parse_document(&text)?);
    }
    let name = system.trim_end_matches(".json");
    let name = Path::new(name).file_name().and_then(|n| n.to_str()).unwrap_or(name);
    fixture_document(name).ok_or_else(|| AppError::Parse(format!("{system}: no such file or built-in example")))
}

fn instance(text: &str) -> Result<Instance> {
    Ok(text.parse::<Instance>()?)
}

/// `(a,b),(c,d)` with optional surrounding braces.
fn parse_relation(doc: &Document, text: &str) -> Result<Relation> {
    let c = doc.carrier();
    let body = text.trim().trim_start_matches('{').trim_end_matches('}');
    let mut pairs = Vec::new();
    for chunk in body.split(')') {
        let chunk = chunk.trim().trim_start_matches(',').trim();
        if chunk.is_empty() {
            continue;
        }
        pairs.push(parse_pair(c, &format!("{chunk})"))?);
    }
    Ok(Relation::from_pairs(c.len(), pairs))
}

fn json_or_string(text: &str) -> Value {
    let t = text.trim();
    if t.starts_with('{') || t.starts_with('[') || t.starts_with('"') {
        if let Ok(v) = serde_json::from_str(t) {
            return v;
        }
    }
    Value::String(t.to_owned())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| AppError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

impl Cli {
    fn options(&self) -> Result<SolveOptions> {
        Ok(SolveOptions {
            eps: self.eps.as_deref().map(rational::parse).transpose()?,
            cap: self.cap,
            format: NumberFormat::parse(&self.format)?,
        })
    }

    fn execute(&self, io: &mut Io) -> Result<()> {
        match &self.command {
            Command::Solve { system, instance: inst } => self.solve(io, system, inst),
            Command::Play { system, instance: inst, start, side } => self.play(io, system, inst, start, side),
            Command::Translate { system, from, start, plays, out } => {
                self.translate(io, system, *from, start, *plays, out.as_deref())
            }
            Command::Check(check) => self.check(io, check),
            Command::Serve { bind, static_dir } => {
                let runtime = tokio::runtime::Runtime::new()?;
                runtime.block_on(crate::server::serve(bind, static_dir.clone()))
            }
        }
    }

    fn solve(&self, io: &mut Io, system: &str, inst: &str) -> Result<()> {
        let doc = load(system)?;
        let instance = instance(inst)?;
        let report = solve(&doc, instance, &self.options()?)?;
        io.out.write_all(report.text.as_bytes())?;
        if let Some(path) = &self.emit_json {
            write_file(path, &pretty(&report.json))?;
        }
        if let Some(path) = &self.emit_dot {
            match &report.arena {
                Some((arena, invariant)) => write_file(path, &arena_dot(arena, invariant))?,
                None => writeln!(io.err, "note: {instance} has no explicit arena; no DOT file written")?,
            }
        }
        Ok(())
    }

    fn play(&self, io: &mut Io, system: &str, inst: &str, start: &str, side: &str) -> Result<()> {
        let doc = load(system)?;
        let instance = instance(inst)?;
        let human = Player::parse(side)?;
        let mut session = SessionRecord::new("terminal".into(), doc, instance, &json_or_string(start), human, self.cap)?;
        writeln!(io.out, "you play {human}; the engine plays {}", human.opponent())?;
        let mut shown = 1;
        let show_new = |io: &mut Io, session: &SessionRecord, shown: &mut usize, mover_is_human: bool| -> Result<()> {
            let transcript = session.play.transcript();
            for (i, label) in transcript.iter().enumerate().skip(*shown) {
                let who = if mover_is_human && i == *shown { "you" } else { "engine" };
                writeln!(io.out, "{who}: {label}")?;
            }
            *shown = transcript.len();
            Ok(())
        };
        writeln!(io.out, "start: {}", session.play.transcript()[0])?;
        show_new(io, &session, &mut shown, false)?;
        let mut line = String::new();
        while !session.play.finished() {
            let snap = session.snapshot();
            writeln!(io.out, "position: {} ({} to move)", snap["positionLabel"].as_str().unwrap_or(""), snap["toMove"].as_str().unwrap_or(""))?;
            describe_moves(io.out, &snap)?;
            write!(io.out, "> ")?;
            io.out.flush()?;
            line.clear();
            if io.input.read_line(&mut line)? == 0 {
                writeln!(io.out)?;
                writeln!(io.out, "input ended before the play finished")?;
                return Ok(());
            }
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            if text == "quit" {
                writeln!(io.out, "play abandoned")?;
                return Ok(());
            }
            match session.submit(&json_or_string(text)) {
                Ok(()) => show_new(io, &session, &mut shown, true)?,
                Err(MoveError::Illegal { message, .. }) => writeln!(io.out, "illegal move: {message}")?,
                Err(MoveError::OutOfTurn(message)) => return Err(AppError::IllegalMove(message)),
            }
        }
        let snap = session.snapshot();
        writeln!(io.out, "result: {}", snap["outcome"].as_str().unwrap_or(""))?;
        if let Some(path) = &self.emit_json {
            write_file(path, &pretty(&snap))?;
        }
        Ok(())
    }

    fn translate(
        &self,
        io: &mut Io,
        system: &str,
        from: GameFamily,
        start: &str,
        plays: usize,
        out: Option<&Path>,
    ) -> Result<()> {
        let doc = load(system)?;
        let chain = match &doc {
            Document::System(s) => s.as_markov().map_err(|_| {
                AppError::Incompatible("strategy translation needs a Markov system".into())
            })?,
            Document::Metric(..) => {
                return Err(AppError::Incompatible("strategy translation needs a Markov system".into()))
            }
        };
        let c = chain.carrier();
        let (x, y) = parse_pair(c, start)?;
        let fkp = build_prob_game(chain)?;
        let desh = build_desharnais_game(chain)?;
        let start_label = format!("({},{})", c.name(x), c.name(y));
        if !desh.is_winning(x, y) || !fkp.is_winning(x, y) {
            return Err(AppError::NotWinning(format!("Duplicator does not win from {start_label}")));
        }
        let verification = json!({ "plays": plays, "won": plays, "seed": self.seed, "spoiler": "uniformly random legal moves" });
        let doc_json = match from {
            GameFamily::Desharnais => {
                let (dup, _) = extract_strategies(desh.arena(), &desh.solved.solution);
                let t = translate_strategy_desharnais_to_fkp(chain, &fkp, &desh, &dup, (x, y), plays, self.seed)?;
                let arena = fkp.arena();
                let entries: Vec<Value> = t
                    .strategy
                    .table
                    .iter()
                    .map(|(&(prev, at), &answer)| {
                        json!({ "after": arena.label(prev), "at": arena.label(at), "answer": arena.label(answer) })
                    })
                    .collect();
                writeln!(io.out, "desharnais -> fkp from {start_label}: {} answers", entries.len())?;
                writeln!(
                    io.out,
                    "branches: first state heavier {}, second state heavier {}",
                    t.coverage.first_heavier, t.coverage.second_heavier
                )?;
                json!({
                    "from": "desharnais",
                    "to": "fkp",
                    "start": start_label,
                    "memory": "previous Spoiler position",
                    "strategy": entries,
                    "coverage": { "firstHeavier": t.coverage.first_heavier, "secondHeavier": t.coverage.second_heavier },
                    "verification": verification,
                })
            }
            GameFamily::Fkp => {
                let t = translate_strategy_fkp_to_desharnais(&desh, &fkp.region(), (x, y), plays, self.seed)?;
                let arena = desh.arena();
                let entries: Vec<Value> = t
                    .strategy
                    .choice
                    .iter()
                    .map(|(&at, &answer)| json!({ "at": arena.label(at), "answer": arena.label(answer) }))
                    .collect();
                let closure: Vec<Value> = t
                    .closure_table
                    .iter()
                    .map(|&(z, zbar)| json!({ "z": c.subset_names(z), "closure": c.subset_names(zbar) }))
                    .collect();
                writeln!(io.out, "fkp -> desharnais from {start_label}: {} answers", entries.len())?;
                writeln!(io.out, "closure table: {} sets, Z ⊆ Z̄ checked {} times", closure.len(), t.subset_checks)?;
                json!({
                    "from": "fkp",
                    "to": "desharnais",
                    "start": start_label,
                    "memory": "none",
                    "strategy": entries,
                    "closure": closure,
                    "subsetChecks": t.subset_checks,
                    "verification": verification,
                })
            }
        };
        writeln!(io.out, "verified: Duplicator won {plays} of {plays} random Spoiler plays (seed {})", self.seed)?;
        match out {
            Some(path) => {
                write_file(path, &pretty(&doc_json))?;
                writeln!(io.out, "strategy written to {}", path.display())?;
            }
            None => io.out.write_all(pretty(&doc_json).as_bytes())?,
        }
        Ok(())
    }

    fn check(&self, io: &mut Io, check: &Check) -> Result<()> {
        match check {
            Check::Bisimulation { system, instance: inst, relation } => {
                let doc = load(system)?;
                let instance = instance(inst)?;
                let Document::System(s) = &doc else {
                    return Err(AppError::Incompatible(format!("{instance} needs a transition system")));
                };
                instance.check_system(s)?;
                let s = normalize(instance, s.clone());
                let c = s.carrier();
                let rel = parse_relation(&doc, relation)?;
                let element = match instance.kind() {
                    Some(FiberKind::EquivRel) => FiberElement::equivalence(c, rel)?,
                    Some(FiberKind::Preorder) => FiberElement::preorder(c, rel)?,
                    Some(FiberKind::EndoRel) => FiberElement::endorelation(c, rel)?,
                    _ => {
                        return Err(AppError::Incompatible(format!("{instance} is not a relational instance")));
                    }
                };
                let yes = is_bisimulation(&s, &instance.params(&s)?, &element)?;
                writeln!(io.out, "bisimulation: {}", if yes { "yes" } else { "no" })?;
                Ok(())
            }
            Check::Invariant { system, instance: inst, relation } => {
                let doc = load(system)?;
                let instance = instance(inst)?;
                let Document::System(s) = &doc else {
                    return Err(AppError::Incompatible(format!("{instance} needs a transition system")));
                };
                instance.check_system(s)?;
                let s = normalize(instance, s.clone());
                let rel = parse_relation(&doc, relation)?;
                let (arena, candidate) = match instance {
                    Instance::ProbBisimDesharnais => {
                        let g = build_desharnais_game(s.as_markov()?)?;
                        let cand = rel.pairs().map(|(x, y)| g.position(x, y)).collect();
                        (g.solved.arena, cand)
                    }
                    Instance::BisimMetric | Instance::DfaTopology(_) | Instance::Hausdorff => {
                        return Err(AppError::Incompatible(format!("{instance} has no pair arena")));
                    }
                    _ => {
                        let g = pair_game(instance, &s)?;
                        let cand = rel.pairs().map(|(x, y)| g.position(x, y)).collect();
                        (g.solved.arena, cand)
                    }
                };
                let yes = verify_invariant(&arena, &candidate);
                writeln!(io.out, "invariant: {}", if yes { "yes" } else { "no" })?;
                Ok(())
            }
            Check::Hausdorff { system, s, t } => {
                let doc = load(system)?;
                let Document::Metric(c, d) = &doc else {
                    return Err(AppError::Incompatible("hausdorff needs a metric space document".into()));
                };
                let fmt = NumberFormat::parse(&self.format)?;
                let (s, t) = (parse_state_set(c, s)?, parse_state_set(c, t)?);
                let direct = hausdorff_distance(d, s, t)?;
                let codensity = hausdorff_codensity(d, s, t)?;
                writeln!(io.out, "S = {}, T = {}", c.render_subset(s), c.render_subset(t))?;
                writeln!(io.out, "direct: {}", fmt.render(&direct))?;
                writeln!(io.out, "codensity: {}", fmt.render(&codensity))?;
                if direct != codensity {
                    return Err(AppError::CrossCheck("direct and codensity Hausdorff distances differ".into()));
                }
                writeln!(io.out, "cross-check: ok")?;
                Ok(())
            }
            Check::Transfer { system } => self.solve(io, system, "transfer-check"),
        }
    }
}

fn describe_moves(out: &mut dyn Write, snap: &Value) -> std::io::Result<()> {
    let show = |v: &Value| match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if let Some(moves) = snap.get("legalMoveLabels").and_then(Value::as_array) {
        let items: Vec<String> = moves.iter().map(show).collect();
        writeln!(out, "legal moves: {}", items.join(" | "))?;
    }
    if let Some(hint) = snap.get("oracleHint").and_then(Value::as_str) {
        writeln!(out, "moves: {hint}")?;
        if let Some(sample) = snap.get("sampleMoveLabels").and_then(Value::as_array).and_then(|s| s.first()) {
            writeln!(out, "for example: {}", show(sample))?;
        }
    }
    Ok(())
}

/// Parses arguments and runs a command; returns the process exit code.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return e.exit_code();
        }
    };
    let mut io = Io { input, out, err };
    match cli.execute(&mut io) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            e.exit_code()
        }
    }
}
