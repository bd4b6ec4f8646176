use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use refgen_core::bounds::{
    admissible_determinants, check_witnesses, m_lower, mref_ratio, nref_ratio, nref_upper, prime_count_bounds,
    prime_value_bounds, DetShape,
};
use refgen_core::classes::{genus_classes, ExploreOptions};
use refgen_core::pipeline::{run, PipelineOptions, Stage};
use refgen_core::{mass, root_system, GenusSymbol, GramLattice};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "refgen", version, about = "Totally reflective genera of positive definite lattices")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Genus symbol of a Gram matrix.
    Genus {
        #[command(flatten)]
        gram: GramArg,
    },
    /// Exact mass of a genus, given by symbol or Gram matrix.
    Mass {
        #[command(flatten)]
        genus: GenusArg,
    },
    /// Root system of a lattice.
    Roots {
        #[command(flatten)]
        gram: GramArg,
        #[arg(long)]
        json: bool,
    },
    /// Isometry classes of a genus, certified by the mass formula.
    Classes {
        #[command(flatten)]
        genus: GenusArg,
        #[arg(long)]
        json: bool,
    },
    /// Determinant bounds.
    Bounds {
        #[arg(long)]
        dim: u32,
        #[command(subcommand)]
        what: Option<BoundsCmd>,
    },
    /// Classify totally reflective genera.
    Classify {
        #[arg(long)]
        dim: u32,
        #[arg(long, value_enum, default_value = "all")]
        stage: StageArg,
        /// Checkpoint log; completed work found there is skipped.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Restrict to determinants up to this value.
        #[arg(long)]
        max_det: Option<u128>,
        /// Print records as JSON lines instead of text.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Subcommand)]
enum BoundsCmd {
    /// Ratios Nref/M and Mref/M for a determinant such as `3^2*5*7` or `315`.
    Ratio { shape: String },
    /// Bounds on the number of squared and simple primes.
    Counts,
    /// Bounds on the individual primes.
    Primes,
    /// The determinants left by the bounds.
    Dets {
        #[arg(long)]
        list: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Ssf,
    Sf,
    All,
}

#[derive(clap::Args)]
struct GramArg {
    /// Gram matrix: rows separated by `;` or newlines, or `@file`.
    gram: String,
}

impl GramArg {
    fn lattice(&self) -> Result<GramLattice> {
        let text = match self.gram.strip_prefix('@') {
            Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
            None => self.gram.replace(';', "\n"),
        };
        Ok(GramLattice::parse_text(&text)?)
    }
}

#[derive(clap::Args)]
struct GenusArg {
    /// Genus symbol (e.g. `II(3^{-1})`) or, with --gram, a Gram matrix.
    input: String,
    #[arg(long)]
    rank: Option<u32>,
    /// Read the input as a Gram matrix.
    #[arg(long)]
    gram: bool,
}

impl GenusArg {
    fn genus(&self) -> Result<GenusSymbol> {
        if self.gram {
            let l = GramArg { gram: self.input.clone() }.lattice()?;
            return Ok(GenusSymbol::from_lattice(&l));
        }
        Ok(GenusSymbol::parse(&self.input, self.rank)?)
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Genus { gram } => {
            let l = gram.lattice()?;
            println!("{}", GenusSymbol::from_lattice(&l));
        }
        Cmd::Mass { genus } => {
            let g = genus.genus()?;
            println!("{g}\tdet={}\tmass={}", g.det(), mass(&g)?);
        }
        Cmd::Roots { gram, json } => {
            let l = gram.lattice()?;
            let rep = root_system(&l)?;
            if json {
                println!("{}", serde_json::to_string(&rep)?);
            } else {
                println!("{rep}");
            }
        }
        Cmd::Classes { genus, json } => {
            let g = genus.genus()?;
            let set = genus_classes(&g, ExploreOptions::default())?;
            if json {
                println!("{}", serde_json::to_string(&set)?);
            } else {
                println!("{g}\th={}\tmass={}\treflective={}", set.classes.len(), mass(&g)?, set.all_reflective());
                for c in &set.classes {
                    println!("  {:?}\t|O|={}\treflective={}", c.gram.rows(), c.aut_order, c.reflective);
                }
            }
        }
        Cmd::Bounds { dim, what } => bounds(dim, what.unwrap_or(BoundsCmd::Counts))?,
        Cmd::Classify { dim, stage, resume, jobs, max_det, json, quiet } => {
            let mut opts = PipelineOptions::new(dim);
            opts.jobs = jobs;
            opts.log = resume;
            opts.max_det = max_det;
            opts.progress = !quiet;
            let stage = match stage {
                StageArg::Ssf => Stage::Ssf,
                StageArg::Sf => Stage::Sf,
                StageArg::All => Stage::All,
            };
            let rep = run(&opts, stage)?;
            let list = match stage {
                Stage::Ssf => &rep.ssf,
                Stage::Sf => &rep.sf,
                Stage::All => &rep.all,
            };
            for r in list {
                if json {
                    println!("{}", serde_json::to_string(r)?);
                } else {
                    println!("{}", r.line());
                }
            }
            for i in &rep.incomplete {
                eprintln!("INCOMPLETE {}: {}", i.symbol, i.reason);
            }
            eprintln!(
                "audit: {} masses and {} class sets checked, {} violations",
                rep.audit.mass_checked,
                rep.audit.mref_checked,
                rep.audit.violations.len()
            );
            for v in &rep.audit.violations {
                eprintln!("VIOLATION {v}");
            }
            eprintln!(
                "extremes: maximal (r, s) {:?}, largest squared prime {:?}, largest simple prime {:?}",
                rep.extremes.shapes, rep.extremes.max_squared_prime, rep.extremes.max_simple_prime
            );
            eprintln!("{}", rep.summary());
            if !rep.is_complete() {
                bail!("classification incomplete");
            }
        }
    }
    Ok(())
}

fn bounds(dim: u32, what: BoundsCmd) -> Result<()> {
    match what {
        BoundsCmd::Ratio { shape } => {
            let s: DetShape = shape.parse()?;
            println!("det={}\tshape={s}", s.det());
            println!("M(d) in {}", m_lower(&s, dim)?);
            let n = nref_upper(&s, dim, false)?;
            println!("Nref(d) = {}/{}", n.numer(), n.denom());
            println!("Nref/M in {}", nref_ratio(&s, dim)?);
            println!("Mref/M in {}", mref_ratio(&s, dim)?);
        }
        BoundsCmd::Counts => {
            let c = prime_count_bounds(dim)?;
            println!("dim {dim}: at most {} squared primes", c.max_r);
            for (r, s) in c.max_s.iter().enumerate() {
                match s {
                    Some(s) => println!("  r={r}: s <= {s}"),
                    None => println!("  r={r}: impossible"),
                }
            }
            for (w, v) in check_witnesses(dim)? {
                println!("  witness {w}: ratio in {v}");
            }
        }
        BoundsCmd::Primes => {
            let t = prime_value_bounds(dim)?;
            println!("squared primes: {:?}", t.squared);
            println!("simple primes: {:?}", t.simple);
        }
        BoundsCmd::Dets { list } => {
            let d = admissible_determinants(dim)?;
            println!("{} determinants, largest {}", d.len(), d.last().copied().unwrap_or(0));
            if list {
                for x in d {
                    println!("{x}");
                }
            }
        }
    }
    Ok(())
}
