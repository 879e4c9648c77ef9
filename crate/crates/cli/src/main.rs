//! `vexp`: command-line front end. Every command writes CSV whose first line
//! is a `#` comment echoing the configuration.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vexp::embeddings::{
    default_large_grid, default_small_grid, default_truncations, embedding_constant_estimate, ConditionRow,
};
use vexp::exponents::{embedding_default_x0, lambda_exponent_ln, nonembedding_default_x0};
use vexp::io::{read_exponent_csv, read_sampled_csv, write_config_echo, write_exponent_csv, write_sampled_csv};
use vexp::maximal::{hl_maximal_2d, lower_derivative_estimate, upper_derivative_estimate};
use vexp::numeric::{format_from_ln, parse_ln};
use vexp::{
    check_condition_a, check_condition_b, check_exp_embedding_condition, divergence_witness, dual_exponent,
    embedding_example_exponent, exponent_from_compact_set, hl_maximal, lambert_w, levelset_prescribed_exponent,
    luxemburg_norm, nonembedding_example_exponent, orlicz_norm, strong_maximal, wiener_ratio, Branch, CompactSet,
    ExponentFunction, ExponentGrid, GridFunction2D, LambdaGrid, LevelSetTarget, Mesh, NormResult, SampledFunction,
    TestFamily, ThetaSpec, VexpError, YoungFunction,
};

#[derive(Parser, Debug)]
#[command(name = "vexp", version, about = "Variable-exponent and Zygmund space numerics")]
struct Cli {
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Real Lambert W on one branch.
    Lambertw {
        #[arg(long, value_enum)]
        branch: BranchArg,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
    },
    /// Sample an exponent and write it as `x,p` rows.
    Exponent(ExponentArgs),
    /// Luxemburg or Orlicz norm of a sampled function.
    Norm {
        #[arg(long, value_enum)]
        space: Space,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        input: PathBuf,
        /// Required for `vlp`; must share the cells of the input.
        #[arg(long)]
        exponent: Option<PathBuf>,
        #[arg(long, default_value_t = vexp::norms::NORM_TOL)]
        tol: f64,
    },
    /// Evaluate an embedding condition on a λ grid.
    EmbedCheck {
        #[arg(long, value_enum)]
        condition: ConditionArg,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        exponent: PathBuf,
        /// Weight for condition `b`: `(ln x)^{α−ε}` or `x^{α−ε}`.
        #[arg(long, value_enum, default_value_t = ThetaArg::Log)]
        theta: ThetaArg,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        /// λ grid as `hi,lo,per_decade`; defaults depend on the condition.
        #[arg(long)]
        lambdas: Option<String>,
    },
    /// Truncated integrals `I(t)` for a dual exponent.
    Witness {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 10.0)]
        c: f64,
        #[arg(long)]
        exponent: PathBuf,
        /// Comma-separated `t` values; literals below the f64 range such as
        /// `1e-100000` are accepted.
        #[arg(long)]
        truncations: Option<String>,
        /// Also estimate the L^{p(·)} → L(log L)^α constant of the exponent
        /// whose dual is given, and report `c` relative to it.
        #[arg(long)]
        estimate_constant: bool,
    },
    /// Maximal operators on a sampled function.
    Maximal {
        #[arg(long, value_enum)]
        op: MaximalOp,
        /// Side of the square grid; the input then holds `grid²` cells in row-major order.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        input: PathBuf,
        /// Required for `wiener`.
        #[arg(long)]
        exponent: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        row: usize,
        #[arg(long, default_value_t = 0)]
        col: usize,
        /// Comma-separated diameters for `deriv`.
        #[arg(long, default_value = "0.5,0.25,0.125,0.0625")]
        scales: String,
    },
    /// Run the seeded property suite.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
}

#[derive(Args, Debug)]
struct ExponentArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Right end of the interval `(0, x0]`; defaults depend on the family.
    #[arg(long)]
    x0: Option<f64>,
    /// Write the dual exponent `p/(p−1)` instead.
    #[arg(long)]
    dual: bool,
    #[arg(long)]
    per_decade: Option<usize>,
    #[arg(long)]
    decades: Option<usize>,
    #[arg(long)]
    tail_ratio: Option<f64>,
    #[arg(long)]
    max_log_inverse: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    b: f64,
    #[arg(long, default_value_t = 0.05)]
    r0: f64,
    /// Uniform cells for `compact`.
    #[arg(long, default_value_t = 1000)]
    cells: usize,
    /// Comma-separated points of K for `compact`.
    #[arg(long, default_value = "0")]
    points: String,
    #[arg(long, value_enum, default_value_t = TargetArg::Nonembed)]
    target: TargetArg,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BranchArg {
    P,
    M,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Family {
    Lambda,
    Nonembed,
    Embed,
    Levelset,
    Compact,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TargetArg {
    Nonembed,
    Example1,
    Example3,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Space {
    Vlp,
    Llogl,
    Expl,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ConditionArg {
    A,
    B,
    Exp,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ThetaArg {
    Log,
    Power,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MaximalOp {
    Hl,
    Strong,
    Wiener,
    Deriv,
}

fn name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

fn open(path: &Path) -> vexp::Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| VexpError::Io(format!("{}: {e}", path.display())))
}

fn list(s: &str) -> vexp::Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| VexpError::InvalidArgument(format!("`{t}` is not a number")))
        })
        .collect()
}

/// Moves an exponent read from `x,p` rows onto the mesh of a sampled input.
fn align(p: ExponentFunction, f: &SampledFunction) -> vexp::Result<ExponentFunction> {
    if !p.mesh().same_cells(f.mesh()) {
        return Err(VexpError::InvalidArgument(
            "exponent and input do not share cells".into(),
        ));
    }
    p.on_mesh(f.mesh().clone())
}

fn echo(out: &mut String, pairs: &[(&str, String)]) {
    *out += &csv_bytes(|w| write_config_echo(w, pairs)).expect("writing to memory");
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> vexp::Result<()>) -> vexp::Result<String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

fn run(cli: &Cli) -> vexp::Result<String> {
    let mut out = String::new();
    match &cli.command {
        Command::Lambertw { branch, x } => {
            echo(
                &mut out,
                &[
                    ("command", "lambertw".into()),
                    ("branch", name(*branch)),
                    ("x", x.to_string()),
                ],
            );
            let b = match branch {
                BranchArg::P => Branch::Principal,
                BranchArg::M => Branch::Secondary,
            };
            let v = lambert_w(*x, b)?;
            writeln!(out, "x,branch,w,residual").unwrap();
            writeln!(out, "{},{},{:.15e},{:.3e}", x, name(*branch), v.w, v.residual).unwrap();
        }
        Command::Exponent(args) => exponent(&mut out, args)?,
        Command::Norm {
            space,
            alpha,
            input,
            exponent,
            tol,
        } => {
            echo(
                &mut out,
                &[
                    ("command", "norm".into()),
                    ("space", name(*space)),
                    ("alpha", alpha.to_string()),
                    ("input", input.display().to_string()),
                    (
                        "exponent",
                        exponent.as_ref().map_or("-".into(), |p| p.display().to_string()),
                    ),
                    ("tol", tol.to_string()),
                ],
            );
            let f = read_sampled_csv(open(input)?)?;
            let r: NormResult = match space {
                Space::Vlp => {
                    let path = exponent
                        .as_ref()
                        .ok_or_else(|| VexpError::InvalidArgument("--exponent is required for vlp".into()))?;
                    let p = read_exponent_csv(open(path)?)?;
                    luxemburg_norm(&f, &align(p, &f)?, *tol)?
                }
                Space::Llogl => orlicz_norm(&f, &YoungFunction::log_log_power(*alpha)?, *tol)?,
                Space::Expl => orlicz_norm(&f, &YoungFunction::exp_power(*alpha)?, *tol)?,
            };
            writeln!(out, "space,value,modular_at_value,iterations,bracket_lo,bracket_hi").unwrap();
            writeln!(
                out,
                "{},{:.12e},{:.12e},{},{:.12e},{:.12e}",
                name(*space),
                r.value,
                r.modular_at_value,
                r.iterations,
                r.bracket.0,
                r.bracket.1
            )
            .unwrap();
        }
        Command::EmbedCheck {
            condition,
            alpha,
            exponent,
            theta,
            eps,
            lambdas,
        } => {
            echo(
                &mut out,
                &[
                    ("command", "embed-check".into()),
                    ("condition", name(*condition)),
                    ("alpha", alpha.to_string()),
                    ("exponent", exponent.display().to_string()),
                    ("theta", name(*theta)),
                    ("eps", eps.to_string()),
                    ("lambdas", lambdas.clone().unwrap_or_else(|| "default".into())),
                ],
            );
            let p = read_exponent_csv(open(exponent)?)?;
            let grid = match lambdas {
                Some(s) => {
                    let v = list(s)?;
                    if v.len() != 3 {
                        return Err(VexpError::InvalidArgument("--lambdas takes `hi,lo,per_decade`".into()));
                    }
                    LambdaGrid::geometric(v[0], v[1], v[2] as usize)?
                }
                None => match condition {
                    ConditionArg::Exp => default_large_grid(),
                    _ => default_small_grid(),
                },
            };
            match condition {
                ConditionArg::A | ConditionArg::Exp => {
                    let report = match condition {
                        ConditionArg::A => check_condition_a(&p, *alpha, &grid)?,
                        _ => check_exp_embedding_condition(&p, *alpha, &grid)?,
                    };
                    writeln!(out, "lambda,ln_measure,ln_c").unwrap();
                    for ConditionRow {
                        lambda,
                        ln_measure,
                        ln_c,
                    } in &report.rows
                    {
                        writeln!(out, "{lambda:.12e},{ln_measure:.12e},{ln_c:.12e}").unwrap();
                    }
                    writeln!(
                        out,
                        "# verdict: {} sup_c={:.6e} sup_c_refined={:.6e} drift={:.3e} growth_rate={:.4}",
                        report.verdict,
                        report.sup_c(),
                        report.sup_ln_c_refined.exp(),
                        report.drift,
                        report.growth_rate
                    )
                    .unwrap();
                }
                ConditionArg::B => {
                    let th = match theta {
                        ThetaArg::Log => ThetaSpec::log_power(alpha - eps),
                        ThetaArg::Power => ThetaSpec::power(alpha - eps),
                    };
                    let report = check_condition_b(&p, *alpha, &th, &grid)?;
                    writeln!(out, "lambda,ln_expression").unwrap();
                    for (l, e) in &report.rows {
                        writeln!(out, "{l:.12e},{e:.12e}").unwrap();
                    }
                    writeln!(
                        out,
                        "# verdict: {} estimate={:.6e} min_ln={:.6e} min_ln_refined={:.6e} trend={:.4} ({})",
                        report.verdict,
                        report.estimate(),
                        report.min_ln,
                        report.min_ln_refined,
                        report.trend,
                        report.note
                    )
                    .unwrap();
                }
            }
        }
        Command::Witness {
            alpha,
            c,
            exponent,
            truncations,
            estimate_constant,
        } => {
            echo(
                &mut out,
                &[
                    ("command", "witness".into()),
                    ("alpha", alpha.to_string()),
                    ("c", c.to_string()),
                    ("exponent", exponent.display().to_string()),
                    ("truncations", truncations.clone().unwrap_or_else(|| "default".into())),
                ],
            );
            let q = read_exponent_csv(open(exponent)?)?;
            let ln_t = match truncations {
                Some(s) => s
                    .split(',')
                    .map(|t| {
                        parse_ln(t.trim())
                            .ok_or_else(|| VexpError::InvalidArgument(format!("`{t}` is not a positive number")))
                    })
                    .collect::<vexp::Result<Vec<f64>>>()?,
                None => default_truncations(),
            };
            let trace = divergence_witness(&q, *alpha, *c, &ln_t)?;
            writeln!(out, "t,ln_t,ln_integral").unwrap();
            for (lt, lv) in trace.ln_t.iter().zip(&trace.ln_values) {
                writeln!(out, "{},{lt:.12e},{lv:.12e}", format_from_ln(*lt)).unwrap();
            }
            if *estimate_constant {
                let p = dual_exponent(&q);
                let est = embedding_constant_estimate(&p, *alpha, &TestFamily::default())?;
                writeln!(
                    out,
                    "# constant_estimate={:.6e} c_over_constant={:.4}",
                    est.constant,
                    c / est.constant
                )
                .unwrap();
            }
            writeln!(
                out,
                "# verdict: growth flag {} ln_growth={:.6e} strictly_increasing={} cap_exceeded={}",
                if trace.growth_flag { "set" } else { "not set" },
                trace.ln_growth(),
                trace.strictly_increasing(),
                trace.cap_exceeded
            )
            .unwrap();
        }
        Command::Maximal {
            op,
            grid,
            input,
            exponent,
            row,
            col,
            scales,
        } => {
            echo(
                &mut out,
                &[
                    ("command", "maximal".into()),
                    ("op", name(*op)),
                    ("grid", grid.map_or("-".into(), |n| n.to_string())),
                    ("input", input.display().to_string()),
                    (
                        "exponent",
                        exponent.as_ref().map_or("-".into(), |p| p.display().to_string()),
                    ),
                ],
            );
            let f = read_sampled_csv(open(input)?)?;
            let square = |n: usize| -> vexp::Result<GridFunction2D> {
                GridFunction2D::new(n, f.values().to_vec()).map_err(|_| {
                    VexpError::InvalidArgument(format!("--grid {n} needs {} cells, input has {}", n * n, f.len()))
                })
            };
            let need_grid = || grid.ok_or_else(|| VexpError::InvalidArgument("--grid is required".into()));
            match op {
                MaximalOp::Hl => {
                    let m = match grid {
                        Some(n) => hl_maximal_2d(&square(*n)?).to_sampled()?,
                        None => hl_maximal(&f)?,
                    };
                    out += &csv_bytes(|w| write_sampled_csv(w, &m))?;
                }
                MaximalOp::Strong => {
                    let m = strong_maximal(&square(need_grid()?)?)?;
                    out += &csv_bytes(|w| write_sampled_csv(w, &m.to_sampled()?))?;
                }
                MaximalOp::Wiener => {
                    let path = exponent
                        .as_ref()
                        .ok_or_else(|| VexpError::InvalidArgument("--exponent is required for wiener".into()))?;
                    let p = align(read_exponent_csv(open(path)?)?, &f)?;
                    let r = wiener_ratio(&f, &p, 0..f.len())?;
                    writeln!(out, "op,value").unwrap();
                    writeln!(out, "wiener,{r:.12e}").unwrap();
                }
                MaximalOp::Deriv => {
                    let g = square(need_grid()?)?;
                    let s = list(scales)?;
                    let up = upper_derivative_estimate(&g, *row, *col, &s)?;
                    let lo = lower_derivative_estimate(&g, *row, *col, &s)?;
                    writeln!(out, "# row={row} col={col} value={:.12e}", g.get(*row, *col)).unwrap();
                    writeln!(out, "scale,upper,lower").unwrap();
                    for ((s, u), l) in s.iter().zip(up).zip(lo) {
                        writeln!(out, "{s},{u:.12e},{l:.12e}").unwrap();
                    }
                }
            }
        }
        Command::Selftest { seed, trials } => {
            out = vexp::selftest::selftest_csv(*seed, *trials)?;
        }
    }
    Ok(out)
}

fn exponent(out: &mut String, a: &ExponentArgs) -> vexp::Result<()> {
    let defaults = ExponentGrid::default();
    let grid = ExponentGrid {
        per_decade: a.per_decade.unwrap_or(defaults.per_decade),
        decades: a.decades.unwrap_or(defaults.decades),
        tail_ratio: a.tail_ratio.unwrap_or(defaults.tail_ratio),
        max_log_inverse: a.max_log_inverse.unwrap_or(defaults.max_log_inverse),
    };
    let x0 = a.x0.unwrap_or(match a.family {
        Family::Nonembed => nonembedding_default_x0(a.alpha),
        Family::Embed => embedding_default_x0(a.alpha),
        Family::Levelset => 0.05,
        Family::Lambda | Family::Compact => 1.0,
    });
    let mut pairs = vec![
        ("command", "exponent".to_string()),
        ("family", name(a.family)),
        ("alpha", a.alpha.to_string()),
        ("x0", x0.to_string()),
        ("dual", a.dual.to_string()),
    ];
    let p: ExponentFunction = match a.family {
        Family::Nonembed | Family::Embed | Family::Lambda => {
            pairs.extend([
                ("per_decade", grid.per_decade.to_string()),
                ("decades", grid.decades.to_string()),
                ("tail_ratio", grid.tail_ratio.to_string()),
                ("max_log_inverse", grid.max_log_inverse.to_string()),
            ]);
            match a.family {
                Family::Nonembed => nonembedding_example_exponent(a.alpha, x0, &grid)?,
                Family::Embed => embedding_example_exponent(a.alpha, x0, &grid)?,
                _ => {
                    pairs.extend([("a", a.a.to_string()), ("b", a.b.to_string()), ("r0", a.r0.to_string())]);
                    let mesh = grid.mesh(x0)?;
                    let values = (0..mesh.len())
                        .map(|i| lambda_exponent_ln(mesh.ln_mid(i), a.a, a.b, a.r0))
                        .collect::<vexp::Result<Vec<f64>>>()?;
                    ExponentFunction::from_values(mesh, values)?
                }
            }
        }
        Family::Levelset => {
            let per_decade = a.per_decade.unwrap_or(400);
            pairs.extend([
                ("target", name(a.target)),
                ("eps", a.eps.to_string()),
                ("per_decade", per_decade.to_string()),
            ]);
            let target = match a.target {
                TargetArg::Nonembed => LevelSetTarget::nonembedding(a.alpha),
                TargetArg::Example1 => LevelSetTarget::example_one(a.alpha, a.eps),
                TargetArg::Example3 => LevelSetTarget::example_three(a.alpha, a.eps),
            };
            levelset_prescribed_exponent(&target, x0, per_decade)?
        }
        Family::Compact => {
            pairs.extend([
                ("a", a.a.to_string()),
                ("b", a.b.to_string()),
                ("r0", a.r0.to_string()),
                ("cells", a.cells.to_string()),
                ("points", a.points.replace(',', ";")),
            ]);
            let k = CompactSet::Points1D(list(&a.points)?);
            exponent_from_compact_set(&k, a.a, a.b, a.r0, Mesh::uniform(x0, a.cells)?)?
        }
    };
    let p = if a.dual { dual_exponent(&p) } else { p };
    echo(out, &pairs);
    *out += &csv_bytes(|w| write_exponent_csv(w, &p))?;
    Ok(())
}

fn exit_code(e: &VexpError) -> u8 {
    match e {
        VexpError::Resource(_) => 3,
        _ => 2,
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("VEXP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("VEXP_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("vexp: {e}");
        return ExitCode::from(2);
    }
    let text = match run(&cli) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("vexp: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("vexp: {e}");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
