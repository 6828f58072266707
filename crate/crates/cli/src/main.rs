//! Command-line surface: loads problem documents, dispatches to the
//! library, and reports verdicts, support values, certificates, and
//! CSV boundary sweeps.
//!
//! Exit codes: 0 = true/feasible/inside, 1 = false/infeasible/outside,
//! 2 = inaccurate or not applicable, 3 = input error.

mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use shadowhull::obstruct::{self, ObstructionVerdict};
use shadowhull::pencil::{MatrixPencil, PencilDoc, PencilQmOutcome, PolarOutcome};
use shadowhull::poly::{parse_expr, CoeffMode, Point, Polynomial, Scalar};
use shadowhull::relax::{
    self, IdealDoc, IdealSpec, MembershipOutcome, SemialgebraicSet, SetDoc, SupportOutcome,
    SweepTarget, VerdictKind,
};
use shadowhull::tolerances::{DEFAULT_BOX, MEMBER_TOL};

use output::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Float,
}

impl Mode {
    fn coeff(self) -> CoeffMode {
        match self {
            Mode::Exact => CoeffMode::Exact,
            Mode::Float => CoeffMode::Float,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "shadowhull",
    version,
    about = "Semidefinite outer approximations of convex hulls: relaxation queries, \
             spectrahedral shadows, and obstruction detectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Coefficient mode for parsing inputs.
    #[arg(long, global = true, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    /// Write the certificate / full report to this path as JSON.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Membership tolerance override.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Box half-width for existential searches and line sampling.
    #[arg(long = "box", global = true)]
    box_r: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Decide membership of a polynomial in the truncated quadratic module QM(p)_d.
    QmMember {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        degree: u32,
        #[arg(long)]
        poly: String,
    },
    /// Decide membership of a point in the degree-d Lasserre relaxation.
    LasserreMember {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        degree: u32,
        #[arg(long)]
        point: String,
    },
    /// Support value of the degree-d Lasserre relaxation in a direction.
    LasserreSupport {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        degree: u32,
        #[arg(long)]
        dir: String,
    },
    /// Decide membership of a point in the degree-d theta body.
    ThetaMember {
        #[arg(long)]
        ideal: PathBuf,
        #[arg(long)]
        degree: u32,
        #[arg(long)]
        point: String,
    },
    /// Support value of the degree-d theta body in a direction.
    ThetaSupport {
        #[arg(long)]
        ideal: PathBuf,
        #[arg(long)]
        degree: u32,
        #[arg(long)]
        dir: String,
    },
    /// Support of the relaxed hull of the image of the set under a polynomial map.
    PushforwardSupport {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        degree: u32,
        /// Component of the map (repeat once per image coordinate).
        #[arg(long = "map", action = clap::ArgAction::Append)]
        map: Vec<String>,
        #[arg(long)]
        dir: String,
    },
    /// Evaluate spectrahedron membership of a full (x, y) point.
    PencilMember {
        #[arg(long)]
        pencil: PathBuf,
        #[arg(long)]
        point: String,
    },
    /// Decide membership of x in the projection of the spectrahedron.
    ProjectionMember {
        #[arg(long)]
        pencil: PathBuf,
        #[arg(long)]
        point: String,
    },
    /// Decide membership of an affine-linear polynomial in the polar cone.
    PolarMember {
        #[arg(long)]
        pencil: PathBuf,
        #[arg(long)]
        poly: String,
    },
    /// Decide membership of x in the closure of the projection.
    ClosureMember {
        #[arg(long)]
        pencil: PathBuf,
        #[arg(long)]
        point: String,
    },
    /// Decide membership in the pencil's matrix quadratic-module cone at degree d.
    PencilQmMember {
        #[arg(long)]
        pencil: PathBuf,
        #[arg(long)]
        degree: u32,
        #[arg(long)]
        poly: String,
    },
    /// Line-gradient obstruction check at a point.
    ObstructLine {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        point: String,
        #[arg(long)]
        dir: String,
    },
    /// Singular-active-constraints obstruction check at a point.
    ObstructSingular {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        point: String,
    },
    /// Non-exposed-face obstruction check through two face points.
    ObstructNonexposed {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        point: String,
        #[arg(long)]
        point_b: String,
    },
    /// Convex-singularity check of a variety point against a witness.
    ConvexSingular {
        #[arg(long)]
        ideal: PathBuf,
        #[arg(long)]
        point: String,
        #[arg(long)]
        witness: String,
        /// Assert that the generators generate the real radical.
        #[arg(long)]
        real_radical: bool,
    },
    /// CSV of support values over equally spaced directions of the plane.
    SampleBoundary {
        #[arg(long)]
        set: Option<PathBuf>,
        #[arg(long)]
        ideal: Option<PathBuf>,
        #[arg(long)]
        degree: u32,
        #[arg(long)]
        dirs: usize,
    },
    /// Run the bundled reproduction suite: exact identities and SDP regressions.
    VerifyPaper,
}

#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<E: std::error::Error> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("input error: {e}");
            ExitCode::from(3)
        }
    }
}

fn load_set(path: &PathBuf, mode: CoeffMode) -> Result<SemialgebraicSet, InputError> {
    let text = std::fs::read_to_string(path)?;
    let doc: SetDoc = serde_json::from_str(&text)?;
    SemialgebraicSet::from_doc(&doc, mode).map_err(|e| InputError(e.to_string()))
}

fn load_ideal(path: &PathBuf, mode: CoeffMode) -> Result<IdealSpec, InputError> {
    let text = std::fs::read_to_string(path)?;
    let doc: IdealDoc = serde_json::from_str(&text)?;
    IdealSpec::from_doc(&doc, mode).map_err(|e| InputError(e.to_string()))
}

fn load_pencil(path: &PathBuf) -> Result<MatrixPencil, InputError> {
    let text = std::fs::read_to_string(path)?;
    let doc: PencilDoc = serde_json::from_str(&text)?;
    MatrixPencil::from_doc(&doc).map_err(|e| InputError(e.to_string()))
}

fn parse_point(text: &str, mode: CoeffMode, arity: usize) -> Result<Point, InputError> {
    let coords = text
        .split(',')
        .map(|s| Scalar::parse(s, mode))
        .collect::<Result<Vec<_>, _>>()?;
    if coords.len() != arity {
        return Err(InputError(format!(
            "expected {arity} coordinates, found {}",
            coords.len()
        )));
    }
    Point::new(coords).map_err(|e| InputError(e.to_string()))
}

fn parse_dir(text: &str, arity: usize) -> Result<Vec<f64>, InputError> {
    let point = parse_point(text, CoeffMode::Exact, arity)?;
    Ok(point.to_f64s())
}

/// Variable names used for polynomials over a pencil's x-variables.
fn pencil_vars(nx: usize) -> Vec<String> {
    if nx <= 3 {
        ["X", "Y", "Z"][..nx].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=nx).map(|i| format!("X{i}")).collect()
    }
}

fn parse_poly(text: &str, vars: &[String], mode: CoeffMode) -> Result<Polynomial, InputError> {
    parse_expr(text, vars, mode).map_err(|e| InputError(e.to_string()))
}

fn verdict_exit(kind: VerdictKind) -> u8 {
    match kind {
        VerdictKind::In => 0,
        VerdictKind::Out => 1,
        VerdictKind::NotApplicable | VerdictKind::Inaccurate => 2,
    }
}

fn obstruction_exit(v: ObstructionVerdict) -> u8 {
    match v {
        ObstructionVerdict::Obstructed => 0,
        ObstructionVerdict::NotObstructed | ObstructionVerdict::WitnessInvalid => 1,
        ObstructionVerdict::NotApplicable => 2,
    }
}

fn run(cli: Cli) -> Result<u8, InputError> {
    let mode = cli.mode.coeff();
    let tol = cli.tol.unwrap_or(MEMBER_TOL);
    let box_r = cli.box_r.unwrap_or(DEFAULT_BOX);
    let json = cli.format == Format::Json;
    let out = cli.out.clone();

    let code = match &cli.command {
        Command::QmMember { set, degree, poly } => {
            let set = load_set(set, mode)?;
            let f = parse_poly(poly, set.vars(), mode)?;
            let outcome =
                relax::qm_member(&set, *degree, &f).map_err(|e| InputError(e.to_string()))?;
            report_membership_outcome("qm-member", outcome, json, out.as_ref())?
        }
        Command::LasserreMember { set, degree, point } => {
            let set = load_set(set, mode)?;
            let x = parse_point(point, mode, set.arity())?;
            let v = relax::lasserre_point_member(&set, *degree, &x)
                .map_err(|e| InputError(e.to_string()))?;
            report_verdict("lasserre-member", &v, json, out.as_ref())?
        }
        Command::LasserreSupport { set, degree, dir } => {
            let set = load_set(set, mode)?;
            let u = parse_dir(dir, set.arity())?;
            let s = relax::lasserre_support(&set, *degree, &u)
                .map_err(|e| InputError(e.to_string()))?;
            report_support("lasserre-support", &s, json)?
        }
        Command::ThetaMember { ideal, degree, point } => {
            let ideal = load_ideal(ideal, mode)?;
            let x = parse_point(point, mode, ideal.arity())?;
            let v = relax::theta_point_member(&ideal, *degree, &x)
                .map_err(|e| InputError(e.to_string()))?;
            report_verdict("theta-member", &v, json, out.as_ref())?
        }
        Command::ThetaSupport { ideal, degree, dir } => {
            let ideal = load_ideal(ideal, mode)?;
            let u = parse_dir(dir, ideal.arity())?;
            let s = relax::theta_support(&ideal, *degree, &u)
                .map_err(|e| InputError(e.to_string()))?;
            report_support("theta-support", &s, json)?
        }
        Command::PushforwardSupport {
            set,
            degree,
            map,
            dir,
        } => {
            let set = load_set(set, mode)?;
            if map.is_empty() {
                return Err(InputError("supply at least one --map component".into()));
            }
            let comps = map
                .iter()
                .map(|m| parse_poly(m, set.vars(), mode))
                .collect::<Result<Vec<_>, _>>()?;
            let u = parse_dir(dir, comps.len())?;
            let s = relax::pushforward_support(&set, *degree, &comps, &u)
                .map_err(|e| InputError(e.to_string()))?;
            report_support("pushforward-support", &s, json)?
        }
        Command::PencilMember { pencil, point } => {
            let p = load_pencil(pencil)?;
            let full = parse_dir(point, p.nx() + p.ny())?;
            let (inside, lam) = p.member(&full[..p.nx()], &full[p.nx()..]);
            let mut report = Report::new("pencil-member");
            report.push("inside", serde_json::json!(inside));
            report.push("eigmin", serde_json::json!(lam));
            report.emit(json);
            u8::from(!inside)
        }
        Command::ProjectionMember { pencil, point } => {
            let p = load_pencil(pencil)?;
            let x = parse_dir(point, p.nx())?;
            let v = p
                .projection_member(&x, tol, box_r)
                .map_err(|e| InputError(e.to_string()))?;
            report_verdict("projection-member", &v, json, out.as_ref())?
        }
        Command::PolarMember { pencil, poly } => {
            let p = load_pencil(pencil)?;
            let vars = pencil_vars(p.nx());
            let ell = parse_poly(poly, &vars, mode)?;
            let outcome = p.polar_member(&ell).map_err(|e| InputError(e.to_string()))?;
            let mut report = Report::new("polar-member");
            let code = match outcome {
                PolarOutcome::Feasible(cert) => {
                    report.push("verdict", serde_json::json!("feasible"));
                    report.push("slack", serde_json::json!(cert.slack));
                    if let Some(path) = out.as_ref() {
                        output::write_json(path, &cert)?;
                        report.push(
                            "certificate",
                            serde_json::json!(path.display().to_string()),
                        );
                    }
                    0
                }
                PolarOutcome::Infeasible(cert) => {
                    report.push("verdict", serde_json::json!("infeasible"));
                    report.push("farkas_objective", serde_json::json!(cert.objective));
                    1
                }
                PolarOutcome::NotApplicable(msg) => {
                    report.push("verdict", serde_json::json!("not-applicable"));
                    report.push("reason", serde_json::json!(msg));
                    2
                }
                PolarOutcome::Inaccurate(msg) => {
                    report.push("verdict", serde_json::json!("inaccurate"));
                    report.push("reason", serde_json::json!(msg));
                    2
                }
            };
            report.emit(json);
            code
        }
        Command::ClosureMember { pencil, point } => {
            let p = load_pencil(pencil)?;
            let x = parse_dir(point, p.nx())?;
            let v = p.closure_member(&x).map_err(|e| InputError(e.to_string()))?;
            report_verdict("closure-member", &v, json, out.as_ref())?
        }
        Command::PencilQmMember {
            pencil,
            degree,
            poly,
        } => {
            let p = load_pencil(pencil)?;
            let vars = pencil_vars(p.nx());
            let f = parse_poly(poly, &vars, mode)?;
            let outcome = p
                .qm_member(*degree, &f)
                .map_err(|e| InputError(e.to_string()))?;
            let mut report = Report::new("pencil-qm-member");
            let code = match outcome {
                PencilQmOutcome::Feasible(cert) => {
                    report.push("verdict", serde_json::json!("feasible"));
                    report.push("residual", serde_json::json!(cert.residual));
                    if let Some(path) = out.as_ref() {
                        output::write_json(path, &cert)?;
                        report.push(
                            "certificate",
                            serde_json::json!(path.display().to_string()),
                        );
                    }
                    0
                }
                PencilQmOutcome::Infeasible(cert) => {
                    report.push("verdict", serde_json::json!("infeasible"));
                    report.push("farkas_objective", serde_json::json!(cert.objective));
                    1
                }
                PencilQmOutcome::Inaccurate(msg) => {
                    report.push("verdict", serde_json::json!("inaccurate"));
                    report.push("reason", serde_json::json!(msg));
                    2
                }
            };
            report.emit(json);
            code
        }
        Command::ObstructLine { set, point, dir } => {
            let set = load_set(set, mode)?;
            let a = parse_point(point, mode, set.arity())?;
            let d = parse_point(dir, mode, set.arity())?;
            let r = obstruct::line_obstruction(&set, &a, &d, cli.box_r.unwrap_or(10.0))
                .map_err(|e| InputError(e.to_string()))?;
            report_obstruction("obstruct-line", &r, json, out.as_ref())?
        }
        Command::ObstructSingular { set, point } => {
            let set = load_set(set, mode)?;
            let a = parse_point(point, mode, set.arity())?;
            let r = obstruct::singular_point_obstruction(&set, &a)
                .map_err(|e| InputError(e.to_string()))?;
            report_obstruction("obstruct-singular", &r, json, out.as_ref())?
        }
        Command::ObstructNonexposed { set, point, point_b } => {
            let set = load_set(set, mode)?;
            let a = parse_point(point, mode, set.arity())?;
            let b = parse_point(point_b, mode, set.arity())?;
            let r = obstruct::nonexposed_face_check(&set, &a, &b)
                .map_err(|e| InputError(e.to_string()))?;
            report_obstruction("obstruct-nonexposed", &r, json, out.as_ref())?
        }
        Command::ConvexSingular {
            ideal,
            point,
            witness,
            real_radical,
        } => {
            let ideal = load_ideal(ideal, mode)?;
            let p = parse_point(point, mode, ideal.arity())?;
            let q = parse_point(witness, mode, ideal.arity())?;
            let r = obstruct::convex_singular_check(&ideal, &p, &q, *real_radical)
                .map_err(|e| InputError(e.to_string()))?;
            report_obstruction("convex-singular", &r, json, out.as_ref())?
        }
        Command::SampleBoundary {
            set,
            ideal,
            degree,
            dirs,
        } => {
            let (set_doc, ideal_doc);
            let target = match (set, ideal) {
                (Some(p), None) => {
                    set_doc = load_set(p, mode)?;
                    SweepTarget::Set(&set_doc)
                }
                (None, Some(p)) => {
                    ideal_doc = load_ideal(p, mode)?;
                    SweepTarget::Ideal(&ideal_doc)
                }
                _ => {
                    return Err(InputError(
                        "supply exactly one of --set or --ideal".into(),
                    ))
                }
            };
            let samples = relax::support_profile(target, *degree, *dirs)
                .map_err(|e| InputError(e.to_string()))?;
            let csv = output::render_csv(&samples);
            match out.as_ref() {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            // unbounded directions are a legitimate answer; only a
            // solver failure downgrades the exit code
            if samples
                .iter()
                .any(|s| matches!(s.support, SupportOutcome::Inaccurate(_)))
            {
                2
            } else {
                0
            }
        }
        Command::VerifyPaper => verify::run_suite(json),
    };
    let _ = (tol, box_r);
    Ok(code)
}

fn report_membership_outcome(
    command: &str,
    outcome: MembershipOutcome<relax::QMCertificate>,
    json: bool,
    out: Option<&PathBuf>,
) -> Result<u8, InputError> {
    let mut report = Report::new(command);
    let code = match outcome {
        MembershipOutcome::Feasible(cert) => {
            report.push("verdict", serde_json::json!("feasible"));
            report.push("residual", serde_json::json!(cert.residual));
            if let Some(path) = out {
                output::write_json(path, &cert)?;
                report.push("certificate", serde_json::json!(path.display().to_string()));
            }
            0
        }
        MembershipOutcome::Infeasible(cert) => {
            report.push("verdict", serde_json::json!("infeasible"));
            report.push("farkas_objective", serde_json::json!(cert.objective));
            1
        }
        MembershipOutcome::Inaccurate(msg) => {
            report.push("verdict", serde_json::json!("inaccurate"));
            report.push("reason", serde_json::json!(msg));
            2
        }
    };
    report.emit(json);
    Ok(code)
}

fn report_verdict(
    command: &str,
    v: &relax::Verdict,
    json: bool,
    out: Option<&PathBuf>,
) -> Result<u8, InputError> {
    let mut report = Report::new(command);
    report.push(
        "verdict",
        serde_json::json!(match v.kind {
            VerdictKind::In => "In",
            VerdictKind::Out => "Out",
            VerdictKind::NotApplicable => "NotApplicable",
            VerdictKind::Inaccurate => "Inaccurate",
        }),
    );
    if v.margin.is_finite() {
        report.push("margin", serde_json::json!(v.margin));
    }
    if let Some(sep) = &v.separator {
        report.push("separator", serde_json::json!(sep.to_string()));
    }
    if v.low_confidence {
        report.push("low_confidence", serde_json::json!(true));
    }
    for n in &v.notes {
        report.push("note", serde_json::json!(n));
    }
    if let Some(path) = out {
        output::write_json(path, v)?;
        report.push("certificate", serde_json::json!(path.display().to_string()));
    }
    report.emit(json);
    Ok(verdict_exit(v.kind))
}

fn report_support(command: &str, s: &SupportOutcome, json: bool) -> Result<u8, InputError> {
    let mut report = Report::new(command);
    let code = match s {
        SupportOutcome::Value(v) => {
            report.push("support", serde_json::json!(v));
            0
        }
        SupportOutcome::Unbounded => {
            report.push("support", serde_json::json!("unbounded"));
            1
        }
        SupportOutcome::Inaccurate(msg) => {
            report.push("support", serde_json::json!("inaccurate"));
            report.push("reason", serde_json::json!(msg));
            2
        }
    };
    report.emit(json);
    Ok(code)
}

fn report_obstruction(
    command: &str,
    r: &obstruct::ObstructionReport,
    json: bool,
    out: Option<&PathBuf>,
) -> Result<u8, InputError> {
    let mut report = Report::new(command);
    report.push(
        "verdict",
        serde_json::json!(match r.verdict {
            ObstructionVerdict::Obstructed => "Obstructed",
            ObstructionVerdict::NotObstructed => "NotObstructed",
            ObstructionVerdict::NotApplicable => "NotApplicable",
            ObstructionVerdict::WitnessInvalid => "WitnessInvalid",
        }),
    );
    report.push("active", serde_json::json!(r.active));
    for g in &r.gradients {
        report.push(
            "gradient",
            serde_json::json!(format!(
                "constraint {}: ({}) . dir = {}",
                g.index,
                g.gradient
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(", "),
                g.inner_product
            )),
        );
    }
    for h in &r.hypotheses {
        report.push(
            "hypothesis",
            serde_json::json!(format!("{}: {:?} ({})", h.name, h.status, h.detail)),
        );
    }
    for c in &r.caveats {
        report.push("caveat", serde_json::json!(c));
    }
    if let Some(path) = out {
        output::write_json(path, r)?;
        report.push("report_file", serde_json::json!(path.display().to_string()));
    }
    report.emit(json);
    Ok(obstruction_exit(r.verdict))
}
