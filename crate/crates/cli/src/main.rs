use std::fmt::Write as FmtWrite;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use elastica::codec::{parse_rat, rat_to_string};
use elastica::constructions::{
    build_full_system, is_primary_family, lift_rank, noniso_witness, realize_length_set_with,
    FullSystemBuild, SlopeProfile, DEFAULT_MAX_GENERATOR,
};
use elastica::elasticity::{
    classify_rank2, elasticity_fg, polyhedral_certificate, unbounded_certificate,
    verify_certificate_file, CertOptions, CertificateFile, ElasticityResult, DEFAULT_INDEX_BOUND,
};
use elastica::factor::{
    eventual_affine_report, generalized_elasticity_scan, generalized_length_set,
};
use elastica::monoid::{family_members_up_to, validate_family_atoms, MonoidBody};
use elastica::{
    atoms_of, elasticity_of_element, factorizations, hilbert_basis_2d, length_set, AtomList, Error,
    IntVec, MonoidSpec, Rat, Result,
};

#[derive(Parser)]
#[command(
    name = "elastica",
    version,
    about = "Factorization invariants of submonoids of N^d"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq)]
enum Command {
    /// Atoms of a finite spec, or validated members of a family.
    Atoms,
    /// All factorizations of --element.
    Factorize,
    /// Set of lengths of --element.
    Lengths,
    /// Elasticity of the monoid, or of --element.
    Elasticity,
    /// Rational/infinite classification of a rank-2 family.
    Classify,
    /// Witness of length ratio above --ratio for an infinite-elasticity family.
    Certify,
    /// Witness of ratio above N = --ratio for a polyhedral family.
    PolyhedralCertify,
    /// Generalized set of lengths over the generators of a dimension-1 spec.
    GenLengths,
    /// Generalized elasticities for x up to --bound.
    ScanGenElasticity,
    /// Hilbert basis of the plane cone spanned by the two generators.
    Hilbert,
    /// Truncated monoid realizing the first --count sets of P_fin.
    Construct,
    /// Numerical monoid and element with set of lengths --set.
    Realize,
    /// Lift a build manifest to dimension --dim.
    Lift,
    /// Primality check.
    Primary,
    /// Isomorphism invariants of --spec and --other.
    WitnessNoniso,
    /// Re-verify a certificate (--cert) or a build manifest (--spec).
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Atoms => "atoms",
            Command::Factorize => "factorize",
            Command::Lengths => "lengths",
            Command::Elasticity => "elasticity",
            Command::Classify => "classify",
            Command::Certify => "certify",
            Command::PolyhedralCertify => "polyhedral-certify",
            Command::GenLengths => "gen-lengths",
            Command::ScanGenElasticity => "scan-gen-elasticity",
            Command::Hilbert => "hilbert",
            Command::Construct => "construct",
            Command::Realize => "realize",
            Command::Lift => "lift",
            Command::Primary => "primary",
            Command::WitnessNoniso => "witness-noniso",
            Command::Verify => "verify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Profile {
    TwoLimit,
    OneLimit,
}

#[derive(clap::Args, Debug)]
struct Flags {
    /// Monoid spec, build manifest or result document.
    #[arg(long, global = true, value_name = "PATH")]
    spec: Option<PathBuf>,
    /// Second spec for witness-noniso.
    #[arg(long, global = true, value_name = "PATH")]
    other: Option<PathBuf>,
    /// Certificate file: written by certifying commands, read by verify.
    #[arg(long, global = true, value_name = "PATH")]
    cert: Option<PathBuf>,
    /// Element as comma separated coordinates.
    #[arg(long, global = true, value_name = "x,y,...")]
    element: Option<String>,
    /// Squared-norm truncation bound (x_max for scan-gen-elasticity).
    #[arg(long, global = true, default_value = "10000")]
    bound: BigInt,
    /// Validation window (window length for scan-gen-elasticity).
    #[arg(long, global = true, default_value_t = 12)]
    window: usize,
    /// Target ratio P/Q (the integer N for polyhedral-certify).
    #[arg(long, global = true, default_value = "10")]
    ratio: String,
    /// Number of P_fin sets for construct.
    #[arg(long, global = true)]
    count: Option<usize>,
    /// Target set for realize, e.g. "2,3".
    #[arg(long, global = true, value_name = "a,b,...")]
    set: Option<String>,
    /// Largest generator tried by realize.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_GENERATOR)]
    max_generator: u64,
    /// Target dimension for lift.
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Slope profile for construct.
    #[arg(long, global = true, value_enum, default_value_t = Profile::TwoLimit)]
    profile: Profile,
    /// Write the result document (JSON) here.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for internal parallel loops.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Record wall time in the result document.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Serialize)]
struct ResultDocument {
    command: String,
    input_digest: String,
    payload: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<CertificateFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<u64>,
}

struct Outcome {
    payload: Value,
    certificate: Option<CertificateFile>,
}

impl Outcome {
    fn plain(payload: Value) -> Self {
        Outcome {
            payload,
            certificate: None,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_resource() { 3 } else { 2 })
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.flags.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    }
    let start = Instant::now();
    let digest = input_digest(cli)?;
    let outcome = dispatch(cli.command, &cli.flags)?;
    if let (Some(path), Some(c)) = (&cli.flags.cert, &outcome.certificate) {
        if cli.command != Command::Verify {
            write_file(path, &to_pretty(c))?;
        }
    }
    let doc = ResultDocument {
        command: cli.command.name().into(),
        input_digest: digest,
        payload: outcome.payload,
        certificate: outcome.certificate,
        wall_time_ms: cli.flags.timing.then(|| start.elapsed().as_millis() as u64),
    };
    let json = to_pretty(&doc);
    if let Some(path) = &cli.flags.out {
        write_file(path, &json)?;
    }
    let text = match cli.flags.format {
        Format::Json => format!("{json}\n"),
        Format::Table => render_table(&serde_json::to_value(&doc).expect("document")),
    };
    // a closed pipe on stdout is not an error of the computation
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    Ok(())
}

fn to_pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, format!("{text}\n"))
        .map_err(|e| Error::Precondition(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Precondition(format!("cannot read {}: {e}", path.display())))
}

/// Hash of the command, every input file and the flags that influence
/// the result.
fn input_digest(cli: &Cli) -> Result<String> {
    let f = &cli.flags;
    let mut h = Sha256::new();
    h.update(cli.command.name().as_bytes());
    for (tag, p) in [("spec", &f.spec), ("other", &f.other)] {
        if let Some(p) = p {
            h.update(tag.as_bytes());
            h.update(read_file(p)?.as_bytes());
        }
    }
    if cli.command == Command::Verify {
        if let Some(p) = &f.cert {
            h.update(b"cert");
            h.update(read_file(p)?.as_bytes());
        }
    }
    let flags = format!(
        "element={:?};bound={};window={};ratio={};count={:?};set={:?};max_generator={};dim={:?};profile={:?}",
        f.element, f.bound, f.window, f.ratio, f.count, f.set, f.max_generator, f.dim, f.profile
    );
    h.update(flags.as_bytes());
    Ok(hex::encode(h.finalize()))
}

/// What a `--spec` file turned out to contain.
enum Input {
    Spec(MonoidSpec),
    Build(Box<FullSystemBuild>),
}

impl Input {
    /// The monoid itself; a build stands for its finitely generated union.
    fn monoid(self) -> MonoidSpec {
        match self {
            Input::Spec(s) => s,
            Input::Build(b) => b.monoid,
        }
    }

    /// The infinite object a build truncates.
    fn defining(self) -> Result<MonoidSpec> {
        match self {
            Input::Spec(s) => Ok(s),
            Input::Build(b) => b.defining_family(),
        }
    }
}

fn load_input(path: &Path) -> Result<Input> {
    let text = read_file(path)?;
    let direct = MonoidSpec::from_json(&text);
    if let Ok(s) = direct {
        return Ok(Input::Spec(s));
    }
    let Ok(mut v) = serde_json::from_str::<Value>(&text) else {
        return Err(annotate(direct.unwrap_err(), path));
    };
    // a result document: look inside its payload
    if v.get("command").is_some() {
        if let Some(p) = v.get_mut("payload").map(Value::take) {
            v = p;
        }
        if let Some(s) = v.get_mut("spec").map(Value::take) {
            v = s;
        }
    }
    if v.get("blocks").is_some() {
        let b: FullSystemBuild =
            serde_json::from_value(v).map_err(|e| annotate(Error::Parse(e.to_string()), path))?;
        return Ok(Input::Build(Box::new(b)));
    }
    if v.get("kind").is_some() && v.get("dim").is_some() {
        let s: MonoidSpec =
            serde_json::from_value(v).map_err(|e| annotate(Error::Parse(e.to_string()), path))?;
        return Ok(Input::Spec(s));
    }
    Err(annotate(direct.unwrap_err(), path))
}

fn annotate(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn need<'a, T>(v: &'a Option<T>, flag: &str, cmd: Command) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::Precondition(format!("{} needs --{flag}", cmd.name())))
}

fn spec_input(f: &Flags, cmd: Command) -> Result<Input> {
    load_input(need(&f.spec, "spec", cmd)?)
}

fn parse_u64_list(s: &str, flag: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|e| Error::Parse(format!("--{flag} {s:?}: {e}")))
        })
        .collect()
}

fn parse_element(f: &Flags, cmd: Command) -> Result<IntVec> {
    let s = need(&f.element, "element", cmd)?;
    let coords: Vec<BigInt> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<BigInt>()
                .map_err(|e| Error::Parse(format!("--element {s:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    IntVec::new(coords)
}

fn cert_options(f: &Flags) -> Result<CertOptions> {
    let target = parse_rat(&f.ratio)?;
    Ok(CertOptions {
        target,
        index_bound: DEFAULT_INDEX_BOUND,
    })
}

fn validated(spec: &MonoidSpec, window: usize) -> Result<()> {
    if spec.is_family() {
        validate_family_atoms(spec, window)?.into_result()?;
    }
    Ok(())
}

/// Atoms relevant to factoring `x`: all atoms of a finite spec, family
/// members up to the squared norm of `x`.
fn atoms_for(spec: &MonoidSpec, x: &IntVec, window: usize) -> Result<AtomList> {
    match &spec.body {
        MonoidBody::FiniteGenerators(g) => atoms_of(g),
        MonoidBody::AtomFamily { .. } => {
            validated(spec, window)?;
            family_members_up_to(spec, &x.norm_sq())
        }
    }
}

fn elasticity_outcome(r: ElasticityResult) -> Outcome {
    let certificate = r.certificate.ratio_witness().map(|w| w.to_file());
    Outcome {
        payload: serde_json::to_value(&r).expect("result"),
        certificate,
    }
}

fn one_dim_gens(spec: &MonoidSpec, cmd: Command) -> Result<Vec<u64>> {
    let g = spec.generators().filter(|_| spec.dim == 1).ok_or_else(|| {
        Error::Precondition(format!("{} needs a finite spec of dimension 1", cmd.name()))
    })?;
    let mut out: Vec<u64> = g
        .iter()
        .map(|v| {
            v.coords()[0]
                .to_u64()
                .ok_or_else(|| Error::Resource(format!("generator {v} exceeds 64 bits")))
        })
        .collect::<Result<_>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn dispatch(cmd: Command, f: &Flags) -> Result<Outcome> {
    match cmd {
        Command::Atoms => {
            let spec = spec_input(f, cmd)?.monoid();
            match &spec.body {
                MonoidBody::FiniteGenerators(g) => {
                    let atoms = atoms_of(g)?;
                    Ok(Outcome::plain(json!({
                        "kind": "finite",
                        "atoms": atoms,
                        "count": atoms.len(),
                    })))
                }
                MonoidBody::AtomFamily { .. } => {
                    let report = validate_family_atoms(&spec, f.window)?.into_result()?;
                    let members = family_members_up_to(&spec, &f.bound)?;
                    Ok(Outcome::plain(json!({
                        "kind": "family",
                        "validation": { "window": report.window, "checked": report.checked, "passed": true },
                        "bound": f.bound.to_string(),
                        "members": members,
                        "count": members.len(),
                    })))
                }
            }
        }
        Command::Factorize => {
            let spec = spec_input(f, cmd)?.monoid();
            let x = parse_element(f, cmd)?;
            let atoms = atoms_for(&spec, &x, f.window)?;
            let z = factorizations(&atoms, &x)?;
            Ok(Outcome::plain(json!({
                "element": x,
                "atoms": atoms,
                "count": z.len(),
                "factorizations": z,
            })))
        }
        Command::Lengths => {
            let spec = spec_input(f, cmd)?.monoid();
            let x = parse_element(f, cmd)?;
            let atoms = atoms_for(&spec, &x, f.window)?;
            let l = length_set(&atoms, &x)?;
            Ok(Outcome::plain(json!({
                "element": x,
                "atoms": atoms,
                "lengths": l,
                "elasticity": l.elasticity().map(|r| rat_to_string(&r)),
            })))
        }
        Command::Elasticity => {
            let spec = spec_input(f, cmd)?.monoid();
            if f.element.is_some() {
                let x = parse_element(f, cmd)?;
                let atoms = atoms_for(&spec, &x, f.window)?;
                let r = elasticity_of_element(&atoms, &x)?;
                return Ok(Outcome::plain(json!({
                    "element": x,
                    "value": rat_to_string(&r),
                })));
            }
            match &spec.body {
                MonoidBody::FiniteGenerators(g) => {
                    Ok(elasticity_outcome(elasticity_fg(&atoms_of(g)?)?))
                }
                MonoidBody::AtomFamily { .. } if spec.dim == 2 => Ok(elasticity_outcome(
                    classify_rank2(&spec, f.window, &cert_options(f)?)?,
                )),
                MonoidBody::AtomFamily { .. } => Err(Error::Unsupported(format!(
                    "elasticity of a dimension-{} family is not decided; see polyhedral-certify",
                    spec.dim
                ))),
            }
        }
        Command::Classify => {
            let spec = spec_input(f, cmd)?.monoid();
            match &spec.body {
                MonoidBody::FiniteGenerators(g) => {
                    Ok(elasticity_outcome(elasticity_fg(&atoms_of(g)?)?))
                }
                MonoidBody::AtomFamily { .. } => Ok(elasticity_outcome(classify_rank2(
                    &spec,
                    f.window,
                    &cert_options(f)?,
                )?)),
            }
        }
        Command::Certify => {
            let spec = spec_input(f, cmd)?.monoid();
            let w = unbounded_certificate(&spec, f.window, &cert_options(f)?)?;
            let file = w.to_file();
            Ok(Outcome {
                payload: json!({
                    "ratio": file.ratio,
                    "element": w.element,
                    "short_length": w.short.len(),
                    "long_length": w.long.len(),
                }),
                certificate: Some(file),
            })
        }
        Command::PolyhedralCertify => {
            let spec = spec_input(f, cmd)?.monoid();
            let n: u64 = f.ratio.trim().parse().map_err(|_| {
                Error::Parse(format!(
                    "polyhedral-certify takes an integer N as --ratio, got {:?}",
                    f.ratio
                ))
            })?;
            // the declared extreme atoms are the finite atoms of the family
            let extreme = spec.finite_atoms().to_vec();
            let c = polyhedral_certificate(&spec, &extreme, n, &CertOptions::default())?;
            let file = c.witness.to_file();
            Ok(Outcome {
                payload: serde_json::to_value(&c).expect("certificate"),
                certificate: Some(file),
            })
        }
        Command::GenLengths => {
            let spec = spec_input(f, cmd)?.monoid();
            let gens = one_dim_gens(&spec, cmd)?;
            let x = parse_element(f, cmd)?;
            let x = x
                .coords()
                .first()
                .filter(|_| x.dim() == 1)
                .and_then(ToPrimitive::to_u64)
                .ok_or_else(|| {
                    Error::Precondition("gen-lengths needs a one-coordinate element".into())
                })?;
            let l = generalized_length_set(&gens, x)?;
            Ok(Outcome::plain(json!({
                "element": x,
                "generators": gens,
                "lengths": l.values,
                "elasticity": l.values.elasticity().map(|r| rat_to_string(&r)),
            })))
        }
        Command::ScanGenElasticity => {
            let spec = spec_input(f, cmd)?.monoid();
            let gens = one_dim_gens(&spec, cmd)?;
            let x_max = f
                .bound
                .to_u64()
                .ok_or_else(|| Error::Resource(format!("--bound {} exceeds 64 bits", f.bound)))?;
            let scan = generalized_elasticity_scan(&gens, x_max)?;
            let affine = eventual_affine_report(&gens, f.window as u64)?;
            let tail = scan.entries.len().saturating_sub(scan.summary.tail_window);
            Ok(Outcome::plain(json!({
                "generators": gens,
                "x_max": x_max,
                "summary": scan.summary,
                "eventual_affine": affine,
                "tail": &scan.entries[tail..],
            })))
        }
        Command::Hilbert => {
            let spec = spec_input(f, cmd)?.monoid();
            let g = spec
                .generators()
                .filter(|g| g.len() == 2 && spec.dim == 2)
                .ok_or_else(|| {
                    Error::Precondition(
                        "hilbert needs a finite plane spec with exactly two generators".into(),
                    )
                })?;
            let basis = hilbert_basis_2d(&g[0], &g[1])?;
            Ok(Outcome::plain(json!({
                "rays": g,
                "basis": basis,
                "count": basis.len(),
            })))
        }
        Command::Construct => {
            let m = *need(&f.count, "count", cmd)?;
            let profile = match f.profile {
                Profile::TwoLimit => SlopeProfile::two_limit(),
                Profile::OneLimit => SlopeProfile::one_limit(),
            };
            let b = build_full_system(m, &profile)?;
            Ok(Outcome::plain(serde_json::to_value(&b).expect("manifest")))
        }
        Command::Realize => {
            let set = parse_u64_list(need(&f.set, "set", cmd)?, "set")?;
            let r = realize_length_set_with(&set, f.max_generator)?;
            Ok(Outcome::plain(json!({
                "set": set,
                "generators": r.generators,
                "element": r.element,
            })))
        }
        Command::Lift => {
            let d = *need(&f.dim, "dim", cmd)?;
            let Input::Build(b) = spec_input(f, cmd)? else {
                return Err(Error::Precondition(
                    "lift needs a build manifest as --spec".into(),
                ));
            };
            let lifted = lift_rank(&b, d)?;
            Ok(Outcome::plain(json!({
                "dim": d,
                "spec": lifted,
            })))
        }
        Command::Primary => {
            let spec = spec_input(f, cmd)?.defining()?;
            validated(&spec, f.window)?;
            Ok(Outcome::plain(
                serde_json::to_value(is_primary_family(&spec)?).expect("report"),
            ))
        }
        Command::WitnessNoniso => {
            let a = spec_input(f, cmd)?.defining()?;
            let b = load_input(need(&f.other, "other", cmd)?)?.defining()?;
            validated(&a, f.window)?;
            validated(&b, f.window)?;
            let r = noniso_witness(&a, &b)?;
            Ok(Outcome::plain(serde_json::to_value(&r).expect("report")))
        }
        Command::Verify => verify(f),
    }
}

fn verify(f: &Flags) -> Result<Outcome> {
    if let Some(path) = &f.cert {
        let text = read_file(path)?;
        let v: Value =
            serde_json::from_str(&text).map_err(|e| annotate(Error::Parse(e.to_string()), path))?;
        let inner = match v.get("certificate") {
            Some(c) if v.get("command").is_some() => c.clone(),
            _ => v,
        };
        let file: CertificateFile = serde_json::from_value(inner)
            .map_err(|e| annotate(Error::Parse(e.to_string()), path))?;
        let ratio: Rat = verify_certificate_file(&file)?;
        return Ok(Outcome::plain(json!({
            "kind": "certificate",
            "valid": true,
            "ratio": rat_to_string(&ratio),
            "element": file.element,
        })));
    }
    let Input::Build(b) = spec_input(f, Command::Verify)? else {
        return Err(Error::Precondition(
            "verify needs --cert or a build manifest as --spec".into(),
        ));
    };
    let v = b.reverify()?;
    if !v.verified {
        let bad: Vec<u64> = v
            .blocks
            .iter()
            .filter(|c| !c.matches || !c.scaling_invariant || !c.off_ray_divisors.is_empty())
            .map(|c| c.index)
            .collect();
        return Err(Error::Validation(format!(
            "build does not verify (rescaling holds: {}; failing blocks {bad:?})",
            v.rescaling_holds
        )));
    }
    Ok(Outcome::plain(json!({
        "kind": "build",
        "valid": true,
        "sets": b.blocks.iter().map(|bl| bl.set.clone()).collect::<Vec<_>>(),
        "verification": v,
    })))
}

fn render_table(doc: &Value) -> String {
    let mut out = String::new();
    flatten("", doc, &mut out);
    out
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    let scalar = |v: &Value| match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&p, x, out);
            }
        }
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let items: Vec<String> = a.iter().map(scalar).collect();
            let _ = writeln!(out, "{prefix:<40} [{}]", items.join(", "));
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        other => {
            let _ = writeln!(out, "{prefix:<40} {}", scalar(other));
        }
    }
}
