//! `membpf` command-line front end. [`run`] is the whole program; the binary
//! only wires it to the process streams.

pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mems_bpf::beam::{
    fd_modal_oracle, lumped_params, mode_constants, mode_shape, natural_frequency, synthesize_length, CantileverBeam,
};
use mems_bpf::damping::{squeeze_film_q, synthesize_width, WidthlessBeam};
use mems_bpf::electrostatics::{
    cv_curve, overlap_capacitance, pull_in_analytic, pull_in_continuation, suspension_stiffness, PlateActuator,
    PullInMethod, SpringModel,
};
use mems_bpf::filters::rc::{rc_center_frequency, rc_curve, synthesize_resistance, RcFilter};
use mems_bpf::filters::resonator::{motional_current, resonator_bandpass_curve, ResonatorDrive};
use mems_bpf::filters::response::{half_power_analysis, FrequencyGrid};
use mems_bpf::io::{self, num};
use mems_bpf::materials::{Ambient, Material, Registry};
use mems_bpf::measurement::{self, datasets, extract_parasitic, find_resonance_peak, CurveKind, Loaded};
use mems_bpf::sweep::{sweep, Axis, Scale, SweepOp, SweepSpec};
use mems_bpf::synthesis::{compare, synthesize_rc, synthesize_resonator, DesignInputs};
use mems_bpf::units::{show, sig, sig6, Unit};
use mems_bpf::Error;

pub use config::{Format, RunConfig};

/// Zero-bias capacitance the fabricated varactor was simulated at; the
/// default calibration target when comparing against measured C-V data.
pub const SIMULATED_C0: f64 = 387.3e-15;
/// Field-solver pull-in voltage of the fabricated varactor.
pub const FIELD_SOLVER_PULL_IN: f64 = 8.81;

#[derive(Debug, Parser)]
#[command(name = "membpf", version, about = "MEMS band-pass filter design and analysis")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Where to write the CSV/JSON result; `-` for stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Registry name of the structural material.
    #[arg(long, global = true)]
    material: Option<String>,
    /// Registry name of the ambient medium.
    #[arg(long, global = true)]
    ambient: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parallel-plate varactor.
    #[command(subcommand)]
    Varactor(VaractorCmd),
    /// Cantilever modal analysis and synthesis.
    #[command(subcommand)]
    Beam(BeamCmd),
    /// Squeeze-film quality factor.
    #[command(subcommand)]
    Damping(DampingCmd),
    /// Filter responses.
    #[command(subcommand)]
    Filter(FilterCmd),
    /// Validation against measured curves.
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Synthesize both topologies for one target and compare them.
    Compare(CompareArgs),
    /// Cross-product parameter sweep.
    Sweep(SweepArgs),
}

#[derive(Debug, Subcommand)]
enum VaractorCmd {
    /// Capacitance versus bias up to pull-in.
    Cv(CvArgs),
    /// Pull-in voltage.
    Pullin(PullinArgs),
}

#[derive(Debug, Subcommand)]
enum BeamCmd {
    /// Natural frequencies, optionally checked against the finite-difference oracle.
    Modes(ModesArgs),
    /// Length giving a target mode-1 frequency.
    Synth(BeamSynthArgs),
}

#[derive(Debug, Subcommand)]
enum DampingCmd {
    Q(DampingQArgs),
    /// Width giving a target Q.
    SynthWidth(SynthWidthArgs),
}

#[derive(Debug, Subcommand)]
enum FilterCmd {
    Rc(RcArgs),
    Resonator(ResonatorArgs),
}

#[derive(Debug, Subcommand)]
enum MeasureCmd {
    /// Parallel parasitic capacitance between a measured and a model C-V curve.
    FitParasitic(FitParasiticArgs),
    /// Resonance peak and Q of a vibration spectrum.
    FindPeak(FindPeakArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Table1,
}

fn parse_spring(s: &str) -> Result<SpringModel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> Result<PullInMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
struct VaractorArgs {
    /// Geometry bundle; config `[varactor]` keys override it.
    #[arg(long, value_enum, default_value = "table1")]
    preset: Preset,
    /// fixed-guided or cantilever.
    #[arg(long, value_parser = parse_spring)]
    spring: Option<SpringModel>,
    /// Fringing multiplier on the net electrode area.
    #[arg(long, conflicts_with = "c0")]
    fringing: Option<f64>,
    /// Calibrate the fringing multiplier to this zero-bias capacitance [F].
    #[arg(long)]
    c0: Option<f64>,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    varactor: VaractorArgs,
    #[arg(long, default_value_t = 0.0)]
    v_start: f64,
    /// Defaults to 1.2 x the analytic pull-in voltage.
    #[arg(long)]
    v_stop: Option<f64>,
    #[arg(long, default_value_t = 241)]
    steps: usize,
}

#[derive(Debug, Args)]
struct PullinArgs {
    #[command(flatten)]
    varactor: VaractorArgs,
    /// analytic or continuation.
    #[arg(long, value_parser = parse_method, default_value = "analytic")]
    method: PullInMethod,
}

#[derive(Debug, Args)]
struct BeamArgs {
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long, alias = "h")]
    thickness: Option<f64>,
    #[arg(long)]
    gap: Option<f64>,
}

#[derive(Debug, Args)]
struct ModesArgs {
    #[command(flatten)]
    beam: BeamArgs,
    #[arg(long, default_value_t = 3)]
    modes: usize,
    /// Also solve the finite-difference eigenproblem on this many nodes.
    #[arg(long)]
    fd_nodes: Option<usize>,
    /// Emit the shape of this mode instead of the frequency table.
    #[arg(long)]
    shape: Option<usize>,
    #[arg(long, default_value_t = 101)]
    samples: usize,
}

#[derive(Debug, Args)]
struct BeamSynthArgs {
    /// Target mode-1 frequency [Hz].
    #[arg(long)]
    f0: f64,
    /// Beam thickness [m].
    #[arg(long, alias = "thickness", default_value_t = 2e-6)]
    h: f64,
}

#[derive(Debug, Args)]
struct DampingQArgs {
    #[command(flatten)]
    beam: BeamArgs,
    /// Operating frequency [Hz]; defaults to the beam's own f1.
    #[arg(long)]
    f: Option<f64>,
}

#[derive(Debug, Args)]
struct SynthWidthArgs {
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 455e3)]
    f0: f64,
    #[arg(long, alias = "h")]
    thickness: Option<f64>,
    #[arg(long)]
    gap: Option<f64>,
}

#[derive(Debug, Args)]
struct RcArgs {
    /// Resistance [ohm].
    #[arg(long = "R", conflicts_with = "f0")]
    resistance: Option<f64>,
    /// Capacitance [F].
    #[arg(long = "C")]
    capacitance: f64,
    /// Synthesize R for this centre frequency [Hz].
    #[arg(long)]
    f0: Option<f64>,
    /// Extract half-power band edges and Q from the sampled response.
    #[arg(long)]
    analyze: bool,
    #[arg(long)]
    f_start: Option<f64>,
    #[arg(long)]
    f_stop: Option<f64>,
    #[arg(long, default_value_t = FrequencyGrid::DEFAULT_POINTS_PER_DECADE)]
    points_per_decade: f64,
}

#[derive(Debug, Args)]
struct ResonatorArgs {
    #[command(flatten)]
    beam: BeamArgs,
    /// Mechanical Q; defaults to the squeeze-film estimate at f1.
    #[arg(long)]
    q: Option<f64>,
    /// dc bias V_p [V].
    #[arg(long, default_value_t = 10.0)]
    bias: f64,
    /// ac drive amplitude v_i [V].
    #[arg(long, default_value_t = 0.1)]
    drive: f64,
    /// Output termination R_o [ohm]; recorded only.
    #[arg(long, default_value_t = 1e6)]
    termination: f64,
    /// Electrode overlap area [m^2]; defaults to half the beam's plan area.
    #[arg(long)]
    electrode_area: Option<f64>,
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value_t = 4001)]
    points: usize,
    /// Report i_out = V_p C_var w for this capacitance swing [F] instead of a sweep.
    #[arg(long)]
    cvar: Option<f64>,
    /// Frequency for the --cvar spot value [Hz]; defaults to f1.
    #[arg(long)]
    f: Option<f64>,
}

#[derive(Debug, Args)]
struct FitParasiticArgs {
    /// Measured C-V CSV (`voltage_V,capacitance_F`); defaults to the bundled dataset.
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    varactor: VaractorArgs,
    #[arg(long, default_value_t = 401)]
    steps: usize,
}

#[derive(Debug, Args)]
struct FindPeakArgs {
    /// Spectrum CSV (`frequency_Hz,amplitude`); defaults to the bundled 80 um beam spectrum.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long, default_value_t = 455e3)]
    f0: f64,
    /// Resonator Q target.
    #[arg(long, default_value_t = 50.0)]
    q: f64,
    /// RC capacitance [F]; defaults to the varactor's zero-bias model value.
    #[arg(long = "C")]
    capacitance: Option<f64>,
    #[arg(long, value_parser = parse_spring)]
    spring: Option<SpringModel>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// beam-frequency, damping-q, rc-center-frequency, varactor-cv or pull-in.
    #[arg(long)]
    op: Option<String>,
    /// `param=start:stop:steps[:log]`, up to three.
    #[arg(long = "axis")]
    axes: Vec<String>,
    /// `param=value` held constant.
    #[arg(long = "fixed")]
    fixed: Vec<String>,
    #[arg(long, value_parser = parse_spring)]
    spring: Option<SpringModel>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(e) if e.is_usage() => 1,
            Failure::Core(_) => 2,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Core(e) => e.code(),
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// What a command produced: the data file body and the one-line summary.
struct Report {
    data: String,
    summary: String,
    warnings: Vec<String>,
}

struct Context {
    config: RunConfig,
    registry: Registry,
    format: Format,
    out: Option<PathBuf>,
    material: String,
    ambient: String,
}

impl Context {
    fn new(cli: &Cli) -> Outcome<Self> {
        let config = match &cli.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let registry = config.registry()?;
        let out = cli.out.clone().or_else(|| config.output.path.clone());
        let inferred = out
            .as_deref()
            .and_then(Path::extension)
            .filter(|ext| ext.eq_ignore_ascii_case("json"))
            .map(|_| Format::Json);
        let format = cli.format.or(config.output.format).or(inferred).unwrap_or_default();
        let material = cli.material.clone().or_else(|| config.material.clone()).unwrap_or_else(|| "polysilicon".into());
        let ambient = cli.ambient.clone().or_else(|| config.ambient.clone()).unwrap_or_else(|| "air".into());
        Ok(Self { config, registry, format, out, material, ambient })
    }

    fn material(&self) -> Outcome<Material> {
        Ok(self.registry.material(&self.material)?)
    }

    fn ambient(&self) -> Outcome<Ambient> {
        Ok(self.registry.ambient(&self.ambient)?)
    }

    fn json<T: serde::Serialize>(&self, value: &T) -> Outcome<String> {
        let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
        s.push('\n');
        Ok(s)
    }

    /// Pick the CSV or JSON body according to the output format.
    fn body(&self, csv: impl FnOnce() -> String, json: impl FnOnce() -> Outcome<String>) -> Outcome<String> {
        match self.format {
            Format::Csv => Ok(csv()),
            Format::Json => json(),
        }
    }

    fn beam(&self, args: &BeamArgs) -> Outcome<CantileverBeam> {
        let mut beam = self.config.beam_over(CantileverBeam::reference());
        beam.material = self.material()?;
        beam.length = args.length.unwrap_or(beam.length);
        beam.width = args.width.unwrap_or(beam.width);
        beam.thickness = args.thickness.unwrap_or(beam.thickness);
        beam.gap = args.gap.unwrap_or(beam.gap);
        beam.validate()?;
        Ok(beam)
    }

    fn spring(&self, flag: Option<SpringModel>) -> SpringModel {
        flag.or(self.config.varactor.spring).unwrap_or_default()
    }

    /// Geometry with fringing resolved; `default_c0` applies when neither
    /// --fringing nor --c0 nor a configured fringing factor is given.
    fn varactor(&self, args: &VaractorArgs, default_c0: Option<f64>) -> Outcome<(PlateActuator, f64, SpringModel)> {
        let Preset::Table1 = args.preset;
        let mut a = self.config.varactor_over(PlateActuator::table1());
        if let Some(f) = args.fringing {
            a.fringing_factor = f;
        }
        let c0 = args.c0.or_else(|| {
            (args.fringing.is_none() && self.config.varactor.fringing_factor.is_none()).then_some(default_c0).flatten()
        });
        if let Some(c0) = c0 {
            a = a.calibrated_to(c0)?;
        }
        a.validate()?;
        let spring = self.spring(args.spring);
        let k = suspension_stiffness(&a, spring, &self.material()?);
        Ok((a, k, spring))
    }
}

fn kv_csv(pairs: &[(&str, f64)]) -> String {
    let header: Vec<&str> = pairs.iter().map(|(k, _)| *k).collect();
    io::csv(&header, [pairs.iter().map(|(_, v)| *v).collect()])
}

fn kv_json(pairs: &[(&str, f64)]) -> Outcome<String> {
    let map: serde_json::Map<String, serde_json::Value> = pairs
        .iter()
        .map(|(k, v)| ((*k).to_string(), serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into)))
        .collect();
    let mut s = serde_json::to_string_pretty(&map).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

fn kv(ctx: &Context, pairs: &[(&str, f64)]) -> Outcome<String> {
    ctx.body(|| kv_csv(pairs), || kv_json(pairs))
}

fn varactor_cv(ctx: &Context, args: &CvArgs) -> Outcome<Report> {
    let (a, k, spring) = ctx.varactor(&args.varactor, None)?;
    let v_stop = args.v_stop.unwrap_or_else(|| 1.2 * pull_in_analytic(&a, k));
    let cv = cv_curve(&a, k, args.v_start, v_stop, args.steps)?;
    let c_first = cv.points.first().map_or(f64::NAN, |p| p.capacitance);
    let summary = match (cv.pull_in_voltage, cv.pull_in_capacitance) {
        (Some(v), Some(c)) => format!(
            "C({} V) = {}, pull-in at {} V with C(V_pi-) = {} (ratio {}), {} spring, k = {} N/m",
            sig6(args.v_start),
            show(c_first, Unit::Femtofarad),
            sig6(v),
            show(c, Unit::Femtofarad),
            sig(c / c_first, 5),
            spring.name(),
            sig6(k)
        ),
        _ => format!(
            "C({} V) = {}, C({} V) = {}, no pull-in below {} V, {} spring",
            sig6(args.v_start),
            show(c_first, Unit::Femtofarad),
            sig6(v_stop),
            show(cv.points.last().map_or(f64::NAN, |p| p.capacitance), Unit::Femtofarad),
            sig6(v_stop),
            spring.name()
        ),
    };
    let data = ctx.body(
        || cv.to_csv(),
        || {
            let mut s = cv.to_json()?;
            s.push('\n');
            Ok(s)
        },
    )?;
    Ok(Report { data, summary, warnings: Vec::new() })
}

fn varactor_pullin(ctx: &Context, args: &PullinArgs) -> Outcome<Report> {
    let (a, k, spring) = ctx.varactor(&args.varactor, None)?;
    let analytic = pull_in_analytic(&a, k);
    let edge = pull_in_continuation(&a, k)?;
    let chosen = match args.method {
        PullInMethod::Analytic => analytic,
        PullInMethod::Continuation => edge.voltage,
    };
    let c0 = overlap_capacitance(&a, a.gap0)?;
    let displacement = a.gap0 - edge.last_stable_gap;
    let method = match args.method {
        PullInMethod::Analytic => "analytic",
        PullInMethod::Continuation => "continuation",
    };
    let summary = format!(
        "V_pi = {} V ({method}; lumped {} spring, k = {} N/m, C0 = {}); field-solver value {} V, lumped/field = {}",
        sig6(chosen),
        spring.name(),
        sig6(k),
        show(c0, Unit::Femtofarad),
        FIELD_SOLVER_PULL_IN,
        sig(chosen / FIELD_SOLVER_PULL_IN, 4)
    );
    let pairs = [
        ("pull_in_V", chosen),
        ("pull_in_analytic_V", analytic),
        ("pull_in_continuation_V", edge.voltage),
        ("edge_displacement_over_gap", displacement / a.gap0),
        ("stiffness_N_per_m", k),
        ("c0_F", c0),
        ("c_edge_over_c0", a.gap0 / edge.last_stable_gap),
        ("fringing_factor", a.fringing_factor),
        ("field_solver_pull_in_V", FIELD_SOLVER_PULL_IN),
    ];
    let data = match ctx.format {
        Format::Csv => kv_csv(&pairs),
        Format::Json => {
            let mut map: serde_json::Map<String, serde_json::Value> =
                serde_json::from_str(&kv_json(&pairs)?).map_err(Error::from)?;
            map.insert("spring_model".into(), spring.name().into());
            map.insert("method".into(), method.into());
            ctx.json(&map)?
        }
    };
    Ok(Report { data, summary, warnings: Vec::new() })
}

fn beam_modes(ctx: &Context, args: &ModesArgs) -> Outcome<Report> {
    let beam = ctx.beam(&args.beam)?;
    let warnings = beam.warnings();
    if let Some(n) = args.shape {
        let m = mode_shape(&beam, n, args.samples)?;
        let summary = format!(
            "mode {n}: f = {}, k_nL = {}, {} interior nodes",
            show(m.frequency, Unit::Kilohertz),
            sig6(m.mode_constant),
            m.interior_nodes()
        );
        let data = ctx.body(|| m.to_csv(), || ctx.json(&m))?;
        return Ok(Report { data, summary, warnings });
    }
    if args.modes == 0 {
        return Err(Failure::Usage("--modes must be at least 1".into()));
    }
    let constants = mode_constants(args.modes);
    let freqs: Vec<f64> =
        (1..=args.modes).map(|n| natural_frequency(&beam, n)).collect::<mems_bpf::Result<_>>()?;
    let fd = args.fd_nodes.map(|nodes| fd_modal_oracle(&beam, nodes)).transpose()?;
    let mut header = vec!["mode", "mode_constant", "frequency_Hz"];
    if fd.is_some() {
        header.extend(["fd_frequency_Hz", "fd_rel_diff"]);
    }
    let rows: Vec<Vec<f64>> = (0..args.modes)
        .map(|i| {
            let mut row = vec![(i + 1) as f64, constants[i], freqs[i]];
            if let Some(fd) = &fd {
                let f = fd.get(i).copied().unwrap_or(f64::NAN);
                row.extend([f, (f - freqs[i]) / freqs[i]]);
            }
            row
        })
        .collect();
    let mut summary = format!(
        "f1 = {} (L = {}, h = {}, {})",
        show(freqs[0], Unit::Kilohertz),
        show(beam.length, Unit::Micrometer),
        show(beam.thickness, Unit::Micrometer),
        beam.material.name
    );
    if freqs.len() > 1 {
        summary.push_str(&format!(", f2/f1 = {}", sig6(freqs[1] / freqs[0])));
    }
    if let (Some(fd), Some(nodes)) = (&fd, args.fd_nodes) {
        summary.push_str(&format!(
            ", FD({nodes}) f1 = {} ({}% off)",
            show(fd[0], Unit::Kilohertz),
            sig(100.0 * (fd[0] - freqs[0]) / freqs[0], 3)
        ));
    }
    let data = ctx.body(
        || io::csv(&header, rows.clone()),
        || {
            let table: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|r| header.iter().zip(r).map(|(h, v)| ((*h).to_string(), serde_json::json!(v))).collect())
                .collect();
            ctx.json(&table)
        },
    )?;
    Ok(Report { data, summary, warnings })
}

fn beam_synth(ctx: &Context, args: &BeamSynthArgs) -> Outcome<Report> {
    let material = ctx.material()?;
    let length = synthesize_length(args.f0, args.h, &material)?;
    let summary = format!(
        "L = {} for f1 = {} (h = {}, {})",
        show(length, Unit::Micrometer),
        show(args.f0, Unit::Kilohertz),
        show(args.h, Unit::Micrometer),
        material.name
    );
    let data = kv(ctx, &[("length_m", length), ("f0_Hz", args.f0), ("thickness_m", args.h)])?;
    Ok(Report { data, summary, warnings: Vec::new() })
}

fn damping_q(ctx: &Context, args: &DampingQArgs) -> Outcome<Report> {
    let beam = ctx.beam(&args.beam)?;
    let f = match args.f {
        Some(f) => f,
        None => natural_frequency(&beam, 1)?,
    };
    let q = squeeze_film_q(&beam, f, &ctx.ambient()?)?;
    let summary = format!(
        "Q = {} at {} (b = {}, h = {}, gap = {}, {})",
        sig6(q),
        show(f, Unit::Kilohertz),
        show(beam.width, Unit::Micrometer),
        show(beam.thickness, Unit::Micrometer),
        show(beam.gap, Unit::Micrometer),
        ctx.ambient
    );
    let data = kv(ctx, &[("q", q), ("frequency_Hz", f), ("width_m", beam.width)])?;
    Ok(Report { data, summary, warnings: Vec::new() })
}

fn damping_synth_width(ctx: &Context, args: &SynthWidthArgs) -> Outcome<Report> {
    let reference = ctx.beam(&BeamArgs { length: None, width: None, thickness: args.thickness, gap: args.gap })?;
    let wb = WidthlessBeam {
        length: reference.length,
        thickness: reference.thickness,
        gap: reference.gap,
        material: reference.material,
    };
    let width = synthesize_width(args.q, &wb, args.f0, &ctx.ambient()?)?;
    let summary = format!(
        "b = {} for Q = {} at {} (h = {}, gap = {}, {})",
        show(width, Unit::Micrometer),
        sig6(args.q),
        show(args.f0, Unit::Kilohertz),
        show(wb.thickness, Unit::Micrometer),
        show(wb.gap, Unit::Micrometer),
        ctx.ambient
    );
    let data = kv(ctx, &[("width_m", width), ("q", args.q), ("frequency_Hz", args.f0)])?;
    Ok(Report { data, summary, warnings: Vec::new() })
}

fn filter_rc(ctx: &Context, args: &RcArgs) -> Outcome<Report> {
    let resistance = match (args.resistance, args.f0) {
        (Some(r), None) => r,
        (None, Some(f0)) => synthesize_resistance(f0, args.capacitance)?,
        _ => return Err(Failure::Usage("give exactly one of --R and --f0".into())),
    };
    let filter = RcFilter::new(resistance, args.capacitance)?;
    let f0 = rc_center_frequency(&filter);
    let grid = FrequencyGrid::Log {
        start: args.f_start.unwrap_or(f0 / 1e3),
        stop: args.f_stop.unwrap_or(f0 * 1e3),
        points_per_decade: args.points_per_decade,
    };
    let curve = rc_curve(&filter, &grid)?;
    let mut summary = format!(
        "R = {}, C = {}, f0 = 1/(2 pi R C) = {}",
        show(resistance, Unit::Kiloohm),
        show(args.capacitance, Unit::Femtofarad),
        show(f0, Unit::Kilohertz)
    );
    if args.analyze {
        let hp = half_power_analysis(&curve)?;
        let peak = curve.magnitudes().into_iter().fold(0.0, f64::max);
        summary = format!(
            "f_center = {}, Q = {}, f_low = {}, f_high = {}, peak |H| = {} (R = {}, C = {})",
            show(hp.f_center, Unit::Kilohertz),
            sig6(hp.q),
            show(hp.f_low, Unit::Kilohertz),
            show(hp.f_high, Unit::Kilohertz),
            sig6(peak),
            show(resistance, Unit::Kiloohm),
            show(args.capacitance, Unit::Femtofarad)
        );
    }
    let data = ctx.body(|| curve.to_csv(), || ctx.json(&curve))?;
    Ok(Report { data, summary, warnings: Vec::new() })
}

fn filter_resonator(ctx: &Context, args: &ResonatorArgs) -> Outcome<Report> {
    let beam = ctx.beam(&args.beam)?;
    let lumped = lumped_params(&beam)?;
    let f1 = natural_frequency(&beam, 1)?;
    if let Some(c_var) = args.cvar {
        let f = args.f.unwrap_or(f1);
        let i = motional_current(args.bias, c_var, 2.0 * std::f64::consts::PI * f);
        let summary = format!(
            "i_out = {} (V_p = {} V, C_var = {}, f = {})",
            show(i, Unit::Nanoampere),
            sig6(args.bias),
            show(c_var, Unit::Femtofarad),
            show(f, Unit::Kilohertz)
        );
        let data = kv(ctx, &[("current_A", i), ("bias_V", args.bias), ("c_var_F", c_var), ("frequency_Hz", f)])?;
        return Ok(Report { data, summary, warnings: Vec::new() });
    }
    let q = match args.q {
        Some(q) => q,
        None => squeeze_film_q(&beam, f1, &ctx.ambient()?)?,
    };
    let drive = ResonatorDrive {
        bias_voltage: args.bias,
        drive_amplitude: args.drive,
        electrode_area: args.electrode_area.unwrap_or(0.5 * beam.length * beam.width),
        termination: args.termination,
    };
    let mut warnings = beam.warnings();
    warnings.extend(drive.warnings());
    let FrequencyGrid::Linear { start, stop, .. } = FrequencyGrid::around_resonance(lumped.frequency(), q) else {
        unreachable!("around_resonance builds a linear grid")
    };
    let grid = FrequencyGrid::Linear { start, stop, points: args.points };
    let curve = resonator_bandpass_curve(&beam, &lumped, q, &drive, &grid, args.normalize)?;
    let hp = half_power_analysis(&curve)?;
    let peak = curve.magnitudes().into_iter().fold(0.0, f64::max);
    let summary = format!(
        "f_center = {}, Q from |i_out| = {} (mechanical Q = {}), peak |i_out| = {}",
        show(hp.f_center, Unit::Kilohertz),
        sig6(hp.q),
        sig6(q),
        if args.normalize { sig6(peak) } else { show(peak, Unit::Nanoampere).to_string() }
    );
    let data = ctx.body(|| curve.to_csv(), || ctx.json(&curve))?;
    Ok(Report { data, summary, warnings })
}

fn load(path: Option<&Path>, kind: CurveKind) -> Outcome<Loaded> {
    Ok(match (path, kind) {
        (Some(p), _) => measurement::load_curve(p, kind)?,
        (None, CurveKind::Cv) => datasets::measured_cv()?,
        (None, CurveKind::Spectrum) => datasets::ldv_spectrum()?,
    })
}

fn fit_parasitic(ctx: &Context, args: &FitParasiticArgs) -> Outcome<Report> {
    let loaded = load(args.data.as_deref(), CurveKind::Cv)?;
    let measured = &loaded.curve;
    let (a, k, spring) = ctx.varactor(&args.varactor, Some(SIMULATED_C0))?;
    let v_max = measured.x.last().copied().unwrap_or(0.0);
    let v_stop = if v_max > 0.0 { v_max } else { 1.0 };
    let model = cv_curve(&a, k, 0.0, v_stop, args.steps)?;
    let parasitic = extract_parasitic(measured, &model)?;
    let c0 = overlap_capacitance(&a, a.gap0)?;
    let rows: Vec<Vec<f64>> = measured
        .x
        .iter()
        .zip(&measured.y)
        .map(|(&v, &c)| {
            let m = model.interpolate(v).unwrap_or(f64::NAN);
            vec![v, c, m, c - m, m + parasitic]
        })
        .collect();
    let used = rows.iter().filter(|r| !r[2].is_nan()).count();
    let summary = format!(
        "parasitic = {} over {used} points (model C0 = {}, {} spring; measured {} .. {})",
        show(parasitic, Unit::Picofarad),
        show(c0, Unit::Femtofarad),
        spring.name(),
        show(measured.y.first().copied().unwrap_or(f64::NAN), Unit::Picofarad),
        show(measured.y.last().copied().unwrap_or(f64::NAN), Unit::Picofarad)
    );
    let header = ["voltage_V", "measured_F", "model_F", "residual_F", "model_plus_parasitic_F"];
    let data = ctx.body(
        || io::csv(&header, rows.clone()),
        || {
            ctx.json(&serde_json::json!({
                "parasitic_F": parasitic,
                "model_c0_F": c0,
                "spring_model": spring.name(),
                "points_used": used,
                "voltage_V": measured.x,
                "measured_F": measured.y,
            }))
        },
    )?;
    Ok(Report { data, summary, warnings: loaded.warnings })
}

fn find_peak(ctx: &Context, args: &FindPeakArgs) -> Outcome<Report> {
    let loaded = load(args.data.as_deref(), CurveKind::Spectrum)?;
    let peak = find_resonance_peak(&loaded.curve)?;
    let unit = loaded.curve.metadata.get("amplitude_unit").cloned().unwrap_or_else(|| "a.u.".into());
    let summary = format!(
        "f_peak = {}, amplitude = {} {unit}, Q = {} ({})",
        show(peak.f_peak, Unit::Kilohertz),
        sig6(peak.amplitude),
        peak.q_est.map_or_else(|| "n/a".to_string(), sig6),
        loaded.curve.label
    );
    let data = ctx.body(
        || kv_csv(&[("f_peak_Hz", peak.f_peak), ("amplitude", peak.amplitude), ("q_est", peak.q_est.unwrap_or(f64::NAN))]),
        || ctx.json(&peak),
    )?;
    Ok(Report { data, summary, warnings: loaded.warnings })
}

fn compare_cmd(ctx: &Context, args: &CompareArgs) -> Outcome<Report> {
    let inputs = DesignInputs {
        material: ctx.material()?,
        ambient: ctx.ambient()?,
        varactor: ctx.config.varactor_over(PlateActuator::table1()),
        spring: ctx.spring(args.spring),
        capacitance: args.capacitance,
        ..DesignInputs::default()
    };
    let rc = synthesize_rc(args.f0, &inputs)?;
    let res = synthesize_resonator(args.f0, args.q, &inputs)?;
    let report = compare(&rc, &res, &inputs.ambient)?;
    let summary = format!(
        "Q rc = {}, resonator = {} (x{}); tuning rc {}%, resonator n/a; area rc = {} um^2, resonator = {} um^2",
        sig(report.rc.q, 4),
        sig(report.resonator.q, 4),
        sig(report.q_ratio, 4),
        sig(100.0 * report.rc.tunability.unwrap_or(0.0), 4),
        sig6(report.rc.footprint_area * 1e12),
        sig6(report.resonator.footprint_area * 1e12)
    );
    let data = ctx.body(
        || {
            let mut s = String::from("metric,rc,resonator\n");
            let mut line = |name: &str, a: f64, b: f64| s.push_str(&format!("{name},{},{}\n", num(a), num(b)));
            line("f0_Hz", report.rc.f0, report.resonator.f0);
            line("q", report.rc.q, report.resonator.q);
            line("footprint_m2", report.rc.footprint_area, report.resonator.footprint_area);
            line(
                "tunability",
                report.rc.tunability.unwrap_or(f64::NAN),
                report.resonator.tunability.unwrap_or(f64::NAN),
            );
            s
        },
        || {
            let mut s = report.to_json()?;
            s.push('\n');
            Ok(s)
        },
    )?;
    Ok(Report { data, summary, warnings: Vec::new() })
}

fn parse_axis(text: &str) -> Outcome<Axis> {
    let bad = || Failure::Usage(format!("axis `{text}` is not `param=start:stop:steps[:log|linear]`"));
    let (param, range) = text.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(bad());
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let scale = match parts.get(3).map(|s| s.trim()) {
        None | Some("linear") => Scale::Linear,
        Some("log") => Scale::Log,
        Some(_) => return Err(bad()),
    };
    Ok(Axis {
        param: param.trim().to_string(),
        start: num(parts[0])?,
        stop: num(parts[1])?,
        steps: parts[2].trim().parse().map_err(|_| bad())?,
        scale,
    })
}

fn sweep_cmd(ctx: &Context, args: &SweepArgs) -> Outcome<Report> {
    let mut spec = match (&ctx.config.sweep, &args.op) {
        (_, Some(op)) => SweepSpec {
            op: op.parse::<SweepOp>()?,
            axes: Vec::new(),
            fixed: Default::default(),
            spring: SpringModel::default(),
        },
        (Some(spec), None) => spec.clone(),
        (None, None) => return Err(Failure::Usage("sweep needs --op or a [sweep] config section".into())),
    };
    if !args.axes.is_empty() {
        spec.axes = args.axes.iter().map(|a| parse_axis(a)).collect::<Outcome<_>>()?;
    }
    for f in &args.fixed {
        let (name, value) = f
            .split_once('=')
            .and_then(|(n, v)| Some((n.trim(), v.trim().parse::<f64>().ok()?)))
            .ok_or_else(|| Failure::Usage(format!("fixed value `{f}` is not `param=value`")))?;
        spec.fixed.insert(name.to_string(), value);
    }
    if let Some(s) = args.spring {
        spec.spring = s;
    }
    let table = sweep(&spec)?;
    let summary = format!(
        "sweep {}: {} rows x {} columns over {}",
        spec.op.name(),
        table.rows.len(),
        table.columns.len(),
        spec.axes.iter().map(|a| a.param.as_str()).collect::<Vec<_>>().join(", ")
    );
    let data = ctx.body(
        || table.to_csv(),
        || {
            let mut s = table.to_json()?;
            s.push('\n');
            Ok(s)
        },
    )?;
    Ok(Report { data, summary, warnings: Vec::new() })
}

fn dispatch(cli: &Cli) -> Outcome<(Context, Report)> {
    let ctx = Context::new(cli)?;
    let report = match &cli.command {
        Command::Varactor(VaractorCmd::Cv(a)) => varactor_cv(&ctx, a)?,
        Command::Varactor(VaractorCmd::Pullin(a)) => varactor_pullin(&ctx, a)?,
        Command::Beam(BeamCmd::Modes(a)) => beam_modes(&ctx, a)?,
        Command::Beam(BeamCmd::Synth(a)) => beam_synth(&ctx, a)?,
        Command::Damping(DampingCmd::Q(a)) => damping_q(&ctx, a)?,
        Command::Damping(DampingCmd::SynthWidth(a)) => damping_synth_width(&ctx, a)?,
        Command::Filter(FilterCmd::Rc(a)) => filter_rc(&ctx, a)?,
        Command::Filter(FilterCmd::Resonator(a)) => filter_resonator(&ctx, a)?,
        Command::Measure(MeasureCmd::FitParasitic(a)) => fit_parasitic(&ctx, a)?,
        Command::Measure(MeasureCmd::FindPeak(a)) => find_peak(&ctx, a)?,
        Command::Compare(a) => compare_cmd(&ctx, a)?,
        Command::Sweep(a) => sweep_cmd(&ctx, a)?,
    };
    Ok((ctx, report))
}

fn emit(ctx: &Context, report: &Report, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome<()> {
    fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
        move |source| Failure::Core(Error::Io { path: path.to_path_buf(), source })
    }
    for w in &report.warnings {
        writeln!(stderr, "warning: {w}").map_err(io_err(Path::new("<stderr>")))?;
    }
    match ctx.out.as_deref() {
        Some(p) if p == Path::new("-") => {
            stdout.write_all(report.data.as_bytes()).map_err(io_err(p))?;
            writeln!(stderr, "{}", report.summary).map_err(io_err(Path::new("<stderr>")))?;
        }
        Some(p) => {
            io::write_file(p, &report.data)?;
            writeln!(stdout, "{}", report.summary).map_err(io_err(Path::new("<stdout>")))?;
        }
        None => writeln!(stdout, "{}", report.summary).map_err(io_err(Path::new("<stdout>")))?,
    }
    Ok(())
}

/// Run the CLI on `args` (including the program name) and return the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{}", e.render());
                return 0;
            }
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("").trim_start_matches("error: ");
            let _ = writeln!(stderr, "error_code=usage {first}");
            for line in rendered.lines().skip(1) {
                let _ = writeln!(stderr, "{line}");
            }
            return 1;
        }
    };
    let result = dispatch(&cli).and_then(|(ctx, report)| emit(&ctx, &report, stdout, stderr));
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "error_code={} {}", f.code(), f.message());
            f.exit_code()
        }
    }
}
