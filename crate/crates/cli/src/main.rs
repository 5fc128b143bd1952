use std::fmt::Write as _;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use avrg_core::accuracy::{
    head_from_anthropometry, hit_model_at, hit_probability, HeadOrientation, HeadTarget, HitModel,
};
use avrg_core::data::StudyGrids;
use avrg_core::physics::{
    derivation_report, design_aperture, exit_velocity, SpeakerSpec, DEFAULT_RING_RADIUS_MM,
    DEFAULT_RING_SPEED_M_S,
};
use avrg_core::planner::{plan, Objective, PlanRequest};
use avrg_core::service::{load_registry, serve, Service, ServiceConfig, DEFAULT_PULSE_LENGTH_S};
use avrg_core::sim::{event_log, simulate, Scenario};
use avrg_core::targeting::{
    check_alignment, euler_from_direction, solve_intercept, AvrgPose, HeadState, PoseState,
    DEFAULT_TOLERANCE_MM,
};
use avrg_core::vision::run_furscan;
use avrg_core::waveform::{
    apply_rounding, export_pcm, pulse_train, DEFAULT_AMPLITUDE_V, DEFAULT_SAMPLE_RATE,
};

#[derive(Parser)]
#[command(name = "avrg", version, about = "Air vortex ring generator toolkit")]
struct Cli {
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Root directory for every file the command writes.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Size the aperture for a speaker array.
    Design(DesignArgs),
    /// Render a rounded drive pulse train to a WAV file.
    Waveform(WaveformArgs),
    /// Check whether a head sits on the boresight.
    Aim(AimArgs),
    /// Lead a moving head.
    Intercept(InterceptArgs),
    /// Estimate the chance a ring strikes the head.
    Hitprob(HitprobArgs),
    /// Choose a roundness coefficient for a distance.
    Plan(PlanArgs),
    /// Run a scenario and write its event log.
    Simulate(SimulateArgs),
    /// Measure hit gaps in a directory of fur frames.
    Furscan(FurscanArgs),
    /// Accept trigger commands over TCP.
    Serve(ServeArgs),
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    speaker_mm: f64,
    #[arg(long)]
    disp_mm: f64,
    #[arg(long, default_value_t = 4.03)]
    f: f64,
    /// Peak piston velocity for the exit velocity and flow report.
    #[arg(long, default_value_t = 0.0)]
    peak_velocity_mm_s: f64,
}

#[derive(Args)]
struct WaveformArgs {
    #[arg(long)]
    b: f64,
    #[arg(long, default_value_t = DEFAULT_AMPLITUDE_V)]
    amp: f64,
    #[arg(long, default_value_t = DEFAULT_PULSE_LENGTH_S * 1e3)]
    pulse_ms: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
    sample_rate: u32,
    #[arg(long, default_value_t = 1)]
    count: u32,
    #[arg(long, default_value_t = 1000.0)]
    interval_ms: f64,
    /// File name under --out-dir.
    #[arg(long, default_value = "pulse.wav")]
    output: String,
}

#[derive(Args)]
struct PoseArgs {
    /// Pose JSON file; overrides the component flags.
    #[arg(long)]
    pose: Option<PathBuf>,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "0,0,0"
    )]
    avrg_pos: Vec<f64>,
    /// yaw,pitch,roll in degrees.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "0,0,0"
    )]
    euler: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    head_pos: Option<Vec<f64>>,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "0,0,0"
    )]
    head_vel: Vec<f64>,
}

#[derive(Args)]
struct AimArgs {
    #[command(flatten)]
    pose: PoseArgs,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE_MM)]
    tolerance_mm: f64,
}

#[derive(Args)]
struct InterceptArgs {
    #[command(flatten)]
    pose: PoseArgs,
    #[arg(long, default_value_t = DEFAULT_RING_SPEED_M_S)]
    ring_speed: f64,
}

#[derive(Args)]
struct HitprobArgs {
    #[arg(long)]
    distance_mm: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Mean impact offset; with --std-mm replaces the grid lookup.
    #[arg(long)]
    mean_gap_mm: Option<f64>,
    #[arg(long)]
    std_mm: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    offset_angle_deg: f64,
    #[arg(long, default_value = "frontal")]
    orientation: HeadOrientation,
    /// Semi-axes as horizontal,vertical; overrides --orientation.
    #[arg(long, value_delimiter = ',')]
    head_mm: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_RING_RADIUS_MM)]
    ring_radius_mm: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory holding the grid CSVs; defaults to the bundled anchors.
    #[arg(long)]
    grids: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    distance_mm: f64,
    #[arg(long, default_value_t = 1.0)]
    min_rate: f64,
    #[arg(long)]
    max_time_s: Option<f64>,
    #[arg(long, default_value = "comfort")]
    objective: Objective,
    #[arg(long)]
    grids: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    grids: Option<PathBuf>,
    /// Event log file name under --out-dir.
    #[arg(long, default_value = "events.jsonl")]
    output: String,
}

#[derive(Args)]
struct FurscanArgs {
    #[arg(long)]
    manifest: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 7400)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    /// JSON object mapping device ids to device configs.
    #[arg(long)]
    devices: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PULSE_LENGTH_S * 1e3)]
    pulse_ms: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
    sample_rate: u32,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Design(a) => design(cli, a),
        Command::Waveform(a) => waveform(cli, a),
        Command::Aim(a) => aim(cli, a),
        Command::Intercept(a) => intercept(cli, a),
        Command::Hitprob(a) => hitprob(cli, a),
        Command::Plan(a) => plan_cmd(a),
        Command::Simulate(a) => simulate_cmd(cli, a),
        Command::Furscan(a) => furscan(cli, a),
        Command::Serve(a) => serve_cmd(cli, a),
    }
}

fn to_json(value: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn grids(dir: &Option<PathBuf>) -> Result<StudyGrids> {
    match dir {
        Some(d) => {
            StudyGrids::load_dir(d).with_context(|| format!("loading grids from {}", d.display()))
        }
        None => Ok(StudyGrids::anchors()),
    }
}

fn out_path(cli: &Cli, name: &str) -> Result<PathBuf> {
    let name = Path::new(name);
    if name.is_absolute()
        || name
            .components()
            .any(|c| matches!(c, std::path::Component::ParentDir))
    {
        bail!("output name {} must stay inside --out-dir", name.display());
    }
    std::fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("creating {}", cli.out_dir.display()))?;
    Ok(cli.out_dir.join(name))
}

fn design(cli: &Cli, a: &DesignArgs) -> Result<String> {
    let speakers = SpeakerSpec::new(a.n, a.speaker_mm, a.disp_mm, a.peak_velocity_mm_s)?;
    let design = design_aperture(&speakers, a.f)?;
    let report = derivation_report(&speakers, &design.nozzle)?;
    let exit = exit_velocity(&speakers, &design.nozzle)?;
    if cli.json {
        return to_json(&json!({
            "nozzle": design.nozzle,
            "formation_warning": design.formation_warning,
            "exit_velocity_m_s": exit,
            "report": report,
        }));
    }
    let mut out = format!(
        "aperture diameter: {:.2} mm\nslug length: {:.2} mm\nexit velocity: {:.3} m/s\n",
        design.nozzle.aperture_diameter_mm, design.nozzle.slug_length_mm, exit
    );
    if design.formation_warning {
        writeln!(
            out,
            "warning: formation number {} is outside 3.6 to 4.5",
            a.f
        )?;
    }
    Ok(out)
}

fn waveform(cli: &Cli, a: &WaveformArgs) -> Result<String> {
    let wave = pulse_train(
        a.amp,
        a.pulse_ms / 1e3,
        a.sample_rate,
        a.count,
        a.interval_ms / 1e3,
    )?;
    let wave = apply_rounding(&wave, a.b)?;
    let path = out_path(cli, &a.output)?;
    export_pcm(&wave, &path)?;
    if cli.json {
        return to_json(&json!({
            "path": path,
            "samples": wave.samples.len(),
            "duration_s": wave.duration_s(),
        }));
    }
    Ok(format!("{}\n", path.display()))
}

fn pose(a: &PoseArgs) -> Result<PoseState> {
    if let Some(path) = &a.pose {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let pose: PoseState =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        return Ok(pose);
    }
    let triple = |name: &str, v: &[f64]| -> Result<[f64; 3]> {
        v.try_into()
            .map_err(|_| anyhow::anyhow!("--{name} needs three comma-separated values"))
    };
    let head = a
        .head_pos
        .as_deref()
        .context("either --pose or --head-pos is required")?;
    Ok(PoseState {
        avrg: AvrgPose {
            pos_mm: triple("avrg-pos", &a.avrg_pos)?,
            euler_deg: triple("euler", &a.euler)?,
        },
        head: HeadState {
            pos_mm: triple("head-pos", head)?,
            vel_mm_s: triple("head-vel", &a.head_vel)?,
        },
    })
}

fn aim(cli: &Cli, a: &AimArgs) -> Result<String> {
    let p = pose(&a.pose)?;
    let r = check_alignment(&p, a.tolerance_mm)?;
    let to_head: Vec<f64> = (0..3)
        .map(|i| p.head.pos_mm[i] - p.avrg.pos_mm[i])
        .collect();
    let (yaw, pitch) = euler_from_direction([to_head[0], to_head[1], to_head[2]])?;
    if cli.json {
        return to_json(&json!({
            "alignment": r,
            "suggested_yaw_deg": yaw,
            "suggested_pitch_deg": pitch,
        }));
    }
    Ok(format!(
        "{}: {:.1} mm off axis, {:.2} deg off boresight\nsuggested yaw {:.2} deg, pitch {:.2} deg\n",
        if r.aligned { "aligned" } else { "misaligned" },
        r.off_axis_distance_mm,
        r.boresight_angle_deg,
        yaw,
        pitch
    ))
}

fn intercept(cli: &Cli, a: &InterceptArgs) -> Result<String> {
    let i = solve_intercept(&pose(&a.pose)?, a.ring_speed)?;
    if cli.json {
        return to_json(&i);
    }
    let [x, y, z] = i.aim_point_mm;
    Ok(format!(
        "time of flight: {:.3} s\naim point: {x:.1}, {y:.1}, {z:.1} mm\n",
        i.time_of_flight_s
    ))
}

fn hitprob(cli: &Cli, a: &HitprobArgs) -> Result<String> {
    let model = match (a.mean_gap_mm, a.std_mm) {
        (Some(mean), Some(std)) => HitModel::new([mean, 0.0], std, a.ring_radius_mm)?,
        (None, None) => {
            let (Some(d), Some(b)) = (a.distance_mm, a.b) else {
                bail!("give --distance-mm and --b, or --mean-gap-mm and --std-mm");
            };
            hit_model_at(&grids(&a.grids)?, d, b, a.ring_radius_mm)?
        }
        _ => bail!("--mean-gap-mm and --std-mm go together"),
    }
    .with_offset_direction(a.offset_angle_deg);
    let head = match &a.head_mm {
        Some(v) if v.len() == 2 => HeadTarget::new(v[0], v[1])?,
        Some(_) => bail!("--head-mm needs horizontal,vertical"),
        None => head_from_anthropometry(a.orientation),
    };
    let p = hit_probability(&model, &head, a.samples, a.seed)?;
    if cli.json {
        return to_json(
            &json!({ "probability": p, "model": model, "head": head, "samples": a.samples, "seed": a.seed }),
        );
    }
    Ok(format!("hit probability: {p:.4}\n"))
}

fn plan_cmd(a: &PlanArgs) -> Result<String> {
    let req = PlanRequest {
        distance_mm: a.distance_mm,
        min_notification_rate: a.min_rate,
        max_mean_time_s: a.max_time_s,
        objective: a.objective,
    };
    to_json(&plan(&grids(&a.grids)?, &req)?)
}

fn simulate_cmd(cli: &Cli, a: &SimulateArgs) -> Result<String> {
    let scenario = Scenario::load(&a.scenario)?;
    let events = simulate(&scenario, &grids(&a.grids)?)?;
    let log = event_log(&events)?;
    let path = out_path(cli, &a.output)?;
    std::fs::write(&path, &log).with_context(|| format!("writing {}", path.display()))?;
    if cli.json {
        return to_json(&json!({ "path": path, "events": events.len() }));
    }
    Ok(format!(
        "{} events written to {}\n",
        events.len(),
        path.display()
    ))
}

fn furscan(cli: &Cli, a: &FurscanArgs) -> Result<String> {
    let report = run_furscan(&a.manifest)?;
    if cli.json {
        return to_json(&json!({
            "homography_rms_px": report.homography_rms_px,
            "target_px": report.target_px,
            "frames": report.frames,
        }));
    }
    Ok(report.frames.iter().map(|f| f.line() + "\n").collect())
}

fn serve_cmd(cli: &Cli, a: &ServeArgs) -> Result<String> {
    let registry = load_registry(&a.devices)?;
    let config = ServiceConfig {
        out_dir: cli.out_dir.clone(),
        sample_rate: a.sample_rate,
        pulse_length_s: a.pulse_ms / 1e3,
    };
    let service = Arc::new(Service::new(config, &registry)?);
    let listener = TcpListener::bind((a.bind.as_str(), a.port))
        .with_context(|| format!("binding {}:{}", a.bind, a.port))?;
    eprintln!("listening on {}", listener.local_addr()?);
    serve(listener, service)?;
    Ok(String::new())
}
