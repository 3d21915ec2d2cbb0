use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dualpuf::adversary::{
    collect_crps, dataset_from_text, dataset_to_text, puf_metrics, replay_attack, train_linear_attack, CrpKind,
    IntervalPolicy, ReplayAttacker, ReplayScenario, TrainParams,
};
use dualpuf::device::build_device_with_reports;
use dualpuf::lfsr::{classify, find_primitive, make_lfsr, parse_poly, period};
use dualpuf::obfuscator::challenge_trace;
use dualpuf::persist::write_atomic;
use dualpuf::protocol::{Eavesdropper, FrameKind, HonestTag, RegistrationParams};
use dualpuf::report::{render_records, render_table, Record};
use dualpuf::server::SessionGenerator;
use dualpuf::{
    mix_seed, run_authentication, run_registration, BitString, Channel, DeviceConfig, DualLfsrSpec, Error, Mode,
    PufDevice, Result, ServerRegistry, Session, Transcript,
};

#[derive(Parser)]
#[command(name = "dualpuf", version, about = "Dual-LFSR arbiter PUF simulator")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Records,
}

#[derive(Subcommand)]
enum Command {
    /// LFSR polynomial analysis.
    #[command(subcommand)]
    Lfsr(LfsrCmd),
    /// Device lifecycle.
    #[command(subcommand)]
    Device(DeviceCmd),
    /// Registration and authentication.
    #[command(subcommand)]
    Auth(AuthCmd),
    /// Replay and modeling attacks.
    #[command(subcommand)]
    Attack(AttackCmd),
    /// Uniformity, reliability and uniqueness.
    Metrics(MetricsArgs),
}

#[derive(Subcommand)]
enum LfsrCmd {
    /// All primitive polynomials of an order.
    Primitive {
        #[arg(long)]
        order: u32,
    },
    /// Partition the state space into useless, useful and additional states.
    Classify {
        #[arg(long)]
        poly: String,
    },
    /// One polynomial: the state sequence over a period. Two: the dual-LFSR
    /// challenge trace for a given response history.
    Trace {
        #[arg(long, num_args = 1..=2, required = true)]
        poly: Vec<String>,
        #[arg(long, default_value = "1")]
        challenge: String,
        /// Selection mode bit `M` (1 = original).
        #[arg(long, default_value_t = 1)]
        mode: u8,
        /// Round response bits, e.g. `00110`.
        #[arg(long)]
        bits: Option<String>,
    },
}

#[derive(Args, Clone)]
struct DeviceFlags {
    #[arg(long, default_value_t = 16)]
    stages: usize,
    #[arg(long, default_value_t = 8)]
    lanes: usize,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long = "voter-t", default_value_t = dualpuf::device::DEFAULT_VOTER_T)]
    voter_t: u32,
    #[arg(long, default_value_t = dualpuf::obfuscator::DEFAULT_ROUNDS)]
    rounds: usize,
    #[arg(long, default_value_t = 0.0)]
    bias: f64,
    #[arg(long, default_value_t = dualpuf::apuf::DEFAULT_DELTA_UNIT)]
    delta: f64,
}

impl DeviceFlags {
    fn config(&self, seed: u64) -> Result<DeviceConfig> {
        let mut cfg = DeviceConfig::new(self.lanes, self.stages, seed)?
            .with_sigma(self.sigma)
            .with_voter_t(self.voter_t)
            .with_bias(self.bias);
        cfg.delta_unit = self.delta;
        if self.rounds != dualpuf::obfuscator::DEFAULT_ROUNDS {
            cfg.assign_pairs(self.rounds)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Clone)]
struct ServerFlags {
    #[arg(long, default_value_t = 0)]
    tau: usize,
    #[arg(long = "t-min", default_value_t = dualpuf::server::DEFAULT_T_RANGE.0)]
    t_min: u64,
    #[arg(long = "t-max", default_value_t = dualpuf::server::DEFAULT_T_RANGE.1)]
    t_max: u64,
}

impl ServerFlags {
    fn params(&self, seed: u64) -> RegistrationParams {
        RegistrationParams {
            tau: self.tau,
            t_range: (self.t_min, self.t_max),
            rng_seed: mix_seed(seed, 0x5e),
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum DeviceCmd {
    /// Sample and initialize a device; `--out` is the device file.
    Build {
        #[command(flatten)]
        flags: DeviceFlags,
    },
    /// Blow the raw-CRP interface fuse.
    Fuse {
        #[arg(long)]
        device: PathBuf,
    },
    /// Query one challenge.
    Crp {
        #[arg(long)]
        device: PathBuf,
        #[arg(long)]
        challenge: String,
        /// Raw naked response through the disposable interface.
        #[arg(long)]
        raw: bool,
        #[arg(long, default_value_t = 1)]
        mode: u8,
    },
}

#[derive(Subcommand)]
enum AuthCmd {
    /// Enroll a device with the server and fuse it; `--out` is the registry
    /// file.
    Register {
        #[arg(long)]
        device: PathBuf,
        #[command(flatten)]
        server: ServerFlags,
    },
    /// Run honest sessions. Without files a fresh pair is built in memory.
    Run {
        #[arg(long, requires = "registry")]
        device: Option<PathBuf>,
        #[arg(long, requires = "device")]
        registry: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        sessions: usize,
        /// Write the frame log here.
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[command(flatten)]
        flags: DeviceFlags,
        #[command(flatten)]
        server: ServerFlags,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum IntervalArg {
    Random,
    Match,
    Flip,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Naked,
    M1,
    M0,
    Mixed,
}

#[derive(Subcommand)]
enum AttackCmd {
    /// Eavesdrop one honest session, then impersonate the tag.
    Replay {
        #[arg(long, default_value_t = 1000)]
        sessions: usize,
        /// Server draws fresh challenges instead of reissuing the recorded ones.
        #[arg(long)]
        fresh: bool,
        #[arg(long, value_enum, default_value_t = IntervalArg::Random)]
        interval: IntervalArg,
        /// Eavesdrop on this transcript instead of recording a session.
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[command(flatten)]
        flags: DeviceFlags,
        #[command(flatten)]
        server: ServerFlags,
    },
    /// Logistic-regression attack on one lane.
    Model {
        #[arg(long, default_value_t = 20_000)]
        train: usize,
        #[arg(long, default_value_t = 5_000)]
        test: usize,
        #[arg(long, value_enum, default_value_t = KindArg::Naked)]
        kind: KindArg,
        #[arg(long, default_value_t = TrainParams::default().epochs)]
        epochs: usize,
        #[arg(long, default_value_t = TrainParams::default().learning_rate)]
        lr: f64,
        /// Train on this CRP file (`challenge_hex label`) instead of collecting.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Also save the collected CRPs.
        #[arg(long)]
        save_dataset: Option<PathBuf>,
        #[command(flatten)]
        flags: DeviceFlags,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Devices,
    Lanes,
}

#[derive(Args)]
struct MetricsArgs {
    /// Independent devices (`devices`) or lanes of one device (`lanes`).
    #[arg(long, value_enum, default_value_t = Target::Devices)]
    target: Target,
    #[arg(long, default_value_t = 10)]
    devices: usize,
    #[arg(long, default_value_t = 1000)]
    challenges: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[command(flatten)]
    flags: DeviceFlags,
}

fn parse_number(text: &str) -> Result<u64> {
    let t = text.trim();
    let parsed = if let Some(b) = t.strip_prefix("0b") {
        u64::from_str_radix(b, 2)
    } else if let Some(h) = t.strip_prefix("0x") {
        u64::from_str_radix(h, 16)
    } else {
        t.parse()
    };
    parsed.map_err(|_| Error::Parse(format!("not a number: {text:?}")))
}

fn mode_from_flag(m: u8) -> Result<Mode> {
    match m {
        0 | 1 => Ok(Mode::from_bit(m == 1)),
        _ => Err(Error::InvalidConfig(format!("--mode must be 0 or 1, got {m}"))),
    }
}

struct Ctx {
    seed: u64,
    out: Option<PathBuf>,
    format: Format,
}

fn render<T: Record>(format: Format, record: &T) -> String {
    match format {
        Format::Table => render_table(record),
        Format::Records => render_records(record),
    }
}

struct Fields(Vec<(&'static str, String)>);

impl Record for Fields {
    fn fields(&self) -> Vec<(&'static str, String)> {
        self.0.clone()
    }
}

fn state_set(states: &[u64], width: usize) -> String {
    let items: Vec<String> = states.iter().map(|&s| format!("{s:0width$b}")).collect();
    format!("{{{}}}", items.join(","))
}

fn lfsr(cmd: LfsrCmd, format: Format) -> Result<String> {
    match cmd {
        LfsrCmd::Primitive { order } => {
            let list = find_primitive(order)?;
            let masks: Vec<String> = list.iter().map(|p| p.to_string()).collect();
            Ok(match format {
                Format::Table => format!("{}\n", masks.join(" ")),
                Format::Records => render_records(&Fields(vec![
                    ("order", order.to_string()),
                    ("count", list.len().to_string()),
                    ("polys", masks.join(",")),
                ])),
            })
        }
        LfsrCmd::Classify { poly } => {
            let spec = parse_poly(&poly)?;
            let c = classify(spec)?;
            let n = spec.order() as usize;
            let additional: Vec<u64> = c
                .additional
                .iter()
                .flat_map(|cy| cy.states(spec).collect::<Vec<_>>())
                .collect();
            let cycles: Vec<String> = c
                .useful
                .iter()
                .chain(&c.additional)
                .map(|cy| cy.len.to_string())
                .collect();
            Ok(render(
                format,
                &Fields(vec![
                    ("poly", spec.to_human()),
                    ("mask", spec.to_string()),
                    ("useless", state_set(&c.useless, n)),
                    ("useful", state_set(&c.useful_states(), n)),
                    ("additional", state_set(&additional, n)),
                    ("cycle_lengths", cycles.join(",")),
                    ("m_sequence", (c.useful_count == (1u64 << n) - 1).to_string()),
                ]),
            ))
        }
        LfsrCmd::Trace {
            poly,
            challenge,
            mode,
            bits,
        } => {
            let seed = parse_number(&challenge)?;
            let specs = poly.iter().map(|p| parse_poly(p)).collect::<Result<Vec<_>>>()?;
            let mut out = String::new();
            if let [spec] = specs[..] {
                let mut state = make_lfsr(spec, seed)?;
                for _ in 0..period(spec, seed)? {
                    let _ = writeln!(out, "{}", state.to_binary());
                    state.advance();
                }
                return Ok(out);
            }
            let bits = bits.ok_or_else(|| Error::InvalidConfig("--bits is required with two polynomials".into()))?;
            let bits = BitString::from_binary(&bits)?;
            let pair = DualLfsrSpec::new(specs[0], specs[1], bits.len())?;
            for row in challenge_trace(&pair, seed, mode_from_flag(mode)?, bits.bits())? {
                let _ = writeln!(out, "{row}");
            }
            Ok(out)
        }
    }
}

fn device(cmd: DeviceCmd, cli: &Ctx) -> Result<String> {
    match cmd {
        DeviceCmd::Build { flags } => {
            let path = cli
                .out
                .as_deref()
                .ok_or_else(|| Error::InvalidConfig("device build needs --out".into()))?;
            let (device, reports) = build_device_with_reports(flags.config(cli.seed)?)?;
            device.save(path)?;
            let mut out = String::new();
            for (i, r) in reports.iter().enumerate() {
                let _ = writeln!(out, "lane {i}: {r}");
            }
            Ok(out)
        }
        DeviceCmd::Fuse { device } => {
            let mut d = PufDevice::load(&device)?;
            d.fuse();
            d.save(cli.out.as_deref().unwrap_or(&device))?;
            Ok("fused\n".into())
        }
        DeviceCmd::Crp {
            device,
            challenge,
            raw,
            mode,
        } => {
            let d = PufDevice::load(&device)?;
            let c = parse_number(&challenge)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let r = if raw {
                d.raw_crp_query(c, &mut rng)?
            } else {
                d.respond(c, mode_from_flag(mode)?, &mut rng)?
            };
            Ok(format!("{r}\n"))
        }
    }
}

fn in_memory_pair(flags: &DeviceFlags, server: &ServerFlags, seed: u64) -> Result<(PufDevice, ServerRegistry)> {
    let mut device = dualpuf::build_device(flags.config(seed)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xe0));
    let registry = run_registration(&mut device, &server.params(seed), &mut rng)?;
    Ok((device, registry))
}

fn auth(cmd: AuthCmd, cli: &Ctx) -> Result<String> {
    match cmd {
        AuthCmd::Register { device, server } => {
            let path = cli
                .out
                .as_deref()
                .ok_or_else(|| Error::InvalidConfig("auth register needs --out for the registry".into()))?;
            let mut d = PufDevice::load(&device)?;
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cli.seed, 0xe0));
            let registry = run_registration(&mut d, &server.params(cli.seed), &mut rng)?;
            registry.save(path)?;
            d.save(&device)?;
            Ok(format!(
                "registered lanes={} stages={}\n",
                registry.lane_count(),
                registry.stages
            ))
        }
        AuthCmd::Run {
            device,
            registry,
            sessions,
            transcript,
            flags,
            server,
        } => {
            let (mut d, reg) = match (device, registry) {
                (Some(dp), Some(rp)) => (PufDevice::load(&dp)?, ServerRegistry::load(&rp)?),
                _ => in_memory_pair(&flags, &server, cli.seed)?,
            };
            let mut gen = SessionGenerator::new(reg.stages, reg.t_range, mix_seed(cli.seed, 0x5e55))?;
            let mut tag = HonestTag::new(&mut d, ChaCha8Rng::seed_from_u64(mix_seed(cli.seed, 0x7a9)));
            let mut channel = Channel::new();
            let (mut passes, mut first_fail) = (0usize, 0usize);
            for _ in 0..sessions {
                let r = run_authentication(&reg, &mut tag, &mut channel, gen.next_session())?;
                passes += r.pass as usize;
                first_fail += !r.d1 as usize;
            }
            if let Some(path) = transcript {
                let t = Transcript {
                    stages: reg.stages,
                    lanes: reg.lane_count(),
                    frames: channel.delivered().to_vec(),
                };
                write_atomic(&path, &t.to_text())?;
            }
            Ok(match cli.format {
                Format::Table => format!("pass={passes}/{sessions}\n"),
                Format::Records => render_records(&Fields(vec![
                    ("sessions", sessions.to_string()),
                    ("passes", passes.to_string()),
                    ("first_leg_rejects", first_fail.to_string()),
                    ("second_leg_rejects", (sessions - passes - first_fail).to_string()),
                    ("pass", format!("{passes}/{sessions}")),
                ])),
            })
        }
    }
}

/// The first two challenge frames of a transcript and their tick gap.
fn recorded_session(t: &Transcript) -> Result<Session> {
    let challenges: Vec<_> = t
        .frames
        .iter()
        .filter(|f| f.kind == FrameKind::Challenge)
        .take(2)
        .collect();
    let [c1, c2] = challenges[..] else {
        return Err(Error::InvalidConfig("transcript holds no complete session".into()));
    };
    Ok(Session {
        c1: c1.challenge_value().ok_or(Error::WidthMismatch {
            expected: t.stages,
            got: c1.payload.len(),
        })?,
        c2: c2.challenge_value().ok_or(Error::WidthMismatch {
            expected: t.stages,
            got: c2.payload.len(),
        })?,
        t: c2.tick.saturating_sub(c1.tick),
    })
}

fn attack(cmd: AttackCmd, cli: &Ctx) -> Result<String> {
    match cmd {
        AttackCmd::Replay {
            sessions,
            fresh,
            interval,
            transcript,
            flags,
            server,
        } => {
            let (mut d, reg) = in_memory_pair(&flags, &server, cli.seed)?;
            let recorded = match transcript {
                Some(path) => Transcript::parse(&std::fs::read_to_string(path)?)?,
                None => {
                    let mut tap = Eavesdropper::default();
                    let mut channel = Channel::new().with_interceptor(&mut tap);
                    let mut gen = SessionGenerator::new(reg.stages, reg.t_range, mix_seed(cli.seed, 0x5e55))?;
                    let mut tag = HonestTag::new(&mut d, ChaCha8Rng::seed_from_u64(mix_seed(cli.seed, 0x7a9)));
                    run_authentication(&reg, &mut tag, &mut channel, gen.next_session())?;
                    drop(channel);
                    Transcript {
                        stages: reg.stages,
                        lanes: reg.lane_count(),
                        frames: tap.frames,
                    }
                }
            };
            let mut attacker = ReplayAttacker::new();
            attacker.eavesdrop(&recorded.frames);
            let scenario = ReplayScenario {
                recorded: recorded_session(&recorded)?,
                reuse_challenges: !fresh,
                interval: match interval {
                    IntervalArg::Random => IntervalPolicy::Random,
                    IntervalArg::Match => IntervalPolicy::ForceMatch,
                    IntervalArg::Flip => IntervalPolicy::ForceFlip,
                },
                sessions,
                seed: mix_seed(cli.seed, 0xa77),
            };
            Ok(render(cli.format, &replay_attack(&attacker, &reg, &scenario)?))
        }
        AttackCmd::Model {
            train,
            test,
            kind,
            epochs,
            lr,
            dataset,
            save_dataset,
            flags,
        } => {
            let total = train + test;
            if train == 0 || test == 0 {
                return Err(Error::InvalidConfig("--train and --test must both be positive".into()));
            }
            let crps = match dataset {
                Some(path) => dataset_from_text(&std::fs::read_to_string(path)?, flags.stages as u32)?,
                None => {
                    let single = DeviceFlags {
                        lanes: 1,
                        ..flags.clone()
                    };
                    let d = dualpuf::build_device(single.config(cli.seed)?)?;
                    let kind = match kind {
                        KindArg::Naked => CrpKind::Naked,
                        KindArg::M1 => CrpKind::Obfuscated(Mode::Original),
                        KindArg::M0 => CrpKind::Obfuscated(Mode::Swapped),
                        KindArg::Mixed => CrpKind::MixedParity,
                    };
                    let pair = &d.config.lane_pairs[0];
                    collect_crps(kind, pair, &d.lanes[0], total, flags.voter_t, mix_seed(cli.seed, 0xc4))?
                }
            };
            if let Some(path) = save_dataset {
                write_atomic(&path, &dataset_to_text(&crps))?;
            }
            let params = TrainParams {
                split: train as f64 / total as f64,
                epochs,
                learning_rate: lr,
                seed: cli.seed,
                ..Default::default()
            };
            Ok(render(cli.format, &train_linear_attack(&crps, &params)?))
        }
    }
}

fn metrics(args: MetricsArgs, cli: &Ctx) -> Result<String> {
    let width = args.flags.stages;
    if width > 63 {
        return Err(Error::InvalidConfig(format!("--stages {width} is too wide")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cli.seed, 0x3e7));
    let challenges: Vec<u64> = (0..args.challenges)
        .map(|_| rand::Rng::random_range(&mut rng, 1..(1u64 << width)))
        .collect();
    let m = match args.target {
        Target::Devices => {
            let devices = (0..args.devices as u64)
                .map(|i| dualpuf::build_device(args.flags.config(mix_seed(cli.seed, i))?))
                .collect::<Result<Vec<_>>>()?;
            puf_metrics(&devices, &challenges, args.repeats, &mut rng)?
        }
        Target::Lanes => {
            let d = dualpuf::build_device(args.flags.config(cli.seed)?)?;
            puf_metrics(&d.lanes, &challenges, args.repeats, &mut rng)?
        }
    };
    Ok(render(cli.format, &m))
}

fn run(cli: Cli) -> Result<()> {
    let Cli {
        seed,
        out,
        format,
        command,
    } = cli;
    let ctx = Ctx { seed, out, format };
    // These two use --out for the artifact they produce.
    let owns_out = matches!(
        command,
        Command::Device(DeviceCmd::Build { .. }) | Command::Auth(AuthCmd::Register { .. })
    );
    let text = match command {
        Command::Lfsr(cmd) => lfsr(cmd, ctx.format)?,
        Command::Device(cmd) => device(cmd, &ctx)?,
        Command::Auth(cmd) => auth(cmd, &ctx)?,
        Command::Attack(cmd) => attack(cmd, &ctx)?,
        Command::Metrics(args) => metrics(args, &ctx)?,
    };
    match &ctx.out {
        Some(path) if !owns_out => write_atomic(path, &text)?,
        _ => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
