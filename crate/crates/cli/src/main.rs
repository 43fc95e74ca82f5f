//! `taclink`: command-line front end for the voice-link toolkit.
//!
//! Subcommands map one-to-one onto the library modules: `link-budget`,
//! `airtime`, `energy`, `packet`, `simulate`, `sweep`, and `paper-repro`.
//! JSON and CSV outputs are the stable machine interface; text output is
//! human-oriented and may change. Exit status: 0 on success, 2 on
//! configuration errors (bad flags, malformed scenarios, invalid keys),
//! 1 on runtime failures.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use taclink_core::energy::{average_power, average_power_three_state, battery_life_hours, PowerProfile};
use taclink_core::linkbudget::{compute_budget, max_range, LinkParams};
use taclink_core::mac::MacEvent;
use taclink_core::phy::{effective_bitrate, time_on_air, PhyConfig};
use taclink_core::pipeline::{
    decrypt_packet, encrypt_packet, parse as parse_packet, serialize as serialize_packet,
    AudioFrame, CodecProfile, SessionKey,
};
use taclink_core::sim::{
    occupancy_from_events, run, sweep, Scenario, SweepAxis, DEFAULT_KEY_HEX,
};

/// Environment variable holding the AES-128 session key as 32 hex chars.
const KEY_ENV_VAR: &str = "TACLINK_KEY";

#[derive(Parser)]
#[command(
    name = "taclink",
    version,
    about = "Link engineering, packet pipeline, and two-node simulation for low-rate secure voice over LoRa",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Received-power chain: path loss, RX power, margin, feasibility.
    LinkBudget(LinkBudgetArgs),
    /// Frame time-on-air breakdown for one radio configuration.
    Airtime(AirtimeArgs),
    /// Average power and battery life from a duty cycle or an event log.
    Energy(EnergyArgs),
    /// Encodes or decodes a single wire packet (debugging aid).
    Packet(PacketArgs),
    /// Runs one scenario and emits the report (optionally an event log).
    Simulate(SimulateArgs),
    /// Runs one simulation per axis value and emits CSV.
    Sweep(SweepArgs),
    /// Checks the link-budget chain against its reference worked example.
    PaperRepro(PaperReproArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct LinkBudgetArgs {
    /// Link distance, km.
    #[arg(long, allow_hyphen_values = true)]
    distance_km: Option<f64>,
    /// Carrier frequency, MHz.
    #[arg(long, allow_hyphen_values = true)]
    freq_mhz: Option<f64>,
    /// Transmit power, dBm.
    #[arg(long, allow_hyphen_values = true)]
    tx_dbm: Option<f64>,
    /// Transmit antenna gain, dBi.
    #[arg(long, allow_hyphen_values = true)]
    tx_gain: Option<f64>,
    /// Receive antenna gain, dBi.
    #[arg(long, allow_hyphen_values = true)]
    rx_gain: Option<f64>,
    /// Combined system losses, dB.
    #[arg(long, allow_hyphen_values = true)]
    loss_db: Option<f64>,
    /// Receiver sensitivity override, dBm; omitted = tabulated value for
    /// the radio configuration.
    #[arg(long, allow_hyphen_values = true)]
    sensitivity: Option<f64>,
    /// Margin threshold for the feasibility verdict, dB.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    threshold_db: f64,
    /// Scenario file supplying link and radio parameters; flags override.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct AirtimeArgs {
    /// Spreading factor, 7..=12.
    #[arg(long, default_value_t = 7)]
    sf: u8,
    /// Bandwidth, Hz (125000, 250000, or 500000).
    #[arg(long, default_value_t = 125_000)]
    bw: u32,
    /// Coding-rate denominator, 5..=8 (4/5 .. 4/8).
    #[arg(long, default_value_t = 5)]
    cr: u8,
    /// Payload length on the wire, bytes.
    #[arg(long, default_value_t = 32)]
    payload: usize,
    /// Preamble length, symbols.
    #[arg(long, default_value_t = 8)]
    preamble: u16,
    /// Implicit (headerless) PHY framing.
    #[arg(long)]
    implicit_header: bool,
    /// Disable the PHY CRC trailer.
    #[arg(long)]
    no_crc: bool,
    /// Emit a CSV table over SF 7..=12 instead of one JSON breakdown.
    #[arg(long)]
    sweep_sf: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct EnergyArgs {
    /// Transmit duty cycle in [0, 1]; uses the two-state model
    /// (transmit vs sleep).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "events")]
    duty: Option<f64>,
    /// MAC event log (JSON Lines) to reconstruct per-node occupancy from;
    /// uses the three-state model (transmit / listen / sleep).
    #[arg(long, requires = "duration_s")]
    events: Option<PathBuf>,
    /// Simulated duration the event log covers, seconds.
    #[arg(long)]
    duration_s: Option<f64>,
    /// Idle listen time before sleep, ms (must match the producing run).
    #[arg(long, default_value_t = 2000)]
    idle_timeout_ms: u64,
    /// Transmit-state power draw, mW.
    #[arg(long, default_value_t = PowerProfile::default().p_tx_mw)]
    tx_mw: f64,
    /// Listen-state power draw, mW.
    #[arg(long, default_value_t = PowerProfile::default().p_listen_mw)]
    listen_mw: f64,
    /// Sleep-state power draw, mW.
    #[arg(long, default_value_t = PowerProfile::default().p_sleep_mw)]
    sleep_mw: f64,
    /// Battery capacity, mAh.
    #[arg(long, default_value_t = PowerProfile::default().battery_capacity_mah)]
    battery_mah: f64,
    /// Battery voltage, V.
    #[arg(long, default_value_t = PowerProfile::default().battery_voltage_v)]
    battery_v: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct PacketArgs {
    #[command(subcommand)]
    direction: PacketDirection,
}

#[derive(Subcommand)]
enum PacketDirection {
    /// Encrypts a payload into one serialized packet, printed as hex.
    Encode(PacketEncodeArgs),
    /// Parses and decrypts one serialized packet from hex.
    Decode(PacketDecodeArgs),
}

#[derive(Args)]
struct PacketEncodeArgs {
    /// Voice payload as hex.
    #[arg(long)]
    payload_hex: String,
    /// Packet sequence number.
    #[arg(long, default_value_t = 0)]
    seq: u16,
    /// Session nonce salt.
    #[arg(long, default_value_t = 0)]
    salt: u64,
    /// AES-128 key as 32 hex chars; overrides TACLINK_KEY and the
    /// development default.
    #[arg(long)]
    key_hex: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct PacketDecodeArgs {
    /// Serialized packet as hex.
    #[arg(long)]
    hex: String,
    /// AES-128 key as 32 hex chars; overrides TACLINK_KEY and the
    /// development default. Integrity is CRC-only: a wrong key decodes
    /// cleanly to garbage.
    #[arg(long)]
    key_hex: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file (JSON, schema_version 1).
    #[arg(long, required_unless_present = "print_default_scenario")]
    scenario: Option<PathBuf>,
    /// Override the scenario's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario's simulated duration, seconds.
    #[arg(long)]
    duration_s: Option<f64>,
    /// Write the MAC event log as JSON Lines to this file.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Print the built-in default scenario as JSON and exit.
    #[arg(long)]
    print_default_scenario: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario file the sweep starts from.
    #[arg(long)]
    scenario: PathBuf,
    /// Axis to vary: sf | distance | tx_power | payload.
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    values: Vec<f64>,
    /// Override the scenario's base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PaperReproArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

// ---- Error plumbing ----

enum CliError {
    /// Bad flags, unreadable or malformed inputs: exit 2.
    Config(String),
    /// Failures during execution: exit 1.
    Runtime(String),
}

impl From<taclink_core::Error> for CliError {
    fn from(e: taclink_core::Error) -> Self {
        if e.is_config_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

type CliResult = Result<(), CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn runtime_err(msg: impl Into<String>) -> CliError {
    CliError::Runtime(msg.into())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::LinkBudget(args) => cmd_link_budget(args),
        Command::Airtime(args) => cmd_airtime(args),
        Command::Energy(args) => cmd_energy(args),
        Command::Packet(args) => cmd_packet(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::PaperRepro(args) => cmd_paper_repro(args),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}

// ---- Shared helpers ----

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let raw = fs::read_to_string(path)
        .map_err(|e| config_err(format!("scenario {}: {e}", path.display())))?;
    let scenario: Scenario = serde_json::from_str(&raw)
        .map_err(|e| config_err(format!("scenario {}: {e}", path.display())))?;
    scenario.validate()?;
    Ok(scenario)
}

/// Key precedence: explicit flag, then TACLINK_KEY, then the development
/// default key.
fn resolve_key(flag: Option<&str>, salt: u64) -> Result<SessionKey, CliError> {
    let hex_key = match flag {
        Some(k) => k.to_string(),
        None => match std::env::var(KEY_ENV_VAR) {
            Ok(k) => k,
            Err(std::env::VarError::NotPresent) => DEFAULT_KEY_HEX.to_string(),
            Err(e) => return Err(config_err(format!("{KEY_ENV_VAR}: {e}"))),
        },
    };
    Ok(SessionKey::from_hex(hex_key.trim(), salt)?)
}

fn print_json<T: serde::Serialize>(value: &T) -> CliResult {
    let rendered = serde_json::to_string_pretty(value)
        .map_err(|e| runtime_err(format!("serializing output: {e}")))?;
    println!("{rendered}");
    Ok(())
}

// ---- link-budget ----

fn cmd_link_budget(args: LinkBudgetArgs) -> CliResult {
    let (mut link, phy) = match &args.scenario {
        Some(path) => {
            let s = load_scenario(path)?;
            (s.channel.link, s.phy)
        }
        None => (LinkParams::default(), PhyConfig::default()),
    };
    if let Some(v) = args.distance_km {
        link.distance_km = v;
    }
    if let Some(v) = args.freq_mhz {
        link.carrier_freq_mhz = v;
    }
    if let Some(v) = args.tx_dbm {
        link.tx_power_dbm = v;
    }
    if let Some(v) = args.tx_gain {
        link.tx_gain_dbi = v;
    }
    if let Some(v) = args.rx_gain {
        link.rx_gain_dbi = v;
    }
    if let Some(v) = args.loss_db {
        link.system_loss_db = v;
    }
    if let Some(v) = args.sensitivity {
        link.rx_sensitivity_dbm = Some(v);
    }
    let budget = compute_budget(&link, &phy, args.threshold_db)?;
    match args.format {
        Format::Json => print_json(&budget),
        Format::Text => {
            println!("path loss    {:>10.4} dB", budget.path_loss_db);
            println!("rx power     {:>10.4} dBm", budget.rx_power_dbm);
            println!("sensitivity  {:>10.4} dBm", budget.sensitivity_dbm);
            println!("margin       {:>10.4} dB", budget.link_margin_db);
            println!(
                "feasible     {} (threshold {:.2} dB)",
                if budget.feasible { "yes" } else { "no" },
                args.threshold_db
            );
            Ok(())
        }
    }
}

// ---- airtime ----

#[derive(serde::Serialize)]
struct AirtimeSweepRow {
    sf: u8,
    payload_bytes: usize,
    symbol_time_ms: f64,
    preamble_ms: f64,
    payload_symbols: u32,
    payload_ms: f64,
    total_ms: f64,
    effective_bitrate_bps: f64,
}

fn cmd_airtime(args: AirtimeArgs) -> CliResult {
    let phy = PhyConfig {
        spreading_factor: args.sf,
        bandwidth_hz: args.bw,
        coding_rate_denominator: args.cr,
        preamble_symbols: args.preamble,
        explicit_header: !args.implicit_header,
        crc_on: !args.no_crc,
    };
    if args.sweep_sf {
        let mut writer = csv::Writer::from_writer(std::io::stdout());
        for sf in 7..=12u8 {
            let p = PhyConfig {
                spreading_factor: sf,
                ..phy.clone()
            };
            let breakdown = time_on_air(&p, args.payload)?;
            writer
                .serialize(AirtimeSweepRow {
                    sf,
                    payload_bytes: args.payload,
                    symbol_time_ms: breakdown.symbol_time_ms,
                    preamble_ms: breakdown.preamble_ms,
                    payload_symbols: breakdown.payload_symbols,
                    payload_ms: breakdown.payload_ms,
                    total_ms: breakdown.total_ms,
                    effective_bitrate_bps: effective_bitrate(&p)?,
                })
                .map_err(|e| runtime_err(format!("writing CSV: {e}")))?;
        }
        writer
            .flush()
            .map_err(|e| runtime_err(format!("writing CSV: {e}")))?;
        return Ok(());
    }
    let breakdown = time_on_air(&phy, args.payload)?;
    match args.format {
        Format::Json => print_json(&breakdown),
        Format::Text => {
            println!("symbol time      {:>10.4} ms", breakdown.symbol_time_ms);
            println!("preamble         {:>10.4} ms", breakdown.preamble_ms);
            println!("payload symbols  {:>10}", breakdown.payload_symbols);
            println!("payload          {:>10.4} ms", breakdown.payload_ms);
            println!("total            {:>10.4} ms", breakdown.total_ms);
            println!(
                "effective rate   {:>10.2} bps",
                effective_bitrate(&phy)?
            );
            Ok(())
        }
    }
}

// ---- energy ----

#[derive(serde::Serialize)]
struct EnergyNodeRow {
    node_id: u8,
    tx_s: f64,
    listen_s: f64,
    sleep_s: f64,
    avg_power_mw: f64,
    battery_life_hours: f64,
}

#[derive(serde::Serialize)]
struct EnergyOutput {
    avg_power_mw: f64,
    battery_life_hours: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_node: Option<Vec<EnergyNodeRow>>,
}

fn cmd_energy(args: EnergyArgs) -> CliResult {
    let profile = PowerProfile {
        p_tx_mw: args.tx_mw,
        p_listen_mw: args.listen_mw,
        p_sleep_mw: args.sleep_mw,
        battery_capacity_mah: args.battery_mah,
        battery_voltage_v: args.battery_v,
    };
    profile.validate()?;

    let output = match (&args.duty, &args.events) {
        (Some(duty), None) => {
            let avg = average_power(*duty, &profile)?;
            EnergyOutput {
                avg_power_mw: avg,
                battery_life_hours: battery_life_hours(avg, &profile)?,
                per_node: None,
            }
        }
        (None, Some(path)) => {
            let duration_s = args
                .duration_s
                .expect("clap enforces --duration-s with --events");
            if !duration_s.is_finite() || duration_s <= 0.0 {
                return Err(config_err(format!(
                    "--duration-s must be > 0, got {duration_s}"
                )));
            }
            let events = load_events(path)?;
            let horizon_us = (duration_s * 1_000_000.0).round() as u64;
            let mut per_node = Vec::new();
            let mut worst = f64::MIN;
            for node_id in [0u8, 1] {
                let (tx_us, listen_us, sleep_us) = occupancy_from_events(
                    &events,
                    node_id,
                    horizon_us,
                    args.idle_timeout_ms * 1000,
                );
                let avg = average_power_three_state(
                    tx_us as f64 / horizon_us as f64,
                    listen_us as f64 / horizon_us as f64,
                    sleep_us as f64 / horizon_us as f64,
                    &profile,
                )?;
                worst = worst.max(avg);
                per_node.push(EnergyNodeRow {
                    node_id,
                    tx_s: tx_us as f64 / 1e6,
                    listen_s: listen_us as f64 / 1e6,
                    sleep_s: sleep_us as f64 / 1e6,
                    avg_power_mw: avg,
                    battery_life_hours: battery_life_hours(avg, &profile)?,
                });
            }
            EnergyOutput {
                avg_power_mw: worst,
                battery_life_hours: battery_life_hours(worst, &profile)?,
                per_node: Some(per_node),
            }
        }
        (None, None) => {
            return Err(config_err("pass exactly one of --duty or --events"));
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with forbids this"),
    };
    match args.format {
        Format::Json => print_json(&output),
        Format::Text => {
            println!("average power  {:>9.3} mW", output.avg_power_mw);
            println!("battery life   {:>9.2} h", output.battery_life_hours);
            if let Some(rows) = &output.per_node {
                for r in rows {
                    println!(
                        "node {}: tx {:.1} s, listen {:.1} s, sleep {:.1} s -> {:.3} mW, {:.2} h",
                        r.node_id, r.tx_s, r.listen_s, r.sleep_s, r.avg_power_mw,
                        r.battery_life_hours
                    );
                }
            }
            Ok(())
        }
    }
}

fn load_events(path: &Path) -> Result<Vec<MacEvent>, CliError> {
    let raw = fs::read_to_string(path)
        .map_err(|e| config_err(format!("events {}: {e}", path.display())))?;
    let mut events = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event: MacEvent = serde_json::from_str(line)
            .map_err(|e| config_err(format!("events {} line {}: {e}", path.display(), i + 1)))?;
        events.push(event);
    }
    Ok(events)
}

// ---- packet ----

#[derive(serde::Serialize)]
struct PacketEncodeOutput {
    hex: String,
    wire_bytes: usize,
    seq: u16,
    nonce_hex: String,
    crc16: String,
}

#[derive(serde::Serialize)]
struct PacketDecodeOutput {
    version: u8,
    flags: u8,
    seq: u16,
    nonce_hex: String,
    ciphertext_hex: String,
    crc16: String,
    payload_hex: String,
    payload_bytes: usize,
}

fn cmd_packet(args: PacketArgs) -> CliResult {
    match args.direction {
        PacketDirection::Encode(a) => {
            let payload = hex::decode(a.payload_hex.trim())
                .map_err(|e| config_err(format!("--payload-hex: {e}")))?;
            let key = resolve_key(a.key_hex.as_deref(), a.salt)?;
            let frame = AudioFrame {
                seq: a.seq,
                duration_ms: CodecProfile::default().frame_ms,
                pcm_energy: 0.0,
                payload,
            };
            let packet = encrypt_packet(&frame, &key)?;
            let wire = serialize_packet(&packet)?;
            let out = PacketEncodeOutput {
                hex: hex::encode(&wire),
                wire_bytes: wire.len(),
                seq: packet.seq,
                nonce_hex: hex::encode(packet.nonce),
                crc16: format!("0x{:04X}", packet.crc16),
            };
            match a.format {
                Format::Json => print_json(&out),
                Format::Text => {
                    println!("{}", out.hex);
                    Ok(())
                }
            }
        }
        PacketDirection::Decode(a) => {
            let wire = hex::decode(a.hex.trim())
                .map_err(|e| config_err(format!("--hex: {e}")))?;
            let key = resolve_key(a.key_hex.as_deref(), 0)?;
            let packet = parse_packet(&wire)?;
            let frame = decrypt_packet(&packet, &key, &CodecProfile::default())?;
            let out = PacketDecodeOutput {
                version: packet.version,
                flags: packet.flags,
                seq: packet.seq,
                nonce_hex: hex::encode(packet.nonce),
                ciphertext_hex: hex::encode(&packet.ciphertext),
                crc16: format!("0x{:04X}", packet.crc16),
                payload_hex: hex::encode(&frame.payload),
                payload_bytes: frame.payload.len(),
            };
            match a.format {
                Format::Json => print_json(&out),
                Format::Text => {
                    println!("{}", out.payload_hex);
                    Ok(())
                }
            }
        }
    }
}

// ---- simulate ----

fn cmd_simulate(args: SimulateArgs) -> CliResult {
    if args.print_default_scenario {
        return print_json(&Scenario::default());
    }
    let path = args.scenario.as_ref().expect("clap enforces --scenario");
    let mut scenario = load_scenario(path)?;
    if let Some(seed) = args.seed {
        scenario.channel.rng_seed = seed;
    }
    if let Some(duration_s) = args.duration_s {
        scenario.duration_s = duration_s;
    }
    let sim = run(&scenario)?;
    if let Some(events_path) = &args.events {
        let mut file = fs::File::create(events_path)
            .map_err(|e| runtime_err(format!("events {}: {e}", events_path.display())))?;
        for event in &sim.events {
            let line = serde_json::to_string(event)
                .map_err(|e| runtime_err(format!("serializing event: {e}")))?;
            writeln!(file, "{line}")
                .map_err(|e| runtime_err(format!("events {}: {e}", events_path.display())))?;
        }
    }
    match args.format {
        Format::Json => print_json(&sim.report),
        Format::Text => {
            let r = &sim.report;
            println!(
                "packets: {} sent, {} delivered, {} lost to channel, {} to collision, {} to CRC, {} queue drops",
                r.packets_sent, r.packets_delivered, r.lost_channel, r.lost_collision,
                r.lost_crc, r.queue_drops
            );
            match (r.latency_p50_ms, r.latency_p95_ms, r.latency_max_ms) {
                (Some(p50), Some(p95), Some(max)) => println!(
                    "latency: p50 {p50:.3} ms, p95 {p95:.3} ms, max {max:.3} ms"
                ),
                _ => println!("latency: no delivered packets"),
            }
            println!(
                "duty cycle: node 0 {:.4}, node 1 {:.4}",
                r.duty_cycle_per_node[0], r.duty_cycle_per_node[1]
            );
            println!(
                "power: {:.1} mW worst node -> battery life {:.2} h",
                r.avg_power_mw, r.battery_life_h
            );
            if !r.sustainable_realtime {
                println!("note: realtime voice unsustainable at this configuration");
            }
            for w in &r.warnings {
                println!("warning: {w}");
            }
            Ok(())
        }
    }
}

// ---- sweep ----

fn cmd_sweep(args: SweepArgs) -> CliResult {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.channel.rng_seed = seed;
    }
    let axis: SweepAxis = args.axis.parse()?;
    let rows = sweep(&scenario, axis, &args.values)?;
    let write_rows = |w: Box<dyn std::io::Write>| -> Result<(), CliError> {
        let mut writer = csv::Writer::from_writer(w);
        for row in &rows {
            writer
                .serialize(row)
                .map_err(|e| runtime_err(format!("writing CSV: {e}")))?;
        }
        writer
            .flush()
            .map_err(|e| runtime_err(format!("writing CSV: {e}")))
    };
    match &args.output {
        Some(path) => {
            let file = fs::File::create(path)
                .map_err(|e| runtime_err(format!("output {}: {e}", path.display())))?;
            write_rows(Box::new(file))
        }
        None => write_rows(Box::new(std::io::stdout())),
    }
}

// ---- paper-repro ----

#[derive(serde::Serialize)]
struct ReproLine {
    quantity: String,
    computed: f64,
    reference: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(serde::Serialize)]
struct ReproOutput {
    lines: Vec<ReproLine>,
    pass: bool,
}

fn cmd_paper_repro(args: PaperReproArgs) -> CliResult {
    // The reference fixture: 17 dBm, +2/+2 dBi, 5 dB losses, 868 MHz,
    // 1.5 km, receiver pinned at −120 dBm.
    let link = LinkParams {
        tx_power_dbm: 17.0,
        tx_gain_dbi: 2.0,
        rx_gain_dbi: 2.0,
        system_loss_db: 5.0,
        carrier_freq_mhz: 868.0,
        distance_km: 1.5,
        rx_sensitivity_dbm: Some(-120.0),
    };
    let phy = PhyConfig::default();
    let budget = compute_budget(&link, &phy, 0.0)?;
    let range_km = max_range(&link, &phy, 41.27)?;

    let lines = vec![
        ReproLine {
            quantity: "path_loss_db".into(),
            computed: budget.path_loss_db,
            reference: 94.73,
            tolerance: 0.05,
            pass: (budget.path_loss_db - 94.73).abs() <= 0.05,
        },
        ReproLine {
            quantity: "rx_power_dbm".into(),
            computed: budget.rx_power_dbm,
            reference: -78.73,
            tolerance: 0.05,
            pass: (budget.rx_power_dbm + 78.73).abs() <= 0.05,
        },
        ReproLine {
            quantity: "link_margin_db".into(),
            computed: budget.link_margin_db,
            reference: 41.27,
            tolerance: 0.5,
            pass: (budget.link_margin_db - 41.27).abs() <= 0.5,
        },
        ReproLine {
            quantity: "max_range_km_at_41.27dB".into(),
            computed: range_km,
            reference: 1.5,
            tolerance: 0.001,
            pass: (range_km - 1.5).abs() <= 0.001,
        },
    ];
    let all_pass = lines.iter().all(|l| l.pass);
    let output = ReproOutput {
        lines,
        pass: all_pass,
    };
    match args.format {
        Format::Json => print_json(&output)?,
        Format::Text => {
            println!(
                "reference link: 868 MHz, 1.5 km, 17 dBm, +2/+2 dBi antennas, 5 dB losses, sensitivity -120 dBm"
            );
            for l in &output.lines {
                println!(
                    "  {:<24} {:>12.4}  reference {:>8.2}  (±{})  {}",
                    l.quantity,
                    l.computed,
                    l.reference,
                    l.tolerance,
                    if l.pass { "PASS" } else { "FAIL" }
                );
            }
            println!("verdict: {}", if all_pass { "PASS" } else { "FAIL" });
        }
    }
    if all_pass {
        Ok(())
    } else {
        Err(runtime_err("reference reproduction failed"))
    }
}
