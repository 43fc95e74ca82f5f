//! Deterministic discrete-event simulation of two half-duplex peers
//! exchanging VOX-gated, encrypted voice frames over a shadowed channel.
//!
//! The engine runs on an integer microsecond clock with a single priority
//! queue of timestamped events. Ties break on (time, event-kind ordinal,
//! node id, insertion sequence), so a scenario plus a seed reproduces the
//! same event log and report byte for byte. Randomness (per-packet channel
//! shadowing, optional speech jitter) comes from a seeded ChaCha8 generator
//! with one stream per purpose.
//!
//! Latency accounting follows the five-component sum
//! `t_total = t_encoding + t_encryption + t_packetization + t_airtime +
//! t_decoding`; time spent waiting in the transmit queue is reported
//! separately per packet (`queue_wait_us`) and is not part of `t_total`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{average_power_three_state, battery_life_hours, PowerProfile};
use crate::error::{Error, Result};
use crate::linkbudget::{effective_sensitivity, received_power, LinkParams};
use crate::mac::{
    step, MacConfig, MacEvent, MacEventKind, NodeState, QueuedFrame,
};
use crate::phy::{effective_bitrate, time_on_air_us, PhyConfig, MAX_FRAME_PAYLOAD_BYTES};
use crate::pipeline::{
    encode_frame, serialize, CodecProfile, PacketSession, SessionKey, VoxConfig,
    PACKET_OVERHEAD_BYTES,
};

// ---- Constants ----

/// Serialization cost model: one microsecond per bit at the assumed 1 Mbit/s
/// MCU bus throughput, so 8 us per byte.
pub const PACKETIZATION_US_PER_BYTE: u64 = 8;

/// Fixed scheduling overhead added to every packetization, us.
pub const PACKETIZATION_FIXED_US: u64 = 1000;

/// Development key used when a scenario supplies none. Not a secret: real
/// deployments must set `key_hex` (or the TACLINK_KEY environment variable
/// through the CLI).
pub const DEFAULT_KEY_HEX: &str = "000102030405060708090a0b0c0d0e0f";

/// Scenario schema understood by this build.
pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

// ---- Domain types ----

/// Radio channel between the two nodes: a deterministic budget plus
/// i.i.d. per-packet log-normal shadowing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Budget-chain inputs shared by both directions.
    pub link: LinkParams,
    /// Standard deviation of per-packet Gaussian shadowing, dB. Zero makes
    /// delivery a hard threshold.
    pub shadowing_sigma_db: f64,
    /// Master seed for every random draw in a run.
    pub rng_seed: u64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            link: LinkParams::default(),
            shadowing_sigma_db: 0.0,
            rng_seed: 42,
        }
    }
}

/// One node's synthetic speech-activity schedule: periodic talk bursts
/// separated by silence, optionally jittered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeechPattern {
    /// Talk burst length, ms. Zero silences the node entirely.
    pub talk_ms: u32,
    /// Silence between bursts, ms.
    pub silence_ms: u32,
    /// Offset of the first burst from simulation start, ms.
    pub start_offset_ms: u32,
    /// Uniform jitter applied to each burst start, +/- this many ms.
    pub jitter_ms: u32,
    /// Envelope amplitude during talk, in [0, 1]; must reach the VOX
    /// threshold for the node to ever transmit.
    pub amplitude: f64,
}

impl SpeechPattern {
    fn period_ms(&self) -> u64 {
        self.talk_ms as u64 + self.silence_ms as u64
    }
}

/// Complete description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    /// Config format version; must equal [`SCENARIO_SCHEMA_VERSION`].
    pub schema_version: u32,
    /// Simulated wall time, seconds.
    pub duration_s: f64,
    pub phy: PhyConfig,
    pub vox: VoxConfig,
    pub codec: CodecProfile,
    pub power: PowerProfile,
    pub channel: ChannelModel,
    pub mac: MacConfig,
    /// Speech schedule per node (index = node id).
    pub speech: [SpeechPattern; 2],
    /// Base nonce salt; node `i` derives its sending salt as
    /// `session_salt ^ i` so the two directions never share a nonce.
    pub session_salt: u64,
    /// AES-128 key as 32 hex chars; [`DEFAULT_KEY_HEX`] when absent.
    pub key_hex: Option<String>,
}

impl Default for Scenario {
    /// The default voice scenario: SF7 at 125 kHz, 2400 bps / 40 ms codec
    /// frames, 1 s talk bursts every 5 s per node (20% talk time) offset so
    /// the two speakers alternate, deterministic channel at 1.5 km.
    fn default() -> Self {
        Scenario {
            schema_version: SCENARIO_SCHEMA_VERSION,
            duration_s: 60.0,
            phy: PhyConfig::default(),
            vox: VoxConfig::default(),
            codec: CodecProfile::default(),
            power: PowerProfile::default(),
            channel: ChannelModel::default(),
            mac: MacConfig::default(),
            speech: [
                SpeechPattern {
                    talk_ms: 1000,
                    silence_ms: 4000,
                    start_offset_ms: 0,
                    jitter_ms: 0,
                    amplitude: 0.8,
                },
                SpeechPattern {
                    talk_ms: 1000,
                    silence_ms: 4000,
                    start_offset_ms: 2500,
                    jitter_ms: 0,
                    amplitude: 0.8,
                },
            ],
            session_salt: 0x7461_636c_696e_6b00,
            key_hex: None,
        }
    }
}

/// The default scenario, as a function for binding layers.
pub fn default_scenario() -> Scenario {
    Scenario::default()
}

impl Scenario {
    /// Validates every sub-config and the cross-cutting structural rules.
    /// Inconsistencies that merely degrade service (codec bitrate beyond the
    /// physical rate) are not errors; [`run`] surfaces those as report
    /// warnings instead.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(Error::InvalidScenario {
                reason: format!(
                    "schema_version {} unsupported, this build speaks {}",
                    self.schema_version, SCENARIO_SCHEMA_VERSION
                ),
            });
        }
        if !self.duration_s.is_finite() || self.duration_s <= 0.0 {
            return Err(Error::InvalidScenario {
                reason: format!("duration_s must be > 0, got {}", self.duration_s),
            });
        }
        self.phy.validate()?;
        self.vox.validate()?;
        self.codec.validate()?;
        self.power.validate()?;
        self.mac.validate()?;
        self.channel.link.validate_with_tx_envelope(false)?;
        if !self.channel.shadowing_sigma_db.is_finite() || self.channel.shadowing_sigma_db < 0.0 {
            return Err(Error::InvalidScenario {
                reason: format!(
                    "shadowing_sigma_db must be >= 0, got {}",
                    self.channel.shadowing_sigma_db
                ),
            });
        }
        let wire_len = self.codec.frame_bytes() + PACKET_OVERHEAD_BYTES;
        if wire_len > MAX_FRAME_PAYLOAD_BYTES {
            return Err(Error::InvalidScenario {
                reason: format!(
                    "codec frames of {} bytes serialize to {wire_len}-byte packets, over the {MAX_FRAME_PAYLOAD_BYTES}-byte frame limit",
                    self.codec.frame_bytes()
                ),
            });
        }
        for (i, sp) in self.speech.iter().enumerate() {
            if !(0.0..=1.0).contains(&sp.amplitude) {
                return Err(Error::InvalidScenario {
                    reason: format!("speech[{i}].amplitude must lie in [0, 1], got {}", sp.amplitude),
                });
            }
            if sp.talk_ms > 0 && 2 * sp.jitter_ms >= sp.silence_ms.max(1) {
                return Err(Error::InvalidScenario {
                    reason: format!(
                        "speech[{i}].jitter_ms {} too large for silence_ms {}; bursts could overlap",
                        sp.jitter_ms, sp.silence_ms
                    ),
                });
            }
        }
        if let Some(hex_key) = &self.key_hex {
            SessionKey::from_hex(hex_key, 0)?;
        }
        Ok(())
    }

    /// Session key for one node's sending direction: shared AES key, salt
    /// diversified by node id so the directions never reuse a nonce.
    pub fn session_key_for(&self, node_id: u8) -> Result<SessionKey> {
        let hex_key = self.key_hex.as_deref().unwrap_or(DEFAULT_KEY_HEX);
        SessionKey::from_hex(hex_key, self.session_salt ^ node_id as u64)
    }

    fn horizon_us(&self) -> u64 {
        (self.duration_s * 1_000_000.0).round() as u64
    }
}

/// Where one transmitted packet ended up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Disposition {
    Delivered,
    LostChannel,
    LostCollision,
    LostCrc,
}

/// Per-transmitted-packet record. Latency components are integer
/// microseconds so the five-term sum identity is exact; aggregate statistics
/// in [`SimReport`] are milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub seq: u16,
    /// Sending node.
    pub tx_node: u8,
    /// Instant the packet entered the transmit queue, us.
    pub queued_us: u64,
    /// Instant the transmission started, us.
    pub tx_start_us: u64,
    /// Queueing delay, us; deliberately outside `t_total_us`.
    pub queue_wait_us: u64,
    pub t_encoding_us: u64,
    pub t_encryption_us: u64,
    pub t_packetization_us: u64,
    pub t_airtime_us: u64,
    /// Decrypt + decode time; only delivered packets have one.
    pub t_decoding_us: Option<u64>,
    /// Five-component sum; only delivered packets have one.
    pub t_total_us: Option<u64>,
    /// Received power after shadowing, dBm.
    pub rx_power_dbm: f64,
    /// Margin over the sensitivity in use after shadowing, dB.
    pub margin_db: f64,
    pub disposition: Disposition,
}

/// One node's time split across power modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeOccupancy {
    pub node_id: u8,
    pub tx_us: u64,
    pub listen_us: u64,
    pub sleep_us: u64,
    /// Three-state average power for this node, mW.
    pub avg_power_mw: f64,
}

/// Everything a run produces besides the raw event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub schema_version: u32,
    pub duration_s: f64,
    /// Completed transmissions; in-flight at the horizon never counts.
    pub packets_sent: u64,
    pub packets_delivered: u64,
    pub lost_channel: u64,
    pub lost_collision: u64,
    pub lost_crc: u64,
    /// Frames rejected by full transmit queues (never sent).
    pub queue_drops: u64,
    pub latency_p50_ms: Option<f64>,
    pub latency_p95_ms: Option<f64>,
    pub latency_max_ms: Option<f64>,
    pub duty_cycle_per_node: Vec<f64>,
    pub occupancy_per_node: Vec<NodeOccupancy>,
    /// Power of the hungriest node, mW; endurance is limited by it.
    pub avg_power_mw: f64,
    pub battery_life_h: f64,
    /// False when the codec bitrate exceeds the physical effective bitrate,
    /// i.e. realtime voice cannot be sustained at this configuration.
    pub sustainable_realtime: bool,
    pub warnings: Vec<String>,
    pub packets: Vec<PacketRecord>,
}

/// A finished run: the report plus the full MAC event trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRun {
    pub report: SimReport,
    pub events: Vec<MacEvent>,
}

/// Outcome of pushing one packet through the channel model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelOutcome {
    /// Received power after the shadowing draw, dBm.
    pub rx_power_dbm: f64,
    /// Margin over the sensitivity in use, dB.
    pub margin_db: f64,
    pub delivered: bool,
}

// ---- Channel ----

/// Applies the channel to one packet: received power minus a Gaussian
/// shadowing draw, delivered exactly when the result clears the receiver
/// sensitivity. With sigma = 0 no randomness is consumed and the outcome is
/// a hard threshold.
pub fn apply_channel<R: Rng>(
    channel: &ChannelModel,
    phy: &PhyConfig,
    rng: &mut R,
) -> Result<ChannelOutcome> {
    let nominal_rx_dbm = received_power(&channel.link)?;
    let sensitivity_dbm = effective_sensitivity(&channel.link, phy)?;
    let shadow_db = if channel.shadowing_sigma_db > 0.0 {
        let normal = Normal::new(0.0, channel.shadowing_sigma_db).map_err(|e| {
            Error::InvalidScenario {
                reason: format!("shadowing distribution: {e}"),
            }
        })?;
        normal.sample(rng)
    } else {
        0.0
    };
    let rx_power_dbm = nominal_rx_dbm - shadow_db;
    let margin_db = rx_power_dbm - sensitivity_dbm;
    Ok(ChannelOutcome {
        rx_power_dbm,
        margin_db,
        delivered: margin_db >= 0.0,
    })
}

// ---- Engine ----

/// Engine event kinds in tie-break order: channel releases resolve first,
/// then speech edges, captures, gate closures, queue arrivals, transmit
/// attempts, and finally sleep checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ev {
    TxEnd,
    TalkEnd,
    TalkStart,
    FrameCapture,
    VoxCloseCheck { expected_close_us: u64 },
    FrameReady { seq: u16, capture_end_us: u64 },
    TxAttempt,
    IdleCheck,
}

impl Ev {
    fn ordinal(&self) -> u8 {
        match self {
            Ev::TxEnd => 0,
            Ev::TalkEnd => 1,
            Ev::TalkStart => 2,
            Ev::FrameCapture => 3,
            Ev::VoxCloseCheck { .. } => 4,
            Ev::FrameReady { .. } => 5,
            Ev::TxAttempt => 6,
            Ev::IdleCheck => 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct HeapKey {
    time_us: u64,
    ordinal: u8,
    node: u8,
    push_seq: u64,
}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time_us, self.ordinal, self.node, self.push_seq).cmp(&(
            other.time_us,
            other.ordinal,
            other.node,
            other.push_seq,
        ))
    }
}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy)]
struct ActiveTx {
    sender: usize,
    seq: u16,
    end_us: u64,
}

struct PendingPacket {
    wire_bytes: Vec<u8>,
    ready_us: u64,
}

struct Engine {
    scenario: Scenario,
    key: SessionKey,
    nodes: [NodeState; 2],
    sessions: [PacketSession; 2],
    talking: [bool; 2],
    last_talk_end_us: [u64; 2],
    capture_armed: [bool; 2],
    heap: BinaryHeap<Reverse<(HeapKey, EvSlot)>>,
    push_seq: u64,
    channel_tx: Option<ActiveTx>,
    rng_channel: ChaCha8Rng,
    log: Vec<MacEvent>,
    pending: HashMap<(u8, u16), PendingPacket>,
    records: Vec<PacketRecord>,
    queue_drops: u64,
    horizon_us: u64,
    // Per-packet constants: every frame has the same size in a run.
    airtime_us: u64,
    t_encoding_us: u64,
    t_encryption_us: u64,
    t_packetization_us: u64,
    t_decoding_us: u64,
    frame_us: u64,
    hangover_us: u64,
}

/// Heap payload wrapper so the tuple ordering never inspects event payloads.
#[derive(Debug, Clone, Copy)]
struct EvSlot(Ev);

impl PartialEq for EvSlot {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for EvSlot {}
impl PartialOrd for EvSlot {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for EvSlot {
    fn cmp(&self, _: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}

fn ms_to_us(ms: f64) -> u64 {
    (ms * 1000.0).round() as u64
}

impl Engine {
    fn new(scenario: &Scenario) -> Result<Engine> {
        let key = scenario.session_key_for(0)?;
        let wire_len = scenario.codec.frame_bytes() + PACKET_OVERHEAD_BYTES;
        let airtime_us = time_on_air_us(&scenario.phy, wire_len)?;
        let mut rng_channel = ChaCha8Rng::seed_from_u64(scenario.channel.rng_seed);
        rng_channel.set_stream(0);
        Ok(Engine {
            key,
            nodes: [NodeState::new(0), NodeState::new(1)],
            sessions: [
                PacketSession::new(scenario.session_key_for(0)?),
                PacketSession::new(scenario.session_key_for(1)?),
            ],
            talking: [false; 2],
            last_talk_end_us: [0; 2],
            capture_armed: [false; 2],
            heap: BinaryHeap::new(),
            push_seq: 0,
            channel_tx: None,
            rng_channel,
            log: Vec::new(),
            pending: HashMap::new(),
            records: Vec::new(),
            queue_drops: 0,
            horizon_us: scenario.horizon_us(),
            airtime_us,
            t_encoding_us: ms_to_us(scenario.codec.encode_delay_ms),
            t_encryption_us: ms_to_us(scenario.codec.crypto_delay_ms),
            t_packetization_us: wire_len as u64 * PACKETIZATION_US_PER_BYTE
                + PACKETIZATION_FIXED_US,
            t_decoding_us: ms_to_us(scenario.codec.crypto_delay_ms)
                + ms_to_us(scenario.codec.decode_delay_ms),
            frame_us: scenario.codec.frame_ms as u64 * 1000,
            hangover_us: scenario.vox.hangover_ms as u64 * 1000,
            scenario: scenario.clone(),
        })
    }

    fn push(&mut self, time_us: u64, node: usize, ev: Ev) {
        if time_us > self.horizon_us {
            return;
        }
        let key = HeapKey {
            time_us,
            ordinal: ev.ordinal(),
            node: node as u8,
            push_seq: self.push_seq,
        };
        self.push_seq += 1;
        self.heap.push(Reverse((key, EvSlot(ev))));
    }

    fn channel_busy_at(&self, now_us: u64) -> bool {
        self.channel_tx.is_some_and(|tx| now_us < tx.end_us)
    }

    /// Runs one node's state machine at `now` and absorbs the fallout:
    /// transmission starts claim the channel and put the peer into receive.
    fn step_node(&mut self, i: usize, now_us: u64) {
        let busy = self.channel_busy_at(now_us);
        let (next, events) = step(self.nodes[i].clone(), now_us, busy, &self.scenario.mac);
        self.nodes[i] = next;
        for ev in events {
            match ev.kind {
                MacEventKind::TxStart => {
                    let seq = ev.packet_ref.expect("TX_START carries its packet");
                    let end_us = now_us + self.airtime_us;
                    self.channel_tx = Some(ActiveTx {
                        sender: i,
                        seq,
                        end_us,
                    });
                    self.log.push(ev);
                    self.push(end_us, i, Ev::TxEnd);
                    // The peer hears the preamble immediately: wake it if
                    // needed and put it into frame capture.
                    let peer = 1 - i;
                    let (woken, wake_events) =
                        step(self.nodes[peer].clone(), now_us, true, &self.scenario.mac);
                    self.nodes[peer] = woken;
                    debug_assert!(wake_events.is_empty(), "peer wake emits nothing");
                    self.nodes[peer].set_rx_active(true, now_us);
                    self.log.push(MacEvent {
                        time_us: now_us,
                        node_id: peer as u8,
                        kind: MacEventKind::RxStart,
                        packet_ref: Some(seq),
                    });
                }
                MacEventKind::TxEnd => {
                    self.log.push(ev);
                }
                _ => self.log.push(ev),
            }
        }
    }

    fn maybe_schedule_idle(&mut self, i: usize) {
        let node = &self.nodes[i];
        if node.mode == crate::mac::Mode::Listen && !node.is_active() {
            self.push(
                node.idle_since_us + self.scenario.mac.idle_timeout_us(),
                i,
                Ev::IdleCheck,
            );
        }
    }

    fn schedule_speech(&mut self) -> Result<()> {
        for i in 0..2 {
            let sp = self.scenario.speech[i].clone();
            if sp.talk_ms == 0 {
                continue;
            }
            if sp.amplitude < self.scenario.vox.threshold {
                // Energy never reaches the gate: the node stays silent.
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(self.scenario.channel.rng_seed);
            rng.set_stream(10 + i as u64);
            let period_us = sp.period_ms() * 1000;
            let talk_us = sp.talk_ms as u64 * 1000;
            let mut k = 0u64;
            loop {
                let nominal_us = sp.start_offset_ms as u64 * 1000 + k * period_us;
                if nominal_us > self.horizon_us {
                    break;
                }
                let jitter_us = if sp.jitter_ms > 0 {
                    let j = sp.jitter_ms as i64 * 1000;
                    rng.gen_range(-j..=j)
                } else {
                    0
                };
                let start_us = nominal_us.saturating_add_signed(jitter_us);
                self.push(start_us, i, Ev::TalkStart);
                self.push(start_us + talk_us, i, Ev::TalkEnd);
                self.push(
                    start_us + talk_us + self.hangover_us,
                    i,
                    Ev::VoxCloseCheck {
                        expected_close_us: start_us + talk_us,
                    },
                );
                k += 1;
            }
        }
        Ok(())
    }

    fn handle(&mut self, now_us: u64, node: usize, ev: Ev) -> Result<()> {
        match ev {
            Ev::TalkStart => {
                self.talking[node] = true;
                if let Some(edge) = self.nodes[node].set_vox(true, now_us) {
                    self.log.push(edge);
                    if !self.capture_armed[node] {
                        self.capture_armed[node] = true;
                        self.push(now_us + self.frame_us, node, Ev::FrameCapture);
                    }
                }
                self.step_node(node, now_us);
            }
            Ev::TalkEnd => {
                self.talking[node] = false;
                self.last_talk_end_us[node] = now_us;
            }
            Ev::VoxCloseCheck { expected_close_us } => {
                if !self.talking[node] && self.last_talk_end_us[node] == expected_close_us {
                    if let Some(edge) = self.nodes[node].set_vox(false, now_us) {
                        self.log.push(edge);
                    }
                    self.step_node(node, now_us);
                    self.maybe_schedule_idle(node);
                }
            }
            Ev::FrameCapture => {
                if !self.nodes[node].vox_open {
                    self.capture_armed[node] = false;
                    return Ok(());
                }
                let seq = self.nodes[node].seq_counter;
                self.nodes[node].seq_counter = self.nodes[node].seq_counter.wrapping_add(1);
                let amplitude = self.scenario.speech[node].amplitude;
                let frame = encode_frame(
                    seq,
                    &[amplitude],
                    self.scenario.codec.bitrate_bps,
                    self.scenario.codec.frame_ms,
                );
                let pkt = self.sessions[node].encrypt_frame(&frame)?;
                let wire_bytes = serialize(&pkt)?;
                let ready_us = now_us
                    + self.t_encoding_us
                    + self.t_encryption_us
                    + self.t_packetization_us;
                self.pending.insert(
                    (node as u8, seq),
                    PendingPacket {
                        wire_bytes,
                        ready_us,
                    },
                );
                self.push(ready_us, node, Ev::FrameReady {
                    seq,
                    capture_end_us: now_us,
                });
                self.push(now_us + self.frame_us, node, Ev::FrameCapture);
            }
            Ev::FrameReady { seq, .. } => {
                let frame = QueuedFrame {
                    seq,
                    ready_us: now_us,
                    airtime_us: self.airtime_us,
                };
                let scenario_mac = self.scenario.mac.clone();
                if let Some(drop_ev) = self.nodes[node].enqueue(frame, now_us, &scenario_mac) {
                    self.log.push(drop_ev);
                    self.queue_drops += 1;
                    self.pending.remove(&(node as u8, seq));
                    return Ok(());
                }
                if self.nodes[node].tx_queue.len() == 1
                    && self.nodes[node].mode != crate::mac::Mode::Transmit
                {
                    self.push(self.nodes[node].next_tx_allowed_us, node, Ev::TxAttempt);
                }
            }
            Ev::TxAttempt => {
                self.step_node(node, now_us);
            }
            Ev::TxEnd => {
                let active = self.channel_tx.expect("TxEnd with no transmission");
                debug_assert_eq!(active.sender, node);
                debug_assert_eq!(active.end_us, now_us);
                // Sender first: completes its transmission (the channel no
                // longer reads busy at the end instant) and emits TX_END.
                self.step_node(node, now_us);
                self.channel_tx = None;
                // Receiver side: close the capture and resolve delivery.
                let peer = 1 - node;
                self.nodes[peer].set_rx_active(false, now_us);
                self.log.push(MacEvent {
                    time_us: now_us,
                    node_id: peer as u8,
                    kind: MacEventKind::RxEnd,
                    packet_ref: Some(active.seq),
                });
                self.resolve_delivery(node, active.seq, now_us)?;
                // Both nodes face a fresh carrier-sense window now that the
                // channel is quiet; the sender's own machine armed itself in
                // step(), the peer is re-armed here.
                let sense_us = self.scenario.mac.carrier_sense_us();
                for i in [node, peer] {
                    if !self.nodes[i].tx_queue.is_empty() {
                        self.nodes[i].next_tx_allowed_us =
                            self.nodes[i].next_tx_allowed_us.max(now_us + sense_us);
                        self.push(self.nodes[i].next_tx_allowed_us, i, Ev::TxAttempt);
                    }
                    self.maybe_schedule_idle(i);
                }
            }
            Ev::IdleCheck => {
                self.step_node(node, now_us);
            }
        }
        Ok(())
    }

    /// Decides one completed transmission's fate and writes its record.
    fn resolve_delivery(&mut self, sender: usize, seq: u16, now_us: u64) -> Result<()> {
        let pending = self
            .pending
            .remove(&(sender as u8, seq))
            .expect("completed transmission without a pending packet");
        let outcome = apply_channel(
            &self.scenario.channel,
            &self.scenario.phy,
            &mut self.rng_channel,
        )?;
        let tx_start_us = now_us - self.airtime_us;
        let mut record = PacketRecord {
            seq,
            tx_node: sender as u8,
            queued_us: pending.ready_us,
            tx_start_us,
            queue_wait_us: tx_start_us - pending.ready_us,
            t_encoding_us: self.t_encoding_us,
            t_encryption_us: self.t_encryption_us,
            t_packetization_us: self.t_packetization_us,
            t_airtime_us: self.airtime_us,
            t_decoding_us: None,
            t_total_us: None,
            rx_power_dbm: outcome.rx_power_dbm,
            margin_db: outcome.margin_db,
            disposition: Disposition::LostChannel,
        };
        if outcome.delivered {
            // The receiver runs the real pipeline on the real bytes; a
            // decrypt failure here would be a CRC casualty.
            let parsed = crate::pipeline::parse(&pending.wire_bytes);
            let decoded = parsed.and_then(|p| {
                crate::pipeline::decrypt_packet(&p, &self.key, &self.scenario.codec)
            });
            match decoded {
                Ok(_frame) => {
                    record.t_decoding_us = Some(self.t_decoding_us);
                    record.t_total_us = Some(
                        self.t_encoding_us
                            + self.t_encryption_us
                            + self.t_packetization_us
                            + self.airtime_us
                            + self.t_decoding_us,
                    );
                    record.disposition = Disposition::Delivered;
                }
                Err(_) => record.disposition = Disposition::LostCrc,
            }
        }
        self.records.push(record);
        Ok(())
    }

    fn run(mut self) -> Result<SimRun> {
        self.schedule_speech()?;
        while let Some(Reverse((key, EvSlot(ev)))) = self.heap.pop() {
            self.handle(key.time_us, key.node as usize, ev)?;
        }
        for node in &mut self.nodes {
            node.advance_to(self.horizon_us);
        }
        self.finish()
    }

    fn finish(self) -> Result<SimRun> {
        let mut delivered_totals_ms: Vec<f64> = self
            .records
            .iter()
            .filter_map(|r| r.t_total_us.map(|us| us as f64 / 1000.0))
            .collect();
        delivered_totals_ms.sort_by(f64::total_cmp);

        let count = |d: Disposition| -> u64 {
            self.records.iter().filter(|r| r.disposition == d).count() as u64
        };
        let packets_sent = self.records.len() as u64;
        let packets_delivered = count(Disposition::Delivered);
        let lost_channel = count(Disposition::LostChannel);
        let lost_collision = count(Disposition::LostCollision);
        let lost_crc = count(Disposition::LostCrc);

        let mut duty = Vec::new();
        let mut occupancy = Vec::new();
        let mut worst_power = f64::MIN;
        for node in &self.nodes {
            let elapsed = node.tx_accum_us + node.listen_accum_us + node.sleep_accum_us;
            debug_assert_eq!(elapsed, self.horizon_us, "occupancy must cover the run");
            duty.push(node.tx_accum_us as f64 / elapsed as f64);
            let avg = average_power_three_state(
                node.tx_accum_us as f64 / elapsed as f64,
                node.listen_accum_us as f64 / elapsed as f64,
                node.sleep_accum_us as f64 / elapsed as f64,
                &self.scenario.power,
            )?;
            worst_power = worst_power.max(avg);
            occupancy.push(NodeOccupancy {
                node_id: node.node_id,
                tx_us: node.tx_accum_us,
                listen_us: node.listen_accum_us,
                sleep_us: node.sleep_accum_us,
                avg_power_mw: avg,
            });
        }
        let battery_life_h = battery_life_hours(worst_power, &self.scenario.power)?;

        let physical_bps = effective_bitrate(&self.scenario.phy)?;
        let sustainable_realtime = self.scenario.codec.bitrate_bps as f64 <= physical_bps;
        let mut warnings = Vec::new();
        if !sustainable_realtime {
            warnings.push(format!(
                "codec bitrate {} bps exceeds the physical effective bitrate {:.2} bps at SF{}: realtime voice is not sustainable and queues will saturate",
                self.scenario.codec.bitrate_bps, physical_bps, self.scenario.phy.spreading_factor
            ));
        }

        let report = SimReport {
            schema_version: SCENARIO_SCHEMA_VERSION,
            duration_s: self.scenario.duration_s,
            packets_sent,
            packets_delivered,
            lost_channel,
            lost_collision,
            lost_crc,
            queue_drops: self.queue_drops,
            latency_p50_ms: percentile(&delivered_totals_ms, 0.50),
            latency_p95_ms: percentile(&delivered_totals_ms, 0.95),
            latency_max_ms: delivered_totals_ms.last().copied(),
            duty_cycle_per_node: duty,
            occupancy_per_node: occupancy,
            avg_power_mw: worst_power,
            battery_life_h,
            sustainable_realtime,
            warnings,
            packets: self.records,
        };
        Ok(SimRun {
            report,
            events: self.log,
        })
    }
}

/// Nearest-rank percentile over ascending `sorted`; `None` when empty.
fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[rank - 1])
}

// ---- Operations ----

/// Executes one scenario end to end. Structural validation failures abort
/// before execution; service-degrading configurations (unsustainable codec
/// bitrate) run anyway and flag the report.
pub fn run(scenario: &Scenario) -> Result<SimRun> {
    scenario.validate()?;
    Engine::new(scenario)?.run()
}

/// Per-component latency statistics over delivered packets, ms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
}

/// The five latency components plus their sum, aggregated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub delivered: u64,
    pub encoding: ComponentStats,
    pub encryption: ComponentStats,
    pub packetization: ComponentStats,
    pub airtime: ComponentStats,
    pub decoding: ComponentStats,
    pub total: ComponentStats,
}

fn component_stats(values_us: &mut [u64]) -> ComponentStats {
    values_us.sort_unstable();
    let as_ms: Vec<f64> = values_us.iter().map(|&us| us as f64 / 1000.0).collect();
    let mean = as_ms.iter().sum::<f64>() / as_ms.len() as f64;
    ComponentStats {
        mean_ms: mean,
        p50_ms: percentile(&as_ms, 0.50).unwrap(),
        p95_ms: percentile(&as_ms, 0.95).unwrap(),
        max_ms: *as_ms.last().unwrap(),
    }
}

/// Aggregates per-packet latency components over delivered packets and
/// re-asserts the five-term sum identity on every one.
pub fn latency_breakdown(report: &SimReport) -> Result<LatencyBreakdown> {
    let delivered: Vec<&PacketRecord> = report
        .packets
        .iter()
        .filter(|r| r.disposition == Disposition::Delivered)
        .collect();
    if delivered.is_empty() {
        return Err(Error::NoData {
            reason: "latency breakdown needs at least one delivered packet".into(),
        });
    }
    let mut enc = Vec::new();
    let mut cry = Vec::new();
    let mut pack = Vec::new();
    let mut air = Vec::new();
    let mut dec = Vec::new();
    let mut tot = Vec::new();
    for r in &delivered {
        let t_dec = r.t_decoding_us.expect("delivered packet has decode time");
        let t_tot = r.t_total_us.expect("delivered packet has total");
        assert_eq!(
            t_tot,
            r.t_encoding_us + r.t_encryption_us + r.t_packetization_us + r.t_airtime_us + t_dec,
            "five-component sum identity violated for seq {}",
            r.seq
        );
        enc.push(r.t_encoding_us);
        cry.push(r.t_encryption_us);
        pack.push(r.t_packetization_us);
        air.push(r.t_airtime_us);
        dec.push(t_dec);
        tot.push(t_tot);
    }
    Ok(LatencyBreakdown {
        delivered: delivered.len() as u64,
        encoding: component_stats(&mut enc),
        encryption: component_stats(&mut cry),
        packetization: component_stats(&mut pack),
        airtime: component_stats(&mut air),
        decoding: component_stats(&mut dec),
        total: component_stats(&mut tot),
    })
}

// ---- Event-log occupancy reconstruction ----

/// Rebuilds one node's (tx, listen, sleep) time split from an event log
/// alone, applying the same idle rule the simulator uses: after the last
/// activity (VOX close, TX end, RX end) a node listens for `idle_timeout`
/// and then sleeps until something wakes it (VOX open or an incoming
/// RX_START). Cross-checks the accumulator bookkeeping.
pub fn occupancy_from_events(
    events: &[MacEvent],
    node_id: u8,
    horizon_us: u64,
    idle_timeout_us: u64,
) -> (u64, u64, u64) {
    let mut tx_us = 0u64;
    let mut listen_us = 0u64;
    let mut sleep_us = 0u64;
    // Awake state between events; nodes start asleep.
    let mut awake = false;
    // Anchor of the current segment.
    let mut cursor = 0u64;
    // Last instant that kept the node active, while awake.
    let mut last_activity = 0u64;
    let mut tx_started: Option<u64> = None;

    let bill = |from: u64, to: u64, awake: bool, last_activity: u64| -> (u64, u64) {
        // Splits [from, to) into listen/sleep under the idle rule.
        debug_assert!(to >= from);
        if !awake {
            return (0, to - from);
        }
        let sleep_at = last_activity + idle_timeout_us;
        if to <= sleep_at {
            (to - from, 0)
        } else {
            (sleep_at.saturating_sub(from), to - sleep_at.max(from))
        }
    };

    for ev in events.iter().filter(|e| e.node_id == node_id) {
        let t = ev.time_us;
        match ev.kind {
            MacEventKind::TxStart => {
                let (l, s) = bill(cursor, t, awake, last_activity);
                listen_us += l;
                sleep_us += s;
                awake = true;
                tx_started = Some(t);
                cursor = t;
                last_activity = t;
            }
            MacEventKind::TxEnd => {
                let start = tx_started.take().expect("TX_END without TX_START");
                debug_assert_eq!(start, cursor);
                tx_us += t - start;
                cursor = t;
                last_activity = t;
                awake = true;
            }
            MacEventKind::RxStart | MacEventKind::VoxOpen => {
                // VOX edges landing inside the node's own transmission do
                // not open a new segment; TX_END re-anchors everything.
                if tx_started.is_none() {
                    let (l, s) = bill(cursor, t, awake, last_activity);
                    listen_us += l;
                    sleep_us += s;
                    awake = true;
                    cursor = t;
                    last_activity = t;
                }
            }
            MacEventKind::RxEnd | MacEventKind::VoxClose => {
                if tx_started.is_none() {
                    let (l, s) = bill(cursor, t, awake, last_activity);
                    listen_us += l;
                    sleep_us += s;
                    cursor = t;
                    last_activity = t;
                }
            }
            MacEventKind::Collision | MacEventKind::Drop => {}
        }
    }
    if let Some(start) = tx_started {
        // In-flight at the horizon: transmit time runs to the end.
        tx_us += horizon_us - start;
    } else {
        let (l, s) = bill(cursor, horizon_us, awake, last_activity);
        listen_us += l;
        sleep_us += s;
    }
    (tx_us, listen_us, sleep_us)
}

// ---- Sweeps ----

/// Which scenario knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Spreading factor 7..=12.
    Sf,
    /// Link distance, km.
    Distance,
    /// Transmit power, dBm.
    TxPower,
    /// Voice payload bytes per frame (codec bitrate scales to match).
    Payload,
}

impl SweepAxis {
    /// Canonical lowercase name, matching what [`FromStr`] accepts.
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Sf => "sf",
            SweepAxis::Distance => "distance",
            SweepAxis::TxPower => "tx_power",
            SweepAxis::Payload => "payload",
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sf" => Ok(SweepAxis::Sf),
            "distance" => Ok(SweepAxis::Distance),
            "tx_power" => Ok(SweepAxis::TxPower),
            "payload" => Ok(SweepAxis::Payload),
            other => Err(Error::InvalidParameter {
                field: "axis",
                reason: format!("unknown sweep axis {other:?}; use sf|distance|tx_power|payload"),
            }),
        }
    }
}

/// One sweep point, flattened for CSV emission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub packets_sent: u64,
    pub packets_delivered: u64,
    pub lost_channel: u64,
    pub lost_collision: u64,
    pub lost_crc: u64,
    pub queue_drops: u64,
    pub delivery_ratio: Option<f64>,
    pub latency_p50_ms: Option<f64>,
    pub latency_p95_ms: Option<f64>,
    pub latency_max_ms: Option<f64>,
    pub airtime_p50_ms: Option<f64>,
    pub margin_p50_db: Option<f64>,
    pub duty_cycle_node0: f64,
    pub duty_cycle_node1: f64,
    pub avg_power_mw: f64,
    pub battery_life_h: f64,
}

/// splitmix64: the per-value seed derivation, so sweep points are
/// independent streams reproducible from the scenario seed alone.
fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn apply_axis(base: &Scenario, axis: SweepAxis, value: f64) -> Result<Scenario> {
    let mut s = base.clone();
    match axis {
        SweepAxis::Sf => {
            if value.fract() != 0.0 || !(7.0..=12.0).contains(&value) {
                return Err(Error::InvalidParameter {
                    field: "sf",
                    reason: format!("sweep values must be whole numbers 7..=12, got {value}"),
                });
            }
            s.phy.spreading_factor = value as u8;
        }
        SweepAxis::Distance => {
            s.channel.link.distance_km = value;
        }
        SweepAxis::TxPower => {
            s.channel.link.tx_power_dbm = value;
        }
        SweepAxis::Payload => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(Error::InvalidParameter {
                    field: "payload",
                    reason: format!("sweep values must be whole byte counts >= 1, got {value}"),
                });
            }
            let bytes = value as u64;
            let bits = bytes * 8000;
            let bitrate = bits.div_ceil(s.codec.frame_ms as u64);
            s.codec.bitrate_bps = u32::try_from(bitrate).map_err(|_| Error::InvalidParameter {
                field: "payload",
                reason: format!("{bytes} bytes per frame is out of range"),
            })?;
            if s.codec.frame_bytes() != bytes as usize {
                return Err(Error::InvalidParameter {
                    field: "payload",
                    reason: format!(
                        "{bytes} bytes per {} ms frame has no exact bitrate",
                        s.codec.frame_ms
                    ),
                });
            }
        }
    }
    Ok(s)
}

fn summarize(axis: SweepAxis, value: f64, report: &SimReport) -> SweepRow {
    let mut airtimes: Vec<f64> = report
        .packets
        .iter()
        .map(|r| r.t_airtime_us as f64 / 1000.0)
        .collect();
    airtimes.sort_by(f64::total_cmp);
    let mut margins: Vec<f64> = report.packets.iter().map(|r| r.margin_db).collect();
    margins.sort_by(f64::total_cmp);
    SweepRow {
        axis: axis.name().to_string(),
        value,
        packets_sent: report.packets_sent,
        packets_delivered: report.packets_delivered,
        lost_channel: report.lost_channel,
        lost_collision: report.lost_collision,
        lost_crc: report.lost_crc,
        queue_drops: report.queue_drops,
        delivery_ratio: (report.packets_sent > 0)
            .then(|| report.packets_delivered as f64 / report.packets_sent as f64),
        latency_p50_ms: report.latency_p50_ms,
        latency_p95_ms: report.latency_p95_ms,
        latency_max_ms: report.latency_max_ms,
        airtime_p50_ms: percentile(&airtimes, 0.50),
        margin_p50_db: percentile(&margins, 0.50),
        duty_cycle_node0: report.duty_cycle_per_node[0],
        duty_cycle_node1: report.duty_cycle_per_node[1],
        avg_power_mw: report.avg_power_mw,
        battery_life_h: report.battery_life_h,
    }
}

/// Runs one independent simulation per axis value, in parallel, preserving
/// input order. Each point gets its own derived seed; per-run failures are
/// annotated with the axis value that caused them.
pub fn sweep(base: &Scenario, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    base.validate()?;
    let rows: Vec<Result<SweepRow>> = values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let mut scenario = apply_axis(base, axis, value)?;
            scenario.channel.rng_seed = derive_seed(base.channel.rng_seed, i as u64);
            let sim = run(&scenario).map_err(|e| match e {
                Error::InvalidScenario { reason } => Error::InvalidScenario {
                    reason: format!("{axis}={value}: {reason}"),
                },
                other => other,
            })?;
            Ok(summarize(axis, value, &sim.report))
        })
        .collect();
    rows.into_iter().collect()
}

// ==== Tests ====
