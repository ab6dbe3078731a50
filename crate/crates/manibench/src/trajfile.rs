//! Trajectory files.
//!
//! ```text
//! "MMTJ" | u32 header length | TOML header (UTF-8) | f64 body
//! ```
//!
//! The body is little-endian `f64`: object base pose (6), robot anchor (6),
//! initial palm rotation (3), initial effector joints (D), the initial state
//! and observation, then one fixed-width block per step in the field order
//! of [`StepRecord::encode`]. Poses are translation then rotation vector.

use std::path::Path;

use manibench_core::dataset::{StateSnapshot, StepRecord, Trajectory};
use manibench_core::env::EpisodeConfig;
use manibench_core::observation::ObservationLayout;
use manibench_core::reward::RewardWeights;
use manibench_core::robot::RobotSpec;
use manibench_core::{RotVec, Transform, Vec3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bytes::{put_f64s, put_u32, Cursor};
use crate::error::{io, Error, Result};

pub const MAGIC: &[u8; 4] = b"MMTJ";
pub const FORMAT_VERSION: u32 = 1;

/// Human-readable part of a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub format_version: u32,
    pub instruction: String,
    pub robot: String,
    pub task_id: String,
    pub seed: u64,
    pub episode: u64,
    pub success: bool,
    pub steps: usize,
    pub frame_rate: f64,
    pub observation_dim: usize,
    pub layout_hash: String,
    /// Reserved for rendered channels; always "none".
    pub sensor_channels: String,
    pub config: EpisodeConfig,
    pub weights: RewardWeights,
}

/// Short digest of an observation layout.
pub fn layout_hash(spec: &RobotSpec) -> String {
    let layout = ObservationLayout::for_robot(spec);
    let mut h = Sha256::new();
    for (name, offset, len) in layout.blocks() {
        h.update(format!("{name}:{offset}:{len};"));
    }
    hex(&h.finalize()[..8])
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn push_transform(out: &mut Vec<f64>, t: &Transform) {
    out.extend(t.translation.to_array());
    out.extend(t.rotation.0.to_array());
}

fn transform(v: &[f64]) -> Transform {
    Transform::new(Vec3::from_slice(&v[..3]), RotVec(Vec3::from_slice(&v[3..6])))
}

pub fn encode(traj: &Trajectory, spec: &RobotSpec) -> Result<Vec<u8>> {
    let header = Header {
        format_version: FORMAT_VERSION,
        instruction: traj.instruction.clone(),
        robot: traj.robot.clone(),
        task_id: traj.task_id.clone(),
        seed: traj.seed,
        episode: traj.episode,
        success: traj.success,
        steps: traj.steps.len(),
        frame_rate: 1.0 / traj.config.dt,
        observation_dim: traj.obs_dim(),
        layout_hash: layout_hash(spec),
        sensor_channels: "none".into(),
        config: traj.config.clone(),
        weights: traj.weights,
    };
    let text = toml::to_string(&header).map_err(|e| Error::Failed(format!("trajectory header: {e}")))?;
    let mut body = Vec::with_capacity(
        15 + traj.effector_init.len()
            + StateSnapshot::width(spec)
            + traj.obs_dim()
            + traj.steps.len() * StepRecord::width(spec, traj.obs_dim()),
    );
    push_transform(&mut body, &traj.object_base);
    push_transform(&mut body, &traj.anchor);
    body.extend(traj.palm_init_rotation.0.to_array());
    body.extend_from_slice(&traj.effector_init);
    traj.initial.encode(&mut body);
    body.extend_from_slice(&traj.initial_observation);
    for s in &traj.steps {
        s.encode(&mut body);
    }
    let mut out = Vec::with_capacity(8 + text.len() + body.len() * 8);
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, text.len() as u32);
    out.extend_from_slice(text.as_bytes());
    put_f64s(&mut out, &body);
    Ok(out)
}

fn bad(offset: usize, detail: impl Into<String>) -> Error {
    Error::MalformedTrajectory {
        offset,
        detail: detail.into(),
    }
}

fn short(offset: usize) -> Error {
    bad(offset, "unexpected end of file")
}

/// Parses only the header; returns it with the offset where the body starts.
pub fn decode_header(data: &[u8]) -> Result<(Header, usize)> {
    let mut c = Cursor::new(data);
    if c.bytes(4).map_err(short)? != MAGIC {
        return Err(bad(0, "bad magic"));
    }
    let len = c.u32().map_err(short)? as usize;
    let at = c.at;
    let text = std::str::from_utf8(c.bytes(len).map_err(short)?).map_err(|_| bad(at, "header is not UTF-8"))?;
    let header: Header = toml::from_str(text).map_err(|e| bad(at, format!("header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(bad(at, format!("unsupported format version {}", header.format_version)));
    }
    Ok((header, c.at))
}

pub fn decode(data: &[u8]) -> Result<Trajectory> {
    let (h, body_at) = decode_header(data)?;
    let spec = RobotSpec::by_name(&h.robot).ok_or_else(|| bad(8, format!("unknown robot {:?}", h.robot)))?;
    if h.layout_hash != layout_hash(&spec) {
        return Err(bad(8, "observation layout differs from this build"));
    }
    let obs_dim = h.observation_dim;
    let mut c = Cursor::new(data);
    c.at = body_at;
    let pre = c.f64s(15 + spec.effector_dof()).map_err(short)?;
    let at = c.at;
    let initial = StateSnapshot::decode(&spec, &c.f64s(StateSnapshot::width(&spec)).map_err(short)?)
        .map_err(|e| bad(at, e.to_string()))?;
    let initial_observation = c.f64s(obs_dim).map_err(short)?;
    let width = StepRecord::width(&spec, obs_dim);
    let mut steps = Vec::with_capacity(h.steps);
    for _ in 0..h.steps {
        let at = c.at;
        let block = c.f64s(width).map_err(short)?;
        steps.push(StepRecord::decode(&spec, obs_dim, &block).map_err(|e| bad(at, e.to_string()))?);
    }
    if c.remaining() != 0 {
        return Err(bad(c.at, "trailing bytes"));
    }
    Ok(Trajectory {
        instruction: h.instruction,
        robot: h.robot,
        task_id: h.task_id,
        seed: h.seed,
        episode: h.episode,
        config: h.config,
        weights: h.weights,
        object_base: transform(&pre[0..6]),
        anchor: transform(&pre[6..12]),
        palm_init_rotation: RotVec(Vec3::from_slice(&pre[12..15])),
        effector_init: pre[15..].to_vec(),
        initial,
        initial_observation,
        steps,
        success: h.success,
    })
}

pub fn write(traj: &Trajectory, spec: &RobotSpec, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
    }
    std::fs::write(path, encode(traj, spec)?).map_err(io(path))
}

pub fn read(path: &Path) -> Result<Trajectory> {
    decode(&std::fs::read(path).map_err(io(path))?)
}

pub fn read_header(path: &Path) -> Result<Header> {
    Ok(decode_header(&std::fs::read(path).map_err(io(path))?)?.0)
}
