//! Binary policy checkpoints.
//!
//! Layout, all integers `u32` and floats `f64`, little-endian:
//!
//! ```text
//! "MMRL" | version | robot name length | robot name (UTF-8)
//! | effector DOF D
//! | policy width count | policy widths | value width count | value widths
//! | policy parameters (layer order: weights row-major, then bias)
//! | log std (6 + D)
//! | normalizer count | normalizer clip | normalizer mean | normalizer var
//! | value parameters
//! ```

use std::path::Path;

use manibench_core::rl::{ActorCritic, GaussianPolicy, Mlp, ObsNormalizer};
use manibench_core::robot::RobotSpec;

use crate::bytes::{put_f64s, put_u32, Cursor};
use crate::error::{io, Error, Result};

pub const MAGIC: &[u8; 4] = b"MMRL";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub robot: String,
    pub nets: ActorCritic,
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, VERSION);
        put_u32(&mut out, self.robot.len() as u32);
        out.extend_from_slice(self.robot.as_bytes());
        put_u32(&mut out, self.nets.effector_dof() as u32);
        for net in [&self.nets.policy.net, &self.nets.value] {
            put_u32(&mut out, net.widths().len() as u32);
            for w in net.widths() {
                put_u32(&mut out, *w as u32);
            }
        }
        let p = &self.nets.policy;
        put_f64s(&mut out, &p.net.params);
        put_f64s(&mut out, &p.log_std);
        put_f64s(&mut out, &[p.obs_norm.count, p.obs_norm.clip]);
        put_f64s(&mut out, &p.obs_norm.mean);
        put_f64s(&mut out, &p.obs_norm.var);
        put_f64s(&mut out, &self.nets.value.params);
        out
    }

    pub fn decode(data: &[u8]) -> Result<Checkpoint> {
        let mut c = Cursor::new(data);
        let bad = |offset: usize, detail: &str| Error::MalformedCheckpoint {
            offset,
            detail: detail.to_string(),
        };
        let short = |offset: usize| bad(offset, "unexpected end of file");
        if c.bytes(4).map_err(short)? != MAGIC {
            return Err(bad(0, "bad magic"));
        }
        let at = c.at;
        let version = c.u32().map_err(short)?;
        if version != VERSION {
            return Err(bad(at, &format!("unsupported version {version}")));
        }
        let n = c.u32().map_err(short)? as usize;
        let at = c.at;
        let robot = std::str::from_utf8(c.bytes(n).map_err(short)?)
            .map_err(|_| bad(at, "robot name is not UTF-8"))?
            .to_string();
        let dof = c.u32().map_err(short)? as usize;
        let mut widths = Vec::new();
        for _ in 0..2 {
            let at = c.at;
            let n = c.u32().map_err(short)? as usize;
            if !(2..=64).contains(&n) {
                return Err(bad(at, "implausible layer count"));
            }
            let mut w = Vec::with_capacity(n);
            for _ in 0..n {
                w.push(c.u32().map_err(short)? as usize);
            }
            widths.push((at, w));
        }
        let (value_at, value_widths) = widths.pop().unwrap();
        let (policy_at, policy_widths) = widths.pop().unwrap();
        let obs_dim = policy_widths[0];
        let act_dim = *policy_widths.last().unwrap();
        if act_dim != 6 + dof {
            return Err(bad(policy_at, "policy output does not match effector DOF"));
        }
        if value_widths[0] != obs_dim || *value_widths.last().unwrap() != 1 {
            return Err(bad(value_at, "value network shape"));
        }
        let mut net = Mlp::zeros(&policy_widths).map_err(|e| bad(policy_at, &e.to_string()))?;
        let mut value = Mlp::zeros(&value_widths).map_err(|e| bad(value_at, &e.to_string()))?;
        net.params = c.f64s(net.param_count()).map_err(short)?;
        let log_std = c.f64s(act_dim).map_err(short)?;
        let head = c.f64s(2).map_err(short)?;
        let mean = c.f64s(obs_dim).map_err(short)?;
        let var = c.f64s(obs_dim).map_err(short)?;
        value.params = c.f64s(value.param_count()).map_err(short)?;
        if c.remaining() != 0 {
            return Err(bad(c.at, "trailing bytes"));
        }
        let mut policy = GaussianPolicy::new(net, log_std)?;
        policy.obs_norm = ObsNormalizer {
            mean,
            var,
            count: head[0],
            clip: head[1],
        };
        Ok(Checkpoint {
            robot,
            nets: ActorCritic { policy, value },
        })
    }

    /// Fails unless the networks fit `spec`.
    pub fn check_robot(&self, spec: &RobotSpec) -> Result<()> {
        let layout = manibench_core::observation::ObservationLayout::for_robot(spec);
        let p = &self.nets.policy;
        if self.robot != spec.name || p.net.input_dim() != layout.total() || p.action_dim() != spec.action_dim() {
            return Err(Error::Failed(format!(
                "checkpoint for {} ({} → {}) does not fit robot {} ({} → {})",
                self.robot,
                p.net.input_dim(),
                p.action_dim(),
                spec.name,
                layout.total(),
                spec.action_dim()
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(io(dir))?;
        }
        std::fs::write(path, self.encode()).map_err(io(path))
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        Checkpoint::decode(&std::fs::read(path).map_err(io(path))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use manibench_core::rl::PpoConfig;

    fn small() -> Checkpoint {
        let cfg = PpoConfig {
            hidden: vec![8, 4],
            ..Default::default()
        };
        let mut nets = ActorCritic::init(10, 7, &cfg).unwrap();
        nets.policy.obs_norm.update(&[0.5; 20], 2);
        Checkpoint {
            robot: "gripper-bot".into(),
            nets,
        }
    }

    #[test]
    fn round_trip() {
        let c = small();
        assert_eq!(Checkpoint::decode(&c.encode()).unwrap(), c);
    }

    #[test]
    fn corruption_is_located() {
        let bytes = small().encode();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::decode(&bad), Err(Error::MalformedCheckpoint { offset: 0, .. })));
        let cut = &bytes[..bytes.len() - 3];
        match Checkpoint::decode(cut) {
            Err(Error::MalformedCheckpoint { offset, .. }) => assert_eq!(offset, cut.len()),
            other => panic!("{other:?}"),
        }
    }
}
