#![allow(dead_code)]

use std::path::PathBuf;

use spinterface::dynamics::{CoherentParams, PumpModel};
use spinterface::seqlang::{
    Angle, Dimension, Laser, Mw, MwLength, PulseSequence, Quantity, Statement, StatementKind, Sweep, Unit, Value,
};
use spinterface::spectra::OpticalModel;
use spinterface::spin::SpinSystem;

pub const D_GHZ: f64 = 3.63;
pub const G: f64 = 2.0;
pub const T1_MS: f64 = 0.22;
pub const T2_NS: f64 = 640.0;
pub const T_OPT_US: f64 = 3.3;
pub const ZPL_NM: f64 = 1025.0;

/// Compound-1 parameters at 10 mT along the molecular axis, pumped at `1/t_opt`.
pub fn compound1() -> PumpModel {
    let sys = SpinSystem::triplet(D_GHZ, 0.0, G).unwrap();
    let optical = OpticalModel::new(ZPL_NM, T_OPT_US).unwrap();
    PumpModel::new(sys, optical, 1.0 / (T_OPT_US * 1e-6), T1_MS).unwrap().with_field_mt(10.0)
}

/// 12.5 MHz Rabi frequency, so a pi pulse takes 40 ns.
pub fn drive() -> CoherentParams {
    CoherentParams::new(12.5, 0.0, T2_NS).unwrap()
}

pub fn protocol_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../protocols").join(name)
}

pub fn read_protocol(name: &str) -> PulseSequence {
    let text = std::fs::read_to_string(protocol_path(name)).unwrap();
    spinterface::seqlang::parse_str(&text).unwrap()
}

/// Builds sequences from a stream of integers, so that proptest shrinks toward
/// short streams and therefore small programs.
pub struct SeqBuilder<'a> {
    data: &'a [u32],
    pos: usize,
}

const NAMES: [&str; 6] = ["t", "tau", "x1", "f0", "amp_v", "ph"];

impl<'a> SeqBuilder<'a> {
    pub fn build(data: &'a [u32]) -> PulseSequence {
        let mut b = SeqBuilder { data, pos: 0 };
        let n = 1 + b.next(6);
        let statements = (0..n).map(|_| b.statement(&[], 0)).collect();
        PulseSequence { statements }
    }

    fn raw(&mut self) -> u32 {
        let v = self.data.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        v
    }

    fn next(&mut self, n: u32) -> u32 {
        self.raw() % n
    }

    fn magnitude(&mut self, dim: Dimension, signed: bool) -> f64 {
        let v = match self.next(3) {
            // integer count of some unit of the ladder
            0 => {
                let ladder = Unit::ladder(dim);
                let m = self.next(5000) as f64;
                if ladder.is_empty() { m / 100.0 } else { ladder[self.next(ladder.len() as u32) as usize].to_si(m) }
            }
            // arbitrary double spread over many decades
            1 => {
                let bits = ((self.raw() as u64) << 32) | self.raw() as u64;
                let unit = (bits >> 11) as f64 / (1u64 << 53) as f64;
                let exp = self.next(24) as i32 - 12;
                unit * 10f64.powi(exp)
            }
            _ => 0.0,
        };
        if signed && self.next(2) == 1 { -v } else { v }
    }

    fn value(&mut self, dim: Dimension, scope: &[(String, Dimension)]) -> Value {
        let candidates: Vec<&String> = scope.iter().filter(|(_, d)| *d == dim).map(|(n, _)| n).collect();
        if !candidates.is_empty() && self.next(3) == 0 {
            return Value::Var(candidates[self.next(candidates.len() as u32) as usize].clone());
        }
        let signed = dim == Dimension::Dimensionless;
        Value::Literal(Quantity { value: self.magnitude(dim, signed), dim })
    }

    fn opt(&mut self, dim: Dimension, scope: &[(String, Dimension)]) -> Option<Value> {
        (self.next(2) == 1).then(|| self.value(dim, scope))
    }

    fn mw(&mut self, scope: &[(String, Dimension)]) -> Mw {
        let length = match self.next(3) {
            0 => MwLength::Angle { angle: Angle::Pi, duration: None },
            1 => MwLength::Angle { angle: Angle::HalfPi, duration: None },
            _ => MwLength::Duration(self.value(Dimension::Time, scope)),
        };
        Mw {
            length,
            frequency: self.opt(Dimension::Frequency, scope),
            amplitude: self.opt(Dimension::Dimensionless, scope),
            phase: self.opt(Dimension::Dimensionless, scope),
        }
    }

    fn statement(&mut self, scope: &[(String, Dimension)], depth: usize) -> Statement {
        let kinds = if depth < 2 && scope.len() < NAMES.len() { 5 } else { 4 };
        let kind = match self.next(kinds) {
            0 => StatementKind::Laser(Laser {
                duration: self.value(Dimension::Time, scope),
                power: self.opt(Dimension::Dimensionless, scope),
                measure: self.opt(Dimension::Time, scope),
            }),
            1 => StatementKind::Wait { duration: self.value(Dimension::Time, scope) },
            2 => StatementKind::Mw(self.mw(scope)),
            3 => StatementKind::Measure { window: self.value(Dimension::Time, scope) },
            _ => StatementKind::Sweep(self.sweep(scope, depth)),
        };
        Statement::new(kind)
    }

    fn sweep(&mut self, scope: &[(String, Dimension)], depth: usize) -> Sweep {
        let free: Vec<&str> = NAMES.iter().copied().filter(|n| !scope.iter().any(|(s, _)| s == n)).collect();
        let var = free[self.next(free.len() as u32) as usize].to_string();
        let dim = [Dimension::Time, Dimension::Frequency, Dimension::Dimensionless][self.next(3) as usize];
        let signed = dim == Dimension::Dimensionless;
        let start = Quantity { value: self.magnitude(dim, signed), dim };
        let stop = Quantity { value: self.magnitude(dim, signed), dim };
        let steps = 2 + self.next(60) as usize;
        let mut inner = scope.to_vec();
        inner.push((var.clone(), dim));
        // the first statement always uses the variable
        let v = Value::Var(var.clone());
        let first = match dim {
            Dimension::Time => StatementKind::Wait { duration: v },
            Dimension::Frequency => StatementKind::Mw(Mw {
                length: MwLength::Angle { angle: Angle::Pi, duration: None },
                frequency: Some(v),
                amplitude: None,
                phase: None,
            }),
            _ => StatementKind::Laser(Laser {
                duration: Value::Literal(Quantity::seconds(1e-6)),
                power: Some(v),
                measure: None,
            }),
        };
        let mut body = vec![Statement::new(first)];
        let extra = self.next(4);
        for _ in 0..extra {
            body.push(self.statement(&inner, depth + 1));
        }
        Sweep { var, start, stop, steps, body }
    }
}
