//! Trace ingestion and synthetic workload generation.
//!
//! Text format, one event per line: `<R|W> <hex-addr> [<hex-pc>]`, with `#`
//! comments and blank lines skipped. An optional little-endian binary
//! container (magic `LVTR`) carries the same fields for large traces.

use std::io::{BufRead, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mem::BLOCK_BYTES;

pub const BINARY_MAGIC: [u8; 4] = *b"LVTR";
pub const BINARY_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    R,
    W,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub op: Op,
    pub addr: u64,
    pub pc: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: address {addr:#x} outside physical memory ({limit:#x} bytes)")]
    Range { line: usize, addr: u64, limit: u64 },
    #[error("invalid synthetic spec: {0}")]
    Spec(String),
    #[error("bad binary trace: {0}")]
    Binary(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_hex(tok: &str) -> Option<u64> {
    let t = tok.strip_prefix("0x").or_else(|| tok.strip_prefix("0X")).unwrap_or(tok);
    u64::from_str_radix(t, 16).ok()
}

/// Parses the text trace format, validating addresses against the simulated
/// physical memory size. Errors carry 1-based line numbers.
pub fn parse_trace<R: BufRead>(reader: R, phys_bytes: u64) -> Result<Vec<TraceEvent>, TraceError> {
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut toks = body.split_whitespace();
        let op = match toks.next() {
            Some("R") => Op::R,
            Some("W") => Op::W,
            Some(other) => {
                return Err(TraceError::Parse {
                    line: line_no,
                    msg: format!("unknown op {other:?}, expected R or W"),
                })
            }
            None => unreachable!(),
        };
        let addr = toks
            .next()
            .and_then(parse_hex)
            .ok_or_else(|| TraceError::Parse {
                line: line_no,
                msg: "missing or malformed hex address".into(),
            })?;
        if addr >= phys_bytes {
            return Err(TraceError::Range {
                line: line_no,
                addr,
                limit: phys_bytes,
            });
        }
        let pc = match toks.next() {
            Some(tok) => Some(parse_hex(tok).ok_or_else(|| TraceError::Parse {
                line: line_no,
                msg: "malformed hex pc".into(),
            })?),
            None => None,
        };
        if toks.next().is_some() {
            return Err(TraceError::Parse {
                line: line_no,
                msg: "trailing tokens".into(),
            });
        }
        events.push(TraceEvent { op, addr, pc });
    }
    Ok(events)
}

pub fn write_text<W: Write>(events: &[TraceEvent], mut w: W) -> std::io::Result<()> {
    for e in events {
        let op = match e.op {
            Op::R => "R",
            Op::W => "W",
        };
        match e.pc {
            Some(pc) => writeln!(w, "{op} {:#x} {:#x}", e.addr, pc)?,
            None => writeln!(w, "{op} {:#x}", e.addr)?,
        }
    }
    Ok(())
}

pub fn write_binary<W: Write>(events: &[TraceEvent], mut w: W) -> std::io::Result<()> {
    w.write_all(&BINARY_MAGIC)?;
    w.write_all(&[BINARY_VERSION])?;
    w.write_all(&(events.len() as u64).to_le_bytes())?;
    for e in events {
        let op = match e.op {
            Op::R => 0u8,
            Op::W => 1u8,
        };
        w.write_all(&[op, e.pc.is_some() as u8])?;
        w.write_all(&e.addr.to_le_bytes())?;
        w.write_all(&e.pc.unwrap_or(0).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R, phys_bytes: u64) -> Result<Vec<TraceEvent>, TraceError> {
    let mut head = [0u8; 5];
    r.read_exact(&mut head)?;
    if head[0..4] != BINARY_MAGIC {
        return Err(TraceError::Binary("bad magic".into()));
    }
    if head[4] != BINARY_VERSION {
        return Err(TraceError::Binary(format!("unsupported version {}", head[4])));
    }
    let mut buf8 = [0u8; 8];
    r.read_exact(&mut buf8)?;
    let count = u64::from_le_bytes(buf8);
    let mut events = Vec::with_capacity(count as usize);
    for i in 0..count {
        let mut rec = [0u8; 18];
        r.read_exact(&mut rec)?;
        let op = match rec[0] {
            0 => Op::R,
            1 => Op::W,
            other => return Err(TraceError::Binary(format!("record {i}: bad op byte {other}"))),
        };
        let addr = u64::from_le_bytes(rec[2..10].try_into().unwrap());
        if addr >= phys_bytes {
            return Err(TraceError::Range {
                line: i as usize,
                addr,
                limit: phys_bytes,
            });
        }
        let pc = if rec[1] != 0 {
            Some(u64::from_le_bytes(rec[10..18].try_into().unwrap()))
        } else {
            None
        };
        events.push(TraceEvent { op, addr, pc });
    }
    Ok(events)
}

/// Loads a trace from bytes, sniffing the binary magic.
pub fn load_trace(bytes: &[u8], phys_bytes: u64) -> Result<Vec<TraceEvent>, TraceError> {
    if bytes.len() >= 4 && bytes[0..4] == BINARY_MAGIC {
        read_binary(bytes, phys_bytes)
    } else {
        parse_trace(std::io::BufReader::new(bytes), phys_bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SynthKind {
    /// Sequential 64-byte strides over the footprint, wrapping.
    Stream,
    /// iid uniform block addresses over the footprint (gups-like).
    RandomUniform,
    /// A seeded random permutation cycle walked element by element.
    PointerChase,
    /// Fixed block-granular delta, wrapping over the footprint.
    Strided { delta_blocks: i64 },
}

// NB: no deny_unknown_fields here; serde cannot combine it with flatten.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    #[serde(flatten)]
    pub kind: SynthKind,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub phases: Vec<Phase>,
    pub footprint_bytes: u64,
    pub seed: u64,
    /// Base physical address of the footprint.
    #[serde(default)]
    pub base_addr: u64,
    /// Fraction of writes, in percent.
    #[serde(default)]
    pub write_percent: u8,
}

impl SyntheticSpec {
    pub fn single(kind: SynthKind, footprint_bytes: u64, count: u64, seed: u64) -> Self {
        SyntheticSpec {
            phases: vec![Phase { kind, count }],
            footprint_bytes,
            seed,
            base_addr: 0,
            write_percent: 0,
        }
    }
}

/// Deterministic synthetic trace generation: the event sequence is a pure
/// function of the spec. Each phase gets a stable synthetic pc so the
/// delta-correlating prefetcher sees consistent streams.
pub fn generate(spec: &SyntheticSpec) -> Result<Vec<TraceEvent>, TraceError> {
    if spec.footprint_bytes < BLOCK_BYTES {
        return Err(TraceError::Spec(format!(
            "footprint {} smaller than one {BLOCK_BYTES}-byte block",
            spec.footprint_bytes
        )));
    }
    if spec.phases.is_empty() {
        return Err(TraceError::Spec("no phases".into()));
    }
    let blocks = spec.footprint_bytes / BLOCK_BYTES;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut events = Vec::new();
    for (phase_idx, phase) in spec.phases.iter().enumerate() {
        let pc = 0x4000_0000 + phase_idx as u64 * 0x100;
        let emit = |block: u64, rng: &mut ChaCha8Rng, out: &mut Vec<TraceEvent>| {
            let op = if spec.write_percent > 0 && rng.gen_range(0..100u8) < spec.write_percent {
                Op::W
            } else {
                Op::R
            };
            out.push(TraceEvent {
                op,
                addr: spec.base_addr + block * BLOCK_BYTES,
                pc: Some(pc),
            });
        };
        match &phase.kind {
            SynthKind::Stream => {
                for i in 0..phase.count {
                    emit(i % blocks, &mut rng, &mut events);
                }
            }
            SynthKind::Strided { delta_blocks } => {
                let mut cur: i64 = 0;
                for _ in 0..phase.count {
                    emit(cur.rem_euclid(blocks as i64) as u64, &mut rng, &mut events);
                    cur += delta_blocks;
                }
            }
            SynthKind::RandomUniform => {
                for _ in 0..phase.count {
                    let b = rng.gen_range(0..blocks);
                    emit(b, &mut rng, &mut events);
                }
            }
            SynthKind::PointerChase => {
                // Sattolo's algorithm yields a single-cycle permutation.
                let n = blocks as usize;
                let mut perm: Vec<u64> = (0..blocks).collect();
                for i in (1..n).rev() {
                    let j = rng.gen_range(0..i);
                    perm.swap(i, j);
                }
                let mut cur = 0u64;
                for _ in 0..phase.count {
                    emit(cur, &mut rng, &mut events);
                    cur = perm[cur as usize];
                }
            }
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PHYS: u64 = 1 << 30;

    #[test]
    fn parse_basic_lines() {
        let text = "R 0x1000\nW 0xFF40 0x400123\n# comment\n\nR 40\n";
        let events = parse_trace(text.as_bytes(), PHYS).unwrap();
        assert_eq!(
            events[0],
            TraceEvent {
                op: Op::R,
                addr: 0x1000,
                pc: None
            }
        );
        assert_eq!(
            events[1],
            TraceEvent {
                op: Op::W,
                addr: 0xFF40,
                pc: Some(0x400123)
            }
        );
        assert_eq!(events[2].addr, 0x40);
    }

    #[test]
    fn parse_error_carries_line_number() {
        let err = parse_trace("Q 0x10\n".as_bytes(), PHYS).unwrap_err();
        match err {
            TraceError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
        let err = parse_trace("R 0x10\nR zz\n".as_bytes(), PHYS).unwrap_err();
        match err {
            TraceError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_range_error() {
        let err = parse_trace("R 0x1000\n".as_bytes(), 0x1000).unwrap_err();
        assert!(matches!(err, TraceError::Range { line: 1, .. }));
    }

    #[test]
    fn stream_generator_addresses() {
        let spec = SyntheticSpec::single(SynthKind::Stream, 256, 4, 0);
        let events = generate(&spec).unwrap();
        let addrs: Vec<u64> = events.iter().map(|e| e.addr).collect();
        assert_eq!(addrs, vec![0, 64, 128, 192]);
    }

    #[test]
    fn stream_wraps() {
        let spec = SyntheticSpec::single(SynthKind::Stream, 128, 3, 0);
        let addrs: Vec<u64> = generate(&spec).unwrap().iter().map(|e| e.addr).collect();
        assert_eq!(addrs, vec![0, 64, 0]);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec::single(SynthKind::RandomUniform, 1 << 20, 1000, 7);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    #[test]
    fn pointer_chase_visits_cycle() {
        let spec = SyntheticSpec::single(SynthKind::PointerChase, 64 * 8, 8, 3);
        let events = generate(&spec).unwrap();
        let mut blocks: Vec<u64> = events.iter().map(|e| e.addr / 64).collect();
        blocks.sort();
        blocks.dedup();
        // A single cycle over 8 blocks visits all of them in 8 steps.
        assert_eq!(blocks.len(), 8);
    }

    #[test]
    fn sub_block_footprint_rejected() {
        let spec = SyntheticSpec::single(SynthKind::Stream, 32, 4, 0);
        assert!(matches!(generate(&spec), Err(TraceError::Spec(_))));
    }

    #[test]
    fn binary_roundtrip() {
        let spec = SyntheticSpec::single(SynthKind::RandomUniform, 1 << 16, 100, 9);
        let mut events = generate(&spec).unwrap();
        events[0].pc = None;
        let mut buf = Vec::new();
        write_binary(&events, &mut buf).unwrap();
        assert_eq!(load_trace(&buf, PHYS).unwrap(), events);
    }

    #[test]
    fn text_roundtrip() {
        let spec = SyntheticSpec::single(SynthKind::Stream, 1 << 12, 20, 0);
        let events = generate(&spec).unwrap();
        let mut buf = Vec::new();
        write_text(&events, &mut buf).unwrap();
        assert_eq!(load_trace(&buf, PHYS).unwrap(), events);
    }
}
