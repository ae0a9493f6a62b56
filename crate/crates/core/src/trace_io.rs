//! JSON-lines traces: one record per iterate.

use std::io::{self, BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::external::{ExternalTrace, TapeLoss};
use crate::internal::{InternalTrace, StateGraph};
use crate::tm::Configuration;
use crate::Scalar;

/// One iterate of a tracer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub vertex: usize,
    pub loss: f64,
    pub state: String,
    pub heads: Vec<usize>,
    /// Tape contents as `+1`/`-1`, present for the external tracer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tapes: Option<Vec<Vec<i8>>>,
    pub halted: bool,
}

fn record(step: usize, vertex: usize, loss: f64, c: &Configuration, name: &str, halted: bool, tapes: bool) -> TraceRecord {
    TraceRecord {
        step,
        vertex,
        loss,
        state: name.to_string(),
        heads: c.heads.clone(),
        tapes: tapes.then(|| c.tapes.iter().map(|t| t.iter().map(|s| s.value()).collect()).collect()),
        halted,
    }
}

pub fn internal_records<S: Scalar>(
    tm: &crate::tm::TuringMachine,
    graph: &StateGraph,
    trace: &InternalTrace<S>,
) -> Vec<TraceRecord> {
    trace
        .vertices
        .iter()
        .zip(&trace.losses)
        .enumerate()
        .map(|(k, (&v, loss))| {
            let c = graph.vertex(v);
            record(k, v, loss.to_f64(), c, tm.name(c.state), tm.is_accepting(c.state), false)
        })
        .collect()
}

/// Records of an external run; states that do not decode are reported as
/// an error naming the step.
pub fn external_records<S: Scalar>(loss: &TapeLoss<S>, trace: &ExternalTrace<S>) -> Result<Vec<TraceRecord>, String> {
    let tm = loss.machine();
    trace
        .states
        .iter()
        .zip(&trace.losses)
        .enumerate()
        .map(|(k, (st, l))| {
            let c = loss.decode(st).map_err(|e| format!("step {k}: {e}"))?;
            let v = st.s.as_vertex().expect("decoded states sit on vertices");
            Ok(record(k, v, l.to_f64(), &c, tm.name(c.state), tm.is_accepting(c.state), true))
        })
        .collect()
}

pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, records: &[T]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_jsonl<R: BufRead, T: DeserializeOwned>(r: R) -> io::Result<Vec<T>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let recs = vec![TraceRecord {
            step: 0,
            vertex: 3,
            loss: 2.5,
            state: "q".into(),
            heads: vec![1, 1],
            tapes: Some(vec![vec![1, -1]]),
            halted: false,
        }];
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &recs).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 1);
        let back: Vec<TraceRecord> = read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, recs);
    }
}
