use std::fmt;
use std::io::Write;

use crate::error::Result;

/// Sender or receiver of a sweep message. Gates are numbered from 1 at the
/// downstream end; the reservoir sits above gate `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Gate(usize),
    Reservoir,
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Gate(i) => write!(f, "gate{i}"),
            Node::Reservoir => f.write_str("reservoir"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepMessage {
    UpstreamM { m: f64 },
    UpstreamD { s: i64, value: f64 },
    DownstreamD { s: i64, value: f64 },
    DownstreamU { u: f64 },
}

impl SweepMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            SweepMessage::UpstreamM { .. } => "upstream_m",
            SweepMessage::UpstreamD { .. } => "upstream_d",
            SweepMessage::DownstreamD { .. } => "downstream_d",
            SweepMessage::DownstreamU { .. } => "downstream_u",
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            SweepMessage::UpstreamM { m } => m,
            SweepMessage::UpstreamD { value, .. } | SweepMessage::DownstreamD { value, .. } => value,
            SweepMessage::DownstreamU { u } => u,
        }
    }

    /// Time index carried by disturbance messages.
    pub fn index(&self) -> Option<i64> {
        match *self {
            SweepMessage::UpstreamD { s, .. } | SweepMessage::DownstreamD { s, .. } => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoggedMessage {
    pub tick: i64,
    pub from: Node,
    pub to: Node,
    pub message: SweepMessage,
}

/// Messages in delivery order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MessageLog {
    pub entries: Vec<LoggedMessage>,
}

impl MessageLog {
    pub fn for_tick(&self, tick: i64) -> impl Iterator<Item = &LoggedMessage> {
        self.entries.iter().filter(move |e| e.tick == tick)
    }

    /// CSV with columns `tick,from,to,kind,index,value`; `index` is the
    /// time index of disturbance messages and empty otherwise.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "tick,from,to,kind,index,value")?;
        for e in &self.entries {
            let index = e.message.index().map(|s| s.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{:e}",
                e.tick,
                e.from,
                e.to,
                e.message.kind(),
                index,
                e.message.value()
            )?;
        }
        Ok(())
    }
}
