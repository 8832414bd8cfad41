//! CSV and summary output.

use std::io::{self, Write};

use crate::config::{echo, RunSettings};
use crate::engine::{Protocol, RunOutput};
use crate::metrics::CycleMetrics;

pub const CSV_HEADER: &str = "cycle,protocol,gdm,sdm,messages,unsuccessful_swaps,live_nodes";

/// One row per cycle. Floats use Rust's shortest round-trip formatting, so
/// output is byte-stable; `gdm` is empty when absent.
pub fn write_csv(
    out: &mut impl Write,
    protocol: Protocol,
    metrics: &[CycleMetrics],
) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for m in metrics {
        let gdm = m.gdm.map(|g| g.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            m.cycle,
            protocol.name(),
            gdm,
            m.sdm,
            m.messages_sent,
            m.unsuccessful_swaps,
            m.live_nodes
        )?;
    }
    Ok(())
}

pub fn csv_string(protocol: Protocol, metrics: &[CycleMetrics]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, protocol, metrics).expect("writing to memory");
    String::from_utf8(buf).expect("csv is ascii")
}

/// Final disorder, convergence time and the configuration that produced it.
pub fn summary(settings: &RunSettings, output: &RunOutput) -> String {
    let mut s = String::new();
    s.push_str(&format!("final_sdm = {}\n", output.final_sdm()));
    if let Some(gdm) = output.metrics.last().and_then(|m| m.gdm) {
        s.push_str(&format!("final_gdm = {gdm}\n"));
    }
    if let Some(floor) = output.ordering_floor {
        s.push_str(&format!("ordering_floor_sdm = {floor}\n"));
    }
    if let Some(threshold) = settings.sdm_threshold {
        let reached = output
            .cycles_to(threshold)
            .map_or("never".to_string(), |c| c.to_string());
        s.push_str(&format!("cycles_to_threshold = {reached}\n"));
    }
    let messages: u64 = output.metrics.iter().map(|m| m.messages_sent).sum();
    let unsuccessful: u64 = output.metrics.iter().map(|m| m.unsuccessful_swaps).sum();
    s.push_str(&format!("total_messages = {messages}\n"));
    s.push_str(&format!("total_unsuccessful_swaps = {unsuccessful}\n"));
    s.push_str("\n# configuration\n");
    s.push_str(&echo(settings));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_gdm_and_plain_numbers() {
        let rows = [
            CycleMetrics {
                cycle: 1,
                gdm: None,
                sdm: 12.5,
                messages_sent: 40,
                unsuccessful_swaps: 0,
                live_nodes: 10,
            },
            CycleMetrics {
                cycle: 2,
                gdm: Some(0.25),
                sdm: 3.0,
                messages_sent: 40,
                unsuccessful_swaps: 2,
                live_nodes: 10,
            },
        ];
        let csv = csv_string(Protocol::Ranking, &rows);
        assert_eq!(
            csv,
            format!("{CSV_HEADER}\n1,ranking,,12.5,40,0,10\n2,ranking,0.25,3,40,2,10\n")
        );
        assert!(!csv.contains('\r') && !csv.contains('"'));
    }
}
