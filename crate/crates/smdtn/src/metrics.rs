//! Run counters and the report suite: delivery rate, latency, hop and
//! overhead statistics, contact-duration samples, and file emission.

use crate::error::{Result, SimError};
use crate::ids::{MessageId, NodeId};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub fn delivery_rate(delivered: u64, created: u64) -> Result<f64> {
    if created == 0 {
        return Err(SimError::UndefinedMetric("delivery rate with zero created"));
    }
    Ok(delivered as f64 / created as f64)
}

pub fn hop_completion_rate(initiated: u64, completed: u64) -> Result<f64> {
    if initiated == 0 {
        return Err(SimError::UndefinedMetric(
            "hop completion rate with zero initiated",
        ));
    }
    Ok(completed as f64 / initiated as f64)
}

/// (completed - delivered) / delivered: redundant transfers per useful delivery.
pub fn overhead_ratio(hops_completed: u64, delivered_unique: u64) -> Result<f64> {
    if delivered_unique == 0 {
        return Err(SimError::UndefinedMetric(
            "overhead ratio with zero deliveries",
        ));
    }
    Ok((hops_completed as f64 - delivered_unique as f64) / delivered_unique as f64)
}

/// Mean first-delivery latency, seconds.
pub fn latency_avg(latencies: &[f64]) -> Result<f64> {
    if latencies.is_empty() {
        return Err(SimError::UndefinedMetric("latency with zero deliveries"));
    }
    Ok(latencies.iter().sum::<f64>() / latencies.len() as f64)
}

#[derive(Debug, Default)]
pub struct MetricsCollector {
    pub created: u64,
    /// First delivery per id: (latency, hop count).
    pub delivered: BTreeMap<MessageId, (f64, u32)>,
    pub duplicates: u64,
    pub contact_durations: Vec<f64>,
    /// Distinct nodes that ever held a copy of each id (secondary
    /// propagation-fraction metric).
    pub holders: BTreeMap<MessageId, BTreeSet<NodeId>>,
}

impl MetricsCollector {
    pub fn record_created(&mut self) {
        self.created += 1;
    }

    /// Returns true for the first delivery of this id.
    pub fn record_delivery(&mut self, id: MessageId, latency: f64, hops: u32) -> bool {
        match self.delivered.entry(id) {
            std::collections::btree_map::Entry::Occupied(_) => {
                self.duplicates += 1;
                false
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert((latency, hops));
                true
            }
        }
    }

    pub fn record_contact(&mut self, duration: f64) {
        self.contact_durations.push(duration);
    }

    pub fn record_held(&mut self, id: MessageId, node: NodeId) {
        self.holders.entry(id).or_default().insert(node);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioReport {
    pub scenario: String,
    pub created: u64,
    pub delivered_unique: u64,
    pub duplicates: u64,
    pub delivery_rate: Option<f64>,
    pub latency_avg: Option<f64>,
    pub latencies: Vec<f64>,
    pub hops_initiated: u64,
    pub hops_completed: u64,
    pub hops_aborted: u64,
    pub hops_inflight: u64,
    pub hop_completion_rate: Option<f64>,
    pub overhead_ratio: Option<f64>,
    pub avg_hopcount_delivered: Option<f64>,
    /// Mean fraction of nodes that ever held each alert.
    pub propagation_fraction_avg: Option<f64>,
    pub contact_durations: Vec<f64>,
}

impl ScenarioReport {
    pub fn build(
        scenario: String,
        collector: MetricsCollector,
        n_nodes: u32,
        hops_initiated: u64,
        hops_completed: u64,
        hops_aborted: u64,
        hops_inflight: u64,
    ) -> Self {
        assert_eq!(
            hops_initiated,
            hops_completed + hops_aborted + hops_inflight,
            "hop counter conservation violated"
        );
        let delivered_unique = collector.delivered.len() as u64;
        let latencies: Vec<f64> = collector.delivered.values().map(|(l, _)| *l).collect();
        let avg_hops = if delivered_unique > 0 {
            Some(
                collector
                    .delivered
                    .values()
                    .map(|(_, h)| f64::from(*h))
                    .sum::<f64>()
                    / delivered_unique as f64,
            )
        } else {
            None
        };
        let propagation = if collector.created > 0 && n_nodes > 0 {
            Some(
                collector
                    .holders
                    .values()
                    .map(|h| h.len() as f64 / f64::from(n_nodes))
                    .sum::<f64>()
                    / collector.created as f64,
            )
        } else {
            None
        };
        ScenarioReport {
            scenario,
            created: collector.created,
            delivered_unique,
            duplicates: collector.duplicates,
            delivery_rate: delivery_rate(delivered_unique, collector.created).ok(),
            latency_avg: latency_avg(&latencies).ok(),
            latencies,
            hops_initiated,
            hops_completed,
            hops_aborted,
            hops_inflight,
            hop_completion_rate: hop_completion_rate(hops_initiated, hops_completed).ok(),
            overhead_ratio: overhead_ratio(hops_completed, delivered_unique).ok(),
            avg_hopcount_delivered: avg_hops,
            propagation_fraction_avg: propagation,
            contact_durations: collector.contact_durations,
        }
    }

    fn contact_duration_mean(&self) -> Option<f64> {
        if self.contact_durations.is_empty() {
            None
        } else {
            Some(self.contact_durations.iter().sum::<f64>() / self.contact_durations.len() as f64)
        }
    }

    /// Table-style block printed by `run` and written to summary.txt.
    pub fn summary_text(&self) -> String {
        fn pct(v: Option<f64>) -> String {
            v.map_or("n/a".into(), |x| format!("{:.1}%", x * 100.0))
        }
        let mut s = String::new();
        let _ = writeln!(s, "Scenario: {}", self.scenario);
        let _ = writeln!(
            s,
            "Alerts (Delivered / Created): {} / {}",
            self.delivered_unique, self.created
        );
        let _ = writeln!(s, "Alert Delivery Rate: {}", pct(self.delivery_rate));
        let _ = writeln!(
            s,
            "Alert Delivery Latency (average): {} seconds",
            self.latency_avg.map_or("n/a".into(), |l| format!("{l:.0}"))
        );
        let _ = writeln!(
            s,
            "Node Hop (Initiated / Completed): {} / {}",
            self.hops_initiated, self.hops_completed
        );
        let _ = writeln!(s, "Hop Completion Rate: {}", pct(self.hop_completion_rate));
        let _ = writeln!(
            s,
            "Overhead Ratio: {}",
            self.overhead_ratio
                .map_or("n/a".into(), |o| format!("{o:.1}"))
        );
        let _ = writeln!(
            s,
            "Average Hop Count (delivered): {}",
            self.avg_hopcount_delivered
                .map_or("n/a".into(), |h| format!("{h:.2}"))
        );
        let _ = writeln!(s, "Duplicate Deliveries: {}", self.duplicates);
        let _ = writeln!(
            s,
            "Average Propagation Fraction: {}",
            pct(self.propagation_fraction_avg)
        );
        let _ = writeln!(
            s,
            "Contacts Observed: {} (mean duration {})",
            self.contact_durations.len(),
            self.contact_duration_mean()
                .map_or("n/a".into(), |d| format!("{d:.1} s"))
        );
        s
    }

    fn num(v: Option<f64>) -> String {
        v.map_or("n/a".into(), |x| x.to_string())
    }

    fn metrics_csv(&self) -> String {
        let mut s = String::from(
            "scenario,created,delivered_unique,duplicates,delivery_rate,latency_avg_sec,\
             hops_initiated,hops_completed,hops_aborted,hops_inflight,hop_completion_rate,\
             overhead_ratio,avg_hopcount_delivered,contacts,contact_duration_mean_sec,\
             propagation_fraction_avg\n",
        );
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scenario,
            self.created,
            self.delivered_unique,
            self.duplicates,
            Self::num(self.delivery_rate),
            Self::num(self.latency_avg),
            self.hops_initiated,
            self.hops_completed,
            self.hops_aborted,
            self.hops_inflight,
            Self::num(self.hop_completion_rate),
            Self::num(self.overhead_ratio),
            Self::num(self.avg_hopcount_delivered),
            self.contact_durations.len(),
            Self::num(self.contact_duration_mean()),
            Self::num(self.propagation_fraction_avg),
        );
        s
    }

    fn series_csv(&self) -> String {
        let mut s = String::from("metric,value\n");
        let _ = writeln!(s, "avg_hopcount,{}", Self::num(self.avg_hopcount_delivered));
        let _ = writeln!(s, "delivery_rate,{}", Self::num(self.delivery_rate));
        let _ = writeln!(s, "latency_avg_sec,{}", Self::num(self.latency_avg));
        let _ = writeln!(s, "overhead_ratio,{}", Self::num(self.overhead_ratio));
        s
    }

    /// Write summary.txt, metrics.csv, latencies.csv, contacts.csv and
    /// series.csv into `out_dir`. Deterministic byte-for-byte.
    pub fn emit(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(out_dir)
            .map_err(|e| SimError::io(out_dir.display().to_string(), e))?;
        let mut latencies = String::from("latency_sec\n");
        for l in &self.latencies {
            let _ = writeln!(latencies, "{l}");
        }
        let mut contacts = String::from("duration_sec\n");
        for d in &self.contact_durations {
            let _ = writeln!(contacts, "{d}");
        }
        let files = [
            ("summary.txt", self.summary_text()),
            ("metrics.csv", self.metrics_csv()),
            ("latencies.csv", latencies),
            ("contacts.csv", contacts),
            ("series.csv", self.series_csv()),
        ];
        let mut written = Vec::new();
        for (name, content) in files {
            let path = out_dir.join(name);
            std::fs::write(&path, content)
                .map_err(|e| SimError::io(path.display().to_string(), e))?;
            written.push(path);
        }
        Ok(written)
    }
}
