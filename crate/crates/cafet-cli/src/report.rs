//! Markdown rendering and benchmark reference values.

use cafet_core::dgp::experiment::{RejectionRow, RejectionTable};
use cafet_core::dgp::DgpSpec;
use cafet_core::stats::StatId;

/// Benchmark rejection rates (%) for selected simulation designs, used to
/// cross-check grid outputs in the simulation summary. Keyed by
/// (dgp, m, N, T, tau, alpha) with r = 1, h = 1, conventional variance, and
/// the power enhancement on s2-s4; values are (s1, s2, s3, s4).
const REFERENCE_RATES: &[((u8, usize, usize, usize, f64, f64), [f64; 4])] = &[
    // Null rejection rates, three blocks on one factor.
    ((2, 3, 50, 50, 0.2, 0.0), [23.9, 10.8, 12.6, 19.9]),
    ((2, 3, 100, 100, 0.2, 0.0), [17.8, 8.6, 8.2, 15.6]),
    ((2, 3, 200, 200, 0.2, 0.0), [15.4, 7.5, 7.6, 12.4]),
    ((2, 3, 500, 500, 0.2, 0.0), [10.2, 4.6, 5.4, 8.0]),
    ((2, 3, 50, 50, 0.6, 0.0), [24.9, 11.0, 12.6, 20.2]),
    ((2, 3, 100, 100, 0.6, 0.0), [18.3, 8.4, 9.5, 16.0]),
    ((2, 3, 200, 200, 0.6, 0.0), [16.0, 7.8, 8.3, 13.0]),
    ((2, 3, 500, 500, 0.6, 0.0), [9.9, 4.6, 5.2, 8.6]),
    // Rejection rates at alpha = 0.5.
    ((2, 3, 50, 50, 0.2, 0.5), [79.6, 49.3, 51.6, 74.7]),
    ((2, 3, 100, 100, 0.2, 0.5), [96.9, 78.3, 77.6, 96.0]),
    ((2, 3, 200, 200, 0.2, 0.5), [100.0, 94.5, 94.9, 99.6]),
    ((2, 3, 500, 500, 0.2, 0.5), [100.0, 99.8, 99.9, 100.0]),
    ((2, 3, 50, 50, 0.6, 0.5), [59.6, 31.3, 32.2, 53.2]),
    ((2, 3, 100, 100, 0.6, 0.5), [85.7, 50.9, 51.0, 79.3]),
    ((2, 3, 200, 200, 0.6, 0.5), [94.5, 72.5, 72.5, 93.2]),
    ((2, 3, 500, 500, 0.6, 0.5), [99.9, 94.1, 93.4, 99.6]),
    // Known factor count: one block on one factor.
    ((2, 1, 200, 200, 0.2, 0.0), [8.8, 5.3, 5.9, 8.4]),
    ((2, 1, 500, 500, 0.2, 0.0), [5.4, 5.3, 5.4, 6.4]),
    ((2, 1, 200, 200, 0.6, 0.0), [8.9, 5.1, 5.9, 8.9]),
    ((2, 1, 500, 500, 0.6, 0.0), [7.3, 5.5, 5.5, 7.3]),
];

/// Reference rate (%) for one design/statistic, when a benchmark cell
/// matches.
pub fn reference_rate(spec: &DgpSpec, stat: StatId) -> Option<f64> {
    if spec.r != 1 || spec.h != 1 || spec.gamma.is_some() {
        return None;
    }
    let key = (spec.dgp_id, spec.m, spec.n, spec.t_len, spec.tau, spec.alpha);
    REFERENCE_RATES.iter().find_map(|(k, rates)| {
        (k.0 == key.0
            && k.1 == key.1
            && k.2 == key.2
            && k.3 == key.3
            && (k.4 - key.4).abs() < 1e-12
            && (k.5 - key.5).abs() < 1e-12)
            .then(|| match stat {
                StatId::S1 => rates[0],
                StatId::S2 => rates[1],
                StatId::S3 => rates[2],
                StatId::S4 => rates[3],
            })
    })
}

fn stat_label(row: &RejectionRow) -> String {
    if row.enhanced {
        format!("{}+", row.stat)
    } else {
        row.stat.to_string()
    }
}

/// Markdown summary of an experiment run, juxtaposing achieved rates with
/// benchmark reference values where a grid cell matches one.
pub fn simulation_markdown(specs: &[DgpSpec], table: &RejectionTable) -> String {
    let mut out = String::from("# Simulation summary\n");
    for spec in specs {
        let id = spec.spec_id();
        out.push_str(&format!(
            "\n## {id}\n\n| statistic | rejection % | MC s.e. % | reference % | diff pp | failures |\n\
             |---|---|---|---|---|---|\n"
        ));
        for row in table.rows.iter().filter(|r| r.spec_id == id) {
            let rate = row.reject_rate * 100.0;
            let mcse = row.mcse * 100.0;
            let (reference, diff) = match reference_rate(spec, row.stat) {
                Some(r) => (format!("{r:.1}"), format!("{:+.1}", rate - r)),
                None => ("-".into(), "-".into()),
            };
            out.push_str(&format!(
                "| {} | {rate:.1} | {mcse:.2} | {reference} | {diff} | {} |\n",
                stat_label(row),
                row.failures
            ));
        }
    }
    out
}

/// One target's p-values on one panel kind.
#[derive(Debug, Clone)]
pub struct TestReportRow {
    /// "stationary" or "persistent".
    pub dataset: &'static str,
    /// (statistic label, p-value) in s1..s4 order.
    pub p_values: Vec<(String, f64)>,
}

/// CSV for the accuracy-test command: one row per (dataset, statistic) with
/// a 10% significance marker column.
pub fn test_csv(target: &str, rows: &[TestReportRow], significance: f64) -> String {
    let mut out = String::from("target,dataset,stat,p_value,significant\n");
    for row in rows {
        for (stat, p) in &row.p_values {
            out.push_str(&format!(
                "{target},{},{stat},{p:.6},{}\n",
                row.dataset,
                if *p < significance { 1 } else { 0 }
            ));
        }
    }
    out
}

/// Markdown table for the accuracy-test command; p-values below the
/// significance level are bolded.
pub fn test_markdown(target: &str, rows: &[TestReportRow], significance: f64) -> String {
    let mut out = format!(
        "# Predictive accuracy tests: {target}\n\nSignificance bolding at {:.0}%.\n\n",
        significance * 100.0
    );
    let header: Vec<String> = rows[0].p_values.iter().map(|(s, _)| s.clone()).collect();
    out.push_str(&format!("| dataset | {} |\n", header.join(" | ")));
    out.push_str(&format!("|---|{}|\n", "---|".repeat(header.len())));
    for row in rows {
        let cells: Vec<String> = row
            .p_values
            .iter()
            .map(|(_, p)| {
                if *p < significance {
                    format!("**{p:.3}**")
                } else {
                    format!("{p:.3}")
                }
            })
            .collect();
        out.push_str(&format!("| {} | {} |\n", row.dataset, cells.join(" | ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_lookup_matches_known_cell() {
        let mut spec = DgpSpec::design(2, 200, 200).unwrap();
        spec.tau = 0.2;
        assert_eq!(reference_rate(&spec, StatId::S1), Some(15.4));
        assert_eq!(reference_rate(&spec, StatId::S4), Some(12.4));
        spec.alpha = 0.5;
        assert_eq!(reference_rate(&spec, StatId::S2), Some(94.5));
        spec.tau = 0.35;
        assert_eq!(reference_rate(&spec, StatId::S1), None);
    }

    #[test]
    fn markdown_bolds_significant_p_values() {
        let rows = vec![TestReportRow {
            dataset: "stationary",
            p_values: vec![("s1".into(), 0.03), ("s2+".into(), 0.4)],
        }];
        let md = test_markdown("GDP", &rows, 0.10);
        assert!(md.contains("**0.030**"));
        assert!(md.contains("| 0.400 |"));
    }
}
