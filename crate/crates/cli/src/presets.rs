//! Named experiments that regenerate the data behind each figure.
//!
//! Curve presets evaluate the analytic model; simulation presets are
//! embedded scenario files run through [`crate::simulate`].

use std::path::{Path, PathBuf};

use macgame::equilibrium::{ack_design, AckSuppressionDesign};
use macgame::{ApModel, BackoffConfig, PhyProfile, TrafficRatio};

use crate::analysis::{ack_utility_curve, ne_utility_curve, utility_curve};
use crate::error::CliError;
use crate::scenario_file::ScenarioFile;
use crate::simulate::{run_all, write_runs};
use crate::table::Table;

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset { name: "fig2", description: "station utility vs tau for fixed interference p (n=10, k=1, b11, legacy AP)" },
    Preset { name: "fig3", description: "homogeneous utility for n in {2,10} and several k (b11, legacy AP)" },
    Preset { name: "fig4", description: "homogeneous utility under fixed tau_AP values at 11 Mb/s (n=10, k=1)" },
    Preset { name: "fig5", description: "homogeneous utility under fixed tau_AP values at 600 Mb/s (n=10, k=1)" },
    Preset { name: "fig6", description: "utility at the equilibrium induced by a fixed tau_AP (n=10, b11)" },
    Preset { name: "fig7", description: "delivered uplink under ACK suppression for several alpha (n=10, k=inf)" },
    Preset { name: "fig8", description: "aggregate throughput vs n, best response (k=1, 0.5) and standard DCF (g6)" },
    Preset { name: "fig9", description: "best response under 5 -> 10 -> 7 stations (g6, k=1)" },
    Preset { name: "fig10", description: "uplink/downlink split with legacy AP vs tau_AP designer (n=10, k=0.5, b11)" },
    Preset { name: "fig11", description: "CW=8 cheater with and without ACK suppression (b11)" },
    Preset { name: "fig12", description: "aggregate throughput vs n under ACK suppression and standard DCF (b11, k=inf)" },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

const FILES: &[(&str, &str, &str)] = &[
    ("fig8", "k1", include_str!("../presets/fig8-k1.scn")),
    ("fig8", "k05", include_str!("../presets/fig8-k05.scn")),
    ("fig8", "dcf", include_str!("../presets/fig8-dcf.scn")),
    ("fig9", "dynamic", include_str!("../presets/fig9.scn")),
    ("fig10", "legacy", include_str!("../presets/fig10-legacy.scn")),
    ("fig10", "designer", include_str!("../presets/fig10-designer.scn")),
    ("fig11", "dcf", include_str!("../presets/fig11-dcf.scn")),
    ("fig11", "suppression", include_str!("../presets/fig11-suppression.scn")),
    ("fig12", "br", include_str!("../presets/fig12-br.scn")),
    ("fig12", "dcf", include_str!("../presets/fig12-dcf.scn")),
];

/// Labelled scenario files of a simulation preset (empty for curve presets).
pub fn scenario_files(name: &str) -> Vec<(&'static str, ScenarioFile)> {
    FILES
        .iter()
        .filter(|(preset, _, _)| *preset == name)
        .map(|(_, label, text)| (*label, ScenarioFile::parse(text).expect("embedded preset parses")))
        .collect()
}

const GRID: usize = 1000;

fn b11() -> PhyProfile {
    PhyProfile::preset("b11").expect("preset")
}

fn legacy() -> ApModel {
    ApModel::Legacy(BackoffConfig::default())
}

/// Analytic tables of a curve preset, keyed by file name.
pub fn curve_tables(name: &str) -> macgame::Result<Vec<(String, Table)>> {
    let k1 = TrafficRatio::Finite(1.0);
    let mut out = Vec::new();
    match name {
        "fig2" => {
            for p in [0.05, 0.15, 0.3, 0.5] {
                out.push((format!("utility_p{p}.csv"), utility_curve(10, k1, &b11(), &legacy(), Some(p), GRID, 0.05)?));
            }
        }
        "fig3" => {
            for n in [2, 10] {
                for k in [0.5, 1.0, 2.0, 5.0, 11.0, 20.0] {
                    let t = utility_curve(n, TrafficRatio::Finite(k), &b11(), &legacy(), None, GRID, 0.3)?;
                    out.push((format!("utility_n{n}_k{k}.csv"), t));
                }
            }
        }
        "fig4" | "fig5" => {
            let (phy, values): (PhyProfile, &[f64]) = if name == "fig4" {
                (b11(), &[0.01, 0.032, 0.064, 0.1, 0.2])
            } else {
                (PhyProfile::preset("n600")?, &[0.064, 0.1, 0.168, 0.3])
            };
            for &v in values {
                let t = utility_curve(10, k1, &phy, &ApModel::Fixed(v), None, GRID, 0.1)?;
                out.push((format!("utility_tau_ap{v}.csv"), t));
            }
            out.push(("utility_legacy.csv".into(), utility_curve(10, k1, &phy, &legacy(), None, GRID, 0.1)?));
        }
        "fig6" => {
            for k in [0.5, 1.0, 2.0] {
                out.push((format!("ne_utility_k{k}.csv"), ne_utility_curve(10, TrafficRatio::Finite(k), &b11(), GRID, 0.05)?));
            }
        }
        "fig7" => {
            let d = ack_design(10, &b11());
            for scale in [0.0, 0.5, 1.0, 2.0] {
                let design = AckSuppressionDesign::new(d.gamma, scale * d.alpha)?;
                let t = ack_utility_curve(10, &b11(), design, GRID, 0.3)?;
                out.push((format!("ack_utility_alpha{}.csv", design.alpha), t));
            }
        }
        _ => {}
    }
    Ok(out)
}

/// Runs a preset into `out/<name>/` and returns the files written.
pub fn run_preset(name: &str, out: &Path, seed: Option<u64>, replicas: Option<u32>) -> Result<Vec<PathBuf>, CliError> {
    if find(name).is_none() {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        return Err(CliError::Usage(format!("unknown preset `{name}` (available: {})", names.join(", "))));
    }
    let dir = out.join(name);
    let mut written = Vec::new();
    for (file, table) in curve_tables(name).map_err(CliError::from_solver)? {
        let path = dir.join(file);
        table.write_atomic(&path)?;
        written.push(path);
    }
    for (label, file) in scenario_files(name) {
        let seed = seed.unwrap_or(file.scenario.seed);
        let runs = run_all(&file, seed, replicas.unwrap_or(file.replicas)).map_err(CliError::from_simulation)?;
        written.extend(write_runs(&dir.join(label), &runs)?);
    }
    Ok(written)
}
