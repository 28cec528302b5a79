//! Solver tables and curve samples.

use macgame::analytic::{homogeneous_curves, homogeneous_interference, station_rates};
use macgame::equilibrium::{
    ack_design, best_response, design_ap_tau, homogeneous_ne, ne_utility_fixed_ap, social_optimum, uplink_optimum,
    AckSuppressionDesign,
};
use macgame::{ApModel, PhyProfile, Result, TrafficRatio};

use crate::table::{num, opt, Table};

pub fn describe_ap(ap: &ApModel) -> String {
    match ap {
        ApModel::Legacy(cfg) => format!("legacy(cw_min={} cw_max={} retry_limit={})", cfg.cw_min(), cfg.cw_max(), cfg.retry_limit()),
        ApModel::Fixed(v) => format!("fixed({v})"),
        ApModel::Absent => "none".into(),
    }
}

/// Equilibrium quantities and mechanism-design parameters as
/// `quantity,value` rows.
pub fn solve(n: usize, k: TrafficRatio, phy: &PhyProfile, ap: &ApModel) -> Result<Table> {
    let mut t = Table::new(&["quantity", "value"]);
    let mut row = |q: &str, v: String| t.push(vec![q.to_string(), v]);
    row("n", n.to_string());
    row("k", k.to_string());
    row("phy", phy.label().to_string());
    row("ap", describe_ap(ap));
    if let TrafficRatio::Finite(value) = k {
        if value <= 0.0 {
            return Err(macgame::Error::InvalidParameter("k must be positive or \"inf\"".into()));
        }
    }
    match k {
        TrafficRatio::Infinite => {
            if n == 0 {
                return Err(macgame::Error::InvalidParameter("need at least one station".into()));
            }
            row("ne_family", "exactly one station at tau=1, others arbitrary; only that station has non-null utility".into());
            row("ne_zero_utility_family", "two or more stations at tau=1; every utility is zero".into());
            row("tau_x", num(uplink_optimum(n, phy, ap)));
            let d = ack_design(n, phy);
            row("tau_o", num(d.tau_o));
            row("gamma", num(d.gamma));
            row("alpha", num(d.alpha));
        }
        TrafficRatio::Finite(_) => {
            let r = social_optimum(n, k, phy, ap)?;
            row("tau_star", num(r.tau_star));
            row("tau_x", num(r.tau_x));
            row("tau_prime", num(r.tau_prime));
            row("k_x", opt(r.k_x));
            row("ne_utility_bps", num(r.ne_utility));
            row("social_utility_bps", num(r.social_utility));
            row("is_pareto", r.is_pareto.to_string());
            let d = design_ap_tau(n, k, phy)?;
            row("design_tau_ap", num(d.tau_ap));
            row("design_tau_o", num(d.tau_o));
            row("design_utility_bps", num(ne_utility_fixed_ap(d.tau_o, n, k, phy)));
        }
    }
    Ok(t)
}

fn grid(points: usize, tau_max: f64) -> impl Iterator<Item = f64> {
    (1..=points).map(move |i| tau_max * i as f64 / points as f64)
}

fn check_grid(points: usize, tau_max: f64) -> Result<()> {
    if points < 2 {
        return Err(macgame::Error::InvalidParameter(format!("grid needs at least 2 points, got {points}")));
    }
    if !(tau_max > 0.0 && tau_max <= 1.0) {
        return Err(macgame::Error::InvalidParameter(format!("tau_max {tau_max} outside (0, 1]")));
    }
    Ok(())
}

/// Index of the largest value in `column` among unmarked rows.
fn argmax(t: &Table, column: usize) -> Option<usize> {
    let value = |i: usize| t.rows[i][column].parse::<f64>().unwrap_or(f64::NEG_INFINITY);
    (0..t.rows.len()).max_by(|&a, &b| value(a).total_cmp(&value(b)))
}

fn mark_max(t: &mut Table, column: usize) {
    let marker = t.header.len() - 1;
    if let Some(i) = argmax(t, column) {
        let mut row = t.rows[i].clone();
        row[marker] = "max".into();
        t.push(row);
    }
}

/// Station utility against fixed interference `p` or, without `p`, on the
/// homogeneous outcome.
pub fn utility_curve(
    n: usize,
    k: TrafficRatio,
    phy: &PhyProfile,
    ap: &ApModel,
    p: Option<f64>,
    points: usize,
    tau_max: f64,
) -> Result<Table> {
    check_grid(points, tau_max)?;
    if n == 0 {
        return Err(macgame::Error::InvalidParameter("need at least one station".into()));
    }
    let mut t = Table::new(&["tau", "p", "uplink_bps", "downlink_bps", "utility_bps", "marker"]);
    let sample = |tau: f64| match p {
        Some(p) => (p, station_rates(tau, p, n, k, phy, ap)),
        None => (homogeneous_interference(tau, n), homogeneous_curves(tau, n, k, phy, ap)),
    };
    let push = |t: &mut Table, tau: f64, marker: &str| {
        let (p, r) = sample(tau);
        t.push(vec![num(tau), num(p), num(r.uplink), num(r.downlink), num(r.utility), marker.to_string()]);
    };
    if let Some(p) = p {
        if !(0.0..=1.0).contains(&p) {
            return Err(macgame::Error::InvalidParameter(format!("p {p} outside [0, 1]")));
        }
    }
    for tau in grid(points, tau_max) {
        push(&mut t, tau, "");
    }
    mark_max(&mut t, 4);
    match p {
        Some(p) => {
            if let Some(br) = best_response(p, n, k, ap)?.tau() {
                push(&mut t, br, "best_response");
            }
        }
        None => {
            if !k.is_infinite() && *ap != ApModel::Absent {
                push(&mut t, homogeneous_ne(n, k, ap)?, "tau_star");
            }
            push(&mut t, uplink_optimum(n, phy, ap), "tau_x");
        }
    }
    Ok(t)
}

/// Utility at the homogeneous equilibrium induced by a fixed `τ_AP`, with
/// the design point and the legacy-AP equilibrium as companion rows.
pub fn ne_utility_curve(n: usize, k: TrafficRatio, phy: &PhyProfile, points: usize, tau_max: f64) -> Result<Table> {
    check_grid(points, tau_max)?;
    let mut t = Table::new(&["tau", "utility_bps", "marker"]);
    for tau in grid(points, tau_max) {
        t.push(vec![num(tau), num(ne_utility_fixed_ap(tau, n, k, phy)), String::new()]);
    }
    mark_max(&mut t, 1);
    let d = design_ap_tau(n, k, phy)?;
    t.push(vec![num(d.tau_o), num(ne_utility_fixed_ap(d.tau_o, n, k, phy)), "design".into()]);
    let legacy = ApModel::Legacy(Default::default());
    let r = social_optimum(n, k, phy, &legacy)?;
    t.push(vec![num(r.tau_star), num(r.ne_utility), "legacy_ne".into()]);
    Ok(t)
}

/// Delivered uplink of one station deviating from `γ` while the other
/// `n − 1` stations play `γ`.
pub fn ack_utility_curve(n: usize, phy: &PhyProfile, design: AckSuppressionDesign, points: usize, tau_max: f64) -> Result<Table> {
    check_grid(points, tau_max)?;
    if n == 0 {
        return Err(macgame::Error::InvalidParameter("need at least one station".into()));
    }
    let p = homogeneous_interference(design.gamma, n);
    let mut t = Table::new(&["tau", "utility_bps", "drop_probability", "marker"]);
    let push = |t: &mut Table, tau: f64, marker: &str| {
        let u = macgame::equilibrium::ack_utility(tau, p, &design, phy);
        t.push(vec![num(tau), num(u), num(design.drop_probability(tau)), marker.to_string()]);
    };
    for tau in grid(points, tau_max) {
        push(&mut t, tau, "");
    }
    mark_max(&mut t, 1);
    push(&mut t, design.gamma, "gamma");
    Ok(t)
}
