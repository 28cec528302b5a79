//! Line-oriented scenario files.
//!
//! A file is a sequence of `[section]` headers, each followed by
//! `key = value` lines. `#` starts a comment. The grammar is documented in
//! the README; [`ScenarioFile::to_text`] writes the canonical form, which
//! [`ScenarioFile::parse`] reads back to the same value.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use macgame::adaptation::ControllerConfig;
use macgame::equilibrium::AckSuppressionDesign;
use macgame::estimators::EstimatorSettings;
use macgame::scenario::{
    AckDesignSource, AdaptivePolicy, Addressing, ApMode, Duration, Event, EventAction, NodeModel, NodeSpec,
};
use macgame::{BackoffConfig, NodeId, PhyProfile, Scenario, TrafficRatio};

/// Parse failure located at a line (1-based) and, when known, a key.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "line {}, field `{}`: {}", self.line, field, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioFileError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Invalid(#[from] macgame::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// Number of stations; every point uses copies of the first node group.
    Stations,
    K,
    /// Access probability of a `fixed` AP.
    TauAp,
    /// Initial observation window `B`.
    Window,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Stations => "n",
            Self::K => "k",
            Self::TauAp => "tau_ap",
            Self::Window => "window",
        }
    }
}

impl FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "n" => Ok(Self::Stations),
            "k" => Ok(Self::K),
            "tau_ap" => Ok(Self::TauAp),
            "window" => Ok(Self::Window),
            _ => Err(format!("unknown sweep parameter `{s}` (expected n, k, tau_ap or window)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl Sweep {
    fn apply(&self, base: &Scenario, value: f64) -> Result<Scenario, String> {
        let mut s = base.clone();
        match self.parameter {
            SweepParameter::Stations => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(format!("n must be a positive integer, got {value}"));
                }
                let model = base.nodes.first().ok_or("sweeping n needs at least one node group")?.model;
                s.nodes = (0..value as u32).map(|i| NodeSpec::new(i, model)).collect();
            }
            SweepParameter::K => {
                s.controller.k = if value.is_infinite() {
                    TrafficRatio::Infinite
                } else {
                    TrafficRatio::finite(value).map_err(|e| e.to_string())?
                };
            }
            SweepParameter::TauAp => match s.ap {
                ApMode::Fixed { .. } => s.ap = ApMode::Fixed { tau_ap: value },
                _ => return Err("sweeping tau_ap needs `mode = fixed` in [ap]".into()),
            },
            SweepParameter::Window => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(format!("window must be a positive integer, got {value}"));
                }
                s.estimator.window_slots = value as u64;
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    pub events: Vec<Event>,
    pub replicas: u32,
    pub sweep: Option<Sweep>,
}

impl ScenarioFile {
    pub fn new(scenario: Scenario) -> Self {
        Self { scenario, events: Vec::new(), replicas: 1, sweep: None }
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioFileError> {
        let sections = split_sections(text)?;
        let file = build(&sections)?;
        file.validate()?;
        Ok(file)
    }

    /// Number of sweep points (1 without a sweep).
    pub fn points(&self) -> usize {
        self.sweep.as_ref().map_or(1, |s| s.values.len())
    }

    /// Sweep value at a point, if sweeping.
    pub fn point_value(&self, point: usize) -> Option<f64> {
        self.sweep.as_ref().map(|s| s.values[point])
    }

    /// Scenario with the sweep value for `point` applied.
    pub fn scenario_at(&self, point: usize) -> macgame::Result<Scenario> {
        match &self.sweep {
            None => Ok(self.scenario.clone()),
            Some(sweep) => sweep
                .apply(&self.scenario, sweep.values[point])
                .map_err(|m| macgame::Error::Scenario(format!("sweep {}: {m}", sweep.parameter.name()))),
        }
    }

    pub fn validate(&self) -> macgame::Result<()> {
        if self.replicas == 0 {
            return Err(macgame::Error::Scenario("replicas must be at least 1".into()));
        }
        if self.sweep.as_ref().is_some_and(|s| s.values.is_empty()) {
            return Err(macgame::Error::Scenario("sweep needs at least one value".into()));
        }
        for point in 0..self.points() {
            let s = self.scenario_at(point)?;
            s.validate()?;
            s.validate_events(&self.events)?;
        }
        Ok(())
    }

    /// Canonical text form.
    pub fn to_text(&self) -> String {
        let s = &self.scenario;
        let mut out = String::new();
        let mut line = |text: String| {
            out.push_str(&text);
            out.push('\n');
        };

        line("[scenario]".into());
        line(format!("name = {}", s.name));
        line(format!("k = {}", s.controller.k));
        line(format!("duration = {}", duration_text(s.duration)));
        line(format!("warmup = {}", duration_text(s.warmup)));
        line(format!("seed = {}", s.seed));
        line(format!("replicas = {}", self.replicas));
        line(format!("addressing = {}", addressing_text(s.addressing)));
        line(format!("update_every = {}", s.controller.update_every));
        line(format!("tau_floor = {}", s.controller.tau_floor));
        line(format!("tau_ceiling = {}", s.controller.tau_ceiling));

        line(String::new());
        line("[phy]".into());
        match PhyProfile::preset(s.phy.label()) {
            Ok(p) if p.sigma_us() == s.phy.sigma_us() && p.busy_us() == s.phy.busy_us() => {
                line(format!("preset = {}", s.phy.label()));
                if p.payload_bits() != s.phy.payload_bits() {
                    line(format!("payload_bits = {}", s.phy.payload_bits()));
                }
            }
            _ => {
                line(format!("label = {}", s.phy.label()));
                line(format!("sigma_us = {}", s.phy.sigma_us()));
                line(format!("busy_us = {}", s.phy.busy_us()));
                line(format!("payload_bits = {}", s.phy.payload_bits()));
            }
        }

        line(String::new());
        line("[ap]".into());
        line(format!("mode = {}", s.ap.kind()));
        match s.ap {
            ApMode::None => {}
            ApMode::Legacy { cfg } => backoff_lines(&cfg).into_iter().for_each(&mut line),
            ApMode::Fixed { tau_ap } => line(format!("tau = {tau_ap}")),
            ApMode::Designer { tau_floor } => line(format!("tau_floor = {tau_floor}")),
            ApMode::AckSuppressor { design, downlink } => {
                match design {
                    AckDesignSource::Estimated => line("design = auto".into()),
                    AckDesignSource::Fixed(d) => {
                        line("design = fixed".into());
                        line(format!("gamma = {}", d.gamma));
                        line(format!("alpha = {}", d.alpha));
                    }
                }
                line(format!("downlink = {downlink}"));
            }
        }

        let e = &s.estimator;
        line(String::new());
        line("[estimator]".into());
        line(format!("window = {}", e.window_slots));
        line(format!("delta = {}", e.delta));
        line(format!("beta = {}", e.beta));
        line(format!("adaptive_window = {}", e.adaptive_window));
        line(format!("min_window = {}", e.min_window));
        line(format!("max_window = {}", e.max_window));
        line(format!("hysteresis = {}", e.hysteresis));

        let mut next_id = 0;
        line(String::new());
        line("[nodes]".into());
        for group in group_specs(&s.nodes) {
            line(format!("group = {}", group_text(&group, &mut next_id)));
        }

        for ev in &self.events {
            line(String::new());
            line("[event]".into());
            line(format!("time = {}", ev.time_s));
            match &ev.action {
                EventAction::Join(specs) => {
                    for group in group_specs(specs) {
                        line(format!("join = {}", group_text(&group, &mut next_id)));
                    }
                }
                EventAction::Leave(ids) => {
                    let ids: Vec<String> = ids.iter().map(|id| id.to_string()).collect();
                    line(format!("leave = {}", ids.join(" ")));
                }
            }
        }

        if let Some(sweep) = &self.sweep {
            line(String::new());
            line("[sweep]".into());
            line(format!("parameter = {}", sweep.parameter.name()));
            let values: Vec<String> = sweep.values.iter().map(|v| v.to_string()).collect();
            line(format!("values = {}", values.join(", ")));
        }
        out
    }
}

fn duration_text(d: Duration) -> String {
    match d {
        Duration::Slots(n) => n.to_string(),
        Duration::Seconds(s) => format!("{s}s"),
    }
}

fn addressing_text(a: Addressing) -> &'static str {
    match a {
        Addressing::RoundRobin => "round-robin",
        Addressing::Random => "random",
    }
}

fn backoff_lines(cfg: &BackoffConfig) -> Vec<String> {
    vec![
        format!("cw_min = {}", cfg.cw_min()),
        format!("cw_max = {}", cfg.cw_max()),
        format!("retry_limit = {}", cfg.retry_limit()),
    ]
}

/// Runs of identical models with consecutive ids.
fn group_specs(specs: &[NodeSpec]) -> Vec<(u32, NodeModel, u32)> {
    let mut groups: Vec<(u32, NodeModel, u32)> = Vec::new();
    for spec in specs {
        match groups.last_mut() {
            Some((first, model, count)) if *model == spec.model && *first + *count == spec.id.0 => *count += 1,
            _ => groups.push((spec.id.0, spec.model, 1)),
        }
    }
    groups
}

fn group_text(&(first, model, count): &(u32, NodeModel, u32), next_id: &mut u32) -> String {
    let mut text = format!("{} {count}", model.kind());
    match model {
        NodeModel::Persistent { tau } => write!(text, " tau={tau}").unwrap(),
        NodeModel::Legacy { cfg } => write!(
            text,
            " cw_min={} cw_max={} retry_limit={}",
            cfg.cw_min(),
            cfg.cw_max(),
            cfg.retry_limit()
        )
        .unwrap(),
        NodeModel::Adaptive(AdaptivePolicy::BestResponse { known_ap_tau: Some(v) }) => {
            write!(text, " known_ap_tau={v}").unwrap()
        }
        NodeModel::Adaptive(_) => {}
    }
    if first != *next_id {
        write!(text, " first_id={first}").unwrap();
    }
    *next_id = first + count;
    text
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

const SECTIONS: &[&str] = &["scenario", "phy", "ap", "estimator", "nodes", "event", "sweep"];

fn split_sections(text: &str) -> Result<Vec<Section>, ParseError> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| error(line, None, "section header must end with `]`"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(error(line, None, format!("unknown section [{name}] (expected one of {})", SECTIONS.join(", "))));
            }
            if name != "event" && sections.iter().any(|s| s.name == name) {
                return Err(error(line, None, format!("section [{name}] appears twice")));
            }
            sections.push(Section { name: name.to_string(), line, entries: Vec::new() });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| error(line, None, "expected `key = value` or a `[section]` header"))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(error(line, None, "missing key before `=`"));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| error(line, Some(key), "key outside of any section"))?;
        section.entries.push(Entry { line, key: key.to_string(), value: value.to_string() });
    }
    Ok(sections)
}

fn error(line: usize, field: Option<&str>, message: impl Into<String>) -> ParseError {
    ParseError { line, field: field.map(str::to_string), message: message.into() }
}

/// Key lookup over one section that rejects duplicates and leftovers.
struct Fields<'a> {
    section: &'a Section,
    used: BTreeSet<usize>,
}

impl<'a> Fields<'a> {
    fn new(section: &'a Section, repeatable: &[&str]) -> Result<Self, ParseError> {
        let mut seen = BTreeSet::new();
        for e in &section.entries {
            if !repeatable.contains(&e.key.as_str()) && !seen.insert(e.key.as_str()) {
                return Err(error(e.line, Some(&e.key), format!("duplicate key in [{}]", section.name)));
            }
        }
        Ok(Self { section, used: BTreeSet::new() })
    }

    fn get(&mut self, key: &str) -> Option<&'a Entry> {
        let (i, e) = self.section.entries.iter().enumerate().find(|(_, e)| e.key == key)?;
        self.used.insert(i);
        Some(e)
    }

    fn all(&mut self, key: &str) -> Vec<&'a Entry> {
        let mut found = Vec::new();
        for (i, e) in self.section.entries.iter().enumerate() {
            if e.key == key {
                self.used.insert(i);
                found.push(e);
            }
        }
        found
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ParseError>
    where
        T::Err: fmt::Display,
    {
        self.get(key).map(|e| value(e, &e.value)).transpose()
    }

    fn parse_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, ParseError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T, ParseError>
    where
        T::Err: fmt::Display,
    {
        self.parse(key)?
            .ok_or_else(|| error(self.section.line, Some(key), format!("required in [{}]", self.section.name)))
    }

    fn finish(self) -> Result<(), ParseError> {
        match self.section.entries.iter().enumerate().find(|(i, _)| !self.used.contains(i)) {
            Some((_, e)) => Err(error(e.line, Some(&e.key), format!("unknown key in [{}]", self.section.name))),
            None => Ok(()),
        }
    }
}

fn value<T: FromStr>(entry: &Entry, text: &str) -> Result<T, ParseError>
where
    T::Err: fmt::Display,
{
    text.parse::<T>()
        .map_err(|e| error(entry.line, Some(&entry.key), format!("cannot parse `{text}`: {e}")))
}

fn invalid(entry: &Entry) -> impl Fn(macgame::Error) -> ParseError + '_ {
    move |e| error(entry.line, Some(&entry.key), e.to_string())
}

fn parse_duration(entry: &Entry) -> Result<Duration, ParseError> {
    let text = entry.value.as_str();
    if let Some(secs) = text.strip_suffix('s').filter(|t| !t.ends_with("slot")) {
        return Ok(Duration::Seconds(value(entry, secs.trim())?));
    }
    let slots = text.strip_suffix("slots").unwrap_or(text).trim();
    Ok(Duration::Slots(value(entry, slots)?))
}

fn parse_bool(entry: &Entry) -> Result<bool, ParseError> {
    match entry.value.as_str() {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        other => Err(error(entry.line, Some(&entry.key), format!("expected true or false, got `{other}`"))),
    }
}

fn build(sections: &[Section]) -> Result<ScenarioFile, ParseError> {
    let find = |name: &str| sections.iter().find(|s| s.name == name);
    let phy_section = find("phy").ok_or_else(|| error(1, None, "missing [phy] section"))?;
    let phy = build_phy(phy_section)?;
    let mut scenario = Scenario::new("scenario", phy);
    let mut replicas = 1;

    if let Some(section) = find("scenario") {
        let mut f = Fields::new(section, &[])?;
        if let Some(e) = f.get("name") {
            scenario.name = e.value.clone();
        }
        let k = match f.get("k") {
            Some(e) => value::<TrafficRatio>(e, &e.value)?,
            None => TrafficRatio::Finite(1.0),
        };
        let mut controller = ControllerConfig::new(k);
        controller.update_every = f.parse_or("update_every", controller.update_every)?;
        controller.tau_floor = f.parse_or("tau_floor", controller.tau_floor)?;
        controller.tau_ceiling = f.parse_or("tau_ceiling", controller.tau_ceiling)?;
        scenario.controller = controller;
        if let Some(e) = f.get("duration") {
            scenario.duration = parse_duration(e)?;
        }
        if let Some(e) = f.get("warmup") {
            scenario.warmup = parse_duration(e)?;
        }
        scenario.seed = f.parse_or("seed", scenario.seed)?;
        replicas = f.parse_or("replicas", 1)?;
        if let Some(e) = f.get("addressing") {
            scenario.addressing = match e.value.as_str() {
                "round-robin" => Addressing::RoundRobin,
                "random" => Addressing::Random,
                other => {
                    return Err(error(e.line, Some("addressing"), format!("expected round-robin or random, got `{other}`")))
                }
            };
        }
        f.finish()?;
    }

    if let Some(section) = find("ap") {
        scenario.ap = build_ap(section)?;
    }

    if let Some(section) = find("estimator") {
        let mut f = Fields::new(section, &[])?;
        let d = EstimatorSettings::default();
        scenario.estimator = EstimatorSettings {
            window_slots: f.parse_or("window", d.window_slots)?,
            delta: f.parse_or("delta", d.delta)?,
            beta: f.parse_or("beta", d.beta)?,
            adaptive_window: f.get("adaptive_window").map(parse_bool).transpose()?.unwrap_or(d.adaptive_window),
            min_window: f.parse_or("min_window", d.min_window)?,
            max_window: f.parse_or("max_window", d.max_window)?,
            hysteresis: f.parse_or("hysteresis", d.hysteresis)?,
        };
        f.finish()?;
    }

    let mut next_id = 0u32;
    if let Some(section) = find("nodes") {
        let mut f = Fields::new(section, &["group"])?;
        for e in f.all("group") {
            scenario.nodes.extend(parse_group(e, &mut next_id)?);
        }
        f.finish()?;
    }

    let mut events = Vec::new();
    for section in sections.iter().filter(|s| s.name == "event") {
        let mut f = Fields::new(section, &["join", "leave"])?;
        let time = f.get("time").ok_or_else(|| error(section.line, Some("time"), "required in [event]"))?;
        let time_s = value::<f64>(time, time.value.strip_suffix('s').unwrap_or(&time.value).trim())?;
        let joins = f.all("join");
        let leaves = f.all("leave");
        let action = match (joins.is_empty(), leaves.is_empty()) {
            (false, true) => {
                let mut specs = Vec::new();
                for e in joins {
                    specs.extend(parse_group(e, &mut next_id)?);
                }
                EventAction::Join(specs)
            }
            (true, false) => {
                let mut ids = Vec::new();
                for e in leaves {
                    for tok in e.value.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
                        ids.push(NodeId(value(e, tok)?));
                    }
                }
                EventAction::Leave(ids)
            }
            (true, true) => return Err(error(section.line, None, "[event] needs `join` or `leave` lines")),
            (false, false) => return Err(error(section.line, None, "an [event] cannot both join and leave")),
        };
        f.finish()?;
        events.push(Event { time_s, action });
    }

    let sweep = match find("sweep") {
        None => None,
        Some(section) => {
            let mut f = Fields::new(section, &[])?;
            let parameter = f.require::<SweepParameter>("parameter")?;
            let values_entry = f.get("values").ok_or_else(|| error(section.line, Some("values"), "required in [sweep]"))?;
            let values = values_entry
                .value
                .split(',')
                .map(|v| value::<f64>(values_entry, v.trim()))
                .collect::<Result<Vec<_>, _>>()?;
            f.finish()?;
            Some(Sweep { parameter, values })
        }
    };

    Ok(ScenarioFile { scenario, events, replicas, sweep })
}

fn build_phy(section: &Section) -> Result<PhyProfile, ParseError> {
    let mut f = Fields::new(section, &[])?;
    let phy = if let Some(e) = f.get("preset") {
        let base = PhyProfile::preset(&e.value).map_err(invalid(e))?;
        match f.get("payload_bits") {
            Some(p) => base.with_payload_bits(value(p, &p.value)?).map_err(invalid(p))?,
            None => base,
        }
    } else {
        let label = f.get("label").map_or("custom".to_string(), |e| e.value.clone());
        let sigma: f64 = f.require("sigma_us")?;
        let busy: f64 = f.require("busy_us")?;
        let payload: f64 = f.require("payload_bits")?;
        PhyProfile::new(sigma, busy, payload, label).map_err(|e| error(section.line, None, e.to_string()))?
    };
    f.finish()?;
    Ok(phy)
}

fn backoff(f: &mut Fields<'_>, line: usize) -> Result<BackoffConfig, ParseError> {
    let d = BackoffConfig::default();
    let cfg = BackoffConfig::new(
        f.parse_or("cw_min", d.cw_min())?,
        f.parse_or("cw_max", d.cw_max())?,
        f.parse_or("retry_limit", d.retry_limit())?,
    );
    cfg.map_err(|e| error(line, None, e.to_string()))
}

fn build_ap(section: &Section) -> Result<ApMode, ParseError> {
    let mut f = Fields::new(section, &[])?;
    let mode = f.get("mode").ok_or_else(|| error(section.line, Some("mode"), "required in [ap]"))?;
    let ap = match mode.value.as_str() {
        "none" => ApMode::None,
        "legacy" => ApMode::Legacy { cfg: backoff(&mut f, section.line)? },
        "fixed" => ApMode::Fixed { tau_ap: f.require("tau")? },
        "designer" => ApMode::Designer { tau_floor: f.parse_or("tau_floor", 1e-4)? },
        "ack-suppressor" => {
            let design = match f.get("design").map(|e| (e, e.value.as_str())) {
                None | Some((_, "auto")) => AckDesignSource::Estimated,
                Some((e, "fixed")) => {
                    let gamma = f.require("gamma")?;
                    let alpha = f.require("alpha")?;
                    AckDesignSource::Fixed(AckSuppressionDesign::new(gamma, alpha).map_err(invalid(e))?)
                }
                Some((e, other)) => {
                    return Err(error(e.line, Some("design"), format!("expected auto or fixed, got `{other}`")))
                }
            };
            let downlink = f.get("downlink").map(parse_bool).transpose()?.unwrap_or(false);
            ApMode::AckSuppressor { design, downlink }
        }
        other => {
            return Err(error(
                mode.line,
                Some("mode"),
                format!("unknown AP mode `{other}` (expected none, legacy, fixed, designer or ack-suppressor)"),
            ))
        }
    };
    f.finish()?;
    Ok(ap)
}

/// `MODEL COUNT [option=value ...]`.
fn parse_group(entry: &Entry, next_id: &mut u32) -> Result<Vec<NodeSpec>, ParseError> {
    let mut tokens = entry.value.split_whitespace();
    let kind = tokens.next().ok_or_else(|| error(entry.line, Some(&entry.key), "expected `MODEL COUNT [option=value ...]`"))?;
    let count: u32 = match tokens.next() {
        Some(t) => value(entry, t)?,
        None => return Err(error(entry.line, Some(&entry.key), "missing node count")),
    };
    if count == 0 {
        return Err(error(entry.line, Some(&entry.key), "node count must be at least 1"));
    }
    let mut opts = Vec::new();
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| error(entry.line, Some(&entry.key), format!("expected option=value, got `{tok}`")))?;
        if opts.iter().any(|(seen, _)| *seen == k) {
            return Err(error(entry.line, Some(&entry.key), format!("option `{k}` given twice")));
        }
        opts.push((k, v));
    }
    let mut take = |name: &str| -> Option<&str> {
        let i = opts.iter().position(|(k, _)| *k == name)?;
        Some(opts.remove(i).1)
    };
    let mut num = |name: &str| -> Result<Option<f64>, ParseError> {
        take(name).map(|v| value::<f64>(entry, v)).transpose()
    };
    let model = match kind {
        "persistent" => NodeModel::Persistent {
            tau: num("tau")?.ok_or_else(|| error(entry.line, Some(&entry.key), "persistent nodes need tau=..."))?,
        },
        "adaptive" => NodeModel::Adaptive(AdaptivePolicy::BestResponse { known_ap_tau: num("known_ap_tau")? }),
        "adaptive-ack" => NodeModel::Adaptive(AdaptivePolicy::AckThreshold),
        "legacy" => {
            let d = BackoffConfig::default();
            let mut int = |name: &str, default: u32| -> Result<u32, ParseError> {
                take(name).map_or(Ok(default), |v| value(entry, v))
            };
            let (lo, hi, r) = (int("cw_min", d.cw_min())?, int("cw_max", d.cw_max())?, int("retry_limit", d.retry_limit())?);
            NodeModel::Legacy { cfg: BackoffConfig::new(lo, hi, r).map_err(invalid(entry))? }
        }
        other => {
            return Err(error(
                entry.line,
                Some(&entry.key),
                format!("unknown node model `{other}` (expected persistent, legacy, adaptive or adaptive-ack)"),
            ))
        }
    };
    let first = match take("first_id") {
        Some(v) => value(entry, v)?,
        None => *next_id,
    };
    if let Some((k, _)) = opts.first() {
        return Err(error(entry.line, Some(&entry.key), format!("option `{k}` does not apply to {kind} nodes")));
    }
    let end = first
        .checked_add(count)
        .ok_or_else(|| error(entry.line, Some(&entry.key), "node ids overflow"))?;
    *next_id = end;
    Ok((first..end).map(|id| NodeSpec::new(id, model)).collect())
}
