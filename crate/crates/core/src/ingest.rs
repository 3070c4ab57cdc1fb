//! Case files and the bundled IEEE 14-bus / 3x modified 13-node system.
//!
//! Three TOML documents describe a case: a transmission network, one file
//! per feeder and a scenario. Column names carry their units (`p_load_MW`,
//! `e_max_MWh`, ...). Unknown keys are rejected.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::*;
use crate::validate::validate_case;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("unknown bundled case `{0}` (expected case_study_1 or case_study_2)")]
    UnknownBundle(String),
    #[error("case failed validation:\n{0}")]
    Invalid(String),
}

impl IngestError {
    fn schema(path: &str, message: impl Into<String>) -> Self {
        IngestError::Schema { path: path.to_string(), message: message.into() }
    }
}

// ---- file schemas ---------------------------------------------------------

#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaseRow {
    s_base_MVA: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusRow {
    id: usize,
    p_load_MW: f64,
    q_load_MVAr: f64,
    v_min_pu: f64,
    v_max_pu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchRow {
    from: usize,
    to: usize,
    r_pu: f64,
    x_pu: f64,
    #[serde(default)]
    b_pu: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenRow {
    bus: usize,
    p_min_MW: f64,
    p_max_MW: f64,
    q_min_MVAr: f64,
    q_max_MVAr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransmissionFile {
    base: BaseRow,
    #[serde(default)]
    bus: Vec<BusRow>,
    #[serde(default)]
    branch: Vec<BranchRow>,
    #[serde(default)]
    gen: Vec<GenRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineRow {
    from: usize,
    to: usize,
    r_pu: f64,
    x_pu: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DgRow {
    node: usize,
    p_min_MW: f64,
    p_max_MW: f64,
    q_min_MVAr: f64,
    q_max_MVAr: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EssRow {
    node: usize,
    e_surplus_MWh: f64,
    e_max_MWh: f64,
    s_max_MVA: f64,
    r_eq_pu: f64,
    r_cvt_pu: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PvRow {
    node: usize,
    p_max_MW: f64,
    pf: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryRow {
    substation_node: Option<usize>,
    transmission_bus: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeederFile {
    id: String,
    boundary: Option<BoundaryRow>,
    #[serde(default)]
    node: Vec<BusRow>,
    #[serde(default)]
    line: Vec<LineRow>,
    #[serde(default)]
    dg: Vec<DgRow>,
    #[serde(default)]
    ess: Vec<EssRow>,
    #[serde(default)]
    pv: Vec<PvRow>,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioRow {
    periods: Option<usize>,
    delta_t_h: Option<f64>,
    w_t: Option<f64>,
    w_d: Option<f64>,
    central_gen_penalty_per_MW: Option<f64>,
    critical_fraction: Option<f64>,
    intertie_s_max_MVA: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ramp_limit_MW: Option<f64>,
}

/// A profile is either a TOML array or a comma-separated string.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Multipliers {
    List(Vec<f64>),
    Text(String),
}

impl Multipliers {
    fn values(&self, path: &str, field: &str) -> Result<Vec<f64>, IngestError> {
        match self {
            Multipliers::List(v) => Ok(v.clone()),
            Multipliers::Text(s) => s
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|_| IngestError::schema(path, format!("profiles.{field}: bad multiplier `{}`", tok.trim())))
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfilesRow {
    load: Option<Multipliers>,
    pv: Option<Multipliers>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    scenario: ScenarioRow,
    #[serde(default)]
    profiles: ProfilesRow,
}

// ---- parsing ---------------------------------------------------------------

/// Default load multipliers, one per hourly period. Synthetic.
pub const DEFAULT_LOAD_PROFILE: [f64; 6] = [0.90, 0.95, 1.00, 1.00, 0.95, 0.90];
/// Default PV multipliers, one per hourly period. Synthetic.
pub const DEFAULT_PV_PROFILE: [f64; 6] = [0.00, 0.30, 0.60, 0.80, 0.50, 0.10];

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |p| offset - p - 1) + 1;
    (line, column)
}

fn from_toml<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T, IngestError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        IngestError::Parse { path: origin.to_string(), line, column, message: e.message().to_string() }
    })
}

fn read(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })
}

pub fn parse_transmission(path: impl AsRef<Path>) -> Result<TransmissionNetwork, IngestError> {
    let path = path.as_ref();
    parse_transmission_str(&read(path)?, &path.display().to_string())
}

/// Parses transmission text; `origin` labels errors.
pub fn parse_transmission_str(text: &str, origin: &str) -> Result<TransmissionNetwork, IngestError> {
    let file: TransmissionFile = from_toml(text, origin)?;
    if file.bus.is_empty() {
        return Err(IngestError::schema(origin, "no [[bus]] entries"));
    }
    let mut ids = HashSet::new();
    for b in &file.bus {
        if !ids.insert(b.id) {
            return Err(IngestError::schema(origin, format!("duplicate bus id {}", b.id)));
        }
    }
    for (k, br) in file.branch.iter().enumerate() {
        for end in [br.from, br.to] {
            if !ids.contains(&end) {
                return Err(IngestError::schema(origin, format!("branch[{k}] references unknown bus {end}")));
            }
        }
    }
    for (k, g) in file.gen.iter().enumerate() {
        if !ids.contains(&g.bus) {
            return Err(IngestError::schema(origin, format!("gen[{k}] references unknown bus {}", g.bus)));
        }
    }
    Ok(TransmissionNetwork {
        base_mva: file.base.s_base_MVA,
        buses: file
            .bus
            .iter()
            .map(|b| TransmissionBus {
                id: b.id,
                p_load_total: b.p_load_MW,
                q_load_total: b.q_load_MVAr,
                p_load_critical: 0.0,
                q_load_critical: 0.0,
                v_min: b.v_min_pu,
                v_max: b.v_max_pu,
            })
            .collect(),
        branches: file
            .branch
            .iter()
            .map(|b| TransmissionBranch { from_bus: b.from, to_bus: b.to, r: b.r_pu, x: b.x_pu, b_shunt: b.b_pu })
            .collect(),
        generators: file
            .gen
            .iter()
            .map(|g| CentralGenerator { bus: g.bus, p_min: g.p_min_MW, p_max: g.p_max_MW, q_min: g.q_min_MVAr, q_max: g.q_max_MVAr })
            .collect(),
    })
}

pub fn parse_feeder(path: impl AsRef<Path>) -> Result<DistributionFeeder, IngestError> {
    let path = path.as_ref();
    parse_feeder_str(&read(path)?, &path.display().to_string())
}

pub fn parse_feeder_str(text: &str, origin: &str) -> Result<DistributionFeeder, IngestError> {
    let file: FeederFile = from_toml(text, origin)?;
    let boundary = file.boundary.as_ref().ok_or_else(|| IngestError::schema(origin, "missing [boundary] section"))?;
    let substation_node = boundary.substation_node.ok_or_else(|| IngestError::schema(origin, "[boundary] declares no substation_node"))?;
    let boundary_bus = boundary.transmission_bus.ok_or_else(|| IngestError::schema(origin, "[boundary] declares no transmission_bus"))?;
    if file.node.is_empty() {
        return Err(IngestError::schema(origin, "no [[node]] entries"));
    }
    let mut ids = HashSet::new();
    for n in &file.node {
        if !ids.insert(n.id) {
            return Err(IngestError::schema(origin, format!("duplicate node id {}", n.id)));
        }
    }
    if !ids.contains(&substation_node) {
        return Err(IngestError::schema(origin, format!("substation node {substation_node} is not a node")));
    }
    let check = |what: &str, k: usize, node: usize| {
        if ids.contains(&node) {
            Ok(())
        } else {
            Err(IngestError::schema(origin, format!("{what}[{k}] references unknown node {node}")))
        }
    };
    for (k, l) in file.line.iter().enumerate() {
        check("line", k, l.from)?;
        check("line", k, l.to)?;
    }
    for (k, d) in file.dg.iter().enumerate() {
        check("dg", k, d.node)?;
    }
    for (k, e) in file.ess.iter().enumerate() {
        check("ess", k, e.node)?;
    }
    for (k, p) in file.pv.iter().enumerate() {
        check("pv", k, p.node)?;
    }
    let feeder = DistributionFeeder {
        id: file.id.clone(),
        nodes: file
            .node
            .iter()
            .map(|n| FeederNode {
                id: n.id,
                p_load_total: n.p_load_MW,
                q_load_total: n.q_load_MVAr,
                p_load_critical: 0.0,
                q_load_critical: 0.0,
                v_sq_min: n.v_min_pu * n.v_min_pu,
                v_sq_max: n.v_max_pu * n.v_max_pu,
            })
            .collect(),
        lines: file.line.iter().map(|l| FeederLine { from_node: l.from, to_node: l.to, r: l.r_pu, x: l.x_pu }).collect(),
        dgs: file
            .dg
            .iter()
            .map(|d| DgDevice { node: d.node, p_min: d.p_min_MW, p_max: d.p_max_MW, q_min: d.q_min_MVAr, q_max: d.q_max_MVAr })
            .collect(),
        esss: file
            .ess
            .iter()
            .map(|e| EssDevice {
                node: e.node,
                e_surplus: e.e_surplus_MWh,
                e_max: e.e_max_MWh,
                s_max: e.s_max_MVA,
                r_eq: e.r_eq_pu,
                r_cvt: e.r_cvt_pu,
            })
            .collect(),
        pvs: file.pv.iter().map(|p| PvDevice { node: p.node, p_max: p.p_max_MW, power_factor: p.pf }).collect(),
        substation_node,
        boundary_bus,
    };
    if feeder.oriented_lines().is_none() {
        return Err(IngestError::schema(origin, "feeder lines do not form a tree rooted at the substation"));
    }
    Ok(feeder)
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<(ScenarioConfig, ProfileSeries), IngestError> {
    let path = path.as_ref();
    parse_scenario_str(&read(path)?, &path.display().to_string())
}

pub fn parse_scenario_str(text: &str, origin: &str) -> Result<(ScenarioConfig, ProfileSeries), IngestError> {
    let file: ScenarioFile = from_toml(text, origin)?;
    let d = ScenarioConfig::default();
    let s = &file.scenario;
    let config = ScenarioConfig {
        periods: s.periods.unwrap_or(d.periods),
        delta_t: s.delta_t_h.unwrap_or(d.delta_t),
        w_t: s.w_t.unwrap_or(d.w_t),
        w_d: s.w_d.unwrap_or(d.w_d),
        central_gen_penalty: s.central_gen_penalty_per_MW.unwrap_or(d.central_gen_penalty),
        critical_fraction: s.critical_fraction.unwrap_or(d.critical_fraction),
        intertie_s_max: s.intertie_s_max_MVA.unwrap_or(d.intertie_s_max),
        system_base: d.system_base,
        ramp_limit: s.ramp_limit_MW,
    };
    let load = match &file.profiles.load {
        Some(m) => m.values(origin, "load")?,
        None => DEFAULT_LOAD_PROFILE.to_vec(),
    };
    let pv = match &file.profiles.pv {
        Some(m) => m.values(origin, "pv")?,
        None => DEFAULT_PV_PROFILE.to_vec(),
    };
    for (name, values) in [("load", &load), ("pv", &pv)] {
        if values.len() != config.periods {
            return Err(IngestError::schema(
                origin,
                format!("profiles.{name} has {} entries but periods = {}", values.len(), config.periods),
            ));
        }
    }
    Ok((config, ProfileSeries { load, pv }))
}

// ---- writing ---------------------------------------------------------------

/// Serializes a physical-unit transmission network in the case schema.
pub fn write_transmission(tn: &TransmissionNetwork) -> String {
    let file = TransmissionFile {
        base: BaseRow { s_base_MVA: tn.base_mva },
        bus: tn
            .buses
            .iter()
            .map(|b| BusRow { id: b.id, p_load_MW: b.p_load_total, q_load_MVAr: b.q_load_total, v_min_pu: b.v_min, v_max_pu: b.v_max })
            .collect(),
        branch: tn.branches.iter().map(|b| BranchRow { from: b.from_bus, to: b.to_bus, r_pu: b.r, x_pu: b.x, b_pu: b.b_shunt }).collect(),
        gen: tn
            .generators
            .iter()
            .map(|g| GenRow { bus: g.bus, p_min_MW: g.p_min, p_max_MW: g.p_max, q_min_MVAr: g.q_min, q_max_MVAr: g.q_max })
            .collect(),
    };
    toml::to_string(&file).expect("transmission schema serializes")
}

pub fn write_feeder(feeder: &DistributionFeeder) -> String {
    let file = FeederFile {
        id: feeder.id.clone(),
        boundary: Some(BoundaryRow { substation_node: Some(feeder.substation_node), transmission_bus: Some(feeder.boundary_bus) }),
        node: feeder
            .nodes
            .iter()
            .map(|n| BusRow {
                id: n.id,
                p_load_MW: n.p_load_total,
                q_load_MVAr: n.q_load_total,
                v_min_pu: n.v_sq_min.sqrt(),
                v_max_pu: n.v_sq_max.sqrt(),
            })
            .collect(),
        line: feeder.lines.iter().map(|l| LineRow { from: l.from_node, to: l.to_node, r_pu: l.r, x_pu: l.x }).collect(),
        dg: feeder
            .dgs
            .iter()
            .map(|d| DgRow { node: d.node, p_min_MW: d.p_min, p_max_MW: d.p_max, q_min_MVAr: d.q_min, q_max_MVAr: d.q_max })
            .collect(),
        ess: feeder
            .esss
            .iter()
            .map(|e| EssRow {
                node: e.node,
                e_surplus_MWh: e.e_surplus,
                e_max_MWh: e.e_max,
                s_max_MVA: e.s_max,
                r_eq_pu: e.r_eq,
                r_cvt_pu: e.r_cvt,
            })
            .collect(),
        pv: feeder.pvs.iter().map(|p| PvRow { node: p.node, p_max_MW: p.p_max, pf: p.power_factor }).collect(),
    };
    toml::to_string(&file).expect("feeder schema serializes")
}

pub fn write_scenario(config: &ScenarioConfig, profile: &ProfileSeries) -> String {
    let file = ScenarioFile {
        scenario: ScenarioRow {
            periods: Some(config.periods),
            delta_t_h: Some(config.delta_t),
            w_t: Some(config.w_t),
            w_d: Some(config.w_d),
            central_gen_penalty_per_MW: Some(config.central_gen_penalty),
            critical_fraction: Some(config.critical_fraction),
            intertie_s_max_MVA: Some(config.intertie_s_max),
            ramp_limit_MW: config.ramp_limit,
        },
        profiles: ProfilesRow { load: Some(Multipliers::List(profile.load.clone())), pv: Some(Multipliers::List(profile.pv.clone())) },
    };
    toml::to_string(&file).expect("scenario schema serializes")
}

// ---- case assembly ---------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CaseFileSet {
    pub transmission_path: PathBuf,
    pub feeder_paths: Vec<PathBuf>,
    pub scenario_path: PathBuf,
}

/// Parses all files, assembles the case and validates it.
pub fn load_case(files: &CaseFileSet) -> Result<CoupledCase, IngestError> {
    let tn = parse_transmission(&files.transmission_path)?;
    let feeders = files.feeder_paths.iter().map(parse_feeder).collect::<Result<Vec<_>, _>>()?;
    let (scenario, profile) = parse_scenario(&files.scenario_path)?;
    finish(tn, feeders, scenario, profile)
}

fn finish(
    tn: TransmissionNetwork,
    feeders: Vec<DistributionFeeder>,
    scenario: ScenarioConfig,
    profile: ProfileSeries,
) -> Result<CoupledCase, IngestError> {
    let case = CoupledCase::new(tn, feeders, scenario, profile);
    let outcome = validate_case(&case);
    if outcome.is_ok() {
        Ok(case)
    } else {
        Err(IngestError::Invalid(outcome.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BundledCaseId {
    CaseStudy1,
    CaseStudy2,
}

impl BundledCaseId {
    pub const ALL: [BundledCaseId; 2] = [BundledCaseId::CaseStudy1, BundledCaseId::CaseStudy2];

    pub fn name(self) -> &'static str {
        match self {
            BundledCaseId::CaseStudy1 => "case_study_1",
            BundledCaseId::CaseStudy2 => "case_study_2",
        }
    }
}

impl fmt::Display for BundledCaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BundledCaseId {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "case_study_1" => Ok(BundledCaseId::CaseStudy1),
            "case_study_2" => Ok(BundledCaseId::CaseStudy2),
            other => Err(IngestError::UnknownBundle(other.to_string())),
        }
    }
}

/// Raw text of the bundled files, by file name.
pub mod bundled_files {
    pub const IEEE14_CASE_STUDY_1: &str = include_str!("../data/ieee14_case_study_1.toml");
    pub const IEEE14_CASE_STUDY_2: &str = include_str!("../data/ieee14_case_study_2.toml");
    pub const FEEDER_D1: &str = include_str!("../data/feeder_d1.toml");
    pub const FEEDER_D2: &str = include_str!("../data/feeder_d2.toml");
    pub const FEEDER_D3: &str = include_str!("../data/feeder_d3.toml");
    pub const SCENARIO_CASE_STUDY_1: &str = include_str!("../data/scenario_case_study_1.toml");
    pub const SCENARIO_CASE_STUDY_2: &str = include_str!("../data/scenario_case_study_2.toml");
}

pub fn load_bundled(id: BundledCaseId) -> Result<CoupledCase, IngestError> {
    use bundled_files::*;
    let (tn_text, sc_text) = match id {
        BundledCaseId::CaseStudy1 => (IEEE14_CASE_STUDY_1, SCENARIO_CASE_STUDY_1),
        BundledCaseId::CaseStudy2 => (IEEE14_CASE_STUDY_2, SCENARIO_CASE_STUDY_2),
    };
    let tn = parse_transmission_str(tn_text, "bundled transmission")?;
    let feeders = [("bundled D1", FEEDER_D1), ("bundled D2", FEEDER_D2), ("bundled D3", FEEDER_D3)]
        .iter()
        .map(|(origin, text)| parse_feeder_str(text, origin))
        .collect::<Result<Vec<_>, _>>()?;
    let (scenario, profile) = parse_scenario_str(sc_text, "bundled scenario")?;
    finish(tn, feeders, scenario, profile)
}

/// Looks a bundle up by name.
pub fn load_bundled_by_name(name: &str) -> Result<CoupledCase, IngestError> {
    load_bundled(name.parse()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = r#"
[base]
s_base_MVA = 100.0

[[bus]]
id = 1
p_load_MW = 0.0
q_load_MVAr = 0.0
v_min_pu = 0.95
v_max_pu = 1.05

[[bus]]
id = 2
p_load_MW = 50.0
q_load_MVAr = 10.0
v_min_pu = 0.95
v_max_pu = 1.05

[[branch]]
from = 1
to = 2
r_pu = 0.0
x_pu = 0.1

[[gen]]
bus = 1
p_min_MW = 0.0
p_max_MW = 100.0
q_min_MVAr = -50.0
q_max_MVAr = 50.0
"#;

    #[test]
    fn two_bus_parses() {
        let tn = parse_transmission_str(TWO_BUS, "two-bus").unwrap();
        assert_eq!(tn.buses.len(), 2);
        assert_eq!(tn.branches[0].b_shunt, 0.0);
        assert_eq!(tn.generators[0].p_max, 100.0);
    }

    #[test]
    fn empty_bus_list() {
        let err = parse_transmission_str("[base]\ns_base_MVA = 100.0\n", "empty").unwrap_err();
        assert!(matches!(err, IngestError::Schema { .. }), "{err}");
    }

    #[test]
    fn duplicate_bus() {
        let text = TWO_BUS.replace("id = 2", "id = 1");
        let err = parse_transmission_str(&text, "dup").unwrap_err();
        assert!(err.to_string().contains("duplicate bus id 1"), "{err}");
    }

    #[test]
    fn dangling_branch() {
        let text = TWO_BUS.replace("to = 2", "to = 99");
        let err = parse_transmission_str(&text, "dangling").unwrap_err();
        assert!(err.to_string().contains("unknown bus 99"), "{err}");
    }

    #[test]
    fn unknown_key_reports_position() {
        let text = TWO_BUS.replace("x_pu = 0.1", "x_pu = 0.1\ncolor = \"red\"");
        match parse_transmission_str(&text, "unknown").unwrap_err() {
            IngestError::Parse { line, message, .. } => {
                assert!(line > 20, "line {line}");
                assert!(message.contains("color"), "{message}");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn malformed_value() {
        let text = TWO_BUS.replace("r_pu = 0.0", "r_pu = \"zero\"");
        assert!(matches!(parse_transmission_str(&text, "bad").unwrap_err(), IngestError::Parse { .. }));
    }

    #[test]
    fn feeder_without_substation() {
        let text = bundled_files::FEEDER_D1.replace("substation_node = 7\n", "");
        let err = parse_feeder_str(&text, "D1").unwrap_err();
        assert!(matches!(err, IngestError::Schema { .. }), "{err}");
        assert!(err.to_string().contains("substation_node"));
    }

    #[test]
    fn scenario_defaults_and_text_profiles() {
        let (sc, prof) = parse_scenario_str("[scenario]\nw_t = 3.0\n", "s").unwrap();
        assert_eq!(sc.w_t, 3.0);
        assert_eq!(sc.periods, 6);
        assert_eq!(prof.load, DEFAULT_LOAD_PROFILE.to_vec());

        let text = "[scenario]\nperiods = 2\n[profiles]\nload = \"1.0, 0.5\"\npv = [0.0, 1.0]\n";
        let (_, prof) = parse_scenario_str(text, "s").unwrap();
        assert_eq!(prof.load, vec![1.0, 0.5]);
    }

    #[test]
    fn profile_length_mismatch() {
        let text = "[scenario]\nperiods = 3\n[profiles]\nload = [1.0, 1.0]\npv = [0.0, 0.0, 0.0]\n";
        let err = parse_scenario_str(text, "s").unwrap_err();
        assert!(matches!(err, IngestError::Schema { .. }), "{err}");
    }

    #[test]
    fn unknown_bundle() {
        assert!(matches!(load_bundled_by_name("case_study_9"), Err(IngestError::UnknownBundle(_))));
    }

    #[test]
    fn line_col_counts_from_one() {
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
        assert_eq!(line_col("ab", 0), (1, 1));
    }
}
