//! Network description: receptors, sections and links, parsed from the XML
//! dialect used by the reference configuration in `configs/colanet.xml`.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::xml::{self, Element};
use crate::error::{Error, Result};
use crate::synapse::SynapseKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub globals: Vec<f64>,
    pub receptors: Vec<ReceptorSpec>,
    pub n_copies: usize,
    pub sections: Vec<SectionSpec>,
    pub links: Vec<LinkSpec>,
    pub readout: Option<ReadoutSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReceptorSpec {
    pub name: String,
    pub n: usize,
    pub implementation: Option<Implementation>,
}

/// Opaque description of how a receptor gets its spikes; kept for
/// round-tripping, the engine itself takes spikes from the caller.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Implementation {
    pub lib: String,
    pub args_type: Option<String>,
    pub args: Vec<(String, String)>,
}

impl Implementation {
    pub fn arg(&self, key: &str) -> Option<&str> {
        self.args
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutSpec {
    pub lib: String,
    pub output: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Structure {
    pub kind: String,
    pub dimension: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionSpec {
    pub name: String,
    /// Neurons per column.
    pub n: usize,
    /// Membrane time constant in ticks.
    pub chartime: f64,
    pub structure: Option<Structure>,
    pub plasticity: Option<PlasticitySpec>,
}

/// Learning properties of a section with plastic inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlasticitySpec {
    pub weight_inc: Option<f64>,
    pub dopamine_plasticity_time: f64,
    /// Parsed and preserved; not used by the engine.
    pub max_tssisi: Option<f64>,
    /// Parsed and preserved; not used by the engine.
    pub stability_resource_change_ratio: Option<f64>,
    pub minweight: f64,
    pub maxweight: f64,
    pub three_factor_plasticity: bool,
    pub nsilentsynapses: usize,
    pub hebbian_plasticity_chartime_ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkPolicy {
    /// Dense within each column, thinned by `probability` and `maxnpre`.
    Dense,
    Aligned,
    AllToAllSections,
    Exclusive,
}

impl LinkPolicy {
    fn parse(s: Option<&str>) -> Option<Self> {
        match s {
            None => Some(LinkPolicy::Dense),
            Some("aligned") => Some(LinkPolicy::Aligned),
            Some("all-to-all-sections") => Some(LinkPolicy::AllToAllSections),
            Some("exclusive") => Some(LinkPolicy::Exclusive),
            Some(_) => None,
        }
    }

    fn attr(self) -> Option<&'static str> {
        match self {
            LinkPolicy::Dense => None,
            LinkPolicy::Aligned => Some("aligned"),
            LinkPolicy::AllToAllSections => Some("all-to-all-sections"),
            LinkPolicy::Exclusive => Some("exclusive"),
        }
    }

    /// Whether this policy pairs neurons column by column.
    pub fn is_column_aware(self) -> bool {
        matches!(self, LinkPolicy::Aligned | LinkPolicy::Exclusive)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeSpec {
    pub dist: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub from: String,
    pub to: String,
    pub policy: LinkPolicy,
    pub kind: SynapseKind,
    pub weight: Option<f64>,
    pub ini_resource: Option<RangeSpec>,
    pub delay: Option<RangeSpec>,
    pub probability: Option<f64>,
    pub maxnpre: Option<usize>,
}

/// A parsed config together with the non-fatal problems found on the way.
#[derive(Debug)]
pub struct ParsedConfig {
    pub config: NetworkConfig,
    pub warnings: Vec<String>,
}

const PLASTICITY_FIELDS: &[&str] = &[
    "weight_inc",
    "dopamine_plasticity_time",
    "maxTSSISI",
    "stability_resource_change_ratio",
    "minweight",
    "maxweight",
    "three_factor_plasticity",
    "nsilentsynapses",
    "hebbian_plasticity_chartime_ratio",
];

fn number(el: &Element) -> Result<f64> {
    let t = el.trimmed_text();
    t.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Xml {
            line: el.line,
            message: format!("<{}>: expected a number, found {t:?}", el.name),
        })
}

fn count(el: &Element) -> Result<usize> {
    let t = el.trimmed_text();
    t.parse::<usize>().map_err(|_| Error::Xml {
        line: el.line,
        message: format!(
            "<{}>: expected a non-negative integer, found {t:?}",
            el.name
        ),
    })
}

fn count_attr(el: &Element, key: &str) -> Result<Option<usize>> {
    el.attr(key)
        .map(|v| {
            v.trim().parse::<usize>().map_err(|_| Error::Xml {
                line: el.line,
                message: format!(
                    "<{} {key}>: expected a non-negative integer, found {v:?}",
                    el.name
                ),
            })
        })
        .transpose()
}

fn range(el: &Element) -> Result<RangeSpec> {
    let field = |name: &str| {
        el.child(name)
            .map(number)
            .transpose()?
            .ok_or_else(|| Error::Xml {
                line: el.line,
                message: format!("<{}> lacks <{name}>", el.name),
            })
    };
    Ok(RangeSpec {
        dist: el.attr("type").unwrap_or("uni").to_owned(),
        min: field("min")?,
        max: field("max")?,
    })
}

fn parse_receptor(el: &Element, warnings: &mut Vec<String>) -> Result<ReceptorSpec> {
    let name = el.attr("name").ok_or_else(|| Error::Xml {
        line: el.line,
        message: "<RECEPTORS> without a name".into(),
    })?;
    let n = count_attr(el, "n")?.ok_or_else(|| Error::InvalidSection {
        section: name.to_owned(),
        message: "receptor size `n` missing".into(),
    })?;
    let mut implementation = None;
    for c in &el.children {
        match c.name.as_str() {
            "Implementation" => {
                let args_el = c.child("args");
                implementation = Some(Implementation {
                    lib: c.attr("lib").unwrap_or_default().to_owned(),
                    args_type: args_el.and_then(|a| a.attr("type")).map(str::to_owned),
                    args: args_el
                        .map(|a| {
                            a.children
                                .iter()
                                .map(|x| (x.name.clone(), x.trimmed_text().to_owned()))
                                .collect()
                        })
                        .unwrap_or_default(),
                });
            }
            other => warnings.push(format!(
                "line {}: unknown element <{other}> in receptor {name}",
                c.line
            )),
        }
    }
    Ok(ReceptorSpec {
        name: name.to_owned(),
        n,
        implementation,
    })
}

fn parse_section(el: &Element, warnings: &mut Vec<String>) -> Result<SectionSpec> {
    let name = el
        .attr("name")
        .ok_or_else(|| Error::Xml {
            line: el.line,
            message: "<Section> without a name".into(),
        })?
        .to_owned();
    let props: Vec<&Element> = match el.child("props") {
        Some(p) => p.children.iter().collect(),
        None => el.children.iter().collect(),
    };
    let missing = |field: &str| Error::InvalidSection {
        section: name.clone(),
        message: format!("required field `{field}` missing"),
    };
    let find = |field: &str| props.iter().copied().find(|p| p.name == field);

    let mut n = None;
    let mut chartime = None;
    let mut structure = None;
    for p in &props {
        match p.name.as_str() {
            "n" => n = Some(count(p)?),
            "chartime" => chartime = Some(number(p)?),
            "Structure" => {
                structure = Some(Structure {
                    kind: p.attr("type").unwrap_or_default().to_owned(),
                    dimension: p.attr("dimension").unwrap_or_default().to_owned(),
                })
            }
            f if PLASTICITY_FIELDS.contains(&f) => {}
            other => warnings.push(format!(
                "line {}: unknown property <{other}> in section {name}",
                p.line
            )),
        }
    }
    let n = n.ok_or_else(|| missing("n"))?;
    let chartime = chartime.ok_or_else(|| missing("chartime"))?;

    let plasticity = if PLASTICITY_FIELDS.iter().any(|f| find(f).is_some()) {
        let opt = |f: &str| find(f).map(number).transpose();
        let req = |f: &str| opt(f)?.ok_or_else(|| missing(f));
        Some(PlasticitySpec {
            weight_inc: opt("weight_inc")?,
            dopamine_plasticity_time: req("dopamine_plasticity_time")?,
            max_tssisi: opt("maxTSSISI")?,
            stability_resource_change_ratio: opt("stability_resource_change_ratio")?,
            minweight: req("minweight")?,
            maxweight: req("maxweight")?,
            three_factor_plasticity: find("three_factor_plasticity").is_some(),
            nsilentsynapses: find("nsilentsynapses").map(count).transpose()?.unwrap_or(0),
            hebbian_plasticity_chartime_ratio: req("hebbian_plasticity_chartime_ratio")?,
        })
    } else {
        None
    };

    Ok(SectionSpec {
        name,
        n,
        chartime,
        structure,
        plasticity,
    })
}

fn parse_link(el: &Element, warnings: &mut Vec<String>) -> Result<LinkSpec> {
    let endpoint = |key: &str| {
        el.attr(key).map(str::to_owned).ok_or_else(|| Error::Xml {
            line: el.line,
            message: format!("<Link> without `{key}`"),
        })
    };
    let from = endpoint("from")?;
    let to = endpoint("to")?;
    let policy = LinkPolicy::parse(el.attr("policy")).ok_or_else(|| Error::InvalidLink {
        from: from.clone(),
        to: to.clone(),
        message: format!("unknown policy {:?}", el.attr("policy").unwrap_or_default()),
    })?;
    let kind = match el.attr("type") {
        None => SynapseKind::Fixed,
        Some("plastic") => SynapseKind::Plastic,
        Some("gating") => SynapseKind::Gating,
        Some("reward") => SynapseKind::Reward,
        Some(t) => {
            return Err(Error::InvalidLink {
                from,
                to,
                message: format!("unknown link type {t:?}"),
            })
        }
    };
    let mut link = LinkSpec {
        from,
        to,
        policy,
        kind,
        weight: None,
        ini_resource: None,
        delay: None,
        probability: None,
        maxnpre: None,
    };
    for c in &el.children {
        match c.name.as_str() {
            "weight" => link.weight = Some(number(c)?),
            "IniResource" => link.ini_resource = Some(range(c)?),
            "Delay" => link.delay = Some(range(c)?),
            "probability" => link.probability = Some(number(c)?),
            "maxnpre" => link.maxnpre = Some(count(c)?),
            other => warnings.push(format!(
                "line {}: unknown element <{other}> in link {} -> {}",
                c.line, link.from, link.to
            )),
        }
    }
    Ok(link)
}

impl NetworkConfig {
    pub fn section(&self, name: &str) -> Option<&SectionSpec> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn receptor(&self, name: &str) -> Option<&ReceptorSpec> {
        self.receptors.iter().find(|r| r.name == name)
    }

    /// The section carrying learning properties, if any.
    pub fn plastic_section(&self) -> Option<&SectionSpec> {
        self.sections.iter().find(|s| s.plasticity.is_some())
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for n in self
            .receptors
            .iter()
            .map(|r| &r.name)
            .chain(self.sections.iter().map(|s| &s.name))
        {
            if !names.insert(n.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate name {n:?}")));
            }
        }
        if self.n_copies == 0 {
            return Err(Error::InvalidConfig("ncopies must be at least 1".into()));
        }
        for r in &self.receptors {
            if r.n == 0 {
                return Err(Error::InvalidSection {
                    section: r.name.clone(),
                    message: "receptor has no nodes".into(),
                });
            }
        }
        for s in &self.sections {
            let bad = |m: &str| {
                Err(Error::InvalidSection {
                    section: s.name.clone(),
                    message: m.to_owned(),
                })
            };
            if s.n == 0 {
                return bad("n must be at least 1");
            }
            if !(s.chartime > 0.0) {
                return bad("chartime must be positive");
            }
            if let Some(p) = &s.plasticity {
                if !(p.minweight < p.maxweight) {
                    return bad("minweight must be below maxweight");
                }
                if !(p.dopamine_plasticity_time > 0.0)
                    || !(p.hebbian_plasticity_chartime_ratio > 0.0)
                {
                    return bad("plasticity time windows must be positive");
                }
            }
        }
        for l in &self.links {
            let bad = |m: String| {
                Err(Error::InvalidLink {
                    from: l.from.clone(),
                    to: l.to.clone(),
                    message: m,
                })
            };
            if !names.contains(l.from.as_str()) {
                return bad(format!("unknown source {:?}", l.from));
            }
            let Some(target) = self.section(&l.to) else {
                return bad(format!("target {:?} is not a section", l.to));
            };
            match l.kind {
                SynapseKind::Plastic => {
                    if l.ini_resource.is_none() {
                        return bad("plastic link needs <IniResource>".into());
                    }
                    if l.weight.is_some() {
                        return bad("plastic link carries a resource, not a weight".into());
                    }
                    if target.plasticity.is_none() {
                        return bad("plastic link into a section without plasticity props".into());
                    }
                }
                SynapseKind::Reward if target.plasticity.is_none() => {
                    return bad("reward link into a section without plasticity props".into());
                }
                _ if l.weight.is_none() => return bad("link needs a <weight>".into()),
                _ => {}
            }
            if l.kind == SynapseKind::Gating && l.weight.is_some_and(|w| w.round() == 0.0) {
                return bad("gating weight rounds to zero".into());
            }
            for r in l.delay.iter().chain(&l.ini_resource) {
                if r.min > r.max {
                    return bad(format!("range min {} exceeds max {}", r.min, r.max));
                }
            }
            if let Some(d) = &l.delay {
                if d.min < 0.0 {
                    return bad("negative delay".into());
                }
            }
            if let Some(p) = l.probability {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("probability {p} outside [0, 1]"));
                }
            }
        }
        if let Some(r) = &self.readout {
            if self.section(&r.output).is_none() {
                return Err(Error::InvalidConfig(format!(
                    "readout section {:?} does not exist",
                    r.output
                )));
            }
        }
        Ok(())
    }

    /// Serializes back to the XML dialect. Numbers use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_xml(&self) -> String {
        let mut o = String::from("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<SNN>\n");
        for g in &self.globals {
            let _ = writeln!(o, "  <Global>{g}</Global>");
        }
        for r in &self.receptors {
            let _ = writeln!(o, "  <RECEPTORS name=\"{}\" n=\"{}\">", esc(&r.name), r.n);
            if let Some(i) = &r.implementation {
                let _ = writeln!(o, "    <Implementation lib=\"{}\">", esc(&i.lib));
                match &i.args_type {
                    Some(t) => {
                        let _ = writeln!(o, "      <args type=\"{}\">", esc(t));
                    }
                    None => o.push_str("      <args>\n"),
                }
                for (k, v) in &i.args {
                    let _ = writeln!(o, "        <{k}>{}</{k}>", esc(v));
                }
                o.push_str("      </args>\n    </Implementation>\n");
            }
            o.push_str("  </RECEPTORS>\n");
        }
        let _ = writeln!(
            o,
            "  <NETWORK ncopies=\"{}\">\n    <Sections>",
            self.n_copies
        );
        for s in &self.sections {
            let _ = writeln!(
                o,
                "      <Section name=\"{}\">\n        <props>",
                esc(&s.name)
            );
            let _ = writeln!(o, "          <n>{}</n>", s.n);
            if let Some(st) = &s.structure {
                let _ = writeln!(
                    o,
                    "          <Structure type=\"{}\" dimension=\"{}\"></Structure>",
                    esc(&st.kind),
                    esc(&st.dimension)
                );
            }
            let _ = writeln!(o, "          <chartime>{}</chartime>", s.chartime);
            if let Some(p) = &s.plasticity {
                let mut field = |k: &str, v: Option<f64>| {
                    if let Some(v) = v {
                        let _ = writeln!(o, "          <{k}>{v}</{k}>");
                    }
                };
                field("weight_inc", p.weight_inc);
                field("dopamine_plasticity_time", Some(p.dopamine_plasticity_time));
                field("maxTSSISI", p.max_tssisi);
                field(
                    "stability_resource_change_ratio",
                    p.stability_resource_change_ratio,
                );
                field("minweight", Some(p.minweight));
                field("maxweight", Some(p.maxweight));
                if p.three_factor_plasticity {
                    o.push_str("          <three_factor_plasticity></three_factor_plasticity>\n");
                }
                let _ = writeln!(
                    o,
                    "          <nsilentsynapses>{}</nsilentsynapses>",
                    p.nsilentsynapses
                );
                let _ = writeln!(
                    o,
                    "          <hebbian_plasticity_chartime_ratio>{}</hebbian_plasticity_chartime_ratio>",
                    p.hebbian_plasticity_chartime_ratio
                );
            }
            o.push_str("        </props>\n      </Section>\n");
        }
        for l in &self.links {
            let _ = write!(
                o,
                "      <Link from=\"{}\" to=\"{}\"",
                esc(&l.from),
                esc(&l.to)
            );
            if let Some(p) = l.policy.attr() {
                let _ = write!(o, " policy=\"{p}\"");
            }
            let ty = match l.kind {
                SynapseKind::Fixed => None,
                SynapseKind::Plastic => Some("plastic"),
                SynapseKind::Gating => Some("gating"),
                SynapseKind::Reward => Some("reward"),
            };
            if let Some(t) = ty {
                let _ = write!(o, " type=\"{t}\"");
            }
            o.push_str(">\n");
            if let Some(w) = l.weight {
                let _ = writeln!(o, "        <weight>{w}</weight>");
            }
            for (tag, r) in [("IniResource", &l.ini_resource), ("Delay", &l.delay)] {
                if let Some(r) = r {
                    let _ = writeln!(
                        o,
                        "        <{tag} type=\"{}\">\n          <min>{}</min>\n          <max>{}</max>\n        </{tag}>",
                        esc(&r.dist),
                        r.min,
                        r.max
                    );
                }
            }
            if let Some(p) = l.probability {
                let _ = writeln!(o, "        <probability>{p}</probability>");
            }
            if let Some(m) = l.maxnpre {
                let _ = writeln!(o, "        <maxnpre>{m}</maxnpre>");
            }
            o.push_str("      </Link>\n");
        }
        o.push_str("    </Sections>\n  </NETWORK>\n");
        if let Some(r) = &self.readout {
            let _ = writeln!(
                o,
                "  <Readout lib=\"{}\">\n    <output>{}</output>\n  </Readout>",
                esc(&r.lib),
                esc(&r.output)
            );
        }
        o.push_str("</SNN>\n");
        o
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Parses and validates a network description.
pub fn parse_config(text: &str) -> Result<ParsedConfig> {
    let doc = xml::parse(text)?;
    let mut warnings = doc.warnings;
    let root = doc.root;
    if root.name != "SNN" {
        warnings.push(format!("root element is <{}>, expected <SNN>", root.name));
    }
    let mut cfg = NetworkConfig {
        globals: Vec::new(),
        receptors: Vec::new(),
        n_copies: 1,
        sections: Vec::new(),
        links: Vec::new(),
        readout: None,
    };
    for el in &root.children {
        match el.name.as_str() {
            "Global" => cfg.globals.push(number(el)?),
            "RECEPTORS" => cfg.receptors.push(parse_receptor(el, &mut warnings)?),
            "NETWORK" => {
                cfg.n_copies = count_attr(el, "ncopies")?.unwrap_or(1);
                for c in &el.children {
                    match c.name.as_str() {
                        "Sections" => {
                            for s in &c.children {
                                match s.name.as_str() {
                                    "Section" => {
                                        cfg.sections.push(parse_section(s, &mut warnings)?)
                                    }
                                    "Link" => cfg.links.push(parse_link(s, &mut warnings)?),
                                    other => warnings.push(format!(
                                        "line {}: unknown element <{other}> in <Sections>",
                                        s.line
                                    )),
                                }
                            }
                        }
                        "Link" => cfg.links.push(parse_link(c, &mut warnings)?),
                        other => warnings.push(format!(
                            "line {}: unknown element <{other}> in <NETWORK>",
                            c.line
                        )),
                    }
                }
            }
            "Readout" => {
                cfg.readout = Some(ReadoutSpec {
                    lib: el.attr("lib").unwrap_or_default().to_owned(),
                    output: el
                        .child("output")
                        .map(|o| o.trimmed_text().to_owned())
                        .unwrap_or_default(),
                })
            }
            other => warnings.push(format!("line {}: unknown element <{other}>", el.line)),
        }
    }
    cfg.validate()?;
    Ok(ParsedConfig {
        config: cfg,
        warnings,
    })
}
